"""Shared model fixtures.

The 10-qubit fixture costs a dense 1024x1024 solve per lambda, so anything
reusable across test modules is built once per session here.
"""

from __future__ import annotations

import pytest

from qvelab import build_spin_operators, fixture_10q, single_qubit_x, two_qubit_pair


@pytest.fixture(scope="session")
def ops_1q():
    return build_spin_operators(single_qubit_x(omega=1.0))


@pytest.fixture(scope="session")
def ops_2q():
    return build_spin_operators(two_qubit_pair(omega=1.0))


@pytest.fixture(scope="session")
def ops_10q():
    return build_spin_operators(fixture_10q())
