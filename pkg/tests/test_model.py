"""Operator construction: structure, determinism, config parsing."""

from __future__ import annotations

import math

import numpy as np
import pytest

from qvelab import (
    SpinChainSpec,
    build_spin_operators,
    couplings_from_triples,
    fixture_10q,
    random_couplings,
    single_qubit_x,
    two_qubit_pair,
)
from qvelab.errors import ConfigError
from qvelab.model import spec_from_dict, validate_interaction


def test_single_qubit_operators():
    # H = (omega/2) sigma_z + (lam/2) sigma_x, materialized as 2x2
    ops = build_spin_operators(single_qubit_x(omega=1.0))
    assert ops.dim == 2
    np.testing.assert_allclose(ops.h_loc_diag, [0.5, -0.5])
    np.testing.assert_allclose(ops.h_int.toarray(), [[0.0, 0.5], [0.5, 0.0]])


def test_two_qubit_operators():
    # n=2, omega=1, g_12=2: h_loc = diag(1,0,0,-1), h_int = sigma_x sigma_x
    ops = build_spin_operators(two_qubit_pair(omega=1.0, g=2.0))
    assert ops.dim == 4
    np.testing.assert_allclose(ops.h_loc_diag, [1.0, 0.0, 0.0, -1.0])
    expect = np.zeros((4, 4))
    expect[0, 3] = expect[1, 2] = expect[2, 1] = expect[3, 0] = 1.0
    np.testing.assert_allclose(ops.h_int.toarray(), expect)


def test_fixture_couplings_published_values():
    fx = fixture_10q()
    assert fx.n_qubits == 10
    assert fx.omega == 1.0
    assert fx.couplings[1][2] == -0.06217543
    assert fx.couplings[8][10] == 0.20285109
    # stated normalization convention, limited by the 8 printed decimals
    assert math.sqrt(float((fx.couplings**2).sum())) == pytest.approx(1.0, abs=1e-6)


def test_fixture_operators_dimension_and_diagonal(ops_10q):
    assert ops_10q.dim == 1024
    diag = ops_10q.h_int.diagonal()
    assert np.all(diag == 0.0)


def test_hermiticity_and_zero_diagonal(ops_10q, ops_2q):
    for ops in (ops_10q, ops_2q):
        h = ops.h_int.toarray()
        assert np.max(np.abs(h - h.T.conj())) <= 1e-12
        assert np.max(np.abs(np.diag(h))) <= 1e-12


def test_local_energies_sorted_diagonal(ops_10q):
    np.testing.assert_array_equal(ops_10q.local_energies, np.sort(ops_10q.h_loc_diag))
    assert ops_10q.local_energies[0] == ops_10q.h_loc_diag.min()


def test_random_couplings_two_qubits_is_unit():
    # a single coupling l2-normalizes to +-1
    for seed in (0, 1, 99):
        g = random_couplings(2, seed)
        assert abs(g[1][2]) == pytest.approx(1.0, abs=1e-15)


def test_random_couplings_deterministic():
    a = random_couplings(10, 12345)
    b = random_couplings(10, 12345)
    np.testing.assert_array_equal(a, b)
    c = random_couplings(10, 12346)
    assert np.any(a != c)


def test_random_couplings_normalized():
    g = random_couplings(10, 7)
    assert float((g**2).sum()) == pytest.approx(1.0, abs=1e-12)


def test_random_couplings_rejects_single_qubit():
    with pytest.raises(ConfigError):
        random_couplings(1, 0)


def test_validate_interaction_clean_for_xx_models(ops_10q, ops_2q):
    assert validate_interaction(ops_10q, tol=1e-9) == []
    assert validate_interaction(ops_2q, tol=1e-9) == []


def test_validate_interaction_reports_diagonal_entry():
    import types

    import scipy.sparse as sp

    # report-only path, exercised on a stub (the real constructor refuses
    # dirty operators outright)
    stub = types.SimpleNamespace(h_int=sp.csr_matrix(np.diag([0.0, 0.5, 0.0, 0.0])))
    assert validate_interaction(stub, tol=1e-9) == [(1, 1)]


def test_zero_couplings_warn_but_build():
    with pytest.warns(UserWarning):
        spec = SpinChainSpec(2, 1.0, np.zeros((3, 3)))
    ops = build_spin_operators(spec)
    assert ops.h_int.nnz == 0


def test_hard_cap_enforced():
    with pytest.raises(ConfigError):
        build_spin_operators(
            SpinChainSpec(5, 1.0, couplings_from_triples(5, [[1, 2, 1.0]])), hard_cap=4
        )


def test_couplings_from_triples_round_trip():
    g = couplings_from_triples(3, [[1, 2, 0.5], [2, 3, -0.25]])
    assert g[1][2] == 0.5
    assert g[2][3] == -0.25
    assert g[1][3] == 0.0
    with pytest.raises(ConfigError):
        couplings_from_triples(3, [[2, 1, 0.5]])  # j < k required
    with pytest.raises(ConfigError):
        couplings_from_triples(3, [[1, 2, 0.5], [1, 2, 0.1]])  # duplicate


def test_spec_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        spec_from_dict(
            {"kind": "spin_chain", "n_qubits": 2, "omega": 1.0, "couplings": [[1, 2, 1.0]], "bogus": 1}
        )


def test_spec_from_dict_random_block():
    spec = spec_from_dict(
        {"kind": "spin_chain", "n_qubits": 4, "omega": 2.0, "couplings": {"random": {"seed": 11}}}
    )
    assert spec.seed == 11
    np.testing.assert_array_equal(spec.couplings, random_couplings(4, 11))


def test_spec_from_dict_single_qubit_kind():
    spec = spec_from_dict({"kind": "single_qubit_x", "omega": 1.0})
    assert spec.transverse
    ops = build_spin_operators(spec)
    assert ops.dim == 2
