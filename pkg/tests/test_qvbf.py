"""Bending function Delta and its derivative routes checking each other."""

from __future__ import annotations

import math

import numpy as np
import pytest

from qvelab import (
    OperatorSource,
    TableSource,
    closed_form,
    delta_prime_hf,
    derivatives_fd,
    full_spectrum,
    ground_state,
)
from qvelab.closedform import ClosedFormSource
from qvelab.errors import ConfigError, TableDomainError
from qvelab.qvbf import delta, delta_second_sos


def test_delta_two_qubit_value(ops_2q):
    src = OperatorSource(ops_2q)
    assert delta(src, 1.0) == pytest.approx(math.sqrt(2) - 1, abs=1e-12)
    assert delta(src, 0.0) == 0.0


def test_delta_single_oscillator():
    src = ClosedFormSource(closed_form("single_oscillator", omega=1.0))
    assert delta(src, 0.8) == pytest.approx(0.32, abs=1e-14)


def test_delta_prime_hf_two_qubit(ops_2q):
    g1 = ground_state(ops_2q, 1.0)
    from qvelab.qvbf import hellmann_feynman_d1

    assert hellmann_feynman_d1(g1, ops_2q) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert delta_prime_hf(ops_2q, 0.0) == 0.0


def test_delta_prime_hf_matches_fd_on_fixture(ops_10q):
    src = OperatorSource(ops_10q)
    hf = delta_prime_hf(ops_10q, 0.5)
    fd = derivatives_fd(src, 0.5, 1)
    assert abs(hf - fd.value) / abs(hf) <= 1e-6


def test_delta_second_sos_two_qubit(ops_2q):
    spec = full_spectrum(ops_2q, 1.0)
    sos = delta_second_sos(spec, ops_2q.h_int)
    assert sos.value == pytest.approx(2 ** (-1.5), abs=1e-12)
    assert sos.value >= 0.0


def test_delta_second_sos_single_qubit_origin(ops_1q):
    spec = full_spectrum(ops_1q, 0.0)
    sos = delta_second_sos(spec, ops_1q.h_int)
    assert sos.value == pytest.approx(0.5, abs=1e-12)


def test_fd_order2_matches_closed_forms():
    # single qubit: Delta = (sqrt(1+lam^2) - 1)/2, so d2(1) = 2^{-5/2};
    # two qubits drop the 1/2 and give 2^{-3/2}
    one = ClosedFormSource(closed_form("single_qubit", omega=1.0))
    assert derivatives_fd(one, 1.0, 2).value == pytest.approx(2 ** (-2.5), abs=1e-7)
    two = ClosedFormSource(closed_form("two_qubits", omega=1.0))
    assert derivatives_fd(two, 1.0, 2).value == pytest.approx(2 ** (-1.5), abs=1e-7)


def test_fd_order2_quadratic_table():
    lams = np.linspace(-2.0, 2.0, 81)
    src = TableSource(lams, lams**2)
    est = derivatives_fd(src, 0.3, 2)
    assert est.value == pytest.approx(2.0, abs=1e-6)


def test_fd_order3_vanishes_at_origin_for_even_delta(ops_2q):
    src = OperatorSource(ops_2q)
    est = derivatives_fd(src, 0.0, 3)
    assert abs(est.value) <= 1e-5


def test_positivity_and_slope_sign(ops_2q):
    src = OperatorSource(ops_2q)
    for lam in (-2.0, -0.7, 0.4, 1.3, 3.0):
        d = delta(src, lam)
        assert d > 0.0
        assert math.copysign(1.0, src.d1(lam)) == math.copysign(1.0, lam)


def test_convexity_on_grid(ops_10q):
    src = OperatorSource(ops_10q)
    for lam in (0.25, 1.0, 3.0):
        assert src.d2(lam) >= -1e-9


def test_sos_vs_fd_curvature(ops_10q):
    sos = OperatorSource(ops_10q, d2_route="sos")
    fd = OperatorSource(ops_10q, d2_route="fd")
    a = sos.d2(1.0)
    b = fd.d2(1.0)
    assert abs(a - b) / abs(a) <= 1e-5


def test_quadratic_origin(ops_2q):
    # Delta(lam)/lam^2 -> Delta''(0)/2 = 1/2 for this model
    src = OperatorSource(ops_2q)
    for lam in (1e-3, 1e-4):
        assert delta(src, lam) / lam**2 == pytest.approx(0.5, abs=1e-6)


def test_point_tags_and_zero(ops_2q):
    src = OperatorSource(ops_2q)
    pt = src.point(0.0)
    assert pt.delta == 0.0
    assert pt.methods["d1"] == "hellmann_feynman"
    assert pt.methods["d2"] == "sum_over_states"
    assert pt.methods["d3"] == "finite_difference"
    again = src.point(0.0)
    assert again.delta == pt.delta and again.d2 == pt.d2


def test_table_rejects_bad_grids():
    with pytest.raises(ConfigError):
        TableSource([0, 1, 2], [0, 1, 4])  # too few points
    with pytest.raises(ConfigError):
        TableSource([0, 1, 1, 2, 3], [0, 1, 1, 4, 9])  # not strictly increasing


def test_table_span_enforced():
    lams = np.linspace(0.0, 2.0, 21)
    src = TableSource(lams, lams**2)
    with pytest.raises(TableDomainError):
        src.delta(2.5)
    with pytest.raises(TableDomainError):
        derivatives_fd(src, 2.0, 2)  # stencil crosses the boundary


def test_table_from_file_with_comments(tmp_path):
    path = tmp_path / "delta.dat"
    lams = np.linspace(-1.0, 1.0, 11)
    lines = ["# lam  delta"]
    lines += [f"{x:.6f} {x*x:.6f}" for x in lams]
    path.write_text("\n".join(lines) + "\n")
    src = TableSource.from_file(path)
    assert src.delta(0.5) == pytest.approx(0.25, abs=1e-9)
