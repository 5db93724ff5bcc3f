"""Engine thermodynamics derived from the bending function.

For a cycle powered by local projective measurement and closed by thermal
reset, every observable is a functional of Delta(lam):

* quantum heat       Q = lam * Delta'
* extracted work     W = lam * Delta' - Delta
* efficiency         eta = W / Q = 1 - Delta / (lam * Delta'),
  with eta -> 1/2 in the weak-coupling limit
* work fluctuations  sigma^2 = (1/2) lam^2 Delta'' ebar, where ebar is the
  coupling-weighted harmonic mean of the excitation energies
* Fisher information I = 4 sum_n c_n^2 / e_n^2, which bounds both the work
  noise (sigma^2 >= (lam Delta'')^2 / I) and coupling estimation
  (Var[lam] * I >= 1)

The direct fluctuation route (ground-state variance of H_loc) and the
geometric route (through Delta'' and ebar) are kept separate everywhere so
they can vouch for each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.optimize
import scipy.sparse.linalg

from . import eigensolve, qvbf
from .errors import (
    BracketError,
    DegenerateGroundError,
    RouteMismatchError,
    SpectrumSizeError,
)
from .model import OperatorPair

ROUTE_RTOL = 1e-9
BOUND_TOL = 1e-9

CSV_COLUMNS = (
    "lambda",
    "delta",
    "d1",
    "d2",
    "work",
    "heat",
    "efficiency",
    "sigma2",
    "ebar",
    "e_min",
    "e_max",
    "qfi",
    "sigma_q",
    "valid",
    "notes",
)

QUANTITIES = ("delta", "d1", "d2", "work", "heat", "efficiency",
              "sigma2", "ebar", "e_min", "e_max", "qfi", "sigma_q")

_SPECTRAL_QUANTITIES = {"ebar", "e_min", "e_max", "qfi", "sigma_q"}


@dataclass(frozen=True, eq=False)
class ThermoPoint:
    """All engine observables at one coupling.

    Fields that a given model or size regime cannot provide are ``None``
    (e.g. spectral sums above the dense cap, or the spectral ceiling
    ``e_max`` for oscillator models with unbounded local spectra); ``notes``
    records why. ``valid`` is False when a consistency check failed, never
    silently.
    """

    lam: float
    delta: float | None = None
    d1: float | None = None
    d2: float | None = None
    work: float | None = None
    heat: float | None = None
    efficiency: float | None = None
    sigma2: float | None = None
    ebar: float | None = None
    e_min: float | None = None
    e_max: float | None = None
    qfi: float | None = None
    sigma_q: float | None = None
    valid: bool = True
    notes: tuple = ()


def work(lam: float, delta: float, d1: float) -> float:
    """Extracted work W = lam * Delta' - Delta (nonnegative by convexity)."""
    return lam * d1 - delta + 0.0


def heat(lam: float, d1: float) -> float:
    """Quantum heat injected by the measurement, Q = lam * Delta'."""
    return lam * d1


def efficiency(lam: float, delta: float, d1: float, *, limit_at_zero: bool = False):
    """eta = 1 - Delta / (lam * Delta'); None at lam = 0 unless the caller
    explicitly asks for the analytic limit 1/2."""
    if lam == 0:
        return 0.5 if limit_at_zero else None
    q = heat(lam, d1)
    if q == 0:
        return None
    return 1.0 - delta / q


def fluctuations_direct(
    ground: eigensolve.GroundSolution, ops: OperatorPair, *, rtol: float = ROUTE_RTOL
) -> float:
    """Work variance from the ground state, by two independent routes.

    Route A is the variance of H_loc in |0(lam)>; route B is lam^2 times the
    variance of H_int, equal by the eigenvalue relation
    (H_loc + lam H_int)|0> = E_0|0>. Disagreement beyond ``rtol`` raises; it
    would mean the eigenpair is polluted.
    """
    v = ground.vector
    diag = ops.h_loc_diag
    m1 = float(diag @ (v * v))
    m2 = float((diag * diag) @ (v * v))
    var_loc = m2 - m1 * m1
    w = ops.h_int @ v
    i1 = float(v @ w)
    i2 = float(w @ w)
    var_int = ground.lam**2 * (i2 - i1 * i1)
    scale = max(abs(var_loc), abs(var_int))
    # each route subtracts nearly equal squares, so roundoff is set by the
    # magnitudes before cancellation, not by the variances themselves
    floor = 64.0 * np.finfo(float).eps * (abs(m2) + ground.lam**2 * abs(i2))
    if scale > 0 and abs(var_loc - var_int) > rtol * scale + floor:
        raise RouteMismatchError(
            f"fluctuation routes disagree at lam={ground.lam}: "
            f"local {var_loc!r} vs scaled-interaction {var_int!r}"
        )
    return var_loc


@dataclass(frozen=True, eq=False)
class EbarStats:
    """Harmonic-mean excitation energy and the accessible-window edges."""

    value: float
    e_min: float
    e_max: float
    c2: np.ndarray
    e: np.ndarray


def _default_c_tol(h_int) -> float:
    return 1e-12 * scipy.sparse.linalg.norm(h_int) ** 2


def ebar(spectrum: eigensolve.SpectralData, h_int, *, c_tol: float | None = None) -> EbarStats:
    """Coupling-weighted harmonic mean of excitation energies.

    1/ebar = sum_n (c_n^2 / e_n) / sum_n c_n^2 over all excited states;
    states the interaction does not reach carry zero weight, so no cut is
    needed for the ratio. The min/max accessible excitation energies use
    ``c_tol`` (default 1e-12 * ||H_int||_F^2) to decide reachability.
    """
    c2, e = qvbf.excitation_couplings(spectrum, h_int)
    if c_tol is None:
        c_tol = _default_c_tol(h_int)
    mask = c2 > c_tol
    if not np.any(mask):
        raise DegenerateGroundError(
            "the interaction does not couple the ground state to any excited "
            "state; ebar is undefined"
        )
    value = float(np.sum(c2) / np.sum(c2 / e))
    ea = e[mask]
    return EbarStats(
        value=value,
        e_min=float(ea.min()),
        e_max=float(ea.max()),
        c2=c2,
        e=e,
    )


def fluctuations_geometric(lam: float, d2: float, ebar_value: float) -> float:
    """sigma^2 = (1/2) lam^2 Delta'' ebar (geometric route)."""
    return 0.5 * lam**2 * d2 * ebar_value


def qfi(spectrum: eigensolve.SpectralData, h_int) -> float:
    """Quantum Fisher information of |0(lam)> for estimating lam.

    I = 4 sum_n c_n^2 / e_n^2; first-order perturbation theory of the ground
    state makes this exact for the coupling dial considered here.
    """
    c2, e = qvbf.excitation_couplings(spectrum, h_int)
    return 4.0 * float(np.sum(c2 / e**2))


def sigma_q(qfi_value: float, d1: float, d2: float):
    """Quantum-kinetic TUR coefficient Sigma_Q = 2 I (Delta'/Delta'')^2.

    Undefined (None) when d1 = 0: the engine moves no heat there and the
    uncertainty bound it feeds is vacuous.
    """
    if d1 == 0 or d2 == 0:
        return None
    return 2.0 * qfi_value * (d1 / d2) ** 2


@dataclass(frozen=True)
class BoundCheck:
    name: str
    checked: bool
    satisfied: bool
    margin: float
    note: str = ""


@dataclass(frozen=True, eq=False)
class BoundReport:
    lam: float
    checks: tuple

    @property
    def all_ok(self) -> bool:
        return all(c.satisfied for c in self.checks if c.checked)

    def failures(self):
        return [c for c in self.checks if c.checked and not c.satisfied]


def check_bounds(point: ThermoPoint, *, tol: float = BOUND_TOL) -> BoundReport:
    """Evaluate the fluctuation and estimation bounds at one point.

    Checks, each reported with its raw margin (negative = violated beyond
    ``tol``):

    * spectral sandwich: (1/2) lam^2 D'' e_min <= sigma^2 and, when e_max
      exists, sigma^2 <= (1/2) lam^2 D'' e_max;
    * thermodynamic uncertainty: sigma^2/W^2 >= sigma^2/Q^2 >= 2/Sigma_Q;
    * variance-information inequality: sigma^2 >= (lam D'')^2 / I;
    * estimation floor: Var[lam] * I >= 1 with Var[lam] = sigma^2/(lam D'')^2.

    A check passes when its margin is above -tol scaled by the magnitude of
    the quantities compared, so saturated bounds are not misflagged by
    roundoff whether the two sides are of order one or of order 1e6.
    Bounds whose ingredients are unavailable are marked unchecked with a
    note rather than assumed to hold.
    """
    if point.lam == 0:
        raise ValueError("bounds are vacuous at lam=0 (the engine is inactive)")
    lam, s2, d2 = point.lam, point.sigma2, point.d2
    checks = []

    def add(name, lhs=None, rhs=None, skip=""):
        # bound is lhs >= rhs; margin reported raw
        if skip:
            checks.append(BoundCheck(name, False, True, np.nan, skip))
        else:
            margin = lhs - rhs
            scaled = tol * max(1.0, abs(lhs), abs(rhs))
            checks.append(BoundCheck(name, True, bool(margin >= -scaled), float(margin)))

    if None in (s2, d2) or point.e_min is None:
        add("sandwich_lower", skip="needs sigma2, d2 and e_min")
    else:
        add("sandwich_lower", s2, 0.5 * lam**2 * d2 * point.e_min)
    if None in (s2, d2):
        add("sandwich_upper", skip="needs sigma2 and d2")
    elif point.e_max is None:
        add("sandwich_upper", skip="no spectral ceiling (unbounded local spectrum)")
    else:
        add("sandwich_upper", 0.5 * lam**2 * d2 * point.e_max, s2)
    if None in (s2, point.work, point.heat) or point.work <= 0 or point.heat <= 0:
        add("tur_work_vs_heat", skip="needs sigma2 and positive work and heat")
    else:
        add("tur_work_vs_heat", s2 / point.work**2, s2 / point.heat**2)
    if None in (s2, point.heat, point.sigma_q) or point.heat <= 0 or point.sigma_q <= 0:
        add("tur_heat", skip="needs sigma2, positive heat and Sigma_Q")
    else:
        add("tur_heat", s2 / point.heat**2, 2.0 / point.sigma_q)
    if None in (s2, d2, point.qfi) or point.qfi <= 0:
        add("variance_information", skip="needs sigma2, d2 and positive QFI")
    else:
        add("variance_information", s2, (lam * d2) ** 2 / point.qfi)
    if None in (s2, d2, point.qfi) or d2 == 0 or point.qfi <= 0:
        add("estimation_floor", skip="needs sigma2, nonzero d2 and positive QFI")
    else:
        add("estimation_floor", s2 * point.qfi / (lam * d2) ** 2, 1.0)
    return BoundReport(lam=point.lam, checks=tuple(checks))


def critical_coupling(source, bracket, *, xtol: float = 1e-8) -> float:
    """Coupling where the differential work W'' = Delta'' + lam Delta'''
    changes sign, located by bisection on the given bracket."""
    lo, hi = float(bracket[0]), float(bracket[1])

    def wpp(x):
        return source.d2(x) + x * source.d3(x)

    try:
        root = scipy.optimize.bisect(wpp, lo, hi, xtol=xtol)
    except ValueError as exc:
        raise BracketError(
            f"no sign change of W'' on [{lo:.6g}, {hi:.6g}]"
        ) from exc
    return float(root)


@dataclass(frozen=True)
class WeakExpansion:
    """Leading weak-coupling coefficients: W ~ work_coeff * lam^2,
    eta ~ 1/2 + eta_slope * lam, sigma^2 ~ sigma2_coeff * lam^2."""

    work_coeff: float
    eta_slope: float
    sigma2_coeff: float


def weak_expansion(ops: OperatorPair) -> WeakExpansion:
    """Exact weak-coupling coefficients from the local eigenbasis.

    At lam=0 the eigenbasis is the computational basis, so second- and
    third-order perturbation theory collapse to sums over one column of
    H_int; no diagonalization is involved.
    """
    i0 = int(ops.local_order[0])
    e = ops.h_loc_diag - ops.h_loc_diag[i0]
    if np.count_nonzero(np.abs(e) < 1e-12) > 1:
        raise DegenerateGroundError("local ground state is degenerate at lam=0")
    a = np.asarray(ops.h_int[:, [i0]].todense()).ravel().astype(float)
    a[i0] = 0.0
    sigma2_coeff = float(a @ a)
    if sigma2_coeff == 0:
        raise DegenerateGroundError(
            "the interaction does not couple the local ground state"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.where(np.abs(e) > 0, a / np.where(e == 0, 1.0, e), 0.0)
    d2_0 = 2.0 * float(a @ b)
    d3_0 = -6.0 * float(b @ (ops.h_int @ b))
    return WeakExpansion(
        work_coeff=0.5 * d2_0,
        eta_slope=d3_0 / (12.0 * d2_0),
        sigma2_coeff=sigma2_coeff,
    )


def work_integral(source, lam: float, *, epsrel: float = 1e-9) -> float:
    """W(lam) recovered as the integral of x * Delta''(x) from 0 to lam.

    Adaptive quadrature over the curvature route of ``source``; this is the
    geometric consistency check that the pointwise work formula integrates
    the same physics the curvature encodes.
    """
    value, _ = scipy.integrate.quad(
        lambda x: x * source.d2(x), 0.0, lam, epsabs=1e-12, epsrel=epsrel, limit=200
    )
    return float(value)


def evaluate_point(
    ops: OperatorPair,
    lam: float,
    *,
    dense_cap: int = eigensolve.DENSE_CAP,
    method: str = "auto",
    seed: int = eigensolve.LANCZOS_SEED,
    degeneracy_tol: float | None = None,
    route_rtol: float = ROUTE_RTOL,
    c_tol: float | None = None,
    bound_tol: float = BOUND_TOL,
    eta_limit_at_zero: bool = False,
    quantities=None,
) -> ThermoPoint:
    """Full engine observable set at one coupling.

    ``quantities`` restricts the computed set (names from ``QUANTITIES``);
    requesting no spectral-sum quantity skips the full diagonalization and
    keeps the evaluation ground-state-only. Above ``dense_cap`` the spectral
    sums are reported as ``None`` with an explanatory note, and the
    curvature falls back to finite differences of the Hellmann-Feynman
    slope.

    Internal consistency failures (degenerate ground state, fluctuation
    route mismatch) mark the point ``valid=False`` with a note instead of
    raising, so sweeps degrade per-row; solver failures still raise.
    """
    if quantities is None:
        needs = set(QUANTITIES)
    else:
        needs = set(quantities)
        unknown = needs - set(QUANTITIES)
        if unknown:
            raise ValueError(f"unknown quantities requested: {sorted(unknown)}")
    notes = []
    valid = True

    ground = eigensolve.ground_state(
        ops, lam, dense_cap=dense_cap, method=method,
        degeneracy_tol=degeneracy_tol, seed=seed,
    )
    if ground.degenerate:
        valid = False
        notes.append("degenerate ground state at this coupling")
    delta_val = 0.0 if lam == 0 else float(ops.local_energies[0]) - ground.energy
    d1 = qvbf.hellmann_feynman_d1(ground, ops)
    w = work(lam, delta_val, d1)
    q = heat(lam, d1)
    eta = efficiency(lam, delta_val, d1, limit_at_zero=eta_limit_at_zero)
    if eta is None:
        notes.append("efficiency undefined at lam=0 (its weak-coupling limit is 1/2)")

    sigma2_val = None
    if "sigma2" in needs:
        try:
            sigma2_val = fluctuations_direct(ground, ops, rtol=route_rtol)
        except RouteMismatchError as exc:
            valid = False
            notes.append(str(exc))

    d2 = ebar_val = e_min = e_max = qfi_val = sq = None
    want_spectral = bool(needs & _SPECTRAL_QUANTITIES)
    want_d2 = "d2" in needs or "sigma_q" in needs
    if want_spectral or want_d2:
        if ops.dim <= dense_cap:
            try:
                spectrum = eigensolve.full_spectrum(ops, lam, dense_cap=dense_cap)
                sos = delta_second_sos_checked(spectrum, ops, degeneracy_tol)
                d2 = sos.value
                if want_spectral:
                    stats = ebar(spectrum, ops.h_int, c_tol=c_tol)
                    ebar_val, e_min, e_max = stats.value, stats.e_min, stats.e_max
                    qfi_val = 4.0 * float(np.sum(sos.c2 / sos.e**2))
                    sq = sigma_q(qfi_val, d1, d2)
                    if sigma2_val is not None:
                        geo = fluctuations_geometric(lam, d2, ebar_val)
                        scale = max(abs(sigma2_val), abs(geo))
                        v = ground.vector
                        m2loc = float((ops.h_loc_diag**2) @ (v * v))
                        floor = 64.0 * np.finfo(float).eps * m2loc
                        if scale > 0 and abs(sigma2_val - geo) > 1e-8 * scale + floor:
                            valid = False
                            notes.append(
                                f"geometric fluctuation route disagrees: "
                                f"{geo!r} vs {sigma2_val!r}"
                            )
            except DegenerateGroundError as exc:
                valid = False
                notes.append(str(exc))
        else:
            if want_spectral:
                notes.append(
                    f"spectral sums unavailable beyond the dense cap "
                    f"(dim={ops.dim} > {dense_cap})"
                )
            if want_d2:
                src = OperatorSourceLite(ops, dense_cap, method, seed, degeneracy_tol)
                d2 = qvbf.derivatives_fd(src.d1, lam, 1).value
                notes.append("d2 from finite differences of the ground-state slope")

    return ThermoPoint(
        lam=float(lam),
        delta=delta_val if "delta" in needs else None,
        d1=d1 if "d1" in needs else None,
        d2=d2,
        work=w if "work" in needs else None,
        heat=q if "heat" in needs else None,
        efficiency=eta if "efficiency" in needs else None,
        sigma2=sigma2_val,
        ebar=ebar_val,
        e_min=e_min,
        e_max=e_max,
        qfi=qfi_val,
        sigma_q=sq,
        valid=valid,
        notes=tuple(notes),
    )


def delta_second_sos_checked(spectrum, ops, degeneracy_tol):
    return qvbf.delta_second_sos(spectrum, ops.h_int, degeneracy_tol=degeneracy_tol)


class OperatorSourceLite:
    """Ground-state-only slope evaluations for the large-dimension fallback."""

    def __init__(self, ops, dense_cap, method, seed, degeneracy_tol):
        self.ops = ops
        self.kw = dict(
            dense_cap=dense_cap, method=method, seed=seed, degeneracy_tol=degeneracy_tol
        )
        self.span = None

    def d1(self, lam):
        return qvbf.delta_prime_hf(self.ops, lam, **self.kw)
