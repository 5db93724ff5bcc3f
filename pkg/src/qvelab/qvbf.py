"""The vacuum bending function and its derivatives.

The bending function Delta(lam) = E_0(0) - E_0(lam) measures how far the
interacting ground state is pushed below the bare one. Everything the engine
analysis needs is encoded in Delta and its first three derivatives, so this
module provides them through interchangeable sources:

* ``OperatorSource`` - exact diagonalization of an ``OperatorPair``, with
  Delta' from the Hellmann-Feynman identity and Delta'' from the
  sum-over-states formula when the full spectrum is affordable;
* ``TableSource`` - cubic-spline interpolation of a tabulated (lam, Delta);
* ``ClosedFormSource`` (in :mod:`qvelab.closedform`) - analytic models.

``derivatives_fd`` is the route-independent cross-check: central finite
differences with one level of Richardson extrapolation, applicable to any
source or plain callable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import eigensolve
from .errors import ConfigError, DegenerateGroundError, TableDomainError
from .model import OperatorPair

FD_H0_LOW = 1e-3  # base step for orders 1 and 2
FD_H0_THIRD = 1e-2  # base step for order 3

_MIN_TABLE_POINTS = 5


@dataclass(frozen=True, eq=False)
class QvbfPoint:
    """Delta and derivatives at one coupling, tagged by computation route."""

    lam: float
    delta: float
    d1: float
    d2: float | None = None
    d3: float | None = None
    methods: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FdEstimate:
    """Finite-difference value with its Richardson error estimate."""

    value: float
    error: float
    step: float


@dataclass(frozen=True, eq=False)
class SosCurvature:
    """Sum-over-states curvature with its ingredients.

    ``c2[n]`` are squared interaction matrix elements |<n|H_int|0>|^2 and
    ``e[n]`` the excitation energies E_n - E_0, both over excited states in
    ascending energy order.
    """

    value: float
    c2: np.ndarray
    e: np.ndarray


def delta(source, lam: float) -> float:
    """Bending function of ``source`` at coupling ``lam``."""
    return source.delta(lam)


def delta_prime_hf(ops: OperatorPair, lam: float, **solver_kw) -> float:
    """Delta'(lam) = -<0(lam)| H_int |0(lam)> (Hellmann-Feynman)."""
    ground = eigensolve.ground_state(ops, lam, **solver_kw)
    return hellmann_feynman_d1(ground, ops)


def hellmann_feynman_d1(ground: eigensolve.GroundSolution, ops: OperatorPair) -> float:
    v = ground.vector
    # + 0.0 normalizes a signed zero when the expectation vanishes exactly
    return -float(v @ (ops.h_int @ v)) + 0.0


def excitation_couplings(spectrum: eigensolve.SpectralData, h_int, *, degeneracy_tol=None):
    """(c2, e) arrays over excited states for spectral sums.

    Raises DegenerateGroundError when the first excitation energy is below
    the degeneracy tolerance: the sums are not defined in that case.
    """
    energies = spectrum.energies
    e = energies[1:] - energies[0]
    tol = (
        eigensolve.default_degeneracy_tol(float(energies[0]))
        if degeneracy_tol is None
        else degeneracy_tol
    )
    if e.size == 0 or e[0] < tol:
        raise DegenerateGroundError(
            f"ground state degenerate at lam={spectrum.lam}: spectral sums undefined"
        )
    amps = spectrum.states[:, 1:].T @ (h_int @ spectrum.states[:, 0])
    c2 = np.abs(amps) ** 2
    return c2, e


def delta_second_sos(spectrum: eigensolve.SpectralData, h_int, *, degeneracy_tol=None) -> SosCurvature:
    """Delta''(lam) = 2 sum_n |<n|H_int|0>|^2 / (E_n - E_0).

    Every term is nonnegative, which is the spectral origin of the bending
    function's convexity.
    """
    c2, e = excitation_couplings(spectrum, h_int, degeneracy_tol=degeneracy_tol)
    return SosCurvature(value=2.0 * float(np.sum(c2 / e)), c2=c2, e=e)


_STENCILS = {
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
}


def _apply_stencil(f, lam, h, order):
    acc = 0.0
    for offset, weight in _STENCILS[order]:
        acc += weight * f(lam + offset * h)
    return acc / h**order


def derivatives_fd(
    source, lam: float, order: int, *, h0: float | None = None, richardson: bool = True
) -> FdEstimate:
    """Central finite-difference derivative of a source's bending function.

    ``source`` may be any object with ``delta``/``span`` attributes or a bare
    callable. The step is ``h0 * max(1, |lam|)``; one Richardson level
    combines D(h) and D(h/2) and yields the error estimate |D(h/2)-D(h)|/3.
    Bounded sources (tables) must span the whole stencil.
    """
    if order not in (1, 2, 3):
        raise ValueError("derivative order must be 1, 2 or 3")
    f = source.delta if hasattr(source, "delta") else source
    if h0 is None:
        h0 = FD_H0_THIRD if order == 3 else FD_H0_LOW
    h = h0 * max(1.0, abs(lam))
    reach = 2 * h if order == 3 else h
    span = getattr(source, "span", None)
    if span is not None:
        lo, hi = span
        if lam - reach < lo or lam + reach > hi:
            raise TableDomainError(
                f"stencil [{lam - reach:.6g}, {lam + reach:.6g}] exceeds the "
                f"source span [{lo:.6g}, {hi:.6g}]"
            )
    coarse = _apply_stencil(f, lam, h, order)
    if not richardson:
        return FdEstimate(value=coarse, error=np.nan, step=h)
    fine = _apply_stencil(f, lam, h / 2, order)
    # central stencils have O(h^2) error, so one 4:1 Richardson level applies
    value = (4.0 * fine - coarse) / 3.0
    return FdEstimate(value=value, error=abs(fine - coarse) / 3.0, step=h)


class OperatorSource:
    """Bending-function source backed by exact diagonalization.

    Ground solutions are cached per coupling; full spectra go through a
    small LRU cache because each one holds a dim x dim eigenbasis.

    ``d2_route`` selects the curvature route: ``auto`` uses the
    sum-over-states formula whenever the dense spectrum is affordable and
    falls back to differentiating the Hellmann-Feynman slope otherwise;
    ``sos`` and ``fd`` force one route (``fd`` never needs more than the
    ground state, which matters both above the dense cap and inside
    quadratures where full spectra would be wasteful).
    """

    def __init__(
        self,
        ops: OperatorPair,
        *,
        dense_cap: int = eigensolve.DENSE_CAP,
        method: str = "auto",
        seed: int = eigensolve.LANCZOS_SEED,
        degeneracy_tol: float | None = None,
        d2_route: str = "auto",
        spectrum_cache: int = 4,
    ):
        if d2_route not in ("auto", "sos", "fd"):
            raise ValueError(f"unknown d2_route {d2_route!r}")
        self.ops = ops
        self.dense_cap = dense_cap
        self.method = method
        self.seed = seed
        self.degeneracy_tol = degeneracy_tol
        self.d2_route = d2_route
        self.span = None
        self._ground_cache: dict[float, eigensolve.GroundSolution] = {}
        self._spectrum_cache: dict[float, eigensolve.SpectralData] = {}
        self._spectrum_cache_size = spectrum_cache
        self._e00 = float(ops.local_energies[0])

    def ground(self, lam: float) -> eigensolve.GroundSolution:
        lam = float(lam)
        hit = self._ground_cache.get(lam)
        if hit is None:
            hit = eigensolve.ground_state(
                self.ops,
                lam,
                dense_cap=self.dense_cap,
                method=self.method,
                seed=self.seed,
                degeneracy_tol=self.degeneracy_tol,
            )
            self._ground_cache[lam] = hit
        return hit

    def spectrum(self, lam: float) -> eigensolve.SpectralData:
        lam = float(lam)
        hit = self._spectrum_cache.get(lam)
        if hit is None:
            hit = eigensolve.full_spectrum(self.ops, lam, dense_cap=self.dense_cap)
            if len(self._spectrum_cache) >= self._spectrum_cache_size:
                self._spectrum_cache.pop(next(iter(self._spectrum_cache)))
            self._spectrum_cache[lam] = hit
        return hit

    def delta(self, lam: float) -> float:
        if lam == 0:
            return 0.0
        return self._e00 - self.ground(lam).energy

    def d1(self, lam: float) -> float:
        return hellmann_feynman_d1(self.ground(lam), self.ops)

    def _sos_available(self) -> bool:
        return self.ops.dim <= self.dense_cap

    def d2(self, lam: float) -> float:
        route = self.d2_route
        if route == "auto":
            route = "sos" if self._sos_available() else "fd"
        if route == "sos":
            sos = delta_second_sos(
                self.spectrum(lam), self.ops.h_int, degeneracy_tol=self.degeneracy_tol
            )
            return sos.value
        return derivatives_fd(self.d1, lam, 1).value

    def d3(self, lam: float) -> float:
        if self.d2_route != "fd" and self._sos_available():
            return derivatives_fd(self.d2, lam, 1).value
        return derivatives_fd(self.delta, lam, 3).value

    def point(self, lam: float) -> QvbfPoint:
        sos = self._sos_available() and self.d2_route != "fd"
        return QvbfPoint(
            lam=float(lam),
            delta=self.delta(lam),
            d1=self.d1(lam),
            d2=self.d2(lam),
            d3=self.d3(lam),
            methods={
                "delta": "ground_solve",
                "d1": "hellmann_feynman",
                "d2": "sum_over_states" if sos else "finite_difference",
                "d3": "finite_difference",
            },
        )


class TableSource:
    """Bending-function source interpolated from a (lam, Delta) table.

    A not-a-knot cubic spline reproduces polynomial tables up to cubics
    exactly, which keeps finite-difference derivatives of smooth tables
    honest; queries outside the tabulated span raise instead of
    extrapolating.
    """

    def __init__(self, lams, deltas):
        lams = np.asarray(lams, dtype=float)
        deltas = np.asarray(deltas, dtype=float)
        if lams.ndim != 1 or lams.shape != deltas.shape:
            raise ConfigError("table must be two columns of equal length")
        if lams.size < _MIN_TABLE_POINTS:
            raise ConfigError(f"table needs at least {_MIN_TABLE_POINTS} points")
        if not (np.isfinite(lams).all() and np.isfinite(deltas).all()):
            raise ConfigError("table contains non-finite entries")
        if np.any(np.diff(lams) <= 0):
            raise ConfigError("table grid must be strictly increasing in lam")
        self.lams = lams
        self.deltas = deltas
        self.span = (float(lams[0]), float(lams[-1]))
        self._spline = CubicSpline(lams, deltas)

    @classmethod
    def from_file(cls, path) -> "TableSource":
        """Load a two-column text table; '#' starts a comment."""
        try:
            data = np.loadtxt(path, comments="#", ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read table {path}: {exc}") from exc
        if data.shape[1] != 2:
            raise ConfigError(f"table {path} must have exactly two columns")
        return cls(data[:, 0], data[:, 1])

    def _check(self, lam: float):
        lo, hi = self.span
        if lam < lo or lam > hi:
            raise TableDomainError(f"lam={lam:.6g} outside table span [{lo:.6g}, {hi:.6g}]")

    def delta(self, lam: float) -> float:
        self._check(lam)
        return float(self._spline(lam))

    def d1(self, lam: float) -> float:
        self._check(lam)
        return float(self._spline(lam, 1))

    def d2(self, lam: float) -> float:
        self._check(lam)
        return float(self._spline(lam, 2))

    def d3(self, lam: float) -> float:
        self._check(lam)
        return float(self._spline(lam, 3))

    def point(self, lam: float) -> QvbfPoint:
        return QvbfPoint(
            lam=float(lam),
            delta=self.delta(lam),
            d1=self.d1(lam),
            d2=self.d2(lam),
            d3=self.d3(lam),
            methods={k: "table_spline" for k in ("delta", "d1", "d2", "d3")},
        )
