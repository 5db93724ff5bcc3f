"""Closed-form reference models and the special functions they need.

Every model here provides the bending function and enough derived structure
to fill a full observable row without touching a matrix, which is what makes
them usable as oracles for the numeric pipeline:

* ``single_qubit`` / ``two_qubits`` - one accessible excited state, every
  quantity elementary;
* ``single_oscillator`` - linearly displaced oscillator, eta = 1/2 for all
  couplings;
* ``two_osc_fixed_g`` / ``two_osc_direct`` - two coupled oscillators (the
  first dials an existing fixed-g coupling, the second dials the spring
  itself and goes unstable at |lam| = k);
* ``tfim_finite`` / ``tfim_limit`` - transverse-field Ising ring via free
  fermions, as finite momentum sums and as the elliptic-integral limit;
* ``osc_chain_finite`` / ``osc_chain_limit`` - open harmonic chain with
  modulated springs, finite mode sums and elliptic-integral limit.

Momentum sums for the Ising ring run over the antiperiodic grid
p = (2m+1) pi / N, which is the fermion-parity sector containing the ground
state; exact diagonalization at small N confirms the choice (see tests).
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from . import qvbf, thermo
from .errors import ConfigError, ModelDomainError, TableDomainError
from .thermo import ThermoPoint

TFIM_FALLBACK_WINDOW = 1e-6  # |lam - omega| < window * omega: quadrature path


def ellint_e(m: float) -> float:
    """Complete elliptic integral of the second kind, parameter convention.

    E(m) = integral_0^{pi/2} sqrt(1 - m sin^2 t) dt, computed by the
    arithmetic-geometric mean for 0 <= m < 1 and extended to m < 0 through
    the imaginary-modulus transformation E(m) = sqrt(1-m) E(m/(m-1)).
    Accurate to machine precision; m > 1 is outside the real domain.
    """
    if not np.isfinite(m):
        raise ModelDomainError("elliptic parameter must be finite")
    if m > 1.0:
        raise ModelDomainError(f"elliptic parameter m={m} exceeds 1")
    if m == 1.0:
        return 1.0
    if m < 0.0:
        return math.sqrt(1.0 - m) * ellint_e(m / (m - 1.0))
    eps = np.finfo(float).eps
    a, b = 1.0, math.sqrt(1.0 - m)
    s = 0.5 * m
    weight = 1.0  # 2**(n-1) at iteration n = 1
    for _ in range(64):
        c = 0.5 * (a - b)
        # c stalls at the rounding floor instead of reaching zero; stopping
        # there keeps the geometrically weighted tail out of the sum
        if c <= 4.0 * eps * a:
            break
        s += weight * c * c
        weight *= 2.0
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    big_k = math.pi / (2.0 * a)
    return big_k * (1.0 - s)


KINDS = (
    "single_qubit",
    "two_qubits",
    "single_oscillator",
    "two_osc_fixed_g",
    "two_osc_direct",
    "tfim_finite",
    "tfim_limit",
    "osc_chain_finite",
    "osc_chain_limit",
)

_KIND_PARAMS = {
    "single_qubit": ("omega",),
    "two_qubits": ("omega",),
    "single_oscillator": ("omega",),
    "two_osc_fixed_g": ("k0", "g"),
    "two_osc_direct": ("k",),
    "tfim_finite": ("n_sites", "omega"),
    "tfim_limit": ("n_sites", "omega"),
    "osc_chain_finite": ("n_sites", "k0"),
    "osc_chain_limit": ("n_sites", "k0"),
}


@dataclass(frozen=True, eq=False)
class ClosedFormModel:
    kind: str
    params: dict

    def __post_init__(self):
        if self.kind not in _KIND_PARAMS:
            raise ConfigError(f"unknown closed-form kind {self.kind!r}")
        required = set(_KIND_PARAMS[self.kind])
        given = set(self.params)
        if given != required:
            raise ConfigError(
                f"{self.kind} takes parameters {sorted(required)}, got {sorted(given)}"
            )
        p = self.params
        for name in ("omega", "k0", "k", "g"):
            if name in p and not (np.isfinite(p[name]) and p[name] > 0):
                raise ConfigError(f"{self.kind}: {name} must be positive")
        if "n_sites" in p:
            n = p["n_sites"]
            if int(n) != n or n < 2:
                raise ConfigError(f"{self.kind}: n_sites must be an integer >= 2")
            if self.kind == "tfim_finite" and n % 2:
                raise ConfigError(
                    "tfim_finite: n_sites must be even (the antiperiodic momentum "
                    "grid pairs p with -p)"
                )

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"ClosedFormModel({self.kind}, {args})"


def closed_form(kind: str, **params) -> ClosedFormModel:
    return ClosedFormModel(kind=kind, params=params)


# --- exact per-kind structure -------------------------------------------
#
# Each builder returns a dict of callables of lam. Missing keys mean the
# model does not provide that quantity in closed form (limit kinds fall back
# to finite differences for derivatives and omit spectral sums).


def _single_qubit_forms(omega):
    def r(lam):
        return math.hypot(omega, lam)

    return {
        "delta": lambda lam: 0.5 * (r(lam) - omega),
        "d1": lambda lam: 0.5 * lam / r(lam),
        "d2": lambda lam: 0.5 * omega**2 / r(lam) ** 3,
        "d3": lambda lam: -1.5 * lam * omega**2 / r(lam) ** 5,
        "sigma2": lambda lam: 0.25 * lam**2 * omega**2 / r(lam) ** 2,
        "ebar": lambda lam: r(lam),
        "e_min": lambda lam: r(lam),
        "e_max": lambda lam: r(lam),
        "qfi": lambda lam: omega**2 / r(lam) ** 4,
    }


def _two_qubits_forms(omega):
    def r(lam):
        return math.hypot(omega, lam)

    return {
        "delta": lambda lam: r(lam) - omega,
        "d1": lambda lam: lam / r(lam),
        "d2": lambda lam: omega**2 / r(lam) ** 3,
        "d3": lambda lam: -3.0 * lam * omega**2 / r(lam) ** 5,
        "sigma2": lambda lam: lam**2 * omega**2 / r(lam) ** 2,
        "ebar": lambda lam: 2.0 * r(lam),
        "e_min": lambda lam: 2.0 * r(lam),
        "e_max": lambda lam: 2.0 * r(lam),
        "qfi": lambda lam: omega**2 / r(lam) ** 4,
    }


def two_qubit_ground_angle(omega: float, lam: float) -> float:
    """Mixing angle of the two-qubit ground state.

    |0(lam)> = cos(phi/2)|11> - sin(phi/2)|00> with phi = atan2(lam, omega);
    the excited-outcome probability in a local measurement is sin^2(phi/2).
    """
    return math.atan2(lam, omega)


def _single_oscillator_forms(omega):
    return {
        "delta": lambda lam: 0.5 * lam**2 / omega**2,
        "d1": lambda lam: lam / omega**2,
        "d2": lambda lam: 1.0 / omega**2,
        "d3": lambda lam: 0.0,
        "sigma2": lambda lam: 0.5 * lam**2 / omega,
        "ebar": lambda lam: omega,
        "e_min": lambda lam: omega,
        # one phonon is the only accessible state, but the local spectrum
        # is unbounded: no spectral ceiling is reported
        "qfi": lambda lam: 2.0 / omega**3,
    }


def _two_osc_fixed_g_forms(k0, g):
    omega0 = math.sqrt(k0 + g)

    def wp(lam):
        return math.sqrt(k0 + g * (1.0 - lam))

    def wm(lam):
        return math.sqrt(k0 + g * (1.0 + lam))

    return {
        "delta": lambda lam: omega0 - 0.5 * (wp(lam) + wm(lam)),
        "d1": lambda lam: 0.25 * g * (1.0 / wp(lam) - 1.0 / wm(lam)),
        "d2": lambda lam: (g**2 / 8.0) * (wp(lam) ** -3 + wm(lam) ** -3),
        "d3": lambda lam: (3.0 * g**3 / 16.0) * (wp(lam) ** -5 - wm(lam) ** -5),
        "sigma2": lambda lam: lam**2 * g**2 * omega0**2 / (4.0 * wp(lam) ** 2 * wm(lam) ** 2),
        "ebar": lambda lam: 2.0
        * (wp(lam) ** -2 + wm(lam) ** -2)
        / (wp(lam) ** -3 + wm(lam) ** -3),
        "e_min": lambda lam: 2.0 * min(wp(lam), wm(lam)),
        "qfi": lambda lam: (g**2 / 8.0) * (wp(lam) ** -4 + wm(lam) ** -4),
        "domain": (k0 + g) / g,
    }


def _two_osc_direct_forms(k):
    def wp(lam):
        return math.sqrt(k + lam)

    def wm(lam):
        return math.sqrt(k - lam)

    return {
        "delta": lambda lam: math.sqrt(k) - 0.5 * (wp(lam) + wm(lam)),
        "d1": lambda lam: 0.25 * (1.0 / wm(lam) - 1.0 / wp(lam)),
        "d2": lambda lam: 0.125 * (wp(lam) ** -3 + wm(lam) ** -3),
        "d3": lambda lam: (3.0 / 16.0) * (wm(lam) ** -5 - wp(lam) ** -5),
        "sigma2": lambda lam: lam**2 * k / (4.0 * (k**2 - lam**2)),
        "ebar": lambda lam: 2.0
        * (wp(lam) ** -2 + wm(lam) ** -2)
        / (wp(lam) ** -3 + wm(lam) ** -3),
        "e_min": lambda lam: 2.0 * math.sqrt(k - abs(lam)),
        "qfi": lambda lam: 0.125 * (wp(lam) ** -4 + wm(lam) ** -4),
        "domain": k,
    }


TfimSums = namedtuple("TfimSums", "delta d1 d2 ebar sigma2")


def _tfim_grid(n_sites, omega, lam):
    p = (2.0 * np.arange(n_sites) + 1.0) * np.pi / n_sites
    big = np.sqrt(omega**2 + lam**2 + 2.0 * omega * lam * np.cos(p))
    return p, big


def tfim_momentum_sum(n_sites: int, omega: float, lam: float) -> TfimSums:
    """Finite antiperiodic momentum sums for the Ising ring.

    Sums over the full grid of N momenta; each physical (p, -p) excitation
    pair is counted twice, which the 1/2 prefactors absorb.
    """
    p, big = _tfim_grid(n_sites, omega, lam)
    s2 = np.sin(p) ** 2
    delta = 0.5 * (float(np.sum(big)) - n_sites * omega)
    d1 = 0.5 * float(np.sum((lam + omega * np.cos(p)) / big))
    d2 = 0.5 * omega**2 * float(np.sum(s2 / big**3))
    ebar = 2.0 * float(np.sum(s2 / big**2)) / float(np.sum(s2 / big**3))
    sigma2 = 0.5 * lam**2 * omega**2 * float(np.sum(s2 / big**2))
    return TfimSums(delta=delta, d1=d1, d2=d2, ebar=ebar, sigma2=sigma2)


def _tfim_finite_forms(n_sites, omega):
    def sums(lam):
        return tfim_momentum_sum(n_sites, omega, lam)

    def d3(lam):
        p, big = _tfim_grid(n_sites, omega, lam)
        s2 = np.sin(p) ** 2
        return -1.5 * omega**2 * float(np.sum(s2 * (lam + omega * np.cos(p)) / big**5))

    def qfi(lam):
        p, big = _tfim_grid(n_sites, omega, lam)
        return 0.5 * omega**2 * float(np.sum(np.sin(p) ** 2 / big**4))

    def edge(lam, which):
        p, big = _tfim_grid(n_sites, omega, lam)
        accessible = big[np.abs(np.sin(p)) > 1e-15]
        return 2.0 * float(which(accessible))

    return {
        "delta": lambda lam: sums(lam).delta,
        "d1": lambda lam: sums(lam).d1,
        "d2": lambda lam: sums(lam).d2,
        "d3": d3,
        "sigma2": lambda lam: sums(lam).sigma2,
        "ebar": lambda lam: sums(lam).ebar,
        "e_min": lambda lam: edge(lam, np.min),
        "e_max": lambda lam: edge(lam, np.max),
        "qfi": qfi,
    }


TfimLimit = namedtuple("TfimLimit", "delta sigma2")


def tfim_limit(n_sites: int, omega: float, lam: float) -> TfimLimit:
    """Thermodynamic-limit Ising ring: elliptic-integral bending function.

    Delta = (N/pi) |lam - omega| E(-4 lam omega / (lam - omega)^2) - N omega/2.
    The elliptic parameter degenerates as lam -> omega, so within a relative
    window of 1e-6 the momentum integral is evaluated by adaptive quadrature
    instead. sigma^2/N = min(lam, omega)^2 / 2, continuous at lam = omega.
    """
    if abs(lam - omega) < TFIM_FALLBACK_WINDOW * omega:
        integral, _ = scipy.integrate.quad(
            lambda x: math.sqrt(omega**2 + lam**2 + 2.0 * omega * lam * math.cos(x)),
            -math.pi,
            math.pi,
            epsabs=1e-13,
            epsrel=1e-12,
        )
        delta = n_sites * integral / (4.0 * math.pi) - 0.5 * n_sites * omega
    else:
        m = -4.0 * lam * omega / (lam - omega) ** 2
        delta = (n_sites / math.pi) * abs(lam - omega) * ellint_e(m) - 0.5 * n_sites * omega
    sigma2 = 0.5 * n_sites * min(abs(lam), omega) ** 2
    return TfimLimit(delta=delta, sigma2=sigma2)


def _tfim_limit_forms(n_sites, omega):
    return {
        "delta": lambda lam: tfim_limit(n_sites, omega, lam).delta,
        "sigma2": lambda lam: tfim_limit(n_sites, omega, lam).sigma2,
        "e_min": lambda lam: 2.0 * abs(omega - abs(lam)),
        "e_max": lambda lam: 2.0 * (omega + abs(lam)),
        "note": lambda lam: (
            ("delta from quadrature (elliptic parameter degenerate near lam=omega)",)
            if abs(lam - omega) < TFIM_FALLBACK_WINDOW * omega
            else ()
        ),
    }


ChainSums = namedtuple("ChainSums", "delta sigma2")
ChainLimit = namedtuple("ChainLimit", "delta sigma2 singular")


def _chain_grid(n_sites, k0, lam):
    theta = np.arange(1, n_sites + 1) * np.pi / (n_sites + 1)
    cos = np.cos(theta)
    k = 2.0 * k0 * (1.0 - lam * cos)
    return cos, k


def osc_chain_finite(n_sites: int, k0: float, lam: float) -> ChainSums:
    """Open harmonic chain, finite mode sums.

    sigma^2 uses the mode-trace form (k0/4) sum_j (2 k0 / k_j - 1), which
    equals lam^2 sum_j c_j^2 because the mode cosines sum to zero.
    """
    cos, k = _chain_grid(n_sites, k0, lam)
    if np.any(k <= 0):
        raise ModelDomainError(
            f"chain unstable at lam={lam}: a mode spring constant went nonpositive"
        )
    delta = 0.5 * float(np.sum(math.sqrt(2.0 * k0) - np.sqrt(k)))
    sigma2 = 0.25 * k0 * float(np.sum(2.0 * k0 / k - 1.0))
    return ChainSums(delta=delta, sigma2=sigma2)


def _osc_chain_finite_forms(n_sites, k0):
    def parts(lam):
        cos, k = _chain_grid(n_sites, k0, lam)
        if np.any(k <= 0):
            raise ModelDomainError(f"chain unstable at lam={lam}")
        return cos, k

    def d1(lam):
        cos, k = parts(lam)
        return 0.5 * k0 * float(np.sum(cos / np.sqrt(k)))

    def d2(lam):
        cos, k = parts(lam)
        return 0.5 * k0**2 * float(np.sum(cos**2 / k**1.5))

    def d3(lam):
        cos, k = parts(lam)
        return 1.5 * k0**3 * float(np.sum(cos**3 / k**2.5))

    def ebar(lam):
        cos, k = parts(lam)
        c2 = k0**2 * cos**2 / (2.0 * k)
        e = 2.0 * np.sqrt(k)
        return float(np.sum(c2) / np.sum(c2 / e))

    def e_min(lam):
        cos, k = parts(lam)
        return 2.0 * math.sqrt(float(np.min(k[np.abs(cos) > 1e-15])))

    def qfi(lam):
        cos, k = parts(lam)
        return 0.5 * k0**2 * float(np.sum(cos**2 / k**2))

    return {
        "delta": lambda lam: osc_chain_finite(n_sites, k0, lam).delta,
        "d1": d1,
        "d2": d2,
        "d3": d3,
        "sigma2": lambda lam: osc_chain_finite(n_sites, k0, lam).sigma2,
        "ebar": ebar,
        "e_min": e_min,
        "qfi": qfi,
        "domain": 1.0 / math.cos(math.pi / (n_sites + 1)),
    }


def osc_chain_limit(n_sites: int, k0: float, lam: float) -> ChainLimit:
    """Thermodynamic-limit open chain; flags the |lam| = 1 singularity.

    Delta = N sqrt(k0/2) (1 - (2 sqrt(1+lam)/pi) E(2 lam/(1+lam))).
    The fluctuation density (k0/4)(1/sqrt(1-lam^2) - 1) diverges at
    |lam| = 1 while Delta stays finite; ``singular`` marks that edge.
    """
    if abs(lam) > 1.0:
        raise ModelDomainError(f"chain limit defined for |lam| <= 1, got {lam}")
    singular = abs(abs(lam) - 1.0) < 1e-12
    delta = n_sites * math.sqrt(0.5 * k0) * (
        1.0 - (2.0 * math.sqrt(1.0 + lam) / math.pi) * ellint_e(2.0 * lam / (1.0 + lam))
    )
    if singular:
        sigma2 = math.inf
    else:
        sigma2 = 0.25 * k0 * n_sites * (1.0 / math.sqrt(1.0 - lam**2) - 1.0)
    return ChainLimit(delta=delta, sigma2=sigma2, singular=singular)


def _osc_chain_limit_forms(n_sites, k0):
    return {
        "delta": lambda lam: osc_chain_limit(n_sites, k0, lam).delta,
        "sigma2": lambda lam: osc_chain_limit(n_sites, k0, lam).sigma2,
        "e_min": lambda lam: 2.0 * math.sqrt(2.0 * k0 * (1.0 - abs(lam))),
        "span": (-1.0, 1.0),
        "note": lambda lam: (
            ("fluctuations diverge logarithmically in the spectrum at |lam|=1",)
            if osc_chain_limit(n_sites, k0, lam).singular
            else ()
        ),
    }


_FORM_BUILDERS = {
    "single_qubit": lambda p: _single_qubit_forms(p["omega"]),
    "two_qubits": lambda p: _two_qubits_forms(p["omega"]),
    "single_oscillator": lambda p: _single_oscillator_forms(p["omega"]),
    "two_osc_fixed_g": lambda p: _two_osc_fixed_g_forms(p["k0"], p["g"]),
    "two_osc_direct": lambda p: _two_osc_direct_forms(p["k"]),
    "tfim_finite": lambda p: _tfim_finite_forms(p["n_sites"], p["omega"]),
    "tfim_limit": lambda p: _tfim_limit_forms(p["n_sites"], p["omega"]),
    "osc_chain_finite": lambda p: _osc_chain_finite_forms(p["n_sites"], p["k0"]),
    "osc_chain_limit": lambda p: _osc_chain_limit_forms(p["n_sites"], p["k0"]),
}


def _forms(model: ClosedFormModel) -> dict:
    return _FORM_BUILDERS[model.kind](model.params)


def _check_domain(forms, model, lam):
    bound = forms.get("domain")
    if bound is not None and abs(lam) >= bound:
        raise ModelDomainError(
            f"{model.kind} is stable only for |lam| < {bound:.6g}, got lam={lam}"
        )
    span = forms.get("span")
    if span is not None and not (span[0] <= lam <= span[1]):
        raise ModelDomainError(
            f"{model.kind} is defined on [{span[0]}, {span[1]}], got lam={lam}"
        )


class ClosedFormSource:
    """Bending-function source view of a closed-form model.

    Derivatives the model does not provide analytically come from central
    finite differences of its exact Delta, tagged as such.
    """

    def __init__(self, model: ClosedFormModel):
        self.model = model
        self._f = _forms(model)
        bound = self._f.get("domain")
        if bound is not None:
            self.span = (-bound, bound)
        else:
            self.span = self._f.get("span")

    def _check(self, lam):
        _check_domain(self._f, self.model, lam)

    def delta(self, lam: float) -> float:
        self._check(lam)
        return float(self._f["delta"](lam))

    def _deriv(self, lam, name, order):
        self._check(lam)
        fn = self._f.get(name)
        if fn is not None:
            return float(fn(lam))
        return qvbf.derivatives_fd(self, lam, order).value

    def d1(self, lam: float) -> float:
        return self._deriv(lam, "d1", 1)

    def d2(self, lam: float) -> float:
        return self._deriv(lam, "d2", 2)

    def d3(self, lam: float) -> float:
        return self._deriv(lam, "d3", 3)

    def point(self, lam: float) -> qvbf.QvbfPoint:
        tags = {
            key: ("closed_form" if key in self._f else "finite_difference")
            for key in ("delta", "d1", "d2", "d3")
        }
        return qvbf.QvbfPoint(
            lam=float(lam),
            delta=self.delta(lam),
            d1=self.d1(lam),
            d2=self.d2(lam),
            d3=self.d3(lam),
            methods=tags,
        )


def eval_model(
    model: ClosedFormModel, lam: float, *, eta_limit_at_zero: bool = False
) -> ThermoPoint:
    """Full observable row for a closed-form model at one coupling.

    Quantities the model cannot provide (spectral sums in the thermodynamic
    limit, the spectral ceiling for oscillators) stay ``None`` with a note;
    derivative fallbacks near a domain edge that the finite-difference
    stencil cannot straddle are also reported as ``None`` rather than
    extrapolated.
    """
    forms = _forms(model)
    _check_domain(forms, model, lam)
    source = ClosedFormSource(model)
    notes = list(forms.get("note", lambda _lam: ())(lam))

    delta_val = source.delta(lam)
    try:
        d1 = source.d1(lam)
        d2 = source.d2(lam)
    except (ModelDomainError, TableDomainError):
        notes.append("derivatives unavailable at the domain edge")
        d1 = d2 = None
    if d1 is not None:
        w = thermo.work(lam, delta_val, d1)
        q = thermo.heat(lam, d1)
        eta = thermo.efficiency(lam, delta_val, d1, limit_at_zero=eta_limit_at_zero)
        if eta is None and lam == 0:
            notes.append("efficiency undefined at lam=0 (its weak-coupling limit is 1/2)")
    else:
        w = q = eta = None

    def opt(name):
        fn = forms.get(name)
        return None if fn is None else float(fn(lam))

    sigma2 = opt("sigma2")
    ebar_val = opt("ebar")
    e_min = opt("e_min")
    e_max = opt("e_max")
    qfi_val = opt("qfi")
    if e_max is None and model.kind not in ("tfim_finite", "tfim_limit"):
        notes.append("no spectral ceiling (unbounded local spectrum)")
    if ebar_val is None and model.kind in ("tfim_limit", "osc_chain_limit"):
        notes.append("spectral sums not carried to the thermodynamic limit")
    sq = None
    if qfi_val is not None and d1 is not None and d2 is not None:
        sq = thermo.sigma_q(qfi_val, d1, d2)
    return ThermoPoint(
        lam=float(lam),
        delta=delta_val,
        d1=d1,
        d2=d2,
        work=w,
        heat=q,
        efficiency=eta,
        sigma2=sigma2,
        ebar=ebar_val,
        e_min=e_min,
        e_max=e_max,
        qfi=qfi_val,
        sigma_q=sq,
        valid=True,
        notes=tuple(notes),
    )
