"""Spin-chain model definitions and operator construction.

Conventions used throughout the package:

* qubit ``j`` (1-based) maps to bit ``n_qubits - j`` of the basis index,
  so qubit 1 is the most significant bit;
* ``sigma_z |0> = +|0>``, hence the local Hamiltonian
  ``H_loc = (omega/2) * sum_j sigma_z_j`` is diagonal in the computational
  basis with the all-ones state as its ground state;
* the interaction is ``H_int = (1/2) * sum_{j<k} g_jk sigma_x_j sigma_x_k``
  (XX couplings), or ``sigma_x / 2`` for the transverse single-qubit kind;
* the full Hamiltonian at coupling ``lam`` is ``H_loc + lam * H_int``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError

HARD_CAP_QUBITS = 20

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SpinChainSpec:
    """Declarative description of an all-to-all XX spin model.

    ``couplings`` is an ``(n+1, n+1)`` array addressed 1-based as
    ``couplings[j][k]`` with ``j < k``; row/column 0 and the lower triangle
    are unused and kept at zero.
    """

    n_qubits: int
    omega: float
    couplings: np.ndarray
    seed: int | None = None
    transverse: bool = False

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ConfigError("n_qubits must be at least 1")
        if not (np.isfinite(self.omega) and self.omega > 0):
            raise ConfigError("omega must be positive and finite")
        c = np.array(self.couplings, dtype=float)
        n = self.n_qubits
        if c.shape != (n + 1, n + 1):
            raise ConfigError(
                f"couplings must have shape {(n + 1, n + 1)} (1-based upper "
                f"triangle), got {c.shape}"
            )
        if not np.isfinite(c).all():
            raise ConfigError("couplings contain non-finite entries")
        if np.any(c[np.tril_indices(n + 1)] != 0.0):
            raise ConfigError("couplings must be strictly upper triangular")
        if self.transverse and n != 1:
            raise ConfigError("the transverse-field kind is a single qubit")
        if not self.transverse and n >= 2 and not np.any(c):
            warnings.warn(
                "all couplings are zero: the interaction vanishes and the "
                "engine does no work",
                stacklevel=2,
            )
        c.setflags(write=False)
        object.__setattr__(self, "couplings", c)

    def coupling_pairs(self):
        """Yield ``(j, k, g)`` for every nonzero coupling, 1-based, j < k."""
        rows, cols = np.nonzero(self.couplings)
        for j, k in zip(rows, cols):
            yield int(j), int(k), float(self.couplings[j, k])


def couplings_from_triples(n_qubits: int, triples) -> np.ndarray:
    """Build the (n+1, n+1) coupling array from ``[j, k, g]`` triples."""
    c = np.zeros((n_qubits + 1, n_qubits + 1))
    seen = set()
    for item in triples:
        try:
            j, k, g = item
        except (TypeError, ValueError):
            raise ConfigError(f"coupling entry {item!r} is not a [j, k, g] triple")
        j, k = int(j), int(k)
        if not (1 <= j < k <= n_qubits):
            raise ConfigError(
                f"coupling indices ({j}, {k}) must satisfy 1 <= j < k <= {n_qubits}"
            )
        if (j, k) in seen:
            raise ConfigError(f"duplicate coupling for pair ({j}, {k})")
        seen.add((j, k))
        c[j, k] = float(g)
    return c


def random_couplings(n_qubits: int, seed: int) -> np.ndarray:
    """Draw couplings uniform on [-1, 1) and normalize to unit l2 norm.

    The PCG64 generator makes the draw reproducible across platforms; pairs
    are filled in row-major (j, k) order.
    """
    if n_qubits < 2:
        raise ConfigError("random couplings need at least 2 qubits")
    rng = np.random.Generator(np.random.PCG64(seed))
    n_pairs = n_qubits * (n_qubits - 1) // 2
    g = rng.uniform(-1.0, 1.0, size=n_pairs)
    g /= np.linalg.norm(g)
    c = np.zeros((n_qubits + 1, n_qubits + 1))
    idx = 0
    for j in range(1, n_qubits + 1):
        for k in range(j + 1, n_qubits + 1):
            c[j, k] = g[idx]
            idx += 1
    return c


_FIXTURE_10Q = (
    (1, 2, -0.06217543), (1, 3, 0.22336509), (1, 4, 0.11497161),
    (1, 5, 0.04889319), (1, 6, -0.17047036), (1, 7, -0.17048231),
    (1, 8, -0.21900502), (1, 9, 0.18146965), (1, 10, 0.05011060),
    (2, 3, 0.10311665), (2, 4, -0.23758884), (2, 5, 0.23287803),
    (2, 6, 0.16475200), (2, 7, -0.14255905), (2, 8, -0.15768125),
    (2, 9, -0.15689846), (2, 10, -0.09701367),
    (3, 4, 0.01226880), (3, 5, -0.03372670), (3, 6, -0.10346271),
    (3, 7, 0.05543208), (3, 8, -0.17865971), (3, 9, -0.10300900),
    (3, 10, -0.06622843),
    (4, 5, -0.02177085), (4, 6, 0.14132756), (4, 7, -0.14883573),
    (4, 8, 0.00705431), (4, 9, 0.04579883), (4, 10, -0.22477020),
    (5, 6, 0.05329710), (5, 7, -0.16328173), (5, 8, -0.21555183),
    (5, 9, 0.22245879), (5, 10, 0.23075802),
    (6, 7, 0.15283562), (6, 8, -0.09682955), (6, 9, -0.19938574),
    (6, 10, 0.09130224),
    (7, 8, -0.02965924), (7, 9, -0.18731037), (7, 10, -0.00239023),
    (8, 9, -0.23074784), (8, 10, 0.20285109),
    (9, 10, -0.11954387),
)


def fixture_10q(omega: float = 1.0) -> SpinChainSpec:
    """Reference ten-qubit model with frozen, l2-normalized random couplings.

    The 45 coupling constants are pinned verbatim so that every published
    number derived from this model is reproducible bit-for-bit.
    """
    return SpinChainSpec(
        n_qubits=10,
        omega=omega,
        couplings=couplings_from_triples(10, _FIXTURE_10Q),
        seed=42,
    )


def single_qubit_x(omega: float = 1.0) -> SpinChainSpec:
    """Single qubit with a transverse drive: H = (omega/2) sz + (lam/2) sx."""
    return SpinChainSpec(
        n_qubits=1, omega=omega, couplings=np.zeros((2, 2)), transverse=True
    )


def two_qubit_pair(omega: float = 1.0, g: float = 2.0) -> SpinChainSpec:
    """Two qubits with a single XX coupling (g=2 gives H_int = sx sx)."""
    return SpinChainSpec(
        n_qubits=2, omega=omega, couplings=couplings_from_triples(2, [(1, 2, g)])
    )


@dataclass(frozen=True, eq=False)
class OperatorPair:
    """Local Hamiltonian (diagonal) and interaction (sparse) for one model.

    ``local_energies`` holds the diagonal of ``H_loc`` sorted ascending and
    ``local_order`` the permutation of basis indices that produced it, so
    ``local_energies[i] == h_loc_diag[local_order[i]]``.
    """

    dim: int
    h_loc_diag: np.ndarray
    h_int: sp.csr_matrix
    local_energies: np.ndarray = field(init=False)
    local_order: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.h_loc_diag.shape != (self.dim,):
            raise ConfigError("h_loc_diag must be a vector of length dim")
        if self.h_int.shape != (self.dim, self.dim):
            raise ConfigError("h_int must be dim x dim")
        bad = validate_interaction(self, tol=HERMITICITY_TOL)
        if bad:
            raise ConfigError(
                f"h_int violates its contract at entries {bad[:5]}"
                + ("..." if len(bad) > 5 else "")
            )
        order = np.argsort(self.h_loc_diag, kind="stable")
        object.__setattr__(self, "local_order", order)
        object.__setattr__(self, "local_energies", self.h_loc_diag[order])

    def hamiltonian(self, lam: float) -> sp.csr_matrix:
        """Sparse H(lam) = diag(h_loc) + lam * h_int."""
        h = sp.diags(self.h_loc_diag, format="csr") + lam * self.h_int
        return h.tocsr()

    def dense_hamiltonian(self, lam: float) -> np.ndarray:
        out = (lam * self.h_int).toarray()
        out[np.diag_indices(self.dim)] += self.h_loc_diag
        return out


def validate_interaction(ops: OperatorPair, tol: float = HERMITICITY_TOL) -> list:
    """Return (i, j) entries where h_int breaks Hermiticity or zero diagonal.

    An empty list means the operator is clean at tolerance ``tol``.
    """
    bad = []
    asym = (ops.h_int - ops.h_int.T.conj()).tocoo()
    for i, j, v in zip(asym.row, asym.col, asym.data):
        if abs(v) > tol:
            bad.append((int(i), int(j)))
    diag = ops.h_int.diagonal()
    for i in np.nonzero(np.abs(diag) > tol)[0]:
        bad.append((int(i), int(i)))
    return sorted(set(bad))


def build_spin_operators(spec: SpinChainSpec, hard_cap: int = HARD_CAP_QUBITS) -> OperatorPair:
    """Materialize (H_loc, H_int) for a spin specification.

    H_loc is kept as its diagonal; H_int is assembled sparsely from one
    coordinate batch per XX term (each sigma_x sigma_x flips two bits, so
    term (j, k) contributes g/2 on index pairs (i, i ^ mask_jk)).
    """
    n = spec.n_qubits
    if n > hard_cap:
        raise ConfigError(
            f"n_qubits={n} exceeds the hard cap of {hard_cap} "
            f"(dimension 2**{n} is not tractable here)"
        )
    dim = 2**n
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint32)  # qubit 1 = MSB
    bits = ((np.arange(dim, dtype=np.uint32)[:, None] >> shifts) & 1).astype(np.int8)
    z = 1 - 2 * bits.astype(np.int64)
    h_loc_diag = 0.5 * spec.omega * z.sum(axis=1).astype(float)

    if spec.transverse:
        h_int = sp.csr_matrix(
            (np.array([0.5, 0.5]), (np.array([0, 1]), np.array([1, 0]))),
            shape=(dim, dim),
        )
        return OperatorPair(dim=dim, h_loc_diag=h_loc_diag, h_int=h_int)

    rows, cols, vals = [], [], []
    idx = np.arange(dim, dtype=np.int64)
    for j, k, g in spec.coupling_pairs():
        mask = (1 << (n - j)) | (1 << (n - k))
        rows.append(idx)
        cols.append(idx ^ mask)
        vals.append(np.full(dim, 0.5 * g))
    if rows:
        h_int = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
        ).tocsr()
    else:
        h_int = sp.csr_matrix((dim, dim))
    return OperatorPair(dim=dim, h_loc_diag=h_loc_diag, h_int=h_int)


_SPIN_KEYS = {"kind", "n_qubits", "omega", "couplings"}
_QUBIT_KEYS = {"kind", "omega", "n_qubits"}


def spec_from_dict(cfg: dict) -> SpinChainSpec:
    """Build a SpinChainSpec from a parsed configuration mapping.

    Recognized kinds: ``spin_chain`` (n_qubits, omega, couplings given either
    as explicit ``[j, k, g]`` triples or as ``{"random": {"seed": s}}``) and
    ``single_qubit_x`` (omega only). Unknown keys are rejected rather than
    ignored so that typos surface immediately.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("model config must be a mapping")
    kind = cfg.get("kind")
    if kind == "single_qubit_x":
        unknown = set(cfg) - _QUBIT_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys for single_qubit_x: {sorted(unknown)}")
        if cfg.get("n_qubits", 1) != 1:
            raise ConfigError("single_qubit_x has exactly one qubit")
        return single_qubit_x(omega=float(cfg.get("omega", 1.0)))
    if kind != "spin_chain":
        raise ConfigError(
            f"unknown model kind {kind!r}; expected 'spin_chain' or 'single_qubit_x'"
        )
    unknown = set(cfg) - _SPIN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys for spin_chain: {sorted(unknown)}")
    for key in ("n_qubits", "omega", "couplings"):
        if key not in cfg:
            raise ConfigError(f"spin_chain config is missing {key!r}")
    n = int(cfg["n_qubits"])
    omega = float(cfg["omega"])
    couplings = cfg["couplings"]
    seed = None
    if isinstance(couplings, dict):
        unknown = set(couplings) - {"random"}
        if unknown:
            raise ConfigError(f"unknown coupling keys: {sorted(unknown)}")
        rand = couplings.get("random")
        if not isinstance(rand, dict) or set(rand) != {"seed"}:
            raise ConfigError('random couplings must be {"random": {"seed": <int>}}')
        seed = int(rand["seed"])
        matrix = random_couplings(n, seed)
    elif isinstance(couplings, (list, tuple)):
        matrix = couplings_from_triples(n, couplings)
    else:
        raise ConfigError("couplings must be a list of triples or a random block")
    return SpinChainSpec(n_qubits=n, omega=omega, couplings=matrix, seed=seed)


def load_spec(path) -> SpinChainSpec:
    """Load a model configuration from a JSON file."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return spec_from_dict(cfg)
