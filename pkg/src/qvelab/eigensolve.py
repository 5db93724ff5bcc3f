"""Ground-state and full-spectrum solvers with a fixed gauge convention.

Small problems (dimension up to ``dense_cap``) go through dense Hermitian
diagonalization; larger ones through a seeded Lanczos iteration that is
checked a posteriori against a residual tolerance. Both paths return the
eigenvector in the same gauge: the component of largest magnitude is made
real and positive, ties broken by lowest index, so downstream overlap-based
quantities are reproducible across solvers and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from .errors import SolverError, SpectrumSizeError
from .model import OperatorPair

DENSE_CAP = 4096
RESIDUAL_TOL = 1e-10
ORTHONORMALITY_TOL = 1e-10
LANCZOS_SEED = 7


def default_degeneracy_tol(energy: float) -> float:
    """Gap threshold below which the ground state is flagged degenerate."""
    return 1e-8 * max(1.0, abs(energy))


@dataclass(frozen=True, eq=False)
class GroundSolution:
    """Ground state at one coupling value."""

    lam: float
    energy: float
    vector: np.ndarray
    gap: float
    degenerate: bool
    method: str
    residual: float


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Full spectrum at one coupling value, eigenvectors gauge-fixed."""

    lam: float
    energies: np.ndarray
    states: np.ndarray


def gauge_fix(vec: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the largest-magnitude component is >= 0.

    Idempotent; ties in magnitude are broken by lowest index (argmax picks
    the first maximum).
    """
    i = int(np.argmax(np.abs(vec)))
    pivot = vec[i]
    if pivot == 0:
        return vec
    if np.iscomplexobj(vec):
        out = vec * (np.conj(pivot) / abs(pivot))
        # the rotation leaves roundoff dust on the pivot's imaginary part;
        # pin it to the exact modulus so a second pass is a true no-op
        out[i] = abs(pivot)
        return out
    return -vec if pivot < 0 else vec


def _check_finite(ops: OperatorPair):
    if not np.isfinite(ops.h_loc_diag).all() or not np.isfinite(ops.h_int.data).all():
        raise SolverError("operator entries are not finite")


def ground_state(
    ops: OperatorPair,
    lam: float,
    *,
    dense_cap: int = DENSE_CAP,
    method: str = "auto",
    degeneracy_tol: float | None = None,
    seed: int = LANCZOS_SEED,
    residual_tol: float = RESIDUAL_TOL,
) -> GroundSolution:
    """Lowest eigenpair of H(lam) plus the gap to the first excited state.

    ``method`` is ``auto`` (dense below ``dense_cap``, Lanczos above),
    ``dense``, or ``lanczos``; the explicit values exist so the two solvers
    can be cross-checked on the same problem. The Lanczos start vector is
    drawn from a seeded generator, making the iteration deterministic.
    """
    _check_finite(ops)
    dim = ops.dim
    if method == "auto":
        method = "dense" if dim <= dense_cap else "lanczos"
    if method not in ("dense", "lanczos"):
        raise ValueError(f"unknown method {method!r}")

    if dim == 1:
        e0 = float(ops.h_loc_diag[0] + lam * ops.h_int[0, 0])
        return GroundSolution(lam, e0, np.ones(1), np.inf, False, "dense", 0.0)

    if method == "dense":
        hd = ops.dense_hamiltonian(lam)
        vals, vecs = scipy.linalg.eigh(hd, subset_by_index=(0, 1))
        e0, e1 = float(vals[0]), float(vals[1])
        vec = vecs[:, 0]
    else:
        h = ops.hamiltonian(lam)
        v0 = np.random.Generator(np.random.PCG64(seed)).standard_normal(dim)
        try:
            vals, vecs = sp.linalg.eigsh(h, k=2, which="SA", v0=v0, tol=0)
        except sp.linalg.ArpackNoConvergence as exc:
            raise SolverError(f"Lanczos failed to converge at lam={lam}: {exc}") from exc
        order = np.argsort(vals)
        e0, e1 = float(vals[order[0]]), float(vals[order[1]])
        vec = vecs[:, order[0]]

    vec = np.ascontiguousarray(vec, dtype=float)
    residual = float(np.linalg.norm(ops.hamiltonian(lam) @ vec - e0 * vec))
    if residual > residual_tol * max(1.0, abs(e0)):
        raise SolverError(
            f"eigenpair residual {residual:.3e} exceeds tolerance at lam={lam}"
        )
    tol = default_degeneracy_tol(e0) if degeneracy_tol is None else degeneracy_tol
    gap = e1 - e0
    return GroundSolution(
        lam=float(lam),
        energy=e0,
        vector=gauge_fix(vec),
        gap=float(gap),
        degenerate=bool(gap < tol),
        method=method,
        residual=residual,
    )


def full_spectrum(ops: OperatorPair, lam: float, *, dense_cap: int = DENSE_CAP) -> SpectralData:
    """All eigenpairs of H(lam), dense route only.

    Raises SpectrumSizeError above ``dense_cap``: spectral sums are simply
    not offered at sizes where the dense factorization is intractable.
    The eigenbasis is verified orthonormal before being returned.
    """
    _check_finite(ops)
    if ops.dim > dense_cap:
        raise SpectrumSizeError(
            f"full spectrum needs dim <= {dense_cap}, got {ops.dim}; "
            "only ground-state quantities are available at this size"
        )
    vals, vecs = scipy.linalg.eigh(ops.dense_hamiltonian(lam))
    gram_err = float(np.max(np.abs(vecs.T @ vecs - np.eye(ops.dim))))
    if gram_err > ORTHONORMALITY_TOL:
        raise SolverError(f"eigenbasis lost orthonormality ({gram_err:.3e})")
    pivots = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivots, np.arange(ops.dim)])
    signs[signs == 0] = 1.0
    vecs = vecs * signs
    return SpectralData(lam=float(lam), energies=vals, states=vecs)
