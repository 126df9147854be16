"""Dense Hermitian eigendecomposition and spectral diagnostics.

Exact diagonalization is the workhorse: spectra over theta grids, the
degeneracy of the lowest doublet at theta = pi, set-equality of spectra
under theta -> theta + 2pi, and parity checks at the symmetric points.

The eigensolver is LAPACK's dense Hermitian reduction (deterministic, no
randomized stages); eigenvector phases are fixed after the fact so that
degenerate doublets come out reproducibly.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import HermitianOperator, ModelParams, build_ring_hamiltonian, wrap_angle

__all__ = [
    "EigensolverError",
    "SpectrumResult",
    "eigendecompose",
    "tunneling_gap",
    "spectrum_sweep",
    "spectral_diagnostics",
    "reorder_by_continuation",
    "thread_count",
]

RESIDUAL_RTOL = 1e-10


class EigensolverError(RuntimeError):
    """Eigendecomposition failed to converge or to meet its accuracy contract."""


def thread_count() -> int:
    """Parallelism degree, capped by the RINGTHETA_THREADS environment variable."""
    cap = os.environ.get("RINGTHETA_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = max(1, min(n, int(cap)))
        except ValueError:
            pass
    return n


def _fix_phases(V: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude component is real positive.

    Ties in magnitude resolve to the lowest index, making degenerate pairs
    reproducible across runs on the same platform.
    """
    k = np.argmax(np.abs(V), axis=0)
    piv = V[k, np.arange(V.shape[1])]
    phase = np.where(np.abs(piv) > 0, piv / np.where(np.abs(piv) > 0, np.abs(piv), 1.0), 1.0)
    return V / phase[None, :]


def eigendecompose(H: HermitianOperator, check: bool = True):
    """Full spectrum of a Hermitian operator.

    Returns (eigenvalues ascending, eigenvector columns). The decomposition
    is verified: per-pair residual ||H v - E v|| below 1e-10 * ||H||_2 and
    eigenvector-matrix unitarity to the same level; violations raise
    EigensolverError rather than returning silently degraded results.
    """
    m = H.entries
    if np.max(np.abs(m.imag)) == 0.0:
        w, V = np.linalg.eigh(m.real)
        V = V.astype(complex)
    else:
        w, V = np.linalg.eigh(m)
    V = _fix_phases(V)
    if check:
        norm = max(np.max(np.abs(w)), 1e-300)
        resid = np.linalg.norm(m @ V - V * w[None, :], axis=0)
        if np.max(resid) > RESIDUAL_RTOL * norm:
            raise EigensolverError(
                f"eigenpair residual {np.max(resid):.3e} exceeds {RESIDUAL_RTOL:.0e} * ||H||"
            )
        gram = V.conj().T @ V
        dev = np.max(np.abs(gram - np.eye(H.dim)))
        if dev > 1e-10:
            raise EigensolverError(f"eigenvector matrix not unitary: {dev:.3e}")
    return w, V


def tunneling_gap(params: ModelParams, refine: bool = True) -> float:
    """E_1 - E_0 of the ring Hamiltonian, refined when it is below the
    plain eigensolver's absolute resolution.

    A dense Hermitian solve carries an absolute eigenvalue error of order
    eps * ||H||, and ||H|| grows like n_sites^2, so deep-semiclassical gaps
    (omega large) drown in roundoff. The refinement inverts (H - sigma) at
    a shift just below the ground state; the inverse condenses the low end
    of the spectrum so the doublet splitting is resolved to near machine
    precision relative to the gap itself.
    """
    H = build_ring_hamiltonian(params)
    w, _ = eigendecompose(H, check=False)
    gap = float(w[1] - w[0])
    scale = float(np.max(np.abs(w)))
    if not refine or gap > 1e3 * np.finfo(float).eps * scale:
        return gap
    sigma = w[0] - 0.5
    shifted = H.entries - sigma * np.eye(H.dim)
    if np.max(np.abs(shifted.imag)) == 0.0:
        B = np.linalg.inv(shifted.real)
    else:
        B = np.linalg.inv(shifted)
    B = 0.5 * (B + B.conj().T)
    mu = np.linalg.eigvalsh(B)
    e = sigma + 1.0 / mu[-2:][::-1]
    return float(e[1] - e[0])


@dataclass
class SpectrumResult:
    """Lowest branches of the spectrum over a theta grid.

    energies[g, k] is the k-th eigenvalue (ascending) at theta_grid[g];
    eigenvectors, when kept, is one (dim x k) column block per grid point.
    """

    theta_grid: np.ndarray
    energies: np.ndarray
    eigenvectors: list[np.ndarray] | None = None
    params: ModelParams | None = None

    def __post_init__(self):
        self.theta_grid = np.asarray(self.theta_grid, dtype=float)
        self.energies = np.asarray(self.energies, dtype=float)
        if np.any(np.diff(self.energies, axis=1) < -1e-12):
            raise EigensolverError("per-theta energies must be nondecreasing")

    @property
    def n_branches(self) -> int:
        return self.energies.shape[1]


def spectrum_sweep(
    params: ModelParams,
    theta_grid,
    n_branches: int,
    keep_eigenvectors: bool = False,
) -> SpectrumResult:
    """Lowest `n_branches` eigenvalues at every angle of the grid.

    Grid points are independent computations and run on a thread pool
    (LAPACK releases the GIL); assembly preserves grid order.
    """
    theta_grid = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    if theta_grid.size == 0:
        raise EigensolverError("theta grid must be nonempty")
    if not 1 <= n_branches <= params.n_sites:
        raise EigensolverError(
            f"n_branches={n_branches} out of range for dim {params.n_sites}"
        )

    def solve(theta):
        try:
            w, V = eigendecompose(build_ring_hamiltonian(params.with_theta(theta)))
        except EigensolverError as exc:
            raise EigensolverError(f"at theta={theta:.6g}: {exc}") from exc
        return w[:n_branches], (V[:, :n_branches] if keep_eigenvectors else None)

    workers = min(thread_count(), len(theta_grid))
    if workers > 1 and len(theta_grid) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve, theta_grid))
    else:
        results = [solve(t) for t in theta_grid]
    energies = np.array([r[0] for r in results])
    vecs = [r[1] for r in results] if keep_eigenvectors else None
    return SpectrumResult(theta_grid, energies, vecs, params)


def reorder_by_continuation(result: SpectrumResult) -> SpectrumResult:
    """Reorder branches by eigenvector overlap between adjacent grid points.

    Sorted-by-energy branches kink where levels cross; following the
    largest |<v_prev | v_next>| instead exposes the branch shift under
    theta -> theta + 2pi. Requires eigenvectors.
    """
    if result.eigenvectors is None:
        raise EigensolverError("continuation reordering needs eigenvectors")
    energies = result.energies.copy()
    vecs = [v.copy() for v in result.eigenvectors]
    for g in range(1, len(result.theta_grid)):
        overlap = np.abs(vecs[g - 1].conj().T @ vecs[g])
        perm = np.full(result.n_branches, -1, dtype=int)
        taken = np.zeros(result.n_branches, dtype=bool)
        for k in range(result.n_branches):
            order = np.argsort(-overlap[k])
            for j in order:
                if not taken[j]:
                    perm[k] = j
                    taken[j] = True
                    break
        energies[g] = energies[g][perm]
        vecs[g] = vecs[g][:, perm]
    out = SpectrumResult.__new__(SpectrumResult)
    out.theta_grid = result.theta_grid
    out.energies = energies
    out.eigenvectors = vecs
    out.params = result.params
    return out


def _sorted_spectrum(params: ModelParams, theta: float) -> np.ndarray:
    w, _ = eigendecompose(build_ring_hamiltonian(params.with_theta(theta)), check=False)
    return w


def spectral_diagnostics(result: SpectrumResult, params: ModelParams | None = None) -> dict:
    """Degeneracy, monodromy, and parity report for a sweep.

    - gap at theta = pi (the grid must contain pi up to 1e-9);
    - ED monodromy: sorted spectra at theta and theta + 2pi agree as sets;
    - parity: spectrum invariance under site reflection i -> -i at
      theta in {0, pi} found on the grid.
    """
    params = params or result.params
    if params is None:
        raise EigensolverError("diagnostics need the model parameters")
    grid = result.theta_grid
    at_pi = np.flatnonzero(np.abs(grid - math.pi) < 1e-9)
    if at_pi.size == 0:
        raise EigensolverError("theta grid does not contain pi; cannot report the gap")
    g = int(at_pi[0])
    gap_pi = float(result.energies[g, 1] - result.energies[g, 0])

    theta0 = float(grid[0])
    w_lo = _sorted_spectrum(params, theta0)
    w_hi = _sorted_spectrum(params, theta0 + 2.0 * math.pi)
    monodromy_dev = float(np.max(np.abs(w_lo - w_hi)))

    parity = {}
    refl = (-np.arange(params.n_sites)) % params.n_sites
    for label, target in (("theta=0", 0.0), ("theta=pi", math.pi)):
        hit = np.flatnonzero(np.abs(grid - target) < 1e-9)
        if hit.size == 0:
            continue
        H = build_ring_hamiltonian(params.with_theta(float(grid[hit[0]])))
        w = np.linalg.eigvalsh(H.entries)
        w_refl = np.linalg.eigvalsh(H.entries[np.ix_(refl, refl)])
        parity[label] = float(np.max(np.abs(w - w_refl)))

    return {
        "gap_at_pi": gap_pi,
        "gap_at_pi_over_omega": gap_pi / params.omega,
        "monodromy_set_equality_dev": monodromy_dev,
        "parity_residuals": parity,
        "branch_means": result.energies.mean(axis=0).tolist(),
        "mean_subtracted_gap_at_pi": gap_pi,
    }


def wrap_grid(grid) -> np.ndarray:
    """Angles of a grid reduced to (-pi, pi] (plot convention)."""
    return np.array([wrap_angle(t) for t in np.asarray(grid, dtype=float)])
