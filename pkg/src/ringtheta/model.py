"""Domain types and Hamiltonian construction for a particle on a discretized circle.

The degree of freedom is an angle x in [0, 2pi) sampled on n_sites lattice
points. The Hamiltonian is a nearest-neighbor tight-binding ring

    H = sum_i [ w b(i+1)^dag b(i) + w* b(i)^dag b(i+1) + V_i b(i)^dag b(i) ]

with complex hopping w = -(1/(2 a^2)) exp(i theta / n_sites) and an n-fold
cosine potential V_i = lam (1 - cos(n x_i)), lam = omega^2 / n^2. The net
phase of the hopping parameters around the ring is the topological angle:
it cannot be removed by any single-valued site redefinition unless
theta is a multiple of 2pi.

Everything here is dimensionless (unit moment of inertia, unit radius).
`ModelParams.inertia_ns` carries the conversion to laboratory units:
frequencies scale as 1/inertia_ns, times as inertia_ns.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "ModelError",
    "ModelParams",
    "HermitianOperator",
    "GaugePhases",
    "build_ring_hamiltonian",
    "build_kinetic_fourier",
    "gauge_transform",
    "extract_theta",
    "wrap_angle",
]

HERMITICITY_TOL = 1e-14


class ModelError(ValueError):
    """Invalid model parameters or operator structure."""


def wrap_angle(x: float) -> float:
    """Reduce an angle to (-pi, pi]; a tie at -pi maps to +pi."""
    y = math.remainder(x, 2.0 * math.pi)
    if y <= -math.pi:
        y = math.pi
    return y


@dataclass(frozen=True)
class ModelParams:
    """Parameters of one theory instance.

    n: number of potential wells.
    n_sites: lattice sites on the ring (>= 3 and a multiple of n so that
        every well center sits exactly on a site).
    theta: topological angle in radians.
    omega: dimensionless curvature of a well, omega = n sqrt(lam).
    inertia_ns: moment of inertia in ns; the unit of laboratory time.
    include_constant_shift: keep the constant 1/a^2 diagonal term that the
        discretized kinetic operator naturally carries.
    """

    n: int
    n_sites: int
    theta: float
    omega: float
    inertia_ns: float = 150.0
    include_constant_shift: bool = True

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ModelError(f"n must be a positive integer, got {self.n!r}")
        if not (isinstance(self.n_sites, (int, np.integer)) and self.n_sites >= 3):
            raise ModelError(f"n_sites must be an integer >= 3, got {self.n_sites!r}")
        if self.n_sites % self.n != 0:
            raise ModelError(
                f"n_sites={self.n_sites} must be a multiple of n={self.n} "
                "so well centers fall on lattice sites"
            )
        for name in ("theta", "omega", "inertia_ns"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ModelError(f"{name} must be finite, got {v!r}")
        if self.omega <= 0:
            raise ModelError(f"omega must be positive, got {self.omega}")
        if self.inertia_ns <= 0:
            raise ModelError(f"inertia_ns must be positive, got {self.inertia_ns}")

    @property
    def lam(self) -> float:
        """Potential strength lam = omega^2 / n^2 (never stored independently)."""
        return self.omega**2 / self.n**2

    @property
    def lattice_spacing(self) -> float:
        return 2.0 * math.pi / self.n_sites

    @property
    def positions(self) -> np.ndarray:
        """Angles x_i = 2 pi i / n_sites of the lattice sites."""
        return 2.0 * math.pi * np.arange(self.n_sites) / self.n_sites

    @property
    def well_sites(self) -> np.ndarray:
        """Site index of each well center, well l at site l * n_sites / n."""
        return (np.arange(self.n) * self.n_sites) // self.n

    def with_theta(self, theta: float) -> "ModelParams":
        return replace(self, theta=float(theta))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "n_sites": self.n_sites,
            "theta": self.theta,
            "omega": self.omega,
            "inertia_ns": self.inertia_ns,
            "include_constant_shift": self.include_constant_shift,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        known = {"n", "n_sites", "theta", "omega", "inertia_ns", "include_constant_shift"}
        unknown = set(d) - known
        if unknown:
            raise ModelError(f"unknown ModelParams fields: {sorted(unknown)}")
        return cls(
            n=int(d["n"]),
            n_sites=int(d["n_sites"]),
            theta=float(d["theta"]),
            omega=float(d["omega"]),
            inertia_ns=float(d.get("inertia_ns", 150.0)),
            include_constant_shift=bool(d.get("include_constant_shift", True)),
        )

    @classmethod
    def from_json(cls, s: str) -> "ModelParams":
        return cls.from_dict(json.loads(s))


class HermitianOperator:
    """Dense complex Hermitian matrix, certified at construction.

    Rejects any matrix whose entrywise deviation from its conjugate
    transpose exceeds 1e-14; constructors that assemble a Hermitian matrix
    from floating-point pieces should symmetrize roundoff away first.
    """

    __slots__ = ("dim", "entries")

    def __init__(self, entries: np.ndarray):
        entries = np.asarray(entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ModelError(f"operator must be square, got shape {entries.shape}")
        dev = np.max(np.abs(entries - entries.conj().T))
        if dev > HERMITICITY_TOL:
            raise ModelError(f"matrix is not Hermitian: max |H - H^dag| = {dev:.3e}")
        self.dim = entries.shape[0]
        self.entries = entries
        self.entries.setflags(write=False)

    def __repr__(self):
        return f"HermitianOperator(dim={self.dim})"

    def matrix(self) -> np.ndarray:
        """Writable copy of the entries."""
        return np.array(self.entries)


@dataclass(frozen=True)
class GaugePhases:
    """Per-site phases alpha_i of a diagonal unitary diag(e^{i alpha_i})."""

    alphas: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alphas", np.asarray(self.alphas, dtype=float))
        if self.alphas.ndim != 1:
            raise ModelError("alphas must be a 1-d vector of angles")

    @classmethod
    def winding(cls, n_sites: int, w: int) -> "GaugePhases":
        """Phases alpha_i = -2 pi w i / n_sites, winding w times around the ring."""
        return cls(-2.0 * math.pi * w * np.arange(n_sites) / n_sites)


def _hermitize(m: np.ndarray) -> np.ndarray:
    # removes O(eps) roundoff from constructions that are Hermitian in exact arithmetic
    return 0.5 * (m + m.conj().T)


def build_ring_hamiltonian(params: ModelParams) -> HermitianOperator:
    """Tight-binding ring with complex hopping and the n-well cosine potential.

    Hopping between cyclic neighbors carries the per-link phase
    theta / n_sites, so the phases accumulate to theta around the ring.
    The diagonal holds lam (1 - cos(n x_i)), plus the constant 1/a^2 when
    `include_constant_shift` is set.
    """
    ns = params.n_sites
    a = params.lattice_spacing
    hop = -(1.0 / (2.0 * a * a)) * np.exp(1j * params.theta / ns)
    H = np.zeros((ns, ns), dtype=complex)
    idx = np.arange(ns)
    H[(idx + 1) % ns, idx] = hop
    H[idx, (idx + 1) % ns] = np.conj(hop)
    diag = params.lam * (1.0 - np.cos(params.n * params.positions))
    if params.include_constant_shift:
        diag = diag + 1.0 / (a * a)
    H[idx, idx] = diag
    return HermitianOperator(H)


def build_kinetic_fourier(params: ModelParams) -> HermitianOperator:
    """Kinetic operator via the discrete momentum route.

    Diagonal in the plane-wave basis with eigenvalues
    (1/a^2) (1 - cos((2 pi j - theta)/n_sites)), i.e. the free dispersion
    with the momentum shifted by theta/(2 pi), transformed back to the
    site basis. The shift enters through the 2pi-periodic cosine, so
    theta -> theta + 2pi relabels momenta without changing the operator's
    spectrum. Equals the kinetic part of `build_ring_hamiltonian` exactly
    (same constant-shift convention).
    """
    ns = params.n_sites
    a = params.lattice_spacing
    j = np.arange(ns)
    kin_eigs = (1.0 / (a * a)) * (1.0 - np.cos((2.0 * math.pi * j - params.theta) / ns))
    F = np.exp(2j * math.pi * np.outer(np.arange(ns), j) / ns) / math.sqrt(ns)
    K = F @ np.diag(kin_eigs) @ F.conj().T
    if not params.include_constant_shift:
        K = K - np.eye(ns) / (a * a)
    return HermitianOperator(_hermitize(K))


def gauge_transform(H: HermitianOperator, phases: GaugePhases) -> HermitianOperator:
    """Conjugate H by the diagonal unitary U = diag(e^{i alpha_i}).

    Returns U^dag H U; the spectrum is untouched while each directed link
    coupling picks up e^{i(alpha_i - alpha_{i+1})}. Phases with nonzero
    winding shift the ring's net phase by a multiple of 2pi.
    """
    if len(phases.alphas) != H.dim:
        raise ModelError(
            f"phase vector length {len(phases.alphas)} != operator dim {H.dim}"
        )
    u = np.exp(1j * phases.alphas)
    out = np.conj(u)[:, None] * H.entries * u[None, :]
    return HermitianOperator(_hermitize(out))


def extract_theta(H: HermitianOperator, link_tol: float = 1e-12) -> float:
    """Topological angle of a ring operator: arg of the product of the
    directed nearest-neighbor couplings, reduced to (-pi, pi].

    The product runs over entries H[i+1 mod ns, i]. With the standard
    negative hopping sign the ns factors of -1 contribute nothing for even
    ns and an extra pi for odd ns; that sign convention is inherited from
    the literal product and is not corrected here.

    Raises ModelError when a link coupling vanishes (the product phase is
    undefined) or when any off-diagonal entry lies off the ring pattern.
    """
    ns = H.dim
    m = H.entries
    scale = np.max(np.abs(m))
    if scale == 0.0:
        raise ModelError("zero operator has no ring structure")
    idx = np.arange(ns)
    links = m[(idx + 1) % ns, idx]
    if np.min(np.abs(links)) <= link_tol * scale:
        raise ModelError("zero link coupling: product phase undefined")
    mask = np.zeros((ns, ns), dtype=bool)
    mask[idx, idx] = True
    mask[(idx + 1) % ns, idx] = True
    mask[idx, (idx + 1) % ns] = True
    stray = np.max(np.abs(m[~mask])) if (~mask).any() else 0.0
    if stray > link_tol * scale:
        raise ModelError(
            f"non-ring sparsity pattern: off-ring entry of magnitude {stray:.3e}"
        )
    return wrap_angle(float(np.sum(np.angle(links))))
