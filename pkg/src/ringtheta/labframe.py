"""Multi-level driven system in the laboratory frame and its reduction to
the tight-binding ring.

A set of atomic levels carries the lattice: an ordered subset of levels
("the ring") encodes the sites, every other level is a spectator reached
through dipole-allowed transitions. Oscillating fields drive the ring
transitions near resonance. In the rotating-wave approximation each drive
becomes a static complex hopping of magnitude Omega (its Rabi rate) and
phase set by the field phase, while drive detunings accumulate into the
on-site potential; the encoded topological angle is the net phase of the
drive set. The lab-frame integration keeps the counter-rotating terms and
the spectator couplings in full, which is exactly what the reduction
throws away, so comparing the two quantifies the encoding error.

All frequencies are angular, in ns^-1; times in ns.

Drive phase convention: `Drive.phase_rad` is the phase imparted to the
directed ring hop i -> i+1. The physical field on a transition whose
energy decreases along the ring direction carries the opposite sign; the
simulator applies that sign flip internally, so the reduced model's net
phase is always the plain sum of the stored drive phases.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import StateVector, Trajectory
from .model import HermitianOperator, extract_theta

__all__ = [
    "LabFrameError",
    "Level",
    "Edge",
    "LevelGraph",
    "Drive",
    "DriveSet",
    "ExperimentalMap",
    "IntegratorConfig",
    "LabFrameTrajectory",
    "map_experimental_params",
    "synthetic_level_graph",
    "load_level_graph",
    "build_level_graph",
    "design_drives",
    "rwa_reduce",
    "simulate_lab_frame",
]


class LabFrameError(ValueError):
    """Malformed level graph, drive set, or failed integration."""


@dataclass(frozen=True)
class Level:
    id: str
    energy_ns_inv: float


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    dipole_weight: float = 1.0

    def key(self):
        return frozenset((self.a, self.b))


@dataclass(frozen=True)
class Drive:
    """One field addressing one ring edge.

    omega_ns_inv: Rabi angular frequency of the driven transition;
    freq_ns_inv: field angular frequency; phase_rad: phase imparted to the
    directed ring hop (see module docstring).
    """

    edge: tuple
    omega_ns_inv: float
    freq_ns_inv: float
    phase_rad: float = 0.0

    def __post_init__(self):
        if self.freq_ns_inv <= 0:
            raise LabFrameError("drive frequency must be positive")
        if self.omega_ns_inv <= 0:
            raise LabFrameError("drive amplitude must be positive")


@dataclass(frozen=True)
class DriveSet:
    drives: tuple

    def __post_init__(self):
        object.__setattr__(self, "drives", tuple(self.drives))

    def by_edge(self) -> dict:
        return {frozenset(d.edge): d for d in self.drives}

    def to_list(self) -> list:
        return [
            {
                "edge": list(d.edge),
                "omega_ns_inv": d.omega_ns_inv,
                "freq_ns_inv": d.freq_ns_inv,
                "phase_rad": d.phase_rad,
            }
            for d in self.drives
        ]

    @classmethod
    def from_list(cls, items) -> "DriveSet":
        return cls(
            tuple(
                Drive(
                    edge=(it["edge"][0], it["edge"][1]),
                    omega_ns_inv=float(it["omega_ns_inv"]),
                    freq_ns_inv=float(it["freq_ns_inv"]),
                    phase_rad=float(it.get("phase_rad", 0.0)),
                )
                for it in items
            )
        )


@dataclass(frozen=True)
class LevelGraph:
    """Levels, dipole-allowed edges, and the ordered ring subset."""

    levels: tuple
    edges: tuple
    ring: tuple  # ordered level ids encoding sites 0..n_sites-1

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "ring", tuple(self.ring))
        ids = [lv.id for lv in self.levels]
        if len(set(ids)) != len(ids):
            raise LabFrameError("duplicate level ids")
        if any(not math.isfinite(lv.energy_ns_inv) for lv in self.levels):
            raise LabFrameError("level energies must be finite")
        known = set(ids)
        for e in self.edges:
            if e.a not in known or e.b not in known or e.a == e.b:
                raise LabFrameError(f"edge ({e.a}, {e.b}) references unknown levels")
        if len(self.ring) < 3:
            raise LabFrameError("ring must contain at least 3 levels")
        if len(set(self.ring)) != len(self.ring) or set(self.ring) - known:
            raise LabFrameError("ring subset must be distinct known level ids")
        keys = {e.key() for e in self.edges}
        for i in range(len(self.ring)):
            pair = frozenset((self.ring[i], self.ring[(i + 1) % len(self.ring)]))
            if pair not in keys:
                raise LabFrameError(f"ring edge {sorted(pair)} missing from edge list")

    @property
    def n_sites(self) -> int:
        return len(self.ring)

    def energy(self, level_id: str) -> float:
        for lv in self.levels:
            if lv.id == level_id:
                return lv.energy_ns_inv
        raise LabFrameError(f"no level {level_id!r}")

    def ring_edge_keys(self) -> set:
        return {
            frozenset((self.ring[i], self.ring[(i + 1) % self.n_sites]))
            for i in range(self.n_sites)
        }

    def ring_transition_freqs(self) -> np.ndarray:
        return np.array(
            [
                abs(self.energy(self.ring[(i + 1) % self.n_sites]) - self.energy(self.ring[i]))
                for i in range(self.n_sites)
            ]
        )

    def delta_sep(self) -> float:
        """Minimum separation between a ring transition frequency and any
        spectator transition sharing one of its levels; inf when the graph
        has no spectator edges."""
        ring_keys = self.ring_edge_keys()
        best = math.inf
        for i in range(self.n_sites):
            a, b = self.ring[i], self.ring[(i + 1) % self.n_sites]
            f_drive = abs(self.energy(b) - self.energy(a))
            for e in self.edges:
                if e.key() in ring_keys:
                    continue
                if {e.a, e.b} & {a, b}:
                    f_spec = abs(self.energy(e.a) - self.energy(e.b))
                    best = min(best, abs(f_drive - f_spec))
        return best

    def to_dict(self) -> dict:
        return {
            "levels": [{"id": lv.id, "energy_ns_inv": lv.energy_ns_inv} for lv in self.levels],
            "edges": [{"a": e.a, "b": e.b, "dipole_weight": e.dipole_weight} for e in self.edges],
            "ring": list(self.ring),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LevelGraph":
        try:
            levels = tuple(Level(str(x["id"]), float(x["energy_ns_inv"])) for x in d["levels"])
            edges = tuple(
                Edge(str(x["a"]), str(x["b"]), float(x.get("dipole_weight", 1.0)))
                for x in d["edges"]
            )
            ring = tuple(str(x) for x in d["ring"])
        except (KeyError, TypeError, ValueError) as exc:
            raise LabFrameError(f"level-graph schema violation: {exc}") from exc
        return cls(levels, edges, ring)


def load_level_graph(path) -> LevelGraph:
    with open(path) as fh:
        return LevelGraph.from_dict(json.load(fh))


def save_level_graph(graph: LevelGraph, path):
    with open(path, "w") as fh:
        json.dump(graph.to_dict(), fh, indent=2)


def synthetic_level_graph(
    n_sites: int,
    delta_sep: float = 0.0628,
    spectators_per_level: int = 2,
    seed: int = 7,
    f_lo: float = 2.5,
    f_hi: float = 6.5,
    min_ring_separation: float = 1.0,
) -> LevelGraph:
    """Deterministic level structure with the one property the encoding
    needs: ring transitions mutually well separated, spectator transitions
    at least `delta_sep` away from every ring transition.

    Ring level energies walk up for the first half of the ring and back
    down for the second, with transition frequencies drawn from
    [f_lo, f_hi] until the walk closes and all mutual separations exceed
    `min_ring_separation`. Each ring level then gets spectators; the first
    one sits exactly `delta_sep` away from a ring transition frequency
    (the worst allowed case), the rest land anywhere allowed.
    """
    if n_sites < 3:
        raise LabFrameError("ring needs at least 3 levels")
    if spectators_per_level < 0:
        raise LabFrameError("spectators_per_level must be >= 0")
    if min_ring_separation < delta_sep:
        raise LabFrameError("ring transitions must be separated by at least delta_sep")
    rng = np.random.default_rng(seed)
    k = n_sites // 2
    signs = np.array([+1.0] * k + [-1.0] * (n_sites - k))

    def sample_band(lo, hi, attempts):
        for _ in range(attempts):
            fs = rng.uniform(lo, hi, n_sites - 1)
            last = float(signs[:-1] @ fs / (-signs[-1]))
            cand = np.append(fs, last)
            if not (lo <= last <= hi):
                continue
            seps = np.abs(cand[:, None] - cand[None, :])[np.triu_indices(n_sites, 1)]
            if seps.min() >= min_ring_separation:
                return cand
        return None

    freqs = sample_band(f_lo, f_hi, 100000)
    if freqs is None:
        # n_sites mutually separated frequencies need a band wider than
        # (n_sites - 1) separations; retry with a provably roomy one
        wide = f_lo + 2.0 * (n_sites - 1) * min_ring_separation
        if wide > f_hi:
            f_hi = wide
            freqs = sample_band(f_lo, f_hi, 100000)
    if freqs is None:
        raise LabFrameError(
            "could not realize mutually separated ring transitions; widen [f_lo, f_hi]"
        )
    energies = np.concatenate([[0.0], np.cumsum(signs * freqs)])[:n_sites]

    levels = [Level(f"s{i}", float(energies[i])) for i in range(n_sites)]
    edges = [Edge(f"s{i}", f"s{(i + 1) % n_sites}", 1.0) for i in range(n_sites)]
    ring = tuple(f"s{i}" for i in range(n_sites))

    def spectator_freq(exact: bool) -> float:
        if exact:
            f0 = float(rng.choice(freqs))
            return f0 + delta_sep if rng.random() < 0.5 else max(f0 - delta_sep, 0.1 * delta_sep)
        for _ in range(200000):
            g = float(rng.uniform(f_lo, f_hi))
            if np.min(np.abs(g - freqs)) >= delta_sep:
                return g
        raise LabFrameError("could not place a spectator transition")

    m = 0
    for i in range(n_sites):
        for s in range(spectators_per_level):
            g = spectator_freq(exact=(s == 0))
            side = 1.0 if rng.random() < 0.5 else -1.0
            lid = f"x{m}"
            m += 1
            levels.append(Level(lid, float(energies[i] + side * g)))
            edges.append(Edge(f"s{i}", lid, float(rng.uniform(0.3, 1.0))))
    return LevelGraph(tuple(levels), tuple(edges), ring)


def build_level_graph(source: dict) -> LevelGraph:
    """Config-driven construction: {"kind": "synthetic", ...generator args}
    or {"kind": "file", "path": ...}."""
    kind = source.get("kind")
    if kind == "synthetic":
        args = {k: v for k, v in source.items() if k != "kind"}
        return synthetic_level_graph(**args)
    if kind == "file":
        return load_level_graph(source["path"])
    raise LabFrameError(f"unknown level-graph source kind {kind!r}")


@dataclass(frozen=True)
class ExperimentalMap:
    """Derived theory scales for experimental knobs (Omega, Delta, n, n_sites).

    omega_tilde: perturbative fast angular frequency, sqrt(2 Delta Omega) 2 pi n / n_sites;
    omega_diga_tilde: nonperturbative slow frequency 2 omega_tilde d;
    omega_dimless: sqrt(Delta/(2 Omega)) n n_sites / (2 pi), the dimensionless
        curvature that characterizes the theory;
    inertia_ns: omega_dimless / omega_tilde;
    feasibility_ratio: sqrt(Delta^2 + Omega^2) / omega_diga_tilde, which must
        stay well below ~100 for a tunneling event to fit in the coherence
        window.
    """

    Omega: float
    Delta: float
    n: int
    n_sites: int
    omega_tilde: float
    omega_diga_tilde: float
    omega_dimless: float
    inertia_ns: float
    feasibility_ratio: float

    def to_dict(self) -> dict:
        return {
            "Omega_ns_inv": self.Omega,
            "Delta_ns_inv": self.Delta,
            "n": self.n,
            "n_sites": self.n_sites,
            "omega_tilde_ns_inv": self.omega_tilde,
            "omega_diga_tilde_ns_inv": self.omega_diga_tilde,
            "omega_dimless": self.omega_dimless,
            "inertia_ns": self.inertia_ns,
            "feasibility_ratio": self.feasibility_ratio,
        }


def map_experimental_params(Omega: float, Delta: float, n: int, n_sites: int) -> ExperimentalMap:
    """Forward map from drive amplitude and detuning scale to theory scales."""
    if Omega <= 0 or Delta <= 0:
        raise LabFrameError("Omega and Delta must be positive")
    if n < 1 or n_sites < 3:
        raise LabFrameError("need n >= 1 and n_sites >= 3")
    omega_tilde = math.sqrt(2.0 * Delta * Omega) * 2.0 * math.pi * n / n_sites
    omega_dimless = math.sqrt(Delta / (2.0 * Omega)) * n * n_sites / (2.0 * math.pi)
    omega_diga = (
        8.0
        * (2.0 * Delta**3 * Omega) ** 0.25
        * math.sqrt(2.0 * n / n_sites)
        * math.exp(-2.0 * math.sqrt(2.0 * Delta / Omega) * n_sites / (math.pi * n))
    )
    inertia = omega_dimless / omega_tilde
    ratio = math.sqrt(Delta**2 + Omega**2) / omega_diga
    out = ExperimentalMap(
        Omega=Omega,
        Delta=Delta,
        n=n,
        n_sites=n_sites,
        omega_tilde=omega_tilde,
        omega_diga_tilde=omega_diga,
        omega_dimless=omega_dimless,
        inertia_ns=inertia,
        feasibility_ratio=ratio,
    )
    if not all(
        v > 0
        for v in (out.omega_tilde, out.omega_diga_tilde, out.omega_dimless,
                  out.inertia_ns, out.feasibility_ratio)
    ):
        raise LabFrameError("derived scales must be strictly positive")
    return out


def design_drives(graph: LevelGraph, Omega: float, Delta: float, n: int,
                  theta: float = 0.0) -> DriveSet:
    """Drive set realizing the n-well ring at angle theta on this graph.

    On-site detunings follow Delta (1 - cos(n x_i)); each drive frequency
    is the transition frequency corrected by the potential difference
    across its link; the per-link phase is theta / n_sites. Drive
    amplitudes divide out the edge dipole weight so the effective hopping
    magnitude is exactly Omega.
    """
    ns = graph.n_sites
    if ns % n != 0:
        raise LabFrameError("n_sites must be a multiple of n")
    E = np.array([graph.energy(i) for i in graph.ring])
    Vi = Delta * (1.0 - np.cos(n * 2.0 * math.pi * np.arange(ns) / ns))
    kappa = E - Vi
    weights = {e.key(): e.dipole_weight for e in graph.edges}
    drives = []
    for i in range(ns):
        a, b = graph.ring[i], graph.ring[(i + 1) % ns]
        dk = kappa[(i + 1) % ns] - kappa[i]
        if abs(dk) <= 0:
            raise LabFrameError(f"degenerate rotating frame on edge ({a}, {b})")
        w = weights[frozenset((a, b))]
        drives.append(
            Drive(
                edge=(a, b),
                omega_ns_inv=Omega / w,
                freq_ns_inv=abs(dk),
                phase_rad=theta / ns,
            )
        )
    return DriveSet(tuple(drives))


@dataclass(frozen=True)
class RwaReduction:
    """Rotating-frame tight-binding model extracted from a drive set."""

    operator: HermitianOperator
    theta: float
    hopping_ns_inv: np.ndarray   # per-link effective |w|
    onsite_ns_inv: np.ndarray    # accumulated detunings V_i (kappa_0 = E_0 gauge)
    frame_rates: np.ndarray      # kappa_i of the rotating frame


def rwa_reduce(graph: LevelGraph, drives: DriveSet) -> RwaReduction:
    """Reduce graph + drives to the static ring model of the rotating frame.

    Walks the ring accumulating frame rates kappa: each step moves by the
    drive frequency, signed by the direction of the transition it is
    nearly resonant with. The walk must close (total signed drive
    frequency zero to 1e-9 of the energy scale); an open walk means the
    detunings were assigned inconsistently and is reported, never guessed.
    Hop (i+1, i) gets Omega_eff e^{i phase}; the diagonal collects
    V_i = E_i - kappa_i.
    """
    ns = graph.n_sites
    by_edge = drives.by_edge()
    ring_keys = [frozenset((graph.ring[i], graph.ring[(i + 1) % ns])) for i in range(ns)]
    missing = [sorted(k) for k in ring_keys if k not in by_edge]
    if missing:
        raise LabFrameError(f"missing drive for ring edges: {missing}")
    E = np.array([graph.energy(i) for i in graph.ring])
    weights = {e.key(): e.dipole_weight for e in graph.edges}

    kappa = np.empty(ns + 1)
    kappa[0] = E[0]
    signs = np.empty(ns)
    omega_eff = np.empty(ns)
    phases = np.empty(ns)
    for i in range(ns):
        d = by_edge[ring_keys[i]]
        dE = E[(i + 1) % ns] - E[i]
        if abs(d.freq_ns_inv - abs(dE)) > 0.2 * abs(dE):
            raise LabFrameError(
                f"drive on edge {sorted(ring_keys[i])} is far off resonance "
                f"({d.freq_ns_inv} vs transition {abs(dE)})"
            )
        signs[i] = 1.0 if dE >= 0 else -1.0
        kappa[i + 1] = kappa[i] + signs[i] * d.freq_ns_inv
        omega_eff[i] = d.omega_ns_inv * weights[ring_keys[i]]
        phases[i] = d.phase_rad
    closure = kappa[ns] - kappa[0]
    scale = max(np.max(np.abs(E)), np.max(np.abs(kappa)))
    if abs(closure) > 1e-9 * max(scale, 1.0):
        raise LabFrameError(
            f"ambiguous rotating frame: drive frequencies do not close the ring "
            f"(mismatch {closure:.3e} ns^-1)"
        )
    onsite = E - kappa[:ns]
    H = np.zeros((ns, ns), dtype=complex)
    idx = np.arange(ns)
    hop = omega_eff * np.exp(1j * phases)
    H[(idx + 1) % ns, idx] = hop
    H[idx, (idx + 1) % ns] = np.conj(hop)
    H[idx, idx] = onsite
    op = HermitianOperator(H)
    return RwaReduction(
        operator=op,
        theta=extract_theta(op),
        hopping_ns_inv=omega_eff,
        onsite_ns_inv=onsite,
        frame_rates=kappa[:ns],
    )


@dataclass(frozen=True)
class IntegratorConfig:
    """Adaptive embedded-pair settings for the lab-frame integration."""

    rtol: float = 1e-10
    atol: float = 1e-12
    method: str = "DOP853"
    steps_per_fastest_cycle: int = 50

    def max_step(self, f_max_angular: float) -> float:
        f_cyc = f_max_angular / (2.0 * math.pi)
        return 1.0 / (self.steps_per_fastest_cycle * f_cyc)


class LabFrameTrajectory(Trajectory):
    """Trajectory over the full level set, ring levels first.

    `site_probs[:, :ring_dim]` are the encoded-site populations (ordered
    along the ring); the remainder are spectator populations. cos_x/sin_x
    are computed from the ring populations only, without renormalizing
    away the leakage. Amplitude phases are lab-frame and not directly
    comparable to the rotating frame; populations are.
    """

    def __init__(self, ring_dim: int, level_ids, **kw):
        super().__init__(**kw)
        self.ring_dim = ring_dim
        self.level_ids = list(level_ids)

    @property
    def ring_populations(self) -> np.ndarray:
        return self.site_probs[:, : self.ring_dim]

    @property
    def leakage(self) -> np.ndarray:
        return self.norm**2 - self.ring_populations.sum(axis=1)


def simulate_lab_frame(
    graph: LevelGraph,
    drives: DriveSet,
    psi0: StateVector,
    times_ns,
    integrator_config: IntegratorConfig = IntegratorConfig(),
) -> LabFrameTrajectory:
    """Integrate the time-dependent Schroedinger equation with the full
    drive fields (counter-rotating terms and spectator couplings kept).

    H(t) = sum_i E_i |i><i| + s(t) D, where D is the dipole operator built
    from all edges and s(t) = sum_drives 2 Omega cos(nu t + phi_field);
    phi_field realizes the stored directed-hop phase (see module
    docstring). psi0 may live on the ring subset (embedded onto the full
    level set) or on all levels.
    """
    ns = graph.n_sites
    order = list(graph.ring) + [lv.id for lv in graph.levels if lv.id not in graph.ring]
    index = {lid: i for i, lid in enumerate(order)}
    N = len(order)
    energies = np.array([graph.energy(lid) for lid in order])

    D = np.zeros((N, N))
    for e in graph.edges:
        ia, ib = index[e.a], index[e.b]
        D[ia, ib] = D[ib, ia] = e.dipole_weight

    by_edge = drives.by_edge()
    ring_keys = [frozenset((graph.ring[i], graph.ring[(i + 1) % ns])) for i in range(ns)]
    missing = [sorted(k) for k in ring_keys if k not in by_edge]
    if missing:
        raise LabFrameError(f"missing drive for ring edges: {missing}")
    amps, nus, field_phases = [], [], []
    for i, key in enumerate(ring_keys):
        d = by_edge[key]
        dE = graph.energy(graph.ring[(i + 1) % ns]) - graph.energy(graph.ring[i])
        sign = 1.0 if dE >= 0 else -1.0
        amps.append(2.0 * d.omega_ns_inv)
        nus.append(d.freq_ns_inv)
        field_phases.append(-sign * d.phase_rad)
    amps = np.array(amps)
    nus = np.array(nus)
    field_phases = np.array(field_phases)

    if psi0.dim == ns:
        y0 = np.zeros(N, dtype=complex)
        y0[:ns] = psi0.amplitudes
    elif psi0.dim == N:
        y0 = psi0.amplitudes.astype(complex)
    else:
        raise LabFrameError(
            f"initial state dimension {psi0.dim} matches neither ring ({ns}) nor full ({N})"
        )

    times_ns = np.atleast_1d(np.asarray(times_ns, dtype=float))
    if np.any(np.diff(times_ns) < 0) or times_ns[0] < 0:
        raise LabFrameError("times must be nondecreasing and nonnegative")

    trans_freqs = [abs(energies[index[e.a]] - energies[index[e.b]]) for e in graph.edges]
    f_max = max(trans_freqs)

    def rhs(t, y):
        s = np.sum(amps * np.cos(nus * t + field_phases))
        return -1j * (energies * y + s * (D @ y))

    sol = solve_ivp(
        rhs,
        [0.0, float(times_ns[-1])],
        y0,
        t_eval=times_ns,
        method=integrator_config.method,
        rtol=integrator_config.rtol,
        atol=integrator_config.atol,
        max_step=integrator_config.max_step(f_max),
    )
    if not sol.success:
        raise LabFrameError(f"lab-frame integration failed: {sol.message}")
    psi_t = sol.y.T.copy()
    norm = np.linalg.norm(psi_t, axis=1)
    drift = float(np.max(np.abs(norm - 1.0)))
    if drift > 1e-8:
        raise LabFrameError(f"norm drift {drift:.3e} exceeds 1e-8; tighten tolerances")

    probs = np.abs(psi_t) ** 2
    x = 2.0 * math.pi * np.arange(ns) / ns
    svals = np.sum(amps * np.cos(np.outer(times_ns, nus) + field_phases), axis=1)
    energy = np.real(np.einsum("ti,i,ti->t", psi_t.conj(), energies, psi_t)) + svals * np.real(
        np.einsum("ti,ij,tj->t", psi_t.conj(), D, psi_t)
    )
    return LabFrameTrajectory(
        ring_dim=ns,
        level_ids=order,
        times_ns=times_ns,
        states=psi_t,
        site_probs=probs,
        cos_x=probs[:, :ns] @ np.cos(x),
        sin_x=probs[:, :ns] @ np.sin(x),
        norm=norm,
        energy=energy,
    )
