"""Pydantic request/response models for the service endpoints.

Each endpoint fronts one batch operation; the CLI builds the same request
models and renders the responses to CSV/JSON files. All frequencies are
angular ns^-1, times ns, angles radians.
"""

from __future__ import annotations

import math
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class ModelParamsIn(BaseModel):
    n: int = Field(ge=1)
    n_sites: int = Field(ge=3)
    theta: float = 0.0
    omega: float = Field(gt=0)
    inertia_ns: float = Field(default=150.0, gt=0)
    include_constant_shift: bool = True


class ThetaGridIn(BaseModel):
    """Uniform grid over [lo, hi] with `points` entries, or explicit values."""

    lo: float = -math.pi
    hi: float = math.pi
    points: int = Field(default=101, ge=1)
    values: Optional[list[float]] = None

    def resolve(self) -> list[float]:
        if self.values is not None:
            return list(self.values)
        if self.points == 1:
            return [self.lo]
        step = (self.hi - self.lo) / (self.points - 1)
        return [self.lo + i * step for i in range(self.points)]


class TimesIn(BaseModel):
    t_max_ns: float = Field(gt=0)
    points: int = Field(default=1000, ge=2)
    t_min_ns: float = 0.0

    def resolve(self) -> list[float]:
        step = (self.t_max_ns - self.t_min_ns) / (self.points - 1)
        return [self.t_min_ns + i * step for i in range(self.points)]


class InitialStateIn(BaseModel):
    kind: Literal["delta", "cosine_power"] = "delta"
    site: int = 0
    alpha: Optional[float] = None
    center_site: int = 0

    @model_validator(mode="after")
    def _alpha_needed(self):
        if self.kind == "cosine_power" and self.alpha is None:
            raise ValueError("cosine_power initial state needs alpha")
        return self


class SpectrumRequest(BaseModel):
    params: ModelParamsIn
    theta_grid: ThetaGridIn = ThetaGridIn()
    n_branches: int = Field(default=6, ge=1)
    diagnostics: bool = True


class SpectrumResponse(BaseModel):
    theta: list[float]
    energies: list[list[float]]  # energies[g][k]
    diagnostics: Optional[dict] = None


class ConvergeRequest(BaseModel):
    kind: Literal["gap_vs_ns", "ed_diga_ratio_vs_omega", "fuzziness_vs_alpha"]
    n: int = 2
    omega: float = 2.0
    theta: float = 0.0
    n_sites: int = 2000
    grid: Optional[list[float]] = None
    alpha_grid: list[float] = [2.0, 4.0, 6.0, 8.0]


class ConvergeResponse(BaseModel):
    kind: str
    rows: list[dict]


class ThetaScheduleIn(BaseModel):
    knot_times_ns: list[float]
    knot_thetas: list[float]
    n_steps: int = Field(default=200, ge=1)


class DynamicsRequest(BaseModel):
    params: ModelParamsIn
    initial: InitialStateIn = InitialStateIn()
    times: TimesIn
    schedule: Optional[ThetaScheduleIn] = None
    wells: bool = False


class DynamicsResponse(BaseModel):
    times_ns: list[float]
    site_probs: list[list[float]]
    cos_x: list[float]
    sin_x: list[float]
    norm: list[float]
    energy: list[float]
    well_probs: Optional[list[list[float]]] = None
    ground_state_fidelity: Optional[list[float]] = None


class DigaRequest(BaseModel):
    n: int = Field(ge=2)
    omega: float = Field(gt=0)
    theta: float = 0.0
    from_well: int = 0
    times_dimless: Optional[TimesIn] = None


class DigaResponse(BaseModel):
    action_real: float
    density: float
    chi_t: float
    spectrum: list[float]
    times_dimless: Optional[list[float]] = None
    hop_probs: Optional[list[list[float]]] = None  # [t][to_well]
    cos_x: Optional[list[float]] = None
    sin_x: Optional[list[float]] = None


class GyRequest(BaseModel):
    half_length: float = Field(default=20.0, ge=10.0)
    ode_tolerance: float = Field(default=1e-10, gt=0)
    epsilon_grid: list[float] = [1e-2, 1e-3, 1e-4]
    fd_grid_points: int = Field(default=4001, ge=1000)
    with_oracle: bool = True


class GyResponse(BaseModel):
    ratio_odd: float
    ratio_even_primed: float
    epsilon_detail: dict
    product: float
    fd_oracle: Optional[dict] = None


class LevelGraphSourceIn(BaseModel):
    kind: Literal["synthetic", "file"] = "synthetic"
    path: Optional[str] = None
    n_sites: int = 4
    delta_sep: float = 0.0628
    spectators_per_level: int = 2
    seed: int = 7
    f_lo: float = 2.5
    f_hi: float = 6.5
    min_ring_separation: float = 1.0

    def to_source(self) -> dict:
        if self.kind == "file":
            if not self.path:
                raise ValueError("file source needs a path")
            return {"kind": "file", "path": self.path}
        return {
            "kind": "synthetic",
            "n_sites": self.n_sites,
            "delta_sep": self.delta_sep,
            "spectators_per_level": self.spectators_per_level,
            "seed": self.seed,
            "f_lo": self.f_lo,
            "f_hi": self.f_hi,
            "min_ring_separation": self.min_ring_separation,
        }


class DriveDesignIn(BaseModel):
    Omega: float = Field(gt=0)
    Delta: float = Field(gt=0)
    n: int = Field(ge=1)
    theta: float = 0.0


class DriveIn(BaseModel):
    edge: list[str]
    omega_ns_inv: float
    freq_ns_inv: float
    phase_rad: float = 0.0


class IntegratorIn(BaseModel):
    rtol: float = 1e-10
    atol: float = 1e-12
    method: str = "DOP853"
    steps_per_fastest_cycle: int = 50


class LabFrameRequest(BaseModel):
    graph: LevelGraphSourceIn = LevelGraphSourceIn()
    design: Optional[DriveDesignIn] = None
    drives: Optional[list[DriveIn]] = None
    initial_site: int = 0
    times: TimesIn = TimesIn(t_max_ns=5000.0, points=501)
    integrator: IntegratorIn = IntegratorIn()
    compare_rwa: bool = True

    @model_validator(mode="after")
    def _one_drive_spec(self):
        if (self.design is None) == (self.drives is None):
            raise ValueError("provide exactly one of `design` or `drives`")
        return self


class LabFrameResponse(BaseModel):
    times_ns: list[float]
    level_ids: list[str]
    ring_populations: list[list[float]]
    spectator_populations: list[list[float]]
    cos_x: list[float]
    sin_x: list[float]
    norm: list[float]
    leakage: list[float]
    delta_sep: float
    rwa_theta: Optional[float] = None
    rwa_populations: Optional[list[list[float]]] = None
    max_population_deviation: Optional[float] = None


class MapParamsRequest(BaseModel):
    Omega: float = Field(gt=0)
    Delta: float = Field(gt=0)
    n: int = Field(ge=1)
    n_sites: int = Field(ge=3)
    units: Literal["ns_inv", "mhz"] = "ns_inv"


class MapParamsResponse(BaseModel):
    Omega_ns_inv: float
    Delta_ns_inv: float
    n: int
    n_sites: int
    omega_tilde_ns_inv: float
    omega_diga_tilde_ns_inv: float
    omega_dimless: float
    inertia_ns: float
    feasibility_ratio: float
    omega_tilde_mhz: Optional[float] = None
    omega_diga_tilde_mhz: Optional[float] = None


class FitRequest(BaseModel):
    times_ns: list[float]
    values: list[float]
    model: Literal["n2_prob", "n3_cos_highsym", "n3_cos_generic"] = "n2_prob"

    @field_validator("values")
    @classmethod
    def _lengths(cls, v, info):
        t = info.data.get("times_ns")
        if t is not None and len(v) != len(t):
            raise ValueError("times_ns and values must have equal length")
        return v


class FitResponse(BaseModel):
    omega_tun_ns_inv: float
    omega_fast_ns_inv: float
    A1: float
    A2: float
    phi_fast: float
    residual_rms: float
    converged: bool
    frozen: bool
    possibly_degenerate: bool
    covariance_diag: list[float]
    model: str
