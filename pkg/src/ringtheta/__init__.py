"""Quantum particle on a discretized circle with a topological angle.

Core subpackages:

- model: parameters, Hermitian operators, ring Hamiltonian, gauge tools
- spectral: exact diagonalization, theta sweeps, diagnostics
- dynamics: initial states, unitary evolution, theta ramps, observables
- semiclassics: dilute-instanton-gas closed forms
- detfunc: one-loop fluctuation determinant ratios
- labframe: driven multi-level model and its rotating-wave reduction
- analysis: oscillation fits and convergence sweeps
- service: FastAPI app exposing the operations; cli: thin batch client
"""

__version__ = "0.1.0"

from .model import (
    GaugePhases,
    HermitianOperator,
    ModelParams,
    build_kinetic_fourier,
    build_ring_hamiltonian,
    extract_theta,
    gauge_transform,
)
from .spectral import SpectrumResult, eigendecompose, spectrum_sweep, tunneling_gap
from .dynamics import (
    StateVector,
    ThetaSchedule,
    Trajectory,
    evolve,
    evolve_theta_ramp,
    observables,
    prepare_initial_state,
    well_populations,
)
from .semiclassics import (
    DigaPrediction,
    diga_circle_expectations,
    diga_effective_hamiltonian,
    diga_hop_probability,
    instanton_profile,
    instanton_quantities,
)
from .detfunc import GyConfig, fd_determinant_oracle, gy_ratio_even_primed, gy_ratio_odd
from .labframe import (
    DriveSet,
    ExperimentalMap,
    LevelGraph,
    design_drives,
    map_experimental_params,
    rwa_reduce,
    simulate_lab_frame,
    synthetic_level_graph,
)
from .analysis import FitResult, convergence_suite, fit_tunneling_probability
