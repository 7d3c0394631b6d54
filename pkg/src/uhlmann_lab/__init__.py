"""Mixed-state topology of a dephasing two-band lattice model.

The package computes Chern numbers of pure band structures, integrates a
band-basis dephasing master equation through a mass ramp, and extracts
Uhlmann phases, holonomy spectra and their windings from the resulting
mixed states. `runner` wires these into reproducible experiments behind the
`uhlmann-lab` command line entry point.
"""

from .critical import (
    CriticalProfile,
    critical_holonomy,
    d_planar_angle,
    delta_phi,
    lz_profile,
    planar_angle,
    quantized_uhlmann_phase,
    theta0,
)
from .errors import (
    AmbiguousWinding,
    ConfigError,
    CriticalParameter,
    DegeneratePoint,
    GaplessSpectrum,
    IntegratorDiverged,
    MixedStateInput,
    SingularDenominator,
    UhlmannLabError,
    UndefinedAngle,
    UndefinedPhase,
    UnsupportedMultiCrossing,
    VanishingOverlap,
    ZeroTrace,
)
from .evolution import (
    DephasingConfig,
    IntegratorConfig,
    StateField,
    Trajectory,
    band_populations,
    default_dt,
    dephased_closed_form,
    dephased_field,
    dephased_projection,
    evolve,
    ground_state_field,
    instantaneous_dephasing_operator,
    master_rhs,
)
from .geometry import (
    HolonomyResult,
    LoopField,
    SpectralFlow,
    berry_phase_loop,
    berry_phase_profile,
    chern_number,
    field_loops,
    phase_winding,
    pure_state_vectors,
    spectral_flow,
    spectrum_index,
    sqrt_psd_2x2,
    uhlmann_holonomy,
    uhlmann_number,
)
from .model import (
    EigenSystem,
    ModelParams,
    MomentumGrid,
    MomentumPoint,
    bloch_vector,
    eigensystem,
    ground_state_density,
    hamiltonian,
    hamiltonian_chern,
    momentum_grid,
)
from .ramp import (
    CriticalCrossing,
    RampProtocol,
    critical_crossings,
    lz_probability,
    m_of_t,
    r_of_k,
    single_crossing,
)
from .runner import (
    EXPERIMENTS,
    ExperimentConfig,
    ExperimentReport,
    build_config,
    load_config_file,
    run_custom,
    run_experiment,
    run_fig1,
    run_fig2,
    run_fig3,
    run_fig4,
    run_phase_diagram,
    run_series,
)

__version__ = "0.1.0"
