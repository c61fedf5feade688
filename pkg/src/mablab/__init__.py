"""Numerical laboratory for the two-level (E x epsilon) vibronic model:
adiabatic spin dynamics under prescribed pseudorotation, autocorrelation
averaging, open-path geometric phases, holonomy line integrals, and exact
block-diagonalized vibronic spectra.  Units: hbar = m = omega = 1."""

from .model import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    AdiabaticStates,
    EffectiveFields,
    ModelParams,
    SingularityError,
    SurfaceSample,
    adiabatic_eigensystem,
    adiabaticity_margin,
    bo_regime_margin,
    effective_fields,
    electronic_hamiltonian,
    potential_surfaces,
    rotated_pauli_frame,
    rotating_frame_residual,
    spin_rotation,
    surface_energies,
)
from .dynamics import (
    AutocorrelationTrace,
    PseudorotationSchedule,
    RotationTrajectory,
    SpinTrajectory,
    StepSizeError,
    adiabatic_average,
    autocorrelation_from_rotation,
    averaged_closed_form,
    bloch_vector,
    geometric_phase_from_tdse,
    integrate_model_ode,
    propagate_heisenberg,
    propagate_tdse,
    relative_angle,
)
from .berry import (
    BerryPhaseResult,
    GaugeSpec,
    HolonomyResult,
    OrthogonalStatesError,
    PhaseUndefinedError,
    PlanarPath,
    bo_state,
    detect_phase_jumps,
    holonomy_line_integral,
    load_path_csv,
    mab_phase_factor,
    noncyclic_berry_phase,
    pancharatnam_phase,
)
from .spectrum import (
    BOLevel,
    BOSpectrum,
    JBlock,
    RadialGrid,
    SpectrumComparison,
    SpectrumResult,
    bo_angular_multiset_equal,
    bo_spectrum,
    build_j_block,
    compare_spectra,
    default_grid,
    default_j_list,
    exact_spectrum,
    solve_block,
)
from .util import wrap_angle

__version__ = "0.1.0"
