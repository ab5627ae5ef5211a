"""Numerical laboratory for the low-temperature pure p-spin spherical model.

Modules:
  analytic  -- closed-form constants and free-energy functionals
  field     -- disorder sampling, Hamiltonian evaluation, derivatives
  critical  -- critical-point enumeration and Kac-Rice mean counts
  gibbs     -- Metropolis / parallel-tempering sampling and experiments
  cli       -- command-line front end
"""

from .errors import (
    PspinError,
    DomainError,
    BracketFailure,
    NoLowTempSolution,
    DimensionMismatch,
    SizeError,
    NoConvergence,
    QuadratureFailure,
    NonMonotoneSchedule,
    ValidationError,
)
from .analytic import (
    ModelParams,
    AnalyticBundle,
    constants,
    e_inf,
    e_zero,
    c_p,
    gamma_p,
    omega,
    theta,
    alpha,
    lambda_z,
    parisi_1rsb,
    band_density,
    pair_density,
    band_lipschitz,
    aux_constants,
)
from .field import (
    SpherePoint,
    Disorder,
    sample_disorder,
    random_point,
    pole,
    hamiltonian,
    hamiltonian_batch,
    frame_derivatives,
    decompose,
    conditional_field,
    interpolate,
    restrict,
)
from .critical import (
    CriticalRecord,
    CriticalCatalog,
    enumerate_critical,
    deep_minima,
    refine,
    extremal_stats,
    kac_rice_mean,
    log_kac_rice_mean,
)
from .gibbs import (
    mcmc,
    overlaps,
    overlap_histogram,
    atom_mass,
    band_mass,
    free_energy,
    geometry_experiment,
    band_fluctuation_experiment,
    temp_chaos_experiment,
    disorder_chaos_experiment,
    free_energy_centering_experiment,
)

__version__ = "0.1.0"
