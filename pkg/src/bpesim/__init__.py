"""bpesim: bipartite projected ensembles and ensemble-averaged entanglement
for monitored quantum circuits.

The stabilizer backend simulates brickwork random Clifford circuits with
probabilistic z measurements on bit-packed tableaus; the dense backend does
the same for Haar circuits at small sizes.  Both feed EAE profiles into the
scaling-analysis tools for locating and characterizing measurement-induced
phase transitions.
"""

__version__ = "0.1.0"

from .ensemble import (
    EaeProfile,
    MomentSeries,
    bpe_entropy_stabilizer,
    eae_exact_statevector,
    eae_profile,
    integrated_eae,
    moment_eae,
    surface_profiles,
)
from .circuit import CircuitConfig, TrajectoryRecord, run_trajectory, step
from .clifford2 import CliffordGate2, enumerate_clifford2, sample_clifford2
from .errors import CapacityError, ConfigError
from .haar import (
    apply_unitary2,
    measure_z_statevector,
    run_trajectory_haar,
    sample_haar_unitary4,
)
from .pauli import Gf2Matrix, PauliString, commutes, gf2_rank, multiply
from .scaling import (
    CollapseCurve,
    ScalingFit,
    collapse_dynamics,
    collapse_objective,
    fit_collapse,
    fit_dynamic_exponents,
    fit_power_law,
    surface_exponents,
)
from .tableau import Tableau, new_zero_state

__all__ = [
    "__version__",
    "CapacityError",
    "CircuitConfig",
    "CliffordGate2",
    "CollapseCurve",
    "ConfigError",
    "EaeProfile",
    "Gf2Matrix",
    "MomentSeries",
    "PauliString",
    "ScalingFit",
    "Tableau",
    "TrajectoryRecord",
    "apply_unitary2",
    "bpe_entropy_stabilizer",
    "collapse_dynamics",
    "collapse_objective",
    "commutes",
    "eae_exact_statevector",
    "eae_profile",
    "enumerate_clifford2",
    "fit_collapse",
    "fit_dynamic_exponents",
    "fit_power_law",
    "gf2_rank",
    "integrated_eae",
    "measure_z_statevector",
    "moment_eae",
    "multiply",
    "new_zero_state",
    "run_trajectory",
    "run_trajectory_haar",
    "sample_clifford2",
    "sample_haar_unitary4",
    "step",
    "surface_exponents",
    "surface_profiles",
]
