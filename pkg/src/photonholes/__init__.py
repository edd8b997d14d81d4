"""Two-photon absorption of weak coherent light by three-level atoms.

Simulates how absorption digs "entangled photon holes" into the
two-photon amplitude, and analyses the result with coincidence
measurements, a semiclassical comparator and a Franson interferometer.
"""

__version__ = "0.1.0"

from .model import IntegratorSettings, QuantumState, SimConfig, initial_state, validate_config  # noqa: E402
from .propagate import Trajectory, run, run_chain, run_ring  # noqa: E402

__all__ = [
    "IntegratorSettings", "QuantumState", "SimConfig", "Trajectory",
    "initial_state", "run", "run_chain", "run_ring", "validate_config", "__version__",
]
