"""Two-time density correlations and the dynamical structure factor of a
Bose-Hubbard chain, estimated from pairs of simulated weak measurements."""

from .errors import ConfigurationError, NumericalError, SchemaError, WeakDsfError
from .evolution import Propagator
from .fockspace import (
    FockBasis,
    LatticeSpec,
    QuantumState,
    apply_number_op,
    build_basis,
    density_expectation,
)
from .hamiltonian import BoseHubbardParams, SparseHamiltonian, build_hamiltonian, ground_state
from .measurement import (
    MeasurementOutcome,
    MeasurementStrength,
    NoiseRealization,
    exact_kraus_measure,
    measurement_stream,
    sample_noise,
    weak_measure,
)
from .trajectory import (
    ProtocolConfig,
    ThreeMeasurementRecord,
    TrajectoryRecord,
    run_ensemble,
    run_three_measurement,
    run_three_measurement_ensemble,
    run_trajectory,
    time_grid,
)

__version__ = "0.1.0"
