"""qvelab: measurement-powered quantum engines via the vacuum bending function."""

from .closedform import ClosedFormModel, ClosedFormSource, closed_form, ellint_e
from .cyclesim import CycleStats, run_cycles, sample_cycle
from .eigensolve import GroundSolution, SpectralData, full_spectrum, gauge_fix, ground_state
from .model import (
    OperatorPair,
    SpinChainSpec,
    build_spin_operators,
    couplings_from_triples,
    fixture_10q,
    load_spec,
    random_couplings,
    single_qubit_x,
    two_qubit_pair,
)
from .qvbf import OperatorSource, QvbfPoint, TableSource, delta_prime_hf, derivatives_fd
from .thermo import (
    ThermoPoint,
    check_bounds,
    critical_coupling,
    efficiency,
    evaluate_point,
    heat,
    weak_expansion,
    work,
    work_integral,
)

__version__ = "0.1.0"
