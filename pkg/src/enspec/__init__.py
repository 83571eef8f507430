"""Energy sampling with super-resolution for diagonalizable Hamiltonians."""
from .circuit import (CircuitIR, Gate, MarginalSpec, circuit_from_json, circuit_to_json,
                      marginal_probability, output_distribution, random_circuit, simulate)
from .errors import CertificationError, EnspecError, ResourceError, ValidationError
from .fastforward import FFParams, build_ff_unitary, verify_ff
from .fk import (ClockRegister, FKOperator, build_fk, build_hinit, build_hpen, build_hprop,
                 certify_ground_space, geometric_lemma_bound, history_state)
from .hamiltonian import (DiagonalizableHamiltonian, EigenFunction, build_h2d, rescale_to_unit,
                          spectral_gap, spectral_projection, u_weights, v_weights)
from .iqp import IqpGraph, LatticeSpec, ProductInput, build_input_state, build_iqp, build_u2d, conjugate_z
from .linalg import (DiscreteDistribution, HermitianOperator, StateVector, eigendecompose,
                     l1_distance, numeric_policy, total_variation)
from .pauli import PauliSum
from .reductions import (PolyBoxParams, algorithm1_distribution, anticoncentration_stats,
                         hoeffding_samples, lemma1_bounds, polybox_estimate, run_theorem2,
                         stockmeyer_error)
from .sampling import (EnergyDistribution, EnergyGrid, SamplerParams, check_resolution_contract,
                       exact_energy_distribution, perturb_distribution, sample_theorem1,
                       theorem1_distribution)

__version__ = "0.1.0"
