"""Precision bounds for phase estimation through a lossy, noisy, dephased channel."""

from .fock import (
    Cutoff,
    DensityMatrix,
    FockOperator,
    GaussianModeParams,
    TruncationError,
    annihilation_op,
    beamsplitter_generator,
    displaced_thermal,
    hermitian_eig,
    phase_average,
    phase_average_quadrature,
    psd_sqrt,
    thermal_state,
    uhlmann_fidelity,
)
from .qfi import (
    Convention,
    Povm,
    QfiResult,
    bures_qfi,
    classical_fisher,
    converge_cutoff,
    crb_montecarlo,
    sld_qfi,
)
from .strategies import (
    ChannelParams,
    DerivedChannel,
    EntangledBasisIndex,
    case1_closed,
    case1_rho,
    case1_rho_prime,
    case2_closed,
    case2_rho,
    case3_lambda,
    case3_qfi,
    case3_qfi_fidelity,
    case3_qfi_matrix,
    case3_rho_theta,
    derive_channel,
    entangled_basis,
)
from .sweep import SweepRow, SweepSpec, emit_csv, run_sweep

__version__ = "0.1.0"
