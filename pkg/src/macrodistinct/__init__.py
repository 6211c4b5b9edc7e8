"""Distinguishability of quantum states under inaccurate measurements.

Coarse-grained (finite-resolution) and lossy (finite-efficiency) measurement
models, the entangled and superposed states built from two components, the
dephasing and loss channels acting on them, and numerical checks of the
bounds tying surviving entanglement to what those measurements can resolve.
"""

from .bounds import (
    BoundReport,
    certifiability_distance,
    control_precision_equivalence,
    loss_fragility_check,
    noise_fragility_check,
    povm_fidelity_chain,
    which_path_analysis,
    which_path_bound,
)
from .config import Tolerances, tolerances
from .decoherence import DephasingSpec, PointerDilation, apply_channel, channel_on_entangled, dephase, pointer_dilation_apply
from .distinctness import (
    NoiseKernel,
    Observable,
    OutcomeDistribution,
    classical_trace_distance,
    coarse_distribution,
    guessing_probability,
    ideal_distribution,
    max_tolerable_noise,
    noisy_guessing_probability,
)
from .loss import LossDilation, apply_loss, loss_guessing_probability, min_sensitivity
from .qcore import (
    ChannelDilation,
    DensityOperator,
    PovmElementSet,
    SpaceLayout,
    StateVector,
    fidelity,
    helstrom_povm,
    negativity,
    partial_trace,
    partial_transpose,
    tensor,
    trace_distance,
)
from .states import StateFamilySpec, make_components, make_entangled, make_mixture, make_superposition

__version__ = "0.1.0"
