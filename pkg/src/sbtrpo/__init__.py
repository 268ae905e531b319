"""Safety-biased trust region policy optimisation for zero-cost CMDPs."""

from .config import TrainConfig, cpo_mode, parse_config, write_config
from .errors import (
    ConfigError,
    DegenerateInstance,
    InfeasibleError,
    InputError,
    NumericalError,
    RunError,
    SBTRPOError,
    StateError,
)
from .policy import Head, PolicySpec, policy_init
from .trainer import RunLog, StepReport, angle_diagnostics, sbtrpo_epoch, train
from .trust import TrustStepConfig, analytic_qp, conjugate_gradient, line_search, safety_bias_mix, trust_region_step

__version__ = "0.1.0"
