from .adam import AdamState, adam_step
from .autodiff import Var, backward as backprop, grad_of
from .mlp import (MlpConfig, ParamTape, ParamVector, TimeJet, backward, forward,
                  forward_with_dt, init_params, run_layers)

__all__ = [
    "AdamState", "adam_step", "Var", "backprop", "grad_of", "MlpConfig", "ParamTape",
    "ParamVector", "TimeJet", "backward", "forward", "forward_with_dt", "init_params", "run_layers",
]
