from . import autodiff
from .autodiff import (
    Var,
    backward,
    gaussian_nll,
    infonce_loss,
    kl_diag_gaussian,
    reparam_sample,
)
from .checkpoint import load_checkpoint, save_checkpoint, write_curve_csv
from .gradcheck import finite_diff_check
from .mlp import (
    GradTape,
    MlpSpec,
    ParamStore,
    init_mlp_params,
    mlp_eval,
    mlp_eval_grad,
    mlp_forward,
)
from .optim import AdamState, adam_step

__all__ = [
    "autodiff", "Var", "backward",
    "gaussian_nll", "kl_diag_gaussian", "reparam_sample", "infonce_loss",
    "MlpSpec", "ParamStore", "GradTape", "init_mlp_params",
    "mlp_forward", "mlp_eval", "mlp_eval_grad",
    "AdamState", "adam_step", "finite_diff_check",
    "save_checkpoint", "load_checkpoint", "write_curve_csv",
]
