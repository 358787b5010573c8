"""A small reverse-mode autodiff engine over numpy arrays."""
from . import functional
from .gradcheck import GradCheckResult, grad_check
from .nn import Module
from .tensor import Parameter, ShapeError, Tensor, no_grad

__all__ = ["functional", "grad_check", "GradCheckResult", "Module", "Parameter",
           "ShapeError", "Tensor", "no_grad"]
