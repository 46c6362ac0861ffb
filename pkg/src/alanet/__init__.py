"""Language-guided single-image reflection separation on a small numpy autodiff core."""
from .config import LossWeights, NetworkConfig
from .errors import ConfigurationError, DimensionError, ParseError, UnsupportedKernelError
from .network import ALANet, LayerPrediction, alanet_forward
from .tensor import Parameter, Tensor, no_grad

__version__ = "0.1.0"

__all__ = [
    "ALANet", "ConfigurationError", "DimensionError", "LayerPrediction", "LossWeights", "NetworkConfig",
    "Parameter", "ParseError", "Tensor", "UnsupportedKernelError", "alanet_forward", "no_grad",
]
