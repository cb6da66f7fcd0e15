"""Memory-efficient experience storage for deep RL via observation quantization."""

from obsquant.quant import QuantScheme, decode, encode, make_scheme, quantize

__all__ = ["QuantScheme", "decode", "encode", "make_scheme", "quantize"]
__version__ = "0.1.0"
