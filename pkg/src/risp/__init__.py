"""RISC-V instruction-subset processor (RISP) toolchain.

Profile RV32E programs, compose single-cycle processors from pre-verified
per-instruction blocks, simulate, retarget and estimate cost.
"""

from . import isa
from .errors import RispError

__version__ = "0.1.0"
__all__ = ["isa", "RispError", "__version__"]
