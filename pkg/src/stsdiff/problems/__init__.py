from .fd import FdProblem
from .dg import DgProblem

__all__ = ["FdProblem", "DgProblem"]
