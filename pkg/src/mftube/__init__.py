"""Multifractal tube formulas for self-similar measures.

Computes exponent functions (beta, alpha, gamma), numeric and symbolic
multifractal Minkowski volumes and contents, multifractal zeta-function
poles and residues, and cross-validates direct computations against
renewal-theory asymptotics and residue-based explicit formulas.
"""

from mftube._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"
__all__ = ["kernel_backend", "__version__"]
