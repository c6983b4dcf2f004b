"""
affinedim - dimension theory of affine iterated function systems

Computes entropies, Lyapunov spectra, pressures and Lyapunov dimensions of
self-affine measures and checks them against sampled local dimensions.
"""

__version__ = "1.0.0"
__author__ = "Ryan Sweigart"

# Make key classes available at package level
try:
    from .src.ifs import AffineIFS
    from .src.symbolic_measure import MeasureSpec, entropy
    from .src.spectrum import lyapunov_dimension, exponents_exact_diagonal, exponents_monte_carlo
    from .src.pressure import pressure_curve, pressure_zero, s_infinity
    from .src.spec_parser import SpecParser, SystemSpec
    from .src.report import RunReport
except ImportError:
    # During installation, src modules might not be available yet
    pass
