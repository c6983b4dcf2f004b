"""
affinedim - dimension theory of affine iterated function systems

Lyapunov spectra, measure and system pressure, Lyapunov dimension and
sampled local dimensions of self-affine measures over finite and countable
alphabets.
"""

__version__ = "1.0.0"
