"""Phase turbulence toolkit for the 1D periodic complex Ginzburg-Landau equation."""
__version__ = "0.1.0"
