"""Non-equilibrium steady states and output spectra of a driven optomechanical cavity."""

__version__ = "0.1.0"
