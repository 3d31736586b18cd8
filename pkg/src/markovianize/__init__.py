"""Process-tensor non-Markovianity: measures, ensembles and design bounds."""
__version__ = "0.1.0"
