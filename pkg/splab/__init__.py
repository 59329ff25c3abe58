"""splab: relative perturbation lab for empirical spectral projectors."""

__version__ = "0.3.0"
