"""isinglab: exact and sampled finite-volume machinery for semi-infinite and
random-field Ising models."""

__version__ = "0.1.0"
