"""Classifier for timelike conformal fields on compact Lorentzian 3-manifolds."""

__version__ = "0.1.0"
