"""Simulation and analysis of a cascaded chi(2) photon-pair source in a QPM waveguide."""

__version__ = "0.1.0"
