"""Quantum-channel testers, their compilation from dilation access to channel
access, Schur-Weyl tools, isometry tomography and channel distances."""

__version__ = "0.1.0"
