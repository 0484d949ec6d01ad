"""Numerical study of the large bulk viscosity limit of compressible MHD."""
__version__ = "0.1.0"
