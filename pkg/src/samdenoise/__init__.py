"""Denoising toolkit for scanning acoustic microscopy volumes.

Importing the package is cheap; the compiled kernels load with
:mod:`samdenoise.collaborative` and :mod:`samdenoise.filters`.
"""

__version__ = "0.1.0"
