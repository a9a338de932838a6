"""Numerical core routines for the time-stepping loops.

Modules
-------
recursion
    Cython implementation of the batched affine recursion.
recursion_py
    Pure-Python (numpy) implementation with identical semantics.

The compiled module is selected at import by :mod:`bosefeedback.kernels`.
"""
