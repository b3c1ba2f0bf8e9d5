"""Compiled kernels. Built from ``.pyx`` sources by ``setup.py``."""
