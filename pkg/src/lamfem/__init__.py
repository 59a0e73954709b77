"""Laminated element technique for weak discontinuities on non-conforming meshes."""

__version__ = "0.1.0"
