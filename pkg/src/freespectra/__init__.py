"""Free spectrahedra, convexotonic maps and Positivstellensatz certificates."""

__version__ = "0.1.0"
