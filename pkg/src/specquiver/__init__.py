"""Quiver representations on finite prespectral triples, Dirac operators and lattice traces."""

__version__ = "0.1.0"

from .errors import ResourceLimitError, ValidationError
from .quiver import (
    LatticeSpec,
    Path,
    Quiver,
    add_self_loops,
    augment,
    delete_self_loops,
    enumerate_loops,
    insert_self_loops,
    make_shifted_torus,
    make_torus,
    plaquettes,
)

__all__ = [
    "__version__",
    "LatticeSpec",
    "Path",
    "Quiver",
    "ResourceLimitError",
    "ValidationError",
    "add_self_loops",
    "augment",
    "delete_self_loops",
    "enumerate_loops",
    "insert_self_loops",
    "make_shifted_torus",
    "make_torus",
    "plaquettes",
]
