"""Discrete de Rham complexes on polytopal meshes with conforming liftings."""

from .ddr import (DdrSpace, DdrVector, discrete_d, get_space, global_d,
                  interpolate, potential)
from .lifting import LiftedForm, global_lifting, interpolate_lifted
from .mesh import MeshFamily, PolytopalMesh, build_family, load_json, save_json

__version__ = "0.1.0"

__all__ = [
    "DdrSpace", "DdrVector", "LiftedForm", "MeshFamily", "PolytopalMesh",
    "build_family", "discrete_d", "get_space", "global_d", "global_lifting",
    "interpolate", "interpolate_lifted", "load_json", "potential", "save_json",
]
