"""fiolab: matrix elements of quantized maps on the torus and Hecke operators on the sphere."""

__version__ = "0.1.0"

from .classical import IntegerSymplecticMap, TorusPoint
from .errors import FiolabError
from .matrix_elements import EigenBasis
from .numerics import eig_unitary, eigh_hermitian
from .sphere import HeckeSpec, RotationSpec, SphereLevel
from .torus import TorusHilbert, catmap_op, coherent_state, translation_op, weyl_quantize

__all__ = [
    "EigenBasis",
    "FiolabError",
    "HeckeSpec",
    "IntegerSymplecticMap",
    "RotationSpec",
    "SphereLevel",
    "TorusHilbert",
    "TorusPoint",
    "catmap_op",
    "coherent_state",
    "eig_unitary",
    "eigh_hermitian",
    "translation_op",
    "weyl_quantize",
]
