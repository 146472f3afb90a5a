"""Molecular graph core: SMILES parsing/writing and ring perception."""

from .canon import WriterToken, canonical_ranks, canonical_tokens, write_smiles
from .graph import (
    AROMATIC,
    DOUBLE,
    SINGLE,
    TRIPLE,
    Atom,
    Bond,
    MolError,
    MolGraph,
    RingInfo,
    SmilesSyntaxError,
    ValenceError,
)
from .isomorphism import isomorphic
from .parser import parse_components, parse_smiles
from .rings import perceive_rings

__all__ = [
    "AROMATIC",
    "DOUBLE",
    "SINGLE",
    "TRIPLE",
    "Atom",
    "Bond",
    "MolError",
    "MolGraph",
    "RingInfo",
    "SmilesSyntaxError",
    "ValenceError",
    "WriterToken",
    "canonical_ranks",
    "canonical_tokens",
    "isomorphic",
    "parse_components",
    "parse_smiles",
    "perceive_rings",
    "write_smiles",
]
