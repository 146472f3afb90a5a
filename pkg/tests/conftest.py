import random
from importlib import resources

import pytest

from farm.mol import parse_smiles
from farm.mol.graph import Atom, Bond, MolGraph


@pytest.fixture(scope="session")
def corpus_lines():
    text = resources.files("farm").joinpath("data/corpus_10k.smi").read_text("utf-8")
    return [
        line.split("\t")[0]
        for line in text.splitlines()
        if line and not line.startswith("#")
    ]


@pytest.fixture(scope="session")
def corpus_sample(corpus_lines):
    rng = random.Random(4)
    return rng.sample(corpus_lines, 300)


def permute_atoms(mol: MolGraph, perm: list[int]) -> MolGraph:
    """Relabel atoms of a molecule by the given permutation (old -> new)."""
    atoms: list[Atom | None] = [None] * len(mol)
    for old, new in enumerate(perm):
        a = mol.atoms[old]
        atoms[new] = Atom(
            a.element, new, a.formal_charge, a.is_aromatic,
            a.explicit_h, a.implicit_h, a.bracketed,
        )
    bonds = [Bond(perm[b.a], perm[b.b], b.order) for b in mol.bonds]
    return MolGraph(atoms, bonds)


@pytest.fixture
def mol_of():
    def build(smiles: str) -> MolGraph:
        mol = parse_smiles(smiles)
        assert not isinstance(mol, list), f"multi-component input {smiles}"
        return mol

    return build
