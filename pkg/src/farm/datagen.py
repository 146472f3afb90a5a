"""Deterministic synthetic corpus generation.

Molecules are assembled on the graph level: a random carbon skeleton,
optional ring systems, and functional-group decorations drawn from
fragment templates covering the rule table.  Assembly respects free
valence, so every generated molecule parses.  Rendering uses a
randomized (non-canonical) traversal to exercise the parser with varied
notation; the same seed always yields the same corpus.
"""

from __future__ import annotations

import numpy as np

from .mol.graph import AROMATIC, Atom, Bond, DOUBLE, MolGraph, SINGLE, TRIPLE, implicit_hydrogens

# Fragment templates: SMILES whose FIRST atom is the attachment point.
# The attachment atom must keep a free valence after parsing.
FRAGMENTS = [
    "O",            # hydroxyl
    "OC",           # ether
    "OCC",
    "C=O",          # aldehyde root
    "C(=O)C",       # ketone
    "C(=O)O",       # carboxyl
    "C(=O)[O-]",    # carboxylate
    "C(=O)OC",      # ester
    "C(=O)N",       # amide
    "C(=O)NC",
    "N",            # primary amine
    "NC",           # secondary amine
    "N(C)C",        # tertiary amine
    "[N+](C)(C)C",  # ammonium
    "C#N",          # nitrile
    "N=O",          # nitroso
    "ON=O",         # nitrosooxy
    "[N+](=O)[O-]", # nitro
    "N=C=O",        # isocyanate
    "N=C=S",        # isothiocyanate
    "SC#N",         # thiocyanate
    "S",            # sulfhydryl
    "SC",           # sulfide
    "SSC",          # disulfide
    "S(=O)C",       # sulfinyl
    "S(=O)(=O)C",   # sulfonyl
    "S(=O)O",       # sulfino
    "S(=O)(=O)O",   # sulfonic acid
    "S(=O)(=O)OC",  # sulfonate ester
    "C(=O)S",       # carbothioic S-acid
    "C(=O)SC",      # thiolester
    "C(=S)O",       # carbothioic O-acid
    "C(=S)OC",      # thionoester
    "C(=S)S",       # carbodithioic acid
    "C(=S)SC",      # carbodithio
    "C=S",          # thial
    "C(=S)C",       # thioketone
    "P(C)C",        # phosphino
    "P(=O)(O)O",    # phosphono
    "OP(=O)(O)O",   # phosphate
    "OP(=O)(O)OC",  # phosphodiester
    "P(=O)(C)C",    # phosphoryl
    "B(O)O",        # borono
    "B(OC)OC",      # boronate
    "[Si](C)(C)C",  # trimethylsilyl
    "[Si](C)(C)OC", # silyl ether
    "F", "Cl", "Br", "I",
    "C(F)(F)F",     # trifluoromethyl
    "C(Cl)(Cl)Cl",  # trichloromethyl
    "C(F)F",        # difluoromethyl
    "C(Cl)Cl",      # dichloromethyl
    "C=C",          # alkene tail
    "C#C",          # alkyne tail
    "C=NO",         # aldoxime
    "C(C)=NO",      # ketoxime
    "C=NC",         # secondary aldimine
    "C(C)=NC",      # secondary ketimine
    "N=NC",         # azo
    "OO",           # hydroperoxy
    "OOC",          # peroxy
    "C(O)OC",       # hemiacetal
    "C(OC)OC",      # acetal
    "OC(=O)C",      # ester via oxygen
    "NC(=O)C",      # amide via nitrogen
    "OC#N",         # cyanate
    "C(=O)F",       # haloformyl
    "[N+]=[N-]",    # azide tail written from the attached nitrogen
]

# Ring templates: plain SMILES; attachment happens at any ring atom with
# a free valence slot.
RINGS = [
    "c1ccccc1",            # benzene
    "c1ccncc1",            # pyridine
    "c1ccoc1",             # furan
    "c1ccsc1",             # thiophene
    "c1cc[nH]c1",          # pyrrole
    "C1CCCCC1",            # cyclohexane
    "C1CCCC1",             # cyclopentane
    "C1CCOC1",             # THF
    "C1CCNC1",             # pyrrolidine
    "C1CCOCC1",            # THP
    "C1CCNCC1",            # piperidine
    "c1ccc2ccccc2c1",      # naphthalene
    "c1ccc2[nH]ccc2c1",    # indole
    "c1ccc2ncccc2c1",      # quinoline
    "c1ccc2occc2c1",       # benzofuran
    "c1ccc2sccc2c1",       # benzothiophene
    "C1CCC2CCCCC2C1",      # decalin
    "c1cnc2[nH]ccc2c1",    # azaindole
    "C1CC2CCC1C2",         # norbornane-like bridged system
    "c1csc2ccccc12",       # fused thiophene variant
]


class MolBuilder:
    """Mutable molecule assembly with free-valence tracking."""

    def __init__(self):
        self.elements: list[str] = []
        self.charges: list[int] = []
        self.aromatic: list[bool] = []
        self.explicit_h: list[int] = []
        self.bracketed: list[bool] = []
        self.bonds: list[tuple[int, int, int]] = []

    def add_atom(self, element, charge=0, aromatic=False, explicit_h=0, bracketed=False) -> int:
        self.elements.append(element)
        self.charges.append(charge)
        self.aromatic.append(aromatic)
        self.explicit_h.append(explicit_h)
        self.bracketed.append(bracketed)
        return len(self.elements) - 1

    def add_bond(self, a: int, b: int, order: int) -> None:
        self.bonds.append((a, b, order))

    def add_graph(self, mol: MolGraph) -> list[int]:
        offset = len(self.elements)
        for atom in mol.atoms:
            self.add_atom(
                atom.element, atom.formal_charge, atom.is_aromatic,
                atom.explicit_h, atom.bracketed,
            )
        for bond in mol.bonds:
            self.add_bond(offset + bond.a, offset + bond.b, bond.order)
        return list(range(offset, len(self.elements)))

    def order_sum(self, idx: int) -> int:
        total = 0
        for a, b, order in self.bonds:
            if idx in (a, b):
                total += 1 if order == AROMATIC else order
        return total

    def free_valence(self, idx: int) -> int:
        elem = self.elements[idx]
        caps = {"C": 4, "N": 3, "O": 2, "S": 2, "P": 3, "B": 3, "Si": 4,
                "F": 1, "Cl": 1, "Br": 1, "I": 1}
        cap = caps.get(elem, 0)
        if self.bracketed[idx]:
            return 0  # bracket atoms keep their explicit H count
        used = self.order_sum(idx) + (1 if self.aromatic[idx] else 0)
        return max(0, cap - used)

    def finalize(self) -> MolGraph:
        bonds = [Bond(a, b, order) for a, b, order in self.bonds]
        order_sum = [0] * len(self.elements)
        for bond in bonds:
            o = 1 if bond.order == AROMATIC else bond.order
            order_sum[bond.a] += o
            order_sum[bond.b] += o
        atoms = []
        for i, elem in enumerate(self.elements):
            if self.bracketed[i]:
                implicit = 0
            else:
                implicit = implicit_hydrogens(elem, order_sum[i], self.aromatic[i])
            atoms.append(
                Atom(elem, i, self.charges[i], self.aromatic[i],
                     self.explicit_h[i], implicit, self.bracketed[i])
            )
        return MolGraph(atoms, bonds)


_FRAGMENT_CACHE: dict[str, MolGraph] = {}
_RING_CACHE: dict[str, MolGraph] = {}


def _fragment_graph(smiles: str) -> MolGraph:
    if smiles not in _FRAGMENT_CACHE:
        from .mol.parser import parse_smiles

        mol = parse_smiles(smiles)
        assert not isinstance(mol, list)
        _FRAGMENT_CACHE[smiles] = mol
    return _FRAGMENT_CACHE[smiles]


def random_molecule(
    rng: np.random.Generator,
    ring_prob: float = 0.55,
    max_chain: int = 7,
    max_decor: int = 4,
) -> MolGraph:
    """One random molecule: skeleton + optional ring + decorations."""
    builder = MolBuilder()
    attach_points: list[int] = []

    if rng.random() < ring_prob:
        ring = _fragment_graph(RINGS[int(rng.integers(len(RINGS)))])
        idxs = builder.add_graph(ring)
        attach_points.extend(idxs)
    chain_len = int(rng.integers(1, max_chain))
    prev = None
    for _ in range(chain_len):
        cur = builder.add_atom("C")
        if prev is not None:
            builder.add_bond(prev, cur, SINGLE)
        attach_points.append(cur)
        prev = cur
    if attach_points and prev is not None and len(builder.elements) > chain_len:
        ring_candidates = [
            i for i in attach_points[: len(builder.elements) - chain_len]
            if builder.free_valence(i) > 0
        ]
        if ring_candidates:
            first_chain = len(builder.elements) - chain_len
            anchor = ring_candidates[int(rng.integers(len(ring_candidates)))]
            builder.add_bond(anchor, first_chain, SINGLE)

    n_decor = int(rng.integers(1, max_decor))
    for _ in range(n_decor):
        spots = [i for i in attach_points if builder.free_valence(i) > 0]
        if not spots:
            break
        spot = spots[int(rng.integers(len(spots)))]
        frag = _fragment_graph(FRAGMENTS[int(rng.integers(len(FRAGMENTS)))])
        root_free = implicit_hydrogens(
            frag.atoms[0].element,
            sum(1 if o == AROMATIC else o for o in frag.bond_orders(0)),
            frag.atoms[0].is_aromatic,
        )
        if frag.atoms[0].bracketed or root_free < 1:
            continue
        idxs = builder.add_graph(frag)
        builder.add_bond(spot, idxs[0], SINGLE)

    return builder.finalize()


def random_smiles(mol: MolGraph, rng: np.random.Generator) -> str:
    """Valid but non-canonical rendering: random root and neighbor order."""
    from .mol.canon import _emit_tokens

    n = len(mol)
    perm = rng.permutation(n)
    ranks = [int(perm[i]) for i in range(n)]
    return "".join(t.text for t in _emit_tokens(mol, ranks))


def generate_corpus(
    n: int,
    seed: int = 20240,
    ring_prob: float = 0.55,
    max_chain: int = 7,
    max_decor: int = 4,
) -> list[str]:
    """Deterministic list of n SMILES strings."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        mol = random_molecule(rng, ring_prob, max_chain, max_decor)
        out.append(random_smiles(mol, rng))
    return out


def write_corpus(path, n: int, seed: int = 20240) -> None:
    lines = generate_corpus(n, seed)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# synthetic corpus v1 n={n} seed={seed}\n")
        for i, s in enumerate(lines):
            fh.write(f"{s}\tmol{i:05d}\n")
