"""Molecular graph data model.

Atoms, bonds and rings live in a MolGraph.  Instances are treated as
immutable after construction: every operation in the package is a pure
function of its inputs, so graphs can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# Bond orders.
SINGLE = 1
DOUBLE = 2
TRIPLE = 3
AROMATIC = 4

BOND_SYMBOL = {SINGLE: "-", DOUBLE: "=", TRIPLE: "#", AROMATIC: ":"}
BOND_NAME = {SINGLE: "single", DOUBLE: "double", TRIPLE: "triple", AROMATIC: "aromatic"}

# Elements that may be written without brackets, and the subset that may
# appear lowercase (aromatic).
ORGANIC_SUBSET = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
AROMATIC_ELEMENTS = {"B", "C", "N", "O", "P", "S", "Se", "As"}

# Default valences used to fill implicit hydrogens on bare organic-subset
# atoms.  Multi-valent elements list alternatives in increasing order.
DEFAULT_VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}


class MolError(Exception):
    """Base class for molecule-level errors."""


class SmilesSyntaxError(MolError):
    """Raised on malformed SMILES input; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (position {position})")
        self.position = position


class ValenceError(MolError):
    """Raised in strict mode when bond orders exceed allowed valence."""


@dataclass(frozen=True)
class Atom:
    """One atom: element symbol, charge, aromatic flag and hydrogen counts.

    ``explicit_h`` is the bracket-specified H count (bracket atoms only);
    ``implicit_h`` is derived from standard valence for bare atoms.
    """

    element: str
    index: int
    formal_charge: int = 0
    is_aromatic: bool = False
    explicit_h: int = 0
    implicit_h: int = 0
    bracketed: bool = False

    @property
    def total_h(self) -> int:
        return self.explicit_h + self.implicit_h


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: int

    def other(self, idx: int) -> int:
        return self.b if idx == self.a else self.a

    @property
    def key(self) -> tuple[int, int]:
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)


@dataclass
class RingInfo:
    """SSSR cycles plus the transitive grouping of rings sharing atoms."""

    rings: list[tuple[int, ...]] = field(default_factory=list)
    fused_systems: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def ring_atoms(self) -> frozenset[int]:
        out: set[int] = set()
        for ring in self.rings:
            out.update(ring)
        return frozenset(out)


class MolGraph:
    """Connected molecular graph (one SMILES component)."""

    def __init__(self, atoms: list[Atom], bonds: list[Bond]):
        self.atoms = atoms
        self.bonds = bonds
        self._adjacency: list[list[tuple[int, int]]] | None = None
        self._rings: RingInfo | None = None
        self._canon = None  # cached canonical ranks / token stream
        seen: set[tuple[int, int]] = set()
        for bond in bonds:
            if bond.a == bond.b:
                raise MolError(f"self-bond on atom {bond.a}")
            if not (0 <= bond.a < len(atoms) and 0 <= bond.b < len(atoms)):
                raise MolError(f"bond ({bond.a},{bond.b}) references missing atom")
            if bond.key in seen:
                raise MolError(f"duplicate bond between atoms {bond.a} and {bond.b}")
            seen.add(bond.key)

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per-atom list of (neighbor index, bond order) pairs."""
        if self._adjacency is None:
            adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
            for bond in self.bonds:
                adj[bond.a].append((bond.b, bond.order))
                adj[bond.b].append((bond.a, bond.order))
            self._adjacency = adj
        return self._adjacency

    def neighbors(self, idx: int) -> list[int]:
        return [n for n, _ in self.adjacency[idx]]

    def degree(self, idx: int) -> int:
        return len(self.adjacency[idx])

    def bond_between(self, a: int, b: int) -> Bond | None:
        for bond in self.bonds:
            if bond.key == ((a, b) if a < b else (b, a)):
                return bond
        return None

    def bond_orders(self, idx: int) -> list[int]:
        return [order for _, order in self.adjacency[idx]]

    @property
    def rings(self) -> RingInfo:
        if self._rings is None:
            from .rings import perceive_rings

            self._rings = perceive_rings(self)
        return self._rings

    def total_hydrogens(self) -> int:
        return sum(a.total_h for a in self.atoms)

    def induced_subgraph(self, atom_indices: set[int] | frozenset[int]) -> "MolGraph":
        """Subgraph over ``atom_indices`` with hydrogens refilled.

        Uncharged bare atoms get their implicit H recomputed from the
        remaining bonds; bracket atoms keep their stated H count.
        """
        order = sorted(atom_indices)
        remap = {old: new for new, old in enumerate(order)}
        bonds = [
            Bond(remap[b.a], remap[b.b], b.order)
            for b in self.bonds
            if b.a in atom_indices and b.b in atom_indices
        ]
        order_sum = [0] * len(order)
        arom = [False] * len(order)
        for b in bonds:
            o = 1 if b.order == AROMATIC else b.order
            order_sum[b.a] += o
            order_sum[b.b] += o
            if b.order == AROMATIC:
                arom[b.a] = arom[b.b] = True
        atoms = []
        for new, old in enumerate(order):
            a = self.atoms[old]
            if a.bracketed:
                atoms.append(
                    Atom(a.element, new, a.formal_charge, a.is_aromatic,
                         a.explicit_h, 0, True)
                )
            else:
                implicit = implicit_hydrogens(
                    a.element, order_sum[new], a.is_aromatic and arom[new]
                )
                atoms.append(
                    Atom(a.element, new, a.formal_charge,
                         a.is_aromatic and arom[new], 0, implicit, False)
                )
        return MolGraph(atoms, bonds)


def implicit_hydrogens(element: str, bond_order_sum: int, aromatic: bool) -> int:
    """Implicit H count for a bare organic-subset atom.

    Aromatic atoms contribute one extra valence unit for the delocalized
    system (so benzene carbons get one hydrogen each).
    """
    valences = DEFAULT_VALENCES.get(element)
    if valences is None:
        return 0
    used = bond_order_sum + (1 if aromatic else 0)
    for v in valences:
        if used <= v:
            return v - used
    return 0


def allowed_valence(element: str, charge: int) -> int | None:
    """Maximum plausible valence for strict-mode checking."""
    base = DEFAULT_VALENCES.get(element)
    if base is None:
        return None
    top = base[-1]
    if element in ("N", "P") and charge > 0:
        top += charge
    elif element in ("O", "S") and charge > 0:
        top += charge
    elif charge < 0:
        top = max(0, top + charge)
    return top


def connected_components(atom_count: int, bonds: list[Bond]) -> list[list[int]]:
    parent = list(range(atom_count))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for bond in bonds:
        ra, rb = find(bond.a), find(bond.b)
        if ra != rb:
            parent[ra] = rb
    groups: dict[int, list[int]] = {}
    for i in range(atom_count):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])
