"""Functional-group graph: FG instances as nodes, inter-group bonds as edges.

Maximal runs of adjacent same-label chain-carbon defaults (alkyl, alkene,
alkyne) are merged into a single node so a hexyl tail is one fragment,
not six.  Parallel bonds between the same pair of groups collapse to one
edge and bond order is not kept.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .fg.detect import FGAssignment, core_structure
from .mol.canon import canonical_ranks
from .mol.graph import MolGraph

MERGEABLE_DEFAULTS = {"alkyl", "alkene", "alkyne"}


@dataclass
class FGNode:
    label: str
    core_smiles: str
    atom_indices: frozenset[int]
    kg_entity_id: str | None = None


@dataclass
class FGGraph:
    nodes: list[FGNode]
    edges: list[tuple[int, int]]
    source_smiles: str

    def neighbors(self, i: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def labels(self) -> list[str]:
        return [n.label for n in self.nodes]

    def to_json(self) -> str:
        return json.dumps(
            {
                "smiles": self.source_smiles,
                "nodes": [{"label": n.label, "core": n.core_smiles} for n in self.nodes],
                "edges": [list(e) for e in self.edges],
            },
            separators=(",", ":"),
        )

    @staticmethod
    def from_json(line: str) -> "FGGraph":
        d = json.loads(line)
        nodes = [FGNode(n["label"], n["core"], frozenset()) for n in d["nodes"]]
        edges = [(int(a), int(b)) for a, b in d["edges"]]
        return FGGraph(nodes, edges, d["smiles"])


def fragment(mol: MolGraph, assignment: FGAssignment) -> FGGraph:
    """Coarsen ``mol`` to its functional-group graph."""
    from .mol.canon import write_smiles

    n_inst = len(assignment.instances)
    # Union-find over instances: merge adjacent equal-label chain defaults.
    parent = list(range(n_inst))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for bond in mol.bonds:
        ia = assignment.atom_to_instance[bond.a]
        ib = assignment.atom_to_instance[bond.b]
        if ia == ib:
            continue
        la = assignment.instances[ia].label
        lb = assignment.instances[ib].label
        if la == lb and la in MERGEABLE_DEFAULTS:
            ra, rb = find(ia), find(ib)
            if ra != rb:
                parent[ra] = rb

    groups: dict[int, list[int]] = {}
    for i in range(n_inst):
        groups.setdefault(find(i), []).append(i)

    ranks = canonical_ranks(mol)
    merged: list[tuple[str, frozenset[int]]] = []
    for members in groups.values():
        atoms = frozenset().union(
            *(assignment.instances[i].atom_indices for i in members)
        )
        merged.append((assignment.instances[members[0]].label, atoms))
    merged.sort(key=lambda item: min(ranks[i] for i in item[1]))

    node_of_atom: dict[int, int] = {}
    nodes: list[FGNode] = []
    for label, atoms in merged:
        idx = len(nodes)
        nodes.append(FGNode(label, core_structure(mol, atoms), atoms))
        for a in atoms:
            node_of_atom[a] = idx

    edges: set[tuple[int, int]] = set()
    for bond in mol.bonds:
        na, nb = node_of_atom[bond.a], node_of_atom[bond.b]
        if na != nb:
            edges.add((na, nb) if na < nb else (nb, na))

    return FGGraph(nodes, sorted(edges), write_smiles(mol))
