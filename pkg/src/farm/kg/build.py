"""Functional-group knowledge graph emission.

Entities are FG types: one per distinct (label, core structure) pair seen
in the corpus, identified by the bare label when the label maps to a
single core and by ``label@core`` otherwise.  Twelve relation families
describe composition (atoms, bonds, rings, contained groups), substituent
count, hydrogen-bonding roles and discretized logP / water solubility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from typing import Iterable

from ..fg.detect import contained_groups
from ..mol.graph import AROMATIC, BOND_NAME, MolGraph
from ..mol.parser import parse_smiles
from .descriptors import SolubilityModel, compute_descriptors

RELATIONS = (
    "contain_atom",
    "contain_bond",
    "functional_group",
    "contain_ring_[n]",
    "contain_aromatic_ring_[n]",
    "num_substitutes",
    "is_hydrogen_bond_donor",
    "is_hydrogen_bond_acceptor",
    "logp",
    "water_solubility",
    "core_smiles",
)


@dataclass(frozen=True)
class Triple:
    head: str
    relation: str
    tail: str


@dataclass(frozen=True)
class FGPrototype:
    """Type-level FG record: first-seen core and substituent count."""

    label: str
    core_smiles: str
    n_substituents: int


_DONORS: frozenset[str] | None = None
_ACCEPTORS: frozenset[str] | None = None


def _load_list(name: str) -> frozenset[str]:
    text = resources.files("farm.kg").joinpath(f"data/{name}").read_text("utf-8")
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


def donor_groups() -> frozenset[str]:
    global _DONORS
    if _DONORS is None:
        _DONORS = _load_list("hbond_donors.txt")
    return _DONORS


def acceptor_groups() -> frozenset[str]:
    global _ACCEPTORS
    if _ACCEPTORS is None:
        _ACCEPTORS = _load_list("hbond_acceptors.txt")
    return _ACCEPTORS


def round_half_away(x: float) -> int:
    """Round to nearest integer, ties away from zero."""
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def collect_prototypes(graphs_with_mols) -> list[FGPrototype]:
    """Deduplicate (label, core) pairs across fragmented molecules.

    ``graphs_with_mols`` yields (MolGraph, FGGraph); the first instance
    seen defines the prototype's substituent count (attachment bonds
    leaving the instance).
    """
    seen: dict[tuple[str, str], FGPrototype] = {}
    for mol, graph in graphs_with_mols:
        for node in graph.nodes:
            key = (node.label, node.core_smiles)
            if key in seen:
                continue
            crossing = sum(
                1
                for b in mol.bonds
                if (b.a in node.atom_indices) != (b.b in node.atom_indices)
            )
            seen[key] = FGPrototype(node.label, node.core_smiles, crossing)
    return list(seen.values())


def entity_ids(prototypes: Iterable[FGPrototype]) -> dict[tuple[str, str], str]:
    """Assign entity ids: bare label when unambiguous, label@core otherwise."""
    protos = list(prototypes)
    cores_per_label: dict[str, set[str]] = {}
    for p in protos:
        cores_per_label.setdefault(p.label, set()).add(p.core_smiles)
    ids = {}
    for p in protos:
        if len(cores_per_label[p.label]) == 1:
            ids[(p.label, p.core_smiles)] = p.label
        else:
            ids[(p.label, p.core_smiles)] = f"{p.label}@{p.core_smiles}"
    return ids


def _ring_relations(core: MolGraph) -> list[tuple[str, str]]:
    out = []
    seen = set()
    bond_order = {b.key: b.order for b in core.bonds}
    for ring in core.rings.rings:
        n = len(ring)
        aromatic = all(
            bond_order[
                (ring[i], ring[(i + 1) % n])
                if ring[i] < ring[(i + 1) % n]
                else (ring[(i + 1) % n], ring[i])
            ]
            == AROMATIC
            for i in range(n)
        )
        rel = f"contain_aromatic_ring_{n}" if aromatic else f"contain_ring_{n}"
        if rel not in seen:
            seen.add(rel)
            out.append((rel, "true"))
    return out


def build_kg(
    prototypes: Iterable[FGPrototype],
    solubility_model: SolubilityModel | None = None,
) -> list[Triple]:
    """Emit the knowledge-graph triples for a set of FG prototypes."""
    protos = sorted(set(prototypes), key=lambda p: (p.label, p.core_smiles))
    ids = entity_ids(protos)
    model = solubility_model or SolubilityModel()
    donors = donor_groups()
    acceptors = acceptor_groups()

    triples: list[Triple] = []
    for proto in protos:
        head = ids[(proto.label, proto.core_smiles)]
        core = parse_smiles(proto.core_smiles)
        if isinstance(core, list):  # cores are connected by construction
            core = core[0]

        is_ring = proto.label.startswith("ring_")
        contained = contained_groups(core) if is_ring else []
        for name in contained:
            triples.append(Triple(head, "functional_group", name))

        elements = sorted({a.element for a in core.atoms})
        if any(a.total_h > 0 for a in core.atoms):
            elements.append("H")
        for elem in elements:
            triples.append(Triple(head, "contain_atom", elem))

        for bond_name in sorted({BOND_NAME[b.order] for b in core.bonds}):
            triples.append(Triple(head, "contain_bond", bond_name))

        for rel, tail in _ring_relations(core):
            triples.append(Triple(head, rel, tail))

        triples.append(Triple(head, "num_substitutes", str(proto.n_substituents)))

        if is_ring:
            donor = any(g in donors for g in contained)
            acceptor = any(g in acceptors for g in contained)
        else:
            donor = proto.label in donors
            acceptor = proto.label in acceptors
        triples.append(
            Triple(head, "is_hydrogen_bond_donor", "true" if donor else "false")
        )
        triples.append(
            Triple(head, "is_hydrogen_bond_acceptor", "true" if acceptor else "false")
        )

        desc = compute_descriptors(core, model)
        triples.append(Triple(head, "logp", str(round_half_away(desc.logp))))
        triples.append(
            Triple(head, "water_solubility", str(round_half_away(desc.solubility)))
        )
        triples.append(Triple(head, "core_smiles", proto.core_smiles))
    return triples


def write_triples(path, triples: Iterable[Triple]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in triples:
            fh.write(f"{t.head}\t{t.relation}\t{t.tail}\n")


def read_triples(path) -> list[Triple]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line:
                head, relation, tail = line.split("\t")
                out.append(Triple(head, relation, tail))
    return out
