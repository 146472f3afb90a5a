"""Functional-group detection.

Three claiming stages, each leaving claimed atoms untouched:

1. ring systems — every fused SSSR system becomes one instance named by
   :func:`name_ring_system`, together with exocyclic atoms double-bonded
   to its ring atoms (keeps quinone-type oxygens with their ring);
2. rule table — patterns matched in descending priority so larger groups
   win over their subsets (carboxyl over ketone + hydroxyl, and so on);
3. defaults — leftover carbons become alkyl/alkene/alkyne by bond order,
   anything else ``elem_<symbol>``.

Every atom ends up in exactly one instance, and atoms are scanned in
canonical-rank order so the result is invariant under input atom
reordering.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from ..mol.canon import canonical_ranks, write_smiles
from ..mol.graph import DOUBLE, MolGraph, TRIPLE
from .pattern import AtomSpec, match_at, parse_pattern


@dataclass(frozen=True)
class FGRule:
    name: str
    priority: int
    pattern: AtomSpec
    root_element: frozenset[str] | None


@dataclass(frozen=True)
class FGInstance:
    label: str
    atom_indices: frozenset[int]
    # Filled on demand (tokenization never needs it); see core_structure.
    core_smiles: str | None = None


@dataclass
class FGAssignment:
    instances: list[FGInstance]
    atom_to_instance: list[int]

    def labels(self) -> list[str]:
        return [inst.label for inst in self.instances]


_RULES: list[FGRule] | None = None


def load_rules() -> list[FGRule]:
    """Rule table from the bundled asset, sorted for matching."""
    global _RULES
    if _RULES is None:
        text = (
            resources.files("farm.fg").joinpath("data/fg_rules.tsv").read_text("utf-8")
        )
        rules = []
        names = set()
        for line in text.splitlines():
            line = line.rstrip()
            if not line or line.startswith("#"):
                continue
            name, priority, pattern = line.split("\t")
            if name in names:
                raise ValueError(f"duplicate rule name {name!r}")
            names.add(name)
            spec = parse_pattern(pattern)
            rules.append(FGRule(name, int(priority), spec, spec.elements))
        rules.sort(key=lambda r: (-r.priority, r.name))
        _RULES = rules
    return _RULES


def name_ring_system(mol: MolGraph, system: tuple[int, ...]) -> str:
    """``ring_`` + ring sizes of the fused system, smallest first."""
    sizes = sorted(len(mol.rings.rings[i]) for i in system)
    return "ring_" + "_".join(str(s) for s in sizes)


def core_structure(mol: MolGraph, atom_indices: frozenset[int]) -> str:
    """Canonical SMILES of the induced subgraph (substituents removed)."""
    return write_smiles(mol.induced_subgraph(atom_indices))


def detect(mol: MolGraph) -> FGAssignment:
    """Assign every atom to exactly one functional-group instance."""
    n = len(mol)
    ranks = canonical_ranks(mol)
    scan_order = sorted(range(n), key=lambda i: ranks[i])
    claimed = [False] * n
    raw: list[tuple[str, frozenset[int]]] = []

    # Stage 1: ring systems, plus exocyclic double-bonded atoms.
    ring_info = mol.rings
    ring_atoms = ring_info.ring_atoms
    for system in ring_info.fused_systems:
        members: set[int] = set()
        for ring_idx in system:
            members.update(ring_info.rings[ring_idx])
        for atom in sorted(members):
            for nbr, order in mol.adjacency[atom]:
                if nbr not in ring_atoms and order == DOUBLE and not claimed[nbr]:
                    members.add(nbr)
        for atom in members:
            claimed[atom] = True
        raw.append((name_ring_system(mol, system), frozenset(members)))

    # Stage 2: rule table, larger groups first.
    for rule in load_rules():
        elements = rule.root_element
        for atom in scan_order:
            if claimed[atom]:
                continue
            if elements is not None and mol.atoms[atom].element not in elements:
                continue
            members = match_at(mol, atom, rule.pattern, ring_atoms, claimed, ranks)
            if members is not None:
                for m in members:
                    claimed[m] = True
                raw.append((rule.name, frozenset(members)))

    # Stage 3: per-atom defaults.
    for atom in scan_order:
        if claimed[atom]:
            continue
        a = mol.atoms[atom]
        if a.element == "C":
            orders = mol.bond_orders(atom)
            if TRIPLE in orders:
                label = "alkyne"
            elif DOUBLE in orders:
                label = "alkene"
            else:
                label = "alkyl"
        else:
            label = f"elem_{a.element}"
        claimed[atom] = True
        raw.append((label, frozenset({atom})))

    raw.sort(key=lambda item: min(ranks[i] for i in item[1]))
    instances = [FGInstance(label, atoms) for label, atoms in raw]
    atom_to_instance = [-1] * n
    for ordinal, inst in enumerate(instances):
        for atom in inst.atom_indices:
            atom_to_instance[atom] = ordinal
    return FGAssignment(instances, atom_to_instance)


def contained_groups(core: MolGraph) -> list[str]:
    """Named groups present in a core structure, ring tests relaxed.

    Used by the knowledge-graph builder to describe what a ring system
    contains; ring membership and prior claims are ignored so groups
    embedded in rings (quinone carbonyls, ring esters) are still seen.
    """
    names: set[str] = set()
    ranks = canonical_ranks(core)
    no_rings: frozenset[int] = frozenset()
    for rule in load_rules():
        if rule.priority <= 40:  # skip halogen/carbon shape fallbacks
            continue
        spec = _relax_ring_tests(rule.pattern)
        claimed = [False] * len(core)
        for atom in range(len(core)):
            if match_at(core, atom, spec, no_rings, claimed, ranks) is not None:
                names.add(rule.name)
                break
    return sorted(names)


def _relax_ring_tests(spec: AtomSpec) -> AtomSpec:
    relaxed = AtomSpec(
        elements=spec.elements,
        charge=spec.charge,
        h_range=spec.h_range,
        d_range=spec.d_range,
        in_ring=None,
        bond_counts=dict(spec.bond_counts),
        is_member=spec.is_member,
        branches=[(b, _relax_ring_tests(c)) for b, c in spec.branches],
    )
    return relaxed
