"""Pattern expressions for functional-group rules.

The rule table describes each group as a small anchored pattern, e.g.::

    [C;c0;D2..3;H0..1;R0](=[O;c0;D1])(-[O;c0;D1;H1])     carboxyl

An atom spec is a bracketed, ``;``-separated list of tests, optionally
followed by branch specs in parentheses.  The pattern root and every
branch atom are group members unless the spec carries a ``?`` suffix,
which marks a context atom (must match, does not join the group).

Atom tests
    ``C``/``Cl``/``*``   element, ``|``-alternation allowed (* = any)
    ``Hn`` ``Dn``        hydrogen count / heavy degree; ``n+`` at least,
                         ``a..b`` inclusive range
    ``cK``               formal charge (c0, c1, c-1, ...)
    ``R0`` / ``R1``      not in / in a ring
    ``nsN ndN ntN naN``  count of single/double/triple/aromatic bonds,
                         same ``+``/range forms

Bond symbols in branches: ``-`` ``=`` ``#`` ``:`` and ``~`` (any).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..mol.graph import AROMATIC, DOUBLE, MolGraph, SINGLE, TRIPLE

_BOND_CODES = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC, "~": None}

_ELEMENT_RE = re.compile(r"^(\*|[A-Z][a-z]?)(\|(\*|[A-Z][a-z]?))*$")
_COUNT_RE = re.compile(r"^(H|D|ns|nd|nt|na)(\d+)(\+|\.\.(\d+))?$")
_CHARGE_RE = re.compile(r"^c(-?\d+)$")


class PatternError(ValueError):
    pass


@dataclass
class AtomSpec:
    elements: frozenset[str] | None = None  # None = any
    charge: int | None = None
    h_range: tuple[int, int] | None = None
    d_range: tuple[int, int] | None = None
    in_ring: bool | None = None
    bond_counts: dict[int, tuple[int, int]] = field(default_factory=dict)
    is_member: bool = True
    branches: list[tuple[int | None, "AtomSpec"]] = field(default_factory=list)


def _parse_range(num: str, suffix: str | None, hi: str | None) -> tuple[int, int]:
    lo = int(num)
    if suffix is None:
        return (lo, lo)
    if suffix == "+":
        return (lo, 10**9)
    return (lo, int(hi))


def parse_pattern(text: str) -> AtomSpec:
    spec, pos = _parse_atomspec(text, 0)
    if pos != len(text):
        raise PatternError(f"trailing characters at {pos} in {text!r}")
    if not spec.is_member:
        raise PatternError("pattern root must be a member atom")
    return spec


def _parse_atomspec(text: str, pos: int) -> tuple[AtomSpec, int]:
    if pos >= len(text) or text[pos] != "[":
        raise PatternError(f"expected '[' at {pos} in {text!r}")
    end = text.find("]", pos)
    if end < 0:
        raise PatternError(f"unterminated atom spec at {pos} in {text!r}")
    spec = AtomSpec()
    for test in text[pos + 1 : end].split(";"):
        test = test.strip()
        if not test:
            raise PatternError(f"empty test in {text!r}")
        if _ELEMENT_RE.match(test):
            elems = frozenset(test.split("|"))
            spec.elements = None if "*" in elems else elems
            continue
        m = _CHARGE_RE.match(test)
        if m:
            spec.charge = int(m.group(1))
            continue
        if test in ("R0", "R1"):
            spec.in_ring = test == "R1"
            continue
        m = _COUNT_RE.match(test)
        if m:
            kind, num, suffix, hi = m.group(1), m.group(2), m.group(3), m.group(4)
            rng = _parse_range(num, suffix, hi)
            if kind == "H":
                spec.h_range = rng
            elif kind == "D":
                spec.d_range = rng
            else:
                order = {"ns": SINGLE, "nd": DOUBLE, "nt": TRIPLE, "na": AROMATIC}[kind]
                spec.bond_counts[order] = rng
            continue
        raise PatternError(f"unknown test {test!r} in {text!r}")
    pos = end + 1
    if pos < len(text) and text[pos] == "?":
        spec.is_member = False
        pos += 1
    while pos < len(text) and text[pos] == "(":
        if pos + 1 >= len(text) or text[pos + 1] not in _BOND_CODES:
            raise PatternError(f"expected bond symbol at {pos + 1} in {text!r}")
        bond = _BOND_CODES[text[pos + 1]]
        child, pos = _parse_atomspec(text, pos + 2)
        if pos >= len(text) or text[pos] != ")":
            raise PatternError(f"expected ')' at {pos} in {text!r}")
        pos += 1
        spec.branches.append((bond, child))
    return spec, pos


def _atom_matches(
    mol: MolGraph, idx: int, spec: AtomSpec, ring_atoms: frozenset[int]
) -> bool:
    atom = mol.atoms[idx]
    if spec.elements is not None and atom.element not in spec.elements:
        return False
    if spec.charge is not None and atom.formal_charge != spec.charge:
        return False
    if spec.h_range is not None and not (
        spec.h_range[0] <= atom.total_h <= spec.h_range[1]
    ):
        return False
    if spec.d_range is not None and not (
        spec.d_range[0] <= mol.degree(idx) <= spec.d_range[1]
    ):
        return False
    if spec.in_ring is not None and (idx in ring_atoms) != spec.in_ring:
        return False
    if spec.bond_counts:
        counts: dict[int, int] = {}
        for _, order in mol.adjacency[idx]:
            counts[order] = counts.get(order, 0) + 1
        for order, (lo, hi) in spec.bond_counts.items():
            if not (lo <= counts.get(order, 0) <= hi):
                return False
    return True


def match_at(
    mol: MolGraph,
    root: int,
    spec: AtomSpec,
    ring_atoms: frozenset[int],
    claimed: list[bool],
    neighbor_order: list[int] | None = None,
) -> set[int] | None:
    """Match ``spec`` anchored at ``root``; return member atoms or None.

    Member atoms must be unclaimed; context atoms only need to match
    structurally.  Branches bind injectively to distinct neighbors, tried
    in ``neighbor_order`` (canonical ranks) for deterministic results.
    """
    if claimed[root] or not _atom_matches(mol, root, spec, ring_atoms):
        return None
    members = {root}
    if _bind_branches(mol, root, spec, ring_atoms, claimed, members, neighbor_order):
        return members
    return None


def _bind_branches(
    mol: MolGraph,
    idx: int,
    spec: AtomSpec,
    ring_atoms: frozenset[int],
    claimed: list[bool],
    members: set[int],
    neighbor_order: list[int] | None,
) -> bool:
    if not spec.branches:
        return True
    nbrs = mol.adjacency[idx]
    if neighbor_order is not None:
        nbrs = sorted(nbrs, key=lambda nb: neighbor_order[nb[0]])

    def try_branch(k: int, used: set[int]) -> bool:
        if k == len(spec.branches):
            return True
        want_bond, child = spec.branches[k]
        for nbr, order in nbrs:
            if nbr in used or nbr in members:
                continue
            if want_bond is not None and order != want_bond:
                continue
            if child.is_member and claimed[nbr]:
                continue
            if not _atom_matches(mol, nbr, child, ring_atoms):
                continue
            added: set[int] = set()
            if child.is_member:
                members.add(nbr)
                added.add(nbr)
            before = set(members)
            if _bind_branches(
                mol, nbr, child, ring_atoms, claimed, members, neighbor_order
            ):
                used.add(nbr)
                if try_branch(k + 1, used):
                    return True
                used.discard(nbr)
            # roll back members added by this branch attempt
            for extra in set(members) - before:
                members.discard(extra)
            for extra in added:
                members.discard(extra)
        return False

    return try_branch(0, set())
