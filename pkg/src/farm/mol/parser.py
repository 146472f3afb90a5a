"""SMILES reader.

Supports the organic subset, bracket atoms with charge/H-count/isotope,
aromatic lowercase atoms, branches, ring closures (including ``%nn``) and
multi-component inputs separated by dots.  Stereo marks (``@``, ``/``,
``\\``) and isotopes are parsed and discarded; aromaticity is taken from
the notation as written, never re-perceived.
"""

from __future__ import annotations

import logging
import re

from .graph import (
    AROMATIC,
    AROMATIC_ELEMENTS,
    DOUBLE,
    ORGANIC_SUBSET,
    SINGLE,
    TRIPLE,
    Atom,
    Bond,
    MolGraph,
    SmilesSyntaxError,
    ValenceError,
    allowed_valence,
    connected_components,
    implicit_hydrogens,
)

log = logging.getLogger(__name__)

_BRACKET_RE = re.compile(
    r"\[(?P<isotope>\d+)?(?P<symbol>[A-Z][a-z]?|[a-z]{1,2}|\*)"
    r"(?P<chiral>@{1,2}(?:TH\d|AL\d|SP\d)?)?"
    r"(?P<hcount>H\d*)?"
    r"(?P<charge>\+{1,3}|-{1,3}|\+\d+|-\d+)?"
    r"(?::(?P<cls>\d+))?\]"
)

_TWO_CHAR_BARE = ("Cl", "Br")
_BOND_CHARS = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC}


class _PendingAtom:
    __slots__ = ("element", "charge", "aromatic", "explicit_h", "bracketed", "pos")

    def __init__(self, element, charge, aromatic, explicit_h, bracketed, pos):
        self.element = element
        self.charge = charge
        self.aromatic = aromatic
        self.explicit_h = explicit_h
        self.bracketed = bracketed
        self.pos = pos


def _parse_bracket(s: str, start: int) -> tuple[_PendingAtom, int]:
    m = _BRACKET_RE.match(s, start)
    if m is None:
        raise SmilesSyntaxError("malformed bracket atom", start)
    symbol = m.group("symbol")
    aromatic = symbol[0].islower() and symbol != "*"
    element = symbol.capitalize() if symbol != "*" else "*"
    if aromatic and element not in AROMATIC_ELEMENTS:
        raise SmilesSyntaxError(f"element {element} cannot be aromatic", start)
    hcount = 0
    if m.group("hcount"):
        digits = m.group("hcount")[1:]
        hcount = int(digits) if digits else 1
    charge = 0
    raw = m.group("charge")
    if raw:
        if raw in ("+", "++", "+++"):
            charge = raw.count("+")
        elif raw in ("-", "--", "---"):
            charge = -raw.count("-")
        else:
            charge = int(raw)
    return _PendingAtom(element, charge, aromatic, hcount, True, start), m.end()


def _parse_bare(s: str, i: int) -> tuple[_PendingAtom, int]:
    ch = s[i]
    if s[i : i + 2] in _TWO_CHAR_BARE:
        return _PendingAtom(s[i : i + 2], 0, False, 0, False, i), i + 2
    if ch in "BCNOPSFI":
        return _PendingAtom(ch, 0, False, 0, False, i), i + 1
    if ch in "bcnops":
        return _PendingAtom(ch.upper(), 0, True, 0, False, i), i + 1
    raise SmilesSyntaxError(f"unexpected character {ch!r}", i)


def parse_components(s: str, strict: bool = False) -> list[MolGraph]:
    """Parse a SMILES string into one MolGraph per component."""
    if not s:
        raise SmilesSyntaxError("empty SMILES", 0)

    atoms: list[_PendingAtom] = []
    bonds: list[tuple[int, int, int | None, int]] = []  # a, b, order, pos
    stack: list[int | None] = []
    ring_open: dict[int, tuple[int, int | None, int]] = {}
    prev: int | None = None
    pending_bond: int | None = None
    pending_pos = 0
    dot_breaks: list[int] = []

    def add_bond(a: int, b: int, order: int | None, pos: int) -> None:
        bonds.append((a, b, order, pos))

    i = 0
    n = len(s)
    while i < n:
        ch = s[i]
        if ch == "(":
            if prev is None:
                raise SmilesSyntaxError("branch before any atom", i)
            stack.append(prev)
            i += 1
        elif ch == ")":
            if not stack:
                raise SmilesSyntaxError("unmatched ')'", i)
            prev = stack.pop()
            i += 1
        elif ch in _BOND_CHARS:
            if pending_bond is not None:
                raise SmilesSyntaxError("two bond symbols in a row", i)
            pending_bond = _BOND_CHARS[ch]
            pending_pos = i
            i += 1
        elif ch in ("/", "\\"):
            # Stereo bond marks are read as plain single bonds.
            pending_bond = SINGLE
            pending_pos = i
            i += 1
        elif ch == ".":
            if pending_bond is not None:
                raise SmilesSyntaxError("bond symbol before '.'", i)
            dot_breaks.append(len(atoms))
            prev = None
            i += 1
        elif ch.isdigit() or ch == "%":
            if prev is None:
                raise SmilesSyntaxError("ring closure before any atom", i)
            if ch == "%":
                if i + 2 >= n or not s[i + 1 : i + 3].isdigit():
                    raise SmilesSyntaxError("'%' needs two digits", i)
                num = int(s[i + 1 : i + 3])
                i += 3
            else:
                num = int(ch)
                i += 1
            if num in ring_open:
                partner, open_order, open_pos = ring_open.pop(num)
                if partner == prev:
                    raise SmilesSyntaxError(f"ring bond {num} closes on itself", i - 1)
                if (
                    open_order is not None
                    and pending_bond is not None
                    and open_order != pending_bond
                ):
                    raise SmilesSyntaxError(
                        f"conflicting bond orders on ring closure {num}", i - 1
                    )
                order = pending_bond if pending_bond is not None else open_order
                add_bond(partner, prev, order, i - 1)
            else:
                ring_open[num] = (prev, pending_bond, i - 1)
            pending_bond = None
        elif ch == "[":
            atom, end = _parse_bracket(s, i)
            idx = len(atoms)
            atoms.append(atom)
            if prev is not None:
                add_bond(prev, idx, pending_bond, i)
            elif pending_bond is not None:
                raise SmilesSyntaxError("dangling bond symbol", pending_pos)
            prev = idx
            pending_bond = None
            i = end
        else:
            atom, end = _parse_bare(s, i)
            idx = len(atoms)
            atoms.append(atom)
            if prev is not None:
                add_bond(prev, idx, pending_bond, i)
            elif pending_bond is not None:
                raise SmilesSyntaxError("dangling bond symbol", pending_pos)
            prev = idx
            pending_bond = None
            i = end

    if stack:
        raise SmilesSyntaxError("unclosed '('", n - 1)
    if pending_bond is not None:
        raise SmilesSyntaxError("dangling bond symbol at end", pending_pos)
    if ring_open:
        num, (_, _, pos) = sorted(ring_open.items())[0]
        raise SmilesSyntaxError(f"unmatched ring-closure digit {num}", pos)
    if not atoms:
        raise SmilesSyntaxError("no atoms in SMILES", 0)

    # Resolve default bond orders: a bare bond between two aromatic atoms
    # is aromatic, otherwise single.
    resolved: list[Bond] = []
    for a, b, order, _pos in bonds:
        if order is None:
            order = AROMATIC if atoms[a].aromatic and atoms[b].aromatic else SINGLE
        resolved.append(Bond(a, b, order))

    components = connected_components(len(atoms), resolved)
    out: list[MolGraph] = []
    for comp in components:
        remap = {old: new for new, old in enumerate(comp)}
        comp_set = set(comp)
        comp_bonds = [
            Bond(remap[b.a], remap[b.b], b.order)
            for b in resolved
            if b.a in comp_set and b.b in comp_set
        ]
        comp_atoms = _finalize_atoms([atoms[i] for i in comp], comp_bonds, strict)
        mol = MolGraph(comp_atoms, comp_bonds)
        _demote_nonring_aromatic_bonds(mol)
        out.append(mol)
    return out


def parse_smiles(s: str, strict: bool = False) -> MolGraph | list[MolGraph]:
    """Parse SMILES; returns one MolGraph, or a list for '.'-separated input."""
    components = parse_components(s, strict=strict)
    return components[0] if len(components) == 1 else components


def _finalize_atoms(
    pending: list[_PendingAtom], bonds: list[Bond], strict: bool
) -> list[Atom]:
    order_sum = [0] * len(pending)
    for b in bonds:
        o = 1 if b.order == AROMATIC else b.order
        order_sum[b.a] += o
        order_sum[b.b] += o

    atoms: list[Atom] = []
    for idx, p in enumerate(pending):
        if p.bracketed:
            implicit = 0
            explicit = p.explicit_h
        else:
            explicit = 0
            implicit = implicit_hydrogens(p.element, order_sum[idx], p.aromatic)
        if strict:
            cap = allowed_valence(p.element, p.charge)
            used = order_sum[idx] + explicit + implicit + (1 if p.aromatic else 0)
            if cap is not None and used > cap:
                raise ValenceError(
                    f"atom {idx} ({p.element}) exceeds valence {cap} "
                    f"with bond order sum {used}"
                )
        atoms.append(
            Atom(p.element, idx, p.charge, p.aromatic, explicit, implicit, p.bracketed)
        )
    return atoms


def _demote_nonring_aromatic_bonds(mol: MolGraph) -> None:
    """Turn aromatic bonds outside any ring into single bonds.

    Handles notations like biphenyl without an explicit '-' between the
    rings.  Ring membership comes from SSSR perception.
    """
    if not any(b.order == AROMATIC for b in mol.bonds):
        return
    ring_bonds: set[tuple[int, int]] = set()
    for ring in mol.rings.rings:
        for k in range(len(ring)):
            a, b = ring[k], ring[(k + 1) % len(ring)]
            ring_bonds.add((a, b) if a < b else (b, a))
    changed = False
    for i, bond in enumerate(mol.bonds):
        if bond.order == AROMATIC and bond.key not in ring_bonds:
            mol.bonds[i] = Bond(bond.a, bond.b, SINGLE)
            changed = True
    if changed:
        mol._adjacency = None
