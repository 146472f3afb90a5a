"""Canonical SMILES writer.

Atom ranks come from Morgan-style iterative refinement over
(element, aromaticity, charge, H count, degree) followed by neighbor-rank
multisets.  Remaining ties are resolved exactly: each member of the first
tied class is tentatively promoted and the lexicographically smallest
resulting SMILES wins, which makes the output invariant under input atom
permutations.  The search is bounded; molecules exceeding the budget fall
back to index order (logged, not expected at desk scale).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .graph import (
    AROMATIC,
    DOUBLE,
    MolGraph,
    ORGANIC_SUBSET,
    SINGLE,
    TRIPLE,
    implicit_hydrogens,
)

log = logging.getLogger(__name__)

TIE_SEARCH_BUDGET = 4096

_AROMATIC_BARE = {"B", "C", "N", "O", "P", "S"}

ATOM = "atom"
BOND = "bond"
BRANCH_OPEN = "branch-open"
BRANCH_CLOSE = "branch-close"
RING_CLOSURE = "ring-closure"
DOT = "dot"


@dataclass(frozen=True)
class WriterToken:
    text: str
    kind: str
    atom: int | None = None


def _initial_keys(mol: MolGraph) -> list[tuple]:
    return [
        (a.element, a.is_aromatic, a.formal_charge, a.total_h, mol.degree(a.index))
        for a in mol.atoms
    ]


def _rank_from_keys(keys: list) -> list[int]:
    order = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


def _refine(mol: MolGraph, ranks: list[int]) -> list[int]:
    n = len(mol)
    while True:
        keys = []
        for i in range(n):
            nbrs = sorted((order, ranks[j]) for j, order in mol.adjacency[i])
            keys.append((ranks[i], tuple(nbrs)))
        new = _rank_from_keys(keys)
        if new == ranks:
            return ranks
        ranks = new


def _first_tied_class(ranks: list[int]) -> list[int] | None:
    by_rank: dict[int, list[int]] = {}
    for i, r in enumerate(ranks):
        by_rank.setdefault(r, []).append(i)
    for r in sorted(by_rank):
        if len(by_rank[r]) > 1:
            return by_rank[r]
    return None


def _bump(mol: MolGraph, ranks: list[int], atom: int) -> list[int]:
    keys = [(r, 1) for r in ranks]
    keys[atom] = (ranks[atom], 0)
    return _refine(mol, _rank_from_keys(keys))


def canonical_ranks(mol: MolGraph) -> list[int]:
    """Distinct, permutation-invariant canonical ranks; cached on the graph."""
    if mol._canon is None:
        ranks = _refine(mol, _rank_from_keys(_initial_keys(mol)))
        budget = [TIE_SEARCH_BUDGET]
        _, final = _resolve(mol, ranks, budget)
        mol._canon = {"ranks": final}
    return mol._canon["ranks"]


def _resolve(mol: MolGraph, ranks: list[int], budget: list[int]) -> tuple[str, list[int]]:
    tied = _first_tied_class(ranks)
    if tied is None:
        return _emit_string(mol, ranks), ranks
    if budget[0] <= 0:
        log.warning(
            "canonicalization tie-search budget exhausted (%d atoms); "
            "falling back to index order",
            len(mol),
        )
        resolved = _refine(mol, _rank_from_keys([(r, i) for i, r in enumerate(ranks)]))
        return _emit_string(mol, resolved), resolved
    best: tuple[str, list[int]] | None = None
    for atom in tied:
        budget[0] -= 1
        candidate = _resolve(mol, _bump(mol, ranks, atom), budget)
        if best is None or candidate[0] < best[0]:
            best = candidate
    return best


def _emit_string(mol: MolGraph, ranks: list[int]) -> str:
    return "".join(t.text for t in _emit_tokens(mol, ranks))


def _atom_token_text(mol: MolGraph, idx: int) -> str:
    atom = mol.atoms[idx]
    order_sum = 0
    aromatic_bond = False
    for _, order in mol.adjacency[idx]:
        order_sum += 1 if order == AROMATIC else order
        if order == AROMATIC:
            aromatic_bond = True
    symbol = atom.element.lower() if atom.is_aromatic else atom.element
    if atom.element == "*":
        return "[*]"
    bare_ok = (
        atom.element in ORGANIC_SUBSET
        and atom.formal_charge == 0
        and (not atom.is_aromatic or atom.element in _AROMATIC_BARE)
        and atom.total_h
        == implicit_hydrogens(atom.element, order_sum, atom.is_aromatic)
    )
    if bare_ok:
        return symbol
    h = atom.total_h
    h_part = "" if h == 0 else ("H" if h == 1 else f"H{h}")
    c = atom.formal_charge
    if c == 0:
        c_part = ""
    elif c == 1:
        c_part = "+"
    elif c == -1:
        c_part = "-"
    else:
        c_part = f"+{c}" if c > 0 else str(c)
    return f"[{symbol}{h_part}{c_part}]"


def _bond_text(mol: MolGraph, a: int, b: int, order: int) -> str:
    both_aromatic = mol.atoms[a].is_aromatic and mol.atoms[b].is_aromatic
    if order == SINGLE:
        return "-" if both_aromatic else ""
    if order == AROMATIC:
        return "" if both_aromatic else ":"
    if order == DOUBLE:
        return "="
    if order == TRIPLE:
        return "#"
    raise ValueError(f"unknown bond order {order}")


def _emit_tokens(mol: MolGraph, ranks: list[int]) -> list[WriterToken]:
    n = len(mol)
    if n == 0:
        return []
    # Prefer a terminal atom as root: fewer parentheses, same canonicality
    # (degree and rank are both permutation-invariant).
    root = min(range(n), key=lambda i: (mol.degree(i) > 1, ranks[i]))
    bond_order = {b.key: b.order for b in mol.bonds}

    def order_of(a: int, b: int) -> int:
        return bond_order[(a, b) if a < b else (b, a)]

    # Iterative DFS fixing visit order, tree children and ring-closure edges.
    visit_order: dict[int, int] = {}
    children: dict[int, list[int]] = {i: [] for i in range(n)}
    ring_edges: list[tuple[int, int]] = []  # (opening atom, closing atom)
    seen_edges: set[tuple[int, int]] = set()
    stack = [(root, -1)]
    while stack:
        v, parent = stack.pop()
        if v in visit_order:
            continue
        visit_order[v] = len(visit_order)
        if parent >= 0:
            children[parent].append(v)
        nbrs = sorted(mol.neighbors(v), key=lambda w: ranks[w])
        for w in reversed(nbrs):
            if w == parent:
                continue
            ekey = (v, w) if v < w else (w, v)
            if w in visit_order:
                if ekey not in seen_edges:
                    seen_edges.add(ekey)
                    ring_edges.append((w, v))
            else:
                stack.append((w, v))
    # The stack pushes may enqueue an atom twice; tree edges recorded on first
    # visit only, and back edges found from the later atom are ring closures.
    for v in range(n):
        children[v].sort(key=lambda w: ranks[w])

    # Allocate ring-closure digits in emission order.
    ring_partner: dict[int, list[int]] = {i: [] for i in range(n)}
    for a, b in ring_edges:
        ring_partner[a].append(b)
        ring_partner[b].append(a)
    for v in range(n):
        ring_partner[v].sort(key=lambda w: visit_order[w])
    digit_of: dict[tuple[int, int], int] = {}
    free_digits: list[int] = []
    next_digit = 1

    def take_digit() -> int:
        nonlocal next_digit
        if free_digits:
            free_digits.sort()
            return free_digits.pop(0)
        d = next_digit
        next_digit += 1
        return d

    tokens: list[WriterToken] = []

    def emit_atom(v: int) -> None:
        tokens.append(WriterToken(_atom_token_text(mol, v), ATOM, v))
        for w in ring_partner[v]:
            ekey = (v, w) if v < w else (w, v)
            btext = _bond_text(mol, v, w, order_of(v, w))
            if ekey in digit_of:
                digit = digit_of.pop(ekey)
                free_digits.append(digit)
            else:
                digit = take_digit()
                digit_of[ekey] = digit
            if btext:
                tokens.append(WriterToken(btext, BOND))
            tokens.append(
                WriterToken(str(digit) if digit < 10 else f"%{digit:02d}", RING_CLOSURE)
            )

    def emit_subtree(v: int) -> None:
        emit_atom(v)
        kids = children[v]
        for k, w in enumerate(kids):
            btext = _bond_text(mol, v, w, order_of(v, w))
            last = k == len(kids) - 1
            if not last:
                tokens.append(WriterToken("(", BRANCH_OPEN))
            if btext:
                tokens.append(WriterToken(btext, BOND))
            emit_subtree(w)
            if not last:
                tokens.append(WriterToken(")", BRANCH_CLOSE))

    import sys

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 4 * n + 100))
    try:
        emit_subtree(root)
    finally:
        sys.setrecursionlimit(old_limit)
    return tokens


def canonical_tokens(mol: MolGraph) -> list[WriterToken]:
    """Canonical token stream; cached on the graph."""
    ranks = canonical_ranks(mol)
    if "tokens" not in mol._canon:
        mol._canon["tokens"] = _emit_tokens(mol, ranks)
    return mol._canon["tokens"]


def write_smiles(mol: MolGraph) -> str:
    """Canonical SMILES; re-parses to a graph isomorphic to ``mol``."""
    return "".join(t.text for t in canonical_tokens(mol))
