"""Labeled graph isomorphism for round-trip verification.

Backtracking matcher in the VF2 spirit: atoms must agree on element,
charge, aromaticity and hydrogen count; bonds on order.  Exponential in
the worst case but fine at molecule scale, and used only as a test
oracle, never on the production path.
"""

from __future__ import annotations

from .graph import MolGraph


def _atom_label(mol: MolGraph, i: int) -> tuple:
    a = mol.atoms[i]
    return (a.element, a.formal_charge, a.is_aromatic, a.total_h, mol.degree(i))


def isomorphic(g1: MolGraph, g2: MolGraph) -> bool:
    if len(g1) != len(g2) or len(g1.bonds) != len(g2.bonds):
        return False
    if sorted(_atom_label(g1, i) for i in range(len(g1))) != sorted(
        _atom_label(g2, i) for i in range(len(g2))
    ):
        return False

    n = len(g1)
    order1 = {b.key: b.order for b in g1.bonds}
    order2 = {b.key: b.order for b in g2.bonds}
    candidates = [
        [j for j in range(n) if _atom_label(g2, j) == _atom_label(g1, i)]
        for i in range(n)
    ]
    # Match scarcest atoms first to prune early.
    atom_order = sorted(range(n), key=lambda i: len(candidates[i]))
    mapping: dict[int, int] = {}
    used: set[int] = set()

    def extend(k: int) -> bool:
        if k == n:
            return True
        i = atom_order[k]
        for j in candidates[i]:
            if j in used:
                continue
            ok = True
            for nb, order in g1.adjacency[i]:
                if nb in mapping:
                    jk = (j, mapping[nb]) if j < mapping[nb] else (mapping[nb], j)
                    if order2.get(jk) != order:
                        ok = False
                        break
            if not ok:
                continue
            # Mapped g2 neighbors of j must correspond to mapped g1 bonds.
            inv = {v: u for u, v in mapping.items()}
            for nb2, order in g2.adjacency[j]:
                if nb2 in inv:
                    ik = (i, inv[nb2]) if i < inv[nb2] else (inv[nb2], i)
                    if order1.get(ik) != order:
                        ok = False
                        break
            if not ok:
                continue
            mapping[i] = j
            used.add(j)
            if extend(k + 1):
                return True
            del mapping[i]
            used.discard(j)
        return False

    return extend(0)
