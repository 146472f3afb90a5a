"""Ring perception: SSSR cycles and fused-system grouping.

Horton-style candidate enumeration (shortest cycles through each vertex
and edge) followed by greedy GF(2) independence gives a minimum cycle
basis.  Candidate ordering breaks ties by preferring cycles with the
smaller lowest atom index, which keeps downstream ring naming
deterministic.
"""

from __future__ import annotations

from collections import deque

from .graph import Bond, MolGraph, RingInfo, connected_components


def _shortest_paths_from(mol: MolGraph, source: int) -> tuple[list[int], list[int]]:
    """BFS distances and parent pointers (parent chosen lowest-first)."""
    dist = [-1] * len(mol)
    parent = [-1] * len(mol)
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in sorted(mol.neighbors(v)):
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                parent[w] = v
                queue.append(w)
    return dist, parent


def _path_to_root(parent: list[int], v: int) -> list[int]:
    path = [v]
    while parent[v] >= 0:
        v = parent[v]
        path.append(v)
    return path


def _cycle_key(cycle: tuple[int, ...]) -> tuple[int, int, tuple[int, ...]]:
    return (len(cycle), min(cycle), tuple(sorted(cycle)))


def perceive_rings(mol: MolGraph) -> RingInfo:
    """Compute SSSR cycles and group rings sharing atoms into fused systems."""
    n_cycles = len(mol.bonds) - len(mol) + len(connected_components(len(mol), mol.bonds))
    if n_cycles <= 0:
        return RingInfo([], [])

    edge_index = {b.key: i for i, b in enumerate(mol.bonds)}

    candidates: dict[frozenset[int], tuple[int, ...]] = {}
    for v in range(len(mol)):
        dist, parent = _shortest_paths_from(mol, v)
        for bond in mol.bonds:
            x, y = bond.a, bond.b
            if dist[x] < 0 or dist[y] < 0:
                continue
            px = _path_to_root(parent, x)
            py = _path_to_root(parent, y)
            # Paths must meet only at v for a simple cycle through v.
            if set(px) & set(py) != {v}:
                continue
            cycle = tuple(px[:-1] + list(reversed(py)))
            if len(cycle) < 3:
                continue
            key = frozenset(cycle)
            if key not in candidates or _cycle_key(cycle) < _cycle_key(candidates[key]):
                candidates[key] = cycle

    ordered = sorted(candidates.values(), key=_cycle_key)

    basis: dict[int, int] = {}  # leading bit -> GF(2) edge-set bitmask
    rings: list[tuple[int, ...]] = []
    for cycle in ordered:
        mask = 0
        ok = True
        for k in range(len(cycle)):
            a, b = cycle[k], cycle[(k + 1) % len(cycle)]
            idx = edge_index.get((a, b) if a < b else (b, a))
            if idx is None:
                ok = False
                break
            mask |= 1 << idx
        if not ok:
            continue
        cur = mask
        while cur:
            lead = cur.bit_length() - 1
            if lead not in basis:
                basis[lead] = cur
                break
            cur ^= basis[lead]
        if cur:
            rings.append(_orient(cycle))
            if len(rings) == n_cycles:
                break

    fused = _group_fused(rings)
    return RingInfo(rings, fused)


def _orient(cycle: tuple[int, ...]) -> tuple[int, ...]:
    """Rotate/reflect the cycle to start at its lowest atom, lowest-first."""
    lo = cycle.index(min(cycle))
    rotated = cycle[lo:] + cycle[:lo]
    fwd = rotated
    rev = (rotated[0],) + tuple(reversed(rotated[1:]))
    return min(fwd, rev)


def _group_fused(rings: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    """Group ring indices transitively by shared atoms."""
    parent = list(range(len(rings)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    sets = [set(r) for r in rings]
    for i in range(len(rings)):
        for j in range(i + 1, len(rings)):
            if sets[i] & sets[j]:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    groups: dict[int, list[int]] = {}
    for i in range(len(rings)):
        groups.setdefault(find(i), []).append(i)
    return sorted(
        (tuple(sorted(g)) for g in groups.values()),
        key=lambda g: min(min(rings[i]) for i in g),
    )
