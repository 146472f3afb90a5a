"""Molecular descriptors from bundled parameter tables.

logP is a sum of atomic contributions (Crippen-style typing, heavy atoms
plus per-hydrogen terms); TPSA sums polar-fragment contributions over
N/O environments; MW sums standard atomic weights including hydrogens.
Water solubility is a linear model over the three.  Agreement with any
external toolkit is explicitly not a goal; the tables themselves are the
ground truth tested against.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from importlib import resources

from ..mol.graph import AROMATIC, DOUBLE, MolGraph, SINGLE, TRIPLE

log = logging.getLogger(__name__)

_HETERO = {"N", "O", "S", "P", "F", "Cl", "Br", "I", "Se", "B", "Si"}


def _load_tsv(name: str) -> list[list[str]]:
    text = resources.files("farm.kg").joinpath(f"data/{name}").read_text("utf-8")
    rows = []
    for line in text.splitlines():
        if line and not line.startswith("#"):
            rows.append(line.split("\t"))
    return rows


_LOGP: dict[str, float] | None = None
_WEIGHTS: dict[str, float] | None = None
_TPSA: list[tuple] | None = None


def logp_table() -> dict[str, float]:
    global _LOGP
    if _LOGP is None:
        _LOGP = {row[0]: float(row[1]) for row in _load_tsv("logp_contributions.tsv")}
    return _LOGP


def weight_table() -> dict[str, float]:
    global _WEIGHTS
    if _WEIGHTS is None:
        _WEIGHTS = {row[0]: float(row[1]) for row in _load_tsv("atomic_weights.tsv")}
    return _WEIGHTS


def tpsa_table() -> list[tuple]:
    global _TPSA
    if _TPSA is None:
        rows = []
        for row in _load_tsv("tpsa_fragments.tsv"):
            elem, ar, chg, h, ns, nd, nt, na, r3, val = row
            rows.append(
                (
                    elem,
                    int(ar),
                    int(chg),
                    int(h),
                    int(ns),
                    int(nd),
                    int(nt),
                    int(na),
                    None if r3 == "-" else int(r3),
                    float(val),
                )
            )
        _TPSA = rows
    return _TPSA


def logp_atom_type(mol: MolGraph, idx: int) -> str | None:
    atom = mol.atoms[idx]
    elem = atom.element
    orders = mol.bond_orders(idx)
    has_het_nbr = any(mol.atoms[j].element in _HETERO for j in mol.neighbors(idx))
    if elem == "C":
        if atom.is_aromatic and AROMATIC in orders:
            return "C.ar.het" if has_het_nbr else "C.ar"
        if DOUBLE in orders or TRIPLE in orders:
            return "C.sp2.het" if has_het_nbr else "C.sp2"
        return "C.sp3.het" if has_het_nbr else "C.sp3"
    if elem == "N":
        if atom.formal_charge > 0:
            return "N.pos"
        if atom.is_aromatic and AROMATIC in orders:
            return "N.ar"
        if TRIPLE in orders:
            return "N.nitrile"
        if DOUBLE in orders:
            return "N.sp2"
        h = atom.total_h
        if h >= 2:
            return "N.prim"
        if h == 1:
            return "N.sec"
        if mol.degree(idx) == 3:
            return "N.tert"
        return "N.other"
    if elem == "O":
        if atom.formal_charge < 0:
            return "O.neg"
        if atom.is_aromatic and AROMATIC in orders:
            return "O.ar"
        if DOUBLE in orders:
            return "O.carbonyl"
        if atom.total_h >= 1:
            return "O.hydroxyl"
        return "O.ether"
    if elem == "S":
        if atom.is_aromatic and AROMATIC in orders:
            return "S.ar"
        if DOUBLE in orders or mol.degree(idx) > 2:
            return "S.hi"
        return "S.sp3"
    if elem in ("P", "B", "Si", "F", "Cl", "Br", "I"):
        return elem
    return None


def compute_logp(mol: MolGraph) -> float:
    """Sum of per-atom contributions plus per-hydrogen terms."""
    table = logp_table()
    total = 0.0
    for atom in mol.atoms:
        key = logp_atom_type(mol, atom.index)
        if key is None:
            log.warning("no logP contribution for element %s; using 0", atom.element)
        else:
            total += table[key]
        h_key = "H.C" if atom.element == "C" else "H.X"
        total += atom.total_h * table[h_key]
    return total


def compute_mw(mol: MolGraph) -> float:
    """Molecular weight including implicit hydrogens."""
    table = weight_table()
    total = 0.0
    for atom in mol.atoms:
        w = table.get(atom.element)
        if w is None:
            log.warning("no atomic weight for %s; using 0", atom.element)
            w = 0.0
        total += w + atom.total_h * table["H"]
    return total


def _in_3ring(mol: MolGraph, idx: int) -> bool:
    return any(len(r) == 3 and idx in r for r in mol.rings.rings)


def compute_tpsa(mol: MolGraph) -> float:
    """Topological polar surface area over N/O environments."""
    total = 0.0
    for atom in mol.atoms:
        if atom.element not in ("N", "O"):
            continue
        orders = mol.bond_orders(atom.index)
        ns = orders.count(SINGLE)
        nd = orders.count(DOUBLE)
        nt = orders.count(TRIPLE)
        na = orders.count(AROMATIC)
        aromatic = 1 if (atom.is_aromatic and na > 0) else 0
        r3 = 1 if _in_3ring(mol, atom.index) else 0
        key = (atom.element, aromatic, atom.formal_charge, atom.total_h, ns, nd, nt, na)
        value = None
        for row in tpsa_table():
            if row[:8] == key and (row[8] is None or row[8] == r3):
                value = row[9]
                break
        if value is None:
            # Ertl-style fallback for environments outside the table.
            degree = len(orders) + atom.total_h
            if atom.element == "N":
                value = max(0.0, 30.5 - degree * 8.2 + atom.total_h * 1.5)
            else:
                value = max(0.0, 28.5 - degree * 8.6 + atom.total_h * 1.5)
        total += value
    return total


@dataclass(frozen=True)
class DescriptorSet:
    logp: float
    mw: float
    tpsa: float
    solubility: float


@dataclass(frozen=True)
class SolubilityModel:
    """logS = c0 + c1*logP + c2*MW + c3*TPSA (ESOL-style fit)."""

    c0: float = 0.26
    c1: float = -0.74
    c2: float = -0.0066
    c3: float = 0.003

    def __call__(self, logp: float, mw: float, tpsa: float) -> float:
        return self.c0 + self.c1 * logp + self.c2 * mw + self.c3 * tpsa


DEFAULT_SOLUBILITY = SolubilityModel()


def estimate_solubility(
    logp: float, mw: float, tpsa: float, model: SolubilityModel = DEFAULT_SOLUBILITY
) -> float:
    return model(logp, mw, tpsa)


def compute_descriptors(
    mol: MolGraph, model: SolubilityModel = DEFAULT_SOLUBILITY
) -> DescriptorSet:
    logp = compute_logp(mol)
    mw = compute_mw(mol)
    tpsa = compute_tpsa(mol)
    return DescriptorSet(logp, mw, tpsa, estimate_solubility(logp, mw, tpsa, model))
