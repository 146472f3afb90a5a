"""FG-enhanced SMILES tokens, lossless strip-back, and lexicon stats.

An atom token is the atom text exactly as the canonical writer emits it,
suffixed with ``_<label>`` from the functional-group assignment
(``C_ketone``, ``c_ring_6``, ``[N+]_4_ammonium_ion``).  Structural
characters are their own tokens and carry no suffix, so removing every
suffix restores the canonical SMILES byte for byte.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .fg.detect import FGAssignment
from .mol.canon import ATOM, canonical_tokens, write_smiles
from .mol.graph import MolGraph

RESERVED_TOKENS = ("PAD", "MASK", "UNK", "BOS", "EOS")
RESERVED_COUNT = -1  # sentinel: reserved entries carry no corpus count

_ELEMENT_RE = re.compile(r"\[?\d*([A-Za-z][a-z]?)")


class TokenError(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    text: str
    kind: str


@dataclass
class TokenSeq:
    tokens: list[Token]
    source_canonical_smiles: str

    def texts(self) -> list[str]:
        return [t.text for t in self.tokens]


def tokenize(mol: MolGraph, assignment: FGAssignment) -> TokenSeq:
    """FG-enhanced token sequence over the canonical SMILES of ``mol``."""
    out: list[Token] = []
    plain: list[str] = []
    for wt in canonical_tokens(mol):
        plain.append(wt.text)
        if wt.kind == ATOM:
            label = assignment.instances[assignment.atom_to_instance[wt.atom]].label
            out.append(Token(f"{wt.text}_{label}", ATOM))
        else:
            out.append(Token(wt.text, wt.kind))
    return TokenSeq(out, "".join(plain))


def strip_token(text: str, kind: str) -> str:
    if kind != ATOM:
        return text
    atom_text, sep, _ = text.partition("_")
    if not sep:
        raise TokenError(f"atom token {text!r} has no FG suffix")
    return atom_text


def strip(seq: TokenSeq) -> str:
    """Remove FG suffixes; equals the source canonical SMILES exactly."""
    return "".join(strip_token(t.text, t.kind) for t in seq.tokens)


def strip_texts(texts: Iterable[str]) -> str:
    """Strip a bare token-text sequence (as read from a token file).

    Only atom tokens carry FG suffixes, and structural tokens never
    contain an underscore, so the suffix test is just membership.
    """
    return "".join(t.partition("_")[0] if "_" in t else t for t in texts)


@dataclass
class Vocab:
    entries: dict[str, int]
    min_frequency: int

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def index(self) -> dict[str, int]:
        """Stable token -> id mapping (reserved tokens first)."""
        ordered = list(RESERVED_TOKENS) + sorted(
            t for t in self.entries if t not in RESERVED_TOKENS
        )
        return {t: i for i, t in enumerate(ordered)}


def build_vocab(corpus: Iterable[list[str]], min_freq: int = 1) -> Vocab:
    """Count token texts across the corpus and keep those >= min_freq."""
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    counts: Counter[str] = Counter()
    for tokens in corpus:
        counts.update(tokens)
    entries = {t: c for t, c in counts.items() if c >= min_freq}
    for reserved in RESERVED_TOKENS:
        entries[reserved] = RESERVED_COUNT
    return Vocab(entries, min_freq)


def merge_counts(parts: Iterable[Counter[str]]) -> Counter[str]:
    """Associative merge for sharded counting."""
    total: Counter[str] = Counter()
    for part in parts:
        total.update(part)
    return total


def token_element(text: str) -> str | None:
    """Element symbol of an atom token text, None for structural tokens."""
    if "_" not in text:
        return None
    atom_text = text.partition("_")[0]
    m = _ELEMENT_RE.match(atom_text)
    return m.group(1).capitalize() if m else None


@dataclass
class DiversityStats:
    num_molecules: int
    num_atom_types: int
    length_range: tuple[int, int]
    vocab_size_min_freq_1: int
    vocab_size_min_freq_5: int
    coverage: float | None = None

    def as_dict(self) -> dict:
        d = {
            "num_molecules": self.num_molecules,
            "num_atom_types": self.num_atom_types,
            "length_range": list(self.length_range),
            "vocab_size_min_freq_1": self.vocab_size_min_freq_1,
            "vocab_size_min_freq_5": self.vocab_size_min_freq_5,
        }
        if self.coverage is not None:
            d["coverage"] = self.coverage
        return d


def coverage(vocab: Vocab, corpus: Iterable[list[str]]) -> float:
    """Fraction of token occurrences in ``corpus`` present in ``vocab``."""
    total = 0
    known = 0
    for tokens in corpus:
        for t in tokens:
            total += 1
            if t in vocab.entries:
                known += 1
    return known / total if total else 1.0


def lexicon_report(
    corpus: list[list[str]], heldout: list[list[str]] | None = None
) -> DiversityStats:
    """Lexicon-size diversity metrics for a tokenized corpus."""
    lengths = [len(tokens) for tokens in corpus]
    elements: set[str] = set()
    for tokens in corpus:
        for t in tokens:
            elem = token_element(t)
            if elem:
                elements.add(elem)
    v1 = build_vocab(corpus, 1)
    v5 = build_vocab(corpus, 5)
    cov = coverage(v1, heldout) if heldout is not None else None
    n_reserved = len(RESERVED_TOKENS)
    return DiversityStats(
        num_molecules=len(corpus),
        num_atom_types=len(elements),
        length_range=(min(lengths), max(lengths)) if lengths else (0, 0),
        vocab_size_min_freq_1=len(v1) - n_reserved,
        vocab_size_min_freq_5=len(v5) - n_reserved,
        coverage=cov,
    )


# --- file formats -----------------------------------------------------------

def write_token_file(path, seqs: Iterable[list[str]]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for tokens in seqs:
            fh.write(" ".join(tokens) + "\n")
            n += 1
    return n


def read_token_file(path) -> Iterator[list[str]]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield line.split(" ")


def write_vocab_file(path, vocab: Vocab) -> None:
    rows = sorted(vocab.entries.items(), key=lambda kv: (-kv[1], kv[0]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# vocab min_frequency={vocab.min_frequency}\n")
        for token, count in rows:
            fh.write(f"{token}\t{count}\n")


def read_vocab_file(path) -> Vocab:
    entries: dict[str, int] = {}
    min_freq = 1
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                m = re.search(r"min_frequency=(\d+)", line)
                if m:
                    min_freq = int(m.group(1))
                continue
            if line:
                token, count = line.split("\t")
                entries[token] = int(count)
    return Vocab(entries, min_freq)
