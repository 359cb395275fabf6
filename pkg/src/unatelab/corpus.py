"""Function corpora: random unate functions and oracle-verified far functions.

Unate corpus entries are random monotone DNFs (positive terms, hence
monotone) composed with a uniform XOR shift, which is exactly the class
of unate functions reachable that way; every entry is still pushed
through ``verify_unate`` before inclusion.

Far corpus entries come from several generators (parities over random
subsets, no-distribution two-layer draws, random sparse sets) and are
kept only if the exact oracle certifies relative distance to unateness
at least ``eps_min``; the certified value ships with the entry.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .functions import BooleanFunction, SparseFunction, xor_function
from .ground_truth import rel_dist_to_unate, verify_unate
from .lowerbound import draw_no


@dataclass
class CorpusEntry:
    id: str
    function: BooleanFunction
    meta: dict = field(default_factory=dict)


def random_monotone_dnf_masks(n: int, rng: np.random.Generator) -> list[int]:
    """Masks of positive conjunctive terms for a random monotone DNF."""
    n_terms = 1 + int(rng.integers(0, n))
    density = rng.uniform(0.15, 0.5)
    masks = set()
    while len(masks) < n_terms:
        m = 0
        for i in range(n):
            if rng.random() < density:
                m |= 1 << i
        if m:
            masks.add(m)
    return sorted(masks)


def monotone_dnf(n: int, term_masks: list[int]) -> SparseFunction:
    """OR of positive-term conjunctions; monotone by construction."""
    pts = np.arange(1 << n, dtype=np.int64)
    sat = np.zeros(1 << n, dtype=bool)
    for m in term_masks:
        sat |= (pts & np.int64(m)) == m
    return SparseFunction(n, pts[sat])


def xor_shift(f: BooleanFunction, s: int) -> SparseFunction:
    """g(x) = f(x xor s); the 1-set shifts by s."""
    return SparseFunction(f.n, (f.ones_array() ^ np.int64(s)).tolist())


def generate_unate_corpus(count: int, n: int,
                          rng: np.random.Generator) -> list[CorpusEntry]:
    """Random unate functions: monotone DNFs under uniform XOR shifts."""
    if n > 16:
        raise ValueError("unate corpus generation is desk-scale only (n <= 16)")
    out = []
    while len(out) < count:
        masks = random_monotone_dnf_masks(n, rng)
        s = int(rng.integers(0, 1 << n))
        f = xor_shift(monotone_dnf(n, masks), s)
        ok, _ = verify_unate(f)
        if not ok:  # unreachable for this construction, but required gate
            continue
        out.append(CorpusEntry(
            id=f"unate-n{n}-{len(out):03d}",
            function=f,
            meta={"shift": s, "terms": [int(m) for m in masks],
                  "n_ones": f.ones_count()}))
    return out


def _random_sparse(n: int, rng: np.random.Generator) -> SparseFunction:
    size = int(rng.integers(max(4, 1 << (n - 3)), (1 << (n - 1)) + 1))
    pts = rng.choice(1 << n, size=size, replace=False)
    return SparseFunction(n, pts.tolist())


def generate_far_corpus(count: int, n: int, eps_min,
                        rng: np.random.Generator,
                        max_attempts: int | None = None) -> list[CorpusEntry]:
    """Functions with oracle-certified rel_dist_to_unate >= eps_min.

    Bounded generation: if the attempt budget runs out a partial corpus
    is returned with a warning.
    """
    if n > 10:
        raise ValueError("exact farness certification is capped at n = 10")
    eps_min = Fraction(eps_min) if not isinstance(eps_min, Fraction) \
        else eps_min
    budget = max_attempts if max_attempts is not None else 30 * count
    out = []
    attempt = 0
    while len(out) < count and attempt < budget:
        attempt += 1
        kind = attempt % 3
        if kind == 0:
            k = int(rng.integers(2, n + 1))
            coords = rng.choice(n, size=k, replace=False)
            f: BooleanFunction = xor_function(n, [int(c) for c in coords])
            label = f"xor{k}"
        elif kind == 1 and n == 8:
            f = draw_no(8, rng)
            label = "two-layer-no"
        else:
            f = _random_sparse(n, rng)
            label = "sparse"
        if f.ones_count() == 0:
            continue
        farness = rel_dist_to_unate(f)
        if farness >= eps_min:
            out.append(CorpusEntry(
                id=f"far-n{n}-{len(out):03d}-{label}",
                function=SparseFunction(n, f.ones_array().tolist()),
                meta={"farness": str(farness), "generator": label,
                      "n_ones": f.ones_count()}))
    if len(out) < count:
        warnings.warn(
            f"far corpus generation exhausted {budget} attempts; "
            f"returning {len(out)}/{count} functions")
    return out
