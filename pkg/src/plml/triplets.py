"""Relative-comparison constraints harvested from class-aware neighborhoods.

For every training instance i we take its k1 nearest same-class and k2
nearest different-class neighbors (Euclidean, in the preprocessed space)
and ask the learned local metric to pull the former closer than the
latter by a unit margin: one triplet (i, j, k) per combination. The
same-class pairs double as targets for the metric's pull term.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import Dataset
from .errors import ContractError
from .neighbors import BLOCK, pairwise_sq_dists

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TripletSet:
    i: np.ndarray       # (T,) anchor instance of each triplet
    j: np.ndarray       # (T,) same-class neighbor (pulled in)
    k: np.ndarray       # (T,) different-class neighbor (pushed out)
    pairs: np.ndarray   # (P, 2) same-class (instance, neighbor) pairs
    k1: int
    k2: int
    n: int              # instance count the indices refer to

    @property
    def count(self) -> int:
        return self.i.shape[0]


def generate_triplets(train: Dataset, k1: int = 3, k2: int = 3) -> TripletSet:
    """Build the triplet list for a dataset.

    Instances whose class has fewer than k1 + 1 members use what exists;
    singleton-class instances contribute nothing and are counted in a
    warning. Triplet order is deterministic: instances ascending, then
    same-class neighbors nearest-first, then different-class
    nearest-first, with distance ties broken toward the lower index.
    """
    if k1 < 1 or k2 < 1:
        raise ContractError(f"k1 and k2 must be >= 1, got k1={k1}, k2={k2}")
    X, y = train.X, train.y
    n = train.n

    same_lists = _same_class_neighbors(X, y, k1)
    diff_lists = _diff_class_neighbors(X, y, k2)

    singles = sum(1 for lst in same_lists if lst.size == 0)
    if singles:
        log.warning(
            "%d instance(s) have no same-class neighbor and produce no "
            "constraints", singles,
        )

    ii, jj, kk, prs = [], [], [], []
    for i in range(n):
        same = same_lists[i]
        if same.size == 0:
            continue
        prs.append(np.column_stack([np.full(same.size, i), same]))
        diff = diff_lists[i]
        if diff.size == 0:
            continue
        ii.append(np.full(same.size * diff.size, i))
        jj.append(np.repeat(same, diff.size))
        kk.append(np.tile(diff, same.size))

    empty = np.empty(0, dtype=int)
    return TripletSet(
        i=np.concatenate(ii) if ii else empty,
        j=np.concatenate(jj) if jj else empty,
        k=np.concatenate(kk) if kk else empty,
        pairs=np.concatenate(prs) if prs else np.empty((0, 2), dtype=int),
        k1=k1, k2=k2, n=n,
    )


def _same_class_neighbors(X, y, k1):
    lists = [np.empty(0, dtype=int)] * X.shape[0]
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        if members.size < 2:
            continue
        take = min(k1, members.size - 1)
        sq = pairwise_sq_dists(X[members], X[members])
        np.fill_diagonal(sq, np.inf)
        order = np.argsort(sq, axis=1, kind="stable")[:, :take]
        for local, gi in enumerate(members):
            lists[gi] = members[order[local]]
    return lists


def _diff_class_neighbors(X, y, k2):
    n = X.shape[0]
    lists = [np.empty(0, dtype=int)] * n
    for start in range(0, n, BLOCK):
        stop = min(start + BLOCK, n)
        sq = pairwise_sq_dists(X[start:stop], X)
        sq[y[start:stop, None] == y[None, :]] = np.inf
        avail = (np.isfinite(sq)).sum(axis=1)
        order = np.argsort(sq, axis=1, kind="stable")
        for row, i in enumerate(range(start, stop)):
            take = min(k2, int(avail[row]))
            lists[i] = order[row, :take].copy()
    return lists
