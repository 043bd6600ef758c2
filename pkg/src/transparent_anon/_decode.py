"""Recovering which individuals can sit behind each published group."""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Iterator, Sequence

from .recoding import Anatomy, AnonymizedTable, Generalization


@dataclass(frozen=True)
class PublishedGroup:
    size: int
    sensitive: tuple[str, ...]
    box: tuple[tuple[int, int], ...] | None = None      # generalization
    qi: tuple[tuple[int, ...], ...] | None = None         # anatomy

    def admits(self, q: tuple[int, ...]) -> bool:
        if self.box is not None:
            return all(lo <= v <= hi for v, (lo, hi) in zip(q, self.box))
        return q in self._qi_set

    @property
    def _qi_set(self):
        return set(self.qi)

    def fits(self, qis: Sequence[tuple[int, ...]]) -> bool:
        """Would exactly these QI vectors publish as this group?"""
        if self.box is not None:
            return all(min(col) == lo and max(col) == hi
                       for col, (lo, hi) in zip(zip(*qis), self.box))
        return Counter(qis) == Counter(self.qi)


def published_groups(published: AnonymizedTable) -> list[PublishedGroup]:
    if isinstance(published, Generalization):
        return [PublishedGroup(len(g), g.sensitive, box=g.intervals) for g in published.groups]
    if isinstance(published, Anatomy):
        return [PublishedGroup(len(g), g.sensitive, qi=g.qi) for g in published.groups]
    raise TypeError(f"not a published table: {published!r}")


def decodings(groups: list[PublishedGroup],
              entries: Sequence[tuple[str, tuple[int, ...]]]) -> Iterator[list[tuple[int, ...]]]:
    """Every way to give each group a disjoint set of entries (by index) that
    would publish exactly as that group. Result lists follow ``groups`` order."""
    cands = [[j for j, (_, q) in enumerate(entries) if g.admits(q)] for g in groups]
    order = sorted(range(len(groups)), key=lambda i: (len(cands[i]), i))
    chosen: list[tuple[int, ...] | None] = [None] * len(groups)
    used: set[int] = set()

    def rec(pos: int):
        if pos == len(order):
            yield list(chosen)
            return
        gi = order[pos]
        g = groups[gi]
        free = [j for j in cands[gi] if j not in used]
        for combo in itertools.combinations(free, g.size):
            if not g.fits([entries[j][1] for j in combo]):
                continue
            chosen[gi] = combo
            used.update(combo)
            yield from rec(pos + 1)
            used.difference_update(combo)
        chosen[gi] = None

    yield from rec(0)
