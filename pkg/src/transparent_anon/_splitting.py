"""Exact scoring of ordered two-way splits, shared by l-cuts and divisions.

Records are addressed by their rank in id order, so sorting on
(value, rank) is sorting on (value, id). A split is described by a list of
columns (one column for an l-cut, one per sensitive value for a division);
the left part takes the first ``k`` entries of every column. Scores are
perimeters multiplied by a constant integer, so comparisons are exact.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .model import AttributeSchema, Record
from .recoding import PerimeterScale

# below this many records per split the pure-Python path is faster
_NUMPY_THRESHOLD = 256


class Workspace:
    def __init__(self, records: Sequence[Record], schema: AttributeSchema):
        self.records = sorted(records, key=lambda r: r.id)
        self.qi = [r.qi for r in self.records]
        self.sensitive = [r.sensitive for r in self.records]
        self.d = schema.d
        scale = PerimeterScale(schema)
        self.weights = scale.weights
        self.denominator = scale.denominator
        n = len(self.records)
        bound = max(n, 1) * self.d * max(self.denominator, 1) * 4
        self._numpy_ok = n > 0 and bound < 2**62
        if self._numpy_ok:
            self.Q = np.array(self.qi, dtype=np.int64).reshape(n, self.d)
            self.W = np.array(self.weights, dtype=np.int64)

    # -- ordering -------------------------------------------------------------

    def order(self, idx: Sequence[int], dim: int) -> list[int]:
        if self._numpy_ok and len(idx) >= _NUMPY_THRESHOLD:
            a = np.asarray(idx, dtype=np.int64)
            return a[np.lexsort((a, self.Q[a, dim]))].tolist()
        qi = self.qi
        return sorted(idx, key=lambda j: (qi[j][dim], j))

    # -- extent profiles ------------------------------------------------------

    def _prefix_py(self, cols: list[list[int]]) -> list[int]:
        """out[k] = scaled extent of the box around the first k rows of every column."""
        d, w, qi = self.d, self.weights, self.qi
        a = len(cols[0])
        lo = list(qi[cols[0][0]])
        hi = list(lo)
        out = [0] * (a + 1)
        for k in range(a):
            for col in cols:
                q = qi[col[k]]
                for i in range(d):
                    v = q[i]
                    if v < lo[i]:
                        lo[i] = v
                    elif v > hi[i]:
                        hi[i] = v
            out[k + 1] = sum((hi[i] - lo[i]) * w[i] for i in range(d))
        return out

    def _prefix_np(self, cols: list[list[int]]) -> np.ndarray:
        arr = self.Q[np.asarray(cols, dtype=np.int64)]  # (columns, a, d)
        lo = np.minimum.accumulate(arr, axis=1).min(axis=0)
        hi = np.maximum.accumulate(arr, axis=1).max(axis=0)
        ext = (hi - lo) @ self.W
        return np.concatenate(([0], ext))

    def profiles(self, cols: list[list[int]]):
        size = len(cols) * len(cols[0])
        if self._numpy_ok and size >= _NUMPY_THRESHOLD:
            pre = self._prefix_np(cols)
            suf = self._prefix_np([c[::-1] for c in cols])
        else:
            pre = self._prefix_py(cols)
            suf = self._prefix_py([c[::-1] for c in cols])
        return pre, suf

    # -- best split -----------------------------------------------------------

    def best_split(self, cols: list[list[int]], kmin: int, kmax: int, prefer_large_k: bool,
                   step: int = 1):
        """Minimum-score split over all dimensions and k in kmin, kmin+step, ... <= kmax.

        Ties go to the smallest dimension, then to the largest k when
        ``prefer_large_k`` else the smallest. Returns (score, dim, k,
        sorted columns) or None when the k range is empty.
        """
        a = len(cols[0])
        if kmin > kmax or kmin < 1 or kmax > a - 1:
            return None
        beta = len(cols)
        best = None
        for dim in range(self.d):
            scols = [self.order(c, dim) for c in cols]
            pre, suf = self.profiles(scols)
            if isinstance(pre, np.ndarray):
                ks = np.arange(kmin, kmax + 1, step, dtype=np.int64)
                scores = ks * pre[ks] + (a - ks) * suf[a - ks]
                s = int(scores.min())
                hits = np.flatnonzero(scores == s)
                k = int(ks[hits[-1] if prefer_large_k else hits[0]])
            else:
                s = k = None
                for kk in range(kmin, kmax + 1, step):
                    sc = kk * pre[kk] + (a - kk) * suf[a - kk]
                    if s is None or sc < s or (sc == s and prefer_large_k):
                        s, k = sc, kk
            s *= beta
            if best is None or s < best[0]:
                best = (s, dim, k, scols)
        return best
