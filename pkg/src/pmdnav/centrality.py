"""Edge betweenness centrality and min-max rescaling of edge scalar layers.

The betweenness kernel runs one single-source shortest-path pass per node with
Brandes-style dependency accumulation, on flat CSR/CSC arrays so it can be
JIT-compiled. Sources are split into fixed chunks whose partial fields are
summed in chunk order, which makes the result bit-reproducible for any worker
count and independent of graph document ordering (node ids are sorted first).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ValidationError
from .graph import StreetGraph

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap

# EdgeScalarField: a plain dict mapping edge id -> value >= 0, keyed exactly by
# the edges of the graph it was computed on.
EdgeScalarField = dict

_N_SOURCE_CHUNKS = 8  # fixed split; summation order never depends on timing


@njit(cache=True, nogil=True)
def _brandes_edge_kernel(indptr, head, wt, in_indptr, in_tail, in_eidx, in_wt,
                         src_lo, src_hi, bc):
    """Accumulate unnormalized edge betweenness for sources in [src_lo, src_hi).

    CSR (indptr/head/wt) drives the Dijkstra passes; CSC (in_*) drives the
    reverse dependency sweep. Path counts use float64; ties are detected by
    exact distance equality, which is sound for strictly positive weights (a
    tie is always the same finite sum of the same floats in settled order).
    """
    n = indptr.shape[0] - 1
    m = head.shape[0]
    dist = np.empty(n, np.float64)
    sigma = np.empty(n, np.float64)
    delta = np.empty(n, np.float64)
    order = np.empty(n, np.int32)  # settled order
    heap_d = np.empty(m + n + 1, np.float64)
    heap_v = np.empty(m + n + 1, np.int32)

    for s in range(src_lo, src_hi):
        for i in range(n):
            dist[i] = np.inf
            sigma[i] = 0.0
            delta[i] = 0.0
        dist[s] = 0.0
        sigma[s] = 1.0
        heap_d[0] = 0.0
        heap_v[0] = s
        size = 1
        n_settled = 0
        while size > 0:
            d0 = heap_d[0]
            v = heap_v[0]
            size -= 1
            heap_d[0] = heap_d[size]
            heap_v[0] = heap_v[size]
            # sift down, 4-ary
            i = 0
            while True:
                child = 4 * i + 1
                if child >= size:
                    break
                small = child
                last = child + 4
                if last > size:
                    last = size
                for k in range(child + 1, last):
                    if heap_d[k] < heap_d[small]:
                        small = k
                if heap_d[small] >= heap_d[i]:
                    break
                heap_d[i], heap_d[small] = heap_d[small], heap_d[i]
                heap_v[i], heap_v[small] = heap_v[small], heap_v[i]
                i = small
            if d0 > dist[v]:
                continue  # stale heap entry
            order[n_settled] = v
            n_settled += 1
            for k in range(indptr[v], indptr[v + 1]):
                w = head[k]
                nd = d0 + wt[k]
                if nd < dist[w]:
                    dist[w] = nd
                    sigma[w] = sigma[v]
                    j = size
                    heap_d[j] = nd
                    heap_v[j] = w
                    size += 1
                    while j > 0:
                        parent = (j - 1) // 4
                        if heap_d[parent] <= heap_d[j]:
                            break
                        heap_d[parent], heap_d[j] = heap_d[j], heap_d[parent]
                        heap_v[parent], heap_v[j] = heap_v[j], heap_v[parent]
                        j = parent
                elif nd == dist[w]:
                    sigma[w] += sigma[v]
        # reverse sweep: every settled node in decreasing-distance order
        for si in range(n_settled - 1, 0, -1):
            w = order[si]
            coeff = (1.0 + delta[w]) / sigma[w]
            for k in range(in_indptr[w], in_indptr[w + 1]):
                u = in_tail[k]
                if dist[u] + in_wt[k] == dist[w]:
                    c = sigma[u] * coeff
                    bc[in_eidx[k]] += c
                    delta[u] += c


class _Csr:
    """Canonical flat-array form of a StreetGraph for the betweenness kernel."""

    def __init__(self, g: StreetGraph, weighted: bool):
        self.node_ids = sorted(g.nodes)
        index = {nid: i for i, nid in enumerate(self.node_ids)}
        n = len(self.node_ids)
        edges = sorted(g.edges.values(), key=lambda e: (index[e.from_node], index[e.to_node], e.id))
        m = len(edges)
        self.edge_ids = [e.id for e in edges]
        self.indptr = np.zeros(n + 1, np.int32)
        self.head = np.empty(m, np.int32)
        self.wt = np.empty(m, np.float64)
        tail = np.empty(m, np.int32)
        for pos, e in enumerate(edges):
            tail[pos] = index[e.from_node]
            self.head[pos] = index[e.to_node]
            self.wt[pos] = e.length_m if weighted else 1.0
            self.indptr[tail[pos] + 1] += 1
        self.indptr = np.cumsum(self.indptr, dtype=np.int32)
        # CSC for the reverse sweep
        csc_order = np.lexsort((tail, self.head))
        in_counts = np.zeros(n + 1, np.int64)
        np.add.at(in_counts, self.head + 1, 1)
        self.in_indptr = np.cumsum(in_counts).astype(np.int32)
        self.in_tail = tail[csc_order]
        self.in_eidx = csc_order.astype(np.int32)
        self.in_wt = self.wt[csc_order]


def edge_betweenness(g: StreetGraph, weighted: bool = True) -> EdgeScalarField:
    """Normalized edge betweenness c_B(e) = sum over ordered node pairs of the
    fraction of shortest paths through e, scaled by 1/(n(n-1)).

    Shortest paths are length-weighted by default (``weighted=False`` switches
    to hop counts, for testing). Unreachable pairs contribute zero.
    """
    n = g.n_nodes
    if n < 2:
        raise ValidationError(f"betweenness needs at least 2 nodes, got {n}")
    csr = _Csr(g, weighted)
    m = g.n_edges
    bc = np.zeros(m, np.float64)
    if m:
        bounds = np.linspace(0, n, _N_SOURCE_CHUNKS + 1).astype(np.int64)
        spans = [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]

        def run_span(span) -> np.ndarray:
            part = np.zeros(m, np.float64)
            _brandes_edge_kernel(
                csr.indptr, csr.head, csr.wt,
                csr.in_indptr, csr.in_tail, csr.in_eidx, csr.in_wt,
                span[0], span[1], part,
            )
            return part

        workers = min(len(spans), os.cpu_count() or 1)
        if workers > 1 and _HAVE_NUMBA:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(run_span, spans))
        else:
            parts = [run_span(span) for span in spans]
        for part in parts:  # fixed chunk order: bit-reproducible sums
            bc += part
    norm = 1.0 / (n * (n - 1))
    field = {eid: float(bc[i]) * norm for i, eid in enumerate(csr.edge_ids)}
    # present in the graph's own edge order
    return {eid: field[eid] for eid in g.edges}


def minmax_scale(field: EdgeScalarField, target_max: float) -> EdgeScalarField:
    """Rescale values affinely onto [0, target_max]; a constant field maps to all zeros."""
    if not field:
        raise ValidationError("cannot min-max scale an empty field")
    if target_max < 0:
        raise ValidationError(f"target_max must be >= 0, got {target_max}")
    lo = min(field.values())
    hi = max(field.values())
    if hi == lo:
        return {k: 0.0 for k in field}
    span = hi - lo
    return {k: target_max * (v - lo) / span for k, v in field.items()}
