"""Fused level-2 kernels and blocked pivot-row application.

Kernels update numpy views in place, touch each stored output entry exactly
once per call, and are dtype-agnostic (exact scalars flow through).  Output
rows/columns can be partitioned across a small thread pool; partitions are
computed deterministically from the worker count, and output regions are
disjoint, so results do not depend on scheduling.  Callers must not alias a
kernel's output with any of its inputs.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import instrument
from .core import SkewTridiagonal

# Column-jam width for the rank-2 updates: each outer iteration emits the
# fused updates for this many columns at once.
JAM = 64

# Row chunk for pivot application; bounds the gather working set.
PIVOT_ROW_BLOCK = 512

_workers = max(1, int(os.environ.get("OMP_NUM_THREADS", "1") or 1))
_pool = None
_pool_size = 0


def set_workers(n):
    """Global worker-count ceiling for all parallel kernels."""
    global _workers
    _workers = max(1, int(n))


def get_workers():
    return _workers


def _executor(w):
    global _pool, _pool_size
    if _pool is None or _pool_size < w:
        if _pool is not None:
            _pool.shutdown(wait=True)
        _pool = ThreadPoolExecutor(max_workers=w)
        _pool_size = w
    return _pool


def _partition(n, w):
    """Contiguous near-equal ranges; deterministic in (n, w)."""
    bounds = [n * i // w for i in range(w + 1)]
    return [(bounds[i], bounds[i + 1]) for i in range(w) if bounds[i] < bounds[i + 1]]


def _triangular_partition(n, w):
    """Column ranges with near-equal strictly-lower area under column j -> n-1-j."""
    total = n * (n - 1) // 2
    ranges = []
    lo = 0
    for i in range(1, w + 1):
        # smallest hi with area(0..hi) >= total * i / w
        target = total * i // w
        hi = lo
        while hi < n and (n * hi - hi * (hi + 1) // 2) < target:
            hi += 1
        if i == w:
            hi = n
        if hi > lo:
            ranges.append((lo, hi))
        lo = hi
    return ranges


def _run(work, ranges, workers):
    w = 1 if workers is None else workers
    if w <= 1 or len(ranges) <= 1:
        for lo, hi in ranges:
            work(lo, hi)
        return
    ex = _executor(w)
    list(ex.map(lambda r: work(*r), ranges))


def _resolve(workers):
    return _workers if workers is None else max(1, workers)


def skew_rank2(a, alpha, x, y, beta=1, workers=None):
    """A := beta*A + alpha*(x y^T - y x^T), strictly-lower triangle only.

    ``a`` is an n x n lower-storage view; every stored entry is read and
    written exactly once.
    """
    n = a.shape[0]
    if a.shape[1] != n or len(x) != n or len(y) != n:
        raise ValueError("dimension mismatch")
    instrument.record_call("skew_rank2")
    instrument.add_flops("level2", 2 * n * max(n - 1, 0))
    if n <= 1:
        return
    if alpha == 0 and beta == 1:
        return

    def work(clo, chi):
        for j0 in range(clo, chi, JAM):
            j1 = min(j0 + JAM, chi)
            jet = min(j1, n)
            for j in range(j0, jet):
                seg = a[j + 1:jet, j]
                if seg.size:
                    upd = alpha * (x[j + 1:jet] * y[j] - y[j + 1:jet] * x[j])
                    if beta == 1:
                        seg += upd
                    else:
                        a[j + 1:jet, j] = beta * seg + upd
            if j1 < n:
                blk = a[j1:, j0:j1]
                upd = alpha * (np.outer(x[j1:], y[j0:j1]) - np.outer(y[j1:], x[j0:j1]))
                if beta == 1:
                    blk += upd
                else:
                    blk[:] = beta * blk + upd

    w = _resolve(workers)
    ranges = _triangular_partition(n, w) if w > 1 else [(0, n)]
    _run(work, ranges, w)


def gen_rank2(a, alpha, x, u, y, v, beta=1, workers=None, fused=True):
    """A := beta*A + alpha*(x u^T + y v^T) on a p x q rectangle.

    ``fused=False`` falls back to two sequential rank-1 passes over A (the
    optimization-ladder baseline; more memory traffic, same result).
    """
    p, q = a.shape
    if len(x) != p or len(y) != p or len(u) != q or len(v) != q:
        raise ValueError("dimension mismatch")
    instrument.record_call("gen_rank2")
    instrument.add_flops("level2", 4 * p * q)
    if p == 0 or q == 0 or (alpha == 0 and beta == 1):
        return

    def work(rlo, rhi):
        blk = a[rlo:rhi]
        if fused:
            upd = alpha * (np.outer(x[rlo:rhi], u) + np.outer(y[rlo:rhi], v))
            if beta == 1:
                blk += upd
            else:
                blk[:] = beta * blk + upd
        else:
            if beta != 1:
                blk *= beta
            blk += alpha * np.outer(x[rlo:rhi], u)
            blk += alpha * np.outer(y[rlo:rhi], v)

    w = _resolve(workers)
    _run(work, _partition(p, w), w)


def tridiag_matvec(tau, x):
    """z = T x for the skew tridiagonal with subdiagonal tau (len(x)-1)."""
    k = len(x)
    if len(tau) != max(k - 1, 0):
        raise ValueError("dimension mismatch")
    z = np.zeros(k, dtype=np.result_type(tau.dtype, x.dtype) if k else x.dtype)
    if k > 1:
        z[1:] = tau * x[:-1]
        z[:-1] -= tau * x[1:]
    return z


def skew_tridiag_gemv(y, alpha, a, t: SkewTridiagonal, x, beta=1, workers=None,
                      fused=True, tail_from=0):
    """y := beta*y + alpha * (A (T x))[tail_from:].

    The tridiagonal multiply is a cheap O(k) pass over x; with
    ``fused=False`` T is materialized densely first (ladder baseline).

    ``tail_from`` lets a caller hand over A at full column height even when
    only the tail rows of the product are wanted: when A is then contiguous
    the product is formed whole on the fast matmul path and the head rows
    are discarded (a memory-path decision; flop counts reflect only the
    rows kept).
    """
    p, k = a.shape
    rows = p - tail_from
    if t.m != k or len(x) != k or len(y) != rows or rows < 0:
        raise ValueError("dimension mismatch")
    instrument.record_call("skew_tridiag_gemv")
    instrument.add_flops("level2", 2 * rows * k + 4 * k)
    if alpha == 0:
        if beta != 1:
            y *= beta
        return
    if fused:
        z = tridiag_matvec(t.tau, x)
    else:
        z = t.dense().dot(np.asarray(x))
        instrument.add_flops("level2", 2 * k * k)
    if rows == 0:
        return
    w = _resolve(workers)
    if fused and w == 1 and tail_from > 0 and a.flags.f_contiguous:
        # fused fast path: evaluating the product at full column height
        # keeps A contiguous for the matmul backend (head rows discarded);
        # the unfused baseline below sticks to plain calls on the operands
        # as given
        acc = a.dot(z)
        if beta == 1:
            y += alpha * acc[tail_from:]
        else:
            y[:] = beta * y + alpha * acc[tail_from:]
        return
    atail = a[tail_from:]

    def work(rlo, rhi):
        acc = atail[rlo:rhi].dot(z)
        if beta == 1:
            y[rlo:rhi] += alpha * acc
        else:
            y[rlo:rhi] = beta * y[rlo:rhi] + alpha * acc

    _run(work, _partition(rows, w), w)


def apply_row_pivots(block, p, forward=True, workers=None):
    """Permute the rows of ``block`` by P(p) (or its inverse).

    The swap sequence is collapsed into a single gather so each element
    moves once; the gather walks the rows in fixed-size chunks for temporal
    locality, and workers split the column dimension.
    """
    n, q = block.shape if block.ndim == 2 else (block.shape[0], 1)
    pivots = p.pivots if hasattr(p, "pivots") else np.asarray(p)
    idx = np.arange(n)
    for k, off in enumerate(pivots):
        if off:
            j = k + off
            if j >= n or off < 0:
                raise IndexError("pivot out of range")
            idx[k], idx[j] = idx[j], idx[k]
    if not forward:
        inv = np.empty_like(idx)
        inv[idx] = np.arange(n)
        idx = inv
    moved = int(np.count_nonzero(idx != np.arange(n)))
    instrument.record_call("apply_row_pivots")
    instrument.add_flops("pivot", moved * q)
    if moved == 0 or q == 0:
        return
    touched = np.flatnonzero(idx != np.arange(n))
    lo, hi = int(touched[0]), int(touched[-1]) + 1
    sub = idx[lo:hi]

    if block.ndim == 1:
        block[lo:hi] = block[sub]
        return

    def work(clo, chi):
        for c0 in range(clo, chi, PIVOT_ROW_BLOCK):
            c1 = min(c0 + PIVOT_ROW_BLOCK, chi)
            block[lo:hi, c0:c1] = block[sub, c0:c1]

    w = _resolve(workers)
    _run(work, _partition(q, w), w)


@dataclass
class PanelView:
    """Trapezoidal update region of a lower-stored skew matrix.

    The trapezoid spans rows/cols [start, n) limited to columns < climit:
    a square skew part on [start, climit) plus the general rectangle below
    it.  Writes never touch positions at or above the diagonal.
    """

    buf: np.ndarray
    start: int
    climit: int

    @property
    def square(self):
        return self.buf[self.start:self.climit, self.start:self.climit]

    @property
    def rect(self):
        return self.buf[self.climit:, self.start:self.climit]


def trapezoid_rank2(buf, start, climit, alpha, x, y, workers=None, fused=True):
    """Apply alpha*(x y^T - y x^T) to rows/cols [start, n) of ``buf``,
    restricted to columns < climit.

    Realized as a square skew_rank2 plus a rectangular gen_rank2 rather
    than a bespoke trapezoid kernel.  x and y are indexed from ``start``.
    """
    n = buf.shape[0]
    climit = min(climit, n)
    nsq = climit - start
    if nsq <= 0:
        return
    view = PanelView(buf, start, climit)
    skew_rank2(view.square, alpha, x[:nsq], y[:nsq], 1, workers=workers)
    if climit < n:
        gen_rank2(view.rect, alpha, x[nsq:], y[:nsq], -y[nsq:], x[:nsq], 1,
                  workers=workers, fused=fused)
