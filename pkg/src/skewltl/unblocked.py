"""Unblocked factorization drivers and the panel cores the blocked drivers
reuse: right-looking (modified Parlett-Reid), left-looking (modified
Aasen), and the two-step driver that eliminates a pair of columns per
iteration.

Working layout: the input is copied into a buffer that the elimination
overwrites column by column.  Once column g is eliminated, buffer column g
holds column g+1 of L shifted one column left (with an explicit 1.0 in the
subdiagonal slot once tau[g] has moved to the external vector), so a
finished panel is directly consumable as the A operand of the sandwiched
trailing updates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import instrument
from .core import (InvalidVariant, PermutationVector, SkewMatrixLower,
                   SkewTridiagonal, UnitLowerFactor, ZeroPivot,
                   _sym_swap_lower)
from .instrument import FlopCounter, counting
from .kernels2 import skew_rank2, skew_tridiag_gemv, trapezoid_rank2

VARIANTS = ("rl", "ll", "twostep")


@dataclass
class FactorizationResult:
    """L, T, pivots, and the flop tally of one factorization.

    ``p`` is empty when the factorization ran unpivoted.
    """

    l: UnitLowerFactor
    t: SkewTridiagonal
    p: PermutationVector
    flops: FlopCounter


def _workbuf(x: SkewMatrixLower):
    if x.m < 1:
        raise ValueError("m >= 1 required")
    work = np.array(x.data, order="F")
    tau = np.zeros(max(x.m - 1, 0), dtype=work.dtype)
    return work, tau


def _finalize(work, tau, pivots, m, fc, external_t=True, first_column=None):
    if not external_t:
        for j in range(m - 1):
            work[j + 1, j] = 1
    if pivots is None:
        p = PermutationVector(np.zeros(0, dtype=np.int64), m)
    else:
        p = PermutationVector(pivots, m)
    return FactorizationResult(
        UnitLowerFactor(work, "ones", first_column), SkewTridiagonal(tau), p, fc)


def _eliminate(work, tau, g, external_t=True, pivot=False, pivots=None, swap_from=0):
    """Turn buffer column g into column g+1 of L and record tau[g].

    With pivoting, the largest-magnitude element of the subcolumn is
    swapped to the top first (ties to the lowest index) and the offset is
    recorded; the symmetric swap covers all columns >= swap_from, leaving
    older columns for the caller to fix up in one blocked pass.
    """
    m = work.shape[0]
    if pivot:
        sub = work[g + 1:, g]
        off = int(np.argmax(np.abs(sub)))
        if pivots is not None:
            pivots[g + 1] = off
        if off:
            a = g + 1 - swap_from
            _sym_swap_lower(work[swap_from:, swap_from:], a, a + off)
    piv = work[g + 1, g]
    tau[g] = piv
    below = work[g + 2:, g]
    if piv == 0:
        if not pivot and below.size and np.any(below != 0):
            raise ZeroPivot(g)
        # whole subcolumn zero: tau 0, L column is a basis vector; continue
    else:
        below /= piv
        instrument.add_flops("level2", below.size)
    if external_t:
        work[g + 1, g] = 1


def _panel_ll(work, tau, base, nelim, lo, *, pivot=False, pivots=None,
              swap_from=None, workers=None, fused_l2=True, external_t=True):
    """Left-looking eliminations of columns [base, base + nelim).

    ``lo`` is the leftmost buffer column participating in the column
    updates: lo == base for a fresh panel, lo == base - 1 when the delayed
    transform of the previous block still has to be folded in.  Each column
    is updated against the L columns and tau values to its left, then
    (optionally) pivoted, then eliminated; nothing outside the column being
    processed is written, so panel writes stay inside the panel.
    """
    if swap_from is None:
        swap_from = lo
    for g in range(base, base + nelim):
        if g - lo >= 2:
            if external_t:
                xrow = work[g, lo:g]
            else:
                xrow = work[g, lo:g].copy()
                xrow[-1] = 1
            # full-height A keeps the operand contiguous; the kernel drops
            # the rows above g+1
            skew_tridiag_gemv(work[g + 1:, g], -1, work[:, lo:g],
                              SkewTridiagonal(tau[lo + 1:g]), xrow, 1,
                              workers=workers, fused=fused_l2, tail_from=g + 1)
        _eliminate(work, tau, g, external_t, pivot, pivots, swap_from)


def _panel_rl(work, tau, base, nelim, climit, *, workers=None, fused_l2=True,
              external_t=True, pivot=False, pivots=None, swap_from=None):
    """Right-looking eliminations of [base, base + nelim) with the trailing
    rank-2 updates restricted to columns < climit (square skew part plus
    rectangular general part)."""
    if swap_from is None:
        swap_from = base
    for g in range(base, base + nelim):
        _eliminate(work, tau, g, external_t, pivot, pivots, swap_from)
        s = g + 2
        trapezoid_rank2(work, s, climit, 1, work[s:, g], work[s:, g + 1],
                        workers=workers, fused=fused_l2)


def _panel_twostep(work, tau, base, nelim, climit, *, workers=None,
                   fused_l2=True, external_t=True, pivot=False, pivots=None,
                   swap_from=None):
    """Two-step eliminations of [base, base + nelim): because the diagonal
    partner of the pivot is zero, the transform from column g leaves column
    g+1 untouched, so a pair of transforms comes straight from current data
    and their two couplings collapse into one rank-2 via the splitting
    W = L S.  An odd leftover column falls back to one right-looking step.
    """
    if swap_from is None:
        swap_from = base
    m = work.shape[0]
    end = base + nelim
    g = base
    while g < end:
        if g + 1 >= end:
            _eliminate(work, tau, g, external_t, pivot, pivots, swap_from)
            trapezoid_rank2(work, g + 2, climit, 1, work[g + 2:, g],
                            work[g + 2:, g + 1], workers=workers, fused=fused_l2)
            g += 1
            continue
        _eliminate(work, tau, g, external_t, pivot, pivots, swap_from)
        _eliminate(work, tau, g + 1, external_t, pivot, pivots, swap_from)
        s = g + 3
        if g + 2 < min(climit, m):
            lcol1 = work[s:, g]        # L column g+1 below row g+2
            lcol2 = work[s:, g + 1]    # L column g+2
            # fold the first coupling into column g+2 alone ...
            work[s:, g + 2] -= tau[g + 1] * (work[g + 2, g] * lcol2 - lcol1)
            # ... and combine both couplings in one rank-2 with w, the only
            # nonzero column of L S for this pair
            wv = work[s:, g + 2] - tau[g + 1] * lcol1
            instrument.add_flops("level2", 6 * max(m - s, 0))
            trapezoid_rank2(work, s, climit, -1, wv, lcol2,
                            workers=workers, fused=fused_l2)
        g += 2


def _apply_pending(work, base, climit, workers=None, fused_l2=True):
    """Apply the delayed coupling of the previous block, restricted to
    columns < climit: pairs L column ``base`` with current column data."""
    s = base + 1
    trapezoid_rank2(work, s, climit, 1, work[s:, base - 1], work[s:, base],
                    workers=workers, fused=fused_l2)


def _apply_first_column(work, first_column):
    m = work.shape[0]
    fcvec = np.asarray(first_column)
    if fcvec.shape != (m - 1,):
        raise ValueError("first_column must have length m - 1")
    fcvec = fcvec.astype(work.dtype, copy=True) if work.dtype != object else fcvec.copy()
    skew_rank2(work[1:, 1:], 1, fcvec, work[1:, 0], 1)
    return fcvec


def ltlt_unb_rl(x: SkewMatrixLower, pivot=False) -> FactorizationResult:
    """Right-looking (modified Parlett-Reid) factorization: eliminate one
    column per iteration, immediately applying its skew rank-2 update to
    the whole trailing matrix.  Roughly 2m^3/3 flops."""
    work, tau = _workbuf(x)
    m = x.m
    pivots = np.zeros(m, dtype=np.int64) if pivot else None
    fc = FlopCounter()
    with counting(fc):
        _panel_rl(work, tau, 0, m - 1, m, pivot=pivot, pivots=pivots, swap_from=0)
    return _finalize(work, tau, pivots, m, fc)


def ltlt_unb_ll(x: SkewMatrixLower, pivot=False, first_column=None) -> FactorizationResult:
    """Left-looking (modified Aasen) factorization: each column is updated
    against all previously computed factors through one fused
    tridiagonal-sandwiched matrix-vector product (the Hessenberg factor is
    never materialized), then eliminated.  Roughly m^3/3 flops.

    ``first_column`` selects a non-default first column of L; the matching
    first transform is applied up front and the standard loop then runs
    unchanged.
    """
    if pivot and first_column is not None:
        raise ValueError("first_column is only supported without pivoting")
    work, tau = _workbuf(x)
    m = x.m
    pivots = np.zeros(m, dtype=np.int64) if pivot else None
    fc = FlopCounter()
    fcvec = None
    with counting(fc):
        if first_column is not None:
            fcvec = _apply_first_column(work, first_column)
        _panel_ll(work, tau, 0, m - 1, 0, pivot=pivot, pivots=pivots, swap_from=0)
    return _finalize(work, tau, pivots, m, fc, first_column=fcvec)


def ltlt_unb_twostep(x: SkewMatrixLower, pivot=False) -> FactorizationResult:
    """Two-step right-looking factorization: two columns eliminated per
    iteration with a single trailing rank-2, halving the flops of the
    plain right-looking driver; both subdiagonal values and both L columns
    of each pair are produced."""
    work, tau = _workbuf(x)
    m = x.m
    pivots = np.zeros(m, dtype=np.int64) if pivot else None
    fc = FlopCounter()
    with counting(fc):
        _panel_twostep(work, tau, 0, m - 1, m, pivot=pivot, pivots=pivots, swap_from=0)
    return _finalize(work, tau, pivots, m, fc)


def ltlt_unb_panel(x: SkewMatrixLower, panel_width, variant="ll", pivot=False,
                   first_column=None) -> FactorizationResult:
    """Factor only the first ``panel_width`` columns; updates stay inside
    the panel.  The entire remaining matrix must be passed in: with
    pivoting, symmetric swaps reach across all of it, which also forces the
    left-looking variant.

    The returned factors are partial: only the first panel_width columns of
    L/T (and pivots) are populated.
    """
    if variant not in VARIANTS:
        raise InvalidVariant(f"unknown panel variant {variant!r}")
    if pivot and variant != "ll":
        raise InvalidVariant("a pivoted panel factorization must be left-looking")
    if pivot and first_column is not None:
        raise ValueError("first_column is only supported without pivoting")
    work, tau = _workbuf(x)
    m = x.m
    nelim = min(panel_width, m - 1)
    climit = min(panel_width, m)
    pivots = np.zeros(m, dtype=np.int64) if pivot else None
    fc = FlopCounter()
    fcvec = None
    with counting(fc):
        if first_column is not None:
            fcvec = _apply_first_column(work, first_column)
        with instrument.scope("panel"):
            if variant == "ll":
                _panel_ll(work, tau, 0, nelim, 0, pivot=pivot, pivots=pivots, swap_from=0)
            elif variant == "rl":
                _panel_rl(work, tau, 0, nelim, climit)
            else:
                _panel_twostep(work, tau, 0, nelim, climit)
    lbuf = np.zeros_like(work)
    lbuf[:, :nelim] = work[:, :nelim]
    ptrim = pivots[:nelim + 1] if pivots is not None else None
    return _finalize(lbuf, tau, ptrim, m, fc, first_column=fcvec)
