"""Blocked factorization drivers.

Variant 1 factors a panel, applies one sandwiched rank-k trailing update,
and finishes the iteration with the straggler rank-2 of the panel's last
transform.  The fused Variants 2a/2b eliminate that straggler: 2a delays
the last transform and folds it into the next iteration's sandwich, 2b has
each panel compute one extra column of L and T so its sandwich already
covers a full set of couplings (the same state shifted one column).  The
left-looking driver pulls all prior couplings into the panel block from
the left instead of updating the trailing matrix, and the two-step driver
realizes the 2a sandwich as W = A S plus a skew rank-2k whose zero columns
are skipped.

Pivoted factorization exists for the right-looking family only; its panel
factorization is forced to left-looking because pivoting can pull in
trailing columns that have not seen the current panel's updates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import instrument
from .core import (InvalidVariant, PivotUnsupported, SkewMatrixLower,
                   SkewTridiagonal, form_s_splitting)
from .instrument import FlopCounter, counting
from .kernels2 import apply_row_pivots, skew_rank2, skew_tridiag_gemv
from .kernels3 import form_w, skew_rank2k, skew_tridiag_gemm, skew_tridiag_rankk
from .unblocked import (FactorizationResult, _apply_pending, _finalize,
                        _panel_ll, _panel_rl, _panel_twostep, _workbuf)

DEFAULT_BLOCK = 256
PIVOTED_FUSED = ("var1", "var2a", "var2b")


@dataclass
class Features:
    """Runtime feature toggles mirroring the optimization ladder, so the
    step-by-step comparison needs no rebuilds.

    * ``fused_l2``: fused level-2 kernels (vs. two rank-1 passes and a
      materialized tridiagonal matrix-vector product).
    * ``parallel_l2``: let level-2 kernels and pivot application use the
      global worker pool (level-3 always may).
    * ``external_t``: tau in an external vector with explicit unit
      subdiagonal entries, enabling single fused trailing updates; when
      off, Variant 1 falls back to the split stripe + sandwich updates.
    * ``fused_l3``: produce the tridiagonal-multiplied operand panels
      inside packing (vs. materializing them wholly and updating the full
      square).
    """

    fused_l2: bool = True
    parallel_l2: bool = False
    external_t: bool = True
    fused_l3: bool = True

    @property
    def l2_workers(self):
        return None if self.parallel_l2 else 1


#: Optimization ladder: cumulative feature steps; step5 additionally
#: switches the driver from blk-var1 to blk-var2b.
LADDER = {
    "step0": Features(fused_l2=False, parallel_l2=False, external_t=False, fused_l3=False),
    "step1": Features(fused_l2=True, parallel_l2=False, external_t=False, fused_l3=False),
    "step2": Features(fused_l2=True, parallel_l2=True, external_t=False, fused_l3=False),
    "step3": Features(fused_l2=True, parallel_l2=True, external_t=True, fused_l3=False),
    "step4": Features(fused_l2=True, parallel_l2=True, external_t=True, fused_l3=True),
    "step5": Features(fused_l2=True, parallel_l2=True, external_t=True, fused_l3=True),
}
LADDER_VARIANT = {name: ("blk-var2b" if name == "step5" else "blk-var1") for name in LADDER}


def _check_block(b):
    if b < 1:
        raise ValueError("block size must be >= 1")


def _require_external_t(f, who):
    if not f.external_t:
        raise InvalidVariant(f"{who} needs tau in an external vector (external_t)")


def _run_panel(work, tau, base, nelim, variant, f, carry, pivot=False, pivots=None):
    climit = base + nelim
    lo = base - 1 if carry else base
    kw = dict(workers=f.l2_workers, fused_l2=f.fused_l2, external_t=f.external_t)
    with instrument.scope("panel"):
        if variant == "ll":
            _panel_ll(work, tau, base, nelim, lo, pivot=pivot, pivots=pivots,
                      swap_from=lo, **kw)
        elif variant == "rl":
            if carry:
                _apply_pending(work, base, climit, workers=f.l2_workers, fused_l2=f.fused_l2)
            _panel_rl(work, tau, base, nelim, climit, **kw)
        elif variant == "twostep":
            if carry:
                _apply_pending(work, base, climit, workers=f.l2_workers, fused_l2=f.fused_l2)
            _panel_twostep(work, tau, base, nelim, climit, **kw)
        else:
            raise InvalidVariant(f"unknown panel variant {variant!r}")


def _apply_couplings(work, tau, c0, c1, region, f, rank2k=False):
    """Sandwiched trailing update: C := C - A T~ A^T on rows/cols
    [region:), where A = L columns c0..c1 and T~ = tridiag(tau[c0:c1]).

    With ``rank2k=True`` the update runs as W = A S followed by a skew
    rank-2k whose zero columns are skipped.
    """
    m = work.shape[0]
    if m - region < 2 or c1 - c0 < 1:
        return
    a = work[region:, c0 - 1:c1]
    tt = SkewTridiagonal(tau[c0:c1])
    cview = work[region:, region:]
    if rank2k:
        w = form_w(a, form_s_splitting(tt))
        skew_rank2k(cview, 1, a, w, 1)
    else:
        skew_tridiag_rankk(cview, -1, a, tt, 1, fused=f.fused_l3)


def _straggler(work, tau, rt, f):
    """Trailing rank-2 of the panel's last transform (Variant 1 only)."""
    m = work.shape[0]
    if m - rt < 2:
        return
    skew_rank2(work[rt + 1:, rt + 1:], 1, work[rt + 1:, rt - 1],
               work[rt + 1:, rt], 1, workers=f.l2_workers)


def _split_trailing(work, tau, r, rt, f):
    """Variant 1 trailing update without explicit unit subdiagonal entries:
    the stripe below the next pivot column is updated by explicit
    matrix-vector terms, and the remaining block by a sandwich whose A
    operand excludes the unit row."""
    m = work.shape[0]
    be = rt - r
    if be >= 2:
        l32 = work[rt, r:rt - 1]
        l42 = work[rt + 1:, r:rt - 1]
        l43 = work[rt + 1:, rt - 1]
        x43 = work[rt + 1:, rt]
        tau32 = tau[rt - 1]
        skew_tridiag_gemv(x43, -1, work[:, r:rt - 1],
                          SkewTridiagonal(tau[r + 1:rt - 1]), l32, 1,
                          workers=f.l2_workers, fused=f.fused_l2, tail_from=rt + 1)
        if l32.size and x43.size:
            x43 -= (tau32 * l32[-1]) * l43
            x43 += tau32 * l42[:, -1]
            instrument.add_flops("level2", 4 * x43.size)
        if m - rt - 1 >= 2:
            skew_tridiag_rankk(work[rt + 1:, rt + 1:], -1, work[rt + 1:, r:rt],
                               SkewTridiagonal(tau[r + 1:rt]), 1, fused=f.fused_l3)


def ltlt_blk_var1(x: SkewMatrixLower, b=DEFAULT_BLOCK, panel_variant="ll",
                  features=None) -> FactorizationResult:
    """Blocked right-looking factorization (Variant 1): panel, sandwiched
    rank-k trailing update, straggler rank-2.  Block size 1 reproduces the
    unblocked right-looking driver."""
    _check_block(b)
    f = features or Features()
    work, tau = _workbuf(x)
    m = x.m
    fc = FlopCounter()
    with counting(fc):
        r = 0
        while r < m - 1:
            be = min(b, m - 1 - r)
            _run_panel(work, tau, r, be, panel_variant, f, carry=False)
            rt = r + be
            if f.external_t:
                _apply_couplings(work, tau, r + 1, rt, rt, f)
            else:
                _split_trailing(work, tau, r, rt, f)
            _straggler(work, tau, rt, f)
            r = rt
    return _finalize(work, tau, None, m, fc, external_t=f.external_t)


def ltlt_blk_var2a(x: SkewMatrixLower, b=DEFAULT_BLOCK, panel_variant="ll",
                   features=None) -> FactorizationResult:
    """Fused blocked right-looking (Variant 2a): the last transform of each
    panel stays unapplied and rides along in the next iteration's sandwich,
    so no trailing rank-2 is ever issued."""
    _check_block(b)
    f = features or Features()
    _require_external_t(f, "blk-var2a")
    work, tau = _workbuf(x)
    m = x.m
    fc = FlopCounter()
    with counting(fc):
        r = 0
        pending = False
        while r < m - 1:
            be = min(b, m - 1 - r)
            _run_panel(work, tau, r, be, panel_variant, f, carry=pending)
            rt = r + be
            _apply_couplings(work, tau, r if pending else r + 1, rt, rt, f)
            pending = True
            r = rt
    return _finalize(work, tau, None, m, fc)


def ltlt_blk_var2b(x: SkewMatrixLower, b=DEFAULT_BLOCK, panel_variant="ll",
                   features=None) -> FactorizationResult:
    """Fused blocked right-looking (Variant 2b): each panel computes one
    extra column of L and T (the first panel eliminates b+1 columns), so
    every sandwich covers a complete set of couplings; the state matches
    Variant 2a shifted by one column."""
    _check_block(b)
    f = features or Features()
    _require_external_t(f, "blk-var2b")
    work, tau = _workbuf(x)
    m = x.m
    fc = FlopCounter()
    with counting(fc):
        done = 0
        first = True
        while done < m - 1:
            nelim = min(b + (1 if first else 0), m - 1 - done)
            _run_panel(work, tau, done, nelim, panel_variant, f, carry=not first)
            new = done + nelim
            _apply_couplings(work, tau, 1 if first else done, new, new, f)
            done = new
            first = False
    return _finalize(work, tau, None, m, fc)


def ltlt_blk_left(x: SkewMatrixLower, b=DEFAULT_BLOCK, pivot=False,
                  panel_variant="ll", features=None) -> FactorizationResult:
    """Blocked left-looking factorization: before each panel is factored,
    all prior couplings are pulled into it from the left with one
    trapezoidal sandwiched matrix-matrix product; the trailing matrix is
    never updated.

    Pivoting is impossible at the blocked level: selecting the columns to
    pivot into the panel would require updates that depend on pivots not
    yet chosen.
    """
    if pivot:
        raise PivotUnsupported("a blocked pivoted left-looking algorithm cannot exist")
    _check_block(b)
    f = features or Features()
    _require_external_t(f, "blk-left")
    work, tau = _workbuf(x)
    m = x.m
    fc = FlopCounter()
    with counting(fc):
        r = 0
        while r < m - 1:
            be = min(b, m - 1 - r)
            if r >= 2:
                skew_tridiag_gemm(work[r:, r:r + be], -1, work[r:, 0:r],
                                  SkewTridiagonal(tau[1:r]), work[r:r + be, 0:r].T,
                                  1, tril=True, fused=f.fused_l3)
            _run_panel(work, tau, r, be, panel_variant, f, carry=r > 0)
            r += be
    return _finalize(work, tau, None, m, fc)


def ltlt_blk_twostep(x: SkewMatrixLower, b=DEFAULT_BLOCK, panel_variant="ll",
                     features=None) -> FactorizationResult:
    """Blocked two-step path: Variant 2a's iteration with the sandwich
    realized as W = A S plus a skew rank-2k update with k = floor(b/2)
    effective columns; with b = 2 each block update is a single rank-2
    pair.  Unpivoted only; the pivoted path uses the var2* drivers."""
    _check_block(b)
    f = features or Features()
    _require_external_t(f, "blk-2step")
    work, tau = _workbuf(x)
    m = x.m
    fc = FlopCounter()
    with counting(fc):
        r = 0
        pending = False
        while r < m - 1:
            be = min(b, m - 1 - r)
            _run_panel(work, tau, r, be, panel_variant, f, carry=pending)
            rt = r + be
            _apply_couplings(work, tau, r if pending else r + 1, rt, rt, f, rank2k=True)
            pending = True
            r = rt
    return _finalize(work, tau, None, m, fc)


def _block_pivots(work, pivots, base, nelim, lo, f):
    """Row-swap the L columns left of the panel's immediate-swap region."""
    if lo <= 0 or nelim == 0:
        return
    sub = pivots[base + 1: base + nelim + 1]
    if np.any(sub):
        apply_row_pivots(work[base + 1:, :lo], sub, forward=True,
                         workers=f.l2_workers)


def ltlt_blk_piv(x: SkewMatrixLower, b=DEFAULT_BLOCK, fused="var1",
                 features=None) -> FactorizationResult:
    """Pivoted blocked right-looking factorization.

    The panel factorization is a pivoted left-looking pass over the entire
    unfactorized trailing matrix; symmetric swaps cover everything from the
    panel's leftmost active column rightward immediately, and the panel's
    pivots are then applied to the older L columns in one blocked pass.
    ``fused`` picks the trailing-update scheme (var1 straggler, or the 2a /
    2b fused sandwiches).  The first pivot is never computed: it is zero.
    """
    if fused not in PIVOTED_FUSED:
        raise InvalidVariant(f"fused must be one of {PIVOTED_FUSED}, got {fused!r}")
    _check_block(b)
    f = features or Features()
    if fused != "var1":
        _require_external_t(f, f"pivoted blk-{fused}")
    work, tau = _workbuf(x)
    m = x.m
    pivots = np.zeros(m, dtype=np.int64)
    fc = FlopCounter()
    with counting(fc):
        if fused == "var2b":
            done = 0
            first = True
            while done < m - 1:
                nelim = min(b + (1 if first else 0), m - 1 - done)
                lo = 0 if first else done - 1
                with instrument.scope("panel"):
                    _panel_ll(work, tau, done, nelim, lo, pivot=True,
                              pivots=pivots, swap_from=lo,
                              workers=f.l2_workers, fused_l2=f.fused_l2)
                _block_pivots(work, pivots, done, nelim, lo, f)
                new = done + nelim
                _apply_couplings(work, tau, 1 if first else done, new, new, f)
                done = new
                first = False
        else:
            r = 0
            pending = False
            while r < m - 1:
                be = min(b, m - 1 - r)
                carry = fused == "var2a" and pending
                lo = r - 1 if carry else r
                with instrument.scope("panel"):
                    _panel_ll(work, tau, r, be, lo, pivot=True, pivots=pivots,
                              swap_from=lo, workers=f.l2_workers,
                              fused_l2=f.fused_l2, external_t=f.external_t)
                _block_pivots(work, pivots, r, be, lo, f)
                rt = r + be
                if fused == "var1":
                    if f.external_t:
                        _apply_couplings(work, tau, r + 1, rt, rt, f)
                    else:
                        _split_trailing(work, tau, r, rt, f)
                    _straggler(work, tau, rt, f)
                else:
                    _apply_couplings(work, tau, r if pending else r + 1, rt, rt, f)
                pending = True
                r = rt
    return _finalize(work, tau, pivots, m, fc, external_t=f.external_t)
