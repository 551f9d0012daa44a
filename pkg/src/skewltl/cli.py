"""Command-line harness: factorization, verification, and benchmarking.

Batch, non-interactive.  ``factor`` runs one factorization and reports the
reconstruction residual, ``verify`` runs the invariant suite, and ``bench``
sweeps variants/sizes/blocks and emits CSV rows
``variant,m,block,threads,pivot,seconds,gflops,flops_l2,flops_l3``.
"""

from __future__ import annotations

import argparse
import os
import statistics
import sys
import tempfile
import time

import numpy as np

from . import kernels2, kernels3
from .apps import pfaffian, solve
from .blocked import (DEFAULT_BLOCK, LADDER, LADDER_VARIANT, Features,
                      ltlt_blk_left, ltlt_blk_piv, ltlt_blk_twostep,
                      ltlt_blk_var1, ltlt_blk_var2a, ltlt_blk_var2b)
from .core import (InvalidVariant, PivotUnsupported, SkewMatrixLower,
                   ZeroPivot, random_skew, reconstruct)
from .mmio import mm_read, mm_write
from .unblocked import (ltlt_unb_ll, ltlt_unb_rl, ltlt_unb_twostep)

VARIANT_NAMES = ("unb-rl", "unb-ll", "unb-2step", "blk-var1", "blk-var2a",
                 "blk-var2b", "blk-left", "blk-2step")

WORKED_EXAMPLE = (2.0, 1.0, 3.0, 4.0, 1.0, 5.0)


def worked_example_matrix():
    x = SkewMatrixLower.zeros(4)
    (x.data[1, 0], x.data[2, 0], x.data[3, 0],
     x.data[2, 1], x.data[3, 1], x.data[3, 2]) = WORKED_EXAMPLE
    return x


def run_variant(name, x, block=DEFAULT_BLOCK, pivot=False, features=None):
    """Dispatch a factorization by CLI variant name."""
    if name == "unb-rl":
        return ltlt_unb_rl(x, pivot=pivot)
    if name == "unb-ll":
        return ltlt_unb_ll(x, pivot=pivot)
    if name == "unb-2step":
        return ltlt_unb_twostep(x, pivot=pivot)
    if name == "blk-var1":
        if pivot:
            return ltlt_blk_piv(x, b=block, fused="var1", features=features)
        return ltlt_blk_var1(x, b=block, features=features)
    if name == "blk-var2a":
        if pivot:
            return ltlt_blk_piv(x, b=block, fused="var2a", features=features)
        return ltlt_blk_var2a(x, b=block, features=features)
    if name == "blk-var2b":
        if pivot:
            return ltlt_blk_piv(x, b=block, fused="var2b", features=features)
        return ltlt_blk_var2b(x, b=block, features=features)
    if name == "blk-left":
        return ltlt_blk_left(x, b=block, pivot=pivot, features=features)
    if name == "blk-2step":
        if pivot:
            raise PivotUnsupported("blk-2step has no pivoted path; use blk-var2a/blk-var2b")
        return ltlt_blk_twostep(x, b=block, features=features)
    raise InvalidVariant(f"unknown variant {name!r}; choose from {VARIANT_NAMES}")


def residual_norm(x, result):
    rec = reconstruct(result.l, result.t, result.p)
    num = np.linalg.norm(rec.dense() - x.dense())
    den = np.linalg.norm(x.dense())
    return float(num / den) if den else float(num)


def _model_name(variant):
    return "unb-rl" if variant.startswith("unb-rl") else "blk-var1"


def _write_factor_files(prefix, result):
    m = result.l.m
    ldense = result.l.dense()
    rows = [(i, j, ldense[i, j]) for j in range(m) for i in range(j, m) if ldense[i, j] != 0]
    with open(prefix + ".L.mtx", "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{m} {m} {len(rows)}\n")
        for i, j, v in rows:
            fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")
    np.savetxt(prefix + ".tau.txt", np.asarray(result.t.tau, dtype=float))
    np.savetxt(prefix + ".p.txt", result.p.pivots, fmt="%d")


def cmd_factor(args):
    kernels2.set_workers(args.threads)
    if args.preset:
        if args.preset != "worked-example":
            print(f"unknown preset {args.preset!r}", file=sys.stderr)
            return 1
        x = worked_example_matrix()
    elif args.infile:
        try:
            x = mm_read(args.infile)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    else:
        x = random_skew(args.size, seed=args.seed)
    feats = Features(parallel_l2=args.threads > 1)
    try:
        result = run_variant(args.variant, x, block=args.block, pivot=args.pivot,
                             features=feats)
    except ZeroPivot as exc:
        print(f"error: breakdown, zero pivot in column {exc.column}; rerun with --pivot",
              file=sys.stderr)
        return 1
    except (PivotUnsupported, InvalidVariant) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    res = residual_norm(x, result)
    if x.m <= 8:
        taus = ", ".join(f"{v:g}" for v in result.t.tau)
        print(f"tau = {taus}")
        if result.p.nontrivial:
            print(f"pivots = {result.p.pivots.tolist()}")
    print(f"m={x.m} variant={args.variant} pivot={args.pivot} "
          f"residual={res:.3e} seed={args.seed}")
    if args.out:
        _write_factor_files(args.out, result)
        print(f"wrote {args.out}.L.mtx, {args.out}.tau.txt, {args.out}.p.txt")
    return 0


def _bench_one(variant, m, block, pivot, threads, seed, reps, features=None):
    x = random_skew(m, seed=seed)
    times = []
    result = None
    for _ in range(reps):
        t0 = time.perf_counter()
        result = run_variant(variant, x, block=block, pivot=pivot, features=features)
        times.append(time.perf_counter() - t0)
    seconds = statistics.median(times)
    from .oracle import flop_model
    gflops = flop_model(_model_name(variant), m) / seconds / 1e9
    fc = result.flops
    return (seconds, gflops, fc.level2 + fc.panel, fc.level3)


def cmd_bench(args):
    kernels2.set_workers(args.threads)
    if args.cache_mc or args.cache_kc or args.cache_nc:
        kernels3.set_block_config(**{k: v for k, v in (
            ("m_c", args.cache_mc), ("k_c", args.cache_kc), ("n_c", args.cache_nc)) if v})
    sizes = [int(s) for s in (args.sizes.split(",") if args.sizes else [args.size])]
    blocks = [int(s) for s in (args.blocks.split(",") if args.blocks else [args.block])]
    variants = args.variant.split(",")
    for v in variants:
        if v not in VARIANT_NAMES:
            print(f"error: unknown variant {v!r}", file=sys.stderr)
            return 1
    if not sizes or min(sizes) < 2 or min(blocks) < 1:
        print("error: invalid sweep", file=sys.stderr)
        return 1
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        out.write(f"# seed={args.seed}\n")
        out.write("variant,m,block,threads,pivot,seconds,gflops,flops_l2,flops_l3\n")
        for m in sizes:
            if args.opt_ladder:
                for step, feats in LADDER.items():
                    variant = LADDER_VARIANT[step]
                    if args.pivot and not feats.external_t:
                        feats = Features(fused_l2=feats.fused_l2,
                                         parallel_l2=feats.parallel_l2,
                                         external_t=True, fused_l3=feats.fused_l3)
                    feats = Features(feats.fused_l2, feats.parallel_l2 and args.threads > 1,
                                     feats.external_t, feats.fused_l3)
                    for b in blocks:
                        sec, gf, l2, l3 = _bench_one(variant, m, b, args.pivot,
                                                     args.threads, args.seed,
                                                     args.reps, feats)
                        out.write(f"{variant}+{step},{m},{b},{args.threads},"
                                  f"{int(args.pivot)},{sec:.6f},{gf:.3f},{l2},{l3}\n")
            else:
                feats = Features(parallel_l2=args.threads > 1)
                for variant in variants:
                    for b in blocks:
                        sec, gf, l2, l3 = _bench_one(variant, m, b, args.pivot,
                                                     args.threads, args.seed,
                                                     args.reps, feats)
                        out.write(f"{variant},{m},{b},{args.threads},"
                                  f"{int(args.pivot)},{sec:.6f},{gf:.3f},{l2},{l3}\n")
    finally:
        if args.out:
            out.close()
    return 0


def _verify_checks(max_size, seed, exact):
    """Yield (name, callable) pairs; each callable raises AssertionError on
    failure."""
    from fractions import Fraction

    from . import instrument, oracle
    from .core import (SkewTridiagonal, apply_symmetric_pivot,
                       form_s_splitting, pack_in_place, unpack_in_place)
    from .unblocked import ltlt_unb_panel

    eps = np.finfo(float).eps
    rng = np.random.Generator(np.random.Philox(seed))
    msmall = min(max_size, 24)

    def chk_splitting():
        for m in (1, 2, 5, msmall):
            tau = rng.standard_normal(max(m - 1, 0))
            t = SkewTridiagonal(tau)
            s = form_s_splitting(t).dense(float)
            assert np.array_equal(s - s.T, t.dense()), "S - S^T != T"
            assert not s[1::2, :].any(), "odd rows of S not zero"

    def chk_pivot_chain():
        m = min(max_size, 12)
        x = random_skew(m, seed=seed + 1)
        dense = x.dense()
        perm = np.arange(m)
        for k, off in [(0, 3), (2, m - 1 - 2), (1, 0), (4, 2)]:
            apply_symmetric_pivot(x, k, off)
            perm[k], perm[k + off] = perm[k + off], perm[k]
        expect = dense[np.ix_(perm, perm)]
        assert np.array_equal(x.dense(), expect), "pivot chain != dense P X P^T"

    def chk_pack():
        m = min(max_size, 20)
        x = random_skew(m, seed=seed + 2)
        r = ltlt_unb_ll(x, pivot=True)
        box = x.copy()
        pack_in_place(box, r.l, r.t)
        l2, t2 = unpack_in_place(box)
        assert np.array_equal(t2.tau, r.t.tau), "tau roundtrip"
        assert np.array_equal(l2.dense(), r.l.dense()), "L roundtrip"

    def chk_mm():
        m = min(max_size, 16)
        x = random_skew(m, seed=seed + 3)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "x.mtx")
            mm_write(path, x)
            y = mm_read(path)
        assert np.array_equal(x.dense(), y.dense()), "matrix market roundtrip"

    def chk_kernels():
        m, k = min(max_size, 40), 9
        a = rng.standard_normal((m, k))
        tau = rng.standard_normal(k - 1)
        t = SkewTridiagonal(tau)
        c = random_skew(m, seed=seed + 4)
        got = c.copy()
        kernels3.skew_tridiag_rankk(got.data, -1.0, a, t, 1.0)
        want = c.dense() - oracle.sandwich_matmul(a, t.dense(), a.T)
        il, jl = np.tril_indices(m, -1)
        err = np.max(np.abs(got.data[il, jl] - want[il, jl]))
        assert err <= 1e-13 * k * max(1.0, np.max(np.abs(want))), f"rankk err {err}"

    def chk_residuals():
        for m in (10, min(max_size, 100)):
            x = random_skew(m, seed=seed + 5)
            bound = 50 * eps * m * np.linalg.norm(x.dense())
            for variant in VARIANT_NAMES:
                for pivot in (False, True):
                    if pivot and variant in ("blk-left", "blk-2step"):
                        continue
                    r = run_variant(variant, x, block=min(DEFAULT_BLOCK, 16), pivot=pivot)
                    rec = reconstruct(r.l, r.t, r.p)
                    err = np.linalg.norm(rec.dense() - x.dense())
                    assert err <= bound, f"{variant} pivot={pivot} m={m}: {err} > {bound}"

    def chk_pivot_bound():
        for trial in range(10):
            m = int(rng.integers(4, min(max_size, 32) + 1))
            x = random_skew(m, seed=seed + 10 + trial)
            x.data[1, 0] = 1e-13
            r = ltlt_blk_piv(x, b=8)
            assert r.l.max_abs() <= 1.0 + 1e-15, "pivoted |L| > 1"

    def chk_pfaffian():
        x = worked_example_matrix()
        assert abs(pfaffian(x) - 21.0) < 1e-12, "worked example Pfaffian"
        for trial in range(8):
            m = int(rng.integers(1, 6)) * 2
            y = random_skew(m, seed=seed + 30 + trial)
            pf = pfaffian(y)
            det = np.linalg.det(y.dense())
            assert abs(pf * pf - det) <= 1e-10 * max(1.0, abs(det)), "Pf^2 != det"

    def chk_solve():
        m = min(max_size if max_size % 2 == 0 else max_size - 1, 40)
        x = random_skew(m, seed=seed + 50)
        want = rng.standard_normal(m)
        b = x.dense().dot(want)
        got = solve(x, b)
        assert np.allclose(got, want, atol=1e-8 * max(1, np.max(np.abs(want)))), "solve"

    def chk_trace():
        x = random_skew(min(max_size, 48), seed=seed + 60)
        tr = instrument.CallTrace()
        with instrument.tracing(tr):
            ltlt_blk_var2b(x, b=8)
        assert tr.count("skew_rank2", "trailing") == 0, "var2b issued trailing rank-2"

    def chk_panel():
        m = min(max_size, 12)
        x = random_skew(m, seed=seed + 70)
        full = ltlt_unb_ll(x, pivot=True)
        part = ltlt_unb_panel(x, 4, variant="ll", pivot=True)
        assert np.array_equal(part.t.tau[:4], full.t.tau[:4]), "panel tau prefix"
        assert np.array_equal(part.p.pivots, full.p.pivots[:5]), "panel pivot prefix"

    def chk_exact():
        count = 0
        trial = 0
        while count < 25:
            trial += 1
            m = int(rng.integers(2, 9))
            ints = rng.integers(-9, 10, size=m * (m - 1) // 2)
            x = oracle.exact_from_int(ints, m)
            try:
                lm, tau, _p = oracle.gauss_elim_exact(x)
            except ZeroPivot:
                continue
            count += 1
            for fn in (ltlt_unb_rl, ltlt_unb_ll, ltlt_unb_twostep):
                r = fn(x)
                assert np.array_equal(r.t.tau, tau), f"{fn.__name__} tau (exact)"
                assert np.array_equal(r.l.dense(), lm), f"{fn.__name__} L (exact)"
        wx = oracle.exact_from_int([2, 1, 3, 4, 1, 5], 4)
        _lm, tau, _p = oracle.gauss_elim_exact(wx)
        assert tau[2] == Fraction(21, 2), "worked example tau_2 != 21/2"
        assert pfaffian(wx) == 21, "worked example exact Pfaffian"

    checks = [
        ("s-splitting", chk_splitting),
        ("symmetric-pivot-chain", chk_pivot_chain),
        ("pack-unpack", chk_pack),
        ("matrix-market-roundtrip", chk_mm),
        ("kernel-vs-oracle", chk_kernels),
        ("residual-all-variants", chk_residuals),
        ("pivot-bound", chk_pivot_bound),
        ("pfaffian", chk_pfaffian),
        ("solve", chk_solve),
        ("fused-trace", chk_trace),
        ("panel-prefix", chk_panel),
    ]
    if exact:
        checks.append(("exact-rational-agreement", chk_exact))
    return checks


def cmd_verify(args):
    kernels2.set_workers(args.threads)
    failures = 0
    for name, fn in _verify_checks(args.max_size, args.seed, args.exact):
        try:
            fn()
        except AssertionError as exc:
            failures += 1
            print(f"FAIL {name}: {exc}")
        except Exception as exc:  # broken invariant machinery is also a failure
            failures += 1
            print(f"FAIL {name}: {type(exc).__name__}: {exc}")
        else:
            print(f"ok   {name}")
    print(f"{'FAILED' if failures else 'PASSED'} ({failures} failures)")
    return 1 if failures else 0


def build_parser():
    ap = argparse.ArgumentParser(prog="skewltl",
                                 description="Skew-symmetric L T L^T factorization toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    eachthreads = dict(type=int, default=int(os.environ.get("OMP_NUM_THREADS", "1") or 1),
                       help="worker-count ceiling (default: OMP_NUM_THREADS or 1)")

    fp = sub.add_parser("factor", help="factor one matrix and report the residual")
    fp.add_argument("--size", type=int, default=100)
    fp.add_argument("--seed", type=int, default=0)
    fp.add_argument("--in", dest="infile", metavar="PATH", help="Matrix Market input")
    fp.add_argument("--preset", choices=["worked-example"])
    fp.add_argument("--variant", default="blk-var2b", choices=VARIANT_NAMES)
    fp.add_argument("--block", type=int, default=DEFAULT_BLOCK)
    fp.add_argument("--pivot", action="store_true")
    fp.add_argument("--threads", **eachthreads)
    fp.add_argument("--out", metavar="PREFIX", help="write L/tau/p files")
    fp.set_defaults(func=cmd_factor)

    vp = sub.add_parser("verify", help="run the invariant suite")
    vp.add_argument("--max-size", type=int, default=64)
    vp.add_argument("--seed", type=int, default=0)
    vp.add_argument("--exact", action="store_true", help="include rational-arithmetic oracles")
    vp.add_argument("--threads", **eachthreads)
    vp.set_defaults(func=cmd_verify)

    bp = sub.add_parser("bench", help="benchmark sweep, CSV output")
    bp.add_argument("--size", type=int, default=1024)
    bp.add_argument("--sizes", help="comma-separated m values")
    bp.add_argument("--block", type=int, default=DEFAULT_BLOCK)
    bp.add_argument("--blocks", help="comma-separated block sizes")
    bp.add_argument("--variant", default="blk-var2b",
                    help="variant name or comma-separated list")
    bp.add_argument("--pivot", action="store_true")
    bp.add_argument("--threads", **eachthreads)
    bp.add_argument("--reps", type=int, default=3)
    bp.add_argument("--seed", type=int, default=0)
    bp.add_argument("--out", metavar="PATH", help="CSV file (default stdout)")
    bp.add_argument("--opt-ladder", action="store_true",
                    help="rerun each configuration across the optimization ladder")
    bp.add_argument("--cache-mc", type=int, help="level-3 m_c blocking constant")
    bp.add_argument("--cache-kc", type=int, help="level-3 k_c blocking constant")
    bp.add_argument("--cache-nc", type=int, help="level-3 n_c blocking constant")
    bp.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


def console():
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
