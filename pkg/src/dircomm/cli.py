"""Command-line entry point: ``dircomm <command> ...``.

Exit status is 0 on success, 1 on a usage error and 2 on a runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .benchgen import PRESETS, BenchParams, generate
from .dcomp import directional_components
from .extract import EarlyStop, extract_community, submatrix_scan, write_scan_csv
from .graph import EdgeListError, EdgeMask, load_edge_list, write_edge_list
from .harvest import HarvestConfig, harvest, select_seed
from .io import (
    FormatError,
    read_communities,
    to_cover,
    write_communities,
    write_cover_file,
    write_manifest,
    write_metrics,
    write_trace,
)
from .measures import accuracy_report, conductance_or_one
from .rsvd import SparseUnitVector

log = logging.getLogger("dircomm")

THREADS_ENV = "DIRCOMM_THREADS"

# simulation protocol: grid, early stopping
BENCH_GRIDS = {"l0": (6.0, 11.0, 10), "en": (1.0, 4.7, 10)}
BENCH_STOP = EarlyStop(1.5, 0.6)
DEFAULT_GRIDS = {"l0": (10.0, 18.0, 200), "en": (2.0, 9.0, 200)}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _grid_k(text):
    try:
        a, b, c = text.split(":")
        a, b, c = float(a), float(b), int(c)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:end:count, got {text!r}") from None
    if c < 1:
        raise argparse.ArgumentTypeError("count must be positive")
    return a, b, c


def _cell(text):
    try:
        p, k, mu = text.split(":")
        if p not in PRESETS:
            raise ValueError
        return p, float(k), float(mu)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected preset:k:mu, got {text!r}") from None


def _stop(args):
    if args.no_early_stop:
        return None
    return EarlyStop(args.sp, args.sl)


def _add_solver_flags(p, sp=1.4, sl=0.4):
    p.add_argument("--penalty", choices=("l0", "en"), default="l0")
    p.add_argument("--grid-k", type=_grid_k, default=None,
                   help="start:end:count of the sparsity grid exponent")
    p.add_argument("--sp", type=float, default=sp, help="early-stop bounce factor")
    p.add_argument("--sl", type=float, default=sl, help="early-stop conductance bound")
    p.add_argument("--no-early-stop", action="store_true")
    p.add_argument("--omega", type=float, default=1.0, help="terminal size weight (L0)")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=200)


def _config(args, **kw) -> HarvestConfig:
    grid = args.grid_k or DEFAULT_GRIDS[args.penalty]
    return HarvestConfig(
        penalty=args.penalty, grid_k=grid, stop=_stop(args), omega=args.omega,
        tol=args.tol, max_iter=args.max_iter, **kw)


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands --------------------------------------------------------------

def cmd_generate(args):
    lo, hi = PRESETS[args.preset]
    params = BenchParams(n=args.n, k=args.k, mu=args.mu, size_min=lo, size_max=hi,
                         shuffle=args.shuffle, rng_seed=args.seed)
    t0 = time.perf_counter()
    g, truth = generate(params)
    out = _outdir(args.out)
    write_edge_list(g, out / "graph.edges")
    write_cover_file(g, truth.cover.communities, out / "truth.txt")
    write_cover_file(g, truth.planted.communities, out / "truth_planted.txt")
    write_manifest(out / "manifest.json", "generate", vars(params) | {"preset": args.preset},
                   seconds=time.perf_counter() - t0, n=g.n, m=g.m, communities=len(truth))
    print(f"wrote {g.m} edges, {len(truth)} communities to {out}")


def cmd_components(args):
    g = load_edge_list(args.edges)
    comps = directional_components(g)
    if args.out == "-":
        write_cover_file(g, comps, sys.stdout)
    else:
        write_cover_file(g, comps, args.out)
        print(f"{len(comps)} directional components")


def cmd_extract(args):
    g = load_edge_list(args.edges)
    mask = EdgeMask.full(g)
    seed = select_seed(g, mask) if args.seed_node is None else g.index_of(args.seed_node)
    grid = _config(args).grid()
    c, trace = extract_community(g, mask, grid, SparseUnitVector.indicator([seed]),
                                 _stop(args), args.tol, args.max_iter)
    write_communities(g, [(c, conductance_or_one(g, mask, c))], sys.stdout)
    if args.trace:
        write_trace(trace, args.trace)


def cmd_harvest(args):
    if not os.path.isfile(args.edges):
        raise FileNotFoundError(f"no such file: {args.edges}")
    g = load_edge_list(args.edges)
    cfg = _config(args, stop_fraction=args.stop_frac, max_communities=args.max_communities,
                  rng_seed=args.seed, seed_strategy=args.seed_strategy,
                  phi_reference=args.phi_reference)
    t0 = time.perf_counter()
    rec = harvest(g, cfg)
    seconds = time.perf_counter() - t0
    out = _outdir(args.out)
    write_communities(g, [(h.community, h.phi) for h in rec.communities], out / "communities.tsv")
    rows = [dict(id=k, n_source=h.community.S.size, n_terminal=h.community.T.size,
                 n_edges=h.n_edges, phi=repr(float(h.phi)),
                 phi_masked=repr(float(h.phi_masked)), commonality=repr(float(h.commonality)), grid_index=h.grid_index,
                 seed=g.labels[h.seed])
            for k, h in enumerate(rec.communities, start=1)]
    write_metrics(rows, out / "metrics.csv")
    traces = out / "traces"
    traces.mkdir(exist_ok=True)
    for k, h in enumerate(rec.communities, start=1):
        write_trace(h.trace, traces / f"trace_{k:04d}.csv")
    params = {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}
    write_manifest(out / "manifest.json", "harvest", params, [args.edges],
                   seconds=seconds, touches=rec.touches, communities=len(rec),
                   remaining_edges=rec.remaining_edges, failed_seeds=len(rec.failed_seeds))
    print(f"{len(rec)} communities, {rec.remaining_edges}/{g.m} edges left")


def cmd_evaluate(args):
    found = read_communities(args.found)
    truth = read_communities(args.truth)
    if args.graph:
        g = load_edge_list(args.graph)
        index = {str(lab): i for i, lab in enumerate(g.labels)}
    else:
        index = {}
        for it in truth + found:
            for x in it.S + it.T:
                index.setdefault(x, len(index))
    n = args.n or len(index)
    if n < len(index):
        raise UsageError("--n is smaller than the number of labels")
    s, t, mean = accuracy_report(to_cover(found, index, n), to_cover(truth, index, n, True),
                                 args.variant)
    print(f"source_nmi\t{s:.6f}\nterminal_nmi\t{t:.6f}\nmean\t{mean:.6f}")


def cmd_scan(args):
    g = load_edge_list(args.edges)
    refs = []
    if args.references:
        index = {str(lab): i for i, lab in enumerate(g.labels)}
        refs = to_cover(read_communities(args.references), index, g.n).communities
    pts = submatrix_scan(g, args.samples, args.omega, args.seed, refs)
    if args.out == "-":
        write_scan_csv(pts, sys.stdout)
    else:
        write_scan_csv(pts, args.out)


def bench_job(preset_name, k, mu, penalty, rep, seed):
    """One generate-and-harvest repetition; returns the mean NMI."""
    lo, hi = PRESETS[preset_name]
    g, truth = generate(BenchParams(k=k, mu=mu, size_min=lo, size_max=hi, rng_seed=seed))
    cfg = HarvestConfig(penalty=penalty, grid_k=BENCH_GRIDS[penalty], stop=BENCH_STOP,
                        stop_fraction=1e-12, max_communities=len(truth))
    rec = harvest(g, cfg)
    if len(rec) == 0:
        return 0.0
    return accuracy_report(rec.cover(g.n), truth.cover)[2]


def run_bench(cells, penalties, reps, seed, threads=1):
    """Mean and standard error of accuracy per (cell, penalty)."""
    ss = np.random.SeedSequence(seed)
    seeds = ss.generate_state(reps * len(cells)).reshape(len(cells), reps)
    jobs = [(c[0], c[1], c[2], pen, r, int(seeds[i, r]))
            for i, c in enumerate(cells) for pen in penalties for r in range(reps)]
    if threads > 1:
        with ProcessPoolExecutor(threads) as ex:
            acc = list(ex.map(bench_job, *zip(*jobs)))
    else:
        acc = [bench_job(*j) for j in jobs]
    rows = []
    for i, c in enumerate(cells):
        for pen in penalties:
            vals = [a for j, a in zip(jobs, acc) if j[:4] == (c[0], c[1], c[2], pen)]
            m = float(np.mean(vals))
            se = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
            rows.append(dict(preset=c[0], k=c[1], mu=c[2], penalty=pen, reps=len(vals),
                             mean=m, stderr=se))
    return rows


def cmd_bench(args):
    cells = args.cells or [(p, k, mu) for p in ("big", "small") for k in (5.0, 10.0, 20.0)
                           for mu in (0.05, 0.2, 0.4)]
    threads = args.threads or int(os.environ.get(THREADS_ENV, "1"))
    t0 = time.perf_counter()
    rows = run_bench(cells, args.penalties, args.reps, args.seed, threads)
    lines = ["preset,k,mu,penalty,reps,mean,stderr\n"]
    lines += [f"{r['preset']},{r['k']:g},{r['mu']:g},{r['penalty']},{r['reps']},"
              f"{r['mean']:.4f},{r['stderr']:.4f}\n" for r in rows]
    if args.out == "-":
        sys.stdout.write("".join(lines))
    else:
        Path(args.out).write_text("".join(lines), encoding="utf-8")
        write_manifest(Path(args.out).with_suffix(".manifest.json"), "bench",
                       dict(cells=cells, penalties=args.penalties, reps=args.reps,
                            seed=args.seed, grids=BENCH_GRIDS, sp=BENCH_STOP.s_p,
                            sl=BENCH_STOP.s_l),
                       seconds=time.perf_counter() - t0)


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="dircomm", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="sample a planted-community benchmark graph")
    p.add_argument("out", help="output directory")
    p.add_argument("--preset", choices=sorted(PRESETS), default="big")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--k", type=float, default=20.0)
    p.add_argument("--mu", type=float, default=0.1)
    p.add_argument("--shuffle", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("components", help="directional-component decomposition")
    p.add_argument("edges")
    p.add_argument("out", nargs="?", default="-")
    p.set_defaults(func=cmd_components)

    p = sub.add_parser("extract", help="extract one community from a seed")
    p.add_argument("edges")
    p.add_argument("--seed-node", default=None, help="seed label (default: max in-degree)")
    p.add_argument("--trace", default=None, help="write the conductance trace CSV here")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("harvest", help="harvest communities sequentially")
    p.add_argument("edges")
    p.add_argument("out", help="output directory")
    _add_solver_flags(p)
    p.add_argument("--stop-frac", type=float, default=0.10)
    p.add_argument("--max-communities", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seed-strategy", choices=("max_in_degree", "random"),
                   default="max_in_degree")
    p.add_argument("--phi-reference", choices=("original", "masked"), default="original")
    p.set_defaults(func=cmd_harvest)

    p = sub.add_parser("evaluate", help="overlapping NMI between two community files")
    p.add_argument("found")
    p.add_argument("truth")
    p.add_argument("--graph", default=None, help="edge list defining the node universe")
    p.add_argument("--n", type=int, default=None, help="size of the node universe")
    p.add_argument("--variant", choices=("max", "sum", "lfk"), default="max")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("scan", help="principal singular values of random sub-rectangles")
    p.add_argument("edges")
    p.add_argument("out", nargs="?", default="-")
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--references", default=None, help="cover file of extra reference points")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("bench", help="accuracy table over benchmark cells")
    p.add_argument("--reps", type=int, default=30)
    p.add_argument("--cells", type=_cell, nargs="+", default=None, metavar="PRESET:K:MU")
    p.add_argument("--penalties", nargs="+", choices=("l0", "en"), default=["l0", "en"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker processes (default ${THREADS_ENV} or 1)")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as e:
        print(f"dircomm: {e}", file=sys.stderr)
        return 1
    except (OSError, EdgeListError, FormatError, ValueError, KeyError, RuntimeError) as e:
        print(f"dircomm {args.command}: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
