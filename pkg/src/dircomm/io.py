"""Text formats for communities, covers, traces and run manifests.

Community files hold one community per line::

    id<TAB>phi<TAB>S:a,b,c<TAB>T:d,e

Cover files (ground truth, components) hold one pair per line::

    S: a b c | T: d e

Both use external node labels.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import platform
from typing import Iterable, NamedTuple

import numpy as np

from .graph import DirectedGraph
from .measures import Community, Cover

__all__ = [
    "LabeledCommunity",
    "write_communities",
    "read_communities",
    "write_cover_file",
    "read_cover_file",
    "to_cover",
    "write_metrics",
    "write_trace",
    "file_digest",
    "write_manifest",
]


class LabeledCommunity(NamedTuple):
    S: tuple[str, ...]
    T: tuple[str, ...]
    phi: float | None = None
    id: int | None = None


class FormatError(ValueError):
    pass


def _labels(g: DirectedGraph, idx) -> list[str]:
    return [str(g.labels[i]) for i in idx]


def _dest(dest):
    if hasattr(dest, "write"):
        return dest, False
    return open(dest, "w", encoding="utf-8", newline=""), True


def write_communities(g: DirectedGraph, items: Iterable[tuple[Community, float]], dest) -> None:
    """Write ``(community, phi)`` pairs, numbered from 1."""
    fh, close = _dest(dest)
    try:
        for k, (c, phi) in enumerate(items, start=1):
            S, T = ",".join(_labels(g, c.S)), ",".join(_labels(g, c.T))
            fh.write(f"{k}\t{float(phi)!r}\tS:{S}\tT:{T}\n")
    finally:
        if close:
            fh.close()


def _parse_side(tok, tag, lineno):
    if not tok.startswith(tag + ":"):
        raise FormatError(f"line {lineno}: expected '{tag}:' field")
    body = tok[len(tag) + 1:]
    return tuple(x for x in body.split(",") if x)


def _parse_pair(s, lineno):
    if "|" not in s:
        raise FormatError(f"line {lineno}: expected 'S: ... | T: ...'")
    left, right = s.split("|", 1)
    left, right = left.strip(), right.strip()
    if not left.startswith("S:") or not right.startswith("T:"):
        raise FormatError(f"line {lineno}: expected 'S: ... | T: ...'")
    return tuple(left[2:].split()), tuple(right[2:].split())


def read_communities(source) -> list[LabeledCommunity]:
    """Read a community file or a cover file (the format is detected per line)."""
    with open(source, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    out = []
    for lineno, line in enumerate(lines, start=1):
        s = line.rstrip("\n")
        if not s.strip() or s.lstrip().startswith("#"):
            continue
        if s.lstrip().startswith("S:"):
            S, T = _parse_pair(s, lineno)
            out.append(LabeledCommunity(S, T))
            continue
        tok = s.split("\t")
        if len(tok) != 4:
            raise FormatError(f"line {lineno}: expected 4 tab-separated fields")
        try:
            cid, phi = int(tok[0]), float(tok[1])
        except ValueError:
            raise FormatError(f"line {lineno}: bad id or phi") from None
        out.append(LabeledCommunity(_parse_side(tok[2], "S", lineno),
                                    _parse_side(tok[3], "T", lineno), phi, cid))
    return out


def write_cover_file(g: DirectedGraph, communities: Iterable[Community], dest) -> None:
    fh, close = _dest(dest)
    try:
        for c in communities:
            fh.write(f"S: {' '.join(_labels(g, c.S))} | T: {' '.join(_labels(g, c.T))}\n")
    finally:
        if close:
            fh.close()


def read_cover_file(source) -> list[LabeledCommunity]:
    return read_communities(source)


def to_cover(items: list[LabeledCommunity], index: dict[str, int], n: int,
             ground_truth: bool = False) -> Cover:
    """Map labeled communities onto node indices via ``index``."""
    comms = []
    for it in items:
        try:
            S = [index[x] for x in it.S]
            T = [index[x] for x in it.T]
        except KeyError as e:
            raise FormatError(f"unknown node label {e.args[0]!r}") from None
        comms.append(Community(np.array(S, dtype=np.int64), np.array(T, dtype=np.int64)))
    return Cover(comms, n, ground_truth)


def write_metrics(rows: list[dict], dest) -> None:
    """CSV with one row per community."""
    fields = ["id", "n_source", "n_terminal", "n_edges", "phi", "phi_masked",
              "commonality", "grid_index", "seed"]
    fh, close = _dest(dest)
    try:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in fields})
    finally:
        if close:
            fh.close()


def write_trace(trace, dest) -> None:
    fh, close = _dest(dest)
    try:
        fh.write("index,param,phi,objective,iterations,n_source,n_terminal,degenerate\n")
        for e in trace.entries:
            fh.write(f"{e.index},{float(e.param)!r},{float(e.phi)!r},{float(e.objective)!r},"
                     f"{e.iterations},{e.n_source},{e.n_terminal},{int(e.degenerate)}\n")
    finally:
        if close:
            fh.close()


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(path, command: str, params: dict, inputs: Iterable = (), **extra) -> dict:
    """Record everything needed to rerun a command."""
    from . import __version__

    man = {
        "command": command,
        "version": __version__,
        "params": params,
        "inputs": {os.fspath(p): file_digest(p) for p in inputs},
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    man.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(man, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return man
