"""Line-oriented packing files and the per-(shape, n) record store.

A packing file looks like::

    diskpack-packing 1
    n 4
    shape square
    side 4
    radius 1
    m 1
    seed 7
    prov phase1_sweeps 3296
    1 -1 -1
    ...
    B 1 2
    W 1 left
    L 1 anchored
    A 3 5 1.0000000000000001e-08
    end

Indices are one-based. Floats carry 17 significant digits so that a
save/load round trip is bit-exact. Loading never validates geometry.
"""
from __future__ import annotations

import datetime
import json
import math
import os
from pathlib import Path

from .analysis import BondGraph, Contact
from .core import Configuration, make_region
from .errors import ParseError, VersionError
from .pipeline import PackingResult

MAGIC = "diskpack-packing"
FORMAT_VERSION = 1

_REGION_KEYS = {"square": ("side",), "rectangle": ("width", "height"), "triangle": ("side",),
                "circle": ("region_radius",)}

# Records closer than this in m count as ties; ties keep the stored entry.
RECORD_TIE = 1e-12


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def dumps(result: PackingResult) -> str:
    cfg = result.configuration
    region = cfg.region
    params = region.params()
    lines = [f"{MAGIC} {FORMAT_VERSION}", f"n {cfg.n}", f"shape {region.kind}"]
    for key in _REGION_KEYS[region.kind]:
        value = params["radius"] if key == "region_radius" else params[key]
        lines.append(f"{key} {fmt(value)}")
    lines.append(f"radius {fmt(cfg.radius)}")
    lines.append(f"m {fmt(result.m)}")
    prov = dict(result.provenance)
    lines.append(f"seed {json.dumps(prov.pop('seed', None))}")
    for key in sorted(prov):
        lines.append(f"prov {key} {json.dumps(prov[key], sort_keys=True)}")
    for k, (x, y) in enumerate(cfg.centers):
        lines.append(f"{k + 1} {fmt(x)} {fmt(y)}")
    g = result.bond_graph
    for i, j in sorted(g.disk_edges):
        lines.append(f"B {i + 1} {j + 1}")
    for i, w in sorted(g.wall_edges):
        lines.append(f"W {i + 1} {w}")
    for k, lab in enumerate(result.labels):
        lines.append(f"L {k + 1} {lab}")
    for c in g.ambiguous:
        other = c.b if c.is_wall else c.b + 1
        lines.append(f"A {c.a + 1} {other} {fmt(c.gap)}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_packing(result: PackingResult, path) -> None:
    Path(path).write_text(dumps(result), encoding="utf-8")


def _float(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"not a number: {tok!r}", lineno) from None


def _int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"not an integer: {tok!r}", lineno) from None


def loads(text: str) -> PackingResult:
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty file", 1)
    head = lines[0].split()
    if len(head) != 2 or head[0] != MAGIC:
        raise ParseError(f"missing {MAGIC!r} header", 1)
    if head[1] != str(FORMAT_VERSION):
        raise VersionError(f"unsupported packing format version {head[1]} (expected {FORMAT_VERSION})")

    header: dict[str, str] = {}
    prov: dict = {}
    centers: list[tuple[float, float]] = []
    disk_edges, wall_edges, labels, ambiguous = set(), set(), {}, []
    ended = False
    for lineno, raw in enumerate(lines[1:], start=2):
        toks = raw.split()
        if not toks:
            continue
        if ended:
            raise ParseError("content after 'end'", lineno)
        key = toks[0]
        if key == "end":
            ended = True
        elif key == "prov":
            if len(toks) < 3:
                raise ParseError("malformed provenance line", lineno)
            try:
                prov[toks[1]] = json.loads(raw.split(None, 2)[2])
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad provenance value: {exc}", lineno) from None
        elif key[0].isdigit():
            if len(toks) != 3:
                raise ParseError("disk line needs 'index x y'", lineno)
            if _int(toks[0], lineno) != len(centers) + 1:
                raise ParseError(f"disk index {toks[0]} out of order", lineno)
            centers.append((_float(toks[1], lineno), _float(toks[2], lineno)))
        elif key in ("B", "W", "L", "A"):
            if len(toks) != (4 if key == "A" else 3):
                raise ParseError(f"malformed {key} line", lineno)
            a = _int(toks[1], lineno) - 1
            if key == "B":
                b = _int(toks[2], lineno) - 1
                disk_edges.add((min(a, b), max(a, b)))
            elif key == "W":
                wall_edges.add((a, toks[2]))
            elif key == "L":
                labels[a] = toks[2]
            else:
                b = toks[2] if not toks[2].isdigit() else int(toks[2]) - 1
                ambiguous.append(Contact(a, b, _float(toks[3], lineno)))
        else:
            if len(toks) != 2:
                raise ParseError(f"malformed header line {key!r}", lineno)
            header[key] = toks[1]
    if not ended:
        raise ParseError("truncated file (no 'end' line)", len(lines))

    for key in ("n", "shape", "radius", "m"):
        if key not in header:
            raise ParseError(f"missing header {key!r}", len(lines))
    n = _int(header["n"], 2)
    if len(centers) != n:
        raise ParseError(f"expected {n} disk lines, found {len(centers)}", len(lines))
    shape = header["shape"]
    if shape not in _REGION_KEYS:
        raise ParseError(f"unknown shape {shape!r}", 3)
    params = {}
    for key in _REGION_KEYS[shape]:
        if key not in header:
            raise ParseError(f"missing header {key!r} for shape {shape}", len(lines))
        params["radius" if key == "region_radius" else key] = float(header[key])
    region = make_region(shape, **params)
    config = Configuration(centers, float(header["radius"]), region)
    if "seed" in header:
        prov["seed"] = json.loads(header["seed"])
    bonds = BondGraph(n, frozenset(disk_edges), frozenset(wall_edges), tuple(ambiguous),
                      frozenset(region.incident_walls()))
    label_list = [labels.get(k, "") for k in range(n)]
    return PackingResult(config, float(header["m"]), bonds, label_list, prov)


def load_packing(path) -> PackingResult:
    return loads(Path(path).read_text(encoding="utf-8"))


class RecordStore:
    """Best packing per (shape, n), one file each; never regresses."""

    def __init__(self, root):
        self.root = Path(root)

    def path(self, shape: str, n: int) -> Path:
        return self.root / f"{shape}_{n}.pack"

    def get(self, shape: str, n: int) -> PackingResult | None:
        p = self.path(shape, n)
        return load_packing(p) if p.exists() else None

    def insert(self, result: PackingResult) -> bool:
        """Store ``result`` if it beats the current record by more than the tie tolerance."""
        shape = result.configuration.region.kind
        current = self.get(shape, result.n)
        if current is not None and not result.m > current.m + RECORD_TIE:
            return False
        if math.isnan(result.m):
            return False
        self.root.mkdir(parents=True, exist_ok=True)
        stamped = PackingResult(result.configuration, result.m, result.bond_graph, result.labels,
                                {**result.provenance,
                                 "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat()})
        tmp = self.path(shape, result.n).with_suffix(".tmp")
        save_packing(stamped, tmp)
        os.replace(tmp, self.path(shape, result.n))
        return True
