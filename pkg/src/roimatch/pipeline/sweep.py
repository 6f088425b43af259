"""Hyper-parameter sweep with the cross-embedding ablation, and the edge-builder comparison."""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace

from ..graphio import RoiGraph
from ..synthgen import SynthSpec, generate
from .interpret import _write_csv
from .metrics import _fmt
from .protocol import run_protocol
from .training import TrainConfig, TrainingError

log = logging.getLogger(__name__)

DEFAULT_EDGE_PARAMS = {"knn": {"k": 2}, "delaunay": {}, "distance": {"threshold": 40.0}}


@dataclass
class SweepGrid:
    M: list[int] = field(default_factory=lambda: [1, 2, 3, 4])
    L: list[int] = field(default_factory=lambda: [2, 3, 4, 5])
    d: list[int] = field(default_factory=lambda: [32, 64, 128, 256])

    def validate(self) -> None:
        for name in ("M", "L", "d"):
            vals = getattr(self, name)
            if not vals or any(int(v) < 1 for v in vals):
                raise ValueError(f"sweep grid {name} must be a non-empty list of positive integers")


@dataclass
class SweepRow:
    M: int
    L: int
    d: int
    cross_enabled: bool
    mean_sn: float
    std_sn: float
    error: str | None = None


def sweep(graphs: list[RoiGraph], grid: SweepGrid, config: TrainConfig, seed: int | None = None,
          repeats: int | None = None, progress=None) -> list[SweepRow]:
    """Mean SN per (M, L, d) cell with cross embedding on and off.

    All cells share the same derived split and init seeds. The disabled
    variant does not depend on M, so it is trained once per (L, d) and
    reported against every M. A failing cell is recorded with its error and
    the sweep moves on.
    """
    grid.validate()
    rows: list[SweepRow] = []
    disabled_cache: dict[tuple[int, int], tuple[float, float, str | None]] = {}

    def cell(M, L, d, enabled):
        net = replace(config.net, M=M, L=L, d_intra=d, d_cross=d, cross_embedding_enabled=enabled,
                      recompute_affinity=False)
        cfg = replace(config, net=net)
        try:
            rep = run_protocol(graphs, cfg, seed, repeats)
            s = rep.summary["sn"]
            return s["mean"], s["std"], None
        except (TrainingError, ValueError, FloatingPointError) as exc:
            log.error("sweep cell M=%d L=%d d=%d cross=%s failed: %s", M, L, d, enabled, exc)
            return math.nan, math.nan, str(exc)

    for M, L, d in itertools.product(grid.M, grid.L, grid.d):
        mean, std, err = cell(M, L, d, True)
        rows.append(SweepRow(M, L, d, True, mean, std, err))
        if (L, d) not in disabled_cache:
            disabled_cache[(L, d)] = cell(M, L, d, False)
        rows.append(SweepRow(M, L, d, False, *disabled_cache[(L, d)]))
        if progress is not None:
            progress(rows[-2], rows[-1])
    return rows


def write_sweep_csv(path, rows: list[SweepRow]) -> None:
    _write_csv(path, ["M", "L", "d", "cross_enabled", "mean_sn", "std_sn"],
               [[r.M, r.L, r.d, int(r.cross_enabled), _fmt(r.mean_sn), _fmt(r.std_sn)] for r in rows])


@dataclass
class EdgeComparisonRow:
    method: str
    connected_fraction: float
    acc: float
    f1: float
    sn: float
    sp: float
    error: str | None = None


def compare_edge_builders(spec: SynthSpec, config: TrainConfig, seed: int | None = None,
                          repeats: int | None = None, methods=("knn", "delaunay", "distance"),
                          edge_params: dict | None = None) -> list[EdgeComparisonRow]:
    """Run the protocol on the same cohort built with each edge builder."""
    params = {**DEFAULT_EDGE_PARAMS, **(edge_params or {})}
    rows = []
    for method in methods:
        s = replace(spec, edge_method=method, edge_params=dict(params.get(method, {})))
        graphs, _ = generate(s)
        connected = sum(g.is_connected() for g in graphs) / len(graphs)
        try:
            rep = run_protocol(graphs, config, seed, repeats)
            m = {k: v["mean"] for k, v in rep.summary.items()}
            rows.append(EdgeComparisonRow(method, connected, m["acc"], m["f1"], m["sn"], m["sp"]))
        except (TrainingError, ValueError, FloatingPointError) as exc:
            log.error("edge method %s failed: %s", method, exc)
            rows.append(EdgeComparisonRow(method, connected, *[math.nan] * 4, str(exc)))
    return rows


def write_edge_csv(path, rows: list[EdgeComparisonRow]) -> None:
    _write_csv(path, ["method", "connected_fraction", "acc", "f1", "sn", "sp"],
               [[r.method, _fmt(r.connected_fraction), _fmt(r.acc), _fmt(r.f1), _fmt(r.sn), _fmt(r.sp)]
                for r in rows])
