"""Repeated split / train / evaluate runs with seeds derived from one top-level seed."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..graphio import make_split
from .metrics import METRICS, EvalReport, _fmt, _json_float, evaluate
from .model import derive_seed
from .training import TrainConfig, train

TEMPLATE_FRAC = 0.10
TRAIN_FRAC = 0.80


def summarize(reports: list[EvalReport]) -> dict[str, dict]:
    """Mean and sample std of each metric over the runs where it is defined."""
    out = {}
    for name in METRICS:
        vals = np.array([r.metrics[name] for r in reports], dtype=float)
        ok = vals[~np.isnan(vals)]
        mean = float(ok.mean()) if len(ok) else math.nan
        std = float(ok.std(ddof=1)) if len(ok) > 1 else (0.0 if len(ok) else math.nan)
        out[name] = {"mean": mean, "std": std, "defined_runs": int(len(ok))}
    return out


@dataclass
class ProtocolReport:
    seed: int
    runs: list[EvalReport] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def summary(self) -> dict[str, dict]:
        return summarize(self.runs)

    def mean(self, metric: str) -> float:
        return self.summary[metric]["mean"]

    def to_dict(self) -> dict:
        summary = {k: {kk: _json_float(vv) if isinstance(vv, float) else vv for kk, vv in v.items()}
                   for k, v in self.summary.items()}
        return {"seed": self.seed, "config": self.config, "summary": summary,
                "runs": [r.to_dict() for r in self.runs]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, allow_nan=False) + "\n"

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "mean", "std", "defined_runs"])
        for k, v in self.summary.items():
            w.writerow([k, _fmt(v["mean"]), _fmt(v["std"]), v["defined_runs"]])
        return buf.getvalue()


def run_once(graphs, config: TrainConfig, seed: int, repeat: int,
             template_frac: float = TEMPLATE_FRAC, train_frac: float = TRAIN_FRAC, progress=None):
    """One split / train / evaluate cycle; returns (report, model, losses)."""
    split = make_split(graphs, template_frac, train_frac, derive_seed(seed, repeat, 0))
    init_seed = derive_seed(seed, repeat, 1)
    sample_seed = derive_seed(seed, repeat, 2)
    model, losses = train(split.train, config, init_seed, sample_seed, progress)
    snapshot = {
        "repeat": repeat,
        "split_seed": split.seed,
        "init_seed": init_seed,
        "sample_seed": sample_seed,
        "sizes": {"train": len(split.train), "test": len(split.test), "template": len(split.template)},
        "final_loss": losses[-1] if losses else None,
        "train": config.to_dict(),
    }
    report = evaluate(split.test, split.template, model, config.theta_test, seed=seed, config=snapshot)
    return report, model, losses


def run_protocol(graphs, config: TrainConfig, seed: int | None = None, repeats: int | None = None,
                 template_frac: float = TEMPLATE_FRAC, train_frac: float = TRAIN_FRAC,
                 on_run=None) -> ProtocolReport:
    """``repeats`` (default ``config.repeat_count``) independent runs.

    Run ``r`` uses ``derive_seed(seed, r, 0)`` for the split,
    ``derive_seed(seed, r, 1)`` for weights and ``derive_seed(seed, r, 2)``
    for pair sampling. ``on_run(r, report, model, losses)`` is called after
    each run.
    """
    seed = config.seed if seed is None else seed
    repeats = config.repeat_count if repeats is None else repeats
    config = replace(config, seed=seed)
    report = ProtocolReport(seed, config={"train": config.to_dict(), "repeats": repeats,
                                          "template_frac": template_frac, "train_frac": train_frac})
    for r in range(repeats):
        run, model, losses = run_once(graphs, config, seed, r, template_frac, train_frac)
        report.runs.append(run)
        if on_run is not None:
            on_run(r, run, model, losses)
    return report
