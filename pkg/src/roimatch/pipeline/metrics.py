"""Confusion counts, ACC/SN/SP/F1 and the evaluation report."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from .voting import POSITIVE, VoteTrace, predict_all

METRICS = ("acc", "sn", "sp", "f1")


def _ratio(num: int, den: int) -> float:
    return num / den if den else math.nan


def metrics_from_counts(tp: int, tn: int, fp: int, fn: int) -> dict[str, float]:
    """ACC, SN, SP, F1 with fractured as the positive class; NaN when undefined."""
    return {
        "acc": _ratio(tp + tn, tp + tn + fp + fn),
        "sn": _ratio(tp, tp + fn),
        "sp": _ratio(tn, tn + fp),
        "f1": _ratio(2 * tp, 2 * tp + fp + fn),
    }


def confusion(traces: list[VoteTrace]) -> tuple[int, int, int, int]:
    tp = tn = fp = fn = 0
    for t in traces:
        actual = t.true_label == POSITIVE
        guess = t.predicted == POSITIVE
        if actual and guess:
            tp += 1
        elif actual:
            fn += 1
        elif guess:
            fp += 1
        else:
            tn += 1
    return tp, tn, fp, fn


def _json_float(x: float):
    return None if math.isnan(x) else x


@dataclass
class EvalReport:
    tp: int
    tn: int
    fp: int
    fn: int
    theta: float
    seed: int | None = None
    traces: list[VoteTrace] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @classmethod
    def from_traces(cls, traces, theta, seed=None, config=None) -> "EvalReport":
        return cls(*confusion(traces), theta=theta, seed=seed, traces=list(traces), config=config or {})

    @property
    def metrics(self) -> dict[str, float]:
        return metrics_from_counts(self.tp, self.tn, self.fp, self.fn)

    @property
    def undefined(self) -> list[str]:
        return [k for k, v in self.metrics.items() if math.isnan(v)]

    @property
    def acc(self) -> float:
        return self.metrics["acc"]

    @property
    def sn(self) -> float:
        return self.metrics["sn"]

    @property
    def sp(self) -> float:
        return self.metrics["sp"]

    @property
    def f1(self) -> float:
        return self.metrics["f1"]

    def to_dict(self) -> dict:
        return {
            "counts": {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn},
            "metrics": {k: _json_float(v) for k, v in self.metrics.items()},
            "undefined_metrics": self.undefined,
            "theta": self.theta,
            "seed": self.seed,
            "config": self.config,
            "traces": [t.to_dict() for t in self.traces],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, allow_nan=False) + "\n"

    def csv_row(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["acc", "sn", "sp", "f1", "tp", "tn", "fp", "fn"])
        w.writerow([_fmt(v) for v in (self.acc, self.sn, self.sp, self.f1)] + [self.tp, self.tn, self.fp, self.fn])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else repr(float(x))


def evaluate(tests, templates, model, theta: float, slot_mask=None, seed=None, config=None) -> EvalReport:
    traces = predict_all(tests, templates, model, theta, slot_mask)
    return EvalReport.from_traces(traces, theta, seed, config)
