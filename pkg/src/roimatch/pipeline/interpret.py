"""Feature-zeroing importance and top-K evaluation."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..features import N_SLOTS, SLOT_NAMES
from .metrics import EvalReport, _fmt, evaluate
from .voting import EvaluationError, predict_all


class ParameterError(ValueError):
    pass


@dataclass
class ImportanceRow:
    slot: int          # 1-based
    slot_name: str
    delta_sn: float
    mean_abs_delta_score: float


def _scores(traces) -> np.ndarray:
    return np.array([m.score for t in traces for m in t.matches])


def slot_mask(keep) -> np.ndarray:
    """Multiplicative mask keeping the given 1-based slots."""
    mask = np.zeros(N_SLOTS)
    mask[np.asarray(list(keep), dtype=int) - 1] = 1.0
    return mask


def feature_importance(tests, templates, model, theta: float = 0.8) -> list[ImportanceRow]:
    """Zero one slot at a time (after normalisation) and record the SN drop.

    Rows are sorted by ``delta_sn`` descending; equal drops are ordered by
    the mean absolute change of the similarity scores (larger first), then
    by slot index.
    """
    base_traces = predict_all(tests, templates, model, theta)
    base = EvalReport.from_traces(base_traces, theta)
    if math.isnan(base.sn):
        raise EvaluationError("baseline SN is undefined: no fractured graphs in the test split")
    base_scores = _scores(base_traces)
    rows = []
    for slot in range(1, N_SLOTS + 1):
        mask = np.ones(N_SLOTS)
        mask[slot - 1] = 0.0
        traces = predict_all(tests, templates, model, theta, mask)
        sn = EvalReport.from_traces(traces, theta).sn
        rows.append(ImportanceRow(slot, SLOT_NAMES[slot - 1], base.sn - sn,
                                  float(np.mean(np.abs(_scores(traces) - base_scores)))))
    rows.sort(key=lambda r: (-r.delta_sn, -r.mean_abs_delta_score, r.slot))
    return rows


def topk_eval(k_list, ranking, tests, templates, model, theta: float = 0.8) -> list[tuple[int, EvalReport]]:
    """Evaluate with only the top ``K`` ranked slots kept, for each K."""
    order = [r.slot if isinstance(r, ImportanceRow) else int(r) for r in ranking]
    if sorted(order) != list(range(1, N_SLOTS + 1)):
        raise ParameterError(f"ranking must be a permutation of slots 1..{N_SLOTS}")
    out = []
    for k in k_list:
        if not 0 <= k <= N_SLOTS:
            raise ParameterError(f"K must lie in [0, {N_SLOTS}], got {k}")
        out.append((k, evaluate(tests, templates, model, theta, slot_mask(order[:k]))))
    return out


def write_importance_csv(path, rows: list[ImportanceRow]) -> None:
    _write_csv(path, ["slot_name", "delta_sn"], [[r.slot_name, _fmt(r.delta_sn)] for r in rows])


def write_topk_csv(path, results) -> None:
    _write_csv(path, ["K", "acc", "f1", "sn", "sp"],
               [[k, _fmt(r.acc), _fmt(r.f1), _fmt(r.sn), _fmt(r.sp)] for k, r in results])


def _write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    tmp.replace(path)
