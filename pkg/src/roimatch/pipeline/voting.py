"""Template matching with a similarity threshold and majority vote."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..graphio import RoiGraph

POSITIVE = "fractured"
NEGATIVE = "non-fractured"


class EvaluationError(ValueError):
    pass


@dataclass
class TemplateMatch:
    template_id: str
    label: str
    score: float
    accepted: bool


@dataclass
class VoteTrace:
    graph_id: str
    true_label: str | None
    theta: float
    matches: list[TemplateMatch] = field(default_factory=list)
    positive_votes: int = 0
    negative_votes: int = 0
    predicted: str = NEGATIVE
    fallback_used: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def vote(graph_id: str, true_label, template_ids, template_labels, scores, theta: float) -> VoteTrace:
    """Accept templates with score > theta and take the majority label.

    A tie goes to fractured. With nothing accepted the label of the highest
    scoring template is used (first one on equal scores) and
    ``fallback_used`` is set.
    """
    if len(scores) == 0:
        raise EvaluationError(f"{graph_id}: no template with a matching RoI count")
    scores = np.asarray(scores, dtype=float)
    accepted = scores > theta
    matches = [TemplateMatch(t, lab, float(s), bool(a))
               for t, lab, s, a in zip(template_ids, template_labels, scores, accepted)]
    pos = sum(1 for m in matches if m.accepted and m.label == POSITIVE)
    neg = sum(1 for m in matches if m.accepted and m.label != POSITIVE)
    fallback = pos + neg == 0
    if fallback:
        predicted = template_labels[int(np.argmax(scores))]
    else:
        predicted = POSITIVE if pos >= neg else NEGATIVE
    return VoteTrace(graph_id, true_label, theta, matches, pos, neg, predicted, fallback)


def compatible_templates(graph: RoiGraph, templates: list[RoiGraph]) -> list[int]:
    return [k for k, t in enumerate(templates) if t.n_nodes == graph.n_nodes]


def predict_all(tests: list[RoiGraph], templates: list[RoiGraph], model, theta: float,
                slot_mask=None) -> list[VoteTrace]:
    """Vote trace for every test graph; pairs are scored in one batched pass."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    compat = []
    for g in tests:
        ks = compatible_templates(g, templates)
        if not ks:
            raise EvaluationError(f"{g.graph_id}: no template with {g.n_nodes} RoIs")
        compat.append(ks)
    pairs = [(i, k) for i, ks in enumerate(compat) for k in ks]
    scores = model.score_pairs(tests, templates, pairs, slot_mask)
    traces, pos = [], 0
    for g, ks in zip(tests, compat):
        s = scores[pos:pos + len(ks)]
        pos += len(ks)
        traces.append(vote(g.graph_id, g.subject_label, [templates[k].graph_id for k in ks],
                           [templates[k].subject_label for k in ks], s, theta))
    return traces


def predict(test_graph: RoiGraph, templates: list[RoiGraph], model, theta: float, slot_mask=None) -> VoteTrace:
    return predict_all([test_graph], templates, model, theta, slot_mask)[0]
