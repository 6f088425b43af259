"""Subject records, file ingestion and assembly of the 130-slot node vector."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .firstorder import DEFAULT_LEVELS, first_order_features
from .glcm import glcm_features
from .layout import (
    BMD,
    CLINICAL,
    COMPUTED_FAMILIES,
    FAMILIES,
    INGESTED_FAMILIES,
    N_SLOTS,
    SLOT_INDEX,
    family_slice,
)
from .shape import shape_features

log = logging.getLogger(__name__)


class LayoutError(ValueError):
    pass


@dataclass
class SubjectRecord:
    subject_id: str
    label: str = "unknown"
    clinical: dict[str, float | None] = field(default_factory=dict)
    bmd: dict[str, float | None] = field(default_factory=dict)

    def vector(self) -> tuple[np.ndarray, list[str]]:
        """Slots 111-130 with missing values as 0, plus the missing field names."""
        vals, missing = [], []
        for name, source in [(n, self.clinical) for n in CLINICAL] + [(n, self.bmd) for n in BMD]:
            v = source.get(name)
            if v is None or (isinstance(v, float) and math.isnan(v)):
                missing.append(name)
                vals.append(0.0)
            else:
                vals.append(float(v))
        return np.asarray(vals), missing


def _cell(v: str | None) -> float | None:
    if v is None or v.strip() == "":
        return None
    return float(v)


def read_subject_table(path) -> dict[str, SubjectRecord]:
    """CSV with ``subject_id``, ``label`` and one column per clinical/BMD field."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = set(reader.fieldnames or [])
        if "subject_id" not in cols:
            raise LayoutError(f"{path}: subject table needs a 'subject_id' column")
        unknown = cols - {"subject_id", "label", *CLINICAL, *BMD}
        if unknown:
            raise LayoutError(f"{path}: unknown subject columns {sorted(unknown)}")
        for row in reader:
            sid = row["subject_id"]
            out[sid] = SubjectRecord(
                subject_id=sid,
                label=(row.get("label") or "unknown").strip(),
                clinical={n: _cell(row.get(n)) for n in CLINICAL},
                bmd={n: _cell(row.get(n)) for n in BMD},
            )
    return out


def read_precomputed(path) -> dict[tuple[str, str], dict[str, list[float]]]:
    """CSV keyed by (subject_id, roi_label) with slot-named columns.

    Columns are grouped into families; a family present with only some of
    its columns is a layout error.
    """
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = [c for c in (reader.fieldnames or []) if c not in ("subject_id", "roi_label")]
        bad = [c for c in cols if c not in SLOT_INDEX]
        if bad:
            raise LayoutError(f"{path}: columns are not registry slots: {bad[:5]}")
        by_family: dict[str, list[str]] = {}
        for c in cols:
            by_family.setdefault(c.split("_", 1)[0], []).append(c)
        for fam, present in by_family.items():
            names = FAMILIES[fam][2]
            if len(present) != len(names):
                raise LayoutError(
                    f"{path}: family {fam!r} has {len(present)} of {len(names)} columns")
        for row in reader:
            key = (row["subject_id"], row["roi_label"])
            out[key] = {fam: [float(row[f"{fam}_{n}"]) for n in FAMILIES[fam][2]]
                        for fam in by_family}
    return out


def compute_radiomics(image, mask, levels: int = DEFAULT_LEVELS) -> np.ndarray:
    """Slots 1-58 from an image crop and its RoI mask."""
    m = np.asarray(mask, dtype=bool)
    vals = first_order_features(np.asarray(image)[m], levels)
    vals.update(shape_features(m))
    vals.update(glcm_features(image, m, levels))
    out = np.zeros(58)
    for name, v in vals.items():
        out[SLOT_INDEX[name]] = v
    return out


def assemble_node_vector(computed: np.ndarray | None, ingested: dict[str, list[float]] | None,
                         subject: SubjectRecord | None) -> tuple[np.ndarray, dict]:
    """Lay out one node's 130 features.

    ``computed`` holds slots 1-58 or is ``None`` when the RoI crop is
    unavailable, in which case slots 1-110 stay zero (placeholder).
    ``ingested`` maps family name to its values; ingestion overrides
    computed values. Subject fields fill slots 111-130 either way.
    """
    vec = np.zeros(N_SLOTS)
    prov: dict = {"radiomics": "computed", "ingested": [], "zero_filled": []}
    ingested = ingested or {}
    for fam, values in ingested.items():
        if fam not in FAMILIES or fam in ("clinical", "bmd"):
            raise LayoutError(f"cannot ingest family {fam!r}")
        need = len(FAMILIES[fam][2])
        if len(values) != need:
            raise LayoutError(f"family {fam!r} expects {need} values, got {len(values)}")
    if computed is None:
        prov["radiomics"] = "placeholder"
    else:
        computed = np.asarray(computed, dtype=float)
        if computed.shape != (58,):
            raise LayoutError(f"computed radiomics must have 58 values, got {computed.shape}")
        vec[:58] = computed
        for fam in (*COMPUTED_FAMILIES, *INGESTED_FAMILIES):
            if fam in ingested:
                if fam in COMPUTED_FAMILIES:
                    log.info("ingested %s values override computed ones", fam)
                vec[family_slice(fam)] = ingested[fam]
                prov["ingested"].append(fam)
            elif fam in INGESTED_FAMILIES:
                prov["zero_filled"].append(fam)
    if subject is not None:
        vec[110:], missing = subject.vector()
        prov["missing_subject_fields"] = missing
    else:
        prov["missing_subject_fields"] = list(CLINICAL) + list(BMD)
    return vec, prov
