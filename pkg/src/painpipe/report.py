"""Run reports: canonical JSON plus a rendered text table.

A report row records architecture, tap, extracted dimensionality, selection,
classifier, and the test-split metrics; pairwise AUC comparisons and
provenance (seed, config hash, tool version, timestamp) ride along.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import ContractError

TOOL_VERSION = "0.1.0"


@dataclass
class RunReport:
    rows: list[dict] = field(default_factory=list)
    comparisons: list[dict] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"rows": self.rows, "comparisons": self.comparisons,
                "provenance": self.provenance}

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "RunReport":
        with open(path, encoding="utf-8") as f:
            obj = json.load(f)
        return cls(rows=obj.get("rows", []), comparisons=obj.get("comparisons", []),
                   provenance=obj.get("provenance", {}))


def make_provenance(config_hash: str, seed: int, extra: dict | None = None) -> dict:
    out = {
        "config_hash": config_hash,
        "seed": seed,
        "tool_version": TOOL_VERSION,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        out.update(extra)
    return out


def _selection_label(selection: dict) -> str:
    if "strain_n" in selection:
        return f"Strain({selection['strain_n']})+Deep({selection['deep_n']})"
    method = {"su": "SU", "relieff": "RF"}.get(selection.get("method", "?"), "?")
    return f"{method}({selection.get('n', '?')})"


def _classifier_label(classifier: dict) -> str:
    return {"nb": "NB", "knn": "kNN", "svm": "SVMs", "rf": "RFT"}.get(
        classifier.get("kind", "?"), classifier.get("kind", "?"))


def render_text(report: RunReport) -> str:
    """Fixed-width table over the rows, one line per configuration."""
    headers = ["Architecture", "Layer", "Phase", "Dimensions", "Selection",
               "Classifier", "Accuracy", "AUC"]
    lines = []
    for row in report.rows:
        tap = row.get("tap", {})
        auc_value = row.get("auc")
        lines.append([
            row.get("architecture", "?"),
            tap.get("layer", "?"),
            tap.get("phase", "?"),
            str(row.get("dims", "?")),
            _selection_label(row.get("selection", {})),
            _classifier_label(row.get("classifier", {})),
            row.get("accuracy_pct", "?"),
            "n/a" if auc_value is None else f"{auc_value:.3f}",
        ])
    widths = [max(len(h), *(len(line[i]) for line in lines)) if lines else len(h)
              for i, h in enumerate(headers)]
    out = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    out.append("  ".join("-" * w for w in widths))
    for line in lines:
        out.append("  ".join(v.ljust(w) for v, w in zip(line, widths)))
    for comparison in report.comparisons:
        out.append("")
        out.append(
            f"compare {comparison['a']} vs {comparison['b']}: "
            f"AUC {comparison['auc_a']:.3f} vs {comparison['auc_b']:.3f}, "
            f"z={comparison['z']:.3f}, p={comparison['p_value']:.4f}, "
            f"significant={comparison['significant']}"
        )
    return "\n".join(out) + "\n"


def save_scores(path: str | Path, instance_ids, labels, scores, predictions) -> None:
    """Per-instance score file consumed by the compare stage."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["instance_id", "label", "score", "prediction"])
        for i, instance in enumerate(instance_ids):
            writer.writerow([instance, int(labels[i]), repr(float(scores[i])),
                             int(predictions[i])])


def load_scores(path: str | Path):
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise ContractError(f"{path}: empty scores file")
    instance_ids = tuple(r["instance_id"] for r in rows)
    labels = np.array([int(r["label"]) for r in rows], dtype=np.int64)
    scores = np.array([float(r["score"]) for r in rows])
    predictions = np.array([int(r["prediction"]) for r in rows], dtype=np.int64)
    return instance_ids, labels, scores, predictions
