"""Instances-by-features container shared across pipeline stages.

Rows carry an instance id, the originating video id, a subject id, and a
binary label. The CSV form starts with those four reserved columns followed
by one column per feature; floats are written with full round-trip precision.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ContractError

RESERVED_COLUMNS = ("instance_id", "video_id", "subject_id", "label")
LABEL_TO_INT = {"no-pain": 0, "pain": 1}
INT_TO_LABEL = {0: "no-pain", 1: "pain"}


@dataclass(frozen=True)
class FeatureMatrix:
    feature_names: tuple[str, ...]
    X: np.ndarray               # (n, d) float64
    labels: np.ndarray          # (n,) int64, 1 = pain
    subject_ids: tuple[str, ...]
    video_ids: tuple[str, ...]
    instance_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "subject_ids", tuple(self.subject_ids))
        object.__setattr__(self, "video_ids", tuple(self.video_ids))
        object.__setattr__(self, "instance_ids", tuple(self.instance_ids))
        if X.ndim != 2:
            raise ContractError(f"feature matrix must be 2-D, got shape {X.shape}")
        n, d = X.shape
        if len(self.feature_names) != d:
            raise ContractError(
                f"{len(self.feature_names)} names for {d} feature columns"
            )
        if len(set(self.feature_names)) != d:
            raise ContractError("feature names must be unique")
        if set(self.feature_names) & set(RESERVED_COLUMNS):
            raise ContractError(f"feature names may not shadow {RESERVED_COLUMNS}")
        for field_name, values in (("labels", labels), ("subject_ids", self.subject_ids),
                                   ("video_ids", self.video_ids),
                                   ("instance_ids", self.instance_ids)):
            if len(values) != n:
                raise ContractError(f"{field_name} has {len(values)} entries for {n} rows")
        if len(set(self.instance_ids)) != n:
            raise ContractError("instance ids must be unique")
        if not set(np.unique(labels)).issubset({0, 1}):
            raise ContractError("labels must be 0 (no-pain) or 1 (pain)")
        if not np.all(np.isfinite(X)):
            raise ContractError("feature values must be finite")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def width(self) -> int:
        return self.X.shape[1]

    def subset(self, mask) -> "FeatureMatrix":
        mask = np.asarray(mask, dtype=bool)
        idx = np.flatnonzero(mask)
        return replace(
            self,
            X=self.X[idx],
            labels=self.labels[idx],
            subject_ids=tuple(self.subject_ids[i] for i in idx),
            video_ids=tuple(self.video_ids[i] for i in idx),
            instance_ids=tuple(self.instance_ids[i] for i in idx),
        )

    def select_features(self, names: list[str]) -> "FeatureMatrix":
        """Column subset in the given order."""
        index = {name: j for j, name in enumerate(self.feature_names)}
        missing = [name for name in names if name not in index]
        if missing:
            raise ContractError(f"unknown features requested: {missing[:5]}")
        cols = [index[name] for name in names]
        return replace(self, feature_names=tuple(names), X=self.X[:, cols])

    def per_video_mean(self) -> "FeatureMatrix":
        """Aggregate rows to one per video (frame-mean); instance id = video id."""
        order: list[str] = []
        groups: dict[str, list[int]] = {}
        for i, vid in enumerate(self.video_ids):
            if vid not in groups:
                groups[vid] = []
                order.append(vid)
            groups[vid].append(i)
        rows, labels, subjects = [], [], []
        for vid in order:
            idx = groups[vid]
            subject = {self.subject_ids[i] for i in idx}
            label = {int(self.labels[i]) for i in idx}
            if len(subject) != 1 or len(label) != 1:
                raise ContractError(f"video {vid!r} mixes subjects or labels")
            rows.append(self.X[idx].mean(axis=0))
            labels.append(label.pop())
            subjects.append(subject.pop())
        return FeatureMatrix(
            feature_names=self.feature_names,
            X=np.vstack(rows),
            labels=np.array(labels, dtype=np.int64),
            subject_ids=tuple(subjects),
            video_ids=tuple(order),
            instance_ids=tuple(order),
        )

    def hstack(self, other: "FeatureMatrix") -> "FeatureMatrix":
        """Column-wise fusion of two matrices keyed by identical instance ids."""
        if self.instance_ids != other.instance_ids:
            ours, theirs = set(self.instance_ids), set(other.instance_ids)
            unmatched = sorted(ours ^ theirs)
            if unmatched:
                raise ContractError(f"unmatched instances: {unmatched[:10]}")
            raise ContractError("instance ids are ordered differently")
        if self.subject_ids != other.subject_ids or \
                not np.array_equal(self.labels, other.labels):
            raise ContractError("subjects/labels disagree between matrices")
        return replace(
            self,
            feature_names=self.feature_names + other.feature_names,
            X=np.hstack([self.X, other.X]),
        )

    # -- CSV form ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(list(RESERVED_COLUMNS) + list(self.feature_names))
            for i in range(self.n_rows):
                row = [self.instance_ids[i], self.video_ids[i], self.subject_ids[i],
                       INT_TO_LABEL[int(self.labels[i])]]
                row += [repr(float(v)) for v in self.X[i]]
                writer.writerow(row)

    @classmethod
    def load(cls, path: str | Path) -> "FeatureMatrix":
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            try:
                header = next(reader)
            except StopIteration:
                raise ContractError(f"{path}: empty feature matrix file") from None
            if tuple(header[:4]) != RESERVED_COLUMNS:
                raise ContractError(
                    f"{path}: header must start with {RESERVED_COLUMNS}, got {header[:4]}"
                )
            names = tuple(header[4:])
            instance_ids, video_ids, subject_ids, labels, rows = [], [], [], [], []
            for line in reader:
                instance_ids.append(line[0])
                video_ids.append(line[1])
                subject_ids.append(line[2])
                if line[3] not in LABEL_TO_INT:
                    raise ContractError(f"{path}: unknown label {line[3]!r}")
                labels.append(LABEL_TO_INT[line[3]])
                rows.append([float(v) for v in line[4:]])
        X = np.array(rows, dtype=np.float64) if rows else np.zeros((0, len(names)))
        return cls(
            feature_names=names,
            X=X,
            labels=np.array(labels, dtype=np.int64),
            subject_ids=tuple(subject_ids),
            video_ids=tuple(video_ids),
            instance_ids=tuple(instance_ids),
        )
