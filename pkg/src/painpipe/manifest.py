"""Dataset manifests: one row per video with label and file locations."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import ContractError
from .featurematrix import INT_TO_LABEL, LABEL_TO_INT

MANIFEST_COLUMNS = ("video_id", "subject_id", "label", "frames_dir", "landmarks_path")
FRAME_FILE_PATTERN = "{index:06d}.png"


def frame_path(frames_dir: str | Path, frame_index: int) -> Path:
    return Path(frames_dir) / FRAME_FILE_PATTERN.format(index=frame_index)


@dataclass(frozen=True)
class ManifestEntry:
    video_id: str
    subject_id: str
    label: int                  # 1 = pain
    frames_dir: Path
    landmarks_path: Path


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        ids = [e.video_id for e in self.entries]
        if len(set(ids)) != len(ids):
            dupes = sorted({v for v in ids if ids.count(v) > 1})
            raise ContractError(f"duplicate video ids in manifest: {dupes}")
        for e in self.entries:
            if e.label not in (0, 1):
                raise ContractError(f"video {e.video_id!r}: label must be 0/1")

    def __len__(self) -> int:
        return len(self.entries)

    def subjects(self) -> list[str]:
        return sorted({e.subject_id for e in self.entries})

    def save(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(MANIFEST_COLUMNS)
            for e in self.entries:
                writer.writerow([e.video_id, e.subject_id, INT_TO_LABEL[e.label],
                                 str(e.frames_dir), str(e.landmarks_path)])

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        base = Path(path).parent
        entries = []
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_COLUMNS:
                raise ContractError(
                    f"{path}: manifest header must be {','.join(MANIFEST_COLUMNS)}"
                )
            for row in reader:
                if row["label"] not in LABEL_TO_INT:
                    raise ContractError(
                        f"{path}: video {row['video_id']!r} has unknown label {row['label']!r}"
                    )

                def _resolve(p: str) -> Path:
                    candidate = Path(p)
                    return candidate if candidate.is_absolute() else base / candidate

                entries.append(ManifestEntry(
                    video_id=row["video_id"],
                    subject_id=row["subject_id"],
                    label=LABEL_TO_INT[row["label"]],
                    frames_dir=_resolve(row["frames_dir"]),
                    landmarks_path=_resolve(row["landmarks_path"]),
                ))
        return cls(entries=tuple(entries))
