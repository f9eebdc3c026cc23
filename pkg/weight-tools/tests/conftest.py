import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image


@pytest.fixture(scope="session")
def fixture_images(tmp_path_factory):
    """Three deterministic 224x224 RGB images with different texture levels."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(42)
    paths = []
    for i in range(3):
        base = rng.uniform(40, 200, size=(224, 224, 3))
        if i > 0:
            base += rng.normal(scale=30 * i, size=(224, 224, 3))
        path = root / f"img{i}.png"
        Image.fromarray(np.clip(base, 0, 255).astype(np.uint8)).save(path)
        paths.append(path)
    return paths


def run_painpipe(*args: str) -> subprocess.CompletedProcess:
    """Invoke the primary toolkit through its command line."""
    return subprocess.run(
        [sys.executable, "-m", "painpipe.cli", *args],
        capture_output=True, text=True,
    )


def write_identity_manifest(root: Path, image_paths) -> Path:
    """A manifest whose preprocessing (margin 0) reproduces each image exactly.

    Each image becomes a one-frame video whose 49 landmarks form a 7x7 grid
    spanning the full 224x224 frame, so the landmark crop is the whole image
    and the resize is the identity.
    """
    span = np.linspace(0, 223, 7)
    gx, gy = np.meshgrid(span, span)
    points = np.column_stack([gx.ravel(), gy.ravel()])
    header = ["frame_index", "failed"] + \
        [f"x{i}" for i in range(1, 50)] + [f"y{i}" for i in range(1, 50)]

    rows = []
    for i, image_path in enumerate(image_paths):
        video_dir = root / "videos" / f"f{i}"
        video_dir.mkdir(parents=True, exist_ok=True)
        (video_dir / "000000.png").write_bytes(Path(image_path).read_bytes())
        with open(video_dir / "landmarks.csv", "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerow([0, 0]
                            + [repr(float(v)) for v in points[:, 0]]
                            + [repr(float(v)) for v in points[:, 1]])
        rows.append([f"f{i}", f"s{i}", "pain" if i % 2 else "no-pain",
                     str(video_dir), str(video_dir / "landmarks.csv")])

    manifest = root / "manifest.csv"
    with open(manifest, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["video_id", "subject_id", "label", "frames_dir", "landmarks_path"])
        writer.writerows(rows)
    return manifest


def write_primary_config(path: Path, architecture: str, layer: str, phase: str) -> Path:
    config = {
        "architecture": architecture,
        "tap": {"layer": layer, "phase": phase},
        "preprocessing": {"margin": 0.0},
    }
    path.write_text(json.dumps(config))
    return path


def load_feature_rows(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        next(reader)
        return {line[0]: np.array([float(v) for v in line[4:]], dtype=np.float32)
                for line in reader}
