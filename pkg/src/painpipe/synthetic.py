"""Synthetic dataset generator: a stand-in for clinical video data.

Produces subject-grouped one-video-per-subject data with two visually
distinct classes. "pain" videos carry a localized high-frequency facial
texture plus a bright blob that orbits between frames (motion pulses);
"no-pain" videos are smooth and pixel-static. Landmarks drift slightly in
both classes, mimicking tracker noise, so key-frame selection keeps frames
from each class at the default threshold. Deterministic per seed, including
output bytes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ContractError
from .featurematrix import INT_TO_LABEL
from .manifest import DatasetManifest, ManifestEntry, frame_path
from .preprocess import LandmarkFrame, write_image, write_landmarks

IMAGE_SIZE = 128
FACE_RADIUS = 42.0
LANDMARK_HALF_SPAN = 30.0


def _face_mask(center: np.ndarray) -> np.ndarray:
    yy, xx = np.mgrid[0:IMAGE_SIZE, 0:IMAGE_SIZE]
    r2 = ((xx - center[0]) ** 2 + (yy - center[1]) ** 2) / FACE_RADIUS ** 2
    return np.exp(-1.8 * r2)


def _landmark_grid(center: np.ndarray) -> np.ndarray:
    span = np.linspace(-LANDMARK_HALF_SPAN, LANDMARK_HALF_SPAN, 7)
    gx, gy = np.meshgrid(center[0] + span, center[1] + span)
    return np.column_stack([gx.ravel(), gy.ravel()])


def _render_frame(base: np.ndarray, mask: np.ndarray, texture: np.ndarray | None,
                  blob: np.ndarray | None) -> np.ndarray:
    frame = base.copy()
    if texture is not None:
        frame += mask * texture
    if blob is not None:
        frame += blob
    frame = np.clip(frame, 0, 255).astype(np.uint8)
    return np.repeat(frame[:, :, None], 3, axis=2)


def generate_synthetic_dataset(
    out_dir: str | Path,
    subjects: int = 8,
    frames_per_video: int = 10,
    seed: int = 0,
) -> Path:
    """Write frames, landmark files, and a manifest; returns the manifest path.

    One video per subject; labels alternate so classes stay balanced.
    """
    if subjects < 4:
        raise ContractError(f"need >= 4 subjects, got {subjects}")
    if frames_per_video < 2:
        raise ContractError(f"need >= 2 frames per video, got {frames_per_video}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    streams = np.random.SeedSequence(seed).spawn(subjects)
    yy, xx = np.mgrid[0:IMAGE_SIZE, 0:IMAGE_SIZE]
    entries = []
    for s in range(subjects):
        rng = np.random.default_rng(streams[s])
        subject_id = f"s{s:02d}"
        video_id = f"v{s:02d}"
        label = s % 2  # 1 = pain
        video_dir = out_dir / "videos" / video_id
        video_dir.mkdir(parents=True, exist_ok=True)

        center = np.array([IMAGE_SIZE / 2, IMAGE_SIZE / 2]) + rng.uniform(-5, 5, size=2)
        mask = _face_mask(center)
        brightness = rng.uniform(162, 178)
        backdrop = 30 + 20 * (xx / IMAGE_SIZE)
        base = backdrop + mask * (brightness - 30)

        grid = _landmark_grid(center)
        # rotating tracker drift: constant ~3 px inter-frame displacement,
        # so every frame survives key-frame selection in both classes
        drift_phase = rng.uniform(0, 2 * np.pi)
        landmark_frames = []
        for t in range(frames_per_video):
            texture = None
            blob = None
            if label == 1:
                # fresh high-frequency texture every frame: strong deep-feature
                # signal and guaranteed inter-frame motion energy
                texture = rng.uniform(-1.0, 1.0, size=(IMAGE_SIZE, IMAGE_SIZE)) * 70.0
                angle = 2 * np.pi * t / max(frames_per_video, 2)
                bx = center[0] + 14 * np.cos(angle)
                by = center[1] + 14 * np.sin(angle)
                blob = 80.0 * np.exp(-(((xx - bx) ** 2 + (yy - by) ** 2) / (2 * 6.0 ** 2)))
            write_image(frame_path(video_dir, t), _render_frame(base, mask, texture, blob))

            theta = drift_phase + 0.6 * t
            drift = 5.0 * np.array([np.cos(theta), np.sin(theta)])
            jitter = rng.normal(scale=0.2, size=grid.shape)
            landmark_frames.append(LandmarkFrame(t, grid + drift + jitter))
        write_landmarks(video_dir / "landmarks.csv", landmark_frames)

        entries.append(ManifestEntry(
            video_id=video_id,
            subject_id=subject_id,
            label=label,
            frames_dir=Path("videos") / video_id,
            landmarks_path=Path("videos") / video_id / "landmarks.csv",
        ))

    manifest = DatasetManifest(entries=tuple(entries))
    manifest_path = out_dir / "manifest.csv"
    manifest.save(manifest_path)
    return manifest_path


def class_counts(manifest: DatasetManifest) -> dict[str, int]:
    counts = {"pain": 0, "no-pain": 0}
    for entry in manifest.entries:
        counts[INT_TO_LABEL[entry.label]] += 1
    return counts
