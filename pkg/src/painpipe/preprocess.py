"""Frame preparation: landmark-driven face cropping, resizing, key frames.

Images are uint8 numpy arrays, (H, W) grayscale or (H, W, 3) RGB. Each video
comes with a landmark CSV (one row per frame: frame_index, failed, x1..x49,
y1..y49) produced by an external 49-point face tracker; failed rows carry a
flag and are excluded from analysis.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import ContractError, FrameSkipped

logger = logging.getLogger(__name__)

N_LANDMARKS = 49
INPUT_SIZE = 224


@dataclass(frozen=True)
class LandmarkFrame:
    frame_index: int
    points: np.ndarray  # (49, 2) float64 pixel coordinates, empty if failed
    failed: bool = False

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        object.__setattr__(self, "points", pts)
        if self.frame_index < 0:
            raise ContractError(f"negative frame index {self.frame_index}")
        if not self.failed:
            if pts.shape != (N_LANDMARKS, 2):
                raise ContractError(
                    f"frame {self.frame_index}: expected {N_LANDMARKS} landmark points, "
                    f"got shape {pts.shape}"
                )
            if not np.all(np.isfinite(pts)):
                raise ContractError(f"frame {self.frame_index}: non-finite landmarks")


def read_landmarks(path: str | Path) -> list[LandmarkFrame]:
    """Parse a per-video landmark CSV."""
    frames = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        for row in reader:
            failed = row["failed"].strip() in ("1", "true", "True")
            idx = int(row["frame_index"])
            if failed:
                frames.append(LandmarkFrame(idx, np.empty((0, 2)), failed=True))
                continue
            xs = [float(row[f"x{i}"]) for i in range(1, N_LANDMARKS + 1)]
            ys = [float(row[f"y{i}"]) for i in range(1, N_LANDMARKS + 1)]
            frames.append(LandmarkFrame(idx, np.column_stack([xs, ys])))
    return frames


def write_landmarks(path: str | Path, frames: list[LandmarkFrame]) -> None:
    header = ["frame_index", "failed"]
    header += [f"x{i}" for i in range(1, N_LANDMARKS + 1)]
    header += [f"y{i}" for i in range(1, N_LANDMARKS + 1)]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for frame in frames:
            if frame.failed:
                writer.writerow([frame.frame_index, 1] + [""] * (2 * N_LANDMARKS))
            else:
                row = [frame.frame_index, 0]
                row += [repr(float(v)) for v in frame.points[:, 0]]
                row += [repr(float(v)) for v in frame.points[:, 1]]
                writer.writerow(row)


def read_image(path: str | Path) -> np.ndarray:
    with PILImage.open(path) as img:
        if img.mode not in ("L", "RGB"):
            img = img.convert("RGB")
        return np.asarray(img)


def write_image(path: str | Path, pixels: np.ndarray) -> None:
    PILImage.fromarray(np.asarray(pixels, dtype=np.uint8)).save(path)


def landmark_box(
    landmarks: LandmarkFrame, margin: float, height: int, width: int
) -> tuple[int, int, int, int]:
    """Inclusive (y0, y1, x0, x1) landmark bounding box, expanded and clamped."""
    if landmarks.failed:
        raise FrameSkipped(f"frame {landmarks.frame_index} flagged as tracking failure")
    if margin < 0:
        raise ContractError(f"margin must be >= 0, got {margin}")
    xs, ys = landmarks.points[:, 0], landmarks.points[:, 1]
    if xs.max() <= xs.min() or ys.max() <= ys.min():
        raise ContractError(
            f"frame {landmarks.frame_index}: degenerate landmark bounding box"
        )
    mx = margin * (xs.max() - xs.min())
    my = margin * (ys.max() - ys.min())
    x0 = int(np.floor(xs.min() - mx))
    x1 = int(np.ceil(xs.max() + mx))
    y0 = int(np.floor(ys.min() - my))
    y1 = int(np.ceil(ys.max() + my))
    return (max(y0, 0), min(y1, height - 1), max(x0, 0), min(x1, width - 1))


def crop_face(image: np.ndarray, landmarks: LandmarkFrame, margin: float = 0.1) -> np.ndarray:
    """Crop the landmark bounding box, expanded by ``margin`` per side.

    Raises FrameSkipped for tracker-failed frames so callers can drop them.
    """
    image = np.asarray(image)
    y0, y1, x0, x1 = landmark_box(landmarks, margin, image.shape[0], image.shape[1])
    return image[y0:y1 + 1, x0:x1 + 1].copy()


def resize_bilinear(image: np.ndarray, out_h: int = INPUT_SIZE, out_w: int = INPUT_SIZE) -> np.ndarray:
    """Bilinear resize with corner alignment, returning uint8.

    Output pixel (i, j) samples the source at ``i * (H-1) / (out_h-1)``, so
    corner pixels always keep their source values.
    """
    image = np.asarray(image)
    if image.ndim == 2:
        return resize_bilinear(image[:, :, None], out_h, out_w)[:, :, 0]
    h, w = image.shape[:2]
    if h < 1 or w < 1:
        raise ContractError(f"cannot resize empty image of shape {image.shape}")
    if (h, w) == (out_h, out_w):
        return image.astype(np.uint8, copy=True)

    def grid(n_in: int, n_out: int) -> np.ndarray:
        if n_out == 1 or n_in == 1:
            return np.zeros(n_out)
        return np.arange(n_out) * (n_in - 1) / (n_out - 1)

    sy = grid(h, out_h)
    sx = grid(w, out_w)
    y0 = np.floor(sy).astype(int)
    x0 = np.floor(sx).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (sy - y0)[:, None, None]
    wx = (sx - x0)[None, :, None]

    src = image.astype(np.float64)
    top = src[y0][:, x0] * (1 - wx) + src[y0][:, x1] * wx
    bottom = src[y1][:, x0] * (1 - wx) + src[y1][:, x1] * wx
    out = top * (1 - wy) + bottom * wy
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def select_key_frames(frames: list[LandmarkFrame], tau: float = 1.5) -> list[int]:
    """Greedy key-frame pass over a video's landmark trajectory.

    Keeps the first non-failed frame, then any later non-failed frame whose
    mean landmark displacement from the last kept frame exceeds ``tau``
    pixels. Returns the kept frame indices in order.
    """
    kept: list[int] = []
    last_points: np.ndarray | None = None
    for frame in frames:
        if frame.failed:
            continue
        if last_points is None:
            kept.append(frame.frame_index)
            last_points = frame.points
            continue
        displacement = float(np.mean(np.linalg.norm(frame.points - last_points, axis=1)))
        if displacement > tau:
            kept.append(frame.frame_index)
            last_points = frame.points
    if not kept:
        logger.warning("all %d frames flagged as failed; nothing selected", len(frames))
    return kept


def to_input_tensor(image: np.ndarray, channel_means: np.ndarray | None = None) -> np.ndarray:
    """Convert a 224 x 224 image to the float32 network input tensor.

    Grayscale images are replicated to three channels; per-channel means are
    subtracted (zeros when not given).
    """
    image = np.asarray(image)
    if image.shape[:2] != (INPUT_SIZE, INPUT_SIZE):
        raise ContractError(
            f"network input must be {INPUT_SIZE}x{INPUT_SIZE}, got {image.shape[:2]}"
        )
    if image.ndim == 2:
        image = np.repeat(image[:, :, None], 3, axis=2)
    elif image.ndim != 3 or image.shape[2] != 3:
        raise ContractError(f"expected grayscale or RGB image, got shape {image.shape}")
    means = np.zeros(3, dtype=np.float32) if channel_means is None else \
        np.asarray(channel_means, dtype=np.float32)
    if means.shape != (3,):
        raise ContractError(f"channel means must have shape (3,), got {means.shape}")
    return image.astype(np.float32) - means


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """Luma conversion (Rec. 601 weights) to float64 intensity."""
    image = np.asarray(image)
    if image.ndim == 2:
        return image.astype(np.float64)
    weights = np.array([0.299, 0.587, 0.114])
    return image.astype(np.float64) @ weights
