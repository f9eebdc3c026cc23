"""End-to-end orchestration: extraction, fusion, selection, training, reports.

Stages are pure functions over the manifest/config/weights inputs, so a run
is reproducible from (manifest, config, seed) alone. Selection is always
fitted on the training split only; test rows never influence which features
survive.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifiers import make_classifier
from .cnn.architecture import BUILTIN_NAMES, ArchitectureSpec, builtin_architecture
from .cnn.network import Phase, TapRequest, forward_with_taps, validate_taps
from .cnn.weights import WeightSet, load_weights
from .config import PipelineConfig, SelectorConfig
from .errors import ContractError
from .evaluation import SplitPlan, accuracy, auc, format_percent, subject_split
from .featurematrix import FeatureMatrix
from .manifest import DatasetManifest, ManifestEntry, frame_path
from .preprocess import (
    crop_face,
    landmark_box,
    read_image,
    read_landmarks,
    resize_bilinear,
    select_key_frames,
    to_grayscale,
    to_input_tensor,
)
from .selection import make_selector
from .strain import FEATURE_NAMES as STRAIN_FEATURE_NAMES
from .strain import extract_strain_features

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StageFailure:
    video_id: str
    stage: str
    reason: str


def resolve_architecture(name_or_path: str) -> ArchitectureSpec:
    if name_or_path in BUILTIN_NAMES:
        return builtin_architecture(name_or_path)
    if Path(name_or_path).is_file():
        return ArchitectureSpec.load(name_or_path)
    raise ContractError(
        f"unknown architecture {name_or_path!r}: not a builtin {BUILTIN_NAMES} or a file"
    )


def resolve_weights(weights_path: str | Path, arch: ArchitectureSpec) -> WeightSet:
    """Accept a PPWT file or a directory holding <architecture>.ppwt."""
    path = Path(weights_path)
    if path.is_dir():
        path = path / f"{arch.name}.ppwt"
    if not path.is_file():
        raise ContractError(f"weight file not found: {path}")
    return load_weights(path, arch)


def tap_feature_names(arch: ArchitectureSpec, tap: TapRequest) -> list[str]:
    slug = f"{tap.layer.replace(' ', '').lower()}_{tap.phase.value.lower()}"
    return [f"{slug}_{i:06d}" for i in range(arch.tap_width(tap.layer))]


def _extract_entry_rows(
    entry: ManifestEntry,
    arch: ArchitectureSpec,
    weights: WeightSet,
    taps: list[TapRequest],
    margin: float,
    tau: float,
) -> tuple[list[int], dict[TapRequest, list[np.ndarray]]]:
    landmarks = read_landmarks(entry.landmarks_path)
    by_index = {f.frame_index: f for f in landmarks}
    kept = select_key_frames(landmarks, tau=tau)
    means = weights.channel_means()
    rows: dict[TapRequest, list[np.ndarray]] = {tap: [] for tap in taps}
    for idx in kept:
        image = read_image(frame_path(entry.frames_dir, idx))
        face = resize_bilinear(crop_face(image, by_index[idx], margin=margin))
        tensor = to_input_tensor(face, means)
        outputs = forward_with_taps(arch, weights, tensor, taps)
        for tap in taps:
            rows[tap].append(outputs[tap].astype(np.float64))
    return kept, rows


def extract_deep_features(
    manifest: DatasetManifest,
    config: PipelineConfig,
    weights_path: str | Path,
    taps: list[TapRequest] | None = None,
    jobs: int = 1,
) -> tuple[dict[TapRequest, FeatureMatrix], list[StageFailure]]:
    """Per-key-frame deep feature rows for each requested tap.

    Per-entry failures (missing frames or landmark files, degenerate boxes)
    are collected and the run continues; the summary lists them.
    """
    arch = resolve_architecture(config.architecture)
    if taps is None:
        taps = [TapRequest.of(config.tap.resolve_layer(arch), config.tap.phase)]
    validate_taps(arch, taps)
    weights = resolve_weights(weights_path, arch)
    pre = config.preprocessing

    def work(entry: ManifestEntry):
        return _extract_entry_rows(entry, arch, weights, taps, pre.margin, pre.tau)

    results: list[tuple[list[int], dict] | Exception] = [None] * len(manifest.entries)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {i: pool.submit(work, e) for i, e in enumerate(manifest.entries)}
            for i, future in futures.items():
                try:
                    results[i] = future.result()
                except Exception as e:  # collected per entry below
                    results[i] = e
    else:
        for i, entry in enumerate(manifest.entries):
            try:
                results[i] = work(entry)
            except Exception as e:
                results[i] = e

    failures: list[StageFailure] = []
    collected: dict[TapRequest, dict[str, list]] = {
        tap: {"rows": [], "labels": [], "subjects": [], "videos": [], "instances": []}
        for tap in taps
    }
    for entry, result in zip(manifest.entries, results):
        if isinstance(result, Exception):
            failures.append(StageFailure(entry.video_id, "extract", str(result)))
            logger.warning("extract failed for %s: %s", entry.video_id, result)
            continue
        kept, rows = result
        for tap in taps:
            bucket = collected[tap]
            for idx, row in zip(kept, rows[tap]):
                bucket["rows"].append(row)
                bucket["labels"].append(entry.label)
                bucket["subjects"].append(entry.subject_id)
                bucket["videos"].append(entry.video_id)
                bucket["instances"].append(f"{entry.video_id}:{idx:06d}")

    matrices = {}
    for tap in taps:
        bucket = collected[tap]
        names = tap_feature_names(arch, tap)
        X = np.vstack(bucket["rows"]) if bucket["rows"] else np.zeros((0, len(names)))
        matrices[tap] = FeatureMatrix(
            feature_names=tuple(names),
            X=X,
            labels=np.array(bucket["labels"], dtype=np.int64),
            subject_ids=tuple(bucket["subjects"]),
            video_ids=tuple(bucket["videos"]),
            instance_ids=tuple(bucket["instances"]),
        )
    return matrices, failures


def _video_union_box(landmarks, margin: float, height: int, width: int):
    """One crop box per video: union of per-frame landmark boxes."""
    boxes = [landmark_box(f, margin, height, width) for f in landmarks if not f.failed]
    if not boxes:
        raise ContractError("all frames failed; no crop box")
    y0 = min(b[0] for b in boxes)
    y1 = max(b[1] for b in boxes)
    x0 = min(b[2] for b in boxes)
    x1 = max(b[3] for b in boxes)
    return y0, y1, x0, x1


def extract_strain_matrix(
    manifest: DatasetManifest, config: PipelineConfig
) -> tuple[FeatureMatrix, list[StageFailure]]:
    """Five strain features per video, over all non-failed frames in order.

    The whole video is cropped with a single union box so landmark drift on a
    static scene cannot masquerade as motion.
    """
    pre = config.preprocessing
    rows, labels, subjects, videos, instances = [], [], [], [], []
    failures: list[StageFailure] = []
    for entry in manifest.entries:
        try:
            landmarks = read_landmarks(entry.landmarks_path)
            usable = [f for f in landmarks if not f.failed]
            if len(usable) < 2:
                raise ContractError(f"{len(usable)} usable frames; need >= 2")
            first = read_image(frame_path(entry.frames_dir, usable[0].frame_index))
            y0, y1, x0, x1 = _video_union_box(
                landmarks, pre.margin, first.shape[0], first.shape[1])
            frames = []
            for f in usable:
                image = read_image(frame_path(entry.frames_dir, f.frame_index))
                frames.append(to_grayscale(image[y0:y1 + 1, x0:x1 + 1]))
            features = extract_strain_features(
                frames,
                alpha=pre.flow_alpha,
                iterations=pre.flow_iterations,
                min_prominence=pre.min_prominence,
                min_separation=pre.min_separation,
            )
            rows.append([features[name] for name in STRAIN_FEATURE_NAMES])
            labels.append(entry.label)
            subjects.append(entry.subject_id)
            videos.append(entry.video_id)
            instances.append(entry.video_id)
        except Exception as e:
            failures.append(StageFailure(entry.video_id, "strain", str(e)))
            logger.warning("strain failed for %s: %s", entry.video_id, e)
    X = np.array(rows) if rows else np.zeros((0, len(STRAIN_FEATURE_NAMES)))
    matrix = FeatureMatrix(
        feature_names=STRAIN_FEATURE_NAMES,
        X=X,
        labels=np.array(labels, dtype=np.int64),
        subject_ids=tuple(subjects),
        video_ids=tuple(videos),
        instance_ids=tuple(instances),
    )
    return matrix, failures


def _fit_selector(train: FeatureMatrix, selector: SelectorConfig, n: int, seed: int):
    sel = make_selector(
        selector.method, n, feature_names=list(train.feature_names),
        bins=selector.bins, k_neighbors=selector.k_neighbors, seed=seed,
    )
    sel.fit(train.X, train.labels)
    return sel


def selected_feature_names(
    matrix: FeatureMatrix, plan: SplitPlan, selector: SelectorConfig, n: int, seed: int
) -> list[str]:
    """Names chosen by fitting the selector on the training rows only."""
    if n == 0:
        return []
    train = matrix.subset(plan.train_mask(matrix.subject_ids))
    return _fit_selector(train, selector, n, seed).selected_names()


def fuse_matrices(
    deep: FeatureMatrix,
    strain: FeatureMatrix,
    config: PipelineConfig,
    plan: SplitPlan | None = None,
) -> FeatureMatrix:
    """Top-strain_n strain features + top-deep_n deep features, per video.

    Deep rows are frame-mean aggregated per video first. Each matrix is
    ranked independently with the configured selector fitted on the training
    subjects of ``plan`` (a fresh split from the config when omitted).
    """
    if config.fusion is None:
        raise ContractError("fusion requested but config.fusion is null")
    deep_video = deep.per_video_mean()
    if set(strain.instance_ids) != set(deep_video.instance_ids):
        unmatched = sorted(set(strain.instance_ids) ^ set(deep_video.instance_ids))
        raise ContractError(f"fusion key mismatch, unmatched videos: {unmatched[:10]}")
    if strain.instance_ids != deep_video.instance_ids:
        strain = _reorder(strain, deep_video.instance_ids)
    if plan is None:
        plan = subject_split(deep_video.subject_ids,
                             config.split.test_fraction, config.split.seed)
    strain_names = selected_feature_names(
        strain, plan, config.selector, config.fusion.strain_n, config.split.seed)
    deep_names = selected_feature_names(
        deep_video, plan, config.selector, config.fusion.deep_n, config.split.seed)
    fused = strain.select_features(strain_names).hstack(
        deep_video.select_features(deep_names))
    assert fused.width == config.fusion.strain_n + config.fusion.deep_n
    return fused


def _reorder(matrix: FeatureMatrix, instance_ids: tuple[str, ...]) -> FeatureMatrix:
    position = {vid: i for i, vid in enumerate(matrix.instance_ids)}
    idx = [position[vid] for vid in instance_ids]
    return FeatureMatrix(
        feature_names=matrix.feature_names,
        X=matrix.X[idx],
        labels=matrix.labels[idx],
        subject_ids=tuple(matrix.subject_ids[i] for i in idx),
        video_ids=tuple(matrix.video_ids[i] for i in idx),
        instance_ids=tuple(instance_ids),
    )


@dataclass(frozen=True)
class EvaluationRecord:
    row: dict
    instance_ids: tuple[str, ...]
    labels: np.ndarray
    scores: np.ndarray
    predictions: np.ndarray


def evaluate_matrix(
    matrix: FeatureMatrix,
    config: PipelineConfig,
    row_info: dict,
    select_n: int | None = None,
) -> EvaluationRecord:
    """Split, select on train, fit the classifier, score the test side.

    ``select_n=None`` uses the configured selector width; ``select_n=0``
    skips selection (used for fused matrices, which arrive pre-selected).
    """
    plan = subject_split(matrix.subject_ids, config.split.test_fraction, config.split.seed)
    train = matrix.subset(plan.train_mask(matrix.subject_ids))
    test = matrix.subset(plan.test_mask(matrix.subject_ids))
    if len(np.unique(train.labels)) < 2:
        raise ContractError("training split lost one class; choose another seed")

    if select_n is None:
        select_n = min(config.selector.n, matrix.width)
    names = selected_feature_names(matrix, plan, config.selector, select_n,
                                   config.split.seed)
    train_sel = train.select_features(names) if names else train
    test_sel = test.select_features(names) if names else test

    clf = make_classifier(config.classifier.kind, config.classifier.params)
    clf.fit(train_sel.X, train_sel.labels)
    predictions = clf.predict(test_sel.X)
    scores = clf.score_samples(test_sel.X)

    acc = accuracy(predictions, test.labels)
    auc_value = None
    if len(np.unique(test.labels)) == 2:
        auc_value = auc(scores, test.labels)

    row = dict(row_info)
    assert row["dims"] == matrix.width, "report dims must equal the matrix width"
    row.setdefault("selection", {"method": config.selector.method, "n": select_n})
    row.update({
        "classifier": {"kind": config.classifier.kind,
                       "params": dict(config.classifier.params)},
        "n_train": train.n_rows,
        "n_test": test.n_rows,
        "train_subjects": list(plan.train_subjects),
        "test_subjects": list(plan.test_subjects),
        "accuracy": acc,
        "accuracy_pct": format_percent(acc),
        "auc": auc_value,
    })
    return EvaluationRecord(
        row=row,
        instance_ids=test.instance_ids,
        labels=test.labels,
        scores=scores,
        predictions=predictions,
    )


def run_single(
    manifest: DatasetManifest,
    config: PipelineConfig,
    weights_path: str | Path,
    jobs: int = 1,
) -> tuple[EvaluationRecord, list[StageFailure]]:
    """One configuration end to end; fused when config.fusion is set."""
    arch = resolve_architecture(config.architecture)
    tap = TapRequest.of(config.tap.resolve_layer(arch), config.tap.phase)
    matrices, failures = extract_deep_features(
        manifest, config, weights_path, taps=[tap], jobs=jobs)
    deep = matrices[tap]
    if deep.n_rows == 0:
        raise ContractError("extraction produced no rows; see failure summary")

    base_info = {
        "architecture": arch.name,
        "tap": {"layer": tap.layer, "phase": tap.phase.value},
    }
    if config.fusion is not None:
        strain, strain_failures = extract_strain_matrix(manifest, config)
        failures = failures + strain_failures
        plan = subject_split(deep.per_video_mean().subject_ids,
                             config.split.test_fraction, config.split.seed)
        fused = fuse_matrices(deep, strain, config, plan=plan)
        row_info = dict(base_info)
        row_info["dims"] = fused.width
        row_info["selection"] = {
            "method": config.selector.method,
            "strain_n": config.fusion.strain_n,
            "deep_n": config.fusion.deep_n,
        }
        record = evaluate_matrix(fused, config, row_info, select_n=0)
    else:
        row_info = dict(base_info)
        row_info["dims"] = deep.width
        record = evaluate_matrix(deep, config, row_info)
    return record, failures


def sweep_records(
    manifest: DatasetManifest,
    config: PipelineConfig,
    weights_path: str | Path,
    jobs: int = 1,
) -> tuple[list[EvaluationRecord], list[StageFailure]]:
    """All (architecture, layer, phase) combinations of config.sweep.

    Each architecture is extracted once with every requested tap, then each
    tap's matrix is evaluated independently with the shared selector,
    classifier, and split settings.
    """
    if config.sweep is None:
        raise ContractError("sweep requested but config.sweep is null")
    from dataclasses import replace

    records: list[EvaluationRecord] = []
    all_failures: list[StageFailure] = []
    for arch_name in config.sweep.architectures:
        arch = resolve_architecture(arch_name)
        sub = replace(config, architecture=arch_name)
        taps = []
        for layer_alias in config.sweep.layers:
            layer = arch.last_conv_name if layer_alias == "last-conv" else layer_alias
            for phase in config.sweep.phases:
                taps.append(TapRequest.of(layer, phase))
        matrices, failures = extract_deep_features(
            manifest, sub, weights_path, taps=taps, jobs=jobs)
        all_failures.extend(failures)
        for tap in taps:
            matrix = matrices[tap]
            if matrix.n_rows == 0:
                raise ContractError(
                    f"{arch_name}: extraction produced no rows; see failure summary")
            row_info = {
                "architecture": arch.name,
                "tap": {"layer": tap.layer, "phase": tap.phase.value},
                "dims": matrix.width,
            }
            records.append(evaluate_matrix(matrix, sub, row_info))
    return records, all_failures
