import numpy as np
import pytest

from painpipe.cnn import builtin_architecture, random_weight_set, save_weights


@pytest.fixture(scope="session")
def weights_dir(tmp_path_factory):
    """Session cache of seeded random PPWT files, generated on first use."""
    root = tmp_path_factory.mktemp("weights")

    generated = {}

    def get(name: str, seed: int = 7, include_mean: bool = False):
        key = (name, seed, include_mean)
        if key not in generated:
            arch = builtin_architecture(name)
            ws = random_weight_set(arch, seed=seed, include_mean=include_mean)
            path = root / f"{name}-{seed}{'-mean' if include_mean else ''}.ppwt"
            save_weights(path, ws, arch)
            generated[key] = path
        return generated[key]

    return get


@pytest.fixture(scope="session")
def small_arch():
    """A little conv net with the same layer grammar as the shipped defaults."""
    from painpipe.cnn import ArchitectureSpec, LayerSpec

    return ArchitectureSpec(
        name="tiny",
        input_shape=(12, 12, 3),
        layers=(
            LayerSpec(name="Conv 1", kind="conv", filters=4, kernel=3, stride=1, pad=1),
            LayerSpec(name="ReLU 1", kind="relu"),
            LayerSpec(name="Pool 1", kind="maxpool", window=2, stride=2),
            LayerSpec(name="Conv 2", kind="conv", filters=6, kernel=3, stride=1, pad=0),
            LayerSpec(name="ReLU 2", kind="relu"),
            LayerSpec(name="Full 3", kind="fc", width=10),
            LayerSpec(name="ReLU 3", kind="relu"),
            LayerSpec(name="Full 4", kind="fc", width=5),
            LayerSpec(name="Softmax", kind="softmax"),
        ),
    )


@pytest.fixture()
def small_weights(small_arch):
    from painpipe.cnn import random_weight_set

    return random_weight_set(small_arch, seed=99)


@pytest.fixture()
def rng():
    return np.random.default_rng(2024)


@pytest.fixture(scope="session")
def tiny224_arch_file(tmp_path_factory):
    """A cheap 224-input architecture for fast pipeline tests."""
    import json

    from painpipe.cnn import ArchitectureSpec, LayerSpec

    arch = ArchitectureSpec(
        name="tiny224",
        input_shape=(224, 224, 3),
        layers=(
            LayerSpec(name="Conv 1", kind="conv", filters=8, kernel=5, stride=4, pad=0),
            LayerSpec(name="ReLU 1", kind="relu"),
            LayerSpec(name="Pool 1", kind="maxpool", window=2, stride=2),
            LayerSpec(name="Conv 2", kind="conv", filters=8, kernel=3, stride=2, pad=0),
            LayerSpec(name="ReLU 2", kind="relu"),
            LayerSpec(name="Full 3", kind="fc", width=32),
            LayerSpec(name="ReLU 3", kind="relu"),
            LayerSpec(name="Full 4", kind="fc", width=16),
            LayerSpec(name="ReLU 4", kind="relu"),
            LayerSpec(name="Full 5", kind="fc", width=2),
            LayerSpec(name="Softmax", kind="softmax"),
        ),
    )
    path = tmp_path_factory.mktemp("arch") / "tiny224.json"
    path.write_text(json.dumps(arch.to_json(), indent=2))
    return path


@pytest.fixture(scope="session")
def tiny224_weights_file(tmp_path_factory, tiny224_arch_file):
    from painpipe.cnn import ArchitectureSpec

    arch = ArchitectureSpec.load(tiny224_arch_file)
    ws = random_weight_set(arch, seed=21, include_mean=True)
    path = tmp_path_factory.mktemp("tinyweights") / "tiny224.ppwt"
    save_weights(path, ws, arch)
    return path


@pytest.fixture(scope="session")
def synthetic_dataset(tmp_path_factory):
    """Small shared synthetic dataset: 6 subjects x 5 frames."""
    from painpipe.synthetic import generate_synthetic_dataset

    out = tmp_path_factory.mktemp("dataset")
    manifest_path = generate_synthetic_dataset(out, subjects=6, frames_per_video=5, seed=3)
    return manifest_path
