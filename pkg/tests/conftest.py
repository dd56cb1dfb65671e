import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def write_png(tmp_path):
    def _write(arr, name="img.png"):
        path = tmp_path / name
        Image.fromarray(np.asarray(arr, dtype=np.uint8)).save(path)
        return str(path)
    return _write


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """16 ring/blob images, shared across pipeline tests."""
    from topoct.synthetic import generate_dataset

    root = tmp_path_factory.mktemp("dataset")
    metas = generate_dataset(str(root), n_per_class=8, seed=3)
    return str(root), metas
