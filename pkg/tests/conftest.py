import os

# Single-threaded BLAS: faster on the small matrices used here and keeps
# reductions bit-reproducible. Must be set before numpy loads.
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np  # noqa: E402
import pytest  # noqa: E402


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """A 36-utterance SimVowels set (12 speakers) shared across tests."""
    from vda.simvowels import generate_dataset

    root = tmp_path_factory.mktemp("simvowels")
    manifest = generate_dataset(36, 12, seed=1234, out_dir=str(root))
    return manifest


@pytest.fixture
def rng():
    return np.random.default_rng(0)
