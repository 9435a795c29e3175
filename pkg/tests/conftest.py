import numpy as np
import pytest
import torch

# keep every run single-threaded and bit-reproducible
torch.set_num_threads(1)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
