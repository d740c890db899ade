import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240214)


def write_csv(path, text):
    path.write_text(text, encoding="utf-8")
    return path
