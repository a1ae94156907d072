import os
from pathlib import Path

import numpy as np
import pytest


def numeric_grad(f, arrays, h=1e-5):
    """Central finite differences of a scalar function, per array element.

    ``f`` takes no arguments and reads the arrays in place; float64 only.
    """
    grads = []
    for arr in arrays:
        grad = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f()
            flat[i] = orig - h
            fm = f()
            flat[i] = orig
            gflat[i] = (fp - fm) / (2.0 * h)
        grads.append(grad)
    return grads


def max_rel_err(a, b, floor=1e-8):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def analysis_matrix(bank, length):
    """The L x L orthogonal matrix the periodic one-level transform applies.

    Built by scattering filter taps into circulant rows; an independent
    oracle for the strided implementation.
    """
    half = length // 2
    mat = np.zeros((length, length))
    for n in range(half):
        for k in range(bank.length):
            mat[n, (2 * n + k) % length] += bank.low_pass[k]
            mat[half + n, (2 * n + k) % length] += bank.high_pass[k]
    return mat


def etth1_file():
    root = os.environ.get("WAVETS_DATA_DIR", "data")
    path = Path(root) / "ETTh1.csv"
    return path if path.exists() else None


@pytest.fixture
def etth1_path():
    path = etth1_file()
    if path is None:
        pytest.skip("ETTh1.csv not available; set WAVETS_DATA_DIR to run dataset criteria")
    return path
