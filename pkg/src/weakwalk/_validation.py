"""Input checks shared by the estimator layer and the CLI."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


def check_eps_star_array(X) -> np.ndarray:
    """Accept a 1-D array or a single-column 2-D array of signal strengths."""
    arr = check_array(X, ensure_2d=False, dtype=float)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"expected one eps_star column, got {arr.shape[1]}")
        arr = arr[:, 0]
    if np.any(np.abs(arr) > 0.5):
        raise ValueError("eps_star values must lie in [-1/2, 1/2]")
    return arr


def check_probability(p: float, name: str, *, open_interval: bool = True) -> float:
    x = float(p)
    ok = 0 < x < 1 if open_interval else 0 <= x <= 1
    if not ok:
        raise ValueError(f"{name} must lie in {'(0, 1)' if open_interval else '[0, 1]'}, got {p!r}")
    return x


def check_eigenvalue_table(X, *, ensure_2d: bool = True) -> np.ndarray:
    """Rows of Pauli eigenvalues: length 4^n, entries in [-1, 1]."""
    arr = check_array(X, ensure_2d=ensure_2d, dtype=float)
    width = arr.shape[-1]
    n = int(round(np.log(width) / np.log(4))) if width > 1 else 0
    if n < 1 or 4**n != width:
        raise ValueError(f"eigenvalue rows must have length 4^n with n >= 1, got {width}")
    if np.any(np.abs(arr) > 1):
        raise ValueError("eigenvalues must lie in [-1, 1]")
    return arr


def n_qubits_of(table: np.ndarray) -> int:
    return int(round(np.log(table.shape[-1]) / np.log(4)))
