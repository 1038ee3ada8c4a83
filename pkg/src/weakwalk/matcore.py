"""Dense complex linear algebra for small multi-qubit registers.

Matrices are plain ``numpy`` complex128 arrays. ``DensityMatrix`` is a thin
read-only wrapper that is only ever produced by :func:`validate_density`, so
holding one means the three state invariants were checked.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

import numpy as np

MAX_DIM = 2**10
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
_EIG_DIM_LIMIT = 16

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
KET0 = np.array([[1], [0]], dtype=complex)
KET1 = np.array([[0], [1]], dtype=complex)
PROJ0 = np.array([[1, 0], [0, 0]], dtype=complex)
PROJ1 = np.array([[0, 0], [0, 1]], dtype=complex)


class DimensionMismatchError(ValueError):
    pass


class InvalidDensityMatrixError(ValueError):
    """Base class for failed density-matrix invariants."""

    invariant = "density"


class NotHermitianError(InvalidDensityMatrixError):
    invariant = "hermitian"


class TraceError(InvalidDensityMatrixError):
    invariant = "trace"


class NotPSDError(InvalidDensityMatrixError):
    invariant = "psd"


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite 2-D complex128 array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionMismatchError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.matrix
        return self.matrix.astype(dtype)

    def population(self, index: int) -> float:
        return float(self.matrix[index, index].real)

    def purity(self) -> float:
        return purity(self.matrix)


def tensor(*factors) -> np.ndarray:
    """Kronecker product, leftmost factor most significant."""
    if not factors:
        raise ValueError("tensor needs at least one factor")
    out = as_matrix(factors[0])
    for f in factors[1:]:
        out = np.kron(out, as_matrix(f))
    if max(out.shape) > MAX_DIM:
        raise DimensionMismatchError(f"dimension {out.shape} exceeds {MAX_DIM}")
    return out


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def ket_to_density(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).reshape(-1, 1)
    return v @ v.conj().T


def purity(rho) -> float:
    r = np.asarray(rho)
    return float(np.real(np.trace(r @ r)))


def _check_dims(dim: int, subsystem_dims: Sequence[int]) -> list[int]:
    dims = [int(d) for d in subsystem_dims]
    if any(d < 1 for d in dims):
        raise DimensionMismatchError(f"subsystem dims must be positive: {dims}")
    if prod(dims) != dim:
        raise DimensionMismatchError(
            f"subsystem dims {dims} multiply to {prod(dims)}, matrix has dim {dim}"
        )
    return dims


def partial_trace(rho, subsystem_dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Reduced matrix on the ``keep`` subsystems (kept in ascending order).

    Examples
    --------
    >>> bell = ket_to_density(np.array([1, 0, 0, 1]) / np.sqrt(2))
    >>> np.allclose(partial_trace(bell, [2, 2], keep=[0]), np.eye(2) / 2)
    True
    """
    r = as_matrix(rho)
    if r.shape[0] != r.shape[1]:
        raise DimensionMismatchError(f"partial_trace needs a square matrix, got {r.shape}")
    dims = _check_dims(r.shape[0], subsystem_dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise DimensionMismatchError(f"keep indices {keep} out of range for {len(dims)} subsystems")

    n = len(dims)
    t = r.reshape(dims + dims)
    row = list(range(n))
    col = [n + k for k in range(n)]
    for k in range(n):
        if k not in keep:
            col[k] = row[k]
    out_axes = [row[k] for k in keep] + [col[k] for k in keep]
    reduced = np.einsum(t, row + col, out_axes)
    d_keep = prod(dims[k] for k in keep)
    return reduced.reshape(d_keep, d_keep)


def _min_eigenvalue_probe(h: np.ndarray) -> tuple[bool, float]:
    if h.shape[0] <= _EIG_DIM_LIMIT:
        w = np.linalg.eigvalsh(h)
        return bool(w[0] >= -PSD_TOL), float(w[0])
    # shifting by the tolerance turns "all eigenvalues >= -tol" into positive definiteness
    try:
        np.linalg.cholesky(h + PSD_TOL * np.eye(h.shape[0]))
    except np.linalg.LinAlgError:
        return False, float(np.linalg.eigvalsh(h)[0])
    return True, float("nan")


def validate_density(m) -> DensityMatrix:
    """Wrap ``m`` as a :class:`DensityMatrix` or raise the failing invariant.

    Raises
    ------
    NotHermitianError, TraceError, NotPSDError
        Checked in that order; each carries the offending magnitude.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"density matrix must be square, got {a.shape}")
    dim = a.shape[0]
    if dim > MAX_DIM:
        raise DimensionMismatchError(f"dimension {dim} exceeds {MAX_DIM}")
    if dim & (dim - 1):
        raise DimensionMismatchError(f"dimension {dim} is not a power of two")
    herm_err = float(np.max(np.abs(a - a.conj().T)))
    if herm_err > HERMITIAN_TOL:
        raise NotHermitianError(f"max |A - A^dagger| = {herm_err:.3e}")
    tr = complex(np.trace(a))
    if abs(tr - 1) > TRACE_TOL:
        raise TraceError(f"trace = {tr.real:.15g}")
    h = (a + a.conj().T) / 2
    ok, lam_min = _min_eigenvalue_probe(h)
    if not ok:
        raise NotPSDError(f"minimum eigenvalue {lam_min:.6g} < -{PSD_TOL:g}")
    return DensityMatrix(np.array(a, copy=True))


def is_unitary(u, atol: float = 1e-12) -> bool:
    a = as_matrix(u)
    if a.shape[0] != a.shape[1]:
        return False
    return bool(np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0]))) <= atol)


def basis_projector(index: int, dim: int = 2) -> np.ndarray:
    p = np.zeros((dim, dim), dtype=complex)
    p[index, index] = 1
    return p


def diagonal_state(p0: float) -> np.ndarray:
    """Qubit state p0|0><0| + (1 - p0)|1><1|."""
    return np.diag([p0, 1 - p0]).astype(complex)


# -- operators on named qubits of a register --------------------------------


def _contract_left(t: np.ndarray, op: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    k = len(axes)
    op_t = op.reshape((2,) * (2 * k))
    out = np.tensordot(op_t, t, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def apply_kraus_on(rho: np.ndarray, kraus_ops: Sequence[np.ndarray], targets: Sequence[int],
                   n_qubits: int) -> np.ndarray:
    """Apply ``sum_k K rho K^dagger`` with each K acting on qubits ``targets``.

    ``targets`` lists register positions (0 = most significant) in the
    operator's own tensor order.
    """
    targets = list(targets)
    if len(set(targets)) != len(targets) or any(not 0 <= q < n_qubits for q in targets):
        raise DimensionMismatchError(f"bad target qubits {targets} for {n_qubits} qubits")
    dim = 2**n_qubits
    if rho.shape != (dim, dim):
        raise DimensionMismatchError(f"state shape {rho.shape} does not match {n_qubits} qubits")
    t = rho.reshape((2,) * (2 * n_qubits))
    col_axes = [n_qubits + q for q in targets]
    out = np.zeros_like(t)
    for k in kraus_ops:
        k = np.asarray(k, dtype=complex)
        if k.shape != (2 ** len(targets),) * 2:
            raise DimensionMismatchError(f"operator shape {k.shape} does not act on {len(targets)} qubits")
        left = _contract_left(t, k, targets)
        out += _contract_left(left, k.conj(), col_axes)
    return out.reshape(dim, dim)


def apply_unitary_on(rho: np.ndarray, u: np.ndarray, targets: Sequence[int], n_qubits: int) -> np.ndarray:
    return apply_kraus_on(rho, [u], targets, n_qubits)


def reduced_qubits(rho: np.ndarray, keep: Sequence[int], n_qubits: int) -> np.ndarray:
    return partial_trace(rho, [2] * n_qubits, keep)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random full-rank (or rank-limited) density matrix from a Ginibre draw."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real
