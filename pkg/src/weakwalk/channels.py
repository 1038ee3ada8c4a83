"""Kraus channels, Stinespring dilation, and the protocol's write/reset channels."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matcore import (
    I2,
    DimensionMismatchError,
    as_matrix,
    is_unitary,
    partial_trace,
    tensor,
)

COMPLETENESS_TOL = 1e-12
_GS_SKIP = 1e-9


class CompletenessError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """A CPTP map given by an explicit list of Kraus operators."""

    kraus_ops: tuple
    label: str = ""
    input_dim: int = field(init=False)

    def __post_init__(self):
        ops = tuple(as_matrix(k) for k in self.kraus_ops)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        for k in ops:
            if k.shape != (d, d):
                raise DimensionMismatchError(f"Kraus operator shape {k.shape} != ({d}, {d})")
            k.setflags(write=False)
        object.__setattr__(self, "kraus_ops", ops)
        object.__setattr__(self, "input_dim", d)

    def completeness_error(self) -> float:
        s = sum(k.conj().T @ k for k in self.kraus_ops)
        return float(np.max(np.abs(s - np.eye(self.input_dim))))

    def check_complete(self, tol: float = COMPLETENESS_TOL) -> "KrausChannel":
        err = self.completeness_error()
        if err > tol:
            raise CompletenessError(f"{self.label or 'channel'}: |sum K^dag K - I| = {err:.3e}")
        return self

    def __len__(self):
        return len(self.kraus_ops)


def apply(ch: KrausChannel, rho) -> np.ndarray:
    r = np.asarray(rho, dtype=complex)
    if r.shape != (ch.input_dim, ch.input_dim):
        raise DimensionMismatchError(
            f"{ch.label or 'channel'} acts on dim {ch.input_dim}, state has shape {r.shape}"
        )
    return sum(k @ r @ k.conj().T for k in ch.kraus_ops)


def unitary_channel(u, label: str = "unitary") -> KrausChannel:
    return KrausChannel((u,), label=label)


def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel((np.eye(dim, dtype=complex),), label="identity")


def _ket(i: int, dim: int) -> np.ndarray:
    v = np.zeros((dim, 1), dtype=complex)
    v[i] = 1
    return v


def _outer(i: int, j: int, dim: int = 2) -> np.ndarray:
    return _ket(i, dim) @ _ket(j, dim).conj().T


def build_controlled_overwrite() -> KrausChannel:
    """Pointer-controlled write on (pointer, recorder): P=|1> forces M to |1>.

    Kraus order is fixed (K_0, K_10, K_11) so the dilation is reproducible.
    """
    ops = (
        tensor(_outer(0, 0), I2),
        tensor(_outer(1, 1), _outer(1, 0)),
        tensor(_outer(1, 1), _outer(1, 1)),
    )
    return KrausChannel(ops, label="C_write").check_complete()


def build_reverse_overwrite() -> KrausChannel:
    """Control |0> overwrites the target with |1>; control |1> leaves it alone."""
    ops = (
        tensor(_outer(1, 1), I2),
        tensor(_outer(0, 0), _outer(1, 0)),
        tensor(_outer(0, 0), _outer(1, 1)),
    )
    return KrausChannel(ops, label="C_r-write").check_complete()


def build_reset(target_dim: int = 2) -> KrausChannel:
    """Ideal replace-with-|0> channel.

    Stands in for a SWAP onto a bath-cooled ancilla followed by re-cooling,
    which has the same net effect on the reset qubit.
    """
    ops = tuple(_outer(0, j, target_dim) for j in range(target_dim))
    return KrausChannel(ops, label="reset").check_complete()


def build_replace(state) -> KrausChannel:
    """Discard the input and prepare ``state`` (a diagonal or general density matrix)."""
    s = as_matrix(state)
    d = s.shape[0]
    w, v = np.linalg.eigh((s + s.conj().T) / 2)
    ops = []
    for lam, vec in zip(w, v.T):
        if lam <= 0:
            continue
        for j in range(d):
            ops.append(np.sqrt(lam) * vec.reshape(-1, 1) @ _ket(j, d).conj().T)
    return KrausChannel(tuple(ops), label="replace").check_complete(1e-10)


@dataclass(frozen=True, eq=False)
class DilatedChannel:
    isometry: np.ndarray
    unitary: np.ndarray
    anc_dim: int
    input_dim: int
    label: str = ""

    def apply(self, rho) -> np.ndarray:
        """Act with the unitary on rho (x) |0><0|_anc and trace the ancilla out."""
        r = np.asarray(rho, dtype=complex)
        anc0 = np.zeros((self.anc_dim, self.anc_dim), dtype=complex)
        anc0[0, 0] = 1
        big = self.unitary @ np.kron(r, anc0) @ self.unitary.conj().T
        return partial_trace(big, [self.input_dim, self.anc_dim], keep=[0])


def _next_pow2(k: int) -> int:
    p = 1
    while p < k:
        p *= 2
    return p


def complete_unitary(isometry: np.ndarray, anc_dim: int) -> np.ndarray:
    """Extend an isometry V (columns = |j>|0>_anc images) to a full unitary.

    The remaining columns come from Gram-Schmidt over the canonical basis in
    index order, skipping candidates with residual norm below 1e-9.
    """
    big, d = isometry.shape
    u = np.zeros((big, big), dtype=complex)
    fixed_cols = [j * anc_dim for j in range(d)]
    for j, c in enumerate(fixed_cols):
        u[:, c] = isometry[:, j]
    basis = [isometry[:, j] for j in range(d)]
    free_cols = [c for c in range(big) if c not in set(fixed_cols)]
    fill = iter(free_cols)
    for e in range(big):
        if len(basis) == big:
            break
        v = np.zeros(big, dtype=complex)
        v[e] = 1
        for _ in range(2):  # re-orthogonalise for 1e-15 level orthogonality
            for b in basis:
                v = v - b * np.vdot(b, v)
        nrm = np.linalg.norm(v)
        if nrm < _GS_SKIP:
            continue
        v = v / nrm
        basis.append(v)
        u[:, next(fill)] = v
    return u


def dilate(ch: KrausChannel) -> DilatedChannel:
    """Stinespring isometry V = sum_k K_k (x) |k>_anc and a unitary completion."""
    ch.check_complete()
    d = ch.input_dim
    a = _next_pow2(len(ch.kraus_ops))
    v = np.zeros((d * a, d), dtype=complex)
    for k, op in enumerate(ch.kraus_ops):
        v += np.kron(op, _ket(k, a))
    u = complete_unitary(v, a)
    if not is_unitary(u, 1e-12):
        raise CompletenessError(f"unitary completion failed for {ch.label}")
    for m in (v, u):
        m.setflags(write=False)
    return DilatedChannel(isometry=v, unitary=u, anc_dim=a, input_dim=d, label=ch.label)


def survival_of(rho_2q, recorder: int = 1) -> float:
    """Probability that the recorder qubit of a two-qubit state reads |0>."""
    red = partial_trace(rho_2q, [2, 2], keep=[recorder])
    return float(red[0, 0].real)

