"""Single-qubit pointer walk driven by a diagonal input qubit.

Rotation convention: ``R_y(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]]``.
The opposite half-angle sign gives identical populations, so every survival
quantity in this package is independent of the choice.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, sin

import numpy as np

from .channels import KrausChannel, apply, unitary_channel
from .matcore import (
    PROJ0,
    PROJ1,
    DimensionMismatchError,
    diagonal_state,
    partial_trace,
    purity,
    tensor,
)

RETURN_STRONG_TOL = 1e-12
RETURN_WEAK_TOL = 1e-10


def check_eps_star(eps_star: float) -> float:
    e = float(eps_star)
    if not abs(e) <= 0.5:
        raise ValueError(f"eps_star must lie in [-1/2, 1/2], got {eps_star!r}")
    return e


@dataclass(frozen=True)
class WalkConfig:
    theta: float
    eps_star: float = 0.0

    def __post_init__(self):
        if not self.theta >= 0:
            raise ValueError(f"theta must be non-negative, got {self.theta!r}")
        check_eps_star(self.eps_star)

    @property
    def eta(self) -> float:
        """Single-step escape probability sin^2(theta/2) from a pointer basis state."""
        return sin(self.theta / 2) ** 2


@dataclass(frozen=True)
class InputState:
    eps_star: float = 0.0

    def __post_init__(self):
        check_eps_star(self.eps_star)

    @property
    def matrix(self) -> np.ndarray:
        return diagonal_state(0.5 + self.eps_star)


def ry(theta: float) -> np.ndarray:
    c, s = cos(theta / 2), sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def walk_unitary(theta: float) -> np.ndarray:
    """Input-controlled rotation |0><0| (x) R_y(+t) + |1><1| (x) R_y(-t) on (input, pointer)."""
    return tensor(PROJ0, ry(theta)) + tensor(PROJ1, ry(-theta))


def walk_channel(theta: float) -> KrausChannel:
    return unitary_channel(walk_unitary(theta), label="C_walk")


def step_pointer(rho_p, cfg: WalkConfig) -> np.ndarray:
    """One walk step on the pointer with the input traced out."""
    rho = np.asarray(rho_p, dtype=complex)
    p = 0.5 + cfg.eps_star
    up, dn = ry(cfg.theta), ry(-cfg.theta)
    return p * (up @ rho @ up.conj().T) + (1 - p) * (dn @ rho @ dn.conj().T)


def step_pointer_dilated(rho_p, cfg: WalkConfig) -> np.ndarray:
    """Same step taken through the 4x4 unitary on input (x) pointer."""
    u = walk_unitary(cfg.theta)
    joint = u @ tensor(InputState(cfg.eps_star).matrix, rho_p) @ u.conj().T
    return partial_trace(joint, [2, 2], keep=[1])


def purity_loss(cfg: WalkConfig) -> float:
    """Exact single-step purity loss (1 - 4 eps*^2) sin^2(theta) / 2.

    Holds for any pure pointer state whose Bloch vector lies in the x-z plane,
    since R_y only rotates within that plane.

    The small-angle form (1 - 4 eps*^2) theta^2 / 2 overshoots it by
    (1 - 4 eps*^2)(theta^2 - sin^2 theta)/2 <= theta^4/6, so both are bounded
    by theta^2 / 2.
    """
    return (1 - 4 * cfg.eps_star**2) * sin(cfg.theta) ** 2 / 2


def purity_loss_small_angle(cfg: WalkConfig) -> float:
    return (1 - 4 * cfg.eps_star**2) * cfg.theta**2 / 2


PLUS = np.full((2, 2), 0.5, dtype=complex)


def purity_after_step(cfg: WalkConfig, start=PROJ0) -> float:
    return purity(step_pointer(start, cfg))


@dataclass(frozen=True)
class DriveClass:
    kind: str  # "strong" | "weak" | "neither"
    eta: float | None = None
    return_probabilities: tuple = ()


_PROBES = (PROJ0, PROJ1, np.eye(2, dtype=complex) / 2)


def return_probabilities(step_channel: KrausChannel, basis_dim: int = 2, probes=None) -> np.ndarray:
    """Return probability <i| Tr_in C(rho_in (x) |i><i|) |i> for each probe and basis state."""
    if step_channel.input_dim % basis_dim:
        raise DimensionMismatchError(
            f"channel dim {step_channel.input_dim} is not a multiple of pointer dim {basis_dim}"
        )
    in_dim = step_channel.input_dim // basis_dim
    if probes is None:
        if in_dim != 2:
            probes = (np.eye(in_dim, dtype=complex) / in_dim,) + tuple(
                np.diag(np.eye(in_dim)[j]).astype(complex) for j in range(in_dim)
            )
        else:
            probes = _PROBES
    out = np.empty((len(probes), basis_dim))
    for a, rho_in in enumerate(probes):
        for i in range(basis_dim):
            ket = np.zeros((basis_dim, basis_dim), dtype=complex)
            ket[i, i] = 1
            rho = apply(step_channel, tensor(rho_in, ket))
            out[a, i] = partial_trace(rho, [in_dim, basis_dim], keep=[1])[i, i].real
    return out


def classify_drive(step_channel: KrausChannel, basis_dim: int = 2) -> DriveClass:
    """Strong / weak(eta) / neither, judged in the pointer's computational basis.

    The probes |0><0|, |1><1| and I/2 on the input suffice for channels that
    are affine in the input state; this is not a general decision procedure.
    """
    r = return_probabilities(step_channel, basis_dim)
    flat = tuple(float(x) for x in r.ravel())
    if np.all(r < RETURN_STRONG_TOL):
        return DriveClass("strong", None, flat)
    if np.max(r) - np.min(r) <= RETURN_WEAK_TOL:
        eta = 1.0 - float(np.mean(r))
        if eta > 0:
            return DriveClass("weak", eta, flat)
    return DriveClass("neither", None, flat)
