"""Single- and double-stage walk protocols and the global M3 recorder.

Two backends run the single-stage loop:

* ``fast`` multiplies per-round survival factors. This is valid because the
  write channel leaves pointer and recorder diagonal at every write/measure
  point.
* ``full_dm`` executes the circuit on a dense register of sample, pointer,
  recorder(s), two dilation ancillas and one reset ancilla. It exists to
  certify the ``fast`` reduction on small instances.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from math import exp, log

import numpy as np

from .channels import build_controlled_overwrite, build_replace, build_reset, build_reverse_overwrite, dilate
from .matcore import apply_kraus_on, apply_unitary_on, reduced_qubits
from .params import ProtocolTargets, SolvedParams, solve
from .survival import survival_curve
from .walk import InputState, check_eps_star, walk_unitary

BACKENDS = ("fast", "full_dm")
FULL_DM_MAX_ROUNDS = 6
FULL_DM_MAX_QUBITS = 9
DETECTION_THRESHOLD = exp(-3)

_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


class BackendLimitError(ValueError):
    pass


class Verdict(str, enum.Enum):
    """Channel-level conclusion from the M3 overwrite probability."""

    ALL_WITHIN = "hypothesis_1"  # every |lambda - lambda_hat| below eps_p
    SOME_DEVIATES = "hypothesis_2"  # some |lambda - lambda_hat| above eps_p'


@dataclass(frozen=True)
class StageOneResult:
    m: int
    theta: float
    eps_star: float
    survival_m1: float
    per_round_overwrite: tuple = field(repr=False)
    backend: str = "fast"

    @property
    def queries_used(self) -> int:
        return self.m * (self.m + 1) // 2


@dataclass(frozen=True)
class DoubleStageResult:
    survival_m2: float
    iterations: int
    inner: StageOneResult
    params: SolvedParams | None = None


@dataclass(frozen=True)
class GlobalRecorderResult:
    per_test_f: tuple
    log_survival_m3: float

    @property
    def survival_m3(self) -> float:
        return exp(self.log_survival_m3)

    @property
    def overwrite_probability(self) -> float:
        return float(-np.expm1(self.log_survival_m3))


# -- register simulation -------------------------------------------------------


class _Register:
    """Dense density matrix over named qubits, all starting in |0>."""

    def __init__(self, names):
        self.names = list(names)
        self.n = len(self.names)
        if self.n > FULL_DM_MAX_QUBITS:
            raise BackendLimitError(f"{self.n} qubits exceeds the {FULL_DM_MAX_QUBITS}-qubit cap")
        self.rho = np.zeros((2**self.n, 2**self.n), dtype=complex)
        self.rho[0, 0] = 1
        self._reset = build_reset(2).kraus_ops

    def idx(self, *names):
        return [self.names.index(q) for q in names]

    def unitary(self, u, *names):
        self.rho = apply_unitary_on(self.rho, u, self.idx(*names), self.n)

    def channel(self, ops, *names):
        self.rho = apply_kraus_on(self.rho, ops, self.idx(*names), self.n)

    def reset(self, name, via="R"):
        """SWAP ``name`` with the cold ancilla, then re-cool the ancilla."""
        self.unitary(_SWAP, name, via)
        self.channel(self._reset, via)

    def zero_population(self, name) -> float:
        return float(reduced_qubits(self.rho, self.idx(name), self.n)[0, 0].real)

    def trace(self) -> float:
        return float(np.trace(self.rho).real)


@lru_cache(maxsize=8)
def _dilations():
    return dilate(build_controlled_overwrite()), dilate(build_reverse_overwrite())


def _run_inner_dm(reg: _Register, m: int, theta: float, eps_star: float, recorder: str) -> list[float]:
    w_dil, _ = _dilations()
    prep = build_replace(InputState(eps_star).matrix).kraus_ops
    u_walk = walk_unitary(theta)
    per_round = []
    for i in range(1, m + 1):
        reg.reset("P")
        for _ in range(i):
            reg.channel(prep, "QS")
            reg.unitary(u_walk, "QS", "P")
        per_round.append(1.0 - reg.zero_population("P"))
        reg.unitary(w_dil.unitary, "P", recorder, "A1", "A2")
        reg.reset("A1")
        reg.reset("A2")
    return per_round


def _run_single_stage_dm(m: int, theta: float, eps_star: float) -> StageOneResult:
    if m > FULL_DM_MAX_ROUNDS:
        raise BackendLimitError(f"full_dm backend supports m <= {FULL_DM_MAX_ROUNDS}, got {m}")
    reg = _Register(["QS", "P", "M1", "A1", "A2", "R"])
    per_round = _run_inner_dm(reg, m, theta, eps_star, "M1")
    return StageOneResult(m, theta, eps_star, reg.zero_population("M1"), tuple(per_round), "full_dm")


def run_single_stage(m: int, theta: float, eps_star: float, backend: str = "fast") -> StageOneResult:
    """Run the m-round varying-step walk and report the recorder's survival."""
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    check_eps_star(eps_star)
    if backend == "fast":
        c = survival_curve(int(m), float(theta), float(eps_star), "exact")
        return StageOneResult(int(m), float(theta), float(eps_star), c.survival,
                              tuple(c.per_round_overwrite.tolist()), "fast")
    if backend == "full_dm":
        return _run_single_stage_dm(int(m), float(theta), float(eps_star))
    raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")


def default_inner_targets(n: int) -> tuple[float, float]:
    return 0.5, 1.0 / n


def solve_inner(n: int, eps: float, inner_targets: tuple[float, float] | None = None,
                slack: float = 0.9) -> SolvedParams:
    s0_t, s1_t = inner_targets or default_inner_targets(n)
    return solve(ProtocolTargets.from_survival_targets(s0_t, s1_t, eps, slack))


def run_double_stage(n: int, eps_star: float, inner_targets: tuple[float, float] | None = None,
                     eps: float = 0.25, iterations: int | None = None,
                     inner_params: tuple[int, float] | None = None) -> DoubleStageResult:
    """Inner walk recorded on M1, inverted onto M2, repeated ``3n`` times.

    The inner parameters are solved so that S0(M1) > s0_target and
    S1(M1) < s1_target at signal strength ``eps``; pass ``inner_params`` to
    fix (m, theta) directly instead. Iterations are i.i.d., so
    S(M2) = (1 - S(M1))^iterations.
    """
    if n < 2:
        raise ValueError(f"double stage needs n >= 2, got {n}")
    iterations = 3 * n if iterations is None else int(iterations)
    solved = None
    if inner_params is None:
        solved = solve_inner(n, eps, inner_targets)
        m, theta = solved.m, solved.theta
    else:
        m, theta = inner_params
    inner = run_single_stage(m, theta, eps_star, "fast")
    s2 = float(np.exp(iterations * np.log1p(-inner.survival_m1))) if inner.survival_m1 < 1 else 0.0
    return DoubleStageResult(s2, iterations, inner, solved)


def run_double_stage_dm(n: int, m: int, theta: float, eps_star: float,
                        iterations: int | None = None) -> DoubleStageResult:
    """Literal double-stage circuit on a 7-qubit register (small m only)."""
    iterations = 3 * n if iterations is None else int(iterations)
    if m > FULL_DM_MAX_ROUNDS:
        raise BackendLimitError(f"full_dm backend supports m <= {FULL_DM_MAX_ROUNDS}, got {m}")
    _, r_dil = _dilations()
    reg = _Register(["QS", "P", "M1", "M2", "A1", "A2", "R"])
    per_round: list[float] = []
    s1_first = None
    for _ in range(iterations):
        reg.reset("M1")
        per_round = _run_inner_dm(reg, m, theta, eps_star, "M1")
        if s1_first is None:
            s1_first = reg.zero_population("M1")
        reg.unitary(r_dil.unitary, "M1", "M2", "A1", "A2")
        reg.reset("A1")
        reg.reset("A2")
    inner = StageOneResult(m, theta, eps_star, s1_first, tuple(per_round), "full_dm")
    return DoubleStageResult(reg.zero_population("M2"), iterations, inner, None)


def aggregate_m3(per_test_s2) -> GlobalRecorderResult:
    """S3 = prod_t (1 - f_t) with f_t = S_t^(2), accumulated in log space."""
    f = np.asarray(per_test_s2, dtype=float)
    if np.any((f < 0) | (f > 1)) or not np.all(np.isfinite(f)):
        raise ValueError("per-test survival probabilities must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        log_s3 = float(np.sum(np.log1p(-f)))
    return GlobalRecorderResult(tuple(f.tolist()), log_s3)


def decide(m3_overwrite_estimate: float) -> Verdict:
    """Below e^-3 -> all deviations small; at or above -> some deviation is large."""
    p = float(m3_overwrite_estimate)
    if not 0 <= p <= 1:
        raise ValueError(f"overwrite estimate must lie in [0, 1], got {p!r}")
    return Verdict.ALL_WITHIN if p < DETECTION_THRESHOLD else Verdict.SOME_DEVIATES


def sample_overwrite(probability: float, repetitions: int, seed: int | None = None) -> float:
    """Fraction of ``repetitions`` seeded Bernoulli draws that read M3 = |1>."""
    if repetitions < 1:
        raise ValueError("repetitions must be positive")
    rng = np.random.default_rng(seed)
    return float(np.count_nonzero(rng.random(repetitions) < probability)) / repetitions


def query_count(n: int, m: int) -> int:
    """Channel queries of one double-stage run: 3n * m(m+1)/2."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    return 3 * n * m * (m + 1) // 2


def s2_bounds(n: int) -> tuple[float, float]:
    """(upper bound on S0^(2), lower bound on S1^(2)) for inner targets (1/2, 1/n)."""
    return 8.0**-n, float(np.exp(3 * n * log(1 - 1 / n)))
