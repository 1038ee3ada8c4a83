"""Pauli channels, deviation encoding, and the small-n eigenvalue screening demo.

Pauli index ``t`` is read as base-4 digits, one per qubit with the first qubit
most significant, and digit values I=0, X=1, Y=2, Z=3. For example, ``t = 13``
(digits 3, 1) at n = 2 is Z (x) X.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import reduce
from math import ceil, exp, log, log2, sqrt
from pathlib import Path

import numpy as np

from .channels import KrausChannel, apply
from .matcore import I2, X, Y, Z, DensityMatrix, partial_trace, validate_density
from .protocol import (
    GlobalRecorderResult,
    Verdict,
    aggregate_m3,
    decide,
    run_double_stage,
    run_single_stage,
)
from .survival import log_survival_leading_order

PAULIS = (I2, X, Y, Z)
FULL_MATRIX_MAX_N = 2
DEMO_MAX_N = 3
DEMO_INNER_TARGETS = (0.99, 0.01)


def pauli_label(t: int, n: int) -> str:
    return "".join("IXYZ"[d] for d in pauli_digits(t, n))


def pauli_digits(t: int, n: int) -> list[int]:
    if not 0 <= t < 4**n:
        raise ValueError(f"Pauli index {t} out of range for n = {n}")
    return [(t // 4 ** (n - 1 - q)) % 4 for q in range(n)]


def pauli_operator(t: int, n: int) -> np.ndarray:
    return reduce(np.kron, (PAULIS[d] for d in pauli_digits(t, n)), np.eye(1, dtype=complex))


def _check_lambda(x: float, name: str) -> float:
    v = float(x)
    if not -1 <= v <= 1:
        raise ValueError(f"{name} must lie in [-1, 1], got {x!r}")
    return v


@dataclass(frozen=True, eq=False)
class PauliChannelSpec:
    n: int
    eigenvalues: np.ndarray

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float)  # own copy: frozen below
        if lam.shape != (4**self.n,):
            raise ValueError(f"expected {4**self.n} eigenvalues for n = {self.n}, got shape {lam.shape}")
        if not np.all(np.isfinite(lam)) or np.any(np.abs(lam) > 1):
            raise ValueError("eigenvalues must be finite and lie in [-1, 1]")
        if lam[0] != 1:
            raise ValueError(f"identity eigenvalue must be 1, got {lam[0]}")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        if self.n <= FULL_MATRIX_MAX_N:
            lo = float(np.linalg.eigvalsh(self.choi())[0])
            if lo < -1e-10:
                raise ValueError(f"eigenvalues do not define a CP map (Choi eigenvalue {lo:.3g})")

    @classmethod
    def identity(cls, n: int) -> "PauliChannelSpec":
        return cls(n, np.ones(4**n))

    @classmethod
    def from_json(cls, obj) -> "PauliChannelSpec":
        if not isinstance(obj, dict) or "n" not in obj or "eigenvalues" not in obj:
            raise ValueError('channel spec must be an object with "n" and "eigenvalues"')
        n = obj["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ValueError(f'"n" must be a positive integer, got {n!r}')
        return cls(n, np.asarray(obj["eigenvalues"], dtype=float))

    @classmethod
    def load(cls, path) -> "PauliChannelSpec":
        return cls.from_json(json.loads(Path(path).read_text()))

    def to_json(self) -> dict:
        return {"n": self.n, "eigenvalues": [float(x) for x in self.eigenvalues]}

    def apply(self, rho) -> np.ndarray:
        """Full-matrix action: P_b -> lambda_b P_b for every Pauli P_b."""
        self._require_small()
        d = 2**self.n
        r = np.asarray(rho, dtype=complex)
        out = np.zeros_like(r)
        for b, lam in enumerate(self.eigenvalues):
            p = pauli_operator(b, self.n)
            out += lam * np.trace(p @ r) / d * p
        return out

    def choi(self) -> np.ndarray:
        """Unnormalised Choi matrix sum_ij |i><j| (x) Phi(|i><j|)."""
        self._require_small()
        d = 2**self.n
        j = np.zeros((d * d, d * d), dtype=complex)
        for b, lam in enumerate(self.eigenvalues):
            p = pauli_operator(b, self.n)
            # Phi(|i><j|) = (1/d) sum_b <j|P_b|i> lambda_b P_b  ->  (1/d) sum_b lambda_b P_b^T (x) P_b
            j += lam / d * np.kron(p.T, p)
        return j

    def _require_small(self):
        if self.n > FULL_MATRIX_MAX_N:
            raise ValueError(f"full-matrix representation capped at n = {FULL_MATRIX_MAX_N}")


@dataclass(frozen=True)
class EncodingConfig:
    t: int
    lambda_hat: float

    def __post_init__(self):
        _check_lambda(self.lambda_hat, "lambda_hat")

    @property
    def coefficients(self) -> tuple[float, float]:
        return povm_coefficients(self.lambda_hat)


@dataclass(frozen=True)
class PauliTestConfig:
    eps_p: float
    n: int = 2
    inner_constant: float = 0.5

    def __post_init__(self):
        if not 0 < self.eps_p <= 2:
            raise ValueError(f"eps_p must lie in (0, 2], got {self.eps_p!r}")
        if self.n < 2:
            raise ValueError("the inner threshold needs n >= 2 (log n > 0)")

    @property
    def subroutine_eps(self) -> float:
        """Walk threshold eps_p / 4; since 2(1 + |lambda_hat|) <= 4 this covers every lambda_hat."""
        return self.eps_p / 4

    @property
    def eps_p_prime(self) -> float:
        return self.inner_constant * self.eps_p / sqrt(log2(self.n))


def povm_coefficients(lambda_hat: float) -> tuple[float, float]:
    """(c1, c2) for E = c1 P+ + c2 P-: calibrated to 1/2 at lambda = lambda_hat, maximal |c1 - c2|."""
    lh = _check_lambda(lambda_hat, "lambda_hat")
    if lh >= 0:
        return 1.0 / (1.0 + lh), 0.0
    return 0.0, 1.0 / (1.0 - lh)


def encode_probability(lambda_t: float, lambda_hat: float) -> float:
    """Sample-qubit |0> probability after encoding: (1 + (lambda - lambda_hat)/(1 + |lambda_hat|)) / 2."""
    lam = _check_lambda(lambda_t, "lambda_t")
    lh = _check_lambda(lambda_hat, "lambda_hat")
    p0 = 0.5 * (1 + (lam - lh) / (1 + abs(lh)))
    if not -1e-15 <= p0 <= 1 + 1e-15:
        raise ArithmeticError(f"encoded probability {p0} left [0, 1]")
    return p0


def deviation_to_eps_star(lambda_t: float, lambda_hat: float) -> float:
    lam = _check_lambda(lambda_t, "lambda_t")
    lh = _check_lambda(lambda_hat, "lambda_hat")
    return (lam - lh) / (2 * (1 + abs(lh)))


def spectral_projectors(t: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    p = pauli_operator(t, n)
    eye = np.eye(2**n, dtype=complex)
    return (eye + p) / 2, (eye - p) / 2


def build_encoding_channel(cfg: EncodingConfig, n: int) -> KrausChannel:
    """Measurement-free POVM channel on (working register) (x) (sample qubit).

    For lambda_hat >= 0 the POVM element E = P+/(1 + lambda_hat) keeps the
    sample at |0>, and its complement (M2 = P-, M3 on P+) flips it. For
    lambda_hat < 0 the roles of P+ and P- swap, and so does the outcome that
    flips. That keeps the sample's |0> population at
    (1 + (lambda - lambda_hat)/(1 + |lambda_hat|)) / 2 on both branches.
    """
    if n > FULL_MATRIX_MAX_N:
        raise ValueError(f"encoding channel is built as a full matrix only for n <= {FULL_MATRIX_MAX_N}")
    if not 1 <= cfg.t < 4**n:
        raise ValueError(f"Pauli index must be in 1..{4**n - 1}, got {cfg.t}")
    lh = cfg.lambda_hat
    p_plus, p_minus = spectral_projectors(cfg.t, n)
    if lh >= 0:
        m1 = p_plus / sqrt(1 + lh)
        m2 = p_minus
        m3 = sqrt(lh / (1 + lh)) * p_plus
        keep, flip = [m1], [m2, m3]
    else:
        m1 = p_minus / sqrt(1 - lh)
        m2 = p_plus
        m3 = sqrt(-lh / (1 - lh)) * p_minus
        keep, flip = [m2, m3], [m1]
    ops = [np.kron(m, I2) for m in keep] + [np.kron(m, X) for m in flip]
    return KrausChannel(tuple(ops), label=f"encode[t={cfg.t}]").check_complete()


def probe_state(n: int, t: int) -> DensityMatrix:
    """(I + P_t) / 2^n, the +1 eigenspace projector normalised."""
    if t == 0:
        raise ValueError("probe state needs a non-identity Pauli index")
    if n > FULL_MATRIX_MAX_N:
        raise ValueError(f"probe states are built as full matrices only for n <= {FULL_MATRIX_MAX_N}")
    d = 2**n
    return validate_density((np.eye(d, dtype=complex) + pauli_operator(t, n)) / d)


def encoded_sample_state(spec: PauliChannelSpec, t: int, lambda_hat: float) -> np.ndarray:
    """Sample-qubit state after probe -> Pauli channel -> encoding channel."""
    rho_work = spec.apply(probe_state(spec.n, t))
    ch = build_encoding_channel(EncodingConfig(t, lambda_hat), spec.n)
    joint = apply(ch, np.kron(rho_work, np.diag([1, 0]).astype(complex)))
    return partial_trace(joint, [2**spec.n, 2], keep=[1])


def encoding_check(spec: PauliChannelSpec, hypothesized) -> float:
    """Largest |full-matrix p0 - closed form| over all t (n <= 2)."""
    worst = 0.0
    for t in range(1, 4**spec.n):
        rho_s = encoded_sample_state(spec, t, float(hypothesized[t]))
        worst = max(worst, abs(rho_s[0, 0].real - encode_probability(spec.eigenvalues[t], hypothesized[t])))
    return worst


@dataclass(frozen=True)
class TestRecord:
    t: int
    label: str
    eps_star: float
    s1: float
    s2: float

    def as_dict(self) -> dict:
        return {"t": self.t, "pauli": self.label, "eps_star": self.eps_star, "s1": self.s1, "s2": self.s2}


@dataclass(frozen=True)
class DemoResult:
    m3: GlobalRecorderResult
    verdict: Verdict
    tests: tuple
    m: int
    theta: float
    encoding_max_error: float | None = None

    @property
    def m3_overwrite(self) -> float:
        return self.m3.overwrite_probability


def _check_table(hypothesized, n: int) -> np.ndarray:
    h = np.asarray(hypothesized, dtype=float)
    if h.shape != (4**n,):
        raise ValueError(f"hypothesized table must have {4**n} entries, got shape {h.shape}")
    if np.any(np.abs(h) > 1) or not np.all(np.isfinite(h)):
        raise ValueError("hypothesized eigenvalues must lie in [-1, 1]")
    return h


def run_estimation_demo(spec: PauliChannelSpec, hypothesized, test_cfg: PauliTestConfig,
                        inner_targets: tuple[float, float] = DEMO_INNER_TARGETS,
                        check_encoding: bool = True) -> DemoResult:
    """Test all 4^n - 1 eigenvalues, accumulate on M3, and return the verdict."""
    if spec.n > DEMO_MAX_N:
        raise ValueError(f"demo supports n <= {DEMO_MAX_N}, got {spec.n}")
    h = _check_table(hypothesized, spec.n)
    n_eff = max(spec.n, 2)
    records = []
    base = None
    for t in range(1, 4**spec.n):
        eps_star = deviation_to_eps_star(spec.eigenvalues[t], h[t])
        ds = run_double_stage(n_eff, eps_star, inner_targets, eps=test_cfg.subroutine_eps)
        base = base or ds.params
        records.append(TestRecord(t, pauli_label(t, spec.n), eps_star, ds.inner.survival_m1, ds.survival_m2))
    m3 = aggregate_m3([r.s2 for r in records])
    enc_err = encoding_check(spec, h) if check_encoding and spec.n <= FULL_MATRIX_MAX_N else None
    return DemoResult(m3, decide(m3.overwrite_probability), tuple(records), base.m, base.theta, enc_err)


def single_deviation_spec(n: int, t: int, deviation: float) -> tuple[PauliChannelSpec, np.ndarray]:
    """Depolarizing channel (every non-identity eigenvalue = ``deviation``) and a
    hypothesis table that matches it except for lambda_hat_t = 0."""
    lam = np.full(4**n, float(deviation))
    lam[0] = 1.0
    hyp = lam.copy()
    hyp[t] = 0.0
    return PauliChannelSpec(n, lam), hyp


@dataclass(frozen=True)
class StressRow:
    n: int
    m: int
    theta: float
    eps_weak: float
    log_s1: float
    s2: float
    log_s3: float
    drift_term: float

    @property
    def m3_overwrite(self) -> float:
        return float(-np.expm1(self.log_s3))


def weak_signal_stress(n_values, eps_p: float, rounds_constant: float = 1.0, m_theta: float = 1.0,
                       inner_constant: float = 0.5) -> list[StressRow]:
    """All 4^n - 1 deviations at the inner threshold eps_p'.

    Rounds scale as m = ceil(c log n / eps^2) with eps = eps_p / 4 and
    theta = m_theta / m, and each deviation maps to the largest walk signal
    eps' = eps_p' / 2 (lambda_hat = 0). Reports -ln S1, S2 = (1 - S1)^(3n)
    and S3 = (1 - S2)^(4^n - 1) for each n.
    """
    rows = []
    for n in n_values:
        cfg = PauliTestConfig(eps_p, n, inner_constant)
        eps = cfg.subroutine_eps
        m = max(1, ceil(rounds_constant * log(n) / eps**2))
        theta = m_theta / m
        eps_weak = min(cfg.eps_p_prime / 2, 0.5)
        s1 = run_single_stage(m, theta, eps_weak).survival_m1
        log_s2 = 3 * n * float(np.log1p(-s1))
        s2 = exp(log_s2)
        log_s3 = (4**n - 1) * float(np.log1p(-s2))
        drift = -log_survival_leading_order(m, theta, eps_weak) + log_survival_leading_order(m, theta, 0.0)
        rows.append(StressRow(n, m, theta, eps_weak, log(s1), s2, log_s3, drift))
    return rows
