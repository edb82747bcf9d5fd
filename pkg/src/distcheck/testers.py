"""Uniformity and closeness testers for the three distance regimes.

* :func:`run_large` draws ``n`` samples, rejects on a too-frequent symbol,
  then mean-estimates ``Y_j = (k/n) X_j - 1`` (whose mean is an unbiased
  estimate of chi^2 from uniform) and thresholds it.
* :func:`run_small` hashes the domain to two cells with a random subset,
  estimates both cell masses, and votes over ``T`` rounds.
* :func:`run_giant` looks for any repeated symbol among ``N`` draws.
* :func:`classical_baseline` is the sample-only collision tester.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .access import SourceCode
from .dist import Pmf
from .qme import QmeConfig, Rv, exact_moments, qme_estimate

# Calibrated on k in {1e3, 1e4}, theta in {0.1, 0.5}; see demos/calibrate_large.py.
DEFAULT_C = 96.0
DEFAULT_BIG_C = 4.0
DEFAULT_B = 2.0
LARGE_DELTA = 0.001
ACCEPT_FRACTION = 0.995


class Decision(enum.Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"


class Reason(enum.Enum):
    LINF_CHECK = "LInfCheck"
    MEAN_THRESHOLD = "MeanThreshold"
    COLLISION_FOUND = "CollisionFound"
    NO_COLLISION = "NoCollision"
    ROUND_VOTE = "RoundVote"


@dataclass
class Verdict:
    decision: Decision
    reason: Reason
    diagnostics: dict = field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        return self.decision is Decision.ACCEPT

    def to_dict(self) -> dict:
        """JSON-ready form; array-valued diagnostics are dropped."""
        out = {"decision": self.decision.value, "reason": self.reason.value}
        for key, val in self.diagnostics.items():
            if isinstance(val, (bool, int, float, str)) or val is None:
                out[key] = val
            elif isinstance(val, np.generic):
                out[key] = val.item()
        return out


@dataclass
class Counts:
    """Phase-1 histogram over the symbols actually seen."""

    n: int
    symbols: np.ndarray
    counts: np.ndarray
    L: float | None = None

    @classmethod
    def from_draws(cls, draws, L=None) -> Counts:
        symbols, counts = np.unique(np.asarray(draws), return_counts=True)
        return cls(int(len(draws)), symbols, counts, L)

    @property
    def max_count(self) -> int:
        return int(self.counts.max()) if self.counts.size else 0

    def dense(self, k: int) -> np.ndarray:
        out = np.zeros(k, dtype=np.int64)
        out[self.symbols] = self.counts
        return out


def phase1_rv(symbols, counts, k: int, n: int, exact: bool = False) -> Rv:
    """``Y_j = (k/n) X_j - 1``, materialized only on the seen symbols."""
    counts = np.asarray(counts)
    if exact:
        scale = Fraction(k, n)
        values = np.array([scale * int(c) - 1 for c in counts], dtype=object)
        return Rv(k, -1, symbols, values)
    return Rv(k, -1.0, symbols, (k / n) * counts - 1.0)


def phase1_statistics(code: SourceCode, k: int, n: int, label: str = "phase1"):
    """Draw ``n`` samples and return ``(Counts, Y, mu, sigma)`` against the truth."""
    if code.truth is None:
        raise ValueError("phase1_statistics needs a code with a known truth pmf")
    counts = Counts.from_draws(code.draw(n, label))
    Y = phase1_rv(counts.symbols, counts.counts, k, n)
    mu, sigma = exact_moments(code.truth, Y)
    return counts, Y, mu, sigma


def choose_L(n: int, k: int, B: float, c_const: float) -> float:
    """Frequency cap for the l-infinity check; ``n`` must already be fixed."""
    if n <= k ** 0.99 / B:
        return 100.0
    return B * c_const * math.log(k)


@dataclass(frozen=True)
class LargeConfig:
    gamma: float
    B: float = DEFAULT_B
    c_const: float = DEFAULT_C
    C_const: float = DEFAULT_BIG_C
    qme: QmeConfig = field(default_factory=lambda: QmeConfig(delta=LARGE_DELTA))
    n_override: int | None = None

    def __post_init__(self):
        if self.B < 1:
            raise ValueError("B must be at least 1")
        if self.c_const <= 0 or self.C_const <= 0:
            raise ValueError("c_const and C_const must be positive")

    def phase1_size(self, k: int) -> int:
        if self.n_override is not None:
            return int(self.n_override)
        return math.ceil(self.c_const * k ** (1 / 3) / self.gamma ** (2 / 3))

    def qme_size(self, n: int) -> int:
        return math.ceil(self.C_const * n)

    def declared_uses(self, n: int, reached_qme: bool) -> int:
        if not reached_qme:
            return n
        return n + replace(self.qme, n=self.qme_size(n)).declared_cost()


def run_large(code: SourceCode, k: int, cfg: LargeConfig, rng=None) -> Verdict:
    """Tester for ``chi^2 <= .99 gamma`` (with bounded max mass) vs ``H^2 >= gamma``."""
    if not 1 / k - 1e-15 <= cfg.gamma <= 1:
        raise ValueError(f"gamma={cfg.gamma} outside [1/k, 1] for k={k}")
    if code.domain_size != k:
        raise ValueError(f"code has {code.domain_size} symbols, expected {k}")
    start = code.code_uses
    n = cfg.phase1_size(k)
    L = choose_L(n, k, cfg.B, cfg.c_const)
    draws = code.draw(n, "phase1")
    counts = Counts.from_draws(draws, L)
    diag = {"n": n, "L": L, "max_count": counts.max_count, "mu_hat": None,
            "draws": draws, "counts": counts}
    if counts.max_count >= L:
        diag["code_uses"] = code.code_uses - start
        return Verdict(Decision.REJECT, Reason.LINF_CHECK, diag)

    Y = phase1_rv(counts.symbols, counts.counts, k, n)
    qcfg = replace(cfg.qme, n=cfg.qme_size(n))
    est = qme_estimate(code, Y, qcfg, rng)
    diag.update(mu_hat=est.value, qme_n=qcfg.n, qme_uses=est.charged_uses,
                qme_failed=est.failed, code_uses=code.code_uses - start)
    if code.truth is not None:
        diag["mu"], diag["sigma"] = exact_moments(code.truth, Y)
    if est.value <= ACCEPT_FRACTION * cfg.gamma:
        return Verdict(Decision.ACCEPT, Reason.MEAN_THRESHOLD, diag)
    return Verdict(Decision.REJECT, Reason.MEAN_THRESHOLD, diag)


@dataclass(frozen=True)
class SmallConfig:
    tau: float
    T: int = 4000
    theta_star: float = (1 / 3 + 1 / math.sqrt(8)) / 2
    per_estimate_precision: float = 1 / 400
    delta_round: float = 1 / 600
    vote_threshold: float = 7 / 384
    qme: QmeConfig = field(default_factory=QmeConfig)

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.T < 1:
            raise ValueError("T must be positive")
        lo = 1 / 3 + 2 * self.per_estimate_precision
        hi = 1 / math.sqrt(8) - 2 * self.per_estimate_precision
        if not lo < self.theta_star < hi:
            raise ValueError(f"theta_star={self.theta_star} must lie in ({lo:.5f}, {hi:.5f})")

    @property
    def qme_n(self) -> int:
        # an indicator has sigma <= 1/2
        return math.ceil(1 / (2 * self.per_estimate_precision * self.tau))

    def round_qme(self) -> QmeConfig:
        return replace(self.qme, n=self.qme_n, delta=self.delta_round)

    def declared_uses(self) -> int:
        return self.T * 2 * self.round_qme().declared_cost()


def subset_draw(k: int, rng: np.random.Generator) -> tuple[np.ndarray, Rv]:
    """Uniformly random subset (fair coin per symbol) and its indicator."""
    members = np.flatnonzero(rng.integers(0, 2, size=k))
    return members, Rv.indicator(k, members)


def run_small(code_p: SourceCode, code_q: SourceCode, k: int, cfg: SmallConfig,
              rng=None) -> Verdict:
    """Tolerant l2 closeness: ``||p-q|| <= tau/12`` vs ``||p-q|| >= tau``."""
    if code_p.domain_size != k or code_q.domain_size != k:
        raise ValueError("both codes must live on the same domain of size k")
    rng = code_p.rng if rng is None else rng
    qcfg = cfg.round_qme()
    start_p, start_q = code_p.code_uses, code_q.code_uses
    cut = cfg.theta_star * cfg.tau
    votes = 0
    for _ in range(cfg.T):
        _, Y = subset_draw(k, rng)
        p_hat = qme_estimate(code_p, Y, qcfg, rng, "qme_p").value
        q_hat = qme_estimate(code_q, Y, qcfg, rng, "qme_q").value
        votes += abs(p_hat - q_hat) > cut
    rate = votes / cfg.T
    uses_p = code_p.code_uses - start_p
    uses_q = code_q.code_uses - start_q if code_q.ledger is not code_p.ledger else 0
    diag = {"T": cfg.T, "qme_n": qcfg.n, "votes": votes, "vote_rate": rate,
            "code_uses_p": uses_p, "code_uses_q": uses_q, "code_uses": uses_p + uses_q}
    decision = Decision.ACCEPT if rate <= cfg.vote_threshold else Decision.REJECT
    return Verdict(decision, Reason.ROUND_VOTE, diag)


def ceil_two_thirds_power(N: int) -> int:
    """Exact ``ceil(N**(2/3))`` for a nonnegative integer ``N``."""
    target = N * N
    m = max(0, round(N ** (2 / 3)))
    while m ** 3 < target:
        m += 1
    while m > 0 and (m - 1) ** 3 >= target:
        m -= 1
    return m


@dataclass(frozen=True)
class GiantConfig:
    theta: float
    a_coef: float = 80.0
    c_close: float = 1 / 16010
    n_override: int | None = None

    def __post_init__(self):
        if self.theta < 1:
            raise ValueError("theta must be at least 1")
        if self.a_coef <= 0 or not 0 < self.c_close < 1:
            raise ValueError("a_coef must be positive and c_close in (0, 1)")

    def sample_size(self, k: int) -> int:
        if self.n_override is not None:
            N = int(self.n_override)
        else:
            N = math.ceil(self.a_coef * math.sqrt(k / self.theta))
        if N < 2:
            raise ValueError(f"sample size N={N} must be at least 2")
        return N


def count_collisions(counts) -> int:
    counts = np.asarray(counts, dtype=np.int64)
    return int(np.sum(counts * (counts - 1) // 2))


def run_giant(code: SourceCode, k: int, cfg: GiantConfig) -> Verdict:
    """Reject iff the ``N`` draws contain a repeated symbol."""
    N = cfg.sample_size(k)
    start = code.code_uses
    draws = code.draw(N, "distinctness")
    counts = np.unique(draws, return_counts=True)[1]
    diag = {"N": N, "modeled_quantum_cost": ceil_two_thirds_power(N),
            "collisions": count_collisions(counts), "code_uses": code.code_uses - start}
    if counts.size < N:
        return Verdict(Decision.REJECT, Reason.COLLISION_FOUND, diag)
    return Verdict(Decision.ACCEPT, Reason.NO_COLLISION, diag)


def collision_stats(p, N: int):
    """``(E[Z], upper bound on Var[Z])`` for the pair-collision count of ``N`` draws.

    ``p`` may be a :class:`Pmf` or a sequence of ``Fraction``; the latter
    gives exact rationals.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    pairs, triples = math.comb(N, 2), math.comb(N, 3)
    if isinstance(p, Pmf):
        k = p.k
        inv_k = 1.0 / k
        d = p.probs - inv_k
        pow2, pow3 = float(np.dot(d, d)), float(np.sum(d ** 3))
    else:
        k = len(p)
        inv_k = Fraction(1, k)
        d = [Fraction(x) - inv_k for x in p]
        pow2, pow3 = sum(x * x for x in d), sum(x ** 3 for x in d)
    expected = pairs * (pow2 + inv_k)
    var_upper = expected + 6 * triples * (pow3 + 3 * inv_k * pow2)
    return expected, var_upper


def classical_sample_size(k: int, epsilon: float, sample_constant: float = 4.0) -> int:
    return max(2, math.ceil(sample_constant * math.sqrt(k) / epsilon ** 2))


def classical_baseline(code: SourceCode, k: int, epsilon: float, *,
                       sample_constant: float = 4.0, m: int | None = None) -> Verdict:
    """Sample-only collision tester: accept iff the pair collision rate is at most ``(1 + 2 eps^2)/k``."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    m = classical_sample_size(k, epsilon, sample_constant) if m is None else int(m)
    if m < 2:
        raise ValueError("need at least two samples")
    start = code.code_uses
    draws = code.draw(m, "samples")
    Z = count_collisions(np.unique(draws, return_counts=True)[1])
    rate = Z / math.comb(m, 2)
    cut = (1 + 2 * epsilon ** 2) / k
    diag = {"m": m, "collisions": Z, "collision_rate": rate, "threshold": cut,
            "code_uses": code.code_uses - start}
    if rate <= cut:
        return Verdict(Decision.ACCEPT, Reason.MEAN_THRESHOLD, diag)
    return Verdict(Decision.REJECT, Reason.MEAN_THRESHOLD, diag)
