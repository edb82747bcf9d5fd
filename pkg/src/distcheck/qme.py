"""Mean estimation with the quantum mean-estimation contract, simulated.

Two interchangeable backends honor ``|mu_hat - mu| <= sigma / n`` with
probability at least ``1 - delta``:

* ``IDEAL`` computes ``(mu, sigma)`` from the code's true pmf and places the
  estimate inside the allowed band according to a noise mode. It charges
  ``cost_constant * n * ceil(log2(1/delta))`` code uses without drawing.
* ``MOM`` is a classical median of ``ceil(8 ln(1/delta))`` batch means of
  ``n**2`` real draws each, and charges exactly those draws.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .access import SourceCode
from .dist import Pmf


class Rv:
    """A real-valued table ``Y: range(k) -> R``.

    Stored sparsely as a default value plus overrides on ``support``, so a
    count-based variable over a huge domain costs memory proportional to the
    number of distinct symbols seen. Values may be Python ``Fraction`` objects
    (object dtype) for exact arithmetic.
    """

    def __init__(self, k: int, default=0.0, support=None, values=None):
        self.k = int(k)
        self.default = default
        if support is None:
            support = np.empty(0, dtype=np.int64)
            values = np.empty(0)
        self.support = np.asarray(support, dtype=np.int64)
        self.values = np.asarray(values)
        if self.support.shape != self.values.shape:
            raise ValueError("support and values must have the same length")
        if self.support.size and (self.support.min() < 0 or self.support.max() >= self.k):
            raise ValueError("support indices out of range")

    @classmethod
    def from_table(cls, table) -> Rv:
        table = np.asarray(table)
        return cls(table.size, 0.0, np.arange(table.size), table)

    @classmethod
    def indicator(cls, k: int, members) -> Rv:
        members = np.asarray(members, dtype=np.int64)
        return cls(k, 0.0, members, np.ones(members.size))

    def table(self) -> np.ndarray:
        dtype = object if self.values.dtype == object else float
        out = np.full(self.k, self.default, dtype=dtype)
        out[self.support] = self.values
        return out

    def __call__(self, symbols) -> np.ndarray:
        return self.table()[np.asarray(symbols, dtype=np.int64)]

    def moments(self, probs) -> tuple:
        """``(E[Y], E[Y^2])`` under ``probs``; exact when inputs are Fractions."""
        probs = np.asarray(probs)
        if self.values.dtype == object or probs.dtype == object:
            w = probs[self.support]
            d = self.default
            mass = sum(w, Fraction(0)) if w.dtype == object else float(w.sum())
            rest = 1 - mass
            m1 = d * rest + sum((pi * v for pi, v in zip(w, self.values)), 0)
            m2 = d * d * rest + sum((pi * v * v for pi, v in zip(w, self.values)), 0)
            return m1, m2
        w = probs[self.support]
        d = float(self.default)
        v = self.values.astype(float)
        m1 = d + float(np.dot(w, v - d))
        m2 = d * d + float(np.dot(w, v * v - d * d))
        return m1, m2


def _probs_of(p):
    if isinstance(p, Pmf):
        return p.probs
    return np.asarray(p, dtype=object)


def mean_and_variance(p, Y: Rv):
    """``(mu, sigma^2)``; exact rationals when ``p`` is a sequence of Fractions."""
    probs = _probs_of(p)
    if len(probs) != Y.k:
        raise ValueError(f"dimension mismatch: pmf has {len(probs)} symbols, Y has {Y.k}")
    m1, m2 = Y.moments(probs)
    var = m2 - m1 * m1
    if var < 0:
        var = 0 * var
    return m1, var


def exact_moments(p, Y: Rv) -> tuple[float, float]:
    """Mean and standard deviation of ``Y`` under ``p``."""
    mu, var = mean_and_variance(p, Y)
    return mu, math.sqrt(var)


class Backend(enum.Enum):
    IDEAL = "ideal"
    MOM = "mom"


class NoiseMode(enum.Enum):
    ZERO = "zero"
    UNIFORM = "uniform"
    ADV_HIGH = "adv-high"
    ADV_LOW = "adv-low"
    ADV_TOWARDS = "adv-to"


@dataclass(frozen=True)
class QmeConfig:
    n: int = 1
    delta: float = 0.001
    backend: Backend = Backend.IDEAL
    noise: NoiseMode = NoiseMode.ZERO
    target: float = 0.0
    cost_constant: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("QME accuracy parameter n must be positive")
        if not 0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")
        if self.cost_constant < 1:
            raise ValueError("cost_constant must be a positive integer")

    @classmethod
    def parse_noise(cls, text: str) -> tuple[NoiseMode, float]:
        """``adv-to:0.5`` -> ``(ADV_TOWARDS, 0.5)``; plain names map directly."""
        name, _, arg = text.partition(":")
        mode = NoiseMode(name)
        if mode is NoiseMode.ADV_TOWARDS:
            if not arg:
                raise ValueError("adv-to needs a target, e.g. adv-to:0")
            return mode, float(arg)
        return mode, 0.0

    def noise_label(self) -> str:
        if self.noise is NoiseMode.ADV_TOWARDS:
            return f"adv-to:{self.target:g}"
        return self.noise.value

    def declared_cost(self) -> int:
        if self.backend is Backend.IDEAL:
            return ideal_cost(self.n, self.delta, self.cost_constant)
        return mom_cost(self.n, self.delta)


def ideal_cost(n: int, delta: float, cost_constant: int = 1) -> int:
    return cost_constant * n * math.ceil(math.log2(1 / delta))


def mom_batches(delta: float) -> int:
    return math.ceil(8 * math.log(1 / delta))


def mom_cost(n: int, delta: float) -> int:
    return n * n * mom_batches(delta)


@dataclass(frozen=True)
class MeanEstimate:
    value: float
    n: int
    delta: float
    backend: Backend
    charged_uses: int
    failed: bool = False


def qme_estimate(code: SourceCode, Y: Rv, cfg: QmeConfig, rng=None,
                 label: str = "qme") -> MeanEstimate:
    """Estimate ``E[Y]`` under the code's distribution.

    ``rng`` drives the backend's own randomness (noise and failure events for
    ``IDEAL``); it defaults to the code's stream.
    """
    if Y.k != code.domain_size:
        raise ValueError(f"Y has {Y.k} symbols, code has {code.domain_size}")
    rng = code.rng if rng is None else rng
    if cfg.backend is Backend.IDEAL:
        return _ideal(code, Y, cfg, rng, label)
    return _median_of_means(code, Y, cfg, label)


def _ideal(code, Y, cfg, rng, label):
    if code.truth is None:
        raise ValueError("the ideal backend needs a code with a known truth pmf")
    mu, sigma = exact_moments(code.truth, Y)
    band = sigma / cfg.n
    # both uniforms are always consumed so streams stay aligned across modes
    fail_u = rng.random()
    noise_u = rng.uniform(-1.0, 1.0)
    failed = fail_u < cfg.delta
    if failed:
        value = mu + 10 * band
    elif cfg.noise is NoiseMode.ZERO:
        value = mu
    elif cfg.noise is NoiseMode.UNIFORM:
        value = mu + band * noise_u
    elif cfg.noise is NoiseMode.ADV_HIGH:
        value = mu + band
    elif cfg.noise is NoiseMode.ADV_LOW:
        value = mu - band
    else:
        value = min(max(cfg.target, mu - band), mu + band)
    cost = cfg.declared_cost()
    code.ledger.charge(cost, label)
    return MeanEstimate(value, cfg.n, cfg.delta, cfg.backend, cost, failed)


def _median_of_means(code, Y, cfg, label):
    batch = cfg.n * cfg.n
    table = Y.table().astype(float)
    means = np.empty(mom_batches(cfg.delta))
    for b in range(means.size):
        symbols, counts = code.draw_counts(batch, label)
        vals = table[symbols]
        # shifting by a drawn value keeps constant Y exact
        means[b] = vals[0] + np.dot(counts, vals - vals[0]) / batch
    value = float(np.median(means))
    return MeanEstimate(value, cfg.n, cfg.delta, cfg.backend, batch * means.size)
