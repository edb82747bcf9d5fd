"""Query-metered samplers ("the code" for a distribution).

A :class:`SourceCode` wraps a vectorized draw procedure together with a
:class:`QueryLedger` that counts every use. Codes built in-process also
carry the ``truth`` pmf, which only oracle backends and tests may read.
"""
from __future__ import annotations

import zlib
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from .dist import Pmf

Sampler = Callable[[np.random.Generator, int], np.ndarray]


def stream(master_seed: int, trial: int = 0, label: str = "") -> np.random.Generator:
    """Independent Philox stream keyed by ``(master_seed, trial, label)``."""
    key = (int(trial), zlib.crc32(label.encode()))
    seq = np.random.SeedSequence(int(master_seed) & (2**64 - 1), spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(seed)


@dataclass
class QueryLedger:
    """Exact count of code uses, broken down by phase label."""

    breakdown: Counter = field(default_factory=Counter)

    @property
    def code_uses(self) -> int:
        return sum(self.breakdown.values())

    def charge(self, uses: int, label: str = "draw") -> None:
        if uses < 0:
            raise ValueError("cannot charge a negative number of uses")
        self.breakdown[label] += int(uses)

    def merge(self, other: QueryLedger) -> None:
        self.breakdown.update(other.breakdown)


class SourceCode:
    """A sampler for a distribution over ``range(domain_size)`` that meters its own use.

    ``sampler(rng, n)`` must return ``n`` i.i.d. symbols. ``count_sampler``,
    when given, returns a length-``domain_size`` histogram of ``n`` draws and
    is used as a shortcut for large batches.
    """

    def __init__(self, domain_size: int, sampler: Sampler, rng, *,
                 truth: Pmf | None = None, ledger: QueryLedger | None = None,
                 count_sampler: Sampler | None = None):
        if domain_size < 1:
            raise ValueError("domain_size must be positive")
        if truth is not None and truth.k != domain_size:
            raise ValueError("truth pmf does not match the domain size")
        self.domain_size = domain_size
        self.sampler = sampler
        self.count_sampler = count_sampler
        self.rng = as_generator(rng)
        self.truth = truth
        self.ledger = ledger if ledger is not None else QueryLedger()

    def draw(self, n_draws: int = 1, label: str = "draw") -> np.ndarray:
        n_draws = int(n_draws)
        if n_draws < 0:
            raise ValueError("n_draws must be nonnegative")
        self.ledger.charge(n_draws, label)
        return np.asarray(self.sampler(self.rng, n_draws), dtype=np.int64)

    def draw_counts(self, n_draws: int, label: str = "draw") -> tuple[np.ndarray, np.ndarray]:
        """Histogram of ``n_draws`` draws as ``(symbols, counts)`` over seen symbols."""
        if self.count_sampler is not None and n_draws > self.domain_size:
            self.ledger.charge(n_draws, label)
            hist = np.asarray(self.count_sampler(self.rng, n_draws))
            seen = np.flatnonzero(hist)
            return seen, hist[seen]
        return np.unique(self.draw(n_draws, label), return_counts=True)

    @property
    def code_uses(self) -> int:
        return self.ledger.code_uses

    def __repr__(self):
        return (f"SourceCode(domain_size={self.domain_size}, uses={self.code_uses}, "
                f"truth={'yes' if self.truth is not None else 'no'})")


def draw(code: SourceCode, n_draws: int, label: str = "draw") -> np.ndarray:
    return code.draw(n_draws, label)


def _inverse_cdf_sampler(p: Pmf) -> tuple[Sampler, Sampler]:
    cdf = np.cumsum(p.probs)
    last = int(np.flatnonzero(p.probs)[-1])
    probs = p.probs

    def sample(rng, n):
        u = rng.random(n)
        return np.minimum(np.searchsorted(cdf, u, side="right"), last)

    def sample_counts(rng, n):
        return rng.multinomial(n, probs)

    return sample, sample_counts


def code_from_pmf(p: Pmf, seed) -> SourceCode:
    """Code that draws i.i.d. from ``p`` by inverse-CDF lookup on a seeded stream."""
    sample, sample_counts = _inverse_cdf_sampler(p)
    return SourceCode(p.k, sample, seed, truth=p, count_sampler=sample_counts)


@dataclass(frozen=True)
class StringOracle:
    """A string ``x`` over ``range(k)``; its pmf is the symbol frequency vector."""

    k: int
    x: tuple

    def __post_init__(self):
        if not self.x:
            raise ValueError("a string oracle needs at least one entry")
        arr = self.array
        if arr.min() < 0 or arr.max() >= self.k:
            raise ValueError(f"string entries must lie in [0, {self.k})")

    @cached_property
    def array(self) -> np.ndarray:
        arr = np.asarray(self.x, dtype=np.int64)
        arr.flags.writeable = False
        return arr

    @property
    def m(self) -> int:
        return len(self.x)

    def induced_counts(self) -> np.ndarray:
        return np.bincount(self.array, minlength=self.k)

    def induced_pmf(self) -> Pmf:
        return Pmf(self.induced_counts() / self.m)

    def save(self, path) -> None:
        lines = [f"{self.k} {self.m}"] + [str(s + 1) for s in self.x]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> StringOracle:
        """Read the ``k m`` header plus ``m`` 1-based symbols, one per line."""
        tokens = Path(path).read_text().split()
        if len(tokens) < 2:
            raise ValueError(f"{path}: missing 'k m' header")
        k, m = int(tokens[0]), int(tokens[1])
        body = [int(t) - 1 for t in tokens[2:]]
        if len(body) != m:
            raise ValueError(f"{path}: header says m={m} but found {len(body)} symbols")
        return cls(k, tuple(body))


def rto1_string(k: int, r: int, rng=None) -> StringOracle:
    """An r-to-1 function on ``range(k)`` viewed as a string oracle.

    Each of the first ``k // r`` symbols appears exactly ``r`` times; with an
    ``rng`` the positions are shuffled.
    """
    if r < 1 or k % r:
        raise ValueError(f"r={r} must divide k={k}")
    x = np.repeat(np.arange(k // r), r)
    if rng is not None:
        as_generator(rng).shuffle(x)
    return StringOracle(k, tuple(x.tolist()))


def code_from_string(x: StringOracle, seed=0) -> SourceCode:
    """Code that reads ``x`` at a uniformly random position."""
    table = x.array
    counts = x.induced_counts()
    m = x.m

    def sample(rng, n):
        return table[rng.integers(0, m, size=n)]

    def sample_counts(rng, n):
        return rng.multinomial(n, counts / m)

    return SourceCode(x.k, sample, seed, truth=x.induced_pmf(), count_sampler=sample_counts)


class Channel(Protocol):
    k_in: int
    k_out: int

    def sample(self, symbols: np.ndarray, rng: np.random.Generator) -> np.ndarray: ...

    def pushforward(self, probs: np.ndarray) -> np.ndarray: ...


class MatrixChannel:
    """A channel given by a dense row-stochastic matrix."""

    def __init__(self, matrix):
        a = np.array(matrix, dtype=float)
        if a.ndim != 2:
            raise ValueError("channel matrix must be two-dimensional")
        if np.any(a < 0) or not np.allclose(a.sum(axis=1), 1.0, atol=1e-12, rtol=0):
            raise ValueError("channel rows must be pmfs")
        self.matrix = a
        self.k_in, self.k_out = a.shape
        self._cdf = np.cumsum(a, axis=1)

    def sample(self, symbols, rng):
        u = rng.random(len(symbols))
        rows = self._cdf[symbols]
        out = (rows <= u[:, None]).sum(axis=1)
        return np.minimum(out, self.k_out - 1)

    def pushforward(self, probs):
        return np.asarray(probs) @ self.matrix


def postprocess(code: SourceCode, channel) -> SourceCode:
    """Compose ``code`` with a channel; one outer draw is one inner draw.

    ``channel`` is a row-stochastic matrix or any object with ``sample``,
    ``pushforward``, ``k_in`` and ``k_out``. The result shares the inner
    ledger and stream, so its uses are the inner code's uses.
    """
    if not hasattr(channel, "pushforward"):
        channel = MatrixChannel(channel)
    if channel.k_in != code.domain_size:
        raise ValueError(f"channel expects {channel.k_in} input symbols, "
                         f"code has {code.domain_size}")
    inner = code.sampler

    def sample(rng, n):
        return channel.sample(np.asarray(inner(rng, n), dtype=np.int64), rng)

    truth = None
    if code.truth is not None:
        out = np.clip(channel.pushforward(code.truth.probs), 0.0, None)
        truth = Pmf(out)
    return SourceCode(channel.k_out, sample, code.rng, truth=truth, ledger=code.ledger)
