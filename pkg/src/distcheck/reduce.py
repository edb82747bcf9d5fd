"""Identity-to-uniformity reduction that preserves access to the code.

Given a known reference ``q`` over ``k`` symbols, three post-processing
stages map any ``p`` over ``k`` symbols to a distribution over ``4k``
symbols: ``q`` itself lands exactly on ``U_{4k}`` and TV distance shrinks
by at most a factor 4. Stages are applied in the order

1. :func:`phi3`: mix with uniform (every mass becomes at least ``1/(2k)``);
2. :func:`phi2`: round each mass down to a multiple of ``1/(4k)`` relative to
   the reference, dumping the rest on an extra symbol ``k``;
3. :func:`phi1`: spread cell ``i`` uniformly over its block ``S_i`` of ``4k``.

Every stage is a channel, so one output draw costs exactly one input draw.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .access import SourceCode, code_from_pmf, postprocess, stream
from .dist import Pmf
from .testers import LargeConfig, SmallConfig, Verdict, run_large, run_small

SNAP_TOL = 1e-15


def snap(x: float) -> Fraction:
    """Nearest simple rational within ``SNAP_TOL`` of ``x``, else ``x`` exactly."""
    exact = Fraction(x)
    simple = exact.limit_denominator(10**6)
    return simple if abs(simple - exact) <= SNAP_TOL else exact


class MixUniformChannel:
    """With probability 1/2 forward the input symbol, else emit a uniform one."""

    def __init__(self, k: int):
        self.k_in = self.k_out = k

    def sample(self, symbols, rng):
        coin = rng.random(len(symbols)) < 0.5
        fresh = rng.integers(0, self.k_in, size=len(symbols))
        return np.where(coin, symbols, fresh)

    def pushforward(self, probs):
        return 0.5 * np.asarray(probs) + 0.5 / self.k_in

    def matrix(self):
        return 0.5 * np.eye(self.k_in) + 0.5 / self.k_in


class RoundDownChannel:
    """Keep symbol ``i`` with probability ``keep[i]``, else emit symbol ``k``."""

    def __init__(self, keep):
        self.keep = np.asarray(keep, dtype=float)
        self.k_in = self.keep.size
        self.k_out = self.k_in + 1

    def sample(self, symbols, rng):
        u = rng.random(len(symbols))
        return np.where(u < self.keep[symbols], symbols, self.k_in)

    def pushforward(self, probs):
        probs = np.asarray(probs)
        out = np.empty(self.k_out)
        out[:-1] = self.keep * probs
        out[-1] = np.dot(1.0 - self.keep, probs)
        return out

    def matrix(self):
        m = np.zeros((self.k_in, self.k_out))
        m[np.arange(self.k_in), np.arange(self.k_in)] = self.keep
        m[:, -1] = 1.0 - self.keep
        return m


@dataclass(frozen=True)
class GrainedPartition:
    """Blocks ``S_0..S_k`` of ``range(4k)``; block ``i`` is contiguous with ``sizes[i]`` elements.

    ``sizes[i] = 4k * grained[i]`` where ``grained`` is the reference after
    mixing and rounding. The last block absorbs the rounding remainder.
    """

    k: int
    sizes: tuple

    def __post_init__(self):
        if len(self.sizes) != self.k + 1 or sum(self.sizes) != 4 * self.k:
            raise ValueError("block sizes must be k+1 integers summing to 4k")

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.sizes)[:-1]))

    @property
    def grained(self) -> tuple:
        return tuple(Fraction(s, 4 * self.k) for s in self.sizes)

    def block(self, i: int) -> range:
        start = int(self.offsets[i])
        return range(start, start + self.sizes[i])


def _mixed_reference(q: Pmf) -> list[Fraction]:
    k = q.k
    return [snap(x) / 2 + Fraction(1, 2 * k) for x in q.probs]


def _floors(ref: list[Fraction], k: int) -> list[int]:
    return [math.floor(4 * k * r) for r in ref]


def build_partition(q: Pmf) -> GrainedPartition:
    """Partition of ``range(4k)`` determined by the reference ``q`` alone."""
    k = q.k
    floors = _floors(_mixed_reference(q), k)
    return GrainedPartition(k, tuple(floors) + (4 * k - sum(floors),))


def keep_probabilities(ref: list[Fraction], k: int) -> list[Fraction]:
    if any(r <= 0 for r in ref):
        raise ValueError("rounding needs a reference with full support")
    return [Fraction(f) / (4 * k * r) for f, r in zip(_floors(ref, k), ref)]


class SpreadChannel:
    """Send cell ``i`` to a uniform element of block ``S_i``."""

    def __init__(self, partition: GrainedPartition):
        self.partition = partition
        self.k_in = partition.k + 1
        self.k_out = 4 * partition.k
        self._sizes = np.asarray(partition.sizes)
        self._offsets = partition.offsets

    def sample(self, symbols, rng):
        sizes = self._sizes[symbols]
        if np.any(sizes == 0):
            raise ValueError("drew a cell whose block is empty")
        u = rng.random(len(symbols))
        return self._offsets[symbols] + np.minimum((u * sizes).astype(np.int64), sizes - 1)

    def pushforward(self, probs):
        probs = np.asarray(probs)
        empty = self._sizes == 0
        if np.any(probs[empty] > 0):
            raise ValueError("positive mass on a cell whose block is empty")
        per = np.where(empty, 0.0, probs / np.where(empty, 1, self._sizes))
        return np.repeat(per, self._sizes)

    def matrix(self):
        m = np.zeros((self.k_in, self.k_out))
        for i in range(self.k_in):
            if self.partition.sizes[i]:
                m[i, list(self.partition.block(i))] = 1.0 / self.partition.sizes[i]
        return m


def _apply(x, channel):
    if isinstance(x, SourceCode):
        return postprocess(x, channel)
    if isinstance(x, Pmf):
        return Pmf(np.clip(channel.pushforward(x.probs), 0.0, None))
    raise TypeError(f"expected a Pmf or SourceCode, got {type(x).__name__}")


def _domain(x) -> int:
    if isinstance(x, SourceCode):
        return x.domain_size
    if isinstance(x, Pmf):
        return x.k
    raise TypeError(f"expected a Pmf or SourceCode, got {type(x).__name__}")


def phi3(x):
    """Mix a pmf or code half-and-half with uniform."""
    return _apply(x, MixUniformChannel(_domain(x)))


def phi2(reference: Pmf, x):
    """Round ``x`` down against a full-support ``reference``; output has ``k+1`` symbols."""
    if _domain(x) != reference.k:
        raise ValueError("reference and input must share a domain")
    keep = keep_probabilities([snap(r) for r in reference.probs], reference.k)
    return _apply(x, RoundDownChannel([float(f) for f in keep]))


def phi1(partition: GrainedPartition, x):
    """Spread each of the ``k+1`` cells over its block of ``range(4k)``."""
    if _domain(x) != partition.k + 1:
        raise ValueError("input must live on k+1 symbols")
    return _apply(x, SpreadChannel(partition))


def reduction_channels(q: Pmf) -> list:
    """The three stages for reference ``q``, in application order."""
    ref = _mixed_reference(q)
    keep = keep_probabilities(ref, q.k)
    return [MixUniformChannel(q.k), RoundDownChannel([float(f) for f in keep]),
            SpreadChannel(build_partition(q))]


def reduce_pmf(q: Pmf, p: Pmf) -> Pmf:
    out = p
    for ch in reduction_channels(q):
        out = _apply(out, ch)
    return out


def reduce_instance(q: Pmf, code_p: SourceCode, epsilon: float) -> tuple[SourceCode, float]:
    """Code over ``4k`` symbols for the reduced instance, plus the reduced distance."""
    if code_p.domain_size != q.k:
        raise ValueError(f"code has {code_p.domain_size} symbols, reference has {q.k}")
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    out = code_p
    for ch in reduction_channels(q):
        out = postprocess(out, ch)
    return out, epsilon / 4


def identity_test(q: Pmf, code_p: SourceCode, epsilon: float, *,
                  large: LargeConfig | None = None, small: SmallConfig | None = None,
                  rng=None, seed: int = 0, uniform_rng=None) -> Verdict:
    """Test ``p = q`` against ``TV(p, q) >= epsilon`` through the reduction.

    The reduced problem goes to the large-distance tester when
    ``eps' >= 1/sqrt(4k)`` (ties included), otherwise to the l2 closeness
    tester against an explicit uniform code drawing from ``uniform_rng``
    (default: a stream derived from ``seed``).
    """
    code, eps = reduce_instance(q, code_p, epsilon)
    k2 = 4 * q.k
    if eps * eps * k2 >= 1 - 1e-12:
        cfg = replace(large or LargeConfig(gamma=1.0), gamma=eps * eps)
        verdict = run_large(code, k2, cfg, rng)
        verdict.diagnostics.update(regime="large", gamma=cfg.gamma)
    else:
        tau = 2 * eps / math.sqrt(k2)
        cfg = replace(small or SmallConfig(tau=1.0), tau=tau)
        if uniform_rng is None:
            uniform_rng = stream(seed, 0, "identity-uniform")
        uniform = code_from_pmf(Pmf.uniform(k2), uniform_rng)
        verdict = run_small(code, uniform, k2, cfg, rng)
        verdict.diagnostics.update(regime="small", tau=tau)
    verdict.diagnostics.update(k_reduced=k2, epsilon_reduced=eps)
    return verdict
