"""Finite distributions, distances between them, and hard-instance families.

Symbols are 0-based indices ``0..k-1`` throughout the library; only the
string-oracle file format and the CLI speak 1-based symbols.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

SUM_TOL = 1e-9


class Pmf:
    """An immutable probability mass function over ``k`` symbols."""

    __slots__ = ("_probs",)

    def __init__(self, probs):
        arr = np.array(probs, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("a pmf needs at least one symbol")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("pmf entries must be finite and nonnegative")
        total = arr.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"pmf entries sum to {total!r}, not 1")
        if total != 1.0:
            arr = arr / total
        arr.flags.writeable = False
        self._probs = arr

    @classmethod
    def uniform(cls, k: int) -> Pmf:
        if k < 1:
            raise ValueError("k must be positive")
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def point_mass(cls, k: int, i: int) -> Pmf:
        arr = np.zeros(k)
        arr[i] = 1.0
        return cls(arr)

    @property
    def k(self) -> int:
        return self._probs.size

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    def deviations(self) -> np.ndarray:
        """Relative deviations ``eps_j`` with ``p_j = (1 + eps_j) / k``."""
        return self.k * self._probs - 1.0

    def to_json(self) -> str:
        return json.dumps([float(x) for x in self._probs])

    @classmethod
    def from_json(cls, text: str) -> Pmf:
        return cls(json.loads(text))

    def __len__(self):
        return self.k

    def __eq__(self, other):
        return isinstance(other, Pmf) and np.array_equal(self._probs, other._probs)

    def __hash__(self):
        return hash(self._probs.tobytes())

    def __repr__(self):
        body = np.array2string(self._probs, precision=4, threshold=8)
        return f"Pmf(k={self.k}, probs={body})"


def random_pmf(k: int, rng: np.random.Generator) -> Pmf:
    """Flat-Dirichlet draw: normalized independent unit exponentials."""
    w = rng.exponential(size=k)
    return Pmf(w / w.sum())


class Metric(enum.Enum):
    TV = "tv"
    HELLINGER_SQ = "hellinger_sq"
    KL = "kl"
    CHI_SQ = "chi_sq"
    L2 = "l2"


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    pos = p > 0
    if np.any(q[pos] == 0):
        return math.inf
    return float(np.sum(p[pos] * np.log(p[pos] / q[pos])))


def _chi_sq(p: np.ndarray, q: np.ndarray) -> float:
    diff = p - q
    zero = q == 0
    if np.any(diff[zero] != 0):
        return math.inf
    nz = ~zero
    return float(np.sum(diff[nz] ** 2 / q[nz]))


def distance(p: Pmf, q: Pmf, metric: Metric | str) -> float:
    """Distance or divergence of ``p`` from ``q``.

    Hellinger is the unnormalized squared form ``sum (sqrt p - sqrt q)^2``
    with range ``[0, 2]``. Chi-square is ``sum (p - q)^2 / q``. KL is
    ``sum p ln(p/q)`` in nats, the orientation for which
    ``TV^2 <= H^2 <= KL <= chi^2`` holds (the reversed form
    ``sum q ln(q/p)`` breaks the last link). Zero denominators yield
    ``inf`` except where the numerator also vanishes.
    """
    metric = Metric(metric)
    if p.k != q.k:
        raise ValueError(f"domain mismatch: {p.k} vs {q.k}")
    a, b = p.probs, q.probs
    if metric is Metric.TV:
        return min(1.0, 0.5 * float(np.abs(a - b).sum()))
    if metric is Metric.HELLINGER_SQ:
        return min(2.0, float(np.sum((np.sqrt(a) - np.sqrt(b)) ** 2)))
    if metric is Metric.KL:
        return max(0.0, _kl(a, b))
    if metric is Metric.CHI_SQ:
        return _chi_sq(a, b)
    return float(np.sqrt(np.sum((a - b) ** 2)))


def chi_sq_uniform(p: Pmf) -> float:
    """chi^2(p || U_k), computed as ``k * ||p - U_k||_2^2``."""
    d = p.probs - 1.0 / p.k
    return float(p.k * np.dot(d, d))


class Variant(enum.Enum):
    UNIFORM = "Uniform"
    PERTURBED_UNIFORM = "PerturbedUniform"
    UNIFORM_SUBSET = "UniformSubset"
    HEAVY_SPIKE = "HeavySpike"
    RTO1_STRING = "RTo1String"


_SHORT_NAMES = {
    "uniform": Variant.UNIFORM,
    "perturbed": Variant.PERTURBED_UNIFORM,
    "subset": Variant.UNIFORM_SUBSET,
    "spike": Variant.HEAVY_SPIKE,
    "rto1": Variant.RTO1_STRING,
}


@dataclass(frozen=True)
class InstanceSpec:
    """A named member of one of the instance families.

    ``param`` is epsilon for PerturbedUniform, the support size ``r`` for
    UniformSubset, the spike mass ``w`` for HeavySpike and the collision
    multiplicity ``r`` for RTo1String.
    """

    variant: Variant
    param: float | None = None

    def __post_init__(self):
        v, x = self.variant, self.param
        if v is Variant.UNIFORM:
            return
        if x is None:
            raise ValueError(f"{v.value} needs a parameter")
        if v is Variant.PERTURBED_UNIFORM and not 0 < x <= 0.5:
            raise ValueError("PerturbedUniform needs epsilon in (0, 1/2]")
        if v is Variant.UNIFORM_SUBSET and (x != int(x) or x < 1):
            raise ValueError("UniformSubset needs an integer size r >= 1")
        if v is Variant.HEAVY_SPIKE and not 0 < x <= 1:
            raise ValueError("HeavySpike needs w in (0, 1]")
        if v is Variant.RTO1_STRING and (x != int(x) or x < 2):
            raise ValueError("RTo1String needs an integer r >= 2")

    @property
    def label(self) -> str:
        if self.param is None:
            return self.variant.value
        x = int(self.param) if float(self.param).is_integer() else self.param
        return f"{self.variant.value}({x})"

    @classmethod
    def parse(cls, text: str) -> InstanceSpec:
        """Parse the compact CLI form, e.g. ``subset:5000`` or ``perturbed:0.1``."""
        name, _, arg = text.partition(":")
        try:
            variant = _SHORT_NAMES[name.strip().lower()]
        except KeyError:
            variant = Variant(name.strip())
        return cls(variant, float(arg) if arg else None)

    @classmethod
    def from_dict(cls, d: dict) -> InstanceSpec:
        variant = Variant(d["variant"])
        for key in ("param", "epsilon", "r", "w"):
            if key in d:
                return cls(variant, float(d[key]))
        return cls(variant)

    def to_dict(self) -> dict:
        out = {"variant": self.variant.value}
        if self.param is not None:
            out["param"] = self.param
        return out


def make_instance(k: int, spec: InstanceSpec) -> Pmf:
    """Materialize an instance family member over ``k`` symbols."""
    if k < 1:
        raise ValueError("k must be positive")
    v = spec.variant
    if v is Variant.UNIFORM:
        return Pmf.uniform(k)
    if v is Variant.PERTURBED_UNIFORM:
        if k % 2:
            raise ValueError("PerturbedUniform needs an even domain size")
        eps = spec.param
        probs = np.empty(k)
        probs[0::2] = (1 + 2 * eps) / k
        probs[1::2] = (1 - 2 * eps) / k
        return Pmf(probs)
    if v is Variant.UNIFORM_SUBSET:
        r = int(spec.param)
        if r > k:
            raise ValueError(f"subset size {r} exceeds k={k}")
        probs = np.zeros(k)
        probs[:r] = 1.0 / r
        return Pmf(probs)
    if v is Variant.HEAVY_SPIKE:
        w = spec.param
        if k == 1:
            if w != 1:
                raise ValueError("a one-symbol spike must have w = 1")
            return Pmf([1.0])
        probs = np.full(k, (1 - w) / (k - 1))
        probs[0] = w
        return Pmf(probs)
    r = int(spec.param)
    if k % r:
        raise ValueError(f"r={r} does not divide k={k}")
    return make_instance(k, InstanceSpec(Variant.UNIFORM_SUBSET, k // r))


def perturbed_for_l2(k: int, l2: float) -> InstanceSpec:
    """PerturbedUniform member at exactly ``l2`` from ``U_k`` in l2 distance."""
    return InstanceSpec(Variant.PERTURBED_UNIFORM, l2 * math.sqrt(k) / 2)


def perturbed_for_chi_sq(chi_sq: float) -> InstanceSpec:
    """PerturbedUniform member whose chi^2 from uniform equals ``chi_sq``."""
    return InstanceSpec(Variant.PERTURBED_UNIFORM, math.sqrt(chi_sq) / 2)


def perturbed_hellinger_sq(epsilon: float) -> float:
    """Squared Hellinger distance of PerturbedUniform(epsilon) from uniform (any even k)."""
    return 0.5 * ((math.sqrt(1 + 2 * epsilon) - 1) ** 2 + (math.sqrt(1 - 2 * epsilon) - 1) ** 2)


def perturbed_for_hellinger_sq(h2: float) -> InstanceSpec:
    """PerturbedUniform member at squared Hellinger ``h2`` from uniform.

    The family tops out at ``perturbed_hellinger_sq(1/2) ~ 0.586``.
    """
    top = perturbed_hellinger_sq(0.5)
    if not 0 < h2 <= top:
        raise ValueError(f"PerturbedUniform reaches squared Hellinger at most {top:.4f}")
    eps = brentq(lambda e: perturbed_hellinger_sq(e) - h2, 0.0, 0.5, xtol=1e-15)
    return InstanceSpec(Variant.PERTURBED_UNIFORM, eps)
