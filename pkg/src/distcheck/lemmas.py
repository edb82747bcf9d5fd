"""Exhaustive validators for the moment identities and lemmas the testers rely on.

Every check enumerates outcomes exactly (rational arithmetic where the
identity is exact) and reports failures instead of raising, so the harness
can print one line per check.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .access import code_from_pmf, stream
from .dist import Metric, Pmf, distance, random_pmf
from .qme import mean_and_variance
from . import reduce as _reduce
from . import testers as _testers

SUITES = ("moments", "hashing", "collisions", "reduction")


@dataclass
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.suite}/{self.name} ({self.seconds:.2f}s) {self.detail}"


def rational_pmfs(max_k: int = 4, max_den: int = 8) -> list[tuple]:
    """All pmfs on ``k <= max_k`` symbols with entries ``a/D``, ``D <= max_den``."""
    seen = set()
    for k in range(1, max_k + 1):
        for den in range(1, max_den + 1):
            for cut in itertools.combinations(range(den + k - 1), k - 1):
                parts, prev = [], -1
                for c in cut + (den + k - 1,):
                    parts.append(c - prev - 1)
                    prev = c
                seen.add(tuple(Fraction(a, den) for a in parts))
    return sorted(seen, key=lambda p: (len(p), p))


def compositions(n: int, k: int):
    """All count vectors of length ``k`` summing to ``n``."""
    for cut in itertools.combinations(range(n + k - 1), k - 1):
        parts, prev = [], -1
        for c in cut + (n + k - 1,):
            parts.append(c - prev - 1)
            prev = c
        yield tuple(parts)


def count_outcomes(p, n: int):
    """``(probability, counts)`` for every histogram of ``n`` draws from ``p``."""
    k = len(p)
    fact_n = math.factorial(n)
    for counts in compositions(n, k):
        coef = fact_n
        prob = Fraction(1)
        for pi, x in zip(p, counts):
            coef //= math.factorial(x)
            prob *= Fraction(pi) ** x
        if prob:
            yield coef * prob, counts


def sequence_outcomes(p, n: int):
    """``(probability, counts)`` for each of the ``k**n`` ordered draw sequences."""
    k = len(p)
    for seq in itertools.product(range(k), repeat=n):
        prob = Fraction(1)
        for s in seq:
            prob *= Fraction(p[s])
        counts = [0] * k
        for s in seq:
            counts[s] += 1
        yield prob, tuple(counts)


def chi_sq_uniform_exact(p) -> Fraction:
    k = len(p)
    return k * sum((Fraction(x) - Fraction(1, k)) ** 2 for x in p)


def phase1_moments(p, n: int, outcomes=count_outcomes):
    """Exact ``(E[mu], Var[mu], sigma_identity_ok)`` over all Phase-1 outcomes."""
    k = len(p)
    e_mu = e_mu2 = Fraction(0)
    sigma_ok = True
    for w, counts in outcomes(p, n):
        symbols = np.flatnonzero(counts)
        Y = _testers.phase1_rv(symbols, np.asarray(counts)[symbols], k, n, exact=True)
        mu, var = mean_and_variance(p, Y)
        e_mu += w * mu
        e_mu2 += w * mu * mu
        direct = Fraction(k, n) ** 2 * sum(Fraction(pj) * x * x for pj, x in zip(p, counts))
        if var != direct - (mu + 1) ** 2:
            sigma_ok = False
    return e_mu, e_mu2 - e_mu * e_mu, sigma_ok


def deviation_variance(p) -> Fraction:
    """``Var_{j ~ p}[eps_j]`` with ``eps_j = k p_j - 1``."""
    k = len(p)
    eps = [k * Fraction(x) - 1 for x in p]
    m1 = sum(Fraction(x) * e for x, e in zip(p, eps))
    m2 = sum(Fraction(x) * e * e for x, e in zip(p, eps))
    return m2 - m1 * m1


def check_moments(max_k: int = 4, max_den: int = 8, max_n: int = 5) -> list[str]:
    failures = []
    for p in rational_pmfs(max_k, max_den):
        target_mean = chi_sq_uniform_exact(p)
        dev_var = deviation_variance(p)
        for n in range(1, max_n + 1):
            e_mu, var_mu, sigma_ok = phase1_moments(p, n)
            if e_mu != target_mean:
                failures.append(f"E[mu] != chi^2 for p={_fmt(p)}, n={n}: {e_mu} vs {target_mean}")
            if var_mu != dev_var / n:
                failures.append(f"Var[mu] != Var[eps]/n for p={_fmt(p)}, n={n}")
            if not sigma_ok:
                failures.append(f"sigma^2 identity fails for p={_fmt(p)}, n={n}")
    return failures


def uniform_all_distinct(k: int, n: int) -> tuple[Fraction, Fraction]:
    """Exact ``(mu, sigma^2)`` when ``n`` distinct symbols are drawn from ``U_k``."""
    p = [Fraction(1, k)] * k
    Y = _testers.phase1_rv(np.arange(n), np.ones(n, dtype=np.int64), k, n, exact=True)
    return mean_and_variance(p, Y)


def subset_matrix(k: int) -> np.ndarray:
    """All ``2**k`` subsets of ``range(k)`` as 0/1 rows."""
    return ((np.arange(2 ** k)[:, None] >> np.arange(k)) & 1).astype(float)


def hashing_probabilities(p: np.ndarray, q: np.ndarray, scales) -> list[float]:
    """Exact ``P_S[|p(S) - q(S)| >= s * ||p - q||_2]`` over all subsets, per scale."""
    delta = np.asarray(p) - np.asarray(q)
    gaps = np.abs(subset_matrix(delta.size) @ delta)
    norm = float(np.linalg.norm(delta))
    return [float(np.mean(gaps >= s * norm)) for s in scales]


def check_hashing(k: int = 10, pairs: int = 100, seed: int = 2024,
                  alphas=(0.1, 0.25, 0.35), betas=(1, 2, 4)) -> list[str]:
    failures = []
    rng = stream(seed, 0, "hashing")
    for t in range(pairs):
        p, q = random_pmf(k, rng).probs, random_pmf(k, rng).probs
        fwd = hashing_probabilities(p, q, alphas)
        back = hashing_probabilities(p, q, betas)
        for a, prob in zip(alphas, fwd):
            if prob < (1 - 4 * a * a) ** 2 / 12:
                failures.append(f"pair {t}: forward bound fails at alpha={a}: {prob}")
        for b, prob in zip(betas, back):
            if prob > 1 / (4 * b * b):
                failures.append(f"pair {t}: converse bound fails at beta={b}: {prob}")
    return failures


def rademacher_second_moment(delta) -> Fraction:
    """Average of ``(sum_i delta_i xi_i)^2`` over all sign patterns, exactly."""
    delta = [Fraction(d) for d in delta]
    total = Fraction(0)
    for signs in itertools.product((1, -1), repeat=len(delta)):
        z = sum(s * d for s, d in zip(signs, delta))
        total += z * z
    return total / 2 ** len(delta)


def check_rademacher(k: int = 10, pairs: int = 5, seed: int = 7) -> list[str]:
    failures = []
    rng = stream(seed, 0, "rademacher")
    for t in range(pairs):
        a = rng.integers(0, 9, size=k) + 1
        b = rng.integers(0, 9, size=k) + 1
        delta = [Fraction(int(x), int(a.sum())) - Fraction(int(y), int(b.sum()))
                 for x, y in zip(a, b)]
        if rademacher_second_moment(delta) != sum(d * d for d in delta):
            failures.append(f"pair {t}: E[Z^2] != ||delta||^2")
    return failures


def collision_moments_exact(p, N: int, outcomes=count_outcomes) -> tuple[Fraction, Fraction]:
    """Exact ``(E[Z], Var[Z])`` of the pair-collision count by enumeration."""
    ez = ez2 = Fraction(0)
    for w, counts in outcomes(p, N):
        z = sum(x * (x - 1) // 2 for x in counts)
        ez += w * z
        ez2 += w * z * z
    return ez, ez2 - ez * ez


def check_collisions(max_k: int = 4, max_den: int = 8, max_N: int = 5) -> list[str]:
    failures = []
    for p in rational_pmfs(max_k, max_den):
        s2 = sum(Fraction(x) ** 2 for x in p)
        s3 = sum(Fraction(x) ** 3 for x in p)
        for N in range(2, max_N + 1):
            ez, vz = collision_moments_exact(p, N)
            expected, var_upper = _testers.collision_stats(p, N)
            if ez != expected:
                failures.append(f"E[Z] mismatch for p={_fmt(p)}, N={N}: {ez} vs {expected}")
            if vz > var_upper:
                failures.append(f"Var[Z] above bound for p={_fmt(p)}, N={N}")
            closed = math.comb(N, 2) * s2 * (1 - s2) + 6 * math.comb(N, 3) * (s3 - s2 * s2)
            if vz != closed:
                failures.append(f"Var[Z] closed form mismatch for p={_fmt(p)}, N={N}")
    return failures


def pair_at_tv(k: int, tv: float, rng) -> tuple[Pmf, Pmf]:
    """Random ``(p, q)`` with ``TV(p, q) = tv`` (``q`` moved toward a far point)."""
    p = random_pmf(k, rng)
    far = random_pmf(k, rng)
    if distance(p, far, Metric.TV) < tv:
        far = Pmf.point_mass(k, int(np.argmin(p.probs)))
    t = tv / distance(p, far, Metric.TV)
    return p, Pmf((1 - t) * p.probs + t * far.probs)


def check_reduction(pairs: int = 100, max_k: int = 50, seed: int = 11,
                    tv: float = 0.3) -> list[str]:
    failures = []
    rng = stream(seed, 0, "reduction")
    for t in range(pairs):
        k = int(rng.integers(2, max_k + 1))
        p, q = pair_at_tv(k, tv, rng)
        out_q = _reduce.reduce_pmf(q, q)
        if np.max(np.abs(out_q.probs - 1 / (4 * k))) > 1e-12:
            failures.append(f"pair {t}: Phi_q(q) is not uniform on 4k")
        ref = _reduce._mixed_reference(q)
        keep = _reduce.keep_probabilities(ref, k)
        for kp, r in zip(keep, ref):
            if (kp * r * 4 * k).denominator != 1:
                failures.append(f"pair {t}: rounded reference not a multiple of 1/(4k)")
                break
        part = _reduce.build_partition(q)
        if part != _reduce.build_partition(q) or sum(part.sizes) != 4 * k:
            failures.append(f"pair {t}: partition not deterministic or not a cover")
        out_p = _reduce.reduce_pmf(q, p)
        d_in = distance(p, q, Metric.TV)
        d_out = distance(out_p, Pmf.uniform(4 * k), Metric.TV)
        if not d_in / 4 - 1e-12 <= d_out <= d_in + 1e-12:
            failures.append(f"pair {t}: TV {d_out} outside [{d_in / 4}, {d_in}]")
        mat = np.eye(k)
        for ch in _reduce.reduction_channels(q):
            mat = mat @ ch.matrix()
        if np.max(np.abs(p.probs @ mat - out_p.probs)) > 1e-12:
            failures.append(f"pair {t}: pushforward differs from channel product")
        code = code_from_pmf(p, stream(seed, t, "reduction-code"))
        out_code, _ = _reduce.reduce_instance(q, code, 0.5)
        for draws in (1, 5):
            before = code.code_uses
            out_code.draw(draws)
            if code.code_uses - before != draws:
                failures.append(f"pair {t}: {draws} output draws did not cost {draws} uses")
    return failures


def _fmt(p) -> str:
    return "(" + ", ".join(str(x) for x in p) + ")"


def _timed(suite, name, fn, *args) -> CheckResult:
    start = time.perf_counter()
    failures = fn(*args)
    took = time.perf_counter() - start
    detail = "ok" if not failures else f"{len(failures)} failure(s); first: {failures[0]}"
    return CheckResult(suite, name, not failures, detail, took)


def _uniform_distinct_check() -> list[str]:
    failures = []
    for k in (10, 100):
        for n in (2, 5):
            mu, var = uniform_all_distinct(k, n)
            if mu != 0 or var != Fraction(k, n) - 1:
                failures.append(f"k={k}, n={n}: mu={mu}, sigma^2={var}")
    return failures


def validate_lemmas(suites=SUITES) -> list[CheckResult]:
    """Run the requested suites and return one result per check."""
    unknown = set(suites) - set(SUITES)
    if unknown:
        raise ValueError(f"unknown suite(s): {sorted(unknown)}")
    results = []
    if "moments" in suites:
        results.append(_timed("moments", "phase1-mean-variance-sigma", check_moments))
        results.append(_timed("moments", "uniform-all-distinct", _uniform_distinct_check))
    if "hashing" in suites:
        results.append(_timed("hashing", "binary-hashing-bounds", check_hashing))
        results.append(_timed("hashing", "rademacher-second-moment", check_rademacher))
    if "collisions" in suites:
        results.append(_timed("collisions", "collision-moments", check_collisions))
    if "reduction" in suites:
        results.append(_timed("reduction", "identity-reduction", check_reduction))
    return results
