"""Seeded trial execution, accounting checks, CSV/SVG reports and scaling fits.

An :class:`ExperimentConfig` names a command (``uniformity``, ``identity`` or
``closeness-l2``), a regime, the distance parameter and a list of instances.
Each instance is run for ``trials`` independent trials; trial ``i`` of
instance ``j`` draws every bit of randomness from streams keyed by
``(master_seed, i, "<j>:<label>/...")``, so results do not depend on the
worker count or scheduling.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from . import svg
from .access import SourceCode, StringOracle, code_from_pmf, code_from_string, rto1_string, stream
from .dist import InstanceSpec, Pmf, Variant, make_instance
from .lemmas import SUITES, CheckResult, validate_lemmas
from .qme import Backend, QmeConfig
from .reduce import identity_test
from .testers import (LARGE_DELTA, GiantConfig, LargeConfig, SmallConfig, Verdict,
                      ceil_two_thirds_power, classical_baseline, classical_sample_size,
                      run_giant, run_large, run_small)

SCHEMA_VERSION = 1
COMMANDS = ("uniformity", "identity", "closeness-l2")
REGIMES = ("large", "small", "giant", "classical")
TESTER_KEYS = {
    "large": {"B", "c_const", "C_const", "n_override", "cost_constant"},
    "small": {"T", "theta_star", "per_estimate_precision", "delta_round", "vote_threshold",
              "cost_constant"},
    "giant": {"a_coef", "c_close", "n_override"},
    "classical": {"sample_constant", "m"},
}
TESTER_KEYS["identity"] = TESTER_KEYS["large"] | TESTER_KEYS["small"]
CSV_COLUMNS = ("schema_version", "command", "regime", "k", "instance", "role", "trial",
               "decision", "reason", "mu_hat", "statistic", "code_uses", "declared_uses")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


# ---------------------------------------------------------------- instances

@dataclass(frozen=True)
class InstanceRun:
    """One distribution to test. ``role`` is ``null`` (should accept) or ``alt``.

    The tested distribution ``p`` comes from exactly one of ``spec``, ``pmf``,
    ``string_oracle`` (a file path) or ``reference=True`` (identity tests).
    ``q`` is the partner for closeness tests (uniform when omitted).
    """

    role: str = "alt"
    spec: InstanceSpec | None = None
    pmf: tuple | None = None
    string_oracle: str | None = None
    reference: bool = False
    q: InstanceSpec | None = None
    qme_noise: str | None = None

    def __post_init__(self):
        if self.role not in ("null", "alt"):
            raise ConfigError(f"instance role must be 'null' or 'alt', got {self.role!r}")
        sources = [self.spec is not None, self.pmf is not None,
                   self.string_oracle is not None, self.reference]
        if sum(sources) != 1:
            raise ConfigError("an instance needs exactly one of spec, pmf, string_oracle, reference")

    @property
    def label(self) -> str:
        if self.spec is not None:
            p = self.spec.label
        elif self.pmf is not None:
            p = "Pmf"
        elif self.string_oracle is not None:
            p = f"String({Path(self.string_oracle).name})"
        else:
            p = "Reference"
        if self.q is not None:
            p = f"{p}|{self.q.label}"
        return p if self.qme_noise is None else f"{p}@{self.qme_noise}"

    @property
    def expects_accept(self) -> bool:
        return self.role == "null"

    @classmethod
    def parse(cls, text: str) -> InstanceRun:
        """``[ROLE=]P[,Q][@NOISE]``, e.g. ``alt=subset:5000@adv-to:0`` or ``null=reference``."""
        role = "alt"
        if "=" in text:
            role, text = text.split("=", 1)
        noise = None
        if "@" in text:
            text, noise = text.split("@", 1)
        p_text, _, q_text = text.partition(",")
        q = _parse_spec(q_text) if q_text else None
        return cls(role=role.strip(), q=q, qme_noise=noise, **_parse_source(p_text.strip()))

    @classmethod
    def from_dict(cls, d: dict) -> InstanceRun:
        src = d.get("instance", d.get("p", "uniform"))
        if isinstance(src, dict) and "pmf" in src:
            kw = {"pmf": tuple(float(x) for x in src["pmf"])}
        elif isinstance(src, dict):
            kw = {"spec": InstanceSpec.from_dict(src)}
        else:
            kw = _parse_source(str(src))
        if d.get("string_oracle"):
            kw = {"string_oracle": str(d["string_oracle"])}
        q = d.get("q")
        if q is not None:
            q = InstanceSpec.from_dict(q) if isinstance(q, dict) else _parse_spec(str(q))
        return cls(role=d.get("role", "alt"), q=q, qme_noise=d.get("qme_noise"), **kw)

    def to_dict(self) -> dict:
        out = {"role": self.role}
        if self.spec is not None:
            out["instance"] = self.spec.to_dict()
        elif self.pmf is not None:
            out["instance"] = {"pmf": list(self.pmf)}
        elif self.string_oracle is not None:
            out["string_oracle"] = self.string_oracle
        else:
            out["instance"] = "reference"
        if self.q is not None:
            out["q"] = self.q.to_dict()
        if self.qme_noise is not None:
            out["qme_noise"] = self.qme_noise
        return out


def _parse_spec(text: str) -> InstanceSpec:
    try:
        return InstanceSpec.parse(text)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad instance {text!r}: {exc}") from None


def _parse_source(text: str) -> dict:
    if text.lower() == "reference":
        return {"reference": True}
    if text.startswith("file:"):
        return {"pmf": tuple(load_pmf(text[5:]).probs)}
    if text.startswith("string:"):
        return {"string_oracle": text[7:]}
    return {"spec": _parse_spec(text)}


def load_pmf(path) -> Pmf:
    try:
        return Pmf.from_json(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read pmf file {path}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


@lru_cache(maxsize=8)
def _load_string(path: str) -> StringOracle:
    try:
        return StringOracle.load(path)
    except OSError as exc:
        raise ConfigError(f"cannot read string oracle {path}: {exc}") from None


# ------------------------------------------------------------------- config

@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a trial run needs. Built from JSON, then CLI flags override fields."""

    command: str = "uniformity"
    regime: str = "large"
    k: int | None = None
    epsilon: float | None = None
    gamma: float | None = None
    tau: float | None = None
    theta: float | None = None
    instances: tuple = ()
    reference: tuple | None = None
    tester: dict = field(default_factory=dict)
    qme_backend: str = "ideal"
    qme_noise: str = "zero"
    trials: int = 100
    master_seed: int = 0
    jobs: int = 1
    out: str | None = None
    plot: str | None = None
    wall_time: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        d = dict(d)
        known = {f.name for f in fields(cls)} | {"seed", "qme"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
        if "seed" in d:
            d["master_seed"] = d.pop("seed")
        qme = d.pop("qme", None) or {}
        if "backend" in qme:
            d.setdefault("qme_backend", qme["backend"])
        if "noise" in qme:
            d.setdefault("qme_noise", qme["noise"])
        if "instances" in d:
            d["instances"] = tuple(
                InstanceRun.parse(x) if isinstance(x, str) else InstanceRun.from_dict(x)
                for x in d["instances"])
        ref = d.get("reference")
        if isinstance(ref, str):
            d["reference"] = tuple(load_pmf(ref).probs)
        elif ref is not None:
            d["reference"] = tuple(Pmf(ref).probs)
        return cls(**d)

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None

    def with_overrides(self, **kw) -> ExperimentConfig:
        """Replace fields whose override is not ``None``."""
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_dict(self) -> dict:
        out = asdict(self)
        out["instances"] = [inst.to_dict() for inst in self.instances]
        out["reference"] = list(self.reference) if self.reference is not None else None
        return out

    # derived pieces -------------------------------------------------------

    @property
    def reference_pmf(self) -> Pmf | None:
        return Pmf(self.reference) if self.reference is not None else None

    @property
    def domain_size(self) -> int:
        if self.command == "identity" and self.reference is not None:
            return len(self.reference)
        return self.k

    @property
    def effective_regime(self) -> str:
        if self.command == "closeness-l2":
            return "small"
        if self.command == "identity":
            return "identity"
        return self.regime

    def instance_list(self) -> tuple:
        if self.instances:
            return self.instances
        if self.command == "identity":
            return (InstanceRun(role="null", reference=True),)
        return (InstanceRun(role="null", spec=InstanceSpec(Variant.UNIFORM)),)

    def qme_config(self, noise: str | None = None, **kw) -> QmeConfig:
        mode, target = QmeConfig.parse_noise(noise or self.qme_noise)
        return QmeConfig(backend=Backend(self.qme_backend), noise=mode, target=target, **kw)

    def large_config(self, noise=None) -> LargeConfig:
        t = self.tester
        qme = self.qme_config(noise, delta=LARGE_DELTA, cost_constant=int(t.get("cost_constant", 1)))
        kw = {key: t[key] for key in ("B", "c_const", "C_const", "n_override") if key in t}
        gamma = self.gamma if self.gamma is not None else self.theta
        return LargeConfig(gamma=1.0 if gamma is None else gamma, qme=qme, **kw)

    def small_config(self, noise=None, tau=None) -> SmallConfig:
        t = self.tester
        qme = self.qme_config(noise, cost_constant=int(t.get("cost_constant", 1)))
        keys = ("T", "theta_star", "per_estimate_precision", "delta_round", "vote_threshold")
        kw = {key: t[key] for key in keys if key in t}
        tau = tau if tau is not None else self.tau
        return SmallConfig(tau=1.0 if tau is None else tau, qme=qme, **kw)

    def giant_config(self) -> GiantConfig:
        kw = {key: self.tester[key] for key in ("a_coef", "c_close", "n_override") if key in self.tester}
        return GiantConfig(theta=self.theta, **kw)

    def validate(self) -> ExperimentConfig:
        """Raise :class:`ConfigError` unless every trial can run."""
        try:
            self._validate()
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(str(exc)) from None
        return self

    def _validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if self.command == "uniformity" and self.regime not in REGIMES:
            raise ConfigError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.trials!r}")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            raise ConfigError(f"jobs must be a positive integer, got {self.jobs!r}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        Backend(self.qme_backend)
        QmeConfig.parse_noise(self.qme_noise)
        regime = self.effective_regime
        unknown = set(self.tester) - TESTER_KEYS[regime]
        if unknown:
            raise ConfigError(f"tester override(s) {sorted(unknown)} do not apply to {regime}")
        if self.command == "identity":
            if self.reference is None:
                raise ConfigError("identity testing needs a reference pmf")
            if self.epsilon is None or not 0 < self.epsilon <= 1:
                raise ConfigError("identity testing needs epsilon in (0, 1]")
        else:
            if self.k is None or self.k < 2:
                raise ConfigError("k must be an integer >= 2")
            need = {"large": ("gamma", self.gamma if self.gamma is not None else self.theta),
                    "small": ("tau", self.tau), "giant": ("theta", self.theta),
                    "classical": ("epsilon", self.epsilon)}[regime]
            if need[1] is None:
                raise ConfigError(f"the {regime} regime needs --{need[0]}")
        for inst in self.instance_list():
            if inst.qme_noise is not None:
                QmeConfig.parse_noise(inst.qme_noise)
            if inst.reference and self.command != "identity":
                raise ConfigError("'reference' instances only apply to identity tests")
            if inst.q is not None and self.command != "closeness-l2":
                raise ConfigError("a q partner only applies to closeness tests")
            if inst.spec is not None:
                make_instance(self.domain_size, inst.spec)
            if inst.q is not None:
                make_instance(self.domain_size, inst.q)
            if inst.pmf is not None and len(inst.pmf) != self.domain_size:
                raise ConfigError(f"instance pmf has {len(inst.pmf)} symbols, expected {self.domain_size}")
            if inst.string_oracle is not None and _load_string(inst.string_oracle).k != self.domain_size:
                raise ConfigError(f"string oracle {inst.string_oracle} is not over k={self.domain_size}")
        # building each tester config runs its own parameter checks
        if regime == "large":
            cfg = self.large_config()
            run_large_precheck(cfg, self.k)
        elif regime == "small":
            self.small_config()
        elif regime == "giant":
            self.giant_config().sample_size(self.k)
        elif regime == "classical":
            if not 0 < self.epsilon < 1:
                raise ConfigError("epsilon must lie in (0, 1)")
        else:
            self.large_config()
            self.small_config()


def run_large_precheck(cfg: LargeConfig, k: int) -> None:
    if not 1 / k - 1e-15 <= cfg.gamma <= 1:
        raise ConfigError(f"gamma={cfg.gamma} outside [1/k, 1] for k={k}")


# ------------------------------------------------------------------- trials

@dataclass(frozen=True)
class TrialReport:
    trial: int
    instance: str
    role: str
    regime: str
    decision: str
    reason: str
    mu_hat: float | None
    statistic: float | None
    code_uses: int
    declared_uses: int
    wall_time: float

    @property
    def accepted(self) -> bool:
        return self.decision == "Accept"

    @property
    def correct(self) -> bool:
        return self.accepted == (self.role == "null")


@dataclass(frozen=True)
class InstanceSummary:
    instance: str
    role: str
    trials: int
    accepts: int
    accept_rate: float
    ci_low: float
    ci_high: float
    mean_code_uses: float
    accounting_ok: bool

    @property
    def success_rate(self) -> float:
        return self.accept_rate if self.role == "null" else 1.0 - self.accept_rate

    def line(self) -> str:
        return (f"{self.instance:<40} {self.role:<4} trials={self.trials} "
                f"accept={self.accept_rate:.4f} [{self.ci_low:.4f}, {self.ci_high:.4f}] "
                f"mean_uses={self.mean_code_uses:.6g} accounting={'ok' if self.accounting_ok else 'MISMATCH'}")


@dataclass
class RunResult:
    config: ExperimentConfig
    reports: list
    summaries: list

    @property
    def accounting_ok(self) -> bool:
        return all(s.accounting_ok for s in self.summaries)

    def summary(self, instance: str) -> InstanceSummary:
        for s in self.summaries:
            if s.instance == instance:
                return s
        raise KeyError(instance)


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def _p_code(cfg: ExperimentConfig, inst: InstanceRun, seed_rng, tag: str, trial: int) -> SourceCode:
    k = cfg.domain_size
    if inst.string_oracle is not None:
        return code_from_string(_load_string(inst.string_oracle), seed_rng)
    if inst.reference:
        return code_from_pmf(cfg.reference_pmf, seed_rng)
    if inst.pmf is not None:
        return code_from_pmf(Pmf(inst.pmf), seed_rng)
    if inst.spec.variant is Variant.RTO1_STRING:
        x = rto1_string(k, int(inst.spec.param), stream(cfg.master_seed, trial, tag + "/string"))
        return code_from_string(x, seed_rng)
    return code_from_pmf(make_instance(k, inst.spec), seed_rng)


def _statistic(verdict: Verdict):
    d = verdict.diagnostics
    for key in ("mu_hat", "vote_rate", "collision_rate", "collisions"):
        if d.get(key) is not None:
            return float(d[key])
    return None


def run_trial(cfg: ExperimentConfig, index: int, trial: int) -> TrialReport:
    """Run trial ``trial`` of instance ``index``; depends only on ``(cfg, index, trial)``."""
    inst = cfg.instance_list()[index]
    tag = f"{index}:{inst.label}"
    seed = cfg.master_seed
    code_p = _p_code(cfg, inst, stream(seed, trial, tag + "/code"), tag, trial)
    rng = stream(seed, trial, tag + "/tester")
    k = cfg.domain_size
    regime = cfg.effective_regime
    extra_uses = 0
    start = time.perf_counter()
    if regime == "large":
        lcfg = cfg.large_config(inst.qme_noise)
        verdict = run_large(code_p, k, lcfg, rng)
        declared = lcfg.declared_uses(verdict.diagnostics["n"],
                                      verdict.diagnostics["mu_hat"] is not None)
    elif regime == "small":
        scfg = cfg.small_config(inst.qme_noise)
        q = make_instance(k, inst.q or InstanceSpec(Variant.UNIFORM))
        code_q = code_from_pmf(q, stream(seed, trial, tag + "/q-code"))
        verdict = run_small(code_p, code_q, k, scfg, rng)
        declared = scfg.declared_uses()
        extra_uses = code_q.code_uses
    elif regime == "giant":
        verdict = run_giant(code_p, k, cfg.giant_config())
        declared = verdict.diagnostics["N"]
    elif regime == "classical":
        t = cfg.tester
        verdict = classical_baseline(code_p, k, cfg.epsilon,
                                     sample_constant=t.get("sample_constant", 4.0), m=t.get("m"))
        declared = verdict.diagnostics["m"]
    else:
        lcfg = cfg.large_config(inst.qme_noise)
        verdict = identity_test(cfg.reference_pmf, code_p, cfg.epsilon, large=lcfg,
                                small=cfg.small_config(inst.qme_noise), rng=rng,
                                uniform_rng=stream(seed, trial, tag + "/uniform-code"))
        d = verdict.diagnostics
        if d["regime"] == "large":
            declared = lcfg.declared_uses(d["n"], d["mu_hat"] is not None)
        else:
            declared = cfg.small_config(inst.qme_noise, tau=d["tau"]).declared_uses()
            extra_uses = d["code_uses_q"]
        regime = f"identity-{d['regime']}"
    took = time.perf_counter() - start
    mu_hat = verdict.diagnostics.get("mu_hat")
    return TrialReport(
        trial=trial, instance=inst.label, role=inst.role, regime=regime,
        decision=verdict.decision.value, reason=verdict.reason.value,
        mu_hat=None if mu_hat is None else float(mu_hat), statistic=_statistic(verdict),
        code_uses=int(code_p.code_uses + extra_uses), declared_uses=int(declared),
        wall_time=took)


def _run_task(args):
    cfg, index, trial = args
    return run_trial(cfg, index, trial)


def summarize(cfg: ExperimentConfig, reports: list) -> list:
    out = []
    for inst in cfg.instance_list():
        rows = [r for r in reports if r.instance == inst.label and r.role == inst.role]
        accepts = sum(r.accepted for r in rows)
        lo, hi = wilson_interval(accepts, len(rows))
        out.append(InstanceSummary(
            instance=inst.label, role=inst.role, trials=len(rows), accepts=accepts,
            accept_rate=accepts / len(rows), ci_low=lo, ci_high=hi,
            mean_code_uses=float(np.mean([r.code_uses for r in rows])),
            accounting_ok=all(r.code_uses == r.declared_uses for r in rows)))
    return out


def run_trials(cfg: ExperimentConfig) -> RunResult:
    """Execute every (instance, trial) pair; output order is (instance, trial)."""
    cfg.validate()
    tasks = [(cfg, i, t) for i in range(len(cfg.instance_list())) for t in range(cfg.trials)]
    if cfg.jobs > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (4 * cfg.jobs))
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            reports = list(pool.map(_run_task, tasks, chunksize=chunk))
    else:
        reports = [_run_task(t) for t in tasks]
    return RunResult(cfg, reports, summarize(cfg, reports))


# ---------------------------------------------------------------- emission

def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def trials_csv(result: RunResult) -> str:
    """CSV text for a run; wall_time is included only when the config asks for it."""
    cfg = result.config
    cols = CSV_COLUMNS + (("wall_time",) if cfg.wall_time else ())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in result.reports:
        row = [SCHEMA_VERSION, cfg.command, r.regime, cfg.domain_size, r.instance, r.role,
               r.trial, r.decision, r.reason, r.mu_hat, r.statistic, r.code_uses, r.declared_uses]
        if cfg.wall_time:
            row.append(r.wall_time)
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def write_text(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def trials_svg(result: RunResult) -> str:
    s = result.summaries
    title = f"{result.config.command} {result.config.effective_regime}, k={result.config.domain_size}"
    return svg.rate_chart([x.instance for x in s], [x.accept_rate for x in s],
                          [x.ci_low for x in s], [x.ci_high for x in s], title=title)


def emit(result: RunResult) -> None:
    if result.config.out:
        write_text(result.config.out, trials_csv(result))
    if result.config.plot:
        write_text(result.config.plot, trials_svg(result))


# ------------------------------------------------------------------- lemmas

def run_lemma_suites(suites=SUITES) -> tuple[list[CheckResult], bool]:
    results = validate_lemmas(tuple(suites))
    return results, all(r.passed for r in results)


# ------------------------------------------------------------------ scaling

@dataclass(frozen=True)
class BenchConfig:
    """Budget search over a grid.

    ``sweep="k"`` varies ``k`` over ``k_grid`` at fixed ``param`` (gamma for
    large, epsilon for classical, theta for giant); ``sweep="theta"`` varies
    ``param`` over ``param_grid`` at fixed ``k`` and fits against ``1/param``.
    """

    regime: str = "large"
    sweep: str = "k"
    k_grid: tuple = (1024, 2048, 4096, 8192, 16384, 32768, 65536)
    param: float = 0.2
    k: int = 16384
    param_grid: tuple = (0.025, 0.05, 0.1, 0.2, 0.3)
    target: float = 0.9
    trials: int = 20
    master_seed: int = 0
    budget_cap: int = 10**7
    bootstrap: int = 2000
    rto1_r: int | None = None

    def __post_init__(self):
        if self.regime not in ("large", "classical", "giant"):
            raise ConfigError("bench-scaling supports the large, classical and giant regimes")
        if self.sweep not in ("k", "theta"):
            raise ConfigError("sweep must be 'k' or 'theta'")
        grid = self.k_grid if self.sweep == "k" else self.param_grid
        if len(grid) < 4:
            raise ConfigError("a scaling fit needs a grid of at least 4 points")
        if self.trials < 1 or not 0 < self.target <= 1:
            raise ConfigError("trials must be positive and target in (0, 1]")

    def points(self) -> list[tuple[int, float]]:
        if self.sweep == "k":
            return [(int(k), self.param) for k in self.k_grid]
        return [(self.k, float(t)) for t in self.param_grid]


@dataclass(frozen=True)
class BenchRow:
    k: int
    param: float
    budget: int | None
    cost: int | None
    success_rate: float
    reached: bool


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    points: int


@dataclass
class BenchResult:
    config: BenchConfig
    rows: list
    fit: SlopeFit | None


def _giant_r(k: int, theta: float, r: int | None) -> int:
    if r is None:
        r = 2
        while r < theta + 1:
            r *= 2
    if k % r:
        raise ConfigError(f"r={r} must divide k={k}")
    return r


def _bench_instances(bc: BenchConfig, k: int, param: float):
    """``(label, pmf or string, noise, expects_accept, monotone)`` per side."""
    u = make_instance(k, InstanceSpec(Variant.UNIFORM))
    if bc.regime == "large":
        alt = make_instance(k, InstanceSpec(Variant.UNIFORM_SUBSET, k // 2))
        return [("null", u, "adv-high", True, True), ("alt", alt, "adv-to:0", False, True)]
    if bc.regime == "classical":
        alt = make_instance(k, InstanceSpec(Variant.PERTURBED_UNIFORM, param))
        return [("null", u, None, True, True), ("alt", alt, None, False, True)]
    r = _giant_r(k, param, bc.rto1_r)
    # more samples only make a collision under the null likelier, so only
    # the alternative side is searched; the null is checked at the result
    return [("null", u, None, True, False), ("alt", ("rto1", r), None, False, True)]


@lru_cache(maxsize=4)
def _bench_string(k: int, r: int, seed: int) -> StringOracle:
    # the induced pmf does not depend on the layout, so one string per (k, r) suffices
    return rto1_string(k, r, stream(seed, 0, f"bench/rto1/{k}/{r}"))


def _bench_rate(bc: BenchConfig, k: int, param: float, budget: int, side) -> float:
    label, src, noise, expect, _ = side
    hits = 0
    for t in range(bc.trials):
        tag = f"bench/{bc.regime}/{k}/{param!r}/{label}"
        seed_rng = stream(bc.master_seed, t, tag + "/code")
        if isinstance(src, tuple):
            code = code_from_string(_bench_string(k, src[1], bc.master_seed), seed_rng)
        else:
            code = code_from_pmf(src, seed_rng)
        if bc.regime == "large":
            mode, target = QmeConfig.parse_noise(noise)
            cfg = LargeConfig(gamma=param, n_override=budget,
                              qme=QmeConfig(delta=LARGE_DELTA, noise=mode, target=target))
            v = run_large(code, k, cfg, stream(bc.master_seed, t, tag + "/tester"))
        elif bc.regime == "classical":
            v = classical_baseline(code, k, param, m=budget)
        else:
            v = run_giant(code, k, GiantConfig(theta=param, n_override=budget))
        hits += v.accepted == expect
    return hits / bc.trials


def _cost(bc: BenchConfig, budget: int) -> int:
    if bc.regime == "large":
        return LargeConfig(gamma=1.0).declared_uses(budget, True)
    if bc.regime == "giant":
        return ceil_two_thirds_power(budget)
    return budget


def _initial_budget(bc: BenchConfig, k: int, param: float) -> int:
    if bc.regime == "large":
        return max(2, int(k ** (1 / 3) / param ** (2 / 3)))
    if bc.regime == "classical":
        return classical_sample_size(k, param, 0.5)
    return max(2, int(math.sqrt(k / param)))


def minimal_budget(bc: BenchConfig, k: int, param: float) -> BenchRow:
    """Smallest budget whose searched sides all reach ``target`` (bisection)."""
    sides = _bench_instances(bc, k, param)
    searched = [s for s in sides if s[4]]

    def ok(b):
        return all(_bench_rate(bc, k, param, b, s) >= bc.target for s in searched)

    lo, hi = 1, _initial_budget(bc, k, param)
    while not ok(hi):
        lo, hi = hi, hi * 2
        if hi > bc.budget_cap:
            return BenchRow(k, param, None, None, 0.0, False)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    rate = min(_bench_rate(bc, k, param, hi, s) for s in sides)
    return BenchRow(k, param, hi, _cost(bc, hi), rate, rate >= bc.target)


def fit_slope(xs, ys, bootstrap: int = 2000, seed: int = 0) -> SlopeFit:
    """Least-squares slope of ``log y`` on ``log x`` with a percentile bootstrap interval."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    slope, intercept = np.polyfit(lx, ly, 1)
    rng = stream(seed, 0, "bootstrap")
    boots = []
    for _ in range(bootstrap):
        idx = rng.integers(0, lx.size, lx.size)
        if np.unique(lx[idx]).size < 2:
            continue
        boots.append(np.polyfit(lx[idx], ly[idx], 1)[0])
    lo, hi = (np.percentile(boots, [2.5, 97.5]) if boots else (slope, slope))
    return SlopeFit(float(slope), float(intercept), float(lo), float(hi), int(lx.size))


def bench_x(bc: BenchConfig, row: BenchRow) -> float:
    return float(row.k) if bc.sweep == "k" else 1.0 / row.param


def bench_y(bc: BenchConfig, row: BenchRow) -> float:
    # the giant regime reports its modeled quantum cost, the others the sample budget
    return float(row.cost if bc.regime == "giant" else row.budget)


def bench_scaling(bc: BenchConfig) -> BenchResult:
    rows = [minimal_budget(bc, k, p) for k, p in bc.points()]
    used = [r for r in rows if r.reached]
    fit = None
    if len(used) >= 2:
        fit = fit_slope([bench_x(bc, r) for r in used], [bench_y(bc, r) for r in used],
                        bc.bootstrap, bc.master_seed)
    return BenchResult(bc, rows, fit)


def bench_csv(result: BenchResult) -> str:
    bc = result.config
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("schema_version", "regime", "sweep", "k", "param", "budget", "cost",
                "success_rate", "reached"))
    for r in result.rows:
        w.writerow([_cell(x) for x in (SCHEMA_VERSION, bc.regime, bc.sweep, r.k, r.param,
                                       r.budget, r.cost, r.success_rate, int(r.reached))])
    return buf.getvalue()


def bench_svg(result: BenchResult) -> str:
    bc = result.config
    used = [r for r in result.rows if r.reached]
    fit = result.fit
    return svg.loglog_chart(
        [bench_x(bc, r) for r in used], [bench_y(bc, r) for r in used],
        fit.slope if fit else None, fit.intercept if fit else None,
        title=f"{bc.regime} scaling", x_label="k" if bc.sweep == "k" else "1/theta",
        y_label="modeled quantum cost" if bc.regime == "giant" else "samples")


def env_seed(default: int = 0) -> int:
    text = os.environ.get("DISTCHECK_SEED")
    if text is None or text == "":
        return default
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"DISTCHECK_SEED must be an integer, got {text!r}") from None
