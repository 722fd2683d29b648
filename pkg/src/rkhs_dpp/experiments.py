"""Config-driven experiments behind the command-line tool.

A config is one JSON document::

    {
      "experiment": "dlr",                      # optional, must match the subcommand
      "spec": {"family": "diagonal", "kind": "power", "k": 2},
      "x0": 0,
      "rule": "odd",                           # R1 for variational, xi otherwise
      "schedule": {"n_start": 1, "n_max": 16, "growth": "doubling"},
      "ambient_factor": 4,
      "fixed_ambient": false,
      "seed": 0,
      "n_samples": 1000,
      "window": [-2, -1, 0, 1, 2],             # sample only, default {-n_max..n_max}
      "y": 0                                   # verify only, default x0
    }

``r1`` and ``xi_rule`` are accepted as aliases of ``rule``.  Every
experiment writes ``summary.json`` plus CSV/JSON tables into the output
directory; CSV content depends only on the config.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats

from . import dpp, gibbs, variational
from .errors import ConfigParse, InvariantViolation, RkhsDppError
from .kernel import inverse_restricted, materialize
from .operators import OperatorSpec, spec_from_dict
from .traces import ConvergenceTrace
from .windows import (
    SiteRule,
    as_window,
    check_nested,
    doubling_schedule,
    enlarge,
    linear_schedule,
    symmetric,
    window_label,
)

EXPERIMENTS = ("variational", "papangelou", "dlr", "sample", "verify")
MONOTONE_RTOL = 1e-9
BOUND_RTOL = 1e-10
MATCHED_AB_TOL = 1e-10
NORMALIZATION_TOL = 1e-9
ENUMERATION_CAP = 15


@dataclass(frozen=True)
class ExperimentConfig:
    spec: OperatorSpec
    experiment: str | None = None
    x0: int = 0
    rule: SiteRule = SiteRule("odd")
    n_start: int = 1
    n_max: int = 16
    growth: str = "doubling"
    step: int = 1
    ambient_factor: int = 4
    fixed_ambient: bool = False
    seed: int = 0
    n_samples: int = 1000
    window: tuple | None = None
    y: int | None = None
    output: str = "out"

    def __post_init__(self):
        if self.experiment is not None and self.experiment not in EXPERIMENTS:
            raise ConfigParse(f"unknown experiment {self.experiment!r}")
        if isinstance(self.ambient_factor, bool) or not isinstance(self.ambient_factor, int) or self.ambient_factor < 1:
            raise ConfigParse(f"ambient_factor must be an integer >= 1, got {self.ambient_factor!r}")
        if self.growth not in ("doubling", "linear"):
            raise ConfigParse(f"schedule growth must be 'doubling' or 'linear', got {self.growth!r}")
        if not 0 <= self.n_start <= self.n_max:
            raise ConfigParse("schedule needs 0 <= n_start <= n_max")
        if self.step < 1:
            raise ConfigParse("schedule step must be >= 1")
        if self.n_samples < 0:
            raise ConfigParse("n_samples must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ConfigParse("seed must fit in an unsigned 64-bit integer")
        largest = set(self.schedule()[-1])
        if self.x0 not in largest:
            raise ConfigParse(f"x0={self.x0} lies outside the largest window")
        if self.y is not None and self.y not in largest:
            raise ConfigParse(f"y={self.y} lies outside the largest window")
        if self.window is not None:
            try:
                object.__setattr__(self, "window", as_window(self.window))
            except ValueError as exc:
                raise ConfigParse(str(exc)) from None
            if not self.window:
                raise ConfigParse("window must be nonempty")

    def schedule(self) -> list[tuple]:
        if self.growth == "doubling":
            return doubling_schedule(self.n_start, self.n_max)
        return linear_schedule(self.n_start, self.n_max, self.step)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        try:
            return replace(self, **kw)
        except TypeError as exc:
            raise ConfigParse(str(exc)) from None

    def to_dict(self) -> dict:
        d = {
            "experiment": self.experiment,
            "spec": self.spec.to_dict(),
            "x0": self.x0,
            "rule": self.rule.to_dict(),
            "schedule": {"n_start": self.n_start, "n_max": self.n_max, "growth": self.growth, "step": self.step},
            "ambient_factor": self.ambient_factor,
            "fixed_ambient": self.fixed_ambient,
            "seed": self.seed,
            "n_samples": self.n_samples,
            "output": self.output,
        }
        if self.window is not None:
            d["window"] = list(self.window)
        if self.y is not None:
            d["y"] = self.y
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigParse("config must be a JSON object")
        if "spec" not in d:
            raise ConfigParse("config needs a 'spec'")
        try:
            spec = spec_from_dict(d["spec"])
        except ConfigParse:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigParse(f"bad spec: {exc}") from None
        rules = [d[k] for k in ("rule", "r1", "xi_rule") if k in d]
        sched = d.get("schedule", {})
        if not isinstance(sched, dict):
            raise ConfigParse("schedule must be an object")
        known = {"experiment", "spec", "x0", "rule", "r1", "xi_rule", "schedule", "ambient_factor",
                 "fixed_ambient", "seed", "n_samples", "window", "y", "output"}
        extra = set(d) - known
        if extra:
            raise ConfigParse(f"unknown config fields {sorted(extra)}")
        try:
            return cls(
                spec=spec,
                experiment=d.get("experiment"),
                x0=_int(d.get("x0", 0), "x0"),
                rule=SiteRule.from_dict(rules[0]) if rules else SiteRule("odd"),
                n_start=_int(sched.get("n_start", 1), "n_start"),
                n_max=_int(sched.get("n_max", 16), "n_max"),
                growth=sched.get("growth", "doubling"),
                step=_int(sched.get("step", 1), "step"),
                ambient_factor=_int(d.get("ambient_factor", 4), "ambient_factor"),
                fixed_ambient=bool(d.get("fixed_ambient", False)),
                seed=_int(d.get("seed", 0), "seed"),
                n_samples=_int(d.get("n_samples", 1000), "n_samples"),
                window=tuple(d["window"]) if "window" in d else None,
                y=_int(d["y"], "y") if "y" in d else None,
                output=str(d.get("output", "out")),
            )
        except (TypeError, KeyError) as exc:
            raise ConfigParse(str(exc)) from None

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigParse(f"invalid JSON: {exc}") from None
        return cls.from_dict(d)


def _int(v, name: str) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or float(v) != int(v):
        raise ConfigParse(f"{name} must be an integer, got {v!r}")
    return int(v)


# ---------------------------------------------------------------------------
# hypothesis diagnostic
# ---------------------------------------------------------------------------


def verify_hypothesis(spec: OperatorSpec, y: int, schedule) -> ConvergenceTrace:
    """``(A_D^{-1})(y, y)`` over nested ambients; nondecreasing, bounded iff ``e_y`` has finite ``+`` norm."""
    schedule = [as_window(w) for w in schedule]
    check_nested(schedule)
    values = tuple(inverse_restricted(materialize(spec, w), [y]).entries[0, 0] for w in schedule)
    return ConvergenceTrace(
        tuple(window_label(w) for w in schedule), tuple(len(w) for w in schedule), values, "increasing"
    )


def hypothesis_verdict(trace: ConvergenceTrace, rel_tol: float = 1e-8, growth_ratio: float = 0.9) -> str:
    """``bounded``, ``diverging`` or ``inconclusive``.

    bounded: the last two increments are below ``rel_tol * max(1, |final|)``.
    diverging: the last increment is at least ``growth_ratio`` times the one
    before (increments are not shrinking).
    """
    inc = trace.increments()
    if inc.size < 2:
        return "inconclusive"
    scale = max(1.0, abs(float(trace.final)))
    if np.all(np.abs(inc[-2:]) < rel_tol * scale):
        return "bounded"
    if inc[-2] > 0 and inc[-1] >= growth_ratio * inc[-2]:
        return "diverging"
    return "inconclusive"


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    experiment: str
    files: dict = field(default_factory=dict)  # name -> text
    residuals: dict = field(default_factory=dict)
    monotonicity: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)  # hard invariants
    info: dict = field(default_factory=dict)

    def monotone(self, name: str, trace: ConvergenceTrace, hard: bool = True) -> None:
        ok = trace.is_monotone(rtol=MONOTONE_RTOL)
        self.monotonicity[name] = {
            "declared": trace.monotone_dir,
            "slack": _json_float(trace.monotone_slack()),
            "ok": bool(ok),
            "hard": hard,
        }
        if hard:
            self.checks[f"monotone_{name}"] = bool(ok)

    @property
    def failed(self) -> list[str]:
        return [k for k, ok in self.checks.items() if not ok]


def _json_float(x: float):
    x = float(x)
    return x if np.isfinite(x) else ("inf" if x > 0 else "-inf")


def thread_count() -> int:
    raw = os.environ.get("RKHS_DPP_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _ordered_map(fn: Callable, items: list) -> list:
    """Map preserving input order, with at most RKHS_DPP_THREADS workers."""
    workers = min(thread_count(), max(len(items), 1))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _run_variational(cfg: ExperimentConfig) -> RunResult:
    res = RunResult("variational")
    sched = cfg.schedule()
    check = variational.alpha_beta_limit_check(
        cfg.spec, cfg.x0, cfg.rule, sched, cfg.ambient_factor, cfg.fixed_ambient
    )
    res.files["trace.csv"] = check.alpha.to_csv()
    res.files["beta.csv"] = check.beta.to_csv()
    res.monotone("alpha", check.alpha)
    res.monotone("beta", check.beta, hard=cfg.fixed_ambient)
    res.residuals["alpha_beta"] = check.residual
    res.info["alpha"] = check.alpha.final
    res.info["beta"] = check.beta.final

    c = materialize(cfg.spec, sched[-1])
    part = variational.TriplePartition.from_rule(sched[-1], cfg.x0, cfg.rule)
    matched = variational.verify_ab(c, part)
    res.residuals["ab_matched"] = matched
    res.checks["ab_matched"] = matched <= MATCHED_AB_TOL
    res.residuals["a2_support"] = variational.a2_support_residual(
        cfg.spec, cfg.x0, cfg.rule, sched[-1], cfg.ambient_factor
    )
    return res


def _run_papangelou(cfg: ExperimentConfig) -> RunResult:
    res = RunResult("papangelou")
    study = dpp.papangelou_trace(cfg.spec, cfg.x0, cfg.rule, cfg.schedule(), cfg.ambient_factor)
    res.files["trace.csv"] = study.trace.to_csv()
    res.files["alpha_local.csv"] = study.companion.to_csv()
    res.files["gap.csv"] = study.gap.to_csv()
    res.monotone("alpha_local", study.companion)
    scale = max(abs(v) for v in study.companion.values)
    res.checks["bound_alpha_bracket_le_alpha_local"] = study.bound_slack() >= -BOUND_RTOL * scale
    res.residuals["gap"] = float(study.gap.final)
    res.residuals["gap_relative"] = float(study.gap.final) / float(study.companion.final)
    res.info["papangelou"] = study.trace.final
    res.info["alpha_local"] = study.companion.final
    return res


def _run_dlr(cfg: ExperimentConfig) -> RunResult:
    res = RunResult("dlr")
    sched = cfg.schedule()
    records = _ordered_map(
        lambda w: gibbs.dlr_report(cfg.spec, cfg.x0, cfg.rule, w, cfg.ambient_factor), sched
    )
    res.files["dlr.json"] = json.dumps([r.to_dict() for r in records], indent=2) + "\n"
    residual_trace = ConvergenceTrace(
        tuple(window_label(w) for w in sched), tuple(len(w) for w in sched),
        tuple(r.residual for r in records), "none",
    )
    res.files["trace.csv"] = residual_trace.to_csv()
    ambients = [enlarge(w, cfg.ambient_factor) for w in sched]
    bc = gibbs.BoundaryCondition((cfg.x0,), cfg.rule.select(ambients[-1], exclude=(cfg.x0,)))
    en = gibbs.energy(cfg.spec, (cfg.x0,), bc, _strictly_nested(ambients))
    res.files["energy.csv"] = en.to_csv()
    res.monotone("energy", en)
    res.residuals["dlr"] = records[-1].residual
    res.info["papangelou"] = records[-1].papangelou
    res.info["boltzmann"] = records[-1].boltzmann
    return res


def _strictly_nested(ws: list[tuple]) -> list[tuple]:
    out = []
    for w in ws:
        if not out or set(out[-1]) < set(w):
            out.append(w)
    return out


def _run_sample(cfg: ExperimentConfig) -> RunResult:
    res = RunResult("sample")
    window = cfg.window if cfg.window is not None else symmetric(cfg.n_max)
    model = dpp.build_model(cfg.spec, window, cfg.ambient_factor)
    draws = dpp.sample_many(model, cfg.n_samples, cfg.seed)
    res.files["samples.jsonl"] = dpp.samples_to_jsonl(draws, cfg.seed)
    res.info["window"] = list(window)
    res.info["n_samples"] = cfg.n_samples
    res.info["mean_size"] = float(np.mean([len(s) for s in draws])) if draws else 0.0
    res.info["expected_size"] = float(np.trace(model.k_matrix))
    if len(window) <= ENUMERATION_CAP:
        configs = list(dpp.configurations(window))
        probs = [dpp.marginal(model, c) for c in configs]
        res.files["marginals.csv"] = dpp.probability_table_csv(zip(configs, probs))
        total = float(np.sum(probs))
        res.residuals["normalization"] = abs(total - 1.0)
        res.checks["normalization"] = abs(total - 1.0) <= NORMALIZATION_TOL
        if draws:
            counts = {c: 0 for c in configs}
            for s in draws:
                counts[s] += 1
            obs = np.array([counts[c] for c in configs], dtype=float)
            exp = np.array(probs) * len(draws)
            exp *= obs.sum() / exp.sum()
            keep = exp > 0
            res.info["chi2_pvalue"] = float(stats.chisquare(obs[keep], exp[keep]).pvalue)
    return res


def _run_verify(cfg: ExperimentConfig) -> RunResult:
    res = RunResult("verify")
    y = cfg.x0 if cfg.y is None else cfg.y
    trace = verify_hypothesis(cfg.spec, y, cfg.schedule())
    res.files["trace.csv"] = trace.to_csv()
    res.monotone("inverse_diagonal", trace)
    res.info["verdict"] = hypothesis_verdict(trace)
    res.info["final"] = trace.final
    res.residuals["last_increment"] = trace.last_increment
    return res


RUNNERS = {
    "variational": _run_variational,
    "papangelou": _run_papangelou,
    "dlr": _run_dlr,
    "sample": _run_sample,
    "verify": _run_verify,
}


def summary_dict(cfg: ExperimentConfig, res: RunResult, runtime: float, error: str | None = None) -> dict:
    failed = res.failed if error is None else [error]
    return {
        "experiment": res.experiment,
        "status": "ok" if not failed else "failed",
        "failed_checks": failed,
        "residuals": {k: _json_float(v) for k, v in res.residuals.items()},
        "monotonicity": res.monotonicity,
        "checks": res.checks,
        "info": res.info,
        "runtime_seconds": runtime,
        "rng": dpp.RNG_NAME,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
    }


def run(cfg: ExperimentConfig, experiment: str, out_dir: str | os.PathLike | None = None) -> int:
    """Run one experiment, write its files, return the exit status (0 ok, 1 failed check)."""
    if cfg.experiment is not None and cfg.experiment != experiment:
        raise ConfigParse(f"config is for {cfg.experiment!r}, not {experiment!r}")
    if experiment not in RUNNERS:
        raise ConfigParse(f"unknown experiment {experiment!r}")
    out = Path(out_dir if out_dir is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    error = None
    try:
        res = RUNNERS[experiment](cfg)
    except InvariantViolation as exc:
        res, error = RunResult(experiment), exc.check
        res.info["error"] = str(exc)
    except RkhsDppError as exc:
        res, error = RunResult(experiment), type(exc).__name__
        res.info["error"] = str(exc)
    runtime = time.perf_counter() - t0
    for name, text in res.files.items():
        (out / name).write_text(text)
    summary = summary_dict(cfg, res, runtime, error)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
    return 0 if summary["status"] == "ok" else 1


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "RunResult",
    "hypothesis_verdict",
    "run",
    "verify_hypothesis",
]
