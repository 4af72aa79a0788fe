"""Seed-ensemble experiments and their CSV/JSON artifacts.

Each preset builds random scenarios, runs one or more games over a sequence of
channel-scaling steps for the last user, and writes per-seed CSV files with
columns ``step,iteration,user,power_w,rate_nats`` plus a ``manifest.json``
holding the full configuration, seeds, verdicts and ensemble statistics.

Defaults below are engineering choices (step factor, ``varsigma``, budget,
price, price grid); the manifest records them so every file can be rebuilt.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import engine
from .engine import GameConfig, RunResult
from .network import Scenario, UserParams, generate_scenario, interference, scale_user_channels

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_COLUMNS = ("step", "iteration", "user", "power_w", "rate_nats")

PRESETS = {
    "fig1_opc_convergence": {"subchannels": 20, "steps": 0},
    "fig2_opc_degradation": {"subchannels": 20, "steps": 4},
    "fig3_opc_vs_powermin": {"subchannels": 20, "steps": 4},
    "fig4_pricing_sweep": {"subchannels": 10, "steps": 0},
    "fig5_6_fixed_vs_proposed_degrade": {"subchannels": 10, "steps": 6},
    "fig7_8_fixed_vs_proposed_improve": {"subchannels": 10, "steps": 6},
    "custom": {"subchannels": 20, "steps": 0},
}
REQUIRED_FIELDS = ("preset", "seeds")


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one experiment."""

    preset: str
    seeds: list = field(default_factory=lambda: list(range(20)))
    steps: Optional[int] = None
    step_factor: float = 0.8
    out_dir: Optional[str] = None
    users: int = 5
    subchannels: Optional[int] = None
    noise: float = 0.01
    varsigma: float = 1e-4
    power_budget: float = 3.0
    price: float = 100.0
    price_grid: Optional[list] = None
    game: Optional[str] = None
    rate_target: Optional[float] = None
    scaled_user: int = -1
    tol: float = 1e-8
    max_iter: int = 10_000
    workers: int = 1

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        self.seeds = [int(s) for s in self.seeds]
        if not self.seeds:
            raise ValueError(
                "experiment needs a non-empty seed list; required fields: "
                + ", ".join(REQUIRED_FIELDS))
        defaults = PRESETS[self.preset]
        if self.steps is None:
            self.steps = defaults["steps"]
        if self.subchannels is None:
            self.subchannels = defaults["subchannels"]
        if self.price_grid is None:
            self.price_grid = np.logspace(0, 4, 9).tolist()
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if not self.step_factor > 0:
            raise ValueError("step_factor must be positive")
        if self.preset == "custom" and self.game is None:
            raise ValueError("custom experiments need a 'game' field")
        if not -self.users <= self.scaled_user < self.users:
            raise ValueError(f"scaled_user {self.scaled_user} out of range")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = cls.__dataclass_fields__
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown experiment fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("out_dir")
        out.pop("workers")
        return out


# -- per-scheme records --------------------------------------------------------


@dataclass
class SchemeRecord:
    """Rows of one scheme's CSV plus the per-step converged results."""

    name: str
    rows: list = field(default_factory=list)
    results: list = field(default_factory=list)

    def add(self, step: int, scenario: Scenario, result: RunResult) -> None:
        snapshots = result.trajectory or [(result.iterations, result.profile)]
        for iteration, profile in snapshots:
            power = profile.sum(axis=1)
            rate = np.log1p(profile / interference(scenario, profile)).sum(axis=1)
            for user in range(scenario.num_users):
                self.rows.append((step, iteration, user, float(power[user]), float(rate[user])))
        self.results.append(result)


def rows_to_csv(rows: Sequence[tuple]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for step, iteration, user, power, rate in rows:
        # repr round-trips floats exactly
        writer.writerow((step, iteration, user, repr(power), repr(rate)))
    return buf.getvalue()


def read_run_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: expected columns {','.join(CSV_COLUMNS)}")
        return [(int(r["step"]), int(r["iteration"]), int(r["user"]),
                 float(r["power_w"]), float(r["rate_nats"])) for r in reader]


@dataclass
class StepTotals:
    """Final-iteration power and rate per step and user, shape (steps, M)."""

    steps: np.ndarray
    power: np.ndarray
    rate: np.ndarray

    @classmethod
    def from_rows(cls, rows: Sequence[tuple]) -> "StepTotals":
        last: dict = {}
        for step, iteration, _, _, _ in rows:
            last[step] = max(last.get(step, -1), iteration)
        steps = sorted(last)
        users = sorted({r[2] for r in rows})
        power = np.zeros((len(steps), len(users)))
        rate = np.zeros_like(power)
        pos = {s: k for k, s in enumerate(steps)}
        for step, iteration, user, p, r in rows:
            if iteration == last[step]:
                power[pos[step], user] = p
                rate[pos[step], user] = r
        return cls(np.array(steps), power, rate)


@dataclass
class Comparison:
    """Signed percentage gaps of scheme ``a`` relative to scheme ``b`` per step."""

    steps: np.ndarray
    power_a: np.ndarray
    power_b: np.ndarray
    rate_a: np.ndarray
    rate_b: np.ndarray

    @property
    def power_gap_pct(self) -> np.ndarray:
        return 100.0 * (self.power_a - self.power_b) / self.power_b

    @property
    def rate_gap_pct(self) -> np.ndarray:
        return 100.0 * (self.rate_a - self.rate_b) / self.rate_b

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("step", "power_a_w", "power_b_w", "power_gap_pct",
                         "rate_a_nats", "rate_b_nats", "rate_gap_pct"))
        for k, step in enumerate(self.steps):
            writer.writerow((int(step), repr(float(self.power_a[k])), repr(float(self.power_b[k])),
                             repr(float(self.power_gap_pct[k])), repr(float(self.rate_a[k])),
                             repr(float(self.rate_b[k])), repr(float(self.rate_gap_pct[k]))))
        return buf.getvalue()


def compare_schemes(result_a: StepTotals, result_b: StepTotals) -> Comparison:
    """Per-step signed percentage differences in total power and total rate."""
    if result_a.power.shape != result_b.power.shape or not np.array_equal(
            result_a.steps, result_b.steps):
        raise ValueError("schemes must cover the same steps and users")
    return Comparison(
        steps=result_a.steps,
        power_a=result_a.power.sum(axis=1), power_b=result_b.power.sum(axis=1),
        rate_a=result_a.rate.sum(axis=1), rate_b=result_b.rate.sum(axis=1),
    )


# -- presets -------------------------------------------------------------------


def _config(spec: ExperimentSpec, game: str, params: UserParams, **kw) -> GameConfig:
    return GameConfig(game=game, params=params, tol=spec.tol, max_iter=spec.max_iter, **kw)


def _step_scenario(base: Scenario, spec: ExperimentSpec, exponent: float) -> Scenario:
    return scale_user_channels(base, spec.scaled_user % spec.users, spec.step_factor ** exponent)


def _run_steps(spec, base, record, game, params, exponents, **kw):
    """Run ``game`` at each step, warm-starting from the previous equilibrium."""
    init = "uniform"
    for step, exponent in enumerate(exponents):
        sc = _step_scenario(base, spec, exponent)
        result = engine.run(sc, _config(spec, game, params, init=init, **kw))
        record.add(step, sc, result)
        if result.converged:
            init = result.profile
    return record


def _opportunistic_params(spec):
    return UserParams.uniform(spec.users, varsigma=spec.varsigma)


def _priced_params(spec, price=None):
    return UserParams.uniform(spec.users, power_budget=spec.power_budget,
                              price=spec.price if price is None else price)


def _preset_opc(spec, base):
    rec = SchemeRecord(engine.OPPORTUNISTIC)
    _run_steps(spec, base, rec, engine.OPPORTUNISTIC, _opportunistic_params(spec),
               range(spec.steps + 1))
    return {"opportunistic": rec}


def _preset_opc_vs_powermin(spec, base):
    opc = _preset_opc(spec, base)["opportunistic"]
    # rate targets: the opportunistic equilibrium rates before any degradation
    targets = opc.results[0].total_rate
    pm = SchemeRecord(engine.POWER_MIN)
    _run_steps(spec, base, pm, engine.POWER_MIN, UserParams(rate_target=targets),
               range(spec.steps + 1))
    return {"opportunistic": opc, "power_min": pm}


def _preset_pricing_sweep(spec, base):
    rec = SchemeRecord(engine.PRICED)
    for step, lam in enumerate(spec.price_grid):
        result = engine.run(base, _config(spec, engine.PRICED, _priced_params(spec, lam)))
        rec.add(step, base, result)
    return {"priced": rec}


def _preset_fixed_vs_proposed(spec, base, improving: bool):
    exponents = [spec.steps - k if improving else k for k in range(spec.steps + 1)]
    params = _priced_params(spec)
    proposed = SchemeRecord("proposed")
    _run_steps(spec, base, proposed, engine.PRICED, params, exponents)
    first = proposed.results[0]
    if not first.converged:
        raise RuntimeError("proposed pricing did not converge at the freezing step")
    start = _step_scenario(base, spec, exponents[0])
    prices = engine.freeze_fixed_prices(start, first, params.price)
    fixed = SchemeRecord("fixed")
    init = first.profile
    for step, exponent in enumerate(exponents):
        sc = _step_scenario(base, spec, exponent)
        result = engine.run(sc, _config(spec, engine.FIXED_PRICED, params,
                                        fixed_prices=prices, init=init))
        fixed.add(step, sc, result)
        if result.converged:
            init = result.profile
    return {"proposed": proposed, "fixed": fixed}


def _preset_custom(spec, base):
    values = {
        engine.OPPORTUNISTIC: {"varsigma": spec.varsigma},
        engine.POWER_MIN: {"rate_target": spec.rate_target},
        engine.WATERFILL: {"power_budget": spec.power_budget},
        engine.PRICED: {"power_budget": spec.power_budget, "price": spec.price},
    }
    if spec.game not in values:
        raise ValueError(f"custom experiments support games {sorted(values)}")
    if any(v is None for v in values[spec.game].values()):
        raise ValueError(f"game {spec.game!r} needs fields {sorted(values[spec.game])}")
    rec = SchemeRecord(spec.game)
    _run_steps(spec, base, rec, spec.game, UserParams.uniform(spec.users, **values[spec.game]),
               range(spec.steps + 1))
    return {spec.game: rec}


COMPARISONS = {
    "fig3_opc_vs_powermin": ("opportunistic", "power_min"),
    "fig5_6_fixed_vs_proposed_degrade": ("proposed", "fixed"),
    "fig7_8_fixed_vs_proposed_improve": ("proposed", "fixed"),
}


def _dispatch(spec: ExperimentSpec, base: Scenario) -> dict:
    if spec.preset in ("fig1_opc_convergence", "fig2_opc_degradation"):
        return _preset_opc(spec, base)
    if spec.preset == "fig3_opc_vs_powermin":
        return _preset_opc_vs_powermin(spec, base)
    if spec.preset == "fig4_pricing_sweep":
        return _preset_pricing_sweep(spec, base)
    if spec.preset == "fig5_6_fixed_vs_proposed_degrade":
        return _preset_fixed_vs_proposed(spec, base, improving=False)
    if spec.preset == "fig7_8_fixed_vs_proposed_improve":
        return _preset_fixed_vs_proposed(spec, base, improving=True)
    return _preset_custom(spec, base)


# -- seed runs and manifest ----------------------------------------------------


@dataclass
class SeedOutcome:
    seed: int
    scenario: Scenario
    schemes: dict
    comparison: Optional[Comparison]
    summary: dict


def _summarize(spec: ExperimentSpec, schemes: dict, comparison: Optional[Comparison]) -> dict:
    out: dict = {"schemes": {}}
    for name, rec in schemes.items():
        out["schemes"][name] = {
            "converged": [r.converged for r in rec.results],
            "diverged": [r.diverged for r in rec.results],
            "iterations": [r.iterations for r in rec.results],
            "condition": [r.condition for r in rec.results],
            "final_power_w": rec.results[-1].total_power.tolist(),
            "final_rate_nats": rec.results[-1].total_rate.tolist(),
        }
    if spec.preset in ("fig1_opc_convergence", "fig2_opc_degradation"):
        res = schemes["opportunistic"].results
        power0 = res[0].total_power
        out["power_increasing_with_user"] = bool(np.all(np.diff(power0) > 0))
        out["rate_increasing_with_user"] = bool(np.all(np.diff(res[0].total_rate) > 0))
        out["user_1_below_user_M_power"] = bool(power0[0] < power0[-1])
        if len(res) > 1:
            scaled = spec.scaled_user % spec.users
            out["scaled_user_power_by_step"] = [float(r.total_power[scaled]) for r in res]
    if spec.preset == "fig4_pricing_sweep":
        res = schemes["priced"].results
        first, last = res[0].total_power, res[-1].total_power
        with np.errstate(divide="ignore", invalid="ignore"):
            out["power_retained_fraction"] = (last / first).tolist()
    if comparison is not None:
        out["power_gap_pct"] = comparison.power_gap_pct.tolist()
        out["rate_gap_pct"] = comparison.rate_gap_pct.tolist()
        if spec.preset == "fig3_opc_vs_powermin":
            out["power_reduction_pct"] = float(-comparison.power_gap_pct[-1])
            out["rate_reduction_pct"] = float(-comparison.rate_gap_pct[-1])
    return out


def run_seed(spec: ExperimentSpec, seed: int) -> SeedOutcome:
    base = generate_scenario(seed, spec.users, spec.subchannels, noise_level=spec.noise)
    schemes = _dispatch(spec, base)
    comparison = None
    if spec.preset in COMPARISONS:
        a, b = COMPARISONS[spec.preset]
        comparison = compare_schemes(StepTotals.from_rows(schemes[a].rows),
                                     StepTotals.from_rows(schemes[b].rows))
    return SeedOutcome(seed, base, schemes, comparison, _summarize(spec, schemes, comparison))


def _stats(values) -> dict:
    v = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"median": float(med), "q1": float(q1), "q3": float(q3),
            "min": float(v.min()), "max": float(v.max())}


def _ensemble(spec: ExperimentSpec, outcomes: list) -> dict:
    out: dict = {}
    if spec.preset in COMPARISONS:
        power = [o.comparison.power_gap_pct[-1] for o in outcomes]
        rate = [o.comparison.rate_gap_pct[-1] for o in outcomes]
        out["final_step_power_gap_pct"] = _stats(power)
        out["final_step_rate_gap_pct"] = _stats(rate)
        out["fraction_power_gap_exceeds_rate_gap"] = float(
            np.mean(np.abs(power) > np.abs(rate)))
    if spec.preset in ("fig1_opc_convergence", "fig2_opc_degradation"):
        out["fraction_power_increasing_with_user"] = float(
            np.mean([o.summary["power_increasing_with_user"] for o in outcomes]))
        out["fraction_user_1_below_user_M_power"] = float(
            np.mean([o.summary["user_1_below_user_M_power"] for o in outcomes]))
    all_conv = [c for o in outcomes for s in o.summary["schemes"].values() for c in s["converged"]]
    out["fraction_runs_converged"] = float(np.mean(all_conv))
    return out


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    outcomes: list
    manifest: dict
    files: list


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every seed of ``spec`` and, if ``out_dir`` is set, write the artifacts."""
    if spec.workers > 1 and len(spec.seeds) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            outcomes = list(pool.map(run_seed, [spec] * len(spec.seeds), spec.seeds))
    else:
        outcomes = [run_seed(spec, s) for s in spec.seeds]

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "preset": spec.preset,
        "seeds": spec.seeds,
        "config": spec.to_dict(),
        "units": {"power": "W", "rate": "nats (natural logarithm)"},
        "notes": [
            "step factor, varsigma, budget, price and price grid are engineering defaults",
            "iteration defaults: tolerance and cap are engineering choices",
            "condition verdicts are sufficient conditions only",
        ],
        "per_seed": {str(o.seed): o.summary for o in outcomes},
        "ensemble": _ensemble(spec, outcomes),
    }
    files = []
    if spec.out_dir is not None:
        files = write_artifacts(Path(spec.out_dir), outcomes, manifest)
    return ExperimentResult(spec, outcomes, manifest, files)


def write_artifacts(out: Path, outcomes: list, manifest: dict) -> list:
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for o in outcomes:
            sub = out / f"seed_{o.seed}"
            sub.mkdir(exist_ok=True)
            o.scenario.save(sub / "scenario.json")
            written.append(sub / "scenario.json")
            for name, rec in o.schemes.items():
                path = sub / f"{name}.csv"
                path.write_text(rows_to_csv(rec.rows))
                written.append(path)
            if o.comparison is not None:
                path = sub / "comparison.csv"
                path.write_text(o.comparison.to_csv())
                written.append(path)
        path = out / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
        written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write experiment output under {out}: {exc}") from exc
    return written
