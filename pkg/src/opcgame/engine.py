"""Simultaneous (Jacobi) best-response iteration for the power-control games.

Every sweep computes all users' best responses against the same previous
profile and then switches together.  Convergence is declared when the
relative sup-norm change of the profile drops below ``tol``; runs whose powers
blow past ``DIVERGENCE_FACTOR`` times the game's power scale stop as diverged.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import analysis
from . import best_response as br
from .network import Scenario, UserParams, interference
from .single_carrier import opc_step, tpc_feasible, tpc_step

log = logging.getLogger(__name__)

OPPORTUNISTIC = br.OPPORTUNISTIC
POWER_MIN = br.POWER_MIN
WATERFILL = br.WATERFILL
PRICED = br.PRICED
FIXED_PRICED = br.FIXED_PRICED
TPC = "tpc"
OPC = "opc"
GAMES = (OPPORTUNISTIC, POWER_MIN, WATERFILL, PRICED, FIXED_PRICED, TPC, OPC)

DIVERGENCE_FACTOR = 1e9
ABS_FLOOR = 1e-15
INITIAL_FRACTION = 1e-3


@dataclass
class GameConfig:
    """What to iterate and how.

    ``init`` is ``"uniform"`` (every entry ``1e-3`` times the power scale),
    ``"zeros"``, ``"random"`` (uniform on ``[0, init_spread * scale)`` drawn
    from ``init_seed``) or an explicit ``(M, L)`` array.
    """

    game: str
    params: UserParams
    fixed_prices: Optional[np.ndarray] = None
    init: Union[str, np.ndarray] = "uniform"
    init_seed: int = 0
    init_spread: float = 1.0
    tol: float = 1e-8
    max_iter: int = 10_000
    record_trajectory: bool = True
    check_conditions: bool = True

    def __post_init__(self):
        if self.game not in GAMES:
            raise ValueError(f"unknown game {self.game!r}; expected one of {GAMES}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class RunResult:
    profile: np.ndarray
    converged: bool
    diverged: bool
    iterations: int
    total_power: np.ndarray
    total_rate: np.ndarray
    slack: np.ndarray
    kkt_residual: Optional[float] = None
    trajectory: list = field(default_factory=list)
    condition: Optional[dict] = None

    def summary(self) -> dict:
        return {
            "converged": self.converged,
            "diverged": self.diverged,
            "iterations": self.iterations,
            "total_power_w": self.total_power.tolist(),
            "total_rate_nats": self.total_rate.tolist(),
            "constraint_slack": self.slack.tolist(),
            "kkt_residual": self.kkt_residual,
            "condition": self.condition,
        }


def power_scale(scenario: Scenario, config: GameConfig) -> float:
    """Characteristic per-entry power of a game, used for starts and divergence."""
    m = scenario.num_users
    prm = config.params
    eta = scenario.noise
    if config.game == OPPORTUNISTIC:
        return float((np.sqrt(prm.require("varsigma", m))[:, None] / eta).max())
    if config.game == POWER_MIN:
        return float(br.power_min_level(eta, prm.require("rate_target", m)).max())
    if config.game in (WATERFILL, PRICED, FIXED_PRICED):
        return float(prm.require("power_budget", m).max())
    if config.game == TPC:
        return float((prm.require("target_sinr", m)[:, None] * eta).max())
    return float((prm.require("opc_constant", m)[:, None] / eta).max())


def initial_profile(scenario: Scenario, config: GameConfig) -> np.ndarray:
    scale = power_scale(scenario, config)
    if isinstance(config.init, str):
        if config.init == "uniform":
            return np.full(scenario.shape, INITIAL_FRACTION * scale)
        if config.init == "zeros":
            return np.zeros(scenario.shape)
        if config.init == "random":
            rng = np.random.default_rng(config.init_seed)
            return rng.random(scenario.shape) * config.init_spread * scale
        raise ValueError(f"unknown init rule {config.init!r}")
    return scenario.check_profile(config.init).astype(float)


def _allocate(game: str, i_eff: np.ndarray, config: GameConfig, m: int) -> br.Allocation:
    prm = config.params
    if game == OPPORTUNISTIC:
        return br.br_opportunistic(i_eff, prm.require("varsigma", m))
    if game == POWER_MIN:
        return br.br_power_min(i_eff, prm.require("rate_target", m))
    if game == WATERFILL:
        return br.br_waterfill(i_eff, prm.require("power_budget", m))
    if game == PRICED:
        return br.br_priced(i_eff, prm.require("power_budget", m), prm.require("price", m))
    if config.fixed_prices is None:
        raise ValueError("fixed_priced game needs fixed_prices")
    return br.br_fixed_priced(i_eff, prm.require("power_budget", m), config.fixed_prices)


def sweep(scenario: Scenario, config: GameConfig, profile) -> np.ndarray:
    """One simultaneous update of every user from ``profile``."""
    m = scenario.num_users
    if config.game == TPC:
        return tpc_step(scenario, profile, config.params.require("target_sinr", m))
    if config.game == OPC:
        return opc_step(scenario, profile, config.params.require("opc_constant", m))
    return _allocate(config.game, interference(scenario, profile), config, m).powers


def kkt_check(scenario: Scenario, config: GameConfig, profile) -> Optional[float]:
    """KKT residual of ``profile`` itself against its own interference.

    Multipliers come from a fresh best response; the powers checked are the
    profile's, so a non-equilibrium profile shows up as a large residual.  At a
    run converged to ``tol`` the residual is a small multiple of ``tol``.
    """
    if config.game in (TPC, OPC):
        return None
    m = scenario.num_users
    p = np.asarray(profile, dtype=float)
    i_eff = interference(scenario, p)
    alloc = _allocate(config.game, i_eff, config, m)
    alloc = br.Allocation(p, alloc.multiplier, alloc.objective)
    prm = config.params
    res = br.kkt_residual(
        config.game, i_eff, alloc, varsigma=prm.varsigma, rate_target=prm.rate_target,
        power_budget=prm.power_budget, price=prm.price, unit_prices=config.fixed_prices)
    return float(np.max(res))


def constraint_slack(scenario: Scenario, config: GameConfig, profile) -> np.ndarray:
    """Per-user slack of the game's own constraint (zero when it binds)."""
    p = np.asarray(profile, dtype=float)
    m = scenario.num_users
    i_eff = interference(scenario, p)
    prm = config.params
    if config.game == OPPORTUNISTIC:
        return prm.require("varsigma", m) - ((p * i_eff) ** 2).sum(axis=1)
    if config.game == POWER_MIN:
        return np.log1p(p / i_eff).sum(axis=1) - prm.require("rate_target", m)
    if config.game in (WATERFILL, PRICED, FIXED_PRICED):
        return prm.require("power_budget", m) - p.sum(axis=1)
    if config.game == TPC:
        return (p / i_eff)[:, 0] - prm.require("target_sinr", m)
    return prm.require("opc_constant", m) - (p * i_eff)[:, 0]


def condition_check(scenario: Scenario, config: GameConfig) -> Optional[dict]:
    """Sufficient-condition verdict relevant to the configured game, if any."""
    m = scenario.num_users
    prm = config.params
    if config.game == OPPORTUNISTIC:
        rep = analysis.analyze(scenario, varsigma=prm.require("varsigma", m))
        return {"test": "A is P-matrix", "passed": rep.a_is_p_matrix, "rho_B": rep.rho_b}
    if config.game in (PRICED, WATERFILL):
        prices = prm.price if config.game == PRICED else np.zeros(m)
        d = analysis.matrix_d(scenario, prm.require("power_budget", m), prices)
        return {"test": "D is P-matrix", "passed": analysis.is_p_matrix(d)}
    if config.game == TPC:
        ok, rho = tpc_feasible(scenario, prm.require("target_sinr", m))
        return {"test": "rho(diag(target) F) < 1", "passed": ok, "rho": rho}
    return None


def _keep_snapshot(n: int) -> bool:
    return n <= 100 or n % 10 == 0


def run(scenario: Scenario, config: GameConfig) -> RunResult:
    """Iterate simultaneous best responses until convergence, divergence or the cap."""
    p = initial_profile(scenario, config)
    limit = DIVERGENCE_FACTOR * power_scale(scenario, config)
    trajectory = [(0, p.copy())] if config.record_trajectory else []
    converged = diverged = False
    n = 0
    for n in range(1, config.max_iter + 1):
        p_new = sweep(scenario, config, p)
        if not np.all(np.isfinite(p_new)) or p_new.max() > limit:
            diverged = True
            p = p_new
            if config.record_trajectory:
                trajectory.append((n, p.copy()))
            break
        change = np.abs(p_new - p).max() / max(np.abs(p_new).max(), ABS_FLOOR)
        p = p_new
        if config.record_trajectory and _keep_snapshot(n):
            trajectory.append((n, p.copy()))
        if change < config.tol:
            converged = True
            break
    if config.record_trajectory and trajectory[-1][0] != n:
        trajectory.append((n, p.copy()))
    if not (converged or diverged):
        log.info("%s game hit the iteration cap (%d)", config.game, config.max_iter)

    finite = np.all(np.isfinite(p))
    if finite:
        i_eff = interference(scenario, np.maximum(p, 0))
        total_rate = np.log1p(p / i_eff).sum(axis=1)
        slack = constraint_slack(scenario, config, p)
    else:
        total_rate = np.full(scenario.num_users, np.nan)
        slack = np.full(scenario.num_users, np.nan)
    return RunResult(
        profile=p,
        converged=converged,
        diverged=diverged,
        iterations=n,
        total_power=p.sum(axis=1),
        total_rate=total_rate,
        slack=slack,
        kkt_residual=kkt_check(scenario, config, p) if converged else None,
        trajectory=trajectory,
        condition=condition_check(scenario, config) if config.check_conditions else None,
    )


@dataclass
class ProbeReport:
    """Outcome of running one game from several random starts."""

    max_distance: float
    all_converged: bool
    condition_passed: Optional[bool]
    profiles: list
    iterations: list

    @property
    def unique(self) -> bool:
        return self.all_converged and self.max_distance < 1e-6


def uniqueness_probe(scenario: Scenario, config: GameConfig, num_starts: int = 16,
                     spread: float = 1.0, seed: int = 0) -> ProbeReport:
    """Run from ``num_starts`` random profiles and compare the end points.

    ``max_distance`` is the largest pairwise sup-norm distance between final
    profiles, relative to the largest final power.
    """
    if num_starts < 2:
        raise ValueError("num_starts must be at least 2")
    seeds = np.random.SeedSequence(seed).generate_state(num_starts)
    results = []
    for s in seeds:
        cfg = GameConfig(
            game=config.game, params=config.params, fixed_prices=config.fixed_prices,
            init="random", init_seed=int(s), init_spread=spread, tol=config.tol,
            max_iter=config.max_iter, record_trajectory=False, check_conditions=False)
        results.append(run(scenario, cfg))
    profiles = [r.profile for r in results]
    top = max(float(np.abs(q).max()) for q in profiles)
    dist = max(float(np.abs(a - b).max()) for a, b in itertools.combinations(profiles, 2))
    cond = condition_check(scenario, config)
    return ProbeReport(
        max_distance=dist / max(top, ABS_FLOOR),
        all_converged=all(r.converged for r in results),
        condition_passed=None if cond is None else cond["passed"],
        profiles=profiles,
        iterations=[r.iterations for r in results],
    )


def freeze_fixed_prices(scenario: Scenario, result: RunResult, prices) -> np.ndarray:
    """Per-sub-channel prices ``price_i * I_i^l`` at a converged profile, shape (M, L)."""
    if not result.converged:
        raise ValueError("fixed prices can only be frozen from a converged run")
    lam = np.broadcast_to(np.asarray(prices, dtype=float), (scenario.num_users,))
    return lam[:, None] * interference(scenario, result.profile)
