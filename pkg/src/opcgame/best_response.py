"""Per-user best responses for the multi-carrier power-control games.

Every solver takes the effective interference ``I`` seen by a user as an
array of shape ``(..., L)``; any leading dimensions are treated as
independent users, and scalar parameters broadcast against them.  This lets
the game engine solve all ``M`` users of a sweep in one call.

Solvers return an :class:`Allocation` holding the powers, the optimal
multiplier and the objective value.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# water levels: exact sort-and-threshold up to this many sub-channels
EXACT_MAX_SUBCHANNELS = 4096
BISECTION_RTOL = 1e-12
BISECTION_MAX_ITER = 200
POWER_FLOOR = 1e-15

OPPORTUNISTIC = "opportunistic"
POWER_MIN = "power_min"
WATERFILL = "waterfill"
PRICED = "priced"
FIXED_PRICED = "fixed_priced"


@dataclass
class Allocation:
    """Solution of one (or a batch of) best-response problems.

    ``multiplier`` is the optimal Lagrange multiplier: ``lambda`` of the
    weighted-power constraint for the opportunistic game, the water level
    ``nu`` for waterfilling and power minimization, and ``mu`` of the budget
    constraint for the priced variants.
    """

    powers: np.ndarray
    multiplier: np.ndarray
    objective: np.ndarray


def _prepare(interference, *params):
    i_eff = np.asarray(interference, dtype=float)
    if i_eff.ndim == 0:
        raise ValueError("interference must have a sub-channel axis")
    if np.any(~(i_eff > 0)):
        raise ValueError("effective interference must be strictly positive")
    lead = i_eff.shape[:-1]
    out = [i_eff]
    for value in params:
        arr = np.asarray(value, dtype=float)
        out.append(np.broadcast_to(arr, lead).astype(float))
    return out


def _snap(powers: np.ndarray) -> np.ndarray:
    top = powers.max(axis=-1, keepdims=True)
    return np.where(powers < POWER_FLOOR * top, 0.0, powers)


def _scalarize(alloc: Allocation) -> Allocation:
    if alloc.multiplier.ndim == 0:
        alloc.multiplier = float(alloc.multiplier)
        alloc.objective = float(alloc.objective)
    return alloc


# -- opportunistic game --------------------------------------------------------


def br_opportunistic(interference, varsigma) -> Allocation:
    """Maximize total power subject to ``sum_l (p_l I_l)^2 <= varsigma``.

    The constraint always binds and the solution is
    ``p_l = 1 / (2 lambda I_l^2)`` with ``lambda = sqrt(sum_k I_k^-2 / varsigma) / 2``,
    so power is inversely proportional to the squared interference.
    """
    i_eff, vs = _prepare(interference, varsigma)
    if np.any(vs <= 0):
        raise ValueError("varsigma must be positive")
    inv_sq = i_eff ** -2.0
    lam = 0.5 * np.sqrt(inv_sq.sum(axis=-1) / vs)
    p = inv_sq / (2.0 * lam[..., None])
    return _scalarize(Allocation(p, lam, p.sum(axis=-1)))


def opportunistic_multiplier_bisection(interference, varsigma) -> np.ndarray:
    """Find ``lambda`` by bisecting ``sum_l (p_l(lambda) I_l)^2 = varsigma``.

    Independent of the closed form in :func:`br_opportunistic`; the constraint
    value ``sum 1/(4 lambda^2 I_l^2)`` is decreasing in ``lambda``.
    """
    i_eff, vs = _prepare(interference, varsigma)

    def excess(lam):
        return (1.0 / (4.0 * lam[..., None] ** 2 * i_eff ** 2)).sum(axis=-1) - vs

    lo = np.full(vs.shape, 1e-18)
    hi = np.full(vs.shape, 1e18)
    # bracket in log space; the root spans many decades
    for _ in range(BISECTION_MAX_ITER):
        mid = np.sqrt(lo * hi)
        pos = excess(mid) > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
        if np.all(hi - lo <= 1e-15 * hi):
            break
    return np.sqrt(lo * hi)


# -- water levels --------------------------------------------------------------


def _threshold_level(i_sorted, level_fn):
    """Largest active-set size ``k`` whose candidate level exceeds ``I_(k)``."""
    n_sub = i_sorted.shape[-1]
    k = np.arange(1, n_sub + 1)
    levels = level_fn(i_sorted, k)
    valid = levels > i_sorted
    # valid is a prefix of True values; count it
    n_active = valid.sum(axis=-1)
    n_active = np.maximum(n_active, 1)
    return np.take_along_axis(levels, (n_active - 1)[..., None], axis=-1)[..., 0]


def waterfill_level(interference, power_budget, method: str = "auto") -> np.ndarray:
    """Water level ``nu`` with ``sum_l [nu - I_l]^+ = power_budget``."""
    i_eff, budget = _prepare(interference, power_budget)
    if method == "auto":
        method = "exact" if i_eff.shape[-1] <= EXACT_MAX_SUBCHANNELS else "bisection"
    if method == "exact":
        i_sorted = np.sort(i_eff, axis=-1)
        csum = np.cumsum(i_sorted, axis=-1)
        return _threshold_level(
            i_sorted, lambda s, k: (budget[..., None] + csum) / k)
    if method == "bisection":
        lo = i_eff.min(axis=-1)
        hi = i_eff.max(axis=-1) + budget
        return _bisect(lambda nu: np.maximum(nu[..., None] - i_eff, 0).sum(axis=-1) - budget,
                       lo, hi, increasing=True)
    raise ValueError(f"unknown method {method!r}")


def power_min_level(interference, rate_target, method: str = "auto") -> np.ndarray:
    """Water level ``nu`` with ``sum_l ln(max(nu, I_l) / I_l) = rate_target``."""
    i_eff, target = _prepare(interference, rate_target)
    if method == "auto":
        method = "exact" if i_eff.shape[-1] <= EXACT_MAX_SUBCHANNELS else "bisection"
    if method == "exact":
        i_sorted = np.sort(i_eff, axis=-1)
        clog = np.cumsum(np.log(i_sorted), axis=-1)
        return _threshold_level(
            i_sorted, lambda s, k: np.exp((target[..., None] + clog) / k))
    if method == "bisection":
        lo = i_eff.min(axis=-1)
        hi = i_eff.max(axis=-1) * np.exp(target)
        return _bisect(
            lambda nu: np.log(np.maximum(nu[..., None], i_eff) / i_eff).sum(axis=-1) - target,
            lo, hi, increasing=True)
    raise ValueError(f"unknown method {method!r}")


def _bisect(fn, lo, hi, increasing: bool):
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        above = fn(mid) > 0
        if not increasing:
            above = ~above
        lo = np.where(above, lo, mid)
        hi = np.where(above, mid, hi)
        if np.all(hi - lo <= BISECTION_RTOL * np.abs(hi)):
            break
    return 0.5 * (lo + hi)


# -- power minimization and waterfilling ---------------------------------------


def br_power_min(interference, rate_target, method: str = "auto") -> Allocation:
    """Minimize total power subject to a total rate of at least ``rate_target`` nats."""
    i_eff, target = _prepare(interference, rate_target)
    if np.any(target <= 0):
        raise ValueError("rate target must be positive")
    nu = power_min_level(i_eff, target, method)
    p = _snap(np.maximum(nu[..., None] - i_eff, 0.0))
    # rounding can leave the rate a few ulps short; lift the level until it binds
    for _ in range(8):
        short = target - np.log1p(p / i_eff).sum(axis=-1)
        if not np.any(short > 0):
            break
        k = np.maximum((p > 0).sum(axis=-1), 1)
        nu = np.where(short > 0, nu * np.exp(np.maximum(short, 0) / k) * (1 + 2.0 ** -48), nu)
        p = _snap(np.maximum(nu[..., None] - i_eff, 0.0))
    return _scalarize(Allocation(p, nu, p.sum(axis=-1)))


def br_waterfill(interference, power_budget, method: str = "auto") -> Allocation:
    """Rate-maximizing allocation of ``power_budget`` over the sub-channels."""
    i_eff, budget = _prepare(interference, power_budget)
    if np.any(budget <= 0):
        raise ValueError("power budget must be positive")
    nu = waterfill_level(i_eff, budget, method)
    p = _snap(np.maximum(nu[..., None] - i_eff, 0.0))
    return _scalarize(Allocation(p, nu, np.log1p(p / i_eff).sum(axis=-1)))


# -- priced waterfilling -------------------------------------------------------


def _linear_priced(i_eff, budget, unit_price):
    """Maximize ``sum ln(1 + p/I) - sum c p`` with ``sum p <= budget``.

    Powers are ``[1/(mu + c_l) - I_l]^+``; ``mu`` is zero when the unpriced
    optimum fits in the budget and otherwise found by bisection on the
    decreasing map ``mu -> sum_l p_l(mu)``.
    """

    def powers(mu):
        return np.maximum(1.0 / (mu[..., None] + unit_price) - i_eff, 0.0)

    zero = np.zeros(budget.shape)
    with np.errstate(divide="ignore", over="ignore"):
        free = powers(zero)
    fits = np.isfinite(free).all(axis=-1) & (free.sum(axis=-1) <= budget)
    # p_l(mu) vanishes once mu >= 1/I_l - c_l for every l
    hi = np.maximum((1.0 / i_eff - unit_price).max(axis=-1), 0.0)
    lo = zero.copy()
    active = ~fits
    if np.any(active):
        for _ in range(BISECTION_MAX_ITER):
            mid = 0.5 * (lo + hi)
            with np.errstate(divide="ignore", over="ignore"):
                over = powers(mid).sum(axis=-1) > budget
            lo = np.where(active & over, mid, lo)
            hi = np.where(active & ~over, mid, hi)
            width = np.where(active, hi - lo, 0.0)
            if np.all(width <= BISECTION_RTOL * np.maximum(lo, 1e-300)):
                break
    mu = np.where(fits, 0.0, 0.5 * (lo + hi))
    if np.any(active):
        mu = np.where(active, _newton_polish(mu, lo, hi, i_eff, budget, unit_price), mu)
    p = _snap(powers(mu))
    objective = np.log1p(p / i_eff).sum(axis=-1) - (unit_price * p).sum(axis=-1)
    return p, mu, objective


def _newton_polish(mu, lo, hi, i_eff, budget, unit_price, steps=3):
    # Newton on the active set fixed by bisection; rejected if it leaves the bracket
    for _ in range(steps):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            inv = 1.0 / (mu[..., None] + unit_price)
            on = inv > i_eff
            f = np.where(on, inv - i_eff, 0.0).sum(axis=-1) - budget
            df = -np.where(on, inv ** 2, 0.0).sum(axis=-1)
            step = np.where(df < 0, f / df, 0.0)
        cand = mu - step
        mu = np.where(np.isfinite(cand) & (cand >= lo) & (cand <= hi), cand, mu)
    return mu


def br_priced(interference, power_budget, price) -> Allocation:
    """Rate maximization with the interference-weighted price ``price * sum_l p_l I_l``."""
    i_eff, budget, lam = _prepare(interference, power_budget, price)
    if np.any(budget <= 0):
        raise ValueError("power budget must be positive")
    if np.any(lam < 0):
        raise ValueError("price must be nonnegative")
    p, mu, obj = _linear_priced(i_eff, budget, lam[..., None] * i_eff)
    return _scalarize(Allocation(p, mu, obj))


def br_fixed_priced(interference, power_budget, unit_prices) -> Allocation:
    """Rate maximization with frozen per-sub-channel prices ``sum_l c_l p_l``."""
    i_eff, budget = _prepare(interference, power_budget)
    c = np.broadcast_to(np.asarray(unit_prices, dtype=float), i_eff.shape)
    if np.any(budget <= 0):
        raise ValueError("power budget must be positive")
    if np.any(c < 0):
        raise ValueError("prices must be nonnegative")
    p, mu, obj = _linear_priced(i_eff, budget, c)
    return _scalarize(Allocation(p, mu, obj))


# -- certification -------------------------------------------------------------


def kkt_residual(kind: str, interference, alloc: Allocation, *, varsigma=None,
                 rate_target=None, power_budget=None, price=None,
                 unit_prices=None) -> np.ndarray:
    """Largest relative KKT violation of ``alloc`` (per leading index).

    Stationarity is checked on active sub-channels, the sign condition on
    inactive ones, and the binding constraint (or complementarity of the
    budget multiplier) on the totals.
    """
    i_eff = np.asarray(interference, dtype=float)
    p = np.asarray(alloc.powers, dtype=float)
    mult = np.asarray(alloc.multiplier, dtype=float)
    lead = i_eff.shape[:-1]
    active = p > 0

    def bc(v):
        return np.broadcast_to(np.asarray(v, dtype=float), lead)

    if kind == OPPORTUNISTIC:
        vs = bc(varsigma)
        stat = np.abs(2.0 * mult[..., None] * p * i_eff ** 2 - 1.0)
        slack = np.abs(((p * i_eff) ** 2).sum(axis=-1) - vs) / vs
        return np.maximum(stat.max(axis=-1), slack)

    if kind in (POWER_MIN, WATERFILL):
        nu = mult[..., None]
        # active: p + I = nu; inactive: I >= nu
        stat = np.where(active, np.abs(p + i_eff - nu) / nu, np.maximum(nu - i_eff, 0) / nu)
        if kind == WATERFILL:
            b = bc(power_budget)
            total = np.abs(p.sum(axis=-1) - b) / b
        else:
            r = bc(rate_target)
            total = np.abs(np.log1p(p / i_eff).sum(axis=-1) - r) / r
        return np.maximum(stat.max(axis=-1), total)

    if kind in (PRICED, FIXED_PRICED):
        b = bc(power_budget)
        if kind == PRICED:
            c = bc(price)[..., None] * i_eff
        else:
            c = np.broadcast_to(np.asarray(unit_prices, dtype=float), i_eff.shape)
        mu = mult[..., None]
        grad = 1.0 / (i_eff + p) - c
        scale = 1.0 / i_eff
        stat = np.where(active, np.abs(grad - mu), np.maximum(grad - mu, 0)) / scale
        total = p.sum(axis=-1)
        over = np.maximum(total - b, 0) / b
        slack = np.where(mult > 0, np.abs(total - b) / b, 0.0)
        neg = np.maximum(-mult, 0)
        return np.maximum(np.maximum(stat.max(axis=-1), over), np.maximum(slack, neg))

    raise ValueError(f"unknown best-response kind {kind!r}")
