"""Uniqueness and convergence certificates for the multi-carrier games.

The opportunistic game has two equivalent sufficient conditions: the Z-matrix
``A`` is a P-matrix, or the nonnegative matrix ``B`` has spectral radius below
one.  The priced waterfilling game is certified by the P-property of ``D``.
All three conditions are sufficient only; a failing test certifies nothing.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .best_response import br_opportunistic
from .network import Scenario

POWER_ITER_TOL = 1e-10
POWER_ITER_MAX = 10_000
MAX_ENUMERATION_SIZE = 20
SIGMA_RELATIVE = 1e-9


class UnsupportedSizeError(ValueError):
    """A general (non-Z) matrix is too large for principal-minor enumeration."""


# -- linear algebra ------------------------------------------------------------


def _square(matrix) -> np.ndarray:
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def perron_root(matrix, tol: float = POWER_ITER_TOL, max_iter: int = POWER_ITER_MAX):
    """Spectral radius of a nonnegative matrix by power iteration.

    Iterates from the all-ones vector and stops once the Collatz-Wielandt
    bounds ``min (Ax)_i/x_i <= rho <= max (Ax)_i/x_i`` agree to ``tol``
    (relative).  Returns None when the bounds stagnate, which happens for
    reducible or periodic matrices.
    """
    a = _square(matrix)
    if np.any(a < 0):
        raise ValueError("power iteration requires a nonnegative matrix")
    n = a.shape[0]
    x = np.ones(n)
    for _ in range(max_iter):
        y = a @ x
        if not np.all(y > 0):
            return None
        ratio = y / x
        lo, hi = ratio.min(), ratio.max()
        if hi - lo <= tol * hi:
            return float(0.5 * (lo + hi))
        x = y / y.max()
    return None


def spectral_radius(matrix) -> float:
    """Largest eigenvalue modulus.

    Nonnegative matrices go through :func:`perron_root`; if that stagnates,
    or the matrix has negative entries, a dense eigen-solve is used.
    """
    a = _square(matrix)
    if a.size == 0:
        return 0.0
    if np.all(a >= 0):
        if not np.any(a):
            return 0.0
        rho = perron_root(a)
        if rho is not None:
            return rho
    return float(np.abs(np.linalg.eigvals(a)).max())


def is_z_matrix(matrix) -> bool:
    a = _square(matrix)
    off = a[~np.eye(a.shape[0], dtype=bool)]
    return bool(np.all(off <= 0))


def principal_minors_positive(matrix) -> bool:
    """Brute-force P-matrix test: every principal minor is positive."""
    a = _square(matrix)
    n = a.shape[0]
    for k in range(1, n + 1):
        for rows in itertools.combinations(range(n), k):
            if np.linalg.det(a[np.ix_(rows, rows)]) <= 0:
                return False
    return True


def is_p_matrix(matrix) -> bool:
    """True iff every principal minor of ``matrix`` is positive.

    Z-matrices use the M-matrix characterization (positive diagonal and
    ``rho(diag(A)^-1 |offdiag(A)|) < 1``), exact and cheap.  Other matrices
    are enumerated up to size 20.
    """
    a = _square(matrix)
    n = a.shape[0]
    if n == 0:
        return True
    if is_z_matrix(a):
        diag = np.diag(a)
        if np.any(diag <= 0):
            return False
        off = -a / diag[:, None]
        np.fill_diagonal(off, 0.0)
        return spectral_radius(off) < 1.0
    if n > MAX_ENUMERATION_SIZE:
        raise UnsupportedSizeError(
            f"P-matrix test of a general {n}x{n} matrix is not supported "
            f"(limit {MAX_ENUMERATION_SIZE})")
    return principal_minors_positive(a)


# -- bounds for the opportunistic game -----------------------------------------


@dataclass
class BoundSet:
    """Per-user, per-sub-channel bounds used by the uniqueness matrices.

    ``p_max`` caps any best-response power, ``i_max`` is the interference when
    every other user transmits at ``p_max``, ``p_min`` is the best response
    when that worst case hits a single sub-channel, and
    ``q_min = (p_min * i_min)**2 - sigma`` lower-bounds ``(p I)**2``.
    """

    p_max: np.ndarray
    i_max: np.ndarray
    i_min: np.ndarray
    p_min: np.ndarray
    q_min: np.ndarray
    sigma: float


def compute_bounds(scenario: Scenario, varsigma, sigma: float | None = None) -> BoundSet:
    vs = np.broadcast_to(np.asarray(varsigma, dtype=float), (scenario.num_users,))
    if np.any(vs <= 0):
        raise ValueError("varsigma must be positive")
    eta = scenario.noise
    p_max = np.sqrt(vs)[:, None] / eta
    i_max = np.einsum("ijl,jl->il", scenario.interference_gain, p_max) + eta

    # worst case for (i, l): I = i_max on l, noise floor elsewhere
    m, n_sub = scenario.shape
    worst = np.repeat(eta[:, None, :], n_sub, axis=1)  # (M, l, k)
    diag = np.arange(n_sub)
    worst[:, diag, diag] = i_max
    alloc = br_opportunistic(worst, vs[:, None])
    p_min = alloc.powers[:, diag, diag]

    base = (p_min * eta) ** 2
    if sigma is None:
        sigma = SIGMA_RELATIVE * float(base.min())
    q_min = np.maximum(base - sigma, 0.0)
    return BoundSet(p_max=p_max, i_max=i_max, i_min=eta.copy(), p_min=p_min,
                    q_min=q_min, sigma=float(sigma))


def _ratio_max(scenario: Scenario) -> np.ndarray:
    """``max_l g[i, j, l] / eta[i, l]`` with a zero diagonal."""
    r = (scenario.interference_gain / scenario.noise[:, None, :]).max(axis=2)
    np.fill_diagonal(r, 0.0)
    return r


def _diag_strength(scenario: Scenario, bounds: BoundSet, vs: np.ndarray) -> np.ndarray:
    return (np.sqrt(bounds.q_min) * scenario.noise).min(axis=1)


def matrix_a(scenario: Scenario, bounds: BoundSet, varsigma) -> np.ndarray:
    """Uniqueness matrix of the opportunistic game (Z-matrix, positive diagonal)."""
    vs = np.broadcast_to(np.asarray(varsigma, dtype=float), (scenario.num_users,))
    a = -3.0 * np.sqrt(vs)[:, None] * _ratio_max(scenario)
    np.fill_diagonal(a, _diag_strength(scenario, bounds, vs) / np.sqrt(vs))
    return a


def matrix_b(scenario: Scenario, bounds: BoundSet, varsigma) -> np.ndarray:
    """Nonnegative zero-diagonal matrix; ``rho(B) < 1`` certifies uniqueness.

    A row whose ``q_min`` vanishes on some sub-channel makes the denominator
    zero; its entries are reported as ``inf`` (the test fails).
    """
    vs = np.broadcast_to(np.asarray(varsigma, dtype=float), (scenario.num_users,))
    strength = _diag_strength(scenario, bounds, vs)
    num = 3.0 * vs[:, None] * _ratio_max(scenario)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.where(num > 0, num / strength[:, None], 0.0)
    np.fill_diagonal(b, 0.0)
    return b


def psi_bounds(scenario: Scenario, power_budgets):
    """Lower and upper interference bounds of the priced game, each (M, L).

    The upper bound sums over every user including ``i`` itself (with unit
    normalized direct gain).
    """
    budgets = np.broadcast_to(np.asarray(power_budgets, dtype=float), (scenario.num_users,))
    lower = scenario.noise.copy()
    upper = np.einsum("ijl,j->il", scenario.cross_gain, budgets) + scenario.noise
    return lower, upper


def matrix_d(scenario: Scenario, power_budgets, prices) -> np.ndarray:
    """Uniqueness/convergence matrix of the priced waterfilling game."""
    m = scenario.num_users
    lam = np.broadcast_to(np.asarray(prices, dtype=float), (m,))
    lower, upper = psi_bounds(scenario, power_budgets)
    g = scenario.interference_gain
    terms = (g * (1.0 + lam[:, None, None] * upper[:, None, :] ** 2)
             * upper[None, :, :] / lower[:, None, :])
    d = -terms.max(axis=2)
    np.fill_diagonal(d, 1.0)
    return d


# -- reports -------------------------------------------------------------------


@dataclass
class AnalysisReport:
    """Condition matrices, bounds and verdicts for one scenario."""

    matrix_a: np.ndarray | None = None
    matrix_b: np.ndarray | None = None
    matrix_d: np.ndarray | None = None
    bounds: BoundSet | None = None
    a_is_p_matrix: bool | None = None
    rho_b: float | None = None
    d_is_p_matrix: bool | None = None
    degenerate_rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def opportunistic_certified(self) -> bool | None:
        return self.a_is_p_matrix

    @property
    def priced_certified(self) -> bool | None:
        return self.d_is_p_matrix

    def to_dict(self) -> dict:
        def mat(x):
            return None if x is None else np.asarray(x).tolist()

        out = {
            "schema_version": 1,
            "matrices": {"A": mat(self.matrix_a), "B": mat(self.matrix_b),
                         "D": mat(self.matrix_d)},
            "verdicts": {
                "A_is_P_matrix": self.a_is_p_matrix,
                "spectral_radius_B": self.rho_b,
                "rho_B_below_one": None if self.rho_b is None else bool(self.rho_b < 1),
                "D_is_P_matrix": self.d_is_p_matrix,
            },
            "degenerate_rows": self.degenerate_rows,
            "notes": self.notes,
        }
        if self.bounds is not None:
            out["bounds"] = {
                "p_max": mat(self.bounds.p_max), "i_max": mat(self.bounds.i_max),
                "p_min": mat(self.bounds.p_min), "q_min": mat(self.bounds.q_min),
            }
            out["sigma"] = self.bounds.sigma
        return out

    def to_json(self) -> str:
        # inf entries (degenerate rows) are not valid JSON numbers
        return json.dumps(self.to_dict(), default=str).replace("Infinity", '"inf"')


def analyze(scenario: Scenario, varsigma=None, power_budgets=None, prices=None,
            sigma: float | None = None) -> AnalysisReport:
    """Evaluate whichever conditions the supplied parameters allow."""
    report = AnalysisReport(notes=[
        "conditions are sufficient, not necessary: a failing test certifies nothing",
    ])
    if varsigma is not None:
        bounds = compute_bounds(scenario, varsigma, sigma)
        report.bounds = bounds
        report.matrix_a = matrix_a(scenario, bounds, varsigma)
        report.matrix_b = matrix_b(scenario, bounds, varsigma)
        report.degenerate_rows = [int(i) for i in np.flatnonzero((bounds.q_min <= 0).any(axis=1))]
        report.a_is_p_matrix = is_p_matrix(report.matrix_a)
        report.rho_b = spectral_radius(report.matrix_b) if np.all(np.isfinite(report.matrix_b)) \
            else float("inf")
    if power_budgets is not None and prices is not None:
        report.matrix_d = matrix_d(scenario, power_budgets, prices)
        report.d_is_p_matrix = is_p_matrix(report.matrix_d)
        report.notes.append(
            "D uses upper interference bounds summed over all users including the user itself")
    return report
