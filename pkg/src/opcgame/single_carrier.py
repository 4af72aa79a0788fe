"""Classical single-carrier power control: target-SINR tracking and OPC.

Both updates act on a single-carrier scenario (``L == 1``); profiles are
``(M, 1)`` arrays so they share the engine with the multi-carrier games.
"""
from __future__ import annotations

import numpy as np

from .analysis import spectral_radius
from .network import Scenario, interference


def _single(scenario: Scenario) -> None:
    if scenario.num_subchannels != 1:
        raise ValueError("single-carrier updates need exactly one sub-channel")


def _per_user(values, scenario: Scenario, name: str) -> np.ndarray:
    v = np.broadcast_to(np.asarray(values, dtype=float), (scenario.num_users,))
    if np.any(v <= 0):
        raise ValueError(f"{name} must be strictly positive")
    return v


def tpc_step(scenario: Scenario, profile, targets) -> np.ndarray:
    """One target-SINR tracking update, ``p_i <- target_i * I_i``.

    Equal to ``(target_i / sinr_i) * p_i`` whenever ``p_i > 0``, and still
    defined from a zero profile.
    """
    _single(scenario)
    gamma = _per_user(targets, scenario, "target SINR")
    return gamma[:, None] * interference(scenario, profile)


def opc_step(scenario: Scenario, profile, constants) -> np.ndarray:
    """One opportunistic update, ``p_i <- zeta_i / I_i``."""
    _single(scenario)
    zeta = _per_user(constants, scenario, "OPC constant")
    return zeta[:, None] / interference(scenario, profile)


def tpc_gain_matrix(scenario: Scenario, targets) -> np.ndarray:
    """``diag(targets) @ F`` with ``F`` the normalized cross-gain matrix."""
    _single(scenario)
    gamma = _per_user(targets, scenario, "target SINR")
    return gamma[:, None] * scenario.interference_gain[:, :, 0]


def tpc_feasible(scenario: Scenario, targets) -> tuple[bool, float]:
    """Whether all SINR targets can be met, with the deciding spectral radius.

    Feasible iff ``rho(diag(targets) F) < 1``; the minimal power vector then
    solves ``p = diag(targets) (F p + noise)``.
    """
    rho = spectral_radius(tpc_gain_matrix(scenario, targets))
    return rho < 1.0, rho


def tpc_solution(scenario: Scenario, targets) -> np.ndarray:
    """Direct solve of ``(I - diag(targets) F) p = diag(targets) noise``."""
    gamma = _per_user(targets, scenario, "target SINR")
    a = np.eye(scenario.num_users) - tpc_gain_matrix(scenario, gamma)
    return np.linalg.solve(a, gamma * scenario.noise[:, 0])[:, None]
