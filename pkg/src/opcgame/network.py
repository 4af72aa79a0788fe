"""Physical-layer data model for multi-carrier interference channels.

Scenarios are stored in normalized form: every gain is divided by the
receiver's direct gain on the same sub-channel, so ``cross_gain[i, i, l] == 1``
and ``noise[i, l]`` is the normalized noise power.  Indices are 0-based; user
``i`` here is user ``i + 1`` in 1-based notation.

Rates are in nats (natural logarithm).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

DEFAULT_NOISE = 0.01


def default_ceiling(receiver: int) -> float:
    """Cross-gain ceiling ``0.1 / i`` for 1-based receiver index ``i``."""
    return 0.1 / receiver


@dataclass(frozen=True, eq=False)
class Scenario:
    """Normalized channel state for ``M`` users on ``L`` sub-channels.

    Attributes
    ----------
    cross_gain : ndarray, shape (M, M, L)
        ``cross_gain[i, j, l]`` is the gain from transmitter ``j`` to
        receiver ``i`` divided by the direct gain of receiver ``i``.
    noise : ndarray, shape (M, L)
        Noise power divided by the direct gain.
    seed : int or None
        Seed the scenario was generated from, if any.
    """

    cross_gain: np.ndarray
    noise: np.ndarray
    seed: Optional[int] = None
    _offdiag: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        g = np.array(self.cross_gain, dtype=float)
        eta = np.array(self.noise, dtype=float)
        if g.ndim != 3 or g.shape[0] != g.shape[1]:
            raise ValueError(f"cross_gain must have shape (M, M, L), got {g.shape}")
        m, _, n_sub = g.shape
        if eta.shape != (m, n_sub):
            raise ValueError(f"noise must have shape {(m, n_sub)}, got {eta.shape}")
        idx = np.arange(m)
        if not np.allclose(g[idx, idx, :], 1.0, rtol=0, atol=1e-12):
            raise ValueError("normalized direct gains must equal 1")
        if np.any(g < 0):
            raise ValueError("cross gains must be nonnegative")
        if np.any(eta <= 0):
            raise ValueError("noise powers must be strictly positive")
        g[idx, idx, :] = 1.0
        offdiag = g.copy()
        offdiag[idx, idx, :] = 0.0
        for arr in (g, eta, offdiag):
            arr.setflags(write=False)
        object.__setattr__(self, "cross_gain", g)
        object.__setattr__(self, "noise", eta)
        object.__setattr__(self, "_offdiag", offdiag)

    @classmethod
    def from_raw(cls, gain, noise, seed=None) -> "Scenario":
        """Build a scenario from raw gains ``gain[i, j, l]`` and noise ``noise[i, l]``."""
        gain = np.asarray(gain, dtype=float)
        noise = np.asarray(noise, dtype=float)
        if gain.ndim != 3 or gain.shape[0] != gain.shape[1]:
            raise ValueError(f"gain must have shape (M, M, L), got {gain.shape}")
        idx = np.arange(gain.shape[0])
        direct = gain[idx, idx, :]
        if np.any(direct <= 0):
            raise ValueError("direct gains must be strictly positive")
        return cls(gain / direct[:, None, :], noise / direct, seed=seed)

    @property
    def num_users(self) -> int:
        return self.cross_gain.shape[0]

    @property
    def num_subchannels(self) -> int:
        return self.cross_gain.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.num_users, self.num_subchannels)

    @property
    def interference_gain(self) -> np.ndarray:
        """Cross gains with the direct terms zeroed, shape (M, M, L)."""
        return self._offdiag

    def check_profile(self, profile) -> np.ndarray:
        p = np.asarray(profile, dtype=float)
        if p.shape != self.shape:
            raise ValueError(f"power profile must have shape {self.shape}, got {p.shape}")
        if np.any(p < 0):
            raise ValueError("transmit powers must be nonnegative")
        return p

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "users": self.num_users,
            "subchannels": self.num_subchannels,
            "normalized_cross_gains": self.cross_gain.tolist(),
            "normalized_noise": self.noise.tolist(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        try:
            g = np.asarray(data["normalized_cross_gains"], dtype=float)
            eta = np.asarray(data["normalized_noise"], dtype=float)
            m, n_sub = int(data["users"]), int(data["subchannels"])
        except KeyError as exc:
            raise ValueError(f"scenario JSON is missing field {exc}") from None
        if g.shape != (m, m, n_sub):
            raise ValueError(
                f"normalized_cross_gains has shape {g.shape}, expected {(m, m, n_sub)}")
        return cls(g, eta, seed=data.get("seed"))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class UserParams:
    """Per-user game parameters; each field is a length-M array or None.

    ``varsigma`` bounds the weighted power sum of the opportunistic game,
    ``rate_target`` is the rate floor of the power-minimization game,
    ``power_budget`` and ``price`` drive the waterfilling games,
    ``target_sinr`` and ``opc_constant`` the single-carrier iterations.
    """

    varsigma: Optional[np.ndarray] = None
    rate_target: Optional[np.ndarray] = None
    power_budget: Optional[np.ndarray] = None
    price: Optional[np.ndarray] = None
    target_sinr: Optional[np.ndarray] = None
    opc_constant: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("varsigma", "rate_target", "power_budget", "price",
                     "target_sinr", "opc_constant"):
            value = getattr(self, name)
            if value is not None:
                arr = np.atleast_1d(np.asarray(value, dtype=float))
                if arr.ndim != 1:
                    raise ValueError(f"{name} must be one-dimensional")
                if name == "price":
                    if np.any(arr < 0):
                        raise ValueError("prices must be nonnegative")
                elif np.any(arr <= 0):
                    raise ValueError(f"{name} must be strictly positive")
                setattr(self, name, arr)

    @classmethod
    def uniform(cls, num_users: int, **values) -> "UserParams":
        """Same scalar value for every user, e.g. ``UserParams.uniform(5, varsigma=1e-4)``."""
        return cls(**{k: np.full(num_users, float(v)) for k, v in values.items()})

    def require(self, name: str, num_users: int) -> np.ndarray:
        value = getattr(self, name)
        if value is None:
            raise ValueError(f"parameter {name!r} is required for this game")
        if value.shape != (num_users,):
            raise ValueError(f"{name} must have length {num_users}, got {value.shape[0]}")
        return value

    def to_dict(self) -> dict:
        return {k: v.tolist() for k, v in self.__dict__.items() if v is not None}


# -- primitive quantities ------------------------------------------------------


def interference(scenario: Scenario, profile) -> np.ndarray:
    """Effective interference for every user and sub-channel, shape (M, L).

    ``I[i, l] = sum_{j != i} cross_gain[i, j, l] * p[j, l] + noise[i, l]``.
    """
    p = scenario.check_profile(profile)
    return np.einsum("ijl,jl->il", scenario.interference_gain, p) + scenario.noise


def _check_index(value: int, bound: int, what: str) -> int:
    if not isinstance(value, (int, np.integer)) or not 0 <= value < bound:
        raise IndexError(f"{what} index {value!r} out of range [0, {bound})")
    return int(value)


def effective_interference(scenario: Scenario, profile, user: int, subchannel: int) -> float:
    """Effective interference seen by ``user`` on ``subchannel``."""
    i = _check_index(user, scenario.num_users, "user")
    l = _check_index(subchannel, scenario.num_subchannels, "subchannel")
    p = scenario.check_profile(profile)
    return float(scenario.interference_gain[i, :, l] @ p[:, l] + scenario.noise[i, l])


def sinr(scenario: Scenario, profile, user: int, subchannel: int) -> float:
    p = scenario.check_profile(profile)
    i_eff = effective_interference(scenario, p, user, subchannel)
    return float(p[user, subchannel] / i_eff)


def sinr_matrix(scenario: Scenario, profile) -> np.ndarray:
    p = scenario.check_profile(profile)
    return p / interference(scenario, p)


def rates(scenario: Scenario, profile) -> np.ndarray:
    """Per-user total rate in nats, shape (M,)."""
    return np.log1p(sinr_matrix(scenario, profile)).sum(axis=1)


def user_rate(scenario: Scenario, profile, user: int) -> float:
    """Total rate of ``user`` summed over sub-channels, in nats."""
    i = _check_index(user, scenario.num_users, "user")
    return float(rates(scenario, profile)[i])


# -- scenario construction -----------------------------------------------------


def generate_scenario(seed: int, num_users: int = 5, num_subchannels: int = 20,
                      ceiling: Callable[[int], float] = default_ceiling,
                      noise_level: float = DEFAULT_NOISE) -> Scenario:
    """Random normalized scenario.

    Cross gains into receiver ``i`` (1-based) are drawn uniformly from
    ``(0, ceiling(i))``; direct gains are 1 and every noise entry equals
    ``noise_level``.  The result depends only on the arguments.
    """
    if num_users < 1 or num_subchannels < 1:
        raise ValueError("num_users and num_subchannels must be positive")
    if noise_level <= 0:
        raise ValueError("noise_level must be positive")
    rng = np.random.default_rng(seed)
    m, n_sub = int(num_users), int(num_subchannels)
    ceilings = np.array([ceiling(i + 1) for i in range(m)], dtype=float)
    if np.any(ceilings < 0):
        raise ValueError("cross-gain ceilings must be nonnegative")
    # 1 - U lies in (0, 1], so draws never hit the closed lower end
    u = 1.0 - rng.random((m, m, n_sub))
    g = u * ceilings[:, None, None]
    idx = np.arange(m)
    g[idx, idx, :] = 1.0
    return Scenario(g, np.full((m, n_sub), float(noise_level)), seed=seed)


def scale_user_channels(scenario: Scenario, user: int, factor: float) -> Scenario:
    """Multiply ``user``'s direct gains by ``factor``.

    In normalized form this divides the user's noise and every gain into its
    receiver by ``factor``; the interference it causes to others is unchanged.
    """
    if not factor > 0:
        raise ValueError(f"scaling factor must be positive, got {factor}")
    i = _check_index(user, scenario.num_users, "user")
    g = scenario.cross_gain.copy()
    eta = scenario.noise.copy()
    g[i] /= factor
    g[i, i, :] = 1.0
    eta[i] /= factor
    return replace(scenario, cross_gain=g, noise=eta)
