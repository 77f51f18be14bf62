"""Adaptive base-station scheduling: Shannon power inversion plus knapsack DP.

Each user either skips (quality 0), transmits the full image directly
(quality 1), or transmits extracted key information (quality alpha < 1).
The power that finishes a d-bit transmission exactly at the deadline T
follows from inverting r = log2(1 + (P*G - L)/N) with T = d/r. Powers are
rounded up to a quantum grid and a dynamic program maximizes total quality
under the station budget.

Quality totals are compared in exact integer arithmetic (alpha as a binary
rational), so the DP and the exhaustive oracle agree bit for bit, including
tie-breaks: direct is preferred over key-info over skip, lower user ids
first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ParameterError, SizeError

BRUTE_FORCE_MAX_USERS = 16
_GRID_EPS = 1e-9  # absorbs float residue when a power lands exactly on a grid line


@dataclass(frozen=True)
class UserRequest:
    id: int
    d_direct: float   # bits for full transmission
    d_keyinfo: float  # bits for key-information transmission
    noise: float      # linear channel noise power

    def __post_init__(self):
        if not 0.0 < self.d_keyinfo < self.d_direct:
            raise ParameterError(
                f"user {self.id}: need 0 < d_keyinfo < d_direct, got "
                f"{self.d_keyinfo} vs {self.d_direct}"
            )
        if self.noise <= 0.0:
            raise ParameterError(f"user {self.id}: noise must be positive")


@dataclass(frozen=True)
class SchedulerParams:
    gain: float
    loss: float
    deadline: float
    p_max: float
    alpha: float
    p_quantum: float

    def __post_init__(self):
        if self.gain <= 0.0:
            raise ParameterError("gain must be positive")
        if self.deadline <= 0.0:
            raise ParameterError("deadline must be positive")
        if self.p_max <= 0.0:
            raise ParameterError("p_max must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError("alpha must be in (0, 1)")
        if self.p_quantum <= 0.0:
            raise ParameterError("p_quantum must be positive")


@dataclass(frozen=True)
class Decision:
    user_id: int
    x: int        # -1 skip, 0 direct, +1 key information
    power: float  # linear; 0 when skipping
    quality: float

    def __post_init__(self):
        if self.x not in (-1, 0, 1):
            raise ParameterError(f"decision x must be -1, 0, or 1, got {self.x}")


@dataclass(frozen=True)
class SchedulePlan:
    decisions: tuple[Decision, ...]
    total_quality: float
    total_power: float


def required_power(d: float, noise: float, gain: float, loss: float, deadline: float) -> float:
    """Power that completes a d-bit transmission exactly at the deadline."""
    if gain <= 0.0 or deadline <= 0.0:
        raise ParameterError("gain and deadline must be positive")
    if d < 0.0:
        raise ParameterError("bit count must be nonnegative")
    if d == 0.0:
        return 0.0
    exponent = d / deadline
    if exponent >= 1024.0:  # 2**exponent overflows float64
        return math.inf
    return (noise * (2.0 ** exponent - 1.0) + loss) / gain


def _grid_units(power: float, quantum: float) -> int:
    if power <= 0.0:
        return 0
    if not math.isfinite(power):
        return -1  # sentinel: unaffordable at any budget
    return max(1, math.ceil(power / quantum - _GRID_EPS))


def _instance_tables(users, params):
    """Per-user grid costs and integer quality scores shared by both solvers."""
    users = sorted(users, key=lambda u: u.id)
    budget = math.floor(params.p_max / params.p_quantum + _GRID_EPS)
    alpha = Fraction(params.alpha)
    s_direct, s_key = alpha.denominator, alpha.numerator
    costs = []
    powers = []
    for u in users:
        p0 = required_power(u.d_direct, u.noise, params.gain, params.loss, params.deadline)
        p1 = required_power(u.d_keyinfo, u.noise, params.gain, params.loss, params.deadline)
        c0 = _grid_units(p0, params.p_quantum)
        c1 = _grid_units(p1, params.p_quantum)
        infeasible = budget + 1
        costs.append((c0 if c0 >= 0 else infeasible, c1 if c1 >= 0 else infeasible))
        powers.append((p0, p1))
    return users, budget, s_direct, s_key, costs, powers


def _plan_from_modes(users, modes, powers, alpha):
    decisions = []
    n_direct = n_key = 0
    total_power = 0.0
    for u, mode, (p0, p1) in zip(users, modes, powers):
        if mode == 0:
            decisions.append(Decision(u.id, 0, p0, 1.0))
            total_power += p0
            n_direct += 1
        elif mode == 1:
            decisions.append(Decision(u.id, 1, p1, alpha))
            total_power += p1
            n_key += 1
        else:
            decisions.append(Decision(u.id, -1, 0.0, 0.0))
    total_quality = n_direct + n_key * alpha
    return SchedulePlan(tuple(decisions), total_quality, total_power)


def optimize(users: list[UserRequest], params: SchedulerParams) -> SchedulePlan:
    """Quality-maximizing assignment via dynamic programming over the power grid."""
    if not users:
        return SchedulePlan((), 0.0, 0.0)
    users, budget, s_direct, s_key, costs, powers = _instance_tables(users, params)
    n = len(users)
    # integer scores keep the value table exact; headroom check guards overflow
    use_numpy = (n + 1) * max(s_direct, s_key) < (1 << 62)
    dtype = np.int64 if use_numpy else object
    levels: list[np.ndarray] = [None] * (n + 1)  # type: ignore[list-item]
    levels[n] = np.zeros(budget + 1, dtype=dtype)
    for i in range(n - 1, -1, -1):
        prev = levels[i + 1]
        cur = prev.copy()
        c0, c1 = costs[i]
        if c0 <= budget:
            cand = prev[:budget + 1 - c0] + s_direct
            cur[c0:] = np.maximum(cur[c0:], cand)
        if c1 <= budget:
            cand = prev[:budget + 1 - c1] + s_key
            cur[c1:] = np.maximum(cur[c1:], cand)
        levels[i] = cur
    # greedy backtrack in preference order yields the canonical optimal plan
    modes = []
    u = budget
    for i in range(n):
        target = levels[i][u]
        c0, c1 = costs[i]
        if c0 <= u and levels[i + 1][u - c0] + s_direct == target:
            modes.append(0)
            u -= c0
        elif c1 <= u and levels[i + 1][u - c1] + s_key == target:
            modes.append(1)
            u -= c1
        else:
            modes.append(-1)
    return _plan_from_modes(users, modes, powers, params.alpha)


def brute_force(users: list[UserRequest], params: SchedulerParams) -> SchedulePlan:
    """Exhaustive 3^n oracle on the same grid and tie-break order as `optimize`."""
    if len(users) > BRUTE_FORCE_MAX_USERS:
        raise SizeError(f"brute force limited to {BRUTE_FORCE_MAX_USERS} users")
    if not users:
        return SchedulePlan((), 0.0, 0.0)
    users, budget, s_direct, s_key, costs, powers = _instance_tables(users, params)
    n = len(users)
    cost_matrix = np.array([[c0, c1, 0] for c0, c1 in costs], dtype=np.int64)
    score_matrix = np.array(
        [[s_direct, s_key, 0] for _ in range(n)], dtype=object
    )
    if (n + 1) * max(s_direct, s_key) < (1 << 62):
        score_matrix = score_matrix.astype(np.int64)
    best_score = -1
    best_code = None
    total = 3 ** n
    place = 3 ** np.arange(n - 1, -1, -1, dtype=np.int64)
    chunk = 1 << 18
    user_idx = np.arange(n)[None, :]
    for lo in range(0, total, chunk):
        codes = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        digits = (codes[:, None] // place[None, :]) % 3  # digit 0 = direct
        cost = cost_matrix[user_idx, digits].sum(axis=1)
        score = score_matrix[user_idx, digits].sum(axis=1)
        feasible = cost <= budget
        if not feasible.any():
            continue
        scores = np.where(feasible, score, -1)
        idx = int(np.argmax(scores))  # first occurrence = preferred tie-break
        if scores[idx] > best_score:
            best_score = scores[idx]
            best_code = int(codes[idx])
    if best_code is None:
        modes = [-1] * n
    else:
        digits = [(best_code // int(p)) % 3 for p in place]
        modes = [{0: 0, 1: 1, 2: -1}[d] for d in digits]
    return _plan_from_modes(users, modes, powers, params.alpha)
