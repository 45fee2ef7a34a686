"""Decreasing step-size schedules and their ergodicity diagnostics.

A schedule is one of three families:

* ``c-over-rho-n``: gamma_k = c / (rho * k),
* ``poly``:         gamma_k = gamma1 * k^{-a} with a in (0, 1],
* ``explicit``:     a user-supplied nonincreasing positive list.

Alongside the steps themselves the module computes the partial sums t_n,
the limsup quantity omega, the theoretical ergodicity constant rho, and
the v_n / n* / windowed-sum sequences used to sanity-check the step-size
decay recurrence numerically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

C_OVER_RHO_N = "c-over-rho-n"
POLYNOMIAL = "poly"
EXPLICIT = "explicit"


@dataclass(frozen=True)
class StepSchedule:
    family: str
    theta: float = 1.0
    c: float | None = None
    rho: float | None = None
    gamma1: float | None = None
    a: float | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")
        if self.family == C_OVER_RHO_N:
            if self.c is None or self.rho is None or self.c <= 0 or self.rho <= 0:
                raise ValueError("c-over-rho-n needs positive c and rho")
        elif self.family == POLYNOMIAL:
            if self.gamma1 is None or self.gamma1 <= 0:
                raise ValueError("poly needs positive gamma1")
            if self.a is None or not 0.0 < self.a <= 1.0:
                raise ValueError("poly needs exponent a in (0, 1]")
        elif self.family == EXPLICIT:
            if not self.values:
                raise ValueError("explicit schedule needs at least one step")
            v = np.asarray(self.values, dtype=float)
            if np.any(v <= 0):
                raise ValueError("explicit steps must be strictly positive")
            if np.any(np.diff(v) > 0):
                raise ValueError("explicit steps must be nonincreasing")
        else:
            raise ValueError(f"unknown schedule family {self.family!r}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def c_over_rho_n(cls, c: float, rho: float, theta: float = 1.0) -> "StepSchedule":
        return cls(family=C_OVER_RHO_N, c=c, rho=rho, theta=theta)

    @classmethod
    def polynomial(cls, gamma1: float, a: float, theta: float = 1.0) -> "StepSchedule":
        return cls(family=POLYNOMIAL, gamma1=gamma1, a=a, theta=theta)

    @classmethod
    def explicit(cls, values, theta: float = 1.0) -> "StepSchedule":
        return cls(family=EXPLICIT, values=tuple(float(v) for v in values), theta=theta)

    # -- evaluation ---------------------------------------------------------

    def gamma_at(self, k: int) -> float:
        """The k-th step size, 1-based."""
        if k < 1:
            raise ValueError("step index is 1-based")
        if self.family == C_OVER_RHO_N:
            return self.c / (self.rho * k)
        if self.family == POLYNOMIAL:
            return self.gamma1 * float(k) ** (-self.a)
        if k > len(self.values):
            raise IndexError(f"explicit schedule has only {len(self.values)} steps")
        return self.values[k - 1]

    def gammas(self, n: int) -> np.ndarray:
        """Steps gamma_1 .. gamma_n as an array."""
        k = np.arange(1, n + 1, dtype=float)
        if self.family == C_OVER_RHO_N:
            return self.c / (self.rho * k)
        if self.family == POLYNOMIAL:
            return self.gamma1 * k ** (-self.a)
        if n > len(self.values):
            raise IndexError(f"explicit schedule has only {len(self.values)} steps")
        return np.asarray(self.values[:n], dtype=float)

    def t_at(self, n: int) -> float:
        """t_n = gamma_1 + ... + gamma_n, compensated summation; t_0 = 0."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        if n == 0:
            return 0.0
        return math.fsum(self.gammas(n))

    def t_grid(self, n: int) -> np.ndarray:
        """[t_0, t_1, ..., t_n] with Kahan running compensation."""
        g = self.gammas(n)
        t = np.empty(n + 1)
        t[0] = 0.0
        total, comp = 0.0, 0.0
        for i, gi in enumerate(g):
            y = gi - comp
            s = total + y
            comp = (s - total) - y
            total = s
            t[i + 1] = total
        return t

    def describe(self) -> str:
        if self.family == C_OVER_RHO_N:
            return f"c-over-rho-n:c={self.c},rho={self.rho},theta={self.theta}"
        if self.family == POLYNOMIAL:
            return f"poly:gamma1={self.gamma1},a={self.a},theta={self.theta}"
        return f"explicit:{len(self.values)} steps,theta={self.theta}"


def omega_of(s: StepSchedule) -> float:
    """limsup_k (gamma_k^theta - gamma_{k+1}^theta) / gamma_{k+1}^{1+theta}.

    Closed form for the built-in families; a tail estimate (last quarter of
    the list) for explicit schedules.
    """
    th = s.theta
    if s.family == C_OVER_RHO_N:
        return th * s.rho / s.c
    if s.family == POLYNOMIAL:
        if s.a < 1.0:
            return 0.0
        return th / s.gamma1
    n = len(s.values)
    if n < 8:
        raise ValueError("explicit schedule too short to estimate omega (need >= 8 steps)")
    g = np.asarray(s.values, dtype=float)
    lo = 3 * n // 4
    gk, gk1 = g[lo:-1], g[lo + 1:]
    ratios = (gk**th - gk1**th) / gk1 ** (1.0 + th)
    return float(ratios.max())


def rho_theory(alpha: float, d: int) -> float:
    """The fully explicit theoretical ergodicity constant d^{2a-4} 2^{-d} exp(-2^d d^{4-2a}).

    Astronomically conservative for d > 1; experiments use a toy rho instead.
    Underflows to 0.0 (with a RuntimeWarning) for large d.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (1, 2), got {alpha}")
    if d < 1:
        raise ValueError("d must be >= 1")
    log_rho = (2 * alpha - 4) * math.log(d) if d > 1 else 0.0
    log_rho += -d * math.log(2.0) - 2.0**d * d ** (4 - 2 * alpha)
    if log_rho < math.log(5e-324):
        warnings.warn("rho_theory underflowed to 0", RuntimeWarning)
        return 0.0
    return math.exp(log_rho)


@dataclass(frozen=True)
class ScheduleDiagnostics:
    omega: float
    rho: float
    theta: float
    n_star: np.ndarray          # n*[n] = max{i : t_n - t_i > 1}, -1 when t_n <= 1
    v: np.ndarray               # v[n], v[0] = 0
    v_over_gamma_theta: np.ndarray
    exp_decay_ratio: np.ndarray  # e^{-rho t_n} / gamma_n^theta
    windowed_sum_ratio: np.ndarray  # sum_{i=n*+1}^{n-1} (t_n-t_i)^{-1/alpha} gamma_i^{1+theta} / gamma_n^theta
    bound: float                # 2/(rho-omega) * exp((rho-omega) gamma_1 / 2)
    t: np.ndarray = field(repr=False, default=None)

    def v_direct(self, n: int) -> float:
        """Direct summation of v_n, for cross-checking the recurrence."""
        g = np.diff(self.t[: n + 1])
        return float(np.sum(g ** (1.0 + self.theta) * np.exp(-self.rho * (self.t[n] - self.t[1 : n + 1]))))


def decay_diagnostics(
    s: StepSchedule, rho: float, n_max: int, alpha: float = 1.5
) -> ScheduleDiagnostics:
    """Sequences probing the step-schedule decay recurrence up to n_max.

    v_n follows the recurrence v_{n+1} = e^{-rho gamma_{n+1}} v_n
    + gamma_{n+1}^{1+theta}; requires rho > omega_of(s).
    """
    omega = omega_of(s)
    if rho <= omega:
        raise ValueError(f"need rho > omega, got rho={rho} <= omega={omega}")
    th = s.theta
    g = s.gammas(n_max)
    t = s.t_grid(n_max)

    v = np.zeros(n_max + 1)
    for n in range(n_max):
        v[n + 1] = math.exp(-rho * g[n]) * v[n] + g[n] ** (1.0 + th)

    gth = g**th
    v_ratio = v[1:] / gth
    decay_ratio = np.exp(-rho * t[1:]) / gth

    # n*[n] = max{i : t_n - t_i > 1}; -1 if no such i (t_n <= 1).
    n_star = np.searchsorted(t, t[1:] - 1.0, side="left") - 1

    win = np.full(n_max, np.nan)
    inv_a = 1.0 / alpha
    for n in range(2, n_max + 1):
        lo = n_star[n - 1] + 1
        if lo < 1:
            lo = 1
        i = np.arange(lo, n)
        if i.size == 0:
            win[n - 1] = 0.0
            continue
        win[n - 1] = np.sum((t[n] - t[i]) ** (-inv_a) * g[i - 1] ** (1.0 + th)) / gth[n - 1]

    bound = 2.0 / (rho - omega) * math.exp((rho - omega) * s.gamma_at(1) / 2.0)
    return ScheduleDiagnostics(
        omega=omega,
        rho=rho,
        theta=th,
        n_star=n_star,
        v=v,
        v_over_gamma_theta=v_ratio,
        exp_decay_ratio=decay_ratio,
        windowed_sum_ratio=win,
        bound=bound,
        t=t,
    )
