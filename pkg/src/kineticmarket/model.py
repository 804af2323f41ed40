"""Core market model: parameters, the behavioral value function, and the
microscopic binary interaction rules for opinions and prices.

A market of two trader populations. Chartists carry an investment
propensity y in [-1, 1] (positive = buyer) and revise it through binary
compromise interactions weighted by a herding function H(y), plus a
coupling to the price trend through a bounded value function Phi.
Fundamentalists react to deviations of the price from a fundamental
value S_F. Prices move with the mean propensity Y and multiplicative
noise. Everything in this module is a pure function; ensembles are plain
value containers mutated only by the simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ParameterError(ValueError):
    """An invalid model or configuration parameter; carries the key name."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ValueFunctionSpec:
    """Shape of the bounded response to the relative price trend dS/dt / S.

    Phi(x) = tanh(L_gain * (x - R)) for x >= R and tanh(L_loss * (x - R))
    below.  Zero at the reference point R, strictly increasing, concave on
    the gain side and convex on the loss side, range (-1, 1).  L_loss >=
    L_gain makes losses loom larger than gains.
    """

    R: float = 0.0
    L_gain: float = 1.0
    L_loss: float = 2.0

    def __post_init__(self):
        if not self.L_gain > 0:
            raise ParameterError("value_fn.l_gain", "must be > 0")
        if not self.L_loss > 0:
            raise ParameterError("value_fn.l_loss", "must be > 0")
        if self.L_loss < self.L_gain:
            raise ParameterError(
                "value_fn.l_loss", "loss slope must be >= gain slope (loss aversion)"
            )
        if not math.isfinite(self.R):
            raise ParameterError("value_fn.r", "must be finite")


@dataclass(frozen=True)
class ModelParams:
    """All scalar model constants.

    The diffusion exponent and the fundamentalist reaction strength are
    both called gamma in the literature; here they are gamma_D and
    gamma_F.  Noise laws for the opinion and price perturbations are
    zero-mean with variances sigma2 and zeta2; the law itself (uniform or
    truncated Gaussian) only matters at finite interaction strength.
    """

    alpha1: float = 0.3        # weight of others' opinions, in [0, 1]
    alpha2: float = 0.2        # weight of the price-trend value function
    beta: float = 1.0          # price speed of evaluation
    sigma2: float = 0.05       # opinion noise variance
    zeta2: float = 0.05        # price noise variance
    a: float = 0.2             # herding offset
    b: float = 0.5             # herding slope
    gamma_D: float = 1.0       # diffusion-function exponent
    gamma_F: float = 1.0       # fundamentalist reaction strength
    rho: float = 0.5           # chartist number density
    rho_F: float = 0.5         # fundamentalist number density
    S_F: float = 1.0           # fundamental price
    t_C: float = 1.0           # time constant in the crash fixed-point condition
    value_fn: ValueFunctionSpec = field(default_factory=ValueFunctionSpec)
    noise_law: str = "uniform"  # "uniform" | "truncated_gaussian"

    def __post_init__(self):
        def req(cond, key, msg):
            if not cond:
                raise ParameterError(key, msg)

        req(0 <= self.alpha1 <= 1, "model.alpha1", "must be in [0, 1]")
        req(0 <= self.alpha2 <= 1, "model.alpha2", "must be in [0, 1]")
        req(self.alpha1 + self.alpha2 <= 1 + 1e-15, "model.alpha1",
            "alpha1 + alpha2 must be <= 1")
        req(self.beta > 0, "model.beta", "must be > 0")
        req(self.sigma2 >= 0, "model.sigma2", "must be >= 0")
        req(self.zeta2 >= 0, "model.zeta2", "must be >= 0")
        req(self.a >= 0, "model.a", "must be >= 0")
        req(self.b > 0, "model.b", "must be > 0")
        req(self.a + self.b <= 1, "model.a", "a + b must be <= 1")
        req(self.gamma_D > 0, "model.gamma_d", "must be > 0")
        req(self.gamma_F >= 0, "model.gamma_f", "must be >= 0")
        req(self.rho > 0, "model.rho", "must be > 0")
        req(self.rho_F >= 0, "model.rho_f", "must be >= 0")
        req(self.S_F > 0, "model.s_f", "must be > 0")
        req(self.t_C > 0, "model.t_c", "must be > 0")
        req(self.noise_law in ("uniform", "truncated_gaussian"),
            "model.noise_law", "must be 'uniform' or 'truncated_gaussian'")

    def scaled(self, eps: float) -> "ModelParams":
        """Quasi-invariant scaling: interaction strengths and noise
        variances shrink by eps while the horizon stretches by 1/eps."""
        if not 0 < eps <= 1:
            raise ParameterError("mc.scale_eps", "must be in (0, 1]")
        return ModelParams(
            alpha1=self.alpha1 * eps, alpha2=self.alpha2 * eps,
            beta=self.beta * eps, sigma2=self.sigma2 * eps,
            zeta2=self.zeta2 * eps, a=self.a, b=self.b,
            gamma_D=self.gamma_D, gamma_F=self.gamma_F,
            rho=self.rho, rho_F=self.rho_F, S_F=self.S_F, t_C=self.t_C,
            value_fn=self.value_fn, noise_law=self.noise_law,
        )


def herding(y, a: float, b: float):
    """H(y) = a + b*(1 - |y|): interaction weight, strongest for undecided
    agents.  Accepts scalars or arrays."""
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) > 1):
        raise ValueError("opinion outside [-1, 1]")
    out = a + b * (1.0 - np.abs(y))
    return float(out) if out.ndim == 0 else out


def diffusion(y, gamma_D: float):
    """D(y) = (1 - y^2)^gamma_D: noise amplitude, vanishing at y = +-1."""
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) > 1):
        raise ValueError("opinion outside [-1, 1]")
    out = (1.0 - y * y) ** gamma_D
    return float(out) if out.ndim == 0 else out


def value_function(x, spec: ValueFunctionSpec):
    """Bounded two-branch response Phi(x) to the relative price trend."""
    x = np.asarray(x, dtype=float)
    r = x - spec.R
    out = np.tanh(np.where(r >= 0, spec.L_gain, spec.L_loss) * r)
    return float(out) if out.ndim == 0 else out


# Variance of a standard normal truncated to +-3 sigma.
_TRUNC3_VAR = 1.0 - 6.0 * math.exp(-4.5) / math.sqrt(2 * math.pi) / (math.erf(3 / math.sqrt(2)))


def sample_noise(rng: np.random.Generator, variance: float, size: int,
                 law: str = "uniform") -> np.ndarray:
    """Draw zero-mean noise with the requested variance.

    "uniform" is uniform on [-sqrt(3 var), +sqrt(3 var)];
    "truncated_gaussian" is a +-3 sigma truncated normal rescaled so the
    realized law has the requested variance.  Bounded support keeps the
    rejection rate of the interaction rules low.
    """
    if variance < 0:
        raise ValueError("noise variance must be >= 0")
    if variance == 0:
        return np.zeros(size)
    if law == "uniform":
        half = math.sqrt(3.0 * variance)
        return rng.uniform(-half, half, size)
    if law == "truncated_gaussian":
        sd = math.sqrt(variance / _TRUNC3_VAR)
        x = rng.normal(0.0, sd, size)
        bad = np.abs(x) > 3.0 * sd
        while bad.any():
            x[bad] = rng.normal(0.0, sd, int(bad.sum()))
            bad = np.abs(x) > 3.0 * sd
        return x
    raise ValueError(f"unknown noise law {law!r}")


@dataclass
class AgentEnsemble:
    """Monte Carlo sample of opinion states; total mass weight*len(y) = rho."""

    y: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        if self.y.size < 2:
            raise ValueError("need at least 2 agents for binary interactions")
        if np.any(np.abs(self.y) > 1):
            raise ValueError("opinion outside [-1, 1]")

    @classmethod
    def uniform(cls, n: int, rho: float, rng: np.random.Generator,
                lo: float = -1.0, hi: float = 1.0) -> "AgentEnsemble":
        return cls(rng.uniform(lo, hi, n), weight=rho / n)


@dataclass
class PriceEnsemble:
    """Monte Carlo sample of prices; weight normalizes to a probability
    density (weight = 1/len(s))."""

    s: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        if self.s.size < 1:
            raise ValueError("empty price ensemble")
        if np.any(self.s < 0):
            raise ValueError("negative price sample")


def mean_propensity(ensemble: AgentEnsemble) -> float:
    """Sample mean of y: the Monte Carlo estimate of Y(t)."""
    if ensemble.y.size == 0:
        raise ValueError("empty ensemble")
    return float(ensemble.y.mean())


def mean_price(ensemble: PriceEnsemble) -> float:
    if ensemble.s.size == 0:
        raise ValueError("empty ensemble")
    return float(ensemble.s.mean())


def second_moment(ensemble: PriceEnsemble) -> float:
    if ensemble.s.size == 0:
        raise ValueError("empty ensemble")
    return float((ensemble.s ** 2).mean())


def interact_opinions(y, y_star, phi, eta, eta_star, params: ModelParams):
    """Apply the binary opinion rule; reject pairs that leave [-1, 1].

    y'  = (1 - a1 H(y) - a2) y  + a1 H(y) y* + a2 phi + D(y) eta   (and
    symmetrically for y*').  Returns (y_new, y_star_new, accepted); where
    a pair is rejected the inputs are passed through unchanged, which is
    the null event the indicator in the collision kernel encodes.
    Vectorized: all arguments may be arrays of equal shape.
    """
    scalar = np.ndim(y) == 0 and np.ndim(y_star) == 0
    y = np.asarray(y, dtype=float)
    y_star = np.asarray(y_star, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(np.abs(y) > 1) or np.any(np.abs(y_star) > 1):
        raise ValueError("opinion outside [-1, 1]")
    if np.any(np.abs(phi) > 1):
        raise ValueError("value function output outside [-1, 1]")
    a1, a2 = params.alpha1, params.alpha2
    h = herding(y, params.a, params.b)
    h_star = herding(y_star, params.a, params.b)
    y_post = (1 - a1 * h - a2) * y + a1 * h * y_star + a2 * phi \
        + diffusion(y, params.gamma_D) * eta
    ys_post = (1 - a1 * h_star - a2) * y_star + a1 * h_star * y + a2 * phi \
        + diffusion(y_star, params.gamma_D) * eta_star
    ok = (np.abs(y_post) <= 1) & (np.abs(ys_post) <= 1)
    y_new = np.where(ok, y_post, y)
    ys_new = np.where(ok, ys_post, y_star)
    if scalar:
        return float(y_new), float(ys_new), bool(ok)
    return y_new, ys_new, ok


def update_price(s, Y: float, eta, params: ModelParams):
    """Apply the price adjustment rule; reject updates below zero.

    s' = s + beta*(rho*Y*s + rho_F*gamma_F*(S_F - s)) + eta*s.  The pure
    chartist rule is the special case rho_F = 0.  Returns (s_new,
    accepted) with rejected samples passed through unchanged.
    """
    scalar = np.ndim(s) == 0
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("negative price on input")
    if abs(Y) > 1:
        raise ValueError("mean propensity outside [-1, 1]")
    s_post = s + params.beta * (params.rho * Y * s
                                + params.rho_F * params.gamma_F * (params.S_F - s)) \
        + eta * s
    ok = s_post >= 0
    s_new = np.where(ok, s_post, s)
    if scalar:
        return float(s_new), bool(ok)
    return s_new, ok
