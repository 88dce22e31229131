"""Microspine and asperity contact model.

A spine latched on an asperity of slope beta sees an amplified friction
coefficient. Its holding force combines the finger's normal push with
the tangential pull of the sliding finger base.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import stats

from errors import DomainError, SelfLockingAsperityError

logger = logging.getLogger(__name__)

# Holding force used in place of an unbounded (self-locking) one
SELF_LOCK_CAP_N = 1e4


class ContactMode(str, Enum):
    """How the normal term of the holding force is built."""
    LITERAL = "literal"         # r*T/L_j exactly as printed
    CONSISTENT = "consistent"   # line pressure * length / spines


class SlipOutcome(str, Enum):
    HOLDS = "holds"
    SLIPS = "slips"


@dataclass(frozen=True)
class AsperityModel:
    """Friction of the bare surface plus the asperity slope distribution.

    Angles are in radians. `distribution` is "uniform" (on
    [beta_low, beta_max]) or "truncnorm" (mean/sd truncated to
    [beta_low, beta_max]).
    """
    base_friction: float = 0.4
    distribution: str = "uniform"
    beta_max: float = math.radians(40)
    beta_low: float = 0.0
    mean: Optional[float] = None
    sd: Optional[float] = None

    def __post_init__(self):
        if not self.base_friction > 0:
            raise DomainError(f"base friction mu must be > 0 (got {self.base_friction})")
        if self.distribution not in ("uniform", "truncnorm"):
            raise DomainError(f"unknown asperity distribution '{self.distribution}'")
        if not 0 <= self.beta_low <= self.beta_max:
            raise DomainError(f"asperity support must satisfy 0 <= beta_low <= beta_max "
                              f"(got [{self.beta_low}, {self.beta_max}])")
        if not self.beta_max < math.atan(1 / self.base_friction):
            raise DomainError(f"beta_max must be < atan(1/mu) = {math.atan(1 / self.base_friction):.6f} rad "
                              f"(got {self.beta_max})")
        if self.distribution == "truncnorm":
            if self.mean is None or self.sd is None or not self.sd > 0:
                raise DomainError("truncnorm asperity distribution needs a mean and sd > 0")

    @classmethod
    def uniform_deg(cls, base_friction: float, beta_max_deg: float, beta_low_deg: float = 0.0) -> "AsperityModel":
        return cls(base_friction=base_friction, distribution="uniform",
                   beta_max=math.radians(beta_max_deg), beta_low=math.radians(beta_low_deg))

    @classmethod
    def truncated_normal_deg(cls, base_friction: float, mean_deg: float, sd_deg: float,
                             beta_max_deg: float, beta_low_deg: float = 0.0) -> "AsperityModel":
        return cls(base_friction=base_friction, distribution="truncnorm",
                   beta_max=math.radians(beta_max_deg), beta_low=math.radians(beta_low_deg),
                   mean=math.radians(mean_deg), sd=math.radians(sd_deg))


@dataclass(frozen=True)
class SpineInterface:
    """Spines per phalanx module and their mounting inclination (deg)."""
    spines_per_module: int = 4
    inclination: float = 30.0

    def __post_init__(self):
        if self.spines_per_module < 1:
            raise DomainError(f"spines_per_module must be >= 1 (got {self.spines_per_module})")
        if not 0 < self.inclination < 90:
            raise DomainError(f"spine inclination must be in (0, 90) deg (got {self.inclination})")

    @property
    def beta_min(self) -> float:
        """Smallest asperity slope this spine can latch behind (rad)."""
        return math.radians(max(0.0, 45.0 - self.inclination))

    def engages(self, beta: float) -> bool:
        return beta >= self.beta_min


# Interfaces tested on the bench
INTERFACE_PRESETS = {
    "dual30": SpineInterface(spines_per_module=2, inclination=30.0),
    "quad30": SpineInterface(spines_per_module=4, inclination=30.0),
    "quad15": SpineInterface(spines_per_module=4, inclination=15.0),
}


@dataclass(frozen=True)
class SpineState:
    """One spine: whether it is latched, on which slope (rad), and its n_i / t_i terms."""
    engaged: bool
    current_beta: float
    normal_load: float = 0.0
    tangential_load: float = 0.0

    def __post_init__(self):
        if self.current_beta < 0:
            raise DomainError(f"asperity slope must be >= 0 (got {self.current_beta})")
        if self.normal_load < 0 or self.tangential_load < 0:
            raise DomainError("spine loads must be >= 0")


@dataclass(frozen=True)
class RelatchWindow:
    """Tether tensions (N) at which a slipped spine can latch again."""
    low: float = 190.0
    high: float = 235.0
    rolloff: float = 20.0
    floor: float = 0.0

    def __post_init__(self):
        if not 0 <= self.low < self.high:
            raise DomainError(f"relatch window needs 0 <= low < high (got {self.low}, {self.high})")
        if not self.rolloff > 0:
            raise DomainError(f"relatch rolloff must be > 0 (got {self.rolloff})")
        if not 0 <= self.floor <= 1:
            raise DomainError(f"relatch floor must be in [0, 1] (got {self.floor})")


def effective_friction(mu: float, beta: float) -> float:
    """Friction coefficient of a spine latched on an asperity of slope beta."""
    if not mu > 0:
        raise DomainError(f"mu must be > 0 (got {mu})")
    if beta < 0:
        raise DomainError(f"asperity slope beta must be >= 0 (got {beta})")
    tan_beta = math.tan(beta)
    if mu * tan_beta >= 1 - 1e-12:
        raise SelfLockingAsperityError(f"mu*tan(beta) = {mu * tan_beta:.6g} >= 1: self-locking asperity")
    return (mu + tan_beta) / (1 - mu * tan_beta)


def reaction_force(n_i: float, t_i: float, beta: float) -> float:
    """Reaction of the asperity on the spine; t_i = 0 gives the normal-only form."""
    if n_i < 0 or t_i < 0:
        raise DomainError(f"spine loads must be >= 0 (got n={n_i}, t={t_i})")
    return n_i * math.cos(beta) + t_i * math.sin(beta)


def spine_holding_force(mu: float, alpha: float, beta: float,
                        normal_term: float, tangential_term: float) -> float:
    """Total friction force a latched spine can generate.

    Args:
        mu: base friction coefficient
        alpha: local slope of the target at the contact (rad)
        beta: asperity slope (rad)
        normal_term: per-spine normal push (N), or r*T/L_j in literal mode
        tangential_term: tangential share T/n_a (N)

    Returns:
        mu' * (normal_term*cos(beta) + tangential_term*sin(beta)) * sin(alpha + beta)
    """
    if alpha < 0:
        raise DomainError(f"local slope alpha must be >= 0 (got {alpha})")
    mu_eff = effective_friction(mu, beta)
    return mu_eff * reaction_force(normal_term, tangential_term, beta) * math.sin(alpha + beta)


def capped_holding_force(mu: float, alpha: float, beta: float,
                         normal_term: float, tangential_term: float) -> float:
    """Holding force with self-locking asperities held at SELF_LOCK_CAP_N."""
    try:
        return min(SELF_LOCK_CAP_N, spine_holding_force(mu, alpha, beta, normal_term, tangential_term))
    except SelfLockingAsperityError:
        return SELF_LOCK_CAP_N


def literal_normal_term(pulley_radius: float, tension: float, moment: float) -> float:
    """r*T/L_j as printed. Units are N/m, kept for traceability."""
    return pulley_radius * tension / moment


def slip_check(applied: float, holding: float) -> SlipOutcome:
    """A spine holds only while the applied load is strictly below its capacity."""
    return SlipOutcome.HOLDS if applied < holding else SlipOutcome.SLIPS


def sample_asperity(model: AsperityModel, rng: np.random.Generator) -> float:
    """Draw an asperity slope (rad) from the model's distribution."""
    if model.distribution == "uniform":
        if model.beta_max == model.beta_low:
            return model.beta_low
        return float(rng.uniform(model.beta_low, model.beta_max))
    a = (model.beta_low - model.mean) / model.sd
    b = (model.beta_max - model.mean) / model.sd
    beta = float(stats.truncnorm.rvs(a, b, loc=model.mean, scale=model.sd, random_state=rng))
    return min(max(beta, model.beta_low), model.beta_max)


def relatch_probability(tension: float, window: RelatchWindow) -> float:
    """Chance that a slipped spine finds a new hold at this tether tension.

    One inside [low, high]; outside it falls linearly to the floor over
    `rolloff` newtons.
    """
    if tension < 0:
        raise DomainError(f"tension must be >= 0 (got {tension})")
    if window.low <= tension <= window.high:
        return 1.0
    distance = window.low - tension if tension < window.low else tension - window.high
    ramp = max(0.0, 1.0 - distance / window.rolloff)
    return window.floor + (1.0 - window.floor) * ramp
