"""Tendon-driven finger statics and wrapping kinematics.

Phalanges are numbered base to tip. Pressures are line pressures (N/m)
and L_j is indexed 0..n, so pressure entry j+1 belongs to L_j.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from errors import DomainError, PhalanxIndexError, UndefinedContactError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhalanxChain:
    """Geometry of one finger.

    Args:
        lengths: per-phalanx length in meters, base to tip
        pulley_radius: radius of the identical joint pulleys (m)
        opening_spring_stiffness: passive opening spring per joint (N*m/rad)
        joint_limit: maximum flexion per joint (rad)
    """
    lengths: Tuple[float, ...]
    pulley_radius: float = 0.005
    opening_spring_stiffness: float = 0.01
    joint_limit: float = math.pi / 2

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(float(l) for l in self.lengths))
        if len(self.lengths) < 1:
            raise DomainError("phalanx chain needs n >= 1 phalanges")
        for index, length in enumerate(self.lengths):
            if not length > 0:
                raise DomainError(f"phalanx lengths must be > 0 (got {length} at index {index})")
        if not self.pulley_radius > 0:
            raise DomainError(f"pulley_radius must be > 0 (got {self.pulley_radius})")
        if not self.pulley_radius < min(self.lengths) / 2:
            raise DomainError(
                f"pulley_radius must be < min(lengths)/2 = {min(self.lengths) / 2} "
                f"(got {self.pulley_radius})"
            )
        if self.opening_spring_stiffness < 0:
            raise DomainError("opening_spring_stiffness must be >= 0")
        if not 0 < self.joint_limit <= math.pi:
            raise DomainError(f"joint_limit must be in (0, pi] (got {self.joint_limit})")

    @property
    def n(self) -> int:
        return len(self.lengths)

    @property
    def is_uniform(self) -> bool:
        return all(l == self.lengths[0] for l in self.lengths)

    @classmethod
    def uniform(cls, n: int = 4, length: float = 0.03, **kwargs) -> "PhalanxChain":
        """Chain of n identical phalanges."""
        if n < 1:
            raise DomainError(f"phalanx chain needs n >= 1 phalanges (got {n})")
        return cls(lengths=(length,) * n, **kwargs)


@dataclass(frozen=True)
class PressureProfile:
    pressures: Tuple[float, ...]
    joint_torque: float


@dataclass(frozen=True)
class WrapState:
    """Kinematic state of a finger closed on a target.

    tendon_takeup is the plate travel at which the finger blocks on the
    target; it is infinite for a finger that touches nothing.
    """
    joint_angles: Tuple[float, ...]
    contact_flags: Tuple[bool, ...]
    contact_arcs: Tuple[float, ...]
    tendon_takeup: float = math.inf

    @property
    def contact_count(self) -> int:
        return sum(self.contact_flags)

    @property
    def blocked(self) -> bool:
        return math.isfinite(self.tendon_takeup)


def joint_torque(pulley_radius: float, tension: float) -> float:
    """Torque produced at every joint by the tether tension."""
    if not pulley_radius > 0:
        raise DomainError(f"pulley_radius must be > 0 (got {pulley_radius})")
    if tension < 0:
        raise DomainError(f"tension must be >= 0, tethers cannot push (got {tension})")
    return pulley_radius * tension


def moment_sum(lengths: Sequence[float], j: int) -> float:
    """L_j: the moment sum that converts joint torque into pressure.

    Args:
        lengths: phalanx lengths l_1..l_n, base to tip
        j: joint index 0..n

    Returns:
        Sum over p = 0..n-1-j of (l_n + ... + l_{n-p}) * l_{n-p}, in m^2.
        Zero for j = n.
    """
    n = len(lengths)
    if j < 0 or j > n:
        raise PhalanxIndexError(f"moment_sum index j must be in 0..{n} (got {j})")
    total = 0.0
    tip_span = 0.0
    for p in range(n - j):
        l_np = lengths[n - 1 - p]
        tip_span += l_np
        total += tip_span * l_np
    return total


def pressure_profile(chain: PhalanxChain, tension: float,
                     flexion: Optional[Sequence[float]] = None) -> PressureProfile:
    """Per-phalanx line pressure for a given tether tension.

    When joint flexions are supplied the opening springs subtract
    k_open * theta from the torque at each joint (floored at zero).
    Uniform chains use the closed form.
    """
    tau = joint_torque(chain.pulley_radius, tension)
    if flexion is not None and len(flexion) != chain.n:
        raise DomainError(f"expected {chain.n} joint flexions (got {len(flexion)})")

    pressures = []
    for j in range(chain.n):
        tau_j = tau
        if flexion is not None:
            tau_j = max(0.0, tau - chain.opening_spring_stiffness * flexion[j])
        if chain.is_uniform:
            pressures.append(equal_length_pressure(tau_j, chain.lengths[0], chain.n, j))
        else:
            pressures.append(tau_j / moment_sum(chain.lengths, j))
    return PressureProfile(pressures=tuple(pressures), joint_torque=tau)


def equal_length_pressure(tau: float, l: float, n: int, j: int) -> float:
    """Closed form of the pressure on phalanx j+1 when all phalanges match."""
    if not l > 0:
        raise DomainError(f"phalanx length l must be > 0 (got {l})")
    if n < 1:
        raise DomainError(f"phalanx count n must be >= 1 (got {n})")
    if j < 0 or j > n - 1:
        raise PhalanxIndexError(f"phalanx index j must be in 0..{n - 1} (got {j})")
    return 2 * tau / (l * l * (n - j) * (n + 1 - j))


def reconstruct_joint_torques(lengths: Sequence[float], pressures: Sequence[float]) -> Tuple[float, ...]:
    """Joint torques implied by a pressure profile.

    Pressure entry k is the one the model assigns to every phalanx
    distal to joint k. Phalanx q then pushes with p_k * l_q, applied at
    its distal end, so its lever about joint k runs from the base of
    phalanx k to the far end of phalanx q.
    """
    lengths = np.asarray(lengths, dtype=float)
    ends = np.cumsum(lengths)
    bases = ends - lengths
    return tuple(float(pressures[k] * np.dot(lengths[k:], ends[k:] - bases[k])) for k in range(len(lengths)))


def wrap_on_sphere(chain: PhalanxChain, sphere_diameter: float, standoff: float) -> WrapState:
    """Close a finger on a sphere as a polygon of chords.

    The finger root sits `standoff` away from the gripper axis, so the
    first contact lies at polar angle asin(2*standoff/D) measured from
    the pole facing the gripper. Phalanx k spans the next chord angle
    2*asin(l_k/D). Contact ends at the first phalanx that does not fit
    the sphere, needs more flexion than the joint limit, or would pass
    the far pole; distal phalanges curl freely to the joint limit.

    Both ends of a contacting phalanx lie on the sphere. Its spines are
    lumped into one point contact on the surface under the chord midpoint
    (contact_arcs); the chord midpoint sits about l^2/(4D) inside the
    surface, which the spine tips bridge.
    """
    if not sphere_diameter > 0:
        raise DomainError(f"sphere_diameter must be > 0 (got {sphere_diameter})")
    if standoff < 0:
        raise DomainError(f"standoff must be >= 0 (got {standoff})")

    radius = sphere_diameter / 2
    polar = math.asin(min(1.0, standoff / radius))
    limit = chain.joint_limit

    joint_angles = []
    contact_flags = []
    contact_arcs = []
    previous_chord = None
    wrapping = True

    for k, length in enumerate(chain.lengths):
        touches = False
        if wrapping and length <= sphere_diameter:
            chord = 2 * math.asin(length / sphere_diameter)
            flexion = chord if previous_chord is None else (previous_chord + chord) / 2
            far_end = polar + chord
            # the base joint is seated by the finger root, not by its limit
            touches = (k == 0 or flexion <= limit) and far_end <= math.pi
        if touches:
            joint_angles.append(min(flexion, limit))
            contact_flags.append(True)
            contact_arcs.append(radius * (polar + chord / 2))
            polar = far_end
            previous_chord = chord
            continue
        wrapping = False
        joint_angles.append(limit)
        contact_flags.append(False)
        contact_arcs.append(0.0)

    contacting = [a for a, flag in zip(joint_angles, contact_flags) if flag]
    takeup = chain.pulley_radius * sum(contacting) if contacting else math.inf
    logger.debug("wrap D=%.4f: %d/%d phalanges in contact", sphere_diameter, len(contacting), chain.n)
    return WrapState(
        joint_angles=tuple(joint_angles),
        contact_flags=tuple(contact_flags),
        contact_arcs=tuple(contact_arcs),
        tendon_takeup=takeup,
    )


def per_spine_normal(pressure: float, phalanx_length: float, spines_in_contact: int) -> float:
    """Normal force on each spine of a phalanx."""
    if spines_in_contact < 1:
        raise UndefinedContactError(f"spines_in_contact must be >= 1 (got {spines_in_contact})")
    return pressure * phalanx_length / spines_in_contact
