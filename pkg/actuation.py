"""Single-motor drive chain: motor current to per-finger tether tension.

The motor turns a self-locking ball screw that pulls a plate. Each
finger's tether is tied to the plate through a desync spring, so one
plate stroke closes every finger and each finger stops on its own.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from scipy import optimize

from errors import ClosureStateError, DomainError
from finger_mechanics import WrapState

logger = logging.getLogger(__name__)

# Equilibrium tolerance on the tension sum (N)
FORCE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ActuatorModel:
    """Lumped motor, ball screw and desync spring parameters.

    torque_anchors are two (current A, torque N*m) calibration points.
    """
    torque_anchors: Tuple[Tuple[float, float], Tuple[float, float]] = ((0.150, 0.084), (0.275, 0.179))
    ballscrew_pitch: float = 0.001
    efficiency: float = 0.9
    desync_stiffness: float = 1000.0
    max_plate_travel: float = 0.5
    preload: float = 0.0
    self_locking: bool = True

    def __post_init__(self):
        (c1, _), (c2, _) = self.torque_anchors
        if c1 == c2:
            raise DomainError("torque anchors must have distinct currents")
        if not self.ballscrew_pitch > 0:
            raise DomainError(f"ballscrew_pitch must be > 0 (got {self.ballscrew_pitch})")
        if not 0 < self.efficiency <= 1:
            raise DomainError(f"efficiency must be in (0, 1] (got {self.efficiency})")
        if not self.desync_stiffness > 0:
            raise DomainError(f"desync_stiffness must be > 0 (got {self.desync_stiffness})")
        if not self.max_plate_travel > 0:
            raise DomainError(f"max_plate_travel must be > 0 (got {self.max_plate_travel})")
        if self.preload < 0:
            raise DomainError(f"preload must be >= 0 (got {self.preload})")

    @property
    def max_current(self) -> float:
        return 2 * max(c for c, _ in self.torque_anchors)


@dataclass(frozen=True)
class ClosureState:
    plate_displacement: float
    finger_displacements: Tuple[float, ...]
    tensions: Tuple[float, ...]
    motor_torque: float
    locked: bool
    travel_limited: bool = False

    @classmethod
    def open(cls, n_fingers: int) -> "ClosureState":
        """Gripper fully open with nothing in tension."""
        return cls(0.0, (0.0,) * n_fingers, (0.0,) * n_fingers, 0.0, locked=False)

    @property
    def total_tension(self) -> float:
        return math.fsum(self.tensions)


def current_to_torque(current: float, model: ActuatorModel) -> float:
    """Motor torque (N*m) by linear interpolation through the two anchors."""
    if current < 0:
        raise DomainError(f"current must be >= 0 (got {current})")
    if current > model.max_current:
        raise DomainError(f"current must be <= {model.max_current} A (got {current})")
    (c1, t1), (c2, t2) = model.torque_anchors
    if current == c1:
        return t1
    if current == c2:
        return t2
    weight = (current - c1) / (c2 - c1)
    return max(0.0, t1 * (1 - weight) + t2 * weight)


def plate_force(motor_torque: float, model: ActuatorModel) -> float:
    """Axial force of the ball screw on the pulling plate."""
    if motor_torque < 0:
        raise DomainError(f"motor torque must be >= 0 (got {motor_torque})")
    return 2 * math.pi * model.efficiency * motor_torque / model.ballscrew_pitch


def desync_tension(k_spring: float, plate_dz: float, finger_dz: float) -> float:
    """Tether tension from the compression of a finger's desync spring."""
    if finger_dz < 0:
        raise DomainError(f"finger displacement must be >= 0 (got {finger_dz})")
    if finger_dz > plate_dz:
        raise ClosureStateError(
            f"finger displacement {finger_dz} exceeds plate displacement {plate_dz}"
        )
    return k_spring * (plate_dz - finger_dz)


def _tensions_at(plate_dz: float, fingers: Sequence[WrapState], actuator: ActuatorModel) -> Tuple[float, ...]:
    tensions = []
    for finger in fingers:
        stop = min(finger.tendon_takeup, plate_dz)
        tensions.append(actuator.preload + desync_tension(actuator.desync_stiffness, plate_dz, stop))
    return tuple(tensions)


def close_to_equilibrium(fingers: Sequence[WrapState], actuator: ActuatorModel, current: float) -> ClosureState:
    """Drive the plate until the tether tensions balance the screw force.

    Blocked fingers load their desync springs; fingers that touch nothing
    stay at the preload. Returns a travel-limited state when the plate
    reaches max_plate_travel before balance.
    """
    if len(fingers) == 0:
        raise DomainError("close_to_equilibrium needs at least one finger")

    torque = current_to_torque(current, actuator)
    target = plate_force(torque, actuator)

    def imbalance(plate_dz: float) -> float:
        return math.fsum(_tensions_at(plate_dz, fingers, actuator)) - target

    travel = actuator.max_plate_travel
    travel_limited = False
    if imbalance(0.0) >= 0:
        plate_dz = 0.0
    elif imbalance(travel) < 0:
        plate_dz = travel
        travel_limited = True
        logger.warning("plate reached max travel %.3f m before equilibrium", travel)
    else:
        xtol = FORCE_TOLERANCE / (10 * actuator.desync_stiffness * len(fingers))
        plate_dz = optimize.bisect(imbalance, 0.0, travel, xtol=xtol, maxiter=200)

    tensions = _tensions_at(plate_dz, fingers, actuator)
    displacements = tuple(min(f.tendon_takeup, plate_dz) for f in fingers)
    logger.debug("closure: dz=%.6f m, sum T=%.6f N (target %.6f N)", plate_dz, math.fsum(tensions), target)
    return ClosureState(
        plate_displacement=plate_dz,
        finger_displacements=displacements,
        tensions=tensions,
        motor_torque=torque,
        locked=actuator.self_locking,
        travel_limited=travel_limited,
    )


def holds_without_power(state: ClosureState) -> bool:
    """True when the grip survives with the motor switched off."""
    return state.locked or all(t == 0 for t in state.tensions)


def step_zero_torque(state: ClosureState) -> ClosureState:
    """One step with the motor unpowered.

    A self-locking screw cannot be back-driven, so the state is kept as
    is. Otherwise the springs push the plate back open.
    """
    if state.locked:
        return state
    return ClosureState.open(len(state.tensions))


def hold(state: ClosureState, steps: int) -> ClosureState:
    """Run `steps` unpowered steps."""
    if steps < 0:
        raise DomainError(f"steps must be >= 0 (got {steps})")
    for _ in range(steps):
        state = step_zero_torque(state)
    return state
