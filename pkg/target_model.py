"""Grasp targets: the spherical test family and procedural rocks.

Targets are centred on the origin. Directions are unit vectors in the
gripper frame, whose +z axis points from the target towards the gripper.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from errors import DomainError
from spine_contact import AsperityModel

logger = logging.getLogger(__name__)

ROCK_MODES = 24
_IDENTITY = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))


@dataclass(frozen=True)
class TargetSurface:
    """A rigid, star-convex target.

    Rocks perturb the radius by a sum of plane-wave modes restricted to
    the unit sphere: h(x) = sum c_m cos(k * w_m.x + phase_m), with
    sum |c_m| equal to the roughness amplitude.
    """
    kind: str
    nominal_diameter: float
    asperity: AsperityModel = field(default_factory=AsperityModel)
    amplitude: float = 0.0
    correlation_scale: float = 0.0
    seed: Optional[int] = None
    mode_coefficients: Tuple[float, ...] = ()
    mode_directions: Tuple[Tuple[float, float, float], ...] = ()
    mode_phases: Tuple[float, ...] = ()
    orientation: Tuple[Tuple[float, float, float], ...] = _IDENTITY

    def __post_init__(self):
        if self.kind not in ("sphere", "rock"):
            raise DomainError(f"target kind must be 'sphere' or 'rock' (got '{self.kind}')")
        if not self.nominal_diameter > 0:
            raise DomainError(f"nominal_diameter must be > 0 (got {self.nominal_diameter})")
        if not 0 <= self.amplitude < self.nominal_diameter / 4:
            raise DomainError(
                f"rock amplitude must be in [0, nominal_diameter/4 = {self.nominal_diameter / 4}) "
                f"(got {self.amplitude})"
            )

    @property
    def wavenumber(self) -> float:
        if self.correlation_scale <= 0:
            return 0.0
        return (self.nominal_diameter / 2) / self.correlation_scale

    def _to_body(self, direction: np.ndarray) -> np.ndarray:
        return np.asarray(self.orientation).T @ direction

    def _to_world(self, vector: np.ndarray) -> np.ndarray:
        return np.asarray(self.orientation) @ vector

    def _perturbation(self, body_dir: np.ndarray) -> Tuple[float, np.ndarray]:
        # height and its gradient w.r.t. the body-frame unit direction
        if not self.mode_coefficients:
            return 0.0, np.zeros(3)
        c = np.asarray(self.mode_coefficients)
        w = np.asarray(self.mode_directions)
        arg = self.wavenumber * (w @ body_dir) + np.asarray(self.mode_phases)
        height = float(c @ np.cos(arg))
        grad = -(c * np.sin(arg) * self.wavenumber) @ w
        return height, grad

    def radius(self, direction: Sequence[float]) -> float:
        """Distance from the centre to the surface along a direction."""
        d = _unit(direction)
        height, _ = self._perturbation(self._to_body(d))
        return self.nominal_diameter / 2 + height

    def point(self, direction: Sequence[float]) -> np.ndarray:
        d = _unit(direction)
        return self.radius(d) * d

    def normal(self, direction: Sequence[float]) -> np.ndarray:
        """Outward unit normal at the surface point along `direction`."""
        d_body = self._to_body(_unit(direction))
        height, grad = self._perturbation(d_body)
        rho = self.nominal_diameter / 2 + height
        tangential = grad - (grad @ d_body) * d_body
        n_body = d_body - tangential / rho
        return self._to_world(n_body / np.linalg.norm(n_body))

    def rotated(self, rotation: Sequence[Sequence[float]]) -> "TargetSurface":
        """The same target turned by a rotation matrix."""
        r = np.asarray(rotation, dtype=float)
        if r.shape != (3, 3) or not np.allclose(r @ r.T, np.eye(3), atol=1e-9):
            raise DomainError("rotation must be a 3x3 orthonormal matrix")
        combined = r @ np.asarray(self.orientation)
        return replace(self, orientation=tuple(tuple(float(v) for v in row) for row in combined))

    def effective_diameter(self, azimuth_deg: float, polar_deg: float = 45.0) -> float:
        """Diameter of the sphere a finger at this azimuth wraps."""
        az = math.radians(azimuth_deg)
        polar = math.radians(polar_deg)
        direction = (math.sin(polar) * math.cos(az), math.sin(polar) * math.sin(az), math.cos(polar))
        return 2 * self.radius(direction)

    def label(self) -> str:
        if self.kind == "sphere":
            return f"sphere:{self.nominal_diameter * 1000:.6g}mm"
        return f"rock:{self.seed}"


def _unit(direction: Sequence[float]) -> np.ndarray:
    d = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(d)
    if norm == 0:
        raise DomainError("direction must be non-zero")
    return d / norm


def make_sphere(diameter: float, asperity: Optional[AsperityModel] = None) -> TargetSurface:
    return TargetSurface(kind="sphere", nominal_diameter=diameter, asperity=asperity or AsperityModel())


def sphere_family(gripper_diameter: float) -> Tuple[float, float, float]:
    """Target diameters (D/2, D, 3D/2) derived from the gripper diameter."""
    if not gripper_diameter > 0:
        raise DomainError(f"gripper_diameter must be > 0 (got {gripper_diameter})")
    return (gripper_diameter / 2, gripper_diameter, 3 * gripper_diameter / 2)


def make_rock(seed: int, base_diameter: float, roughness_amplitude: float,
              correlation_scale: float, asperity: Optional[AsperityModel] = None) -> TargetSurface:
    """Random rough rock, reproducible from its seed.

    Args:
        seed: seed for the mode coefficients
        base_diameter: diameter of the underlying sphere (m)
        roughness_amplitude: bound on the radial deviation (m)
        correlation_scale: length over which the surface stays smooth (m)
    """
    if not base_diameter > 0:
        raise DomainError(f"base_diameter must be > 0 (got {base_diameter})")
    if not 0 <= roughness_amplitude < base_diameter / 4:
        raise DomainError(
            f"rock amplitude must be in [0, base_diameter/4 = {base_diameter / 4}) (got {roughness_amplitude})"
        )
    if not correlation_scale > 0:
        raise DomainError(f"correlation_scale must be > 0 (got {correlation_scale})")

    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((ROCK_MODES, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    phases = rng.uniform(0.0, 2 * math.pi, ROCK_MODES)
    weights = rng.uniform(-1.0, 1.0, ROCK_MODES)
    if roughness_amplitude > 0:
        coefficients = weights * roughness_amplitude / np.sum(np.abs(weights))
    else:
        coefficients = np.zeros(ROCK_MODES)

    logger.debug("rock seed=%s D=%.4f amp=%.4f", seed, base_diameter, roughness_amplitude)
    return TargetSurface(
        kind="rock",
        nominal_diameter=base_diameter,
        asperity=asperity or AsperityModel(),
        amplitude=roughness_amplitude,
        correlation_scale=correlation_scale,
        seed=seed,
        mode_coefficients=tuple(float(c) for c in coefficients),
        mode_directions=tuple(tuple(float(v) for v in row) for row in directions),
        mode_phases=tuple(float(p) for p in phases),
    )


def local_slope(target: TargetSurface, contact_point: Sequence[float],
                pull_direction: Sequence[float]) -> float:
    """Angle (rad) between the outward normal at the contact and the pull.

    Clamped to [0, pi/2]: zero when the pull lifts straight off the
    surface, pi/2 when it runs along the tangent plane or presses in.
    """
    pull = np.asarray(pull_direction, dtype=float)
    norm = np.linalg.norm(pull)
    if norm == 0:
        return math.pi / 2
    normal = target.normal(contact_point)
    cos_angle = float(np.clip(normal @ (pull / norm), -1.0, 1.0))
    return min(math.acos(cos_angle), math.pi / 2)
