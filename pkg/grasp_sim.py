"""Quasi-static detachment engine.

A scenario wraps every finger on the target, closes the drive to
equilibrium and then ramps an external pull on a 0.1 N grid. Each
finger's share of the pull is spread over its engaged spines; spines
that slip either latch on a new asperity or are lost, and the gripper
detaches when the surviving fingers can no longer balance the pull.
"""

import concurrent.futures
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize
from tqdm import tqdm

from actuation import ActuatorModel, close_to_equilibrium
from errors import DomainError
from finger_mechanics import PhalanxChain, moment_sum, per_spine_normal, pressure_profile, wrap_on_sphere
from spine_contact import (
    ContactMode,
    RelatchWindow,
    SlipOutcome,
    SpineInterface,
    SpineState,
    capped_holding_force,
    literal_normal_term,
    relatch_probability,
    sample_asperity,
    slip_check,
)
from sweep_calculator import SweepCalculator, SweepStats
from target_model import TargetSurface, local_slope, make_sphere

logger = logging.getLogger(__name__)

FEASIBILITY_TOLERANCE = 1e-9
_REGULARIZATION = 1e-8
_MIN_STIFFNESS = 1e-12

GRAVITY_TABLE: Dict[str, float] = {"moon": 1.62, "mars": 3.71, "earth": 9.81}


def pull_angle_grid(step_deg: float = 10.0) -> Tuple[float, ...]:
    """Bench pulling angles, 0 to 90 deg."""
    count = int(round(90.0 / step_deg))
    return tuple(round(i * step_deg, 9) for i in range(count + 1))


def current_grid() -> Tuple[float, ...]:
    """Bench currents, 0.15 to 0.275 A in 0.025 A steps."""
    return tuple(round(0.150 + 0.025 * i, 3) for i in range(6))


@dataclass(frozen=True)
class GraspScenario:
    """Everything one detachment run depends on.

    Angles are in degrees, forces in newtons. tension_transfer is the
    fraction of tether tension that reaches the spine contacts.
    """
    chain: PhalanxChain = field(default_factory=PhalanxChain.uniform)
    finger_azimuths: Tuple[float, ...] = (0.0, 90.0, 180.0, 270.0)
    interface: SpineInterface = field(default_factory=SpineInterface)
    target: TargetSurface = field(default_factory=lambda: make_sphere(0.270))
    pull_angle: float = 0.0
    current: float = 0.25
    ramp_rate: float = 1.0
    seed: int = 0
    mode: ContactMode = ContactMode.CONSISTENT
    pull_azimuth: float = 0.0
    actuator: ActuatorModel = field(default_factory=ActuatorModel)
    relatch: RelatchWindow = field(default_factory=RelatchWindow)
    finger_root_offset: float = 0.04
    cone_tilt: float = 45.0
    cone_half_angle: float = 60.0
    tension_transfer: float = 0.2
    force_increment: float = 0.1
    force_cap: float = 400.0
    tangential_loading: bool = True
    record_trace: bool = True
    scenario_id: str = "scenario"

    def __post_init__(self):
        object.__setattr__(self, "finger_azimuths", tuple(float(a) for a in self.finger_azimuths))
        object.__setattr__(self, "mode", ContactMode(self.mode))
        if not 0 <= self.pull_angle <= 90:
            raise DomainError(f"pull_angle must be in [0, 90] deg (got {self.pull_angle})")
        if not self.ramp_rate > 0:
            raise DomainError(f"ramp_rate must be > 0 (got {self.ramp_rate})")
        if len(self.finger_azimuths) < 2:
            raise DomainError(f"a gripper needs n_fingers >= 2 (got {len(self.finger_azimuths)})")
        if self.seed < 0:
            raise DomainError(f"seed must be >= 0 (got {self.seed})")
        if not 0 < self.tension_transfer <= 1:
            raise DomainError(f"tension_transfer must be in (0, 1] (got {self.tension_transfer})")
        if not self.force_increment > 0:
            raise DomainError(f"force_increment must be > 0 (got {self.force_increment})")
        if not self.force_cap > 0:
            raise DomainError(f"force_cap must be > 0 (got {self.force_cap})")
        if self.finger_root_offset < 0:
            raise DomainError(f"finger_root_offset must be >= 0 (got {self.finger_root_offset})")
        if not 0 < self.cone_half_angle < 180:
            raise DomainError(f"cone_half_angle must be in (0, 180) deg (got {self.cone_half_angle})")

    @property
    def n_fingers(self) -> int:
        return len(self.finger_azimuths)

    def with_seed(self, seed: int) -> "GraspScenario":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class SlipEvent:
    finger: int
    phalanx: int
    spine: int
    relatched: bool


@dataclass(frozen=True)
class TraceSample:
    time_s: float
    applied_force: float
    finger_loads: Tuple[float, ...]
    events: Tuple[SlipEvent, ...]
    slip_count_cum: int


@dataclass(frozen=True)
class DetachmentTrace:
    samples: Tuple[TraceSample, ...]
    max_force: float
    first_slip_force: Optional[float]
    detached: bool
    seed: int = 0
    slip_count: int = 0
    relatch_count: int = 0
    # per-spine state at the end of the run; empty when traces are off
    final_spines: Tuple[SpineState, ...] = ()


@dataclass(frozen=True)
class LoadDistribution:
    """Per-finger loads for a pull.

    loads are magnitudes along each finger's anchoring direction;
    resolved are their components along the pull.
    """
    loads: Tuple[float, ...]
    resolved: Tuple[float, ...]
    feasible: bool
    unresisted: float = 0.0
    max_load_finger: Optional[int] = None


def pull_direction(pull_angle: float, pull_azimuth: float = 0.0) -> np.ndarray:
    """Unit pull vector; 0 deg is along the gripper axis."""
    theta = math.radians(pull_angle)
    psi = math.radians(pull_azimuth)
    return np.array([math.sin(theta) * math.cos(psi), math.sin(theta) * math.sin(psi), math.cos(theta)])


def grip_cone_axis(finger_azimuth: float, tilt: float) -> np.ndarray:
    """Axis of a finger's grip cone, leaning towards the opposite side."""
    phi = math.radians(finger_azimuth)
    gamma = math.radians(tilt)
    return np.array([-math.sin(gamma) * math.cos(phi), -math.sin(gamma) * math.sin(phi), math.cos(gamma)])


def anchoring_stiffness(pull: np.ndarray, finger_azimuths: Sequence[float],
                        cone_tilt: float = 45.0, cone_half_angle: float = 60.0) -> List[float]:
    """Relative stiffness of each finger against the pull.

    cos(angle to the grip-cone axis) - cos(half-angle): largest when the
    pull runs along the axis, zero at the cone edge and outside it.
    """
    edge = math.cos(math.radians(cone_half_angle))
    return [max(0.0, float(grip_cone_axis(azimuth, cone_tilt) @ pull) - edge) for azimuth in finger_azimuths]


def anchoring_directions(pull: np.ndarray, finger_azimuths: Sequence[float],
                         cone_tilt: float = 45.0, cone_half_angle: float = 60.0) -> List[Optional[np.ndarray]]:
    """Direction each finger resists the pull along, or None if it cannot.

    A finger anchors only when the pull lies strictly inside its grip
    cone, and then reacts along the pull line through the wrist pivot.
    """
    stiffness = anchoring_stiffness(pull, finger_azimuths, cone_tilt, cone_half_angle)
    return [pull.copy() if k > _MIN_STIFFNESS else None for k in stiffness]


def min_norm_nonnegative(directions: np.ndarray, target: np.ndarray) -> Tuple[np.ndarray, float]:
    """Smallest-norm nonnegative weights with directions @ weights == target.

    A lightly regularised NNLS picks the active set, then the exact
    minimum-norm solution on that set is taken from the pseudo-inverse.
    When no exact solution exists the plain NNLS best fit is returned.

    Returns:
        (weights, residual norm)
    """
    directions = np.asarray(directions, dtype=float)
    target = np.asarray(target, dtype=float)
    m = directions.shape[1]
    if m == 0:
        return np.zeros(0), float(np.linalg.norm(target))

    stacked = np.vstack([directions, math.sqrt(_REGULARIZATION) * np.eye(m)])
    rhs = np.concatenate([target, np.zeros(m)])
    approx, _ = optimize.nnls(stacked, rhs)

    scale = max(1.0, float(np.max(approx)))
    support = approx > 1e-9 * scale
    weights = np.zeros(m)
    while support.any():
        solution = np.linalg.pinv(directions[:, support]) @ target
        if (solution >= 0).all():
            weights[support] = solution
            break
        indices = np.flatnonzero(support)
        support[indices[solution < 0]] = False

    residual = float(np.linalg.norm(directions @ weights - target))
    if residual > FEASIBILITY_TOLERANCE * max(1.0, float(np.linalg.norm(target))):
        weights, residual = optimize.nnls(directions, target)
    return weights, float(residual)


def distribute_load(total_force: float, pull_angle: float, finger_azimuths: Sequence[float],
                    pull_azimuth: float = 0.0, cone_tilt: float = 45.0, cone_half_angle: float = 60.0,
                    active: Optional[Sequence[bool]] = None) -> LoadDistribution:
    """Split a pull over the fingers.

    Solves for nonnegative finger loads along the anchoring directions
    whose resultant equals the pull, with the smallest sum of squares
    weighted by compliance: each squared load is divided by the finger's
    anchoring stiffness, so fingers whose grip axis lines up with the
    pull take more. Equal stiffnesses give the plain minimum-norm split.

    Args:
        total_force: pull magnitude (N)
        pull_angle: angle from the gripper axis (deg)
        finger_azimuths: finger positions around the axis (deg)
        active: optional mask of fingers still attached

    Returns:
        LoadDistribution. When no balance exists, the finger carrying
        the most load is flagged and the unbalanced remainder reported.
    """
    if total_force < 0:
        raise DomainError(f"total_force must be >= 0 (got {total_force})")
    n = len(finger_azimuths)
    if active is None:
        active = [True] * n
    pull = pull_direction(pull_angle, pull_azimuth)
    stiffness = anchoring_stiffness(pull, finger_azimuths, cone_tilt, cone_half_angle)
    directions = anchoring_directions(pull, finger_azimuths, cone_tilt, cone_half_angle)
    usable = [i for i in range(n) if active[i] and directions[i] is not None]

    loads = np.zeros(n)
    if usable:
        # substitute load = sqrt(k) * x so the weighted problem is a plain min-norm one
        root_k = np.sqrt([stiffness[i] for i in usable])
        matrix = np.column_stack([directions[i] for i in usable]) * root_k
        scaled, residual = min_norm_nonnegative(matrix, pull)
        loads[usable] = scaled * root_k
    else:
        residual = 1.0

    feasible = residual <= FEASIBILITY_TOLERANCE
    loads *= total_force
    resolved = np.array([
        loads[i] * float(directions[i] @ pull) if directions[i] is not None else 0.0 for i in range(n)
    ])
    max_finger = None
    unresisted = 0.0
    if not feasible:
        unresisted = residual * total_force
        max_finger = int(np.argmax(loads)) if loads.any() else None
    return LoadDistribution(
        loads=tuple(float(v) for v in loads),
        resolved=tuple(float(v) for v in resolved),
        feasible=feasible,
        unresisted=unresisted,
        max_load_finger=max_finger,
    )


class _Spine:
    """A spine slot on a phalanx: fixed geometry plus its current SpineState."""
    __slots__ = ("finger", "phalanx", "index", "alpha", "relief", "state", "capacity")

    def __init__(self, finger: int, phalanx: int, index: int, alpha: float, relief: float, state: SpineState):
        self.finger = finger
        self.phalanx = phalanx
        self.index = index
        self.alpha = alpha
        self.relief = relief
        self.state = state
        self.capacity = 0.0

    @property
    def engaged(self) -> bool:
        return self.state.engaged


class DetachmentSimulator:
    """One seeded detachment run.

    Random draws come from one stream per finger, spawned from the
    scenario seed, and are consumed in phalanx-then-spine order.
    """

    def __init__(self, scenario: GraspScenario):
        self.scenario = scenario
        self.mu = scenario.target.asperity.base_friction
        self.pull = pull_direction(scenario.pull_angle, scenario.pull_azimuth)
        self.streams = [np.random.default_rng(child)
                        for child in np.random.SeedSequence(scenario.seed).spawn(scenario.n_fingers)]
        self.spines: List[_Spine] = []
        self.engaged_count = [0] * scenario.n_fingers
        self.alive = [True] * scenario.n_fingers
        self.tensions: Tuple[float, ...] = ()
        self.relatch_chance: List[float] = []
        self._setup()

    def _setup(self):
        sc = self.scenario
        chain = sc.chain
        wraps = []
        diameters = []
        for azimuth in sc.finger_azimuths:
            diameter = sc.target.effective_diameter(azimuth)
            diameters.append(diameter)
            wraps.append(wrap_on_sphere(chain, diameter, sc.finger_root_offset))

        closure = close_to_equilibrium(wraps, sc.actuator, sc.current)
        self.tensions = closure.tensions
        self.relatch_chance = [relatch_probability(t, sc.relatch) for t in self.tensions]
        directions = anchoring_directions(self.pull, sc.finger_azimuths, sc.cone_tilt, sc.cone_half_angle)
        spm = sc.interface.spines_per_module

        for a, (azimuth, wrap, diameter) in enumerate(zip(sc.finger_azimuths, wraps, diameters)):
            transmitted = sc.tension_transfer * self.tensions[a]
            profile = pressure_profile(chain, transmitted, flexion=wrap.joint_angles)
            touching = spm * wrap.contact_count
            tangential = transmitted / touching if (touching and sc.tangential_loading) else 0.0
            anchor = directions[a] if directions[a] is not None else self.pull
            phi_a = math.radians(azimuth)

            for k in range(chain.n):
                if not wrap.contact_flags[k]:
                    continue
                polar = wrap.contact_arcs[k] / (diameter / 2)
                outward = (math.sin(polar) * math.cos(phi_a), math.sin(polar) * math.sin(phi_a), math.cos(polar))
                point = sc.target.point(outward)
                normal = sc.target.normal(outward)
                alpha = local_slope(sc.target, point, anchor)
                lift = float(normal @ anchor)
                relief = 1.0 if lift >= 0 else math.sqrt(max(0.0, 1.0 - lift * lift))
                if sc.mode is ContactMode.LITERAL:
                    normal_term = literal_normal_term(chain.pulley_radius, transmitted, moment_sum(chain.lengths, k))
                else:
                    normal_term = per_spine_normal(profile.pressures[k], chain.lengths[k], spm)

                for s in range(spm):
                    beta = sample_asperity(sc.target.asperity, self.streams[a])
                    state = SpineState(sc.interface.engages(beta), beta, normal_term, tangential)
                    spine = _Spine(a, k, s, alpha, relief, state)
                    if state.engaged:
                        spine.capacity = self._capacity(spine)
                        self.engaged_count[a] += 1
                    self.spines.append(spine)

        for a in range(sc.n_fingers):
            if self.engaged_count[a] == 0:
                self.alive[a] = False
        logger.debug("setup: tensions=%s engaged=%s", [round(t, 3) for t in self.tensions], self.engaged_count)

    def _capacity(self, spine: _Spine) -> float:
        state = spine.state
        return capped_holding_force(self.mu, spine.alpha, state.current_beta, state.normal_load, state.tangential_load)

    def _relatch(self, spine: _Spine) -> bool:
        """Try to latch a slipped spine on a fresh asperity."""
        stream = self.streams[spine.finger]
        if stream.random() >= self.relatch_chance[spine.finger]:
            return False
        beta = sample_asperity(self.scenario.target.asperity, stream)
        if not self.scenario.interface.engages(beta):
            return False
        spine.state = replace(spine.state, current_beta=beta)
        spine.capacity = self._capacity(spine)
        return True

    def _drop(self, spine: _Spine):
        spine.state = replace(spine.state, engaged=False)
        spine.capacity = 0.0
        self.engaged_count[spine.finger] -= 1
        if self.engaged_count[spine.finger] == 0:
            self.alive[spine.finger] = False
            logger.debug("finger %d lost its last spine", spine.finger)

    def spine_states(self) -> Tuple[SpineState, ...]:
        """Current state of every spine, finger by finger, base to tip."""
        return tuple(spine.state for spine in self.spines)

    def _final_spines(self) -> Tuple[SpineState, ...]:
        return self.spine_states() if self.scenario.record_trace else ()

    def _distribution(self) -> LoadDistribution:
        sc = self.scenario
        return distribute_load(1.0, sc.pull_angle, sc.finger_azimuths, sc.pull_azimuth,
                               sc.cone_tilt, sc.cone_half_angle, active=self.alive)

    def _loaded(self, spine: _Spine, unit: LoadDistribution) -> bool:
        return spine.engaged and unit.loads[spine.finger] > 0

    def _spine_load(self, spine: _Spine, force: float, unit: LoadDistribution) -> float:
        return force * unit.loads[spine.finger] * spine.relief / self.engaged_count[spine.finger]

    def _next_slip_step(self, unit: LoadDistribution, step: int):
        # smallest force at which any loaded spine reaches its capacity
        best = math.inf
        for spine in self.spines:
            if not self._loaded(spine, unit):
                continue
            share = unit.loads[spine.finger] * spine.relief / self.engaged_count[spine.finger]
            if share > 0:
                best = min(best, spine.capacity / share)
        if math.isinf(best):
            return math.inf
        return max(step + 1, math.floor(best / self.scenario.force_increment))

    def _has_slip(self, force: float, unit: LoadDistribution) -> bool:
        return any(
            slip_check(self._spine_load(spine, force, unit), spine.capacity) is SlipOutcome.SLIPS
            for spine in self.spines if self._loaded(spine, unit)
        )

    def _sample(self, force: float, unit: Optional[LoadDistribution], events, slips: int) -> TraceSample:
        if unit is None:
            loads = (0.0,) * self.scenario.n_fingers
        else:
            loads = tuple(force * r for r in unit.resolved)
        return TraceSample(
            time_s=force / self.scenario.ramp_rate,
            applied_force=force,
            finger_loads=loads,
            events=tuple(events),
            slip_count_cum=slips,
        )

    def run(self) -> DetachmentTrace:
        sc = self.scenario
        dF = sc.force_increment
        cap_step = int(round(sc.force_cap / dF))
        record = sc.record_trace
        samples: List[TraceSample] = []
        slips = 0
        relatches = 0
        first_slip: Optional[float] = None

        unit = self._distribution()
        if not unit.feasible:
            if record:
                samples.append(self._sample(0.0, None, (), 0))
            return DetachmentTrace(tuple(samples), 0.0, None, True, sc.seed, final_spines=self._final_spines())
        if record:
            samples.append(self._sample(0.0, unit, (), 0))

        step = 0
        while True:
            next_step = self._next_slip_step(unit, step)
            while next_step < cap_step and not self._has_slip(next_step * dF, unit):
                next_step += 1
            if next_step >= cap_step:
                if record:
                    samples.extend(self._sample(k * dF, unit, (), slips) for k in range(step + 1, cap_step + 1))
                logger.debug("seed %d: reached force cap %.1f N", sc.seed, sc.force_cap)
                return DetachmentTrace(tuple(samples), sc.force_cap, first_slip, False, sc.seed, slips, relatches,
                                       self._final_spines())

            if record:
                samples.extend(self._sample(k * dF, unit, (), slips) for k in range(step + 1, next_step))
            force = next_step * dF
            events: List[SlipEvent] = []
            slipped_here = set()
            detached = False

            rescan = True
            while rescan:
                rescan = False
                for i, spine in enumerate(self.spines):
                    if not self._loaded(spine, unit):
                        continue
                    if slip_check(self._spine_load(spine, force, unit), spine.capacity) is SlipOutcome.HOLDS:
                        continue
                    slips += 1
                    if first_slip is None:
                        first_slip = force
                    # a second slip within one increment loses the spine
                    relatched = i not in slipped_here and self._relatch(spine)
                    slipped_here.add(i)
                    events.append(SlipEvent(spine.finger, spine.phalanx, spine.index, relatched))
                    if relatched:
                        relatches += 1
                        rescan = True
                        continue
                    self._drop(spine)
                    unit = self._distribution()
                    if not unit.feasible:
                        detached = True
                    else:
                        rescan = True
                    break
                if detached:
                    break

            if detached:
                if record:
                    samples.append(self._sample(force, None, events, slips))
                # letting go in the increment of the first slip leaves first_slip = max_force + dF
                max_force = (next_step - 1) * dF
                logger.debug("seed %d: detached at %.1f N", sc.seed, force)
                return DetachmentTrace(tuple(samples), max_force, first_slip, True, sc.seed, slips, relatches,
                                       self._final_spines())

            if record:
                samples.append(self._sample(force, unit, events, slips))
            step = next_step


def simulate_detachment(scenario: GraspScenario) -> DetachmentTrace:
    """Run one seeded detachment experiment."""
    return DetachmentSimulator(scenario).run()


def _run_quiet(scenario: GraspScenario) -> DetachmentTrace:
    return simulate_detachment(replace(scenario, record_trace=False))


def run_batch(scenarios: Sequence[GraspScenario], workers: int = 1, progress: bool = False,
              desc: str = "runs") -> List[DetachmentTrace]:
    """Run many scenarios without traces; results keep the input order."""
    results: List[Optional[DetachmentTrace]] = [None] * len(scenarios)
    bar = tqdm(total=len(scenarios), desc=desc, disable=not progress, file=sys.stderr)
    if workers <= 1:
        for i, scenario in enumerate(scenarios):
            results[i] = _run_quiet(scenario)
            bar.update(1)
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_quiet, scenario): i for i, scenario in enumerate(scenarios)}
            for future in concurrent.futures.as_completed(futures):
                results[futures[future]] = future.result()
                bar.update(1)
    bar.close()
    return results


def monte_carlo(scenario: GraspScenario, repetitions: int, workers: int = 1) -> SweepStats:
    """Max-force statistics over seeds seed .. seed+repetitions-1."""
    if repetitions < 1:
        raise DomainError(f"repetitions must be >= 1 (got {repetitions})")
    runs = run_batch([scenario.with_seed(scenario.seed + i) for i in range(repetitions)], workers)
    return SweepCalculator().cell_stats([r.max_force for r in runs], [r.first_slip_force for r in runs])


def required_grip_force(mass: float, gravity: float, stance_legs: int) -> float:
    """Per-gripper load when the robot hangs from `stance_legs` grippers."""
    if mass < 0:
        raise DomainError(f"mass must be >= 0 (got {mass})")
    if gravity < 0:
        raise DomainError(f"gravity must be >= 0 (got {gravity})")
    if stance_legs < 1:
        raise DomainError(f"stance_legs must be >= 1 (got {stance_legs})")
    return mass * gravity / stance_legs


def resolve_gravity(selector) -> float:
    """Gravity in m/s^2 from a body name or a number."""
    if isinstance(selector, (int, float)):
        return float(selector)
    text = str(selector).strip().lower()
    if text in GRAVITY_TABLE:
        return GRAVITY_TABLE[text]
    try:
        return float(text)
    except ValueError:
        known = ", ".join(sorted(GRAVITY_TABLE))
        raise DomainError(f"unknown body '{selector}' (known bodies: {known})") from None


@dataclass(frozen=True)
class CalibrationBand:
    best_currents: Tuple[float, ...] = (0.225, 0.250)
    current_grid: Tuple[float, ...] = field(default_factory=current_grid)


@dataclass(frozen=True)
class CalibrationResult:
    window: RelatchWindow
    curve: Tuple[Tuple[float, float], ...]
    converged: bool
    score: float
    candidates_evaluated: int


def _in_band(current: float, band: Sequence[float]) -> bool:
    return any(abs(current - b) < 1e-9 for b in band)


def score_curve(curve: Sequence[Tuple[float, float]], best_currents: Sequence[float]) -> float:
    """Best in-band mean minus best out-of-band mean; positive iff the peak is in band."""
    inside = [m for c, m in curve if _in_band(c, best_currents)]
    outside = [m for c, m in curve if not _in_band(c, best_currents)]
    if not inside:
        return -math.inf
    if not outside:
        return max(inside)
    return max(inside) - max(outside)


def calibrate_relatch(target_band: CalibrationBand, base_scenario: GraspScenario,
                      candidates: Sequence[RelatchWindow], repetitions: int = 50, workers: int = 1,
                      evaluate: Optional[Callable[[GraspScenario], float]] = None,
                      progress: bool = False) -> CalibrationResult:
    """Grid-search the relatch window so the current response peaks in band.

    Each candidate is scored on the mean max force at every grid current.
    Among candidates whose argmax current lies in the band the largest
    margin wins; ties keep the earlier candidate. With no compliant
    candidate the best-scoring one is returned unconverged.
    """
    if not candidates:
        raise DomainError("relatch calibration needs at least one candidate window")
    for required in current_grid():
        if not _in_band(required, target_band.current_grid):
            raise DomainError(f"current grid must cover 0.15-0.275 A in 0.025 A steps (missing {required})")
    if evaluate is None:
        def evaluate(scenario: GraspScenario) -> float:
            return monte_carlo(scenario, repetitions, workers).mean

    calculator = SweepCalculator()
    best: Optional[CalibrationResult] = None
    for window in tqdm(candidates, desc="calibrate", disable=not progress, file=sys.stderr):
        curve = tuple(
            (current, float(evaluate(replace(base_scenario, current=current, relatch=window))))
            for current in sorted(target_band.current_grid)
        )
        compliant = _in_band(calculator.best_current(curve), target_band.best_currents)
        score = score_curve(curve, target_band.best_currents)
        logger.info("candidate %s: score %.4f%s", window, score, " (compliant)" if compliant else "")
        candidate = CalibrationResult(window, curve, compliant, score, len(candidates))
        if best is None or (candidate.converged, candidate.score) > (best.converged, best.score):
            best = candidate
    return best
