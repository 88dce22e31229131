import json
import logging
import math
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from actuation import ActuatorModel
from errors import ConfigError, DomainError
from finger_mechanics import PhalanxChain
from grasp_sim import GraspScenario, current_grid, pull_angle_grid
from spine_contact import INTERFACE_PRESETS, AsperityModel, ContactMode, RelatchWindow, SpineInterface
from target_model import TargetSurface, make_rock, make_sphere, sphere_family

logger = logging.getLogger(__name__)

# Keys must end with one of these, or be listed as unitless
UNIT_SUFFIXES = (
    "_m", "_mm", "_deg", "_a", "_n", "_nm", "_n_per_s", "_n_per_m", "_nm_per_rad",
    "_m_per_rev", "_kg", "_m_per_s2",
)
UNITLESS_KEYS = {
    "version", "gripper", "interface", "target", "asperity", "actuator", "relatch",
    "experiment", "sweep", "calibration", "torque_anchors", "phalanx_count", "preset",
    "spines_per_module", "kind", "seed", "base_friction", "distribution", "efficiency",
    "self_locking", "floor", "scenario_id", "repetitions", "mode", "tension_transfer",
    "tangential_loading", "targets", "interfaces", "candidates",
}


Angle90 = Annotated[float, Field(ge=0, le=90)]
Positive = Annotated[float, Field(gt=0)]
NonNegative = Annotated[float, Field(ge=0)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GripperSettings(_Strict):
    """Finger chain and hand layout."""
    phalanx_count: int = Field(4, ge=1)
    phalanx_length_m: Positive = 0.03
    phalanx_lengths_m: Optional[List[Positive]] = None
    pulley_radius_m: Positive = 0.005
    opening_spring_nm_per_rad: NonNegative = 0.01
    joint_limit_deg: float = Field(90.0, gt=0, le=180)
    finger_azimuths_deg: List[float] = Field(default_factory=lambda: [0.0, 90.0, 180.0, 270.0], min_length=2)
    finger_root_offset_m: NonNegative = 0.04
    grip_cone_tilt_deg: Angle90 = 45.0
    grip_cone_half_angle_deg: float = Field(60.0, gt=0, lt=180)
    diameter_m: Positive = 0.270

    @model_validator(mode="after")
    def _consistent_chain(self):
        if self.phalanx_lengths_m is not None and len(self.phalanx_lengths_m) != self.phalanx_count:
            raise ValueError(f"phalanx_lengths_m has {len(self.phalanx_lengths_m)} entries "
                             f"but phalanx_count is {self.phalanx_count}")
        shortest = min(self.phalanx_lengths_m or [self.phalanx_length_m])
        if not self.pulley_radius_m < shortest / 2:
            raise ValueError(f"pulley_radius_m must be < half the shortest phalanx ({shortest / 2:g} m)")
        return self


class InterfaceSettings(_Strict):
    """A named preset, or an explicit spine count and inclination (default 4 at 30 deg)."""
    preset: Optional[str] = None
    spines_per_module: Optional[int] = Field(None, ge=1)
    inclination_deg: Optional[float] = Field(None, gt=0, lt=90)

    @model_validator(mode="after")
    def _known_preset(self):
        if self.preset is None:
            return self
        if self.preset not in INTERFACE_PRESETS:
            raise ValueError(f"unknown interface preset '{self.preset}' (known: {', '.join(sorted(INTERFACE_PRESETS))})")
        explicit = [name for name in ("spines_per_module", "inclination_deg") if getattr(self, name) is not None]
        if explicit:
            raise ValueError(f"preset '{self.preset}' fixes the interface; remove {', '.join(explicit)}")
        return self


class TargetSettings(_Strict):
    """kind is 'sphere', 'rock' or a family member 'D1' / 'D2' / 'D3'."""
    kind: str = "D2"
    diameter_m: Optional[Positive] = None
    roughness_amplitude_m: NonNegative = 0.0
    correlation_scale_m: Positive = 0.05
    seed: int = Field(0, ge=0)


class AsperitySettings(_Strict):
    base_friction: Positive = 0.4
    distribution: Literal["uniform", "truncnorm"] = "uniform"
    beta_max_deg: float = Field(40.0, ge=0, lt=90)
    beta_low_deg: NonNegative = 0.0
    mean_deg: Optional[float] = None
    sd_deg: Optional[Positive] = None

    @model_validator(mode="after")
    def _valid_support(self):
        if self.beta_low_deg > self.beta_max_deg:
            raise ValueError(f"beta_low_deg must be <= beta_max_deg (got {self.beta_low_deg} > {self.beta_max_deg})")
        locking = math.degrees(math.atan(1 / self.base_friction))
        if not self.beta_max_deg < locking:
            raise ValueError(f"beta_max_deg must be < atan(1/mu) = {locking:.4f} deg (got {self.beta_max_deg})")
        if self.distribution == "truncnorm" and (self.mean_deg is None or self.sd_deg is None):
            raise ValueError("truncnorm asperity distribution needs mean_deg and sd_deg")
        return self


class TorqueAnchor(_Strict):
    current_a: NonNegative
    torque_nm: NonNegative


class ActuatorSettings(_Strict):
    torque_anchors: List[TorqueAnchor] = Field(
        default_factory=lambda: [TorqueAnchor(current_a=0.150, torque_nm=0.084),
                                 TorqueAnchor(current_a=0.275, torque_nm=0.179)],
        min_length=2, max_length=2,
    )
    ballscrew_pitch_m_per_rev: Positive = 0.001
    efficiency: float = Field(0.9, gt=0, le=1)
    desync_stiffness_n_per_m: Positive = 1000.0
    max_plate_travel_m: Positive = 0.5
    preload_n: NonNegative = 0.0
    self_locking: bool = True


class RelatchSettings(_Strict):
    low_n: NonNegative = 190.0
    high_n: Positive = 235.0
    rolloff_n: Positive = 20.0
    floor: float = Field(0.0, ge=0, le=1)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.low_n < self.high_n:
            raise ValueError(f"relatch window needs low_n < high_n (got {self.low_n}, {self.high_n})")
        return self


class ExperimentSettings(_Strict):
    scenario_id: str = "bench"
    pull_angle_deg: Angle90 = 0.0
    pull_azimuth_deg: float = 0.0
    current_a: NonNegative = 0.25
    ramp_rate_n_per_s: Positive = 1.0
    force_increment_n: Positive = 0.1
    force_cap_n: Positive = 400.0
    seed: int = Field(0, ge=0)
    repetitions: int = Field(5, ge=1)
    mode: ContactMode = ContactMode.CONSISTENT
    tension_transfer: float = Field(0.2, gt=0, le=1)
    tangential_loading: bool = True


class SweepSettings(_Strict):
    angles_deg: List[Angle90] = Field(default_factory=lambda: list(pull_angle_grid()), min_length=1)
    currents_a: List[NonNegative] = Field(default_factory=lambda: [0.25], min_length=1)
    targets: List[str] = Field(default_factory=lambda: ["D1", "D2", "D3"], min_length=1)
    interfaces: List[str] = Field(default_factory=lambda: ["quad30"], min_length=1)


class RelatchCandidates(_Strict):
    low_n: List[NonNegative] = Field(default_factory=lambda: [170.0, 190.0, 210.0], min_length=1)
    high_n: List[Positive] = Field(default_factory=lambda: [235.0, 250.0], min_length=1)
    rolloff_n: List[Positive] = Field(default_factory=lambda: [20.0, 40.0], min_length=1)
    floor: List[Annotated[float, Field(ge=0, le=1)]] = Field(default_factory=lambda: [0.0], min_length=1)


class CalibrationSettings(_Strict):
    candidates: RelatchCandidates = Field(default_factory=RelatchCandidates)
    best_currents_a: List[NonNegative] = Field(default_factory=lambda: [0.225, 0.25], min_length=1)
    currents_a: List[NonNegative] = Field(default_factory=lambda: list(current_grid()), min_length=1)
    repetitions: int = Field(50, ge=1)


class AppConfig(_Strict):
    """Full scenario configuration."""
    version: str = "1.0.0"
    gripper: GripperSettings = Field(default_factory=GripperSettings)
    interface: InterfaceSettings = Field(default_factory=InterfaceSettings)
    target: TargetSettings = Field(default_factory=TargetSettings)
    asperity: AsperitySettings = Field(default_factory=AsperitySettings)
    actuator: ActuatorSettings = Field(default_factory=ActuatorSettings)
    relatch: RelatchSettings = Field(default_factory=RelatchSettings)
    experiment: ExperimentSettings = Field(default_factory=ExperimentSettings)
    sweep: SweepSettings = Field(default_factory=SweepSettings)
    calibration: CalibrationSettings = Field(default_factory=CalibrationSettings)


def unit_suffix_violations(data: Any, path: str = "") -> List[str]:
    """Keys that carry neither a unit suffix nor a known unitless name."""
    violations = []
    if isinstance(data, dict):
        for key, value in data.items():
            where = f"{path}.{key}" if path else key
            if key not in UNITLESS_KEYS and not key.endswith(UNIT_SUFFIXES):
                violations.append(f"{where}: key has no recognised unit suffix")
            violations.extend(unit_suffix_violations(value, where))
    elif isinstance(data, list):
        for index, item in enumerate(data):
            violations.extend(unit_suffix_violations(item, f"{path}[{index}]"))
    return violations


def parse_config(data: Dict[str, Any]) -> AppConfig:
    """Validate a raw config mapping, reporting every violation at once."""
    violations = unit_suffix_violations(data)
    config = None
    try:
        config = AppConfig.model_validate(data)
    except ValidationError as e:
        for error in e.errors():
            where = ".".join(str(part) for part in error["loc"])
            violations.append(f"{where}: {error['msg']}")
    if config is not None:
        checks = [lambda: build_scenario(config)]
        checks += [lambda name=name: build_target(name, config) for name in config.sweep.targets]
        checks += [lambda name=name: build_interface(name) for name in config.sweep.interfaces]
        for check in checks:
            try:
                check()
            except DomainError as e:
                violations.append(str(e))
    if violations:
        raise ConfigError(violations)
    return config


def build_chain(gripper: GripperSettings) -> PhalanxChain:
    lengths = gripper.phalanx_lengths_m or [gripper.phalanx_length_m] * gripper.phalanx_count
    return PhalanxChain(
        lengths=tuple(lengths),
        pulley_radius=gripper.pulley_radius_m,
        opening_spring_stiffness=gripper.opening_spring_nm_per_rad,
        joint_limit=math.radians(gripper.joint_limit_deg),
    )


def build_asperity(settings: AsperitySettings) -> AsperityModel:
    if settings.distribution == "truncnorm":
        return AsperityModel.truncated_normal_deg(settings.base_friction, settings.mean_deg, settings.sd_deg,
                                                  settings.beta_max_deg, settings.beta_low_deg)
    return AsperityModel(base_friction=settings.base_friction, distribution=settings.distribution,
                         beta_max=math.radians(settings.beta_max_deg), beta_low=math.radians(settings.beta_low_deg))


def build_interface(name_or_settings: Union[str, InterfaceSettings]) -> Tuple[str, SpineInterface]:
    """Interface from a preset name or explicit settings, with its label."""
    if isinstance(name_or_settings, str):
        if name_or_settings not in INTERFACE_PRESETS:
            known = ", ".join(sorted(INTERFACE_PRESETS))
            raise DomainError(f"unknown interface preset '{name_or_settings}' (known: {known})")
        return name_or_settings, INTERFACE_PRESETS[name_or_settings]
    if name_or_settings.preset is not None:
        return build_interface(name_or_settings.preset)
    settings = name_or_settings
    interface = SpineInterface(4 if settings.spines_per_module is None else settings.spines_per_module,
                               30.0 if settings.inclination_deg is None else settings.inclination_deg)
    return f"spm{interface.spines_per_module}_inc{interface.inclination:g}", interface


def build_target(name: str, config: AppConfig) -> TargetSurface:
    """Target from a sweep name: D1/D2/D3, sphere:<diameter_m> or rock:<seed>."""
    asperity = build_asperity(config.asperity)
    family = dict(zip(("D1", "D2", "D3"), sphere_family(config.gripper.diameter_m)))
    settings = config.target
    if name in family:
        return make_sphere(family[name], asperity)
    kind, _, arg = name.partition(":")
    if kind == "sphere":
        diameter = float(arg) if arg else settings.diameter_m
        if diameter is None:
            raise DomainError("sphere target needs a diameter (target.diameter_m or sphere:<m>)")
        return make_sphere(diameter, asperity)
    if kind == "rock":
        seed = int(arg) if arg else settings.seed
        base = settings.diameter_m or config.gripper.diameter_m
        return make_rock(seed, base, settings.roughness_amplitude_m, settings.correlation_scale_m, asperity)
    raise DomainError(f"unknown target '{name}' (use D1, D2, D3, sphere[:diameter_m] or rock[:seed])")


def build_scenario(config: AppConfig, **overrides) -> GraspScenario:
    """GraspScenario for the experiment section, with keyword overrides."""
    ex = config.experiment
    act = config.actuator
    anchors = tuple((a.current_a, a.torque_nm) for a in act.torque_anchors)
    _, interface = build_interface(config.interface)
    fields = dict(
        chain=build_chain(config.gripper),
        finger_azimuths=tuple(config.gripper.finger_azimuths_deg),
        interface=interface,
        target=build_target(config.target.kind, config),
        pull_angle=ex.pull_angle_deg,
        current=ex.current_a,
        ramp_rate=ex.ramp_rate_n_per_s,
        seed=ex.seed,
        mode=ex.mode,
        pull_azimuth=ex.pull_azimuth_deg,
        actuator=ActuatorModel(
            torque_anchors=anchors,
            ballscrew_pitch=act.ballscrew_pitch_m_per_rev,
            efficiency=act.efficiency,
            desync_stiffness=act.desync_stiffness_n_per_m,
            max_plate_travel=act.max_plate_travel_m,
            preload=act.preload_n,
            self_locking=act.self_locking,
        ),
        relatch=RelatchWindow(config.relatch.low_n, config.relatch.high_n,
                              config.relatch.rolloff_n, config.relatch.floor),
        finger_root_offset=config.gripper.finger_root_offset_m,
        cone_tilt=config.gripper.grip_cone_tilt_deg,
        cone_half_angle=config.gripper.grip_cone_half_angle_deg,
        tension_transfer=ex.tension_transfer,
        force_increment=ex.force_increment_n,
        force_cap=ex.force_cap_n,
        tangential_loading=ex.tangential_loading,
        scenario_id=ex.scenario_id,
    )
    fields.update(overrides)
    return GraspScenario(**fields)


def sweep_scenarios(config: AppConfig, **overrides) -> List[Tuple[str, str, GraspScenario]]:
    """One scenario per (target, angle, interface, current) cell.

    Returns (target name, interface name, scenario) triples; axis values
    are de-duplicated and sorted so the cell list is canonical.
    """
    sweep = config.sweep
    cells = []
    for target_name in sorted(set(sweep.targets)):
        target = build_target(target_name, config)
        for interface_name in sorted(set(sweep.interfaces)):
            _, interface = build_interface(interface_name)
            for angle in sorted(set(sweep.angles_deg)):
                for current in sorted(set(sweep.currents_a)):
                    scenario_id = f"{target_name}|{interface_name}|{angle:g}|{current:g}"
                    scenario = build_scenario(config, target=target, interface=interface, pull_angle=angle,
                                              current=current, scenario_id=scenario_id, **overrides)
                    cells.append((target_name, interface_name, scenario))
    return cells


def relatch_candidates(config: AppConfig) -> List[RelatchWindow]:
    """Every valid window in the calibration grid, in grid order."""
    grid = config.calibration.candidates
    windows = []
    for low in grid.low_n:
        for high in grid.high_n:
            for rolloff in grid.rolloff_n:
                for floor in grid.floor:
                    if low < high:
                        windows.append(RelatchWindow(low, high, rolloff, floor))
    return windows


class SettingsManager:
    """Loads and saves the scenario configuration file."""

    def __init__(self, config_path: Optional[str] = None):
        if config_path is None:
            self.config_file = Path(__file__).parent / "config.json"
        else:
            self.config_file = Path(config_path)
        self.config: Optional[AppConfig] = None

    def load_config(self) -> AppConfig:
        """Read and validate the config file; raises ConfigError on any problem."""
        try:
            with open(self.config_file, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigError([f"config file not found: {self.config_file}"]) from None
        except json.JSONDecodeError as e:
            raise ConfigError([f"config file is not valid JSON: {e}"]) from None
        if not isinstance(data, dict):
            raise ConfigError(["config root must be an object"])
        self.config = parse_config(data)
        logger.info("loaded config %s", self.config_file)
        return self.config

    def get_config(self) -> AppConfig:
        if self.config is None:
            return self.load_config()
        return self.config

    def save_config(self, config: AppConfig) -> bool:
        """Write a config to the managed file."""
        try:
            self.config_file.parent.mkdir(parents=True, exist_ok=True)
            with open(self.config_file, "w", encoding="utf-8") as f:
                f.write(config.model_dump_json(indent=2))
                f.write("\n")
            self.config = config
            return True
        except OSError as e:
            logger.error("could not save config %s: %s", self.config_file, e)
            return False

    def get_sample_config_content(self) -> str:
        """Default configuration as JSON text."""
        return AppConfig().model_dump_json(indent=2) + "\n"

    def create_sample_config_file(self, filename: str = "config.sample.json") -> bool:
        """Write the default configuration next to the managed file."""
        try:
            sample_file = self.config_file.parent / filename
            with open(sample_file, "w", encoding="utf-8") as f:
                f.write(self.get_sample_config_content())
            logger.info("sample config created: %s", sample_file)
            return True
        except OSError as e:
            logger.error("could not create sample config: %s", e)
            return False
