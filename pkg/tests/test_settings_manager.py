import unittest
import tempfile
import json
import math
import os
from pathlib import Path
import sys

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import ConfigError, DomainError
from settings_manager import (
    AppConfig,
    SettingsManager,
    build_interface,
    build_scenario,
    build_target,
    parse_config,
    relatch_candidates,
    sweep_scenarios,
    unit_suffix_violations,
)
from spine_contact import ContactMode


class TestSettingsManager(unittest.TestCase):
    def setUp(self):
        """Set up test environment."""
        self.temp_dir = tempfile.mkdtemp()
        self.config_path = Path(self.temp_dir) / "config.json"
        self.settings_manager = SettingsManager(str(self.config_path))

    def tearDown(self):
        """Clean up test environment."""
        import shutil
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def _write(self, data):
        with open(self.config_path, "w", encoding="utf-8") as f:
            json.dump(data, f)

    def test_default_config(self):
        """Test default configuration values"""
        config = AppConfig()
        self.assertEqual(config.gripper.phalanx_count, 4)
        self.assertEqual(config.gripper.finger_azimuths_deg, [0.0, 90.0, 180.0, 270.0])
        self.assertEqual(config.experiment.mode, ContactMode.CONSISTENT)
        self.assertEqual(config.experiment.force_cap_n, 400.0)
        self.assertEqual(config.relatch.low_n, 190.0)
        self.assertEqual(config.sweep.targets, ["D1", "D2", "D3"])

    def test_missing_config_file(self):
        """Test a missing file is a config error"""
        with self.assertRaises(ConfigError) as ctx:
            self.settings_manager.load_config()
        self.assertIn("not found", str(ctx.exception))

    def test_invalid_json(self):
        """Test malformed JSON is a config error"""
        self.config_path.write_text("{not json", encoding="utf-8")
        with self.assertRaises(ConfigError):
            self.settings_manager.load_config()

    def test_save_and_load_roundtrip(self):
        """Test a saved config loads back unchanged"""
        config = AppConfig()
        config.experiment.seed = 42
        self.assertTrue(self.settings_manager.save_config(config))

        loaded = SettingsManager(str(self.config_path)).get_config()
        self.assertEqual(loaded, config)

    def test_unknown_keys_rejected(self):
        """Test every unknown key is reported at once"""
        self._write({"experiment": {"seeed": 3}, "gripper": {"colour": "red"}})
        with self.assertRaises(ConfigError) as ctx:
            self.settings_manager.load_config()
        violations = "\n".join(ctx.exception.violations)
        self.assertIn("seeed", violations)
        self.assertIn("colour", violations)
        self.assertGreaterEqual(len(ctx.exception.violations), 2)

    def test_unit_suffix_check(self):
        """Test keys without a unit suffix are flagged"""
        self.assertEqual(unit_suffix_violations({"gripper": {"pulley_radius_m": 0.005}}), [])
        violations = unit_suffix_violations({"gripper": {"pulley_radius": 0.005}})
        self.assertEqual(len(violations), 1)
        self.assertIn("gripper.pulley_radius", violations[0])

    def test_domain_violations_reported(self):
        """Test invalid physical values become config errors"""
        with self.assertRaises(ConfigError) as ctx:
            parse_config({"gripper": {"phalanx_length_m": -1.0}})
        self.assertTrue(any(v.startswith("gripper.phalanx_length_m:") for v in ctx.exception.violations))

        with self.assertRaises(ConfigError):
            parse_config({"sweep": {"targets": []}})
        with self.assertRaises(ConfigError):
            parse_config({"sweep": {"interfaces": ["quad45"]}})
        with self.assertRaises(ConfigError):
            parse_config({"interface": {"preset": "octo"}})

    def test_range_violations_listed_with_unknown_keys(self):
        """Test out-of-range values are reported together with unknown keys"""
        with self.assertRaises(ConfigError) as ctx:
            parse_config({"experiment": {"seeed": 3, "pull_angle_deg": 120.0},
                          "relatch": {"floor": 1.5}, "sweep": {"angles_deg": [0.0, -10.0]}})
        violations = ctx.exception.violations
        self.assertTrue(any("seeed" in v for v in violations))
        self.assertTrue(any(v.startswith("experiment.pull_angle_deg:") for v in violations))
        self.assertTrue(any(v.startswith("relatch.floor:") for v in violations))
        self.assertTrue(any(v.startswith("sweep.angles_deg.1:") for v in violations))

    def test_cross_field_ranges(self):
        """Test checks that span several keys of one section"""
        cases = [
            {"asperity": {"beta_low_deg": 30.0, "beta_max_deg": 20.0}},
            {"asperity": {"base_friction": 1.0, "beta_max_deg": 50.0}},
            {"asperity": {"distribution": "truncnorm", "mean_deg": 20.0}},
            {"relatch": {"low_n": 240.0, "high_n": 235.0}},
            {"gripper": {"pulley_radius_m": 0.02}},
        ]
        for data in cases:
            with self.subTest(data=data):
                with self.assertRaises(ConfigError):
                    parse_config(data)
        with self.assertRaises(ConfigError) as ctx:
            parse_config({"asperity": {"distribution": "gaussian"}})
        self.assertTrue(any(v.startswith("asperity.distribution:") for v in ctx.exception.violations))

    def test_phalanx_lengths_match_count(self):
        """Test an explicit lengths list must have phalanx_count entries"""
        with self.assertRaises(ConfigError) as ctx:
            parse_config({"gripper": {"phalanx_count": 4, "phalanx_lengths_m": [0.04, 0.03, 0.02]}})
        self.assertTrue(any("phalanx_lengths_m has 3 entries but phalanx_count is 4" in v
                            for v in ctx.exception.violations))

        config = parse_config({"gripper": {"phalanx_count": 3, "phalanx_lengths_m": [0.04, 0.03, 0.02]}})
        self.assertEqual(build_scenario(config).chain.lengths, (0.04, 0.03, 0.02))

    def test_preset_excludes_explicit_interface(self):
        """Test a preset cannot be combined with an explicit spine count or inclination"""
        for extra in ({"spines_per_module": 4}, {"inclination_deg": 30.0},
                      {"spines_per_module": 2, "inclination_deg": 15.0}):
            with self.subTest(extra=extra):
                with self.assertRaises(ConfigError) as ctx:
                    parse_config({"interface": {"preset": "quad30", **extra}})
                message = "\n".join(ctx.exception.violations)
                self.assertIn("preset 'quad30' fixes the interface", message)
                for name in extra:
                    self.assertIn(name, message)

        label, interface = build_interface(parse_config({"interface": {"preset": "dual30"}}).interface)
        self.assertEqual((label, interface.spines_per_module), ("dual30", 2))
        label, interface = build_interface(AppConfig().interface)
        self.assertEqual(label, "spm4_inc30")

    def test_repository_config_is_valid(self):
        """Test the shipped config.json passes validation"""
        repo_config = Path(__file__).resolve().parent.parent / "config.json"
        config = SettingsManager(str(repo_config)).load_config()
        self.assertEqual(config.interface.preset, "quad30")
        self.assertEqual(len(config.sweep.angles_deg), 10)
        self.assertEqual(len(sweep_scenarios(config)), 30)

    def test_build_scenario(self):
        """Test scenario built from the experiment section with overrides"""
        config = AppConfig()
        scenario = build_scenario(config)
        self.assertEqual(scenario.n_fingers, 4)
        self.assertEqual(scenario.current, 0.25)
        self.assertAlmostEqual(scenario.target.nominal_diameter, 0.27, places=12)
        self.assertAlmostEqual(scenario.chain.joint_limit, math.pi / 2, places=12)
        self.assertEqual(scenario.actuator.torque_anchors, ((0.15, 0.084), (0.275, 0.179)))

        overridden = build_scenario(config, seed=9, mode=ContactMode.LITERAL)
        self.assertEqual(overridden.seed, 9)
        self.assertEqual(overridden.mode, ContactMode.LITERAL)

    def test_build_target_names(self):
        """Test family, sphere and rock target names"""
        config = AppConfig()
        self.assertAlmostEqual(build_target("D1", config).nominal_diameter, 0.135, places=12)
        self.assertAlmostEqual(build_target("D3", config).nominal_diameter, 0.405, places=12)
        self.assertAlmostEqual(build_target("sphere:0.2", config).nominal_diameter, 0.2, places=12)
        self.assertEqual(build_target("rock:7", config).seed, 7)
        with self.assertRaises(DomainError):
            build_target("sphere", config)
        with self.assertRaises(DomainError):
            build_target("cylinder", config)

    def test_build_interface(self):
        """Test presets and explicit interfaces"""
        label, interface = build_interface("quad15")
        self.assertEqual(label, "quad15")
        self.assertEqual(interface.inclination, 15.0)
        config = parse_config({"interface": {"spines_per_module": 2, "inclination_deg": 20.0}})
        label, interface = build_interface(config.interface)
        self.assertEqual(label, "spm2_inc20")
        self.assertEqual(interface.spines_per_module, 2)

    def test_sweep_scenarios_are_canonical(self):
        """Test sweep cells are sorted and de-duplicated"""
        shuffled = parse_config({"sweep": {"angles_deg": [20.0, 0.0, 20.0], "currents_a": [0.25],
                                           "targets": ["D2", "D1"], "interfaces": ["quad30"]}})
        ordered = parse_config({"sweep": {"angles_deg": [0.0, 20.0], "currents_a": [0.25],
                                          "targets": ["D1", "D2"], "interfaces": ["quad30"]}})
        cells = sweep_scenarios(shuffled)

        self.assertEqual(len(cells), 4)
        self.assertEqual([c[2].scenario_id for c in cells],
                         ["D1|quad30|0|0.25", "D1|quad30|20|0.25", "D2|quad30|0|0.25", "D2|quad30|20|0.25"])
        self.assertEqual(cells, sweep_scenarios(ordered))

    def test_relatch_candidates(self):
        """Test the candidate grid skips windows with low >= high"""
        config = parse_config({"calibration": {"candidates": {
            "low_n": [190.0, 240.0], "high_n": [235.0], "rolloff_n": [20.0], "floor": [0.0, 0.1]}}})
        windows = relatch_candidates(config)
        self.assertEqual(len(windows), 2)
        self.assertTrue(all(w.low == 190.0 for w in windows))
        self.assertEqual([w.floor for w in windows], [0.0, 0.1])

    def test_get_sample_config_content(self):
        """Test sample configuration content is the default config as JSON"""
        sample_content = self.settings_manager.get_sample_config_content()

        self.assertIsInstance(sample_content, str)
        data = json.loads(sample_content)
        self.assertIn("gripper", data)
        self.assertIn("calibration", data)
        self.assertEqual(parse_config(data), AppConfig())

    def test_create_sample_config_file(self):
        """Test creating sample configuration file"""
        sample_filename = "test_config.sample.json"
        result = self.settings_manager.create_sample_config_file(sample_filename)

        self.assertTrue(result)
        sample_file = Path(self.temp_dir) / sample_filename
        self.assertTrue(sample_file.exists())
        with open(sample_file, "r", encoding="utf-8") as f:
            self.assertEqual(parse_config(json.load(f)), AppConfig())


if __name__ == '__main__':
    unittest.main()
