import unittest
import itertools
import math
import sys
import os
from dataclasses import replace

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import DomainError
from finger_mechanics import PhalanxChain
from grasp_sim import (
    CalibrationBand,
    GraspScenario,
    calibrate_relatch,
    current_grid,
    distribute_load,
    min_norm_nonnegative,
    monte_carlo,
    pull_angle_grid,
    required_grip_force,
    resolve_gravity,
    run_batch,
    score_curve,
    simulate_detachment,
)
from spine_contact import INTERFACE_PRESETS, AsperityModel, RelatchWindow
from target_model import make_rock, make_sphere, sphere_family


def _no_slip_scenario(**changes):
    # every spine sits on a 40 deg asperity and always relatches
    asperity = AsperityModel.uniform_deg(0.4, 40.0, 40.0)
    fields = dict(
        target=make_sphere(0.27, asperity),
        relatch=RelatchWindow(low=0.0, high=1e6, rolloff=1.0, floor=1.0),
        force_cap=50.0,
    )
    fields.update(changes)
    return GraspScenario(**fields)


class TestLoadDistribution(unittest.TestCase):
    def test_axial_pull_is_shared_equally(self):
        """Test an axial pull splits evenly over four symmetric fingers"""
        result = distribute_load(12.0, 0.0, (0.0, 90.0, 180.0, 270.0))
        self.assertTrue(result.feasible)
        for load in result.loads:
            self.assertAlmostEqual(load, 3.0, places=9)
        self.assertAlmostEqual(sum(result.resolved), 12.0, places=9)

    def test_tangential_pull_loads_opposite_finger(self):
        """Test a 90 deg pull towards azimuth 0 is carried by the finger at 180 deg"""
        result = distribute_load(10.0, 90.0, (0.0, 90.0, 180.0, 270.0))
        self.assertTrue(result.feasible)
        self.assertEqual(int(np.argmax(result.loads)), 2)
        self.assertAlmostEqual(result.loads[2], 10.0, places=9)

    def test_opposite_finger_carries_more_at_intermediate_angles(self):
        """Test the finger opposite the pull takes more than the side fingers between 10 and 40 deg"""
        for angle in (10.0, 20.0, 30.0, 40.0):
            result = distribute_load(10.0, angle, (0.0, 90.0, 180.0, 270.0))
            self.assertTrue(result.feasible)
            self.assertGreater(result.loads[2], result.loads[1])
            self.assertAlmostEqual(result.loads[1], result.loads[3], places=9)
            self.assertAlmostEqual(sum(result.resolved), 10.0, places=6)

    def test_loads_follow_cone_alignment(self):
        """Test a 30 deg pull splits in proportion to cos(axis offset) - cos(60 deg)"""
        result = distribute_load(10.0, 30.0, (0.0, 90.0, 180.0, 270.0))
        # offsets: 75 deg (outside), 15 deg opposite, acos(cos45 cos30) for the sides
        side = math.cos(math.radians(45.0)) * math.cos(math.radians(30.0)) - 0.5
        opposite = math.cos(math.radians(15.0)) - 0.5
        total = opposite + 2 * side
        expected = [0.0, 10.0 * side / total, 10.0 * opposite / total, 10.0 * side / total]
        for got, want in zip(result.loads, expected):
            self.assertAlmostEqual(got, want, places=6)

    def test_split_is_continuous_at_cone_edge(self):
        """Test the finger near its cone edge fades out instead of dropping a quarter of the load"""
        near_edge = distribute_load(10.0, 14.9, (0.0, 90.0, 180.0, 270.0))
        past_edge = distribute_load(10.0, 15.1, (0.0, 90.0, 180.0, 270.0))
        self.assertGreater(near_edge.loads[0], 0.0)
        self.assertLess(near_edge.loads[0], 0.05)
        self.assertEqual(past_edge.loads[0], 0.0)
        self.assertLess(abs(near_edge.loads[2] - past_edge.loads[2]), 0.1)

    def test_three_finger_brute_force(self):
        """Test the 45 deg three-finger split against a grid search"""
        azimuths = (0.0, 120.0, 240.0)
        result = distribute_load(10.0, 45.0, azimuths)

        theta = math.radians(45.0)
        pull = 10.0 * np.array([math.sin(theta), 0.0, math.cos(theta)])
        # stiffness: cos(offset from the grip axis) - cos 60; only positive ones anchor
        tilt = math.radians(45.0)
        axes = [np.array([-math.sin(tilt) * math.cos(math.radians(a)), -math.sin(tilt) * math.sin(math.radians(a)),
                          math.cos(tilt)]) for a in azimuths]
        stiffness = [float(axis @ pull) / 10.0 - 0.5 for axis in axes]
        usable = [k > 0 for k in stiffness]
        self.assertEqual(usable, [False, True, True])
        grid = np.round(np.arange(0.0, 10.0 + 1e-9, 0.5), 10)
        best = None
        for loads in itertools.product(grid, repeat=3):
            if any(load > 0 and not ok for load, ok in zip(loads, usable)):
                continue
            resultant = sum(loads) * pull / 10.0
            if np.linalg.norm(resultant - pull) > 1e-6:
                continue
            norm = sum(load * load / k for load, k, ok in zip(loads, stiffness, usable) if ok)
            if best is None or norm < best[0]:
                best = (norm, loads)

        self.assertIsNotNone(best)
        for got, want in zip(result.loads, best[1]):
            self.assertAlmostEqual(got, want, delta=1e-3)

    def test_min_norm_with_independent_directions(self):
        """Test the minimum-norm nonnegative split over three planar directions"""
        directions = np.array([[1.0, 0.0, 1 / math.sqrt(2)], [0.0, 1.0, 1 / math.sqrt(2)]])
        weights, residual = min_norm_nonnegative(directions, np.array([1.0, 1.0]))

        np.testing.assert_allclose(weights, [0.5, 0.5, 1 / math.sqrt(2)], atol=1e-9)
        self.assertLess(residual, 1e-9)

    def test_min_norm_reports_residual(self):
        """Test an unreachable target leaves a residual"""
        weights, residual = min_norm_nonnegative(np.array([[1.0], [0.0]]), np.array([0.0, 1.0]))
        self.assertAlmostEqual(weights[0], 0.0, places=12)
        self.assertAlmostEqual(residual, 1.0, places=9)

    def test_infeasible_pull(self):
        """Test a pull no finger can anchor is infeasible"""
        result = distribute_load(10.0, 90.0, (90.0, 270.0))
        self.assertFalse(result.feasible)
        self.assertAlmostEqual(result.unresisted, 10.0, places=9)
        self.assertIsNone(result.max_load_finger)

    def test_detached_fingers_are_skipped(self):
        """Test inactive fingers carry nothing"""
        result = distribute_load(12.0, 0.0, (0.0, 90.0, 180.0, 270.0), active=(True, False, True, True))
        self.assertEqual(result.loads[1], 0.0)
        for index in (0, 2, 3):
            self.assertAlmostEqual(result.loads[index], 4.0, places=9)

    def test_load_conservation(self):
        """Test resolved finger loads sum to the pull over the bench angles"""
        rng = np.random.default_rng(1)
        for angle in pull_angle_grid():
            force = float(rng.uniform(1.0, 300.0))
            result = distribute_load(force, angle, (0.0, 90.0, 180.0, 270.0))
            self.assertTrue(result.feasible)
            self.assertLess(abs(sum(result.resolved) - force), 1e-6)
            for load in result.loads:
                self.assertGreaterEqual(load, 0.0)

    def test_negative_force_rejected(self):
        """Test a negative pull is a domain error"""
        with self.assertRaises(DomainError):
            distribute_load(-1.0, 0.0, (0.0, 180.0))


class TestDetachment(unittest.TestCase):
    def test_protocol_grids(self):
        """Test the bench angle and current grids"""
        self.assertEqual(pull_angle_grid(), (0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0))
        self.assertEqual(current_grid(), (0.15, 0.175, 0.2, 0.225, 0.25, 0.275))

    def test_scenario_validation(self):
        """Test scenario invariants"""
        with self.assertRaises(DomainError):
            GraspScenario(pull_angle=95.0)
        with self.assertRaises(DomainError):
            GraspScenario(ramp_rate=0.0)
        with self.assertRaises(DomainError):
            GraspScenario(finger_azimuths=(0.0,))
        with self.assertRaises(DomainError):
            GraspScenario(seed=-1)

    def test_no_slip_reaches_cap(self):
        """Test a grip that never slips stops at the force cap"""
        trace = simulate_detachment(_no_slip_scenario())
        self.assertEqual(trace.max_force, 50.0)
        self.assertFalse(trace.detached)
        self.assertIsNone(trace.first_slip_force)
        self.assertAlmostEqual(trace.samples[-1].applied_force, 50.0, places=9)

    def test_same_seed_same_trace(self):
        """Test identical scenario and seed give identical traces"""
        scenario = GraspScenario(seed=123)
        self.assertEqual(simulate_detachment(scenario), simulate_detachment(scenario))

    def test_trace_invariants(self):
        """Test force order, load conservation and nothing after detachment"""
        for seed in range(5):
            trace = simulate_detachment(GraspScenario(seed=seed))
            forces = [s.applied_force for s in trace.samples]
            for before, after in zip(forces, forces[1:]):
                self.assertLessEqual(before, after)

            balanced = trace.samples[:-1] if trace.detached else trace.samples
            for sample in balanced:
                self.assertLess(abs(sum(sample.finger_loads) - sample.applied_force), 1e-6)
                self.assertAlmostEqual(sample.time_s, sample.applied_force, places=9)

            if trace.detached:
                self.assertGreater(trace.samples[-1].applied_force, trace.max_force)
            if trace.first_slip_force is not None:
                if trace.first_slip_force > trace.max_force:
                    # only a grip that lets go in the increment of its first slip
                    self.assertTrue(trace.detached)
                    self.assertEqual(trace.first_slip_force, trace.samples[-1].applied_force)
                else:
                    self.assertLessEqual(trace.first_slip_force, trace.max_force)
            counts = [s.slip_count_cum for s in trace.samples]
            self.assertEqual(counts, sorted(counts))
            self.assertEqual(counts[-1], trace.slip_count)

    def test_release_on_first_slip_keeps_slip_force(self):
        """Test a grip that lets go on its first slip reports the force it slipped at"""
        # one phalanx per finger and identical asperities: every spine slips together
        scenario = GraspScenario(
            chain=PhalanxChain.uniform(n=1),
            target=make_sphere(0.27, AsperityModel.uniform_deg(0.4, 20.0, 20.0)),
            relatch=RelatchWindow(low=1e5, high=2e5, rolloff=1.0, floor=0.0),
        )
        trace = simulate_detachment(scenario)

        self.assertTrue(trace.detached)
        self.assertEqual(trace.slip_count, 4 * 4)
        self.assertEqual(trace.relatch_count, 0)
        self.assertEqual(trace.first_slip_force, trace.samples[-1].applied_force)
        self.assertAlmostEqual(trace.first_slip_force - trace.max_force, scenario.force_increment, places=9)

    def test_final_spine_states(self):
        """Test the trace ends with one state per spine, lost spines disengaged"""
        scenario = GraspScenario(seed=4)
        trace = simulate_detachment(scenario)
        spines = trace.final_spines

        self.assertEqual(len(spines), scenario.n_fingers * scenario.chain.n * scenario.interface.spines_per_module)
        beta_max = scenario.target.asperity.beta_max
        for state in spines:
            self.assertGreaterEqual(state.current_beta, 0.0)
            self.assertLessEqual(state.current_beta, beta_max)
            self.assertGreaterEqual(state.normal_load, 0.0)
            self.assertGreaterEqual(state.tangential_load, 0.0)
            if state.engaged:
                self.assertTrue(scenario.interface.engages(state.current_beta))
        if trace.detached:
            self.assertLess(sum(state.engaged for state in spines), len(spines))
        self.assertEqual(run_batch([scenario])[0].final_spines, ())

    def test_worker_count_does_not_change_results(self):
        """Test one and eight workers give identical runs"""
        scenarios = [GraspScenario(seed=s, pull_angle=angle) for s in range(6) for angle in (0.0, 30.0)]
        self.assertEqual(run_batch(scenarios, workers=1), run_batch(scenarios, workers=8))

    def test_ramp_rate_scales_time(self):
        """Test sample time is force over ramp rate"""
        trace = simulate_detachment(_no_slip_scenario(ramp_rate=2.0, force_cap=5.0))
        self.assertAlmostEqual(trace.samples[-1].time_s, 2.5, places=9)

    def test_run_batch_keeps_order(self):
        """Test batch results follow input order for any worker count"""
        scenarios = [GraspScenario(seed=s) for s in range(4)]
        serial = run_batch(scenarios, workers=1)
        parallel = run_batch(scenarios, workers=2)

        self.assertEqual([r.seed for r in serial], [0, 1, 2, 3])
        self.assertEqual([r.max_force for r in serial], [r.max_force for r in parallel])
        for run, scenario in zip(serial, scenarios):
            self.assertEqual(run.max_force, simulate_detachment(scenario).max_force)
            self.assertEqual(run.samples, ())

    def test_monte_carlo_zero_variance(self):
        """Test a deterministic no-slip cell has zero spread"""
        stats = monte_carlo(_no_slip_scenario(), 3)
        self.assertEqual(stats.mean, 50.0)
        self.assertEqual(stats.std, 0.0)

    def test_monte_carlo_single_repetition(self):
        """Test one repetition reports its own max force"""
        scenario = GraspScenario(seed=7)
        stats = monte_carlo(scenario, 1)
        self.assertEqual(stats.mean, simulate_detachment(scenario).max_force)
        self.assertEqual(stats.std, 0.0)
        with self.assertRaises(DomainError):
            monte_carlo(scenario, 0)

    def test_literal_mode_runs(self):
        """Test the printed normal term mode produces a valid run"""
        trace = simulate_detachment(GraspScenario(mode="literal", seed=3))
        self.assertGreaterEqual(trace.max_force, 0.0)
        self.assertEqual(trace.seed, 3)

    def test_rock_target_runs(self):
        """Test a rough rock target produces a valid run"""
        scenario = GraspScenario(target=make_rock(4, 0.27, 0.01, 0.05), seed=2)
        trace = simulate_detachment(scenario)
        self.assertGreaterEqual(trace.max_force, 0.0)
        self.assertEqual(trace, simulate_detachment(scenario))

    def test_median_first_slip_near_twenty_newtons(self):
        """Test the D2 bench cell first slips around 20 N"""
        base = GraspScenario(seed=0)
        runs = run_batch([base.with_seed(s) for s in range(50)])
        slips = [r.first_slip_force for r in runs if r.first_slip_force is not None]
        median = float(np.median(slips))
        self.assertGreaterEqual(median, 15.0)
        self.assertLessEqual(median, 25.0)


class TestTrends(unittest.TestCase):
    """Qualitative bench trends over a fixed seed set."""

    REPS = 200

    def _stats(self, **changes):
        return monte_carlo(replace(GraspScenario(seed=1000), **changes), self.REPS)

    def _assert_above(self, high, low):
        margin = math.sqrt(high.sem ** 2 + low.sem ** 2)
        self.assertGreater(high.mean - low.mean, margin)

    def test_smaller_targets_hold_more(self):
        """Test mean max force falls from D1 to D2 to D3"""
        d1, d2, d3 = (self._stats(target=make_sphere(d)) for d in sphere_family(0.27))
        self._assert_above(d1, d2)
        self._assert_above(d2, d3)

    def test_tangential_pull_beats_sixty_degrees(self):
        """Test a 90 deg pull holds more than a 60 deg pull"""
        self._assert_above(self._stats(pull_angle=90.0), self._stats(pull_angle=60.0))

    def test_steeper_spines_hold_at_least_as_much(self):
        """Test 30 deg quad spines hold at least as much as 15 deg ones"""
        quad30 = self._stats(interface=INTERFACE_PRESETS["quad30"])
        quad15 = self._stats(interface=INTERFACE_PRESETS["quad15"])
        self.assertGreaterEqual(quad30.mean - quad15.mean, quad15.sem)


class TestMissionAndCalibration(unittest.TestCase):
    def test_required_grip_force(self):
        """Test mission loads on the Moon and Mars"""
        self.assertAlmostEqual(required_grip_force(20, 1.62, 3), 10.8, delta=0.01)
        self.assertAlmostEqual(required_grip_force(20, 3.71, 3), 24.73, delta=0.01)
        self.assertEqual(required_grip_force(0, 9.81, 3), 0)
        self.assertAlmostEqual(required_grip_force(40, 1.62, 3), 2 * required_grip_force(20, 1.62, 3), places=12)
        self.assertAlmostEqual(required_grip_force(20, 1.62, 6), required_grip_force(20, 1.62, 3) / 2, places=12)
        with self.assertRaises(DomainError):
            required_grip_force(20, 1.62, 0)

    def test_resolve_gravity(self):
        """Test named bodies and numeric gravity"""
        self.assertEqual(resolve_gravity("moon"), 1.62)
        self.assertEqual(resolve_gravity("Mars"), 3.71)
        self.assertEqual(resolve_gravity("9.5"), 9.5)
        self.assertEqual(resolve_gravity(2.0), 2.0)
        with self.assertRaises(DomainError) as ctx:
            resolve_gravity("pluto")
        self.assertIn("earth", str(ctx.exception))

    def test_score_curve(self):
        """Test margin of the in-band peak over the rest of the curve"""
        curve = ((0.15, 10.0), (0.2, 12.0), (0.225, 15.0), (0.25, 14.0), (0.275, 13.0))
        self.assertAlmostEqual(score_curve(curve, (0.225, 0.25)), 2.0, places=12)
        self.assertLess(score_curve(((0.15, 20.0), (0.25, 10.0)), (0.225, 0.25)), 0)

    def test_single_compliant_candidate(self):
        """Test a one-candidate search that peaks in band converges on it"""
        window = RelatchWindow(190, 235, 20, 0)
        means = {0.15: 20.0, 0.175: 25.0, 0.2: 30.0, 0.225: 43.0, 0.25: 49.0, 0.275: 44.0}
        result = calibrate_relatch(CalibrationBand(), GraspScenario(), [window],
                                   evaluate=lambda sc: means[sc.current])

        self.assertTrue(result.converged)
        self.assertEqual(result.window, window)
        self.assertEqual(result.candidates_evaluated, 1)
        self.assertEqual(dict(result.curve), means)

    def test_no_compliant_candidate(self):
        """Test the best candidate comes back unconverged when none peaks in band"""
        windows = [RelatchWindow(100, 120, 10, 0), RelatchWindow(300, 320, 10, 0)]

        def evaluate(scenario):
            # first window peaks low, second peaks high but closer to the band
            if scenario.relatch.low == 100:
                return 100.0 - 100 * scenario.current
            return 10.0 + 100 * scenario.current

        result = calibrate_relatch(CalibrationBand(), GraspScenario(), windows, evaluate=evaluate)
        self.assertFalse(result.converged)
        self.assertEqual(result.window, windows[1])

    def test_calibration_needs_full_grid(self):
        """Test a partial current grid or empty search space is rejected"""
        with self.assertRaises(DomainError):
            calibrate_relatch(CalibrationBand(current_grid=(0.2, 0.25)), GraspScenario(),
                              [RelatchWindow()], evaluate=lambda sc: 0.0)
        with self.assertRaises(DomainError):
            calibrate_relatch(CalibrationBand(), GraspScenario(), [], evaluate=lambda sc: 0.0)

    def test_default_window_peaks_in_band(self):
        """Test the default relatch window puts the current-response peak at 0.225-0.25 A"""
        base = GraspScenario(seed=1000)
        result = calibrate_relatch(CalibrationBand(), base, [RelatchWindow()], repetitions=50)

        self.assertTrue(result.converged)
        best = max(result.curve, key=lambda point: point[1])[0]
        self.assertIn(best, (0.225, 0.25))

        # re-running the winning cell reproduces the stored curve point
        rerun = monte_carlo(replace(base, current=best, relatch=result.window), 50).mean
        self.assertEqual(rerun, dict(result.curve)[best])


if __name__ == '__main__':
    unittest.main()
