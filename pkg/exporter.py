import json
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import pandas as pd

from finger_mechanics import PressureProfile
from grasp_sim import CalibrationResult, DetachmentTrace, GraspScenario

FLOAT_FORMAT = "%.9g"

SUMMARY_COLUMNS = [
    "scenario_id", "angle_deg", "target_diam_mm", "spine_angle_deg", "spines_per_module",
    "current_a", "seed", "max_force_n", "first_slip_n", "detached",
]
SWEEP_COLUMNS = SUMMARY_COLUMNS + ["mean_max_force_n", "std_max_force_n"]


class CSVExporter:
    """Writes simulation results as plain CSV for external plotting.

    Every table has a header row, a fixed column order, 9 significant
    digits and '\\n' line endings, so identical inputs give identical bytes.
    """

    def __init__(self):
        pass

    def _write(self, frame: pd.DataFrame, path: str) -> str:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return str(path)

    def to_text(self, frame: pd.DataFrame) -> str:
        return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

    def pressure_frame(self, profile: PressureProfile) -> pd.DataFrame:
        return pd.DataFrame({
            "phalanx_index": list(range(1, len(profile.pressures) + 1)),
            "pressure_n_per_m": list(profile.pressures),
        })

    def write_pressure(self, profile: PressureProfile, path: str) -> str:
        return self._write(self.pressure_frame(profile), path)

    def trace_frame(self, trace: DetachmentTrace, n_fingers: int) -> pd.DataFrame:
        """One row per force sample; finger loads are components along the pull."""
        finger_columns = [f"finger_{i}_load_n" for i in range(n_fingers)]
        rows = []
        for sample in trace.samples:
            row = {"time_s": sample.time_s, "applied_force_n": sample.applied_force}
            row.update(zip(finger_columns, sample.finger_loads))
            row["slip_count_cum"] = sample.slip_count_cum
            rows.append(row)
        columns = ["time_s", "applied_force_n"] + finger_columns + ["slip_count_cum"]
        return pd.DataFrame(rows, columns=columns)

    def write_trace(self, trace: DetachmentTrace, n_fingers: int, path: str) -> str:
        return self._write(self.trace_frame(trace, n_fingers), path)

    def summary_row(self, scenario: GraspScenario, trace: DetachmentTrace,
                    target_name: str = "", interface_name: str = "") -> Dict:
        """Summary record of one run; target/interface are kept for grouping only."""
        return {
            "scenario_id": scenario.scenario_id,
            "angle_deg": scenario.pull_angle,
            "target_diam_mm": scenario.target.nominal_diameter * 1000,
            "spine_angle_deg": scenario.interface.inclination,
            "spines_per_module": scenario.interface.spines_per_module,
            "current_a": scenario.current,
            "seed": trace.seed,
            "max_force_n": trace.max_force,
            "first_slip_n": trace.first_slip_force,
            "detached": trace.detached,
            "target": target_name or scenario.target.label(),
            "interface": interface_name or f"spm{scenario.interface.spines_per_module}",
        }

    def summary_frame(self, rows: Sequence[Dict]) -> pd.DataFrame:
        return pd.DataFrame(list(rows), columns=SUMMARY_COLUMNS + ["target", "interface"])

    def write_summary(self, rows: Sequence[Dict], path: str) -> str:
        frame = self.summary_frame(rows).sort_values(["scenario_id", "seed"], kind="mergesort")
        return self._write(frame[SUMMARY_COLUMNS], path)

    def write_sweep(self, cells: pd.DataFrame, path: str) -> str:
        return self._write(cells[SWEEP_COLUMNS], path)

    def calibration_frame(self, result: CalibrationResult) -> pd.DataFrame:
        currents, means = zip(*result.curve) if result.curve else ((), ())
        return pd.DataFrame({"current_a": list(currents), "mean_max_force_n": list(means)})

    def write_calibration(self, result: CalibrationResult, curve_path: str, params_path: str) -> Tuple[str, str]:
        """Current-response curve as CSV and the fitted window as JSON."""
        self._write(self.calibration_frame(result), curve_path)
        params = {
            "low_n": result.window.low,
            "high_n": result.window.high,
            "rolloff_n": result.window.rolloff,
            "floor": result.window.floor,
            "converged": result.converged,
            "score_n": result.score,
            "candidates": result.candidates_evaluated,
        }
        Path(params_path).parent.mkdir(parents=True, exist_ok=True)
        with open(params_path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(params, f, indent=2, sort_keys=True)
            f.write("\n")
        return str(curve_path), str(params_path)

    def mission_frame(self, rows: List[Dict]) -> pd.DataFrame:
        return pd.DataFrame(rows, columns=["mass_kg", "gravity_m_per_s2", "stance_legs",
                                           "required_force_n", "margin_sigma"])

    def write_mission(self, rows: List[Dict], path: str) -> str:
        return self._write(self.mission_frame(rows), path)
