import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from errors import DomainError


# Columns that identify a sweep cell, in canonical sort order
CELL_KEY_COLUMNS = ["target", "angle_deg", "interface", "current_a"]


@dataclass(frozen=True)
class SweepStats:
    """Max-force statistics of one sweep cell."""
    mean: float
    std: float
    repetitions: int
    max_forces: Tuple[float, ...] = ()
    first_slips: Tuple[Optional[float], ...] = ()

    @property
    def sem(self) -> float:
        """Standard error of the mean."""
        return self.std / math.sqrt(self.repetitions)

    @property
    def median_first_slip(self) -> Optional[float]:
        values = [v for v in self.first_slips if v is not None]
        if not values:
            return None
        return float(np.median(values))


@dataclass(frozen=True)
class OverallSummary:
    total_runs: int
    total_cells: int
    mean_max_force: float
    std_max_force: float
    detached_runs: int


def _sample_std(values: pd.Series) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values.to_numpy(dtype=float), ddof=1))


class SweepCalculator:
    def __init__(self):
        pass

    def cell_stats(self, max_forces: Sequence[float],
                   first_slips: Sequence[Optional[float]] = ()) -> SweepStats:
        """Mean and sample standard deviation over the repetitions of a cell."""
        if len(max_forces) < 1:
            raise DomainError("a sweep cell needs at least one repetition")
        values = np.asarray(max_forces, dtype=float)
        std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        return SweepStats(
            mean=float(np.mean(values)),
            std=std,
            repetitions=len(values),
            max_forces=tuple(float(v) for v in values),
            first_slips=tuple(first_slips),
        )

    def aggregate(self, runs: pd.DataFrame) -> pd.DataFrame:
        """Collapse per-run rows into one row per cell.

        Each cell reports its lowest seed, the largest max force, the
        median first slip, whether any run detached, and the mean/std of
        max_force_n. Rows are sorted by cell key so the output does not
        depend on the order the runs finished in.
        """
        if runs.empty:
            raise DomainError("no runs to aggregate")
        ordered = runs.sort_values(CELL_KEY_COLUMNS + ["seed"], kind="mergesort").copy()
        ordered["first_slip_n"] = pd.to_numeric(ordered["first_slip_n"], errors="coerce")
        ordered["detached"] = ordered["detached"].astype(bool)
        cells = ordered.groupby(CELL_KEY_COLUMNS, sort=True).agg(
            scenario_id=("scenario_id", "first"),
            target_diam_mm=("target_diam_mm", "first"),
            spine_angle_deg=("spine_angle_deg", "first"),
            spines_per_module=("spines_per_module", "first"),
            seed=("seed", "min"),
            max_force_n=("max_force_n", "max"),
            first_slip_n=("first_slip_n", "median"),
            detached=("detached", "any"),
            mean_max_force_n=("max_force_n", "mean"),
            std_max_force_n=("max_force_n", _sample_std),
        )
        return cells.reset_index()

    def current_response(self, cells: pd.DataFrame) -> pd.DataFrame:
        """Mean max force per actuation current, averaged over other axes."""
        curve = cells.groupby("current_a", sort=True)["mean_max_force_n"].mean().reset_index()
        return curve

    def best_current(self, curve: Sequence[Tuple[float, float]]) -> float:
        """Current with the highest mean; ties go to the lowest current."""
        if not curve:
            raise DomainError("current-response curve is empty")
        best = curve[0]
        for point in curve[1:]:
            if point[1] > best[1]:
                best = point
        return best[0]

    def overall_summary(self, runs: pd.DataFrame) -> OverallSummary:
        """Pooled statistics over every run of a campaign."""
        if runs.empty:
            return OverallSummary(0, 0, 0.0, 0.0, 0)
        values = runs["max_force_n"].to_numpy(dtype=float)
        std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        cells = runs.groupby(CELL_KEY_COLUMNS).ngroups
        detached = int(runs["detached"].astype(bool).sum())
        return OverallSummary(
            total_runs=len(values),
            total_cells=cells,
            mean_max_force=round(float(np.mean(values)), 6),
            std_max_force=round(std, 6),
            detached_runs=detached,
        )

    def margin_in_sigma(self, required: float, mean: float, std: float) -> float:
        """How many standard deviations the capability mean sits above the need."""
        if not std > 0:
            raise DomainError(f"capability std must be > 0 (got {std})")
        return (mean - required) / std

    def format_force(self, newtons: float) -> str:
        return f"{newtons:.2f} N"

