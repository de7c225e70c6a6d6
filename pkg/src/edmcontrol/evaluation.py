"""Forecast-skill scans over embedding dimension, horizon, and kernel width.

All scans share one protocol: build an embedding from a scalar series, split
its rows into a library (first fraction, chronological) and an out-of-sample
prediction block, forecast the prediction block, and score Pearson skill.
Rows are aligned across scan points so the skills are comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .edm import SkillReport, pearson_rho, simplex_predict, smap_predict, smap_predictions
from .timeseries import (
    Embedding,
    EmbeddingSpec,
    Frame,
    build_delay_embedding,
    build_generalized_embedding,
    split_library_prediction,
)

__all__ = [
    "ScanResult",
    "THETA_GRID",
    "embed_dimension_scan",
    "tp_scan",
    "theta_scan",
    "theta_scan_split",
    "tune_theta",
    "evaluate_out_of_sample",
]

# Default kernel-width grid for theta tuning.
THETA_GRID = (0.0, 0.1, 0.3, 1.0, 2.0, 3.0, 5.0, 9.0)

DEFAULT_SPLIT = 0.6


@dataclass(frozen=True)
class ScanResult:
    """Skill per scanned parameter value, plus the fixed parameters."""

    axis: np.ndarray
    reports: tuple[SkillReport, ...]
    fixed: dict = field(default_factory=dict)

    @property
    def rho(self) -> np.ndarray:
        return np.array([r.rho for r in self.reports], dtype=np.float64)

    def best(self) -> float:
        """Axis value with the highest finite rho."""
        rho = self.rho
        finite = np.isfinite(rho)
        if not finite.any():
            raise ValueError("no finite skill value in scan")
        masked = np.where(finite, rho, -np.inf)
        return float(self.axis[int(np.argmax(masked))])

    def write_csv(self, path, param_name: str = "param") -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([param_name, "rho", "mae", "rmse", "n"])
            for x, r in zip(self.axis, self.reports):
                w.writerow([x, repr(r.rho), repr(r.mae), repr(r.rmse), r.n])


def _chronological_split(embedding: Embedding, split: float) -> tuple[Embedding, Embedding]:
    n = len(embedding)
    n_lib = int(np.floor(n * split))
    if n_lib < 1 or n_lib >= n:
        raise ValueError(f"split fraction {split} leaves an empty partition for {n} rows")
    idx = np.arange(n)
    lib, pred = embedding.take(idx[:n_lib]), embedding.take(idx[n_lib:])
    if np.intersect1d(lib.times, pred.times).size:
        raise RuntimeError("library and prediction sets share origin times")
    return lib, pred


def _align_from(embedding: Embedding, first_origin: int, last_origin: int) -> Embedding:
    keep = (embedding.times >= first_origin) & (embedding.times <= last_origin)
    return embedding.take(np.flatnonzero(keep))


def embed_dimension_scan(
    series,
    e_max: int,
    tp: int,
    split: float = DEFAULT_SPLIT,
    tau: int = 1,
) -> ScanResult:
    """Simplex skill as a function of embedding dimension E = 1..e_max.

    Every E uses the same origin rows (those valid at ``e_max``) and the same
    chronological library/prediction split, so the resulting skill curve is
    comparable across dimensions.
    """
    x = np.asarray(series, dtype=np.float64)
    first = (e_max - 1) * tau
    last = x.size - 1 - tp
    reports = []
    for e in range(1, e_max + 1):
        emb = _align_from(build_delay_embedding(x, e, tau, tp), first, last)
        lib, pred = _chronological_split(emb, split)
        preds = simplex_predict(lib, pred)
        reports.append(pearson_rho(preds, pred.targets))
    return ScanResult(
        axis=np.arange(1, e_max + 1),
        reports=tuple(reports),
        fixed={"tp": tp, "tau": tau, "split": split},
    )


def tp_scan(
    series,
    e: int,
    tp_max: int,
    split: float = DEFAULT_SPLIT,
    tau: int = 1,
) -> ScanResult:
    """Simplex skill as a function of forecast interval Tp = 1..tp_max at fixed E."""
    x = np.asarray(series, dtype=np.float64)
    first = (e - 1) * tau
    last = x.size - 1 - tp_max
    reports = []
    for tp in range(1, tp_max + 1):
        emb = _align_from(build_delay_embedding(x, e, tau, tp), first, last)
        lib, pred = _chronological_split(emb, split)
        preds = simplex_predict(lib, pred)
        reports.append(pearson_rho(preds, pred.targets))
    return ScanResult(
        axis=np.arange(1, tp_max + 1),
        reports=tuple(reports),
        fixed={"e": e, "tau": tau, "split": split},
    )


def theta_scan_split(library: Embedding, queries: Embedding, grid=THETA_GRID) -> ScanResult:
    """S-map skill on a fixed library/query split for each theta in the grid."""
    reports = []
    for theta in grid:
        preds = smap_predictions(smap_predict(library, queries, theta))
        reports.append(pearson_rho(preds, queries.targets))
    return ScanResult(axis=np.asarray(grid, dtype=np.float64), reports=tuple(reports))


def theta_scan(
    series,
    e: int,
    tp: int,
    split: float = DEFAULT_SPLIT,
    grid=THETA_GRID,
    tau: int = 1,
) -> ScanResult:
    """S-map skill over the kernel-width grid on a delay embedding of a series."""
    emb = build_delay_embedding(np.asarray(series, dtype=np.float64), e, tau, tp)
    lib, pred = _chronological_split(emb, split)
    result = theta_scan_split(lib, pred, grid)
    return ScanResult(
        axis=result.axis,
        reports=result.reports,
        fixed={"e": e, "tp": tp, "tau": tau, "split": split},
    )


def tune_theta(
    library: Embedding,
    grid=THETA_GRID,
    validation_fraction: float = 0.25,
) -> float:
    """Pick theta by skill on a chronological validation slice of the library."""
    fit, val = _chronological_split(library, 1.0 - validation_fraction)
    return theta_scan_split(fit, val, grid).best()


def evaluate_out_of_sample(
    frame: Frame,
    spec: EmbeddingSpec,
    lib_range: tuple[int, int],
    pred_range: tuple[int, int],
    theta: float | None = None,
) -> SkillReport:
    """Out-of-sample S-map skill under a train/test protocol on tick ranges.

    Builds the generalized embedding, partitions rows by origin tick into the
    (disjoint) library and prediction ranges, S-maps the prediction block
    against the library, and reports skill.  ``theta=None`` tunes the kernel
    width on a validation slice of the library first.
    """
    emb = build_generalized_embedding(frame, spec)
    lib, pred = split_library_prediction(emb, lib_range, pred_range)
    if theta is None:
        theta = tune_theta(lib)
    preds = smap_predictions(smap_predict(lib, pred, theta))
    return pearson_rho(preds, pred.targets)
