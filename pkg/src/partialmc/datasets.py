"""Incomplete-outcome datasets and their CSV interchange format.

A dataset holds one row per observation: a covariate cell index (binary
covariates, base-2 encoded; saturated model only), the outcome y, and the
observation indicator r. y is stored as NaN exactly where r = 0. The CSV
layout is ``row,cell,y,r`` with y left empty when missing and cell left
empty for the count model.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import pandas as pd


@dataclass(frozen=True)
class IncompleteDataset:
    """Rows of (cell, y, r) with y defined only where r = 1."""

    kind: str  # "sat" | "count"
    y: np.ndarray  # float; NaN where r == 0
    r: np.ndarray  # int, 0/1
    cells: np.ndarray | None = None  # int cell index per row (sat only)
    n_covariates: int | None = None  # p, the number of binary covariates (sat only)

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "r", np.asarray(self.r, dtype=np.int64))
        if self.cells is not None:
            object.__setattr__(self, "cells", np.asarray(self.cells, dtype=np.int64))
        self.validate()

    @property
    def n(self) -> int:
        return self.r.size

    @property
    def n_cells(self) -> int:
        if self.n_covariates is None:
            raise ValueError("cell count only defined for sat datasets")
        return 1 << self.n_covariates

    def validate(self) -> None:
        if self.kind not in ("sat", "count"):
            raise ValueError(f"unknown dataset kind: {self.kind}")
        if self.y.shape != self.r.shape or self.y.ndim != 1:
            raise ValueError("y and r must be 1-d arrays of equal length")
        if not np.all((self.r == 0) | (self.r == 1)):
            raise ValueError("r must be 0/1")
        observed = self.r == 1
        if np.any(np.isnan(self.y[observed])):
            raise ValueError("y missing on a row with r = 1")
        if np.any(~np.isnan(self.y[~observed])):
            raise ValueError("y present on a row with r = 0")
        if self.kind == "sat":
            if self.cells is None or self.n_covariates is None:
                raise ValueError("sat datasets need cells and n_covariates")
            if self.cells.shape != self.r.shape:
                raise ValueError("cells and r must have equal length")
            if self.cells.size and (self.cells.min() < 0 or self.cells.max() >= self.n_cells):
                raise ValueError("cell index out of range for declared covariate count")
            y_obs = self.y[observed]
            if y_obs.size and not np.all((y_obs == 0.0) | (y_obs == 1.0)):
                raise ValueError("sat outcomes must be binary")
        else:
            if self.cells is not None:
                raise ValueError("count datasets carry no cells")
            y_obs = self.y[observed]
            if y_obs.size and (np.any(y_obs < 0) or np.any(y_obs != np.floor(y_obs))):
                raise ValueError("count outcomes must be non-negative integers")


def sat_dataset(cells, y, r, n_covariates: int) -> IncompleteDataset:
    return IncompleteDataset(kind="sat", y=y, r=r, cells=cells, n_covariates=n_covariates)


def count_dataset(y, r) -> IncompleteDataset:
    return IncompleteDataset(kind="count", y=y, r=r)


def write_dataset_csv(d: IncompleteDataset, path: str) -> None:
    """Write ``row,cell,y,r`` with empty y where r = 0 (atomic replace)."""
    frame = pd.DataFrame(
        {
            "row": np.arange(d.n),
            "cell": d.cells if d.cells is not None else np.full(d.n, np.nan),
            "y": d.y,
            "r": d.r,
        }
    )
    tmp = f"{path}.tmp"
    frame.to_csv(tmp, index=False, float_format="%.17g")
    os.replace(tmp, path)


def read_dataset_csv(path: str, kind: str, n_covariates: int | None = None) -> IncompleteDataset:
    """Read a dataset written by :func:`write_dataset_csv`.

    For sat datasets the covariate count is taken from ``n_covariates`` or,
    when omitted, inferred as the smallest p covering the observed cells.
    """
    frame = pd.read_csv(path)
    y = frame["y"].to_numpy(dtype=float)
    r = frame["r"].to_numpy(dtype=np.int64)
    if kind == "count":
        return count_dataset(y, r)
    cells = frame["cell"].to_numpy(dtype=np.int64)
    if n_covariates is None:
        n_covariates = max(1, int(np.max(cells)).bit_length()) if cells.size else 1
    return sat_dataset(cells, y, r, n_covariates)
