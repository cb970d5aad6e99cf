import math
import os
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import yaml

from src.Errors import InvalidArgumentError
from src.Utils import fit_loglog

FLOAT_FORMAT = "%.17g"
FORMATS = ("csv", "svg", "both")

BASE_COLUMNS = ["experiment", "sample", "seed", "N", "h", "Nh", "theta", "s_profile", "noise_eps",
                "beta", "alpha", "kappa", "eps_ok", "kappa_ok", "alpha_ok", "bound_ok"]
FLOAT_COLUMNS = ("h", "Nh", "theta", "noise_eps", "beta", "alpha", "kappa")
BOOL_COLUMNS = ("eps_ok", "kappa_ok", "alpha_ok", "bound_ok")


@dataclass(frozen=True)
class SweepRecord:
    """One sample of an experiment sweep. Validity flags are None where they do not apply."""

    experiment: str
    sample: int
    seed: str
    N: int
    h: float
    Nh: float
    theta: Optional[float]
    s_profile: str
    noise_eps: Optional[float] = None
    beta: Optional[float] = None
    alpha: Optional[float] = None
    kappa: Optional[float] = None
    eps_ok: Optional[bool] = None
    kappa_ok: Optional[bool] = None
    alpha_ok: Optional[bool] = None
    bound_ok: Optional[bool] = None
    sigma: Tuple[float, ...] = ()
    delta_a: Tuple[float, ...] = ()
    timestamp: str = field(default="", compare=False)

    @property
    def sort_key(self):
        return self.experiment, self.sample

    @property
    def in_regime(self):
        return all(flag is not False for flag in (self.eps_ok, self.kappa_ok, self.alpha_ok))


def _columns(records: Sequence[SweepRecord]):
    sigma_count = max((len(r.sigma) for r in records), default=0)
    delta_count = max((len(r.delta_a) for r in records), default=0)
    return (BASE_COLUMNS + [f"sigma_{j}" for j in range(1, sigma_count + 1)]
            + [f"delta_a_{j}" for j in range(1, delta_count + 1)])


def records_to_frame(records: Sequence[SweepRecord]) -> pd.DataFrame:
    rows = []
    for record in sorted(records, key=lambda r: r.sort_key):
        row = {column: getattr(record, column) for column in BASE_COLUMNS}
        row.update({f"sigma_{j}": v for j, v in enumerate(record.sigma, start=1)})
        row.update({f"delta_a_{j}": v for j, v in enumerate(record.delta_a, start=1)})
        rows.append(row)
    return pd.DataFrame(rows, columns=_columns(records))


def emit_csv(records: Sequence[SweepRecord], path) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    records_to_frame(records).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def _float(text) -> Optional[float]:
    return None if text == "" else float(text)


def _bool(text) -> Optional[bool]:
    if text == "":
        return None
    if text not in ("True", "False"):
        raise InvalidArgumentError(f"'{text}' is not a boolean cell")
    return text == "True"


def _indexed(row, prefix):
    columns = sorted((c for c in row.index if c.startswith(prefix) and c[len(prefix):].isdigit()),
                     key=lambda c: int(c[len(prefix):]))
    return tuple(float(row[c]) for c in columns if row[c] != "")


def parse_csv(path) -> List[SweepRecord]:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    records = []
    for _, row in frame.iterrows():
        values = {
            "experiment": row["experiment"],
            "sample": int(row["sample"]),
            "seed": row["seed"],
            "N": int(row["N"]),
            "s_profile": row["s_profile"],
        }
        values.update({column: _float(row[column]) for column in FLOAT_COLUMNS})
        values.update({column: _bool(row[column]) for column in BOOL_COLUMNS})
        values["sigma"] = _indexed(row, "sigma_")
        values["delta_a"] = _indexed(row, "delta_a_")
        records.append(SweepRecord(**values))
    return records


@dataclass(frozen=True)
class Series:
    label: str
    x: Tuple[float, ...]
    y: Tuple[float, ...]


def _fit_label(series: Series):
    x, y = np.asarray(series.x, dtype=float), np.asarray(series.y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    if keep.sum() < 3:
        return None, series.label
    fit = fit_loglog(x[keep], y[keep])
    return fit, f"{series.label}, slope {fit.slope:.2f}"


def emit_svg(path, series: Sequence[Series], xlabel, ylabel, title=None) -> str:
    """Log-log scatter of every series with its fitted line; slopes go into the legend labels."""
    plt.rcParams["svg.fonttype"] = "none"
    plt.rcParams["svg.hashsalt"] = "clustered-vandermonde"
    fig, ax = plt.subplots(1, 1, figsize=(6, 5))
    ax.grid(alpha=0.15)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)

    for item in series:
        fit, label = _fit_label(item)
        points = ax.scatter(item.x, item.y, s=8, alpha=0.6, label=label)
        if fit is not None:
            grid = np.logspace(math.log10(min(item.x)), math.log10(max(item.x)), 50)
            ax.plot(grid, 10 ** (fit.intercept + fit.slope * np.log10(grid)), color=points.get_facecolor()[0],
                    linewidth=1)
    if series:
        ax.legend(loc="best", fancybox=False, edgecolor="black", fontsize=8)

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def write_yaml(path, payload) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w") as file:
        yaml.safe_dump(payload, file, sort_keys=False)
    return path


def emit(records: Sequence[SweepRecord], fmt, out_dir, name, series=None, axes=("x", "y")) -> List[str]:
    if fmt not in FORMATS:
        raise InvalidArgumentError(f"unknown output format '{fmt}', expected one of {FORMATS}")
    paths = []
    if fmt in ("csv", "both"):
        paths.append(emit_csv(records, os.path.join(out_dir, f"{name}.csv")))
    if fmt in ("svg", "both"):
        paths.append(emit_svg(os.path.join(out_dir, f"{name}.svg"), series or [], axes[0], axes[1], title=name))
    return paths
