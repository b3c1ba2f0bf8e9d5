"""Parameter sweeps over ``ModelParams`` and contour extraction.

Every grid cell is evaluated independently (build, diagonalize, record) by
a stateless worker. Results come back in cell-index order, so the output
does not depend on the number of workers.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np
from scipy.optimize import brentq

from ..errors import ConfigError, QamemError
from ..lindblad import ModelParams, build_liouvillian
from ..spectral import liouvillian_eigenvalues, timescales

_PARAM_NAMES = {f.name for f in fields(ModelParams)}
QUANTITIES = ("gap_ratio", "tau_n")


@dataclass(frozen=True)
class SweepAxis:
    name: str
    min: float
    max: float
    points: int
    scale: str = "linear"

    def __post_init__(self):
        if self.name not in _PARAM_NAMES:
            raise ConfigError(f"sweep axis {self.name!r} is not a model parameter")
        if self.points < 2:
            raise ConfigError(f"sweep axis {self.name!r} needs at least 2 points")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"unknown axis scale {self.scale!r}")
        if self.scale == "log" and min(self.min, self.max) <= 0:
            raise ConfigError(f"log axis {self.name!r} needs positive bounds")

    def values(self):
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.points)
        return np.linspace(self.min, self.max, self.points)


@dataclass(frozen=True)
class SweepSpec:
    base: ModelParams
    axes: tuple
    quantity: str = "gap_ratio"
    workers: int = 1
    form: str = "general"

    def __post_init__(self):
        if not 1 <= len(self.axes) <= 2:
            raise ConfigError("a sweep has one or two axes")
        if self.quantity not in QUANTITIES:
            raise ConfigError(f"unknown sweep quantity {self.quantity!r}")
        if len({a.name for a in self.axes}) != len(self.axes):
            raise ConfigError("sweep axes must be distinct parameters")

    @classmethod
    def from_config(cls, base, section, workers=1, form="general"):
        axes = tuple(SweepAxis(**ax) for ax in section["axes"])
        return cls(base, axes, section.get("quantity", "gap_ratio"), workers, form)

    def cells(self):
        """``(index, params)`` for every grid cell, first axis varying slowest."""
        grids = [ax.values() for ax in self.axes]
        out = []
        for idx in np.ndindex(*[len(g) for g in grids]):
            changes = {ax.name: _coerce(ax.name, g[i]) for ax, g, i in zip(self.axes, grids, idx)}
            out.append((idx, changes))
        return out


def _coerce(name, value):
    return int(round(value)) if name in ("n", "m", "dim") else float(value)


@dataclass(frozen=True)
class CellResult:
    index: tuple
    values: dict
    gap_ratio: float
    tau_n: float
    tau_next: float
    status: str

    def row(self, names):
        return (*[self.values[k] for k in names], self.gap_ratio, self.tau_n, self.tau_next, self.status)


def evaluate_cell(base: ModelParams, changes, form="general"):
    """``(gap_ratio, tau_n, tau_{n+1}, status)`` for one parameter point."""
    try:
        p = base.with_(**changes)
        ts = timescales(liouvillian_eigenvalues(build_liouvillian(p, form)))
        return ts.gap_ratio(p.n), ts[p.n], ts[p.n + 1], "ok"
    except (QamemError, ValueError, np.linalg.LinAlgError) as exc:
        return float("nan"), float("nan"), float("nan"), f"error: {type(exc).__name__}"


def _worker(args):
    base, changes, form = args
    return evaluate_cell(base, changes, form)


def run_sweep(spec: SweepSpec):
    cells = spec.cells()
    jobs = [(spec.base, ch, spec.form) for _, ch in cells]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            raw = list(pool.map(_worker, jobs, chunksize=max(1, len(jobs) // (4 * spec.workers))))
    else:
        raw = [_worker(j) for j in jobs]
    return [CellResult(idx, ch, *r) for (idx, ch), r in zip(cells, raw)]


def tau_n(p: ModelParams, form="general"):
    return timescales(liouvillian_eigenvalues(build_liouvillian(p, form)))[p.n]


def contour_point(base: ModelParams, name, level, lo, hi, form="general", xtol=1e-6):
    """Value of parameter ``name`` in ``[lo, hi]`` where ``gamma1 tau_n = level``.

    Root-finds ``log(gamma1 tau_n) - log(level)`` with Brent's method.
    """
    g1 = base.gamma1 if base.gamma1 > 0 else 1.0

    def f(x):
        return np.log(g1 * tau_n(base.with_(**{name: _coerce(name, x)}), form)) - np.log(level)

    flo, fhi = f(lo), f(hi)
    if np.sign(flo) == np.sign(fhi):
        raise ValueError(f"level {level} not bracketed by {name} in [{lo}, {hi}]")
    return float(brentq(f, lo, hi, xtol=xtol))


def grid_contours(results, spec: SweepSpec, levels, refine=True):
    """Contour points of ``gamma1 tau_n`` along the second axis for each first-axis value.

    Sign changes between neighbouring cells bracket the level. With
    ``refine`` the bracket is refined by root-finding, otherwise by log
    interpolation.
    """
    if len(spec.axes) != 2:
        raise ValueError("contours need a two-axis sweep")
    ax0, ax1 = spec.axes
    n0, n1 = ax0.points, ax1.points
    y = ax1.values()
    tau = np.array([r.tau_n for r in results]).reshape(n0, n1) * (spec.base.gamma1 or 1.0)
    out = []
    for i, x in enumerate(ax0.values()):
        base = spec.base.with_(**{ax0.name: _coerce(ax0.name, x)})
        col = np.log(tau[i])
        for level in levels:
            g = col - np.log(level)
            for j in range(n1 - 1):
                if not (np.isfinite(g[j]) and np.isfinite(g[j + 1])) or np.sign(g[j]) == np.sign(g[j + 1]):
                    continue
                if refine:
                    yv = contour_point(base, ax1.name, level, y[j], y[j + 1], spec.form)
                else:
                    yv = y[j] - g[j] * (y[j + 1] - y[j]) / (g[j + 1] - g[j])
                out.append((level, float(x), float(yv)))
    return out
