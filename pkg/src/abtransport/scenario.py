"""Evaluate observables over a parameter grid and assemble datasets."""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, transport
from .bath import CoverageError, QuadratureError, polaron_kappa
from .config import ScenarioConfig, apply_axis
from .dataset import Dataset
from .liouvillian import build_liouvillian, polaron_transform

NUMERIC_ERRORS = (transport.NumericError, QuadratureError, CoverageError, np.linalg.LinAlgError, FloatingPointError)

COLUMNS = {
    "current": (("current", "J/hbar"),),
    "occupations": (("n0", ""), ("n1", ""), ("n2", ""), ("n3", "")),
    "spectrum": (("E1", "J"), ("E2", "J"), ("E3", "J")),
    "kappa": (("kappa", ""),),
    "rates": (("mu", ""), ("nu", ""), ("g", "J/hbar")),
    "noise": (("omega", "J/hbar"), ("S", "J/hbar")),
    "waiting": (("tau", "hbar/J"), ("P11", "J/hbar"), ("P12", "J/hbar")),
    "transient": (("tau", "hbar/J"), ("N1", ""), ("N2", ""), ("N3", ""), ("total", "")),
    "fom": (("field", "T"), ("current_si", "1/s"), ("merit", "1/(s T)")),
}
AXIS_UNITS = {"phi": "rad", "gamma": "", "eps3": "J", "temperature": "J", "mu1": "J", "mu2": "J"}


class ScenarioError(RuntimeError):
    """Numerical failure at a specific parameter point."""

    def __init__(self, point: dict, cause: Exception):
        where = ", ".join(f"{k}={v:.10g}" for k, v in point.items()) or "base point"
        super().__init__(f"numerical failure at {where}: {cause}")
        self.point = point


def grid_points(config: ScenarioConfig):
    names = [a.name for a in config.sweep]
    for values in itertools.product(*(a.values for a in config.sweep)):
        yield dict(zip(names, values))


def evaluate_point(config: ScenarioConfig, point: dict) -> dict:
    """All point-wise observables at one grid point, as row lists."""
    spec = config.system
    for name, value in point.items():
        spec = apply_axis(spec, name, value)
    obs = set(config.observables)
    st = config.settings
    out = {}
    try:
        if "kappa" in obs:
            out["kappa"] = [(polaron_kappa(spec.bath),)]
        if "spectrum" in obs:
            out["spectrum"] = [tuple(polaron_transform(spec).eigensystem.energies)]
        needs_dynamics = obs & {"current", "occupations", "rates", "noise", "waiting", "transient", "fom"}
        if needs_dynamics:
            liou = build_liouvillian(spec, config.numerics)
            if "rates" in obs:
                g = transport.bath_transition_rates(liou)
                out["rates"] = [(mu + 1, nu + 1, g[mu, nu]) for mu in range(3) for nu in range(3) if mu != nu]
            if needs_dynamics - {"rates"}:
                ss = transport.steady_state(liou)
                if obs & {"current", "fom"}:
                    out["current"] = [(transport.transport_current(liou, ss),)]
                if "occupations" in obs:
                    out["occupations"] = [tuple(transport.eigen_occupations(liou, ss))]
                if "noise" in obs:
                    ns = transport.noise_spectrum(liou, ss, st.reservoir, st.omegas, st.noise_variant)
                    out["noise"] = list(zip(ns.omegas, ns.values))
                if "waiting" in obs:
                    wt = transport.waiting_time(liou, ss, st.n_in, st.taus)
                    out["waiting"] = list(zip(wt.taus, wt.p[(st.n_in, 1)], wt.p[(st.n_in, 2)]))
                if "transient" in obs:
                    tr = transport.transient_occupations(liou, ss, st.n_in, st.taus)
                    out["transient"] = [(t, *s, tot) for t, s, tot in zip(tr.taus, tr.sites, tr.total)]
    except NUMERIC_ERRORS as exc:
        raise ScenarioError(point, exc) from exc
    return out


def _evaluate_indexed(args):
    config, index, point = args
    return index, evaluate_point(config, point)


def run_points(config: ScenarioConfig, workers: int = 1) -> list:
    points = list(grid_points(config))
    tasks = [(config, i, p) for i, p in enumerate(points)]
    results = [None] * len(points)
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for index, res in pool.map(_evaluate_indexed, tasks, chunksize=max(1, len(tasks) // (4 * workers))):
                results[index] = res
    else:
        for task in tasks:
            index, res = _evaluate_indexed(task)
            results[index] = res
    return list(zip(points, results))


def _fom_dataset(config: ScenarioConfig, evaluated, provenance) -> Dataset:
    axes = [a.name for a in config.sweep]
    other = [n for n in axes if n != "phi"]
    phi_axis = next(a for a in config.sweep if a.name == "phi")
    by_other = {}
    for point, res in evaluated:
        key = tuple(point[n] for n in other)
        by_other.setdefault(key, {})[point["phi"]] = res["current"][0][0]
    rows = []
    for key, curve in by_other.items():
        phis = np.array(phi_axis.values)
        currents = np.array([curve[p] for p in phi_axis.values])
        spec = config.system
        for name, value in zip(other, key):
            spec = apply_axis(spec, name, value)
        try:
            fom = transport.figure_of_merit(spec, config.settings.area, config.settings.gamma0_si, phis, config.numerics, currents=currents)
        except transport.NumericError as exc:
            raise ScenarioError(dict(zip(other, key)), exc) from exc
        for k in range(1, len(phis) - 1):
            rows.append((*key, phis[k], fom.field[k], fom.current_si[k], fom.merit[k]))
    cols = other + ["phi"]
    return Dataset(
        name="fom",
        columns=tuple(cols) + tuple(c for c, _ in COLUMNS["fom"]),
        units=tuple(AXIS_UNITS[c] for c in cols) + tuple(u for _, u in COLUMNS["fom"]),
        rows=np.array(rows),
        provenance=provenance,
    )


def assemble(config: ScenarioConfig, evaluated) -> list:
    axes = [a.name for a in config.sweep]
    datasets = []
    for name in config.observables:
        provenance = {"tool": "abtransport", "version": __version__, "observable": name, "config": config.resolved}
        if name == "fom":
            datasets.append(_fom_dataset(config, evaluated, provenance))
            continue
        rows = []
        for point, res in evaluated:
            prefix = tuple(point[n] for n in axes)
            rows.extend(prefix + tuple(r) for r in res[name])
        cols = COLUMNS[name]
        datasets.append(
            Dataset(
                name=name,
                columns=tuple(axes) + tuple(c for c, _ in cols),
                units=tuple(AXIS_UNITS[a] for a in axes) + tuple(u for _, u in cols),
                rows=np.array(rows, dtype=float).reshape(len(rows), len(axes) + len(cols)),
                provenance=provenance,
            )
        )
    return datasets


def run_scenario(config: ScenarioConfig, workers: int | None = None, write: bool = True) -> list:
    """Evaluate every observable over the grid; write files when a directory is set."""
    if workers is None:
        workers = os.cpu_count() or 1
    datasets = assemble(config, run_points(config, workers))
    if write and config.directory:
        for ds in datasets:
            ds.write(config.directory, config.format)
    return datasets
