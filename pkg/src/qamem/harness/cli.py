"""Command-line entry point: ``qamem <command> --config run.json``.

Exit codes: 0 success, 2 configuration error, 3 solver or physics error.
"""
from __future__ import annotations

import argparse
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from .. import fockspace as fs
from .. import memory as mem
from .. import phasespace as ps
from ..dynamics import evolve_integrate, evolve_spectral
from ..errors import ConfigError, QamemError
from ..lindblad import build_liouvillian, lobe_amplitude, lobe_offset
from ..meanfield import fixed_points
from ..metastable import build_phases, evolve_in_manifold, manifold_expectation
from ..spectral import decompose, liouvillian_eigenvalues, spectrum_rows, steady_state, timescales
from . import config as cfgmod
from .output import write_csv, write_manifest
from .sweep import SweepSpec, grid_contours, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3
COMMANDS = ("spectrum", "phase-diagram", "evolve", "retrieval", "capacity", "wigner", "fixed-points")


def cmd_spectrum(cfg, out, threads):
    L = build_liouvillian(cfg.params, cfg.form)
    lam = liouvillian_eigenvalues(L)
    rows = spectrum_rows(lam)
    count = cfg.get("modes")
    if count:
        rows = rows[:count]
    files = [write_csv(out / "spectrum.csv", ("index", "re_lambda", "im_lambda", "tau"), rows)]
    rho = steady_state(L)
    D = cfg.params.dim
    ss = [(k, l, rho[k, l].real, rho[k, l].imag) for k in range(D) for l in range(D)]
    files.append(write_csv(out / "steady_state.csv", ("k", "l", "re", "im"), ss))
    return files, {}


def cmd_phase_diagram(cfg, out, threads):
    section = cfg.section("sweep")
    if not section:
        raise ConfigError("config error at sweep: phase-diagram needs a sweep section")
    spec = SweepSpec.from_config(cfg.params, section, workers=threads, form=cfg.form)
    results = run_sweep(spec)
    names = [a.name for a in spec.axes]
    files = [
        write_csv(
            out / "phase_diagram.csv",
            (*names, "gap_ratio", "tau_n", "tau_next", "status"),
            [r.row(names) for r in results],
        )
    ]
    levels = section.get("contour_levels")
    if levels and len(spec.axes) == 2:
        pts = grid_contours(results, spec, levels)
        files.append(write_csv(out / "contours.csv", ("level", names[0], names[1]), pts))
    failed = sum(r.status != "ok" for r in results)
    return files, {"cells": len(results), "failed_cells": failed}


def _initial_state(cfg, beta):
    spec = cfg.section("initial_state")
    if "amplitude" in spec:
        a0 = complex(*spec["amplitude"])
    else:
        a0 = spec.get("relative_amplitude", 0.5) * beta * np.exp(1j * spec.get("phase", 2 * np.pi / 9))
    return a0, fs.coherent_state(cfg.params.dim, a0)


def cmd_evolve(cfg, out, threads):
    p = cfg.params
    L = build_liouvillian(p, cfg.form)
    dec = decompose(L, k=p.dim**2)
    ts = timescales(dec)
    beta = lobe_amplitude(p)
    a0, rho0 = _initial_state(cfg, beta)
    times = cfg.times(default_max=2 * ts[p.n] if np.isfinite(ts[p.n]) else 100.0)
    engines = cfg.section("evolve").get("engines", ["spectral", "manifold"])
    rows = []
    for eng in engines:
        if eng == "spectral":
            tr = evolve_spectral(dec, rho0, times)
            rows += [(t, eng, re, im, ab, pu) for t, re, im, ab, pu in tr.rows()]
        elif eng == "integrate":
            tr = evolve_integrate(L, rho0, times)
            rows += [(t, eng, re, im, ab, pu) for t, re, im, ab, pu in tr.rows()]
        else:
            man = build_phases(dec)
            pq = evolve_in_manifold(man, dec, rho0, times)
            ea = manifold_expectation(man, fs.annihilation(p.dim), pq)
            gram = np.array([[np.trace(a @ b).real for b in man.phases] for a in man.phases])
            pur = np.einsum("ti,ij,tj->t", pq, gram, pq)
            rows += [(t, eng, e.real, e.imag, abs(e), pu) for t, e, pu in zip(times, ea, pur)]
    files = [write_csv(out / "evolve.csv", ("t", "engine", "re_exp_a", "im_exp_a", "abs_exp_a", "purity"), rows)]
    derived = {"alpha0": [a0.real, a0.imag], "tau_n": ts[p.n], "tau_next": ts[p.n + 1], "beta": beta}
    return files, derived


def cmd_retrieval(cfg, out, threads):
    p = cfg.params
    dec = decompose(build_liouvillian(p, cfg.form), k=p.dim**2)
    ts = timescales(dec)
    beta = lobe_amplitude(p)
    lobes = fs.lobe_states(p.dim, beta, p.n, lobe_offset(p), warn=False)
    strategies = cfg.get("strategies", list(cfgmod.STRATEGIES))
    povms = {}
    for s in strategies:
        if s == "ambiguous_theoretical":
            povms[s] = mem.ambiguous_povm_theoretical(p.dim, p.n, lobe_offset(p))
        elif s == "ambiguous_numerical":
            povms[s] = mem.ambiguous_povm_numerical(build_phases(dec))
        else:
            povms[s] = mem.unambiguous_povm(lobes)
    times = cfg.times(default_max=2 * ts[p.n])
    res = mem.retrieval_experiment(dec, povms, lobes, times, trials=cfg.get("trials", 400), seed=cfg.seed, beta=beta)
    files = [
        write_csv(out / "retrieval.csv", ("trial", "t", "strategy", "k_true", "k_hat", "p_click", "success"), res.rows())
    ]
    summary = [
        (float(t), s, res.success[s][i], res.stderr[s][i]) for s in povms for i, t in enumerate(times)
    ]
    files.append(write_csv(out / "retrieval_summary.csv", ("t", "strategy", "p_success", "stderr"), summary))
    derived = {"beta": beta, "tau_n": ts[p.n], "tau_next": ts[p.n + 1], "window": [3 * ts[p.n + 1], ts[p.n]]}
    return files, derived


def cmd_capacity(cfg, out, threads):
    sec = cfg.section("capacity")
    n_values = sec.get("n_values", list(range(2, 9)))
    betas = np.linspace(sec.get("beta_min", 0.05), sec.get("beta_max", 6.0), sec.get("points", 120))
    eps = sec.get("epsilon", 1e-9)
    rows, best = [], []
    for n in n_values:
        curve = mem.capacity_curve(n, betas, eps)
        rows += [c.row() for c in curve]
        best.append(mem.capacity_maximum(curve).row())
    header = ("n", "beta", "L_max", "F", "alpha_c", "alpha_tilde")
    files = [write_csv(out / "capacity.csv", header, rows), write_csv(out / "capacity_max.csv", header, best)]
    return files, {}


def cmd_wigner(cfg, out, threads):
    sec = cfg.section("wigner")
    p = cfg.params
    g_values = sec.get("gamma1_values", [p.gamma1])
    npts = sec.get("grid_points", ps.DEFAULT_N)
    files, summary = [], []
    for i, g1 in enumerate(g_values):
        q = p.with_(gamma1=float(g1))
        rho = steady_state(build_liouvillian(q, cfg.form))
        extent = sec.get("extent", ps.default_extent(rho))
        x, y = ps.make_grid(extent, npts)
        fld = ps.wigner(rho, x, y)
        files.append(write_csv(out / f"wigner_{i}.csv", ("x", "p", "w"), fld.rows()))
        path = out / f"wigner_{i}.bin"
        path.write_bytes(fld.to_bytes())
        files.append(path)
        summary.append((float(g1), ps.min_negativity(fld), fld.integral()))
    files.append(write_csv(out / "wigner_summary.csv", ("gamma1", "min_w", "integral"), summary))
    return files, {}


def cmd_fixed_points(cfg, out, threads):
    fps = fixed_points(cfg.params)
    rows = [f.row() for f in fps]
    header = ("re_alpha", "im_alpha", "R", "phi", "stable", "residual")
    return [write_csv(out / "fixed_points.csv", header, rows)], {"count": len(fps)}


HANDLERS = {
    "spectrum": cmd_spectrum,
    "phase-diagram": cmd_phase_diagram,
    "evolve": cmd_evolve,
    "retrieval": cmd_retrieval,
    "capacity": cmd_capacity,
    "wigner": cmd_wigner,
    "fixed-points": cmd_fixed_points,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="qamem", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="JSON run configuration")
        sp.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
        sp.add_argument("--threads", type=int, default=1, help="worker processes")
        sp.add_argument("--out", type=Path, help="output directory (overrides the config)")
    return ap


def run(args):
    cfg = cfgmod.load(args.config) if args.config else cfgmod.from_dict({})
    if cfg.experiment and cfg.experiment != args.command:
        raise ConfigError(f"config error at experiment: {cfg.experiment!r} does not match command {args.command!r}")
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        raw = dict(cfg.raw, seed=args.seed)
        cfg = cfgmod.from_dict(raw)
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    out = args.out if args.out else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    files, derived = HANDLERS[args.command](cfg, out, args.threads)
    wall = time.perf_counter() - t0
    write_manifest(out, args.command, cfg, cfg.seed, wall, files, derived)
    return files


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            run(args)
    except ConfigError as exc:
        print(f"qamem: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QamemError, np.linalg.LinAlgError) as exc:
        print(f"qamem {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
