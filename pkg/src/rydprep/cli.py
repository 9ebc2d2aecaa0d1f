"""Command-line front end.

Every subcommand writes plot-ready CSV files plus ``manifest.json`` (config
echo, library versions, wall time) into the output directory.  Exit status 2
marks configuration problems, 3 numerical failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, classical, lzmodel, spectrum
from .basis import DomainError, LatticeSpec, af_target, basis_state, sites_of, symmetric_single_excitation, to_bitstring
from .config import ConfigError, RunConfig, build_config, default_config, load_config, tomllib
from .lanczos import EigensolverError
from .output import dump_states, write_csv, write_manifest
from .propagate import IntegrationError, evolve
from .pulse import sample_many

log = logging.getLogger("rydprep")

FIGURES = ("1b", "1c", "2", "3", "4a", "4b", "5", "6")


def pmap(func, items, jobs: int):
    """Ordered map, in worker processes when ``jobs > 1``."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def _apply_overrides(cfg: RunConfig, assignments) -> RunConfig:
    if not assignments:
        return cfg
    raw = cfg.to_dict()
    for item in assignments:
        key, sep, text = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            value = tomllib.loads(f"v = {text}")["v"]
        except tomllib.TOMLDecodeError:
            value = text
        raw[key.strip()] = value
    return build_config(raw)


# --- evolve -----------------------------------------------------------------

def run_evolve(cfg: RunConfig, out: Path, args) -> tuple[list[Path], dict]:
    spec, sched = cfg.lattice, cfg.schedule
    traj = evolve(spec, sched, basis_state(spec, 0), cfg.sample_count)
    N = spec.n_sites
    P = analysis.excitation_class_populations(traj)
    rho = analysis.rydberg_density(traj)
    rabi, det = sample_many(sched, traj.times)
    target = af_target(spec) if N % 2 else None
    norm_dev = np.abs(np.linalg.norm(traj.states, axis=1) - 1.0)

    header = ["t_us", "rabi_mhz", "detuning_mhz"] + [f"P_n{n}" for n in range(N + 1)]
    header += [f"rydberg_site{j}" for j in range(1, N + 1)]
    cols = [traj.times, rabi, det, *P.T, *rho.T]
    if target is not None:
        target_pop = np.abs(traj.states[:, target]) ** 2
        header.append("P_target")
        cols.append(target_pop)
    header.append("norm_deviation")
    cols.append(norm_dev)
    paths = [write_csv(out / "evolve_observables.csv", header, zip(*cols))]

    final = [N, sched.total_duration, *P[-1]] + ([target_pop[-1]] if target is not None else [])
    final_header = ["N", "T_us"] + [f"P_n{n}" for n in range(N + 1)] + (["P_target"] if target is not None else [])
    paths.append(write_csv(out / "evolve_terminal.csv", final_header, [final]))
    if args.dump_states or cfg.dump_states:
        paths.append(dump_states(out / "states.bin", N, traj.states))
    results = {"norm_drift": traj.norm_drift()}
    if target is not None:
        results["target_population"] = float(target_pop[-1])
    return paths, results


# --- spectrum ---------------------------------------------------------------

def _spectrum_tables(cfg: RunConfig, out: Path, stem: str):
    spec, sched = cfg.lattice, cfg.schedule
    k = min(cfg.k_retained, spec.dim)
    trace = spectrum.spectrum_trace(spec, sched, cfg.sample_count, k, with_vectors=False)
    gap = spectrum.gap_trace(spec, sched, cfg.gap_samples, slope_window=cfg.slope_window)
    header = ["t_us"] + [f"E{i}_mhz" for i in range(k)] + ["E01_mhz"]
    path = write_csv(out / f"{stem}.csv", header, zip(trace.times, *trace.energies.T, trace.gap01))
    results = {"min_gap_mhz": gap.min_gap, "t_min_us": gap.t_min, "slope_mhz_per_us": gap.slope,
               "slope_times_us": list(gap.slope_times), "lz_fidelity": analysis.lz_fidelity(gap.min_gap, gap.slope)}
    return [path], results


def run_spectrum(cfg: RunConfig, out: Path, args):
    return _spectrum_tables(cfg, out, "spectrum")


# --- classical --------------------------------------------------------------

def _ladder_tables(spec: LatticeSpec, out: Path) -> list[Path]:
    N = spec.n_sites
    rows = []
    for level, cross in classical.ladder(spec):
        exact = classical.min_energy_formula(spec, level.n, 0.0)[0] if level.n >= 1 and N >= 2 else 0.0
        rows.append([level.n, to_bitstring(level.config, N), " ".join(map(str, sites_of(level.config))),
                     level.energy, "" if cross is None else cross, exact])
    ladder = write_csv(out / "classical_ladder.csv",
                       ["n", "config_bitstring", "sites", "energy_at_zero_detuning_mhz",
                        "crossing_detuning_mhz", "equidistant_formula_mhz"], rows)
    levels = []
    for n in range((N + 1) // 2 + 1):
        for lv in classical.subspace_levels(spec, n, 0.0):
            levels.append([n, to_bitstring(lv.config, N), lv.energy, lv.is_minimal])
    return [ladder, write_csv(out / "classical_levels.csv",
                              ["n", "config_bitstring", "energy_at_zero_detuning_mhz", "is_minimal"], levels)]


def run_classical(cfg: RunConfig, out: Path, args):
    return _ladder_tables(cfg.lattice, out), {}


# --- phase scan -------------------------------------------------------------

def _scan_row(job):
    spec, rabi, detunings, floor = job
    names, grid = analysis.phase_scan(spec, [rabi if rabi > 0 else floor], detunings)
    return names, grid[0]


def run_phase_scan(cfg: RunConfig, out: Path, args):
    spec = cfg.lattice
    rabis = np.linspace(0.0, cfg.scan_rabi_max_mhz, cfg.scan_rabi_points)
    dets = np.linspace(cfg.scan_detuning_min_mhz, cfg.scan_detuning_max_mhz, cfg.scan_detuning_points)
    floor = analysis.CLASSICAL_RABI_FRACTION * rabis.max()
    parts = pmap(_scan_row, [(spec, r, dets, floor) for r in rabis], args.jobs)
    names = parts[0][0]
    rows = []
    for rabi, (_, grid) in zip(rabis, parts):
        for det, overlaps in zip(dets, grid):
            rows.append([rabi, det, *overlaps])
    path = write_csv(out / "phase_scan.csv", ["rabi_mhz", "detuning_mhz"] + [f"overlap_{n}" for n in names], rows)
    return [path], {"probes": names}


# --- fidelity sweep ---------------------------------------------------------

def _fidelity_job(job):
    spec, sched, sample_count, gap_samples, window = job
    return analysis.fidelity_report(spec, sched, sample_count=sample_count, gap_samples=gap_samples,
                                    slope_window=window)


def fidelity_sweep(cfg: RunConfig, jobs: int = 1) -> list[analysis.FidelityReport]:
    work = [(cfg.with_sites(n), cfg.schedule.with_duration(float(T)), cfg.sample_count, cfg.gap_samples,
             cfg.slope_window)
            for n in cfg.sweep_sites for T in cfg.sweep_durations()]
    return pmap(_fidelity_job, work, jobs)


def run_fidelity_sweep(cfg: RunConfig, out: Path, args):
    reports = fidelity_sweep(cfg, args.jobs)
    rows = [[r.n_sites, r.duration, r.exact_fidelity, r.lz_fidelity, r.min_gap, r.slope] for r in reports]
    path = write_csv(out / "fidelity_sweep.csv",
                     ["N", "T_us", "F_exact", "F_LZ", "min_gap_mhz", "slope_mhz_per_us"], rows)
    return [path], {}


# --- two-level demo ---------------------------------------------------------

def _lz_job(job):
    rabi, span, T, samples = job
    return lzmodel.simulate_two_level(lzmodel.TwoLevelParams.from_span(rabi, span, T), samples)


def _lz_tables(cfg: RunConfig, durations, out: Path, name: str, jobs: int) -> tuple[list[Path], dict]:
    runs = pmap(_lz_job, [(cfg.lz_rabi_mhz, cfg.lz_span_mhz, T, cfg.sample_count) for T in durations], jobs)
    rows = []
    for run in runs:
        det = run.params.detuning(run.times)
        for i, t in enumerate(run.times):
            rows.append([run.params.duration, t, run.params.rabi, det[i], run.energies[i, 0], run.energies[i, 1],
                         run.adiabatic[i], run.dressed[i]])
    path = write_csv(out / name, ["T_us", "t_us", "rabi_mhz", "detuning_mhz", "E0_mhz", "E1_mhz",
                                  "P_adiabatic", "P_dressed"], rows)
    summary = {f"{run.params.duration:g}": {"dip_depth": run.dip_depth, "final_loss": run.final_loss}
               for run in runs}
    return [path], summary


def run_lz_demo(cfg: RunConfig, out: Path, args):
    return _lz_tables(cfg, cfg.lz_durations_us, out, "lz_demo.csv", args.jobs)


# --- figure reproduction ----------------------------------------------------

def _figure2(cfg: RunConfig, out: Path):
    spec, sched = cfg.lattice, cfg.schedule
    traj = evolve(spec, sched, basis_state(spec, 0), cfg.sample_count)
    N = spec.n_sites
    pops = traj.populations()
    rabi, det = sample_many(sched, traj.times)
    sym = np.asarray(symmetric_single_excitation(spec))
    header = ["t_us", "rabi_mhz", "detuning_mhz", "P_empty", "P_single_sym"]
    cols = [traj.times, rabi, det, pops[:, 0], np.abs(traj.states @ sym.conj()) ** 2]
    for n in range(2, (N + 1) // 2 + 1):
        config = classical.min_energy_config(spec, n)
        header.append(f"P_{'_'.join(map(str, sites_of(config)))}")
        cols.append(pops[:, config])
    odd = analysis.odd_site_path(spec)
    for n in range(1, (N + 1) // 2):
        header.append(f"P_odd_n{n}")
        cols.append(pops[:, [c for c in odd if bin(c).count("1") == n]].sum(axis=1))
    rho = analysis.rydberg_density(traj)
    header += [f"rydberg_site{j}" for j in range(1, N + 1)] + ["path1_sum", "path2_sum"]
    cols += [*rho.T, analysis.path_populations(traj, analysis.lowest_energy_path(spec)),
             analysis.path_populations(traj, odd)]
    return [write_csv(out / "fig2.csv", header, zip(*cols))], {"target_population": float(pops[-1, af_target(spec)])}


def _figure3(cfg: RunConfig, out: Path):
    spec, sched = cfg.lattice, cfg.schedule
    k = min(cfg.k_retained, spec.dim)
    traj = evolve(spec, sched, basis_state(spec, 0), cfg.sample_count)
    trace = spectrum.spectrum_trace(spec, sched, traj.times, k)
    adiabatic = spectrum.adiabatic_populations(traj, trace)
    dressed = spectrum.dressed_populations(traj, trace, min(cfg.dressing_k_max, k - 1))
    gap = spectrum.gap_trace(spec, sched, cfg.gap_samples, slope_window=cfg.slope_window)
    header = (["t_us"] + [f"E{i}_mhz" for i in range(k)] + ["E01_mhz"]
              + [f"P_alpha{i}" for i in range(k)] + ["P_dressed"])
    path = write_csv(out / "fig3.csv", header,
                     zip(trace.times, *trace.energies.T, trace.gap01, *adiabatic.T, dressed))
    return [path], {"min_gap_mhz": gap.min_gap, "t_min_us": gap.t_min, "tracking_flags": len(trace.flags)}


def _gap_job(job):
    spec, sched, samples, window = job
    return spectrum.gap_trace(spec, sched, samples, slope_window=window)


def _figure4a(cfg: RunConfig, out: Path, jobs: int):
    sites = sorted(set(cfg.scaling_sites))
    reports = pmap(_gap_job, [(cfg.with_sites(n), cfg.schedule, cfg.gap_samples, cfg.slope_window)
                              for n in sites], jobs)
    T = cfg.schedule.total_duration
    traces = [[n, t / T, g] for n, r in zip(sites, reports) for t, g in zip(r.times, r.gap_series)]
    paths = [write_csv(out / "fig4a_gap_traces.csv", ["N", "t_over_T", "E01_mhz"], traces)]
    rabi_max = cfg.schedule.rabi_max
    points = [(n, r.min_gap) for n, r in zip(sites, reports)]
    results = {}
    try:
        fit = analysis.fit_gap_scaling(points, rabi_max, min_sites=cfg.fit_min_sites)
        results = {"prefactor": fit.prefactor, "exponent": fit.exponent, "residual": fit.residual,
                   "fit_sites": list(fit.n_values)}
    except DomainError as exc:
        fit = None
        log.warning("no scaling fit: %s", exc)
    rows = [[n, r.min_gap, r.min_gap / (2 * rabi_max), r.t_min, r.slope,
             fit.predict(n) if fit else ""] for n, r in zip(sites, reports)]
    paths.append(write_csv(out / "fig4a_min_gaps.csv",
                           ["N", "min_gap_mhz", "gap_over_2rabi", "t_min_us", "slope_mhz_per_us", "fit_gap_over_2rabi"],
                           rows))
    return paths, results


def run_reproduce(cfg: RunConfig, out: Path, args):
    fig = args.figure
    if fig == "1b":
        return _ladder_tables(cfg.lattice, out), {}
    if fig == "1c":
        return run_phase_scan(cfg, out, args)
    if fig == "2":
        return _figure2(cfg, out)
    if fig == "3":
        return _figure3(cfg, out)
    if fig == "4a":
        return _figure4a(cfg, out, args.jobs)
    if fig == "4b":
        return run_fidelity_sweep(cfg, out, args)
    durations = cfg.lz_durations_us
    if fig == "5":
        return _lz_tables(cfg, [durations[len(durations) // 2]], out, "fig5.csv", args.jobs)
    return _lz_tables(cfg, durations, out, "fig6.csv", args.jobs)


COMMANDS = {
    "evolve": run_evolve,
    "spectrum": run_spectrum,
    "classical": run_classical,
    "phase-scan": run_phase_scan,
    "fidelity-sweep": run_fidelity_sweep,
    "lz-demo": run_lz_demo,
    "reproduce-figure": run_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML config or a previous manifest.json")
    common.add_argument("--out", type=Path, help="output directory (default: output_dir from the config)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for independent jobs")
    common.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")

    parser = argparse.ArgumentParser(prog="rydprep", description="Adiabatic preparation of Rydberg chain states.")
    sub = parser.add_subparsers(dest="command", required=True)
    ev = sub.add_parser("evolve", parents=[common], help="propagate |0> and write observables")
    ev.add_argument("--dump-states", action="store_true", help="also write states.bin")
    sub.add_parser("spectrum", parents=[common], help="instantaneous spectrum and gap report")
    cl = sub.add_parser("classical", parents=[common], help="classical (Omega -> 0) energy ladder")
    cl.add_argument("what", choices=["ladder"])
    sub.add_parser("phase-scan", parents=[common], help="ground-state overlaps over an (Omega, Delta) grid")
    sub.add_parser("fidelity-sweep", parents=[common], help="exact vs Landau-Zener fidelity over N and T")
    sub.add_parser("lz-demo", parents=[common], help="two-level adiabatic and dressed populations")
    rf = sub.add_parser("reproduce-figure", parents=[common], help="data behind one figure")
    rf.add_argument("figure", choices=FIGURES)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config) if args.config else default_config()
        cfg = _apply_overrides(cfg, args.set)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = args.out or Path(cfg.output_dir)
    start = time.perf_counter()
    try:
        paths, results = COMMANDS[args.command](cfg, out, args)
    except (IntegrationError, EigensolverError, spectrum.DegeneracyError) as exc:
        print(f"numerical failure in {type(exc).__module__}: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    wall = time.perf_counter() - start
    command = args.command + (f" {args.figure}" if args.command == "reproduce-figure" else "")
    manifest = write_manifest(out / "manifest.json", command=command, config=cfg.to_dict(),
                              outputs=paths, wall_time_s=wall, extra=results)
    (out / "config.toml").write_text(cfg.to_toml())
    if not args.quiet:
        for p in [*paths, manifest]:
            print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
