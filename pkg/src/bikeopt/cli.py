"""Command-line entry point: batch sizing studies, simulation, map
fitting, comparison tables, and plot-data emission.

Exit codes: 0 success, 1 solver failure, 2 input error, 3 constraint
violation in strict simulation.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from bikeopt import machines as mach
from bikeopt import nlp
from bikeopt import performance as perf
from bikeopt import simulate as simu
from bikeopt.config import ConfigBundle, ConfigError, default_bundle, load_config
from bikeopt.cycle import (
    CycleError, DrivingCycle, load_cycle, make_constant_cycle,
    make_road_cycle, make_sprint_brake_cycle, make_urban_cycle,
)
from bikeopt.simulate import Design

log = logging.getLogger("bikeopt")

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_INPUT = 2
EXIT_VIOLATION = 3

DEMO_CYCLES = {
    "urban": make_urban_cycle,
    "road": make_road_cycle,
    "sprint": make_sprint_brake_cycle,
    "constant": make_constant_cycle,
}


class InputError(ValueError):
    pass


def _load_bundle(args) -> ConfigBundle:
    if getattr(args, "params", None):
        return load_config(args.params)
    return default_bundle()


def _load_one_cycle(spec: str, dt: float) -> DrivingCycle:
    if spec in DEMO_CYCLES:
        return DEMO_CYCLES[spec]()
    path = Path(spec)
    if not path.exists():
        raise InputError(f"cycle file not found: {path}")
    cyc = load_cycle(path)
    if abs(cyc.dt - dt) > 1e-12:
        from bikeopt.cycle import resample
        cyc = resample(cyc, dt)
    return cyc


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_trajectory_csv(path, cyc: DrivingCycle, sim: simu.SimResult):
    cols = [
        ("t", cyc.t), ("v", cyc.v), ("a", cyc.a), ("theta", cyc.theta),
        ("sigma", sim.sigma), ("sigma_a", np.clip(sim.sigma_a_raw, 0.0, 1.0)),
        ("F_v", sim.F_v), ("F_m_f", sim.F_m_f), ("F_m_r", sim.F_m_r),
        ("F_brk_f", sim.F_brk_f), ("F_brk_r", sim.F_brk_r),
        ("F_tr_f", sim.F_tr_f), ("mu_r", sim.mu_r), ("P_v", sim.P_v),
        ("P_ac", sim.P_ac), ("P_b", sim.P_b), ("E_b", sim.E_b[:-1]),
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([name for name, _ in cols])
        for k in range(cyc.n):
            w.writerow([f"{arr[k]:.10g}" for _, arr in cols])


def design_summary(res: nlp.SolveResult, bundle: ConfigBundle) -> dict:
    d = res.design
    b = bundle.battery
    return {
        "design": {"gamma": d.gamma, "S_m": d.S_m, "S_b": d.S_b},
        "mode": res.mode,
        "backend": res.backend,
        "status": res.status,
        "mass_kg": round(res.sim.m_total, 6),
        "E_b_max_kwh": round(d.S_b * b.Ebar_max / 3.6e6, 6),
        "P_m_max_r_kw": round(d.S_m * bundle.rear.Pbar_max / 1e3, 6),
        "Ec_wh_per_km": round(res.Ec_wh_per_km, 6),
        "E_c_j": res.E_c,
        "objective_wh": res.J,
        "zeta_pct": round(res.sim.energy.zeta, 4),
        "eta_pct": round(res.sim.energy.eta_avg, 4),
        "max_violation": res.max_violation,
        "iterations": res.iterations,
        "wall_time_s": round(res.wall_time, 3),
        "sigma": [float(s) for s in res.sigma],
    }


def _solve_both(cyc, bundle: ConfigBundle, opts: nlp.SolverOptions):
    """Fixed-split solve, then free solve warm-started from it."""
    fixed = nlp.solve(cyc, bundle.vehicle, bundle.front, bundle.rear,
                      bundle.battery, mode="fixed-sigma-adherence",
                      options=opts)
    free_opts = nlp.SolverOptions(
        backend=opts.backend, max_iter=opts.max_iter, tol=opts.tol,
        n_grid=opts.n_grid, golden_iters=opts.golden_iters,
        warm_designs=opts.warm_designs + (fixed.design,),
        verbose=opts.verbose)
    free = nlp.solve(cyc, bundle.vehicle, bundle.front, bundle.rear,
                     bundle.battery, mode="free-sigma", options=free_opts)
    return fixed, free


def _delta_pct(free: float, fixed: float) -> str:
    if fixed == 0:
        return "n/a"
    return f"({100.0 * (free - fixed) / fixed:+.2f}%)"


def compare_rows(named_cycles, bundle: ConfigBundle, opts: nlp.SolverOptions):
    rows = []
    for name, cyc in named_cycles:
        fixed, free = _solve_both(cyc, bundle, opts)
        b = bundle.battery
        rows.append({
            "cycle": name,
            "m_v_fixed": fixed.sim.m_total,
            "m_v_free": free.sim.m_total,
            "E_b_max_fixed_kwh": fixed.design.S_b * b.Ebar_max / 3.6e6,
            "E_b_max_free_kwh": free.design.S_b * b.Ebar_max / 3.6e6,
            "P_r_fixed_kw": fixed.design.S_m * bundle.rear.Pbar_max / 1e3,
            "P_r_free_kw": free.design.S_m * bundle.rear.Pbar_max / 1e3,
            "Ec_fixed": fixed.Ec_wh_per_km,
            "Ec_free": free.Ec_wh_per_km,
            "zeta_fixed": fixed.sim.energy.zeta,
            "zeta_free": free.sim.energy.zeta,
            "eta_fixed": fixed.sim.energy.eta_avg,
            "eta_free": free.sim.energy.eta_avg,
            "J_fixed": fixed.J,
            "J_free": free.J,
        })
    return rows


def format_compare_table(rows) -> str:
    out = ["cycle        m_v [kg]          E_b,max [kWh]     "
           "P_r,max [kW]      Ec [Wh/km]",
           "-" * 86]
    for r in rows:
        out.append(
            f"{r['cycle']:<12} "
            f"{r['m_v_free']:7.2f} {_delta_pct(r['m_v_free'], r['m_v_fixed']):>9} "
            f"{r['E_b_max_free_kwh']:6.2f} {_delta_pct(r['E_b_max_free_kwh'], r['E_b_max_fixed_kwh']):>10} "
            f"{r['P_r_free_kw']:7.2f} {_delta_pct(r['P_r_free_kw'], r['P_r_fixed_kw']):>9} "
            f"{r['Ec_free']:7.2f} {_delta_pct(r['Ec_free'], r['Ec_fixed']):>9}")
    out.append("")
    out.append("cycle        zeta_fixed  zeta_free   eta_fixed  eta_free")
    out.append("-" * 58)
    for r in rows:
        out.append(f"{r['cycle']:<12} {r['zeta_fixed']:9.2f}  {r['zeta_free']:9.2f} "
                   f"{r['eta_fixed']:10.2f} {r['eta_free']:9.2f}")
    return "\n".join(out)


# -- subcommands ----------------------------------------------------------


def cmd_optimize(args) -> int:
    bundle = _load_bundle(args)
    cyc = _load_one_cycle(args.cycle, args.dt)
    out = _outdir(args)
    opts = nlp.SolverOptions(backend=args.backend, max_iter=args.max_iter,
                             tol=args.tol)
    results = {}
    if args.mode == "both":
        results["adherence"], results["free"] = _solve_both(cyc, bundle, opts)
    else:
        mode = "free-sigma" if args.mode == "free" else "fixed-sigma-adherence"
        key = "free" if args.mode == "free" else "adherence"
        results[key] = nlp.solve(cyc, bundle.vehicle, bundle.front,
                                 bundle.rear, bundle.battery, mode=mode,
                                 options=opts)
    loglines = []
    failed = False
    for key, res in results.items():
        summary = design_summary(res, bundle)
        (out / f"design_{key}.json").write_text(
            json.dumps(summary, indent=2), encoding="utf-8")
        write_trajectory_csv(out / f"trajectory_{key}.csv", cyc, res.sim)
        loglines.append(f"[{key}] status={res.status} J={res.J:.6f} Wh "
                        f"Ec={res.Ec_wh_per_km:.2f} Wh/km "
                        f"viol={res.max_violation:.3e} "
                        f"iter={res.iterations} t={res.wall_time:.2f}s")
        print(loglines[-1])
        if res.max_violation > 1e-6 or "infeasible" in res.status:
            failed = True
    if args.mode == "both":
        rows = [{"cycle": args.cycle,
                 "Ec_fixed": results["adherence"].Ec_wh_per_km,
                 "Ec_free": results["free"].Ec_wh_per_km}]
        delta = _delta_pct(rows[0]["Ec_free"], rows[0]["Ec_fixed"])
        loglines.append(f"free vs adherence Ec delta: {delta}")
        print(loglines[-1])
    (out / "solver.log").write_text("\n".join(loglines) + "\n",
                                    encoding="utf-8")
    return EXIT_SOLVER if failed else EXIT_OK


def _design_from_args(args, bundle) -> tuple[Design, np.ndarray | None]:
    if args.design:
        path = Path(args.design)
        if not path.exists():
            raise InputError(f"design file not found: {path}")
        data = json.loads(path.read_text(encoding="utf-8"))
        d = data["design"]
        sigma = np.asarray(data["sigma"], dtype=float) if "sigma" in data else None
        return Design(gamma=d["gamma"], S_m=d["S_m"], S_b=d["S_b"]), sigma
    if args.gamma is None or args.s_m is None or args.s_b is None:
        raise InputError("either --design or all of --gamma/--s-m/--s-b")
    return Design(gamma=args.gamma, S_m=args.s_m, S_b=args.s_b), None


def cmd_simulate(args) -> int:
    bundle = _load_bundle(args)
    cyc = _load_one_cycle(args.cycle, args.dt)
    design, sigma = _design_from_args(args, bundle)
    out = _outdir(args)
    if sigma is not None and not args.adherence:
        if sigma.shape != cyc.v.shape:
            raise InputError("stored split trace does not match the cycle")
        res = simu.run(design, cyc, bundle.vehicle, bundle.front, bundle.rear,
                       bundle.battery, policy="sigma-trace", sigma_trace=sigma)
    else:
        res = simu.run(design, cyc, bundle.vehicle, bundle.front, bundle.rear,
                       bundle.battery, policy="adherence")
    write_trajectory_csv(out / "trajectory.csv", cyc, res)
    print(f"E_c = {res.E_c:.3f} J ({res.Ec_wh_per_km:.2f} Wh/km), "
          f"zeta = {res.energy.zeta:.2f}%, eta = {res.energy.eta_avg:.2f}%")
    for v in res.violations[:20]:
        print(f"violation: {v}")
    if args.strict and res.violations:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_fit_map(args) -> int:
    samples = []
    path = Path(args.infile)
    if not path.exists():
        raise InputError(f"loss-map file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"omega", "torque", "p_loss"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise InputError("loss-map CSV needs columns omega,torque,p_loss")
        for row in reader:
            samples.append(mach.LossMapSample(
                omega=float(row["omega"]), torque=float(row["torque"]),
                p_loss=float(row["p_loss"])))
    coeffs, report = mach.fit_loss_map(samples, l_co=args.l_co, l_ew=args.l_ew)
    print(f"fit: R^2 = {report.r_squared:.6f}, NRMSE = "
          f"{100 * report.nrmse:.2f}% over {report.n_samples} samples")
    lines = ["[rear_motor.loss]"]
    for name in ("a_Fe", "a_Mech", "b_Mech", "c_Mech", "d_Mech", "a_Cu",
                 "b_Cu"):
        lines.append(f"{name} = {float(getattr(coeffs, name))!r}")
    Path(args.outfile).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_compare(args) -> int:
    bundle = _load_bundle(args)
    named = [(spec, _load_one_cycle(spec, args.dt)) for spec in args.cycles]
    opts = nlp.SolverOptions(backend=args.backend, max_iter=args.max_iter,
                             tol=args.tol)
    rows = compare_rows(named, bundle, opts)
    table = format_compare_table(rows)
    out = _outdir(args)
    (out / "compare.json").write_text(json.dumps(rows, indent=2),
                                      encoding="utf-8")
    (out / "compare.txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    bad = [r for r in rows if r["J_free"] > r["J_fixed"] * (1 + 1e-9)]
    return EXIT_SOLVER if bad else EXIT_OK


def cmd_report(args) -> int:
    bundle = _load_bundle(args)
    cyc = _load_one_cycle(args.cycle, args.dt)
    design, sigma = _design_from_args(args, bundle)
    p, front, rear, bat = (bundle.vehicle, bundle.front, bundle.rear,
                           bundle.battery)
    if sigma is not None:
        res = simu.run(design, cyc, p, front, rear, bat,
                       policy="sigma-trace", sigma_trace=sigma)
    else:
        res = simu.run(design, cyc, p, front, rear, bat, policy="adherence")
    m = res.m_total
    t_a = perf.accel_time(p, m, front, rear, design.S_m, design.gamma)
    # (label, margin, typical magnitude for the active-constraint tolerance)
    margins = [
        ("accel-time [s slack]", p.t_a_max - t_a, 1.0),
        ("top-speed [W]",
         perf.top_speed_margin(p, m, front, rear, design.S_m), 1e4),
        ("power-grade [W]",
         perf.power_gradeability_margin(p, m, front, rear, design.S_m), 1e4),
        ("torque-grade [Nm/m]",
         perf.torque_gradeability_margin(p, m, front, rear, design.S_m,
                                         design.gamma), 1e3),
        ("range [J]", perf.range_margin(res.E_c, design.S_b, bat,
                                        cyc.length_m, p.D_r), 1e6),
    ]
    print(f"design: gamma={design.gamma:.4f} S_m={design.S_m:.4f} "
          f"S_b={design.S_b:.4f}  mass={m:.2f} kg")
    print(f"consumption: {res.Ec_wh_per_km:.2f} Wh/km  "
          f"zeta={res.energy.zeta:.2f}%  eta={res.energy.eta_avg:.2f}%")
    bad = False
    for name, val, scale in margins:
        if val >= -1e-6 * scale:
            status = "ok (active)" if val <= 1e-6 * scale else "ok"
        else:
            status = "VIOLATED"
            bad = True
        print(f"  {name:<22} {val:14.4f}  {status}")
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_plot_data(args) -> int:
    path = Path(args.trajectory)
    if not path.exists():
        raise InputError(f"trajectory file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise InputError("empty trajectory file")
    t = np.array([float(r["t"]) for r in rows])
    t_from = args.t_from if args.t_from is not None else t[0]
    t_to = args.t_to if args.t_to is not None else t[-1]
    if t_to > t[-1] or t_from < t[0]:
        log.warning("window [%s, %s] clipped to cycle span [%s, %s]",
                    t_from, t_to, t[0], t[-1])
    mask = (t >= max(t_from, t[0])) & (t <= min(t_to, t[-1]))
    if not np.any(mask):
        raise InputError("window selects no samples")
    sel = [r for r, keep in zip(rows, mask) if keep]
    out = _outdir(args)

    def emit(name, columns):
        with open(out / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(columns)
            for r in sel:
                w.writerow([r[c] for c in columns])

    emit("panel_speed.csv", ["t", "v"])
    emit("panel_power.csv", ["t", "P_v", "P_ac", "P_b"])
    emit("panel_sigma.csv", ["t", "sigma", "sigma_a"])
    print(f"wrote 3 panel files ({len(sel)} rows) to {out}")
    return EXIT_OK


# -- argument parsing -----------------------------------------------------


def _add_common(sp, cycle=True, solver=False):
    sp.add_argument("--params", help="TOML parameter file")
    sp.add_argument("--out", default="out", help="output directory")
    if cycle:
        sp.add_argument("--cycle", required=True,
                        help="cycle CSV path or demo name "
                             f"({', '.join(DEMO_CYCLES)})")
        sp.add_argument("--dt", type=float, default=1.0,
                        help="time step for resampling, s")
    if solver:
        sp.add_argument("--backend", default="reduced",
                        choices=["reduced", "trust-constr"])
        sp.add_argument("--max-iter", type=int, default=300)
        sp.add_argument("--tol", type=float, default=1e-9)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bikeopt",
        description="Electric superbike powertrain co-design toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("optimize", help="size the powertrain on a cycle")
    _add_common(sp, solver=True)
    sp.add_argument("--mode", default="free",
                    choices=["free", "adherence", "both"])
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("simulate", help="forward-simulate a fixed design")
    _add_common(sp)
    sp.add_argument("--design", help="design JSON from optimize")
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--s-m", type=float)
    sp.add_argument("--s-b", type=float)
    sp.add_argument("--adherence", action="store_true",
                    help="force the adherence split even if the design "
                         "JSON stores a trace")
    sp.add_argument("--strict", action="store_true",
                    help="exit 3 if any violation is recorded")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit-map", help="fit motor loss coefficients")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--out", dest="outfile", required=True)
    sp.add_argument("--l-co", type=float, default=0.10)
    sp.add_argument("--l-ew", type=float, default=0.025)
    sp.set_defaults(func=cmd_fit_map)

    sp = sub.add_parser("compare", help="free vs adherence table on cycles")
    sp.add_argument("--params", help="TOML parameter file")
    sp.add_argument("--out", default="out")
    sp.add_argument("--dt", type=float, default=1.0)
    sp.add_argument("--cycles", nargs="+", required=True)
    sp.add_argument("--backend", default="reduced",
                    choices=["reduced", "trust-constr"])
    sp.add_argument("--max-iter", type=int, default=300)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("report", help="constraint margins of a design")
    _add_common(sp)
    sp.add_argument("--design")
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--s-m", type=float)
    sp.add_argument("--s-b", type=float)
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("plot-data", help="windowed panel CSVs")
    sp.add_argument("--trajectory", required=True,
                    help="trajectory CSV from optimize/simulate")
    sp.add_argument("--out", default="out")
    sp.add_argument("--from", dest="t_from", type=float)
    sp.add_argument("--to", dest="t_to", type=float)
    sp.set_defaults(func=cmd_plot_data)

    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ConfigError, CycleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except simu.SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
