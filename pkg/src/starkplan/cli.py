"""Command-line front end.

Exit status: 0 success, 1 failed self-check (``thermal --verify-paper``),
2 domain or parse error, 3 fit non-convergence.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import audit, fitting, interference, planner, synth
from . import io as sio
from .emitters import CATALOG, CavityModel, stark_to_dict
from .errors import DomainError, FitError

EXIT_OK, EXIT_CHECK, EXIT_DOMAIN, EXIT_FIT = 0, 1, 2, 3


def n_threads():
    try:
        n = int(os.environ.get("STARKPLAN_THREADS", "1"))
    except ValueError:
        raise DomainError("STARKPLAN_THREADS must be an integer") from None
    return max(1, n)


def _map_files(fn, paths):
    with ThreadPoolExecutor(max_workers=n_threads()) as ex:
        return list(ex.map(fn, paths))


def _emit(args, summary, lines):
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        print("\n".join(lines))
    if getattr(args, "out", None) and summary is not None and not getattr(args, "_wrote", False):
        sio.atomic_write_text(args.out, sio.dump_json(summary))


def _fmt(v, e=None):
    return f"{v:.6g}" if e is None else f"{v:.6g} +/- {e:.2g}"


# ---------------------------------------------------------------------------
# Fits
# ---------------------------------------------------------------------------

def ple_summary(path):
    fit = fitting.fit_ple(sio.read_spectrum(path))
    return {"file": str(path), **fitting.peak_summary(fit), "fit": fit.to_dict()}


def cmd_fit_ple(args):
    res = _map_files(ple_summary, args.scans)
    lines = [f"{r['file']}: center {_fmt(r['center'], r['center_err'])} GHz, "
             f"fwhm {_fmt(r['fwhm'], r['fwhm_err'])} GHz, "
             f"amplitude {_fmt(r['amplitude'], r['amplitude_err'])}" for r in res]
    _emit(args, res, lines)


def cmd_fit_cavity(args):
    fit = fitting.fit_cavity(sio.read_spectrum(args.scan))
    s = {"q_factor": fit.extra["q_factor"], "q_factor_err": fit.extra["q_factor_err"],
         "nu_cav_ghz": fit["nu_cav"], "gamma_cav_ghz": fit["gamma_cav"], "fit": fit.to_dict()}
    _emit(args, s, [f"Q = {_fmt(s['q_factor'], s['q_factor_err'])}",
                    f"nu_cav = {_fmt(fit['nu_cav'], fit.error('nu_cav'))} GHz",
                    f"linewidth = {_fmt(fit['gamma_cav'], fit.error('gamma_cav'))} GHz"])


def decay_summary(path):
    fit = fitting.fit_decay(sio.read_transient(path))
    return {"file": str(path), "tau_ns": fit["tau"], "tau_err_ns": fit.error("tau"),
            "fit": fit.to_dict()}


def cmd_fit_decay(args):
    res = _map_files(decay_summary, args.transients)
    lines = [f"{r['file']}: tau {_fmt(r['tau_ns'], r['tau_err_ns'])} ns" for r in res]
    _emit(args, res, lines)


def cmd_fit_stark(args):
    cols = sio.read_csv_columns(args.series, ("bias_v", "center_ghz", "fwhm_ghz"),
                                ("center_sigma_ghz", "fwhm_sigma_ghz"))
    sf = fitting.fit_stark_series(
        cols["bias_v"], cols["center_ghz"], cols["fwhm_ghz"], (args.v_min, args.v_threshold),
        center_sigma=cols.get("center_sigma_ghz"), width_sigma=cols.get("fwhm_sigma_ghz"),
        threshold=args.aic_threshold, name=args.name)
    r = sf.response
    s = {"emitter": stark_to_dict(r),
         "shift_model": "quadratic" if sf.shift_quadratic else "linear",
         "width_model": "quadratic" if sf.width_quadratic else "linear",
         "shift_fit": sf.shift_fit.to_dict(), "width_fit": sf.width_fit.to_dict()}
    if args.out:
        sio.atomic_write_text(args.out, sio.dump_json({"emitters": [stark_to_dict(r)]}))
        args._wrote = True
    _emit(args, s, [f"nu0 {r.nu0:.6f} GHz, gamma0 {r.gamma0:.6g} GHz ({s['shift_model']} shift, "
                    f"{s['width_model']} width)",
                    f"alpha1 {r.alpha1:.6g} GHz/V, alpha2 {r.alpha2:.6g} GHz/V^2",
                    f"gamma1 {r.gamma1:.6g} GHz/V, gamma2 {r.gamma2:.6g} GHz/V^2"])


def cmd_fit_holeburn(args):
    cols = sio.read_csv_columns(args.series, ("power_nw", "width_mhz"), ("sigma_mhz",))
    hb = fitting.fit_holeburning(cols["power_nw"], cols["width_mhz"], cols.get("sigma_mhz"))
    s = {"hom_linewidth_mhz": hb.hom_linewidth, "hom_linewidth_err_mhz": hb.hom_linewidth_err,
         "low_power_hole_width_mhz": hb.low_power_hole_width,
         "p_sat_nw": None if hb.unbounded else hb.p_sat,
         "p_sat_err_nw": None if hb.unbounded else hb.p_sat_err,
         "p_sat_unbounded": hb.unbounded, "fit": hb.fit.to_dict()}
    psat = "unbounded" if hb.unbounded else _fmt(hb.p_sat, hb.p_sat_err) + " nW"
    _emit(args, s, [f"homogeneous linewidth {_fmt(hb.hom_linewidth, hb.hom_linewidth_err)} MHz",
                    f"P_sat {psat}"])


# ---------------------------------------------------------------------------
# Correlation and interference
# ---------------------------------------------------------------------------

def cmd_g2(args):
    t1 = sio.read_csv_columns(args.det1, ("time_s",))["time_s"]
    t2 = sio.read_csv_columns(args.det2, ("time_s",))["time_s"]
    if np.any(np.diff(t1) < 0) or np.any(np.diff(t2) < 0):
        raise DomainError("timestamps must be sorted")
    orders, counts = fitting.coincidence_areas(t1, t2, args.period_s, args.window_s, args.peaks)
    n1, n2 = t1.size / args.duration_s, t2.size / args.duration_s
    g = fitting.g2_correct(counts, n1, n2, args.b1_cps, args.b2_cps, args.window_s,
                           args.period_s, args.duration_s)
    raw = fitting.raw_g2(orders, counts)
    s = {"orders": orders.tolist(), "areas": counts.tolist(), "g2_corrected": g.tolist(),
         "g2_raw_0": raw, "g2_corrected_0": float(g[orders == 0][0]),
         "n1_cps": n1, "n2_cps": n2}
    _emit(args, s, [f"raw g2(0) {raw:.4f}", f"corrected g2(0) {s['g2_corrected_0']:.4f}"]
          + [f"  n={o:+d}: area {c}, g2 {v:.4f}" for o, c, v in zip(orders, counts, g)])


def cmd_hom(args):
    cfg = interference.EmitterPairConfig.from_fwhm(args.tau_prime_ns, args.gamma1_ghz,
                                                   args.gamma2_ghz, args.detuning_ghz,
                                                   args.gate_ns)
    v = interference.hom_visibility(cfg)
    _emit(args, {"visibility": v, "sigma_total_sq_ghz2": cfg.sigma_total_sq},
          [f"HOM visibility {v:.6f}"])


def pexc_map_rows(gamma_fixed, n_ratio=100, n_delta=121, delta_max=3.0, floor=1e-6):
    ratios = np.linspace(1.0 / n_ratio, 1.0, n_ratio)
    deltas = np.linspace(0.0, delta_max, n_delta)
    p = interference.pexc_grid(ratios, deltas, floor)
    rows = []
    for i, r in enumerate(ratios):
        gt = gamma_fixed / r
        for j, d in enumerate(deltas):
            rows.append((float(r), float(d), gt, float(d * math.hypot(gamma_fixed, gt)),
                         float(p[i, j])))
    return rows


PEXC_COLUMNS = ("gamma_ratio", "delta_tilde", "gamma_tuned_ghz", "detuning_ghz", "p_exc")


def cmd_pexc_map(args):
    rows = pexc_map_rows(args.gamma_fixed, args.ratio_points, args.delta_points,
                         args.delta_max, args.floor)
    sio.write_csv(args.out, PEXC_COLUMNS, rows)
    args._wrote = True
    _emit(args, {"out": args.out, "rows": len(rows), "floor": args.floor},
          [f"wrote {len(rows)} grid points to {args.out}"])


# ---------------------------------------------------------------------------
# Planning
# ---------------------------------------------------------------------------

def cmd_plan(args):
    ems, _ = sio.load_emitters(args.emitters)
    c = planner.PlanConstraints(max_reverse_bias=args.max_reverse_bias_v,
                                min_neutral_fraction=args.min_neutral_fraction,
                                objective=args.objective)
    plan = planner.plan_pairs(ems, c)
    s = plan.to_dict()
    lines = [f"{'pair':<16}{'target GHz':>14}{'V_a':>10}{'V_b':>10}{'p_exc':>12}"]
    for p in plan.pairs:
        flag = " quench" if (p.quench_a or p.quench_b) else ""
        lines.append(f"{p.a + '-' + p.b:<16}{p.target_ghz:>14.4f}{p.v_a:>10.3f}{p.v_b:>10.3f}"
                     f"{p.p_exc:>12.4g}{flag}")
    lines.append(f"unpaired: {', '.join(plan.unpaired) or '-'}")
    lines.append(f"objective ({plan.objective}): {plan.objective_value:.6g}")
    _emit(args, s, lines)


def cmd_fraction(args):
    cols = sio.read_csv_columns(args.ensemble, sio.SPECTRUM_COLUMNS)
    pdf = planner.pdf_from_spectrum(cols["frequency_ghz"], cols["intensity"], args.background)
    f = planner.tunable_fraction(pdf, args.window_ghz)
    _emit(args, {"window_ghz": args.window_ghz, "fraction": f},
          [f"tuneable fraction within {args.window_ghz} GHz: {f:.4f}"])


# ---------------------------------------------------------------------------
# Audit
# ---------------------------------------------------------------------------

def cmd_thermal(args):
    g = audit.ThermalGeometry(gas_pressure=args.pressure_pa, sink_temperature=args.temperature_k,
                              dissipated_power=args.power_nw)
    a = audit.thermal_audit(g)
    s = a.to_dict()
    lines = [f"{'step':<16}{'formula':<42}{'value':>14}{'reference':>12}{'dev':>8}"]
    for c in a.checkpoints:
        lines.append(f"{c.name:<16}{c.formula:<42}{c.value:>14.5g}{c.reference:>12.4g}"
                     f"{100 * c.rel_dev:>7.2f}%  {c.unit}")
    lines.append(f"Knudsen regime: {a.regime}")
    status = EXIT_OK
    if args.verify_paper:
        bad = a.verify(0.05)
        s["verify"] = {"passed": not bad, "failed": bad}
        lines.append("PASS" if not bad else f"FAIL: {', '.join(bad)}")
        status = EXIT_OK if not bad else EXIT_CHECK
    _emit(args, s, lines)
    return status


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def _scenario_emitters(args):
    if args.emitters:
        return sio.load_emitters(args.emitters)[0]
    names = args.emitter or ["A3"]
    try:
        return [CATALOG[n] for n in names]
    except KeyError as e:
        raise DomainError(f"unknown catalogue emitter {e}") from None


def _noise(args):
    return None if args.noise_time is None else synth.PoissonNoise(args.noise_time)


def cmd_simulate(args):
    kind = args.kind
    if kind == "ple":
        grid = synth.GridSpec(226130.0 if args.start_ghz is None else args.start_ghz,
                              226190.0 if args.stop_ghz is None else args.stop_ghz, args.points)
        sc = synth.SynthScenario(_scenario_emitters(args), grid,
                                 bias=args.bias_v, noise=_noise(args), seed=args.seed,
                                 scale=args.scale, background=args.background)
        sio.write_spectrum(args.out, synth.gen_ple_scan(sc))
    elif kind == "reflection":
        cav = CavityModel(name="sim", nu_cav=args.nu_cav_ghz, q_factor=args.q_factor,
                          purcell_max=1.0)
        half = 3.5 * cav.linewidth
        grid = synth.GridSpec(cav.nu_cav - half if args.start_ghz is None else args.start_ghz,
                              cav.nu_cav + half if args.stop_ghz is None else args.stop_ghz,
                              args.points)
        sc = synth.SynthScenario([], grid, cavity=cav, noise=_noise(args), seed=args.seed)
        sio.write_spectrum(args.out, synth.gen_reflection_scan(sc))
    elif kind == "decay":
        tr = synth.gen_decay(args.tau_ns, args.amplitude, args.background,
                             synth.GridSpec(0.0, args.bin_ns * args.bins, args.bins + 1),
                             seed=args.seed, noise=args.noise_time is not None)
        sio.write_transient(args.out, tr)
    elif kind == "g2":
        st = synth.gen_g2_stream(args.rate_cps, args.b1_cps, args.b2_cps, args.period_s,
                                 args.duration_s, seed=args.seed, g2_intrinsic=args.g2_intrinsic,
                                 poissonian=args.poissonian)
        base = args.out[:-4] if args.out.endswith(".csv") else args.out
        for tag, t in (("det1", st.t1), ("det2", st.t2)):
            sio.write_csv(f"{base}_{tag}.csv", ("time_s",), ((x,) for x in t))
    args._wrote = True
    _emit(args, {"kind": kind, "out": args.out, "seed": args.seed},
          [f"wrote {kind} simulation to {args.out}"])


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="starkplan", description=__doc__.splitlines()[0])
    p.add_argument("--verbose", "-v", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def cmd(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--json", action="store_true", help="JSON summary on stdout")
        sp.set_defaults(func=fn)
        return sp

    sp = cmd("fit-ple", cmd_fit_ple, "fit a Gaussian-Lorentzian peak to PLE scans")
    sp.add_argument("scans", nargs="+")
    sp.add_argument("--out")
    sp = cmd("fit-cavity", cmd_fit_cavity, "fit a cavity reflection spectrum")
    sp.add_argument("scan")
    sp.add_argument("--out")
    sp = cmd("fit-decay", cmd_fit_decay, "single-exponential lifetime fit")
    sp.add_argument("transients", nargs="+")
    sp.add_argument("--out")
    sp = cmd("fit-stark", cmd_fit_stark, "fit Stark laws to a peak series")
    sp.add_argument("series")
    sp.add_argument("--v-min", type=float, required=True)
    sp.add_argument("--v-threshold", type=float, required=True)
    sp.add_argument("--name", default="")
    sp.add_argument("--aic-threshold", type=float, default=fitting.AIC_THRESHOLD)
    sp.add_argument("--out", help="write the fitted emitter as emitters.json")
    sp = cmd("fit-holeburn", cmd_fit_holeburn, "hole-burning saturation fit")
    sp.add_argument("series")
    sp.add_argument("--out")

    sp = cmd("g2", cmd_g2, "coincidence areas and background-corrected g2")
    sp.add_argument("det1")
    sp.add_argument("det2")
    sp.add_argument("--period-s", type=float, required=True)
    sp.add_argument("--window-s", type=float, required=True)
    sp.add_argument("--duration-s", type=float, required=True)
    sp.add_argument("--b1-cps", type=float, default=0.0)
    sp.add_argument("--b2-cps", type=float, default=0.0)
    sp.add_argument("--peaks", type=int, default=5)
    sp.add_argument("--out")
    sp = cmd("hom", cmd_hom, "gated HOM visibility")
    sp.add_argument("--tau-prime-ns", type=float, required=True)
    sp.add_argument("--gate-ns", type=float, required=True)
    sp.add_argument("--gamma1-ghz", type=float, required=True, help="SD FWHM of emitter 1")
    sp.add_argument("--gamma2-ghz", type=float, required=True, help="SD FWHM of emitter 2")
    sp.add_argument("--detuning-ghz", type=float, default=0.0)
    sp.add_argument("--out")
    sp = cmd("pexc-map", cmd_pexc_map, "joint-excitation probability grid")
    sp.add_argument("--gamma-fixed", type=float, required=True, help="fixed FWHM, GHz")
    sp.add_argument("--out", required=True)
    sp.add_argument("--ratio-points", type=int, default=100)
    sp.add_argument("--delta-points", type=int, default=121)
    sp.add_argument("--delta-max", type=float, default=3.0)
    sp.add_argument("--floor", type=float, default=1e-6)

    sp = cmd("plan", cmd_plan, "pair emitters and assign biases")
    sp.add_argument("emitters")
    sp.add_argument("--out")
    sp.add_argument("--min-neutral-fraction", type=float, default=interference.QUENCH_LIMIT)
    sp.add_argument("--max-reverse-bias-v", type=float)
    sp.add_argument("--objective", choices=("log", "linear"), default="log")
    sp = cmd("fraction", cmd_fraction, "tuneable fraction of an ensemble spectrum")
    sp.add_argument("ensemble")
    sp.add_argument("--window-ghz", type=float, required=True)
    sp.add_argument("--background", type=float, default=0.0)
    sp.add_argument("--out")
    sp = cmd("thermal", cmd_thermal, "Joule-heating audit")
    sp.add_argument("--verify-paper", action="store_true",
                    help="check every step against the published values (5 %%)")
    sp.add_argument("--pressure-pa", type=float, default=1800.0)
    sp.add_argument("--temperature-k", type=float, default=2.5)
    sp.add_argument("--power-nw", type=float, default=4.0)
    sp.add_argument("--out")

    sp = cmd("simulate", cmd_simulate, "write synthetic data")
    sp.add_argument("kind", choices=("ple", "reflection", "decay", "g2"))
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--noise-time", type=float, help="Poisson integration time (omit: noiseless)")
    sp.add_argument("--emitters", help="emitters.json (default: catalogue)")
    sp.add_argument("--emitter", action="append", help="catalogue emitter name (repeatable)")
    sp.add_argument("--bias-v", type=float, default=0.0)
    sp.add_argument("--start-ghz", type=float, help="scan start (default depends on kind)")
    sp.add_argument("--stop-ghz", type=float)
    sp.add_argument("--points", type=int, default=601)
    sp.add_argument("--scale", type=float, default=1000.0)
    sp.add_argument("--background", type=float, default=0.0)
    sp.add_argument("--nu-cav-ghz", type=float, default=226158.0)
    sp.add_argument("--q-factor", type=float, default=5500.0)
    sp.add_argument("--tau-ns", type=float, default=400.0)
    sp.add_argument("--amplitude", type=float, default=100.0)
    sp.add_argument("--bin-ns", type=float, default=4.0)
    sp.add_argument("--bins", type=int, default=1000)
    sp.add_argument("--rate-cps", type=float, default=20000.0)
    sp.add_argument("--b1-cps", type=float, default=0.0)
    sp.add_argument("--b2-cps", type=float, default=0.0)
    sp.add_argument("--period-s", type=float, default=4.5e-6)
    sp.add_argument("--duration-s", type=float, default=10.0)
    sp.add_argument("--g2-intrinsic", type=float, default=0.0)
    sp.add_argument("--poissonian", action="store_true")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        status = args.func(args)
    except FitError as e:
        print(f"starkplan: fit did not converge: {e}", file=sys.stderr)
        return EXIT_FIT
    except (DomainError, ValueError) as e:
        print(f"starkplan: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK if status is None else status


if __name__ == "__main__":
    sys.exit(main())
