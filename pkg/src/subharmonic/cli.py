"""Command-line front end.

Subcommands mirror the library surface: ``bloch`` and ``evolve`` wrap the
transforms and semigroup flow, the ``lle-*`` family drives the stationary
wave workbench, and ``converge`` / ``uniformity`` / ``average`` /
``domination`` run the window-against-line experiments, emitting CSV
reports.  ``converge`` exits 0 exactly when the report's structural
invariants hold.  The environment variable BLOCH_THREADS caps the width of
the parallel frequency/window sweeps.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bloch, experiments, grids, lle, semigroup


def _parse_floats(text: str):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_ints(text: str):
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _load_function(path):
    return grids.load_function(path)


def _load_operator(path):
    with open(path) as fh:
        return semigroup.operator_from_json(json.load(fh))


def _write_json(doc, path):
    with open(path, "w") as fh:
        json.dump(doc, fh)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_bloch(args):
    f = _load_function(args.input)
    if isinstance(f, grids.PeriodicFunction):
        fam = bloch.bloch_torus(f)
    else:
        if args.T is None:
            raise SystemExit("line data needs --T")
        fam = bloch.bloch_line(f, args.n_xi, args.rule, args.T, args.L)
    _write_json(bloch.family_to_json(fam), args.out)
    print(f"wrote {args.out}: kind={fam.kind} n_xi={len(fam.xi_values)} M={fam.M}")
    return 0


def _cmd_evolve(args):
    A = _load_operator(args.operator)
    f = _load_function(args.input)
    times = _parse_floats(args.times)
    for t in times:
        if isinstance(f, grids.PeriodicFunction):
            out = semigroup.evolve_periodic(A, f, t, L=args.L)
        else:
            out = semigroup.evolve_line(A, f, t, L=args.L, N_xi=args.n_xi,
                                        rule=args.rule, T=args.T)
        path = f"{args.out_prefix}_t{t}.json"
        grids.save_function(out, path)
        print(f"wrote {path}")
    return 0


def _cmd_lle_constant(args):
    params = lle.LLEParams(alpha=args.alpha, beta=args.beta, F=args.F, T=args.T)
    waves = lle.solve_constant_state(params, M=args.M)
    doc = [lle.wave_to_json(w) for w in waves]
    _write_json(doc, args.out)
    for w in waves:
        rho = float(np.sum(np.abs(w.phi.values[:, 0]) ** 2))
        print(f"rho = {rho:.12g}  residual = {w.residual:.3e}")
    print(f"wrote {args.out} ({len(waves)} state(s))")
    return 0


def _cmd_lle_profile(args):
    params = lle.LLEParams(alpha=args.alpha, beta=args.beta, F=args.F, T=args.T)
    if args.guess:
        with open(args.guess) as fh:
            seed = lle.wave_from_json(json.load(fh)).phi
    else:
        base = lle.solve_constant_state(params, M=args.M)[0]
        x = base.phi.grid.points()
        vals = base.phi.values.real + args.seed_amp * np.cos(
            2 * np.pi * args.seed_mode * x / args.T)
        seed = grids.PeriodicFunction(base.phi.grid, vals.astype(complex))
    wave = lle.solve_profile(params, seed, M=args.M)
    _write_json(lle.wave_to_json(wave), args.out)
    print(f"converged = {wave.converged}  residual = {wave.residual:.3e}  "
          f"iterations = {wave.iterations}")
    print(f"wrote {args.out}")
    return 0 if wave.converged else 1


def _cmd_lle_spectrum(args):
    with open(args.wave) as fh:
        wave = lle.wave_from_json(json.load(fh))
    eigs = lle.bloch_spectrum(wave, args.xi, L=args.L)
    doc = [[float(z.real), float(z.imag)] for z in eigs]
    if args.out:
        _write_json(doc, args.out)
        print(f"wrote {args.out}")
    for z in eigs[:args.show]:
        print(f"{z.real:+.12e} {z.imag:+.12e}j")
    return 0


def _cmd_lle_stability(args):
    with open(args.wave) as fh:
        wave = lle.wave_from_json(json.load(fh))
    verdict = lle.stability_check(wave, xi_samples=args.xi_samples, L=args.L)
    _write_json(lle.verdict_to_json(verdict), args.out)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("xi,max_re_lambda\n")
            for xi, mr in zip(verdict.xi_values, verdict.max_real_parts):
                fh.write(f"{xi!r},{mr!r}\n")
        print(f"wrote {args.csv}")
    print(f"verdict = {verdict.verdict}  margin = {verdict.cond1_spectrum_margin:.3e}  "
          f"theta = {verdict.cond2_theta:.4g}  |lambda_0| = {verdict.cond3_lambda_abs:.3e}")
    print(f"wrote {args.out}")
    return 0


def _emit_plot_data(report, prefix):
    for j, t in enumerate(report.times):
        path = f"{prefix}_E_t{t}.dat"
        with open(path, "w") as fh:
            for i, n in enumerate(report.schedule):
                fh.write(f"{n} {report.errors[i, j]!r}\n")
        print(f"wrote {path}")
    with open(f"{prefix}_baseline.dat", "w") as fh:
        for n, d in zip(report.schedule, report.baseline):
            fh.write(f"{n} {d!r}\n")
    print(f"wrote {prefix}_baseline.dat")


def _cmd_converge(args):
    A = _load_operator(args.operator)
    g = _load_function(args.datum)
    report = experiments.run_convergence(
        A, g, _parse_ints(args.schedule), _parse_floats(args.times),
        T=args.T, L=args.L, N_xi=args.n_xi, rule=args.rule)
    experiments.report_to_csv(report, args.out)
    print(f"wrote {args.out}")
    if args.plot_data:
        _emit_plot_data(report, args.plot_data)
    checks = report.check_invariants()
    for name, ok in checks.items():
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    return 0 if all(checks.values()) else 1


def _cmd_uniformity(args):
    A = _load_operator(args.operator)
    g = _load_function(args.datum)
    t_grid = list(np.linspace(0.0, args.t_max, args.t_points))
    uni = experiments.run_uniformity(A, g, _parse_ints(args.schedule), t_grid,
                                     T=args.T, L=args.L, N_xi=args.n_xi,
                                     rule=args.rule)
    experiments.report_to_csv(uni.report, args.out)
    print(f"wrote {args.out}")
    for n, sup, delta, leg in zip(uni.schedule, uni.sup_errors, uni.baseline,
                                  uni.max_leg1):
        print(f"n={n}: sup_t E = {sup:.6e}  delta = {delta:.6e}  max leg1 = {leg:.6e}")
    ok = uni.bound_holds()
    print(f"semigroup bound: {'pass' if ok else 'FAIL'}")
    return 0 if ok else 1


def _cmd_average(args):
    A = _load_operator(args.operator)
    g = _load_function(args.datum)
    if args.sequence:
        seq = [grids.load_function(p) for p in args.sequence]
    else:
        seq = experiments.build_weak_null_sequence(
            g, args.T, args.count, freq_step=args.freq_step, amp=args.amp)
    report = experiments.run_averaged_convergence(
        A, seq, g, _parse_ints(args.m_schedule), _parse_floats(args.times),
        T=args.T, L=args.L, N_xi=args.n_xi)
    experiments.averaging_to_csv(report, args.out)
    print(f"wrote {args.out}")
    print(f"strong errors: {report.strong_errors}")
    print(f"fitted decay exponent: {report.fitted_decay_exponent():.3f}")
    return 0


def _cmd_domination(args):
    family = [grids.load_function(p) for p in args.inputs]
    rep = experiments.check_domination(family)
    if args.out:
        grids.save_function(rep.envelope, args.out)
        print(f"wrote {args.out}")
    print(f"envelope L2 norm = {rep.norm:.6e}  "
          f"(first half: {rep.half_family_norm:.6e})")
    print("domination " + ("plausible" if rep.plausible else "implausible"))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_resolution(p, n_xi=256):
    p.add_argument("--T", type=float, default=None, help="base period")
    p.add_argument("--L", type=int, default=None, help="mode truncation")
    p.add_argument("--n-xi", type=int, default=n_xi, dest="n_xi")
    p.add_argument("--rule", default="midpoint",
                   choices=["midpoint", "trapezoid", "gauss"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subharmonic",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bloch", help="Bloch-transform a function JSON")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    _add_resolution(p, n_xi=64)
    p.set_defaults(fn=_cmd_bloch)

    p = sub.add_parser("evolve", help="evolve a function under an operator")
    p.add_argument("--operator", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--times", required=True, help="comma-separated t values")
    p.add_argument("--out-prefix", required=True)
    _add_resolution(p)
    p.set_defaults(fn=_cmd_evolve)

    p = sub.add_parser("lle-constant", help="constant stationary states")
    for name in ("alpha", "beta", "F", "T"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.add_argument("--M", type=int, default=64)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_lle_constant)

    p = sub.add_parser("lle-profile", help="Newton solve for a patterned state")
    for name in ("alpha", "beta", "F", "T"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.add_argument("--M", type=int, default=64)
    p.add_argument("--seed-amp", type=float, default=0.3)
    p.add_argument("--seed-mode", type=int, default=1)
    p.add_argument("--guess", default=None, help="wave JSON to start from")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_lle_profile)

    p = sub.add_parser("lle-spectrum", help="Bloch spectrum of a wave")
    p.add_argument("--wave", required=True)
    p.add_argument("--xi", type=float, required=True)
    p.add_argument("--L", type=int, default=32)
    p.add_argument("--show", type=int, default=10)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_lle_spectrum)

    p = sub.add_parser("lle-stability", help="diffusive spectral stability check")
    p.add_argument("--wave", required=True)
    p.add_argument("--xi-samples", type=int, default=129, dest="xi_samples")
    p.add_argument("--L", type=int, default=32)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", default=None, help="per-xi max Re lambda table")
    p.set_defaults(fn=_cmd_lle_stability)

    p = sub.add_parser("converge", help="window-against-line convergence run")
    p.add_argument("--operator", required=True)
    p.add_argument("--datum", required=True)
    p.add_argument("--schedule", required=True, help="comma-separated n values")
    p.add_argument("--times", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plot-data", default=None, help="prefix for (x, y) series files")
    _add_resolution(p)
    p.set_defaults(fn=_cmd_converge)

    p = sub.add_parser("uniformity", help="sup-in-time convergence run")
    p.add_argument("--operator", required=True)
    p.add_argument("--datum", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--t-max", type=float, default=4.0)
    p.add_argument("--t-points", type=int, default=17)
    p.add_argument("--out", required=True)
    _add_resolution(p)
    p.set_defaults(fn=_cmd_uniformity)

    p = sub.add_parser("average", help="Cesaro-averaged convergence run")
    p.add_argument("--operator", required=True)
    p.add_argument("--datum", required=True)
    p.add_argument("--m-schedule", required=True)
    p.add_argument("--times", default="1.0")
    p.add_argument("--count", type=int, default=64)
    p.add_argument("--freq-step", type=float, default=8.0)
    p.add_argument("--amp", type=float, default=1.0)
    p.add_argument("--sequence", nargs="*", default=None,
                   help="explicit window-data JSON files (overrides --count)")
    p.add_argument("--out", required=True)
    _add_resolution(p)
    p.set_defaults(fn=_cmd_average)

    p = sub.add_parser("domination", help="pointwise envelope diagnostic")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_domination)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
