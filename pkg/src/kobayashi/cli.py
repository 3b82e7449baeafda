"""Command-line entry point.

Exit codes: 0 when every verdict passes, 2 when some verdict fails, 1 on error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path

from . import bounds, fornaess_lee as fl
from .domains import get_domain, oscillation_checks, normal_ray
from .harness import ConfigError, ExperimentConfig, _json_default, run_experiment, write_outputs

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _load_config(path) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _parse_grid(text: str) -> dict:
    """``d0:factor:count`` for a geometric grid, otherwise comma-separated depths."""
    if ":" in text:
        d0, factor, count = text.split(":")
        return {"delta0": float(d0), "factor": float(factor), "count": int(count), "grid": None}
    return {"grid": [float(x) for x in text.split(",") if x.strip()]}


def _emit(obj, out_dir, name) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default)
    print(text)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text + "\n")


def _fl_schedule(args, cfg):
    a = fl._parse_base(str(cfg.get("a", args.a)))
    mode = cfg.get("mode", args.mode)
    if mode == "part1":
        param = float(cfg.get("eps", args.eps))
    else:
        param = float(cfg.get("alpha", args.alpha))
    N = int(cfg.get("N", args.N))
    return fl.schedule(a, mode, N, param, selected=cfg.get("S"))


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    if args.domain:
        cfg["domain"] = args.domain
    if args.grid:
        cfg.update(_parse_grid(args.grid))
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out_dir:
        cfg["out_dir"] = args.out_dir
    if args.no_plot:
        cfg["plot"] = False
    config = ExperimentConfig.from_dict(cfg)
    result = run_experiment(config)
    paths = write_outputs(result)
    for name, v in result.verdicts.items():
        print(f"{name}: {'pass' if v['pass'] else 'FAIL'}")
    for col, fit in result.fits.items():
        print(f"slope[{col}] = {fit.slope:.4f} +/- {fit.half_width:.4f}")
    print(f"wrote {paths['csv']}")
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_estimate(args) -> int:
    cfg = _load_config(args.config)
    domain = get_domain(args.domain or cfg.get("domain", "quadric"))
    P = domain.boundary_point
    delta = args.delta if args.delta is not None else float(cfg.get("delta", 1e-3))
    ray = normal_ray(domain, P, [delta])
    z, X = ray.points()[0], ray.normal
    out = {"domain": domain.name, "delta": delta}
    try:
        ctx = bounds.LowerBoundContext.build(domain, P, R_U=cfg.get("R_U"),
                                             seed=args.seed or 0)
        for stage in (1, 2):
            out[f"lower{stage}"] = bounds.normal_lower_bound(ctx, delta, X, stage).value
    except Exception as exc:
        out["lower_unavailable"] = f"{type(exc).__name__}: {exc}"
    out["upper_lin"] = bounds.linear_disc_upper(domain, z, X).value
    search = bounds.disc_search_upper(domain, z, X, seed=args.seed or 0)
    out["upper_search"] = search.value
    if domain.exact is not None:
        out["exact"] = float(domain.exact(z, X))
    lows = [out[k] for k in ("lower1", "lower2") if k in out]
    ok = all(lo <= search.value * (1 + 1e-9) for lo in lows)
    out["sandwich"] = "pass" if ok else "FAIL"
    _emit(out, args.out_dir, "estimate.json")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_certify(args) -> int:
    cfg = _load_config(args.config)
    sched = _fl_schedule(args, cfg)
    out = {"schedule": sched.to_json()}
    verdict = True
    if sched.mode == "part1":
        cert = fl.smoothness_certificate(sched, args.k)
        out["smoothness"] = {
            "k": cert.k, "m_k": cert.m_k, "converges": cert.converges,
            "log_ratios": cert.log_ratios[:4], "one_dim_exponent": cert.one_dim_exponent,
            "one_dim_converges": cert.one_dim_converges,
        }
        print(f"C^{args.k}: {'converges' if cert.converges else 'diverges'}")
        verdict &= cert.converges
    else:
        ok = fl.part2_certificate(sched, args.k)
        out["part2"] = {"k_max": args.k, "converges": ok}
        print(f"all k <= {args.k}: {'converges' if ok else 'diverges'}")
        verdict &= ok
    try:
        dom = fl.build_fl_domain(sched, sched.N, psh_points=0)
    except (fl.ScheduleError, fl.TailBoundError) as exc:
        # a divergent or unconstructible schedule is a failed certificate, not a crash
        out["construction"] = f"{type(exc).__name__}: {exc}"
        print(f"domain: not constructed ({exc})")
        if args.out_dir:
            _emit(out, args.out_dir, "certify.json")
        return EXIT_FAIL
    report = dom.psh_report(args.points, args.seed or 0)
    psh_ok = all(v["passed"] for v in report.values())
    out["psh"] = report
    out["active"] = list(dom.active)
    out["dropped"] = {str(k): v for k, v in dom.dropped.items()}
    out["tail_bound"] = dom.tail_bound()
    print(f"psh: {'pass' if psh_ok else 'FAIL'}")
    verdict &= psh_ok
    if args.out_dir:
        _emit(out, args.out_dir, "certify.json")
    return EXIT_OK if verdict else EXIT_FAIL


def cmd_fl_build(args) -> int:
    cfg = _load_config(args.config)
    sched = _fl_schedule(args, cfg)
    dom = fl.build_fl_domain(sched, sched.N, float(cfg.get("tau_tail", args.tau_tail)), psh_points=args.points)
    desc = dom.descriptor()
    desc["active"] = list(dom.active)
    desc["dropped"] = sorted(dom.dropped)
    desc["log_tail_bound"] = dom.log_tail_bound
    _emit(desc, args.out_dir, "fl.json")
    return EXIT_OK


def cmd_oscillation(args) -> int:
    rep = oscillation_checks(args.m, args.l)
    lap_ok = rep.min_laplacian >= -1e-6 * rep.scale
    negative = rep.min_angular_factor < 0
    out = asdict(rep)
    out.update(subharmonic=lap_ok, angular_factor_negative=negative,
               argmin_over_pi=rep.argmin_theta / math.pi)
    print(f"subharmonic: {'pass' if lap_ok else 'FAIL'}")
    print(f"angular factor min {rep.min_angular_factor:.6g} at theta = {rep.argmin_theta:.6f}")
    if args.out_dir:
        _emit(out, args.out_dir, "remark5.json")
    return EXIT_OK if lap_ok and negative else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kobayashi", description="Bounds for the Kobayashi-Royden metric near pseudoconvex boundaries.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out-dir", dest="out_dir", default=None)

    def fl_args(sp):
        sp.add_argument("--a", default="2^30", help="schedule base, e.g. 2^30")
        sp.add_argument("--mode", choices=("part1", "part2"), default="part1")
        sp.add_argument("--eps", type=float, default=0.02)
        sp.add_argument("--alpha", type=float, default=1.0)
        sp.add_argument("--N", type=int, default=3)
        sp.add_argument("--points", type=int, default=1000, help="Levi sample count")

    sp = sub.add_parser("sweep", help="bounds along a normal depth grid")
    common(sp)
    sp.add_argument("--domain")
    sp.add_argument("--grid", help="d0:factor:count or comma-separated depths")
    sp.add_argument("--no-plot", action="store_true")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("estimate", help="bounds for a single depth")
    common(sp)
    sp.add_argument("--domain")
    sp.add_argument("--delta", type=float)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("certify", help="smoothness and plurisubharmonicity certificates")
    common(sp)
    fl_args(sp)
    sp.add_argument("--k", type=int, default=1)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("fl-build", help="emit the counterexample descriptor")
    common(sp)
    fl_args(sp)
    sp.add_argument("--tau-tail", dest="tau_tail", type=float, default=1e-12)
    sp.set_defaults(func=cmd_fl_build, points=256)

    sp = sub.add_parser("remark5", help="subharmonic polynomial with a negative angular factor")
    common(sp)
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--l", type=int, default=1)
    sp.set_defaults(func=cmd_oscillation)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
