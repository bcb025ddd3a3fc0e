"""Command-line entry point: ``vortgrowth <subcommand> [flags]``.

Exit codes: 0 success, 2 invariant violation, 3 numerical failure,
4 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .errors import ConfigError, InvariantViolation, VortError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _common(p):
    p.add_argument("--config", help="flat key = value run configuration")
    p.add_argument("--out", help="output directory")
    p.add_argument("--resolution", type=int, help="grid points per axis")
    p.add_argument("--horizon", type=float, help="final time")
    p.add_argument("--eta", type=float, help="probe half-width")
    p.add_argument("--quick", action="store_true", help="half resolution and half horizon")


def _config(args, **force) -> RunConfig:
    over = {"out": args.out, "resolution": args.resolution, "horizon": args.horizon,
            "eta": args.eta}
    over.update(force)
    cfg = load_config(args.config, **over)
    if args.quick:
        cfg = cfg.quick()
    return cfg


def _emit(obj, out_dir=None, name="result.json"):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_jsonable)
    print(text)
    if out_dir:
        p = Path(out_dir)
        p.mkdir(parents=True, exist_ok=True)
        (p / name).write_text(text + "\n")


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    return str(v)


def _run(cfg: RunConfig) -> int:
    from .runner import run_simulation
    rep = run_simulation(cfg)
    _emit(rep.as_dict())
    return rep.exit_code


def cmd_simulate(args) -> int:
    return _run(_config(args))


def cmd_track_torus(args) -> int:
    cfg = _config(args)
    if cfg.scenario not in ("torus_cosine", "custom_snapshot"):
        cfg = replace(cfg, scenario="torus_cosine")
    return _run(replace(cfg, tracker=True))


def cmd_track_plane(args) -> int:
    cfg = _config(args)
    if cfg.scenario not in ("plane_lamb", "custom_snapshot"):
        cfg = replace(cfg, scenario="plane_lamb")
    return _run(replace(cfg, tracker=True))


def cmd_oracle(args) -> int:
    defaults = {"scenario": "appendix_oracle"}
    if args.config is None:
        defaults.update(resolution=args.resolution or 512, horizon=args.horizon or 10.0,
                        dt=1e-3)
    cfg = _config(args, **defaults)
    return _run(cfg)


def cmd_bessel(args) -> int:
    from .bessel import bessel_zero_cl, j1
    c, j0c = bessel_zero_cl()
    _emit({"c_L": c, "J0_cL": j0c, "J1_cL": float(j1(c))}, args.out, "bessel.json")
    return 0


def cmd_lamb_verify(args) -> int:
    from .lamb import flux_square, lamb_constants, lamb_saddle_hessian, lamb_stream_comoving
    k = lamb_constants()
    h = 1e-4
    worst = 0.0
    for side in (-1, 1):
        x0 = (float(side), 0.0)
        H = np.zeros((2, 2))
        f = lambda a, b: float(lamb_stream_comoving(a, b))  # noqa: E731
        H[0, 0] = (f(x0[0] + h, 0) - 2 * f(*x0) + f(x0[0] - h, 0)) / h ** 2
        H[1, 1] = (f(x0[0], h) - 2 * f(*x0) + f(x0[0], -h)) / h ** 2
        H[0, 1] = H[1, 0] = (f(x0[0] + h, h) - f(x0[0] + h, -h) - f(x0[0] - h, h)
                             + f(x0[0] - h, -h)) / (4 * h * h)
        worst = max(worst, float(np.max(np.abs(H - lamb_saddle_hessian(side)))))
    eta = args.eta or 0.05
    fs = flux_square(eta)
    res = {"c_L": k.c_L, "J0_cL": k.j0_cL, "m_L": k.m_L, "m_L_coarse": k.m_L_coarse,
           "hessian_fd_max_error": worst, "flux_square": fs.__dict__}
    _emit(res, args.out, "lamb.json")
    if worst > 1e-6:
        raise InvariantViolation(f"finite-difference Hessian differs by {worst:.3e}")
    return 0


def cmd_probe_report(args) -> int:
    from .core.grid import DomainSpec
    from .flux import build_probe, check_condition
    from .io import write_csv
    from .lamb import flux_square, lamb_saddle_hessian, lamb_velocity_comoving
    from .steady import (SADDLE_CSV_COLUMNS, CosineState, cosine_field, eval_cosine,
                         find_saddles)
    cfg = _config(args)
    st = CosineState(cfg.alpha, cfg.beta)
    d = DomainSpec.torus(min(cfg.resolution, 256))
    phi = cosine_field(st, d).with_values(-cosine_field(st, d).values)
    saddles = find_saddles(phi)
    probes = []
    for s in saddles:
        p = build_probe(s.hessian, s.x0, cfg.eta)
        fc = check_condition(lambda a, b: eval_cosine(st, a, b)[2], p)
        probes.append({"x0": list(s.x0), "q1": p.q1, "q2": p.q2, "lam1": p.lam1,
                       "lam2": p.lam2, "theta": p.theta, "c0": p.c0, "flux": fc.__dict__,
                       "condition_ok": fc.ok})
    lp = build_probe(-lamb_saddle_hessian(-1), (-1.0, 0.0), cfg.eta)
    lc = check_condition(lambda a, b: lamb_velocity_comoving(a, b), lp)
    res = {"cosine": probes, "lamb_probe": {"c0": lp.c0, "flux": lc.__dict__, "ok": lc.ok},
           "lamb_square": flux_square(min(cfg.eta, 0.49)).__dict__}
    if cfg.out:
        write_csv(Path(cfg.out) / "saddles.csv", SADDLE_CSV_COLUMNS, [s.csv_row() for s in saddles])
    _emit(res, cfg.out, "probes.json")
    return 0


def cmd_plot(args) -> int:
    from .plotting import emit_plot
    cols = [c for c in args.columns.split(",") if c]
    emit_plot(args.csv, cols, args.output, x=args.x, log_y=args.log, title=args.title or "")
    return 0


def _build_seed(cfg: RunConfig):
    from .core.grid import DomainSpec
    from .flux import build_probe
    from .seeds import PlaneSeedSpec, TorusSeedSpec, build_plane_seed, build_torus_seed
    if cfg.seed == "plane" or (cfg.seed == "none" and cfg.scenario == "plane_lamb"):
        d = DomainSpec.free(cfg.resolution, cfg.half_width)
        return build_plane_seed(PlaneSeedSpec(eps_target=cfg.seed_eps), d)
    d = DomainSpec.torus(cfg.resolution)
    probe = build_probe(np.diag([-cfg.alpha, cfg.beta]), (math.pi, 0.0), cfg.eta)
    spec = TorusSeedSpec(cfg.alpha, cfg.beta, cfg.seed_eps, radius=cfg.seed_radius or None)
    return build_torus_seed(spec, probe, d)


def cmd_seed_build(args) -> int:
    from .io import save_snapshot
    from .seeds import admit_initial_data
    cfg = _config(args)
    seed = _build_seed(cfg)
    out = Path(cfg.out)
    save_snapshot(out / "seed.vort", seed.field)
    verdict = admit_initial_data(seed.field, seed)
    _emit(verdict.as_dict(), out, "seed_verdict.json")
    if not verdict.passed:
        raise InvariantViolation(f"seed fails {verdict.failures}")
    return 0


def cmd_admit(args) -> int:
    from .io import load_snapshot
    from .seeds import admit_initial_data
    cfg = _config(args)
    seed = _build_seed(cfg)
    cand = load_snapshot(args.candidate)
    verdict = admit_initial_data(cand, seed, delta=args.delta)
    _emit(verdict.as_dict(), cfg.out, "admit.json")
    return 0 if verdict.passed else InvariantViolation.exit_code


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vortgrowth", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    table = {
        "simulate": (cmd_simulate, "run a configured simulation"),
        "lamb-verify": (cmd_lamb_verify, "check the dipole constants and saddle Hessians"),
        "bessel-cl": (cmd_bessel, "first positive zero of J1"),
        "probe-report": (cmd_probe_report, "saddle probes of the cosine state and the dipole"),
        "track-torus": (cmd_track_torus, "torus run with the phase tracker"),
        "track-plane": (cmd_track_plane, "plane run with the implicit tracker"),
        "oracle-appendix-a": (cmd_oracle, "hyperbolic transport oracle"),
        "seed-build": (cmd_seed_build, "build and admit a perturbed seed"),
        "admit": (cmd_admit, "check a candidate snapshot against a seed"),
    }
    for name, (fn, hlp) in table.items():
        sp = sub.add_parser(name, help=hlp)
        _common(sp)
        sp.set_defaults(func=fn)
        if name == "admit":
            sp.add_argument("--candidate", required=True, help="VORT snapshot to check")
            sp.add_argument("--delta", type=float, default=0.1)
    sp = sub.add_parser("plot", help="SVG line chart of CSV columns")
    sp.add_argument("--csv", required=True)
    sp.add_argument("--columns", required=True, help="comma-separated column names")
    sp.add_argument("--output", required=True)
    sp.add_argument("--x", default="t")
    sp.add_argument("--log", action="store_true", help="log10 y axis")
    sp.add_argument("--title")
    sp.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return int(args.func(args))
    except VortError as e:
        print(json.dumps({"status": "failed", "error_type": type(e).__name__,
                          "error": str(e), "exit_code": e.exit_code}), file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
