"""Command-line front end: ``vectorquad {simulate,envelope,roa,allocate}``.

Exit codes: 0 success, 2 configuration error, 3 divergence.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import allocation, kernels
from .config import ConfigError, Scenario, build_scenario, load_config, parse_config
from .reports import write_json, write_roa_csv, write_telemetry_csv
from .sim import SimulationError, roa_monte_carlo, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

log = logging.getLogger("vectorquad")


def _scenario(args, need_config: bool) -> Scenario:
    if args.config is None:
        if need_config:
            raise ConfigError("--config is required for this command")
        data = parse_config("{}")
    else:
        data = load_config(args.config)
    try:
        return build_scenario(data, seed=args.seed)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def _out_dir(args, sc: Scenario) -> Path:
    return Path(args.out if args.out is not None else sc.output["dir"])


def cmd_simulate(args) -> int:
    sc = _scenario(args, need_config=True)
    out = _out_dir(args, sc)
    try:
        tel = run_scenario(sc.sim, sc.params, sc.gains, sc.trajectory, sc.initial)
    except SimulationError as exc:
        log.error("%s", exc)
        return EXIT_DIVERGED
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_telemetry_csv(out / sc.output["telemetry"], tel)
    summary = tel.summary()
    write_json(out / sc.output["summary"], summary)
    print(f"{len(tel)} steps, rms_ep={summary['rms_ep']:.3e} m, max_psi={summary['max_psi']:.3e}, "
          f"saturation={summary['saturation_fraction']:.3f}, diverged={summary['diverged']}")
    return EXIT_DIVERGED if tel.diverged else EXIT_OK


def cmd_envelope(args) -> int:
    sc = _scenario(args, need_config=False)
    n = args.n_dirs if args.n_dirs is not None else sc.n_dirs
    if n < 1:
        raise ConfigError("--n-dirs must be at least 1")
    try:
        fe = allocation.force_envelope(sc.params, n)
        te = allocation.torque_envelope(sc.params, n)
    except ValueError as exc:
        raise ConfigError(f"vehicle: {exc}") from None
    out = _out_dir(args, sc)
    write_json(out / sc.output["envelope"], allocation.envelope_document(fe, te, sc.params))
    f, t = fe.summary(), te.summary()
    print(f"force  min={f['min']:.6g} N   max={f['max']:.6g} N   ratio={f['ratio']:.6g}")
    print(f"torque min={t['min']:.6g} Nm  max={t['max']:.6g} Nm  ratio={t['ratio']:.6g}")
    return EXIT_OK


def cmd_roa(args) -> int:
    sc = _scenario(args, need_config=False)
    opts = dict(sc.roa)
    if args.samples is not None:
        opts["samples"] = args.samples
    if opts.get("samples", 200) < 1:
        raise ConfigError("--samples must be at least 1")
    rows = roa_monte_carlo(sc.params, sc.gains, seed=sc.seed, **opts)
    out = _out_dir(args, sc)
    write_roa_csv(out / sc.output["roa"], rows)
    conv = sum(r["converged"] for r in rows)
    inside = sum(r["inside_roa"] for r in rows)
    print(f"{conv}/{len(rows)} converged ({inside} inside the guaranteed region)")
    return EXIT_OK


def cmd_allocate(args) -> int:
    sc = _scenario(args, need_config=False)
    p = sc.params
    f = np.asarray(args.force, float)
    tau = np.asarray(args.torque, float)
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(tau))):
        raise ConfigError("--force/--torque must be finite")
    w = np.concatenate([f, tau])
    try:
        T_nom = allocation.allocate_wrench(w, p)
        T, fallback = allocation.allocate_with_gimbal_fallback(w, p, sc.sim.gimbal_eps)
    except ValueError as exc:
        raise ConfigError(f"vehicle: {exc}") from None
    oracle_diff = float(np.linalg.norm(T_nom - allocation.minimum_norm_oracle(w, p)))
    T_sat, rep = allocation.saturate_thrust_set(T, p)
    cmds = allocation.extract_arm_commands(T_sat, p)
    f_out, tau_out = kernels.wrench_of_thrusts(T_sat, p.arm_positions)
    print(f"{'arm':>3} {'t_x':>12} {'t_y':>12} {'t_z':>12} {'alpha':>10} {'beta':>10} {'Omega':>12}")
    for i in range(4):
        print(f"{i + 1:>3} {T_sat[i, 0]:12.6f} {T_sat[i, 1]:12.6f} {T_sat[i, 2]:12.6f} "
              f"{cmds.alpha[i]:10.6f} {cmds.beta[i]:10.6f} {cmds.omega[i]:12.4f}")
    print(f"energy       {allocation.thrust_energy(T_sat):.9g}")
    print(f"oracle_diff  {oracle_diff:.3e}")
    print(f"saturated    {'yes' if rep.saturated else 'no'} (scale {rep.scale:.6g})")
    print(f"fallback     {'yes' if fallback else 'no'}")
    print(f"realized     f=({f_out[0]:.6g}, {f_out[1]:.6g}, {f_out[2]:.6g}) "
          f"tau=({tau_out[0]:.6g}, {tau_out[1]:.6g}, {tau_out[2]:.6g})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vectorquad", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, samples=False, n_dirs=False):
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, metavar="N")
        if samples:
            p.add_argument("--samples", type=int, metavar="N")
        if n_dirs:
            p.add_argument("--n-dirs", type=int, metavar="N")
        return p

    common(sub.add_parser("simulate", help="run a scenario, write telemetry CSV and summary JSON"))
    common(sub.add_parser("envelope", help="force and torque envelopes as JSON"), n_dirs=True)
    common(sub.add_parser("roa", help="Monte-Carlo attitude recovery table"), samples=True)
    p = common(sub.add_parser("allocate", help="print the allocation of one body wrench"))
    p.add_argument("--force", type=float, nargs=3, default=[0.0, 0.0, 0.0], metavar=("FX", "FY", "FZ"))
    p.add_argument("--torque", type=float, nargs=3, default=[0.0, 0.0, 0.0], metavar=("TX", "TY", "TZ"))
    return parser


COMMANDS = {"simulate": cmd_simulate, "envelope": cmd_envelope, "roa": cmd_roa,
            "allocate": cmd_allocate}


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
