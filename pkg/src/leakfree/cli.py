"""Command-line front end: ``leakfree {synth,simulate,estimate,verify}``.

Frequencies are GHz, times ns and angles radians; the unit is part of each
flag name, and short aliases (``--g``, ``--delta``, ``--theta``, ...) are
accepted. ``--config FILE`` loads a JSON object whose keys are the long
flag names with dashes replaced by underscores; flags given on the command
line override it. Exit codes: 0 success, 1 property failure, 2 usage,
configuration or solver error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from leakfree import __version__
from leakfree.errors import LeakfreeError
from leakfree.estimate import SeriesConfig, repeat_series
from leakfree.noise import RNG_ALGORITHM, NoiseKind, NoiseRealization, NoiseSpec
from leakfree.sim import ComparisonConfig, thread_count, compare_leakage, evolve, initial_state_plus
from leakfree.synth import (
    arbitrary_rotation_circuit,
    bare_x_circuit,
    default_zxz_angles,
    ideal_x_circuit,
    ideal_z_circuit,
    zxz_composite_circuit,
)
from leakfree.verify import report, run_suites

EXIT_OK, EXIT_PROPERTY, EXIT_USAGE = 0, 1, 2

_NOISE_KINDS = {
    "constant": NoiseKind.CONSTANT,
    "quasistatic": NoiseKind.QUASISTATIC_UNIFORM,
    "piecewise": NoiseKind.PIECEWISE_UNIFORM,
}

DEFAULTS = {
    "synth": {
        "g_ghz": 3.0,
        "delta_eps_d_ghz": 0.35,
        "theta_rad": math.pi / 2,
        "eps_q_ghz": 1.0,
        "phi_rad": math.pi,
        "zeta": 1.0,
        "z_mode": "angle",
        "zxz_angles_rad": None,
    },
    "simulate": {
        "g_ghz": 3.0,
        "theta_rad": math.pi / 2,
        "eps_q_ghz": 1.0,
        "noise": "compare",
        "delta_eps_d_ghz": 0.35,
        "low_ghz": 0.2,
        "high_ghz": 0.5,
        "channels": 1000,
        "window_ns": 0.6,
        "dt_out_ns": 0.001,
        "resample_dt_ns": 0.001,
        "seed": 0,
        "zxz_angles_rad": None,
        "synthesis": "midpoint",
        "average": "rho",
        "include_bare": False,
        "modes": "quasistatic,piecewise",
        "circuit": "uix",
    },
    "estimate": {
        "shots": 100_000,
        "repetitions": 20,
        "bounds_low_ghz": 0.05,
        "bounds_high_ghz": 1.0,
        "protocol_theta_rad": 6.0,
        "g_ghz": 3.0,
        "noise": "constant",
        "delta_eps_d_ghz": 0.35,
        "low_ghz": 0.2,
        "high_ghz": 0.5,
        "resample_dt_ns": 0.001,
        "spacing_ns": 1.0,
        "self_consistent": True,
        "seed": 0,
    },
    "verify": {"tol": None, "zeta": 1.0, "seed": 0, "suites": None},
}


class ConfigError(Exception):
    pass


def _opt(p, *names, **kw):
    p.add_argument(*names, default=argparse.SUPPRESS, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leakfree", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"leakfree {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="JSON file with option values")
        p.add_argument("--out-dir", type=Path, default=Path("out"), help="output directory (default: out)")

    s = sub.add_parser("synth", help="synthesize a leakage-free gate schedule")
    s.add_argument("gate", choices=["x", "z", "zxz"])
    common(s)
    _opt(s, "--g-ghz", "--g", dest="g_ghz", type=float)
    _opt(s, "--delta-eps-d-ghz", "--delta", dest="delta_eps_d_ghz", type=float)
    _opt(s, "--theta-rad", "--theta", dest="theta_rad", type=float)
    _opt(s, "--eps-q-ghz", "--eps-q", dest="eps_q_ghz", type=float)
    _opt(s, "--phi-rad", "--phi", dest="phi_rad", type=float)
    _opt(s, "--zeta", dest="zeta", type=float)
    _opt(s, "--z-mode", dest="z_mode", choices=["angle", "duration"])
    _opt(s, "--zxz-angles-rad", dest="zxz_angles_rad", type=float, nargs=3, metavar=("PHI_A", "THETA_B", "PHI_C"))

    m = sub.add_parser("simulate", help="leakage trajectories under detuning noise")
    common(m)
    _opt(m, "--noise", dest="noise", choices=["compare", *_NOISE_KINDS], help="compare: U_ix vs baselines under both noise modes")
    _opt(m, "--circuit", dest="circuit", choices=["uix", "bare", "zxz"], help="circuit for single-kind runs")
    _opt(m, "--g-ghz", "--g", dest="g_ghz", type=float)
    _opt(m, "--theta-rad", "--theta", dest="theta_rad", type=float)
    _opt(m, "--eps-q-ghz", "--eps-q", dest="eps_q_ghz", type=float)
    _opt(m, "--delta-eps-d-ghz", "--delta", dest="delta_eps_d_ghz", type=float)
    _opt(m, "--low-ghz", dest="low_ghz", type=float)
    _opt(m, "--high-ghz", dest="high_ghz", type=float)
    _opt(m, "--channels", dest="channels", type=int)
    _opt(m, "--window-ns", dest="window_ns", type=float)
    _opt(m, "--dt-out-ns", dest="dt_out_ns", type=float)
    _opt(m, "--resample-dt-ns", dest="resample_dt_ns", type=float)
    _opt(m, "--seed", dest="seed", type=int)
    _opt(m, "--zxz-angles-rad", dest="zxz_angles_rad", type=float, nargs=3, metavar=("PHI_A", "THETA_B", "PHI_C"))
    _opt(m, "--synthesis", dest="synthesis", choices=["midpoint", "time_average", "true"])
    _opt(m, "--average", dest="average", choices=["rho", "metric"])
    _opt(m, "--include-bare", dest="include_bare", action="store_true")
    _opt(m, "--modes", dest="modes", help="comma list of quasistatic,piecewise")

    e = sub.add_parser("estimate", help="estimate delta_eps_d from simulated protocol runs")
    common(e)
    _opt(e, "--shots", dest="shots", type=int)
    _opt(e, "--repetitions", dest="repetitions", type=int)
    _opt(e, "--bounds-low-ghz", dest="bounds_low_ghz", type=float)
    _opt(e, "--bounds-high-ghz", dest="bounds_high_ghz", type=float)
    _opt(e, "--protocol-theta-rad", "--theta", dest="protocol_theta_rad", type=float)
    _opt(e, "--g-ghz", "--g", dest="g_ghz", type=float)
    _opt(e, "--noise", dest="noise", choices=list(_NOISE_KINDS))
    _opt(e, "--delta-eps-d-ghz", "--delta", dest="delta_eps_d_ghz", type=float, help="true coupling for constant noise")
    _opt(e, "--low-ghz", dest="low_ghz", type=float)
    _opt(e, "--high-ghz", dest="high_ghz", type=float)
    _opt(e, "--resample-dt-ns", dest="resample_dt_ns", type=float)
    _opt(e, "--spacing-ns", dest="spacing_ns", type=float)
    _opt(e, "--no-self-consistent", dest="self_consistent", action="store_false")
    _opt(e, "--seed", dest="seed", type=int)

    v = sub.add_parser("verify", help="run the property suites")
    common(v)
    _opt(v, "--tol", dest="tol", type=float, help="override every suite tolerance")
    _opt(v, "--zeta", dest="zeta", type=float, help="zeta handed to z synthesis")
    _opt(v, "--seed", dest="seed", type=int)
    _opt(v, "--suites", dest="suites", help="comma list of suite names")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS[args.command])
    if args.config is not None:
        try:
            doc = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(doc) - set(cfg))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(doc)
    for key, value in vars(args).items():
        if key in cfg:
            cfg[key] = value
    return cfg


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text)
    return path


def _manifest(command: str, cfg: dict, extra: dict | None = None) -> str:
    doc = {
        "command": command,
        "config": cfg,
        "seed": cfg.get("seed"),
        "rng_algorithm": RNG_ALGORITHM,
        "version": __version__,
    }
    doc.update(extra or {})
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def cmd_synth(args, cfg) -> int:
    d = cfg["delta_eps_d_ghz"]
    if args.gate == "x":
        circuit, res = ideal_x_circuit(cfg["g_ghz"], d, cfg["theta_rad"])
        report_lines = [
            f"beta1_ns      {res.beta1:.12g}",
            f"beta2_ns      {res.beta2:.12g}",
            f"theta_eff_rad {res.theta_eff:.12g}",
            f"residual      {res.residual:.3e}",
        ]
        extra = {"synthesis": res.to_json()}
    elif args.gate == "z":
        circuit = ideal_z_circuit(cfg["eps_q_ghz"], d, cfg["phi_rad"], zeta=cfg["zeta"], mode=cfg["z_mode"])
        U = circuit.unitary(d)
        off = float(np.max(np.abs(U - np.diag(np.diag(U)))))
        report_lines = [f"phi_rad       {cfg['phi_rad']:.12g}", f"off_diagonal  {off:.3e}"]
        extra = {"off_diagonal": off}
    else:
        angles = cfg["zxz_angles_rad"] or default_zxz_angles(cfg["theta_rad"])
        circuit = arbitrary_rotation_circuit(tuple(angles), cfg["g_ghz"], cfg["eps_q_ghz"], d)
        report_lines = [f"zxz_angles_rad {list(angles)}"]
        extra = {}
    report_lines.insert(0, f"steps         {len(circuit.steps)}")
    report_lines.append(f"duration_ns   {circuit.duration:.12g}")
    doc = {**circuit.to_json(), **extra}
    _write(args.out_dir, f"circuit_{args.gate}.json", json.dumps(doc, indent=2) + "\n")
    _write(args.out_dir, "manifest.json", _manifest(f"synth {args.gate}", cfg))
    print("\n".join(report_lines))
    return EXIT_OK


def _single_circuit(cfg, delta):
    if cfg["circuit"] == "uix":
        return ideal_x_circuit(cfg["g_ghz"], delta, cfg["theta_rad"])[0]
    if cfg["circuit"] == "bare":
        return bare_x_circuit(cfg["g_ghz"], cfg["theta_rad"], delta)
    angles = cfg["zxz_angles_rad"] or default_zxz_angles(cfg["theta_rad"])
    return zxz_composite_circuit(cfg["g_ghz"], cfg["eps_q_ghz"], tuple(angles), delta)


def cmd_simulate(args, cfg) -> int:
    threads = thread_count(None)
    if cfg["noise"] == "constant":
        d = cfg["delta_eps_d_ghz"]
        circuit = _single_circuit(cfg, d)
        end = max(cfg["window_ns"], circuit.duration)
        traj = evolve(initial_state_plus(), circuit, NoiseRealization(end, value=d), cfg["dt_out_ns"], end)
        curves = {f"constant_{cfg['circuit']}": traj}
    elif cfg["noise"] == "compare":
        modes = tuple(m.strip() for m in cfg["modes"].split(",") if m.strip())
        if not modes or set(modes) - {"quasistatic", "piecewise"}:
            raise ConfigError(f"bad modes {cfg['modes']!r}")
        config = ComparisonConfig(
            g=cfg["g_ghz"],
            theta=cfg["theta_rad"],
            eps_q=cfg["eps_q_ghz"],
            low=cfg["low_ghz"],
            high=cfg["high_ghz"],
            channels=cfg["channels"],
            window=cfg["window_ns"],
            dt_out=cfg["dt_out_ns"],
            resample_dt=cfg["resample_dt_ns"],
            seed=cfg["seed"],
            zxz_angles=tuple(cfg["zxz_angles_rad"]) if cfg["zxz_angles_rad"] else None,
            synthesis=cfg["synthesis"],
            average=cfg["average"],
            include_bare=cfg["include_bare"],
            modes=modes,
        )
        curves = compare_leakage(config, threads=threads)
    else:
        spec = NoiseSpec(_NOISE_KINDS[cfg["noise"]], cfg["low_ghz"], cfg["high_ghz"], cfg["resample_dt_ns"], cfg["seed"])
        from leakfree.sim import ensemble_leakage

        traj = ensemble_leakage(
            initial_state_plus(),
            lambda d: _single_circuit(cfg, d),
            spec,
            channels=cfg["channels"],
            dt_out=cfg["dt_out_ns"],
            t_end=cfg["window_ns"],
            synthesis=cfg["synthesis"] if cfg["noise"] == "piecewise" else "true",
            average=cfg["average"],
            threads=threads,
        )
        curves = {f"{cfg['noise']}_{cfg['circuit']}": traj}

    summary = {}
    for name, traj in curves.items():
        _write(args.out_dir, f"{name}.csv", traj.to_csv())
        summary[name] = {"end_abs_rho23": traj.end_leakage, "end_time_ns": float(traj.times[-1])}
        print(f"{name:24s} end |rho23| = {traj.end_leakage:.3e} at t = {traj.times[-1]:.3f} ns")
    _write(args.out_dir, "manifest.json", _manifest("simulate", cfg, {"curves": sorted(curves)}))
    _write(args.out_dir, "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_estimate(args, cfg) -> int:
    kind = _NOISE_KINDS[cfg["noise"]]
    low = cfg["delta_eps_d_ghz"] if kind is NoiseKind.CONSTANT else cfg["low_ghz"]
    high = cfg["delta_eps_d_ghz"] if kind is NoiseKind.CONSTANT else cfg["high_ghz"]
    config = SeriesConfig(
        shots=cfg["shots"],
        repetitions=cfg["repetitions"],
        bounds=(cfg["bounds_low_ghz"], cfg["bounds_high_ghz"]),
        protocol_theta=cfg["protocol_theta_rad"],
        g=cfg["g_ghz"],
        spacing=cfg["spacing_ns"],
        noise=NoiseSpec(kind, low, high, cfg["resample_dt_ns"], cfg["seed"]),
        self_consistent=cfg["self_consistent"],
        seed=cfg["seed"],
    )
    series = repeat_series(config, threads=thread_count(None))
    summary = series.summary()
    _write(args.out_dir, "estimates.csv", series.to_csv())
    _write(args.out_dir, "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _write(args.out_dir, "manifest.json", _manifest("estimate", cfg, {"series_config": config.to_json()}))
    print(f"repetitions          {config.repetitions}")
    print(f"mean delta_hat (GHz) {summary['mean_delta_hat_ghz']:.6f}")
    print(f"std  delta_hat (GHz) {summary['std_delta_hat_ghz']:.6f}")
    print(f"mean halfwidth (GHz) {summary['mean_halfwidth_ghz']:.6f}")
    for k in summary["pinned_reps"]:
        print(f"rep {k}: NoRoot, estimate pinned at a search bound")
    return EXIT_OK


def cmd_verify(args, cfg) -> int:
    only = [s.strip() for s in cfg["suites"].split(",")] if cfg["suites"] else None
    results = run_suites(tol=cfg["tol"], zeta=cfg["zeta"], seed=cfg["seed"], only=only)
    doc = report(results)
    text = json.dumps(doc, indent=2, default=str) + "\n"
    _write(args.out_dir, "verify_report.json", text)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        detail = r.error or f"worst {r.worst:.3e} vs tol {r.tolerance:.1e}"
        print(f"{status} {r.name}: {detail}")
    return EXIT_OK if doc["passed"] else EXIT_PROPERTY


COMMANDS = {"synth": cmd_synth, "simulate": cmd_simulate, "estimate": cmd_estimate, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, ValueError, TypeError, KeyError) as exc:
        name = type(exc).__name__ if isinstance(exc, LeakfreeError) else "ConfigError"
        print(f"error: {name}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LeakfreeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
