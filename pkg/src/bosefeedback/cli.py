"""Command-line front end.

Every command writes its data files plus ``<command>_manifest.json`` into the
output directory (``--out-dir``, else ``$BOSEFEEDBACK_OUTPUT_DIR``, else the
current directory). Manifests hold the resolved parameters, the seed and a
build identifier but no timestamps, so reruns are byte-identical.

Exit codes: 0 success, 2 invalid input, 3 numerical precondition failed
(estimator limits, memory cap, non-Hurwitz drift).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .colored_noise import kernel_from_dimensionless, kernel_state_space, pathwise_comparison, sample_xi_n
from .kernels import BACKEND
from .linear_model import (NotHurwitzError, build_system, ground_state_moments, macroscopic_block,
                           propagate_moments, stationary_covariance)
from .params import (InvalidParameterError, ModelParams, derive_params, from_dimensionless,
                     stationary_width_prediction)
from .sde import MemoryCapError, SimConfig, em_moments, simulate_ensemble
from .spectrum import (EstimatorError, analytic_spectrum, default_grid, estimate_from_kernel,
                       find_extrema)

EXIT_INVALID = 2
EXIT_NUMERIC = 3

FIGURES = {
    1: [(0.5, math.sqrt(2)), (0.5, 1 / math.sqrt(2))],
    2: [(0.8, 1 / math.sqrt(2)), (1.25, 1 / math.sqrt(2))],
}


class CommandError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def build_id() -> str:
    return f"bosefeedback {__version__} [{BACKEND}] numpy {np.__version__}"


def fmt(x) -> str:
    return format(float(x), ".17g")


def _clean(obj):
    """Round-trip floats through 17 significant digits for JSON output."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return float(fmt(v)) if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_text(path: Path, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def out_dir(args) -> Path:
    d = Path(args.out_dir or os.environ.get("BOSEFEEDBACK_OUTPUT_DIR") or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def write_manifest(directory: Path, command: str, resolved: dict, files, seed=None) -> Path:
    entries = []
    for f in files:
        digest = hashlib.sha256(Path(f).read_bytes()).hexdigest()
        entries.append({"file": Path(f).name, "sha256": digest})
    manifest = {"command": command, "build": build_id(), "seed": seed,
                "parameters": resolved, "files": entries}
    path = directory / f"{command}_manifest.json"
    write_text(path, dumps(manifest))
    return path


# -- argument handling -------------------------------------------------------

MODEL_DEFAULTS = {"m": 1.0, "omega0": 1.0, "hbar": 1.0, "n": 1000}


def add_model_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--alpha", type=float, help="damping ratio alpha_N = Gamma_N / omega0")
    g.add_argument("--eta", type=float, help="localization ratio eta")
    g.add_argument("--zeta", type=float, help="feedback kick strength (alternative to --alpha)")
    g.add_argument("--sigma", type=float,
                   help="measurement resolution (alternative to --eta; optional when zeta = 0)")
    g.add_argument("--n", type=int, help="set both <N> and N (default 1000)")
    g.add_argument("--n-mean", type=float, help="expected particle number <N>")
    g.add_argument("--n-cond", type=int, help="conditioning particle number N")
    g.add_argument("--m", type=float, help="particle mass (default 1)")
    g.add_argument("--omega0", type=float, help="trap frequency (default 1)")
    g.add_argument("--hbar", type=float, help="action constant (default 1)")


def add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with option values; flags override it")
    p.add_argument("--out-dir", help="output directory")


def apply_config(args) -> None:
    if not getattr(args, "config", None):
        return
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, ValueError) as exc:
        raise CommandError(f"cannot read config {args.config}: {exc}", EXIT_INVALID)
    for key, value in cfg.items():
        key = key.replace("-", "_")
        if not hasattr(args, key):
            raise CommandError(f"unknown config key {key!r}", EXIT_INVALID)
        if getattr(args, key) is None:
            setattr(args, key, value)


def opt(args, name, default):
    v = getattr(args, name, None)
    return default if v is None else v


def resolve_model(args, require=True, n_cond_offset=0) -> ModelParams | None:
    m = opt(args, "m", MODEL_DEFAULTS["m"])
    omega0 = opt(args, "omega0", MODEL_DEFAULTS["omega0"])
    hbar = opt(args, "hbar", MODEL_DEFAULTS["hbar"])
    n = opt(args, "n", MODEL_DEFAULTS["n"])
    n_mean = opt(args, "n_mean", n)
    n_cond = opt(args, "n_cond", int(n) + n_cond_offset)
    if args.alpha is not None and args.eta is not None:
        if args.zeta is not None or args.sigma is not None:
            raise CommandError("give either --alpha/--eta or --zeta/--sigma, not both", EXIT_INVALID)
        return from_dimensionless(args.alpha, args.eta, n_mean=n_mean, n_cond=n_cond,
                                  m=m, omega0=omega0, hbar=hbar)
    if args.zeta is not None and (args.sigma is not None or args.zeta == 0):
        sigma = 1.0 if args.sigma is None else args.sigma
        return ModelParams(m=m, omega0=omega0, zeta=args.zeta, sigma=sigma,
                           n_mean=n_mean, n_cond=n_cond, hbar=hbar)
    if require:
        raise CommandError("the model needs --alpha and --eta, or --zeta and --sigma", EXIT_INVALID)
    return None


def model_dump(p: ModelParams) -> dict:
    return {"model": p.to_dict(), "derived": derive_params(p).to_dict()}


# -- commands ----------------------------------------------------------------

def cmd_params(args) -> int:
    p = resolve_model(args)
    text = dumps(model_dump(p))
    sys.stdout.write(text)
    if args.out_dir:
        d = out_dir(args)
        path = d / "params.json"
        write_text(path, text)
        write_manifest(d, "params", model_dump(p), [path])
    return 0


def cmd_stationary(args) -> int:
    """Stationary center-of-mass width on the decoupled block with Theta_N = 1."""
    if args.n_cond is not None:
        raise CommandError("stationary fixes N = <N> + 1; do not pass --n-cond", EXIT_INVALID)
    n = opt(args, "n", MODEL_DEFAULTS["n"])
    if args.n_mean is not None:
        if float(args.n_mean) != int(args.n_mean):
            raise CommandError("stationary needs an integer --n-mean", EXIT_INVALID)
        n = int(args.n_mean)
    args.n, args.n_mean = n, None
    if args.alpha is None and args.zeta is None:
        args.alpha = 0.5
    p = resolve_model(args, n_cond_offset=1)
    d = derive_params(p)
    block = macroscopic_block(build_system(p, d, decoupled=True))
    try:
        cov = stationary_covariance(block)
    except NotHurwitzError as exc:
        raise CommandError(str(exc), EXIT_NUMERIC)
    width = math.sqrt(cov[0, 0])
    pred = stationary_width_prediction(d.dx0, d.eta)
    result = {"dx_stationary": width, "dx0": d.dx0, "ratio": width / d.dx0,
              "eq2_prediction": pred, "rel_error": abs(width - pred) / pred,
              "eta": d.eta, "theta_n": d.theta_n}
    text = dumps(result)
    sys.stdout.write(text)
    if args.out_dir:
        dd = out_dir(args)
        path = dd / "stationary.json"
        write_text(path, text)
        write_manifest(dd, "stationary", model_dump(p), [path])
    return 0


def _curve_rows(curve):
    return zip(curve.omegas, curve.values, curve.stderr)


def _tag(alpha, eta) -> str:
    return f"alpha{alpha:.6g}_eta{eta:.6g}"


def cmd_spectrum(args) -> int:
    if args.fig is not None:
        if args.alpha is not None or args.eta is not None:
            raise CommandError("--fig fixes alpha and eta", EXIT_INVALID)
        pairs = FIGURES[args.fig]
    elif args.alpha is not None:
        if args.alpha > 0 and args.eta is None:
            raise CommandError("--eta is required when --alpha > 0", EXIT_INVALID)
        pairs = [(args.alpha, args.eta if args.eta is not None else 1.0)]
    else:
        raise CommandError("spectrum needs --fig or --alpha/--eta", EXIT_INVALID)
    mode = opt(args, "mode", "analytic")
    if mode in ("estimate", "both") and args.seed is None:
        raise CommandError("--seed is required for estimated spectra", EXIT_INVALID)
    omega_max = opt(args, "omega_max", 5.0)
    points = opt(args, "points", 2048)
    settings = {"dt": opt(args, "dt", 0.0025), "segment_length": opt(args, "segment_length", 65536),
                "segments": opt(args, "segments", 2000), "overlap": opt(args, "overlap", 0.5),
                "window": opt(args, "window", "hann"), "gate_sigma": 4.0}
    d = out_dir(args)
    files, curves_meta = [], []
    header = ["omega_over_omega0", "s_value", "s_stderr"]
    for alpha, eta in pairs:
        ks = kernel_from_dimensionless(alpha, eta)
        entry = {"alpha_n": alpha, "eta": eta}
        if mode in ("analytic", "both"):
            curve = analytic_spectrum(ks, default_grid(omega_max, points))
            path = d / f"spectrum_{_tag(alpha, eta)}_analytic.csv"
            write_csv(path, header, _curve_rows(curve))
            files.append(path)
            try:
                report = find_extrema(curve)
            except ValueError:
                report = None
            if report is not None:
                rpath = d / f"spectrum_{_tag(alpha, eta)}_extrema.json"
                write_text(rpath, dumps(report.to_dict()))
                files.append(rpath)
        if mode in ("estimate", "both"):
            try:
                est = estimate_from_kernel(ks, settings["dt"], settings["segments"], args.seed,
                                           segment_length=settings["segment_length"],
                                           overlap=settings["overlap"], window=settings["window"],
                                           omega_max=omega_max)
            except EstimatorError as exc:
                raise CommandError(str(exc), EXIT_NUMERIC)
            path = d / f"spectrum_{_tag(alpha, eta)}_estimate.csv"
            write_csv(path, header, _curve_rows(est))
            files.append(path)
            entry["segments"] = est.meta["segments"]
        if mode == "both":
            ref = analytic_spectrum(ks, est.omegas).values
            z = (est.values - ref) / np.where(est.stderr > 0, est.stderr, np.inf)
            passed = bool(np.all(np.abs(z) <= settings["gate_sigma"]))
            cmp_ = {"alpha_n": alpha, "eta": eta, "omega_over_omega0": est.omegas.tolist(),
                    "estimate": est.values.tolist(), "analytic": ref.tolist(),
                    "z_score": z.tolist(), "max_abs_z": float(np.max(np.abs(z))),
                    "gate_sigma": settings["gate_sigma"], "pass": passed}
            path = d / f"spectrum_{_tag(alpha, eta)}_comparison.json"
            write_text(path, dumps(cmp_))
            files.append(path)
            entry["pass"] = passed
        curves_meta.append(entry)
    resolved = {"mode": mode, "figure": args.fig, "curves": curves_meta,
                "grid": {"omega_max": omega_max, "points": points}}
    if mode != "analytic":
        resolved["estimator"] = settings
    write_manifest(d, "spectrum", resolved, files, seed=args.seed)
    if mode == "both" and not all(c["pass"] for c in curves_meta):
        print("spectrum comparison failed the 4-standard-error gate", file=sys.stderr)
        return 1
    return 0


def _moment_columns(labels):
    n = len(labels)
    head = ["t"] + [f"mean_{l}" for l in labels]
    head += [f"cov_{labels[i]}_{labels[j]}" for i in range(n) for j in range(i, n)]
    return head


def _moment_rows(ens):
    n = ens.sample_mean.shape[1]
    iu = np.triu_indices(n)
    for k, t in enumerate(ens.times):
        yield [t, *ens.sample_mean[k], *ens.sample_cov[k][iu]]


def cmd_simulate(args) -> int:
    if args.seed is None:
        raise CommandError("--seed is required", EXIT_INVALID)
    p = resolve_model(args)
    mode = opt(args, "mode", "full")
    dt = opt(args, "dt", 0.005)
    t_final = opt(args, "t_final", 20.0)
    n_steps = max(1, int(round(t_final / dt)))
    n_traj = opt(args, "n_traj", 1000)
    scheme = opt(args, "scheme", "euler_maruyama")
    record = "full_paths" if args.paths else "moments_only"
    cap = int(opt(args, "memory_cap_gib", 2.0) * 1024 ** 3)
    cfg = SimConfig(dt=dt, n_steps=n_steps, n_traj=n_traj, seed=args.seed, scheme=scheme,
                    record=record, memory_cap=cap)
    d = out_dir(args)
    files = []
    resolved = {**model_dump(p), "mode": mode,
                "sim": {"dt": dt, "n_steps": n_steps, "n_traj": n_traj, "scheme": scheme,
                        "record": record, "initial": "ground_state"}}
    try:
        if mode == "reduced":
            from .colored_noise import simulate_reduced
            ens = simulate_reduced(p, cfg)
        else:
            sys_ = build_system(p, decoupled=(mode == "decoupled"))
            ens = simulate_ensemble(sys_, cfg)
    except MemoryCapError as exc:
        raise CommandError(str(exc), EXIT_NUMERIC)
    labels = ens.labels
    path = d / f"simulate_{mode}_moments.csv"
    write_csv(path, _moment_columns(labels), _moment_rows(ens))
    files.append(path)
    if ens.paths is not None:
        path = d / f"simulate_{mode}_paths.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["traj", "t", *labels])
            for i in range(ens.paths.shape[0]):
                for k, t in enumerate(ens.times):
                    w.writerow([str(i), fmt(t), *(fmt(v) for v in ens.paths[i, k])])
        files.append(path)
    if args.compare_full:
        if mode != "reduced":
            raise CommandError("--compare-full applies to --mode reduced", EXIT_INVALID)
        report = pathwise_comparison(p, dt, t_final, opt(args, "compare_paths", 4), args.seed)
        report["pass"] = report["fitted_order"] >= 0.9
        path = d / "reduced_vs_full.json"
        write_text(path, dumps(report))
        files.append(path)
    if args.dt_sweep:
        if mode == "reduced":
            resolved["dt_sweep"] = pathwise_comparison(p, dt, t_final, opt(args, "compare_paths", 4),
                                                       args.seed)
        else:
            sys_ = build_system(p, decoupled=(mode == "decoupled"))
            g0 = ground_state_moments(p)
            exact = propagate_moments(sys_, g0, n_steps * dt).cov
            dts, errs = [], []
            for level in range(3):
                h = dt / 2 ** level
                _, c = em_moments(sys_, g0, h, n_steps * 2 ** level)
                dts.append(h)
                errs.append(float(np.abs(c[-1] - exact).max() / np.abs(exact).max()))
            order = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
            resolved["dt_sweep"] = {"dt": dts, "em_cov_rel_error": errs, "fitted_order": order}
    write_manifest(d, "simulate", resolved, files, seed=args.seed)
    return 0


def cmd_noise_dump(args) -> int:
    if args.seed is None:
        raise CommandError("--seed is required", EXIT_INVALID)
    p = resolve_model(args)
    ks = kernel_state_space(p)
    dt = opt(args, "dt", 0.005)
    n_steps = opt(args, "steps", 4096)
    burn = opt(args, "burn_in", 0.0)
    burn_steps = int(math.ceil(burn / dt))
    index = opt(args, "path_index", 0)
    path = sample_xi_n(ks, dt, n_steps, 1, args.seed, burn_in_steps=burn_steps, first_index=index)
    d = out_dir(args)
    out = d / "noise_dump.csv"
    t = dt * np.arange(n_steps)
    write_csv(out, ["t", "d_xi_n", "d_w1", "d_w2"],
              zip(t, path.increments[0], path.source_w1[0], path.source_w2[0]))
    resolved = {**model_dump(p), "dt": dt, "steps": n_steps, "burn_in": burn, "path_index": index}
    write_manifest(d, "noise-dump", resolved, [out], seed=args.seed)
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bosefeedback", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=build_id())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="echo model and derived parameters as JSON")
    add_model_args(p)
    add_common_args(p)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("stationary", help="stationary center-of-mass width vs. the closed form")
    add_model_args(p)
    add_common_args(p)
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("spectrum", help="effective-noise spectrum (analytic and/or estimated)")
    p.add_argument("--fig", type=int, choices=sorted(FIGURES), help="figure parameter sets")
    p.add_argument("--alpha", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--mode", choices=["analytic", "estimate", "both"])
    p.add_argument("--omega-max", type=float, help="upper grid edge in omega0 (default 5)")
    p.add_argument("--points", type=int, help="analytic grid points (default 2048)")
    p.add_argument("--dt", type=float, help="simulation step for estimates (default 0.0025)")
    p.add_argument("--segment-length", type=int, help="Welch segment length (default 65536)")
    p.add_argument("--segments", type=int, help="number of Welch segments (default 2000)")
    p.add_argument("--overlap", type=float, help="segment overlap fraction (default 0.5)")
    p.add_argument("--window", help="window name (default hann)")
    p.add_argument("--seed", type=int)
    add_common_args(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("simulate", help="Monte Carlo ensemble moments")
    add_model_args(p)
    p.add_argument("--mode", choices=["full", "decoupled", "reduced"])
    p.add_argument("--dt", type=float, help="time step (default 0.005)")
    p.add_argument("--t-final", type=float, help="final time (default 20)")
    p.add_argument("--n-traj", type=int, help="number of trajectories (default 1000)")
    p.add_argument("--scheme", choices=["euler_maruyama", "exact_gaussian"])
    p.add_argument("--paths", action="store_true", help="also write every path")
    p.add_argument("--memory-cap-gib", type=float, help="path storage cap (default 2)")
    p.add_argument("--compare-full", action="store_true",
                   help="path-wise reduced vs. decoupled comparison at dt, dt/2, dt/4")
    p.add_argument("--compare-paths", type=int, help="paths in the comparison (default 4)")
    p.add_argument("--dt-sweep", action="store_true", help="record dt-convergence metadata")
    p.add_argument("--seed", type=int)
    add_common_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("noise-dump", help="write one effective-noise path as CSV")
    add_model_args(p)
    p.add_argument("--dt", type=float, help="time step (default 0.005)")
    p.add_argument("--steps", type=int, help="number of increments (default 4096)")
    p.add_argument("--burn-in", type=float, help="discarded transient, time units (default 0)")
    p.add_argument("--path-index", type=int, help="stream index (default 0)")
    p.add_argument("--seed", type=int)
    add_common_args(p)
    p.set_defaults(func=cmd_noise_dump)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        apply_config(args)
        return args.func(args)
    except CommandError as exc:
        if exc.code == EXIT_INVALID:
            parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (InvalidParameterError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
