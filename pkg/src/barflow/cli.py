"""Experiment runner: every study in the package as a subcommand.

Outputs are plain CSV (gnuplot/spreadsheet-ready); each subcommand also
writes a JSON run manifest recording the resolved parameters, package
version, SHA-256 digests of the outputs, and the wall-clock duration.
Identical flags and seeds reproduce byte-identical CSVs.

Flag values override a ``key=value`` config file (``--config``), which
overrides the built-in defaults (ell=2, trunc=100, amp=1).  Exit codes:
0 success, 1 check failure, 2 usage error.  ``BARFLOW_THREADS`` bounds the
worker pool for viscosity sweeps.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time

import numpy as np

from . import __version__, checks, eigensolve, evolution, fields, hypocoercivity, operators

DEFAULTS = {"ell": 2, "trunc": 100, "amp": 1.0}


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(prefix, command, params, outputs, started):
    manifest = {
        "command": command,
        "params": params,
        "version": __version__,
        "outputs": {p: _sha256(p) for p in outputs},
        "duration_seconds": time.time() - started,
    }
    path = f"{prefix}.manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _read_config(path):
    if path is None:
        return {}
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def _resolve(args, config, key, cast, default=None):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in config:
        return cast(config[key])
    if default is not None:
        return default
    return DEFAULTS.get(key)


def _parse_nus(text):
    nus = [float(v) for v in text.split(",") if v.strip()]
    if not nus:
        raise ValueError("empty viscosity list")
    return nus


def _build_operator(variant, ell, trunc, nu, amp):
    if variant == "symmetrized":
        return operators.symmetrized_bar_slice(ell, trunc, nu, amp, 0.0)
    if variant == "adjoint":
        return operators.adjoint_slice(operators.bar_slice(ell, trunc, nu, amp, 0.0, "full"))
    return operators.bar_slice(ell, trunc, nu, amp, 0.0, variant)


def cmd_spectrum(args):
    started = time.time()
    config = _read_config(args.config)
    ell = _resolve(args, config, "ell", int)
    trunc = _resolve(args, config, "trunc", int)
    amp = _resolve(args, config, "amp", float)
    nu = _resolve(args, config, "nu", float)
    if nu is None:
        raise SystemExit2("--nu is required")
    op = _build_operator(args.variant, ell, trunc, nu, amp)
    spec = eigensolve.compute_spectrum(op)
    rows = [(i + 1, lam.real, lam.imag) for i, lam in enumerate(spec.eigenvalues)]
    _write_csv(args.out, ("rank", "re", "im"), rows)
    params = {"ell": ell, "trunc": trunc, "nu": nu, "amp": amp, "variant": args.variant}
    _write_manifest(args.out, "spectrum", params, [args.out], started)
    return 0


def cmd_sweep(args):
    started = time.time()
    config = _read_config(args.config)
    ell = _resolve(args, config, "ell", int)
    trunc = _resolve(args, config, "trunc", int)
    amp = _resolve(args, config, "amp", float)
    nus = _parse_nus(args.nus if args.nus is not None else config.get("nus", ""))
    sweep = eigensolve.nu_sweep(ell, trunc, nus, amp, args.variant)
    rows = []
    for nu, spec in sweep:
        for i, lam in enumerate(spec.eigenvalues):
            rows.append((nu, ell, trunc, args.variant, i + 1, lam.real, lam.imag))
    _write_csv(args.out, ("nu", "ell", "N", "variant", "rank", "re", "im"), rows)
    outputs = [args.out]
    if len(nus) >= 3:
        fit = eigensolve.fit_scaling(sweep)
        fit_path = args.out.replace(".csv", "") + "_fit.csv"
        _write_csv(
            fit_path,
            ("slope", "intercept", "max_residual", "n_samples"),
            [(fit.slope, fit.intercept, fit.max_residual, len(fit.samples))],
        )
        outputs.append(fit_path)
    params = {"ell": ell, "trunc": trunc, "nus": nus, "amp": amp, "variant": args.variant}
    _write_manifest(args.out, "sweep", params, outputs, started)
    return 0


def cmd_collapse(args):
    started = time.time()
    config = _read_config(args.config)
    ell = _resolve(args, config, "ell", int)
    trunc = _resolve(args, config, "trunc", int)
    amp = _resolve(args, config, "amp", float)
    nus = _parse_nus(args.nus if args.nus is not None else config.get("nus", ""))
    rows = eigensolve.collapse_table(ell, trunc, nus, args.count, amp, args.variant)
    _write_csv(args.out, ("rank", "nu", "re_over_sqrt_nu"), rows)
    params = {
        "ell": ell,
        "trunc": trunc,
        "nus": nus,
        "count": args.count,
        "amp": amp,
        "variant": args.variant,
    }
    _write_manifest(args.out, "collapse", params, [args.out], started)
    return 0


def _initial_field(spec, trunc, seed):
    kind, _, arg = spec.partition(":")
    if kind == "zero":
        return fields.zero_field(trunc, trunc)
    if kind == "barmode":
        return fields.bar_state(int(arg or 1), trunc, trunc)
    if kind == "dipole":
        return fields.dipole_state(int(arg or 1), trunc, trunc)
    if kind == "random":
        return fields.random_field(trunc, trunc, int(arg if arg else seed))
    if kind == "random-fast":
        w = fields.random_field(trunc, trunc, int(arg if arg else seed))
        return fields.remove_anomalous(w)
    raise SystemExit2(f"unknown init spec {spec!r}")


def cmd_evolve(args):
    started = time.time()
    config = _read_config(args.config)
    trunc = _resolve(args, config, "trunc", int, default=16)
    amp = _resolve(args, config, "amp", float)
    nu = _resolve(args, config, "nu", float)
    if nu is None:
        raise SystemExit2("--nu is required")
    seed = args.seed if args.seed is not None else 0
    w0 = _initial_field(args.init, trunc, seed)
    cfg = evolution.IntegratorConfig(
        dt=args.dt,
        t_final=args.t_final,
        sample_every=args.sample_every,
        grid=args.grid,
        dealias=not args.no_dealias,
    )
    if args.kind == "linear":
        extra = {"x_norm": hypocoercivity.x_norm_diagnostic(nu, amp)} if args.with_x_norm else None
        traj = evolution.evolve_linear(w0, nu, amp, args.variant, cfg, extra)
    else:
        traj = evolution.evolve_nonlinear(w0, nu, cfg)
    diag_path = f"{args.out_prefix}_diagnostics.csv"
    names = ("t", "l2", "x_norm", "phi", "max_pq", "enstrophy", "grad_norm_sq")
    rows = []
    for i, t in enumerate(traj.times):
        d = traj.diagnostics
        rows.append(
            (
                t,
                d["l2"][i],
                d["x_norm"][i] if "x_norm" in d else math.nan,
                d["phi"][i] if "phi" in d else math.nan,
                d["max_pq"][i],
                d["enstrophy"][i],
                d["grad_norm_sq"][i],
            )
        )
    _write_csv(diag_path, names, rows)
    outputs = [diag_path]
    for i, f in enumerate(traj.fields):
        path = f"{args.out_prefix}_field_{i:04d}.csv"
        fields.save_field(f, path)
        outputs.append(path)
    params = {
        "init": args.init,
        "kind": args.kind,
        "variant": args.variant,
        "nu": nu,
        "amp": amp,
        "trunc": trunc,
        "dt": args.dt,
        "t_final": args.t_final,
        "sample_every": args.sample_every,
        "seed": seed,
        "grid": args.grid,
        "dealias": not args.no_dealias,
    }
    _write_manifest(args.out_prefix, "evolve", params, outputs, started)
    return 0


def cmd_hypo(args):
    started = time.time()
    config = _read_config(args.config)
    ell = _resolve(args, config, "ell", int)
    amp = _resolve(args, config, "amp", float)
    nu = _resolve(args, config, "nu", float)
    if nu is None:
        raise SystemExit2("--nu is required")
    trunc = _resolve(args, config, "trunc", int, default=48)
    if args.m0 == "auto":
        m0 = hypocoercivity.auto_m0(amp, ell, nu)
        beta0 = m0 / (512 * amp * amp * abs(ell))
        lam_min = hypocoercivity.oscillator_min_eig(
            0.125, (beta0 / (2 * nu)) * (amp * ell) ** 2, 128
        )
    else:
        m0 = float(args.m0)
        beta0 = m0 / (512 * amp * amp * abs(ell))
        lam_min = math.nan
    try:
        constants = hypocoercivity.hypo_constants(m0, amp, ell, nu)
    except ValueError as exc:
        raise SystemExit2(f"invalid constants: {exc}") from exc

    const_path = f"{args.out_prefix}_constants.csv"
    _write_csv(
        const_path,
        ("m0", "a", "ell", "alpha0", "beta0", "gamma0", "checks_passed"),
        [(m0, amp, ell, constants.alpha0, constants.beta0, constants.gamma0, 1)],
    )
    m0_path = f"{args.out_prefix}_m0.csv"
    _write_csv(
        m0_path,
        ("nu", "a", "ell", "t", "lambda_min", "m0_est"),
        [(nu, amp, ell, 0.0, lam_min, m0)],
    )

    rng_seed = args.seed if args.seed is not None else 0
    rng = np.random.default_rng(rng_seed)
    c = np.zeros((2 * trunc + 1, 2 * abs(ell) + 1), dtype=complex)
    ks = np.arange(-trunc, trunc + 1)
    c[:, ell + abs(ell)] = (
        rng.standard_normal(2 * trunc + 1) + 1j * rng.standard_normal(2 * trunc + 1)
    ) * np.exp(-0.05 * ks * ks)
    w0 = fields.SpectralField(trunc, abs(ell), c, copy=False)
    fit = hypocoercivity.decay_check(w0, nu, amp, args.t_final, args.dt)
    decay_path = f"{args.out_prefix}_decay.csv"
    _write_csv(
        decay_path,
        ("nu", "ell", "fitted_M", "fitted_K", "residual"),
        [(nu, ell, fit.m, fit.k, fit.max_residual)],
    )
    params = {
        "ell": ell,
        "nu": nu,
        "amp": amp,
        "m0": m0,
        "trunc": trunc,
        "t_final": args.t_final,
        "dt": args.dt,
        "seed": rng_seed,
    }
    _write_manifest(
        args.out_prefix, "hypo", params, [const_path, m0_path, decay_path], started
    )
    return 0


def cmd_check(args):
    failures = checks.run_all(golden_dir=args.golden_dir)
    return 1 if failures else 0


class SystemExit2(SystemExit):
    def __init__(self, message):
        print(f"error: {message}", file=sys.stderr)
        super().__init__(2)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="barflow",
        description="Spectra, scaling laws, decay checks, and simulations of "
        "the linearized 2D vorticity equation about shear states.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_flag="--out"):
        p.add_argument("--config", help="key=value config file (flags win)")
        if out_flag == "--out":
            p.add_argument("--out", required=True, help="output CSV path")
        else:
            p.add_argument("--out-prefix", required=True, help="output path prefix")

    p = sub.add_parser("spectrum", help="eigenvalues of one operator")
    common(p)
    p.add_argument("--ell", type=int)
    p.add_argument("--trunc", type=int)
    p.add_argument("--nu", type=float)
    p.add_argument("--amp", type=float)
    p.add_argument(
        "--variant",
        default="full",
        choices=("full", "approximate", "symmetrized", "adjoint"),
    )
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", help="spectra over a viscosity list + scaling fit")
    common(p)
    p.add_argument("--ell", type=int)
    p.add_argument("--trunc", type=int)
    p.add_argument("--nus", help="comma-separated viscosities")
    p.add_argument("--amp", type=float)
    p.add_argument(
        "--variant", default="full", choices=("full", "approximate", "symmetrized")
    )
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("collapse", help="rank-collapse table Re lambda_j / sqrt(nu)")
    common(p)
    p.add_argument("--ell", type=int)
    p.add_argument("--trunc", type=int)
    p.add_argument("--nus", help="comma-separated viscosities")
    p.add_argument("--count", type=int, default=30)
    p.add_argument("--amp", type=float)
    p.add_argument(
        "--variant", default="full", choices=("full", "approximate", "symmetrized")
    )
    p.set_defaults(func=cmd_collapse)

    p = sub.add_parser("evolve", help="time integration (linear or nonlinear)")
    common(p, "--out-prefix")
    p.add_argument(
        "--init",
        required=True,
        help="zero | barmode:M | dipole:M | random:SEED | random-fast:SEED",
    )
    p.add_argument("--kind", default="linear", choices=("linear", "nonlinear"))
    p.add_argument("--variant", default="full", choices=("full", "approximate"))
    p.add_argument("--nu", type=float)
    p.add_argument("--amp", type=float)
    p.add_argument("--trunc", type=int)
    p.add_argument("--t-final", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--sample-every", type=int, default=1)
    p.add_argument("--grid", type=int, help="nonlinear transform grid (power of two)")
    p.add_argument("--no-dealias", action="store_true")
    p.add_argument("--with-x-norm", action="store_true")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("hypo", help="constants, oscillator gap, and decay fit")
    common(p, "--out-prefix")
    p.add_argument("--ell", type=int)
    p.add_argument("--nu", type=float)
    p.add_argument("--amp", type=float)
    p.add_argument("--m0", default="auto", help="'auto' or a positive number")
    p.add_argument("--trunc", type=int)
    p.add_argument("--t-final", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_hypo)

    p = sub.add_parser("check", help="run the full invariant suite")
    p.add_argument("--golden-dir", help="override the golden matrix directory")
    p.set_defaults(func=cmd_check)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
