"""Command-line front end.

Each subcommand wraps one library operation with file inputs/outputs and
writes a run manifest (parameters, input/output SHA-256 hashes, version,
wall time) so identical inputs and seeds can be verified to reproduce
identical outputs. Exit codes: 0 success, 1 validation error, 2 numerical
failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericalError, ValidationError
from .eigen import (save_eigenvalues_csv, save_eigenvectors_csv,
                    solve_smallest)
from .fem import assemble_cotan, assemble_mass
from .io import load_field, load_mesh, save_field, save_mesh
from .mesh import euler_characteristic, make_icosphere, make_t_junction
from .rft import (FieldGeometry, StatField, group_f_stat, inference_report,
                  rft_threshold)
from .simulate import (METHODS, default_signal_regions, run_study,
                       study_config)
from .smooth import (diffusion_smooth, fit_coefficients,
                     fit_coefficients_weighted, heat_kernel_eval,
                     heat_kernel_smooth, iterated_kernel_smooth)
from .sphere import band_step_field, gibbs_experiment, sphere_angles
from .volume import (load_volume, marching_cubes, require_sphere_topology,
                     save_volume, topo_correct, validate_closed)

_EX_USAGE = 64


class _Parser(argparse.ArgumentParser):
    """argparse variant exiting with the usage code on bad flags."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(_EX_USAGE, f"{self.prog}: error: {message}\n")


class _Manifest:
    """Collects inputs/outputs for the per-run provenance record."""

    def __init__(self, command: str, params: dict):
        self.command = command
        self.params = {
            k: v for k, v in params.items() if k not in ("func", "threads")
        }
        self.inputs: dict = {}
        self.outputs: dict = {}
        self.t0 = time.monotonic()

    @staticmethod
    def _sha256(path) -> str:
        h = hashlib.sha256()
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
        return h.hexdigest()

    def add_input(self, path):
        if path is not None and Path(path).is_file():
            self.inputs[str(path)] = self._sha256(path)

    def add_output(self, path):
        self.outputs[str(path)] = None  # hashed at write time below

    def write(self, path):
        for p in list(self.outputs):
            if Path(p).is_file():
                self.outputs[p] = self._sha256(p)
        record = {
            "command": self.command,
            "parameters": {
                k: (str(v) if isinstance(v, Path) else v)
                for k, v in self.params.items()
            },
            "inputs": self.inputs,
            "outputs": self.outputs,
            "version": __version__,
            "wall_time_s": round(time.monotonic() - self.t0, 3),
        }
        Path(path).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest_path(out: Path) -> Path:
    return out / "manifest.json" if out.is_dir() else Path(str(out) + ".manifest.json")


def _write_json(path, payload, manifest):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    manifest.add_output(path)


def _load_mesh_arg(args, manifest):
    """Mesh from --mesh file, --icosphere level, or --t-junction."""
    given = [
        args.mesh is not None,
        getattr(args, "icosphere", None) is not None,
        bool(getattr(args, "t_junction", False)),
    ]
    if sum(given) != 1:
        raise ValidationError(
            "exactly one of --mesh, --icosphere or --t-junction is required"
        )
    if args.mesh is not None:
        manifest.add_input(args.mesh)
        return load_mesh(args.mesh)
    if getattr(args, "icosphere", None) is not None:
        return make_icosphere(args.icosphere)
    return make_t_junction(
        arm_length=getattr(args, "arm_length", 24.0),
        width=getattr(args, "width", 16.0),
        resolution=getattr(args, "resolution", 1.0),
    )


def _load_matrix_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def _save_matrix_csv(path, matrix, prefix: str):
    header = ",".join(f"{prefix}{j}" for j in range(matrix.shape[1]))
    np.savetxt(path, matrix, delimiter=",", header=header, comments="",
               fmt="%.17g")


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_eigs(args, manifest):
    mesh = _load_mesh_arg(args, manifest)
    A, C = assemble_mass(mesh), assemble_cotan(mesh)
    basis = solve_smallest(A, C, args.k, tol=args.tol, method=args.method)
    out = _out_dir(args)
    vals, vecs = out / "eigenvalues.csv", out / "eigenvectors.csv"
    save_eigenvalues_csv(basis, vals)
    save_eigenvectors_csv(basis, vecs)
    manifest.add_output(vals)
    manifest.add_output(vecs)
    return out


def _cmd_smooth(args, manifest):
    mesh = _load_mesh_arg(args, manifest)
    manifest.add_input(args.field)
    y = load_field(args.field)
    A, C = assemble_mass(mesh), assemble_cotan(mesh)
    basis = solve_smallest(A, C, args.k)
    if args.weighted:
        coeffs = fit_coefficients_weighted(basis, A, y)
    else:
        coeffs = fit_coefficients(basis, y)
    smoothed = heat_kernel_smooth(basis, coeffs, args.sigma)
    save_field(smoothed, args.out)
    manifest.add_output(args.out)
    return Path(args.out)


def _cmd_diffuse(args, manifest):
    mesh = _load_mesh_arg(args, manifest)
    manifest.add_input(args.field)
    y = load_field(args.field)
    A, C = assemble_mass(mesh), assemble_cotan(mesh)
    smoothed = diffusion_smooth(A, C, y, args.sigma, args.dt,
                                lump_mass=args.lump_mass)
    save_field(smoothed, args.out)
    manifest.add_output(args.out)
    return Path(args.out)


def _cmd_iterate(args, manifest):
    mesh = _load_mesh_arg(args, manifest)
    manifest.add_input(args.field)
    y = load_field(args.field)
    smoothed = iterated_kernel_smooth(mesh, y, args.sigma, args.m)
    save_field(smoothed, args.out)
    manifest.add_output(args.out)
    return Path(args.out)


def _cmd_kernel_eval(args, manifest):
    mesh = _load_mesh_arg(args, manifest)
    A, C = assemble_mass(mesh), assemble_cotan(mesh)
    basis = solve_smallest(A, C, args.k)
    value = heat_kernel_eval(basis, args.sigma, args.p, args.q)
    payload = {"p": args.p, "q": args.q, "sigma": args.sigma, "k": args.k,
               "value": value}
    _write_json(args.out, payload, manifest)
    print(f"{value:.17g}")
    return Path(args.out)


def _cmd_sphere_validate(args, manifest):
    mesh = _load_mesh_arg(args, manifest)
    A, C = assemble_mass(mesh), assemble_cotan(mesh)
    lmax = args.lmax
    k = (lmax + 1) ** 2 - 1
    basis = solve_smallest(A, C, k)
    clusters = []
    pos = 1  # skip the constant eigenfunction
    for l in range(1, lmax + 1):
        mult = 2 * l + 1
        got = basis.eigenvalues[pos : pos + mult]
        expected = float(l * (l + 1))
        clusters.append({
            "l": l,
            "expected": expected,
            "mean": float(got.mean()),
            "rel_error": float(abs(got.mean() - expected) / expected),
            "spread": float(got.max() - got.min()),
            "multiplicity": mult,
        })
        pos += mult
    payload = {
        "lmax": lmax,
        "clusters": clusters,
        "max_rel_error": max(c["rel_error"] for c in clusters),
    }
    _write_json(args.out, payload, manifest)
    return Path(args.out)


_GIBBS_PLOT = """\
# Band-step reconstruction profile; run: gnuplot render.gp
set terminal pngcairo size 900,600
set output 'gibbs.png'
set xlabel 'polar angle (rad)'
set ylabel 'value'
set key top right
set datafile separator ','
plot 'profile.csv' using 1:2 skip 1 with lines lw 2 title 'step', \\
     'profile.csv' using 1:3 skip 1 with lines title 'least squares', \\
     'profile.csv' using 1:4 skip 1 with lines title 'heat kernel'
"""


def _cmd_gibbs(args, manifest):
    mesh = _load_mesh_arg(args, manifest)
    report = gibbs_experiment(mesh, L=args.L, sigma=args.sigma)
    out = _out_dir(args)
    theta, _ = sphere_angles(mesh)
    order = np.argsort(theta)
    step = band_step_field(mesh)
    profile = np.column_stack([
        theta[order], step[order], report.lse_field[order],
        report.hk_field[order],
    ])
    prof_path = out / "profile.csv"
    np.savetxt(prof_path, profile, delimiter=",",
               header="theta,step,lse,hk", comments="", fmt="%.17g")
    manifest.add_output(prof_path)
    _write_json(out / "report.json", {
        "L": report.L,
        "sigma": report.sigma,
        "lse_overshoot": report.lse_overshoot,
        "hk_overshoot": report.hk_overshoot,
    }, manifest)
    script = out / "render.gp"
    script.write_text(_GIBBS_PLOT)
    manifest.add_output(script)
    return out


def _cmd_rft(args, manifest):
    if args.stat is not None:
        manifest.add_input(args.stat)
        values = load_field(args.stat)
        if args.df is None:
            raise ValidationError("--df NUM,DEN is required with --stat")
        df = tuple(int(x) for x in args.df.split(","))
        stat = StatField(values=values, df=df)
    elif args.group1 is not None and args.group2 is not None:
        manifest.add_input(args.group1)
        manifest.add_input(args.group2)
        g1 = _load_matrix_csv(args.group1).T  # columns are subjects
        g2 = _load_matrix_csv(args.group2).T
        stat = group_f_stat(g1, g2)
    else:
        raise ValidationError("provide --stat or both --group1 and --group2")

    if args.mesh is not None:
        manifest.add_input(args.mesh)
        mesh = load_mesh(args.mesh)
        area, chi = mesh.area, euler_characteristic(mesh)
    elif args.area is not None and args.chi is not None:
        area, chi = args.area, args.chi
    else:
        raise ValidationError("provide --mesh or both --area and --chi")

    geom = FieldGeometry(surface_area=area, euler_char=chi,
                         smoothing_bandwidth=args.sigma)
    payload = inference_report(stat, geom, args.alpha)
    _write_json(args.out, payload, manifest)
    return Path(args.out)


_SIMULATE_PLOT = """\
# Detection rates per smoothing method; run: gnuplot render.gp
set terminal pngcairo size 900,600
set output 'rates.png'
set style data histogram
set style histogram cluster gap 1
set style fill solid 0.8
set yrange [0:1.05]
set ylabel 'rate'
set datafile separator ','
plot 'rates.csv' using 2:xtic(1) skip 1 title 'TPR', \\
     'rates.csv' using 3 skip 1 title 'FPR'
"""


def _cmd_simulate(args, manifest):
    mesh = _load_mesh_arg(args, manifest)
    methods = tuple(args.methods.split(",")) if args.methods else METHODS
    overrides = {}
    for name, key in (("gamma", "noise_sd"), ("sigma", "sigma"),
                      ("iterations", "iterations"), ("k", "k"),
                      ("threshold", "threshold")):
        val = getattr(args, name)
        if val is not None:
            overrides[key] = val
    config = study_config(args.study, mesh, seed=args.seed, **overrides)

    if args.threshold_alpha is not None:
        geom = FieldGeometry(surface_area=mesh.area,
                             euler_char=euler_characteristic(mesh),
                             smoothing_bandwidth=config.sigma)
        df = (1, config.n1 + config.n2 - 2)
        f_threshold = rft_threshold(args.threshold_alpha, geom, df)
        config = replace(config, threshold=float(np.sqrt(f_threshold)))

    report = run_study(mesh, config, methods)
    out = _out_dir(args)
    rates_path = out / "rates.csv"
    with open(rates_path, "w") as fh:
        fh.write("method,tpr,fpr\n")
        for name, res in report.methods.items():
            fh.write(f"{name},{res.true_positive_rate:.6f},"
                     f"{res.false_positive_rate:.6f}\n")
    manifest.add_output(rates_path)
    for name, res in report.methods.items():
        t_path = out / f"t_{name}.csv"
        save_field(res.t_field, t_path)
        manifest.add_output(t_path)
    payload = report.to_dict()
    payload.update({
        "study": args.study,
        "seed": args.seed,
        "noise_sd": config.noise_sd,
        "sigma": config.sigma,
        "iterations": config.iterations,
        "k": config.k,
    })
    _write_json(out / "report.json", payload, manifest)
    script = out / "render.gp"
    script.write_text(_SIMULATE_PLOT)
    manifest.add_output(script)
    return out


def _cmd_topofix(args, manifest):
    manifest.add_input(args.vol)
    manifest.add_input(args.sidecar)
    vol = load_volume(args.vol, sidecar=args.sidecar)
    fixed = topo_correct(vol, radius=args.radius,
                         connectivity=args.connectivity)
    save_volume(fixed, args.out)
    manifest.add_output(args.out)
    manifest.add_output(str(args.out) + ".json")
    # loud gate: the corrected volume must extract to a sphere-topology mesh
    require_sphere_topology(marching_cubes(fixed))
    return Path(args.out)


def _cmd_extract(args, manifest):
    manifest.add_input(args.vol)
    manifest.add_input(args.sidecar)
    vol = load_volume(args.vol, sidecar=args.sidecar)
    mesh = marching_cubes(vol, iso=args.iso)
    save_mesh(mesh, args.out)
    manifest.add_output(args.out)
    return Path(args.out)


def _cmd_validate_mesh(args, manifest):
    manifest.add_input(args.mesh)
    mesh = load_mesh(args.mesh)
    payload = validate_closed(mesh)
    _write_json(args.out, payload, manifest)
    print(json.dumps(payload, sort_keys=True))
    return Path(args.out)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_mesh_source(p, t_junction=True):
    p.add_argument("--mesh", type=Path, help="mesh file (.off or .ply)")
    p.add_argument("--icosphere", type=int,
                   help="generate a unit icosphere at this subdivision")
    if t_junction:
        p.add_argument("--t-junction", action="store_true",
                       help="generate the built-in T-junction surface")
        p.add_argument("--arm-length", type=float, default=24.0)
        p.add_argument("--width", type=float, default=16.0)
        p.add_argument("--resolution", type=float, default=1.0)


def build_parser() -> _Parser:
    parser = _Parser(prog="surfheat",
                     description="Heat kernel smoothing and inference on "
                                 "triangulated surfaces")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True,
                                parser_class=_Parser)

    def common(p):
        p.add_argument("--threads", type=int,
                       default=int(os.environ.get("SURFHEAT_THREADS",
                                                  os.cpu_count() or 1)),
                       help="BLAS/solver thread cap "
                            "(default: SURFHEAT_THREADS or hardware count)")

    p = sub.add_parser("eigs", help="solve the smallest eigenpairs")
    _add_mesh_source(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--method", choices=("auto", "dense", "sparse"),
                   default="auto")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    common(p)
    p.set_defaults(func=_cmd_eigs)

    p = sub.add_parser("smooth", help="heat kernel regression smoothing")
    _add_mesh_source(p)
    p.add_argument("--field", type=Path, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--k", type=int, default=132)
    p.add_argument("--weighted", action="store_true",
                   help="use the mass-weighted projection for coefficients")
    p.add_argument("--out", type=Path, required=True)
    common(p)
    p.set_defaults(func=_cmd_smooth)

    p = sub.add_parser("diffuse", help="forward-Euler diffusion smoothing")
    _add_mesh_source(p)
    p.add_argument("--field", type=Path, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--dt", type=float, default=0.0025)
    p.add_argument("--lump-mass", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    common(p)
    p.set_defaults(func=_cmd_diffuse)

    p = sub.add_parser("iterate", help="iterated first-ring kernel smoothing")
    _add_mesh_source(p)
    p.add_argument("--field", type=Path, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--out", type=Path, required=True)
    common(p)
    p.set_defaults(func=_cmd_iterate)

    p = sub.add_parser("kernel-eval", help="evaluate K_sigma(p, q)")
    _add_mesh_source(p)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--k", type=int, default=132)
    p.add_argument("--out", type=Path, required=True)
    common(p)
    p.set_defaults(func=_cmd_kernel_eval)

    p = sub.add_parser("sphere-validate",
                       help="check the spectrum against l(l+1) clusters")
    _add_mesh_source(p, t_junction=False)
    p.add_argument("--lmax", type=int, default=5)
    p.add_argument("--out", type=Path, required=True)
    common(p)
    p.set_defaults(func=_cmd_sphere_validate)

    p = sub.add_parser("gibbs", help="band-step overshoot experiment")
    _add_mesh_source(p, t_junction=False)
    p.add_argument("--L", type=int, default=30)
    p.add_argument("--sigma", type=float, default=1e-4)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    common(p)
    p.set_defaults(func=_cmd_gibbs)

    p = sub.add_parser("rft", help="RFT-corrected inference report")
    p.add_argument("--stat", type=Path, help="F statistic CSV")
    p.add_argument("--df", type=str, help="degrees of freedom NUM,DEN")
    p.add_argument("--group1", type=Path, help="matrix CSV, one column per subject")
    p.add_argument("--group2", type=Path)
    p.add_argument("--mesh", type=Path, help="geometry source mesh")
    p.add_argument("--area", type=float, help="surface area (with --chi)")
    p.add_argument("--chi", type=int, help="Euler characteristic")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", type=Path, required=True)
    common(p)
    p.set_defaults(func=_cmd_rft)

    p = sub.add_parser("simulate", help="two-group detection studies")
    _add_mesh_source(p)
    p.add_argument("--study", type=int, choices=(1, 2), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--methods", type=str,
                   help="comma list from raw,heat_kernel,iterated,diffusion")
    p.add_argument("--gamma", type=float, help="noise sd override")
    p.add_argument("--sigma", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--threshold-alpha", type=float,
                   help="recompute the t threshold from RFT at this alpha")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("topofix", help="topology-correct a binary volume")
    p.add_argument("--vol", type=Path, required=True)
    p.add_argument("--sidecar", type=Path,
                   help="JSON sidecar (default: VOL.json)")
    p.add_argument("--radius", type=int, default=1)
    p.add_argument("--connectivity", type=int, choices=(6, 26), default=26)
    p.add_argument("--out", type=Path, required=True)
    common(p)
    p.set_defaults(func=_cmd_topofix)

    p = sub.add_parser("extract", help="marching-cubes isosurface")
    p.add_argument("--vol", type=Path, required=True)
    p.add_argument("--sidecar", type=Path)
    p.add_argument("--iso", type=float, default=0.5)
    p.add_argument("--out", type=Path, required=True)
    common(p)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("validate-mesh", help="closed-manifold report")
    p.add_argument("--mesh", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    common(p)
    p.set_defaults(func=_cmd_validate_mesh)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    manifest = _Manifest(args.subcommand, dict(vars(args)))
    try:
        try:
            from threadpoolctl import threadpool_limits
        except ImportError:  # thread capping is best-effort
            threadpool_limits = None
        if threadpool_limits is not None and args.threads:
            with threadpool_limits(limits=args.threads):
                out = args.func(args, manifest)
        else:
            out = args.func(args, manifest)
    except (ValidationError, OSError) as exc:
        # unreadable/missing files are user-input problems, same as bad values
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    manifest.write(_manifest_path(Path(out)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
