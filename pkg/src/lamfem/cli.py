"""``lamfem`` command-line interface.

Subcommands: ``simulate``, ``study``, ``laminate-path`` and ``classify``.
The output directory is taken from ``--out``, then ``LAMFEM_OUT``, then the
configuration.  ``LAMFEM_THREADS`` caps the BLAS/OpenMP thread pools when it
is set before numpy is first imported.

Exit codes: 0 success, 2 configuration error, 3 solver divergence.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _mesh_arg(text):
    parts = text.lower().split("x")
    try:
        dims = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or NXxNY, got {text!r}") from None
    if len(dims) not in (1, 2) or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"expected N or NXxNY, got {text!r}")
    return dims[0] if len(dims) == 1 else tuple(dims)


def build_parser():
    p = argparse.ArgumentParser(prog="lamfem", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="count", default=0, help="more log output (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, mesh=True):
        sp.add_argument("config", help="JSON run configuration")
        sp.add_argument("--out", help="output directory")
        if mesh:
            sp.add_argument("--method", choices=["ELA", "GPLA", "LET"], help="override the method")
            sp.add_argument("--mesh", type=_mesh_arg, help="override the mesh, N or NXxNY")

    common(sub.add_parser("simulate", help="run one boundary-value problem"))
    st = sub.add_parser("study", help="mesh convergence study against a reference")
    common(st)
    st.add_argument("--resolutions", type=int, nargs="+", help="mesh sizes (square meshes)")
    st.add_argument("--methods", nargs="+", choices=["ELA", "GPLA", "LET"], help="methods to compare")
    common(sub.add_parser("laminate-path", help="drive a single laminate point along a load path"),
           mesh=False)
    common(sub.add_parser("classify", help="dump the element classification of a geometry"))
    return p


def _out_dir(args, cfg):
    return args.out or os.environ.get("LAMFEM_OUT") or cfg["output"]


def _simulate(args):
    from .bench.config import RunConfig
    from .bench.run import simulate

    cfg = RunConfig.load(args.config).override(method=args.method, mesh=args.mesh)
    res = simulate(cfg, _out_dir(args, cfg))
    if not res.converged:
        print(f"lamfem: solver diverged: {res.message}", file=sys.stderr)
        return EXIT_DIVERGED
    final = res.final
    print(f"converged: {len(res.trajectory)} steps, {sum(s.iterations for s in res.trajectory)} "
          f"Newton iterations, max gamma {float(final.gamma.max()) if final.gamma.size else 0.0:.6g}")
    if res.errors:
        print(f"L2 displacement error {res.errors['l2_displacement']:.6e}, "
              f"energy error {res.errors['energy']:.6e}")
    return EXIT_OK


def _study(args):
    from .bench.config import RunConfig
    from .bench.run import convergence_study

    cfg = RunConfig.load(args.config).override(method=args.method, mesh=args.mesh)
    methods = args.methods or ([args.method] if args.method else None)
    rows = convergence_study(cfg, args.resolutions, methods, out=_out_dir(args, cfg))
    for r in rows:
        print(f"{r['method']:>4} {r['nx']:>5} h={r['h']:.4g} L2={r['error_L2_displacement']:.6e} "
              f"energy={r['error_energy']:.6e}")
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_DIVERGED


def _laminate_path(args):
    from .bench.config import LAMINATE_KEYS, RunConfig
    from .bench.run import laminate_path

    cfg = RunConfig.load(args.config, required=LAMINATE_KEYS)
    rows = laminate_path(cfg, _out_dir(args, cfg))
    print(f"{len(rows)} load increments written")
    return EXIT_OK


def _classify(args):
    from pathlib import Path

    import numpy as np

    from .bench.config import RunConfig
    from .bench.output import write_classification_vtk, write_csv
    from .fem import build_mesh
    from .geometry import classify_elements

    cfg = RunConfig.load(args.config).override(method=args.method, mesh=args.mesh)
    m = cfg["mesh"]
    mesh = build_mesh(m["nx"], m["ny"], cfg.box)
    kind, eta, normal = classify_elements(cfg.levelset(), mesh.element_lower(), (mesh.dx, mesh.dy),
                                          cfg["n_sub"])
    out = Path(_out_dir(args, cfg))
    out.mkdir(parents=True, exist_ok=True)
    e = np.arange(mesh.n_elements)
    rows = zip(e, e % mesh.nx, e // mesh.nx, kind, eta, normal[:, 0], normal[:, 1])
    write_csv(out / "classification.csv", ["element", "i", "j", "kind", "eta", "Nx", "Ny"], rows)
    write_classification_vtk(out / "classification.vtk", mesh, kind, eta, normal)
    print(f"{int(np.sum(kind == 0))} phase-1, {int(np.sum(kind == 1))} phase-2, "
          f"{int(np.sum(kind == 2))} cut elements")
    return EXIT_OK


_COMMANDS = {"simulate": _simulate, "study": _study, "laminate-path": _laminate_path, "classify": _classify}


def main(argv=None):
    args = build_parser().parse_args(argv)
    threads = os.environ.get("LAMFEM_THREADS")
    if threads:
        for var in _THREAD_VARS:
            os.environ[var] = threads
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    from .errors import ConfigError, LamfemError

    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"lamfem: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LamfemError as exc:
        print(f"lamfem: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
