"""Command-line interface: ``isopca <subcommand> ...``.

Exit status is 0 on success, 2 for bad arguments or malformed input files and
1 for numerical failures.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .clusterer import UnravelConfig, unravel
from .evaluation import SUITES, run_suite, sample_error
from .fisher import overlap_report
from .isotropy import DegenerateCellError
from .mixture import (
    DegenerateMixtureError,
    LabeledSample,
    isotropic_params,
    parallel_pancakes,
    random_separable_mixture,
    sample,
    symmetric_mixture,
)
from .reweighting import default_alpha, exact_mixture_moments, sample_reweighted_moments
from ._linalg import sym_eigh

log = logging.getLogger("isopca")

EXPERIMENT_COLUMNS = ["trial", "arm", "error", "leaves", "mean_shift", "spectral", "fallback"]


class ConfigError(ValueError):
    pass


def _positive(kind):
    def parse(text):
        val = kind(text)
        if val <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return val
    return parse


def _need_file(path):
    if not Path(path).is_file():
        raise ConfigError(f"input file not found: {path}")


def _need_parent(path):
    if path is not None and not Path(path).resolve().parent.is_dir():
        raise ConfigError(f"output directory does not exist: {Path(path).parent}")


def _emit_json(data, out):
    if out:
        io.write_json(out, data)
    else:
        print(json.dumps(data, indent=2))


def cmd_generate(args):
    if args.out is None and args.points is None:
        raise ConfigError("generate needs --out and/or --points")
    _need_parent(args.out)
    _need_parent(args.points)
    if args.preset == "pancakes":
        mix = parallel_pancakes(args.n, args.d, args.sigma_thin, args.w1)
    elif args.preset == "separable":
        mix = random_separable_mixture(args.k, args.n, args.target_overlap, seed=args.seed)
    else:
        mix = symmetric_mixture(args.k, args.n, args.spread, seed=args.seed)
    if args.out:
        io.write_mixture(args.out, mix)
    if args.points:
        s = sample(mix, args.samples, args.seed)
        io.write_points(args.points, s.points, s.labels)
    return 0


def cmd_analyze(args):
    _need_file(args.mix)
    _need_parent(args.out)
    mix = io.read_mixture(args.mix)
    amap, iso = isotropic_params(mix)
    report = overlap_report(mix)
    data = report.to_dict()
    data["isotropic_map"] = {"linear": amap.linear.tolist(), "offset": amap.offset.tolist()}
    data["means_isotropic"] = iso.means.tolist()
    _emit_json(data, args.out)
    return 0


def cmd_cluster(args):
    _need_file(args.points)
    _need_parent(args.out)
    _need_parent(args.report)
    data = io.read_points(args.points)
    pts = data.points if isinstance(data, LabeledSample) else data
    wmin = args.wmin if args.wmin is not None else 1.0 / args.k
    config = UnravelConfig(
        k=args.k, wmin=wmin, alpha=args.alpha, m1=args.m1, m2=args.m2, seed=args.seed,
        max_depth=args.max_depth, eps_floor=args.eps_floor, fallback=not args.no_fallback,
    )
    try:
        config.validate(pts.shape[1])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    part = unravel(pts, config)
    io.write_partition(args.out, part)
    summary = {"leaves": part.n_leaves}
    if isinstance(data, LabeledSample):
        k = max(args.k, int(data.labels.max()) + 1)
        report = sample_error(part, data, k)
        summary["error"] = report.error
        if args.report:
            io.write_json(args.report, report.to_dict())
    print(json.dumps(summary))
    return 0


def cmd_classify(args):
    _need_file(args.partition)
    _need_file(args.points)
    _need_parent(args.out)
    part = io.read_partition(args.partition)
    data = io.read_points(args.points)
    pts = data.points if isinstance(data, LabeledSample) else data
    if pts.shape[1] != part.n:
        raise ConfigError(f"points have {pts.shape[1]} columns, partition expects {part.n}")
    leaves = part.predict(pts)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        out.write("leaf\n")
        out.writelines(f"{int(v)}\n" for v in leaves)
    finally:
        if args.out:
            out.close()
    return 0


def cmd_moments(args):
    _need_file(args.mix)
    _need_parent(args.out)
    mix = io.read_mixture(args.mix)
    if not args.raw:
        _, mix = isotropic_params(mix)
    alpha = args.alpha if args.alpha is not None else default_alpha(mix.n, mix.wmin)
    exact = exact_mixture_moments(mix, alpha)
    est = sample_reweighted_moments(sample(mix, args.m, args.seed).points, alpha)
    rows = [
        {"quantity": "norm_u", "exact": float(np.linalg.norm(exact.u)), "sampled": float(np.linalg.norm(est.u))},
        {"quantity": "norm_M", "exact": float(np.linalg.norm(exact.M, 2)), "sampled": float(np.linalg.norm(est.M, 2))},
    ]
    rows += [{"quantity": f"u[{j}]", "exact": float(exact.u[j]), "sampled": float(est.u[j])} for j in range(mix.n)]
    rows += [
        {"quantity": f"M[{i}][{j}]", "exact": float(exact.M[i, j]), "sampled": float(est.M[i, j])}
        for i in range(mix.n) for j in range(i, mix.n)
    ]
    rows += [{"quantity": f"rho[{i}]", "exact": float(r), "sampled": float("nan")} for i, r in enumerate(exact.rho)]
    for row in rows:
        row["abs_error"] = abs(row["exact"] - row["sampled"])
    columns = ["quantity", "exact", "sampled", "abs_error"]
    if args.out:
        io.write_rows(args.out, rows, columns)
    else:
        print(",".join(columns))
        for row in rows:
            print(",".join([row["quantity"]] + [repr(row[c]) for c in columns[1:]]))
    return 0


def cmd_experiment(args):
    _need_parent(args.out)
    result = run_suite(args.suite, args.trials, args.seed, n=args.n, m=args.m, m_eval=args.m_eval,
                       condition_number=args.condition_number)
    if args.out:
        io.write_rows(args.out, result.rows, EXPERIMENT_COLUMNS)
    arms = sorted({r["arm"] for r in result.rows})
    print(json.dumps({arm: result.mean_error(arm) for arm in arms}))
    return 0


def unit_circle_demo(m, seed, angle=None):
    """Rotated uniform distribution on two parallel segments, projected to the
    unit circle. Returns points, projections, the true x-axis and the top
    eigenvector of the projections' second moment."""
    rng = np.random.default_rng(seed)
    if angle is None:
        angle = rng.uniform(0, np.pi)
    x = rng.choice([-1.0, 1.0], size=m)
    y = rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=m)
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    pts = np.column_stack([x, y]) @ rot.T
    proj = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    _, vecs = sym_eigh(proj.T @ proj / m)
    return pts, proj, rot[:, 0], vecs[:, 0]


def cmd_demo2d(args):
    _need_parent(args.out)
    pts, proj, axis, found = unit_circle_demo(args.m, args.seed, args.angle)
    rows = [{"x": p[0], "y": p[1], "ux": q[0], "uy": q[1]} for p, q in zip(pts, proj)]
    if args.out:
        io.write_rows(args.out, rows, ["x", "y", "ux", "uy"])
    print(json.dumps({"true_axis": axis.tolist(), "recovered_axis": found.tolist(),
                      "abs_cosine": float(abs(axis @ found))}))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="isopca", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a mixture JSON and/or a labeled sample CSV")
    p.add_argument("--preset", choices=["pancakes", "separable", "symmetric"], default="pancakes")
    p.add_argument("--n", type=_positive(int), default=10)
    p.add_argument("--k", type=_positive(int), default=3)
    p.add_argument("--d", type=_positive(float), default=1.0)
    p.add_argument("--sigma-thin", type=_positive(float), default=0.01)
    p.add_argument("--w1", type=float, default=0.5)
    p.add_argument("--target-overlap", type=float, default=0.01)
    p.add_argument("--spread", type=_positive(float), default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=_positive(int), default=10_000)
    p.add_argument("--out", help="mixture JSON path")
    p.add_argument("--points", help="sample CSV path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="overlap, Fisher basis and spectrum of a mixture")
    p.add_argument("--mix", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("cluster", help="run Unravel on a point CSV")
    p.add_argument("--points", required=True)
    p.add_argument("--k", type=_positive(int), required=True)
    p.add_argument("--wmin", type=_positive(float))
    p.add_argument("--alpha", type=_positive(float))
    p.add_argument("--m1", type=_positive(int))
    p.add_argument("--m2", type=_positive(int))
    p.add_argument("--max-depth", type=int)
    p.add_argument("--eps-floor", type=_positive(float))
    p.add_argument("--no-fallback", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="partition JSON path")
    p.add_argument("--report", help="error report JSON path (needs a label column)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("classify", help="assign points to partition leaves")
    p.add_argument("--partition", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("moments", help="exact versus sampled reweighted moments")
    p.add_argument("--mix", required=True)
    p.add_argument("--alpha", type=_positive(float))
    p.add_argument("--m", type=_positive(int), default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--raw", action="store_true", help="skip moving the mixture to isotropic position")
    p.add_argument("--out")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("experiment", help="run an experiment suite, one CSV row per trial and arm")
    p.add_argument("--suite", choices=SUITES, required=True)
    p.add_argument("--trials", type=_positive(int), default=20)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=_positive(int), default=10)
    p.add_argument("--m", type=_positive(int), default=100_000)
    p.add_argument("--m-eval", type=_positive(int), default=100_000)
    p.add_argument("--condition-number", type=_positive(float), default=1e3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("demo2d", help="unit-circle projection demo data")
    p.add_argument("--m", type=_positive(int), default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--angle", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_demo2d)
    return parser


def run(argv=None):
    """Like ``main`` but argument errors return 2 instead of raising ``SystemExit``."""
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (DegenerateMixtureError, DegenerateCellError, np.linalg.LinAlgError) as exc:
        print(f"isopca: numerical failure: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, io.SchemaError, ValueError, OSError) as exc:
        print(f"isopca: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
