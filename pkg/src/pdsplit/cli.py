"""Command-line experiment runner.

Subcommands::

    pdsplit deblur --problem p2|p3 ...   l1-regularized deblurring of a test image
    pdsplit fw --instance 39|40|FILE ... Fermat-Weber location problem
    pdsplit norm --operator ...          operator-norm estimate

Exit codes: 0 success, 2 configuration or step-size error, 3 I/O error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import convex_problems as cp
from .exceptions import InnerSolveError, StepSizeError
from .imaging import BlurSpec, GaussianBlur, add_gaussian_noise, read_pgm, synthetic_blobs, write_pgm
from .linops import IdentityMap, estimate_norm, load_dense_matrix
from .prox import BoxSet, MoreauConjugate, QuadraticResidual
from .splitting import (
    SolverConfig,
    run_ahu,
    run_pd,
    run_skew,
    run_sum,
    run_sum_compositions,
    run_sum_swapped,
    validate_stepsizes,
)

log = logging.getLogger("pdsplit")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

CHECKPOINTS = (50, 100, 150)

# Step sizes used when --sigma/--tau are omitted, keyed by problem
DEFAULT_STEPS = {
    "p2": (0.01, 9.99),
    "p3": (0.05, 6.66),
    "39": (0.13, 1.4),
    "40": (0.0001, 9999.0),
}


class ConfigError(Exception):
    pass


@dataclass
class RunManifest:
    """Everything that determines one run."""

    algorithm: str
    problem: str
    sigma: float
    tau: float
    max_iter: int
    stop_tol: float = 0.0
    seed: int = 0
    out_csv: Optional[Path] = None
    out_image: Optional[Path] = None
    options: dict = field(default_factory=dict)

    def config(self, norm_bound=None):
        return SolverConfig(self.sigma, self.tau, self.max_iter, self.stop_tol, norm_bound)

    def validate(self, norm_sq=None):
        kind = {"sum": "sum-compositions"}.get(self.algorithm, self.algorithm) \
            if self.problem == "p3" else self.algorithm
        verdict = validate_stepsizes(kind, self.sigma, self.tau, norm_sq)
        if not verdict:
            raise ConfigError(f"step sizes rejected for {self.algorithm}: {verdict.message}")
        return verdict


def _parse_point(text):
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _image_path(base, tag):
    base = Path(base)
    return base.with_name(f"{base.stem}_{tag}{base.suffix or '.pgm'}")


def _write_csv(log_record, path):
    if path is None:
        return
    try:
        log_record.to_csv(path)
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


def cmd_deblur(m):
    opts = m.options
    if opts.get("input"):
        original = read_pgm(opts["input"])
    else:
        original = synthetic_blobs(opts["width"], opts["height"], opts["blobs"], m.seed)
    height, width = original.shape
    blur = GaussianBlur(height, width, BlurSpec(opts["kernel_size"], opts["blur_std"]))
    observed = add_gaussian_noise(blur.apply(original.ravel()).reshape(height, width),
                                  opts["noise_std"], m.seed + 1)
    lam = opts["lam"]
    x_true = original.ravel()
    b = observed.ravel()

    def isnr_of(x):
        return cp.isnr(x_true, b, x)

    images = {}

    def keep(n, x):
        if n in CHECKPOINTS:
            images[n] = x.copy()
        if n % 10 == 0:
            log.info("iteration %d", n)

    if m.problem == "p2":
        m.validate(blur.norm_bound ** 2)
        inst = cp.DeblurInstance(blur, b, lam)
        prox_f, conj_g, K = cp.build_p2(inst)
        common = dict(objective=lambda x: cp.p2_objective(inst, x),
                      monitors={"isnr": isnr_of}, callback=keep)
        cfg = m.config()
        if m.algorithm == "pd":
            x, _, record = run_pd(prox_f, conj_g, K, cfg, **common)
        elif m.algorithm == "ahu":
            x, _, record = run_ahu(prox_f, conj_g, K, cfg, **common)
        else:
            x, _, record = run_skew(MoreauConjugate(prox_f), QuadraticResidual(b), K, cfg,
                                    **common)
        initial = cp.p2_objective(inst, np.zeros_like(b))
    else:
        box = BoxSet.cube(b.size, 0.0, 1.0)
        inst = cp.DeblurInstance(blur, b, lam, box)
        problem = cp.build_p3(inst)
        m.validate(problem.norm_sq_sum())

        def objective(x):
            return cp.p3_objective(inst, np.clip(x, 0.0, 1.0))

        x, _, record = run_sum_compositions(
            problem, m.config(), objective=objective, monitors={"isnr": isnr_of}, callback=keep
        )
        initial = cp.p3_objective(inst, np.zeros_like(b))

    _write_csv(record, m.out_csv)
    if m.out_image is not None:
        try:
            for n, img in sorted(images.items()):
                write_pgm(_image_path(m.out_image, f"{n:04d}"), img.reshape(height, width))
            write_pgm(m.out_image, x.reshape(height, width))
            write_pgm(_image_path(m.out_image, "observed"), observed)
            write_pgm(_image_path(m.out_image, "original"), original)
        except OSError as exc:
            raise IOError(f"cannot write images: {exc}") from exc
    print(f"problem={m.problem} algorithm={m.algorithm} iterations={record.iterations}")
    print(f"objective initial={initial:.10g} final={record.last('objective'):.10g}")
    print(f"isnr final={record.last('isnr'):.6f} dB")
    return EXIT_OK


def cmd_fw(m):
    tag = m.problem
    if tag in cp.BUILTIN_INSTANCES:
        inst = cp.BUILTIN_INSTANCES[tag]()
    else:
        inst = cp.FermatWeberInstance.load(tag)
    x0 = m.options.get("x0")
    if x0 is None:
        x0 = inst.weights @ inst.anchors / inst.weights.sum()
    if x0.shape != (inst.dim,):
        raise ConfigError(f"--x0 needs {inst.dim} coordinates")

    def objective(x):
        return cp.fw_objective(inst, x)

    if m.algorithm == "weiszfeld":
        x, record, breakdown = cp.run_weiszfeld(inst, x0, m.max_iter, m.stop_tol or 1e-10)
        _write_csv(record, m.out_csv)
        if breakdown is not None:
            c = inst.anchors[breakdown]
            print(f"weiszfeld breakdown after {record.iterations} iterations at anchor "
                  f"c_{breakdown + 1} = ({', '.join(f'{v:g}' for v in c)})")
            return EXIT_NUMERIC
        print(f"weiszfeld iterations={record.iterations} x={_fmt(x)} objective={objective(x):.10g}")
        return EXIT_OK

    m.validate()
    if m.algorithm == "sum":
        x, _, record = run_sum(cp.build_fw(inst), m.config(), x0, objective=objective)
    elif m.algorithm == "sum-swapped":
        res = run_sum_swapped(cp.fw_primal_proxes(inst), None, m.config(), x0,
                              objective=objective)
        x, record = res.x, res.log
    else:
        raise ConfigError(f"algorithm {m.algorithm!r} is not available for fw")
    _write_csv(record, m.out_csv)
    print(f"algorithm={m.algorithm} iterations={record.iterations} x={_fmt(x)} "
          f"objective={objective(x):.10g}")
    return EXIT_OK


def _fmt(x):
    return "(" + ", ".join(f"{v:.6f}" for v in x) + ")"


def cmd_norm(args):
    if args.operator == "blur":
        K = GaussianBlur(args.height, args.width, BlurSpec(args.kernel_size, args.blur_std))
    elif args.operator == "identity":
        K = IdentityMap(args.dim)
    else:
        if args.matrix is None:
            raise ConfigError("--matrix FILE is required for --operator matrix")
        K = load_dense_matrix(args.matrix)
    est = estimate_norm(K, tol=args.tol, max_iter=args.iters, seed=args.seed)
    print(f"estimate={est.value:.12g} estimate^2={est.value ** 2:.12g} "
          f"iterations={est.iterations} converged={est.converged}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="pdsplit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_flags(p, iters):
        p.add_argument("--sigma", type=float)
        p.add_argument("--tau", type=float)
        p.add_argument("--iters", type=int, default=iters)
        p.add_argument("--tol", type=float, default=0.0)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-csv", type=Path)

    d = sub.add_parser("deblur", help="l1-regularized deblurring")
    run_flags(d, 150)
    d.add_argument("--problem", choices=("p2", "p3"), default="p2")
    d.add_argument("--algorithm", choices=("pd", "ahu", "skew", "sum"))
    d.add_argument("--lambda", dest="lam", type=float, default=2e-6)
    d.add_argument("--input", type=Path, help="PGM image (default: synthetic blobs)")
    d.add_argument("--width", type=int, default=64)
    d.add_argument("--height", type=int, default=64)
    d.add_argument("--blobs", type=int, default=12)
    d.add_argument("--kernel-size", type=int, default=9)
    d.add_argument("--blur-std", type=float, default=4.0)
    d.add_argument("--noise-std", type=float, default=1e-3)
    d.add_argument("--out-image", type=Path)

    f = sub.add_parser("fw", help="Fermat-Weber problem")
    run_flags(f, 1000)
    f.add_argument("--instance", default="39", help="39, 40 or a path to an instance file")
    f.add_argument("--algorithm", choices=("sum", "sum-swapped", "weiszfeld"), default="sum")
    f.add_argument("--x0", type=_parse_point)

    n = sub.add_parser("norm", help="estimate an operator norm")
    n.add_argument("--operator", choices=("blur", "identity", "matrix"), default="blur")
    n.add_argument("--matrix", type=Path)
    n.add_argument("--dim", type=int, default=5)
    n.add_argument("--width", type=int, default=64)
    n.add_argument("--height", type=int, default=64)
    n.add_argument("--kernel-size", type=int, default=9)
    n.add_argument("--blur-std", type=float, default=4.0)
    n.add_argument("--tol", type=float, default=1e-10)
    n.add_argument("--iters", type=int, default=1000)
    n.add_argument("--seed", type=int, default=0)
    return parser


def _manifest(args):
    if args.command == "deblur":
        problem = args.problem
        algorithm = args.algorithm or ("pd" if problem == "p2" else "sum")
        if problem == "p3" and algorithm != "sum":
            raise ConfigError("p3 is solved with --algorithm sum")
        if problem == "p2" and algorithm == "sum":
            raise ConfigError("p2 is solved with pd, ahu or skew")
        options = dict(lam=args.lam, input=args.input, width=args.width, height=args.height,
                       blobs=args.blobs, kernel_size=args.kernel_size,
                       blur_std=args.blur_std, noise_std=args.noise_std)
    else:
        problem = args.instance
        algorithm = args.algorithm
        options = dict(x0=args.x0)
    default = DEFAULT_STEPS.get(problem, (None, None))
    sigma = args.sigma if args.sigma is not None else default[0]
    tau = args.tau if args.tau is not None else default[1]
    if algorithm != "weiszfeld" and (sigma is None or tau is None):
        raise ConfigError("--sigma and --tau are required for this problem")
    return RunManifest(
        algorithm=algorithm, problem=problem, sigma=sigma or 1.0, tau=tau or 1.0,
        max_iter=args.iters, stop_tol=args.tol, seed=args.seed, out_csv=args.out_csv,
        out_image=getattr(args, "out_image", None), options=options,
    )


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        if args.command == "norm":
            return cmd_norm(args)
        manifest = _manifest(args)
        log.info("manifest: %s", manifest)
        if args.command == "deblur":
            return cmd_deblur(manifest)
        return cmd_fw(manifest)
    except (ConfigError, StepSizeError) as exc:
        print(f"pdsplit: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, IOError) as exc:
        print(f"pdsplit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"pdsplit: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InnerSolveError, FloatingPointError) as exc:
        print(f"pdsplit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
