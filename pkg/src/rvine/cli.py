"""Command-line interface: ``rvine {pit,fit,simulate,density,compare,simstudy}``.

Exit codes: 0 on success, 2 for invalid input, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import contextlib
import sys

import numpy as np
from scipy import stats

from . import io as rio
from .bicop import ALL_FAMILIES, Family
from .errors import ConvergenceError, RVineError
from .fit import fit_mle, information_criteria, vuong
from .select import SelectionOptions, sequential_select
from .study import SCENARIOS, TAU_SETTINGS, StudyConfig, run_study

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def pseudo_observations(data, ranks_only=False, min_obs=10):
    """Column-wise midranks divided by ``N + 1``.

    Raises
    ------
    ValueError
        For fewer than ``min_obs`` rows or a constant column.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] < min_obs:
        raise ValueError(f"at least {min_obs} observations are required")
    for j in range(data.shape[1]):
        if np.all(data[:, j] == data[0, j]):
            raise ValueError(f"column {j + 1} is constant")
    r = stats.rankdata(data, method="average", axis=0)
    return r if ranks_only else r / (data.shape[0] + 1.0)


def _families(text):
    if text is None or text.strip().lower() == "all":
        return ALL_FAMILIES
    return tuple(Family.parse(t.strip()) for t in text.split(",") if t.strip())


def _output(args):
    if getattr(args, "output", None):
        return open(args.output, "w", encoding="utf-8")
    return contextlib.nullcontext(sys.stdout)


def cmd_pit(args):
    header, data = rio.read_csv(args.input)
    out = pseudo_observations(data, ranks_only=args.ranks)
    with _output(args) as fh:
        rio.write_csv(fh, header, out, fmt="%.17g")
    return 0


def cmd_fit(args):
    header, data = rio.read_csv(args.data)
    if np.any((data < 0) | (data > 1)):
        raise ValueError("fit expects copula data in [0, 1]; run 'pit' first")
    opts = SelectionOptions(structure_kind=args.structure, families=_families(args.families),
                            use_indep_test=args.indep_test, alpha=args.alpha)
    seq = sequential_select(data, opts)
    model = seq.model
    lines = [f"variables: {', '.join(header)}",
             f"structure: {opts.structure_kind.value}",
             f"sequential log-likelihood: {seq.loglik:.4f}"]
    ll = seq.loglik
    if args.mle:
        report = fit_mle(model, data)
        model, ll = report.model, report.loglik_mle
        lines.append(f"joint log-likelihood: {report.loglik_mle:.4f} "
                     f"({report.iterations} iterations, converged={report.converged})")
    aic, bic = information_criteria(ll, model.n_params, data.shape[0])
    lines += [f"parameters: {model.n_params}", f"AIC: {aic:.4f}", f"BIC: {bic:.4f}", "copulas:"]
    for fam, count in sorted(model.family_counts().items()):
        lines.append(f"  {fam.short_name:<10s} {count}")
    if args.out:
        rio.save_model(model, args.out)
        lines.append(f"model written to {args.out}")
    else:
        lines.append(rio.dumps_model(model).rstrip())
    print("\n".join(lines))
    return 0


def cmd_simulate(args):
    model = rio.load_model(args.model)
    sample = model.simulate(args.count, seed=args.seed)
    header = [f"V{j + 1}" for j in range(model.n)]
    with _output(args) as fh:
        rio.write_csv(fh, header, sample)
    return 0


def cmd_density(args):
    model = rio.load_model(args.model)
    _, data = rio.read_csv(args.data)
    logd = model.log_density(data)
    values = logd if args.log else np.exp(logd)
    name = "log_density" if args.log else "density"
    with _output(args) as fh:
        fh.write(name + "\n")
        for v in values:
            fh.write("%.17g\n" % v)
    print(f"total log-likelihood: {float(np.sum(logd)):.6f}", file=sys.stderr)
    return 0


def cmd_compare(args):
    a = rio.load_model(args.model_a)
    b = rio.load_model(args.model_b)
    _, data = rio.read_csv(args.data)
    result = vuong(a, b, data, args.correction, args.alpha)
    print(f"statistic: {result.statistic:.6f}")
    print(f"p-value: {result.p_value:.6g}")
    print(f"correction: {result.correction.value}")
    print(f"favored: {result.favored.value}")
    return 0


def cmd_simstudy(args):
    config = StudyConfig(scenario=args.scenario, tau_setting=args.tau_setting, n_obs=args.n,
                         reps=args.reps, seed=args.seed, eval_size=args.eval_size,
                         joint_mle=args.mle,
                         common_random_numbers=not args.independent_draws)
    result = run_study(config, jobs=args.jobs)
    print(f"{'scenario':<11s} {'taus':<6s} {'N':>6s} {'reps':>5s} {'lower':>7s} {'general':>8s} {'upper':>7s}")
    lo, ge, up = result.means()
    print(f"{config.scenario:<11s} {config.tau_setting:<6s} {config.n_obs:>6d} "
          f"{len(result.reps):>5d} {lo:>7.3f} {ge:>8.3f} {up:>7.3f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="rvine", description="Regular-vine copula toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pit", help="rank-transform a numeric CSV to copula scale")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--ranks", action="store_true", help="write midranks instead of ranks/(N+1)")
    p.set_defaults(func=cmd_pit)

    p = sub.add_parser("fit", help="select and estimate a vine on copula data")
    p.add_argument("data")
    p.add_argument("--structure", choices=["rvine", "cvine", "dvine"], default="rvine")
    p.add_argument("--families", default="all",
                   help="comma-separated: gauss,t,gumbel,sgumbel,gumbel90,gumbel270,frank or 'all'")
    p.add_argument("--indep-test", action="store_true")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--mle", action="store_true", help="refine all parameters jointly")
    p.add_argument("--out", help="write the model file here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="draw samples from a model file")
    p.add_argument("model")
    p.add_argument("-n", "--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("density", help="evaluate a model's density on copula data")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--log", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("compare", help="Vuong test between two model files")
    p.add_argument("model_a")
    p.add_argument("model_b")
    p.add_argument("data")
    p.add_argument("--correction", choices=["none", "akaike", "schwarz"], default="none")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simstudy", help="run one row of the simulation study")
    p.add_argument("--scenario", choices=SCENARIOS, default="all-gauss")
    p.add_argument("--tau-setting", choices=TAU_SETTINGS, default="const")
    p.add_argument("-n", type=int, default=2000)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--eval-size", type=int, default=0, help="simulation size for comparisons (0: use -n)")
    p.add_argument("--independent-draws", action="store_true",
                   help="simulate true and fitted models from different random streams")
    p.add_argument("--mle", action="store_true", help="refine selected models by joint MLE")
    p.set_defaults(func=cmd_simstudy)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "count", 1) is not None and getattr(args, "count", 1) < 1:
        parser.error("count must be at least 1")
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (RVineError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
