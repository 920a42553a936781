"""Command-line entry point: ``adjvt {simulate,estimate,experiment,report}``."""
import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .adjustment import AdjustmentMode
from .estimators import Algorithm, RunConfig, Termination, run_estimator, warmup
from .harness import (PRESETS, ExperimentConfig, InitRegime, preset, render_raw, render_report,
                      render_rows, parse_report_csv, run_experiment, stderr_progress, write_density)
from .mle import maximize_loglik
from .model import MixtureParams, SeedSpec, read_sample_csv, simulate_sample, write_sample_csv

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

# flags whose values are comma-separated numbers that may start with "-"
_VECTOR_FLAGS = {"--means", "--weights", "--init", "--init-weights"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _bool(text):
    v = text.strip().lower()
    if v in ("true", "1", "yes"):
        return True
    if v in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _join_vector_values(argv):
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VECTOR_FLAGS and i + 1 < len(argv) and argv[i + 1][:1] == "-" \
                and argv[i + 1][1:2].replace(".", "").isdigit():
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def _params(means, weights, what):
    if weights is None:
        return MixtureParams.equal_weights(means)
    if len(weights) != len(means):
        raise UsageError(f"{what}: {len(means)} means but {len(weights)} weights")
    try:
        return MixtureParams(means, weights)
    except ValueError as exc:
        raise UsageError(f"{what}: {exc}") from None


# -- config files ----------------------------------------------------------

def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return "[" + ", ".join(_toml_value(x) for x in v) + "]"


def dump_config(cfg):
    """Resolved experiment configuration as TOML; ``load_config`` reads it back."""
    sections = {
        "experiment": {
            "name": cfg.name,
            "replications": cfg.replications,
            "n": cfg.n,
            "seed": cfg.base_seed,
            "algorithms": [a.value for a in cfg.algorithms],
            "mle": cfg.mle,
            "regime": cfg.regime.value,
            "init_means": list(cfg.init_means),
        },
        "model": {"means": cfg.true_params.means.tolist(), "weights": cfg.true_params.weights.tolist()},
        "run": {
            "weights_known": cfg.run.weights_known,
            "step_tol": cfg.run.step_tol,
            "max_iter": cfg.run.max_iter,
            "mode": cfg.run.mode.value,
            "va2_multiple": cfg.run.va2_multiple,
            "vt_weight_correction": cfg.run.vt_weight_correction,
        },
    }
    if cfg.init_weights is not None:
        sections["experiment"]["init_weights"] = list(cfg.init_weights)
    lines = []
    for name, body in sections.items():
        lines.append(f"[{name}]")
        lines += [f"{k} = {_toml_value(v)}" for k, v in body.items()]
        lines.append("")
    return "\n".join(lines)


def load_config(text):
    data = tomllib.loads(text)
    exp = data.get("experiment", {})
    model = data.get("model", {})
    run = data.get("run", {})
    known = {"experiment": {"name", "replications", "n", "seed", "algorithms", "mle", "regime",
                            "init_means", "init_weights"},
             "model": {"means", "weights"},
             "run": {"weights_known", "step_tol", "max_iter", "mode", "va2_multiple",
                     "vt_weight_correction"}}
    for section, body in (("experiment", exp), ("model", model), ("run", run)):
        extra = set(body) - known[section]
        if extra:
            raise UsageError(f"config: unknown key(s) in [{section}]: {', '.join(sorted(extra))}")
    extra = set(data) - set(known)
    if extra:
        raise UsageError(f"config: unknown section(s): {', '.join(sorted(extra))}")
    base = ExperimentConfig()
    rc = RunConfig(
        weights_known=bool(run.get("weights_known", True)),
        step_tol=float(run.get("step_tol", 1e-3)),
        max_iter=int(run.get("max_iter", 1000)),
        mode=AdjustmentMode(run.get("mode", "exact")),
        va2_multiple=run.get("va2_multiple", "outer"),
        vt_weight_correction=bool(run.get("vt_weight_correction", True)),
    )
    truth = _params(model.get("means", base.true_params.means.tolist()),
                    model.get("weights", base.true_params.weights.tolist()), "config [model]")
    iw = exp.get("init_weights")
    return ExperimentConfig(
        name=exp.get("name", "custom"),
        true_params=truth,
        replications=int(exp.get("replications", base.replications)),
        n=int(exp.get("n", base.n)),
        base_seed=int(exp.get("seed", 0)),
        algorithms=tuple(Algorithm(a) for a in exp.get("algorithms", [a.value for a in base.algorithms])),
        mle=bool(exp.get("mle", True)),
        regime=InitRegime(exp.get("regime", "arbitrary")),
        init_means=tuple(exp.get("init_means", base.init_means)),
        init_weights=tuple(iw) if iw is not None else None,
        run=rc,
    )


# -- subcommands -----------------------------------------------------------

def _cmd_simulate(args):
    truth = _params(args.means, args.weights, "simulate")
    if args.n < 0:
        raise UsageError("simulate: --n must be nonnegative")
    print(f"# simulate means={truth.means.tolist()} weights={truth.weights.tolist()} "
          f"n={args.n} seed={args.seed} replication={args.replication}", file=sys.stderr)
    x = simulate_sample(truth, args.n, SeedSpec(args.seed, args.replication))
    if args.out:
        write_sample_csv(args.out, x)
    else:
        for v in x:
            print(f"{v:.17g}")
    if args.density:
        write_density(args.density, truth)
    return EXIT_OK


def _cmd_estimate(args):
    init = _params(args.init, args.weights, "estimate")
    if args.algorithm == "va2" and init.k != 2:
        raise UsageError(f"estimate: VA2 needs exactly 2 components, --init gives {init.k}")
    try:
        x = read_sample_csv(args.input)
    except OSError as exc:
        raise UsageError(f"estimate: cannot read {args.input}: {exc}") from None
    if x.size == 0:
        raise UsageError(f"estimate: {args.input} holds no observations")
    print(f"# estimate algorithm={args.algorithm} init={init.means.tolist()} "
          f"weights={init.weights.tolist()} weights_known={args.weights_known} tol={args.tol} "
          f"max_iter={args.max_iter} mode={args.mode} in={args.input}", file=sys.stderr)
    if args.algorithm == "mle":
        res = maximize_loglik(x, init, args.weights_known)
        _print_result("mle", res.params, None, res.converged)
        print(f"loglik = {res.loglik!r}")
        return EXIT_NUMERIC if (args.strict and not res.converged) else EXIT_OK
    cfg = RunConfig(step_tol=args.tol, max_iter=args.max_iter, weights_known=args.weights_known,
                    mode=AdjustmentMode(args.mode))
    warmup()
    res = run_estimator(Algorithm(args.algorithm), init, x, cfg)
    ok = res.terminated is Termination.CONVERGED
    _print_result(args.algorithm, res.final, res, ok)
    return EXIT_NUMERIC if (args.strict and not ok) else EXIT_OK


def _print_result(name, params, res, ok):
    print("[result]")
    print(f'algorithm = "{name}"')
    print(f"means = {_toml_value(params.means.tolist())}")
    print(f"weights = {_toml_value(params.weights.tolist())}")
    if res is not None:
        print(f"iterations = {res.iterations}")
        print(f'terminated = "{res.terminated.value}"')
        print(f"total_ms = {res.total_seconds * 1e3:.3f}")
        print(f"per_iter_ms = {res.per_iter_seconds * 1e3:.4f}")
    else:
        print(f"converged = {_toml_value(bool(ok))}")


def _cmd_experiment(args):
    if args.config:
        try:
            cfg = load_config(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"experiment: cannot read {args.config}: {exc}") from None
        except (tomllib.TOMLDecodeError, ValueError) as exc:
            raise UsageError(f"experiment: bad config {args.config}: {exc}") from None
    else:
        cfg = preset(args.preset)
    overrides = {}
    if args.replications is not None:
        overrides["replications"] = args.replications
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.n is not None:
        overrides["n"] = args.n
    if overrides:
        try:
            cfg = ExperimentConfig(**{**cfg.__dict__, **overrides})
        except ValueError as exc:
            raise UsageError(f"experiment: {exc}") from None
    echo = dump_config(cfg)
    sys.stderr.write(echo)
    workers = args.workers if args.workers else (os.cpu_count() or 1)
    report = run_experiment(cfg, workers=workers, progress=stderr_progress if args.progress else None)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.toml").write_text(echo, encoding="utf-8")
        (out / "report.csv").write_text(render_report(report, "csv", args.timing), encoding="utf-8")
        (out / "report.md").write_text(render_report(report, "markdown", args.timing), encoding="utf-8")
        if args.raw:
            (out / "raw.csv").write_text(render_raw(report, args.timing), encoding="utf-8")
    else:
        sys.stdout.write(render_report(report, args.format, args.timing))
    failed = sum(report.failures(c) for c in report.columns)
    return EXIT_NUMERIC if (args.strict and failed) else EXIT_OK


def _cmd_report(args):
    try:
        text = Path(args.input).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"report: cannot read {args.input}: {exc}") from None
    try:
        columns, rows = parse_report_csv(text)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"report: {args.input}: {exc}") from None
    out = render_rows(columns, rows, args.format)
    if args.out:
        Path(args.out).write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="adjvt", description="Viterbi training and its adjusted variants for Gaussian mixtures.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="draw a sample from a unit-variance mixture")
    s.add_argument("--means", type=_floats, required=True)
    s.add_argument("--weights", type=_floats)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--replication", type=int, default=0)
    s.add_argument("--out", help="CSV file (default: stdout)")
    s.add_argument("--density", help="also write a gnuplot density table of the model")
    s.set_defaults(func=_cmd_simulate)

    e = sub.add_parser("estimate", help="run one estimator on a sample file")
    e.add_argument("--algorithm", choices=[a.value for a in Algorithm] + ["mle"], required=True)
    e.add_argument("--init", type=_floats, required=True)
    e.add_argument("--weights", type=_floats, help="known weights, or starting weights")
    e.add_argument("--weights-known", type=_bool, default=True)
    e.add_argument("--tol", type=float, default=1e-3)
    e.add_argument("--max-iter", type=int, default=1000)
    e.add_argument("--mode", choices=[m.value for m in AdjustmentMode], default="exact")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--strict", action="store_true", help="exit 2 when the estimator does not converge")
    e.set_defaults(func=_cmd_estimate)

    x = sub.add_parser("experiment", help="replicated simulation study")
    src = x.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=PRESETS)
    src.add_argument("--config")
    x.add_argument("--replications", type=int)
    x.add_argument("--seed", type=int)
    x.add_argument("--n", type=int)
    x.add_argument("--workers", type=int, default=0, help="processes (default: CPU count)")
    x.add_argument("--out", help="directory for report.csv, report.md, config.toml")
    x.add_argument("--format", choices=["csv", "markdown"], default="markdown")
    x.add_argument("--timing", action="store_true", help="include wall-clock rows t and T")
    x.add_argument("--raw", action="store_true", help="also write the per-replication raw.csv")
    x.add_argument("--progress", action="store_true", help="replication counter on stderr")
    x.add_argument("--strict", action="store_true", help="exit 2 if any run failed to converge")
    x.set_defaults(func=_cmd_experiment)

    r = sub.add_parser("report", help="re-render a report CSV")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--format", choices=["csv", "markdown"], required=True)
    r.add_argument("--out")
    r.set_defaults(func=_cmd_report)
    return p


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(_join_vector_values(argv))
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
