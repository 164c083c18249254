"""Command-line interface: ``ngmn {train,eval,predict,verify,sweep,ablate}``.

Every flag can also come from ``--config FILE`` holding ``key = value`` lines
(keys are flag names without the leading dashes; ``#`` starts a comment).
Flags given on the command line win over the file. ``--seed`` falls back to
the ``NGMN_SEED`` environment variable, then to 0.

Exit codes: 0 success, 1 data/model/verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .activations import KINDS, Activation
from .data_eval import Dataset, accuracy, load_csv, load_idx, macro_f1, normalize_rows, split
from .errors import InvalidConfigError, InvalidInputError, ModelFormatError, NgmnError, ParseError, ShapeError
from .experiments import ABLATION_VARIANTS, LAMBDA_GRID, ablation, lambda_sweep, mean_accuracy
from .manifold_net import ModelConfig, load_model, predict, save_model, train
from .ridge_net import TARGET_SPACES


class UsageError(Exception):
    pass


def _widths(text: str) -> tuple[int, ...]:
    try:
        widths = tuple(int(w) for w in text.split(",") if w.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"widths must be comma-separated integers, got {text!r}")
    if not widths:
        raise argparse.ArgumentTypeError("at least one width is required")
    return widths


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _gamma(text: str) -> float | None:
    if text.lower() in ("auto", "self", "none"):
        return None
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"gamma must be a number or 'auto', got {text!r}")


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="CSV file, one sample per row")
    p.add_argument("--label-col", default="0", help="label column index or header name (default 0)")
    p.add_argument("--images", help="IDX image file (alternative to --data)")
    p.add_argument("--labels", help="IDX label file, paired with --images")
    p.add_argument("--normalize", action="store_true", help="min-max scale every feature row to [0, 1]")


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--widths", type=_widths, default=(10, 8), help="hidden widths, e.g. 10,8")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--activation", choices=KINDS, default="sigmoid")
    p.add_argument("--slope", type=float, default=0.1, help="leaky ReLU negative slope")
    p.add_argument("--eps", type=float, default=1e-6, help="clip distance before inverting")
    p.add_argument("--gamma", type=_gamma, default=None, help="weight trade-off, or 'auto' (default)")
    p.add_argument("--uniform-alpha", action="store_true", help="freeze the head's sample weights")
    p.add_argument("--inner-iters", type=int, default=5)
    p.add_argument("--max-iter", type=int, default=30)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--target-space", choices=TARGET_SPACES, default="inverse")
    p.add_argument("--top-target", choices=("slack", "labels"), default="slack")
    p.add_argument("--no-center-backward", action="store_true",
                   help="use the uncentered back-substitution")
    p.add_argument("--top-down-only", action="store_true",
                   help="skip the bottom-up refit after each top-down sweep")
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ngmn", description=__doc__.split("\n")[0])
    parser.add_argument("--config", help="file of 'key = value' lines mirroring the flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model and write it with its loss trace")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--trace", help="trace CSV (default: <out>.trace.csv)")

    p = sub.add_parser("eval", help="accuracy and macro F1 of a model on labelled data")
    _add_data_args(p)
    p.add_argument("--model", required=True)

    p = sub.add_parser("predict", help="print one class index per sample")
    _add_data_args(p)
    p.add_argument("--model", required=True)

    sub.add_parser("verify", help="run the closed-form certification suite")

    for name, text in (("sweep", "train across a lambda grid"), ("ablate", "run the ablation ladder")):
        p = sub.add_parser(name, help=text)
        _add_data_args(p)
        _add_model_args(p)
        p.add_argument("--train-fraction", type=float, default=0.8)
        p.add_argument("--split-seed", type=int, default=0)
        p.add_argument("--train-stats", action="store_true",
                       help="with --normalize, take min/max from the training part only")
        if name == "sweep":
            p.add_argument("--lambdas", type=_floats, default=LAMBDA_GRID)
        else:
            p.add_argument("--seeds", type=_ints, default=(0, 1, 2, 3, 4))
    return parser


def _config_tokens(parser: argparse.ArgumentParser, command: str, path: str) -> list[str]:
    """Turn ``key = value`` lines into flag tokens for ``command``."""
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    actions = {}
    for action in sub.choices[command]._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                actions[opt[2:]] = action
    tokens: list[str] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("_", "-")
            if key == "lambda" or key == "lam":
                key = "lambda"
            if key not in actions:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r} for '{command}'")
            if isinstance(actions[key], argparse._StoreTrueAction):
                if value.lower() in ("1", "true", "yes", "on"):
                    tokens.append(f"--{key}")
                elif value.lower() not in ("0", "false", "no", "off"):
                    raise UsageError(f"{path}:{lineno}: {key} expects true/false")
            else:
                tokens.extend([f"--{key}", value])
    return tokens


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if known.config:
        cmd_at = next((i for i, tok in enumerate(rest) if tok in COMMANDS), None)
        if cmd_at is None:
            parser.parse_args(rest)  # reports the missing command, exits with 2
        try:
            tokens = _config_tokens(parser, rest[cmd_at], known.config)
        except OSError as exc:
            raise UsageError(f"cannot read config {known.config}: {exc}") from exc
        # file values go first so flags given explicitly override them
        rest = rest[: cmd_at + 1] + tokens + rest[cmd_at + 1:]
    args = parser.parse_args(rest)
    if getattr(args, "seed", None) is None and hasattr(args, "seed"):
        env = os.environ.get("NGMN_SEED")
        try:
            args.seed = int(env) if env not in (None, "") else 0
        except ValueError:
            raise UsageError(f"NGMN_SEED must be an integer, got {env!r}")
    return args


def _load_data(args) -> Dataset:
    if args.images or args.labels:
        if not (args.images and args.labels):
            raise UsageError("--images and --labels must be given together")
        ds = load_idx(args.images, args.labels)
    elif args.data:
        ds = load_csv(args.data, args.label_col)
    else:
        raise UsageError("no input data: pass --data or --images/--labels")
    return ds


def _model_config(args) -> ModelConfig:
    return ModelConfig(
        widths=args.widths,
        lam=args.lam,
        activation=Activation(args.activation, args.slope, args.eps),
        gamma=args.gamma,
        adaptive=not args.uniform_alpha,
        inner_iters=args.inner_iters,
        max_iter=args.max_iter,
        tol=args.tol,
        target_space=args.target_space,
        top_target=args.top_target,
        center_backward=not args.no_center_backward,
        bottom_up_refit=not args.top_down_only,
        seed=args.seed,
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_train(args) -> int:
    config = _model_config(args)
    ds = _load_data(args)
    if args.normalize:
        ds = normalize_rows(ds)
    model = train(ds.X, ds.Y_onehot, config)
    save_model(model, args.out)
    trace_path = args.trace or args.out + ".trace.csv"
    with open(trace_path, "w") as fh:
        fh.write("iter,loss,train_acc\n")
        for i, (loss, acc) in enumerate(model.trace, 1):
            fh.write(f"{i},{_fmt(loss)},{_fmt(acc)}\n")
    print(f"iterations,{len(model.trace)}")
    print(f"train_acc,{_fmt(model.trace[-1][1])}")
    print(f"model,{args.out}")
    print(f"trace,{trace_path}")
    return 0


def _load_model_and_data(args):
    model = load_model(args.model)
    ds = _load_data(args)
    if args.normalize:
        ds = normalize_rows(ds)
    if ds.d != model.n_features:
        raise ShapeError(
            f"{args.data or args.images}: {ds.d} features, model {args.model} expects {model.n_features}"
        )
    return model, ds


def cmd_eval(args) -> int:
    model, ds = _load_model_and_data(args)
    pred = predict(model, ds.X)
    c = max(model.n_classes, ds.c)
    print(f"accuracy,{_fmt(accuracy(pred, ds.labels))}")
    print(f"macro_f1,{_fmt(macro_f1(pred, ds.labels, c))}")
    return 0


def cmd_predict(args) -> int:
    model, ds = _load_model_and_data(args)
    sys.stdout.write("".join(f"{int(k)}\n" for k in predict(model, ds.X)))
    return 0


def cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all()
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"summary,{len(results) - len(failed)}/{len(results)} passed")
    return 1 if failed else 0


def _split_data(args) -> tuple[Dataset, Dataset]:
    ds = _load_data(args)
    if args.normalize and not args.train_stats:
        ds = normalize_rows(ds)
    tr, te = split(ds, args.train_fraction, args.split_seed)
    if args.normalize and args.train_stats:
        te = normalize_rows(te, reference=tr)
        tr = normalize_rows(tr)
    return tr, te


def cmd_sweep(args) -> int:
    config = _model_config(args)
    tr, te = _split_data(args)
    print("lambda,iterations,train_acc,test_acc,test_macro_f1")
    for r in lambda_sweep(tr, te, config, args.lambdas):
        print(f"{r.lam:g},{r.iterations},{_fmt(r.train_acc)},{_fmt(r.test_acc)},{_fmt(r.test_f1)}")
    return 0


def cmd_ablate(args) -> int:
    config = _model_config(args)
    tr, te = _split_data(args)
    results = ablation(tr, te, config, args.seeds)
    print("variant,seed,iterations,train_acc,test_acc,test_macro_f1")
    for r in results:
        print(f"{r.name},{r.seed},{r.iterations},{_fmt(r.train_acc)},{_fmt(r.test_acc)},{_fmt(r.test_f1)}")
    means = mean_accuracy(results)
    for name in ABLATION_VARIANTS:
        print(f"{name},mean,,,{_fmt(means[name])},")
    return 0


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "ablate": cmd_ablate,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"ngmn: error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ngmn: error: {exc}", file=sys.stderr)
        return 2
    except InvalidConfigError as exc:
        print(f"ngmn: error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, ModelFormatError, ShapeError, InvalidInputError, NgmnError, OSError) as exc:
        print(f"ngmn: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
