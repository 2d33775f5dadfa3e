"""Command-line front end: ``proxlinf <subcommand> ...``."""

import argparse
import sys

import numpy as np

from . import datagen, evalbench, tinynn
from .features import FeatureTable, Filtered, make_features
from .prox import PROX_ALGORITHMS, prox_linf_dc


class CliError(Exception):
    pass


def _parse_values(text):
    try:
        return np.array([float(tok) for tok in text.replace(",", " ").split()])
    except ValueError as exc:
        raise CliError(f"cannot parse vector: {exc}") from None


def _write_lines(lines):
    sys.stdout.write("".join(line + "\n" for line in lines))


def cmd_prox(args):
    if (args.values is None) == (args.input is None):
        raise CliError("give exactly one of --values or --input")
    if args.values is not None:
        x = _parse_values(args.values)
    else:
        with open(args.input, encoding="ascii") as fh:
            x = _parse_values(fh.read())
    if args.algorithm == "dc":
        result = prox_linf_dc(x, args.alpha, seed=args.seed)
    else:
        result = PROX_ALGORITHMS[args.algorithm](x, args.alpha)
    _write_lines([format(result.tau, ".17g")] + [format(float(v), ".17g") for v in result.prox])


def cmd_gen(args):
    spec = datagen.DatasetSpec(
        count=args.count,
        mix=datagen.parse_mix(args.mix),
        length_range=(args.min_length, args.max_length),
        alpha_range=(args.alpha_min, args.alpha_max),
        seed=args.seed,
    )
    triples = datagen.generate(spec)
    datagen.save_raw(triples, args.out)
    print(f"wrote {len(triples)} triples to {args.out}", file=sys.stderr)


def cmd_featurize(args):
    triples = datagen.load_raw(args.input)
    records, labels, filtered = [], [], 0
    for t in triples:
        rec = make_features(t.x, t.alpha, t.tau, args.k)
        if isinstance(rec, Filtered):
            filtered += 1
            continue
        records.append(rec)
        labels.append(t.label)
    if not records:
        raise CliError("every record was filtered (||x||_1 <= alpha)")
    keep_labels = all(lab is not None for lab in labels)
    table = FeatureTable.from_records(records, labels if keep_labels else None)
    datagen.save_features(table, args.out)
    print(f"wrote {len(table)} feature rows to {args.out}; filtered {filtered}", file=sys.stderr)


def cmd_train(args):
    table = datagen.load_features(args.features)
    strata = None
    if not args.no_stratify and table.labels is not None and len(set(table.labels)) > 1:
        strata = table.labels
    train_idx, test_idx = datagen.split(len(table), args.test_fraction, strata, args.seed)
    config = tinynn.TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        beta1=args.beta1,
        beta2=args.beta2,
        epsilon=args.epsilon,
    )
    model, report = tinynn.train(table, config, train_idx, test_idx)
    tinynn.save_model(model, args.model_out)
    evalbench.emit_curves(report, args.curves_out)
    if args.split_out:
        with open(args.split_out, "w", encoding="ascii") as fh:
            fh.write("row,set\n")
            sides = np.zeros(len(table), dtype=bool)
            sides[test_idx] = True
            for i, is_test in enumerate(sides):
                fh.write(f"{i},{'test' if is_test else 'train'}\n")
    best = report.best_epoch - 1
    print(
        f"best epoch {report.best_epoch}: test mse tau_hat {report.test_mse_tau_hat[best]:.6g}, "
        f"tau {report.test_mse_tau[best]:.6g}",
        file=sys.stderr,
    )


def _load_model_for_k(path, k):
    model = tinynn.load_model(path)
    if model.n_features != k + 3:
        raise CliError(f"model {path} takes {model.n_features} features but --k {k} gives {k + 3}")
    return model


def cmd_eval(args):
    model = _load_model_for_k(args.model, args.k)
    triples = datagen.load_raw(args.raw)
    summary = evalbench.summarize_errors(triples, model, args.k)
    evalbench.write_error_summary(summary, args.out)
    print(
        f"n={summary.n} median delta_p {summary.dp_median:.6g}, median delta_f {summary.df_median:.6g}",
        file=sys.stderr,
    )


def cmd_saliency(args):
    model = tinynn.load_model(args.model)
    table = datagen.load_features(args.features)
    if model.n_features != table.k + 3:
        raise CliError(f"model takes {model.n_features} features, file has {table.k + 3}")
    evalbench.emit_saliency(tinynn.saliency(model, table.W), args.out)


def cmd_bench(args):
    model = _load_model_for_k(args.model, args.k)
    try:
        lengths = [int(tok) for tok in args.lengths.split(",") if tok.strip()]
    except ValueError:
        raise CliError(f"cannot parse --lengths {args.lengths!r}") from None
    rows = evalbench.bench(lengths, args.count, datagen.parse_mix(args.mix), model, args.k, args.seed)
    evalbench.write_timing(rows, args.out)
    for r in rows:
        print(f"m={r.m}: approx {r.approx_total:.3g}s exact {r.exact_total:.3g}s", file=sys.stderr)


def _fill_help(parser):
    # the defaults formatter skips flags without help text
    for action in parser._actions:
        if action.help is None:
            action.help = "required" if action.required else "(default: %(default)s)"


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="proxlinf", description=__doc__, formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prox", help="exact prox of one vector", formatter_class=fmt)
    p.add_argument("--alpha", type=float, required=True, help="weight of the l-inf norm")
    p.add_argument("--values", help="comma or space separated entries")
    p.add_argument("--input", help="file of whitespace or comma separated entries")
    p.add_argument("--algorithm", choices=sorted(PROX_ALGORITHMS), default="sort")
    p.add_argument("--seed", type=int, default=0, help="pivot seed for --algorithm dc")
    p.set_defaults(func=cmd_prox)

    p = sub.add_parser("gen", help="generate x-alpha-tau triples", formatter_class=fmt)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--mix", default="uniform=1", help="e.g. normal=0.5,uniform=0.5 or uniform:10=1")
    p.add_argument("--min-length", type=int, default=1000)
    p.add_argument("--max-length", type=int, default=2000)
    p.add_argument("--alpha-min", type=float, default=1.0)
    p.add_argument("--alpha-max", type=float, default=6.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("featurize", help="raw triples to moment features", formatter_class=fmt)
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, default=10, help="number of moments")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train the threshold network", formatter_class=fmt)
    p.add_argument("--features", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--curves-out", required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.999)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--no-stratify", action="store_true", help="plain random split even with several labels")
    p.add_argument("--split-out", help="optional CSV recording the train/test assignment")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="error summary of a model on raw triples", formatter_class=fmt)
    p.add_argument("--raw", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("saliency", help="mean absolute input gradients", formatter_class=fmt)
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_saliency)

    p = sub.add_parser("bench", help="time approximate vs exact prox", formatter_class=fmt)
    p.add_argument("--lengths", default="1000,100000", help="comma separated vector lengths")
    p.add_argument("--count", type=int, default=1000, help="vectors per length")
    p.add_argument("--mix", default="uniform=1")
    p.add_argument("--model", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)
    for p in sub.choices.values():
        _fill_help(p)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; keep the 0/1 convention
        return 0 if exc.code in (0, None) else 1
    try:
        args.func(args)
    except (CliError, ValueError, TypeError, OSError) as exc:
        print(f"proxlinf {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
