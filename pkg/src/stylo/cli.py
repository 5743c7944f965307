"""Command-line entry point: one subcommand per pipeline stage.

Staged runs share a run directory (``--out``)::

    stylo ingest --corpus corpus.jsonl --out run/
    stylo filter --out run/ --preset frequent-6
    stylo split  --out run/ --preset frequent-6 --seed 7
    stylo train  --out run/ --preset frequent-6 --seed 7 --classifier svm
    stylo eval   --out run/ --preset frequent-6 --seed 7 --classifier svm

``stylo eval --corpus corpus.jsonl ...`` runs all stages in one go and writes
the same report.  Exit status: 0 success, 1 validation error, 2 internal error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from ._util import sha256_file
from .analyze import feature_group_importance, gram_zscores, pos_pattern_frequency, write_gram_tsv
from .cluster import (
    affinity_propagation,
    cluster_report,
    confusion_to_similarity,
    read_confusion_csv,
    write_cluster_json,
)
from .corpus import Comment, Corpus, DatasetSplit, load_corpus, write_corpus
from .errors import StageError, ValidationError
from .experiments import (
    PRESETS,
    ExperimentResult,
    ExperimentSpec,
    Fitted,
    evaluate,
    fit,
    fluency_bands,
    ingest,
    learning_curve,
    make_split,
    preset,
    run_experiment,
    select,
    write_curve_csv,
)
from .features import FeatureLayout, Standardizer, write_feature_csv, assemble_matrix
from .learn import Hyperparams, LinearModel
from .ngram import ORDERS, STREAMS, ModelBank
from .synthetic import generate_synthetic
from .textproc import TAGGERS, TokenizedComment

log = logging.getLogger("stylo")

PREPARED = "prepared.jsonl"
SELECTED = "selected.jsonl"
SPLIT = "split.json"
BANK = "bank.json"
STANDARDIZER = "standardizer.json"
MODEL = "model.json"
FIT_INFO = "fit.json"
REPORT = "report.json"
CONFUSION = "confusion.csv"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


# -- artifact I/O -----------------------------------------------------------


def write_prepared(path, corpus: Corpus, prepared: dict[str, TokenizedComment], comments=None):
    comments = corpus.comments if comments is None else comments
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format": "stylo-corpus", "version": 1}) + "\n")
        for p in corpus.profiles:
            fh.write(json.dumps(p.to_record(), ensure_ascii=False, sort_keys=True) + "\n")
        for c in comments:
            rec = c.to_record()
            n = prepared[c.comment_id]
            rec["norm"] = {
                "tokens": list(n.tokens),
                "pos": list(n.pos_tags),
                "sentences": n.sentence_count,
                "text": n.normalized_text,
            }
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def read_prepared(path) -> tuple[Corpus, dict[str, TokenizedComment]]:
    corpus = load_corpus(path)
    if corpus.rejects:
        line, why = corpus.rejects[0]
        raise ValidationError(f"{path}: line {line}: {why}")
    prepared = {}
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            rec = json.loads(line)
            if "norm" in rec:
                n = rec["norm"]
                prepared[rec["id"]] = TokenizedComment(tuple(n["tokens"]), tuple(n["pos"]), n["sentences"], n["text"])
    missing = [c.comment_id for c in corpus.comments if c.comment_id not in prepared]
    if missing:
        raise ValidationError(f"{path}: comment {missing[0]} has no normalized form; run ingest")
    return corpus, prepared


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"missing artifact {path}") from None


def _require(path: Path) -> Path:
    if not path.is_file():
        raise ValidationError(f"missing file {path}")
    return path


def write_manifest(out: Path, stage: str, config: dict, inputs, outputs, started: float, timings=None):
    manifest = {
        "stage": stage,
        "stylo_version": __version__,
        "config": config,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outputs},
        "started": datetime.datetime.fromtimestamp(started, datetime.timezone.utc).isoformat(),
        "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "elapsed_seconds": time.time() - started,
        "timings": timings or {},
    }
    name = out / f"manifest-{stage}.json" if out.is_dir() else out.with_name(out.name + ".manifest.json")
    _write_json(name, manifest)


# -- config resolution ------------------------------------------------------

_HP_FLAGS = ("learning_rate", "decay", "l2", "epochs", "batch_size")


def resolve_spec(args) -> ExperimentSpec:
    """Preset + flags, then ``--config`` JSON on top."""
    overrides = _read_json(args.config) if getattr(args, "config", None) else {}
    if not isinstance(overrides, dict):
        raise ValidationError("--config must hold a JSON object")
    name = overrides.pop("preset", None) or args.preset
    if "mapping" in overrides:
        mapping = overrides.pop("mapping")
        cats = overrides.pop("categories", None) or list(dict.fromkeys(mapping.values()))
        spec = ExperimentSpec(overrides.pop("name", name or "custom"), tuple(cats), mapping)
    else:
        if name is None:
            raise ValidationError(f"no preset given; available: {', '.join(PRESETS)}")
        spec = preset(name)
    hp = {k: getattr(args, k) for k in _HP_FLAGS if getattr(args, k, None) is not None}
    hp.update(overrides.pop("hyperparams", {}))
    fields = {"seed": args.seed, "classifier": args.classifier, "tagger": args.tagger}
    if getattr(args, "band", None):
        fields["band"] = args.band
    if getattr(args, "min_tokens", None) is not None:
        fields["min_tokens"] = args.min_tokens
    if getattr(args, "l2_grid", None):
        fields["l2_grid"] = tuple(float(x) for x in args.l2_grid.split(","))
    fields.update(overrides)
    if "l2_grid" in fields:
        fields["l2_grid"] = tuple(fields["l2_grid"])
    unknown = set(fields) - set(ExperimentSpec.__dataclass_fields__)
    if unknown:
        raise ValidationError(f"unknown config keys {sorted(unknown)}")
    try:
        hyper = spec.hyperparams.replace(**hp)
    except TypeError as exc:
        raise ValidationError(f"bad hyperparameter override: {exc}") from None
    return spec.with_(hyperparams=hyper, **fields)


def _load_input_corpus(path) -> Corpus:
    corpus = load_corpus(_require(Path(path)))
    for line, why in corpus.rejects:
        log.warning("%s: line %d rejected: %s", path, line, why)
    return corpus


# -- staged artifacts -------------------------------------------------------


def _load_selected(out: Path) -> list[Comment]:
    return load_corpus(_require(out / SELECTED)).comments


def _load_split(out: Path, selected: list[Comment]) -> DatasetSplit:
    doc = _read_json(out / SPLIT)
    by_id = {c.comment_id: c for c in selected}
    try:
        parts = {k: [by_id[i] for i in ids] for k, ids in doc["ids"].items()}
    except KeyError as exc:
        raise ValidationError(f"split references unknown comment {exc}") from None
    return DatasetSplit(parts["train"], parts["dev"], parts["test"], doc["seed"], doc["category_counts"])


def _load_fitted(out: Path) -> Fitted:
    bank = ModelBank.load(_require(out / BANK))
    model = LinearModel.from_json(_require(out / MODEL).read_text())
    std = Standardizer.from_json(_require(out / STANDARDIZER).read_text())
    info = _read_json(out / FIT_INFO)
    layout = FeatureLayout(bank.category_order, tuple(info["stopwords"]))
    if model.layout_checksum != layout.checksum():
        raise ValidationError("model.json does not match the bank's feature layout")
    return Fitted(bank, layout, std, model, info["dev_accuracy"], tuple(map(tuple, info["selection"])), info["train_accuracy"])


def _check_categories(spec: ExperimentSpec, categories):
    if tuple(categories) != spec.categories:
        raise ValidationError(f"artifacts were built for categories {list(categories)}, not {list(spec.categories)}")


# -- commands ---------------------------------------------------------------


def cmd_generate(args):
    started = time.time()
    profile = None
    if args.fluency_profile:
        profile = {}
        for item in args.fluency_profile.split(","):
            band, _, rate = item.partition("=")
            profile[band.strip()] = float(rate)
    profiles, comments = generate_synthetic(
        args.categories, args.per_category, args.marker_strength, profile, args.seed, args.users_per_category
    )
    out = Path(args.out)
    write_corpus(out, profiles, comments)
    write_manifest(out, "generate", vars_of(args), [], [out], started)
    print(f"generate: wrote {len(comments)} comments and {len(profiles)} profiles to {out}")


def cmd_ingest(args):
    started = time.time()
    out = _outdir(args)
    corpus = _load_input_corpus(args.corpus)
    prepared = ingest(corpus.comments, args.tagger)
    write_prepared(out / PREPARED, corpus, prepared)
    write_manifest(out, "ingest", vars_of(args), [args.corpus], [out / PREPARED], started)
    print(f"ingest: {len(corpus.comments)} comments, {len(corpus.profiles)} profiles, {len(corpus.rejects)} rejected")


def cmd_filter(args):
    started = time.time()
    out = _outdir(args)
    spec = resolve_spec(args)
    corpus, prepared = read_prepared(_require(out / PREPARED))
    selected = select(spec, corpus, prepared)
    write_prepared(out / SELECTED, Corpus(), prepared, comments=selected)
    write_manifest(out, "filter", _config(args, spec), [out / PREPARED], [out / SELECTED], started)
    print(f"filter: {len(selected)} of {len(corpus.comments)} comments selected for {spec.name}")


def cmd_split(args):
    started = time.time()
    out = _outdir(args)
    spec = resolve_spec(args)
    selected = _load_selected(out)
    split = make_split(spec, selected)
    _write_json(out / SPLIT, {"seed": split.seed, "ids": split.ids(), "category_counts": split.category_counts})
    write_manifest(out, "split", _config(args, spec), [out / SELECTED], [out / SPLIT], started)
    print(f"split: train {len(split.train)}, dev {len(split.dev)}, test {len(split.test)}")


def cmd_train(args):
    started = time.time()
    out = _outdir(args)
    spec = resolve_spec(args)
    _, prepared = read_prepared(_require(out / SELECTED))
    split = _load_split(out, _load_selected(out))
    fitted = fit(spec, split, prepared)
    fitted.bank.save(out / BANK)
    (out / STANDARDIZER).write_text(fitted.standardizer.to_json())
    (out / MODEL).write_text(fitted.model.to_json())
    _write_json(
        out / FIT_INFO,
        {
            "stopwords": list(fitted.layout.stopwords),
            "dev_accuracy": fitted.dev_accuracy,
            "train_accuracy": fitted.train_accuracy,
            "selection": [list(x) for x in fitted.selection],
        },
    )
    outputs = [out / BANK, out / STANDARDIZER, out / MODEL, out / FIT_INFO]
    if args.export_features:
        X, layout = assemble_matrix([prepared[c.comment_id] for c in split.train], fitted.bank)
        path = out / "features-train.csv"
        write_feature_csv(path, X, layout, ids=[c.comment_id for c in split.train], labels=[c.label for c in split.train])
        outputs.append(path)
    write_manifest(out, "train", _config(args, spec), [out / SELECTED, out / SPLIT], outputs, started)
    print(f"train: {spec.classifier} on {len(split.train)} comments, dev accuracy {fitted.dev_accuracy:.4f}")


def _emit_report(out: Path, result: ExperimentResult, args, inputs, started):
    (out / REPORT).write_text(result.report_json())
    result.confusion.write_csv(out / CONFUSION)
    write_manifest(out, "eval", _config(args, result.spec), inputs, [out / REPORT, out / CONFUSION], started, result.timings)
    print(
        f"eval: {result.spec.name} {result.spec.classifier} test accuracy {result.accuracy:.4f} "
        f"(baseline {result.baseline:.4f})"
    )


def cmd_eval(args):
    started = time.time()
    out = _outdir(args)
    spec = resolve_spec(args)
    if args.corpus:
        result = run_experiment(spec, _load_input_corpus(args.corpus))
        _emit_report(out, result, args, [args.corpus], started)
        return
    _, prepared = read_prepared(_require(out / SELECTED))
    selected = _load_selected(out)
    split = _load_split(out, selected)
    fitted = _load_fitted(out)
    _check_categories(spec, fitted.bank.category_order)
    acc, cm = evaluate(spec, fitted, split, prepared)
    result = ExperimentResult(spec, acc, cm, fitted, split, len(selected))
    _emit_report(out, result, args, [out / SELECTED, out / SPLIT, out / BANK, out / MODEL], started)


def cmd_bands(args):
    started = time.time()
    out = _outdir(args)
    spec = resolve_spec(args)
    errors = fluency_bands(spec, _load_input_corpus(args.corpus))
    _write_json(out / "bands.json", {"spec": spec.to_dict(), "error_rate": errors})
    write_manifest(out, "bands", _config(args, spec), [args.corpus], [out / "bands.json"], started)
    print("bands: " + ", ".join(f"error({b}) = {e:.4f}" for b, e in errors.items()))


def cmd_curve(args):
    started = time.time()
    out = _outdir(args)
    spec = resolve_spec(args)
    try:
        sizes = [float(s) for s in args.sizes.split(",")]
    except ValueError:
        raise ValidationError(f"--sizes must be comma-separated numbers, got {args.sizes!r}") from None
    points = learning_curve(spec, _load_input_corpus(args.corpus), sizes)
    write_curve_csv(out / "curve.csv", points)
    write_manifest(out, "curve", _config(args, spec), [args.corpus], [out / "curve.csv"], started)
    print("curve: " + ", ".join(f"{p.size:g} -> {p.test_accuracy:.4f}" for p in points))


def cmd_analyze(args):
    started = time.time()
    out = _outdir(args)
    fitted = _load_fitted(out)
    bank = fitted.bank
    scores = []
    streams = [args.stream] if args.stream else list(STREAMS)
    orders = [args.order] if args.order else list(ORDERS)
    for cat in bank.category_order:
        for stream in streams:
            for n in orders:
                scores.extend(gram_zscores(bank, cat, stream, n, args.top_k, args.min_support))
    write_gram_tsv(out / "grams.tsv", scores)
    importance = feature_group_importance(fitted.model, fitted.layout)
    doc = {"feature_groups": [{"group": g, "importance": v} for g, v in importance]}
    if args.pattern:
        doc["pos_pattern"] = {
            "pattern": args.pattern,
            "percent": {cat: pos_pattern_frequency(bank, cat, args.pattern) for cat in bank.category_order},
        }
    _write_json(out / "analysis.json", doc)
    write_manifest(out, "analyze", vars_of(args), [out / BANK, out / MODEL], [out / "grams.tsv", out / "analysis.json"], started)
    print(f"analyze: {len(scores)} ranked grams; top feature group {importance[0][0]}")


def cmd_cluster(args):
    started = time.time()
    out = _outdir(args)
    categories, counts = read_confusion_csv(_require(Path(args.confusion)))
    sim = confusion_to_similarity(categories, counts, args.preference)
    result = affinity_propagation(sim, damping=args.damping, max_iter=args.max_iter)
    report = cluster_report(categories, result, sim.preference, args.damping)
    write_cluster_json(out / "clusters.json", report)
    write_manifest(out, "cluster", vars_of(args), [args.confusion], [out / "clusters.json"], started)
    print(f"cluster: {len(result.exemplars)} clusters, converged={result.converged}, iterations {result.iterations}")


# -- parser -----------------------------------------------------------------


def vars_of(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def _config(args, spec: ExperimentSpec) -> dict:
    return {"args": vars_of(args), "spec": spec.to_dict()}


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _experiment_flags(p, corpus_required=False):
    p.add_argument("--corpus", required=corpus_required, help="corpus JSON-lines file")
    p.add_argument("--preset", help=f"experiment preset: {', '.join(PRESETS)}")
    p.add_argument("--classifier", choices=("logreg", "svm"), default="logreg")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--band", help="restrict non-native users to a fluency band: 0-2, 3-5 or all")
    p.add_argument("--tagger", choices=TAGGERS, default="lexicon")
    p.add_argument("--min-tokens", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--decay", type=float)
    p.add_argument("--l2", type=float)
    p.add_argument("--l2-grid", dest="l2_grid", help="comma-separated l2 values chosen on the dev split")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--config", help="JSON file whose keys override the flags")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stylo", description="Native-language identification from writing style.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--version", action="version", version=f"stylo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a seeded synthetic corpus")
    p.add_argument("--out", required=True, help="corpus file to write")
    p.add_argument("--categories", type=int, default=2)
    p.add_argument("--per-category", type=int, default=1000)
    p.add_argument("--marker-strength", type=float, default=1.0)
    p.add_argument("--fluency-profile", help='marker rates by band, e.g. "0-2=0.8,3-5=0.3"')
    p.add_argument("--users-per-category", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("ingest", help="tokenize, tag and normalize a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tagger", choices=TAGGERS, default="lexicon")
    p.set_defaults(func=cmd_ingest)

    for name, func, helptext in (
        ("filter", cmd_filter, "admit users and comments for an experiment"),
        ("split", cmd_split, "balance and split the selected comments"),
        ("train", cmd_train, "build n-gram models and train the classifier"),
        ("eval", cmd_eval, "evaluate on the test split (one-shot with --corpus)"),
        ("bands", cmd_bands, "error rate per non-native fluency band"),
        ("curve", cmd_curve, "learning curve over training-set fractions"),
    ):
        p = sub.add_parser(name, help=helptext)
        _experiment_flags(p, corpus_required=name in ("bands", "curve"))
        p.add_argument("--out", required=True, help="run directory")
        if name == "train":
            p.add_argument("--export-features", action="store_true", help="also write features-train.csv")
        if name == "curve":
            p.add_argument("--sizes", default="0.1,0.3,1.0")
        p.set_defaults(func=func)

    p = sub.add_parser("analyze", help="z-scored grams and feature-group importance")
    p.add_argument("--out", required=True, help="run directory holding bank.json and model.json")
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--min-support", type=int, default=5)
    p.add_argument("--stream", choices=STREAMS)
    p.add_argument("--order", type=int, choices=ORDERS)
    p.add_argument("--pattern", help='POS 4-gram, e.g. "IN DT NN PRP"')
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("cluster", help="affinity propagation over a confusion matrix")
    p.add_argument("--confusion", required=True, help="confusion CSV written by eval")
    p.add_argument("--out", required=True)
    p.add_argument("--damping", type=float, default=0.5)
    p.add_argument("--preference", type=float)
    p.add_argument("--max-iter", type=int, default=200)
    p.set_defaults(func=cmd_cluster)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1 if isinstance(exc.cause, ValidationError) else 2
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
