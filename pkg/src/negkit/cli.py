"""Command-line pipeline driver.

Exit codes: 0 success, 1 usage or config problem, 2 data problem, 3 backend
problem. Every writing command drops a manifest next to its outputs with the
config hash, the seeds in effect, and content hashes of inputs and outputs;
manifests carry no timestamps so identical runs are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import annotation, chat, corpus, corpus_build, evaluation, judging, negation
from .config import PipelineConfig
from .corpus import Source, Variant
from .errors import BackendUnavailable, ConfigError, NegkitError, ProtocolError
from .reports import EvalReport

# Canned contrary then-events for the offline (mock) generation backend.
_MOCK_INVALID_TAILS = (
    "the moon turns to cheese",
    "gravity stops working",
    "to swim across the carpet",
    "the calendar runs backwards",
    "to eat the television",
    "winter arrives in a teacup",
    "to paint the ocean dry",
    "the sidewalk melts into song",
    "to sharpen a glass of water",
    "the ceiling grows potatoes",
    "to fold the sun in half",
    "shoes begin to argue",
)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the CLI contract reserves 2 for data
    def error(self, message: str):  # noqa: D102
        self.print_usage(sys.stderr)
        self.exit(1, f"error: usage: {message}\n")


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, config: PipelineConfig,
                    inputs: list[Path], outputs: list[Path], extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "config_hash": config.content_hash(),
        "seeds": config.seeds(),
        "inputs": {p.name: _sha256(p) for p in inputs},
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    if extra:
        manifest["extra"] = extra
    path = out_dir / f"{command}.manifest.json"
    path.write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    overrides = {}
    for name in ("output_dir",):
        value = getattr(args, name.replace("-", "_"), None)
        if value is not None:
            overrides[name] = value
    return config.with_overrides(**overrides) if overrides else config


def _make_client(config: PipelineConfig, *, script=None) -> chat.ChatClient:
    if config.backend == "http":
        backend = chat.HttpChatBackend(
            config.base_url, credential_env=config.credential_env
        )
    else:
        backend = chat.MockChatBackend(
            script if script is not None else chat.hashed_choice_script(_MOCK_INVALID_TAILS)
        )
    cache = chat.ResponseCache(config.cache_path)
    return chat.ChatClient(
        backend,
        model_name=config.model_name,
        retry_limit=config.retry_limit,
        cache=cache,
        max_in_flight=config.concurrency,
    )


def _judge_backend(config: PipelineConfig) -> judging.JudgeBackend:
    if config.backend == "mock":
        return judging.MockJudgeOracle()
    template = chat.load_prompt_asset("judge_validation")
    return judging.RemoteJudge(_make_client(config), template)


def _out_dir(config: PipelineConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- subcommands -------------------------------------------------------------


def cmd_ingest(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    inputs, outputs = [], []
    extra = {}
    jobs = []
    if config.atomic_path:
        jobs.append(("atomic", Path(config.atomic_path), corpus.load_atomic))
    if config.anion_path:
        jobs.append(("anion", Path(config.anion_path), corpus.load_anion))
    if not jobs:
        raise ConfigError("ingest needs atomic_path and/or anion_path in the config")
    for name, path, loader in jobs:
        report = corpus.IngestReport()
        triples = loader(path, config.split, report)
        triples, dropped = corpus.filter_underspecified(triples)
        out_path = out / f"{name}.orig.jsonl"
        corpus.write_jsonl(triples, out_path)
        inputs.append(path)
        outputs.append(out_path)
        extra[name] = {**report.to_dict(), "dropped_underspecified": dropped,
                       "written": len(triples)}
        print(f"{name}: {len(triples)} originals -> {out_path}")
    _write_manifest(out, "ingest", config, inputs, outputs, extra)
    return 0


def cmd_negate(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    in_paths = [Path(p) for p in args.inputs] or sorted(out.glob("*.orig.jsonl"))
    if not in_paths:
        raise ConfigError("negate: no input corpora (run ingest first or pass --in)")
    outputs = []
    extra = {}
    for in_path in in_paths:
        triples = corpus.read_jsonl(in_path)
        augmented, report = negation.augment_corpus(triples)
        out_path = out / in_path.name.replace(".orig.", ".augmented.")
        corpus.write_jsonl(augmented, out_path)
        outputs.append(out_path)
        extra[in_path.name] = report.to_dict()
        print(f"{in_path.name}: {report.originals} originals, "
              f"{report.variants} variants -> {out_path}")
    _write_manifest(out, "negate", config, in_paths, outputs, extra)
    return 0


def cmd_judge_build(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    corpora = {}
    inputs = []
    if config.atomic_path:
        path = out / "atomic.orig.jsonl"
        corpora[Source.ATOMIC] = corpus.read_jsonl(path)
        inputs.append(path)
    if config.anion_path:
        path = out / "anion.orig.jsonl"
        corpora[Source.ANION] = corpus.read_jsonl(path)
        inputs.append(path)
    if not corpora:
        raise ConfigError("judge-build: no ingested corpora found")
    spec = judging.JudgeTrainingSpec(
        sources=tuple(corpora),
        per_relation_per_label=config.per_relation_per_label,
        seed=config.seed_judge_sets,
    )
    client = _make_client(config)
    template = chat.load_prompt_asset("invalid_generation")
    items = judging.build_judge_training_set(corpora, spec, client, template)

    labeled_path = out / "judge_train.jsonl"
    corpus.write_labeled_jsonl(items, labeled_path)
    instruct_path = out / "judge_train.instruct.jsonl"
    _write_judge_instruct(items, instruct_path)
    _write_manifest(out, "judge-build", config, inputs, [labeled_path, instruct_path],
                    {"total": len(items), "per_relation_per_label": spec.per_relation_per_label})
    print(f"judge training set: {len(items)} triples -> {labeled_path}")
    return 0


def _write_judge_instruct(items, path: Path) -> None:
    from .verbalize import verbalize

    instruction = (
        "Determine whether the following if-then statement aligns with "
        "commonsense knowledge. Answer Valid, Invalid, or Ambiguous."
    )
    ordered = sorted(items, key=lambda item: item.triple.id)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for item in ordered:
            fh.write(corpus.dump_record({
                "instruction": instruction,
                "input": verbalize(item.triple).text,
                "output": item.label.value,
            }) + "\n")


def cmd_label(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    in_path = Path(args.input)
    triples = corpus.read_jsonl(in_path)
    backend = _judge_backend(config)
    labeled, quarantined = corpus_build.label_corpus(
        triples, backend, max_quarantined=config.quarantine_limit
    )
    out_path = Path(args.out) if args.out else out / in_path.name.replace(
        ".augmented.", ".labeled.")
    corpus.write_labeled_jsonl(labeled, out_path)
    outputs = [out_path]
    if quarantined:
        qpath = out_path.with_suffix(".quarantine.jsonl")
        with open(qpath, "w", encoding="utf-8", newline="\n") as fh:
            for record in quarantined:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        outputs.append(qpath)
    _write_manifest(out, f"label-{in_path.stem.split('.')[0]}", config, [in_path], outputs,
                    {"labeled": len(labeled), "quarantined": len(quarantined)})
    print(f"labeled {len(labeled)} triples ({len(quarantined)} quarantined) -> {out_path}")
    return 0


def cmd_stats(args) -> int:
    labeled = corpus.read_labeled_jsonl(args.input)
    stats = corpus_build.corpus_stats(labeled)
    if args.json:
        print(json.dumps(stats.to_dict(), ensure_ascii=False, indent=2, sort_keys=True))
    else:
        print(stats.to_table())
    if args.out:
        Path(args.out).write_text(
            json.dumps(stats.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    return 0


def cmd_build(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    inputs = []
    corpora: list[corpus_build.TrainingCorpus] = []
    pools: dict[str, dict] = {}

    def decisive_pool(labeled, dataset):
        pool = {corpus.ValidityLabel.VALID: [], corpus.ValidityLabel.INVALID: []}
        for item in labeled:
            if item.label in pool:
                pool[item.label].append(item)
        pools[dataset] = pool

    if args.atomic:
        path = Path(args.atomic)
        inputs.append(path)
        labeled = corpus.read_labeled_jsonl(path)
        groups = corpus_build.group_variants(labeled)
        selected = corpus_build.select_contrastive_atomic(groups)
        corpora.append(corpus_build.corpus_from_atomic_groups(selected))
        decisive_pool(labeled, "atomic")
        print(f"atomic: {len(selected)}/{len(groups)} groups selected")
    if args.anion:
        path = Path(args.anion)
        inputs.append(path)
        labeled = corpus.read_labeled_jsonl(path)
        groups = corpus_build.group_variants(labeled)
        selected = corpus_build.select_contrastive_anion(groups)
        corpora.append(corpus_build.corpus_from_anion_groups(selected))
        decisive_pool(labeled, "anion")
        print(f"anion: {len(selected)}/{len(groups)} pairs selected")
    if not corpora:
        raise ConfigError("build: pass --atomic and/or --anion labeled corpora")

    contrastive = corpus_build.merge_corpora(*corpora)
    if args.keep_variants:
        wanted = [Variant(v.strip().upper()) for v in args.keep_variants.split(",")]
        contrastive = corpus_build.subset_by_variant(contrastive, wanted)
    if args.subset:
        contrastive = corpus_build.sample_subset(contrastive, args.subset, config.seed_subset)
    if args.randomize:
        contrastive = corpus_build.randomize_labels(contrastive, config.seed_random_labels)

    contrastive_path = out / "contrastive.instruct.jsonl"
    n_contrastive = corpus_build.export_instruction_jsonl(
        contrastive, contrastive_path, config.instruction
    )
    outputs = [contrastive_path]

    extra = {"contrastive_size": n_contrastive, "groups": len(contrastive.groups)}
    if not args.no_baseline:
        targets = corpus_build.baseline_targets(contrastive)
        baseline = corpus_build.build_baseline(pools, targets, config.seed_baseline)
        baseline_path = out / "baseline.instruct.jsonl"
        n_baseline = corpus_build.export_instruction_jsonl(
            baseline, baseline_path, config.instruction
        )
        outputs.append(baseline_path)
        extra["baseline_size"] = n_baseline
        print(f"baseline: {n_baseline} records (contrastive: {n_contrastive})")
    _write_manifest(out, "build", config, inputs, outputs, extra)
    return 0


def cmd_bench_sample(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    in_path = Path(args.input)
    triples = corpus.read_jsonl(in_path)
    benchmark = annotation.sample_benchmark(
        triples, config.benchmark_per_relation, config.seed_benchmark
    )
    out_path = Path(args.out) if args.out else out / "benchmark.jsonl"
    corpus.write_jsonl(benchmark, out_path)
    _write_manifest(out, "bench-sample", config, [in_path], [out_path],
                    {"rows": len(benchmark), "per_relation": config.benchmark_per_relation})
    print(f"benchmark: {len(benchmark)} rows -> {out_path}")
    return 0


def cmd_annotate_serve(args) -> int:
    config = _load_config(args)
    benchmark = corpus.read_jsonl(args.benchmark) if args.benchmark else None
    store = annotation.AnnotationStore(
        config.data_dir, benchmark, adjudicator=config.adjudicator
    )
    from .service import serve

    print(f"serving {len(store.benchmark)} tasks on "
          f"http://{config.listen_host}:{args.port or config.listen_port}/")
    serve(store, host=config.listen_host, port=args.port or config.listen_port,
          ui_dir=config.ui_dir)
    return 0


_TASK_LABELS = {
    "rte": ("entailment", "not_entailment"),
    "nli": ("entailment", "contradiction", "neutral"),
}


def cmd_eval(args) -> int:
    predictions = evaluation.load_predictions(args.pred)
    if args.task == "condaqa":
        instances = evaluation.load_condaqa(args.gold)
        report = evaluation.score_condaqa(predictions, instances)
    elif args.task == "nevir":
        pairs = evaluation.load_nevir(args.gold)
        report = evaluation.score_nevir(predictions, pairs)
    elif args.task in _TASK_LABELS:
        instances = evaluation.load_classification(args.gold)
        report = evaluation.score_classification(
            predictions, instances, _TASK_LABELS[args.task], task=args.task
        )
    else:  # pragma: no cover - argparse choices guard this
        raise ConfigError(f"unknown task {args.task}")
    if args.baseline_pred:
        base_predictions = evaluation.load_predictions(args.baseline_pred)
        if args.task == "condaqa":
            base = evaluation.score_condaqa(base_predictions, instances)
        elif args.task == "nevir":
            base = evaluation.score_nevir(base_predictions, pairs)
        else:
            base = evaluation.score_classification(
                base_predictions, instances, _TASK_LABELS[args.task], task=args.task
            )
        report = report.compared_to(base)
    print(report.to_table())
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
    return 0


def _correctness(task: str, gold_path: str, pred_path: str) -> dict[str, bool]:
    predictions = evaluation.load_predictions(pred_path)
    if task == "condaqa":
        instances = evaluation.load_condaqa(gold_path)
        gold = {i.instance_id: i.gold for i in instances}
        return evaluation.correctness_from_predictions(predictions, gold)
    if task == "nevir":
        pairs = evaluation.load_nevir(gold_path)
        by_id = {p.instance_id: p.prediction for p in predictions}
        out = {}
        for pair in pairs:
            q1 = evaluation.normalize_label(by_id.get(f"{pair.pair_id}:q1", ""))
            q2 = evaluation.normalize_label(by_id.get(f"{pair.pair_id}:q2", ""))
            out[pair.pair_id] = q1 == "doc1" and q2 == "doc2"
        return out
    instances = evaluation.load_classification(gold_path)
    gold = {i.instance_id: i.gold for i in instances}
    return evaluation.correctness_from_predictions(
        predictions, gold, normalizer=evaluation.normalize_label
    )


def cmd_significance(args) -> int:
    correct_a = _correctness(args.task, args.gold, args.pred_a)
    correct_b = _correctness(args.task, args.gold, args.pred_b)
    result = evaluation.mcnemar(correct_a, correct_b)
    print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    if args.out:
        Path(args.out).write_text(
            json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    return 0


def cmd_judge_eval(args) -> int:
    gold = corpus.read_labeled_jsonl(args.gold)
    verdicts = []
    with open(args.pred, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            raw = record.get("raw_output", record.get("label", ""))
            verdicts.append(
                judging.JudgeVerdict(
                    triple_id=record["triple_id"],
                    label=judging.parse_verdict(str(raw)),
                    raw_output=str(raw),
                    backend_id=record.get("backend_id", "file"),
                )
            )
    report = judging.evaluate_judge(verdicts, gold)
    print(report.to_table())
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
    return 0


# --- wiring -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="negkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        p.add_argument("--config", help="pipeline config JSON")
        p.add_argument("--output-dir", dest="output_dir", help="override output dir")
        return p

    add("ingest", cmd_ingest, help="load source corpora into canonical JSONL")

    p = add("negate", cmd_negate, help="derive negated variants")
    p.add_argument("--in", dest="inputs", action="append", default=[],
                   help="orig JSONL (repeatable); default: <out>/*.orig.jsonl")

    add("judge-build", cmd_judge_build,
        help="assemble the three-way judge training set")

    p = add("judge-eval", cmd_judge_eval, help="score judge verdicts against gold")
    p.add_argument("--gold", required=True, help="labeled JSONL with gold labels")
    p.add_argument("--pred", required=True,
                   help="JSONL of {triple_id, raw_output|label}")
    p.add_argument("--out", help="write the report JSON here")

    p = add("label", cmd_label, help="label triples with the judge backend")
    p.add_argument("--in", dest="input", required=True, help="triples JSONL")
    p.add_argument("--out", help="labeled JSONL path")

    p = add("stats", cmd_stats, help="label-by-variant statistics")
    p.add_argument("--in", dest="input", required=True, help="labeled JSONL")
    p.add_argument("--json", action="store_true", help="print JSON instead of a table")
    p.add_argument("--out", help="also write the JSON here")

    p = add("build", cmd_build, help="select contrastive corpora and baselines")
    p.add_argument("--atomic", help="labeled augmented corpus (affirmative heads)")
    p.add_argument("--anion", help="labeled augmented corpus (negated heads)")
    p.add_argument("--subset", type=int, help="sample ~N triples per dataset")
    p.add_argument("--keep-variants", help="comma list, e.g. ORIG,NEG_IF")
    p.add_argument("--randomize", action="store_true",
                   help="redraw labels uniformly (control condition)")
    p.add_argument("--no-baseline", action="store_true")

    p = add("bench-sample", cmd_bench_sample, help="draw the annotation benchmark")
    p.add_argument("--in", dest="input", required=True, help="augmented test JSONL")
    p.add_argument("--out", help="benchmark JSONL path")

    p = add("annotate-serve", cmd_annotate_serve, help="run the annotation service")
    p.add_argument("--benchmark", help="benchmark JSONL (first run only)")
    p.add_argument("--port", type=int, help="override config port")

    p = add("eval", cmd_eval, help="score a prediction file")
    p.add_argument("--task", required=True, choices=("condaqa", "rte", "nli", "nevir"))
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--baseline-pred", help="second prediction file to diff against")
    p.add_argument("--out", help="write the report JSON here")

    p = add("significance", cmd_significance, help="paired McNemar between two systems")
    p.add_argument("--task", required=True, choices=("condaqa", "rte", "nli", "nevir"))
    p.add_argument("--gold", required=True)
    p.add_argument("--pred-a", required=True)
    p.add_argument("--pred-b", required=True)
    p.add_argument("--out")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: ConfigError: {exc}", file=sys.stderr)
        return 1
    except (BackendUnavailable, ProtocolError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except NegkitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
