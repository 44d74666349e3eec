"""Command-line pipeline: every stage reads and writes files in one output directory.

Exit codes: 0 success, 2 missing input, 3 validation failure, 4 invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, dataset, grounding, metrics, reranking, reweight, simulator
from .grouping import load_scheme, save_scheme
from .pipeline import make_scheme

log = logging.getLogger("itemfair")

ENV_PREFIX = "ITEMFAIR_"

INTERACTIONS = "interactions.tsv"
ITEMS = "items.tsv"
SEQUENCES = "sequences.jsonl"
TRAIN_SAMPLE = "train_sample.jsonl"
SCHEME = "scheme.json"
ITEM_EMB = "item_embeddings.bin"
ORACLES = "oracles.bin"
SLATES = "slates.jsonl"
RERANKED = "slates_rerank.jsonl"
PUNISHMENT = "punishment.json"
WEIGHTS = "weights.tsv"
SWEEP_VAL = "sweep_validation.csv"
SWEEP_TEST = "sweep_test.csv"
REPORT = "report.csv"


class MissingInput(Exception):
    pass


class InvariantBreach(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _require(stage: str, *paths: Path) -> None:
    for p in paths:
        if not Path(p).exists():
            raise MissingInput(f"{stage}: missing input {p}")


def _manifest(args, stage: str, inputs: dict, outputs: dict, params: dict | None = None) -> None:
    out = Path(args.out_dir)
    doc = {
        "stage": stage,
        "tool_version": __version__,
        "seed": args.seed,
        "params": params or {},
        "inputs": {k: _sha256(Path(v)) for k, v in sorted(inputs.items())},
        "outputs": {k: _sha256(Path(v)) for k, v in sorted(outputs.items())},
    }
    with open(out / f"manifest_{stage}.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _ks(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(k) for k in text]
    return [int(k) for k in str(text).split(",") if k.strip()]


def _alphas(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(a) for a in text]
    text = str(text)
    if ":" in text:
        lo, hi, step = (float(x) for x in text.split(":"))
        n = int(round((hi - lo) / step))
        return [round(lo + i * step, 10) for i in range(n + 1)]
    return [float(a) for a in text.split(",") if a.strip()]


def _rerank_config(args) -> reranking.RerankConfig:
    return reranking.RerankConfig(tuple(_ks(args.k_set)), float(args.alpha), float(args.epsilon))


def _write_slates(slates, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in slates:
            fh.write(json.dumps(s.to_json(), ensure_ascii=False) + "\n")


def _read_slates(path: Path) -> list[metrics.Slate]:
    with open(path, encoding="utf-8") as fh:
        return [metrics.Slate.from_json(json.loads(line)) for line in fh if line.strip()]


def _log_files(out: Path):
    return out / INTERACTIONS, out / ITEMS


def _load_log(stage: str, out: Path) -> dataset.InteractionLog:
    inter, items = _log_files(out)
    _require(stage, inter, items)
    return dataset.ingest(inter, items)


def _eval_inputs(stage: str, args, slates_path: Path):
    out = Path(args.out_dir)
    _require(stage, out / SEQUENCES, out / SCHEME, slates_path)
    seqs = dataset.by_split(dataset.read_sequences(out / SEQUENCES), args.split)
    by_ref = {s.ref: s for s in _read_slates(slates_path)}
    missing = [s.ref for s in seqs if s.ref not in by_ref]
    if missing:
        raise ValueError(f"no slate for {args.split} sequence {missing[0]}")
    return seqs, [by_ref[s.ref] for s in seqs], load_scheme(out / SCHEME)


def _check_report(r: metrics.FairnessReport) -> None:
    total = sum(r.gu.values())
    if abs(total) > 1e-9:
        raise InvariantBreach(f"GU does not sum to zero at k={r.k}: {total}")
    if not (0 <= r.mgu <= r.dgu + 1e-12):
        raise InvariantBreach(f"MGU/DGU ordering violated at k={r.k}")


def _evaluate(seqs, slates, scheme, ks) -> list[metrics.FairnessReport]:
    reports = []
    for k in ks:
        r = metrics.evaluate([s.history for s in seqs], slates, [s.target for s in seqs], scheme, k)
        _check_report(r)
        reports.append(r)
    return reports


def _save_eval(args, method: str, reports) -> dict:
    out = Path(args.out_dir)
    tagged = [metrics.FairnessReport(**{**r.__dict__, "extra": {"method": method, "split": args.split}})
              for r in reports]
    jpath, cpath = out / f"evaluation_{method}.json", out / f"evaluation_{method}.csv"
    metrics.save_reports_json(tagged, jpath)
    metrics.save_reports_csv(tagged, cpath)
    return {"evaluation_json": jpath, "evaluation_csv": cpath}


# ---------------------------------------------------------------- stages

def cmd_simulate(args) -> None:
    out = Path(args.out_dir)
    cfg = simulator.SimConfig(
        n_items=args.n_items, n_users=args.n_users, n_events=args.n_events, n_genres=args.n_genres,
        embed_dim=args.dim, popularity_exponent=args.popularity_exponent, oracle_bias=args.beta,
        noise_sigma=args.noise_sigma, oracle_sigma=args.oracle_sigma,
        oracle_popularity_power=args.oracle_popularity_power, seed=args.seed,
    )
    slog = simulator.generate_log(cfg)
    inter, items = _log_files(out)
    dataset.write_log(slog, inter, items)
    table = simulator.generate_embeddings(slog, cfg)
    grounding.write_embeddings(out / ITEM_EMB, table.item_ids, table.matrix)

    split = dataset.split_periods(slog)
    seqs = dataset.build_sequences(split, args.max_len)
    pop = slog.item_counts(split.train)
    refs, rows = [], []
    for stream, name in enumerate(("validation", "test")):
        for o in simulator.generate_oracles(dataset.by_split(seqs, name), table, cfg, pop, stream):
            refs.append(o.ref)
            rows.append(o.vector)
    grounding.write_embeddings(out / ORACLES, refs, np.array(rows).reshape(len(rows), cfg.embed_dim))
    with open(out / "sim_config.json", "w", encoding="utf-8") as fh:
        json.dump({**cfg.to_json(), "max_len": args.max_len}, fh, indent=1, sort_keys=True)
        fh.write("\n")
    _manifest(args, "simulate", {}, {"interactions": inter, "items": items, "item_embeddings": out / ITEM_EMB,
                                     "oracles": out / ORACLES, "sim_config": out / "sim_config.json"},
              cfg.to_json())


def cmd_ingest(args) -> None:
    out = Path(args.out_dir)
    inter_in, items_in = Path(args.interactions), Path(args.items)
    _require("ingest", inter_in, items_in)
    if args.format == "movielens":
        ilog = dataset.ingest_movielens(inter_in, items_in)
    else:
        ilog = dataset.ingest(inter_in, items_in)
    raw = dataset.summary(ilog)
    ilog = dataset.filter_rare_genres(ilog, args.min_genre_interactions)
    inter, items = _log_files(out)
    tmp_i, tmp_t = inter.with_suffix(".tmp"), items.with_suffix(".tmp")
    dataset.write_log(ilog, tmp_i, tmp_t)
    os.replace(tmp_i, inter)
    os.replace(tmp_t, items)
    stats = {"raw": raw, "filtered": dataset.summary(ilog), "min_genre_interactions": args.min_genre_interactions}
    with open(out / "ingest_stats.json", "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=1, sort_keys=True)
        fh.write("\n")
    _manifest(args, "ingest", {"interactions": inter_in, "items": items_in},
              {"interactions": inter, "items": items, "stats": out / "ingest_stats.json"}, stats)


def cmd_split(args) -> None:
    out = Path(args.out_dir)
    ilog = _load_log("split", out)
    split = dataset.split_periods(ilog)
    seqs = dataset.build_sequences(split, args.max_len)
    for s in seqs:
        if not 1 <= len(s.history) <= args.max_len:
            raise InvariantBreach(f"sequence {s.ref} has history length {len(s.history)}")
    dataset.write_sequences(seqs, out / SEQUENCES)
    draw = dataset.draw_training_sample(dataset.by_split(seqs, "train"), args.sample_size, args.seed)
    dataset.write_sequences(draw.sequences, out / TRAIN_SAMPLE)
    stats = dataset.summary(ilog, seqs)
    stats["period_sizes"] = [len(p) for p in split.periods]
    stats["train_sample"] = len(draw.sequences)
    with open(out / "split_stats.json", "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=1, sort_keys=True)
        fh.write("\n")
    inter, items = _log_files(out)
    _manifest(args, "split", {"interactions": inter, "items": items},
              {"sequences": out / SEQUENCES, "train_sample": out / TRAIN_SAMPLE},
              {"max_len": args.max_len, "sample_size": args.sample_size})


def cmd_group(args) -> None:
    out = Path(args.out_dir)
    if args.scheme in ("popularity", "genre"):
        scheme = make_scheme(_load_log("group", out), args.scheme, not args.all_events)
        inputs = dict(zip(("interactions", "items"), _log_files(out)))
    else:
        _require("group", Path(args.scheme))
        scheme = load_scheme(args.scheme)
        inputs = {"custom": Path(args.scheme)}
    save_scheme(scheme, out / SCHEME)
    _manifest(args, "group", inputs, {"scheme": out / SCHEME}, {"scheme": scheme.name})


def cmd_ground(args) -> None:
    out = Path(args.out_dir)
    emb, orc = Path(args.embeddings or out / ITEM_EMB), Path(args.oracles or out / ORACLES)
    _require("ground", emb, orc)
    table = grounding.load_table(emb)
    oracles = grounding.load_oracles(orc)
    k = max(_ks(args.k) + _ks(args.k_set))
    slates = grounding.ground_batch(table, oracles, k, workers=args.workers)
    _write_slates(slates, out / SLATES)
    _manifest(args, "ground", {"item_embeddings": emb, "oracles": orc}, {"slates": out / SLATES}, {"k": k})


def cmd_evaluate(args) -> None:
    out = Path(args.out_dir)
    slates_path = Path(args.slates or out / SLATES)
    seqs, slates, scheme = _eval_inputs("evaluate", args, slates_path)
    reports = _evaluate(seqs, slates, scheme, _ks(args.k))
    outputs = _save_eval(args, args.method, reports)
    _manifest(args, "evaluate", {"sequences": out / SEQUENCES, "scheme": out / SCHEME, "slates": slates_path},
              outputs, {"k": _ks(args.k), "split": args.split, "method": args.method})


def cmd_reweight(args) -> None:
    out = Path(args.out_dir)
    _require("reweight", out / TRAIN_SAMPLE, out / SCHEME)
    seqs = dataset.read_sequences(out / TRAIN_SAMPLE)
    table = reweight.build_weight_table(seqs, load_scheme(out / SCHEME))
    for g, w in table.group_weights.items():
        if not (w >= 0 and np.isfinite(w)):
            raise InvariantBreach(f"group weight for {g} is {w}")
    reweight.save_weights(table, out / WEIGHTS, args.seed)
    _manifest(args, "reweight", {"train_sample": out / TRAIN_SAMPLE, "scheme": out / SCHEME},
              {"weights": out / WEIGHTS})


def _punishment_from_validation(args, config: reranking.RerankConfig):
    out = Path(args.out_dir)
    _require("rerank", out / SEQUENCES, out / SCHEME, out / SLATES)
    scheme = load_scheme(out / SCHEME)
    val = dataset.by_split(dataset.read_sequences(out / SEQUENCES), "validation")
    by_ref = {s.ref: s for s in _read_slates(out / SLATES)}
    missing = [s.ref for s in val if s.ref not in by_ref]
    if missing:
        raise ValueError(f"no slate for validation sequence {missing[0]}")
    slates = [by_ref[s.ref] for s in val]
    histories = [s.history for s in val]
    gu_at_k = {}
    for k in config.k_set:
        gu_at_k[k] = metrics.group_unfairness(metrics.gh(histories, scheme), metrics.gp(slates, scheme, k))
    table = reranking.build_punishment(gu_at_k, scheme, config)
    reranking.save_punishment(table, out / PUNISHMENT)
    return table, scheme


def cmd_rerank(args) -> None:
    out = Path(args.out_dir)
    config = _rerank_config(args)
    table, scheme = _punishment_from_validation(args, config)
    emb, orc = Path(args.embeddings or out / ITEM_EMB), Path(args.oracles or out / ORACLES)
    _require("rerank", emb, orc)
    items = grounding.load_table(emb)
    oracles = grounding.load_oracles(orc)
    seqs = dataset.by_split(dataset.read_sequences(out / SEQUENCES), args.split)
    by_ref = {o.ref: o for o in oracles}
    missing = [s.ref for s in seqs if s.ref not in by_ref]
    if missing:
        raise ValueError(f"no oracle for {args.split} sequence {missing[0]}")
    k = max(_ks(args.k) + list(config.k_set))
    mat = grounding.oracle_matrix(items, [by_ref[s.ref] for s in seqs])
    div = reranking.divisor(table.item_vector(items.item_ids), config.alpha, config.epsilon)
    idx = grounding.ground_indices(items, mat, k, divisors=[div])[0]
    slates = [metrics.Slate(s.ref, tuple(items.item_ids[r] for r in row)) for s, row in zip(seqs, idx)]
    _write_slates(slates, out / RERANKED)
    reports = _evaluate(seqs, slates, scheme, _ks(args.k))
    outputs = _save_eval(args, "rerank", reports)
    _manifest(args, "rerank", {"sequences": out / SEQUENCES, "scheme": out / SCHEME, "slates": out / SLATES,
                               "item_embeddings": emb, "oracles": orc},
              {"punishment": out / PUNISHMENT, "slates_rerank": out / RERANKED, **outputs},
              {"alpha": config.alpha, "k_set": list(config.k_set), "epsilon": config.epsilon, "split": args.split})


def cmd_sweep(args) -> None:
    out = Path(args.out_dir)
    config = _rerank_config(args)
    alphas = _alphas(args.alphas)
    emb, orc = Path(args.embeddings or out / ITEM_EMB), Path(args.oracles or out / ORACLES)
    _require("sweep", out / SEQUENCES, out / SCHEME, emb, orc)
    items = grounding.load_table(emb)
    by_ref = {o.ref: o for o in grounding.load_oracles(orc)}
    scheme = load_scheme(out / SCHEME)
    seqs = dataset.read_sequences(out / SEQUENCES)
    ks = sorted(set(_ks(args.k)) | set(config.k_set))

    def run(split, punishment=None):
        part = dataset.by_split(seqs, split)
        missing = [s.ref for s in part if s.ref not in by_ref]
        if missing:
            raise ValueError(f"no oracle for {split} sequence {missing[0]}")
        mat = grounding.oracle_matrix(items, [by_ref[s.ref] for s in part])
        return reranking.sweep_alpha(items, mat, [s.history for s in part], [s.target for s in part], scheme,
                                  alphas, config, ks, punishment)

    val = run("validation")
    test = run("test", val.punishment)
    test.selected_alpha = val.selected_alpha
    for result in (val, test):
        for by_k in result.reports:
            for r in by_k.values():
                _check_report(r)
    reranking.save_sweep_csv(val, out / SWEEP_VAL, {"scheme": scheme.name, "split": "validation"})
    reranking.save_sweep_csv(test, out / SWEEP_TEST, {"scheme": scheme.name, "split": "test"})
    reranking.save_punishment(val.punishment, out / PUNISHMENT)
    _manifest(args, "sweep", {"sequences": out / SEQUENCES, "scheme": out / SCHEME, "item_embeddings": emb,
                              "oracles": orc},
              {"sweep_validation": out / SWEEP_VAL, "sweep_test": out / SWEEP_TEST, "punishment": out / PUNISHMENT},
              {"alphas": alphas, "k_set": list(config.k_set), "selected_alpha": val.selected_alpha})


def cmd_report(args) -> None:
    """Join evaluation files and the test sweep into one table plus per-K distributions."""
    out = Path(args.out_dir)
    evals = sorted(out.glob("evaluation_*.json"), key=lambda p: (p.stem != "evaluation_uncalibrated", p.stem))
    sweep_path = out / SWEEP_TEST
    if not evals and not sweep_path.exists():
        raise MissingInput("report: no evaluation_*.json or sweep output in " + str(out))
    ks = _ks(args.k_set)
    cols = ["scheme", "method"] + [f"MGU@{k}" for k in ks] + [f"DGU@{k}" for k in ks] + ["NDCG@5", "HR@5"]
    rows, dist = [], {}
    for path in evals:
        reports = {r.k: r for r in metrics.load_reports_json(path)}
        method = path.stem[len("evaluation_"):]
        row = {"scheme": next(iter(reports.values())).scheme, "method": method}
        for k in ks:
            r = reports.get(k)
            row[f"MGU@{k}"] = r.mgu if r else ""
            row[f"DGU@{k}"] = r.dgu if r else ""
        row["NDCG@5"] = reports[5].ndcg if 5 in reports else ""
        row["HR@5"] = reports[5].hr if 5 in reports else ""
        rows.append(row)
        for k, r in reports.items():
            dist.setdefault(k, []).extend((method, g, r.gh[g], r.gp[g], r.gu[g]) for g in r.gh)
    if sweep_path.exists():
        with open(sweep_path, encoding="utf-8") as fh:
            for rec in csv.DictReader(fh):
                row = {"scheme": rec["scheme"], "method": f"rerank_sweep(alpha={rec['alpha']})"}
                for k in ks:
                    row[f"MGU@{k}"] = float(rec.get(f"mgu@{k}", "nan"))
                    row[f"DGU@{k}"] = float(rec.get(f"dgu@{k}", "nan"))
                row["NDCG@5"] = float(rec["ndcg@5"])
                row["HR@5"] = float(rec["hr@5"])
                rows.append(row)
    with open(out / REPORT, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in (row[c] for c in cols)])
    outputs = {"report": out / REPORT}
    for k, recs in sorted(dist.items()):
        p = out / f"distribution_k{k}.csv"
        with open(p, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["method", "group", "gh", "gp", "gu"])
            for m, g, h, pp, u in recs:
                w.writerow([m, g, repr(h), repr(pp), repr(u)])
        outputs[p.stem] = p
    inputs = {p.stem: p for p in evals}
    if sweep_path.exists():
        inputs["sweep_test"] = sweep_path
    _manifest(args, "report", inputs, outputs, {"k_set": ks})


COMMANDS = {
    "simulate": cmd_simulate,
    "ingest": cmd_ingest,
    "split": cmd_split,
    "group": cmd_group,
    "ground": cmd_ground,
    "evaluate": cmd_evaluate,
    "reweight": cmd_reweight,
    "rerank": cmd_rerank,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


# ---------------------------------------------------------------- parsing

GLOBAL_OPTIONS = {
    "seed": (int, 0, None),
    "out_dir": (str, ".", None),
    "scheme": (str, "popularity", "popularity, genre, or a path to a custom scheme JSON"),
    "k": (str, "1,5,10,20", "comma-separated cutoffs for reporting"),
    "alpha": (float, 0.0, None),
    "k_set": (str, "1,5,10,20", "comma-separated cutoffs aggregated into the punishment term"),
    "epsilon": (float, 1e-6, None),
}

COMMAND_OPTIONS = {
    "simulate": {
        "n_items": (int, 5000, None),
        "n_users": (int, 5000, None),
        "n_events": (int, 250_000, None),
        "n_genres": (int, 18, None),
        "dim": (int, 32, None),
        "popularity_exponent": (float, 1.0, None),
        "beta": (float, 0.8, "probability an oracle is popularity-biased"),
        "noise_sigma": (float, 0.1, None),
        "oracle_sigma": (float, 0.02, None),
        "oracle_popularity_power": (float, 2.0, None),
        "max_len": (int, dataset.DEFAULT_MAX_LEN, None),
    },
    "ingest": {
        "interactions": (str, None, "interactions TSV (or ratings.dat with --format movielens)"),
        "items": (str, None, "items TSV (or movies.dat with --format movielens)"),
        "format": (str, "tsv", "tsv or movielens"),
        "min_genre_interactions": (int, 0, None),
    },
    "split": {
        "max_len": (int, dataset.DEFAULT_MAX_LEN, None),
        "sample_size": (int, dataset.DEFAULT_SAMPLE_SIZE, None),
    },
    "group": {"all_events": (bool, False, "count popularity over all events, not train only")},
    "ground": {"embeddings": (str, None, None), "oracles": (str, None, None), "workers": (int, 1, None)},
    "evaluate": {"slates": (str, None, None), "split": (str, "test", None), "method": (str, "uncalibrated", None)},
    "reweight": {},
    "rerank": {"embeddings": (str, None, None), "oracles": (str, None, None), "split": (str, "test", None)},
    "sweep": {"embeddings": (str, None, None), "oracles": (str, None, None),
              "alphas": (str, "0:0.1:0.01", "lo:hi:step or comma list")},
    "report": {},
}

HELP = {
    "simulate": "generate a synthetic biased recommender",
    "ingest": "validate, filter and normalize input files",
    "split": "period split, sequences and training sample",
    "group": "build the item group scheme",
    "ground": "nearest-item slates for every oracle",
    "evaluate": "fairness and accuracy of a slate file",
    "reweight": "per-sample weights for the training sample",
    "rerank": "punishment table from validation, rerank an evaluation split",
    "sweep": "alpha sweep on validation and test",
    "report": "join evaluations into report and distribution CSVs",
}


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise MissingInput(f"config: missing {p}")
    if p.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        with open(p, "rb") as fh:
            raw = tomllib.load(fh)
    else:
        with open(p, encoding="utf-8") as fh:
            raw = json.load(fh)
    return {k.replace("-", "_"): v for k, v in raw.items()}


def _add(parser, name, kind, helptext):
    flag = "--" + name.replace("_", "-")
    if kind is bool:
        parser.add_argument(flag, action="store_const", const=True, default=None, help=helptext)
    else:
        parser.add_argument(flag, type=kind, default=None, help=helptext)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="itemfair", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for command, options in COMMAND_OPTIONS.items():
        p = sub.add_parser(command, help=HELP[command])
        for name, (kind, _, helptext) in {**GLOBAL_OPTIONS, **options}.items():
            _add(p, name, kind, helptext)
        p.add_argument("--config", help="TOML or JSON file supplying defaults for any option")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    """Resolve options: command line, then ITEMFAIR_<NAME> env vars, then --config, then defaults."""
    args = build_parser().parse_args(argv)
    config = _load_config(args.config)
    for name, (kind, default, _) in {**GLOBAL_OPTIONS, **COMMAND_OPTIONS[args.command]}.items():
        if getattr(args, name) is not None:
            continue
        env = os.environ.get(ENV_PREFIX + name.upper())
        if env is not None:
            value = env.lower() in ("1", "true", "yes") if kind is bool else kind(env)
        elif name in config:
            value = config[name]
        else:
            value = default
        setattr(args, name, value)
    if args.command == "ingest":
        for name in ("interactions", "items"):
            if getattr(args, name) is None:
                raise MissingInput(f"ingest: --{name} is required")
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except MissingInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    try:
        COMMANDS[args.command](args)
    except MissingInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvariantBreach as exc:
        print(f"error: {args.command}: invariant breach: {exc}", file=sys.stderr)
        return 4
    except (ValueError, KeyError) as exc:
        print(f"error: {args.command}: validation failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
