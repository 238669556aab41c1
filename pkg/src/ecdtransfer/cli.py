"""Command-line entry point: ``ecdtransfer <command> [options]``.

Every option can also come from a JSON file passed with ``--config``; flags on
the command line win. Each run writes its outputs atomically plus a manifest
recording the effective configuration and the digests of inputs and outputs.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

from . import __version__, baselines, gbdt, hpo, nn, protocols, synth, tmae
from .classifier import FinetuneConfig, finetune, init_from_encoder, load_model, train_ensemble
from .data import (
    DataError,
    Dataset,
    SchemaError,
    audit_countries,
    harmonize,
    impute_chained,
    impute_median,
    load_csv,
    read_dataset,
)
from .metrics import UndefinedMetricError
from .runtime import DEFAULT_SEED, atomic_write_json, atomic_write_text, file_digest

log = logging.getLogger("ecdtransfer")

DATA_DIR_ENV = "ECDTRANSFER_DATA_DIR"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
LEARNERS = ("pretrained", "cold-mlp", "gbdt", "logreg")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with exit code 1 for usage errors."""

    def error(self, message: str):  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# Manifest


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    config: dict
    config_digest: str | None
    seed: int
    inputs: dict[str, str]
    version: str = __version__
    started: str = ""
    finished: str = ""
    outputs: dict[str, str] = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "argv": self.argv,
            "config": self.config,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "inputs": self.inputs,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
            "outputs": self.outputs,
            "notes": self.notes,
        }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class Run:
    """Collects inputs and outputs for one command and writes the manifest."""

    def __init__(self, args: argparse.Namespace, argv: Sequence[str]):
        self.args = args
        cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config", "manifest", "verbose")}
        self.manifest = RunManifest(
            command=args.command,
            argv=list(argv),
            config=cfg,
            config_digest=file_digest(args.config) if getattr(args, "config", None) else None,
            seed=int(args.seed),
            inputs={},
            started=_now(),
        )
        self.primary: Path | None = None

    def input(self, path: str | Path) -> Path:
        p = resolve_input(path)
        self.manifest.inputs[str(path)] = file_digest(p)
        return p

    def write_text(self, path: str | Path, text: str) -> Path:
        p = atomic_write_text(path, text)
        self._record(p)
        return p

    def write_json(self, path: str | Path, obj) -> Path:
        p = atomic_write_json(path, obj)
        self._record(p)
        return p

    def _record(self, p: Path) -> None:
        if self.primary is None:
            self.primary = p
        self.manifest.outputs[str(p)] = file_digest(p)

    def finish(self) -> Path | None:
        if self.primary is None:
            return None
        self.manifest.finished = _now()
        target = Path(self.args.manifest) if getattr(self.args, "manifest", None) else Path(str(self.primary) + ".manifest.json")
        return atomic_write_json(target, self.manifest.to_dict())


def resolve_input(path: str | Path) -> Path:
    """Existing path as given, else relative to ``$ECDTRANSFER_DATA_DIR``."""
    p = Path(path)
    if p.exists():
        return p
    base = os.environ.get(DATA_DIR_ENV)
    if base and not p.is_absolute() and (Path(base) / p).exists():
        return Path(base) / p
    raise FileNotFoundError(f"input not found: {path}")


def _countries(value: str | Sequence[str] | None) -> list[str] | None:
    if value is None:
        return None
    if isinstance(value, str):
        value = value.split(",")
    out = [c.strip() for c in value if c.strip()]
    return out or None


def _select(data: Dataset, countries: list[str] | None) -> Dataset:
    if countries is None:
        return data
    missing = sorted(set(countries) - set(data.countries()))
    if missing:
        raise DataError(f"countries not in dataset: {', '.join(missing)}")
    return data.where_country(countries)


def _report_paths(out: str) -> tuple[Path, Path]:
    p = Path(out)
    return p, p.with_suffix(".txt") if p.suffix == ".json" else Path(str(p) + ".txt")


# ---------------------------------------------------------------------------
# Config builders


def finetune_config(a: argparse.Namespace) -> FinetuneConfig:
    return FinetuneConfig(
        learning_rate=a.lr,
        l2=a.l2,
        dropout=a.dropout,
        patience=a.patience,
        max_epochs=a.max_epochs,
        batch_size=a.batch_size,
        seed=a.seed,
        freeze_encoder=a.freeze_encoder,
        val_fraction=a.val_fraction,
        head_init=a.head_init,
    )


def gbdt_config(a: argparse.Namespace) -> gbdt.GbdtConfig:
    return gbdt.GbdtConfig(
        n_estimators=a.gbdt_trees, max_depth=a.gbdt_depth, learning_rate=a.gbdt_lr, seed=a.seed
    )


def make_trainer(a: argparse.Namespace, ckpt: tmae.EncoderCheckpoint | None) -> Callable[[Dataset, int], object]:
    """``trainer(train, seed)`` for the chosen learner."""
    base = finetune_config(a)
    if a.learner == "pretrained" and ckpt is None:
        raise UsageError("--learner pretrained needs --checkpoint")

    def train(data: Dataset, seed: int):
        cfg = FinetuneConfig(**{**base.to_dict(), "seed": seed})
        if a.learner == "pretrained":
            return finetune(init_from_encoder(ckpt, cfg), data, None, cfg)
        if a.learner == "cold-mlp":
            return baselines.train_cold_mlp(data, None, cfg)
        if a.learner == "gbdt":
            from .classifier import split_validation

            tr, va = split_validation(data, cfg)
            return gbdt.train_gbdt(tr, va, gbdt.GbdtConfig(**{**gbdt_config(a).to_dict(), "seed": seed}))
        return baselines.train_logreg(data, l2=a.logreg_l2)

    return train


# ---------------------------------------------------------------------------
# Commands


def cmd_synth(a, run: Run) -> None:
    if a.synth_config:
        # a complete generator description; the flags below are ignored
        cfg = synth.SynthConfig.from_dict(json.loads(run.input(a.synth_config).read_text(encoding="utf-8")))
    else:
        cfg = synth.SynthConfig(
            n_countries=a.countries,
            rows_per_country=a.rows,
            country_shift_scale=a.shift,
            label_noise=a.label_noise,
            quintile_label_noise=a.quintile_noise,
            seed=a.seed,
        )
    out = run.write_text(a.out, _dataset_csv(synth.synth_generate(cfg)))
    run.manifest.notes["synth_config"] = cfg.to_dict()
    log.info("wrote %s", out)


def _dataset_csv(data: Dataset) -> str:
    from .data import dataset_to_csv

    return dataset_to_csv(data)


def cmd_ingest(a, run: Run) -> None:
    raw = harmonize(load_csv(run.input(a.input)))
    if a.imputation == "median":
        data = impute_median(raw)
    else:
        data = impute_chained(raw, iterations=a.iterations, protocol=a.imputation.split("-")[1])
    kept, audit = audit_countries(data)
    if kept.n == 0:
        raise DataError("no country passed the audit")
    run.write_text(a.out, _dataset_csv(kept))
    report = {
        "rows_in": raw.n,
        "rows_out": int(kept.n),
        "imputation": a.imputation,
        "flagged_rows": len(raw.flagged_rows),
        "warnings": raw.warnings,
        "countries": audit,
    }
    run.write_json(a.report or str(a.out) + ".audit.json", report)


def cmd_pretrain(a, run: Run) -> None:
    data = _select(read_dataset(run.input(a.data)), _countries(a.use_countries))
    cfg = tmae.PretrainConfig(
        epochs=a.epochs,
        batch_size=a.batch_size,
        learning_rate=a.lr,
        mask_ratio=a.mask_ratio,
        seed=a.seed,
        hidden_dims=tuple(a.hidden),
    )
    ckpt = tmae.pretrain(data.X, cfg, data.feature_names)
    ckpt.pretrain_meta["countries"] = data.countries()
    run.write_json(a.out, ckpt.to_dict())


def _load_ckpt(a, run: Run) -> tmae.EncoderCheckpoint | None:
    return tmae.EncoderCheckpoint.load(run.input(a.checkpoint)) if a.checkpoint else None


def cmd_finetune(a, run: Run) -> None:
    data = _select(read_dataset(run.input(a.data)), _countries(a.use_countries))
    ckpt = _load_ckpt(a, run)
    if a.ensemble > 1:
        if a.learner != "pretrained" or ckpt is None:
            raise UsageError("--ensemble needs --learner pretrained and --checkpoint")
        model = train_ensemble(ckpt, data, None, finetune_config(a), jobs=a.jobs, seeds=a.member_seeds)
    else:
        model = make_trainer(a, ckpt)(data, a.seed)
    run.write_json(a.out, model.to_dict())


def cmd_eval(a, run: Run) -> None:
    data = read_dataset(run.input(a.data))
    json_path, text_path = _report_paths(a.out)
    p = a.protocol
    if p in ("holdout", "zeroshot"):
        if not a.model:
            raise UsageError(f"--protocol {p} needs --model")
        model = load_model(run.input(a.model))
        countries = _countries(a.test_countries)
        if p == "zeroshot":
            if not countries:
                raise UsageError("--protocol zeroshot needs --test-countries")
            trained_on = set(getattr(model, "provenance", {}).get("countries", []))
            if trained_on & set(countries):
                raise DataError(f"model was trained on {sorted(trained_on & set(countries))}")
            rep = protocols.zeroshot_report(model, data, countries, a.seed)
        else:
            rep = protocols.holdout_report(model, _select(data, countries), a.seed)
    elif p == "bootstrap":
        test_c = _countries(a.test_countries)
        if not test_c:
            raise UsageError("--protocol bootstrap needs --test-countries (the fixed test set)")
        train_c = [c for c in data.countries() if c not in test_c]
        train, test = _select(data, train_c), _select(data, test_c)
        trainer = make_trainer(a, _load_ckpt(a, run))
        from .metrics import auc

        rep = protocols.bootstrap_ci(
            lambda d, s: auc(trainer(d, s).predict_proba(test.X), test.y), train, a.n_resamples, a.seed, a.jobs
        )
        rep.config.update({"learner": a.learner, "test_countries": test_c})
    elif p == "loco":
        rep = protocols.loco_run(make_trainer(a, _load_ckpt(a, run)), data, a.seed, a.jobs)
        rep.config["learner"] = a.learner
    elif p == "fewshot":
        ckpt = _load_ckpt(a, run)
        if ckpt is None or not a.fewshot_country:
            raise UsageError("--protocol fewshot needs --checkpoint and --fewshot-country")
        target_c = _countries(a.target_countries)
        if not target_c:
            region = data.region[data.country == a.fewshot_country]
            if region.size == 0:
                raise DataError(f"{a.fewshot_country} is not in the dataset")
            target_c = data.countries_in_region(str(region[0]))
        target = _select(data, target_c)
        source = data.where_country([c for c in data.countries() if c not in target_c])
        curve = protocols.fewshot_curve(
            ckpt,
            target,
            a.fewshot_country,
            a.sizes,
            a.n_seeds,
            finetune_config(a),
            gbdt_config(a),
            source=source if source.n else None,
            seed=a.seed,
            jobs=a.jobs,
            models=tuple(a.models),
        )
        run.write_json(json_path, curve.to_dict())
        run.write_text(text_path, curve.to_text())
        run.write_text(a.csv or json_path.with_suffix(".csv"), curve.to_csv())
        return
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown protocol {p}")
    run.write_json(json_path, rep.to_dict())
    run.write_text(text_path, rep.to_text())


def cmd_importance(a, run: Run) -> None:
    model = load_model(run.input(a.model))
    data = _select(read_dataset(run.input(a.data)), _countries(a.test_countries))
    rows = protocols.permutation_importance(model, data, a.n_repeats, a.seed, a.jobs)
    json_path, text_path = _report_paths(a.out)
    run.write_json(json_path, {"n_repeats": a.n_repeats, "seed": a.seed, "features": rows})
    run.write_text(text_path, protocols.format_table(rows, ["feature", "importance", "ci_low", "ci_high"]))


def cmd_calibration(a, run: Run) -> None:
    model = load_model(run.input(a.model))
    data = _select(read_dataset(run.input(a.data)), _countries(a.test_countries))
    rep = protocols.calibration_report(model, data, a.n_bins, a.seed)
    json_path, text_path = _report_paths(a.out)
    run.write_json(json_path, rep.to_dict())
    run.write_text(text_path, rep.to_text() + f"brier: {rep.extra['brier']:.4f}\n")


def cmd_equity(a, run: Run) -> None:
    model = load_model(run.input(a.model))
    data = _select(read_dataset(run.input(a.data)), _countries(a.test_countries))
    rep = protocols.equity_audit(model, data, a.seed)
    json_path, text_path = _report_paths(a.out)
    run.write_json(json_path, rep.to_dict())
    run.write_text(text_path, rep.to_text())


def cmd_divergence(a, run: Run) -> None:
    data = read_dataset(run.input(a.data))
    src, tgt = _countries(a.source), _countries(a.target)
    if not src or not tgt:
        raise UsageError("--source and --target country lists are required")
    d_hat = protocols.proxy_divergence(_select(data, src).X, _select(data, tgt).X, a.seed, a.folds)
    json_path, text_path = _report_paths(a.out)
    rep = protocols.EvalReport("proxy_a_distance", d_hat, seed=a.seed, config={"source": src, "target": tgt, "folds": a.folds})
    run.write_json(json_path, rep.to_dict())
    run.write_text(text_path, rep.to_text())


def cmd_hpo(a, run: Run) -> None:
    data = read_dataset(run.input(a.data))
    space = hpo.SearchSpace.from_dict(json.loads(run.input(a.space).read_text())) if a.space else hpo.SearchSpace()
    train_c, val_c = _countries(a.train_countries), _countries(a.val_countries)
    if not train_c or not val_c:
        raise UsageError("--train-countries and --val-countries are required")
    split = hpo.SearchSplit(train_c, val_c)
    for c in train_c + val_c:
        if c not in data.countries():
            raise DataError(f"country {c} not in dataset")
    result = hpo.run_search(space, data, split, a.trials, a.seed, a.jobs, a.pretrain_epochs, a.max_epochs)
    json_path, _ = _report_paths(a.out)
    best = result.best.to_dict()
    # wall time varies between runs, so it lives only in the manifest
    wall = {t.trial_index: t.wall_time for t in result.trials}
    best.pop("wall_time")
    trials = [{k: v for k, v in t.to_dict().items() if k != "wall_time"} for t in result.trials]
    run.write_json(json_path, {"best": best, "trials": trials, "space": space.to_dict()})
    run.write_text(a.log or json_path.with_suffix(".csv"), result.to_csv())
    run.manifest.notes["trial_wall_time_s"] = wall


def cmd_theory_curve(a, run: Run) -> None:
    ckpt = tmae.EncoderCheckpoint.load(run.input(a.checkpoint))
    data = _select(read_dataset(run.input(a.data)), _countries(a.use_countries))
    curve = protocols.sample_complexity_curve(ckpt, data, a.sizes, a.n_seeds, a.seed, a.test_fraction, a.head_l2, a.jobs)
    json_path, text_path = _report_paths(a.out)
    run.write_json(json_path, curve.to_dict())
    run.write_text(text_path, curve.to_text())


# ---------------------------------------------------------------------------
# Parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of option values (flags override it)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed (default 42)")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for independent jobs")
    p.add_argument("--manifest", help="manifest path (default: <first output>.manifest.json)")
    p.add_argument("-v", "--verbose", action="store_true")


def _training(p: argparse.ArgumentParser, learner: bool = True) -> None:
    d = FinetuneConfig()
    if learner:
        p.add_argument("--learner", choices=LEARNERS, default="pretrained")
    p.add_argument("--checkpoint", help="pre-trained encoder checkpoint")
    p.add_argument("--lr", type=float, default=d.learning_rate)
    p.add_argument("--l2", type=float, default=d.l2)
    p.add_argument("--dropout", type=float, default=d.dropout)
    p.add_argument("--patience", type=int, default=d.patience)
    p.add_argument("--max-epochs", type=int, default=d.max_epochs)
    p.add_argument("--batch-size", type=int, default=d.batch_size)
    p.add_argument("--val-fraction", type=float, default=d.val_fraction)
    p.add_argument("--head-init", choices=("zeros", "glorot"), default=d.head_init)
    p.add_argument("--freeze-encoder", action="store_true")
    g = gbdt.GbdtConfig()
    p.add_argument("--gbdt-trees", type=int, default=g.n_estimators)
    p.add_argument("--gbdt-depth", type=int, default=g.max_depth)
    p.add_argument("--gbdt-lr", type=float, default=g.learning_rate)
    p.add_argument("--logreg-l2", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ecdtransfer", description="Cross-country transfer of child development predictors.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate the synthetic multi-country benchmark")
    _common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--countries", type=int, default=12)
    p.add_argument("--rows", type=int, default=2000, help="rows per country")
    p.add_argument("--shift", type=float, default=0.5, help="cross-country shift scale")
    p.add_argument("--label-noise", type=float, default=0.0)
    p.add_argument("--quintile-noise", type=float, nargs=5, default=None, metavar="RATE")
    p.add_argument("--synth-config", help="JSON file with every generator field (overrides the flags above)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="harmonize, impute and audit a survey extract")
    _common(p)
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--imputation", choices=("median", "chained-blind", "chained-congenial"), default="median")
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--report", help="audit report path (default: <out>.audit.json)")
    p.set_defaults(func=cmd_ingest)

    d = tmae.PretrainConfig()
    p = sub.add_parser("pretrain", help="masked-autoencoder pre-training on unlabeled features")
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--use-countries", help="comma-separated countries to pre-train on (default: all)")
    p.add_argument("--epochs", type=int, default=d.epochs)
    p.add_argument("--batch-size", type=int, default=d.batch_size)
    p.add_argument("--lr", type=float, default=d.learning_rate)
    p.add_argument("--mask-ratio", type=float, default=d.mask_ratio)
    p.add_argument("--hidden", type=int, nargs=2, default=list(d.hidden_dims), metavar=("H1", "H2"))
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("finetune", help="train a classifier (fine-tuned encoder or a baseline)")
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--use-countries", help="comma-separated training countries (default: all)")
    _training(p)
    p.add_argument("--ensemble", type=int, default=1, help="number of seed members")
    p.add_argument("--member-seeds", type=int, nargs="+", default=None)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("eval", help="evaluation protocols")
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="report path (.json; a .txt twin is written too)")
    p.add_argument("--protocol", choices=("holdout", "bootstrap", "loco", "fewshot", "zeroshot"), required=True)
    p.add_argument("--model", help="trained model (holdout, zeroshot)")
    p.add_argument("--test-countries", help="comma-separated test countries")
    p.add_argument("--n-resamples", type=int, default=protocols.DEFAULT_RESAMPLES)
    p.add_argument("--fewshot-country", help="target country that supplies fine-tuning rows")
    p.add_argument("--target-countries", help="target-region countries (default: the fewshot country's region)")
    p.add_argument("--sizes", type=int, nargs="+", default=list(protocols.DEFAULT_FEWSHOT_SIZES))
    p.add_argument("--n-seeds", type=int, default=10)
    p.add_argument("--models", nargs="+", default=["pretrained", "gbdt", "cold_mlp"])
    p.add_argument("--csv", help="few-shot records CSV (default: <out>.csv)")
    _training(p)
    p.set_defaults(func=cmd_eval)

    for name, func, helptext in (
        ("importance", cmd_importance, "permutation feature importance"),
        ("calibration", cmd_calibration, "Brier score, ECE and reliability table"),
        ("equity", cmd_equity, "AUC by wealth quintile"),
    ):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--model", required=True)
        p.add_argument("--data", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--test-countries", help="comma-separated countries to evaluate on (default: all)")
        if name == "importance":
            p.add_argument("--n-repeats", type=int, default=100)
        if name == "calibration":
            p.add_argument("--n-bins", type=int, default=10)
        p.set_defaults(func=func)

    p = sub.add_parser("divergence", help="proxy A-distance between two country groups")
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--source", required=True, help="comma-separated source countries")
    p.add_argument("--target", required=True, help="comma-separated target countries")
    p.add_argument("--folds", type=int, default=5)
    p.set_defaults(func=cmd_divergence)

    p = sub.add_parser("hpo", help="random search with the mean + 2*min objective")
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--space", help="JSON search space (default: the standard bounds)")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--train-countries", required=True)
    p.add_argument("--val-countries", required=True)
    p.add_argument("--pretrain-epochs", type=int, default=100)
    p.add_argument("--max-epochs", type=int, default=200)
    p.add_argument("--log", help="search log CSV (default: <out>.csv)")
    p.set_defaults(func=cmd_hpo)

    p = sub.add_parser("theory-curve", help="AUC deficit of a frozen-encoder head versus sample size")
    _common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--use-countries", help="comma-separated target countries (default: all)")
    p.add_argument("--sizes", type=int, nargs="+", default=list(protocols.DEFAULT_THEORY_SIZES))
    p.add_argument("--n-seeds", type=int, default=10)
    p.add_argument("--test-fraction", type=float, default=0.3)
    p.add_argument("--head-l2", type=float, default=1e-3)
    p.set_defaults(func=cmd_theory_curve)
    return parser


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    """Parse flags on top of values from ``--config``."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            values = json.loads(resolve_input(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            parser.exit(EXIT_USAGE, f"ecdtransfer: error: cannot read config {args.config}: {exc}\n")
        if not isinstance(values, dict):
            parser.exit(EXIT_USAGE, "ecdtransfer: error: config file must hold a JSON object\n")
        sub = parser._subparsers._group_actions[0].choices[args.command]  # type: ignore[union-attr]
        known = {a.dest for a in sub._actions}
        values = {k.replace("-", "_"): v for k, v in values.items()}
        unknown = sorted(set(values) - known - {"command"})
        if unknown:
            parser.exit(EXIT_USAGE, f"ecdtransfer: error: unknown config keys: {', '.join(unknown)}\n")
        values.pop("command", None)
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    if args.jobs < 1:
        print("ecdtransfer: error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    run = Run(args, argv)
    try:
        args.func(args, run)
    except UsageError as exc:
        print(f"ecdtransfer: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (nn.NumericalError, FloatingPointError) as exc:
        print(f"ecdtransfer: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, SchemaError, UndefinedMetricError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"ecdtransfer: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"ecdtransfer: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    run.finish()
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
