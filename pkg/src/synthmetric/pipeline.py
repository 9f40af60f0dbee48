"""Run configuration, orchestration and the persisted result tree.

Layout under ``<out_dir>/<run_id>/``::

    manifest.json
    runs/<dataset>/<generator>/<strategy>/<classifier>/fold_<i>.json
    runs/<dataset>/<generator>/fidelity/fold_<i>.json
    analysis/weights_<dataset>.json
    analysis/{heatmap,heatmap_recall,heatmap_f1,boxplot,properties}.csv
    analysis/cells.json
    figures/heatmap.svg
    figures/boxplot.svg

Everything under ``analysis/`` and ``figures/`` is derived from ``runs/`` by
:func:`build_report`, so ``report`` can regenerate it from disk.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import __version__, analysis, figures
from .builtin import DEFAULT_PLANTED, PlantedSpec, make_planted
from .classifiers import ClassifierKind, ClassifierSpec
from .errors import ConfigInvalid, SchemaMismatch, SynthMetricError
from .fidelity import FidelityVector
from .generators import GeneratorKind, GeneratorSpec
from .rng import check_seed, derive_seed
from .supermetric import FitConfig, FitResult, RunRecord, fit_weights
from .tabular import Dataset, FeatureKind, load_csv
from .utility import Strategy, TstrResult, UtilityReport, run_tstr

log = logging.getLogger(__name__)

SEED_ENV = "SYNTHMETRIC_SEED"
EXTERNAL_FAMILY = "external"


class PipelineError(SynthMetricError, RuntimeError):
    """A run failed; ``coordinate`` names the failing (dataset, generator, fold)."""

    def __init__(self, message: str, coordinate: Mapping[str, Any]):
        super().__init__(message)
        self.coordinate = dict(coordinate)


# -- configuration ----------------------------------------------------------


@dataclass(frozen=True)
class DatasetEntry:
    id: str
    path: str | None = None
    label: str = "label"
    builtin: PlantedSpec | None = None

    def load(self) -> Dataset:
        if self.builtin is not None:
            return make_planted(self.builtin)
        return load_csv(self.path, self.label)

    def to_dict(self) -> dict[str, Any]:
        if self.builtin is not None:
            return {"id": self.id, "builtin": self.builtin.to_dict()}
        return {"id": self.id, "path": self.path, "label": self.label}


@dataclass(frozen=True)
class GeneratorEntry:
    id: str
    spec: GeneratorSpec

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, **self.spec.to_dict()}


@dataclass(frozen=True)
class RunConfig:
    datasets: tuple[DatasetEntry, ...]
    generators: tuple[GeneratorEntry, ...]
    classifiers: tuple[ClassifierSpec, ...]
    k_folds: int = 5
    fit: FitConfig = field(default_factory=FitConfig)
    seed: int = 1
    out_dir: str = "results"

    def to_dict(self, include_out_dir: bool = True) -> dict[str, Any]:
        fit = self.fit.to_dict()
        fit.pop("seed")
        out: dict[str, Any] = {
            "seed": self.seed,
            "k_folds": self.k_folds,
            "datasets": [d.to_dict() for d in self.datasets],
            "generators": [g.to_dict() for g in self.generators],
            "classifiers": [c.to_dict() for c in self.classifiers],
            "fit": fit,
        }
        if include_out_dir:
            out["out_dir"] = self.out_dir
        return out

    @property
    def run_id(self) -> str:
        canon = json.dumps(self.to_dict(include_out_dir=False), sort_keys=True)
        return "run-" + hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]

    def dataset(self, dataset_id: str) -> DatasetEntry:
        for d in self.datasets:
            if d.id == dataset_id:
                return d
        raise ConfigInvalid(f"no dataset with id {dataset_id!r} in the run config")

    def fit_config(self, dataset_id: str, lambda_gap: float | None = None) -> FitConfig:
        return FitConfig(
            lambda_gap=self.fit.lambda_gap if lambda_gap is None else lambda_gap,
            n_random=self.fit.n_random,
            refine_passes=self.fit.refine_passes,
            refine_step=self.fit.refine_step,
            polish_starts=self.fit.polish_starts,
            polish_maxiter=self.fit.polish_maxiter,
            seed=derive_seed(self.seed, "fit", dataset_id),
        )

    def dataset_seed(self, dataset_id: str) -> int:
        return derive_seed(self.seed, "dataset", dataset_id)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigInvalid(message)


def _safe_id(value: Any, what: str) -> str:
    _require(isinstance(value, str) and value != "", f"{what} id must be a non-empty string")
    _require(
        all(ch.isalnum() or ch in "-_." for ch in value) and value not in (".", ".."),
        f"{what} id {value!r} may only contain letters, digits, '-', '_' and '.'",
    )
    return value


def config_from_dict(raw: Mapping[str, Any], base_dir: str | Path = ".") -> RunConfig:
    """Validate a parsed JSON config. Relative CSV paths resolve against ``base_dir``."""
    _require(isinstance(raw, Mapping), "config must be a JSON object")
    unknown = set(raw) - {"seed", "k_folds", "datasets", "generators", "classifiers", "fit", "out_dir"}
    _require(not unknown, f"unknown config keys: {sorted(unknown)}")
    try:
        datasets = []
        for entry in raw.get("datasets", []):
            did = _safe_id(entry.get("id"), "dataset")
            if "builtin" in entry:
                datasets.append(DatasetEntry(did, builtin=PlantedSpec.from_dict(entry["builtin"])))
            else:
                _require("path" in entry, f"dataset {did!r} needs 'path' or 'builtin'")
                path = Path(entry["path"])
                if not path.is_absolute():
                    path = Path(base_dir) / path
                _require(path.is_file(), f"dataset {did!r}: file {str(path)!r} does not exist")
                datasets.append(DatasetEntry(did, path=str(path), label=entry.get("label", "label")))
        generators = []
        for entry in raw.get("generators", []):
            gid = _safe_id(entry.get("id"), "generator")
            spec = GeneratorSpec.from_dict({k: v for k, v in entry.items() if k != "id"})
            _require(spec.family != EXTERNAL_FAMILY, f"family {EXTERNAL_FAMILY!r} is reserved")
            generators.append(GeneratorEntry(gid, spec))
        classifiers = []
        for entry in raw.get("classifiers", []):
            if isinstance(entry, str):
                classifiers.append(ClassifierSpec(ClassifierKind(entry)))
            else:
                classifiers.append(
                    ClassifierSpec(ClassifierKind(entry["kind"]), entry.get("hyperparameters", {}))
                )
        fit_raw = dict(raw.get("fit", {}))
        fit_raw.pop("seed", None)
        fit = FitConfig(**fit_raw)
        seed = check_seed(raw.get("seed", 1))
        k = int(raw.get("k_folds", 5))
    except ConfigInvalid:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"invalid config: {exc}") from exc

    _require(datasets, "config lists no datasets")
    _require(generators, "config lists no generators")
    _require(classifiers, "config lists no classifiers")
    _require(k >= 2, "k_folds must be >= 2")
    for what, ids in (
        ("dataset", [d.id for d in datasets]),
        ("generator", [g.id for g in generators]),
        ("classifier", [c.kind for c in classifiers]),
    ):
        _require(len(set(ids)) == len(ids), f"{what} ids must be unique")
    return RunConfig(
        datasets=tuple(datasets),
        generators=tuple(generators),
        classifiers=tuple(classifiers),
        k_folds=k,
        fit=fit,
        seed=seed,
        out_dir=str(raw.get("out_dir", "results")),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigInvalid(f"config file {str(path)!r} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config file {str(path)!r} is not valid JSON: {exc}") from None
    return config_from_dict(raw, base_dir=path.parent)


def default_generators() -> list[GeneratorEntry]:
    out = [
        GeneratorEntry("independent_marginals", GeneratorSpec(GeneratorKind.INDEPENDENT_MARGINALS)),
        GeneratorEntry("gaussian_copula", GeneratorSpec(GeneratorKind.GAUSSIAN_COPULA)),
        GeneratorEntry("smote_k3", GeneratorSpec(GeneratorKind.SMOTE, k_neighbors=3)),
        GeneratorEntry("smote_k5", GeneratorSpec(GeneratorKind.SMOTE, k_neighbors=5)),
    ]
    for eps in (0.0, 0.05, 0.1, 0.2, 0.3, 0.4):
        out.append(
            GeneratorEntry(
                f"noisy_copy_e{round(eps * 100):03d}",
                GeneratorSpec(GeneratorKind.NOISY_COPY, flip_rate=eps),
            )
        )
    return out


def default_config(seed: int = 1, out_dir: str = "results") -> RunConfig:
    """10 generators x 5 planted datasets x 4 classifiers x 5 folds."""
    return RunConfig(
        datasets=tuple(DatasetEntry(did, builtin=spec) for did, spec in DEFAULT_PLANTED),
        generators=tuple(default_generators()),
        classifiers=tuple(ClassifierSpec(k) for k in ClassifierKind),
        k_folds=5,
        fit=FitConfig(),
        seed=check_seed(seed),
        out_dir=out_dir,
    )


def with_seed(cfg: RunConfig, seed: int) -> RunConfig:
    return RunConfig(
        cfg.datasets, cfg.generators, cfg.classifiers, cfg.k_folds, cfg.fit, check_seed(seed), cfg.out_dir
    )


def resolve_seed(cfg: RunConfig, cli_seed: int | None = None) -> RunConfig:
    """``--seed`` beats ``$SYNTHMETRIC_SEED`` beats the config file."""
    if cli_seed is not None:
        return with_seed(cfg, cli_seed)
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return with_seed(cfg, int(env))
        except ValueError as exc:
            raise ConfigInvalid(f"{SEED_ENV}={env!r} is not a 64-bit unsigned integer") from exc
    return cfg


# -- serialisation ----------------------------------------------------------


def dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write(root: Path, rel: str, text: str) -> None:
    path = root / rel
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def report_relpath(dataset: str, generator: str, report: UtilityReport) -> str:
    return (
        f"runs/{dataset}/{generator}/{report.strategy.value}/"
        f"{report.classifier.slug}/fold_{report.fold}.json"
    )


def fidelity_relpath(dataset: str, generator: str, fold: int) -> str:
    return f"runs/{dataset}/{generator}/fidelity/fold_{fold}.json"


def tstr_files(
    dataset: str, generator: str, family: str, result: TstrResult, external: bool
) -> dict[str, str]:
    files = {}
    for rep in result.reports:
        files[report_relpath(dataset, generator, rep)] = dump_json(
            {"dataset": dataset, "generator": generator, **rep.to_dict()}
        )
    for fold, vec in enumerate(result.fidelity):
        files[fidelity_relpath(dataset, generator, fold)] = dump_json(
            {
                "dataset": dataset,
                "generator": generator,
                "family": family,
                "external": external,
                "fold": fold,
                "scores": vec.to_dict(),
            }
        )
    return files


# -- execution --------------------------------------------------------------


def _run_task(
    cfg: RunConfig, dataset: DatasetEntry, real: Dataset, gen: GeneratorEntry
) -> dict[str, str]:
    try:
        result = run_tstr(
            real,
            gen.spec,
            cfg.classifiers,
            cfg.k_folds,
            cfg.dataset_seed(dataset.id),
            generator_id=gen.id,
        )
    except SynthMetricError as exc:
        coordinate = {"dataset": dataset.id, "generator": gen.id, "fold": getattr(exc, "fold", None)}
        raise PipelineError(f"{type(exc).__name__}: {exc}", coordinate) from exc
    return tstr_files(dataset.id, gen.id, gen.spec.family, result, external=False)


def _manifest(cfg: RunConfig, status: str, error: dict[str, Any] | None = None) -> dict[str, Any]:
    return {
        "tool": "synthmetric",
        "version": __version__,
        "run_id": cfg.run_id,
        "seed": cfg.seed,
        "config": cfg.to_dict(include_out_dir=False),
        "status": status,
        "error": error,
        "external_ingests": [],
    }


def run_pipeline(cfg: RunConfig, jobs: int = 1) -> Path:
    """Execute the full benchmark and return the run directory.

    Output bytes depend only on ``cfg`` (including its seed), never on
    ``jobs``: tasks are independent and files are written in sorted order.
    """
    root = Path(cfg.out_dir) / cfg.run_id
    root.mkdir(parents=True, exist_ok=True)
    try:
        reals = {d.id: d.load() for d in cfg.datasets}
    except SynthMetricError as exc:
        error = {"type": type(exc).__name__, "message": str(exc), "dataset": None}
        _write(root, "manifest.json", dump_json(_manifest(cfg, "error", error)))
        raise PipelineError(str(exc), {}) from exc

    tasks = [(d, g) for d in cfg.datasets for g in cfg.generators]
    files: dict[str, str] = {}
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_run_task, cfg, d, reals[d.id], g) for d, g in tasks]
                for fut in futures:
                    files.update(fut.result())
        else:
            for d, g in tasks:
                files.update(_run_task(cfg, d, reals[d.id], g))
                log.info("finished %s / %s", d.id, g.id)
    except PipelineError as exc:
        error = {"type": "PipelineError", "message": str(exc), **exc.coordinate}
        _write(root, "manifest.json", dump_json(_manifest(cfg, "error", error)))
        raise

    for rel in sorted(files):
        _write(root, rel, files[rel])
    manifest = _manifest(cfg, "ok")
    _write(root, "manifest.json", dump_json(manifest))
    build_report(root)
    return root


# -- reading a result tree back ---------------------------------------------


def read_manifest(run_dir: str | Path) -> dict[str, Any]:
    path = Path(run_dir) / "manifest.json"
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigInvalid(f"{str(run_dir)!r} is not a run directory (no manifest.json)") from None


def config_from_manifest(manifest: Mapping[str, Any], out_dir: str = "results") -> RunConfig:
    raw = dict(manifest["config"])
    raw["out_dir"] = out_dir
    return config_from_dict(raw)


@dataclass
class RunTree:
    records: list[RunRecord]
    families: dict[str, str]


def load_records(run_dir: str | Path) -> RunTree:
    """Rebuild one RunRecord per (dataset, generator, fold) from ``runs/``."""
    runs_dir = Path(run_dir) / "runs"
    records = []
    families: dict[str, str] = {}
    for fid_path in sorted(runs_dir.glob("*/*/fidelity/fold_*.json")):
        meta = json.loads(fid_path.read_text(encoding="utf-8"))
        gen_dir = fid_path.parent.parent
        fold = int(meta["fold"])
        tstr = sorted(gen_dir.glob(f"{Strategy.TSTR.value}/*/fold_{fold}.json"))
        if not tstr:
            raise SchemaMismatch(f"no TSTR reports for {gen_dir} fold {fold}")
        reps = [json.loads(p.read_text(encoding="utf-8")) for p in tstr]
        families[meta["generator"]] = meta["family"]
        records.append(
            RunRecord(
                generator_id=meta["generator"],
                dataset_id=meta["dataset"],
                fidelity=FidelityVector.from_dict(meta["scores"]),
                recall=float(np.mean([r["recall"] for r in reps])),
                f1=float(np.mean([r["f1"] for r in reps])),
                fold=fold,
                external=bool(meta["external"]),
            )
        )
    return RunTree(records, families)


def build_report(run_dir: str | Path) -> dict[str, FitResult]:
    """Fit weights per dataset and regenerate ``analysis/`` and ``figures/``."""
    root = Path(run_dir)
    cfg = config_from_manifest(read_manifest(root))
    tree = load_records(root)
    by_dataset: dict[str, list[RunRecord]] = defaultdict(list)
    for r in tree.records:
        by_dataset[r.dataset_id].append(r)

    fits = {}
    for did in sorted(by_dataset):
        runs = sorted(by_dataset[did], key=lambda r: (r.generator_id, r.fold))
        fits[did] = fit_weights(runs, cfg.fit_config(did))
        _write(root, f"analysis/weights_{did}.json", dump_json(fits[did].to_dict()))

    weights = {did: f.weights for did, f in fits.items()}
    cells = analysis.per_generator_correlations(tree.records, weights)
    _write(
        root,
        "analysis/cells.json",
        dump_json({"sample_axis": analysis.SAMPLE_AXIS, "cells": [c.to_dict() for c in cells]}),
    )
    heat = analysis.build_heatmap_table(cells)
    _write(root, "analysis/heatmap.csv", heat.to_csv())
    for target in analysis.TARGETS:
        _write(root, f"analysis/heatmap_{target}.csv", analysis.build_heatmap_table(cells, target).to_csv())
    boxes = analysis.build_boxplot_table(cells, skip_empty=True)
    _write(root, "analysis/boxplot.csv", analysis.boxplot_csv(boxes))
    _write(
        root,
        "analysis/properties.csv",
        analysis.properties_csv(analysis.property_rows(cells, tree.families)),
    )

    # figures are drawn from the CSV twins, not from in-memory state
    heat_csv = (root / "analysis/heatmap.csv").read_text(encoding="utf-8")
    _write(root, "figures/heatmap.svg", figures.render_heatmap_svg(analysis.HeatmapTable.from_csv(heat_csv)))
    box_csv = (root / "analysis/boxplot.csv").read_text(encoding="utf-8")
    pooled = [b for b in analysis.boxplot_from_csv(box_csv) if b.target == "pooled"]
    if pooled:
        box_svg = figures.render_boxplot_svg(pooled)
    else:
        # too few (dataset, fold) points per generator for any correlation
        box_svg = figures.render_empty_boxplot_svg("no defined correlations")
    _write(root, "figures/boxplot.svg", box_svg)
    return fits


def refit_weights(run_dir: str | Path, dataset_id: str, lambda_gap: float | None = None) -> FitResult:
    root = Path(run_dir)
    cfg = config_from_manifest(read_manifest(root))
    runs = sorted(
        (r for r in load_records(root).records if r.dataset_id == dataset_id),
        key=lambda r: (r.generator_id, r.fold),
    )
    if not runs:
        raise ConfigInvalid(f"run has no records for dataset {dataset_id!r}")
    return fit_weights(runs, cfg.fit_config(dataset_id, lambda_gap))


# -- external synthetic data ------------------------------------------------


def load_external(real: Dataset, syn_csv: str | Path) -> Dataset:
    """Read a synthetic CSV and coerce it onto ``real``'s schema.

    Raises:
        SchemaMismatch: feature names/order differ, or a column that is binary
            in the real data holds other values.
    """
    syn = load_csv(syn_csv, real.schema.label_name)
    if syn.schema.feature_names != real.schema.feature_names:
        raise SchemaMismatch(
            f"synthetic columns {list(syn.schema.feature_names)} do not match "
            f"real columns {list(real.schema.feature_names)}"
        )
    for name, want, got in zip(
        real.schema.feature_names, real.schema.feature_kinds, syn.schema.feature_kinds
    ):
        if want is FeatureKind.BINARY and got is not FeatureKind.BINARY:
            raise SchemaMismatch(f"feature {name!r} is binary in the real data but not in the synthetic data")
    return Dataset(real.schema, syn.rows, syn.labels)


def ingest_external_synthetic(
    run_dir: str | Path, real_id: str, syn_csv: str | Path, generator_id: str
) -> list[RunRecord]:
    """Benchmark an externally generated synthetic CSV inside an existing run.

    The same synthetic table is reused for every fold; fidelity is measured
    against each fold's real training split and classifiers are scored on the
    held-out real fold. Records are tagged ``external=True`` and the analysis
    and figures are regenerated with the extra generator column.
    """
    root = Path(run_dir)
    manifest = read_manifest(root)
    cfg = config_from_manifest(manifest)
    _safe_id(generator_id, "generator")
    if generator_id in {g.id for g in cfg.generators}:
        raise ConfigInvalid(f"generator id {generator_id!r} is already used by the run config")
    real = cfg.dataset(real_id).load()
    syn = load_external(real, syn_csv)
    result = run_tstr(
        real,
        None,
        cfg.classifiers,
        cfg.k_folds,
        cfg.dataset_seed(real_id),
        generator_id=generator_id,
        external=syn,
    )
    files = tstr_files(real_id, generator_id, EXTERNAL_FAMILY, result, external=True)
    for rel in sorted(files):
        _write(root, rel, files[rel])

    digest = hashlib.sha256(Path(syn_csv).read_bytes()).hexdigest()
    entry = {"dataset": real_id, "generator": generator_id, "csv": str(syn_csv), "sha256": digest}
    ingests = [e for e in manifest.get("external_ingests", []) if e["generator"] != generator_id or e["dataset"] != real_id]
    manifest["external_ingests"] = sorted([*ingests, entry], key=lambda e: (e["dataset"], e["generator"]))
    _write(root, "manifest.json", dump_json(manifest))
    build_report(root)

    records = []
    for fold, vec in enumerate(result.fidelity):
        recall, f1 = result.tstr_means(fold)
        records.append(RunRecord(generator_id, real_id, vec, recall, f1, fold=fold, external=True))
    return records


def expected_run_files(cfg: RunConfig) -> list[str]:
    """Every path the run config obliges under ``runs/``."""
    paths = []
    for d in cfg.datasets:
        for g in cfg.generators:
            for fold in range(cfg.k_folds):
                paths.append(fidelity_relpath(d.id, g.id, fold))
                for strategy in Strategy:
                    for c in cfg.classifiers:
                        paths.append(
                            f"runs/{d.id}/{g.id}/{strategy.value}/{c.kind.slug}/fold_{fold}.json"
                        )
    return sorted(paths)


def analysis_files(dataset_ids: Sequence[str]) -> list[str]:
    fixed = [
        "analysis/boxplot.csv",
        "analysis/cells.json",
        "analysis/heatmap.csv",
        "analysis/heatmap_f1.csv",
        "analysis/heatmap_recall.csv",
        "analysis/properties.csv",
        "figures/boxplot.svg",
        "figures/heatmap.svg",
    ]
    return sorted([*fixed, *(f"analysis/weights_{d}.json" for d in dataset_ids)])
