"""One-config replication of a full rating study.

A declarative config drives the whole pipeline: ingest (or simulate),
agreement tables, intra-rater alpha, ensembles, joint estimation, fit
flags, and report rendering.  Every artifact lands in the output
directory and is listed with a content hash in ``manifest.json``, so a
rerun can be verified byte for byte.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .agreement import cronbach_alpha, qwk_matrix
from .ensemble import EnsembleSpec, build_ensemble
from .estimate import EstimationConfig, estimate, severity_classification
from .fitstats import FitCuts, STRINGENT_CUTS, fit_statistics, with_flags
from .ratings import ingest_csv
from .report import (
    Table,
    descriptive_table,
    estimates_summary,
    measure_table,
    render_wright,
)
from .simulate import SimSpec, simulate

OUTPUT_DIR_ENV = "FACETKIT_OUTPUT_DIR"


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name for reporting."""

    def __init__(self, stage, message):
        super().__init__(message)
        self.stage = stage


@dataclass(frozen=True)
class StudyConfig:
    """Everything needed to reproduce one analysis run."""

    input: dict                      # {"csv": path, ...} or {"simulate": spec dict}
    benchmarks: tuple = ()
    alpha_groups: dict = field(default_factory=dict)   # name -> item tuple
    ensembles: tuple = ()            # of EnsembleSpec
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    fit_cuts: FitCuts = STRINGENT_CUTS
    output_dir: str = None
    seed: int = None
    base_dir: str = "."

    @classmethod
    def from_json_dict(cls, d: dict, base_dir=".") -> "StudyConfig":
        ensembles = tuple(
            EnsembleSpec(
                e["name"], tuple(e["members"]),
                e.get("rounding", "half-away-from-zero"),
            )
            for e in d.get("ensembles", ())
        )
        cuts = d.get("fit_cuts")
        return cls(
            input=d["input"],
            benchmarks=tuple(d.get("benchmarks", ())),
            alpha_groups={k: tuple(v) for k, v in d.get("alpha_groups", {}).items()},
            ensembles=ensembles,
            estimation=EstimationConfig.from_dict(d.get("estimation", {})),
            fit_cuts=STRINGENT_CUTS if cuts is None else FitCuts(*cuts),
            output_dir=d.get("output_dir"),
            seed=d.get("seed"),
            base_dir=str(base_dir),
        )

    @classmethod
    def from_json_file(cls, path) -> "StudyConfig":
        path = Path(path)
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_json_dict(json.load(f), base_dir=path.parent)


def _resolve_output_dir(config, override=None):
    out = override or config.output_dir or os.environ.get(OUTPUT_DIR_ENV)
    if not out:
        raise StageError(
            "setup",
            f"no output directory: set output_dir in the config, pass --out, "
            f"or export {OUTPUT_DIR_ENV}",
        )
    return Path(out)


def _load_input(config, seed_override=None):
    spec = config.input
    if "csv" in spec:
        path = Path(config.base_dir) / spec["csv"]
        if not path.exists():
            raise StageError("ingest", f"input file not found: {path}")
        return ingest_csv(path, spec.get("scale_min"), spec.get("scale_max"))
    if "simulate" in spec:
        sim = SimSpec.from_json_dict(spec["simulate"])
        seed = seed_override if seed_override is not None else config.seed
        if seed is not None:
            sim = dataclasses.replace(sim, seed=int(seed))
        tensor, _ = simulate(sim)
        return tensor
    raise StageError("ingest", "config input must contain 'csv' or 'simulate'")


def _check_ids(tensor, config):
    for rater in config.benchmarks:
        if rater not in tensor.ids.rater_index:
            raise StageError("agreement", f"unknown rater id {rater!r} in benchmarks")
    for group, items in config.alpha_groups.items():
        for item in items:
            if item not in tensor.ids.item_index:
                raise StageError("alpha", f"unknown item id {item!r} in group {group!r}")
    for spec in config.ensembles:
        for member in spec.members:
            if member not in tensor.ids.rater_index:
                raise StageError(
                    "ensemble", f"unknown rater id {member!r} in ensemble {spec.name!r}"
                )


def _agreement_table(table) -> Table:
    rows = []
    for rec in table.to_records():
        rows.append(
            {
                "candidate": rec["candidate"],
                "benchmark": rec["benchmark"],
                "items": rec["items"],
                "n_pairs": rec["n_pairs"],
                "kappa": float("nan") if rec["kappa"] is None else rec["kappa"],
                "degenerate": str(rec["degenerate"]).lower(),
            }
        )
    return Table(
        ("candidate", "benchmark", "items", "n_pairs", "kappa", "degenerate"),
        tuple(rows),
    )


def run_study(config: StudyConfig, output_dir=None, seed=None):
    """Execute the pipeline; returns (manifest dict, output path).

    Raises :class:`StageError` naming the failing stage.  Artifacts
    produced before the failure are still listed in a partial manifest.
    """
    out = _resolve_output_dir(config, output_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = []

    def save_text(name, text):
        path = out / name
        path.write_text(text, encoding="utf-8")
        artifacts.append(name)

    def save_table(name, table):
        save_text(name, table.to_csv_text())

    def save_json(name, obj):
        save_text(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def write_manifest():
        listing = [
            {
                "path": name,
                "sha256": hashlib.sha256((out / name).read_bytes()).hexdigest(),
            }
            for name in sorted(artifacts)
        ]
        manifest = {"artifacts": listing}
        (out / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        return manifest

    def stage(name, fn):
        try:
            return fn()
        except StageError:
            write_manifest()
            raise
        except Exception as e:
            write_manifest()
            raise StageError(name, str(e)) from e

    tensor = stage("ingest", lambda: _load_input(config, seed))
    stage("validate", lambda: _check_ids(tensor, config))
    stage("ingest", lambda: save_text("tensor.json", tensor.to_json_text()))

    benchmarks = list(config.benchmarks) or list(tensor.ids.raters[:1])
    candidates = [r for r in tensor.ids.raters if r not in benchmarks]
    item_groups = [(item,) for item in tensor.ids.items]

    def do_agreement():
        table = qwk_matrix(tensor, benchmarks, candidates, item_groups)
        save_table("agreement.csv", _agreement_table(table))
        save_json("agreement.json", _agreement_table(table).to_json_dict())

    stage("agreement", do_agreement)

    def do_alpha():
        groups = config.alpha_groups or {"all-items": tuple(tensor.ids.items)}
        rows = []
        for group_name in sorted(groups):
            items = groups[group_name]
            for rater in tensor.ids.raters:
                res = cronbach_alpha(tensor, rater, items)
                rows.append(
                    {
                        "rater": rater,
                        "group": group_name,
                        "n_items": res.n_items,
                        "n_persons": res.n_persons,
                        "alpha": res.alpha,
                    }
                )
        save_table(
            "alpha.csv",
            Table(("rater", "group", "n_items", "n_persons", "alpha"), tuple(rows)),
        )

    stage("alpha", do_alpha)

    def do_ensembles():
        if not config.ensembles:
            return
        extended = tensor
        for spec in config.ensembles:
            extended = build_ensemble(extended, spec)
        names = [spec.name for spec in config.ensembles]
        table = qwk_matrix(extended, benchmarks, names, item_groups)
        save_table("ensemble_agreement.csv", _agreement_table(table))

    stage("ensemble", do_ensembles)

    estimates = stage("estimate", lambda: estimate(tensor, config.estimation))
    stage("estimate", lambda: save_text("estimates.json", estimates.to_json_text()))

    def do_fit():
        fit = fit_statistics(tensor, estimates, "rater")
        return with_flags(fit, config.fit_cuts)

    rater_fit = stage("fit", do_fit)
    stage("fit", lambda: save_table("raters.csv", measure_table(estimates, rater_fit)))

    def do_report():
        save_text("wright.txt", render_wright(estimates, "ascii"))
        save_text("wright.svg", render_wright(estimates, "svg"))
        save_table("descriptives.csv", descriptive_table(tensor))
        summary = {
            "estimates": estimates_summary(estimates),
            "severity_labels": severity_classification(
                estimates, allow_unconverged=True
            ),
            "fit_flags": dict(zip(rater_fit.element_ids, rater_fit.flags)),
            "fit_cuts": [config.fit_cuts.lower, config.fit_cuts.upper],
        }
        save_json("summary.json", summary)

    stage("report", do_report)
    manifest = write_manifest()
    return manifest, out
