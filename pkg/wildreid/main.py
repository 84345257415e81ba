"""
Pipeline orchestration: catalog → splits → extract → verify → predict → score → report.

Every stage reads the previous stage's in-memory results. With ``resume``,
stages already completed under the same result config are read back from
out_dir instead (catalog, splits, decisions). Expensive intermediates are
cached on disk, keyed by content and parameter hashes:
  <cache_root>/features/<k[:2]>/<k>.wrfs     feature sets
  <cache_root>/cache.db                       pair decisions + stage records
Deleting any cache file only causes recomputation.

Artifacts under out_dir:
  catalog/   manifest.csv, stats.json, source.json
  splits/    <split>.csv, summary.csv, families.json
  decisions/ decisions.csv
  graph/     edges.txt, <split>_components.csv, <split>_predictions.csv, <split>_individual_edges.csv
  reports/   closed_set.csv, open_set.csv, individuals/, time_gap.csv, comparison.csv, run_manifest.json
"""
from __future__ import annotations

import hashlib
import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Callable, Iterator

import cv2
import numpy as np
import pandas as pd
import scipy

from wildreid import __version__
from wildreid.catalog import Catalog, compute_stats, ingest_manifest, write_manifest
from wildreid.config import PipelineConfig, SplitSpec
from wildreid.core.errors import StageError, ValidationError
from wildreid.core.pool import WorkerPool
from wildreid.core.store import CacheStore
from wildreid.evaluation import (
    BiasSummary,
    ClosedSetReport,
    OpenSetReport,
    TimeGapCurve,
    aggregate_open,
    compare_splits,
    score_closed,
    score_open,
    time_gap_curve,
    write_closed_reports,
    write_comparisons,
    write_individual_scores,
    write_open_reports,
    write_time_gap_curve,
)
from wildreid.features import (
    FeatureCache,
    FeatureParams,
    FeatureSet,
    all_pairs,
    candidate_pairs,
    content_hash,
    extract_features,
    feature_cache_key,
    load_image,
)
from wildreid.graph import (
    MatchGraph,
    PredictionSet,
    build_match_graph,
    export_graph,
    individual_edge_breakdown,
    propagate_identities,
)
from wildreid.splits import (
    Split,
    SplitError,
    classify_problem,
    random_split_matched,
    read_split,
    split_summary,
    time_cutoff_split,
    time_proportion_split,
    validate_split,
    write_split,
    yearly_cutoff_splits,
)
from wildreid.synth.generator import META_FILE, MANIFEST_FILE, generate_dataset
from wildreid.utils.logger import attach_file_handler, get_logger, set_level
from wildreid.utils.output import print_stage
from wildreid.verify import VerificationDecision, read_decisions, verify_pairs, write_decisions

log = get_logger("pipeline")

STAGES = ("catalog", "splits", "extract", "verify", "predict", "score", "report")
FAMILIES_FILE = "families.json"
SOURCE_FILE = "source.json"
SUMMARY_COLUMNS = ["split", "policy", "n_reference", "n_query", "n_excluded",
                   "n_reference_individuals", "n_query_individuals", "problem"]


@dataclass
class SplitFamily:
    """One configured split spec; yearly cutoffs expand to several member splits."""
    spec: SplitSpec
    members: list[Split]
    open_set: bool = False

    @property
    def aggregated(self) -> bool:
        return self.spec.policy == "time_cutoff_yearly" or len(self.members) > 1


@dataclass
class RunResult:
    out_dir: Path
    closed: list[ClosedSetReport] = field(default_factory=list)
    open: list[OpenSetReport] = field(default_factory=list)
    comparisons: list[BiasSummary] = field(default_factory=list)
    curve: TimeGapCurve | None = None
    stages: list[str] = field(default_factory=list)
    loaded: list[str] = field(default_factory=list)
    artifacts: dict[str, str] = field(default_factory=dict)
    cache_hits: dict[str, int] = field(default_factory=dict)


# ── Extraction worker ─────────────────────────────────────────────────────────

@dataclass(frozen=True)
class _ExtractJob:
    image_id: str
    path: str
    bbox: tuple[int, int, int, int] | None
    params: FeatureParams
    cache_root: str


def _extract_one(job: _ExtractJob) -> tuple[str, str, bool, FeatureSet]:
    cache = FeatureCache(job.cache_root)
    key = feature_cache_key(content_hash(job.path), job.bbox, job.params.parameter_hash())
    fs = cache.get(key, job.image_id)
    if fs is not None:
        return job.image_id, key, True, fs
    fs = extract_features(load_image(job.path), job.bbox, job.params, job.image_id)
    cache.put(key, fs)
    return job.image_id, key, False, fs


def _decision_from_row(a: str, b: str, row: dict) -> VerificationDecision:
    return VerificationDecision(
        image_a=a, image_b=b, accepted=bool(row["accepted"]),
        cond_T=float(row["cond_t"]), cond_T_tilde=float(row["cond_t_tilde"]),
        n_correspondences=int(row["n_corr"]), residual=float(row["residual"]),
        similarity=None if row["similarity"] is None else float(row["similarity"]),
        reason=row["reason"] or "",
    )


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ── Pipeline ──────────────────────────────────────────────────────────────────

class Pipeline:
    def __init__(self, cfg: PipelineConfig) -> None:
        cfg.validate()
        self.cfg = cfg
        self.out = cfg.out_path
        self.cache_root = cfg.cache_root
        self.out.mkdir(parents=True, exist_ok=True)
        self.cache_root.mkdir(parents=True, exist_ok=True)
        set_level(cfg.log_level)
        attach_file_handler(cfg.log_dir)
        self.store = CacheStore(self.cache_root / "cache.db")
        self.pool = WorkerPool(cfg.workers)
        self.run_id = self._run_id()

        self.catalog: Catalog | None = None
        self.families: list[SplitFamily] = []
        self.feature_keys: dict[str, str] = {}
        self.feature_sets: dict[str, FeatureSet] = {}
        self.decisions: list[VerificationDecision] = []
        self.graph: MatchGraph | None = None
        self.predictions: dict[str, PredictionSet] = {}
        self.result = RunResult(self.out)

    def _run_id(self) -> str:
        blob = json.dumps(self._result_config(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def _result_config(self) -> dict:
        """Config keys that influence results (paths and worker count do not)."""
        d = self.cfg.to_dict()
        for key in ("out_dir", "cache_dir", "workers", "log_level"):
            d.pop(key, None)
        return d

    @property
    def splits(self) -> list[Split]:
        return [s for fam in self.families for s in fam.members]

    @contextmanager
    def _stage(self, name: str) -> Iterator[None]:
        print_stage(name)
        log.info("Stage %s: start", name)
        self.store.log_stage(self.run_id, name, "started")
        try:
            yield
        except ValidationError as exc:
            self.store.log_stage(self.run_id, name, "invalid", str(exc))
            log.error("Stage %s: %s", name, exc)
            raise
        except StageError:
            raise
        except Exception as exc:
            self.store.log_stage(self.run_id, name, "failed", f"{type(exc).__name__}: {exc}")
            log.error("Stage %s failed: %s", name, exc)
            raise StageError(name, exc) from exc
        self.store.log_stage(self.run_id, name, "ok")
        self.result.stages.append(name)
        log.info("Stage %s: done", name)

    def run(self, until: str = "report", resume: bool = False) -> RunResult:
        if until not in STAGES:
            raise ValidationError(f"unknown stage '{until}' (stages: {', '.join(STAGES)})")
        steps = {
            "catalog": self.build_catalog,
            "splits": self.build_splits,
            "extract": self.extract,
            "verify": self.verify,
            "predict": self.predict,
            "score": self.score,
            "report": self.report,
        }
        loaders = {
            "catalog": self.load_catalog,
            "splits": self.load_splits,
            "verify": self.load_decisions,
        }
        done = self._completed_stages() if resume else set()
        for name in STAGES[:STAGES.index(until) + 1]:
            if name in self.result.loaded:
                continue
            if name != until and name in done:
                # decisions on disk make features unnecessary downstream
                if name == "extract" and until not in ("extract", "verify") and "verify" in done \
                        and self._load("verify", loaders["verify"]):
                    log.info("Stage extract: skipped, decisions are on disk")
                    continue
                if name in loaders and self._load(name, loaders[name]):
                    continue
            with self._stage(name):
                steps[name]()
        return self.result

    def _load(self, name: str, loader: Callable[[], bool]) -> bool:
        if not loader():
            return False
        self.result.loaded.append(name)
        self.result.stages.append(name)
        log.info("Stage %s: loaded from %s", name, self.out)
        return True

    def _completed_stages(self) -> set[str]:
        return {h["stage"] for h in self.store.stage_history(self.run_id) if h["status"] == "ok"}

    # ── catalog ──────────────────────────────────────────────────────────
    def build_catalog(self) -> Catalog:
        src = self.cfg.catalog
        if src.kind == "synth":
            catalog = self._synth_catalog()
        else:
            catalog = ingest_manifest(src.manifest, src.declared_span())
        cat_dir = self.out / "catalog"
        cat_dir.mkdir(parents=True, exist_ok=True)
        write_manifest(catalog, cat_dir / "manifest.csv")
        stats = compute_stats(catalog)
        (cat_dir / "stats.json").write_text(json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n",
                                            encoding="utf-8")
        source = {"kind": src.kind, "image_root": str(catalog.root) if catalog.root is not None else ""}
        (cat_dir / SOURCE_FILE).write_text(json.dumps(source, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        log.info("Catalog: %d images, %d individuals, %d encounters, span %d days, %.1f%% dated",
                 stats.n_image, stats.n_indiv, stats.n_enc, stats.span_days, 100 * stats.timestamp_coverage)
        self.catalog = catalog
        return catalog

    def load_catalog(self) -> bool:
        cat_dir = self.out / "catalog"
        try:
            source = json.loads((cat_dir / SOURCE_FILE).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return False
        if not (cat_dir / "manifest.csv").is_file():
            return False
        self.catalog = ingest_manifest(cat_dir / "manifest.csv", root=source.get("image_root") or None)
        return True

    def _synth_catalog(self) -> Catalog:
        synth_dir = self.cache_root / "synth"
        meta_path = synth_dir / META_FILE
        wanted = self.cfg.synth.to_dict()
        if meta_path.is_file() and (synth_dir / MANIFEST_FILE).is_file():
            try:
                meta = json.loads(meta_path.read_text(encoding="utf-8"))
            except json.JSONDecodeError:
                meta = {}
            if meta.get("config") == wanted:
                log.info("Synthetic corpus cache hit: %s", synth_dir)
                return ingest_manifest(synth_dir / MANIFEST_FILE)
        return generate_dataset(self.cfg.synth, synth_dir, self.pool)

    # ── splits ───────────────────────────────────────────────────────────
    def _make_family(self, spec: SplitSpec, by_name: dict[str, SplitFamily]) -> SplitFamily:
        catalog = self.catalog
        if spec.policy == "time_proportion":
            return SplitFamily(spec, [time_proportion_split(catalog, float(spec.p), name=spec.name)])
        if spec.policy == "time_cutoff":
            cutoff = date.fromisoformat(str(spec.cutoff))
            return SplitFamily(spec, [time_cutoff_split(catalog, cutoff, spec.window, name=spec.name)])
        if spec.policy == "time_cutoff_yearly":
            return SplitFamily(spec, yearly_cutoff_splits(catalog, spec.window, prefix=spec.name))
        template = by_name[spec.template]
        seed = self.cfg.split_seed(spec)
        if len(template.members) == 1:
            members = [random_split_matched(catalog, template.members[0], seed, name=spec.name)]
        else:
            members = [
                random_split_matched(catalog, t, seed + k, name=f"{spec.name}{t.name[len(template.spec.name):]}")
                for k, t in enumerate(template.members)
            ]
        return SplitFamily(spec, members)

    def build_splits(self) -> list[Split]:
        by_name: dict[str, SplitFamily] = {}
        for spec in self.cfg.splits:
            fam = self._make_family(spec, by_name)
            if spec.policy == "random_matched":
                fam.open_set = by_name[spec.template].open_set
            else:
                fam.open_set = any(classify_problem(s, self.catalog).is_open for s in fam.members)
            by_name[spec.name] = fam
        self.families = list(by_name.values())

        split_dir = self.out / "splits"
        split_dir.mkdir(parents=True, exist_ok=True)
        rows = []
        for split in self.splits:
            report = validate_split(split, self.catalog)
            if not report.ok:
                first = report.errors()[0]
                raise SplitError(f"split '{split.name}' is invalid: {first.check}: {first.message}")
            write_split(split, split_dir / f"{split.name}.csv")
            kind = classify_problem(split, self.catalog).kind.value
            rows.append(split_summary(split, self.catalog).row() + [kind])
        pd.DataFrame(rows, columns=SUMMARY_COLUMNS).to_csv(split_dir / "summary.csv", index=False,
                                                           lineterminator="\n")
        index = [{"spec": fam.spec.name, "members": [s.name for s in fam.members], "open_set": fam.open_set}
                 for fam in self.families]
        (split_dir / FAMILIES_FILE).write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")
        log.info("Built %d splits from %d specs", len(self.splits), len(self.families))
        return self.splits

    def load_splits(self) -> bool:
        split_dir = self.out / "splits"
        try:
            index = {e["spec"]: e for e in json.loads((split_dir / FAMILIES_FILE).read_text(encoding="utf-8"))}
        except (OSError, json.JSONDecodeError, KeyError, TypeError):
            return False
        families = []
        for spec in self.cfg.splits:
            entry = index.get(spec.name)
            if entry is None:
                return False
            paths = [split_dir / f"{m}.csv" for m in entry["members"]]
            if not all(p.is_file() for p in paths):
                return False
            families.append(SplitFamily(spec, [read_split(p) for p in paths], bool(entry["open_set"])))
        self.families = families
        return True

    # ── extract ──────────────────────────────────────────────────────────
    def extract(self) -> dict[str, FeatureSet]:
        params = self.cfg.features
        feat_root = str(self.cache_root / "features")
        jobs = [
            _ExtractJob(rec.image_id, str(self.catalog.resolve_path(rec)),
                        rec.bbox.as_tuple() if rec.bbox else None, params, feat_root)
            for rec in self.catalog
        ]
        hits = 0
        params_hash = params.parameter_hash()
        cache = FeatureCache(feat_root)
        for image_id, key, hit, fs in self.pool.map(_extract_one, jobs):
            self.feature_keys[image_id] = key
            self.feature_sets[image_id] = fs
            hits += hit
            if not hit:
                self.store.record_feature(key, image_id, cache.path_for(key), len(fs), params_hash)
        self.result.cache_hits["features"] = hits
        n_kp = [len(fs) for fs in self.feature_sets.values()]
        log.info("Features: %d images (%d cache hits, %d extracted), median %d keypoints",
                 len(jobs), hits, len(jobs) - hits, int(np.median(n_kp)) if n_kp else 0)
        return self.feature_sets

    # ── verify ───────────────────────────────────────────────────────────
    def _candidate_pairs(self) -> list[tuple[str, str]]:
        ids = sorted(self.feature_sets)
        k = self.cfg.blocking.k
        if k <= 0:
            return all_pairs(ids)
        log.info("Blocking enabled (k=%d); pair decisions are approximate", k)
        return candidate_pairs([self.feature_sets[i] for i in ids], k)

    def verify(self) -> list[VerificationDecision]:
        vparams = self.cfg.verify
        vhash = vparams.parameter_hash()
        pairs = self._candidate_pairs()
        keys = {p: (self.feature_keys[p[0]], self.feature_keys[p[1]]) for p in pairs}
        cached = self.store.load_decisions(vhash, keys.values())

        decisions: list[VerificationDecision] = []
        todo: list[tuple[str, str]] = []
        for pair in pairs:
            row = cached.get(keys[pair])
            if row is None:
                todo.append(pair)
            else:
                decisions.append(_decision_from_row(pair[0], pair[1], row))
        log.info("Pairs: %d candidates, %d cached, %d to verify", len(pairs), len(decisions), len(todo))
        self.result.cache_hits["decisions"] = len(decisions)

        if todo:
            fresh = verify_pairs(self.feature_sets, todo, vparams, self.pool)
            self.store.save_decisions(vhash, [(*keys[d.pair], d) for d in fresh])
            decisions.extend(fresh)

        self.decisions = sorted(decisions, key=lambda d: d.pair)
        write_decisions(self.decisions, self.out / "decisions" / "decisions.csv")
        return self.decisions

    def load_decisions(self) -> bool:
        path = self.out / "decisions" / "decisions.csv"
        if not path.is_file():
            return False
        decisions = read_decisions(path)
        if any(i not in self.catalog for d in decisions for i in d.pair):
            log.warning("%s names images outside the catalog; verifying again", path)
            return False
        self.decisions = sorted(decisions, key=lambda d: d.pair)
        return True

    # ── predict ──────────────────────────────────────────────────────────
    def predict(self) -> dict[str, PredictionSet]:
        self.graph = build_match_graph(self.decisions, self.catalog)
        graph_dir = self.out / "graph"
        for split in self.splits:
            preds = propagate_identities(self.graph, split, self.catalog, self.cfg.graph.max_hops)
            self.predictions[split.name] = preds
            export_graph(self.graph, split, self.catalog, graph_dir, preds)
            self._write_edge_breakdown(split, graph_dir / f"{split.name}_individual_edges.csv")
            log.info("Split '%s': %d of %d query images predicted, %d conflicting components",
                     split.name, preds.n_predicted, len(split.query_ids), len(preds.conflicts))
        return self.predictions

    def _write_edge_breakdown(self, split: Split, path: Path) -> None:
        rows = []
        for ind in self.catalog.individuals:
            b = individual_edge_breakdown(self.graph, split, self.catalog, ind)
            rows.append([ind, b.reference_reference, b.query_query, b.reference_query, b.other,
                         b.n_query, b.n_query_linked])
        pd.DataFrame(rows, columns=["individual_id", "reference_reference", "query_query", "reference_query",
                                    "other", "n_query", "n_query_linked"]) \
            .to_csv(path, index=False, lineterminator="\n")

    # ── score ────────────────────────────────────────────────────────────
    def score(self) -> RunResult:
        res = self.result
        res.closed.clear()
        res.open.clear()
        res.comparisons.clear()
        family_reports: dict[str, ClosedSetReport | OpenSetReport] = {}

        for fam in self.families:
            if fam.open_set:
                reports = [score_open(self.predictions[s.name], s, self.catalog) for s in fam.members]
                res.open.extend(reports)
                if fam.aggregated:
                    total = aggregate_open(reports, split_name=fam.spec.name)
                    res.open.append(total)
                    family_reports[fam.spec.name] = total
                else:
                    family_reports[fam.spec.name] = reports[0]
            else:
                reports = [score_closed(self.predictions[s.name], s, self.catalog) for s in fam.members]
                res.closed.extend(reports)
                family_reports[fam.spec.name] = reports[0]

        all_reports = {r.split_name: r for r in [*res.closed, *res.open]}
        all_reports.update(family_reports)
        pairs = [(f.spec.name, f.spec.template) for f in self.families if f.spec.policy == "random_matched"]
        pairs += [tuple(p) for p in self.cfg.evaluation.comparisons if tuple(p) not in pairs]
        for a, b in pairs:
            summary = compare_splits(all_reports[a], all_reports[b])
            res.comparisons.append(summary)
            log.info("Bias %s vs %s: recall ratio %s", a, b,
                     "NA" if summary.recall_ratio is None else f"{summary.recall_ratio:.2f}")

        orientation = self.cfg.evaluation.time_gap_orientation or None
        res.curve = time_gap_curve(self.decisions, self.catalog, orientation)
        return res

    # ── report ───────────────────────────────────────────────────────────
    def report(self) -> RunResult:
        res = self.result
        rep = self.out / "reports"
        ind_dir = rep / "individuals"
        written: list[Path] = [
            write_closed_reports(res.closed, rep / "closed_set.csv"),
            write_open_reports(res.open, rep / "open_set.csv"),
            write_comparisons(res.comparisons, rep / "comparison.csv"),
        ]
        if res.curve is not None:
            written.append(write_time_gap_curve(res.curve, rep / "time_gap.csv"))
        for r in [*res.closed, *res.open]:
            if r.per_individual:
                written.append(write_individual_scores(r.per_individual, ind_dir / f"{r.split_name}.csv"))

        tracked = sorted(
            [*written, self.out / "decisions" / "decisions.csv", self.out / "catalog" / "manifest.csv",
             *(self.out / "splits").glob("*.csv")],
            key=lambda p: p.relative_to(self.out).as_posix(),
        )
        res.artifacts = {p.relative_to(self.out).as_posix(): _sha256(p) for p in tracked if p.is_file()}
        manifest = {
            "wildreid": __version__,
            "libraries": {"numpy": np.__version__, "scipy": scipy.__version__, "opencv": cv2.__version__,
                          "pandas": pd.__version__},
            "run_id": self.run_id,
            "seed": self.cfg.seed,
            "synth_master_seed": self.cfg.synth.master_seed if self.cfg.catalog.kind == "synth" else None,
            "feature_params_hash": self.cfg.features.parameter_hash(),
            "verify_params_hash": self.cfg.verify.parameter_hash(),
            "splits": [{"name": s.name, "policy": s.policy.value, "params": s.params,
                        "rng": s.rng_algorithm} for s in self.splits],
            "config": self._result_config(),
            "artifacts": res.artifacts,
        }
        (rep / "run_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n",
                                               encoding="utf-8")
        log.info("Reports written to %s", rep)
        return res


def run_pipeline(cfg: PipelineConfig, until: str = "report", resume: bool = False) -> RunResult:
    """Run every stage up to ``until``; raises StageError naming the failing stage.

    With ``resume``, earlier stages completed under the same config are read from disk.
    """
    return Pipeline(cfg).run(until, resume)
