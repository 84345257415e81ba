"""
Pair verification: top-k correspondences → projective fit → condition-number gates.

A pair is accepted iff the fit succeeds, κ(T) < kappa_T_max and
κ(T̃) < kappa_T_tilde_max (T̃ = top-left 2×2 of T), plus the RMS transfer
error gate when residual_max is set. Fit failures become
rejections with a reason. Pairs are always verified in canonical image order.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Mapping

import pandas as pd

from wildreid.core.pool import WorkerPool
from wildreid.features.extractor import FeatureSet
from wildreid.features.matcher import match_descriptors
from wildreid.utils.logger import get_logger
from wildreid.verify.homography import (
    FitError,
    condition_number,
    fit_projective,
    symmetric_transfer_error,
)


log = get_logger("verify")

DECISION_COLUMNS = ["image_a", "image_b", "accepted", "cond_T", "cond_T_tilde", "n_corr", "residual",
                    "similarity", "reason"]


@dataclass(frozen=True)
class VerifyParams:
    kappa_T_max: float = 100_000.0
    kappa_T_tilde_max: float = 100.0
    top_k: int = 10
    selection: str = "greedy"           # greedy | mutual
    min_separation: float = 0.0         # pixels; 0 keeps index-only one-to-one
    residual_max: float | None = None   # optional gate, pixels

    def parameter_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class VerificationDecision:
    image_a: str
    image_b: str
    accepted: bool
    cond_T: float
    cond_T_tilde: float
    n_correspondences: int
    residual: float
    similarity: float | None = None
    reason: str = ""

    @property
    def pair(self) -> tuple[str, str]:
        return (self.image_a, self.image_b)

    def as_row(self) -> list:
        return [self.image_a, self.image_b, "true" if self.accepted else "false", self.cond_T,
                self.cond_T_tilde, self.n_correspondences, self.residual,
                "" if self.similarity is None else self.similarity, self.reason]


def _rejected(a: str, b: str, n: int, similarity: float | None, reason: str) -> VerificationDecision:
    return VerificationDecision(a, b, False, math.inf, math.inf, n, math.inf, similarity, reason)


def verify_pair(fs_a: FeatureSet, fs_b: FeatureSet, params: VerifyParams | None = None) -> VerificationDecision:
    params = params or VerifyParams()
    if (fs_b.image_id, fs_b.digest) < (fs_a.image_id, fs_a.digest):
        fs_a, fs_b = fs_b, fs_a
    a, b = fs_a.image_id, fs_b.image_id

    corr = match_descriptors(fs_a, fs_b, top_k=params.top_k, selection=params.selection,
                              min_separation=params.min_separation)
    n = len(corr)
    try:
        transform = fit_projective(corr)
    except FitError as exc:
        log.debug("%s ~ %s rejected: %s", a, b, exc)
        return _rejected(a, b, n, corr.s_max, str(exc))

    k_t = condition_number(transform.T)
    k_tt = condition_number(transform.T_tilde)
    residual = symmetric_transfer_error(transform.T, corr.pts_a, corr.pts_b)

    reasons = []
    if not k_t < params.kappa_T_max:
        reasons.append(f"cond_T {k_t:.4g} >= {params.kappa_T_max:g}")
    if not k_tt < params.kappa_T_tilde_max:
        reasons.append(f"cond_T_tilde {k_tt:.4g} >= {params.kappa_T_tilde_max:g}")
    if params.residual_max is not None and not residual <= params.residual_max:
        reasons.append(f"residual {residual:.4g} > {params.residual_max:g}")

    decision = VerificationDecision(a, b, not reasons, k_t, k_tt, n, residual, corr.s_max, "; ".join(reasons))
    log.debug("%s ~ %s accepted=%s κT=%.4g κT~=%.4g res=%.3g", a, b, decision.accepted, k_t, k_tt, residual)
    return decision


# ── Batch verification ──────────────────────────────────────────────────────

_WORKER_STATE: dict = {}


def _init_worker(feature_sets: Mapping[str, FeatureSet], params: VerifyParams) -> None:
    _WORKER_STATE["features"] = feature_sets
    _WORKER_STATE["params"] = params


def _verify_task(pair: tuple[str, str]) -> VerificationDecision:
    feats = _WORKER_STATE["features"]
    return verify_pair(feats[pair[0]], feats[pair[1]], _WORKER_STATE["params"])


def verify_pairs(
    feature_sets: Mapping[str, FeatureSet],
    pairs: Iterable[tuple[str, str]],
    params: VerifyParams | None = None,
    pool: WorkerPool | None = None,
) -> list[VerificationDecision]:
    """Verify every pair; output sorted by (image_a, image_b)."""
    params = params or VerifyParams()
    todo = sorted({(a, b) if a < b else (b, a) for a, b in pairs if a != b})
    missing = sorted({i for p in todo for i in p} - set(feature_sets))
    if missing:
        raise KeyError(f"no features for {len(missing)} images (first: {missing[0]})")
    if pool is None:
        _init_worker(feature_sets, params)
        decisions = [_verify_task(p) for p in todo]
    else:
        worker_pool = WorkerPool(pool.workers, _init_worker, (feature_sets, params), pool.chunksize)
        decisions = worker_pool.map(_verify_task, todo)
    n_acc = sum(d.accepted for d in decisions)
    log.info("Verified %d pairs: %d accepted", len(decisions), n_acc)
    return sorted(decisions, key=lambda d: d.pair)


# ── Decision files ──────────────────────────────────────────────────────────

def write_decisions(decisions: Iterable[VerificationDecision], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [d.as_row() for d in sorted(decisions, key=lambda d: d.pair)]
    pd.DataFrame(rows, columns=DECISION_COLUMNS).to_csv(path, index=False, lineterminator="\n")
    return path


def _float(text: str) -> float:
    return math.inf if text.strip().lower() == "inf" else float(text)


def read_decisions(path: str | Path) -> list[VerificationDecision]:
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [c for c in DECISION_COLUMNS[:7] if c not in df.columns]
    if missing:
        raise ValueError(f"{path}: missing decision columns {missing}")
    out = []
    for row in df.to_dict(orient="records"):
        sim = row.get("similarity", "")
        out.append(VerificationDecision(
            image_a=row["image_a"],
            image_b=row["image_b"],
            accepted=row["accepted"].strip().lower() in ("true", "1"),
            cond_T=_float(row["cond_T"]),
            cond_T_tilde=_float(row["cond_T_tilde"]),
            n_correspondences=int(row["n_corr"]),
            residual=_float(row["residual"]),
            similarity=_float(sim) if sim else None,
            reason=row.get("reason", ""),
        ))
    return out
