"""
Split files: CSV ``image_id,role`` preceded by ``#`` header lines

    # policy: time_proportion
    # name: tp50
    # params: {"p": 0.5}
    # rng: PCG64
"""
from __future__ import annotations

import json
from pathlib import Path

import pandas as pd

from wildreid.splits.policies import Split, SplitError, SplitPolicy

ROLES = ("reference", "query", "excluded")


def write_split(split: Split, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [(i, "reference") for i in split.reference_ids]
    rows += [(i, "query") for i in split.query_ids]
    rows += [(i, "excluded") for i in split.excluded_ids]
    rows.sort()
    header = [
        f"# policy: {split.policy.value}",
        f"# name: {split.name}",
        f"# params: {json.dumps(split.params, sort_keys=True)}",
    ]
    if split.rng_algorithm:
        header.append(f"# rng: {split.rng_algorithm}")
    df = pd.DataFrame(rows, columns=["image_id", "role"])
    with path.open("w", encoding="utf-8", newline="") as f:
        f.write("\n".join(header) + "\n")
        df.to_csv(f, index=False, lineterminator="\n")
    return path


def read_split(path: str | Path) -> Split:
    path = Path(path)
    if not path.is_file():
        raise SplitError(f"split file not found: {path}")
    meta: dict[str, str] = {}
    n_comment = 0
    with path.open(encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            n_comment += 1
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()

    try:
        policy = SplitPolicy(meta.get("policy", ""))
    except ValueError:
        raise SplitError(f"{path}: missing or unknown policy header") from None
    try:
        params = json.loads(meta.get("params", "{}") or "{}")
    except json.JSONDecodeError as exc:
        raise SplitError(f"{path}: unparsable params header: {exc}") from None

    df = pd.read_csv(path, skiprows=n_comment, dtype=str, keep_default_na=False)
    if list(df.columns) != ["image_id", "role"]:
        raise SplitError(f"{path}: expected columns image_id,role")
    bad = sorted(set(df["role"]) - set(ROLES))
    if bad:
        raise SplitError(f"{path}: unknown roles {bad}")

    by_role = {r: frozenset(df.loc[df["role"] == r, "image_id"]) for r in ROLES}
    return Split(
        reference_ids=by_role["reference"],
        query_ids=by_role["query"],
        policy=policy,
        params=params,
        excluded_ids=by_role["excluded"],
        name=meta.get("name", ""),
        rng_algorithm=meta.get("rng", ""),
    )
