"""
SQLite WAL-mode cache index: feature files, pair decisions, stage runs.

Deleting the database only forces recomputation. All queries are parameterized.
"""
from __future__ import annotations

import sqlite3
from contextlib import contextmanager
from pathlib import Path
from typing import TYPE_CHECKING, Generator, Iterable

if TYPE_CHECKING:
    from wildreid.verify.verifier import VerificationDecision

_SCHEMA = Path(__file__).parent / "schema.sql"


class CacheStore:
    def __init__(self, db_path: str | Path) -> None:
        self.db_path = str(db_path)
        self._init_db()

    # ── DB init ──────────────────────────────────────────────────────────
    def _init_db(self) -> None:
        Path(self.db_path).parent.mkdir(parents=True, exist_ok=True)
        with self._conn() as conn:
            conn.executescript(_SCHEMA.read_text())

    @contextmanager
    def _conn(self) -> Generator[sqlite3.Connection, None, None]:
        conn = sqlite3.connect(self.db_path, timeout=10)
        conn.row_factory = sqlite3.Row
        conn.execute("PRAGMA journal_mode=WAL")
        conn.execute("PRAGMA synchronous=NORMAL")
        try:
            yield conn
            conn.commit()
        except Exception:
            conn.rollback()
            raise
        finally:
            conn.close()

    # ── Features ─────────────────────────────────────────────────────────
    def record_feature(self, cache_key: str, image_id: str, path: str | Path,
                       n_keypoints: int, params_hash: str) -> None:
        with self._conn() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO feature_index "
                "(cache_key, image_id, path, n_keypoints, params_hash) VALUES (?, ?, ?, ?, ?)",
                (cache_key, image_id, str(path), int(n_keypoints), params_hash),
            )

    def forget_feature(self, cache_key: str) -> None:
        with self._conn() as conn:
            conn.execute("DELETE FROM feature_index WHERE cache_key = ?", (cache_key,))

    # ── Pair decisions ───────────────────────────────────────────────────
    def load_decisions(self, params_hash: str,
                       keys: Iterable[tuple[str, str]]) -> dict[tuple[str, str], dict]:
        """Cached decision rows for the requested (key_a, key_b) pairs."""
        wanted = set(keys)
        found: dict[tuple[str, str], dict] = {}
        if not wanted:
            return found
        with self._conn() as conn:
            rows = conn.execute(
                "SELECT * FROM pair_decisions WHERE params_hash = ?", (params_hash,)
            ).fetchall()
        for row in rows:
            k = (row["key_a"], row["key_b"])
            if k in wanted:
                found[k] = dict(row)
        return found

    def save_decisions(self, params_hash: str,
                       entries: Iterable[tuple[str, str, "VerificationDecision"]]) -> int:
        rows = [
            (ka, kb, params_hash, d.image_a, d.image_b, int(d.accepted), d.cond_T,
             d.cond_T_tilde, d.n_correspondences, d.residual, d.similarity, d.reason)
            for ka, kb, d in entries
        ]
        if not rows:
            return 0
        with self._conn() as conn:
            conn.executemany(
                "INSERT OR REPLACE INTO pair_decisions "
                "(key_a, key_b, params_hash, image_a, image_b, accepted, cond_t, cond_t_tilde, "
                " n_corr, residual, similarity, reason) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                rows,
            )
        return len(rows)

    # ── Stage runs ───────────────────────────────────────────────────────
    def log_stage(self, run_id: str, stage: str, status: str, detail: str = "") -> int:
        with self._conn() as conn:
            cur = conn.execute(
                "INSERT INTO stage_runs (run_id, stage, status, detail) VALUES (?, ?, ?, ?)",
                (run_id, stage, status, detail),
            )
            return cur.lastrowid

    def stage_history(self, run_id: str) -> list[dict]:
        with self._conn() as conn:
            rows = conn.execute(
                "SELECT stage, status, detail FROM stage_runs WHERE run_id = ? ORDER BY id",
                (run_id,),
            ).fetchall()
        return [dict(r) for r in rows]
