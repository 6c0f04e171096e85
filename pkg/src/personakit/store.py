"""File-backed artifact store shared by the CLI and the HTTP service.

Layout under the store root: runs/, corpora/, taxonomies/, reviews/,
reports/. Artifacts are named by a short content hash, so a rerun with
identical content resolves to the same file while changed reruns version
alongside the originals. All writes are atomic, and a root-level lock file
serializes mutations between concurrent processes.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

from filelock import FileLock, Timeout

from .corpus import Post, PostCollection
from .extraction import TaxonomyDraft
from .fsio import atomic_write_bytes, atomic_write_json, read_json

SUBDIRS = ("runs", "corpora", "taxonomies", "reviews", "reports")


class StoreLockedError(RuntimeError):
    pass


def _content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:8]


class PipelineStore:
    def __init__(self, root: str | Path, lock_timeout: float = 10.0):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        for sub in SUBDIRS:
            (self.root / sub).mkdir(exist_ok=True)
        self._lock = FileLock(str(self.root / ".lock"))
        self._lock_timeout = lock_timeout

    def lock(self):
        """Advisory store lock; CLI and service must hold it for mutations."""
        try:
            return self._lock.acquire(timeout=self._lock_timeout)
        except Timeout as exc:
            raise StoreLockedError(
                f"store {self.root} is locked by another process"
            ) from exc

    @property
    def reviews_dir(self) -> Path:
        return self.root / "reviews"

    # -- runs ---------------------------------------------------------------

    def run_path(self, run_id: str) -> Path:
        return self.root / "runs" / f"{run_id}.json"

    def write_run(self, run_dict: dict) -> Path:
        return atomic_write_json(self.run_path(run_dict["run_id"]), run_dict)

    def read_run(self, run_id: str) -> dict:
        path = self.run_path(run_id)
        if not path.exists():
            raise KeyError(f"unknown run: {run_id!r}")
        return read_json(path)

    def list_runs(self) -> list[dict]:
        runs = []
        for path in sorted((self.root / "runs").glob("*.json")):
            runs.append(read_json(path))
        return runs

    # -- corpora --------------------------------------------------------------

    def write_corpus(self, run_id: str, name: str, collection: PostCollection) -> Path:
        lines = [json.dumps(p.to_dict(), ensure_ascii=False) for p in collection]
        payload = ("\n".join(lines) + "\n" if lines else "").encode("utf-8")
        directory = self.root / "corpora" / run_id
        path = directory / f"{name}-{_content_hash(payload)}.jsonl"
        return atomic_write_bytes(path, payload)

    def read_corpus(self, path: str | Path, label=None) -> PostCollection:
        posts = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                posts.append(
                    Post(
                        post_id=record["post_id"],
                        user_id=record["user_id"],
                        text=record["text"],
                        timestamp=record["timestamp"],
                        likes=record.get("likes"),
                        comments=record.get("comments"),
                        profile_tags=tuple(record.get("profile_tags", ())),
                    )
                )
        return PostCollection.from_posts(posts, label=label)

    # -- json artifacts -------------------------------------------------------

    def write_json_artifact(self, kind: str, run_id: str, name: str, obj) -> Path:
        payload = (json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode(
            "utf-8"
        )
        directory = self.root / kind / run_id
        path = directory / f"{name}-{_content_hash(payload)}.json"
        return atomic_write_bytes(path, payload)

    def read_json_artifact(self, path: str | Path):
        return read_json(path)

    # -- taxonomies -------------------------------------------------------------

    def write_taxonomy(self, draft: TaxonomyDraft) -> Path:
        path = self.root / "taxonomies" / f"{draft.draft_id}.json"
        return atomic_write_bytes(path, draft.to_json().encode("utf-8"))

    def read_taxonomy(self, draft_id: str) -> TaxonomyDraft:
        path = self.root / "taxonomies" / f"{draft_id}.json"
        if not path.exists():
            raise KeyError(f"unknown taxonomy draft: {draft_id!r}")
        return TaxonomyDraft.from_dict(read_json(path))

    def list_taxonomies(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "taxonomies").glob("*.json"))
