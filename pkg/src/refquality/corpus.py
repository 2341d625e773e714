"""Shared data model: pages, revisions, editors, and per-revision quality scores.

The on-disk corpus format is line-delimited JSON, one object per revision,
with field names matching :class:`RevisionRecord`.  Topic labels arrive in an
optional tab-separated side file ``page_id <TAB> topic <TAB> meta_topic``.
"""

from __future__ import annotations

import json
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

META_TOPICS = ("Culture", "History and Society", "Geography", "STEM")

EXPERT = "expert"
NOVICE = "novice"
MIDDLE = "middle"


class CorpusError(ValueError):
    """Raised when a corpus file is malformed or violates uniqueness rules."""


def parse_instant(value: str) -> datetime:
    """Parse an ISO-8601 instant; naive values are taken as UTC."""
    ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_instant(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class RevisionRecord:
    """One logged edit of a page."""

    revision_id: int
    page_id: int
    timestamp: datetime
    editor_id: Optional[int]
    is_anonymous: bool
    is_bot: bool
    is_minor: bool
    byte_delta: int
    prior_user_revision_count: int
    comment: str = ""
    wikitext: Optional[str] = None

    def __post_init__(self):
        if self.is_anonymous != (self.editor_id is None):
            raise ValueError(
                f"revision {self.revision_id}: is_anonymous must mirror a missing editor_id"
            )
        if self.prior_user_revision_count < 0:
            raise ValueError(f"revision {self.revision_id}: negative prior revision count")
        if self.timestamp.tzinfo is None:
            object.__setattr__(self, "timestamp", self.timestamp.replace(tzinfo=timezone.utc))


@dataclass(frozen=True)
class PageRecord:
    """A page with its revision history sorted ascending by (timestamp, id)."""

    page_id: int
    title: str
    revisions: tuple[RevisionRecord, ...]
    topics: frozenset[str] = frozenset()
    meta_topic: Optional[str] = None

    def __post_init__(self):
        keys = [(r.timestamp, r.revision_id) for r in self.revisions]
        if any(b <= a for a, b in zip(keys, keys[1:])):
            raise ValueError(f"page {self.page_id}: revisions not strictly ordered")
        if self.meta_topic is not None and self.meta_topic not in META_TOPICS:
            raise ValueError(f"page {self.page_id}: unknown meta topic {self.meta_topic!r}")


@dataclass(frozen=True)
class EditorProfile:
    """An editor's experience bucket relative to the corpus quartiles."""

    editor_id: int
    revision_count: int
    expertise: str
    exposed: bool = False


@dataclass(frozen=True)
class QualityScore:
    """Per-revision reference-need and reference-risk values.

    ``rn`` is undefined (None) when no sentence needs a citation; ``rr`` is
    undefined when the revision has no citations.
    """

    revision_id: int
    rn: Optional[float]
    rr: Optional[float]
    n_need: int
    n_citations: int
    n_risky: int

    def __post_init__(self):
        if (self.rn is None) != (self.n_need == 0):
            raise ValueError(f"revision {self.revision_id}: rn defined iff n_need > 0")
        if (self.rr is None) != (self.n_citations == 0):
            raise ValueError(f"revision {self.revision_id}: rr defined iff n_citations > 0")
        if not 0 <= self.n_risky <= max(self.n_citations, 0):
            raise ValueError(f"revision {self.revision_id}: risky count out of range")


_REQUIRED_FIELDS = (
    "revision_id",
    "page_id",
    "timestamp",
    "is_anonymous",
    "is_bot",
    "is_minor",
    "byte_delta",
    "prior_user_revision_count",
)


def _record_from_json(obj: dict, where: str) -> tuple[RevisionRecord, str]:
    missing = [f for f in _REQUIRED_FIELDS if f not in obj]
    if missing:
        raise CorpusError(f"{where}: missing fields {missing}")
    try:
        rec = RevisionRecord(
            revision_id=int(obj["revision_id"]),
            page_id=int(obj["page_id"]),
            timestamp=parse_instant(obj["timestamp"]),
            editor_id=None if obj.get("editor_id") is None else int(obj["editor_id"]),
            is_anonymous=bool(obj["is_anonymous"]),
            is_bot=bool(obj["is_bot"]),
            is_minor=bool(obj["is_minor"]),
            byte_delta=int(obj["byte_delta"]),
            prior_user_revision_count=int(obj["prior_user_revision_count"]),
            comment=str(obj.get("comment", "")),
            wikitext=obj.get("wikitext"),
        )
    except (TypeError, ValueError) as exc:
        raise CorpusError(f"{where}: {exc}") from exc
    return rec, str(obj.get("title", ""))


def load_topics(path: str | Path) -> dict[int, list[tuple[str, str]]]:
    """Read the ``page_id <TAB> topic <TAB> meta_topic`` side file."""
    out: dict[int, list[tuple[str, str]]] = defaultdict(list)
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise CorpusError(f"{path}:{lineno}: expected 3 tab-separated columns")
            page_id, topic, meta = parts
            if meta not in META_TOPICS:
                raise CorpusError(f"{path}:{lineno}: unknown meta topic {meta!r}")
            out[int(page_id)].append((topic, meta))
    return dict(out)


def load_corpus(
    path: str | Path,
    format: str = "jsonl",
    topics_path: str | Path | None = None,
) -> list[PageRecord]:
    """Load a revision corpus into pages with sorted revision lists.

    Bot revisions are retained but flagged; filtering is the caller's choice.
    Raises :class:`CorpusError` naming the offending line for malformed
    records and for duplicate revision ids.
    """
    if format != "jsonl":
        raise CorpusError(f"unsupported corpus format {format!r}")
    by_page: dict[int, list[RevisionRecord]] = defaultdict(list)
    titles: dict[int, str] = {}
    seen_ids: dict[int, int] = {}
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON at offset {exc.pos}") from exc
            rec, title = _record_from_json(obj, f"{path}:{lineno}")
            if rec.revision_id in seen_ids:
                raise CorpusError(
                    f"{path}:{lineno}: duplicate revision_id {rec.revision_id}"
                    f" (first seen on line {seen_ids[rec.revision_id]})"
                )
            seen_ids[rec.revision_id] = lineno
            by_page[rec.page_id].append(rec)
            if title and rec.page_id not in titles:
                titles[rec.page_id] = title

    topics = load_topics(topics_path) if topics_path is not None else {}
    pages = []
    for page_id in sorted(by_page):
        revs = tuple(sorted(by_page[page_id], key=lambda r: (r.timestamp, r.revision_id)))
        labels = topics.get(page_id, [])
        meta = None
        if labels:
            # Majority meta-category; ties break lexicographically.
            counts = Counter(m for _, m in labels)
            meta = min(counts, key=lambda m: (-counts[m], m))
        pages.append(
            PageRecord(
                page_id=page_id,
                title=titles.get(page_id, ""),
                revisions=revs,
                topics=frozenset(t for t, _ in labels),
                meta_topic=meta,
            )
        )
    return pages


def latest_editor_counts(pages: Iterable[PageRecord]) -> dict[int, int]:
    """Latest observed prior-revision count per non-anonymous, non-bot editor."""
    latest: dict[int, tuple[datetime, int, int]] = {}
    for page in pages:
        for rev in page.revisions:
            if rev.is_bot or rev.is_anonymous or rev.editor_id is None:
                continue
            key = (rev.timestamp, rev.revision_id, rev.prior_user_revision_count)
            if rev.editor_id not in latest or key > latest[rev.editor_id]:
                latest[rev.editor_id] = key
    return {eid: count for eid, (_, _, count) in latest.items()}


def partition_editors(pages: Iterable[PageRecord]) -> dict[int, EditorProfile]:
    """Bucket editors into expert (> Q3), novice (< Q1) or middle.

    Quartiles use linear interpolation over the distribution of each distinct
    editor's latest observed prior-revision count.  Anonymous and bot
    revisions are excluded.  Returns an empty map (with a warning) when no
    eligible editors exist.
    """
    counts = latest_editor_counts(pages)
    if not counts:
        warnings.warn("no eligible editors in corpus; returning empty partition")
        return {}
    values = np.array(sorted(counts.values()), dtype=float)
    q1, q3 = np.quantile(values, [0.25, 0.75])
    profiles = {}
    for editor_id, count in counts.items():
        if count > q3:
            expertise = EXPERT
        elif count < q1:
            expertise = NOVICE
        else:
            expertise = MIDDLE
        profiles[editor_id] = EditorProfile(editor_id, count, expertise)
    return profiles
