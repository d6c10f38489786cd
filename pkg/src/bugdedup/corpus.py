"""Bug-report corpus ingestion, duplicate-link resolution, and train/test splitting."""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from datetime import datetime, timezone

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class CorpusError(Exception):
    """Raised for unreadable files, malformed records, or broken link structure."""


@dataclass
class BugReport:
    id: str
    summary: str
    description: str = ""
    component: str = "UNKNOWN"
    platform: dict = field(default_factory=dict)
    characteristics: dict = field(default_factory=dict)
    dup_of: str | None = None
    created_at: datetime = EPOCH


@dataclass
class LoadReport:
    n_records: int = 0
    n_duplicate_links: int = 0
    n_dangling_cleared: int = 0


class ReportCollection:
    """Ordered, immutable-after-load set of bug reports with id lookup."""

    def __init__(self, reports):
        self.reports = list(reports)
        self.index_by_id = {}
        for pos, r in enumerate(self.reports):
            if r.id in self.index_by_id:
                raise CorpusError(f"duplicate report id {r.id!r}")
            self.index_by_id[r.id] = pos

    def __len__(self):
        return len(self.reports)

    def __iter__(self):
        return iter(self.reports)

    def __contains__(self, report_id):
        return report_id in self.index_by_id

    def get(self, report_id: str) -> BugReport:
        try:
            return self.reports[self.index_by_id[report_id]]
        except KeyError:
            raise CorpusError(f"unknown report id {report_id!r}") from None

    def duplicate_children(self):
        """Ids of reports carrying a dup_of link, in collection order."""
        return [r.id for r in self.reports if r.dup_of is not None]

    def originals(self):
        """Ids of reports with no dup_of link (roots and uniques)."""
        return [r.id for r in self.reports if r.dup_of is None]


@dataclass
class SplitSpec:
    train_ids: set
    test_pairs: list  # (child_id, parent_id)


def _parse_created_at(value):
    if not value:
        return EPOCH
    try:
        return datetime.fromisoformat(str(value).replace("Z", "+00:00"))
    except ValueError as exc:
        raise CorpusError(f"bad created_at {value!r}: {exc}") from None


def _str_map(value, where):
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise CorpusError(f"{where}: expected an object of string->string")
    return {str(k): str(v) for k, v in value.items()}


def _report_from_record(rec: dict, where: str) -> BugReport:
    if "id" not in rec or not str(rec["id"]):
        raise CorpusError(f"{where}: missing required field 'id'")
    if "summary" not in rec or not str(rec["summary"]).strip():
        raise CorpusError(f"{where}: missing required field 'summary'")
    dup_of = rec.get("dup_of") or None
    return BugReport(
        id=str(rec["id"]),
        summary=str(rec["summary"]),
        description=str(rec.get("description") or ""),
        component=str(rec.get("component") or "UNKNOWN"),
        platform=_str_map(rec.get("platform"), where),
        characteristics=_str_map(rec.get("characteristics"), where),
        dup_of=str(dup_of) if dup_of is not None else None,
        created_at=_parse_created_at(rec.get("created_at")),
    )


def _parse_kv_field(text):
    # CSV serializes maps as "k1=v1;k2=v2"
    out = {}
    for part in (text or "").split(";"):
        part = part.strip()
        if not part:
            continue
        key, _, val = part.partition("=")
        out[key.strip()] = val.strip()
    return out


def _iter_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: malformed JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise CorpusError(f"line {lineno}: expected a JSON object")
            yield lineno, rec


def _iter_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for lineno, row in enumerate(reader, start=2):
            rec = dict(row)
            rec["platform"] = _parse_kv_field(rec.get("platform"))
            rec["characteristics"] = _parse_kv_field(rec.get("characteristics"))
            yield lineno, rec


def load_corpus(path, format="jsonl"):
    """Load a report collection from a JSONL or CSV file.

    Returns (collection, load_report). Dangling dup_of references are
    cleared, not fatal; the count lands in the load report.
    """
    if format == "jsonl":
        records = _iter_jsonl(path)
    elif format == "csv":
        records = _iter_csv(path)
    else:
        raise ValueError(f"unknown format {format!r}")

    try:
        reports = [_report_from_record(rec, f"line {lineno}") for lineno, rec in records]
    except OSError as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from None

    collection = ReportCollection(reports)
    load_report = LoadReport(n_records=len(collection))
    for r in collection:
        if r.dup_of is None:
            continue
        if r.dup_of == r.id or r.dup_of not in collection:
            r.dup_of = None
            load_report.n_dangling_cleared += 1
        else:
            load_report.n_duplicate_links += 1
    return collection, load_report


def resolve_parent(collection: ReportCollection, report_id: str) -> str:
    """Follow dup_of links transitively to the root report."""
    seen = []
    current = report_id
    while True:
        report = collection.get(current)
        if report.dup_of is None:
            return current
        if current in seen:
            cycle = seen[seen.index(current):]
            raise CorpusError(f"duplicate-link cycle: {' -> '.join(cycle + [current])}")
        seen.append(current)
        current = report.dup_of


def split_train_test(collection, holdout_fraction, seed):
    """Hold out a seeded-random fraction of duplicate children as test pairs.

    Every held-out child is paired with its resolved root; everything else
    (parents, uniques, and the remaining children) stays in the training set.
    """
    if not 0 < holdout_fraction < 1:
        raise ValueError(f"holdout_fraction must be in (0,1), got {holdout_fraction}")
    children = collection.duplicate_children()
    if not children:
        raise CorpusError("collection has no duplicate links to split on")

    n_test = max(1, int(len(children) * holdout_fraction))
    rng = random.Random(seed)
    held_out = sorted(rng.sample(sorted(children), n_test))

    test_pairs = [(child, resolve_parent(collection, child)) for child in held_out]
    train_ids = {r.id for r in collection} - set(held_out)
    return SplitSpec(train_ids=train_ids, test_pairs=test_pairs)


def collection_to_json(collection: ReportCollection) -> dict:
    return {
        "version": 1,
        "reports": [
            {
                "id": r.id,
                "summary": r.summary,
                "description": r.description,
                "component": r.component,
                "platform": r.platform,
                "characteristics": r.characteristics,
                "dup_of": r.dup_of,
                "created_at": r.created_at.isoformat(),
            }
            for r in collection
        ],
    }


def collection_from_json(data: dict) -> ReportCollection:
    return ReportCollection(
        _report_from_record(rec, f"record {i}") for i, rec in enumerate(data["reports"])
    )
