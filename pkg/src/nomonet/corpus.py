"""Indicator corpus: domain types, text preprocessing, and CSV/TSV ingest.

An indicator is a single survey question. A corpus is an ordered collection
of indicators, optionally labeled with the construct each indicator is
intended to measure. Corpora are immutable after load and safe to share
across threads.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import DuplicateId, EmptyIndicator, NomonetError, RowRejected

_KEEP = re.compile(r"[^a-z0-9 ]+")
_SPACES = re.compile(r" +")


def preprocess(raw: str) -> str:
    """Normalize indicator text: lowercase, strip punctuation, squeeze spaces.

    Characters outside ``a-z``, ``0-9`` and the space are deleted outright
    rather than replaced with a space, so "self-efficacy" becomes
    "selfefficacy" (one token, not two). Runs of spaces collapse to one and
    leading/trailing spaces are trimmed.

    Raises
    ------
    EmptyIndicator
        If nothing remains after preprocessing.
    """
    text = _KEEP.sub("", raw.lower())
    text = _SPACES.sub(" ", text).strip()
    if not text:
        raise EmptyIndicator(f"text empty after preprocessing: {raw!r}")
    return text


def normalize_label(raw: Optional[str]) -> Optional[str]:
    """Preprocess a construct label; empty or all-punctuation labels become None."""
    if raw is None:
        return None
    try:
        return preprocess(raw)
    except EmptyIndicator:
        return None


@dataclass(frozen=True)
class Indicator:
    """One survey item.

    ``text`` is always the preprocessed form; ``raw_text`` preserves the
    original wording. ``construct_label`` is the label as it appeared in the
    source file (label normalization happens where labels are merged).
    """

    id: str
    text: str
    raw_text: str
    construct_label: Optional[str] = None
    source: Optional[str] = None


@dataclass(frozen=True)
class Corpus:
    """Ordered, immutable collection of indicators with a label index."""

    indicators: tuple[Indicator, ...]
    label_index: dict[str, tuple[str, ...]] = field(compare=False)

    @staticmethod
    def from_indicators(indicators: Iterable[Indicator]) -> "Corpus":
        items = tuple(indicators)
        seen: dict[str, int] = {}
        for row, ind in enumerate(items, start=1):
            if ind.id in seen:
                raise DuplicateId(ind.id, seen[ind.id], row)
            seen[ind.id] = row
        return Corpus(indicators=items, label_index=_build_label_index(items))

    def __len__(self) -> int:
        return len(self.indicators)

    def __iter__(self):
        return iter(self.indicators)

    def ids(self) -> list[str]:
        return [ind.id for ind in self.indicators]

    def texts(self) -> list[str]:
        return [ind.text for ind in self.indicators]

    def get(self, indicator_id: str) -> Indicator:
        try:
            return self._by_id[indicator_id]
        except AttributeError:
            by_id = {ind.id: ind for ind in self.indicators}
            object.__setattr__(self, "_by_id", by_id)
            return by_id[indicator_id]

    def labeled(self) -> list[Indicator]:
        """Indicators carrying a construct label (the only ones used for triplets)."""
        return [ind for ind in self.indicators if ind.construct_label]

    def canonical_csv(self) -> bytes:
        """Canonical serialization; loading these bytes reproduces the corpus."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id", "text", "construct", "source"])
        for ind in self.indicators:
            writer.writerow(
                [ind.id, ind.text, ind.construct_label or "", ind.source or ""]
            )
        return buf.getvalue().encode("utf-8")


def _build_label_index(indicators: Iterable[Indicator]) -> dict[str, tuple[str, ...]]:
    index: dict[str, list[str]] = {}
    for ind in indicators:
        if ind.construct_label:
            index.setdefault(ind.construct_label, []).append(ind.id)
    return {label: tuple(ids) for label, ids in index.items()}


def load_corpus(path: str | Path, format: str = "csv") -> Corpus:
    """Load a corpus from a CSV or TSV file.

    The header must contain ``id`` and ``text`` columns; ``construct`` and
    ``source`` are optional. Text is preprocessed on ingest; a row whose text
    is empty after preprocessing is rejected with its row number.
    """
    if format not in ("csv", "tsv"):
        raise NomonetError(f"unsupported corpus format: {format!r}")
    delimiter = "," if format == "csv" else "\t"
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise NomonetError(f"cannot read corpus file {path}: {exc}") from exc
    return parse_corpus(raw, delimiter=delimiter)


def parse_corpus(content: str, delimiter: str = ",") -> Corpus:
    reader = csv.DictReader(io.StringIO(content), delimiter=delimiter)
    header = reader.fieldnames or []
    for required in ("id", "text"):
        if required not in header:
            raise NomonetError(f"missing required column {required!r}")

    indicators: list[Indicator] = []
    seen: dict[str, int] = {}
    for row_no, row in enumerate(reader, start=2):  # header is row 1
        raw_id = (row.get("id") or "").strip()
        raw_text = row.get("text") or ""
        if not raw_id:
            raise RowRejected(row_no, "empty id")
        if raw_id in seen:
            raise DuplicateId(raw_id, seen[raw_id], row_no)
        seen[raw_id] = row_no
        try:
            text = preprocess(raw_text)
        except EmptyIndicator as exc:
            raise RowRejected(row_no, exc) from exc
        construct = (row.get("construct") or "").strip() or None
        source = (row.get("source") or "").strip() or None
        indicators.append(
            Indicator(
                id=raw_id,
                text=text,
                raw_text=raw_text,
                construct_label=construct,
                source=source,
            )
        )
    return Corpus(indicators=tuple(indicators), label_index=_build_label_index(indicators))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_bytes(corpus.canonical_csv())
