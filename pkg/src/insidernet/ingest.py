"""Form 4 / CSV ingestion into canonical daily-aggregated trade logs.

The canonical intermediate format is a flat CSV with header
``insider_id,firm_id,date,direction``; every downstream stage (network
building, null models) reads and writes that schema.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import re
import xml.etree.ElementTree as ET
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

DEFAULT_HORIZON = (date(2014, 1, 1), date(2024, 12, 31))

# compared after removing dots, so "L.L.C." == "LLC" and "L.P." == "LP"
DEFAULT_INSTITUTION_TOKENS = (
    "LLC", "L.L.C.", "LP", "L.P.", "INC", "CORP", "LTD", "TRUST", "FUND",
)


class Direction(str, enum.Enum):
    ACQUIRE = "A"
    DISPOSE = "D"


class EntityKind(str, enum.Enum):
    PERSON = "Person"
    INSTITUTION = "Institution"
    UNKNOWN = "Unknown"


class IngestError(Exception):
    pass


class Form4ParseError(IngestError):
    """Raised for XML that is not well formed; ``offset`` is a byte offset."""

    def __init__(self, message: str, offset: int, source: str = ""):
        super().__init__(f"{source or '<bytes>'}: {message} (byte offset {offset})")
        self.offset = offset
        self.source = source


@dataclass(frozen=True, order=True)
class TradeEvent:
    insider_id: str
    firm_id: str
    date: date
    direction: Direction
    insider_name: str = field(default="", compare=False)
    entity_kind: EntityKind = field(default=EntityKind.UNKNOWN, compare=False)
    quantity: float | None = field(default=None, compare=False)
    price: float | None = field(default=None, compare=False)


@dataclass
class InsiderFirmLog:
    insider_id: str
    firm_id: str
    acquire_dates: list[date]
    dispose_dates: list[date]

    @property
    def first_date(self) -> date:
        return min(self.acquire_dates[:1] + self.dispose_dates[:1])

    @property
    def last_date(self) -> date:
        return max(self.acquire_dates[-1:] + self.dispose_dates[-1:])

    @property
    def n_trades(self) -> int:
        return len(self.acquire_dates) + len(self.dispose_dates)

    def dates(self, direction: Direction) -> list[date]:
        return self.acquire_dates if direction is Direction.ACQUIRE else self.dispose_dates

    def events(self) -> list[TradeEvent]:
        out = [TradeEvent(self.insider_id, self.firm_id, d, Direction.ACQUIRE) for d in self.acquire_dates]
        out += [TradeEvent(self.insider_id, self.firm_id, d, Direction.DISPOSE) for d in self.dispose_dates]
        return sorted(out)


@dataclass(frozen=True)
class Reject:
    source: str
    row: int
    field: str
    reason: str


@dataclass
class ParseResult:
    events: list[TradeEvent]
    rejects: list[Reject]


# ---------------------------------------------------------------------------
# Form 4 XML


def _text(node: ET.Element | None, path: str) -> str | None:
    if node is None:
        return None
    found = node.find(path)
    if found is None:
        return None
    # most Form 4 leaves wrap their content in <value>
    val = found.find("value")
    txt = (val.text if val is not None else found.text) or ""
    txt = txt.strip()
    return txt or None


def _byte_offset(data: bytes, line: int, column: int) -> int:
    lines = data.splitlines(keepends=True)
    return sum(len(l) for l in lines[: max(line - 1, 0)]) + column


def _parse_date(raw: str) -> date:
    # EDGAR occasionally appends a timezone offset, e.g. 2019-03-04-05:00
    return date.fromisoformat(raw.strip()[:10])


def _to_float(raw: str | None) -> float | None:
    if raw is None:
        return None
    try:
        return float(raw)
    except ValueError:
        return None


@dataclass(frozen=True)
class Form4Header:
    document_type: str
    period_of_report: str
    issuer_cik: str | None
    owner_cik: str | None
    owner_name: str


def parse_form4(
    xml_document: bytes,
    source: str = "",
    horizon: tuple[date, date] = DEFAULT_HORIZON,
) -> ParseResult:
    """Parse the non-derivative table of one Form 4 XML document.

    One event is produced per ``nonDerivativeTransaction`` row; derivative
    rows are ignored. Rows missing a mandatory field, or dated outside
    ``horizon``, are skipped and reported as rejects.
    """
    result, _ = _parse_form4(xml_document, source, horizon)
    return result


def _parse_form4(xml_document: bytes, source: str, horizon: tuple[date, date]):
    try:
        root = ET.fromstring(xml_document)
    except ET.ParseError as exc:
        line, col = exc.position
        raise Form4ParseError(str(exc), _byte_offset(xml_document, line, col), source) from None

    issuer_cik = _text(root, "issuer/issuerCik")
    owner = root.find("reportingOwner")
    owner_cik = _text(owner, "reportingOwnerId/rptOwnerCik")
    owner_name = _text(owner, "reportingOwnerId/rptOwnerName") or ""
    header = Form4Header(
        document_type=_text(root, "documentType") or "4",
        period_of_report=_text(root, "periodOfReport") or "",
        issuer_cik=issuer_cik,
        owner_cik=owner_cik,
        owner_name=owner_name,
    )

    events: list[TradeEvent] = []
    rejects: list[Reject] = []
    rows = root.findall("nonDerivativeTable/nonDerivativeTransaction")
    for i, row in enumerate(rows):
        raw_date = _text(row, "transactionDate")
        code = _text(row, "transactionAmounts/transactionAcquiredDisposedCode")
        missing = [
            name
            for name, val in (
                ("rptOwnerCik", owner_cik),
                ("issuerCik", issuer_cik),
                ("transactionDate", raw_date),
                ("transactionAcquiredDisposedCode", code),
            )
            if val is None
        ]
        if missing:
            rejects.append(Reject(source, i, missing[0], "missing mandatory field"))
            continue
        try:
            when = _parse_date(raw_date)
        except ValueError:
            rejects.append(Reject(source, i, "transactionDate", f"bad date {raw_date!r}"))
            continue
        if code not in ("A", "D"):
            rejects.append(Reject(source, i, "transactionAcquiredDisposedCode", f"bad code {code!r}"))
            continue
        if not horizon[0] <= when <= horizon[1]:
            rejects.append(Reject(source, i, "transactionDate", f"horizon: {when} outside {horizon[0]}..{horizon[1]}"))
            continue
        events.append(
            TradeEvent(
                insider_id=owner_cik,
                firm_id=issuer_cik,
                date=when,
                direction=Direction(code),
                insider_name=owner_name,
                quantity=_to_float(_text(row, "transactionAmounts/transactionShares")),
                price=_to_float(_text(row, "transactionAmounts/transactionPricePerShare")),
            )
        )
    return ParseResult(events, rejects), header


def parse_form4_directory(
    directory: str | Path,
    horizon: tuple[date, date] = DEFAULT_HORIZON,
    amendments: str = "latest",
    strict: bool = False,
) -> ParseResult:
    """Parse every ``*.xml`` file below ``directory``.

    The filename stem is taken as the accession number. Files are processed in
    accession order; with ``amendments="latest"`` only the last filing for a
    given (owner, issuer, period of report) is kept, so a 4/A replaces the
    original. Identical accession numbers are kept once. Malformed files are
    rejected unless ``strict`` is set, in which case the parse error propagates.
    """
    if amendments not in ("latest", "all"):
        raise ValueError(f"amendments must be 'latest' or 'all', got {amendments!r}")
    paths = sorted(Path(directory).rglob("*.xml"), key=lambda p: (p.stem, str(p)))
    kept: dict[object, tuple[str, ParseResult]] = {}
    rejects: list[Reject] = []
    seen_accessions: set[str] = set()
    for path in paths:
        accession = path.stem
        if accession in seen_accessions:
            rejects.append(Reject(str(path), -1, "accession", "duplicate accession number"))
            continue
        seen_accessions.add(accession)
        try:
            res, header = _parse_form4(path.read_bytes(), str(path), horizon)
        except Form4ParseError as exc:
            if strict:
                raise
            rejects.append(Reject(str(path), -1, "xml", str(exc)))
            continue
        if amendments == "latest":
            key = (header.owner_cik, header.issuer_cik, header.period_of_report)
        else:
            key = accession
        if key in kept:
            old_path, old = kept[key]
            rejects.append(Reject(old_path, -1, "accession", f"superseded by {path.name}"))
        kept[key] = (str(path), res)
        rejects.extend(res.rejects)

    events: list[TradeEvent] = []
    for _, res in kept.values():
        events.extend(res.events)
    events.sort(key=lambda e: (e.firm_id, e.insider_id, e.date, e.direction.value))
    return ParseResult(events, rejects)


# ---------------------------------------------------------------------------
# CSV

CSV_REQUIRED = ("insider_id", "firm_id", "date", "direction")


def read_trades_csv(
    path_or_buffer: str | Path | io.TextIOBase,
    horizon: tuple[date, date] | None = DEFAULT_HORIZON,
) -> ParseResult:
    """Read a trade CSV (``insider_id,firm_id,date,direction[,insider_name,entity_kind,quantity]``)."""
    if isinstance(path_or_buffer, (str, Path)):
        source = str(path_or_buffer)
        with open(path_or_buffer, newline="") as fh:
            return _read_trades(fh, source, horizon)
    return _read_trades(path_or_buffer, "<stream>", horizon)


def _read_trades(fh, source: str, horizon) -> ParseResult:
    reader = csv.DictReader(fh)
    header = reader.fieldnames or []
    absent = [c for c in CSV_REQUIRED if c not in header]
    if absent:
        raise IngestError(f"{source}: missing columns {absent}")
    events: list[TradeEvent] = []
    rejects: list[Reject] = []
    for i, row in enumerate(reader):
        missing = [c for c in CSV_REQUIRED if not (row.get(c) or "").strip()]
        if missing:
            rejects.append(Reject(source, i, missing[0], "missing mandatory field"))
            continue
        try:
            when = date.fromisoformat(row["date"].strip())
        except ValueError:
            rejects.append(Reject(source, i, "date", f"bad date {row['date']!r}"))
            continue
        code = row["direction"].strip().upper()
        if code not in ("A", "D"):
            rejects.append(Reject(source, i, "direction", f"bad code {code!r}"))
            continue
        if horizon is not None and not horizon[0] <= when <= horizon[1]:
            rejects.append(Reject(source, i, "date", f"horizon: {when} outside {horizon[0]}..{horizon[1]}"))
            continue
        kind_raw = (row.get("entity_kind") or "").strip()
        try:
            kind = EntityKind(kind_raw.capitalize()) if kind_raw else EntityKind.UNKNOWN
        except ValueError:
            kind = EntityKind.UNKNOWN
        events.append(
            TradeEvent(
                insider_id=row["insider_id"].strip(),
                firm_id=row["firm_id"].strip(),
                date=when,
                direction=Direction(code),
                insider_name=(row.get("insider_name") or "").strip(),
                entity_kind=kind,
                quantity=_to_float(row.get("quantity")),
            )
        )
    return ParseResult(events, rejects)


def write_events_csv(events: Iterable[TradeEvent], path_or_buffer) -> None:
    """Write the canonical ``insider_id,firm_id,date,direction`` CSV (sorted)."""
    rows = sorted(
        {(e.firm_id, e.insider_id, e.date.isoformat(), e.direction.value) for e in events}
    )
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_REQUIRED)
        for firm, insider, d, code in rows:
            w.writerow((insider, firm, d, code))

    if isinstance(path_or_buffer, (str, Path)):
        with open(path_or_buffer, "w", newline="") as fh:
            _write(fh)
    else:
        _write(path_or_buffer)


def write_logs_csv(logs: Sequence[InsiderFirmLog], path_or_buffer) -> None:
    write_events_csv((e for log in logs for e in log.events()), path_or_buffer)


def write_rejects_csv(rejects: Iterable[Reject], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("source", "row", "field", "reason"))
        for r in rejects:
            w.writerow((r.source, r.row, r.field, r.reason))


# ---------------------------------------------------------------------------
# filtering and aggregation


def _normalise_token(tok: str) -> str:
    return tok.replace(".", "").upper()


def is_institution_name(name: str, tokens: Sequence[str] = DEFAULT_INSTITUTION_TOKENS) -> bool:
    wanted = {_normalise_token(t) for t in tokens}
    return any(_normalise_token(t) in wanted for t in re.split(r"[\s,;/()&]+", name) if t)


def filter_institutions(
    events: Sequence[TradeEvent],
    tokens: Sequence[str] = DEFAULT_INSTITUTION_TOKENS,
) -> tuple[list[TradeEvent], int]:
    """Drop institutional filers; returns ``(kept, n_removed)``.

    An explicit ``entity_kind`` wins: Institution is always removed and
    Person always kept. Unknown kinds fall back to a token match on the name.
    """
    kept = []
    for e in events:
        if e.entity_kind is EntityKind.INSTITUTION:
            continue
        if e.entity_kind is EntityKind.UNKNOWN and is_institution_name(e.insider_name, tokens):
            continue
        kept.append(e)
    removed = len(events) - len(kept)
    if removed:
        logger.info("filter_institutions: removed %d of %d events", removed, len(events))
    return kept, removed


def aggregate_daily(events: Iterable[TradeEvent]) -> list[InsiderFirmLog]:
    """Collapse events to distinct (insider, firm, direction, day) keys, one log per pair."""
    acq: dict[tuple[str, str], set[date]] = defaultdict(set)
    dis: dict[tuple[str, str], set[date]] = defaultdict(set)
    for e in events:
        key = (e.insider_id, e.firm_id)
        (acq if e.direction is Direction.ACQUIRE else dis)[key].add(e.date)
    keys = sorted(set(acq) | set(dis), key=lambda k: (k[1], k[0]))
    return [
        InsiderFirmLog(k[0], k[1], sorted(acq.get(k, ())), sorted(dis.get(k, ())))
        for k in keys
    ]


def load_logs(path: str | Path, horizon=DEFAULT_HORIZON) -> list[InsiderFirmLog]:
    """Convenience: canonical CSV -> institution-filtered daily logs."""
    res = read_trades_csv(path, horizon)
    kept, _ = filter_institutions(res.events)
    return aggregate_daily(kept)
