"""Content-catalog ingestion and provision metrics.

Reads delimited catalog exports (one row per catalogued educational
resource), deduplicates them on the portal-scoped identifier, and computes
the provision metrics: topic diversity (Shannon entropy, in nats), taxonomy
richness, average content age, and the offered-vs-accessed gap analysis.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date, datetime

from .errors import DomainError, FormatError

# Accepted header aliases, Dublin Core names included.
_COLUMN_ALIASES = {
    "identifier": ("identifier", "dc:identifier", "dc_identifier", "id"),
    "resource_type": ("resource_type", "dc:type", "dc_type", "type"),
    "topic": ("topic", "dc:subject", "dc_subject", "subject"),
    "published": ("published", "dc:date", "dc_date", "date"),
    "portal_id": ("portal_id", "portal"),
}

DEFAULT_GAP_THRESHOLD = 0.10


@dataclass(frozen=True)
class ContentRecord:
    """One catalogued educational resource."""

    identifier: str
    resource_type: str
    topic: str
    published: date
    portal_id: str


@dataclass(frozen=True)
class TopicTaxonomy:
    """The network-wide agreed list of topic labels.

    The taxonomy is always an input (file or argument), never hard-coded:
    there is no canonical list bundled with the package.
    """

    topics: tuple[str, ...]

    def __post_init__(self):
        if not self.topics:
            raise DomainError("taxonomy must contain at least one topic")
        if len(set(self.topics)) != len(self.topics):
            raise DomainError("taxonomy labels must be unique")

    def __contains__(self, label: str) -> bool:
        return label in set(self.topics)

    @classmethod
    def from_file(cls, path) -> "TopicTaxonomy":
        """Load a taxonomy from a plain-text file, one label per line."""
        labels = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#"):
                    labels.append(line)
        return cls(tuple(labels))


@dataclass(frozen=True)
class TopicDistribution:
    """Counts of content per label (topic or resource type)."""

    counts: dict[str, int]
    total: int

    @classmethod
    def from_counts(cls, counts: dict[str, int]) -> "TopicDistribution":
        if any(c < 0 for c in counts.values()):
            raise DomainError("distribution counts must be non-negative")
        return cls(counts=dict(counts), total=sum(counts.values()))

    def share(self, label: str) -> float:
        if self.total == 0:
            raise DomainError("distribution is empty")
        return self.counts.get(label, 0) / self.total


@dataclass
class ParsedCatalog:
    """Result of parsing one catalog stream."""

    records: list[ContentRecord]
    duplicates_dropped: int
    row_errors: list[tuple[int, str]] = field(default_factory=list)


@dataclass(frozen=True)
class DiversityResult:
    """Shannon entropy of a distribution plus its taxonomy-size-free evenness."""

    entropy_nats: float
    evenness: float
    positive_topics: int


@dataclass(frozen=True)
class AverageAgeResult:
    mean_age_days: float
    by_topic: dict[str, float]
    reference: date


@dataclass(frozen=True)
class TopicGap:
    topic: str
    offer_share: float
    demand_share: float
    gap: float


@dataclass(frozen=True)
class GapReport:
    gaps: tuple[TopicGap, ...]
    high_demand_low_offer: tuple[str, ...]
    high_offer_low_demand: tuple[str, ...]
    threshold: float


@dataclass(frozen=True)
class ProvisionSummary:
    """Provision section of a portal report.

    Accessed diversity is carried twice, weighted by views and by unique
    visitors, because both readings of "resources accessed" are defensible.
    Fields are None when the underlying data was not supplied.
    """

    diversity_offered_nats: float | None
    evenness_offered: float | None
    diversity_accessed_by_visits_nats: float | None
    diversity_accessed_by_visitors_nats: float | None
    richness: float | None
    average_age_days: float | None
    high_demand_low_offer: tuple[str, ...] = ()
    high_offer_low_demand: tuple[str, ...] = ()


def _resolve_header(header: list[str]) -> dict[str, int]:
    """Map canonical column names to indices, honoring the alias table."""
    lowered = [h.strip().lower() for h in header]
    mapping = {}
    for canonical, aliases in _COLUMN_ALIASES.items():
        for alias in aliases:
            if alias in lowered:
                mapping[canonical] = lowered.index(alias)
                break
    missing = [c for c in _COLUMN_ALIASES if c not in mapping]
    if missing:
        raise FormatError(
            "catalog header is missing mandatory column(s): " + ", ".join(missing)
        )
    return mapping


def _parse_date(text: str) -> date:
    return datetime.strptime(text.strip(), "%Y-%m-%d").date()


def parse_catalog(stream) -> ParsedCatalog:
    """Parse a delimited catalog stream into deduplicated records.

    The stream must be line-oriented text (comma- or tab-separated, sniffed
    from the header row) with a header naming at least identifier,
    resource_type, topic, published and portal_id; Dublin Core aliases are
    accepted. Dates must be ISO-8601 (YYYY-MM-DD).

    Duplicate identifiers within one portal are collapsed to the first
    occurrence and tallied. Malformed rows are skipped and tallied with
    their line number; a missing mandatory column is fatal.
    """
    if isinstance(stream, (str, bytes)):
        stream = io.StringIO(stream if isinstance(stream, str) else stream.decode())
    lines = iter(stream)
    try:
        header_line = next(lines)
    except StopIteration:
        raise FormatError("catalog stream is empty (no header row)")
    delimiter = "\t" if "\t" in header_line else ","
    header = next(csv.reader([header_line], delimiter=delimiter))
    columns = _resolve_header(header)

    records: list[ContentRecord] = []
    seen: set[tuple[str, str]] = set()
    duplicates = 0
    row_errors: list[tuple[int, str]] = []
    reader = csv.reader(lines, delimiter=delimiter)
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            if max(columns.values()) >= len(row):
                raise ValueError(f"expected {len(header)} columns, got {len(row)}")
            identifier = row[columns["identifier"]].strip()
            if not identifier:
                raise ValueError("empty identifier")
            record = ContentRecord(
                identifier=identifier,
                resource_type=row[columns["resource_type"]].strip(),
                topic=row[columns["topic"]].strip(),
                published=_parse_date(row[columns["published"]]),
                portal_id=row[columns["portal_id"]].strip(),
            )
        except ValueError as exc:
            row_errors.append((line_no, str(exc)))
            continue
        key = (record.portal_id, record.identifier)
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        records.append(record)
    return ParsedCatalog(records=records, duplicates_dropped=duplicates,
                         row_errors=row_errors)


def shannon_diversity(dist: TopicDistribution,
                      taxonomy_size: int | None = None) -> DiversityResult:
    """Shannon entropy H = -sum(p_i * ln p_i) over labels with positive count.

    Natural log, so the value is in nats; 0 <= H <= ln(S+) where S+ is the
    number of positive labels. Evenness divides by ln(S) with S the taxonomy
    size (defaults to S+), and is defined as 0.0 when S == 1.
    """
    if dist.total <= 0:
        raise DomainError("no content: cannot compute diversity of an "
                          "empty distribution")
    positive = [c for c in dist.counts.values() if c > 0]
    entropy = 0.0
    for count in positive:
        p = count / dist.total
        entropy -= p * math.log(p)
    entropy = max(entropy, 0.0)
    s = taxonomy_size if taxonomy_size is not None else len(positive)
    if s < 1:
        raise DomainError("taxonomy size must be >= 1")
    evenness = 0.0 if s == 1 else entropy / math.log(s)
    return DiversityResult(entropy_nats=entropy, evenness=evenness,
                           positive_topics=len(positive))


def richness(records: list[ContentRecord],
             taxonomy: TopicTaxonomy) -> tuple[float, list[str]]:
    """Fraction of taxonomy topics covered by at least one record.

    Returns (ratio, warnings) where warnings lists topics that appear in
    records but are absent from the taxonomy; those are excluded from the
    numerator.
    """
    present = {r.topic for r in records}
    known = set(taxonomy.topics)
    covered = present & known
    unknown = sorted(present - known)
    return len(covered) / len(taxonomy.topics), unknown


def average_age(records: list[ContentRecord],
                reference: date) -> AverageAgeResult:
    """Mean age of the catalog in days at the reference date.

    Also breaks the average down per topic, which is what the replacement
    analysis (old content with low demand) consumes.
    """
    if not records:
        raise DomainError("cannot compute average age of an empty catalog")
    for r in records:
        if r.published > reference:
            raise DomainError(
                f"record {r.identifier!r} published {r.published} is later "
                f"than the reference date {reference}"
            )
    ages = [(reference - r.published).days for r in records]
    by_topic: dict[str, list[int]] = {}
    for r, age in zip(records, ages):
        by_topic.setdefault(r.topic, []).append(age)
    return AverageAgeResult(
        mean_age_days=sum(ages) / len(ages),
        by_topic={t: sum(a) / len(a) for t, a in sorted(by_topic.items())},
        reference=reference,
    )


def offer_distribution(records: list[ContentRecord],
                       axis: str = "topic") -> TopicDistribution:
    """Count records per label along ``axis`` ('topic' or 'resource_type')."""
    if axis not in ("topic", "resource_type"):
        raise DomainError(f"unknown distribution axis {axis!r}")
    counts: dict[str, int] = {}
    for r in records:
        label = r.topic if axis == "topic" else r.resource_type
        counts[label] = counts.get(label, 0) + 1
    return TopicDistribution.from_counts(counts)


def demand_offer_gap(offer: TopicDistribution, accessed: TopicDistribution,
                     threshold: float = DEFAULT_GAP_THRESHOLD) -> GapReport:
    """Per-topic comparison of offered share vs accessed (demanded) share.

    gap = demand share - offer share. Topics with gap above ``threshold``
    are flagged high-demand/low-offer; below ``-threshold``, the reverse.
    Labels missing from one distribution count as zero there.
    """
    if offer.total == 0 or accessed.total == 0:
        raise DomainError("both distributions must have positive totals")
    labels = sorted(set(offer.counts) | set(accessed.counts))
    gaps = []
    high_demand = []
    high_offer = []
    for label in labels:
        o = offer.counts.get(label, 0) / offer.total
        d = accessed.counts.get(label, 0) / accessed.total
        gap = d - o
        gaps.append(TopicGap(topic=label, offer_share=o, demand_share=d, gap=gap))
        if gap > threshold:
            high_demand.append(label)
        elif gap < -threshold:
            high_offer.append(label)
    return GapReport(
        gaps=tuple(gaps),
        high_demand_low_offer=tuple(high_demand),
        high_offer_low_demand=tuple(high_offer),
        threshold=threshold,
    )


def content_counts(records: list[ContentRecord]) -> tuple[dict[str, int], int]:
    """Deduplicated content counts per portal plus the network-wide total.

    Per-portal counts keep identifiers that several portals share; the
    network total collapses them, so it can be smaller than the sum of the
    per-portal counts.
    """
    per_portal: dict[str, set[str]] = {}
    network: set[str] = set()
    for r in records:
        per_portal.setdefault(r.portal_id, set()).add(r.identifier)
        network.add(r.identifier)
    return {p: len(ids) for p, ids in sorted(per_portal.items())}, len(network)


def latest_published(records: list[ContentRecord]) -> date:
    """Default reference date: the newest publication date in the catalog."""
    if not records:
        raise DomainError("empty catalog has no publication dates")
    return max(r.published for r in records)
