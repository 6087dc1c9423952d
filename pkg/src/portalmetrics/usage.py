"""Access-log analytics: parsing, bot filtering, sessionization, demand.

Ingests web-server access logs in NCSA Combined Log Format, splits human
from automated-agent traffic, groups page views into visits (sessions),
and computes the demand-side metrics: overall demand per time bucket,
recency (mean time between visits by the same visitor), activity level
(page views per visit), accessed-content distributions joined against the
catalog, and per-session navigation complexity/linearity derived from the
structure-module metrics on the session's path graph.

Visitor identity: the authenticated-user field of the log line when
present, otherwise a stable hash of (client address, user agent). The
latter is an approximation -- one machine and browser counts as one
visitor -- and reports label which method was in effect.
"""

from __future__ import annotations

import gzip
import hashlib
import re
import statistics
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from functools import lru_cache

from . import structure
from .catalog import ContentRecord, TopicDistribution
from .errors import DomainError, FormatError

DEFAULT_SESSION_TIMEOUT = timedelta(minutes=30)
DEFAULT_LINEARITY_BAND = 0.8

# Case-insensitive substrings that mark an automated agent. User-extendable
# via filter_agents(signatures=...) or a signature file.
DEFAULT_BOT_SIGNATURES = (
    "bot",
    "crawler",
    "spider",
    "slurp",
    "archiver",
    "scraper",
    "curl",
    "wget",
    "python-requests",
    "httpclient",
    "facebookexternalhit",
    "headlesschrome",
)

ROBOTS_PATH = "/robots.txt"

_COMBINED_RE = re.compile(
    r'^(\S+) (\S+) (\S+) \[([^\]]+)\] "([^"]*)" (\d{3}) (\S+) "([^"]*)" "([^"]*)"\s*$'
)

_MONTHS = {
    "Jan": 1, "Feb": 2, "Mar": 3, "Apr": 4, "May": 5, "Jun": 6,
    "Jul": 7, "Aug": 8, "Sep": 9, "Oct": 10, "Nov": 11, "Dec": 12,
}

_TZ_CACHE: dict[str, timezone] = {}


@dataclass(frozen=True)
class LogEntry:
    """One parsed access-log line."""

    visitor_key: str
    timestamp: datetime
    path: str
    status: int
    user_agent: str
    referrer: str

    @property
    def is_page_view(self) -> bool:
        """Only successful and redirect responses count as page views."""
        return 200 <= self.status < 400


@dataclass(frozen=True)
class Session:
    """A visit: one visitor's page views with no gap above the timeout."""

    visitor_key: str
    views: tuple[tuple[datetime, str], ...]

    @property
    def start(self) -> datetime:
        return self.views[0][0]

    @property
    def end(self) -> datetime:
        return self.views[-1][0]

    def __len__(self) -> int:
        return len(self.views)


@dataclass(frozen=True)
class AnalysisPeriod:
    """Half-open observation window [start, end) cut into equal buckets.

    The last bucket may be partial. All instants must be timezone-aware.
    """

    start: datetime
    end: datetime
    bucket: timedelta = timedelta(days=1)

    def __post_init__(self):
        if self.start >= self.end:
            raise DomainError("period start must precede period end")
        if self.bucket <= timedelta(0):
            raise DomainError("bucket duration must be positive")

    @property
    def bucket_count(self) -> int:
        span = self.end - self.start
        count = span // self.bucket
        return int(count) + (1 if count * self.bucket < span else 0)

    def bucket_index(self, instant: datetime) -> int | None:
        """Index of the bucket containing ``instant``; None when outside."""
        if instant < self.start or instant >= self.end:
            return None
        return int((instant - self.start) // self.bucket)

    def bucket_starts(self) -> list[datetime]:
        return [self.start + i * self.bucket for i in range(self.bucket_count)]


@dataclass
class ParsedLog:
    entries: list[LogEntry]
    malformed: int
    total_lines: int


@dataclass(frozen=True)
class DemandSeries:
    """Visit counts per bucket over one analysis period."""

    buckets: tuple[tuple[datetime, int], ...]
    period: AnalysisPeriod

    @property
    def total(self) -> int:
        return sum(c for _, c in self.buckets)

    def counts(self) -> list[int]:
        return [c for _, c in self.buckets]


@dataclass(frozen=True)
class RecencyResult:
    """Mean time between visits by the same visitor within a period.

    ``mean_between_visits`` is None (with defined=False) when no visitor
    had two or more visits in the period; single-visit visitors are never
    imputed, only counted.
    """

    mean_between_visits: timedelta | None
    eligible_visitors: int
    single_visit_visitors: int

    @property
    def defined(self) -> bool:
        return self.mean_between_visits is not None


@dataclass(frozen=True)
class AccessedContent:
    """Accessed-content distributions, by views and by unique visitors."""

    per_bucket_views: tuple[TopicDistribution, ...]
    per_bucket_visitors: tuple[TopicDistribution, ...]
    views_total: TopicDistribution
    visitors_total: TopicDistribution
    uncatalogued_views: int


@dataclass(frozen=True)
class NavigationMetrics:
    """Complexity and linearity of one session's path graph.

    Sessions visiting fewer than 2 distinct pages carry None metrics and
    the degenerate flag; summaries skip them.
    """

    complexity: float | None
    linearity: float | None
    distinct_pages: int
    degenerate: bool


@dataclass(frozen=True)
class NavigationSummary:
    complexity_mean: float | None
    complexity_median: float | None
    linearity_mean: float | None
    linearity_median: float | None
    high_linearity_share: float | None
    linearity_band: float
    sessions_measured: int
    sessions_skipped: int


def _parse_clf_timestamp(text: str) -> datetime:
    # Fixed layout: dd/Mon/yyyy:HH:MM:SS +ZZZZ (locale-independent).
    day = int(text[0:2])
    month = _MONTHS[text[3:6]]
    year = int(text[7:11])
    hour = int(text[12:14])
    minute = int(text[15:17])
    second = int(text[18:20])
    tz_text = text[21:].strip()
    tz = _TZ_CACHE.get(tz_text)
    if tz is None:
        if len(tz_text) != 5 or tz_text[0] not in "+-":
            raise ValueError(f"bad timezone {tz_text!r}")
        offset = timedelta(hours=int(tz_text[1:3]), minutes=int(tz_text[3:5]))
        tz = timezone(offset if tz_text[0] == "+" else -offset)
        _TZ_CACHE[tz_text] = tz
    return datetime(year, month, day, hour, minute, second, tzinfo=tz)


def _visitor_key(host: str, authuser: str, user_agent: str,
                 use_auth_user: bool) -> str:
    if use_auth_user and authuser not in ("-", ""):
        return f"user:{authuser}"
    digest = hashlib.sha1(f"{host}|{user_agent}".encode("utf-8")).hexdigest()
    return f"anon:{digest[:16]}"


def visitor_key_method(use_auth_user: bool = True) -> str:
    """Label for report metadata describing how visitors were identified."""
    if use_auth_user:
        return "auth-user-else-address-agent-hash"
    return "address-agent-hash"


def parse_log(line_stream, use_auth_user: bool = True) -> ParsedLog:
    """Parse NCSA Combined Log Format lines into LogEntry values.

    Malformed lines (including blank ones) are skipped and tallied.
    Non-2xx/3xx responses are retained but excluded from page views via
    ``LogEntry.is_page_view``. Raises FormatError when more than half of
    the lines fail to parse.
    """
    if isinstance(line_stream, (str, bytes)):
        text = line_stream if isinstance(line_stream, str) else line_stream.decode()
        line_stream = text.splitlines()
    entries: list[LogEntry] = []
    malformed = 0
    total = 0
    for raw in line_stream:
        total += 1
        m = _COMBINED_RE.match(raw)
        if m is None:
            malformed += 1
            continue
        host, _ident, authuser, when, request, status, _size, referrer, agent = m.groups()
        try:
            ts = _parse_clf_timestamp(when)
        except (ValueError, KeyError, IndexError):
            malformed += 1
            continue
        parts = request.split()
        if len(parts) < 2 or not parts[1]:
            malformed += 1
            continue
        entries.append(LogEntry(
            visitor_key=_visitor_key(host, authuser, agent, use_auth_user),
            timestamp=ts.astimezone(timezone.utc),
            path=parts[1],
            status=int(status),
            user_agent=agent,
            referrer="" if referrer == "-" else referrer,
        ))
    if total > 0 and malformed * 2 > total:
        raise FormatError(
            f"log stream is mostly unparseable: {malformed} of {total} lines malformed"
        )
    return ParsedLog(entries=entries, malformed=malformed, total_lines=total)


def read_log_lines(paths):
    """Iterate lines over several log files; .gz files are decompressed."""
    for path in paths:
        opener = gzip.open if str(path).endswith(".gz") else open
        with opener(path, "rt", encoding="utf-8", errors="replace") as fh:
            yield from fh


def load_link_map(path) -> dict:
    """Join table from request path to catalog identifier, one delimited
    pair per line (tab wins over comma, # starts a comment)."""
    mapping: dict = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            sep = "\t" if "\t" in line else ","
            parts = [p.strip() for p in line.split(sep)]
            if len(parts) == 2 and parts[0] and parts[1]:
                mapping[parts[0]] = parts[1]
    return mapping


def load_signatures(path) -> tuple[str, ...]:
    """Bot signature file: one case-insensitive substring per line."""
    signatures = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                signatures.append(line.lower())
    return tuple(signatures)


def filter_agents(entries, signatures=None) -> tuple[list[LogEntry], list[LogEntry]]:
    """Split entries into (human, bot) partitions.

    An entry is a bot hit when its user agent contains any signature
    (case-insensitive) or it requests the robots-exclusion file. The
    partition is exhaustive and disjoint.
    """
    sigs = DEFAULT_BOT_SIGNATURES if signatures is None else tuple(signatures)
    sigs = tuple(s.lower() for s in sigs)
    humans: list[LogEntry] = []
    bots: list[LogEntry] = []
    for entry in entries:
        agent = entry.user_agent.lower()
        if entry.path == ROBOTS_PATH or any(s in agent for s in sigs):
            bots.append(entry)
        else:
            humans.append(entry)
    return humans, bots


def sessionize(entries, timeout: timedelta = DEFAULT_SESSION_TIMEOUT) -> list[Session]:
    """Group entries into visits: per visitor, a new session starts when
    the gap to the previous view exceeds the timeout (strictly).

    Every entry lands in exactly one session. Input order does not matter;
    entries are sorted by (visitor, timestamp, path) first.
    """
    ordered = sorted(entries, key=lambda e: (e.visitor_key, e.timestamp, e.path))
    sessions: list[Session] = []
    views: list[tuple[datetime, str]] = []
    current_visitor: str | None = None
    last_ts: datetime | None = None

    def flush():
        if views:
            sessions.append(Session(visitor_key=current_visitor, views=tuple(views)))

    for entry in ordered:
        if entry.visitor_key != current_visitor or (
                last_ts is not None and entry.timestamp - last_ts > timeout):
            flush()
            views = []
            current_visitor = entry.visitor_key
        views.append((entry.timestamp, entry.path))
        last_ts = entry.timestamp
    flush()
    return sessions


def overall_demand(sessions, period: AnalysisPeriod) -> DemandSeries:
    """Visits per bucket; a session counts in the bucket of its start."""
    counts = [0] * period.bucket_count
    for session in sessions:
        idx = period.bucket_index(session.start)
        if idx is not None:
            counts[idx] += 1
    starts = period.bucket_starts()
    return DemandSeries(buckets=tuple(zip(starts, counts)), period=period)


def recency(sessions, period: AnalysisPeriod) -> RecencyResult:
    """Mean over visitors of their mean gap between consecutive visit starts.

    Only sessions starting inside the period count; visitors with a single
    visit are excluded and tallied, not imputed.
    """
    starts_by_visitor: dict[str, list[datetime]] = {}
    for session in sessions:
        if period.bucket_index(session.start) is not None:
            starts_by_visitor.setdefault(session.visitor_key, []).append(session.start)
    gaps: list[timedelta] = []
    single = 0
    for starts in starts_by_visitor.values():
        if len(starts) < 2:
            single += 1
            continue
        starts.sort()
        deltas = [b - a for a, b in zip(starts, starts[1:])]
        gaps.append(sum(deltas, timedelta()) / len(deltas))
    if not gaps:
        return RecencyResult(mean_between_visits=None, eligible_visitors=0,
                             single_visit_visitors=single)
    return RecencyResult(
        mean_between_visits=sum(gaps, timedelta()) / len(gaps),
        eligible_visitors=len(gaps),
        single_visit_visitors=single,
    )


def activity_level(sessions) -> float:
    """Total page views over total visits (ratio of totals, not a mean of
    per-session means)."""
    if not sessions:
        raise DomainError("cannot compute activity level without sessions")
    return sum(len(s) for s in sessions) / len(sessions)


def accessed_distribution(sessions, records: list[ContentRecord],
                          path_map: dict[str, str], axis: str,
                          period: AnalysisPeriod) -> AccessedContent:
    """Accessed-content distributions per bucket, by views and by visitors.

    ``path_map`` joins request paths to catalog identifiers; views whose
    path or identifier has no catalog record are tallied as uncatalogued.
    Raises DomainError when nothing joins at all.
    """
    if axis not in ("topic", "resource_type"):
        raise DomainError(f"unknown distribution axis {axis!r}")
    by_id = {r.identifier: r for r in records}
    nbuckets = period.bucket_count
    view_counts = [dict() for _ in range(nbuckets)]
    visitor_sets = [dict() for _ in range(nbuckets)]
    total_views: dict[str, int] = {}
    total_visitors: dict[str, set[str]] = {}
    uncatalogued = 0
    joined = 0
    for session in sessions:
        for ts, path in session.views:
            idx = period.bucket_index(ts)
            if idx is None:
                continue
            identifier = path_map.get(path)
            record = by_id.get(identifier) if identifier else None
            if record is None:
                uncatalogued += 1
                continue
            label = record.topic if axis == "topic" else record.resource_type
            joined += 1
            view_counts[idx][label] = view_counts[idx].get(label, 0) + 1
            visitor_sets[idx].setdefault(label, set()).add(session.visitor_key)
            total_views[label] = total_views.get(label, 0) + 1
            total_visitors.setdefault(label, set()).add(session.visitor_key)
    if joined == 0:
        raise DomainError(
            f"no page view joined the catalog ({uncatalogued} uncatalogued views)"
        )
    return AccessedContent(
        per_bucket_views=tuple(TopicDistribution.from_counts(c) for c in view_counts),
        per_bucket_visitors=tuple(
            TopicDistribution.from_counts({k: len(v) for k, v in s.items()})
            for s in visitor_sets
        ),
        views_total=TopicDistribution.from_counts(total_views),
        visitors_total=TopicDistribution.from_counts(
            {k: len(v) for k, v in total_visitors.items()}
        ),
        uncatalogued_views=uncatalogued,
    )


def session_path_graph(session: Session) -> structure.SiteGraph | None:
    """Directed graph of the session's page transitions.

    Nodes are the distinct paths; edges join consecutive distinct views
    (reload self-transitions are dropped). Root is the entry page. None
    when the session visits fewer than 2 distinct pages.
    """
    paths = [p for _, p in session.views]
    distinct = set(paths)
    if len(distinct) < 2:
        return None
    edges = set()
    for a, b in zip(paths, paths[1:]):
        if a != b:
            edges.add((a, b))
    return structure.SiteGraph(nodes=frozenset(distinct),
                               edges=frozenset(edges), root=paths[0])


@lru_cache(maxsize=4096)
def _metrics_for_shape(n: int, edges: tuple[tuple[int, int], ...]) -> tuple[float, float]:
    # Both metrics are invariant under node relabeling, so sessions sharing
    # a transition shape share their metrics; the cache exploits that.
    nodes = frozenset(str(i) for i in range(n))
    graph = structure.SiteGraph(
        nodes=nodes,
        edges=frozenset((str(a), str(b)) for a, b in edges),
        root="0",
    )
    summary = structure._distance_summary(graph)
    return (structure._navigability_from_summary(summary),
            structure._linearity_from_summary(summary))


def navigation_metrics(session: Session) -> NavigationMetrics:
    """Complexity and linearity of one session.

    Complexity is the structure-module navigability of the session's path
    graph; linearity is its stratum. Degenerate sessions (fewer than 2
    distinct pages) carry None metrics.
    """
    paths = [p for _, p in session.views]
    order: dict[str, int] = {}
    for p in paths:
        if p not in order:
            order[p] = len(order)
    if len(order) < 2:
        return NavigationMetrics(complexity=None, linearity=None,
                                 distinct_pages=len(order), degenerate=True)
    edges = set()
    for a, b in zip(paths, paths[1:]):
        if a != b:
            edges.add((order[a], order[b]))
    complexity, linearity = _metrics_for_shape(len(order), tuple(sorted(edges)))
    return NavigationMetrics(complexity=complexity, linearity=linearity,
                             distinct_pages=len(order), degenerate=False)


def summarize_navigation(sessions,
                         linearity_band: float = DEFAULT_LINEARITY_BAND
                         ) -> NavigationSummary:
    """Portal-level distribution of per-session navigation metrics.

    ``high_linearity_share`` is the share of measured sessions whose
    linearity exceeds ``linearity_band`` -- tediously linear navigation.
    """
    complexities: list[float] = []
    linearities: list[float] = []
    skipped = 0
    for session in sessions:
        metrics = navigation_metrics(session)
        if metrics.degenerate:
            skipped += 1
            continue
        complexities.append(metrics.complexity)
        linearities.append(metrics.linearity)
    if not complexities:
        return NavigationSummary(
            complexity_mean=None, complexity_median=None,
            linearity_mean=None, linearity_median=None,
            high_linearity_share=None, linearity_band=linearity_band,
            sessions_measured=0, sessions_skipped=skipped,
        )
    high = sum(1 for v in linearities if v > linearity_band)
    return NavigationSummary(
        complexity_mean=statistics.fmean(complexities),
        complexity_median=statistics.median(complexities),
        linearity_mean=statistics.fmean(linearities),
        linearity_median=statistics.median(linearities),
        high_linearity_share=high / len(linearities),
        linearity_band=linearity_band,
        sessions_measured=len(complexities),
        sessions_skipped=skipped,
    )
