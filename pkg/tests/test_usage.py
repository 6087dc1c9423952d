"""Access-log parsing, sessionization, and the demand-side metrics."""

import gzip
import hashlib
from datetime import date, datetime, timedelta, timezone

import pytest
from hypothesis import given, settings, strategies as st

from portalmetrics import usage
from portalmetrics.catalog import ContentRecord
from portalmetrics.errors import DomainError, FormatError

from oracles import brute_sessionize, sessions_as_set

UTC = timezone.utc
T0 = datetime(2026, 3, 2, tzinfo=UTC)

GOLDEN_LINE = ('203.0.113.7 - alice [10/Oct/2000:13:55:36 -0700] '
               '"GET /apache_pb.gif HTTP/1.0" 200 2326 '
               '"http://www.example.com/start.html" '
               '"Mozilla/4.08 [en] (Win98; I ;Nav)"')


def _entry(visitor="user:alice", seconds=0, path="/a", status=200):
    return usage.LogEntry(
        visitor_key=visitor,
        timestamp=T0 + timedelta(seconds=seconds),
        path=path,
        status=status,
        user_agent="PortalBrowser/1.0",
        referrer="",
    )


def _session(paths, visitor="user:alice", start=0, step=60):
    views = tuple((T0 + timedelta(seconds=start + i * step), p)
                  for i, p in enumerate(paths))
    return usage.Session(visitor_key=visitor, views=views)


class TestParseLog:
    def test_golden_line(self):
        parsed = usage.parse_log([GOLDEN_LINE])
        assert parsed.malformed == 0
        entry = parsed.entries[0]
        assert entry.visitor_key == "user:alice"
        # -0700 offset normalizes to UTC
        assert entry.timestamp == datetime(2000, 10, 10, 20, 55, 36, tzinfo=UTC)
        assert entry.path == "/apache_pb.gif"
        assert entry.status == 200
        assert entry.referrer == "http://www.example.com/start.html"
        assert entry.is_page_view

    def test_anonymous_visitor_hash(self):
        line = ('198.51.100.9 - - [02/Mar/2026:10:00:00 +0000] '
                '"GET /a HTTP/1.1" 200 10 "-" "AgentX/1.0"')
        entry = usage.parse_log([line]).entries[0]
        digest = hashlib.sha1(b"198.51.100.9|AgentX/1.0").hexdigest()[:16]
        assert entry.visitor_key == f"anon:{digest}"
        assert entry.referrer == ""

    def test_auth_user_can_be_disabled(self):
        parsed = usage.parse_log([GOLDEN_LINE], use_auth_user=False)
        assert parsed.entries[0].visitor_key.startswith("anon:")

    def test_same_host_agent_same_anonymous_key(self):
        line_a = ('198.51.100.9 - - [02/Mar/2026:10:00:00 +0000] '
                  '"GET /a HTTP/1.1" 200 10 "-" "AgentX/1.0"')
        line_b = ('198.51.100.9 - - [02/Mar/2026:11:00:00 +0000] '
                  '"GET /b HTTP/1.1" 200 10 "-" "AgentX/1.0"')
        entries = usage.parse_log([line_a, line_b]).entries
        assert entries[0].visitor_key == entries[1].visitor_key

    def test_positive_offset_timestamp(self):
        line = ('198.51.100.9 - - [02/Mar/2026:10:30:00 +0530] '
                '"GET /a HTTP/1.1" 200 10 "-" "AgentX/1.0"')
        entry = usage.parse_log([line]).entries[0]
        assert entry.timestamp == datetime(2026, 3, 2, 5, 0, tzinfo=UTC)

    def test_error_status_kept_but_not_page_view(self):
        line = ('198.51.100.9 - - [02/Mar/2026:10:00:00 +0000] '
                '"GET /missing HTTP/1.1" 404 10 "-" "AgentX/1.0"')
        parsed = usage.parse_log([line])
        assert len(parsed.entries) == 1
        assert not parsed.entries[0].is_page_view

    def test_redirect_is_page_view(self):
        assert _entry(status=302).is_page_view
        assert not _entry(status=500).is_page_view

    def test_malformed_lines_tallied(self):
        lines = [GOLDEN_LINE, "garbage", GOLDEN_LINE]
        parsed = usage.parse_log(lines)
        assert parsed.malformed == 1
        assert parsed.total_lines == 3
        assert len(parsed.entries) == 2

    def test_bad_month_abbreviation_is_malformed(self):
        line = ('198.51.100.9 - - [02/Foo/2026:10:00:00 +0000] '
                '"GET /a HTTP/1.1" 200 10 "-" "AgentX/1.0"')
        assert usage.parse_log([line, GOLDEN_LINE]).malformed == 1

    def test_majority_malformed_is_fatal(self):
        lines = [GOLDEN_LINE, "junk1", "junk2"]
        with pytest.raises(FormatError):
            usage.parse_log(lines)

    def test_exactly_half_malformed_is_tolerated(self):
        parsed = usage.parse_log([GOLDEN_LINE, "junk"])
        assert parsed.malformed == 1

    def test_empty_stream(self):
        parsed = usage.parse_log([])
        assert parsed.entries == []
        assert parsed.total_lines == 0

    def test_request_without_path_is_malformed(self):
        line = ('198.51.100.9 - - [02/Mar/2026:10:00:00 +0000] '
                '"-" 408 10 "-" "AgentX/1.0"')
        assert usage.parse_log([line, GOLDEN_LINE]).malformed == 1


class TestAgentFiltering:
    def _mk(self, agent, path="/a"):
        return usage.LogEntry(visitor_key="anon:x", timestamp=T0, path=path,
                              status=200, user_agent=agent, referrer="")

    def test_default_signatures_catch_common_bots(self):
        entries = [
            self._mk("Mozilla/5.0 PortalBrowser/1.0"),
            self._mk("ExampleBot/2.1 (+https://bots.example/info)"),
            self._mk("some-crawler/3.0"),
            self._mk("curl/8.0"),
        ]
        humans, bots = usage.filter_agents(entries)
        assert len(humans) == 1
        assert len(bots) == 3

    def test_robots_path_flags_any_agent(self):
        entries = [self._mk("Mozilla/5.0 PortalBrowser/1.0", path="/robots.txt")]
        humans, bots = usage.filter_agents(entries)
        assert humans == []
        assert len(bots) == 1

    def test_custom_signatures_replace_defaults(self):
        entries = [self._mk("ExampleBot/2.1"), self._mk("WeirdAgent/1.0")]
        humans, bots = usage.filter_agents(entries, signatures=("weirdagent",))
        assert [e.user_agent for e in bots] == ["WeirdAgent/1.0"]
        assert [e.user_agent for e in humans] == ["ExampleBot/2.1"]

    def test_matching_is_case_insensitive(self):
        entries = [self._mk("EXAMPLEBOT/2.1")]
        _, bots = usage.filter_agents(entries, signatures=("examplebot",))
        assert len(bots) == 1

    def test_partition_is_exhaustive_and_disjoint(self):
        entries = [self._mk(a) for a in
                   ("x", "boty", "spider z", "Mozilla", "wget/1.2")]
        humans, bots = usage.filter_agents(entries)
        assert len(humans) + len(bots) == len(entries)
        assert not (set(id(e) for e in humans) & set(id(e) for e in bots))


class TestSessionize:
    def test_gap_equal_to_timeout_keeps_session(self):
        entries = [_entry(seconds=0), _entry(seconds=1800, path="/b")]
        sessions = usage.sessionize(entries, timeout=timedelta(minutes=30))
        assert len(sessions) == 1
        assert len(sessions[0]) == 2

    def test_gap_one_second_over_timeout_splits(self):
        entries = [_entry(seconds=0), _entry(seconds=1801, path="/b")]
        sessions = usage.sessionize(entries, timeout=timedelta(minutes=30))
        assert len(sessions) == 2

    def test_visitors_never_share_a_session(self):
        entries = [_entry(visitor="user:a"), _entry(visitor="user:b")]
        sessions = usage.sessionize(entries)
        assert len(sessions) == 2
        assert {s.visitor_key for s in sessions} == {"user:a", "user:b"}

    def test_input_order_does_not_matter(self):
        entries = [_entry(seconds=s, path=f"/p{s}") for s in (0, 60, 4000, 4060)]
        forward = usage.sessionize(entries)
        backward = usage.sessionize(list(reversed(entries)))
        assert sessions_as_set(forward) == sessions_as_set(backward)

    def test_every_entry_lands_in_exactly_one_session(self):
        entries = [_entry(seconds=s) for s in (0, 10, 7200, 7300)]
        sessions = usage.sessionize(entries)
        assert sum(len(s) for s in sessions) == len(entries)

    def test_session_start_end(self):
        entries = [_entry(seconds=0), _entry(seconds=300, path="/b")]
        session = usage.sessionize(entries)[0]
        assert session.start == T0
        assert session.end == T0 + timedelta(seconds=300)

    @given(st.lists(
        st.tuples(st.sampled_from(["user:a", "user:b", "anon:1"]),
                  st.integers(min_value=0, max_value=12_000),
                  st.sampled_from(["/a", "/b", "/c"])),
        max_size=40),
        st.integers(min_value=1, max_value=3600))
    def test_matches_brute_force_oracle(self, rows, timeout_seconds):
        entries = [_entry(visitor=v, seconds=s, path=p) for v, s, p in rows]
        timeout = timedelta(seconds=timeout_seconds)
        ours = usage.sessionize(entries, timeout=timeout)
        assert sessions_as_set(ours) == brute_sessionize(entries, timeout)
        assert sum(len(s) for s in ours) == len(entries)
        for session in ours:
            gaps = [b - a for (a, _), (b, _) in zip(session.views,
                                                    session.views[1:])]
            assert all(g <= timeout for g in gaps)
            assert all(g >= timedelta(0) for g in gaps)


class TestAnalysisPeriod:
    def test_whole_buckets(self):
        period = usage.AnalysisPeriod(start=T0, end=T0 + timedelta(days=3))
        assert period.bucket_count == 3
        assert period.bucket_starts() == [T0 + timedelta(days=i)
                                          for i in range(3)]

    def test_partial_last_bucket_counts(self):
        period = usage.AnalysisPeriod(start=T0,
                                      end=T0 + timedelta(days=2, hours=12))
        assert period.bucket_count == 3

    def test_bucket_index_is_half_open(self):
        period = usage.AnalysisPeriod(start=T0, end=T0 + timedelta(days=3))
        assert period.bucket_index(T0) == 0
        assert period.bucket_index(T0 + timedelta(days=1)) == 1
        assert period.bucket_index(T0 + timedelta(days=3)) is None
        assert period.bucket_index(T0 - timedelta(seconds=1)) is None

    def test_degenerate_periods_rejected(self):
        with pytest.raises(DomainError):
            usage.AnalysisPeriod(start=T0, end=T0)
        with pytest.raises(DomainError):
            usage.AnalysisPeriod(start=T0, end=T0 + timedelta(days=1),
                                 bucket=timedelta(0))


class TestOverallDemand:
    def test_counts_by_session_start(self):
        period = usage.AnalysisPeriod(start=T0, end=T0 + timedelta(days=3))
        sessions = [
            _session(["/a", "/b"], start=0),
            _session(["/a"], start=3600, visitor="user:b"),
            _session(["/a"], start=86_400 + 60, visitor="user:c"),
        ]
        series = usage.overall_demand(sessions, period)
        assert series.counts() == [2, 1, 0]
        assert series.total == 3

    def test_sessions_outside_period_ignored(self):
        period = usage.AnalysisPeriod(start=T0, end=T0 + timedelta(days=1))
        sessions = [_session(["/a"], start=-60),
                    _session(["/a"], start=90_000)]
        assert usage.overall_demand(sessions, period).counts() == [0]

    def test_spanning_session_counts_once_at_its_start(self):
        period = usage.AnalysisPeriod(start=T0, end=T0 + timedelta(days=2))
        late = 86_400 - 60  # starts near the end of bucket 0
        sessions = [_session(["/a", "/b", "/c"], start=late, step=90)]
        assert usage.overall_demand(sessions, period).counts() == [1, 0]


class TestRecency:
    PERIOD = usage.AnalysisPeriod(start=T0, end=T0 + timedelta(days=10))

    def test_mean_of_per_visitor_means(self):
        day = 86_400
        sessions = [
            _session(["/a"], visitor="user:a", start=0),
            _session(["/a"], visitor="user:a", start=day),
            _session(["/a"], visitor="user:b", start=0),
            _session(["/a"], visitor="user:b", start=3 * day),
        ]
        result = usage.recency(sessions, self.PERIOD)
        # per-visitor means 1d and 3d -> overall 2d
        assert result.mean_between_visits == timedelta(days=2)
        assert result.eligible_visitors == 2
        assert result.single_visit_visitors == 0

    def test_single_visit_visitors_tallied_not_imputed(self):
        sessions = [
            _session(["/a"], visitor="user:a", start=0),
            _session(["/a"], visitor="user:a", start=86_400),
            _session(["/a"], visitor="user:b", start=0),
        ]
        result = usage.recency(sessions, self.PERIOD)
        assert result.mean_between_visits == timedelta(days=1)
        assert result.single_visit_visitors == 1

    def test_undefined_when_no_returning_visitor(self):
        sessions = [_session(["/a"], visitor="user:a", start=0)]
        result = usage.recency(sessions, self.PERIOD)
        assert result.mean_between_visits is None
        assert not result.defined

    def test_sessions_outside_period_excluded(self):
        day = 86_400
        sessions = [
            _session(["/a"], visitor="user:a", start=0),
            _session(["/a"], visitor="user:a", start=2 * day),
            _session(["/a"], visitor="user:a", start=30 * day),  # outside
        ]
        result = usage.recency(sessions, self.PERIOD)
        assert result.mean_between_visits == timedelta(days=2)


class TestActivityLevel:
    def test_ratio_of_totals(self):
        sessions = [_session(["/a", "/b"]),
                    _session(["/a", "/b", "/c", "/d"], visitor="user:b")]
        assert usage.activity_level(sessions) == 3.0

    def test_no_sessions_rejected(self):
        with pytest.raises(DomainError):
            usage.activity_level([])


class TestAccessedDistribution:
    PERIOD = usage.AnalysisPeriod(start=T0, end=T0 + timedelta(days=2))
    RECORDS = [
        ContentRecord(identifier="c1", resource_type="text", topic="algebra",
                      published=date(2026, 1, 1), portal_id="p"),
        ContentRecord(identifier="c2", resource_type="video", topic="biology",
                      published=date(2026, 1, 1), portal_id="p"),
    ]
    PATH_MAP = {"/a": "c1", "/b": "c2"}

    def test_views_and_visitors_axes(self):
        sessions = [
            _session(["/a", "/a", "/b"], visitor="user:x"),
            _session(["/a"], visitor="user:y"),
        ]
        result = usage.accessed_distribution(
            sessions, self.RECORDS, self.PATH_MAP, "topic", self.PERIOD)
        assert result.views_total.counts == {"algebra": 3, "biology": 1}
        # user:x viewed /a twice but counts once per topic
        assert result.visitors_total.counts == {"algebra": 2, "biology": 1}
        assert result.uncatalogued_views == 0

    def test_per_bucket_split(self):
        sessions = [
            _session(["/a"], visitor="user:x", start=0),
            _session(["/b"], visitor="user:y", start=86_400 + 10),
        ]
        result = usage.accessed_distribution(
            sessions, self.RECORDS, self.PATH_MAP, "topic", self.PERIOD)
        assert result.per_bucket_views[0].counts == {"algebra": 1}
        assert result.per_bucket_views[1].counts == {"biology": 1}

    def test_unmapped_views_tallied(self):
        sessions = [_session(["/a", "/nope"], visitor="user:x")]
        result = usage.accessed_distribution(
            sessions, self.RECORDS, self.PATH_MAP, "topic", self.PERIOD)
        assert result.uncatalogued_views == 1

    def test_mapped_but_uncatalogued_identifier_tallied(self):
        sessions = [_session(["/a", "/ghost"], visitor="user:x")]
        path_map = dict(self.PATH_MAP, **{"/ghost": "no-such-id"})
        result = usage.accessed_distribution(
            sessions, self.RECORDS, path_map, "topic", self.PERIOD)
        assert result.uncatalogued_views == 1

    def test_resource_type_axis(self):
        sessions = [_session(["/a", "/b"], visitor="user:x")]
        result = usage.accessed_distribution(
            sessions, self.RECORDS, self.PATH_MAP, "resource_type", self.PERIOD)
        assert result.views_total.counts == {"text": 1, "video": 1}

    def test_zero_joins_rejected(self):
        sessions = [_session(["/zzz"], visitor="user:x")]
        with pytest.raises(DomainError):
            usage.accessed_distribution(
                sessions, self.RECORDS, self.PATH_MAP, "topic", self.PERIOD)

    def test_unknown_axis_rejected(self):
        with pytest.raises(DomainError):
            usage.accessed_distribution([], self.RECORDS, self.PATH_MAP,
                                        "color", self.PERIOD)


class TestNavigationMetrics:
    def test_chain_session(self):
        metrics = usage.navigation_metrics(_session(["/a", "/b", "/c"]))
        assert metrics.distinct_pages == 3
        assert not metrics.degenerate
        # 3-node directed chain: compactness 5/12, stratum 1
        assert metrics.complexity == pytest.approx(5 / 12, abs=1e-12)
        assert metrics.linearity == pytest.approx(1.0, abs=1e-12)

    def test_reloads_do_not_create_self_loops(self):
        plain = usage.navigation_metrics(_session(["/a", "/b", "/c"]))
        reloaded = usage.navigation_metrics(
            _session(["/a", "/a", "/b", "/b", "/c"]))
        assert reloaded.complexity == plain.complexity
        assert reloaded.linearity == plain.linearity

    def test_single_page_session_degenerate(self):
        metrics = usage.navigation_metrics(_session(["/a", "/a", "/a"]))
        assert metrics.degenerate
        assert metrics.complexity is None
        assert metrics.linearity is None
        assert metrics.distinct_pages == 1

    def test_back_and_forth_is_symmetric(self):
        metrics = usage.navigation_metrics(_session(["/a", "/b", "/a", "/b"]))
        assert metrics.linearity == pytest.approx(0.0, abs=1e-12)

    def test_metrics_depend_only_on_shape(self):
        a = usage.navigation_metrics(_session(["/x", "/y", "/z"]))
        b = usage.navigation_metrics(_session(["/q1", "/q2", "/q3"]))
        assert a.complexity == b.complexity
        assert a.linearity == b.linearity

    def test_path_graph_root_is_entry_page(self):
        graph = usage.session_path_graph(_session(["/b", "/a", "/c"]))
        assert graph.root == "/b"

    def test_path_graph_none_when_degenerate(self):
        assert usage.session_path_graph(_session(["/a"])) is None


class TestSummarizeNavigation:
    def test_mixed_sessions(self):
        sessions = [
            _session(["/a", "/b", "/c"]),            # linearity 1.0
            _session(["/a", "/b", "/a", "/b"]),      # linearity 0.0
            _session(["/a"]),                        # degenerate, skipped
        ]
        summary = usage.summarize_navigation(sessions, linearity_band=0.8)
        assert summary.sessions_measured == 2
        assert summary.sessions_skipped == 1
        assert summary.linearity_mean == pytest.approx(0.5)
        assert summary.high_linearity_share == pytest.approx(0.5)

    def test_band_is_strict(self):
        sessions = [_session(["/a", "/b", "/c"])]  # linearity exactly 1.0
        summary = usage.summarize_navigation(sessions, linearity_band=1.0)
        assert summary.high_linearity_share == 0.0

    def test_all_degenerate(self):
        summary = usage.summarize_navigation([_session(["/a"])])
        assert summary.sessions_measured == 0
        assert summary.complexity_mean is None
        assert summary.high_linearity_share is None

    def test_median_is_positional(self):
        sessions = [
            _session(["/a", "/b", "/c"]),
            _session(["/a", "/b", "/c", "/d"]),
            _session(["/a", "/b", "/a", "/b"]),
        ]
        summary = usage.summarize_navigation(sessions)
        assert summary.linearity_median == pytest.approx(1.0, abs=1e-12)


class TestFileHelpers:
    def test_read_log_lines_mixed_plain_and_gzip(self, tmp_path):
        plain = tmp_path / "a.log"
        plain.write_text("line1\nline2\n")
        zipped = tmp_path / "b.log.gz"
        with gzip.open(zipped, "wt", encoding="utf-8") as fh:
            fh.write("line3\n")
        lines = [l.strip() for l in usage.read_log_lines([plain, zipped])]
        assert lines == ["line1", "line2", "line3"]

    def test_load_link_map(self, tmp_path):
        path = tmp_path / "map.tsv"
        path.write_text("# comment\n/a\tc1\n/b,c2\n\nbroken-line\n")
        assert usage.load_link_map(path) == {"/a": "c1", "/b": "c2"}

    def test_load_signatures(self, tmp_path):
        path = tmp_path / "bots.txt"
        path.write_text("# bots\nExampleBot\nscraper\n")
        assert usage.load_signatures(path) == ("examplebot", "scraper")

    def test_visitor_key_method_labels(self):
        assert usage.visitor_key_method(True) != usage.visitor_key_method(False)
