"""Network position of a portal among the other sites that link it.

Builds a site-level directed graph by aggregating page-level links, then
computes degree-based standing measures (how many distinct sites link in,
how many the portal links out to), detects communities of densely linked
sites, and classifies portals whose few links span many communities as
bridges.

Degrees count distinct neighbor sites; raw page-link multiplicities are
reported separately as weighted degrees. A single page spamming thousands
of links therefore moves the weighted value only.
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass
from urllib.parse import urlparse

import numpy as np

from .errors import DomainError, FormatError

DEFAULT_BRIDGE_SCORE_THRESHOLD = 0.5
DEFAULT_BRIDGE_MIN_COMMUNITIES = 2
DEFAULT_DEGREE_PERCENTILE = 75.0
LPA_MAX_ROUNDS = 100
COMMUNITY_ALGORITHM = "synchronous-label-propagation"

ISOLATED_SITE_FLAG = "isolated_site"
SINGLE_COMMUNITY_FLAG = "single_community_graph"


@dataclass
class CrossSiteGraph:
    """Directed site-to-site links with page-level multiplicities.

    ``weights[(a, b)]`` is the number of page links from site a to site b;
    intra-site pairs are excluded by construction. Sites with no links may
    still be listed (isolated sites).
    """

    sites: frozenset
    weights: dict

    def __post_init__(self):
        for (a, b), w in self.weights.items():
            if a == b:
                raise DomainError(f"self-link on site {a!r} is not allowed")
            if a not in self.sites or b not in self.sites:
                raise DomainError(f"link ({a!r}, {b!r}) references unknown site")
            if w < 1:
                raise DomainError(f"link ({a!r}, {b!r}) has multiplicity {w}")

    @property
    def edge_count(self) -> int:
        return len(self.weights)

    def site_order(self) -> list[str]:
        return sorted(self.sites)

    def neighbors(self, site: str) -> set:
        """Distinct sites adjacent to ``site``, ignoring direction."""
        out = set()
        for a, b in self.weights:
            if a == site:
                out.add(b)
            elif b == site:
                out.add(a)
        return out


@dataclass
class CrossBuildTally:
    intra_site_dropped: int = 0
    domain_fallbacks: int = 0
    malformed_lines: int = 0


@dataclass(frozen=True)
class CommunityAssignment:
    """Site-to-community labeling plus the parameters that produced it."""

    labels: dict
    seed: int
    algorithm: str
    rounds: int
    converged: bool

    @property
    def community_count(self) -> int:
        return len(set(self.labels.values()))


@dataclass(frozen=True)
class DegreeMeasure:
    distinct: int
    weighted: int


@dataclass(frozen=True)
class BridgeAssessment:
    degree: int
    adjacent_communities: int
    bridge_score: float | None
    bridge: bool
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class PositionThresholds:
    bridge_score_threshold: float = DEFAULT_BRIDGE_SCORE_THRESHOLD
    bridge_min_communities: int = DEFAULT_BRIDGE_MIN_COMMUNITIES
    authority_percentile: float = DEFAULT_DEGREE_PERCENTILE
    hub_percentile: float = DEFAULT_DEGREE_PERCENTILE


@dataclass(frozen=True)
class PositionProfile:
    """A site's degree standing, community adjacency, and role flags."""

    site: str
    in_degree: int
    out_degree: int
    weighted_in_degree: int
    weighted_out_degree: int
    degree: int
    adjacent_communities: int
    bridge_score: float | None
    authority: bool
    hub: bool
    bridge: bool
    community_algorithm: str
    community_seed: int
    thresholds: PositionThresholds
    flags: tuple[str, ...] = ()


def registrable_domain(url: str) -> str | None:
    """Two-label host suffix, the fallback site grouping for unmapped URLs.

    A heuristic: country-code second-level registries (example.co.uk)
    collapse one label too many. Pass an explicit site map to override.
    """
    parsed = urlparse(url if "//" in url else "//" + url)
    host = (parsed.hostname or "").strip(".").lower()
    if not host:
        return None
    labels = host.split(".")
    if len(labels) >= 2:
        return ".".join(labels[-2:])
    return host


def _resolve_site(url: str, prefixes: list[tuple[str, str]],
                  tally: CrossBuildTally) -> str | None:
    for prefix, site_id in prefixes:
        if url.startswith(prefix):
            return site_id
    domain = registrable_domain(url)
    if domain is not None:
        tally.domain_fallbacks += 1
    return domain


def build_cross_site_graph(page_links, site_map=None
                           ) -> tuple[CrossSiteGraph, CrossBuildTally]:
    """Aggregate page-level links into a site-level weighted digraph.

    ``page_links`` yields delimited "from_url, to_url" lines (tab wins over
    comma, # starts a comment). ``site_map`` maps URL prefixes to site ids,
    longest prefix first; URLs matching no prefix fall back to their
    registrable domain and are tallied. Intra-site links are dropped and
    tallied. An empty result is fatal.
    """
    if isinstance(page_links, str):
        page_links = page_links.splitlines()
    prefixes: list[tuple[str, str]] = []
    if site_map:
        items = site_map.items() if isinstance(site_map, dict) else site_map
        prefixes = sorted(items, key=lambda kv: len(kv[0]), reverse=True)
    tally = CrossBuildTally()
    sites: set = set()
    weights: dict = {}
    for raw in page_links:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        sep = "\t" if "\t" in line else ","
        parts = [p.strip() for p in line.split(sep)]
        if len(parts) != 2 or not parts[0] or not parts[1]:
            tally.malformed_lines += 1
            continue
        src = _resolve_site(parts[0], prefixes, tally)
        dst = _resolve_site(parts[1], prefixes, tally)
        if src is None or dst is None:
            tally.malformed_lines += 1
            continue
        if src == dst:
            tally.intra_site_dropped += 1
            continue
        sites.add(src)
        sites.add(dst)
        weights[(src, dst)] = weights.get((src, dst), 0) + 1
    if not sites:
        raise DomainError("no cross-site links found; the graph is empty")
    return CrossSiteGraph(sites=frozenset(sites), weights=weights), tally


def authoritativeness(g: CrossSiteGraph, site: str) -> DegreeMeasure:
    """In-degree: distinct sites linking in, plus the page-link total."""
    if site not in g.sites:
        raise DomainError(f"unknown site {site!r}")
    distinct = 0
    weighted = 0
    for (a, b), w in g.weights.items():
        if b == site:
            distinct += 1
            weighted += w
    return DegreeMeasure(distinct=distinct, weighted=weighted)


def hubness(g: CrossSiteGraph, site: str) -> DegreeMeasure:
    """Out-degree: distinct sites linked to, plus the page-link total."""
    if site not in g.sites:
        raise DomainError(f"unknown site {site!r}")
    distinct = 0
    weighted = 0
    for (a, b), w in g.weights.items():
        if a == site:
            distinct += 1
            weighted += w
    return DegreeMeasure(distinct=distinct, weighted=weighted)


def detect_communities(g: CrossSiteGraph, seed: int = 0,
                       algorithm: str = COMMUNITY_ALGORITHM) -> CommunityAssignment:
    """Label propagation over the undirected weighted projection.

    Synchronous rounds: every site simultaneously adopts the label with the
    highest vote among its neighborhood, ties going to the smallest label.
    Neighbors vote with the summed page-link multiplicity of both link
    directions; the site itself casts one vote for its current label.
    Multiplicity-weighted voting keeps a single inter-clique edge from
    flooding its label across both cliques during all-tied early rounds,
    and the self vote keeps two-node components from oscillating forever.
    Stops at a fixed point or after 100 rounds.

    Initial labels are the sites' lexicographic ranks; a nonzero seed
    shuffles that assignment, which probes the stability of the outcome.
    Identical graph + seed always yields the identical assignment. Labels
    are renumbered 0..k-1 by first appearance in site order.
    """
    if algorithm != COMMUNITY_ALGORITHM:
        raise DomainError(f"unknown community algorithm {algorithm!r}")
    order = g.site_order()
    if not order:
        raise DomainError("cannot detect communities on an empty graph")
    n = len(order)
    initial = list(range(n))
    if seed != 0:
        random.Random(seed).shuffle(initial)
    labels = dict(zip(order, initial))

    undirected: dict = {site: {} for site in order}
    for (a, b), w in g.weights.items():
        undirected[a][b] = undirected[a].get(b, 0) + w
        undirected[b][a] = undirected[b].get(a, 0) + w
    adjacency = {site: sorted(nbrs.items()) for site, nbrs in undirected.items()}
    rounds = 0
    converged = False
    while rounds < LPA_MAX_ROUNDS:
        rounds += 1
        new = {}
        for site in order:
            nbrs = adjacency[site]
            if not nbrs:
                new[site] = labels[site]
                continue
            counts: dict = {labels[site]: 1}
            for other, weight in nbrs:
                lab = labels[other]
                counts[lab] = counts.get(lab, 0) + weight
            best = max(counts.values())
            new[site] = min(lab for lab, c in counts.items() if c == best)
        if new == labels:
            converged = True
            break
        labels = new

    canonical: dict = {}
    renumber: dict = {}
    for site in order:
        lab = labels[site]
        if lab not in renumber:
            renumber[lab] = len(renumber)
        canonical[site] = renumber[lab]
    return CommunityAssignment(labels=canonical, seed=seed, algorithm=algorithm,
                               rounds=rounds, converged=converged)


def bridging(g: CrossSiteGraph, site: str, communities: CommunityAssignment,
             thresholds: PositionThresholds = PositionThresholds()
             ) -> BridgeAssessment:
    """Bridge classification: few links spanning several communities.

    adjacent_communities counts distinct labels among neighbor sites (the
    site's own label only counts if a neighbor carries it). The score is
    that count over the distinct-neighbor count. A site is a bridge when
    it touches at least 2 communities, its score clears the threshold, and
    its degree is at most the graph's median degree.
    """
    if site not in g.sites:
        raise DomainError(f"unknown site {site!r}")
    if set(communities.labels) != set(g.sites):
        raise DomainError("community assignment does not cover this graph")
    in_deg = authoritativeness(g, site).distinct
    out_deg = hubness(g, site).distinct
    degree = in_deg + out_deg
    nbrs = g.neighbors(site)
    if not nbrs:
        return BridgeAssessment(degree=0, adjacent_communities=0,
                                bridge_score=None, bridge=False,
                                flags=(ISOLATED_SITE_FLAG,))
    adjacent = len({communities.labels[other] for other in nbrs})
    score = adjacent / len(nbrs)
    median_degree = statistics.median(
        authoritativeness(g, s).distinct + hubness(g, s).distinct
        for s in g.site_order()
    )
    is_bridge = (adjacent >= thresholds.bridge_min_communities
                 and score >= thresholds.bridge_score_threshold
                 and degree <= median_degree)
    flags = ()
    if communities.community_count < 2:
        flags = (SINGLE_COMMUNITY_FLAG,)
    return BridgeAssessment(degree=degree, adjacent_communities=adjacent,
                            bridge_score=score, bridge=is_bridge, flags=flags)


def _percentile_cut(values: list[int], percentile: float) -> float:
    return float(np.percentile(np.asarray(values, dtype=float), percentile))


def position_profile(g: CrossSiteGraph, site: str,
                     communities: CommunityAssignment,
                     thresholds: PositionThresholds = PositionThresholds()
                     ) -> PositionProfile:
    """All position measures for one site, with role flags.

    Authority / hub flags require the degree to be positive and at or
    above the graph-wide percentile cut (default 75th); a graph where most
    sites have zero in-links must not flag them all.
    """
    in_measure = authoritativeness(g, site)
    out_measure = hubness(g, site)
    assessment = bridging(g, site, communities, thresholds)

    order = g.site_order()
    in_values = [authoritativeness(g, s).distinct for s in order]
    out_values = [hubness(g, s).distinct for s in order]
    authority_cut = _percentile_cut(in_values, thresholds.authority_percentile)
    hub_cut = _percentile_cut(out_values, thresholds.hub_percentile)

    return PositionProfile(
        site=site,
        in_degree=in_measure.distinct,
        out_degree=out_measure.distinct,
        weighted_in_degree=in_measure.weighted,
        weighted_out_degree=out_measure.weighted,
        degree=in_measure.distinct + out_measure.distinct,
        adjacent_communities=assessment.adjacent_communities,
        bridge_score=assessment.bridge_score,
        authority=in_measure.distinct > 0 and in_measure.distinct >= authority_cut,
        hub=out_measure.distinct > 0 and out_measure.distinct >= hub_cut,
        bridge=assessment.bridge,
        community_algorithm=communities.algorithm,
        community_seed=communities.seed,
        thresholds=thresholds,
        flags=assessment.flags,
    )
