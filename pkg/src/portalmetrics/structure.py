"""Intra-portal page graph and the four content-organization metrics.

A site is modeled as a directed graph of pages with a designated homepage.
The module computes:

* depth        -- mean shortest click-distance from the homepage,
* density      -- links over maximum possible directed links, in [0, 1],
* navigability -- compactness of the converted-distance matrix, in [0, 1]
                  (1 = complete digraph, 0 = edgeless),
* linearity    -- stratum: normalized absolute prestige, in [0, 1]
                  (1 = directed chain, 0 = symmetric navigation).

Unreachable pairs enter the converted-distance matrix at the conversion
constant K (default: the node count). All-pairs distances come from BFS;
graphs above ``_SCIPY_NODE_THRESHOLD`` nodes are handled by scipy's
compiled shortest-path routines in chunks so large crawls stay fast.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import DomainError, FormatError

# Above this many nodes, all-pairs BFS switches from pure Python to scipy.
_SCIPY_NODE_THRESHOLD = 256
_SCIPY_CHUNK = 512

DEGENERATE_SINGLE_NODE = "single_node_graph"
DEGENERATE_NO_REACHABLE = "no_page_reachable_from_root"


@dataclass(frozen=True)
class SiteGraph:
    """Directed page graph with a designated homepage (root).

    Nodes are page identifiers (normalized URLs or opaque ids). Self-loops
    and parallel edges are forbidden; use :func:`build_site_graph` to
    normalize raw edge lists.
    """

    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]
    root: str

    def __post_init__(self):
        if not self.nodes:
            raise DomainError("a site graph needs at least one node")
        if self.root not in self.nodes:
            raise DomainError(f"root {self.root!r} is not a node of the graph")
        for a, b in self.edges:
            if a == b:
                raise DomainError(f"self-loop on {a!r} is not allowed")
            if a not in self.nodes or b not in self.nodes:
                raise DomainError(f"edge ({a!r}, {b!r}) references unknown node")

    @property
    def n(self) -> int:
        return len(self.nodes)

    def node_order(self) -> list[str]:
        """Stable node ordering used by every matrix-valued computation."""
        return sorted(self.nodes)


@dataclass
class BuildTally:
    self_loops_dropped: int = 0
    parallel_edges_collapsed: int = 0


@dataclass(frozen=True)
class ConvertedDistanceMatrix:
    """All-pairs shortest directed distances with unreachable pairs at K.

    d[i][j] is the shortest path length from node i to node j in the order
    given by ``nodes``; d[i][i] = 0 and d[i][j] = K exactly when j is not
    reachable from i.
    """

    nodes: tuple[str, ...]
    d: np.ndarray
    K: int

    @property
    def n(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class DepthResult:
    mean_depth: float
    unreachable: int
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class OrganizationProfile:
    """The four organization metrics of one site, with degeneracy flags.

    navigability and linearity are None (absent, not 0) when the graph is
    degenerate (fewer than 2 nodes).
    """

    depth: float
    unreachable: int
    density: float
    navigability: float | None
    linearity: float | None
    flags: tuple[str, ...] = ()


@dataclass
class _DistanceSummary:
    # Aggregates of one all-pairs pass; enough for all four metrics without
    # materializing the full n x n matrix.
    n: int
    K: int
    sum_converted: float
    status: np.ndarray        # per node: sum of finite distances INTO it
    contrastatus: np.ndarray  # per node: sum of finite distances OUT of it
    root_distances: np.ndarray  # finite distances from root, -1 unreachable


def build_site_graph(edge_stream, root: str | None = None) -> tuple[SiteGraph, BuildTally]:
    """Build a normalized SiteGraph from a delimited (from, to) edge stream.

    Lines are comma- or tab-separated pairs; blank lines and ``#`` comments
    are skipped, except ``# node: X`` lines which declare isolated nodes.
    Self-loops are dropped and parallel edges collapsed, both tallied.
    ``root`` defaults to the first node seen.
    """
    if isinstance(edge_stream, (str, bytes)):
        edge_stream = io.StringIO(
            edge_stream if isinstance(edge_stream, str) else edge_stream.decode())
    nodes: list[str] = []
    seen_nodes: set[str] = set()
    edges: set[tuple[str, str]] = set()
    tally = BuildTally()

    def note(node: str):
        if node not in seen_nodes:
            seen_nodes.add(node)
            nodes.append(node)

    for line_no, raw in enumerate(edge_stream, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.lower().startswith("node:"):
                note(body[5:].strip())
            continue
        parts = line.split("\t") if "\t" in line else line.split(",")
        if len(parts) != 2:
            raise FormatError(f"edge line {line_no} is not a (from, to) pair: {raw!r}")
        a, b = parts[0].strip(), parts[1].strip()
        if not a or not b:
            raise FormatError(f"edge line {line_no} has an empty endpoint")
        note(a)
        note(b)
        if a == b:
            tally.self_loops_dropped += 1
            continue
        if (a, b) in edges:
            tally.parallel_edges_collapsed += 1
            continue
        edges.add((a, b))

    if not nodes:
        raise DomainError("edge stream is empty: no nodes found")
    if root is None:
        root = nodes[0]
    if root not in seen_nodes:
        raise FormatError(f"root {root!r} does not appear in the graph")
    return SiteGraph(nodes=frozenset(nodes), edges=frozenset(edges), root=root), tally


def from_outlinks_map(outlinks: dict[str, list[str]],
                      root: str | None = None) -> tuple[SiteGraph, BuildTally]:
    """Adapter for crawler output: a URL -> outlinks mapping."""
    buf = io.StringIO()
    for url, targets in outlinks.items():
        if not targets:
            buf.write(f"# node: {url}\n")
        for t in targets:
            buf.write(f"{url}\t{t}\n")
    return build_site_graph(buf.getvalue(), root=root)


def _adjacency_indices(g: SiteGraph) -> tuple[list[str], list[list[int]]]:
    order = g.node_order()
    index = {node: i for i, node in enumerate(order)}
    adj: list[list[int]] = [[] for _ in order]
    for a, b in g.edges:
        adj[index[a]].append(index[b])
    for out in adj:
        out.sort()
    return order, adj


def _bfs_row(adj: list[list[int]], src: int, n: int) -> list[int]:
    """Shortest unweighted distances from src; -1 marks unreachable."""
    dist = [-1] * n
    dist[src] = 0
    frontier = [src]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = d
                    nxt.append(v)
        frontier = nxt
    return dist


def _summary_python(g: SiteGraph, K: int) -> _DistanceSummary:
    order, adj = _adjacency_indices(g)
    n = len(order)
    root_idx = order.index(g.root)
    status = np.zeros(n)
    contrastatus = np.zeros(n)
    sum_converted = 0.0
    root_distances = np.full(n, -1.0)
    for src in range(n):
        row = _bfs_row(adj, src, n)
        if src == root_idx:
            root_distances = np.array(row, dtype=float)
        out_sum = 0
        unreachable = 0
        for dst, d in enumerate(row):
            if dst == src:
                continue
            if d < 0:
                unreachable += 1
            else:
                out_sum += d
                status[dst] += d
        contrastatus[src] = out_sum
        sum_converted += out_sum + unreachable * K
    return _DistanceSummary(n=n, K=K, sum_converted=sum_converted,
                            status=status, contrastatus=contrastatus,
                            root_distances=root_distances)


def _sparse_adjacency(g: SiteGraph, order: list[str]) -> sparse.csr_matrix:
    index = {node: i for i, node in enumerate(order)}
    if g.edges:
        rows, cols = zip(*((index[a], index[b]) for a, b in g.edges))
    else:
        rows, cols = (), ()
    data = np.ones(len(rows), dtype=np.int8)
    return sparse.csr_matrix((data, (rows, cols)), shape=(len(order), len(order)))


def _summary_scipy(g: SiteGraph, K: int) -> _DistanceSummary:
    order = g.node_order()
    n = len(order)
    root_idx = order.index(g.root)
    A = _sparse_adjacency(g, order)
    status = np.zeros(n)
    contrastatus = np.zeros(n)
    sum_converted = 0.0
    root_distances = np.full(n, -1.0)
    for lo in range(0, n, _SCIPY_CHUNK):
        idx = np.arange(lo, min(lo + _SCIPY_CHUNK, n))
        D = csgraph.shortest_path(A, method="D", unweighted=True, indices=idx)
        finite = np.isfinite(D)
        Df = np.where(finite, D, 0.0)
        contrastatus[idx] = Df.sum(axis=1)
        status += Df.sum(axis=0)
        # diagonal entries are finite zeros; they do not disturb the sums
        unreachable = (~finite).sum()
        sum_converted += Df.sum() + float(unreachable) * K
        if lo <= root_idx < lo + len(idx):
            row = D[root_idx - lo]
            root_distances = np.where(np.isfinite(row), row, -1.0)
    return _DistanceSummary(n=n, K=K, sum_converted=sum_converted,
                            status=status, contrastatus=contrastatus,
                            root_distances=root_distances)


def _distance_summary(g: SiteGraph, K: int | None = None) -> _DistanceSummary:
    k = g.n if K is None else K
    if k < 1:
        raise DomainError("conversion constant K must be >= 1")
    if g.n <= _SCIPY_NODE_THRESHOLD:
        return _summary_python(g, k)
    return _summary_scipy(g, k)


def converted_distances(g: SiteGraph, K: int | None = None) -> ConvertedDistanceMatrix:
    """All-pairs shortest directed distances with unreachable pairs set to K.

    Default K is the node count. The full n x n matrix is materialized;
    for metric computation on large graphs prefer
    :func:`organization_profile`, which aggregates in chunks instead.
    """
    k = g.n if K is None else K
    if k < 1:
        raise DomainError("conversion constant K must be >= 1")
    order = g.node_order()
    n = len(order)
    if n <= _SCIPY_NODE_THRESHOLD:
        _, adj = _adjacency_indices(g)
        d = np.full((n, n), k, dtype=np.int64)
        for src in range(n):
            for dst, dist in enumerate(_bfs_row(adj, src, n)):
                if dist >= 0:
                    d[src, dst] = dist
            d[src, src] = 0
    else:
        A = _sparse_adjacency(g, order)
        D = csgraph.shortest_path(A, method="D", unweighted=True)
        d = np.where(np.isfinite(D), D, float(k)).astype(np.int64)
    return ConvertedDistanceMatrix(nodes=tuple(order), d=d, K=k)


def depth(g: SiteGraph) -> DepthResult:
    """Mean shortest click-distance from the homepage to reachable pages.

    Pages unreachable from the root are excluded from the mean and counted
    separately, keeping the average interpretable as a click distance.
    A single-node graph (or a root that reaches nothing) yields 0.0 with a
    degeneracy flag.
    """
    if g.n == 1:
        return DepthResult(mean_depth=0.0, unreachable=0,
                           flags=(DEGENERATE_SINGLE_NODE,))
    summary = _distance_summary(g)
    return _depth_from_summary(summary)


def _depth_from_summary(summary: _DistanceSummary) -> DepthResult:
    dists = summary.root_distances
    reach = dists[dists > 0]  # excludes root (0) and unreachable (-1)
    unreachable = int((dists < 0).sum())
    if len(reach) == 0:
        return DepthResult(mean_depth=0.0, unreachable=unreachable,
                           flags=(DEGENERATE_NO_REACHABLE,))
    return DepthResult(mean_depth=float(reach.mean()), unreachable=unreachable)


def density(g: SiteGraph) -> tuple[float, tuple[str, ...]]:
    """|edges| / (n * (n - 1)): link cohesion in [0, 1]."""
    if g.n == 1:
        return 0.0, (DEGENERATE_SINGLE_NODE,)
    return len(g.edges) / (g.n * (g.n - 1)), ()


def navigability(g: SiteGraph, K: int | None = None) -> float | None:
    """Compactness of the converted-distance matrix, in [0, 1].

    Cp = (Max - sum(d_ij)) / (Max - Min) with Max = (n^2 - n) * K and
    Min = n^2 - n. 1.0 for a complete digraph, 0.0 for an edgeless graph.
    Returns None for degenerate graphs (n < 2).
    """
    if g.n < 2:
        return None
    return _navigability_from_summary(_distance_summary(g, K))


def _navigability_from_summary(summary: _DistanceSummary) -> float:
    n, k = summary.n, summary.K
    max_sum = (n * n - n) * k
    min_sum = n * n - n
    return (max_sum - summary.sum_converted) / (max_sum - min_sum)


def linearity(g: SiteGraph) -> float | None:
    """Stratum: normalized absolute prestige, in [0, 1].

    For each node, status is the sum of finite shortest distances into it
    and contrastatus the sum out of it (unreachable pairs contribute 0).
    The absolute prestige sum(|status - contrastatus|) is normalized by its
    value on a directed chain: n^3/4 for even n, (n^3 - n)/4 for odd n.
    1.0 for a directed chain, 0.0 whenever the distance relation is
    symmetric (e.g. a directed cycle). None for degenerate graphs (n < 2).
    """
    if g.n < 2:
        return None
    return _linearity_from_summary(_distance_summary(g))


def _linearity_from_summary(summary: _DistanceSummary) -> float:
    n = summary.n
    prestige = float(np.abs(summary.status - summary.contrastatus).sum())
    lap = n ** 3 / 4 if n % 2 == 0 else (n ** 3 - n) / 4
    return prestige / lap


def organization_profile(g: SiteGraph, K: int | None = None) -> OrganizationProfile:
    """All four organization metrics from a single all-pairs distance pass."""
    if g.n == 1:
        return OrganizationProfile(
            depth=0.0, unreachable=0, density=0.0,
            navigability=None, linearity=None,
            flags=(DEGENERATE_SINGLE_NODE,),
        )
    summary = _distance_summary(g, K)
    depth_result = _depth_from_summary(summary)
    dens, _ = density(g)
    return OrganizationProfile(
        depth=depth_result.mean_depth,
        unreachable=depth_result.unreachable,
        density=dens,
        navigability=_navigability_from_summary(summary),
        linearity=_linearity_from_summary(summary),
        flags=depth_result.flags,
    )
