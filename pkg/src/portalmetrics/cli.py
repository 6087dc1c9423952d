"""Command-line driver: one subcommand per pipeline stage.

Exit codes: 0 success, 1 domain errors (bad data semantics, refused
comparisons), 2 format and configuration errors (unparseable inputs,
missing files, invalid settings). Every tunable comes from defaults, then
an optional key = value config file, then command-line flags, in that
order of precedence. Outputs are canonical JSON with no timestamps, so
identical inputs and settings give byte-identical files.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import catalog as catalog_mod
from . import position as position_mod
from . import report as report_mod
from . import segmentation as segmentation_mod
from . import structure as structure_mod
from . import usage as usage_mod
from .config import RunConfig, _FIELD_PARSERS, build_config
from .errors import ConfigError, DomainError, FormatError


def _read_text(path, what: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {what} file {path}: {exc.strerror}")


def _require(cfg: RunConfig, field: str):
    value = getattr(cfg, field)
    if value is None or value == ():
        raise ConfigError(f"this command needs the {field!r} input "
                          f"(flag --{field.replace('_', '-')})")
    return value


def _write_output(cfg: RunConfig, name: str, data: bytes) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    path = os.path.join(cfg.output_dir, name)
    with open(path, "wb") as fh:
        fh.write(data)
    return path


def _emit(document) -> None:
    sys.stdout.write(report_mod.canonical_json(document).decode("utf-8"))


def _load_catalog(cfg: RunConfig) -> catalog_mod.ParsedCatalog:
    text = _read_text(_require(cfg, "catalog"), "catalog")
    return catalog_mod.parse_catalog(text)


def _load_taxonomy(cfg: RunConfig) -> catalog_mod.TopicTaxonomy | None:
    if cfg.taxonomy is None:
        return None
    _read_text(cfg.taxonomy, "taxonomy")
    return catalog_mod.TopicTaxonomy.from_file(cfg.taxonomy)


def _load_site_graph(cfg: RunConfig):
    text = _read_text(_require(cfg, "edges"), "edge list")
    return structure_mod.build_site_graph(text.splitlines())


def _load_sessions(cfg: RunConfig):
    """Parse logs, drop bots and non-page-views, and sessionize.

    Returns (sessions, tallies) where tallies records what was dropped on
    the way; those counts go to local diagnostics only.
    """
    for path in _require(cfg, "logs"):
        _read_text(path, "log")
    parsed = usage_mod.parse_log(usage_mod.read_log_lines(cfg.logs),
                                 use_auth_user=cfg.use_auth_user)
    signatures = None
    if cfg.bot_list is not None:
        _read_text(cfg.bot_list, "bot signature list")
        signatures = usage_mod.load_signatures(cfg.bot_list)
    humans, bots = usage_mod.filter_agents(parsed.entries, signatures)
    views = [e for e in humans if e.is_page_view]
    sessions = usage_mod.sessionize(views, cfg.session_timeout())
    tallies = {
        "log_lines": parsed.total_lines,
        "malformed_lines": parsed.malformed,
        "bot_entries": len(bots),
        "non_page_view_entries": len(humans) - len(views),
        "sessions": len(sessions),
    }
    return sessions, tallies


def _provision_summary(cfg: RunConfig, parsed, taxonomy, sessions):
    """Provision metrics plus the flags explaining whatever is absent."""
    flags: list[str] = []
    records = parsed.records
    offered = catalog_mod.offer_distribution(records, axis="topic")
    diversity = catalog_mod.shannon_diversity(offered)
    richness_value = None
    if taxonomy is not None:
        richness_value, unknown = catalog_mod.richness(records, taxonomy)
        if unknown:
            flags.append("topics_outside_taxonomy")
    else:
        flags.append("no_taxonomy")
    age = catalog_mod.average_age(records, cfg.reference())

    by_visits = by_visitors = None
    gap_high_demand: tuple = ()
    gap_high_offer: tuple = ()
    if sessions is not None and cfg.link_map is not None:
        _read_text(cfg.link_map, "link map")
        path_map = usage_mod.load_link_map(cfg.link_map)
        try:
            accessed = usage_mod.accessed_distribution(
                sessions, records, path_map, "topic", cfg.period())
        except DomainError:
            flags.append("accessed_join_empty")
        else:
            by_visits = catalog_mod.shannon_diversity(accessed.views_total)
            by_visitors = catalog_mod.shannon_diversity(accessed.visitors_total)
            gaps = catalog_mod.demand_offer_gap(offered, accessed.views_total,
                                                cfg.gap_threshold)
            gap_high_demand = gaps.high_demand_low_offer
            gap_high_offer = gaps.high_offer_low_demand
            if accessed.uncatalogued_views:
                flags.append("uncatalogued_views_present")
    else:
        flags.append("no_accessed_distribution")

    summary = catalog_mod.ProvisionSummary(
        diversity_offered_nats=diversity.entropy_nats,
        evenness_offered=diversity.evenness,
        diversity_accessed_by_visits_nats=(
            by_visits.entropy_nats if by_visits else None),
        diversity_accessed_by_visitors_nats=(
            by_visitors.entropy_nats if by_visitors else None),
        richness=richness_value,
        average_age_days=age.mean_age_days,
        high_demand_low_offer=gap_high_demand,
        high_offer_low_demand=gap_high_offer,
    )
    return summary, flags


def cmd_catalog(cfg: RunConfig) -> int:
    parsed = _load_catalog(cfg)
    taxonomy = _load_taxonomy(cfg)
    summary, flags = _provision_summary(cfg, parsed, taxonomy, None)
    _emit({
        "kind": "catalog-metrics",
        "portal_id": cfg.portal_id,
        "records": len(parsed.records),
        "duplicates_dropped": parsed.duplicates_dropped,
        "malformed_rows": len(parsed.row_errors),
        "provision": report_mod.provision_section(summary),
        "flags": sorted(flags),
    })
    return 0


def cmd_structure(cfg: RunConfig) -> int:
    graph, tally = _load_site_graph(cfg)
    profile = structure_mod.organization_profile(graph, K=cfg.distance_k)
    _emit({
        "kind": "organization-profile",
        "portal_id": cfg.portal_id,
        "pages": graph.n,
        "links": len(graph.edges),
        "self_loops_dropped": tally.self_loops_dropped,
        "parallel_links_collapsed": tally.parallel_edges_collapsed,
        "organization": report_mod.organization_section(profile),
    })
    return 0


def cmd_usage(cfg: RunConfig) -> int:
    period = cfg.period()
    sessions, tallies = _load_sessions(cfg)
    demand = usage_mod.overall_demand(sessions, period)
    rec = usage_mod.recency(sessions, period)
    activity = usage_mod.activity_level(sessions) if sessions else None
    navigation = usage_mod.summarize_navigation(sessions, cfg.linearity_band)
    diagnostics = report_mod.build_diagnostics(
        cfg.portal_id, period, demand=demand, recency_result=rec,
        activity=activity, session_count=len(sessions),
        navigation=navigation, tallies=tallies,
    )
    path = _write_output(cfg, f"{cfg.portal_id}.diagnostics.json",
                         report_mod.canonical_json(diagnostics))
    _emit(diagnostics)
    sys.stderr.write(f"local diagnostics written to {path}; "
                     "this file is not for sharing\n")
    return 0


def _position_profile(cfg: RunConfig):
    text = _read_text(_require(cfg, "cross_links"), "cross-site link")
    site_map = None
    if cfg.site_map is not None:
        site_map = usage_mod.load_link_map(cfg.site_map)
    graph, tally = position_mod.build_cross_site_graph(text.splitlines(),
                                                       site_map)
    site = _require(cfg, "site")
    communities = position_mod.detect_communities(graph, seed=cfg.seed)
    profile = position_mod.position_profile(graph, site, communities,
                                            cfg.position_thresholds())
    return profile, communities, graph, tally


def cmd_position(cfg: RunConfig) -> int:
    profile, communities, graph, tally = _position_profile(cfg)
    _emit({
        "kind": "position-profile",
        "portal_id": cfg.portal_id,
        "sites": len(graph.sites),
        "site_links": graph.edge_count,
        "communities": communities.community_count,
        "community_algorithm": communities.algorithm,
        "community_seed": communities.seed,
        "converged": communities.converged,
        "intra_site_dropped": tally.intra_site_dropped,
        "domain_fallbacks": tally.domain_fallbacks,
        "malformed_lines": tally.malformed_lines,
        "position": report_mod.position_section(profile),
    })
    return 0


def _network_sizes(cfg: RunConfig):
    """Relative sizes over every portal catalog in the network."""
    records = []
    for path in _require(cfg, "network_catalogs"):
        records.extend(catalog_mod.parse_catalog(
            _read_text(path, "network catalog")).records)
    per_portal, network_total = catalog_mod.content_counts(records)
    ratios = segmentation_mod.relative_size(per_portal, network_total)
    return ratios, segmentation_mod.size_class(ratios)


def _segmentation_parts(cfg: RunConfig, sessions):
    period = cfg.period()
    demand = usage_mod.overall_demand(sessions, period)
    trend = segmentation_mod.demand_trend(demand)
    dynamics = segmentation_mod.dynamics_class(trend.relative_slope,
                                               cfg.growth_threshold)
    ratios, sizes = _network_sizes(cfg)
    if cfg.portal_id not in ratios:
        raise ConfigError(
            f"portal {cfg.portal_id!r} does not appear in the network "
            "catalogs; cannot compute its relative size"
        )
    label = segmentation_mod.segment(dynamics, sizes.classes[cfg.portal_id])
    return trend, ratios[cfg.portal_id], label, demand, sizes


def cmd_segment(cfg: RunConfig) -> int:
    sessions, _tallies = _load_sessions(cfg)
    trend, ratio, label, _demand, sizes = _segmentation_parts(cfg, sessions)
    _emit({
        "kind": "segmentation",
        "portal_id": cfg.portal_id,
        "segmentation": report_mod.segmentation_section(trend, ratio, label),
        "network_size_classes": sizes.classes,
        "network_flags": list(sizes.flags),
    })
    return 0


def cmd_report(cfg: RunConfig) -> int:
    """Full pipeline for one portal; writes report + local diagnostics."""
    flags: list[str] = []
    provision = organization = position = segmentation = None
    sessions = None
    tallies: dict = {}
    navigation = None
    demand = rec = activity = None

    if cfg.logs:
        sessions, tallies = _load_sessions(cfg)
        period = cfg.period()
        demand = usage_mod.overall_demand(sessions, period)
        rec = usage_mod.recency(sessions, period)
        activity = usage_mod.activity_level(sessions) if sessions else None

    if cfg.catalog is not None:
        parsed = _load_catalog(cfg)
        taxonomy = _load_taxonomy(cfg)
        summary, provision_flags = _provision_summary(cfg, parsed, taxonomy,
                                                      sessions)
        provision = report_mod.provision_section(summary)
        flags.extend(provision_flags)

    if cfg.edges is not None:
        graph, _tally = _load_site_graph(cfg)
        profile = structure_mod.organization_profile(graph, K=cfg.distance_k)
        if sessions is not None:
            navigation = usage_mod.summarize_navigation(sessions,
                                                        cfg.linearity_band)
        organization = report_mod.organization_section(profile, navigation)

    communities = None
    if cfg.cross_links is not None and cfg.site is not None:
        profile, communities, _graph, _cross_tally = _position_profile(cfg)
        position = report_mod.position_section(profile)

    if sessions is not None and cfg.network_catalogs:
        trend, ratio, label, _demand, _sizes = _segmentation_parts(cfg, sessions)
        segmentation = report_mod.segmentation_section(trend, ratio, label)

    algorithms = {
        "visitor_key": usage_mod.visitor_key_method(cfg.use_auth_user),
    }
    if communities is not None:
        algorithms["community"] = communities.algorithm
        algorithms["community_seed"] = communities.seed

    portal_report = report_mod.assemble_report(
        cfg.portal_id, cfg.period(),
        provision=provision, organization=organization,
        position=position, segmentation=segmentation,
        thresholds=cfg.thresholds_metadata(),
        algorithms=algorithms, flags=sorted(set(flags)),
    )
    data = report_mod.serialize(portal_report)
    path = _write_output(cfg, f"{cfg.portal_id}.report.json", data)

    if sessions is not None:
        diagnostics = report_mod.build_diagnostics(
            cfg.portal_id, cfg.period(), demand=demand, recency_result=rec,
            activity=activity, session_count=len(sessions),
            navigation=navigation, tallies=tallies,
        )
        diag_path = _write_output(cfg, f"{cfg.portal_id}.diagnostics.json",
                                  report_mod.canonical_json(diagnostics))
        sys.stderr.write(f"local diagnostics written to {diag_path}; "
                         "this file is not for sharing\n")
    sys.stdout.write(data.decode("utf-8"))
    sys.stderr.write(f"report written to {path}\n")
    return 0


def cmd_compare(cfg: RunConfig, report_paths) -> int:
    reports = []
    for path in report_paths:
        reports.append(report_mod.deserialize(_read_text(path, "report")))
    comparison = report_mod.compare_within_segment(reports, cfg.compare_margin)
    _write_output(cfg, "comparison.json", comparison.to_json())
    sys.stdout.write(comparison.to_text())
    return 0


def cmd_gen(cfg: RunConfig, demo_dir: str) -> int:
    from .fixtures import write_demo_network

    layout = write_demo_network(demo_dir)
    _emit({
        "kind": "demo-network",
        "root": layout["root"],
        "taxonomy": layout["taxonomy"],
        "cross_links": layout["cross_links"],
        "configs": {p: info["config"] for p, info in layout["portals"].items()},
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="portalmetrics",
        description="Management and segmentation metrics for networks of "
                    "educational web portals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "catalog": "content provision metrics from a catalog export",
        "structure": "site organization metrics from an edge list",
        "usage": "demand metrics from access logs (local diagnostics)",
        "position": "cross-site standing of one portal",
        "segment": "typology quadrant for one portal",
        "report": "full pipeline: assemble the shareable report",
        "compare": "within-segment comparison of shareable reports",
        "gen": "generate the synthetic two-portal demo workspace",
    }
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value settings file")
        for field_name, field_parser in _FIELD_PARSERS.items():
            flag = "--" + field_name.replace("_", "-")
            p.add_argument(flag, dest=field_name, type=field_parser,
                           default=None, metavar="VALUE")
        if name == "compare":
            p.add_argument("reports", nargs="+",
                           help="shareable report JSON files")
        if name == "gen":
            p.add_argument("demo_dir", help="directory for the demo network")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = {name: getattr(args, name) for name in _FIELD_PARSERS
                     if getattr(args, name, None) is not None}
        cfg = build_config(args.config, overrides)
        if args.command == "catalog":
            return cmd_catalog(cfg)
        if args.command == "structure":
            return cmd_structure(cfg)
        if args.command == "usage":
            return cmd_usage(cfg)
        if args.command == "position":
            return cmd_position(cfg)
        if args.command == "segment":
            return cmd_segment(cfg)
        if args.command == "report":
            return cmd_report(cfg)
        if args.command == "compare":
            return cmd_compare(cfg, args.reports)
        if args.command == "gen":
            return cmd_gen(cfg, args.demo_dir)
        parser.error(f"unknown command {args.command!r}")
    except FormatError as exc:
        sys.stderr.write(f"error: {exc}\n")
        if getattr(exc, "violations", None):
            for violation in exc.violations:
                sys.stderr.write(f"  - {violation}\n")
        return 2
    except DomainError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
