"""Run configuration: one flat key = value file plus flag overrides.

Every tunable of the pipeline lives here so a run is fully described by
(inputs, config, seed) and can be reproduced byte for byte. Precedence is
command-line flag over config file over built-in default. The effective
thresholds are echoed into report metadata, which is what makes two
reports comparable at all.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from datetime import date, datetime, timedelta, timezone

from .errors import ConfigError
from .position import PositionThresholds
from .usage import AnalysisPeriod


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_datetime(text: str) -> datetime:
    try:
        value = datetime.fromisoformat(text.strip())
    except ValueError:
        raise ConfigError(f"not an ISO date-time: {text!r}")
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value


def _parse_date(text: str) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise ConfigError(f"not an ISO date: {text!r}")


def _parse_paths(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run needs; None paths mean 'not provided'."""

    # inputs
    catalog: str | None = None
    network_catalogs: tuple[str, ...] = ()
    edges: str | None = None
    logs: tuple[str, ...] = ()
    link_map: str | None = None
    cross_links: str | None = None
    site_map: str | None = None
    taxonomy: str | None = None
    bot_list: str | None = None
    output_dir: str = "out"
    # identity and period
    portal_id: str = "portal"
    site: str | None = None
    period_start: datetime | None = None
    period_end: datetime | None = None
    bucket_days: float = 1.0
    reference_date: date | None = None
    # thresholds
    session_timeout_minutes: float = 30.0
    gap_threshold: float = 0.10
    growth_threshold: float = 0.05
    bridge_score_threshold: float = 0.5
    bridge_min_communities: int = 2
    authority_percentile: float = 75.0
    hub_percentile: float = 75.0
    distance_k: int | None = None
    linearity_band: float = 0.8
    compare_margin: float = 0.05
    # reproducibility
    seed: int = 0
    use_auth_user: bool = True

    def validate(self) -> None:
        checks = [
            (self.bucket_days > 0, "bucket_days must be positive"),
            (self.session_timeout_minutes > 0,
             "session_timeout_minutes must be positive"),
            (0 < self.gap_threshold < 1, "gap_threshold must lie in (0, 1)"),
            (self.growth_threshold > 0, "growth_threshold must be positive"),
            (0 < self.bridge_score_threshold <= 1,
             "bridge_score_threshold must lie in (0, 1]"),
            (self.bridge_min_communities >= 1,
             "bridge_min_communities must be at least 1"),
            (0 <= self.authority_percentile <= 100,
             "authority_percentile must lie in [0, 100]"),
            (0 <= self.hub_percentile <= 100,
             "hub_percentile must lie in [0, 100]"),
            (self.distance_k is None or self.distance_k >= 1,
             "distance_k must be at least 1"),
            (0 < self.linearity_band <= 1,
             "linearity_band must lie in (0, 1]"),
            (self.compare_margin >= 0, "compare_margin cannot be negative"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        if (self.period_start is None) != (self.period_end is None):
            raise ConfigError("period_start and period_end come as a pair")
        if (self.period_start is not None
                and self.period_start >= self.period_end):
            raise ConfigError("period_start must precede period_end")

    def period(self) -> AnalysisPeriod:
        if self.period_start is None or self.period_end is None:
            raise ConfigError("this command needs period_start and period_end")
        return AnalysisPeriod(start=self.period_start, end=self.period_end,
                              bucket=timedelta(days=self.bucket_days))

    def session_timeout(self) -> timedelta:
        return timedelta(minutes=self.session_timeout_minutes)

    def position_thresholds(self) -> PositionThresholds:
        return PositionThresholds(
            bridge_score_threshold=self.bridge_score_threshold,
            bridge_min_communities=self.bridge_min_communities,
            authority_percentile=self.authority_percentile,
            hub_percentile=self.hub_percentile,
        )

    def reference(self) -> date:
        if self.reference_date is not None:
            return self.reference_date
        if self.period_end is not None:
            return self.period_end.date()
        raise ConfigError("reference_date (or a period) is required here")

    def thresholds_metadata(self) -> dict:
        """The methodology echo embedded in every report; the comparability
        guard tests these for equality, so key set and types stay stable."""
        return {
            "session_timeout_minutes": self.session_timeout_minutes,
            "bucket_days": self.bucket_days,
            "gap_threshold": self.gap_threshold,
            "growth_threshold": self.growth_threshold,
            "bridge_score_threshold": self.bridge_score_threshold,
            "bridge_min_communities": self.bridge_min_communities,
            "authority_percentile": self.authority_percentile,
            "hub_percentile": self.hub_percentile,
            "distance_k": self.distance_k,
            "linearity_band": self.linearity_band,
        }


_FIELD_PARSERS = {
    "catalog": str,
    "network_catalogs": _parse_paths,
    "edges": str,
    "logs": _parse_paths,
    "link_map": str,
    "cross_links": str,
    "site_map": str,
    "taxonomy": str,
    "bot_list": str,
    "output_dir": str,
    "portal_id": str,
    "site": str,
    "period_start": _parse_datetime,
    "period_end": _parse_datetime,
    "bucket_days": float,
    "reference_date": _parse_date,
    "session_timeout_minutes": float,
    "gap_threshold": float,
    "growth_threshold": float,
    "bridge_score_threshold": float,
    "bridge_min_communities": int,
    "authority_percentile": float,
    "hub_percentile": float,
    "distance_k": int,
    "linearity_band": float,
    "compare_margin": float,
    "seed": int,
    "use_auth_user": _parse_bool,
}

assert set(_FIELD_PARSERS) == {f.name for f in fields(RunConfig)}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """key = value lines into a typed mapping; # starts a comment."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _FIELD_PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown setting {key!r}")
        try:
            values[key] = _FIELD_PARSERS[key](value)
        except ConfigError:
            raise
        except (ValueError, TypeError):
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {value!r}")
    return values


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}")
    return parse_config_text(text, source=str(path))


def build_config(file_path=None, overrides: dict | None = None) -> RunConfig:
    """Assemble the effective config: defaults, then file, then overrides."""
    config = RunConfig()
    if file_path is not None:
        config = replace(config, **load_config(file_path))
    if overrides:
        unknown = set(overrides) - set(_FIELD_PARSERS)
        if unknown:
            raise ConfigError(f"unknown settings: {', '.join(sorted(unknown))}")
        config = replace(config, **overrides)
    config.validate()
    return config
