"""Management and segmentation metrics for networks of educational portals.

Submodules:
  catalog       content provision: diversity, richness, age, demand gaps
  structure     site organization: depth, density, navigability, linearity
  usage         access logs: sessions, demand, recency, navigation
  position      cross-site standing: degrees, communities, bridging
  segmentation  growth/size typology quadrants
  report        shareable reports and within-segment comparison
  fixtures      deterministic synthetic inputs with planted ground truth
  config, cli   configuration and the command-line driver
"""

from .errors import (
    ComparabilityError,
    ConfigError,
    DomainError,
    FormatError,
    PortalMetricsError,
    ReportValidationError,
)
from .report import TOOL_VERSION as __version__

__all__ = [
    "__version__",
    "PortalMetricsError",
    "DomainError",
    "FormatError",
    "ConfigError",
    "ComparabilityError",
    "ReportValidationError",
]
