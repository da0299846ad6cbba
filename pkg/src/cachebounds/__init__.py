"""Exact rate-memory bounds for coded caching with uncoded prefetching."""

from .converse import ave_converse, best_peak_converse, best_peak_provenance
from .rates import Demand, DemandType, RatePoint, SystemParams, r_dec, r_u, r_u_ave

__all__ = [
    "Demand",
    "DemandType",
    "RatePoint",
    "SystemParams",
    "ave_converse",
    "best_peak_converse",
    "best_peak_provenance",
    "r_dec",
    "r_u",
    "r_u_ave",
]
__version__ = "0.1.0"
