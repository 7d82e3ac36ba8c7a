"""Approximate skeletons of unorganized point clouds."""

from .geometry import PointCloud, Segment
from .mst import EmbeddedGraph, MstResult, build_mst
from .metrics import RunReport, homeo_signature
from .straighten import ApproxParams, Skeleton, build_ask

__all__ = [
    "PointCloud",
    "Segment",
    "EmbeddedGraph",
    "MstResult",
    "build_mst",
    "RunReport",
    "homeo_signature",
    "ApproxParams",
    "Skeleton",
    "build_ask",
]

__version__ = "0.1.0"
