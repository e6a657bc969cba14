"""3D-quality metrics of a deformed room: outline, portal and mesh-statistic changes."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, fields

import numpy as np

from .deform import DeformResult, IndexedMesh, OutlineCorrespondence
from .geom import RectPolygon

BINS = 64
STAT_DIGITS = 9


@dataclass(frozen=True)
class MetricsReport:
    area_change: float      # percent
    outline_change: float   # layout units
    portal_change: float    # layout units
    mesh_a: float           # triangle-area histogram distance, square meters
    mesh_e: float           # edge-length histogram distance, meters

    def as_dict(self) -> dict:
        return asdict(self)


FIELDS = tuple(f.name for f in fields(MetricsReport))


def area_change(src: RectPolygon, tgt: RectPolygon) -> float:
    a = src.area
    if not a > 0:
        raise ValueError("source outline has zero area")
    return 100.0 * abs(tgt.area - a) / a


def outline_change(corr: OutlineCorrespondence) -> float:
    """Mean distance between corresponding samples once both outlines share a centroid."""
    s = corr.source_points() - corr.source.centroid
    t = corr.target_points() - corr.target.centroid
    return float(np.linalg.norm(s - t, axis=1).mean())


def portal_change(mapped, snapped) -> float:
    """Mean distance from each cage-mapped portal midpoint to where snapping put it."""
    mapped = np.asarray(mapped, float).reshape(-1, 2)
    snapped = np.asarray(snapped, float).reshape(-1, 2)
    if not len(mapped):
        return 0.0
    return float(np.linalg.norm(mapped - snapped, axis=1).mean())


def _rounded(v) -> np.ndarray:
    v = np.asarray(v, float)
    out = np.zeros_like(v)
    nz = v != 0
    mag = np.floor(np.log10(np.abs(v[nz])))
    scale = 10.0 ** (STAT_DIGITS - 1 - mag)
    out[nz] = np.round(v[nz] * scale) / scale
    return out


def histogram_distance(a, b, bins: int = BINS, span: tuple[float, float] | None = None) -> float:
    """1D Wasserstein distance between two samples binned on their common range.

    ``span`` fixes the binned range instead; it must cover both samples.
    """
    a, b = np.asarray(a, float), np.asarray(b, float)
    if not len(a) or not len(b):
        raise ValueError("empty sample")
    lo, hi = min(a.min(), b.min()), max(a.max(), b.max())
    if span is not None:
        if span[0] > lo or span[1] < hi:
            raise ValueError("span does not cover the samples")
        lo, hi = span
    if hi <= lo:
        return 0.0
    ha, _ = np.histogram(a, bins=bins, range=(lo, hi))
    hb, _ = np.histogram(b, bins=bins, range=(lo, hi))
    ca = np.cumsum(ha) / len(a)
    cb = np.cumsum(hb) / len(b)
    return float(np.abs(ca - cb).sum() * (hi - lo) / bins)


def mesh_stat_distance(a: IndexedMesh, b: IndexedMesh, stat: str, bins: int = BINS) -> float:
    """Histogram distance of triangle areas or edge lengths; values rounded to 9 digits first."""
    if not len(a.faces) or not len(b.faces):
        raise ValueError("empty mesh")
    if stat == "triangle_area":
        va, vb = a.face_areas(), b.face_areas()
    elif stat == "edge_length":
        va, vb = a.edge_lengths(), b.edge_lengths()
    else:
        raise ValueError(f"unknown statistic {stat!r}")
    return histogram_distance(_rounded(va), _rounded(vb), bins)


def report(source_outline: RectPolygon, source_mesh: IndexedMesh, result: DeformResult) -> MetricsReport:
    corr = result.correspondence
    return MetricsReport(
        area_change(source_outline, corr.target),
        outline_change(corr),
        portal_change(result.mapped_portals, result.snapped_portals),
        mesh_stat_distance(source_mesh, result.mesh, "triangle_area"),
        mesh_stat_distance(source_mesh, result.mesh, "edge_length"),
    )


def mean_report(reports) -> MetricsReport:
    """Unweighted mean over rooms."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to average")
    return MetricsReport(*(float(np.mean([getattr(r, f) for r in reports])) for f in FIELDS))


def to_csv(rows) -> str:
    """``rows`` is a sequence of (label, MetricsReport)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("room",) + FIELDS)
    for label, r in rows:
        w.writerow((label,) + tuple(f"{getattr(r, f):.9g}" for f in FIELDS))
    return buf.getvalue()
