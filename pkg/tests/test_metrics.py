import csv
import io

import numpy as np
import pytest
from helpers import rect_outline
from scipy.stats import wasserstein_distance
from shapely.geometry import Polygon

from roomforge.deform import CorrespondenceWeights, IndexedMesh, correspond
from roomforge.evaluate import MeshLibrary, matched_jobs, plan_metrics, run_jobs, stitched_jobs
from roomforge.metrics import (
    BINS,
    FIELDS,
    MetricsReport,
    area_change,
    histogram_distance,
    mean_report,
    mesh_stat_distance,
    outline_change,
    portal_change,
    to_csv,
)
from roomforge.model import FloorPlan, PlacedRoom, augment_rotations
from roomforge.pipeline import match_layout
from roomforge.synth import synth_database, synth_target_plan


def _tri(area):
    # right triangle with legs (2 * area, 1)
    v = np.array([(0, 0, 0), (2 * area, 0, 0), (0, 1, 0)], float)
    return IndexedMesh(v, np.array([(0, 1, 2)]), ["floor.0"])


def _random_mesh(rng, n):
    v = rng.uniform(0, 3, size=(3 * n, 3))
    return IndexedMesh(v, np.arange(3 * n).reshape(-1, 3), ["floor.0"] * n)


# --- area and outline ------------------------------------------------------------


def test_area_change_examples():
    sq = rect_outline(0, 0, 10, 10)
    assert area_change(sq, sq) == 0
    assert area_change(sq, rect_outline(0, 0, 10, 12)) == pytest.approx(20.0)
    assert area_change(sq, rect_outline(0, 0, 10, 8)) == pytest.approx(20.0)


def test_outline_change_square_to_rectangle_by_hand():
    sq, rect = rect_outline(0, 0, 10, 10), rect_outline(0, 0, 20, 10)
    corr = correspond(sq, rect, [], CorrespondenceWeights(1, 1, 4))
    # corners onto corners; centred offsets (+-5, +-5) against (+-10, +-5)
    assert np.allclose(corr.target_points(), rect.vertices)
    assert outline_change(corr) == pytest.approx(5.0, abs=1e-9)
    corr = correspond(sq, rect, [], CorrespondenceWeights(1, 1, 8))
    # edge midpoints on the short sides stay put after centring
    assert outline_change(corr) == pytest.approx((5 + 0 + 5 + 5 + 5 + 0 + 5 + 5) / 8, abs=1e-9)


def test_outline_change_ignores_translation():
    sq = rect_outline(0, 0, 10, 10)
    corr = correspond(sq, sq.translated(7, -3), [], CorrespondenceWeights(1, 1, 16))
    assert outline_change(corr) == pytest.approx(0.0, abs=1e-9)
    assert outline_change(correspond(sq, sq, [], CorrespondenceWeights(1, 1, 16))) == pytest.approx(0.0, abs=1e-12)


# --- portals ------------------------------------------------------------------------


def test_portal_change_examples():
    assert portal_change([(3, 4)], [(3, 4)]) == 0
    assert portal_change([(4.0, 0)], [(4.4, 0)]) == pytest.approx(0.4)
    assert portal_change([], []) == 0
    mapped = [(1, 1), (5, 2), (0, 9)]
    snapped = [(1, 2), (8, 6), (0, 9)]
    assert portal_change(mapped, snapped) == pytest.approx((1 + 5 + 0) / 3)


# --- mesh statistics -------------------------------------------------------------------


def test_identical_meshes_have_zero_distance():
    m = _random_mesh(np.random.default_rng(0), 40)
    assert mesh_stat_distance(m, m, "triangle_area") == 0
    assert mesh_stat_distance(m, m, "edge_length") == 0


def test_single_triangles_of_area_one_and_two():
    # all mass in the first bin against all mass in the last
    d = mesh_stat_distance(_tri(1.0), _tri(2.0), "triangle_area")
    assert d == pytest.approx(63 / 64, abs=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_histogram_distance_within_one_bin_of_exact(seed):
    rng = np.random.default_rng(seed)
    a, b = _random_mesh(rng, 30), _random_mesh(rng, 50)
    for stat, va, vb in (("triangle_area", a.face_areas(), b.face_areas()),
                         ("edge_length", a.edge_lengths(), b.edge_lengths())):
        width = (max(va.max(), vb.max()) - min(va.min(), vb.min())) / BINS
        exact = wasserstein_distance(va, vb)
        assert abs(mesh_stat_distance(a, b, stat) - exact) <= width + 1e-12


def test_histogram_distance_symmetric_and_triangle_on_fixed_bins():
    rng = np.random.default_rng(5)
    xs = [rng.gamma(2.0, size=k) for k in (20, 35, 50)]
    span = (min(x.min() for x in xs), max(x.max() for x in xs))
    d = lambda p, q: histogram_distance(p, q, span=span)
    a, b, c = xs
    assert d(a, b) == pytest.approx(d(b, a), abs=1e-15)
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-12
    with pytest.raises(ValueError):
        histogram_distance(a, b, span=(span[0] + 1, span[1]))


def test_mesh_stat_errors():
    m = _tri(1.0)
    empty = IndexedMesh(np.zeros((0, 3)), np.zeros((0, 3), int), [])
    with pytest.raises(ValueError):
        mesh_stat_distance(m, empty, "edge_length")
    with pytest.raises(ValueError):
        mesh_stat_distance(m, m, "volume")


# --- reports ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def shared():
    db, meshes = synth_database(0)
    aug = augment_rotations(db)
    return aug, MeshLibrary(aug, meshes)


def _self_plan(db, ids):
    """Plan placing database rooms as they are; nothing needs deforming."""
    return FloorPlan([PlacedRoom(db[rid], 100.0 * k, 0.0, f"n{k}") for k, rid in enumerate(ids)], [], None)


def test_identity_plan_reports_all_zeros(shared):
    db, lib = shared
    plan = _self_plan(db, ["room00@0", "room04@90", "room11@180", "room20@270"])
    outcomes = run_jobs(stitched_jobs(plan, db), lib)
    for o in outcomes:
        shift = (o.job.target_outline.vertices[0] - o.job.source.outline.vertices[0]) * lib.scale
        mesh = lib.mesh(o.job.source).translated(*shift)
        assert np.abs(o.result.mesh.vertices - mesh.vertices).max() < 1e-9
        for f in FIELDS:
            assert getattr(o.metrics, f) == pytest.approx(0.0, abs=1e-9), f
    assert plan_metrics(outcomes).portal_change == pytest.approx(0.0, abs=1e-9)


def _independent(src, src_mesh, res):
    """Every metric from scratch: shapely areas, raw points, a fresh histogram."""
    corr = res.correspondence
    a0, a1 = Polygon(src.outline.vertices).area, Polygon(corr.target.vertices).area
    ps = corr.source.arc_points(corr.source_params)
    pt = corr.target.arc_points(corr.target_params)
    ps = ps - Polygon(corr.source.vertices).centroid.coords[0]
    pt = pt - Polygon(corr.target.vertices).centroid.coords[0]
    oc = np.mean([np.hypot(*(p - q)) for p, q in zip(ps, pt)])
    pc = np.mean([np.hypot(*(p - q)) for p, q in zip(res.mapped_portals, res.snapped_portals)])

    def hist(x, y):
        x, y = np.round(x, 12), np.round(y, 12)
        lo, hi = min(x.min(), y.min()), max(x.max(), y.max())
        edges = np.linspace(lo, hi, BINS + 1)
        cx = np.array([(x <= e).mean() for e in edges[1:]])
        cy = np.array([(y <= e).mean() for e in edges[1:]])
        return np.abs(cx - cy).sum() * (hi - lo) / BINS

    return dict(area_change=100 * abs(a1 - a0) / a0, outline_change=oc, portal_change=pc,
                mesh_a=hist(src_mesh.face_areas(), res.mesh.face_areas()),
                mesh_e=hist(src_mesh.edge_lengths(), res.mesh.edge_lengths()))


def test_matched_plan_fields_match_recomputation(shared):
    db, lib = shared
    target = synth_target_plan(5, np.random.default_rng(2000))
    outcomes = run_jobs(matched_jobs(target, match_layout(target, db), db), lib)
    assert len(outcomes) == 5
    for o in outcomes:
        want = _independent(o.job.source, lib.mesh(o.job.source), o.result)
        for f in FIELDS:
            # a bin edge can fall between the rounded and unrounded statistics
            tol = 1e-9 if f in ("area_change", "outline_change", "portal_change") else 2e-3
            assert getattr(o.metrics, f) == pytest.approx(want[f], abs=tol), f
        assert all(getattr(o.metrics, f) >= 0 for f in FIELDS)
    mean = plan_metrics(outcomes)
    for f in FIELDS:
        assert getattr(mean, f) == pytest.approx(np.mean([getattr(o.metrics, f) for o in outcomes]))


def test_mean_and_csv():
    r1 = MetricsReport(1, 2, 3, 4, 5)
    r2 = MetricsReport(3, 2, 1, 0, 1)
    assert mean_report([r1, r2]) == MetricsReport(2, 2, 2, 2, 3)
    with pytest.raises(ValueError):
        mean_report([])
    rows = list(csv.reader(io.StringIO(to_csv([("a", r1), ("b", r2)]))))
    assert rows[0] == ["room", *FIELDS]
    assert rows[1] == ["a", "1", "2", "3", "4", "5"]
