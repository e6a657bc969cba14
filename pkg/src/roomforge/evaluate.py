"""Deform every room of a generated plan and score it."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .deform import CorrespondenceWeights, DeformResult, IndexedMesh, deform_room, rotate_mesh
from .geom import METERS_PER_UNIT, RectPolygon
from .metrics import MetricsReport, mean_report, report
from .model import FloorPlan, ModelError, Room, RoomDatabase


@dataclass(frozen=True)
class RoomJob:
    label: str
    source: Room
    target_outline: RectPolygon
    target_portals: tuple     # target_portals[i] receives source.portals[i]


@dataclass(frozen=True)
class RoomOutcome:
    job: RoomJob
    result: DeformResult
    metrics: MetricsReport


class MeshLibrary:
    """Meshes keyed by base room id; rotated database entries are derived on demand."""

    def __init__(self, db: RoomDatabase, meshes: dict[str, IndexedMesh], scale: float = METERS_PER_UNIT):
        self.db = db
        self.meshes = meshes
        self.scale = scale

    def _base(self, room: Room) -> Room:
        for rid in (room.base_id, f"{room.base_id}@0"):
            if rid in self.db:
                return self.db[rid]
        raise ModelError(f"room {room.id!r}: no unrotated entry in the database")

    def mesh(self, room: Room) -> IndexedMesh:
        try:
            m = self.meshes[room.base_id]
        except KeyError:
            raise ModelError(f"room {room.id!r}: no mesh for {room.base_id!r}") from None
        base = self._base(room)
        q = (room.rotation - base.rotation) // 90
        return rotate_mesh(m, base.outline, q, self.scale) if q % 4 else m


def stitched_jobs(plan: FloorPlan, db: RoomDatabase) -> list[RoomJob]:
    """Database room to its final outline; portals matched by name."""
    jobs = []
    for label, pr in zip(plan.node_ids(), plan.rooms):
        src = db[pr.room.id]
        tp = tuple(pr.room.portals[pr.room.portal_index(p.name)] for p in src.portals)
        jobs.append(RoomJob(label, src, pr.outline, tp))
    return jobs


def matched_jobs(target: FloorPlan, assignments, db: RoomDatabase) -> list[RoomJob]:
    """Assigned room to the target room, with the cyclic portal pairing found by scoring."""
    jobs = []
    for a in assignments:
        pr = target.rooms[a.index]
        src = db[a.room_id]
        k, j = len(src.portals), a.score.pairing_offset
        tp = tuple(pr.room.portals[(i + j) % k] for i in range(k))
        jobs.append(RoomJob(a.node, src, pr.outline, tp))
    return jobs


class RoomJobError(ValueError):
    """A room of the plan could not be deformed; ``cause`` is the underlying error."""

    def __init__(self, label: str, cause: Exception):
        super().__init__(f"room {label!r}: {cause}")
        self.label = label
        self.cause = cause


def run_job(job: RoomJob, library: MeshLibrary, w: CorrespondenceWeights = CorrespondenceWeights()) -> RoomOutcome:
    try:
        mesh = library.mesh(job.source)
        res = deform_room(job.source, mesh, job.target_outline, job.target_portals, w, library.scale)
        return RoomOutcome(job, res, report(job.source.outline, mesh, res))
    except (ValueError, LookupError) as e:
        raise RoomJobError(job.label, e) from e


def run_jobs(jobs, library: MeshLibrary, w: CorrespondenceWeights = CorrespondenceWeights(),
             workers: int = 1) -> list[RoomOutcome]:
    """Rooms are independent; with ``workers`` > 1 they deform on a thread pool, results in job order."""
    jobs = list(jobs)
    if workers <= 1 or len(jobs) < 2:
        return [run_job(j, library, w) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda j: run_job(j, library, w), jobs))


def plan_metrics(outcomes) -> MetricsReport:
    return mean_report(o.metrics for o in outcomes)
