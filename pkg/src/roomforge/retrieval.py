"""Room compatibility scoring, ranking and the random retrieval baseline."""

from __future__ import annotations

from dataclasses import dataclass, fields
from functools import lru_cache
from typing import Protocol

import numpy as np

from .geom import RectPolygon, chamfer, normalize_outline, sample_outline
from .model import Portal, Room, RoomDatabase, filter_candidates

OUTLINE_SAMPLES = 250


class NoCandidates(LookupError):
    """No database room has the requested type and portal count."""

    def __init__(self, room_type: str, portal_count: int, subject=None):
        who = f" for {subject!r}" if subject is not None else ""
        super().__init__(f"no candidate rooms{who}: type {room_type!r} with {portal_count} portal(s)")
        self.room_type = room_type
        self.portal_count = portal_count
        self.subject = subject


@dataclass(frozen=True)
class ScoreWeights:
    area: float = 1.0
    outline: float = 0.5
    portal: float = 10.0
    length: float = 0.5
    direction: float = 0.05

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (v >= 0 and np.isfinite(v)):
                raise ValueError(f"weight {f.name} must be a non-negative number, got {v!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreWeights":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown score weight(s): {sorted(extra)}")
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class MatchScore:
    total: float
    c_area: float
    c_outline: float
    c_portal: float
    pairing_offset: int

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def c_area(rs: Room, rt: Room) -> float:
    a, b = rs.area, rt.area
    if not (a > 0 and b > 0):
        raise ValueError("room areas must be positive")
    return max(a, b) / min(a, b) - 1.0


@lru_cache(maxsize=4096)
def _normalized_samples(outline: RectPolygon, n: int) -> np.ndarray:
    norm = normalize_outline(outline)
    return norm.arc_points(sample_outline(norm, n).params)


def c_outline(rs: Room, rt: Room, n: int = OUTLINE_SAMPLES) -> float:
    return chamfer(_normalized_samples(rs.outline, n), _normalized_samples(rt.outline, n))


def c_match(p1: Portal, p2: Portal, w: ScoreWeights = ScoreWeights()) -> float:
    # M(P) difference is taken as printed, without wrapping around u = 1
    return ((p1.mid - p2.mid) ** 2 + w.length * (p1.length - p2.length) ** 2
            + w.direction * float(p1.facing != p2.facing))


def c_portal(rs: Room, rt: Room, w: ScoreWeights = ScoreWeights()) -> tuple[float, int]:
    ps, pt = rs.portals, rt.portals
    k = len(ps)
    if k != len(pt):
        raise ValueError(f"portal counts differ ({k} vs {len(pt)})")
    if k == 0:
        return 0.0, 0
    best, best_j = float("inf"), 0
    for j in range(k):
        s = sum(c_match(ps[i], pt[(i + j) % k], w) for i in range(k))
        if s < best:
            best, best_j = s, j
    return best, best_j


def score(rs: Room, rt: Room, w: ScoreWeights = ScoreWeights(), n: int = OUTLINE_SAMPLES) -> MatchScore:
    a = c_area(rs, rt)
    o = c_outline(rs, rt, n)
    p, j = c_portal(rs, rt, w)
    return MatchScore(w.area * a + w.outline * o + w.portal * p, a, o, p, j)


def rank(db: RoomDatabase, target: Room, w: ScoreWeights = ScoreWeights(),
         n: int = OUTLINE_SAMPLES) -> list[tuple[str, MatchScore]]:
    """Compatible rooms of ``db`` ordered by ascending score, ties by id."""
    ids = filter_candidates(db, target.room_type, len(target.portals))
    if not ids:
        raise NoCandidates(target.room_type, len(target.portals), target.id)
    scored = [(rid, score(db[rid], target, w, n)) for rid in ids]
    scored.sort(key=lambda t: (t[1].total, t[0]))
    return scored


def random_retrieve(db: RoomDatabase, room_type: str, portal_count: int, seed) -> str:
    """Uniform draw among compatible rooms (the retrieval baseline without a network)."""
    ids = filter_candidates(db, room_type, portal_count)
    if not ids:
        raise NoCandidates(room_type, portal_count)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return ids[int(rng.integers(len(ids)))]


# --- pluggable candidate proposal ----------------------------------------


class CandidateScorer(Protocol):
    """Orders compatible room ids for one insertion step.

    ``context`` is whatever the caller can offer about the slot being
    filled (for stitching: the placed neighbours' free portals).
    """

    name: str

    def propose(self, db: RoomDatabase, room_type: str, portal_count: int,
                rng: np.random.Generator, context=None) -> list[str]: ...


class RandomScorer:
    """Random order over the compatible set; draws are distinct."""

    name = "random"

    def propose(self, db, room_type, portal_count, rng, context=None) -> list[str]:
        ids = filter_candidates(db, room_type, portal_count)
        if not ids:
            raise NoCandidates(room_type, portal_count)
        return [ids[i] for i in rng.permutation(len(ids))]


class TargetScorer:
    """Deterministic order by the compatibility score against a target room.

    ``context`` must be a Room; without one it falls back to random order.
    """

    name = "score"

    def __init__(self, weights: ScoreWeights = ScoreWeights(), n: int = OUTLINE_SAMPLES):
        self.weights = weights
        self.n = n

    def propose(self, db, room_type, portal_count, rng, context=None) -> list[str]:
        if not isinstance(context, Room):
            return RandomScorer().propose(db, room_type, portal_count, rng)
        target = context
        ids = filter_candidates(db, room_type, portal_count)
        if not ids:
            raise NoCandidates(room_type, portal_count)
        return sorted(ids, key=lambda rid: (score(db[rid], target, self.weights, self.n).total, rid))

