"""Command line: ingest, stitch, match2d, deform, metrics and render.

Every artifact is canonical JSON, OBJ or SVG and depends only on the
inputs and ``--seed``.  Failures exit with status 1 and print an error
document naming the module and entity at fault.
"""

from __future__ import annotations

import json
import os
import sys
from dataclasses import fields, replace
from pathlib import Path

import click
import numpy as np

from .deform import CorrespondenceWeights, read_obj, write_obj
from .evaluate import MeshLibrary, RoomJobError, matched_jobs, run_jobs, stitched_jobs
from .metrics import mean_report, report, to_csv
from .miqp import LayoutOptions
from .model import RoomDatabase, augment_rotations, ingest_room
from .pipeline import Assignment, StitchOptions, match_layout, stitch
from .render import render_svg
from .retrieval import MatchScore, RandomScorer, ScoreWeights, TargetScorer
from .serialize import (
    ASSIGNMENT,
    DEFORMED,
    GEOMETRY_DIGITS,
    DocumentError,
    canonical_json,
    canonical_line,
    correspondence_from_doc,
    correspondence_to_doc,
    load_database,
    load_graph,
    plan_from_doc,
    plan_to_doc,
    save_database,
    save_graph,
    save_plan,
    write_json,
)
from .synth import random_tree, raw_record, synth_database, synth_target_plan

METRICS = "metrics/1"
EXIT_FAILURE = 1


class CliError(Exception):
    def __init__(self, message: str, module: str = "cli", entity=None):
        super().__init__(message)
        self.module = module
        self.entity = entity


def _origin(e: BaseException) -> str:
    mod = type(e).__module__
    if mod.startswith("roomforge."):
        return mod.split(".")[1]
    return "cli"


def _entity(e: BaseException):
    for attr in ("label", "node", "room_id", "subject", "entity"):
        v = getattr(e, attr, None)
        if v is not None:
            return v
    return None


def error_document(e: BaseException) -> dict:
    cause = e.cause if isinstance(e, RoomJobError) else e
    if isinstance(e, CliError):
        module, entity = e.module, e.entity
    else:
        module, entity = _origin(cause), _entity(e)
    return {"error": {"kind": type(cause).__name__, "module": module, "entity": entity, "message": str(e)}}


def _threads() -> int:
    raw = os.environ.get("ROOMFORGE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise CliError(f"ROOMFORGE_THREADS must be an integer, got {raw!r}") from None
    return max(n, 1)


def _read_doc(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DocumentError(f"{path}: not valid JSON ({e})") from None


def _load_weights(path):
    """Optional JSON with ``score``, ``correspondence`` and ``layout`` sections."""
    if path is None:
        return ScoreWeights(), CorrespondenceWeights(), {}
    doc = _read_doc(path)
    unknown = set(doc) - {"score", "correspondence", "layout"}
    if unknown:
        raise CliError(f"{path}: unknown section(s) {sorted(unknown)}")
    cw = doc.get("correspondence", {})
    names = {f.name for f in fields(CorrespondenceWeights)}
    if set(cw) - names:
        raise CliError(f"{path}: unknown correspondence weight(s) {sorted(set(cw) - names)}")
    layout = doc.get("layout", {})
    names = {f.name for f in fields(LayoutOptions)}
    if set(layout) - names:
        raise CliError(f"{path}: unknown layout option(s) {sorted(set(layout) - names)}")
    try:
        return ScoreWeights.from_dict(doc.get("score", {})), CorrespondenceWeights(**cw), layout
    except (TypeError, ValueError) as e:
        raise CliError(f"{path}: {e}") from None


def _out(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _mesh_library(db: RoomDatabase, mesh_dir) -> MeshLibrary:
    root = Path(mesh_dir)

    class Lazy(dict):
        def __missing__(self, base_id):
            room = next((r for r in db if r.base_id == base_id and r.mesh_ref), None)
            if room is None:
                raise KeyError(base_id)
            m = read_obj(root / room.mesh_ref)
            self[base_id] = m
            return m

    return MeshLibrary(db, Lazy())


class Command(click.Command):
    """Turns library errors into an error document and exit status 1."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.exceptions.Exit:
            raise
        except click.ClickException:
            raise
        except (CliError, ValueError, LookupError, OSError) as e:
            doc = canonical_json(error_document(e))
            out = ctx.params.get("out")
            if out:
                try:
                    _out(out).joinpath("error.json").write_text(doc, encoding="utf-8")
                except OSError:
                    pass
            click.echo(doc, err=True, nl=False)
            ctx.exit(EXIT_FAILURE)


@click.group()
@click.version_option(package_name="roomforge")
def main():
    """Assemble floor plans from a database of annotated rooms."""


OUT = click.option("--out", "out", type=click.Path(file_okay=False), required=True, help="Output directory.")
WEIGHTS = click.option("--weights", type=click.Path(exists=True, dir_okay=False),
                       help="JSON with score / correspondence / layout sections.")


@main.command(cls=Command)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--nodes", default=5, show_default=True, type=int, help="Rooms in the sample graph and 2D plan.")
@OUT
def synth(seed, nodes, out):
    """Write a synthetic corpus: raw room records, meshes, a relation graph and a 2D plan."""
    out = _out(out)
    db, meshes = synth_database(seed)
    (out / "meshes").mkdir(exist_ok=True)
    for room in db:
        write_obj(meshes[room.id], out / "meshes" / room.mesh_ref)
    write_json(out / "rooms.json", {"rooms": [raw_record(r) for r in db]}, GEOMETRY_DIGITS)
    rng = np.random.default_rng(seed)
    save_graph(random_tree(nodes, rng), out / "graph.json")
    save_plan(synth_target_plan(nodes, rng), out / "target.json")


@main.command(cls=Command)
@click.argument("raw", type=click.Path(exists=True, dir_okay=False))
@click.option("--augment/--no-augment", default=True, show_default=True, help="Add the four rotations of every room.")
@OUT
def ingest(raw, augment, out):
    """Raw room records -> room database (roomdb.json)."""
    doc = _read_doc(raw)
    records = doc.get("rooms") if isinstance(doc, dict) else doc
    if not isinstance(records, list):
        raise CliError(f"{raw}: expected a list of room records")
    db = RoomDatabase([ingest_room(r) for r in records])
    if augment:
        db = augment_rotations(db)
    save_database(db, _out(out) / "roomdb.json")


@main.command(cls=Command)
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.argument("db", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--beam-width", default=5, show_default=True, type=click.IntRange(min=1))
@click.option("--time-limit", default=60.0, show_default=True, type=click.FloatRange(min=0),
              help="Wall-clock seconds per layout solve.")
@click.option("--node-limit", default=5000, show_default=True, type=click.IntRange(min=1),
              help="Branch-and-bound nodes per solve.")
@click.option("--min-room-size", type=click.FloatRange(min=0), help="Smallest rectangle side s in layout units.")
@click.option("--scorer", type=click.Choice(["random", "score"]), default="random", show_default=True)
@click.option("--trace", is_flag=True, help="Also write trace.jsonl, one line per candidate.")
@WEIGHTS
@OUT
def stitch_cmd(graph, db, seed, beam_width, time_limit, node_limit, min_room_size, scorer, trace, weights, out):
    """Relation graph + room database -> floor plan (plan.json)."""
    g, rooms = load_graph(graph), load_database(db)
    sw, _, layout = _load_weights(weights)
    lo = LayoutOptions(**layout)
    if min_room_size is not None:
        lo = replace(lo, min_room_size=min_room_size)
    opts = StitchOptions(beam_width=beam_width, time_limit=time_limit, node_limit=node_limit, seed=seed,
                         layout=lo, scorer=TargetScorer(sw) if scorer == "score" else RandomScorer())
    res = stitch(g, rooms, opts)
    out = _out(out)
    save_plan(res.plan, out / "plan.json")
    if trace:
        (out / "trace.jsonl").write_text("".join(canonical_line(t) + "\n" for t in res.trace), encoding="utf-8")


main.add_command(stitch_cmd, "stitch")


@main.command(cls=Command)
@click.argument("plan", type=click.Path(exists=True, dir_okay=False))
@click.argument("db", type=click.Path(exists=True, dir_okay=False))
@WEIGHTS
@OUT
def match2d(plan, db, weights, out):
    """2D plan + room database -> per-room assignment (assignment.json)."""
    rooms = load_database(db)
    target = plan_from_doc(_read_doc(plan))
    sw, _, _ = _load_weights(weights)
    doc = {
        "schema": ASSIGNMENT,
        "target": plan_to_doc(target),
        "assignments": [{"index": a.index, "node": a.node, "room_id": a.room_id, "score": a.score.as_dict()}
                        for a in match_layout(target, rooms, sw)],
    }
    write_json(_out(out) / "assignment.json", doc, GEOMETRY_DIGITS)


def _jobs(doc: dict, db: RoomDatabase):
    if doc.get("schema") == ASSIGNMENT:
        target = plan_from_doc(doc["target"])
        assignments = [Assignment(a["index"], a["node"], a["room_id"], MatchScore(**a["score"]))
                       for a in doc["assignments"]]
        return matched_jobs(target, assignments, db)
    return stitched_jobs(plan_from_doc(doc, db), db)


@main.command(cls=Command)
@click.argument("layout", type=click.Path(exists=True, dir_okay=False))
@click.argument("db", type=click.Path(exists=True, dir_okay=False))
@click.option("--meshes", type=click.Path(exists=True, file_okay=False), required=True,
              help="Directory holding the database's OBJ files.")
@WEIGHTS
@OUT
def deform(layout, db, meshes, weights, out):
    """Plan or assignment + meshes -> deformed OBJs and correspondences (deformed.json)."""
    workers = _threads()
    rooms = load_database(db)
    _, cw, _ = _load_weights(weights)
    jobs = _jobs(_read_doc(layout), rooms)
    outcomes = run_jobs(jobs, _mesh_library(rooms, meshes), cw, workers=workers)
    out = _out(out)
    (out / "meshes").mkdir(exist_ok=True)
    entries = []
    for o in outcomes:
        rel = f"meshes/{o.job.label}.obj"
        write_obj(o.result.mesh, out / rel)
        r = o.result
        entries.append({
            "label": o.job.label,
            "source_id": o.job.source.id,
            "mesh": rel,
            "correspondence": correspondence_to_doc(r.correspondence),
            "mapped_portals": r.mapped_portals,
            "snapped_portals": r.snapped_portals,
            "placements": [{"label": p.label, "offset": list(p.offset), "scale": p.scale, "pushed": p.pushed}
                           for p in r.placements],
        })
    write_json(out / "deformed.json", {"schema": DEFORMED, "rooms": entries})


@main.command(cls=Command)
@click.argument("deformed", type=click.Path(exists=True, dir_okay=False))
@click.argument("db", type=click.Path(exists=True, dir_okay=False))
@click.option("--meshes", type=click.Path(exists=True, file_okay=False), required=True,
              help="Directory holding the database's OBJ files.")
@OUT
def metrics(deformed, db, meshes, out):
    """Deformation artifacts -> per-room and mean metrics (report.json, report.csv)."""
    rooms = load_database(db)
    doc = _read_doc(deformed)
    if doc.get("schema") != DEFORMED:
        raise DocumentError(f"schema mismatch: expected {DEFORMED!r}, got {doc.get('schema')!r}")
    lib = _mesh_library(rooms, meshes)
    root = Path(deformed).parent
    rows = []
    for e in doc["rooms"]:
        label = e["label"]
        try:
            src = rooms[e["source_id"]]
            corr = correspondence_from_doc(e["correspondence"])
            fake = _Artifacts(read_obj(root / e["mesh"]), corr, np.asarray(e["mapped_portals"], float),
                              np.asarray(e["snapped_portals"], float))
            rows.append((label, report(src.outline, lib.mesh(src), fake)))
        except (ValueError, LookupError, OSError) as err:
            raise RoomJobError(label, err) from err
    mean = mean_report(r for _, r in rows)
    out = _out(out)
    write_json(out / "report.json", {
        "schema": METRICS,
        "rooms": [{"label": label, **r.as_dict()} for label, r in rows],
        "mean": mean.as_dict(),
    })
    (out / "report.csv").write_text(to_csv(rows + [("mean", mean)]), encoding="utf-8")


class _Artifacts:
    """What ``report`` reads from a deformation, rebuilt from files."""

    def __init__(self, mesh, correspondence, mapped, snapped):
        self.mesh = mesh
        self.correspondence = correspondence
        self.mapped_portals = mapped
        self.snapped_portals = snapped


@main.command(cls=Command)
@click.argument("plan", type=click.Path(exists=True, dir_okay=False))
@click.option("--db", type=click.Path(exists=True, dir_okay=False), help="Resolves rooms stored by id only.")
@click.option("--scale", default=3.0, show_default=True, type=click.FloatRange(min=0, min_open=True),
              help="Pixels per layout unit.")
@OUT
def render(plan, db, scale, out):
    """Floor plan (or the target of an assignment) -> SVG."""
    doc = _read_doc(plan)
    if doc.get("schema") == ASSIGNMENT:
        doc = doc["target"]
    fp = plan_from_doc(doc, load_database(db) if db else None)
    name = Path(plan).stem + ".svg"
    (_out(out) / name).write_text(render_svg(fp, scale), encoding="utf-8")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
