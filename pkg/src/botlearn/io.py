"""CSV/JSON readers and writers. Floats are written with repr so files round-trip exactly."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .graph import DegreeSequence, MultiDigraph


class DataFormatError(ValueError):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path, header) -> list[list[str]]:
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        try:
            got = next(r)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        if got != list(header):
            raise DataFormatError(f"{path}: expected header {list(header)}, got {got}")
        return [row for row in r]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, data) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def _ints(rows, path) -> np.ndarray:
    try:
        return np.array([[int(v) for v in row] for row in rows], dtype=np.int64).reshape(len(rows), -1)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# degree sequences

DEGREE_HEADER = ("agent_id", "d_out", "d_in_A", "d_in_B")


def write_degrees(path, seq: DegreeSequence) -> None:
    write_csv(path, DEGREE_HEADER, zip(range(seq.n), seq.d_out, seq.d_in_a, seq.d_in_b))


def read_degrees(path, strict: bool = True) -> DegreeSequence:
    rows = _ints(read_csv(path, DEGREE_HEADER), path)
    if rows.shape[0] == 0 or not np.array_equal(rows[:, 0], np.arange(rows.shape[0])):
        raise DataFormatError(f"{path}: agent ids must be 0..n-1 in order")
    return DegreeSequence(rows[:, 1], rows[:, 2], rows[:, 3], strict=strict)


# ---------------------------------------------------------------------------
# graphs

GRAPH_HEADER = ("src", "dst", "multiplicity")


def write_graph(stem, graph: MultiDigraph, seed, extra: dict | None = None) -> None:
    """``stem``.csv holds the edge multiset, ``stem``.json the header."""
    stem = Path(stem)
    src, dst, mult = graph.edge_multiset()
    write_csv(stem.with_suffix(".csv"), GRAPH_HEADER, zip(src, dst, mult))
    header = {"n": graph.n_agents, "bots": graph.n_bots, "seed": seed}
    header.update(extra or {})
    write_json(stem.with_suffix(".json"), header)


def read_graph(stem) -> MultiDigraph:
    stem = Path(stem)
    header = read_json(stem.with_suffix(".json"))
    try:
        n, bots = int(header["n"]), int(header["bots"])
    except (KeyError, TypeError, ValueError):
        raise DataFormatError(f"{stem}.json: needs integer n and bots") from None
    rows = _ints(read_csv(stem.with_suffix(".csv"), GRAPH_HEADER), stem)
    if rows.size and (rows.min() < 0 or rows[:, :2].max() >= n + bots or rows[:, 2].min() < 1):
        raise DataFormatError(f"{stem}.csv: edge out of range")
    src = np.repeat(rows[:, 0], rows[:, 2]) if rows.size else np.zeros(0, dtype=np.int64)
    dst = np.repeat(rows[:, 1], rows[:, 2]) if rows.size else np.zeros(0, dtype=np.int64)
    return MultiDigraph(n, bots, src, dst)


# ---------------------------------------------------------------------------
# allocations

ALLOC_HEADER = ("agent_id", "d_in_B")


def write_allocation(path, d) -> None:
    write_csv(path, ALLOC_HEADER, enumerate(np.asarray(d)))


def read_allocation(path, n: int | None = None) -> np.ndarray:
    rows = _ints(read_csv(path, ALLOC_HEADER), path)
    if rows.shape[0] == 0 or not np.array_equal(rows[:, 0], np.arange(rows.shape[0])):
        raise DataFormatError(f"{path}: agent ids must be 0..n-1 in order")
    if n is not None and rows.shape[0] != n:
        raise DataFormatError(f"{path}: allocation covers {rows.shape[0]} agents, graph has {n}")
    if np.any(rows[:, 1] < 0):
        raise DataFormatError(f"{path}: negative bot count")
    return rows[:, 1]


# ---------------------------------------------------------------------------
# trajectories and records

TRAJECTORY_HEADER = ("t", "mean_belief", "std_belief", "tracked_node", "belief")


def trajectory_rows(sim):
    for t in range(sim.mean_belief.size):
        if sim.tracked.size == 0:
            yield (t, sim.mean_belief[t], sim.std_belief[t], None, None)
        for k, node in enumerate(sim.tracked):
            yield (t, sim.mean_belief[t], sim.std_belief[t], node, sim.trajectories[t, k])


RECORD_HEADER = (
    "strategy", "trial", "seed_chain", "alloc_seed", "signal_seed", "i_star", "budget",
    "ptilde", "final_mean_belief", "belief_i_star", "nonlearning_count", "iterations",
)
RECORD_TYPES = (str, int, str, int, int, int, int, float, float, float, int, int)


def write_records(path, records) -> None:
    write_csv(path, RECORD_HEADER, ([r.row()[k] for k in RECORD_HEADER] for r in records))


def read_records(path) -> list[dict]:
    out = []
    for lineno, row in enumerate(read_csv(path, RECORD_HEADER), start=2):
        if len(row) != len(RECORD_HEADER):
            raise DataFormatError(f"{path}:{lineno}: expected {len(RECORD_HEADER)} fields")
        try:
            out.append({k: cast(v) for k, cast, v in zip(RECORD_HEADER, RECORD_TYPES, row)})
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    return out


RECORD_TRAJECTORY_HEADER = ("strategy", "trial", "t", "mean_belief", "std_belief", "belief_i_star")


def write_record_trajectories(path, records) -> None:
    def rows():
        for r in records:
            for t in range(r.mean_trajectory.size):
                yield (r.strategy, r.trial, t, r.mean_trajectory[t], r.std_trajectory[t], r.i_star_trajectory[t])

    write_csv(path, RECORD_TRAJECTORY_HEADER, rows())
