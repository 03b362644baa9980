"""File formats: matrix fixtures, trajectory CSV and JSON.

Matrix files are diff-able plain text: a header line ``<n> <kind>``, then
one or more n x n blocks of whitespace-separated entries.  Hermitian
entries are written as ``re+imi`` pairs (e.g. ``1.5-0.25i``).

Trajectory CSV columns are exactly::

    t, a_1..a_n, p_1..p_n, energy, min_gap, casimir_1..casimir_3

preceded by ``#``-prefixed metadata lines (seed, tolerances, the spin
sign convention in force).  Spin entries appear only in the JSON format,
as ``(i, j, re, im)`` tuples per sample; JSON round-trips losslessly.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import InputError
from .models import MatrixModel, model_from_name


def _format_entry(z, complex_entries: bool) -> str:
    if not complex_entries:
        return repr(float(np.real(z)))
    re, im = float(np.real(z)), float(np.imag(z))
    sign = "+" if im >= 0 else "-"
    return f"{re!r}{sign}{abs(im)!r}i"


def _parse_entry(tok: str, complex_entries: bool):
    if not complex_entries:
        return float(tok)
    return complex(tok.replace("i", "j").replace("I", "j"))


def write_matrix_file(path, matrices, kind: str) -> None:
    """Write one or more matrices of the named model kind to ``path``."""
    matrices = [np.asarray(M) for M in matrices]
    n = matrices[0].shape[0]
    model = model_from_name(kind, n)
    label = "hermitian" if model.is_complex else "symmetric"
    lines = [f"{n} {label}"]
    for M in matrices:
        if M.shape != (n, n):
            raise InputError("all matrices in one file must share the dimension")
        for row in M:
            lines.append(" ".join(_format_entry(z, model.is_complex) for z in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix_file(path, expect: int | None = None):
    """Read ``(matrices, model)`` from a matrix fixture file.

    ``expect`` asserts the number of matrix blocks in the file.
    """
    with open(path) as fh:
        rows = [ln.split("#", 1)[0].strip() for ln in fh]
    rows = [r for r in rows if r]
    if not rows:
        raise InputError(f"{path}: empty matrix file")
    head = rows[0].split()
    if len(head) != 2:
        raise InputError(f"{path}: header must be '<n> <kind>'")
    try:
        n = int(head[0])
    except ValueError:
        raise InputError(f"{path}: bad dimension {head[0]!r}")
    model = model_from_name(head[1], n)
    body = rows[1:]
    if len(body) % n != 0:
        raise InputError(f"{path}: expected blocks of {n} rows, got {len(body)} rows")
    count = len(body) // n
    if expect is not None and count != expect:
        raise InputError(f"{path}: expected {expect} matrix block(s), found {count}")
    mats = []
    for b in range(count):
        M = np.empty((n, n), dtype=model.dtype)
        for r in range(n):
            toks = body[b * n + r].split()
            if len(toks) != n:
                raise InputError(f"{path}: row {b * n + r + 2} must have {n} entries")
            try:
                M[r] = [_parse_entry(t, model.is_complex) for t in toks]
            except ValueError as exc:
                raise InputError(f"{path}: bad entry in row {b * n + r + 2}: {exc}")
        mats.append(M)
    return mats, model


CSV_PRECISION = 17


def _fmt(x) -> str:
    return repr(float(x))


def _meta_lines(meta: dict):
    return [f"# {key} = {meta[key]}" for key in sorted(meta)]


def trajectory_csv_lines(traj, meta_extra: dict | None = None):
    """CSV lines (no trailing newline) for a matrix-model trajectory."""
    n = traj.meta["n"]
    meta = dict(traj.meta)
    if meta_extra:
        meta.update(meta_extra)
    lines = _meta_lines(meta)
    cols = (
        ["t"]
        + [f"a_{k}" for k in range(1, n + 1)]
        + [f"p_{k}" for k in range(1, n + 1)]
        + ["energy", "min_gap"]
        + [f"casimir_{k}" for k in range(1, 4)]
    )
    lines.append(",".join(cols))
    for k, t in enumerate(traj.times):
        s = traj.states[k]
        row = (
            [_fmt(t)]
            + [_fmt(v) for v in s.a]
            + [_fmt(v) for v in s.p]
            + [_fmt(traj.energy[k]), _fmt(traj.min_gap[k])]
            + [_fmt(v) for v in traj.casimir[k]]
        )
        lines.append(",".join(row))
    return lines


def write_trajectory_csv(traj, path, meta_extra: dict | None = None) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(trajectory_csv_lines(traj, meta_extra)) + "\n")


def trajectory_to_dict(traj, meta_extra: dict | None = None) -> dict:
    """JSON-ready dict of a matrix-model trajectory, spin entries included."""
    meta = dict(traj.meta)
    if meta_extra:
        meta.update(meta_extra)
    meta["frozen_pairs"] = [list(pq) for pq in meta.get("frozen_pairs", [])]
    samples = []
    for k, t in enumerate(traj.times):
        s = traj.states[k]
        spin = []
        n = s.n
        for i in range(1, n):
            for j in range(i):
                y = s.Y[i, j]
                spin.append([i, j, float(np.real(y)), float(np.imag(y))])
        samples.append(
            {
                "t": float(t),
                "a": [float(v) for v in s.a],
                "p": [float(v) for v in s.p],
                "energy": float(traj.energy[k]),
                "min_gap": float(traj.min_gap[k]),
                "casimirs": [float(v) for v in traj.casimir[k]],
                "Y": spin,
            }
        )
    events = [
        {"kind": e.kind, "time": float(e.time),
         "info": {key: _jsonable(val) for key, val in e.info.items()}}
        for e in traj.events
    ]
    return {"meta": meta, "samples": samples, "events": events}


def _jsonable(val):
    if isinstance(val, (np.floating, float)):
        return float(val)
    if isinstance(val, (np.integer, int)):
        return int(val)
    if isinstance(val, (tuple, list, np.ndarray)):
        return [_jsonable(v) for v in val]
    return val


def write_trajectory_json(traj, path, meta_extra: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(trajectory_to_dict(traj, meta_extra), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_trajectory_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def polar_trajectory_csv_lines(traj, meta_extra: dict | None = None):
    """CSV lines for a polar trajectory (same column schema, section coords)."""
    d = traj.meta["section_dim"]
    meta = dict(traj.meta)
    if meta_extra:
        meta.update(meta_extra)
    lines = _meta_lines(meta)
    cols = (
        ["t"]
        + [f"a_{k}" for k in range(1, d + 1)]
        + [f"p_{k}" for k in range(1, d + 1)]
        + ["energy", "min_gap"]
        + [f"casimir_{k}" for k in range(1, 4)]
    )
    lines.append(",".join(cols))
    for k, t in enumerate(traj.times):
        row = (
            [_fmt(t)]
            + [_fmt(v) for v in traj.A0[k]]
            + [_fmt(v) for v in traj.p0[k]]
            + [_fmt(traj.energy[k]), _fmt(traj.min_root[k])]
            + [("nan" if np.isnan(v) else _fmt(v)) for v in traj.casimir[k]]
        )
        lines.append(",".join(row))
    return lines


def write_polar_trajectory_csv(traj, path, meta_extra: dict | None = None) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(polar_trajectory_csv_lines(traj, meta_extra)) + "\n")


def polar_trajectory_to_dict(traj, meta_extra: dict | None = None) -> dict:
    meta = dict(traj.meta)
    if meta_extra:
        meta.update(meta_extra)
    off = traj.rs.flat_offsets()
    samples = []
    for k, t in enumerate(traj.times):
        spin = []
        for r in range(traj.rs.n_roots):
            for i in range(traj.rs.multiplicities[r]):
                spin.append([int(r), int(i), float(traj.Yflat[k][off[r] + i])])
        samples.append(
            {
                "t": float(t),
                "a": [float(v) for v in traj.A0[k]],
                "p": [float(v) for v in traj.p0[k]],
                "energy": float(traj.energy[k]),
                "min_gap": float(traj.min_root[k]),
                "casimirs": [None if np.isnan(v) else float(v)
                             for v in traj.casimir[k]],
                "Y": spin,
            }
        )
    events = [
        {"kind": e.kind, "time": float(e.time),
         "info": {key: _jsonable(val) for key, val in e.info.items()}}
        for e in traj.events
    ]
    return {"meta": meta, "samples": samples, "events": events}


def write_polar_trajectory_json(traj, path, meta_extra: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(polar_trajectory_to_dict(traj, meta_extra), fh,
                  indent=1, sort_keys=True)
        fh.write("\n")


def billiard_to_dict(path_obj) -> dict:
    """JSON-ready dict of a billiard path: vertices plus the event log."""
    events = [
        {
            "time": float(e.time),
            "walls": [int(w) for w in e.walls],
            "v_in": [float(v) for v in e.v_in],
            "v_out": [float(v) for v in e.v_out],
        }
        for e in path_obj.events
    ]
    return {
        "times": [float(t) for t in path_obj.times],
        "vertices": [[float(v) for v in row] for row in path_obj.vertices],
        "events": events,
    }
