"""Plain-text outputs: long-format trajectory CSV and mesh snapshots."""
import os

import numpy as np

from hmcf.geometry import Immersion

MESH_MAGIC = "# hmcf-mesh"


def format_value(x, precision=17):
    return format(float(x), f".{precision}g")


def _write_text(path, text):
    d = os.path.dirname(os.fspath(path))
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def trajectory_rows(snapshots, quantities=None):
    """(t, quantity, value) rows from snapshots or (t, dict) pairs, in a fixed order."""
    rows = []
    for snap in snapshots:
        t, diag = (snap.t, snap.diagnostics) if hasattr(snap, "diagnostics") else snap
        keys = quantities if quantities is not None else sorted(diag)
        rows.extend((t, k, diag[k]) for k in keys if k in diag)
    return rows


def write_csv(path, header, rows, precision=17):
    """Rows of numbers and words; floats at ``precision`` significant digits."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                cells.append(format_value(v, precision))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    _write_text(path, "\n".join(lines) + "\n")


def write_trajectory_csv(path, snapshots, precision=17, quantities=None):
    """Long format ``t,quantity,value``, one row per snapshot and diagnostic."""
    rows = [(float(t), q, float(v)) for t, q, v in trajectory_rows(snapshots, quantities)]
    write_csv(path, ("t", "quantity", "value"), rows, precision)


def read_trajectory_csv(path):
    """Inverse of :func:`write_trajectory_csv`: ``{quantity: (t array, value array)}``."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "t,quantity,value":
            raise ValueError(f"unexpected header {header!r}")
        for line in fh:
            t, q, v = line.rstrip("\n").split(",")
            out.setdefault(q, ([], []))
            out[q][0].append(float(t))
            out[q][1].append(float(v))
    return {q: (np.array(t), np.array(v)) for q, (t, v) in out.items()}


def write_mesh_snapshot(path, im):
    """Header line then one ``v x y [z]`` line per grid point, row-major."""
    shape = ",".join(str(s) for s in im.grid_shape)
    lines = [f"{MESH_MAGIC} dim={im.dim_domain} shape={shape}"]
    for p in im.points.reshape(-1, im.points.shape[-1]):
        lines.append("v " + " ".join(format_value(x) for x in p))
    _write_text(path, "\n".join(lines) + "\n")


def read_mesh_snapshot(path, like=None):
    """Points array from a mesh file; wrapped in ``like``'s grid metadata if given."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if header[:2] != ["#", "hmcf-mesh"]:
            raise ValueError("not an hmcf mesh file")
        meta = dict(item.split("=", 1) for item in header[2:])
        dim = int(meta["dim"])
        shape = tuple(int(s) for s in meta["shape"].split(","))
        rows = [line.split()[1:] for line in fh if line.startswith("v ")]
    pts = np.array(rows, dtype=np.float64).reshape(shape + (dim + 1,))
    if like is None:
        return pts
    return like.with_points(pts) if isinstance(like, Immersion) else pts
