"""Point-cloud file readers: XYZ/CSV, ascii PLY, and OBJ vertex lines."""

from __future__ import annotations

import os

import numpy as np

__all__ = ["load_points", "load_xyz", "load_ply", "load_obj", "save_xyz"]


def load_points(path: str) -> np.ndarray:
    """Load point coordinates, dispatching on the file extension.

    ``.ply`` -> ascii PLY vertex positions, ``.obj`` -> ``v`` lines, anything
    else -> plain text with one point per line (whitespace or comma separated,
    ``#`` comments allowed).
    """
    ext = os.path.splitext(path)[1].lower()
    if ext == ".ply":
        return load_ply(path)
    if ext == ".obj":
        return load_obj(path)
    return load_xyz(path)


def load_xyz(path: str) -> np.ndarray:
    rows = []
    ncols = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.replace(",", " ").split()
            try:
                vals = [float(p) for p in parts]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: unparsable point line {body!r}") from exc
            if ncols is None:
                ncols = len(vals)
                if ncols not in (1, 2, 3):
                    raise ValueError(f"{path}: expected 1-3 columns, found {ncols}")
            elif len(vals) != ncols:
                raise ValueError(f"{path}:{lineno}: expected {ncols} columns, found {len(vals)}")
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no points found")
    return np.asarray(rows, dtype=float)


def load_ply(path: str) -> np.ndarray:
    """Read vertex positions from an ascii PLY file (other elements ignored)."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "ply":
            raise ValueError(f"{path}: not a PLY file")
        n_vertex = None
        props: list[str] = []
        in_vertex = False
        fmt = None
        for line in fh:
            tokens = line.split()
            if not tokens:
                continue
            if tokens[0] == "format":
                fmt = tokens[1]
            elif tokens[0] == "element":
                in_vertex = tokens[1] == "vertex"
                if in_vertex:
                    n_vertex = int(tokens[2])
            elif tokens[0] == "property" and in_vertex:
                props.append(tokens[-1])
            elif tokens[0] == "end_header":
                break
        if fmt != "ascii":
            raise ValueError(f"{path}: only ascii PLY is supported, got format {fmt!r}")
        if n_vertex is None:
            raise ValueError(f"{path}: no vertex element in header")
        try:
            cols = [props.index(name) for name in ("x", "y", "z")]
        except ValueError as exc:
            raise ValueError(f"{path}: vertex element lacks x/y/z properties") from exc
        pts = np.empty((n_vertex, 3))
        for i in range(n_vertex):
            parts = fh.readline().split()
            if len(parts) < len(props):
                raise ValueError(f"{path}: truncated vertex data at row {i}")
            pts[i] = [float(parts[c]) for c in cols]
    return pts


def load_obj(path: str) -> np.ndarray:
    pts = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("v "):
                parts = line.split()
                pts.append([float(parts[1]), float(parts[2]), float(parts[3])])
    if not pts:
        raise ValueError(f"{path}: no 'v' vertex lines found")
    return np.asarray(pts, dtype=float)


def save_xyz(path: str, points: np.ndarray) -> None:
    points = np.atleast_2d(points)
    with open(path, "w") as fh:
        for row in points:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
