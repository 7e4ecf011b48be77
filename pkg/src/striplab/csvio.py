"""Deterministic CSV emission and parsing for all artifact files.

Floats are written with repr, which round-trips and is stable across runs,
so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .truncation import GridFunction


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float) or isinstance(x, np.floating):
        return repr(float(x))
    return str(x)


def write_table(path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ConfigError(
                    f"row width {len(row)} does not match header width {len(header)}"
                )
            writer.writerow([fmt(x) for x in row])
    return path


def write_keyvalue(path, items: dict) -> Path:
    return write_table(path, ["key", "value"], [(k, v) for k, v in items.items()])


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise ConfigError(f"empty CSV file: {path}")
    return rows[0], rows[1:]


def read_keyvalue(path) -> dict[str, str]:
    header, rows = read_table(path)
    if header != ["key", "value"]:
        raise ConfigError(f"not a key/value CSV: {path}")
    return {k: v for k, v in rows}


def write_grid(path, gf: GridFunction) -> Path:
    """GridFunction as CSV: names, then nx,ny,dx,dy, then row-major samples.

    Vector components are interleaved per node within each row, so a row
    holds ny*ncomp values; ncomp is recovered from the row width on read.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["nx,ny,dx,dy"]
    lines.append(
        ",".join([str(gf.n1), str(gf.n2), repr(gf.spacing[0]), repr(gf.spacing[1])])
    )
    vals = gf.components()
    for i in range(gf.n1):
        lines.append(",".join(repr(float(x)) for x in vals[i].ravel()))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_grid(path) -> GridFunction:
    header, rows = read_table(path)
    if header != ["nx", "ny", "dx", "dy"] or not rows:
        raise ConfigError(f"not a grid CSV: {path}")
    n1, n2 = int(rows[0][0]), int(rows[0][1])
    d1, d2 = float(rows[0][2]), float(rows[0][3])
    data = rows[1:]
    if len(data) != n1:
        raise ConfigError(f"grid CSV {path}: expected {n1} sample rows, got {len(data)}")
    width = len(data[0])
    if width % n2 != 0:
        raise ConfigError(f"grid CSV {path}: row width {width} not a multiple of ny={n2}")
    ncomp = width // n2
    vals = np.array([[float(x) for x in row] for row in data])
    vals = vals.reshape(n1, n2, ncomp)
    if ncomp == 1:
        vals = vals[:, :, 0]
    return GridFunction(values=vals, spacing=(d1, d2))


def write_solution(path, fld) -> Path:
    """Strip solution nodes: node_id,x1,x2,y1,y2."""
    mesh = fld.mesh
    ids = np.arange(mesh.nnode)
    ix, iy = np.divmod(ids, mesh.ny + 1)
    rows = zip(ids, mesh.x1[ix], mesh.x2[iy], fld.y[:, 0], fld.y[:, 1])
    return write_table(path, ["node_id", "x1", "x2", "y1", "y2"], rows)


def write_elastica(path, sol) -> Path:
    rows = zip(sol.x, sol.theta, sol.kappa, sol.ybar[:, 0], sol.ybar[:, 1])
    return write_table(path, ["x1", "theta", "kappa", "ybar1", "ybar2"], rows)


def write_rotations(path, profile) -> Path:
    if profile.node_x is None:
        raise ConfigError("rotation profile has no node samples")
    rows = zip(profile.node_x, profile.node_theta)
    return write_table(path, ["x1", "theta_h"], rows)


def write_fields(path, G, E) -> Path:
    mesh = G.mesh
    header = ["x1", "x2"] + [f"G{i}{j}" for i in (1, 2) for j in (1, 2)]
    header += [f"E{i}{j}" for i in (1, 2) for j in (1, 2)]
    rows = (
        (
            mesh.qp_x[q, 0],
            mesh.qp_x[q, 1],
            *G.values[q].ravel(),
            *E.values[q].ravel(),
        )
        for q in range(mesh.nqp)
    )
    return write_table(path, header, rows)


def write_moments(path, G, E) -> Path:
    mesh = G.mesh
    Eb, Eh, Gh = E.bar(), E.hat(), G.hat()
    header = ["x1"]
    header += [f"barE{i}{j}" for i in (1, 2) for j in (1, 2)]
    header += [f"hatE{i}{j}" for i in (1, 2) for j in (1, 2)]
    header += ["hatG11"]
    rows = (
        (mesh.col_x[c], *Eb[c].ravel(), *Eh[c].ravel(), Gh[c, 0, 0])
        for c in range(mesh.ncol)
    )
    return write_table(path, header, rows)


def write_identities(path, rows_in) -> Path:
    rows = (r.as_tuple() for r in rows_in)
    return write_table(path, ["h", "r1", "r2", "r3", "r4", "r5"], rows)


def write_convergence(path, table) -> Path:
    return write_table(
        path, ["h", "theta_err_L2", "y_err_W12", "energy_over_h2"], table.rows()
    )
