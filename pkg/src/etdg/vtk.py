"""Legacy ASCII VTK output for discontinuous nodal fields."""

import numpy as np

VTK_TRIANGLE = 5


def write_vtk(path, mesh, ref, fields, title="etdg"):
    """Write an unstructured grid with one triangle per element.

    Every element gets its own copy of all ``N_k`` nodes, so the point data
    is discontinuous across edges. The cell connects the three vertex
    nodes; higher-order nodes are written as unconnected points.

    Parameters
    ----------
    fields : dict name -> nodal vector of length ``n_elements * N_k``
    """
    pts = mesh.physical_points(ref.nodes)  # (Ne, nk, 2)
    ne, nk = pts.shape[:2]
    flat = pts.reshape(-1, 2)
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {ne * nk} double"]
    lines += [f"{x:.12e} {y:.12e} 0" for x, y in flat]
    lines.append(f"CELLS {ne} {4 * ne}")
    base = np.arange(ne) * nk
    lines += [f"3 {b} {b + 1} {b + 2}" for b in base]
    lines.append(f"CELL_TYPES {ne}")
    lines += [str(VTK_TRIANGLE)] * ne
    lines.append(f"POINT_DATA {ne * nk}")
    for name, vals in fields.items():
        vals = np.asarray(vals, dtype=float).ravel()
        if vals.size != ne * nk:
            raise ValueError(f"field {name!r} has {vals.size} values, expected {ne * nk}")
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += ["%.12e" % v for v in vals]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk_point_data(path, name):
    """Read back one scalar point field (used for round-trip checks)."""
    with open(path) as fh:
        tokens = fh.read().split("\n")
    for i, line in enumerate(tokens):
        if line.startswith(f"SCALARS {name} "):
            start = i + 2
            break
    else:
        raise KeyError(name)
    out = []
    for line in tokens[start:]:
        if not line or line.startswith("SCALARS"):
            break
        out.append(float(line))
    return np.array(out)
