"""Point-cloud and mesh file I/O.

Formats
-------
XYZ : one point per line, three whitespace-separated reals. Blank lines and
    ``#`` comment lines are ignored; extra trailing columns are tolerated on
    read. Written with 9 significant digits (plus an optional fourth score
    column).
PLY : ASCII and binary-little-endian. Clouds need a ``vertex`` element with
    ``x y z`` properties (float or double); unknown properties are skipped.
    Binary output stores doubles, so round-trips are bit-exact.
OFF : standard header, triangles only; polygons with more than 3 vertices are
    fan-triangulated on read.
"""

from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .mesh import TriangleMesh
from .validation import check_points

CLOUD_FORMATS = ("xyz", "ply", "ply-ascii")

_PLY_SCALAR = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def _infer_format(path, explicit, for_mesh=False):
    if explicit is not None:
        return explicit
    suffix = Path(path).suffix.lower()
    if suffix in (".xyz", ".txt"):
        return "xyz"
    if suffix == ".ply":
        return "ply"
    if suffix == ".off":
        return "off"
    kind = "mesh" if for_mesh else "cloud"
    raise ValidationError(f"cannot infer {kind} format from {path!r}; pass format=")


def load_cloud(path, format=None):
    """Load a point cloud as an (N, 3) float64 array, in file order."""
    fmt = _infer_format(path, format)
    if fmt == "xyz":
        return _load_xyz(path)
    if fmt in ("ply", "ply-ascii"):
        points, _ = _load_ply(path)
        return points
    raise ValidationError(f"unknown cloud format {fmt!r}")


def save_cloud(points, path, format=None, scores=None):
    """Write a cloud; ``scores`` adds a fourth column (XYZ format only)."""
    pts = check_points(points)
    fmt = _infer_format(path, format)
    if scores is not None and fmt != "xyz":
        raise ValidationError("score column is only supported for the xyz format")
    if fmt == "xyz":
        _save_xyz(pts, path, scores)
    elif fmt == "ply":
        _save_ply(pts, path, binary=True)
    elif fmt == "ply-ascii":
        _save_ply(pts, path, binary=False)
    else:
        raise ValidationError(f"unknown cloud format {fmt!r}")


def load_mesh(path, format=None):
    """Load a triangle mesh from OFF or PLY (with a face element)."""
    fmt = _infer_format(path, format, for_mesh=True)
    if fmt == "off":
        return _load_off(path)
    if fmt in ("ply", "ply-ascii"):
        points, faces = _load_ply(path)
        if faces is None:
            raise ParseError("PLY file has no face element", path=path)
        return TriangleMesh(points, faces)
    raise ValidationError(f"unknown mesh format {fmt!r}")


def save_mesh(mesh, path):
    """Write a triangle mesh as ASCII OFF."""
    lines = ["OFF", f"{len(mesh.vertices)} {mesh.num_triangles} 0"]
    lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def has_faces(path):
    """True if ``path`` is a mesh format or a PLY containing a face element."""
    suffix = Path(path).suffix.lower()
    if suffix == ".off":
        return True
    if suffix != ".ply":
        return False
    try:
        header, _, _ = _read_ply_header(Path(path).read_bytes(), path)
    except ParseError:
        return False
    return any(name == "face" for name, _, _ in header)


# --- XYZ ---------------------------------------------------------------


def _load_xyz(path):
    rows = []
    with open(path, "r") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) < 3:
                raise ParseError(
                    f"expected at least 3 columns, got {len(tokens)}",
                    path=path, line=lineno,
                )
            try:
                rows.append((float(tokens[0]), float(tokens[1]), float(tokens[2])))
            except ValueError:
                raise ParseError("non-numeric coordinate", path=path, line=lineno)
    if not rows:
        raise ParseError("file contains no points", path=path)
    return np.asarray(rows, dtype=np.float64)


def _save_xyz(points, path, scores=None):
    if scores is not None:
        scores = np.asarray(scores, dtype=np.float64)
        if scores.shape != (len(points),):
            raise ValidationError("scores must have one value per point")
        lines = [
            f"{x:.9g} {y:.9g} {z:.9g} {s:.9g}"
            for (x, y, z), s in zip(points, scores)
        ]
    else:
        lines = [f"{x:.9g} {y:.9g} {z:.9g}" for x, y, z in points]
    Path(path).write_text("\n".join(lines) + "\n")


# --- PLY ---------------------------------------------------------------


def _read_ply_header(data, path):
    """Parse the header; returns (elements, binary?, data offset).

    elements: list of (name, count, properties) where a property is either
    ("scalar", dtype, name) or ("list", count_dtype, item_dtype, name).
    """
    end = data.find(b"end_header")
    if not data.startswith(b"ply") or end < 0:
        raise ParseError("not a PLY file", path=path)
    end = data.index(b"\n", end) + 1
    header_lines = data[:end].decode("ascii", errors="replace").splitlines()

    binary = None
    elements = []
    for lineno, line in enumerate(header_lines, start=1):
        tokens = line.split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "format":
            if tokens[1] == "ascii":
                binary = False
            elif tokens[1] == "binary_little_endian":
                binary = True
            else:
                raise ParseError(f"unsupported PLY format {tokens[1]!r}", path=path, line=lineno)
        elif tokens[0] == "element":
            elements.append((tokens[1], int(tokens[2]), []))
        elif tokens[0] == "property":
            if not elements:
                raise ParseError("property before any element", path=path, line=lineno)
            props = elements[-1][2]
            if tokens[1] == "list":
                props.append(("list", _PLY_SCALAR[tokens[2]], _PLY_SCALAR[tokens[3]], tokens[4]))
            else:
                if tokens[1] not in _PLY_SCALAR:
                    raise ParseError(f"unknown PLY type {tokens[1]!r}", path=path, line=lineno)
                props.append(("scalar", _PLY_SCALAR[tokens[1]], tokens[2]))
    if binary is None:
        raise ParseError("PLY header is missing a format line", path=path)
    return elements, binary, end


def _load_ply(path):
    data = Path(path).read_bytes()
    if not data.strip():
        raise ParseError("file is empty", path=path)
    elements, binary, offset = _read_ply_header(data, path)

    points = None
    faces = None
    if binary:
        cursor = offset
        for name, count, props in elements:
            if any(p[0] == "list" for p in props):
                values, cursor = _read_binary_list_element(data, cursor, count, props, path)
            else:
                dtype = np.dtype([(p[2], "<" + p[1]) for p in props])
                nbytes = dtype.itemsize * count
                if cursor + nbytes > len(data):
                    raise ParseError(f"truncated PLY element {name!r}", path=path)
                values = np.frombuffer(data, dtype=dtype, count=count, offset=cursor)
                cursor += nbytes
            points, faces = _collect_ply_element(name, props, values, points, faces, path)
    else:
        body = data[offset:].decode("ascii", errors="replace").split()
        pos = 0
        for name, count, props in elements:
            rows = []
            for _ in range(count):
                row = {}
                for prop in props:
                    if prop[0] == "list":
                        k = int(body[pos]); pos += 1
                        row[prop[3]] = [float(body[pos + i]) for i in range(k)]
                        pos += k
                    else:
                        row[prop[2]] = float(body[pos]); pos += 1
                rows.append(row)
            points, faces = _collect_ply_element(name, props, rows, points, faces, path)

    if points is None:
        raise ParseError("PLY file has no vertex element with x, y, z", path=path)
    return points, faces


def _read_binary_list_element(data, cursor, count, props, path):
    rows = []
    for _ in range(count):
        row = {}
        for prop in props:
            if prop[0] == "list":
                _, count_t, item_t, name = prop
                count_dtype = np.dtype("<" + count_t)
                k = int(np.frombuffer(data, count_dtype, 1, cursor)[0])
                cursor += count_dtype.itemsize
                item_dtype = np.dtype("<" + item_t)
                row[name] = np.frombuffer(data, item_dtype, k, cursor).tolist()
                cursor += item_dtype.itemsize * k
            else:
                _, typ, name = prop
                dtype = np.dtype("<" + typ)
                row[name] = float(np.frombuffer(data, dtype, 1, cursor)[0])
                cursor += dtype.itemsize
        rows.append(row)
        if cursor > len(data):
            raise ParseError("truncated PLY list element", path=path)
    return rows, cursor


def _collect_ply_element(name, props, values, points, faces, path):
    if name == "vertex":
        names = [p[2] for p in props if p[0] == "scalar"]
        if not all(axis in names for axis in "xyz"):
            raise ParseError("vertex element lacks x, y, z properties", path=path)
        if isinstance(values, np.ndarray):
            points = np.stack(
                [values["x"], values["y"], values["z"]], axis=1
            ).astype(np.float64)
        else:
            points = np.asarray(
                [[row["x"], row["y"], row["z"]] for row in values], dtype=np.float64
            )
        if points.shape[0] == 0:
            raise ParseError("vertex element is empty", path=path)
    elif name == "face":
        list_names = [p[-1] for p in props if p[0] == "list"]
        key = "vertex_indices" if "vertex_indices" in list_names else (
            "vertex_index" if "vertex_index" in list_names else None
        )
        if key is None:
            return points, faces
        tris = []
        for row in values:
            poly = [int(v) for v in row[key]]
            if len(poly) < 3:
                raise ParseError("face with fewer than 3 vertices", path=path)
            for i in range(1, len(poly) - 1):
                tris.append((poly[0], poly[i], poly[i + 1]))
        faces = np.asarray(tris, dtype=np.int64)
    return points, faces


def _save_ply(points, path, binary):
    n = len(points)
    if binary:
        header = (
            "ply\nformat binary_little_endian 1.0\n"
            f"element vertex {n}\n"
            "property double x\nproperty double y\nproperty double z\n"
            "end_header\n"
        )
        payload = np.ascontiguousarray(points, dtype="<f8").tobytes()
        Path(path).write_bytes(header.encode("ascii") + payload)
    else:
        header = (
            "ply\nformat ascii 1.0\n"
            f"element vertex {n}\n"
            "property double x\nproperty double y\nproperty double z\n"
            "end_header\n"
        )
        body = "\n".join(f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in points)
        Path(path).write_text(header + body + "\n")


def _load_off(path):
    raw = Path(path).read_text().splitlines()
    tokens = []
    for lineno, line in enumerate(raw, start=1):
        stripped = line.split("#", 1)[0].strip()
        if stripped:
            tokens.extend((lineno, tok) for tok in stripped.split())
    if not tokens:
        raise ParseError("file is empty", path=path)
    pos = 0
    if tokens[0][1].upper() == "OFF":
        pos = 1
    try:
        n_vert = int(tokens[pos][1])
        n_face = int(tokens[pos + 1][1])
        pos += 3  # vertex, face and (ignored) edge counts
        verts = np.empty((n_vert, 3))
        for i in range(n_vert):
            for axis in range(3):
                verts[i, axis] = float(tokens[pos][1]); pos += 1
        tris = []
        for _ in range(n_face):
            k = int(tokens[pos][1]); pos += 1
            poly = [int(tokens[pos + i][1]) for i in range(k)]
            pos += k
            if k < 3:
                raise ParseError("face with fewer than 3 vertices", path=path,
                                 line=tokens[pos - 1][0])
            for i in range(1, k - 1):
                tris.append((poly[0], poly[i], poly[i + 1]))
    except (ValueError, IndexError):
        line = tokens[min(pos, len(tokens) - 1)][0] if tokens else None
        raise ParseError("malformed OFF data", path=path, line=line)
    if not tris:
        raise ParseError("OFF file has no faces", path=path)
    return TriangleMesh(verts, np.asarray(tris, dtype=np.int64))
