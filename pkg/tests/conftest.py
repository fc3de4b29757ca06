"""Shared geometry builders and fixtures for the test suite."""

import numpy as np
import pytest

from pointfreq import TriangleMesh

CUBE_TRIANGLES = np.array(
    [
        [0, 1, 3], [0, 3, 2],
        [4, 6, 7], [4, 7, 5],
        [0, 4, 5], [0, 5, 1],
        [2, 3, 7], [2, 7, 6],
        [0, 2, 6], [0, 6, 4],
        [1, 5, 7], [1, 7, 3],
    ],
    dtype=np.int64,
)


def cube_mesh(half=1.0, center=(0.0, 0.0, 0.0)):
    """Axis-aligned cube surface [-half, half]^3 (12 triangles)."""
    corners = np.array(
        [[x, y, z] for x in (-half, half) for y in (-half, half) for z in (-half, half)],
        dtype=np.float64,
    ) + np.asarray(center, dtype=np.float64)
    return TriangleMesh(corners, CUBE_TRIANGLES)


def square_mesh(side=1.0):
    """Unit square in the XY plane (two triangles)."""
    verts = np.array(
        [[0, 0, 0], [side, 0, 0], [side, side, 0], [0, side, 0]], dtype=np.float64
    )
    tris = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)
    return TriangleMesh(verts, tris)


def icosphere(subdivisions=3, radius=1.0):
    """Unit icosphere mesh by repeated 4-way triangle subdivision."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v) for v in verts]
    cache = {}

    def midpoint(a, b):
        key = (min(a, b), max(a, b))
        if key not in cache:
            mid = np.array(verts[a]) + np.array(verts[b])
            mid /= np.linalg.norm(mid)
            verts.append(tuple(mid))
            cache[key] = len(verts) - 1
        return cache[key]

    for _ in range(subdivisions):
        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return TriangleMesh(np.asarray(verts) * radius, np.asarray(faces, dtype=np.int64))


def sphere_cloud(n, seed=0, radius=1.0):
    """Uniform points on the sphere surface (Gaussian direction trick)."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * radius


def random_rotation(rng):
    """Uniform random rotation matrix (QR of a Gaussian matrix)."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def cube_edge_distance(points, half=1.0):
    """Distance from each point to the nearest of a cube's 12 edge segments."""
    pts = np.asarray(points, dtype=np.float64)
    h = half
    axes = np.eye(3)
    segments = []
    for free in range(3):
        fixed = [a for a in range(3) if a != free]
        for s0 in (-h, h):
            for s1 in (-h, h):
                start = np.zeros(3)
                start[fixed[0]], start[fixed[1]] = s0, s1
                start[free] = -h
                segments.append((start, 2 * h * axes[free]))
    best = np.full(len(pts), np.inf)
    for start, direction in segments:
        length2 = direction @ direction
        t = np.clip((pts - start) @ direction / length2, 0.0, 1.0)
        closest = start + t[:, None] * direction
        best = np.minimum(best, np.linalg.norm(pts - closest, axis=1))
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


DUPLICATING_PLUGIN = """\
#!/usr/bin/env python3
import sys

ratio = int(sys.argv[sys.argv.index("--ratio") + 1])
points = [line.split() for line in sys.stdin if line.strip()]
for p in points:
    for _ in range(ratio):
        sys.stdout.write(" ".join(p) + "\\n")
"""

ECHO_PLUGIN = """\
#!/usr/bin/env python3
import sys

for line in sys.stdin:
    if line.strip():
        sys.stdout.write(line)
"""

NOISY_PLUGIN = """\
#!/usr/bin/env python3
import sys

ratio = int(sys.argv[sys.argv.index("--ratio") + 1])
points = [[float(t) for t in line.split()] for line in sys.stdin if line.strip()]
n = len(points)

# displace one copy of 5% of the locations, anchors spread by farthest-point
n_out = max(1, (n * ratio) // 20)
chosen = [0]
dist = [sum((points[i][k] - points[0][k]) ** 2 for k in range(3)) for i in range(n)]
while len(chosen) < min(n_out, n):
    far = max(range(n), key=lambda i: dist[i])
    chosen.append(far)
    for i in range(n):
        d = sum((points[i][k] - points[far][k]) ** 2 for k in range(3))
        if d < dist[i]:
            dist[i] = d
displace = set(chosen[:n_out])

out = []
for idx, p in enumerate(points):
    copies = [list(p) for _ in range(ratio)]
    if idx in displace:
        x, y, z = copies[0]
        norm = (x * x + y * y + z * z) ** 0.5 or 1.0
        copies[0] = [x + 0.45 * x / norm, y + 0.45 * y / norm, z + 0.45 * z / norm]
    out.extend(copies)
for p in out:
    sys.stdout.write("%.17g %.17g %.17g\\n" % (p[0], p[1], p[2]))
"""

FAILING_PLUGIN = """\
#!/usr/bin/env python3
import sys

sys.stderr.write("deliberate failure\\n")
sys.exit(3)
"""


def write_plugin(tmp_path, source, name="plugin.py"):
    """Write a plugin script; returns the argv prefix to invoke it."""
    import sys

    path = tmp_path / name
    path.write_text(source)
    return (sys.executable, str(path))
