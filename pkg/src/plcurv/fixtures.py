"""Small closed surfaces used by the tests, demos and CLI examples.

The shipped files under ``plcurv/data`` are produced by the builders here
(``python -m plcurv.fixtures`` rewrites them).
"""

from importlib import resources

import numpy as np

from .surface import (
    TriangulatedSurface,
    edge_lengths_from_positions,
    load_intrinsic,
    load_obj,
    save_intrinsic,
    save_obj,
)

FIXTURES = {
    "tetrahedron": "tetrahedron.obj",
    "icosahedron": "icosahedron.obj",
    "torus1v": "torus1v.json",
    "genus2": "genus2.json",
}


def data_path(name):
    return resources.files("plcurv") / "data" / FIXTURES[name]


def load_fixture(name):
    """Return ``(surface, lengths)`` for a named fixture."""
    raw = data_path(name).read_bytes()
    if FIXTURES[name].endswith(".obj"):
        surface, pos = load_obj(raw)
        return surface, edge_lengths_from_positions(surface, pos)
    return load_intrinsic(raw)


def _orient_outward(points, faces):
    centre = points.mean(axis=0)
    out = []
    for f in faces:
        p0, p1, p2 = points[list(f)]
        n = np.cross(p1 - p0, p2 - p0)
        out.append(list(f) if np.dot(n, p0 - centre) > 0 else [f[0], f[2], f[1]])
    return out


def tetrahedron():
    pts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    faces = _orient_outward(pts, [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]])
    return pts, faces


def icosahedron():
    from scipy.spatial import ConvexHull

    phi = (1 + np.sqrt(5)) / 2
    pts = []
    for s1 in (-1, 1):
        for s2 in (-1, 1):
            pts += [[0, s1, s2 * phi], [s1, s2 * phi, 0], [s2 * phi, 0, s1]]
    pts = np.array(pts, dtype=float)
    faces = [sorted(s) for s in ConvexHull(pts).simplices.tolist()]
    return pts, _orient_outward(pts, sorted(faces))


def one_vertex_torus(side=1.0):
    """Square torus with one vertex, cut along a diagonal.

    With all three lengths equal the two triangles are equilateral and the
    torus is flat.
    """
    faces = [[0, 0, 0], [0, 0, 0]]
    # (face, corner) halfedges: bottom = top, left = right, diagonal
    twin = [4, 5, 3, 2, 0, 1]
    edge = [0, 1, 2, 2, 0, 1]
    surface = TriangulatedSurface(1, faces, twin, edge)
    return surface, np.full(3, float(side))


def grid_torus(m=3, n=3, seed=None, jitter=0.0, basis=None):
    """Flat ``m`` by ``n`` lattice torus split along diagonals.

    ``basis`` holds the two lattice vectors as rows (unit square by
    default; ``[[1, 0], [-0.5, sqrt(3)/2]]`` gives equilateral triangles).
    With ``jitter > 0`` each vertex is moved in the lattice coordinates
    before measuring, which keeps the torus flat but makes it irregular.
    Returns ``(surface, lengths)``.
    """
    def vid(i, j):
        return (i % m) * n + (j % n)

    faces = []
    for i in range(m):
        for j in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            faces += [[a, b, c], [a, c, d]]
    surface = TriangulatedSurface.from_faces(m * n, faces)
    rng = np.random.default_rng(seed)
    offset = rng.uniform(-jitter, jitter, size=(m * n, 2))
    ev = surface.edge_vertices
    # unwrap each edge by the shortest lattice displacement of its ends
    ij = np.array([(v // n, v % n) for v in range(m * n)], dtype=float)
    delta = ij[ev[:, 1]] - ij[ev[:, 0]]
    delta = (delta + [m / 2, n / 2]) % [m, n] - [m / 2, n / 2]
    vec = delta + offset[ev[:, 1]] - offset[ev[:, 0]]
    if basis is not None:
        vec = vec @ np.asarray(basis, dtype=float)
    return surface, np.hypot(vec[:, 0], vec[:, 1])


def genus2_block(seed=7, jitter=0.12):
    """Boundary of a 5x3x1 slab of unit cubes with two square holes.

    Vertex positions are jittered so that no quad is inscribed in a circle.
    """
    cells = {(x, y) for x in range(5) for y in range(3)} - {(1, 1), (3, 1)}
    index = {}
    quads = []

    def vid(p):
        if p not in index:
            index[p] = len(index)
        return index[p]

    for x, y in sorted(cells):
        # top and bottom
        quads.append(([(x, y, 1), (x + 1, y, 1), (x + 1, y + 1, 1), (x, y + 1, 1)], (0, 0, 1)))
        quads.append(([(x, y, 0), (x, y + 1, 0), (x + 1, y + 1, 0), (x + 1, y, 0)], (0, 0, -1)))
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            if (x + dx, y + dy) in cells:
                continue
            if dx:
                xf = x + (1 if dx > 0 else 0)
                q = [(xf, y, 0), (xf, y + 1, 0), (xf, y + 1, 1), (xf, y, 1)]
            else:
                yf = y + (1 if dy > 0 else 0)
                q = [(x, yf, 0), (x + 1, yf, 0), (x + 1, yf, 1), (x, yf, 1)]
            quads.append((q, (dx, dy, 0)))
    faces = []
    for n, (q, normal) in enumerate(quads):
        p = np.array(q, dtype=float)
        if np.dot(np.cross(p[1] - p[0], p[2] - p[0]), normal) < 0:
            q = q[::-1]
        ids = [vid(c) for c in q]
        if n % 2:
            faces += [[ids[0], ids[1], ids[2]], [ids[0], ids[2], ids[3]]]
        else:
            faces += [[ids[1], ids[2], ids[3]], [ids[1], ids[3], ids[0]]]
    pts = np.array(sorted(index, key=index.get), dtype=float)
    rng = np.random.default_rng(seed)
    pts = pts + rng.uniform(-jitter, jitter, size=pts.shape)
    return pts, faces


def write_data(directory):
    from pathlib import Path

    d = Path(directory)
    for name, builder in (("tetrahedron", tetrahedron), ("icosahedron", icosahedron)):
        pts, faces = builder()
        surf = TriangulatedSurface.from_faces(len(pts), faces)
        (d / FIXTURES[name]).write_text(save_obj(surf, pts))
    surf, lengths = one_vertex_torus()
    (d / FIXTURES["torus1v"]).write_text(save_intrinsic(surf, lengths))
    pts, faces = genus2_block()
    surf = TriangulatedSurface.from_faces(len(pts), faces)
    (d / FIXTURES["genus2"]).write_text(
        save_intrinsic(surf, edge_lengths_from_positions(surf, pts))
    )


if __name__ == "__main__":
    write_data(resources.files("plcurv") / "data")
