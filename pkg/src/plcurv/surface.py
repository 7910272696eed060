"""Combinatorial closed triangulated surfaces.

Connectivity is stored as a corner table: face ``f`` owns the halfedges
``3f``, ``3f+1`` and ``3f+2``; halfedge ``3f+c`` runs from ``faces[f, c]`` to
``faces[f, (c+1) % 3]`` and is opposite the corner ``(c+2) % 3``.  ``next`` is
therefore implicit, ``twin`` is an explicit fixed-point-free involution, and
every twin pair carries an edge index.  Nothing is keyed by vertex pairs, so
self-loops and parallel edges are represented without special cases.
"""

from __future__ import annotations

import json
import logging
import warnings
from collections import deque

import numpy as np

logger = logging.getLogger(__name__)

INTRINSIC_FORMAT = "plcurv-intrinsic"
INTRINSIC_VERSION = 1


class MeshError(ValueError):
    """Invalid or unsupported mesh input."""


class TriangleInequalityError(MeshError):
    """A face whose three lengths do not form a Euclidean triangle."""

    def __init__(self, face, lengths):
        self.face = int(face)
        self.lengths = tuple(float(x) for x in lengths)
        a, b, c = self.lengths
        super().__init__(
            f"triangle inequality violated on face {self.face}: "
            f"lengths ({a!r}, {b!r}, {c!r})"
        )


def _next(h):
    return 3 * (h // 3) + (h + 1) % 3


def _prev(h):
    return 3 * (h // 3) + (h + 2) % 3


class TriangulatedSurface:
    """Closed, connected, oriented triangulated surface.

    Parameters
    ----------
    n_vertices : int
        Number of vertices; vertices are ``0 .. n_vertices-1``.
    faces : array_like, shape (F, 3)
        Vertex at each corner, in counter-clockwise order.
    twin : array_like, shape (3F,)
        Opposite halfedge of every halfedge.
    edge : array_like, shape (3F,)
        Edge index of every halfedge; twins share an index.

    Instances are treated as immutable; operations that change the
    connectivity (edge flips) return new instances.
    """

    def __init__(self, n_vertices, faces, twin, edge, *, validate=True):
        self.n_vertices = int(n_vertices)
        self.faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
        self.twin = np.array(twin, dtype=np.int64).reshape(-1)
        self.edge = np.array(edge, dtype=np.int64).reshape(-1)
        for arr in (self.faces, self.twin, self.edge):
            arr.setflags(write=False)
        n_edges = int(self.edge.max()) + 1 if self.edge.size else 0
        order = np.argsort(self.edge, kind="stable")
        if self.edge.size != 2 * n_edges or np.any(
            self.edge[order] != np.repeat(np.arange(n_edges), 2)
        ):
            raise MeshError("every edge index must label exactly two halfedges")
        halfedges = order.reshape(-1, 2)
        halfedges.setflags(write=False)
        self.edge_halfedges = halfedges
        if validate:
            self._validate()

    # -- counts -----------------------------------------------------------

    @property
    def n_faces(self):
        return self.faces.shape[0]

    @property
    def n_edges(self):
        return self.edge_halfedges.shape[0]

    @property
    def n_halfedges(self):
        return self.twin.size

    @property
    def next(self):
        """Next halfedge within the same face, as an array."""
        return _next(np.arange(self.n_halfedges))

    @property
    def tail(self):
        """Origin vertex of every halfedge."""
        return self.faces.reshape(-1)

    @property
    def head(self):
        return self.faces.reshape(-1)[self.next]

    @property
    def edge_vertices(self):
        """Endpoints of every edge, shape (E, 2); equal for self-loops."""
        h = self.edge_halfedges[:, 0]
        return np.stack([self.tail[h], self.head[h]], axis=1)

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    def copy(self):
        return TriangulatedSurface(
            self.n_vertices, self.faces, self.twin, self.edge, validate=False
        )

    def __repr__(self):
        return (
            f"TriangulatedSurface(V={self.n_vertices}, E={self.n_edges}, "
            f"F={self.n_faces})"
        )

    # -- validation -------------------------------------------------------

    def _validate(self):
        nh = self.n_halfedges
        if nh == 0:
            raise MeshError("surface has no faces")
        if self.n_vertices < 1:
            raise MeshError("surface needs at least one vertex")
        if self.faces.min() < 0 or self.faces.max() >= self.n_vertices:
            raise MeshError("face references a vertex index out of range")
        twin = self.twin
        if twin.min() < 0 or twin.max() >= nh:
            raise MeshError("twin index out of range (open boundary?)")
        h = np.arange(nh)
        if np.any(twin == h):
            raise MeshError("twin map has a fixed point")
        if np.any(twin[twin] != h):
            raise MeshError("twin map is not an involution")
        if np.any(self.edge[twin] != self.edge):
            raise MeshError("twin halfedges carry different edge indices")
        if np.any(self.tail[twin] != self.head):
            raise MeshError("twin halfedges are not oppositely oriented")
        used = np.zeros(self.n_vertices, dtype=bool)
        used[self.faces.reshape(-1)] = True
        if not used.all():
            raise MeshError(
                f"vertex {int(np.flatnonzero(~used)[0])} is not used by any face"
            )
        self._check_connected()
        self._check_vertex_links()

    def _check_connected(self):
        nf = self.n_faces
        seen = np.zeros(nf, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            f = queue.popleft()
            for c in range(3):
                g = self.twin[3 * f + c] // 3
                if not seen[g]:
                    seen[g] = True
                    queue.append(g)
        if not seen.all():
            raise MeshError("surface is not connected")

    def _check_vertex_links(self):
        # Each vertex must have exactly one cycle of outgoing halfedges.
        nh = self.n_halfedges
        visited = np.zeros(nh, dtype=bool)
        cycles = np.zeros(self.n_vertices, dtype=np.int64)
        tail = self.tail
        for h0 in range(nh):
            if visited[h0]:
                continue
            cycles[tail[h0]] += 1
            h = h0
            while not visited[h]:
                visited[h] = True
                h = self.twin[_prev(h)]
        bad = np.flatnonzero(cycles != 1)
        if bad.size:
            raise MeshError(f"non-manifold vertex {int(bad[0])}")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_faces(cls, n_vertices, faces):
        """Build connectivity from a vertex-indexed face list.

        Edges are numbered in order of first appearance walking the faces
        and their corners.  Because twins are matched by vertex pairs, this
        constructor cannot express parallel edges or self-loops; use
        :func:`load_intrinsic` with explicit edges for those.
        """
        faces = np.asarray(faces, dtype=np.int64)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise MeshError("faces must be an (F, 3) array")
        directed = {}
        undirected = {}
        for f, tri in enumerate(faces):
            if len(set(tri.tolist())) != 3:
                raise MeshError(f"face {f} repeats a vertex")
            for c in range(3):
                i, j = int(tri[c]), int(tri[(c + 1) % 3])
                key = (min(i, j), max(i, j))
                undirected[key] = undirected.get(key, 0) + 1
                if undirected[key] > 2:
                    raise MeshError(
                        f"non-manifold edge ({key[0]}, {key[1]}) at face {f}: "
                        "more than two incident faces"
                    )
                if (i, j) in directed:
                    raise MeshError(
                        f"edge ({i}, {j}) traversed twice in the same direction "
                        f"at face {f}: surface is non-orientable or "
                        "inconsistently oriented"
                    )
                directed[(i, j)] = 3 * f + c
        nh = 3 * len(faces)
        twin = np.full(nh, -1, dtype=np.int64)
        edge = np.full(nh, -1, dtype=np.int64)
        n_edges = 0
        for h in range(nh):
            f, c = divmod(h, 3)
            i, j = int(faces[f, c]), int(faces[f, (c + 1) % 3])
            t = directed.get((j, i))
            if t is None:
                raise MeshError(f"boundary edge ({i}, {j}) at face {f}")
            twin[h] = t
            if edge[h] < 0:
                edge[h] = edge[t] = n_edges
                n_edges += 1
        return cls(n_vertices, faces, twin, edge)


def euler_characteristic(surface):
    """``|V| - |E| + |F|``."""
    return surface.euler_characteristic()


def check_triangle_inequalities(surface, lengths):
    """Raise :class:`TriangleInequalityError` for the first bad face."""
    lengths = np.asarray(lengths, dtype=float)
    if lengths.shape != (surface.n_edges,):
        raise MeshError(
            f"expected {surface.n_edges} edge lengths, got {lengths.shape}"
        )
    if not np.all(np.isfinite(lengths)) or np.any(lengths <= 0):
        e = int(np.flatnonzero(~(np.isfinite(lengths) & (lengths > 0)))[0])
        raise MeshError(f"edge {e} has non-positive length {lengths[e]!r}")
    fl = lengths[surface.edge].reshape(-1, 3)
    a, b, c = fl[:, 0], fl[:, 1], fl[:, 2]
    bad = (a + b <= c) | (b + c <= a) | (c + a <= b)
    if bad.any():
        f = int(np.flatnonzero(bad)[0])
        raise TriangleInequalityError(f, fl[f])


# -- OBJ ------------------------------------------------------------------


def load_obj(data):
    """Parse a triangle-only OBJ file.

    Only ``v x y z`` and ``f i j k`` records are read (``i/vt/vn`` index
    forms and negative indices are accepted); anything else is skipped with
    a warning.  Returns ``(surface, positions)``.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    verts = []
    faces = []
    skipped = set()
    for lineno, raw in enumerate(data.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "v":
            try:
                verts.append([float(x) for x in tok[1:4]])
            except ValueError as exc:
                raise MeshError(f"line {lineno}: bad vertex record") from exc
            if len(tok) < 4:
                raise MeshError(f"line {lineno}: vertex needs three coordinates")
        elif tok[0] == "f":
            if len(tok) != 4:
                raise MeshError(
                    f"line {lineno}: non-triangle face "
                    f"(face {len(faces)} has {len(tok) - 1} vertices)"
                )
            idx = []
            for t in tok[1:]:
                try:
                    k = int(t.split("/")[0])
                except ValueError as exc:
                    raise MeshError(f"line {lineno}: bad face index {t!r}") from exc
                k = k - 1 if k > 0 else len(verts) + k
                if not 0 <= k < len(verts):
                    raise MeshError(f"line {lineno}: face index {t} out of range")
                idx.append(k)
            faces.append(idx)
        else:
            skipped.add(tok[0])
    if skipped:
        warnings.warn(
            f"ignored OBJ records: {', '.join(sorted(skipped))}", stacklevel=2
        )
    if not faces:
        raise MeshError("OBJ contains no faces")
    positions = np.array(verts, dtype=float)
    surface = TriangulatedSurface.from_faces(len(verts), faces)
    return surface, positions


def edge_lengths_from_positions(surface, positions):
    ev = surface.edge_vertices
    return np.linalg.norm(positions[ev[:, 1]] - positions[ev[:, 0]], axis=1)


def save_obj(surface, positions):
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in np.asarray(positions, float).tolist()]
    lines += [f"f {i + 1} {j + 1} {k + 1}" for i, j, k in surface.faces]
    return "\n".join(lines) + "\n"


# -- intrinsic JSON -------------------------------------------------------


def intrinsic_to_dict(surface, lengths):
    lengths = np.asarray(lengths, dtype=float)
    edges = [
        [[int(h) // 3, int(h) % 3] for h in pair] for pair in surface.edge_halfedges
    ]
    return {
        "format": INTRINSIC_FORMAT,
        "version": INTRINSIC_VERSION,
        "vertices": surface.n_vertices,
        "faces": surface.faces.tolist(),
        "edges": edges,
        "edge_lengths": {str(e): float(l) for e, l in enumerate(lengths)},
    }


def save_intrinsic(surface, lengths):
    """Serialize ``(surface, lengths)`` to the intrinsic JSON format."""
    return json.dumps(intrinsic_to_dict(surface, lengths), indent=1) + "\n"


def intrinsic_from_dict(doc):
    try:
        n = int(doc["vertices"])
        faces = np.asarray(doc["faces"], dtype=np.int64)
        raw_lengths = doc["edge_lengths"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MeshError(f"malformed intrinsic document: {exc}") from exc
    if faces.ndim != 2 or faces.shape[1] != 3:
        raise MeshError("'faces' must be a list of vertex triples")
    if "edges" in doc:
        surface = _surface_from_edge_list(n, faces, doc["edges"])
    else:
        surface = TriangulatedSurface.from_faces(n, faces)
    if isinstance(raw_lengths, dict):
        try:
            lengths = np.array(
                [float(raw_lengths[str(e)]) for e in range(surface.n_edges)]
            )
        except KeyError as exc:
            raise MeshError(f"missing length for edge {exc.args[0]}") from exc
        if len(raw_lengths) != surface.n_edges:
            raise MeshError("edge_lengths has entries for unknown edges")
    else:
        lengths = np.asarray(raw_lengths, dtype=float)
    check_triangle_inequalities(surface, lengths)
    return surface, lengths


def _surface_from_edge_list(n, faces, edges):
    nh = 3 * len(faces)
    twin = np.full(nh, -1, dtype=np.int64)
    edge = np.full(nh, -1, dtype=np.int64)
    for e, pair in enumerate(edges):
        try:
            (f0, c0), (f1, c1) = pair
        except (TypeError, ValueError) as exc:
            raise MeshError(f"edge {e}: expected two [face, corner] pairs") from exc
        h0, h1 = 3 * int(f0) + int(c0), 3 * int(f1) + int(c1)
        for h in (h0, h1):
            if not 0 <= h < nh or not 0 <= int(c0) < 3 or not 0 <= int(c1) < 3:
                raise MeshError(f"edge {e}: halfedge out of range")
            if edge[h] >= 0:
                raise MeshError(f"edge {e}: halfedge {h} already assigned")
        if h0 == h1:
            raise MeshError(f"edge {e}: halfedge paired with itself")
        twin[h0], twin[h1] = h1, h0
        edge[h0] = edge[h1] = e
    if np.any(edge < 0):
        h = int(np.flatnonzero(edge < 0)[0])
        raise MeshError(f"halfedge (face {h // 3}, corner {h % 3}) has no edge")
    return TriangulatedSurface(n, faces, twin, edge)


def load_intrinsic(data):
    """Parse intrinsic JSON into ``(surface, lengths)``."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MeshError(f"intrinsic file is not valid JSON: {exc}") from exc
    return intrinsic_from_dict(doc)


def load_mesh(path):
    """Load ``.obj`` (lengths from positions) or intrinsic ``.json``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if str(path).lower().endswith(".obj"):
        surface, positions = load_obj(data)
        lengths = edge_lengths_from_positions(surface, positions)
        check_triangle_inequalities(surface, lengths)
        return surface, lengths
    return load_intrinsic(data)
