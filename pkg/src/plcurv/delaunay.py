"""Intrinsic Delaunay predicate, edge flips and Delaunay retriangulation.

All edge bookkeeping goes through halfedges, so flips that create or
consume self-loops and parallel edges need no special handling.
"""

import logging
from collections import deque

import numpy as np

from .metric import DegenerateTriangleError, corner_angles
from .surface import MeshError, TriangulatedSurface

logger = logging.getLogger(__name__)

FLIP_EPS = 1e-12


class FlipError(MeshError):
    """An edge that cannot be flipped (non-convex or folded quad)."""


class FlipCapExceeded(RuntimeError):
    """Too many flips; indicates numerical cycling."""


class Triangulation:
    """Mutable working copy of connectivity plus per-edge lengths.

    Used by :func:`make_delaunay` and the conformal energy state, which
    flip many times before handing out an immutable
    :class:`~plcurv.surface.TriangulatedSurface`.
    """

    def __init__(self, surface, lengths):
        self.n_vertices = surface.n_vertices
        self.faces = np.array(surface.faces)
        self.twin = np.array(surface.twin)
        self.edge = np.array(surface.edge)
        self.edge_halfedges = np.array(surface.edge_halfedges)
        self.lengths = np.array(lengths, dtype=float)

    @property
    def n_edges(self):
        return self.edge_halfedges.shape[0]

    def copy(self):
        new = Triangulation.__new__(Triangulation)
        new.n_vertices = self.n_vertices
        for name in ("faces", "twin", "edge", "edge_halfedges", "lengths"):
            setattr(new, name, getattr(self, name).copy())
        return new

    def surface(self):
        return TriangulatedSurface(
            self.n_vertices, self.faces, self.twin, self.edge, validate=False
        )

    def vertex(self, h):
        return int(self.faces[h // 3, h % 3])

    def quad(self, e):
        """Halfedges and vertices around edge ``e``.

        Returns ``(h0, h1, (i, j, k, l))`` where ``h0`` runs i -> j in the
        face with apex k and ``h1`` runs j -> i in the face with apex l.
        """
        h0, h1 = (int(h) for h in self.edge_halfedges[e])
        if h0 // 3 == h1 // 3:
            raise FlipError(f"edge {e} borders the same face on both sides")
        i, j = self.vertex(h0), self.vertex(_nxt(h0))
        k, l = self.vertex(_prv(h0)), self.vertex(_prv(h1))
        return h0, h1, (i, j, k, l)

    def quad_lengths(self, e, lengths=None):
        """``(e_len, l_jk, l_ki, l_il, l_lj)`` for edge ``e``."""
        L = self.lengths if lengths is None else lengths
        h0, h1 = (int(h) for h in self.edge_halfedges[e])
        ed = self.edge
        return (
            L[e], L[ed[_nxt(h0)]], L[ed[_prv(h0)]], L[ed[_nxt(h1)]], L[ed[_prv(h1)]]
        )

    def neighbour_edges(self, e):
        h0, h1 = (int(h) for h in self.edge_halfedges[e])
        ed = self.edge
        return [int(ed[_nxt(h0)]), int(ed[_prv(h0)]), int(ed[_nxt(h1)]),
                int(ed[_prv(h1)])]

    def opposite_angles(self, e):
        le, ljk, lki, lil, llj = self.quad_lengths(e)
        try:
            theta_k = corner_angles(le, ljk, lki)[0]
            theta_l = corner_angles(le, lil, llj)[0]
        except DegenerateTriangleError as exc:
            raise DegenerateTriangleError(
                f"degenerate face next to edge {e}: {exc}"
            ) from None
        return theta_k, theta_l

    def is_delaunay(self, e, eps=FLIP_EPS):
        if self.edge_halfedges[e, 0] // 3 == self.edge_halfedges[e, 1] // 3:
            # both opposite corners lie in one triangle: angle sum < pi
            return True
        tk, tl = self.opposite_angles(e)
        return tk + tl <= np.pi + eps

    def rewire(self, e):
        """Flip edge ``e`` combinatorially; its index is kept.

        Returns the apex pair ``(k, l)`` that the edge now joins.
        """
        h0, h1, (i, j, k, l) = self.quad(e)
        f0, f1 = h0 // 3, h1 // 3
        # old halfedges: jk = next(h0), ki = prev(h0), il = next(h1), lj = prev(h1)
        old = [_prv(h0), _nxt(h1), _prv(h1), _nxt(h0)]
        new = [3 * f0, 3 * f0 + 1, 3 * f1, 3 * f1 + 1]
        remap = dict(zip(old, new))
        old_twin = [int(self.twin[h]) for h in old]
        old_edge = [int(self.edge[h]) for h in old]
        self.faces[f0] = (k, i, l)
        self.faces[f1] = (l, j, k)
        for hn, t, x in zip(new, old_twin, old_edge):
            t = remap.get(t, t)
            self.twin[hn] = t
            self.twin[t] = hn
            self.edge[hn] = x
        a, b = 3 * f0 + 2, 3 * f1 + 2
        self.twin[a], self.twin[b] = b, a
        self.edge[a] = self.edge[b] = e
        pairs = {x: [remap.get(int(h), int(h)) for h in self.edge_halfedges[x]]
                 for x in set(old_edge)}
        for x, pair in pairs.items():
            self.edge_halfedges[x] = pair
        self.edge_halfedges[e] = (a, b)
        return k, l

    def flip(self, e):
        """Metric-preserving flip: new length from the planar embedding."""
        new_len = flipped_length(*self.quad_lengths(e), edge=e)
        self.rewire(e)
        self.lengths[e] = new_len
        return new_len


def _nxt(h):
    return 3 * (h // 3) + (h + 1) % 3


def _prv(h):
    return 3 * (h // 3) + (h + 2) % 3


def flipped_length(e, a, b, c, d, *, edge=None):
    """Length of the other diagonal of the quad glued along ``e``.

    The shared edge runs from (0, 0) to (e, 0).  The upper apex is at
    distance ``b`` from the origin and ``a`` from (e, 0); the lower apex
    at distance ``c`` from the origin and ``d`` from (e, 0).
    """
    x1 = (e * e + b * b - a * a) / (2 * e)
    y1 = np.sqrt(max(b * b - x1 * x1, 0.0))
    x2 = (e * e + c * c - d * d) / (2 * e)
    y2 = -np.sqrt(max(c * c - x2 * x2, 0.0))
    # the diagonal must cross the shared edge strictly inside
    x_cross = x1 + (x2 - x1) * y1 / (y1 - y2) if y1 - y2 > 0 else np.nan
    tol = 1e-14 * e
    if not (y1 > 0 and y2 < 0 and tol < x_cross < e - tol):
        # corners of the quad i, l, j, k
        ti1, tj1, tk = _angles_or_nan(a, b, e)
        ti2, tj2, tl = _angles_or_nan(d, c, e)
        raise FlipError(
            f"edge {edge}: quad is not strictly convex, corner angles "
            f"i={ti1 + ti2:.17g}, l={tl:.17g}, j={tj1 + tj2:.17g}, k={tk:.17g}"
        )
    return float(np.hypot(x1 - x2, y1 - y2))


def _angles_or_nan(opp_i, opp_j, opp_apex):
    try:
        return corner_angles(opp_i, opp_j, opp_apex)
    except DegenerateTriangleError:
        return (np.nan, np.nan, np.nan)


def ptolemy_length(e, a, b, c, d):
    """Diagonal from Ptolemy's relation (lengths as in :func:`flipped_length`).

    Agrees with :func:`flipped_length` exactly when the quad is inscribed
    in a circle.  Sides ``b`` (k-i) and ``d`` (l-j) are opposite, as are
    ``a`` (j-k) and ``c`` (i-l).
    """
    return (a * c + b * d) / e


def delaunay_margin(e, a, b, c, d):
    """``cos(theta_k) + cos(theta_l)`` written in lengths.

    Non-negative iff the edge is Delaunay.  Defined for any positive
    lengths, including those that fail the triangle inequality.
    """
    return (a * a + b * b - e * e) / (2 * a * b) + (c * c + d * d - e * e) / (2 * c * d)


# -- public functional API -------------------------------------------------


def is_delaunay_edge(surface, lengths, edge, eps=FLIP_EPS):
    """True iff the two angles opposite ``edge`` sum to at most ``pi + eps``."""
    return Triangulation(surface, lengths).is_delaunay(int(edge), eps)


def flip_edge(surface, lengths, edge):
    """Flip ``edge`` without changing the PL metric.

    Returns new ``(surface, lengths)``; the flipped edge keeps its index.
    """
    work = Triangulation(surface, lengths)
    work.flip(int(edge))
    return work.surface(), work.lengths


def make_delaunay(surface, lengths, *, max_flips=None, eps=FLIP_EPS):
    """Flip to an intrinsic Delaunay triangulation of the same PL metric.

    Returns ``(surface, lengths, flip_log)`` with the flipped edge indices
    in order.  Raises :class:`FlipCapExceeded` after ``100 * |E|`` flips.
    """
    work = Triangulation(surface, lengths)
    log = delaunay_flips(work, max_flips=max_flips, eps=eps)
    return work.surface(), work.lengths, log


def delaunay_flips(work, *, max_flips=None, eps=FLIP_EPS):
    """In-place Delaunay retriangulation of a :class:`Triangulation`."""
    if max_flips is None:
        max_flips = 100 * work.n_edges
    queue = deque(range(work.n_edges))
    queued = np.ones(work.n_edges, dtype=bool)
    log = []
    while queue:
        e = queue.popleft()
        queued[e] = False
        if work.is_delaunay(e, eps):
            continue
        if len(log) >= max_flips:
            raise FlipCapExceeded(f"exceeded {max_flips} flips")
        work.flip(e)
        log.append(e)
        for x in work.neighbour_edges(e):
            if not queued[x]:
                queued[x] = True
                queue.append(x)
    if log:
        logger.debug("made Delaunay with %d flips", len(log))
    return log


def delaunay_certificate(surface, lengths, eps=FLIP_EPS):
    """Edges violating the Delaunay condition (empty list if Delaunay)."""
    work = Triangulation(surface, lengths)
    return [e for e in range(work.n_edges) if not work.is_delaunay(e, eps)]
