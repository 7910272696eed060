"""Edge-length metrics: corner angles, curvature and vertex scaling.

A discrete metric is a positive float array indexed by edge; a conformal
factor is a float array indexed by vertex.  All functions are pure.
"""

import numpy as np

from .surface import MeshError

DEGENERACY_TOL = 1e-14


class DegenerateTriangleError(MeshError):
    def __init__(self, message, face=None):
        self.face = face
        super().__init__(message)


def _sorted_half_angle(a, b, c):
    """Angles of a triangle with ``a >= b >= c``, opposite a, b, c.

    Stable half-angle tangents from the four Heron factors; the largest
    angle is taken as the supplement of the other two.
    """
    p1 = a + (b + c)
    p2 = c - (a - b)
    p3 = c + (a - b)
    p4 = a + (b - c)
    beta = 2.0 * np.arctan(np.sqrt((p2 * p4) / (p1 * p3)))
    gamma = 2.0 * np.arctan(np.sqrt((p2 * p3) / (p1 * p4)))
    alpha = np.pi - (beta + gamma)
    return alpha, beta, gamma


def corner_angles(a, b, c):
    """Angles opposite the sides ``a``, ``b``, ``c``.

    Accepts scalars or broadcastable arrays.  Raises
    :class:`DegenerateTriangleError` if any triangle fails the strict
    triangle inequality by more than ``1e-14`` times its longest side.
    """
    a, b, c = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (a, b, c)))
    scalar = a.ndim == 0
    sides = np.stack([np.atleast_1d(a), np.atleast_1d(b), np.atleast_1d(c)], axis=-1)
    if np.any(~np.isfinite(sides)) or np.any(sides <= 0):
        raise DegenerateTriangleError("edge lengths must be positive and finite")
    order = np.argsort(-sides, axis=-1, kind="stable")
    s = np.take_along_axis(sides, order, axis=-1)
    slack = s[..., 2] - (s[..., 0] - s[..., 1])
    bad = slack <= DEGENERACY_TOL * s[..., 0]
    if np.any(bad):
        idx = int(np.flatnonzero(bad.reshape(-1))[0])
        trip = sides.reshape(-1, 3)[idx]
        raise DegenerateTriangleError(
            f"degenerate triangle with sides {tuple(trip.tolist())}", face=idx
        )
    angs = np.stack(_sorted_half_angle(s[..., 0], s[..., 1], s[..., 2]), axis=-1)
    out = np.empty_like(angs)
    np.put_along_axis(out, order, angs, axis=-1)
    if scalar:
        return float(out[0, 0]), float(out[0, 1]), float(out[0, 2])
    return out[..., 0], out[..., 1], out[..., 2]


def face_lengths(surface, lengths):
    """Lengths per halfedge, shape (F, 3); column c joins corners c, c+1."""
    return np.asarray(lengths, dtype=float)[surface.edge].reshape(-1, 3)


def face_angles(surface, lengths):
    """Corner angles, shape (F, 3); column c is the angle at corner c."""
    fl = face_lengths(surface, lengths)
    try:
        # angle at corner c is opposite halfedge c+1
        a0, a1, a2 = corner_angles(fl[:, 1], fl[:, 2], fl[:, 0])
    except DegenerateTriangleError as exc:
        raise DegenerateTriangleError(
            f"face {exc.face}: {exc}", face=exc.face
        ) from None
    return np.stack([a0, a1, a2], axis=1)


def triangle_violations(surface, lengths):
    """Indices of faces whose lengths violate a strict triangle inequality."""
    fl = face_lengths(surface, lengths)
    s = np.sort(fl, axis=1)[:, ::-1]
    slack = s[:, 2] - (s[:, 0] - s[:, 1])
    return np.flatnonzero(slack <= DEGENERACY_TOL * s[:, 0])


def log_lengths(lengths):
    """Logarithmic lengths ``2 log l``."""
    return 2.0 * np.log(np.asarray(lengths, dtype=float))


def vertex_scale(surface, lengths, u):
    """``l_e * exp((u_i + u_j) / 2)`` for every edge ``e = {i, j}``.

    The result may violate triangle inequalities; see
    :func:`triangle_violations`.
    """
    u = np.asarray(u, dtype=float)
    ev = surface.edge_vertices
    return np.asarray(lengths, dtype=float) * np.exp(0.5 * (u[ev[:, 0]] + u[ev[:, 1]]))


def angle_sums(surface, lengths):
    angles = face_angles(surface, lengths)
    return np.bincount(
        surface.faces.reshape(-1), weights=angles.reshape(-1),
        minlength=surface.n_vertices,
    )


def curvature(surface, lengths):
    """Angle defect ``2*pi - (cone angle)`` at every vertex.

    A vertex that appears at several corners of one face collects every
    corner angle.
    """
    return 2.0 * np.pi - angle_sums(surface, lengths)


def gauss_bonnet_residual(surface, lengths):
    K = curvature(surface, lengths)
    return float(np.sum(K) - 2.0 * np.pi * surface.euler_characteristic())


def alpha_curvature(K, u, alpha):
    """``K_i / exp(alpha * u_i)``."""
    return np.asarray(K, dtype=float) / np.exp(alpha * np.asarray(u, dtype=float))


def face_areas(surface, lengths):
    """Triangle areas by the stable Heron formula."""
    s = np.sort(face_lengths(surface, lengths), axis=1)[:, ::-1]
    a, b, c = s[:, 0], s[:, 1], s[:, 2]
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(np.maximum(prod, 0.0))


def total_area(surface, lengths):
    return float(np.sum(face_areas(surface, lengths)))
