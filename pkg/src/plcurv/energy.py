"""Discrete conformal energy with Delaunay retriangulation.

The energy of a conformal factor ``u`` is assembled from per-triangle
closed forms built on Milnor's Lobachevsky function.  Its gradient is the
curvature vector and its Hessian is the cotangent Laplacian.  Moving ``u``
is done by :meth:`EnergyState.move_to`, which follows the straight segment
from the current factor and flips every edge at the parameter where it
stops being Delaunay, so the triangles stay Euclidean along the way and the
energy is continued through every flip.
"""

import logging

import numpy as np
from scipy import optimize, sparse, special

from . import metric
from .delaunay import (
    FLIP_EPS,
    FlipCapExceeded,
    Triangulation,
    _nxt,
    _prv,
    delaunay_flips,
    ptolemy_length,
)

logger = logging.getLogger(__name__)

# pi split in three for argument reduction; the first two have 30-bit
# mantissas so that n * part is exact for |n| < 2**23
_PI_HI = 3.141592651605606
_PI_MID = 1.9841871583270443e-09
_PI_LO = 1.034036596358821e-18

_WEIGHT_BITS = 42

_N_TERMS = 30
_K = np.arange(1, _N_TERMS + 1)
# Cl2(t) = t - t log|t| + sum_k zeta(2k) / (k (2k+1)) * t * (t / 2pi)^(2k), |t| <= pi
_CLAUSEN_COEFFS = special.zeta(2.0 * _K) / (_K * (2 * _K + 1) * (2 * np.pi) ** (2 * _K))


def _clausen2_reduced(t):
    t2 = t * t
    acc = np.zeros_like(t)
    for c in _CLAUSEN_COEFFS[::-1]:
        acc = acc * t2 + c
    acc = acc * t2
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = np.where(t == 0.0, 0.0, t - t * np.log(np.abs(t)))
    return lead + t * acc


def lobachevsky(x):
    """Milnor's Lobachevsky function ``-int_0^x log|2 sin t| dt``.

    Odd and pi-periodic.  The argument is reduced to ``[-pi/2, pi/2]`` and
    the value taken as half the Clausen function at twice the argument,
    summed from its Bernoulli-number power series (absolute error below
    1e-15).
    """
    x = np.asarray(x, dtype=float)
    n = np.round(x / np.pi)
    r = ((x - n * _PI_HI) - n * _PI_MID) - n * _PI_LO
    out = 0.5 * _clausen2_reduced(2.0 * r)
    return float(out) if out.ndim == 0 else out


def bps_f(x, y, z):
    """``a x + b y + c z + L(a) + L(b) + L(c)``.

    ``a, b, c`` are the angles opposite the sides ``e^x, e^y, e^z``.
    """
    a, b, c = metric.corner_angles(np.exp(x), np.exp(y), np.exp(z))
    return a * x + b * y + c * z + lobachevsky(a) + lobachevsky(b) + lobachevsky(c)


def _scaled_logs(ui, uj, uk, l_ij, l_jk, l_ki):
    return (
        np.log(l_ij) + 0.5 * (ui + uj),
        np.log(l_jk) + 0.5 * (uj + uk),
        np.log(l_ki) + 0.5 * (uk + ui),
    )


def triangle_energy_h(ui, uj, uk, l_ij, l_jk, l_ki):
    """Per-triangle term of the closed-form energy.

    ``2 f(x_ij, x_jk, x_ki) - pi (x_ij + x_jk + x_ki)`` with ``x`` the logs
    of the scaled lengths ``l_ij exp((u_i + u_j)/2)`` etc.
    """
    x_ij, x_jk, x_ki = _scaled_logs(ui, uj, uk, l_ij, l_jk, l_ki)
    return 2.0 * bps_f(x_ij, x_jk, x_ki) - np.pi * (x_ij + x_jk + x_ki)


def triangle_energy_F(ui, uj, uk, l_ij, l_jk, l_ki):
    """Per-triangle energy normalised to vanish at ``u = 0``.

    Equals ``-int_0^u (theta_i du_i + theta_j du_j + theta_k du_k)``.
    """
    x_ij, x_jk, x_ki = _scaled_logs(ui, uj, uk, l_ij, l_jk, l_ki)
    ti, tj, tk = metric.corner_angles(np.exp(x_jk), np.exp(x_ki), np.exp(x_ij))
    bi, bj, bk = metric.corner_angles(l_jk, l_ki, l_ij)
    L = lobachevsky
    g_ij, g_jk, g_ki = np.log(l_ij), np.log(l_jk), np.log(l_ki)
    return (
        -(ti * ui + tj * uj + tk * uk)
        + 2.0 * (L(ti) + L(tj) + L(tk))
        + 2.0 * (ti * g_jk + tj * g_ki + tk * g_ij)
        - 2.0 * (L(bi) + L(bj) + L(bk))
        - 2.0 * (bk * g_ij + bj * g_ki + bi * g_jk)
    )


def face_energy_terms(face_lengths):
    """Per-face energy terms from scaled lengths, shape (F, 3) -> (F,).

    Column ``c`` holds the side opposite corner ``c + 2``.
    """
    x = np.log(face_lengths)
    a0, a1, a2 = metric.corner_angles(face_lengths[:, 1], face_lengths[:, 2],
                                      face_lengths[:, 0])
    # angle opposite column 0 is at corner 2, column 1 at corner 0, ...
    opp = np.stack([a2, a0, a1], axis=1)
    return (2.0 * np.sum(opp * x, axis=1) + 2.0 * np.sum(lobachevsky(opp), axis=1)
            - np.pi * np.sum(x, axis=1))


class EnergyState:
    """Conformal factor, current Delaunay triangulation and energy offset.

    Parameters
    ----------
    surface, lengths
        Background PL metric.  It is first made Delaunay by metric-preserving
        flips; the resulting triangulation is the reference at ``u = 0``.
    u : array_like, optional
        Initial conformal factor, reached from ``0`` by :meth:`move_to`.
    max_flips : int, optional
        Safety cap on flips per :meth:`move_to` call (default ``100 |E|``).

    Notes
    -----
    ``self.tri.lengths`` holds background lengths for the current
    triangulation; the metric at ``u`` is their vertex scaling.  Every flip
    happens at a point where the two triangles are inscribed in a common
    circle, so the new background length follows from Ptolemy's relation
    and the energy offset ``E_new(u*) - E_old(u*)`` is accumulated in
    ``self.offset``.
    """

    def __init__(self, surface, lengths, u=None, *, max_flips=None):
        metric_check = metric.triangle_violations(surface, lengths)
        if metric_check.size:
            f = int(metric_check[0])
            raise metric.DegenerateTriangleError(f"face {f} is degenerate", face=f)
        self.reference_surface = surface
        self.reference_lengths = np.asarray(lengths, dtype=float)
        self.tri = Triangulation(surface, lengths)
        self.initial_flips = delaunay_flips(self.tri)
        self.u = np.zeros(surface.n_vertices)
        self.offset = 0.0
        self.flip_log = []
        self.max_flips = max_flips
        self._cache = {}
        if u is not None:
            self.move_to(u)

    def copy(self):
        new = EnergyState.__new__(EnergyState)
        new.reference_surface = self.reference_surface
        new.reference_lengths = self.reference_lengths
        new.tri = self.tri.copy()
        new.initial_flips = list(self.initial_flips)
        new.u = self.u.copy()
        new.offset = self.offset
        new.flip_log = list(self.flip_log)
        new.max_flips = self.max_flips
        new._cache = dict(self._cache)
        return new

    @property
    def n_vertices(self):
        return self.tri.n_vertices

    @property
    def surface(self):
        if "surface" not in self._cache:
            self._cache["surface"] = self.tri.surface()
        return self._cache["surface"]

    @property
    def lengths(self):
        """Edge lengths of the current metric in the current triangulation."""
        if "lengths" not in self._cache:
            self._cache["lengths"] = self._scaled(self.u)
        return self._cache["lengths"]

    def _edge_vertices(self):
        h = self.tri.edge_halfedges[:, 0]
        flat = self.tri.faces.reshape(-1)
        return flat[h], flat[_nxt(h)]

    def _scaled(self, u):
        vi, vj = self._edge_vertices()
        return self.tri.lengths * np.exp(0.5 * (u[vi] + u[vj]))

    def _margins(self, u):
        tri = self.tri
        ls = self._scaled(u)
        h0, h1 = tri.edge_halfedges[:, 0], tri.edge_halfedges[:, 1]
        ed = tri.edge
        e, a, b = ls, ls[ed[_nxt(h0)]], ls[ed[_prv(h0)]]
        c, d = ls[ed[_nxt(h1)]], ls[ed[_prv(h1)]]
        m = (a * a + b * b - e * e) / (2 * a * b) + (c * c + d * d - e * e) / (2 * c * d)
        m[h0 // 3 == h1 // 3] = np.inf
        return m

    def _edge_margin_fn(self, e, u0, du):
        tri = self.tri
        h0, h1, (i, j, k, l) = tri.quad(e)
        ed = tri.edge
        L = tri.lengths
        Le, La, Lb = L[e], L[ed[_nxt(h0)]], L[ed[_prv(h0)]]
        Lc, Ld = L[ed[_nxt(h1)]], L[ed[_prv(h1)]]

        def g(s):
            u = u0 + s * du
            ee = Le * np.exp(0.5 * (u[i] + u[j]))
            a = La * np.exp(0.5 * (u[j] + u[k]))
            b = Lb * np.exp(0.5 * (u[k] + u[i]))
            c = Lc * np.exp(0.5 * (u[i] + u[l]))
            d = Ld * np.exp(0.5 * (u[l] + u[j]))
            return ((a * a + b * b - ee * ee) / (2 * a * b)
                    + (c * c + d * d - ee * ee) / (2 * c * d))

        return g

    def _pair_energy(self, e, u):
        f0, f1 = (int(h) // 3 for h in self.tri.edge_halfedges[e])
        faces = [f0] if f0 == f1 else [f0, f1]
        fl = self._scaled(u)[self.tri.edge].reshape(-1, 3)[faces]
        return float(np.sum(face_energy_terms(fl)))

    def move_to(self, u_new, *, margin_eps=1e-13, scan_step=0.02):
        """Follow the segment to ``u_new``, flipping edges as they cross.

        Delaunay margins of all edges are scanned along the segment with
        steps of at most ``scan_step`` in the max-norm of ``u``; the first
        crossing inside a step is located by Brent's method.  Returns the
        list of edges flipped during this move.
        """
        u_new = np.asarray(u_new, dtype=float)
        if u_new.shape != self.u.shape:
            raise ValueError(f"expected {self.u.size} conformal factors")
        u0 = self.u
        du = u_new - u0
        span = float(np.max(np.abs(du))) if du.size else 0.0
        if span == 0.0:
            return []
        h = min(1.0, scan_step / span)
        cap = self.max_flips if self.max_flips is not None else 100 * self.tri.n_edges
        flipped = []
        t = 0.0
        while t < 1.0:
            s_prev = t
            hit = None
            while s_prev < 1.0:
                s = min(1.0, s_prev + h)
                bad = np.flatnonzero(self._margins(u0 + s * du) < -margin_eps)
                if bad.size:
                    hit = (s_prev, s, bad)
                    break
                s_prev = s
            if hit is None:
                break
            lo, hi, bad = hit
            best_t, best_e = np.inf, -1
            for e in bad:
                g = self._edge_margin_fn(int(e), u0, du)
                te = lo if g(lo) <= 0.0 else optimize.brentq(
                    g, lo, hi, xtol=1e-16, rtol=1e-15)
                if te < best_t:
                    best_t, best_e = te, int(e)
            if len(flipped) >= cap:
                raise FlipCapExceeded(f"exceeded {cap} flips moving the conformal factor")
            u_star = u0 + best_t * du
            before = self._pair_energy(best_e, u_star)
            args = self.tri.quad_lengths(best_e)
            self.tri.rewire(best_e)
            self.tri.lengths[best_e] = ptolemy_length(*args)
            after = self._pair_energy(best_e, u_star)
            self.offset += after - before
            flipped.append(best_e)
            self.flip_log.append({"edge": best_e, "t": float(best_t),
                                  "u": u_star.tolist(), "jump": after - before})
            t = best_t
        self.u = u_new.copy()
        self._cache = {}
        return flipped

    def is_delaunay(self, eps=FLIP_EPS):
        from .delaunay import delaunay_certificate

        return not delaunay_certificate(self.surface, self.lengths, eps)

    def face_angles(self):
        if "angles" not in self._cache:
            self._cache["angles"] = metric.face_angles(self.surface, self.lengths)
        return self._cache["angles"]

    def energy(self):
        fl = self.lengths[self.tri.edge].reshape(-1, 3)
        return float(np.sum(face_energy_terms(fl)) + 2.0 * np.pi * np.sum(self.u)
                     - self.offset)

    def gradient(self):
        return metric.curvature(self.surface, self.lengths)

    def hessian(self):
        angles = self.face_angles()
        cot = 1.0 / np.tan(angles)
        # halfedge c of a face is opposite corner c + 2
        w_half = 0.5 * cot[:, [2, 0, 1]].reshape(-1)
        n = self.n_vertices
        weights = np.bincount(self.tri.edge, weights=w_half, minlength=self.tri.n_edges)
        vi, vj = self._edge_vertices()
        keep = vi != vj
        vi, vj, w = vi[keep], vj[keep], weights[keep]
        # Round the weights to a common binary grid 2**-42 below the largest
        # one: every partial row sum is then exact, so rows sum to exactly
        # zero in any summation order.
        scale = float(np.max(np.abs(w))) if w.size else 0.0
        if scale > 0:
            q = 2.0 ** (np.ceil(np.log2(scale)) - _WEIGHT_BITS)
            w = np.round(w / q) * q
        off = sparse.coo_matrix(
            (np.concatenate([-w, -w]), (np.concatenate([vi, vj]), np.concatenate([vj, vi]))),
            shape=(n, n),
        ).tocsr()
        diag = -np.asarray(off.sum(axis=1)).reshape(-1)
        return (off + sparse.diags(diag)).tocsr()


def surface_energy(state):
    """Energy at the state's conformal factor, continued through flips."""
    return state.energy()


def energy_gradient(state):
    """Gradient of the energy: the curvature of the scaled metric."""
    return state.gradient()


def energy_hessian(state):
    """Cotangent Laplacian ``dK/du`` as a sparse symmetric matrix."""
    return state.hessian()


def replay_metric(surface, lengths, u, initial_flips, path_flips):
    """Rebuild the final ``(surface, lengths)`` of a conformal path.

    ``initial_flips`` are metric-preserving flips of the background and
    ``path_flips`` the edges flipped while moving ``u`` (each replaced by
    its Ptolemy length).  The result is the vertex scaling by ``u`` of the
    flipped background.
    """
    tri = Triangulation(surface, lengths)
    for e in initial_flips:
        tri.flip(int(e))
    for e in path_flips:
        args = tri.quad_lengths(int(e))
        tri.rewire(int(e))
        tri.lengths[int(e)] = ptolemy_length(*args)
    out = tri.surface()
    return out, metric.vertex_scale(out, tri.lengths, u)
