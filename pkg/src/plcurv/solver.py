"""Prescribed alpha-curvature by Newton's method on the conformal energy.

Three branches share one driver:

* ``convex``: pointwise ``alpha * rbar <= 0`` with ``alpha != 0``.  Damped
  Newton on ``E(u) - (1/alpha) sum(rbar * exp(alpha u))``, strictly convex.
* ``constrained``: ``alpha < 0`` with ``rbar <= 0``.  Newton steps from the
  KKT system of ``E`` restricted to ``sum(rbar * exp(alpha u)) = 2 pi chi``,
  each followed by a constant shift back onto that surface.
* ``gauss``: ``alpha = 0`` (or ``rbar == 0``).  Newton on ``K(u) = rbar``
  with the constants removed by a bordered system and ``sum(u) = 0``.

Every evaluation happens at a Delaunay triangulation of the current
metric, maintained by :class:`~plcurv.energy.EnergyState`.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from . import metric
from .delaunay import FlipCapExceeded, delaunay_certificate
from .energy import EnergyState

logger = logging.getLogger(__name__)

GAUSS_BONNET_TOL = 1e-9

REJECTIONS = {
    "gauss-bonnet": "alpha = 0 requires sum(rbar) = 2 pi chi",
    "cone-angle": "alpha = 0 requires rbar < 2 pi at every vertex",
    "sign-a": "sign condition (a): chi > 0 requires rbar positive somewhere",
    "sign-b": "sign condition (b): chi = 0 requires rbar to change sign unless rbar == 0",
    "sign-c": "sign condition (c): chi < 0 requires rbar negative somewhere",
    "alpha-sign": "chi > 0 with rbar > 0 is covered only for alpha < 0",
    "mixed-positive": "chi > 0, alpha != 0 is covered only for rbar > 0 everywhere",
    "mixed-negative": "chi < 0, alpha != 0 is covered only for rbar <= 0 everywhere",
    "mixed-flat": "chi = 0, alpha != 0 is covered only for rbar == 0",
}


class TargetRejected(ValueError):
    """The target lies outside the cases the solver is guaranteed to handle."""

    def __init__(self, classification):
        self.classification = classification
        super().__init__(classification.message)


class SolveError(RuntimeError):
    """Newton iteration failed; the partial report is attached."""

    def __init__(self, message, report):
        self.report = report
        super().__init__(message)


@dataclass(frozen=True)
class Classification:
    """Outcome of :func:`classify_target`.

    ``case`` is 1-4 when accepted, ``None`` when rejected; ``reason`` is a
    key of :data:`REJECTIONS` for rejections.
    """

    case: int | None
    reason: str | None = None
    detail: str = ""

    @property
    def accepted(self):
        return self.case is not None

    @property
    def message(self):
        if self.accepted:
            return f"case ({self.case})"
        msg = REJECTIONS[self.reason]
        return f"{msg} ({self.detail})" if self.detail else msg


def classify_target(alpha, rbar, chi):
    """Decide which existence case covers ``(alpha, rbar)`` on a surface.

    Returns a :class:`Classification`; a rejection names the first
    violated condition.  Cases:

    1. ``chi > 0``, ``alpha < 0``, ``rbar > 0``
    2. ``chi < 0``, ``alpha != 0``, ``rbar <= 0``, ``rbar`` not identically 0
    3. ``chi = 0``, ``alpha != 0``, ``rbar == 0``
    4. ``alpha = 0``, ``rbar < 2 pi``, ``sum(rbar) = 2 pi chi``
    """
    r = np.asarray(rbar, dtype=float)
    alpha = float(alpha)
    if alpha == 0.0:
        if np.any(r >= 2 * np.pi):
            i = int(np.flatnonzero(r >= 2 * np.pi)[0])
            return Classification(None, "cone-angle", f"rbar[{i}] = {r[i]:.17g}")
        total = float(np.sum(r))
        if abs(total - 2 * np.pi * chi) > GAUSS_BONNET_TOL:
            return Classification(
                None, "gauss-bonnet",
                f"sum(rbar) = {total:.17g}, 2 pi chi = {2 * np.pi * chi:.17g}",
            )
        return Classification(4)
    pos, neg = bool(np.any(r > 0)), bool(np.any(r < 0))
    if chi > 0:
        if not pos:
            return Classification(None, "sign-a")
        if alpha > 0:
            return Classification(None, "alpha-sign", f"alpha = {alpha:.17g}")
        if not np.all(r > 0):
            return Classification(None, "mixed-positive")
        return Classification(1)
    if chi < 0:
        if not neg:
            return Classification(None, "sign-c")
        if pos:
            return Classification(None, "mixed-negative")
        return Classification(2)
    if not pos and not neg:
        return Classification(3)
    if not (pos and neg):
        return Classification(None, "sign-b")
    return Classification(None, "mixed-flat")


@dataclass
class CurvatureTarget:
    """Validated target ``(alpha, rbar)`` with its existence case."""

    alpha: float
    rbar: np.ndarray
    case: int

    @classmethod
    def create(cls, alpha, rbar, chi):
        """Classify and wrap; raises :class:`TargetRejected` on rejection."""
        rbar = np.array(rbar, dtype=float)
        cl = classify_target(alpha, rbar, chi)
        if not cl.accepted:
            raise TargetRejected(cl)
        return cls(float(alpha), rbar, cl.case)

    @property
    def branch(self):
        if self.case in (3, 4):
            return "gauss"
        if self.alpha < 0 and self.case == 2:
            return "constrained"
        return "convex"


def constraint_value(u, alpha, rbar, chi):
    """``sum(rbar * exp(alpha u)) - 2 pi chi``."""
    u = np.asarray(u, dtype=float)
    return float(np.sum(np.asarray(rbar, dtype=float) * np.exp(alpha * u))
                 - 2 * np.pi * chi)


def constraint_shift(u, alpha, rbar, chi):
    """Constant ``c`` with ``u + c`` on the constraint surface."""
    if alpha == 0:
        raise ValueError("the constraint needs alpha != 0")
    s = float(np.sum(np.asarray(rbar, dtype=float) * np.exp(alpha * np.asarray(u, dtype=float))))
    target = 2 * np.pi * chi
    if s == 0 or target == 0 or (s > 0) != (target > 0):
        raise ValueError(
            f"cannot shift onto the constraint: sum(rbar exp(alpha u)) = {s:.17g}, "
            f"2 pi chi = {target:.17g}"
        )
    return float(np.log(target / s) / alpha)


def project_to_constraint(u, alpha, rbar, chi):
    """Shift ``u`` by a constant onto ``sum(rbar exp(alpha u)) = 2 pi chi``."""
    return np.asarray(u, dtype=float) + constraint_shift(u, alpha, rbar, chi)


def membership(u, alpha, rbar, chi):
    """Which of the sets ``A``, ``B``, ``C`` contains ``u`` (or ``"none"``).

    With ``s = sum(rbar exp(alpha u))`` and ``t = 2 pi chi``:
    ``A``: ``rbar <= 0``, not all zero, ``0 > s >= t``;
    ``B``: ``rbar > 0``, ``0 < s <= t``;
    ``C``: ``rbar <= 0``, not all zero, ``s <= t < 0``.
    """
    r = np.asarray(rbar, dtype=float)
    s = float(np.sum(r * np.exp(alpha * np.asarray(u, dtype=float))))
    t = 2 * np.pi * chi
    nonpositive = bool(np.all(r <= 0) and np.any(r < 0))
    if nonpositive and 0 > s >= t:
        return "A"
    if np.all(r > 0) and 0 < s <= t:
        return "B"
    if nonpositive and s <= t < 0:
        return "C"
    return "none"


@dataclass
class SolveConfig:
    """Newton parameters.

    ``max_step`` caps the max-norm of a trial step; ``start`` is the
    initial conformal factor (zeros when ``None``).
    """

    tol: float = 1e-10
    max_iter: int = 50
    shrink: float = 0.5
    armijo: float = 1e-4
    max_flips: int | None = None
    max_step: float = 2.0
    min_step: float = 1e-16
    start: np.ndarray | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")


@dataclass
class SolveReport:
    status: str
    case: int
    branch: str
    alpha: float
    residual: float
    iterations: list = field(default_factory=list)
    u: np.ndarray | None = None
    surface: object = None
    lengths: np.ndarray | None = None
    initial_flips: list = field(default_factory=list)
    path_flips: list = field(default_factory=list)
    constraint_history: list = field(default_factory=list)

    @property
    def converged(self):
        return self.status == "converged"

    @property
    def n_iterations(self):
        return len(self.iterations) - 1

    def to_dict(self):
        s = self.surface
        return {
            "status": self.status,
            "case": self.case,
            "branch": self.branch,
            "alpha": self.alpha,
            "residual": self.residual,
            "iterations": self.iterations,
            "u": None if self.u is None else self.u.tolist(),
            "faces": None if s is None else s.faces.tolist(),
            "lengths": None if self.lengths is None else self.lengths.tolist(),
            "initial_flips": [int(e) for e in self.initial_flips],
            "path_flips": [int(e) for e in self.path_flips],
            "constraint_history": self.constraint_history,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


class _Problem:
    """Merit function, residual and Newton system for one branch."""

    def __init__(self, target, chi):
        self.alpha = target.alpha
        self.rbar = target.rbar
        self.branch = target.branch
        self.chi = chi

    def q(self, u):
        return self.rbar * np.exp(self.alpha * u)

    def residual(self, state):
        if self.branch == "gauss":
            return state.gradient() - self.rbar
        return state.gradient() - self.q(state.u)

    def merit(self, state):
        E = state.energy()
        if self.branch == "convex":
            return E - np.sum(self.q(state.u)) / self.alpha
        if self.branch == "gauss":
            return E - float(self.rbar @ state.u)
        return E

    def direction(self, state, r):
        L = state.hessian()
        n = L.shape[0]
        if self.branch == "convex":
            D = sparse.diags(-self.alpha * self.q(state.u))
            return splinalg.spsolve((L + D).tocsc(), -r)
        if self.branch == "gauss":
            return _bordered_solve(L, np.ones(n), -r)
        q = self.q(state.u)
        grad_g = self.alpha * q
        W = L - sparse.diags(self.alpha * q)
        d = _bordered_solve(W, grad_g, -r)
        if not d @ (W @ d) > 0:
            logger.debug("KKT direction not a descent direction; using L")
            d = _bordered_solve(L, grad_g, -r)
        return d

    def slope(self, r, d):
        # directional derivative of the merit along d; for the constrained
        # branch q . d = 0 on the tangent space, so K . d = r . d
        return float(r @ d)

    def settle(self, u):
        """Put a trial point back on the admissible set."""
        if self.branch == "constrained":
            return project_to_constraint(u, self.alpha, self.rbar, self.chi)
        if self.branch == "gauss":
            return u - np.mean(u)
        return u


def _bordered_solve(A, b, rhs):
    n = A.shape[0]
    b = sparse.csr_matrix(np.asarray(b, dtype=float).reshape(-1, 1))
    K = sparse.bmat([[A, b], [b.T, None]], format="csc")
    sol = splinalg.spsolve(K, np.concatenate([rhs, [0.0]]))
    return sol[:n]


def solve_prescribed(surface, lengths, target, config=None, *, raise_on_failure=True):
    """Find ``u`` with ``K(u) = rbar * exp(alpha u)`` (``K(u) = rbar`` if ``alpha = 0``).

    Parameters
    ----------
    surface, lengths
        Background PL metric.
    target : CurvatureTarget
    config : SolveConfig, optional
    raise_on_failure : bool
        Raise :class:`SolveError` (with the report attached) unless the
        iteration converged.

    Returns
    -------
    SolveReport
        Final ``u``, the Delaunay triangulation and scaled lengths of the
        solution metric, the flips that lead there and the iteration trace.
    """
    config = config or SolveConfig()
    chi = surface.euler_characteristic()
    if target.rbar.shape != (surface.n_vertices,):
        raise ValueError(f"expected {surface.n_vertices} target values, got {target.rbar.size}")
    prob = _Problem(target, chi)
    u0 = np.zeros(surface.n_vertices) if config.start is None else np.array(
        config.start, dtype=float)
    u0 = prob.settle(u0)
    report = SolveReport("running", target.case, target.branch, target.alpha, np.inf)

    def g_now(u):
        return constraint_value(u, prob.alpha, prob.rbar, chi)

    holder = {}
    try:
        holder["state"] = EnergyState(surface, lengths, u0, max_flips=config.max_flips)
        status = _newton(holder, prob, config, report, g_now)
    except FlipCapExceeded as exc:
        logger.warning("%s", exc)
        status = "flip_cap"
    state = holder.get("state")
    report.status = status
    if state is not None:
        report.u = state.u.copy()
        report.surface = state.surface
        report.lengths = state.lengths.copy()
        report.initial_flips = list(state.initial_flips)
        report.path_flips = [rec["edge"] for rec in state.flip_log]
    if raise_on_failure and not report.converged:
        raise SolveError(f"solve failed: {status}", report)
    return report


def _newton(holder, prob, config, report, g_now):
    # holder["state"] always points at the last accepted state
    state = holder["state"]
    merit = prob.merit(state)
    r = prob.residual(state)
    res = float(np.max(np.abs(r)))
    report.residual = res
    report.iterations.append(
        {"residual": res, "energy": merit, "step": 0.0, "flips": 0})
    if prob.branch == "constrained":
        report.constraint_history.append(g_now(state.u))
    for _ in range(config.max_iter):
        if res <= config.tol:
            return "converged"
        d = prob.direction(state, r)
        slope = prob.slope(r, d)
        if not slope < 0:
            return "line_search_failed"
        step = min(1.0, config.max_step / max(float(np.max(np.abs(d))), 1e-300))
        noise = 1e-12 * max(1.0, abs(merit))
        while True:
            if step < config.min_step:
                return "line_search_failed"
            trial = state.copy()
            n_before = len(trial.flip_log)
            trial.move_to(prob.settle(state.u + step * d))
            t_merit = prob.merit(trial)
            t_r = prob.residual(trial)
            t_res = float(np.max(np.abs(t_r)))
            if t_merit <= merit + config.armijo * step * slope:
                break
            # once the predicted decrease is below rounding of the merit
            # value, accept any step that reduces the residual
            if -step * slope <= noise and t_res < res:
                break
            step *= config.shrink
        state = holder["state"] = trial
        merit, r, res = t_merit, t_r, t_res
        report.residual = res
        report.iterations.append({
            "residual": res, "energy": merit, "step": step,
            "flips": len(state.flip_log) - n_before,
        })
        if prob.branch == "constrained":
            report.constraint_history.append(g_now(state.u))
        logger.debug("iter %d residual %.3e step %.3g", len(report.iterations) - 1, res, step)
    return "converged" if res <= config.tol else "max_iter"


@dataclass
class Verification:
    curvature_residual: float
    constraint_residual: float | None
    gauss_bonnet_residual: float
    non_delaunay_edges: list
    tol: float

    @property
    def ok(self):
        checks = [self.curvature_residual <= self.tol,
                  abs(self.gauss_bonnet_residual) <= self.tol]
        if self.constraint_residual is not None:
            checks.append(abs(self.constraint_residual) <= max(self.tol, 1e-9))
        return all(checks)

    def to_dict(self):
        return {
            "curvature_residual": self.curvature_residual,
            "constraint_residual": self.constraint_residual,
            "gauss_bonnet_residual": self.gauss_bonnet_residual,
            "non_delaunay_edges": self.non_delaunay_edges,
            "ok": self.ok,
        }


def verify_solution(surface, lengths, u, alpha, rbar, *, tol=1e-10):
    """Recompute the alpha-curvature of the metric reached from ``u``.

    ``surface, lengths`` is the background metric; the metric at ``u`` is
    rebuilt with Delaunay maintenance before measuring
    ``max |R_alpha(u) - rbar|``, the constraint value (``alpha != 0``), the
    Gauss-Bonnet residual and the Delaunay certificate.
    """
    u = np.asarray(u, dtype=float)
    rbar = np.asarray(rbar, dtype=float)
    if u.shape != (surface.n_vertices,) or rbar.shape != u.shape:
        raise ValueError(
            f"expected {surface.n_vertices} values for u and rbar, "
            f"got {u.size} and {rbar.size}"
        )
    state = EnergyState(surface, lengths, u)
    K = state.gradient()
    R = metric.alpha_curvature(K, u, alpha)
    chi = surface.euler_characteristic()
    g = constraint_value(u, alpha, rbar, chi) if alpha != 0 else None
    return Verification(
        curvature_residual=float(np.max(np.abs(R - rbar))),
        constraint_residual=g,
        gauss_bonnet_residual=metric.gauss_bonnet_residual(state.surface, state.lengths),
        non_delaunay_edges=delaunay_certificate(state.surface, state.lengths),
        tol=tol,
    )
