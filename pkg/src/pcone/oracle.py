"""
Numerical normal-cone projections, independent of the closed forms.

Every routine minimizes ‖τ − η‖ over an explicit parameterization of the
normal cone by projected gradient descent. They are slow and meant for
verification only.
"""
import logging
import math
from typing import Sequence, Tuple

import numpy as np

from .config import ORACLE_MAX_ITER, ORACLE_STARTS, ORACLE_STEP_TOL
from .errors import ExcludedCaseError, OracleFailureError
from .tensor_core import SymTensor3, dot, outer, spectral
from .yield_domain import TrescaFunction, YieldDomain

logger = logging.getLogger(__name__)

_SQRT2 = math.sqrt(2.0)


def _stack(generators: Sequence[SymTensor3]) -> np.ndarray:
    return np.array([g.voigt for g in generators])


def _weighted_gram(rows: np.ndarray) -> np.ndarray:
    w = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])
    return (rows * w) @ rows.T


def _nnls_projected_gradient(
    gram: np.ndarray,
    rhs: np.ndarray,
    start: np.ndarray,
    project,
    scale: float,
    max_iter: int,
    step_tol: float,
) -> Tuple[np.ndarray, int]:
    """min ½cᵀGc − bᵀc over a closed convex set given by `project`."""
    lip = float(np.linalg.eigvalsh(gram)[-1])
    if lip <= 0.0:
        return np.zeros_like(rhs), 0
    c = project(start)
    for it in range(1, max_iter + 1):
        c_new = project(c - (gram @ c - rhs) / lip)
        delta = c_new - c
        c = c_new
        # step length measured in tensor space
        step = math.sqrt(max(float(delta @ gram @ delta), 0.0))
        if step < step_tol * scale:
            return c, it
    raise OracleFailureError("projected gradient did not converge", iterations=max_iter)


def oracle_cone_projection(
    generators: Sequence[SymTensor3],
    tau: SymTensor3,
    max_iter: int = ORACLE_MAX_ITER,
    step_tol: float = ORACLE_STEP_TOL,
) -> SymTensor3:
    """Projection of τ onto {Σ c_i g_i : c_i ≥ 0} by nonnegative least squares."""
    if not generators:
        return SymTensor3()
    rows = _stack(generators)
    gram = _weighted_gram(rows)
    rhs = np.array([dot(g, tau) for g in generators])
    coef, iterations = _nnls_projected_gradient(
        gram,
        rhs,
        np.zeros(len(generators)),
        lambda c: np.maximum(c, 0.0),
        max(1.0, tau.norm()),
        max_iter,
        step_tol,
    )
    logger.debug("cone oracle converged in %d iterations", iterations)
    return SymTensor3.from_voigt(coef @ rows)


def _project_psd2(p: np.ndarray) -> np.ndarray:
    """Nearest point with [[a, c/√2], [c/√2, b]] positive semidefinite."""
    a, b, c = p
    w, q = np.linalg.eigh(np.array([[a, c / _SQRT2], [c / _SQRT2, b]]))
    m = (q * np.maximum(w, 0.0)) @ q.T
    return np.array([m[0, 0], m[1, 1], _SQRT2 * m[0, 1]])


def oracle_degenerate_projection(
    v_m: np.ndarray,
    frame: np.ndarray,
    tau: SymTensor3,
    sign: float = 1.0,
    seed: int = 0,
    n_starts: int = ORACLE_STARTS,
    max_iter: int = ORACLE_MAX_ITER,
    step_tol: float = ORACLE_STEP_TOL,
) -> SymTensor3:
    """Projection onto {sign·(κ − tr(κ) v_m⊗v_m) : κ ⪰ 0, κ v_m = 0}.

    κ = x e_a⊗e_a + y e_b⊗e_b + z e_a⊙e_b over the orthonormal pair (e_a, e_b)
    spanning v_m's complement, with x, y ≥ 0 and z² ≤ 4xy. The search runs in
    the coordinates (x, y, z/√2), where that set is a Frobenius-isometric copy of
    the 2×2 PSD cone, from `n_starts` seeded starting points.
    """
    ea = frame[:, 0]
    eb = frame[:, 1]
    vv = outer(v_m)
    generators = [
        sign * (outer(ea) - vv),
        sign * (outer(eb) - vv),
        sign * _SQRT2 * outer(ea, eb),
    ]
    rows = _stack(generators)
    gram = _weighted_gram(rows)
    rhs = np.array([dot(g, tau) for g in generators])
    scale = max(1.0, tau.norm())
    rng = np.random.default_rng(seed)

    best = None
    best_obj = math.inf
    objectives = []
    for _ in range(n_starts):
        start = _project_psd2(rng.normal(scale=scale, size=3))
        p, _ = _nnls_projected_gradient(gram, rhs, start, _project_psd2, scale, max_iter, step_tol)
        obj = 0.5 * float(p @ gram @ p) - float(rhs @ p)
        objectives.append(obj)
        if obj < best_obj:
            best, best_obj = p, obj
    spread = max(objectives) - min(objectives)
    if spread > 1e-8 * scale * scale:
        logger.warning("degenerate oracle starts disagree by %.3e", spread)
    return SymTensor3.from_voigt(best @ rows)


def oracle_kkt_pair(
    mu1: float, mu2: float, max_iter: int = ORACLE_MAX_ITER, step_tol: float = ORACLE_STEP_TOL
) -> Tuple[float, float]:
    """Minimiser of (x+y−μ1−μ2)² + (x−μ1)² + (y−μ2)² over x, y ≥ 0."""
    gram = np.array([[4.0, 2.0], [2.0, 4.0]])
    s = mu1 + mu2
    rhs = np.array([2.0 * (s + mu1), 2.0 * (s + mu2)])
    xy, _ = _nnls_projected_gradient(
        gram,
        rhs,
        np.zeros(2),
        lambda c: np.maximum(c, 0.0),
        max(1.0, abs(mu1) + abs(mu2)),
        max_iter,
        step_tol,
    )
    return float(xy[0]), float(xy[1])


def oracle_normal_projection(
    domain: YieldDomain,
    sigma: SymTensor3,
    tau: SymTensor3,
    seed: int = 0,
    max_iter: int = ORACLE_MAX_ITER,
    n_starts: int = ORACLE_STARTS,
) -> SymTensor3:
    """Numerical P_N(τ) at σ for any supported saturation pattern."""
    sat = domain.saturation(sigma)
    if sat.empty:
        return SymTensor3()
    functions = [domain.functions[i] for i in sat.indices]
    if any(isinstance(f, TrescaFunction) for f in functions):
        if len(functions) > 1:
            raise ExcludedCaseError("a saturated Tresca constraint combined with other saturated constraints")
        dec = spectral(sigma, domain.eig_tol)
        if dec.is_distinct:
            return oracle_cone_projection([functions[0].gradient(sigma)], tau, max_iter)
        if dec.multiplicity[0] == (1, 2):
            v_m, frame, sign = dec.vector(3), dec.eigenvectors[:, :2], 1.0
        else:
            v_m, frame, sign = dec.vector(1), dec.eigenvectors[:, 1:], -1.0
        return oracle_degenerate_projection(
            v_m, frame, tau, sign=sign, seed=seed, n_starts=n_starts, max_iter=max_iter
        )
    return oracle_cone_projection([f.gradient(sigma) for f in functions], tau, max_iter)
