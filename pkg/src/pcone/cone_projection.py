"""
Orthogonal splits τ = P_T(τ) + P_N(τ) onto the tangent and normal cones of a
yield domain at a stress σ.

Closed forms cover an interior σ, one or two saturated smooth constraints, and
the Tresca surface on and off its edges. :func:`project` picks the right one.
"""
import logging
import math
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .config import COLLINEARITY_TOL, EIG_TOL, GRADIENT_ZERO_TOL, SATURATION_TOL
from .errors import (
    CollinearityError,
    DegenerateGradientError,
    ExcludedCaseError,
    MembershipError,
    ValidationError,
)
from .tensor_core import SymTensor3, deviator, dot, identity, outer, spectral
from .yield_domain import TrescaFunction, YieldDomain

logger = logging.getLogger(__name__)

_SQRT2 = math.sqrt(2.0)


class ConeSplit(NamedTuple):
    tangent: SymTensor3
    normal: SymTensor3
    branch: str = ""


def split_interior(tau: SymTensor3) -> ConeSplit:
    return ConeSplit(tau, SymTensor3(), "interior")


def split_one(g1: SymTensor3, tau: SymTensor3, zero_tol: float = GRADIENT_ZERO_TOL) -> ConeSplit:
    """Split against the ray spanned by a single nonzero gradient."""
    gg = dot(g1, g1)
    if math.sqrt(gg) <= zero_tol:
        raise DegenerateGradientError(
            "saturated constraint has a vanishing gradient; the domain has no interior point there"
        )
    normal = (max(0.0, dot(tau, g1)) / gg) * g1
    return ConeSplit(tau - normal, normal, "one")


def project_onto_span(generators: Sequence[SymTensor3], tau: SymTensor3) -> SymTensor3:
    """Orthogonal projection of τ onto span{g_i} (least squares on the Gram matrix)."""
    if not generators:
        return SymTensor3()
    gram = np.array([[dot(a, b) for b in generators] for a in generators])
    rhs = np.array([dot(g, tau) for g in generators])
    coef, *_ = np.linalg.lstsq(gram, rhs, rcond=None)
    out = np.zeros(6)
    for c, g in zip(coef, generators):
        out += c * g.voigt
    return SymTensor3.from_voigt(out)


def split_two(
    g1: SymTensor3,
    g2: SymTensor3,
    tau: SymTensor3,
    collinearity_tol: float = COLLINEARITY_TOL,
    zero_tol: float = GRADIENT_ZERO_TOL,
) -> ConeSplit:
    """Split against the cone {a g1 + b g2 : a, b ≥ 0} of two non-collinear gradients.

    With ĝ_i = g_i/‖g_i‖, α_i = τ:ĝ_i and δ = ĝ1:ĝ2, the normal part is
    η1 ĝ1 + η2 ĝ2 when both η are non-negative, and the clamped projection on the
    ray with the larger α otherwise (ties go to the first ray).
    """
    n1 = g1.norm()
    n2 = g2.norm()
    if n1 <= zero_tol or n2 <= zero_tol:
        raise DegenerateGradientError("saturated constraint has a vanishing gradient")
    h1 = g1 / n1
    h2 = g2 / n2
    delta = dot(h1, h2)
    if 1.0 - abs(delta) <= collinearity_tol:
        raise CollinearityError(
            f"gradients are collinear (cos = {delta:.12f}); treat the constraints as a single one"
        )
    a1 = dot(tau, h1)
    a2 = dot(tau, h2)
    det = 1.0 - delta * delta
    eta1 = (a1 - delta * a2) / det
    eta2 = (a2 - delta * a1) / det
    if eta1 >= 0.0 and eta2 >= 0.0:
        normal = eta1 * h1 + eta2 * h2
    elif a1 >= a2:
        normal = max(a1, 0.0) * h1
    else:
        normal = max(a2, 0.0) * h2
    return ConeSplit(tau - normal, normal, "two")


def tresca_q(sigma: SymTensor3, tau: SymTensor3, eig_tol: float = EIG_TOL) -> float:
    """½ max(0, τ:(v1⊗v1 − v3⊗v3)), the plastic multiplier on a smooth Tresca face."""
    dec = spectral(sigma, eig_tol)
    return 0.5 * max(0.0, dot(tau, dec.dyad(1) - dec.dyad(3)))


def split_tresca_smooth(sigma: SymTensor3, tau: SymTensor3, eig_tol: float = EIG_TOL) -> ConeSplit:
    dec = spectral(sigma, eig_tol)
    if not dec.is_distinct:
        raise ExcludedCaseError(
            f"repeated eigenvalue {dec.eigenvalues.tolist()}; use split_tresca_degenerate"
        )
    # split_one with g = (v1⊗v1 − v3⊗v3)/2, |g|² = 1/2
    normal = tresca_q(sigma, tau, eig_tol) * (dec.dyad(1) - dec.dyad(3))
    return ConeSplit(tau - normal, normal, "tresca_smooth")


class DegenerateWorkspace(NamedTuple):
    """Data of a Tresca edge where two principal stresses coincide.

    ``m`` is the index (1 or 3) of the isolated eigenvalue and ``ell`` the index
    of the eigenvalue paired with λ2. ``basis`` spans the tensors that annihilate
    v_m. ``projected`` and ``mu`` are the projection of a deviator onto that
    subspace and its two eigenvalues (descending), filled by :meth:`with_tensor`.
    """

    m: int
    ell: int
    v_m: np.ndarray
    frame: np.ndarray
    basis: Tuple[SymTensor3, SymTensor3, SymTensor3]
    projected: Optional[SymTensor3] = None
    mu: Optional[Tuple[float, float]] = None
    mu_vectors: Optional[np.ndarray] = None

    def coordinates(self, tau: SymTensor3) -> np.ndarray:
        return np.array([dot(tau, w) for w in self.basis])

    def rebuild(self, coords) -> SymTensor3:
        out = np.zeros(6)
        for c, w in zip(coords, self.basis):
            out += c * w.voigt
        return SymTensor3.from_voigt(out)

    def project(self, tau: SymTensor3) -> SymTensor3:
        return self.rebuild(self.coordinates(tau))

    def with_tensor(self, tau: SymTensor3) -> "DegenerateWorkspace":
        coords = self.coordinates(deviator(tau))
        # the same tensor in the orthonormal frame of the 2-D subspace
        small = np.array([[coords[0], coords[2] / _SQRT2], [coords[2] / _SQRT2, coords[1]]])
        w, q = np.linalg.eigh(small)
        mu = (float(w[1]), float(w[0]))
        vectors = self.frame @ q[:, ::-1]
        return self._replace(projected=self.rebuild(coords), mu=mu, mu_vectors=vectors)


def build_degenerate_workspace(
    sigma: SymTensor3, tau: Optional[SymTensor3] = None, eig_tol: float = EIG_TOL
) -> DegenerateWorkspace:
    dec = spectral(sigma, eig_tol)
    groups = dec.multiplicity
    if len(groups) == 1:
        raise ExcludedCaseError("all three eigenvalues coincide; σ cannot lie on a Tresca surface with k > 0")
    if len(groups) == 3:
        raise ExcludedCaseError(
            f"eigenvalues {dec.eigenvalues.tolist()} are distinct; use split_tresca_smooth"
        )
    if groups[0] == (1, 2):
        m, ell = 3, 1
    else:
        m, ell = 1, 3
    others = [i for i in (1, 2, 3) if i != m]
    frame = np.column_stack([dec.vector(i) for i in others])
    basis = (
        dec.dyad(others[0]),
        dec.dyad(others[1]),
        _SQRT2 * outer(dec.vector(2), dec.vector(ell)),
    )
    ws = DegenerateWorkspace(m, ell, dec.vector(m), frame, basis)
    if tau is not None:
        ws = ws.with_tensor(tau)
    return ws


def kkt_branch(mu1: float, mu2: float) -> int:
    if mu1 >= 0.0 and mu2 >= 0.0:
        return 1
    if mu1 + 0.5 * mu2 <= 0.0 and mu2 + 0.5 * mu1 <= 0.0:
        return 2
    if mu2 < 0.0:
        return 3
    return 4


def kkt_pair(mu1: float, mu2: float) -> Tuple[float, float, float]:
    """Minimiser over x, y ≥ 0 of (x+y−μ1−μ2)² + (x−μ1)² + (y−μ2)², with z0 = 0."""
    branch = kkt_branch(mu1, mu2)
    if branch == 1:
        return (float(mu1), float(mu2), 0.0)
    if branch == 2:
        return (0.0, 0.0, 0.0)
    if branch == 3:
        return (float(mu1 + 0.5 * mu2), 0.0, 0.0)
    return (0.0, float(mu2 + 0.5 * mu1), 0.0)


def degenerate_ratio(mu1: float, mu2: float, sign: float = 1.0) -> float:
    """max(¼ + sign·¾·(μ1+μ2)/(|μ1|+|μ2|), 0), zero when both μ vanish."""
    total = abs(mu1) + abs(mu2)
    if total == 0.0:
        return 0.0
    return max(0.25 + sign * 0.75 * (mu1 + mu2) / total, 0.0)


def degenerate_alpha_beta(mu1: float, mu2: float) -> Tuple[float, float]:
    """(α, β) with normal = αP + βI − tr(αP + βI) v3⊗v3 on an m = 3 edge, P the projected deviator."""
    alpha = degenerate_ratio(mu1, mu2)
    beta = -min(mu1, mu2, 0.0) * alpha
    return alpha, beta


def _relative_zero(ws: DegenerateWorkspace, tau: SymTensor3) -> bool:
    scale = max(1.0, tau.norm())
    return abs(ws.mu[0]) + abs(ws.mu[1]) <= 1e-14 * scale


def _degenerate_m3_normal(ws: DegenerateWorkspace, tau: SymTensor3) -> SymTensor3:
    if _relative_zero(ws, tau):
        return SymTensor3()
    mu1, mu2 = ws.mu
    rho = degenerate_ratio(mu1, mu2)
    if rho == 0.0:
        return SymTensor3()
    lam_m = min(mu2, 0.0)
    s = ws.projected - lam_m * identity()
    return rho * (s - s.trace() * outer(ws.v_m))


def degenerate_normal_kkt(ws: DegenerateWorkspace) -> SymTensor3:
    """Normal part on an m = 3 edge built from the KKT minimiser instead of ρ."""
    x0, y0, _ = kkt_pair(*ws.mu)
    kappa = x0 * outer(ws.mu_vectors[:, 0]) + y0 * outer(ws.mu_vectors[:, 1])
    return kappa - kappa.trace() * outer(ws.v_m)


def split_tresca_degenerate(
    sigma: SymTensor3,
    tau: SymTensor3,
    eig_tol: float = EIG_TOL,
    k: Optional[float] = None,
    saturation_tol: float = SATURATION_TOL,
) -> ConeSplit:
    """Split on a Tresca edge (λ1 = λ2 > λ3 or λ1 > λ2 = λ3).

    The λ1 > λ2 = λ3 edge is reduced to the other one through
    P_N(σ)(τ) = −P_N(−σ)(−τ).
    """
    if k is not None:
        f = 0.5 * float(np.ptp(np.linalg.eigvalsh(sigma.matrix())))
        if abs(f - k) > saturation_tol * max(1.0, abs(k)):
            raise MembershipError("stress is not on the Tresca surface", max_violation=abs(f - k))
    ws = build_degenerate_workspace(sigma, eig_tol=eig_tol)
    if ws.m == 3:
        normal = _degenerate_m3_normal(ws.with_tensor(tau), tau)
    else:
        flipped = build_degenerate_workspace(-sigma, -tau, eig_tol=eig_tol)
        if flipped.m != 3:
            raise ExcludedCaseError("eigenvalue gaps are too close to the tolerance to classify the edge")
        normal = -_degenerate_m3_normal(flipped, -tau)
    return ConeSplit(tau - normal, normal, f"tresca_degenerate_m{ws.m}")


def split_saturated(domain: YieldDomain, sigma: SymTensor3, tau: SymTensor3, indices) -> ConeSplit:
    """Split for an already computed set of saturated constraint indices."""
    if not indices:
        return split_interior(tau)
    functions = [domain.functions[i] for i in indices]
    if any(isinstance(f, TrescaFunction) for f in functions):
        if len(functions) > 1:
            raise ExcludedCaseError("a saturated Tresca constraint combined with other saturated constraints")
        dec = spectral(sigma, domain.eig_tol)
        if dec.is_distinct:
            return split_tresca_smooth(sigma, tau, domain.eig_tol)
        return split_tresca_degenerate(sigma, tau, domain.eig_tol)
    if len(functions) == 1:
        return split_one(functions[0].gradient(sigma), tau)
    if len(functions) == 2:
        return split_two(functions[0].gradient(sigma), functions[1].gradient(sigma), tau)
    raise ExcludedCaseError(f"{len(functions)} simultaneously saturated constraints are not supported")


def project(domain: YieldDomain, sigma: SymTensor3, tau: SymTensor3) -> ConeSplit:
    """Tangent/normal split of τ at σ; the result's ``branch`` names the formula used."""
    if not isinstance(tau, SymTensor3) or not isinstance(sigma, SymTensor3):
        raise ValidationError("sigma and tau must be SymTensor3")
    sat = domain.saturation(sigma)
    result = split_saturated(domain, sigma, tau, sat.indices)
    logger.debug("project: branch=%s saturated=%s", result.branch, sat.indices)
    return result
