"""
Yield domains C = {σ : f_i(σ) ≤ k_i} built from hydrostatic-invariant yield functions.

Von Mises is stored in squared form (f = J2, level k²) so that its gradient is the
deviator itself; ``reporting_value`` gives back sqrt(J2) for output. Membership
and saturation are always evaluated in the stored form.
"""
import logging
import math
from abc import ABCMeta, abstractmethod
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .config import CONVEXITY_SAMPLES, CONVEXITY_SEED, CONVEXITY_TOL, EIG_TOL, SATURATION_TOL
from .errors import MembershipError, NonDifferentiableError, ValidationError
from .tensor_core import (
    SymTensor3,
    deviator,
    dot,
    eigenvalues,
    grad_j2,
    grad_j3,
    invariants,
    lode_angle,
    spectral,
)
from .util.registry import CRITERIA

logger = logging.getLogger(__name__)

EVERYWHERE = "everywhere-differentiable"
OFF_DEGENERATE_SET = "differentiable-off-degenerate-set"


def _check_level(k, field="k"):
    try:
        k = float(k)
    except (TypeError, ValueError):
        raise ValidationError(f"expected a number, got {k!r}", field=field)
    if not math.isfinite(k) or k <= 0.0:
        raise ValidationError(f"must be positive, got {k}", field=field)
    return k


class YieldFunction(metaclass=ABCMeta):
    """One convex constraint f(σ) ≤ level."""

    name = "yield"
    smoothness = EVERYWHERE

    def __init__(self, level: float):
        self.level = float(level)

    @abstractmethod
    def value(self, sigma: SymTensor3) -> float:
        pass

    @abstractmethod
    def gradient(self, sigma: SymTensor3) -> SymTensor3:
        pass

    def reporting_value(self, sigma: SymTensor3) -> float:
        return self.value(sigma)

    @property
    def reporting_level(self) -> float:
        return self.level

    def is_differentiable_at(self, sigma: SymTensor3, eig_tol: float = EIG_TOL) -> bool:
        return True

    def deviator_scale_to_level(self, sigma: SymTensor3) -> Optional[float]:
        """Factor s with f(p I + s σ̄) = level, or None when no closed form exists."""
        return None

    def __repr__(self):
        return f"{self.__class__.__name__}(level={self.level:g})"


class VonMisesFunction(YieldFunction):
    name = "von_mises"

    def __init__(self, k: float):
        self.k = _check_level(k)
        super().__init__(self.k * self.k)

    def value(self, sigma):
        s = deviator(sigma)
        return 0.5 * dot(s, s)

    def gradient(self, sigma):
        return grad_j2(sigma)

    def reporting_value(self, sigma):
        return math.sqrt(max(self.value(sigma), 0.0))

    @property
    def reporting_level(self):
        return self.k

    def deviator_scale_to_level(self, sigma):
        j2 = self.value(sigma)
        if j2 <= 0.0:
            return None
        return self.k / math.sqrt(j2)

    def __repr__(self):
        return f"VonMisesFunction(k={self.k:g})"


class TrescaFunction(YieldFunction):
    name = "tresca"
    smoothness = OFF_DEGENERATE_SET

    def __init__(self, k: float):
        self.k = _check_level(k)
        super().__init__(self.k)

    def value(self, sigma):
        lam = eigenvalues(sigma)
        return 0.5 * float(lam[0] - lam[2])

    def is_differentiable_at(self, sigma, eig_tol=EIG_TOL):
        return spectral(sigma, eig_tol).is_distinct

    def gradient(self, sigma, eig_tol=EIG_TOL):
        return tresca_gradient(sigma, eig_tol)

    def deviator_scale_to_level(self, sigma):
        f = self.value(sigma)
        if f <= 0.0:
            return None
        return self.k / f

    def __repr__(self):
        return f"TrescaFunction(k={self.k:g})"


class InvariantPolynomial(YieldFunction):
    """f(σ) = Σ c · J2^p · J3^q with non-negative integer exponents."""

    name = "custom"

    def __init__(self, terms: Sequence[Sequence[float]], level: float, name: Optional[str] = None):
        parsed = []
        for i, term in enumerate(terms):
            try:
                c, p, q = term
            except (TypeError, ValueError):
                raise ValidationError(f"expected [coef, p, q], got {term!r}", field=f"terms[{i}]")
            if int(p) != p or int(q) != q or p < 0 or q < 0:
                raise ValidationError("exponents must be non-negative integers", field=f"terms[{i}]")
            parsed.append((float(c), int(p), int(q)))
        if not parsed:
            raise ValidationError("at least one term is required", field="terms")
        self.terms = tuple(parsed)
        if name:
            self.name = name
        super().__init__(_check_level(level, field="level"))

    def value(self, sigma):
        inv = invariants(sigma)
        return sum(c * inv.j2 ** p * inv.j3 ** q for c, p, q in self.terms)

    def gradient(self, sigma):
        inv = invariants(sigma)
        d2 = 0.0
        d3 = 0.0
        for c, p, q in self.terms:
            if p:
                d2 += c * p * inv.j2 ** (p - 1) * inv.j3 ** q
            if q:
                d3 += c * q * inv.j2 ** p * inv.j3 ** (q - 1)
        return d2 * grad_j2(sigma) + d3 * grad_j3(sigma)

    def __repr__(self):
        return f"InvariantPolynomial(terms={list(self.terms)}, level={self.level:g})"


class DeviatoricPlane(YieldFunction):
    """f(σ) = A:σ with A traceless, so that f(σ + pI) = f(σ)."""

    name = "plane"

    def __init__(self, normal, level: float, name: Optional[str] = None):
        if not isinstance(normal, SymTensor3):
            if not isinstance(normal, (list, tuple)) or len(normal) != 6:
                raise ValidationError(f"expected 6 Voigt components, got {normal!r}", field="normal")
            normal = SymTensor3.from_voigt(normal)
        self.normal = deviator(normal)
        if self.normal.norm() <= 1e-12 * max(1.0, normal.norm()):
            raise ValidationError("the deviator of the normal vanishes", field="normal")
        if name:
            self.name = name
        super().__init__(_check_level(level, field="level"))

    def value(self, sigma):
        return dot(self.normal, sigma)

    def gradient(self, sigma):
        return self.normal

    def deviator_scale_to_level(self, sigma):
        a = dot(self.normal, deviator(sigma))
        if a <= 0.0:
            return None
        return self.level / a

    def __repr__(self):
        return f"DeviatoricPlane(normal={self.normal.to_list()}, level={self.level:g})"


def convexity_defect(f: YieldFunction, a: SymTensor3, b: SymTensor3) -> float:
    """f(½(a+b)) − ½(f(a)+f(b)); positive values violate convexity."""
    return f.value(0.5 * (a + b)) - 0.5 * (f.value(a) + f.value(b))


def check_convexity(
    f: YieldFunction,
    field: str = "functions",
    samples: int = CONVEXITY_SAMPLES,
    seed: int = CONVEXITY_SEED,
) -> float:
    """Midpoint convexity of ``f`` on random pairs over several orders of magnitude.

    Returns the worst relative defect and raises ``ValidationError`` on ``field``
    when it exceeds ``CONVEXITY_TOL``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = -math.inf
    for _ in range(samples):
        scale = math.exp(rng.uniform(-3.0, 3.0))
        a = SymTensor3.from_voigt(scale * rng.normal(size=6))
        b = SymTensor3.from_voigt(scale * rng.normal(size=6))
        size = max(1.0, abs(f.value(a)), abs(f.value(b)))
        worst = max(worst, convexity_defect(f, a, b) / size)
    if worst > CONVEXITY_TOL:
        raise ValidationError(f"{f!r} is not convex (midpoint defect {worst:.3e})", field=field)
    return worst


class SaturationSet(NamedTuple):
    """Indices (0-based) of saturated constraints and the gaps f_i − k_i of all constraints."""

    indices: Tuple[int, ...]
    gaps: Tuple[float, ...]

    @property
    def empty(self) -> bool:
        return len(self.indices) == 0

    def __len__(self):
        return len(self.indices)


class YieldDomain(object):
    def __init__(
        self,
        functions: Sequence[YieldFunction],
        saturation_tol: float = SATURATION_TOL,
        eig_tol: float = EIG_TOL,
        check_slater: bool = True,
    ):
        if not functions:
            raise ValidationError("a yield domain needs at least one function", field="functions")
        if saturation_tol <= 0.0:
            raise ValidationError(f"must be positive, got {saturation_tol}", field="saturation_tol")
        self.functions: Tuple[YieldFunction, ...] = tuple(functions)
        self.saturation_tol = float(saturation_tol)
        self.eig_tol = float(eig_tol)
        if check_slater:
            self.check_slater()

    def __len__(self):
        return len(self.functions)

    def __repr__(self):
        return f"YieldDomain({list(self.functions)}, saturation_tol={self.saturation_tol:g})"

    @property
    def criterion(self) -> str:
        names = {f.name for f in self.functions}
        if names == {"von_mises"}:
            return "von_mises"
        if names == {"tresca"}:
            return "tresca"
        return "custom"

    def with_tolerance(self, saturation_tol: float) -> "YieldDomain":
        return YieldDomain(self.functions, saturation_tol, self.eig_tol, check_slater=False)

    def gaps(self, sigma: SymTensor3) -> List[float]:
        return [f.value(sigma) - f.level for f in self.functions]

    def membership(self, sigma: SymTensor3) -> float:
        return max(self.gaps(sigma))

    def reporting_violation(self, sigma: SymTensor3) -> float:
        """max_i (reported f_i − reported k_i), e.g. sqrt(J2) − k for Von Mises."""
        return max(f.reporting_value(sigma) - f.reporting_level for f in self.functions)

    def tolerance(self, i: int) -> float:
        return self.saturation_tol * max(1.0, abs(self.functions[i].level))

    def saturation(self, sigma: SymTensor3) -> SaturationSet:
        gaps = self.gaps(sigma)
        worst = 0.0
        saturated = []
        for i, gap in enumerate(gaps):
            tol = self.tolerance(i)
            if gap > tol:
                worst = max(worst, gap)
            elif abs(gap) <= tol:
                saturated.append(i)
        if worst > 0.0:
            raise MembershipError("stress lies outside the yield domain", max_violation=worst)
        return SaturationSet(tuple(saturated), tuple(gaps))

    def check_slater(self, point: Optional[SymTensor3] = None) -> None:
        point = SymTensor3() if point is None else point
        for i, gap in enumerate(self.gaps(point)):
            if not gap < 0.0:
                raise ValidationError(
                    f"point is not strictly inside constraint {i} (gap {gap:.3e}); "
                    "the domain has no interior point there",
                    field=f"functions[{i}]",
                )

    def convexity_defect(self, a: SymTensor3, b: SymTensor3) -> float:
        """max_i f_i(½(a+b)) − ½(f_i(a)+f_i(b)); positive values violate convexity."""
        return max(convexity_defect(f, a, b) for f in self.functions)


def saturation(domain: YieldDomain, sigma: SymTensor3) -> SaturationSet:
    return domain.saturation(sigma)


def membership(domain: YieldDomain, sigma: SymTensor3) -> float:
    return domain.membership(sigma)


def von_mises(k: float) -> VonMisesFunction:
    return VonMisesFunction(k)


def tresca(k: float) -> TrescaFunction:
    return TrescaFunction(k)


def tresca_gradient(sigma: SymTensor3, eig_tol: float = EIG_TOL) -> SymTensor3:
    """½(v1⊗v1 − v3⊗v3); undefined where two eigenvalues coincide."""
    dec = spectral(sigma, eig_tol)
    if not dec.is_distinct:
        raise NonDifferentiableError(
            f"Tresca function is not differentiable at eigenvalues {dec.eigenvalues.tolist()} "
            "(repeated eigenvalue); use the degenerate Tresca projection"
        )
    return 0.5 * (dec.dyad(1) - dec.dyad(3))


def tresca_from_invariants(sigma: SymTensor3) -> float:
    """sqrt(J2)·sin((π + φ0)/3), the Lode-angle form of ½(λ1 − λ3)."""
    inv = invariants(sigma)
    if inv.j2 <= 0.0:
        return 0.0
    phi0 = 3.0 * lode_angle(sigma)
    return math.sqrt(inv.j2) * math.sin((math.pi + phi0) / 3.0)


def tresca_symmetric_form(sigma: SymTensor3) -> float:
    lam = eigenvalues(sigma)
    return 0.25 * (abs(lam[0] - lam[1]) + abs(lam[1] - lam[2]) + abs(lam[0] - lam[2]))


def tresca_surrogate(sigma: SymTensor3, k: float) -> float:
    """4J2³ − 27J3² − 36k²J2² + 96k⁴J2 − 64k⁶.

    Smooth in σ but not equivalent to the Tresca criterion: it is non-positive on
    the Tresca domain and also at points outside it. Diagnostic use only.
    """
    inv = invariants(sigma)
    j2, j3 = inv.j2, inv.j3
    k2 = k * k
    return 4.0 * j2 ** 3 - 27.0 * j3 ** 2 - 36.0 * k2 * j2 ** 2 + 96.0 * k2 * k2 * j2 - 64.0 * k2 ** 3


@CRITERIA.register_with_name(module_name="von_mises")
def build_von_mises(k, **kwargs) -> YieldDomain:
    return YieldDomain([von_mises(k)], **kwargs)


@CRITERIA.register_with_name(module_name="tresca")
def build_tresca(k, **kwargs) -> YieldDomain:
    return YieldDomain([tresca(k)], **kwargs)


@CRITERIA.register_with_name(module_name="custom")
def build_custom(functions, **kwargs) -> YieldDomain:
    """Domain from function descriptors, each spot-checked for convexity.

    A descriptor is either a polynomial in (J2, J3), ``{"terms": [[c, p, q], ...], "level": k}``,
    or a deviatoric plane, ``{"normal": [6 Voigt components], "level": k}``.
    """
    if not isinstance(functions, (list, tuple)) or not functions:
        raise ValidationError("expected a non-empty list of function descriptors", field="functions")
    built = []
    for i, desc in enumerate(functions):
        field = f"functions[{i}]"
        if not isinstance(desc, dict):
            raise ValidationError(f"expected a mapping, got {desc!r}", field=field)
        unknown = set(desc) - {"terms", "normal", "level", "name"}
        if unknown:
            raise ValidationError(f"unknown fields {sorted(unknown)}", field=field)
        if ("terms" in desc) == ("normal" in desc) or "level" not in desc:
            raise ValidationError("level and exactly one of terms or normal are required", field=field)
        try:
            if "terms" in desc:
                f = InvariantPolynomial(desc["terms"], desc["level"], desc.get("name"))
            else:
                f = DeviatoricPlane(desc["normal"], desc["level"], desc.get("name"))
        except ValidationError as e:
            raise ValidationError(str(e).split(": ", 1)[-1], field=f"{field}.{e.field}") from e
        check_convexity(f, field=field)
        built.append(f)
    return YieldDomain(built, **kwargs)


def build_domain(spec, **kwargs) -> YieldDomain:
    """Domain from a scenario mapping: ``{"criterion": ..., "k": ...}`` or ``{"criterion": "custom", "functions": [...]}``."""
    criterion = spec.get("criterion")
    if criterion is None:
        raise ValidationError("missing field", field="criterion")
    if criterion not in CRITERIA:
        raise ValidationError(f"unknown criterion {criterion!r}; expected one of {sorted(CRITERIA)}", field="criterion")
    if criterion == "custom":
        if "functions" not in spec:
            raise ValidationError("missing field", field="functions")
        domain = CRITERIA.build(criterion, spec["functions"], **kwargs)
    else:
        if "k" not in spec:
            raise ValidationError("missing field", field="k")
        domain = CRITERIA.build(criterion, spec["k"], **kwargs)
    logger.debug("built %r", domain)
    return domain
