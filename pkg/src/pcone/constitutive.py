"""
Elastic perfectly plastic rate laws written as cone projections, and an explicit
material-point driver along prescribed strain-rate paths.

At a stress σ in the yield domain, a strain rate ε̇ splits into an elastic part
P_T(ε̇) and a plastic part P_N(ε̇); the stress rate is 𝓗(σ, ε̇) = H(ε̇) − 2μ P_N(ε̇).
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from .cone_projection import project
from .config import DRIFT_HARD_FACTOR, DRIFT_POLICIES, DRIFT_TOL, VOIGT_LABELS
from .elasticity import ElasticModuli, hooke
from .errors import IntegrationError, MembershipError, ValidationError
from .tensor_core import SymTensor3, deviator, dot, identity
from .yield_domain import YieldDomain

logger = logging.getLogger(__name__)


class RateSplit(NamedTuple):
    eps_e_rate: SymTensor3
    eps_p_rate: SymTensor3
    sigma_rate: SymTensor3
    branch: str = ""

    @property
    def consistency_residual(self) -> float:
        return dot(self.eps_p_rate, self.sigma_rate)


@dataclass(frozen=True)
class MaterialState:
    sigma: SymTensor3
    eps_e: SymTensor3 = field(default_factory=SymTensor3)
    eps_p: SymTensor3 = field(default_factory=SymTensor3)
    t: float = 0.0


INTERPOLATIONS = ("constant", "linear")


class StrainPath(object):
    """Strain-rate history given by (time, rate) knots.

    ``constant`` holds each knot's rate until the next knot; ``linear``
    interpolates between knots. Before the first knot and after the last one the
    nearest knot's rate applies. The path ends at ``t_end`` (default: last knot).
    """

    def __init__(
        self,
        knots: Sequence[Tuple[float, SymTensor3]],
        interpolation: str = "constant",
        t_end: Optional[float] = None,
    ):
        if not knots:
            raise ValidationError("a strain path needs at least one knot", field="path.knots")
        if interpolation not in INTERPOLATIONS:
            raise ValidationError(
                f"expected one of {INTERPOLATIONS}, got {interpolation!r}", field="path.interpolation"
            )
        times = np.array([float(t) for t, _ in knots])
        if np.any(np.diff(times) <= 0.0):
            raise ValidationError("knot times must be strictly increasing", field="path.knots")
        self.times = times
        self.rates = np.array([r.voigt for _, r in knots])
        self.interpolation = interpolation
        self.t_end = float(times[-1] if t_end is None else t_end)

    @classmethod
    def from_knots(cls, knots, interpolation="constant", t_end=None) -> "StrainPath":
        """Build from ``[[t, [e11, e22, e33, e12, e13, e23]], ...]``."""
        parsed = []
        for i, knot in enumerate(knots):
            try:
                t, rate = knot
                parsed.append((float(t), SymTensor3.from_voigt(rate)))
            except (TypeError, ValueError):
                raise ValidationError(f"expected [t, [6 components]], got {knot!r}", field=f"path.knots[{i}]")
        return cls(parsed, interpolation, t_end)

    def __len__(self):
        return len(self.times)

    def rate_at(self, t: float) -> SymTensor3:
        times = self.times
        if t <= times[0]:
            return SymTensor3.from_voigt(self.rates[0])
        if t >= times[-1]:
            return SymTensor3.from_voigt(self.rates[-1])
        i = int(np.searchsorted(times, t, side="right")) - 1
        if self.interpolation == "constant":
            return SymTensor3.from_voigt(self.rates[i])
        w = (t - times[i]) / (times[i + 1] - times[i])
        return SymTensor3.from_voigt((1.0 - w) * self.rates[i] + w * self.rates[i + 1])


class DriftPolicy(object):
    """What to do when an explicit step leaves the yield domain.

    ``radial_return`` rescales the deviator about the hydrostatic axis until the
    violated constraint is back at its level; ``none`` leaves the state alone.
    Either way a state more than ``DRIFT_HARD_FACTOR * drift_tol`` outside aborts
    the integration.
    """

    def __init__(self, kind: str = "radial_return", drift_tol: float = DRIFT_TOL):
        if kind not in DRIFT_POLICIES:
            raise ValidationError(f"expected one of {DRIFT_POLICIES}, got {kind!r}", field="drift.kind")
        if not drift_tol > 0.0:
            raise ValidationError(f"must be positive, got {drift_tol}", field="drift.drift_tol")
        self.kind = kind
        self.drift_tol = float(drift_tol)

    def __repr__(self):
        return f"DriftPolicy(kind={self.kind!r}, drift_tol={self.drift_tol:g})"

    @property
    def hard_limit(self) -> float:
        return DRIFT_HARD_FACTOR * self.drift_tol

    def apply(self, domain: YieldDomain, sigma: SymTensor3) -> SymTensor3:
        if self.kind == "none" or domain.membership(sigma) <= 0.0:
            return sigma
        return radial_return(domain, sigma)


def radial_return(domain: YieldDomain, sigma: SymTensor3, iterations: int = 60) -> SymTensor3:
    """Scale σ̄ about p·I, p = tr(σ)/3, so that σ lands back on the boundary of the domain."""
    violated = [f for f in domain.functions if f.value(sigma) > f.level]
    if not violated:
        return sigma
    axis = (sigma.trace() / 3.0) * identity()
    s = deviator(sigma)
    scales = [f.deviator_scale_to_level(sigma) for f in violated]
    if all(x is not None for x in scales):
        candidate = axis + min(scales) * s
        if domain.membership(candidate) <= domain.saturation_tol:
            return candidate
    if domain.membership(axis) >= 0.0:
        raise MembershipError("hydrostatic projection is not inside the domain", domain.membership(axis))
    # bisection on the segment from the axis to σ
    lo, hi = 0.0, 1.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if domain.membership(axis + mid * s) <= 0.0:
            lo = mid
        else:
            hi = mid
    return axis + lo * s


def rate_split(domain: YieldDomain, moduli: ElasticModuli, sigma: SymTensor3, eps_rate: SymTensor3) -> RateSplit:
    split = project(domain, sigma, eps_rate)
    eps_p = split.normal
    sigma_rate = hooke(moduli, eps_rate) - (2.0 * moduli.mu) * eps_p
    return RateSplit(split.tangent, eps_p, sigma_rate, split.branch)


def script_h(domain: YieldDomain, moduli: ElasticModuli, sigma: SymTensor3, eps_rate: SymTensor3) -> SymTensor3:
    """𝓗(σ, ε̇) = H(ε̇) − 2μ P_N(ε̇)."""
    return rate_split(domain, moduli, sigma, eps_rate).sigma_rate


def heaviside(t: float) -> float:
    return 1.0 if t >= 0.0 else 0.0


def von_mises_rates(
    moduli: ElasticModuli, k: float, sigma: SymTensor3, eps_rate: SymTensor3, saturation_tol: float = 0.0
) -> RateSplit:
    """Closed-form Von Mises split.

    ε̇p = χ·max(0, ε̇:σ̄)/(2k²)·σ̄ and σ̇ = H(ε̇) − (μ/k²)·max(0, ε̇:σ̄)·χ·σ̄, with
    χ = 1 when ‖σ̄‖² ≥ 2k² (less the saturation slack) and 0 otherwise.
    """
    s = deviator(sigma)
    k2 = k * k
    chi = heaviside(dot(s, s) - 2.0 * k2 + 2.0 * saturation_tol * max(1.0, k2))
    load = max(0.0, dot(eps_rate, s)) * chi
    eps_p = (load / (2.0 * k2)) * s
    sigma_rate = hooke(moduli, eps_rate) - (moduli.mu / k2 * load) * s
    return RateSplit(eps_rate - eps_p, eps_p, sigma_rate, "one" if chi else "interior")


def hooke_normal_identity(domain: YieldDomain, moduli: ElasticModuli, sigma: SymTensor3, tau: SymTensor3) -> float:
    """‖P_N(H τ) − 2μ P_N(τ)‖, which vanishes on hydrostatic-invariant domains."""
    left = project(domain, sigma, hooke(moduli, tau)).normal
    right = (2.0 * moduli.mu) * project(domain, sigma, tau).normal
    return (left - right).norm()


def max_work_gap(eps_p_rate: SymTensor3, sigma: SymTensor3, sigma_star: SymTensor3) -> float:
    """ε̇p:σ − ε̇p:σ*; non-negative for every σ* in the domain."""
    return dot(eps_p_rate, sigma) - dot(eps_p_rate, sigma_star)


class DriverRecord(object):
    """States after every step (the initial state first) and the split used by each step."""

    def __init__(self, domain: YieldDomain, states: List[MaterialState], splits: List[RateSplit]):
        self.domain = domain
        self.states = states
        self.splits = splits

    def __len__(self):
        return len(self.states)

    @property
    def final(self) -> MaterialState:
        return self.states[-1]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        residuals = [0.0] + [s.consistency_residual for s in self.splits]
        for state, residual in zip(self.states, residuals):
            row = {"t": state.t}
            for prefix, tensor in (("sigma", state.sigma), ("eps_e", state.eps_e), ("eps_p", state.eps_p)):
                for label, value in zip(VOIGT_LABELS, tensor.voigt):
                    row[f"{prefix}_{label}"] = value
            row["f_value"] = max(f.reporting_value(state.sigma) for f in self.domain.functions)
            row["consistency_residual"] = residual
            rows.append(row)
        return pd.DataFrame(rows)


def integrate_path(
    domain: YieldDomain,
    moduli: ElasticModuli,
    initial: MaterialState,
    path: StrainPath,
    dt: float,
    drift: Optional[DriftPolicy] = None,
    progress: bool = False,
) -> DriverRecord:
    """Explicit Euler: σ ← σ + dt·𝓗(σ, ε̇(t)), with ε̇ taken at the start of each step."""
    if not dt > 0.0 or not math.isfinite(dt):
        raise ValidationError(f"must be positive, got {dt}", field="dt")
    drift = DriftPolicy() if drift is None else drift
    n_steps = max(0, int(round((path.t_end - initial.t) / dt)))
    # states a little outside after a step still count as saturated
    stepping = domain.with_tolerance(max(domain.saturation_tol, drift.drift_tol))
    try:
        stepping.saturation(initial.sigma)
    except MembershipError as e:
        raise ValidationError(f"initial stress lies outside the yield domain: {e}", field="initial.sigma") from e

    states = [initial]
    splits: List[RateSplit] = []
    state = initial
    corrected = 0
    logger.info("integrating %d steps of dt=%g with %r", n_steps, dt, drift)
    for step in tqdm(range(n_steps), desc="drive", disable=not progress):
        t = initial.t + step * dt
        rate = path.rate_at(t)
        try:
            split = rate_split(stepping, moduli, state.sigma, rate)
        except MembershipError as e:
            raise IntegrationError(str(e), step) from e
        trial = state.sigma + dt * split.sigma_rate
        if drift.kind != "none" and domain.membership(trial) > drift.drift_tol:
            corrected += 1
        sigma = drift.apply(domain, trial)
        violation = domain.membership(sigma)
        if violation > drift.hard_limit:
            raise IntegrationError(
                f"yield violation {violation:.3e} exceeds the hard limit {drift.hard_limit:.3e}", step
            )
        state = replace(
            state,
            sigma=sigma,
            eps_e=state.eps_e + dt * split.eps_e_rate,
            eps_p=state.eps_p + dt * split.eps_p_rate,
            t=initial.t + (step + 1) * dt,
        )
        states.append(state)
        splits.append(split)
    if corrected:
        logger.warning(
            "radial return pulled back %d of %d steps from beyond drift_tol=%g", corrected, n_steps, drift.drift_tol
        )
    logger.info("final stress %s at t=%g", state.sigma, state.t)
    return DriverRecord(domain, states, splits)
