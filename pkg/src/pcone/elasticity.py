"""Isotropic linear elasticity: moduli, Hooke's law and its inverse."""
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ValidationError
from .tensor_core import SymTensor3, identity


@dataclass(frozen=True)
class ElasticModuli:
    """Lamé parameters plus the derived Young modulus, Poisson ratio and density."""

    lame: float
    mu: float
    young: float
    poisson: float
    rho: float = 1.0

    def __post_init__(self):
        for name in ("lame", "mu", "young", "rho"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0.0:
                raise ValidationError(f"must be positive and finite, got {value}", field=name)
        if not 0.0 < self.poisson < 0.5:
            raise ValidationError(f"must lie in (0, 0.5), got {self.poisson}", field="poisson")


def moduli_from_lame(lame: float, mu: float, rho: float = 1.0) -> ElasticModuli:
    lame = float(lame)
    mu = float(mu)
    if not (lame > 0.0 and mu > 0.0):
        raise ValidationError(f"Lamé parameters must be positive, got λ={lame}, μ={mu}", field="lame")
    young = mu * (3.0 * lame + 2.0 * mu) / (lame + mu)
    poisson = lame / (2.0 * (lame + mu))
    return ElasticModuli(lame, mu, young, poisson, float(rho))


def moduli_from_young(young: float, poisson: float, rho: float = 1.0) -> ElasticModuli:
    young = float(young)
    poisson = float(poisson)
    if young <= 0.0:
        raise ValidationError(f"must be positive, got {young}", field="young")
    if not 0.0 < poisson < 0.5:
        raise ValidationError(f"must lie in (0, 0.5), got {poisson}", field="poisson")
    lame = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson))
    mu = young / (2.0 * (1.0 + poisson))
    return ElasticModuli(lame, mu, young, poisson, float(rho))


def moduli_from_mapping(spec: Mapping) -> ElasticModuli:
    """Build moduli from ``{"lame": [λ, μ], "rho": ρ}`` or ``{"young": [E, ν], "rho": ρ}``."""
    if "rho" not in spec:
        raise ValidationError("missing field", field="moduli.rho")
    try:
        rho = float(spec["rho"])
    except (TypeError, ValueError):
        raise ValidationError(f"expected a number, got {spec['rho']!r}", field="moduli.rho")
    if "lame" in spec and "young" in spec:
        raise ValidationError("give either lame or young, not both", field="moduli")
    if "lame" in spec:
        lame, mu = _pair(spec["lame"], "moduli.lame")
        return moduli_from_lame(lame, mu, rho)
    if "young" in spec:
        young, poisson = _pair(spec["young"], "moduli.young")
        return moduli_from_young(young, poisson, rho)
    raise ValidationError("expected lame or young", field="moduli")


def _pair(value, field):
    try:
        a, b = value
        return float(a), float(b)
    except (TypeError, ValueError):
        raise ValidationError(f"expected two numbers, got {value!r}", field=field)


def hooke(m: ElasticModuli, tau: SymTensor3) -> SymTensor3:
    """H(τ) = 2μτ + λ tr(τ) I."""
    return 2.0 * m.mu * tau + (m.lame * tau.trace()) * identity()


def hooke_inverse(m: ElasticModuli, sigma: SymTensor3) -> SymTensor3:
    """H⁻¹(σ) = σ/(2μ) − λ/(2μ(3λ+2μ)) tr(σ) I."""
    c = m.lame / (2.0 * m.mu * (3.0 * m.lame + 2.0 * m.mu))
    return sigma / (2.0 * m.mu) - (c * sigma.trace()) * identity()


def hooke_inverse_young(m: ElasticModuli, sigma: SymTensor3) -> SymTensor3:
    """The same inverse written with E and ν: ((1+ν)σ − ν tr(σ) I)/E."""
    return ((1.0 + m.poisson) * sigma - (m.poisson * sigma.trace()) * identity()) / m.young


def hooke_voigt(m: ElasticModuli, arr: np.ndarray) -> np.ndarray:
    """Hooke's law applied row-wise to an (n, 6) Voigt array."""
    out = 2.0 * m.mu * np.asarray(arr, dtype=float)
    out[:, :3] += m.lame * arr[:, :3].sum(axis=1, keepdims=True)
    return out


def hooke_inverse_voigt(m: ElasticModuli, arr: np.ndarray) -> np.ndarray:
    c = m.lame / (2.0 * m.mu * (3.0 * m.lame + 2.0 * m.mu))
    out = np.asarray(arr, dtype=float) / (2.0 * m.mu)
    out[:, :3] -= c * arr[:, :3].sum(axis=1, keepdims=True)
    return out


def p_wave_speed(m: ElasticModuli) -> float:
    return math.sqrt((m.lame + 2.0 * m.mu) / m.rho)


def bulk_modulus(m: ElasticModuli) -> float:
    return m.lame + 2.0 * m.mu / 3.0


def plastic_wave_speed(m: ElasticModuli) -> float:
    """sqrt(K/ρ), the speed of uniaxial-strain waves through a saturated Von Mises or Tresca state."""
    return math.sqrt(bulk_modulus(m) / m.rho)
