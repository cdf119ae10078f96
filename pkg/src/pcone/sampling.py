"""
Seeded generators of stresses, rotations and saturated states.

Every function takes a ``numpy.random.Generator`` as its first argument and
draws from it only, so a run is reproducible from the seed of that generator.
"""
import math
from typing import NamedTuple

import numpy as np

from .constitutive import radial_return
from .tensor_core import SymTensor3, deviator, dot, invariants
from .yield_domain import DeviatoricPlane, VonMisesFunction, YieldDomain


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """PCG64 generator for `seed`; distinct `stream` values give independent streams."""
    return np.random.Generator(np.random.PCG64([int(seed), int(stream)]))


def random_sym(rng: np.random.Generator, scale: float = 1.0) -> SymTensor3:
    return SymTensor3.from_voigt(rng.normal(scale=scale, size=6))


def random_deviator(rng: np.random.Generator, scale: float = 1.0) -> SymTensor3:
    return deviator(random_sym(rng, scale))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed proper rotation (QR of a Gaussian matrix with signs fixed)."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0.0:
        q[:, 0] = -q[:, 0]
    return q


def rotated_diagonal(rotation: np.ndarray, values) -> SymTensor3:
    return SymTensor3.from_matrix(rotation @ np.diag(values) @ rotation.T)


def random_on_von_mises(rng: np.random.Generator, k: float = 1.0, pressure_scale: float = 1.0) -> SymTensor3:
    """Stress with sqrt(J2) = k and a random hydrostatic part."""
    s = random_deviator(rng)
    while s.norm() < 1e-6:
        s = random_deviator(rng)
    s = (math.sqrt(2.0) * k / s.norm()) * s
    return s + rng.normal(scale=pressure_scale) * SymTensor3.identity()


def random_on_tresca_smooth(
    rng: np.random.Generator, k: float = 1.0, min_gap: float = 1e-2, pressure_scale: float = 1.0
) -> SymTensor3:
    """Stress with ½(λ1 − λ3) = k and λ2 at least `min_gap`·k away from both."""
    p = rng.normal(scale=pressure_scale)
    t = rng.uniform(-1.0 + min_gap, 1.0 - min_gap)
    return rotated_diagonal(random_rotation(rng), [p + k, p + t * k, p - k])


def random_on_tresca_degenerate(
    rng: np.random.Generator, m: int, k: float = 1.0, pressure_scale: float = 1.0
) -> SymTensor3:
    """Tresca edge stress: λ1 = λ2 > λ3 for m = 3, λ1 > λ2 = λ3 for m = 1."""
    a = rng.normal(scale=pressure_scale)
    if m == 3:
        values = [a, a, a - 2.0 * k]
    elif m == 1:
        values = [a + 2.0 * k, a, a]
    else:
        raise ValueError(f"m must be 1 or 3, got {m}")
    return rotated_diagonal(random_rotation(rng), values)


class TwoPlaneCase(NamedTuple):
    domain: YieldDomain
    sigma: SymTensor3
    delta: float


def random_two_plane_cone(
    rng: np.random.Generator, max_cos: float = 0.95, cap_factor: float = 2.0
) -> TwoPlaneCase:
    """σ where two deviatoric planes A_i:σ ≤ k_i are saturated with non-collinear normals.

    The unit normals are oriented so that both levels are positive. A Von Mises
    cap of radius ``cap_factor`` · sqrt(J2(σ)) bounds the domain and is inactive at σ.
    ``delta`` is the cosine between the two normals.
    """
    while True:
        sigma = random_sym(rng)
        s = deviator(sigma)
        normals = []
        for _ in range(2):
            a = random_deviator(rng)
            a = a / a.norm()
            normals.append(a if dot(a, s) > 0.0 else -a)
        levels = [dot(a, sigma) for a in normals]
        if min(levels) < 1e-2 * s.norm():
            continue
        delta = dot(normals[0], normals[1])
        if abs(delta) > max_cos:
            continue
        domain = YieldDomain(
            [
                DeviatoricPlane(normals[0], levels[0]),
                DeviatoricPlane(normals[1], levels[1]),
                VonMisesFunction(cap_factor * math.sqrt(invariants(sigma).j2)),
            ]
        )
        return TwoPlaneCase(domain, sigma, delta)


def random_on_boundary(rng: np.random.Generator, domain: YieldDomain, pressure_scale: float = 1.0) -> SymTensor3:
    """Random direction in deviator space, pushed out and returned radially onto the boundary."""
    big = 10.0 * max(1.0, max(abs(f.level) for f in domain.functions))
    s = random_deviator(rng)
    s = (big / max(s.norm(), 1e-12)) * s
    sigma = s + rng.normal(scale=pressure_scale) * SymTensor3.identity()
    return radial_return(domain, sigma)


def random_inside(
    rng: np.random.Generator, domain: YieldDomain, shrink: float = 0.99, pressure_scale: float = 1.0
) -> SymTensor3:
    """Point strictly inside the domain: a boundary point with its deviator scaled by U(0, shrink)."""
    sigma = random_on_boundary(rng, domain, pressure_scale)
    axis = (sigma.trace() / 3.0) * SymTensor3.identity()
    return axis + rng.uniform(0.0, shrink) * deviator(sigma)
