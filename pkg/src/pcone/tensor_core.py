"""
Symmetric second-order tensors in three dimensions.

Tensors are stored as six Voigt components in the order
[s11, s22, s33, s12, s13, s23]. The inner product counts each off-diagonal
component twice, so ``dot(a, b)`` equals ``trace(a.T @ b)`` of the full
matrices.
"""
import math
from typing import NamedTuple, Sequence, Tuple, Union

import numpy as np

from .config import EIG_TOL

# off-diagonal components appear twice in the full contraction
VOIGT_WEIGHTS = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])
_IDENTITY = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
_MATRIX_INDEX = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))

Scalar = Union[int, float, np.floating]


class SymTensor3(object):
    __slots__ = ("_v",)
    # numpy scalars on the left defer to __rmul__
    __array_ufunc__ = None

    def __init__(self, s11=0.0, s22=0.0, s33=0.0, s12=0.0, s13=0.0, s23=0.0):
        v = np.array([s11, s22, s33, s12, s13, s23], dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "_v", v)

    @classmethod
    def from_voigt(cls, values: Sequence[float]) -> "SymTensor3":
        values = np.asarray(values, dtype=float)
        if values.shape != (6,):
            raise ValueError(f"expected 6 Voigt components, got shape {values.shape}")
        obj = cls.__new__(cls)
        v = values.copy()
        v.flags.writeable = False
        object.__setattr__(obj, "_v", v)
        return obj

    @classmethod
    def from_matrix(cls, m) -> "SymTensor3":
        """Symmetric part of a 3x3 matrix."""
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
        s = 0.5 * (m + m.T)
        return cls.from_voigt([s[i, j] for i, j in _MATRIX_INDEX])

    @classmethod
    def identity(cls) -> "SymTensor3":
        return cls.from_voigt(_IDENTITY)

    @classmethod
    def zero(cls) -> "SymTensor3":
        return cls()

    def __setattr__(self, name, value):
        raise AttributeError("SymTensor3 is immutable")

    @property
    def voigt(self) -> np.ndarray:
        return self._v

    @property
    def s11(self) -> float:
        return float(self._v[0])

    @property
    def s22(self) -> float:
        return float(self._v[1])

    @property
    def s33(self) -> float:
        return float(self._v[2])

    @property
    def s12(self) -> float:
        return float(self._v[3])

    @property
    def s13(self) -> float:
        return float(self._v[4])

    @property
    def s23(self) -> float:
        return float(self._v[5])

    def matrix(self) -> np.ndarray:
        a, b, c, d, e, f = self._v
        return np.array([[a, d, e], [d, b, f], [e, f, c]])

    def to_list(self):
        return [float(x) for x in self._v]

    def trace(self) -> float:
        return float(self._v[0] + self._v[1] + self._v[2])

    def norm(self) -> float:
        return math.sqrt(max(dot(self, self), 0.0))

    def allclose(self, other: "SymTensor3", atol: float = 1e-12, rtol: float = 0.0) -> bool:
        return bool(np.allclose(self._v, other._v, atol=atol, rtol=rtol))

    def __add__(self, other):
        if not isinstance(other, SymTensor3):
            return NotImplemented
        return SymTensor3.from_voigt(self._v + other._v)

    def __sub__(self, other):
        if not isinstance(other, SymTensor3):
            return NotImplemented
        return SymTensor3.from_voigt(self._v - other._v)

    def __neg__(self):
        return SymTensor3.from_voigt(-self._v)

    def __mul__(self, scalar):
        if isinstance(scalar, SymTensor3):
            return NotImplemented
        return SymTensor3.from_voigt(self._v * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return SymTensor3.from_voigt(self._v / float(scalar))

    def __repr__(self):
        comps = ", ".join(f"{x:.6g}" for x in self._v)
        return f"SymTensor3([{comps}])"

    def __reduce__(self):
        return (SymTensor3.from_voigt, (self._v.copy(),))


class Invariants(NamedTuple):
    i1: float
    i2: float
    i3: float
    j2: float
    j3: float


class SpectralDecomp(NamedTuple):
    """Eigenvalues in non-increasing order with matching unit eigenvectors.

    ``eigenvectors[:, i]`` belongs to ``eigenvalues[i]``. ``multiplicity`` groups
    the indices 1..3 of eigenvalues that coincide within the eigen tolerance,
    e.g. ``((1, 2), (3,))`` for λ1 = λ2 > λ3.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    multiplicity: Tuple[Tuple[int, ...], ...]

    @property
    def is_distinct(self) -> bool:
        return len(self.multiplicity) == 3

    def vector(self, i: int) -> np.ndarray:
        return self.eigenvectors[:, i - 1]

    def dyad(self, i: int) -> SymTensor3:
        v = self.vector(i)
        return outer(v, v)

    def reconstruct(self) -> SymTensor3:
        q = self.eigenvectors
        return SymTensor3.from_matrix(q @ np.diag(self.eigenvalues) @ q.T)


def identity() -> SymTensor3:
    return SymTensor3.identity()


def dot(a: SymTensor3, b: SymTensor3) -> float:
    return float(np.dot(VOIGT_WEIGHTS * a.voigt, b.voigt))


def trace(a: SymTensor3) -> float:
    return a.trace()


def norm(a: SymTensor3) -> float:
    return a.norm()


def deviator(a: SymTensor3) -> SymTensor3:
    v = a.voigt.copy()
    v[:3] -= a.trace() / 3.0
    return SymTensor3.from_voigt(v)


def square(a: SymTensor3) -> SymTensor3:
    m = a.matrix()
    return SymTensor3.from_matrix(m @ m)


def outer(u, v=None) -> SymTensor3:
    """Symmetrized dyad u⊙v = ½(u⊗v + v⊗u); u⊗u when `v` is omitted."""
    u = np.asarray(u, dtype=float)
    v = u if v is None else np.asarray(v, dtype=float)
    return SymTensor3.from_matrix(0.5 * (np.outer(u, v) + np.outer(v, u)))


def sym_outer(u, v) -> SymTensor3:
    return outer(u, v)


def invariants(a: SymTensor3) -> Invariants:
    m = a.matrix()
    i1 = a.trace()
    i2 = 0.5 * (i1 * i1 - float(np.trace(m @ m)))
    i3 = float(np.linalg.det(m))
    s = deviator(a)
    j2 = 0.5 * dot(s, s)
    j3 = float(np.linalg.det(s.matrix()))
    return Invariants(i1, i2, i3, j2, j3)


def grad_j2(a: SymTensor3) -> SymTensor3:
    return deviator(a)


def grad_j3(a: SymTensor3) -> SymTensor3:
    s = deviator(a)
    j2 = 0.5 * dot(s, s)
    return square(s) - (2.0 / 3.0 * j2) * identity()


def _group_multiplicity(values: np.ndarray, tol: float) -> Tuple[Tuple[int, ...], ...]:
    groups = [[1]]
    for i in (1, 2):
        if values[i - 1] - values[i] <= tol:
            groups[-1].append(i + 1)
        else:
            groups.append([i + 1])
    return tuple(tuple(g) for g in groups)


def spectral(a: SymTensor3, eig_tol: float = EIG_TOL) -> SpectralDecomp:
    """Ordered eigen-decomposition λ1 ≥ λ2 ≥ λ3.

    Eigenvalues closer than ``eig_tol * max(1, ‖a‖)`` are reported as one group.
    Inside a repeated group any orthonormal basis of the eigenspace is returned.
    """
    w, q = np.linalg.eigh(a.matrix())
    order = np.argsort(w)[::-1]
    w = w[order]
    q = q[:, order]
    tol = eig_tol * max(1.0, a.norm())
    return SpectralDecomp(w, q, _group_multiplicity(w, tol))


def eigenvalues(a: SymTensor3) -> np.ndarray:
    return np.linalg.eigvalsh(a.matrix())[::-1]


def _lode_phase(j2: float, j3: float) -> float:
    if j2 <= 0.0:
        return 0.0
    arg = 3.0 * math.sqrt(3.0) * j3 / (2.0 * j2 ** 1.5)
    return math.acos(min(1.0, max(-1.0, arg)))


def lode_angle(a: SymTensor3) -> float:
    """φ0/3, with φ0 = arccos(3√3 J3 / (2 J2^{3/2})) clamped to [0, π]."""
    inv = invariants(a)
    return _lode_phase(inv.j2, inv.j3) / 3.0


def deviator_eigenvalues_trig(a: SymTensor3) -> Tuple[float, float, float]:
    """Ordered eigenvalues of the deviator from J2 and J3 in closed form."""
    inv = invariants(a)
    lam0 = math.sqrt(4.0 * inv.j2 / 3.0)
    phi0 = _lode_phase(inv.j2, inv.j3)
    return (
        lam0 * math.cos(phi0 / 3.0),
        lam0 * math.cos((2.0 * math.pi - phi0) / 3.0),
        lam0 * math.cos((2.0 * math.pi + phi0) / 3.0),
    )


# batched helpers on (n, 6) Voigt arrays


def dot_voigt(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("ij,j,ij->i", a, VOIGT_WEIGHTS, b)


def deviator_voigt(a: np.ndarray) -> np.ndarray:
    s = np.array(a, dtype=float, copy=True)
    s[:, :3] -= s[:, :3].sum(axis=1, keepdims=True) / 3.0
    return s


def j2_voigt(a: np.ndarray) -> np.ndarray:
    s = deviator_voigt(a)
    return 0.5 * dot_voigt(s, s)
