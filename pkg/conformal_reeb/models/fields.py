"""
Tensor fields over either backend.

Components are stored in the fixed global (co)frame of the space, with the
pointwise sample axes trailing:

    ScalarField    values         shape
    KForm          components     (C(n, k),) + shape, multi-indices in combinations order
    VectorField    components     (n,) + shape
    Metric         components     (n, n) + shape
    Endomorphism   components     (n, n) + shape, components[i, j] = (phi e_j)^i

A k-form is sum_{I increasing} a_I e^I with e^{i1}^...^e^{ik}(e_{i1},...,e_{ik}) = 1.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import combinations
from typing import Protocol

import numpy as np

from conformal_reeb.core.exceptions import ConformalReebError


class Space(Protocol):
    """What a backend exposes to the calculus."""

    kind: str

    @property
    def dim(self) -> int: ...

    @property
    def shape(self) -> tuple[int, ...]: ...

    @property
    def structure_constants(self) -> np.ndarray: ...

    def derivative(self, values: np.ndarray, axis: int) -> np.ndarray: ...

    def integrate(self, values: np.ndarray) -> float: ...

    def point_label(self, flat_index: int) -> str: ...


class Signature(str, Enum):
    """Declared metric signature."""

    LORENTZIAN = "lorentzian"
    RIEMANNIAN = "riemannian"


@lru_cache(maxsize=None)
def basis(dim: int, degree: int) -> tuple[tuple[int, ...], ...]:
    """Strictly increasing multi-indices of a given degree."""
    return tuple(combinations(range(dim), degree))


@lru_cache(maxsize=None)
def basis_position(dim: int, degree: int) -> dict[tuple[int, ...], int]:
    return {index: position for position, index in enumerate(basis(dim, degree))}


def max_norm(values: np.ndarray) -> float:
    """Max absolute entry, 0 for empty arrays."""
    values = np.asarray(values)
    return float(np.max(np.abs(values))) if values.size else 0.0


def _check_space(a, b) -> None:
    if a.space != b.space:
        raise ConformalReebError("Fields live on different spaces")


def _coerce(space: Space, values) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    return np.broadcast_to(array, space.shape).copy() if array.shape != space.shape else array


# ============================================================================
# Scalars
# ============================================================================


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A function on the manifold: a constant on frames, samples on grids."""

    space: Space
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _coerce(self.space, self.values))

    @classmethod
    def constant(cls, space: Space, value: float) -> "ScalarField":
        return cls(space, np.full(space.shape, float(value)))

    def max_norm(self) -> float:
        return max_norm(self.values)

    def is_constant(self, tolerance: float = 1e-12) -> bool:
        return max_norm(self.values - np.mean(self.values)) <= tolerance

    def stats(self) -> tuple[float, float, float]:
        return float(np.min(self.values)), float(np.mean(self.values)), float(np.max(self.values))

    def _other(self, other) -> np.ndarray:
        if isinstance(other, ScalarField):
            _check_space(self, other)
            return other.values
        return np.asarray(other, dtype=float)

    def __add__(self, other) -> "ScalarField":
        return ScalarField(self.space, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other) -> "ScalarField":
        return ScalarField(self.space, self.values - self._other(other))

    def __rsub__(self, other) -> "ScalarField":
        return ScalarField(self.space, self._other(other) - self.values)

    def __mul__(self, other):
        if isinstance(other, (KForm, VectorField, Metric)):
            return other * self
        return ScalarField(self.space, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ScalarField":
        return ScalarField(self.space, self.values / self._other(other))

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.space, -self.values)


def _scale(space: Space, factor) -> np.ndarray:
    if isinstance(factor, ScalarField):
        if factor.space != space:
            raise ConformalReebError("Fields live on different spaces")
        return factor.values
    return np.asarray(factor, dtype=float)


# ============================================================================
# Forms and vectors
# ============================================================================


@dataclass(frozen=True, eq=False)
class KForm:
    """A differential form of fixed degree."""

    space: Space
    degree: int
    components: np.ndarray

    def __post_init__(self):
        count = len(basis(self.space.dim, self.degree))
        array = np.asarray(self.components, dtype=float)
        expected = (count,) + tuple(self.space.shape)
        if array.shape != expected:
            array = np.broadcast_to(array.reshape(array.shape + (1,) * (len(expected) - array.ndim)), expected).copy()
        object.__setattr__(self, "components", array)

    @classmethod
    def zero(cls, space: Space, degree: int) -> "KForm":
        return cls(space, degree, np.zeros((len(basis(space.dim, degree)),) + tuple(space.shape)))

    @classmethod
    def basis_form(cls, space: Space, index: tuple[int, ...], coefficient=1.0) -> "KForm":
        """coefficient * e^{index} for a strictly increasing 0-based index."""
        form = np.zeros((len(basis(space.dim, len(index))),) + tuple(space.shape))
        form[basis_position(space.dim, len(index))[tuple(index)]] = _scale(space, coefficient)
        return cls(space, len(index), form)

    @classmethod
    def from_scalar(cls, field: ScalarField) -> "KForm":
        return cls(field.space, 0, field.values[None])

    def component(self, index: tuple[int, ...]) -> ScalarField:
        return ScalarField(self.space, self.components[basis_position(self.space.dim, self.degree)[tuple(index)]])

    def top_coefficient(self) -> ScalarField:
        """Coefficient against e^{1...n} of a top-degree form."""
        return ScalarField(self.space, self.components[0])

    def max_norm(self) -> float:
        return max_norm(self.components)

    def __add__(self, other: "KForm") -> "KForm":
        _check_space(self, other)
        if other.degree != self.degree:
            raise ConformalReebError(f"Cannot add forms of degree {self.degree} and {other.degree}")
        return KForm(self.space, self.degree, self.components + other.components)

    def __sub__(self, other: "KForm") -> "KForm":
        return self + (-other)

    def __neg__(self) -> "KForm":
        return KForm(self.space, self.degree, -self.components)

    def __mul__(self, factor) -> "KForm":
        return KForm(self.space, self.degree, self.components * _scale(self.space, factor))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorField:
    """A vector field in the frame basis."""

    space: Space
    components: np.ndarray

    def __post_init__(self):
        array = np.asarray(self.components, dtype=float)
        expected = (self.space.dim,) + tuple(self.space.shape)
        if array.shape != expected:
            array = np.broadcast_to(array.reshape(array.shape + (1,) * (len(expected) - array.ndim)), expected).copy()
        object.__setattr__(self, "components", array)

    @classmethod
    def basis_vector(cls, space: Space, index: int) -> "VectorField":
        components = np.zeros(space.dim)
        components[index] = 1.0
        return cls(space, components)

    def component(self, index: int) -> ScalarField:
        return ScalarField(self.space, self.components[index])

    def is_constant(self, tolerance: float = 1e-12) -> bool:
        return all(self.component(i).is_constant(tolerance) for i in range(self.space.dim))

    def mean(self) -> np.ndarray:
        """Component means, i.e. the direction of a constant field."""
        return self.components.reshape(self.space.dim, -1).mean(axis=1)

    def max_norm(self) -> float:
        return max_norm(self.components)

    def __add__(self, other: "VectorField") -> "VectorField":
        _check_space(self, other)
        return VectorField(self.space, self.components + other.components)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + (-other)

    def __neg__(self) -> "VectorField":
        return VectorField(self.space, -self.components)

    def __mul__(self, factor) -> "VectorField":
        return VectorField(self.space, self.components * _scale(self.space, factor))

    __rmul__ = __mul__


# ============================================================================
# Rank-2 tensors
# ============================================================================


def stacked(components: np.ndarray) -> np.ndarray:
    """(n, n, *shape) -> (*shape, n, n) for pointwise linear algebra."""
    return np.moveaxis(components, (0, 1), (-2, -1))


def unstacked(matrices: np.ndarray) -> np.ndarray:
    """(*shape, n, n) -> (n, n, *shape)."""
    return np.moveaxis(matrices, (-2, -1), (0, 1))


@dataclass(frozen=True, eq=False)
class Metric:
    """A symmetric 2-tensor with a declared signature."""

    space: Space
    components: np.ndarray
    signature: Signature = Signature.LORENTZIAN

    def __post_init__(self):
        array = np.asarray(self.components, dtype=float)
        expected = (self.space.dim, self.space.dim) + tuple(self.space.shape)
        if array.shape != expected:
            array = np.broadcast_to(array.reshape(array.shape + (1,) * (len(expected) - array.ndim)), expected).copy()
        object.__setattr__(self, "components", array)
        object.__setattr__(self, "signature", Signature(self.signature))

    def __call__(self, X: VectorField, Y: VectorField) -> ScalarField:
        """g(X, Y)."""
        return ScalarField(self.space, np.einsum("ab...,a...,b...->...", self.components, X.components, Y.components))

    def symmetry_residual(self) -> float:
        return max_norm(self.components - self.components.swapaxes(0, 1))

    def determinant(self) -> ScalarField:
        return ScalarField(self.space, np.linalg.det(stacked(self.components)))

    def eigenvalues(self) -> np.ndarray:
        """Pointwise eigenvalues, shape (*shape, n), ascending."""
        return np.linalg.eigvalsh(stacked(self.components))

    def signature_defect(self) -> np.ndarray:
        """
        Pointwise distance of the eigenvalue signs from the declared signature, flattened.

        Lorentzian: max(l0, 0) + max(-l1, 0) for ascending l0 <= l1 <= l2; Riemannian: max(-l0, 0).
        Zero exactly where the signs match.
        """
        eigenvalues = self.eigenvalues().reshape(-1, self.components.shape[0])
        if self.signature is Signature.LORENTZIAN:
            return np.maximum(eigenvalues[:, 0], 0.0) + np.maximum(-eigenvalues[:, 1], 0.0)
        return np.maximum(-eigenvalues[:, 0], 0.0)

    def with_signature(self, signature: Signature) -> "Metric":
        return Metric(self.space, self.components, signature)

    def __add__(self, other: "Metric") -> "Metric":
        _check_space(self, other)
        return Metric(self.space, self.components + other.components, self.signature)

    def __sub__(self, other: "Metric") -> "Metric":
        _check_space(self, other)
        return Metric(self.space, self.components - other.components, self.signature)

    def __mul__(self, factor) -> "Metric":
        return Metric(self.space, self.components * _scale(self.space, factor), self.signature)

    __rmul__ = __mul__

    def max_norm(self) -> float:
        return max_norm(self.components)


def tensor_square(a: KForm, b: KForm | None = None) -> np.ndarray:
    """Components of the symmetric product a (x) b + b (x) a halved, or a (x) a."""
    b = a if b is None else b
    outer = np.einsum("a...,b...->ab...", a.components, b.components)
    return 0.5 * (outer + outer.swapaxes(0, 1))


@dataclass(frozen=True, eq=False)
class Endomorphism:
    """A (1,1)-tensor acting on vector fields."""

    space: Space
    components: np.ndarray

    def __post_init__(self):
        array = np.asarray(self.components, dtype=float)
        expected = (self.space.dim, self.space.dim) + tuple(self.space.shape)
        if array.shape != expected:
            array = np.broadcast_to(array.reshape(array.shape + (1,) * (len(expected) - array.ndim)), expected).copy()
        object.__setattr__(self, "components", array)

    @classmethod
    def identity(cls, space: Space) -> "Endomorphism":
        return cls(space, np.eye(space.dim))

    def __call__(self, X: VectorField) -> VectorField:
        return VectorField(self.space, np.einsum("ij...,j...->i...", self.components, X.components))

    def compose(self, other: "Endomorphism") -> "Endomorphism":
        return Endomorphism(self.space, np.einsum("ij...,jk...->ik...", self.components, other.components))

    def __add__(self, other: "Endomorphism") -> "Endomorphism":
        _check_space(self, other)
        return Endomorphism(self.space, self.components + other.components)

    def __sub__(self, other: "Endomorphism") -> "Endomorphism":
        _check_space(self, other)
        return Endomorphism(self.space, self.components - other.components)

    def max_norm(self) -> float:
        return max_norm(self.components)
