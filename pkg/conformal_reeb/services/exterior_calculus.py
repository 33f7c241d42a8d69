"""
Exterior calculus over either backend.

Everything is evaluated in the fixed frame e_1..e_n of the space. On a frame
algebra [e_j, e_k] = c^i_{jk} e_i and invariant components have zero
derivative; on a grid chart c = 0 and e_i = d/dx^i acts spectrally. With the
determinant convention the Maurer-Cartan rule reads

    de^i = - sum_{j<k} c^i_{jk} e^j ^ e^k

Lie derivatives are computed from the frame Leibniz expansion, independently of
d and the interior product, so the Cartan formula is a genuine check.
"""

from functools import lru_cache, singledispatch
from itertools import permutations
from string import ascii_lowercase

import numpy as np

from conformal_reeb.core.exceptions import DegreeOverflow, SingularMetricAtPoint
from conformal_reeb.models.fields import (
    Endomorphism,
    KForm,
    Metric,
    ScalarField,
    Space,
    VectorField,
    basis,
    basis_position,
    max_norm,
    stacked,
    unstacked,
)

SINGULAR_DETERMINANT = 1e-12


# ============================================================================
# Combinatorics
# ============================================================================


def _permutation_sign(sequence: tuple[int, ...]) -> int:
    sign = 1
    items = list(sequence)
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            if items[i] > items[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def _wedge_table(dim: int, p: int, q: int) -> tuple[tuple[int, int, int, int], ...]:
    """(position in p-basis, position in q-basis, position in (p+q)-basis, sign)."""
    target = basis_position(dim, p + q)
    table = []
    for a, I in enumerate(basis(dim, p)):
        for b, J in enumerate(basis(dim, q)):
            if set(I) & set(J):
                continue
            joined = I + J
            table.append((a, b, target[tuple(sorted(joined))], _permutation_sign(joined)))
    return tuple(table)


@lru_cache(maxsize=None)
def _interior_table(dim: int, k: int) -> tuple[tuple[int, int, int, int], ...]:
    """(position in k-basis, contracted frame index, position in (k-1)-basis, sign)."""
    target = basis_position(dim, k - 1)
    table = []
    for a, I in enumerate(basis(dim, k)):
        for r, i in enumerate(I):
            table.append((a, i, target[I[:r] + I[r + 1:]], (-1) ** r))
    return tuple(table)


def _wedge_components(dim: int, p: int, q: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
    out = np.zeros((len(basis(dim, p + q)),) + shape)
    for i, j, k, sign in _wedge_table(dim, p, q):
        out[k] += sign * a[i] * b[j]
    return out


# ============================================================================
# Algebraic operations
# ============================================================================


def wedge(a: KForm, b: KForm) -> KForm:
    """
    Exterior product.

    Raises:
        DegreeOverflow: deg a + deg b exceeds the dimension
    """
    dim = a.space.dim
    if a.degree + b.degree > dim:
        raise DegreeOverflow(a.degree + b.degree, dim)
    if a.space != b.space:
        raise ValueError("Forms live on different spaces")
    return KForm(a.space, a.degree + b.degree, _wedge_components(dim, a.degree, b.degree, a.components, b.components))


def interior_product(X: VectorField, a: KForm) -> KForm:
    """Contraction i_X a = a(X, ...)."""
    if a.degree < 1:
        raise ValueError("Interior product needs a form of degree >= 1")
    dim = a.space.dim
    out = np.zeros((len(basis(dim, a.degree - 1)),) + tuple(a.space.shape))
    for source, i, target, sign in _interior_table(dim, a.degree):
        out[target] += sign * X.components[i] * a.components[source]
    return KForm(a.space, a.degree - 1, out)


def evaluate(a: KForm, *vectors: VectorField) -> ScalarField:
    """a(X_1, ..., X_k) by repeated contraction."""
    result = a
    for X in vectors:
        result = interior_product(X, result)
    return ScalarField(a.space, result.components[0])


# ============================================================================
# Dense tensors
# ============================================================================


def to_dense(a: KForm) -> np.ndarray:
    """Antisymmetric array a[i1..ik] = a(e_i1, ..., e_ik), sample axes trailing."""
    dim, k = a.space.dim, a.degree
    dense = np.zeros((dim,) * k + tuple(a.space.shape))
    for position, index in enumerate(basis(dim, k)):
        for perm in permutations(range(k)):
            permuted = tuple(index[p] for p in perm)
            dense[permuted] = _permutation_sign(perm) * a.components[position]
    return dense


def from_dense(space: Space, dense: np.ndarray, degree: int) -> KForm:
    """Increasing-index components of an antisymmetric array."""
    components = np.stack([dense[index] for index in basis(space.dim, degree)]) if degree else dense[None]
    return KForm(space, degree, components)


# ============================================================================
# Derivatives
# ============================================================================


def directional(X: VectorField, f: np.ndarray) -> np.ndarray:
    """X(f) = X^i e_i(f) for component arrays."""
    space = X.space
    return sum(X.components[i] * space.derivative(f, i) for i in range(space.dim))


@lru_cache(maxsize=32)
def _basis_differential_cached(key: bytes, dim: int, k: int) -> np.ndarray:
    c = np.frombuffer(key).reshape((dim,) * 3)
    de = np.array([[-c[i, j, l] for j, l in basis(dim, 2)] for i in range(dim)])
    matrix = np.zeros((len(basis(dim, k + 1)), len(basis(dim, k))))
    for column, index in enumerate(basis(dim, k)):
        term = np.zeros(len(basis(dim, k + 1)))
        for r, i in enumerate(index):
            left = np.zeros(len(basis(dim, r)))
            left[basis_position(dim, r)[index[:r]]] = 1.0
            right = np.zeros(len(basis(dim, k - r - 1)))
            right[basis_position(dim, k - r - 1)[index[r + 1:]]] = 1.0
            piece = _wedge_components(dim, r, 2, left, de[i])
            piece = _wedge_components(dim, r + 2, k - r - 1, piece, right)
            term += (-1) ** r * piece
        matrix[:, column] = term
    return matrix


def basis_differential(space: Space, k: int) -> np.ndarray:
    """Matrix D with d(e^I) = sum_J D[J, I] e^J on invariant basis forms."""
    c = np.ascontiguousarray(space.structure_constants, dtype=float)
    return _basis_differential_cached(c.tobytes(), space.dim, k)


def exterior_derivative(a: KForm) -> KForm:
    """
    d a = sum_i e_i(a_I) e^i ^ e^I + sum_I a_I d(e^I).

    On the grid backend components are differentiated spectrally.
    """
    space, k, dim = a.space, a.degree, a.space.dim
    if k >= dim:
        return KForm(space, k + 1, np.zeros((0,) + tuple(space.shape)))
    derivatives = np.stack([np.stack([space.derivative(component, i) for component in a.components]) for i in range(dim)])
    out = np.zeros((len(basis(dim, k + 1)),) + tuple(space.shape))
    for i in range(dim):
        e_i = np.zeros(dim)
        e_i[i] = 1.0
        out += _wedge_components(dim, 1, k, e_i.reshape((dim,) + (1,) * len(space.shape)), derivatives[i])
    if np.any(space.structure_constants):
        out += np.tensordot(basis_differential(space, k), a.components, axes=(1, 0))
    return KForm(space, k + 1, out)


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X,Y]^m = X(Y^m) - Y(X^m) + X^i Y^j c^m_{ij}."""
    space = X.space
    c = space.structure_constants
    components = np.stack([directional(X, Y.components[m]) - directional(Y, X.components[m]) for m in range(space.dim)])
    components = components + np.einsum("mij,i...,j...->m...", c, X.components, Y.components)
    return VectorField(space, components)


def _frame_bracket_matrix(X: VectorField) -> np.ndarray:
    """M[m, b] = [X, e_b]^m = X^i c^m_{ib} - e_b(X^m)."""
    space = X.space
    c = space.structure_constants
    M = np.einsum("mib,i...->mb...", c, X.components)
    derivatives = np.stack([np.stack([space.derivative(X.components[m], b) for b in range(space.dim)]) for m in range(space.dim)])
    return M - derivatives


def _lie_dense(X: VectorField, dense: np.ndarray, rank: int) -> np.ndarray:
    """
    (L_X T)(e_b1..e_bk) = X(T_b) - sum_r T(.., [X, e_br], ..) for a covariant tensor.
    """
    space = X.space
    out = np.zeros_like(dense)
    for index in np.ndindex(*(space.dim,) * rank):
        out[index] = directional(X, dense[index])
    M = _frame_bracket_matrix(X)
    letters = ascii_lowercase[:rank]
    for slot in range(rank):
        source = letters[:slot] + "z" + letters[slot + 1:]
        out -= np.einsum(f"{source}...,z{letters[slot]}...->{letters}...", dense, M)
    return out


@singledispatch
def _lie(tensor, X: VectorField):
    raise TypeError(f"No Lie derivative for {type(tensor).__name__}")


@_lie.register
def _(tensor: ScalarField, X: VectorField) -> ScalarField:
    return ScalarField(tensor.space, directional(X, tensor.values))


@_lie.register
def _(tensor: KForm, X: VectorField) -> KForm:
    if tensor.degree == 0:
        return KForm(tensor.space, 0, directional(X, tensor.components[0])[None])
    dense = _lie_dense(X, to_dense(tensor), tensor.degree)
    return from_dense(tensor.space, dense, tensor.degree)


@_lie.register
def _(tensor: Metric, X: VectorField) -> Metric:
    return Metric(tensor.space, _lie_dense(X, tensor.components, 2), tensor.signature)


@_lie.register
def _(tensor: VectorField, X: VectorField) -> VectorField:
    return lie_bracket(X, tensor)


def lie_derivative(X: VectorField, T):
    """L_X T for scalars, forms, metrics and vector fields."""
    return _lie(T, X)


def cartan_residual(X: VectorField, a: KForm) -> float:
    """max |L_X a - (d i_X a + i_X d a)|."""
    lhs = lie_derivative(X, a)
    rhs = interior_product(X, exterior_derivative(a))
    if a.degree > 0:
        rhs = rhs + exterior_derivative(interior_product(X, a))
    return (lhs - rhs).max_norm()


# ============================================================================
# Metric operations
# ============================================================================


def _check_invertible(g: Metric) -> None:
    det = np.asarray(np.linalg.det(stacked(g.components)))
    magnitude = np.abs(det)
    worst = int(np.argmin(magnitude)) if magnitude.ndim else 0
    if magnitude.reshape(-1)[worst] <= SINGULAR_DETERMINANT:
        raise SingularMetricAtPoint(g.space.point_label(worst), float(det.reshape(-1)[worst]))


def inverse_metric(g: Metric) -> np.ndarray:
    """g^{ab} with the same layout as g."""
    _check_invertible(g)
    return unstacked(np.linalg.inv(stacked(g.components)))


def flat(X: VectorField, g: Metric) -> KForm:
    """X_flat(Y) = g(X, Y)."""
    return KForm(g.space, 1, np.einsum("ab...,a...->b...", g.components, X.components))


def sharp(a: KForm, g: Metric) -> VectorField:
    """Inverse of flat."""
    return VectorField(g.space, np.einsum("ab...,b...->a...", inverse_metric(g), a.components))


def norm(X: VectorField, g: Metric) -> ScalarField:
    """Pointwise sqrt |g(X,X)|."""
    return ScalarField(g.space, np.sqrt(np.abs(g(X, X).values)))


def christoffel(g: Metric) -> np.ndarray:
    """
    Gamma[d, a, b] with nabla_{e_a} e_b = Gamma^d_{ab} e_d, from the Koszul formula

        2 g(nabla_a e_b, e_c) = e_a g_bc + e_b g_ac - e_c g_ab
                                + g([e_a,e_b],e_c) - g([e_b,e_c],e_a) + g([e_c,e_a],e_b)
    """
    space = g.space
    n = space.dim
    gc = g.components
    dg = np.stack([np.stack([np.stack([space.derivative(gc[b, c], a) for c in range(n)]) for b in range(n)]) for a in range(n)])
    c = space.structure_constants
    # bracket[a, b, m] = c^m_{ab}; g([e_a,e_b], e_c) = c^m_{ab} g_mc
    bracket_g = np.einsum("mab,mc...->abc...", c, gc)
    lowered = 0.5 * (
        dg
        + np.einsum("bac...->abc...", dg)
        - np.einsum("cab...->abc...", dg)
        + bracket_g
        - np.einsum("bca...->abc...", bracket_g)
        + np.einsum("cab...->abc...", bracket_g)
    )
    return np.einsum("dc...,abc...->dab...", inverse_metric(g), lowered)


def covariant_derivative(X: VectorField, Y: VectorField, g: Metric) -> VectorField:
    """Levi-Civita nabla_X Y = X(Y^d) e_d + X^a Y^b Gamma^d_{ab} e_d."""
    space = g.space
    gamma = christoffel(g)
    components = np.stack([directional(X, Y.components[d]) for d in range(space.dim)])
    components = components + np.einsum("dab...,a...,b...->d...", gamma, X.components, Y.components)
    return VectorField(space, components)


def metric_compatibility_residual(X: VectorField, Y: VectorField, Z: VectorField, g: Metric) -> float:
    """max |X g(Y,Z) - g(nabla_X Y, Z) - g(Y, nabla_X Z)|."""
    lhs = directional(X, g(Y, Z).values)
    rhs = g(covariant_derivative(X, Y, g), Z).values + g(Y, covariant_derivative(X, Z, g)).values
    return max_norm(lhs - rhs)


def volume_form(g: Metric, orientation: int = 1) -> KForm:
    """orientation * sqrt|det g| e^{1..n}."""
    det = np.abs(np.linalg.det(stacked(g.components)))
    return KForm(g.space, g.space.dim, (orientation * np.sqrt(det))[None])


def metric_from_forms(space: Space, pairs: list[tuple[float, KForm, KForm]], signature) -> Metric:
    """sum of coefficient * sym(a (x) b) as a Metric."""
    components = np.zeros((space.dim, space.dim) + tuple(space.shape))
    for coefficient, a, b in pairs:
        outer = np.einsum("a...,b...->ab...", a.components, b.components)
        components = components + coefficient * 0.5 * (outer + outer.swapaxes(0, 1))
    return Metric(space, components, signature)


def endomorphism_from_forms(space: Space, X: VectorField, a: KForm) -> Endomorphism:
    """The (1,1)-tensor X (x) a, i.e. V -> a(V) X."""
    return Endomorphism(space, np.einsum("i...,j...->ij...", X.components, a.components))
