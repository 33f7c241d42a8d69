"""
Reading spec files and turning them into validated ManifoldSpec instances.
"""

import sys
from importlib import resources
from pathlib import Path
from tokenize import TokenError

import numpy as np
import sympy
from pydantic import ValidationError
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from conformal_reeb.config import settings
from conformal_reeb.core.exceptions import (
    AntisymmetryViolation,
    BackendOverrideError,
    DegenerateMetric,
    ParseError,
    SignatureMismatch,
    VanishingField,
)
from conformal_reeb.core.logging import get_logger
from conformal_reeb.models.fields import Metric, Signature, VectorField
from conformal_reeb.models.frame_algebra import validate_frame_algebra
from conformal_reeb.models.grid_chart import GridChart
from conformal_reeb.models.manifold_spec import ManifoldSpec
from conformal_reeb.schemas.spec_file import ComponentValue, RawSpec

if sys.version_info >= (3, 11):
    import tomllib
    from importlib.resources.abc import Traversable
else:
    import tomli as tomllib
    from importlib.abc import Traversable

logger = get_logger(__name__)

FIXTURE_PACKAGE = "conformal_reeb.fixtures"

T, X, Y = sympy.symbols("t x y", real=True)
COORDINATES = (T, X, Y)
_NAMESPACE = {
    "t": T,
    "x": X,
    "y": Y,
    "pi": sympy.pi,
    "sin": sympy.sin,
    "cos": sympy.cos,
    "exp": sympy.exp,
    "sqrt": sympy.sqrt,
}
_ALLOWED_FUNCTIONS = (sympy.sin, sympy.cos, sympy.exp)


# ============================================================================
# Reading
# ============================================================================


def load_spec_file(path: Path | Traversable | str) -> RawSpec:
    """
    Parse a TOML spec file into the raw schema.

    Raises:
        ParseError: unreadable file, invalid TOML or schema mismatch
    """
    source = str(path)
    try:
        text = Path(path).read_text(encoding="utf-8") if isinstance(path, str) else path.read_text(encoding="utf-8")
        document = tomllib.loads(text)
    except OSError as exc:
        raise ParseError(source, f"cannot read file ({exc.strerror or exc})") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(source, f"invalid TOML: {exc}") from exc

    try:
        return RawSpec.model_validate(document)
    except ValidationError as exc:
        problems = "; ".join(f"{'.'.join(str(p) for p in error['loc'])}: {error['msg']}" for error in exc.errors())
        raise ParseError(source, problems) from exc


def parse_component(value: ComponentValue, source: str = "component") -> sympy.Expr:
    """
    Turn a number or expression string into a sympy expression in t, x, y.

    Raises:
        ParseError: unknown names or functions, or a syntax error
    """
    if isinstance(value, (int, float)):
        return sympy.Float(value) if isinstance(value, float) else sympy.Integer(value)
    try:
        expr = parse_expr(value, local_dict=dict(_NAMESPACE), transformations=standard_transformations)
    except (SyntaxError, TokenError, TypeError, ValueError, sympy.SympifyError) as exc:
        raise ParseError(source, f"cannot parse expression {value!r}: {exc}") from exc
    if not isinstance(expr, sympy.Expr):
        raise ParseError(source, f"{value!r} is not an expression")

    unknown = expr.free_symbols - set(COORDINATES)
    if unknown:
        names = ", ".join(sorted(str(symbol) for symbol in unknown))
        raise ParseError(source, f"unknown names in {value!r}: {names}")
    for function in expr.atoms(sympy.Function):
        if not isinstance(function, _ALLOWED_FUNCTIONS):
            raise ParseError(source, f"function {function.func} is not allowed in {value!r}")
    return expr


def _sample(expr: sympy.Expr, space, source: str) -> np.ndarray:
    if space.kind == "frame":
        if expr.free_symbols:
            raise ParseError(source, f"frame components must be constant, got {expr}")
        return np.asarray(float(expr))
    function = sympy.lambdify(COORDINATES, expr, modules="numpy")
    return np.broadcast_to(np.asarray(function(*space.coordinates()), dtype=float), space.shape).copy()


# ============================================================================
# Assembly
# ============================================================================


def structure_constants_from_entries(entries: list[tuple[int, int, int, float]]) -> np.ndarray:
    """
    Dense c[i, j, k] from sparse 1-based [i, j, k, value] entries with implied partners.

    Raises:
        AntisymmetryViolation: j == k with nonzero value, or conflicting partners
    """
    c = np.zeros((3, 3, 3))
    assigned: dict[tuple[int, int, int], float] = {}
    for i, j, k, value in entries:
        if j == k:
            if value != 0:
                raise AntisymmetryViolation((i, j, k), abs(value))
            continue
        for index, entry in (((i, j, k), value), ((i, k, j), -value)):
            if index in assigned and assigned[index] != entry:
                raise AntisymmetryViolation(index, abs(assigned[index] - entry))
            assigned[index] = entry
            c[index[0] - 1, index[1] - 1, index[2] - 1] = entry
    return c


def _metric_expressions(raw: RawSpec, source: str) -> dict[tuple[int, int], sympy.Expr]:
    expressions: dict[tuple[int, int], sympy.Expr] = {}
    for key, value in raw.metric.components.items():
        i, j = int(key[0]) - 1, int(key[1]) - 1
        expr = parse_component(value, f"{source}: metric.{key}")
        for index in ((i, j), (j, i)):
            previous = expressions.get(index)
            if previous is not None and sympy.simplify(previous - expr) != 0:
                raise ParseError(source, f"metric.{key} conflicts with its symmetric partner")
            expressions[index] = expr
    return expressions


def _is_constant(raw: RawSpec, source: str) -> bool:
    values = list(raw.metric.components.values()) + list(raw.field.components)
    return all(not parse_component(value, source).free_symbols for value in values)


def _space_for(raw: RawSpec, backend: str, n: int | None, source: str):
    declared = raw.manifold.backend
    if backend == declared:
        if backend == "frame":
            c = structure_constants_from_entries(raw.manifold.structure_constants)
            group = raw.manifold.group or ("abelian" if not np.any(c) else None)
            return validate_frame_algebra(c, raw.fixture_metadata.frame_volume, group)
        return GridChart(n=n or raw.manifold.n or settings.default_grid_n, periods=raw.manifold.periods)

    if not _is_constant(raw, source):
        raise BackendOverrideError(f"{source}: only constant-coefficient specs can change backend")
    if backend == "grid":
        c = structure_constants_from_entries(raw.manifold.structure_constants)
        if np.any(c):
            raise BackendOverrideError(f"{source}: a non-abelian frame has no flat torus chart")
        side = raw.fixture_metadata.frame_volume ** (1.0 / 3.0)
        return GridChart(n=n or settings.default_grid_n, periods=(side, side, side))
    volume = float(np.prod(raw.manifold.periods))
    return validate_frame_algebra(np.zeros((3, 3, 3)), volume, "abelian")


def validate_spec(
    raw: RawSpec,
    tolerance: float | None = None,
    n: int | None = None,
    backend: str | None = None,
    source: str | None = None,
) -> ManifoldSpec:
    """
    Build and validate a ManifoldSpec.

    Args:
        raw: Parsed spec document
        tolerance: Degeneracy and vanishing gate; backend default when omitted
        n: Grid resolution override
        backend: Backend override ("frame" or "grid")
        source: Name used in diagnostics

    Returns:
        ManifoldSpec with min |R|_ref recorded

    Raises:
        ParseError, AntisymmetryViolation, JacobiViolation, InvalidChart, BackendOverrideError
        SignatureMismatch: metric eigenvalue signs disagree with the declared signature somewhere
        DegenerateMetric: det g within tolerance of zero somewhere
        VanishingField: |R|_ref within tolerance of zero somewhere
    """
    source = source or raw.manifold.name
    backend = backend or raw.manifold.backend
    space = _space_for(raw, backend, n, source)
    tolerance = tolerance if tolerance is not None else settings.tolerance_for(backend, getattr(space, "n", None))

    expressions = _metric_expressions(raw, source)
    components = np.zeros((3, 3) + tuple(space.shape))
    for (i, j), expr in expressions.items():
        components[i, j] = _sample(expr, space, f"{source}: metric.{i + 1}{j + 1}")
    metric = Metric(space, components, Signature(raw.metric.signature))

    det = np.asarray(metric.determinant().values).reshape(-1)
    worst = int(np.argmin(np.abs(det)))
    if abs(det[worst]) <= tolerance:
        raise DegenerateMetric(space.point_label(worst), float(det[worst]))
    defect = metric.signature_defect()
    worst = int(np.argmax(defect))
    if defect[worst] > 0:
        eigenvalues = tuple(float(v) for v in metric.eigenvalues().reshape(-1, 3)[worst])
        raise SignatureMismatch(metric.signature.value, space.point_label(worst), float(defect[worst]), eigenvalues)

    field_components = np.stack(
        [
            np.broadcast_to(_sample(parse_component(value, f"{source}: field.{a + 1}"), space, source), space.shape)
            for a, value in enumerate(raw.field.components)
        ]
    )
    candidate = VectorField(space, field_components)
    reference = np.sqrt(np.einsum("i...,i...->...", candidate.components, candidate.components)).reshape(-1)
    worst = int(np.argmin(reference))
    if reference[worst] <= tolerance:
        raise VanishingField(space.point_label(worst), float(reference[worst]))

    logger.info(f"Validated spec {source} on the {backend} backend (min |R|_ref = {reference[worst]:.6g})")
    return ManifoldSpec(
        name=raw.manifold.name,
        backend=backend,
        space=space,
        metric=metric,
        candidate_field=candidate,
        orientation=raw.manifold.orientation,
        metadata=raw.fixture_metadata,
        min_field_norm=float(reference[worst]),
    )


# ============================================================================
# Bundled fixtures
# ============================================================================


def fixture_names() -> list[str]:
    """Names of the bundled spec files, sorted."""
    root = resources.files(FIXTURE_PACKAGE)
    return sorted(entry.name.removesuffix(".toml") for entry in root.iterdir() if entry.name.endswith(".toml"))


def fixture_path(name: str) -> Traversable:
    """
    Raises:
        ParseError: no such fixture
    """
    entry = resources.files(FIXTURE_PACKAGE) / f"{name}.toml"
    if not entry.is_file():
        raise ParseError(name, f"no bundled fixture named {name!r}")
    return entry


def resolve_spec_path(argument: str | Path) -> Path | Traversable:
    """A filesystem path if it exists, else a bundled fixture named directly or as fixtures/<name>."""
    path = Path(argument)
    if path.is_file():
        return path
    name = path.name.removesuffix(".toml")
    if path.parent in (Path("."), Path("fixtures")):
        return fixture_path(name)
    raise ParseError(str(argument), "file not found")


def load_fixture(name: str, **overrides) -> ManifoldSpec:
    """Load and validate a bundled fixture."""
    return validate_spec(load_spec_file(fixture_path(name)), source=name, **overrides)
