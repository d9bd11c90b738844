"""Built-in geometries and the scene file format.

A *scene* bundles a chart box with an almost complex structure J, an
optional metric h, and optional named form fields, all given as
expression strings so every consumer gets exact derivatives.  Scenes are
immutable; loading one from disk runs the same sampled invariant checks
as the built-in constructors.

The six-sphere scene realizes J through octonion multiplication: a point
p of the unit sphere in the purely imaginary octonions acts on its
tangent space by X -> p*X, which is again tangent.  The chart places
coordinates on tangent offsets at e1 and recovers the sphere point by
normalization, so every matrix entry is a quadratic polynomial over
sqrt(1 + |u|^2).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dataclass_field
from functools import lru_cache

import numpy as np
import yaml

from .exprlang import ExprSyntaxError, parse, to_text
from .fields import ChartDomain, FieldK, JField, MetricField

__all__ = [
    "BUILTIN_SCENE_IDS",
    "Octonion",
    "Scene",
    "SceneCheckError",
    "SceneFormatError",
    "SceneUsageError",
    "builtin_scene",
    "load_scene",
    "octonion_multiply",
    "octonion_structure",
    "save_scene",
    "scene_c3_flat",
    "scene_r4_remark1",
    "scene_r4_twisted",
    "scene_r6_product",
    "scene_s6",
]

SCENE_SCHEMA = "acgeo-scene/1"

# Cayley table for the imaginary units: each (a, b, c) means
# e_a e_b = e_c together with the cyclic and antisymmetric relations.
FANO_TRIPLES = (
    (1, 2, 3),
    (1, 4, 5),
    (2, 4, 6),
    (3, 4, 7),
    (2, 5, 7),
    (3, 6, 5),
    (1, 7, 6),
)


@lru_cache(maxsize=1)
def octonion_structure() -> np.ndarray:
    """The (8, 8, 8) multiplication tensor: (a*b)_c = M[a, b, c] a_a b_b."""
    M = np.zeros((8, 8, 8))
    M[0, 0, 0] = 1.0
    for a in range(1, 8):
        M[0, a, a] = 1.0
        M[a, 0, a] = 1.0
        M[a, a, 0] = -1.0
    for a, b, c in FANO_TRIPLES:
        for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
            M[x, y, z] = 1.0
            M[y, x, z] = -1.0
    return M


@dataclass(frozen=True)
class Octonion:
    """An octonion as 8 real components over the basis (1, e1..e7)."""

    components: tuple

    def __post_init__(self):
        comp = tuple(float(c) for c in self.components)
        if len(comp) != 8:
            raise ValueError("octonions have 8 components")
        object.__setattr__(self, "components", comp)

    @classmethod
    def unit(cls, a: int) -> "Octonion":
        comp = [0.0] * 8
        comp[a] = 1.0
        return cls(tuple(comp))

    @classmethod
    def from_array(cls, arr) -> "Octonion":
        return cls(tuple(np.asarray(arr, dtype=float)))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.components)

    def norm(self) -> float:
        return float(np.linalg.norm(self.array))

    def conjugate(self) -> "Octonion":
        arr = -self.array
        arr[0] = -arr[0]
        return Octonion.from_array(arr)

    def __add__(self, other: "Octonion") -> "Octonion":
        return Octonion.from_array(self.array + other.array)

    def __mul__(self, other: "Octonion") -> "Octonion":
        return octonion_multiply(self, other)


def octonion_multiply(a: Octonion, b: Octonion) -> Octonion:
    product = np.einsum("abc,a,b->c", octonion_structure(), a.array, b.array)
    return Octonion.from_array(product)


class SceneFormatError(ValueError):
    """A scene file is malformed (parse or schema failure)."""


class SceneCheckError(ValueError):
    """Scene data violates a load-time invariant at some sample point."""


class SceneUsageError(ValueError):
    """An operation asked a scene for data it does not carry."""


def _as_string_matrix(entries, dim: int, what: str):
    if (
        not isinstance(entries, (list, tuple))
        or len(entries) != dim
        or any(not isinstance(row, (list, tuple)) or len(row) != dim for row in entries)
    ):
        raise SceneFormatError(f"{what} must be a {dim}x{dim} matrix of expressions")
    out = []
    for i, row in enumerate(entries):
        out_row = []
        for j, entry in enumerate(row):
            if isinstance(entry, (int, float)):
                entry = repr(float(entry))
            if not isinstance(entry, str):
                raise SceneFormatError(f"{what}[{i+1}][{j+1}] is not an expression string")
            try:
                node = parse(entry, dim)
            except ExprSyntaxError as exc:
                raise SceneFormatError(f"{what}[{i+1}][{j+1}]: {exc}") from exc
            out_row.append(to_text(node))
        out.append(tuple(out_row))
    return tuple(out)


@dataclass(frozen=True)
class Scene:
    """An immutable named geometry on a single chart."""

    id: str
    dim: int
    box: tuple
    j_entries: tuple
    metric_entries: tuple | None = None
    forms: tuple = ()  # ((name, degree, ((key, expr), ...)), ...)
    notes: str = ""
    tags: tuple = ()

    @property
    def chart(self) -> ChartDomain:
        return ChartDomain(self.box)

    def j_field(self) -> JField:
        return JField(self.chart, [list(row) for row in self.j_entries])

    @property
    def has_metric(self) -> bool:
        return self.metric_entries is not None

    def metric_field(self) -> MetricField:
        if self.metric_entries is None:
            raise SceneUsageError(
                f"scene '{self.id}' carries no metric; this operation needs one"
            )
        return MetricField(self.chart, [list(row) for row in self.metric_entries])

    @property
    def form_names(self) -> tuple:
        return tuple(name for name, _, _ in self.forms)

    def form_field(self, name: str) -> FieldK:
        for form_name, degree, coefficients in self.forms:
            if form_name == name:
                return FieldK(self.chart, degree, dict(coefficients))
        raise SceneUsageError(
            f"scene '{self.id}' has no form named '{name}'"
            + (f"; available: {', '.join(self.form_names)}" if self.forms else "")
        )

    def sample_points(self, count: int, seed: int) -> np.ndarray:
        return self.chart.sample(count, np.random.default_rng(seed))

    def validate(self, samples: int = 200, seed: int = 7081) -> dict:
        """Run the load-time invariant checks; raise SceneCheckError on failure.

        Returns the worst residuals seen, for reporting.
        """
        points = self.sample_points(samples, seed)
        J = self.j_field()
        h = self.metric_field() if self.has_metric else None
        worst = {"j_square": (0.0, None), "h_symmetry": (0.0, None),
                 "h_min_eigenvalue": (np.inf, None), "h_j_invariance": (0.0, None)}
        eye = np.eye(self.dim)
        for p in points:
            Jv = J.value(p)
            r = float(np.abs(Jv @ Jv + eye).max())
            if r > worst["j_square"][0]:
                worst["j_square"] = (r, p)
            if h is not None:
                hv = h.value(p)
                r = float(np.abs(hv - hv.T).max())
                if r > worst["h_symmetry"][0]:
                    worst["h_symmetry"] = (r, p)
                lo = float(np.linalg.eigvalsh(0.5 * (hv + hv.T)).min())
                if lo < worst["h_min_eigenvalue"][0]:
                    worst["h_min_eigenvalue"] = (lo, p)
                r = float(np.abs(Jv.T @ hv @ Jv - hv).max())
                if r > worst["h_j_invariance"][0]:
                    worst["h_j_invariance"] = (r, p)
        def _fail(check, value, point):
            raise SceneCheckError(
                f"scene '{self.id}' fails the {check} check: residual {value:g} "
                f"at point {np.array2string(np.asarray(point), precision=6)}"
            )
        if worst["j_square"][0] > 1e-10:
            _fail("J^2 = -I", *worst["j_square"])
        if h is not None:
            if worst["h_symmetry"][0] > 1e-10:
                _fail("metric symmetry", *worst["h_symmetry"])
            if worst["h_min_eigenvalue"][0] <= 0.0:
                _fail("metric positivity (min eigenvalue)", *worst["h_min_eigenvalue"])
            if worst["h_j_invariance"][0] > 1e-10:
                _fail("metric J-invariance", *worst["h_j_invariance"])
        return {k: v[0] for k, v in worst.items()}

    def to_dict(self) -> dict:
        doc = {
            "schema": SCENE_SCHEMA,
            "id": self.id,
            "dim": self.dim,
            "box": [[lo, hi] for lo, hi in self.box],
            "J": [list(row) for row in self.j_entries],
        }
        if self.metric_entries is not None:
            doc["h"] = [list(row) for row in self.metric_entries]
        if self.forms:
            doc["forms"] = {
                name: {
                    "degree": degree,
                    "coefficients": {
                        ",".join(str(i) for i in key): expr for key, expr in coefficients
                    },
                }
                for name, degree, coefficients in self.forms
            }
        if self.tags:
            doc["tags"] = list(self.tags)
        if self.notes:
            doc["notes"] = self.notes
        return doc

    @classmethod
    def from_dict(cls, doc, source: str = "<scene>") -> "Scene":
        if not isinstance(doc, dict):
            raise SceneFormatError(f"{source}: scene document must be a mapping")
        schema = doc.get("schema", SCENE_SCHEMA)
        if schema != SCENE_SCHEMA:
            raise SceneFormatError(f"{source}: unsupported schema '{schema}'")
        missing = [key for key in ("id", "dim", "box", "J") if key not in doc]
        if missing:
            raise SceneFormatError(f"{source}: missing required fields {missing}")
        scene_id = str(doc["id"])
        try:
            dim = int(doc["dim"])
        except (TypeError, ValueError):
            raise SceneFormatError(f"{source}: dim must be an integer")
        box_raw = doc["box"]
        if (
            not isinstance(box_raw, (list, tuple))
            or len(box_raw) != dim
            or any(not isinstance(iv, (list, tuple)) or len(iv) != 2 for iv in box_raw)
        ):
            raise SceneFormatError(f"{source}: box must list {dim} [lo, hi] intervals")
        try:
            box = tuple((float(lo), float(hi)) for lo, hi in box_raw)
        except (TypeError, ValueError):
            raise SceneFormatError(f"{source}: box bounds must be numbers")
        if any(not lo < hi for lo, hi in box):
            raise SceneFormatError(f"{source}: box intervals must be nonempty")
        j_entries = _as_string_matrix(doc["J"], dim, "J")
        metric_entries = (
            _as_string_matrix(doc["h"], dim, "h") if doc.get("h") is not None else None
        )
        forms = []
        for name, body in (doc.get("forms") or {}).items():
            if not isinstance(body, dict) or "degree" not in body:
                raise SceneFormatError(f"{source}: form '{name}' needs a degree")
            degree = int(body["degree"])
            coefficients = []
            for key, expr in (body.get("coefficients") or {}).items():
                try:
                    indices = tuple(int(part) for part in str(key).split(","))
                except ValueError:
                    raise SceneFormatError(
                        f"{source}: form '{name}' has a bad index key '{key}'"
                    )
                if len(indices) != degree or any(
                    a >= b for a, b in zip(indices, indices[1:])
                ):
                    raise SceneFormatError(
                        f"{source}: form '{name}' key '{key}' is not an increasing "
                        f"{degree}-tuple"
                    )
                if isinstance(expr, (int, float)):
                    expr = repr(float(expr))
                try:
                    node = parse(expr, dim)
                except ExprSyntaxError as exc:
                    raise SceneFormatError(f"{source}: form '{name}'[{key}]: {exc}")
                coefficients.append((indices, to_text(node)))
            forms.append((str(name), degree, tuple(sorted(coefficients))))
        tags = tuple(str(t) for t in (doc.get("tags") or ()))
        notes = str(doc.get("notes", ""))
        return cls(scene_id, dim, box, j_entries, metric_entries, tuple(forms), notes, tags)


def save_scene(scene: Scene, path) -> None:
    with open(path, "w") as handle:
        yaml.safe_dump(scene.to_dict(), handle, sort_keys=False, width=100)


def load_scene(path, validate: bool = True, samples: int = 200) -> Scene:
    """Load a scene file, run its invariant checks, and return the scene."""
    try:
        with open(path) as handle:
            doc = yaml.safe_load(handle)
    except OSError as exc:
        raise SceneFormatError(f"{path}: {exc}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise SceneFormatError(f"{path}: not valid structured text{where}: {exc}") from exc
    scene = Scene.from_dict(doc, source=str(path))
    if validate:
        scene.validate(samples=samples)
    return scene


def _sum_of_squares(dim: int) -> str:
    return "1 + " + " + ".join(f"x{k}^2" for k in range(1, dim + 1))


def _poly_text(constant: float, linear: dict, quadratic: dict) -> str:
    """Canonical text for c + sum c_k x_k + sum c_kl x_k x_l with small integer c."""
    terms = []
    def push(coef, body):
        if coef == 0:
            return
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        text = body if body else str(mag)
        if body and mag != 1:
            text = f"{mag}*{body}"
        terms.append((sign, text))
    push(constant, "")
    for k in sorted(linear):
        push(linear[k], f"x{k}")
    for k, l in sorted(quadratic):
        body = f"x{k}^2" if k == l else f"x{k}*x{l}"
        push(quadratic[(k, l)], body)
    if not terms:
        return "0"
    first_sign, first_text = terms[0]
    out = ("-" if first_sign == "-" else "") + first_text
    for sign, text in terms[1:]:
        out += f" {sign} {text}"
    return out


def scene_s6() -> Scene:
    """The round six-sphere with its octonionic almost complex structure.

    Chart coordinates u in (-0.35, 0.35)^6 are tangent offsets at e1;
    the sphere point is p = (e1 + sum_k u_k e_{k+1}) / sqrt(1 + |u|^2)
    and J acts by left octonion multiplication X -> p*X.  Both J and the
    round metric have closed-form entries: quadratic polynomials over
    sqrt(1 + |u|^2) (or its square).
    """
    M = octonion_structure()
    dim = 6
    s = _sum_of_squares(dim)
    j_entries = []
    for i in range(1, dim + 1):
        row = []
        for j in range(1, dim + 1):
            constant = M[1, j + 1, i + 1]
            linear = {k: M[k + 1, j + 1, i + 1] for k in range(1, dim + 1)}
            quadratic = {}
            for k in range(1, dim + 1):
                coef = -M[k + 1, j + 1, 1]
                if coef:
                    key = (min(i, k), max(i, k))
                    quadratic[key] = quadratic.get(key, 0) + coef
            numerator = _poly_text(constant, linear, quadratic)
            row.append("0" if numerator == "0" else f"({numerator}) / sqrt({s})")
        j_entries.append(row)
    h_entries = []
    for i in range(1, dim + 1):
        row = []
        for j in range(1, dim + 1):
            if i == j:
                others = " + ".join(f"x{k}^2" for k in range(1, dim + 1) if k != i)
                row.append(f"(1 + {others}) / ({s})^2")
            else:
                a, b = min(i, j), max(i, j)
                row.append(f"-(x{a}*x{b}) / ({s})^2")
        h_entries.append(row)
    return Scene(
        id="s6_octonion",
        dim=dim,
        box=((-0.35, 0.35),) * dim,
        j_entries=tuple(tuple(row) for row in j_entries),
        metric_entries=tuple(tuple(row) for row in h_entries),
        notes=(
            "Unit sphere in the imaginary octonions, chart at e1 via normalized "
            "tangent offsets (box keeps |u| < 0.9). J(X) = p*X with the Cayley "
            "table generated by the signed triples "
            "(1,2,3),(1,4,5),(2,4,6),(3,4,7),(2,5,7),(3,6,5),(1,7,6); h is the "
            "round metric induced from R^7. At the chart origin J maps e2 to e3."
        ),
        tags=("nearly-kahler", "no-symplectic"),
    )


def scene_r4_remark1() -> Scene:
    """Flat R^4 with standard J and the 2-form exp(x1*x3) dx1^dx2 + dx3^dx4.

    The form is nondegenerate on the whole box but its Lee form solves to
    x1 dx3, whose differential dx1^dx3 never vanishes: the form is not
    conformal to any closed one.
    """
    j0 = (("0", "-1", "0", "0"), ("1", "0", "0", "0"),
          ("0", "0", "0", "-1"), ("0", "0", "1", "0"))
    eye = tuple(tuple("1" if i == j else "0" for j in range(4)) for i in range(4))
    omega = (((1, 2), "exp(x1 * x3)"), ((3, 4), "1"))
    return Scene(
        id="r4_remark1",
        dim=4,
        box=((-2.0, 2.0),) * 4,
        j_entries=j0,
        metric_entries=eye,
        forms=(("omega", 2, omega),),
        notes=(
            "Constant standard J with flat metric; the named form omega = "
            "exp(x1*x3) dx1^dx2 + dx3^dx4 has non-closed Lee form (solves to "
            "x1 dx3 pointwise)."
        ),
        tags=("integrable", "lee-nonclosed"),
    )


def scene_r4_twisted() -> Scene:
    """A non-integrable J on R^4: the standard one conjugated by a shear.

    With A(x) = I + x1 E34, J = A J0 A^{-1} squares to -I identically but
    depends on x1, so N != 0 at every point (N^4_13 = -1/4).  The metric
    is the J-average of the flat one, (I + J^T J)/2.
    """
    j_entries = (
        ("0", "-1", "0", "0"),
        ("1", "0", "0", "0"),
        ("0", "0", "x1", "-1 - x1^2"),
        ("0", "0", "1", "-x1"),
    )
    h_entries = (
        ("1", "0", "0", "0"),
        ("0", "1", "0", "0"),
        ("0", "0", "(2 + x1^2) / 2", "-(x1 * (2 + x1^2)) / 2"),
        ("0", "0", "-(x1 * (2 + x1^2)) / 2", "(2 + 3*x1^2 + x1^4) / 2"),
    )
    return Scene(
        id="r4_twisted",
        dim=4,
        box=((-1.0, 1.0),) * 4,
        j_entries=j_entries,
        metric_entries=h_entries,
        notes=(
            "J = (I + x1 E34) J0 (I - x1 E34): squares to -I exactly yet has "
            "nonvanishing Nijenhuis tensor everywhere; h = (I + J^T J)/2 is the "
            "J-invariant average of the flat metric."
        ),
        tags=("non-integrable",),
    )


def scene_c3_flat() -> Scene:
    """Flat C^3: constant standard J, identity metric, standard 2-form."""
    j0 = []
    for i in range(6):
        row = []
        for j in range(6):
            if i == j + 1 and j % 2 == 0:
                row.append("1")
            elif j == i + 1 and i % 2 == 0:
                row.append("-1")
            else:
                row.append("0")
        j0.append(tuple(row))
    eye = tuple(tuple("1" if i == j else "0" for j in range(6)) for i in range(6))
    omega = (((1, 2), "1"), ((3, 4), "1"), ((5, 6), "1"))
    return Scene(
        id="c3_flat",
        dim=6,
        box=((-1.0, 1.0),) * 6,
        j_entries=tuple(j0),
        metric_entries=eye,
        forms=(("omega", 2, omega),),
        notes="Flat complex 3-space: integrable J, flat metric, closed fundamental form.",
        tags=("integrable", "kahler"),
    )


def scene_r6_product() -> Scene:
    """Standard J on R^6 with a stretched metric that is not nearly Kahler.

    The factor exp(x3) on the first complex line is J-invariant, so (h, J)
    is almost Hermitian, but dF = exp(x3) dx1^dx2^dx3 is not proportional
    to any h(JN(.,.),.) - here N = 0 - so the nearly-Kahler identity fails
    by about exp(x3)/3 at every point.
    """
    scene = scene_c3_flat()
    h_entries = [list(row) for row in scene.metric_entries]
    h_entries[0][0] = "exp(x3)"
    h_entries[1][1] = "exp(x3)"
    return Scene(
        id="r6_product",
        dim=6,
        box=((-1.0, 1.0),) * 6,
        j_entries=scene.j_entries,
        metric_entries=tuple(tuple(row) for row in h_entries),
        notes=(
            "Constant standard J with h = diag(exp(x3), exp(x3), 1, 1, 1, 1): "
            "almost Hermitian but with dF nonzero while N = 0, a negative "
            "control for the nearly-Kahler identity."
        ),
        tags=("integrable", "not-nearly-kahler"),
    )


_BUILTIN_FACTORIES = {
    "s6_octonion": scene_s6,
    "r4_remark1": scene_r4_remark1,
    "r4_twisted": scene_r4_twisted,
    "c3_flat": scene_c3_flat,
    "r6_product": scene_r6_product,
}

_ALIASES = {"s6": "s6_octonion"}

BUILTIN_SCENE_IDS = tuple(_BUILTIN_FACTORIES)


def builtin_scene(name: str) -> Scene:
    """Return a built-in scene by id (accepts the shorthand 's6')."""
    key = _ALIASES.get(name, name)
    try:
        factory = _BUILTIN_FACTORIES[key]
    except KeyError:
        raise SceneUsageError(
            f"no built-in scene '{name}'; available: {', '.join(BUILTIN_SCENE_IDS)}"
        )
    return factory()
