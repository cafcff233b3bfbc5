"""
Bounded planar domains and the quadrature rules that realize dV in every
inner product.

Closed-form kinds (disc, annulus) are integrated on cells that are uniform in
polar coordinates, so no cell straddles the boundary. Indicator domains are
integrated on uniform Cartesian cells over their bounding box, and boundary
cells keep only the Gauss nodes that pass `contains`.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from pydantic import BaseModel, root_validator, validator
from scipy.spatial import cKDTree

from wbk.settings import get_settings
from wbk.types.errors import EmptyDomain
from wbk.types.main import DomainKind

logger = structlog.get_logger(__name__)
settings = get_settings()

__all__ = [
    "ComplexPoint",
    "Domain",
    "QuadratureRule",
    "as_point",
    "disc",
    "annulus",
    "indicator",
    "named_shape",
    "contains",
    "build_quadrature",
    "compact_sample_grid",
    "boundary_distance",
    "distance_to",
]

# plane coordinates are carried as Python/numpy complex numbers (re + i*im)
ComplexPoint = complex
PointLike = Union[complex, float, int, Sequence[float]]

# sums of positive weights are not resolved below this relative level
AREA_FLOOR = 1e-12
# finest resolution compared against when estimating clipped-cell area errors
AREA_REFERENCE_RESOLUTION = 256


def as_point(value: PointLike) -> complex:
    """
    Coerce a complex number, a real number, or an `(re, im)` pair
    into a finite complex point.
    """
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"expected an (re, im) pair, got {value!r}")
        value = complex(float(value[0]), float(value[1]))
    point = complex(value)
    if not (np.isfinite(point.real) and np.isfinite(point.imag)):
        raise ValueError(f"point components must be finite, got {point!r}")
    return point


def as_points(values) -> np.ndarray:
    """Coerce a point or a collection of points into a 1-D complex array."""
    if isinstance(values, np.ndarray):
        points = values.astype(complex).ravel()
    elif isinstance(values, (list, tuple)):
        points = np.array([as_point(v) for v in values], dtype=complex)
    else:
        points = np.array([as_point(values)], dtype=complex)
    if not np.all(np.isfinite(points)):
        raise ValueError("point components must be finite")
    return points


class Domain(BaseModel):
    """
    A bounded open subset of the plane.

    `disc` and `annulus` are closed-form shapes whose invariants are checked here;
    for `indicator` domains the caller asserts that the predicate describes an
    open, bounded, connected set inside `bounding_box`
    (given as `(x_min, x_max, y_min, y_max)`). Slit domains are not detected.
    """

    kind: DomainKind
    label: str = ""
    center: complex = 0j
    radius: Optional[float] = None
    r_inner: Optional[float] = None
    r_outer: Optional[float] = None
    predicate: Optional[Callable] = None
    bounding_box: Optional[Tuple[float, float, float, float]] = None

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @validator("center", pre=True, always=True)
    def validate_center(cls, val):
        return as_point(val if val is not None else 0j)

    @root_validator(skip_on_failure=True)
    def validate_shape(cls, values):
        kind = values["kind"]
        if kind == DomainKind.disc:
            radius = values.get("radius")
            if radius is None or not radius > 0:
                raise ValueError(f"disc radius must be > 0, got {radius}")
        elif kind == DomainKind.annulus:
            r_inner, r_outer = values.get("r_inner"), values.get("r_outer")
            if r_inner is None or r_outer is None or not 0 <= r_inner < r_outer:
                raise ValueError(f"annulus needs 0 <= r_inner < r_outer, got {r_inner}, {r_outer}")
        elif kind == DomainKind.indicator:
            if values.get("predicate") is None:
                raise ValueError("indicator domains need a predicate")
            box = values.get("bounding_box")
            if box is None:
                raise ValueError("indicator domains need a bounding box")
            x_min, x_max, y_min, y_max = box
            if not (x_max > x_min and y_max > y_min):
                raise ValueError(f"bounding box must have positive area, got {box}")
        return values

    @property
    def box(self) -> Tuple[float, float, float, float]:
        """Bounding box `(x_min, x_max, y_min, y_max)` of the domain."""
        if self.kind == DomainKind.indicator:
            return tuple(self.bounding_box)
        outer = self.radius if self.kind == DomainKind.disc else self.r_outer
        c = self.center
        return (c.real - outer, c.real + outer, c.imag - outer, c.imag + outer)

    @property
    def box_center(self) -> complex:
        x_min, x_max, y_min, y_max = self.box
        return complex(0.5 * (x_min + x_max), 0.5 * (y_min + y_max))

    @property
    def half_width(self) -> float:
        x_min, x_max, y_min, y_max = self.box
        return 0.5 * max(x_max - x_min, y_max - y_min)

    @property
    def is_closed_form(self) -> bool:
        return self.kind in (DomainKind.disc, DomainKind.annulus)

    @property
    def has_hole(self) -> bool:
        return self.kind == DomainKind.annulus and self.r_inner > 0

    @property
    def area(self) -> Optional[float]:
        """Analytic area for closed-form kinds, `None` otherwise."""
        if self.kind == DomainKind.disc:
            return np.pi * self.radius**2
        if self.kind == DomainKind.annulus:
            return np.pi * (self.r_outer**2 - self.r_inner**2)
        return None

    def contains(self, points) -> np.ndarray:
        """Vectorized membership test for the open set."""
        z = np.asarray(points, dtype=complex)
        if self.kind == DomainKind.disc:
            return np.abs(z - self.center) < self.radius
        if self.kind == DomainKind.annulus:
            r = np.abs(z - self.center)
            return (r > self.r_inner) & (r < self.r_outer)
        return np.asarray(self.predicate(z), dtype=bool) & _inside_box(z, self.bounding_box)

    def describe(self) -> str:
        if self.label:
            return self.label
        if self.kind == DomainKind.disc:
            return f"disc(center={self.center}, radius={self.radius})"
        if self.kind == DomainKind.annulus:
            return f"annulus(center={self.center}, r_inner={self.r_inner}, r_outer={self.r_outer})"
        return f"indicator(box={self.bounding_box})"


def _inside_box(z: np.ndarray, box) -> np.ndarray:
    x_min, x_max, y_min, y_max = box
    return (z.real > x_min) & (z.real < x_max) & (z.imag > y_min) & (z.imag < y_max)


def disc(center: PointLike = 0j, radius: float = 1.0, label: str = "") -> Domain:
    return Domain(kind=DomainKind.disc, center=center, radius=float(radius), label=label)


def annulus(
    center: PointLike = 0j, r_inner: float = 0.5, r_outer: float = 1.0, label: str = ""
) -> Domain:
    return Domain(
        kind=DomainKind.annulus,
        center=center,
        r_inner=float(r_inner),
        r_outer=float(r_outer),
        label=label,
    )


def indicator(
    predicate: Callable[[np.ndarray], np.ndarray],
    bounding_box: Tuple[float, float, float, float],
    label: str = "",
) -> Domain:
    """
    Domain given by a vectorized predicate (complex array -> bool array)
    and a bounding box containing its support.
    """
    return Domain(
        kind=DomainKind.indicator,
        predicate=predicate,
        bounding_box=tuple(float(v) for v in bounding_box),
        label=label,
    )


### Named indicator shapes ###
@lru_cache(maxsize=None)
def _square_predicate(center: complex, half_width: float):
    def predicate(z):
        return (np.abs(z.real - center.real) < half_width) & (
            np.abs(z.imag - center.imag) < half_width
        )

    return predicate


@lru_cache(maxsize=None)
def _ellipse_predicate(center: complex, a: float, b: float):
    def predicate(z):
        w = z - center
        return (w.real / a) ** 2 + (w.imag / b) ** 2 < 1.0

    return predicate


@lru_cache(maxsize=None)
def _stadium_predicate(center: complex, half_length: float, radius: float):
    def predicate(z):
        w = z - center
        nearest = np.clip(w.real, -half_length, half_length)
        return np.abs(w - nearest) < radius

    return predicate


def named_shape(shape: str, center: PointLike = 0j, **params) -> Domain:
    """
    Indicator domains that can be referenced by name from experiment configs:
    - `square` (half_width)
    - `ellipse` (a, b)
    - `stadium` (half_length, radius): a rectangle capped by two half-discs
    """
    c = as_point(center)
    if shape == "square":
        h = float(params.get("half_width", 1.0))
        predicate = _square_predicate(c, h)
        box = (c.real - h, c.real + h, c.imag - h, c.imag + h)
    elif shape == "ellipse":
        a, b = float(params.get("a", 1.0)), float(params.get("b", 0.5))
        predicate = _ellipse_predicate(c, a, b)
        box = (c.real - a, c.real + a, c.imag - b, c.imag + b)
    elif shape == "stadium":
        half_length = float(params.get("half_length", 0.5))
        radius = float(params.get("radius", 0.5))
        predicate = _stadium_predicate(c, half_length, radius)
        box = (
            c.real - half_length - radius,
            c.real + half_length + radius,
            c.imag - radius,
            c.imag + radius,
        )
    else:
        raise ValueError(f"`{shape}` is not a known indicator shape")
    if any(not v > 0 for v in params.values()):
        raise ValueError(f"shape parameters must be > 0, got {params}")
    return indicator(predicate, box, label=f"{shape}({', '.join(f'{k}={v}' for k, v in params.items())})")


def contains(d: Domain, p: PointLike) -> bool:
    """True iff `p` lies in the open set represented by `d`."""
    return bool(d.contains(np.array([as_point(p)]))[0])


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """
    Nodes strictly inside a domain with positive area weights, so that
    `sum(f(nodes) * weights)` approximates the integral of f over the domain.
    """

    nodes: np.ndarray
    weights: np.ndarray
    resolution: int
    order: int
    estimated_area_error: float
    domain: Domain

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape:
            raise ValueError("nodes and weights must have equal length")
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def area(self) -> float:
        return float(np.sum(self.weights))

    @property
    def cell_size(self) -> float:
        """Side length of a uniform cell of the bounding box at this resolution."""
        return 2.0 * self.domain.half_width / self.resolution

    def integrate(self, values: np.ndarray) -> complex:
        return np.sum(values * self.weights)


def _gauss(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on [-1, 1]; order 1 is the midpoint rule."""
    return np.polynomial.legendre.leggauss(order)


def _composite(lo: float, hi: float, cells: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule with `cells` uniform cells on [lo, hi]."""
    x, w = _gauss(order)
    edges = np.linspace(lo, hi, cells + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _polar_cells(d: Domain, resolution: int) -> Tuple[float, float, int, int]:
    if d.kind == DomainKind.disc:
        r_lo, r_hi = 0.0, d.radius
    else:
        r_lo, r_hi = d.r_inner, d.r_outer
    # radial cells as wide as a bounding-box cell, angular cells ~ 2 per box cell
    radial_cells = max(2, int(np.ceil(resolution * (r_hi - r_lo) / (2.0 * r_hi))))
    angular_cells = 2 * resolution
    return r_lo, r_hi, radial_cells, angular_cells


def _polar_nodes(d: Domain, resolution: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    r_lo, r_hi, radial_cells, angular_cells = _polar_cells(d, resolution)
    r, wr = _composite(r_lo, r_hi, radial_cells, order)
    theta, wt = _composite(0.0, 2.0 * np.pi, angular_cells, order)
    nodes = d.center + (r[:, None] * np.exp(1j * theta)[None, :])
    # Jacobian r dr dtheta
    weights = (wr * r)[:, None] * wt[None, :]
    return nodes.ravel(), weights.ravel()


def _cartesian_nodes(d: Domain, resolution: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    x_min, x_max, y_min, y_max = d.box
    x, wx = _composite(x_min, x_max, resolution, order)
    y, wy = _composite(y_min, y_max, resolution, order)
    nodes = (x[None, :] + 1j * y[:, None]).ravel()
    weights = (wy[:, None] * wx[None, :]).ravel()
    inside = d.contains(nodes)
    return nodes[inside], weights[inside]


def _nodes(d: Domain, resolution: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    if d.is_closed_form:
        return _polar_nodes(d, resolution, order)
    return _cartesian_nodes(d, resolution, order)


def _cartesian_area(d: Domain, resolution: int, order: int) -> float:
    return float(np.sum(_cartesian_nodes(d, resolution, order)[1]))


def _area_error(d: Domain, area: float, resolution: int, order: int) -> float:
    """
    Polar rules integrate the area of discs and annuli exactly, so those are compared
    against the analytic area and sit at the floor. Clipped Cartesian rules take the
    largest gap between successive doublings from `resolution` up to
    `AREA_REFERENCE_RESOLUTION`; the chain of a doubled resolution is a sub-chain, so
    the estimate does not grow under refinement below that level.
    """
    if d.is_closed_form:
        return max(abs(area - d.area), AREA_FLOOR * d.area)
    top = max(2 * resolution, AREA_REFERENCE_RESOLUTION)
    areas = [area]
    current = 2 * resolution
    while current <= top:
        areas.append(_cartesian_area(d, current, order))
        current *= 2
    gap = max(abs(coarse - fine) for coarse, fine in zip(areas, areas[1:]))
    return max(gap, AREA_FLOOR * area)


def build_quadrature(d: Domain, resolution: int = None, order: int = None) -> QuadratureRule:
    """
    Builds a tensor-product Gauss rule with `resolution` uniform cells per axis
    and `order` Gauss points per cell direction (order 1 is the midpoint rule).

    `estimated_area_error` compares the rule's total weight against refined rules
    (see `_area_error`); it does not increase when the resolution is doubled.
    """
    resolution = resolution or settings.DEFAULT_RESOLUTION
    order = order or settings.DEFAULT_ORDER
    if resolution < 4:
        raise ValueError(f"resolution must be >= 4, got {resolution}")
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")

    nodes, weights = _nodes(d, resolution, order)
    if len(nodes) == 0:
        raise EmptyDomain(f"no quadrature node falls inside {d.describe()}")

    area = float(np.sum(weights))
    estimated_area_error = _area_error(d, area, resolution, order)

    logger.debug(
        f"built quadrature for {d.describe()}: {len(nodes)} nodes, "
        f"{area=:.15g}, {estimated_area_error=:.3g}"
    )
    return QuadratureRule(
        nodes=nodes,
        weights=weights,
        resolution=resolution,
        order=order,
        estimated_area_error=estimated_area_error,
        domain=d,
    )


### Distances ###
def _lattice(box, size: int, pad: int = 0) -> np.ndarray:
    x_min, x_max, y_min, y_max = box
    hx, hy = (x_max - x_min) / size, (y_max - y_min) / size
    xs = x_min + hx * (np.arange(-pad, size + pad) + 0.5)
    ys = y_min + hy * (np.arange(-pad, size + pad) + 0.5)
    return (xs[None, :] + 1j * ys[:, None]).ravel()


@lru_cache(maxsize=32)
def _indicator_trees(d: Domain) -> Tuple[Optional[cKDTree], Optional[cKDTree]]:
    # one padding cell guarantees the box boundary is represented in the complement
    size = settings.INDICATOR_DISTANCE_RESOLUTION
    lattice = _lattice(d.box, size, pad=1)
    inside = d.contains(lattice)
    as_xy = np.column_stack([lattice.real, lattice.imag])
    interior = cKDTree(as_xy[inside]) if inside.any() else None
    complement = cKDTree(as_xy[~inside]) if (~inside).any() else None
    return interior, complement


def boundary_distance(d: Domain, points) -> np.ndarray:
    """
    Distance from each point to the complement of `d` (0 for points outside).
    Indicator domains are approximated on a lattice of
    `INDICATOR_DISTANCE_RESOLUTION` cells per axis.
    """
    z = as_points(points)
    inside = d.contains(z)
    if d.kind == DomainKind.disc:
        dist = d.radius - np.abs(z - d.center)
    elif d.kind == DomainKind.annulus:
        r = np.abs(z - d.center)
        dist = np.minimum(r - d.r_inner, d.r_outer - r)
    else:
        _, complement = _indicator_trees(d)
        dist, _ = complement.query(np.column_stack([z.real, z.imag]))
    return np.where(inside, dist, 0.0)


def distance_to(d: Domain, points) -> np.ndarray:
    """Distance from each point to the closure of `d` (0 for points inside)."""
    z = as_points(points)
    if d.kind == DomainKind.disc:
        dist = np.abs(z - d.center) - d.radius
    elif d.kind == DomainKind.annulus:
        r = np.abs(z - d.center)
        dist = np.maximum(r - d.r_outer, d.r_inner - r)
    else:
        interior, _ = _indicator_trees(d)
        if interior is None:
            raise EmptyDomain(f"no lattice point falls inside {d.describe()}")
        dist, _ = interior.query(np.column_stack([z.real, z.imag]))
    return np.where(d.contains(z), 0.0, np.maximum(dist, 0.0))


def compact_sample_grid(d: Domain, margin: float, count: int) -> List[complex]:
    """
    Returns at most `count` lattice points whose distance to the complement of `d`
    is at least `margin`, evenly picked from the first lattice (doubling in size)
    that has enough of them. Deterministic for fixed inputs.
    """
    if not margin > 0:
        raise ValueError(f"margin must be > 0, got {margin}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")

    size = int(np.ceil(np.sqrt(count))) + 1
    admissible = np.array([], dtype=complex)
    while True:
        lattice = _lattice(d.box, size)
        admissible = lattice[boundary_distance(d, lattice) >= margin]
        if len(admissible) >= count or size >= settings.GRID_MAX_LATTICE:
            break
        size = min(2 * size, settings.GRID_MAX_LATTICE)

    if len(admissible) == 0:
        raise EmptyDomain(f"no point of {d.describe()} is at distance >= {margin} from its boundary")
    if len(admissible) < count:
        logger.debug(f"only {len(admissible)} of {count} grid points found at {margin=}")
        return [complex(p) for p in admissible]

    picks = np.unique(np.round(np.linspace(0, len(admissible) - 1, count)).astype(int))
    return [complex(p) for p in admissible[picks]]
