"""Radial domains, cell-centred grids, quadrature and Henon weight fields.

Domains are an interval (0, R) in 1D or a disk/annulus centred at the origin
in 2D. Grids are cell-centred so that no node sits at r = 0 or on the
boundary: negative powers |x|^(-a) stay finite and Dirichlet conditions are
imposed uniformly through ghost values. 2D domains are discretized in polar
coordinates (r, theta) with a periodic theta direction; the quadrature weight
of a cell is its polar area r_i * dr * dtheta, which reproduces |Ω| exactly
for every resolution.

A disk or annulus can also be reduced to its radial section (``n_theta == 1``
with an angular measure of 2*pi); fields on such a grid represent
axisymmetric functions and integrals keep their 2D meaning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as _dcfield

import numpy as np

__all__ = [
    "Domain",
    "Grid",
    "ScalarField",
    "GridError",
    "build_grid",
    "build_radial_grid",
    "integrate",
    "henon_weight",
    "split_signs",
    "save_field",
    "load_field",
]

DOMAIN_KINDS = ("interval", "disk", "annulus")


class GridError(ValueError):
    """Invalid domain or grid construction parameters."""


@dataclass(frozen=True)
class Domain:
    """A radial domain: interval (0, R), disk of radius R, or annulus."""

    kind: str
    inner_radius: float
    outer_radius: float

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise GridError(f"unknown domain kind {self.kind!r}")
        if self.outer_radius <= self.inner_radius:
            raise GridError(
                f"outer_radius {self.outer_radius} must exceed "
                f"inner_radius {self.inner_radius}"
            )
        if self.inner_radius < 0:
            raise GridError("inner_radius must be >= 0")
        if self.kind == "annulus" and self.inner_radius <= 0:
            raise GridError("annulus requires inner_radius > 0")
        if self.kind in ("interval", "disk") and self.inner_radius != 0:
            raise GridError(f"{self.kind} requires inner_radius == 0")

    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval" else 2

    @property
    def volume(self) -> float:
        """Measure of the domain (length in 1D, area in 2D)."""
        if self.kind == "interval":
            return self.outer_radius - self.inner_radius
        return math.pi * (self.outer_radius**2 - self.inner_radius**2)

    @property
    def has_inner_boundary(self) -> bool:
        """True when a Dirichlet condition is imposed at the inner radius."""
        return self.kind in ("interval", "annulus")

    @staticmethod
    def interval(length: float = 1.0) -> "Domain":
        return Domain("interval", 0.0, length)

    @staticmethod
    def disk(radius: float = 1.0) -> "Domain":
        return Domain("disk", 0.0, radius)

    @staticmethod
    def annulus(inner: float, outer: float) -> "Domain":
        return Domain("annulus", inner, outer)


@dataclass(frozen=True, eq=False)
class Grid:
    """Cell-centred discretization of a Domain.

    Nodes are indexed flat as ``i * n_theta + j`` with ``i`` radial and ``j``
    angular. ``n_theta == 1`` either means a 1D interval or the axisymmetric
    reduction of a disk/annulus (then dtheta == 2*pi). Immutable; safe to
    share between concurrent solves.
    """

    domain: Domain
    n_r: int
    n_theta: int
    r: np.ndarray = _dcfield(repr=False)
    theta: np.ndarray = _dcfield(repr=False)
    dr: float
    dtheta: float
    weights: np.ndarray = _dcfield(repr=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.n_r == other.n_r
            and self.n_theta == other.n_theta
        )

    @property
    def size(self) -> int:
        return self.n_r * self.n_theta

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_r, self.n_theta)

    @property
    def is_axisymmetric(self) -> bool:
        """Radial reduction of a 2D domain (fields depend on r only)."""
        return self.domain.dim == 2 and self.n_theta == 1

    @property
    def r_flat(self) -> np.ndarray:
        """Radius of every node in flat ordering."""
        return np.repeat(self.r, self.n_theta)

    @property
    def theta_flat(self) -> np.ndarray:
        return np.tile(self.theta, self.n_r)

    @property
    def boundary_mask(self) -> np.ndarray:
        """Flat mask of cells adjacent to a Dirichlet boundary face."""
        mask2 = np.zeros(self.shape, dtype=bool)
        mask2[-1, :] = True
        if self.domain.has_inner_boundary:
            mask2[0, :] = True
        return mask2.ravel()

    def field(self, values=None) -> "ScalarField":
        """Wrap flat nodal values (default zeros) as a ScalarField."""
        if values is None:
            vals = np.zeros(self.size)
        else:
            vals = np.asarray(values, dtype=float).ravel()
        return ScalarField(vals, self)


@dataclass
class ScalarField:
    """Real-valued grid function; the unit of all PDE data."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.size != self.grid.size:
            raise GridError(
                f"field has {self.values.size} values, grid has {self.grid.size} nodes"
            )

    def _check_same_grid(self, other: "ScalarField") -> None:
        if other.grid is not self.grid and other.grid != self.grid:
            raise GridError("field arithmetic requires matching grids")

    def copy(self) -> "ScalarField":
        return ScalarField(self.values.copy(), self.grid)

    def reshape2(self) -> np.ndarray:
        """Values as an (n_r, n_theta) array view."""
        return self.values.reshape(self.grid.shape)

    def __add__(self, other):
        self._check_same_grid(other)
        return ScalarField(self.values + other.values, self.grid)

    def __sub__(self, other):
        self._check_same_grid(other)
        return ScalarField(self.values - other.values, self.grid)

    def __mul__(self, c):
        if isinstance(c, ScalarField):
            self._check_same_grid(c)
            return ScalarField(self.values * c.values, self.grid)
        return ScalarField(self.values * float(c), self.grid)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(-self.values, self.grid)

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def norm_l2(self) -> float:
        return math.sqrt(float(np.sum(self.grid.weights * self.values**2)))


def build_grid(domain: Domain, n_r: int, n_theta: int = 1) -> Grid:
    """Cell-centred grid; for 2D domains n_theta must be even and >= 8."""
    if n_r < 4:
        raise GridError(f"n_r must be >= 4, got {n_r}")
    if domain.dim == 2:
        if n_theta < 8:
            raise GridError(f"2D grids need n_theta >= 8, got {n_theta}")
        if n_theta % 2 != 0:
            raise GridError("n_theta must be even (reflection snapping needs it)")
    else:
        n_theta = 1
    return _make_grid(domain, n_r, n_theta)


def build_radial_grid(domain: Domain, n_r: int) -> Grid:
    """Axisymmetric reduction of a 2D domain (or the interval itself).

    Fields on the result are radial profiles; quadrature and the Laplacian
    keep their 2D polar form so energies are directly comparable with full
    grids on the same domain.
    """
    if n_r < 4:
        raise GridError(f"n_r must be >= 4, got {n_r}")
    return _make_grid(domain, n_r, 1)


def _make_grid(domain: Domain, n_r: int, n_theta: int) -> Grid:
    dr = (domain.outer_radius - domain.inner_radius) / n_r
    r = domain.inner_radius + (np.arange(n_r) + 0.5) * dr
    if domain.dim == 1:
        dtheta = 1.0
        theta = np.zeros(1)
        weights = np.full(n_r, dr)
    else:
        dtheta = 2.0 * math.pi / n_theta
        theta = (np.arange(n_theta) + 0.5) * dtheta
        weights = np.repeat(r * dr * dtheta, n_theta)
    weights.setflags(write=False)
    r.setflags(write=False)
    theta.setflags(write=False)
    return Grid(domain, n_r, n_theta, r, theta, dr, dtheta, weights)


def integrate(f: ScalarField) -> float:
    """Quadrature integral of f over the domain."""
    return float(np.dot(f.grid.weights, f.values))


def henon_weight(grid: Grid, exponent: float) -> ScalarField:
    """The radial weight field |x|^exponent (finite: no node at r = 0)."""
    return ScalarField(grid.r_flat ** float(exponent), grid)


def split_signs(f: ScalarField) -> tuple[ScalarField, ScalarField]:
    """Positive/negative parts with the convention f = f_plus - f_minus."""
    plus = np.maximum(f.values, 0.0)
    minus = np.maximum(-f.values, 0.0)
    return ScalarField(plus, f.grid), ScalarField(minus, f.grid)


# ---------------------------------------------------------------------------
# plain-text field dumps
#
# Header lines `# key=value` (kind, radii, n_r, n_theta), then one row per
# node: `i j r theta value` in 2D, `i r value` in 1D. Written with 17
# significant digits so the round trip is bit exact.
# ---------------------------------------------------------------------------


def save_field(f: ScalarField, path) -> None:
    g = f.grid
    d = g.domain
    lines = [
        f"# kind={d.kind}",
        f"# inner_radius={d.inner_radius:.17g}",
        f"# outer_radius={d.outer_radius:.17g}",
        f"# n_r={g.n_r}",
        f"# n_theta={g.n_theta}",
    ]
    vals = f.values
    if d.dim == 1:
        for i in range(g.n_r):
            lines.append(f"{i} {g.r[i]:.17g} {vals[i]:.17g}")
    else:
        for i in range(g.n_r):
            for j in range(g.n_theta):
                lines.append(
                    f"{i} {j} {g.r[i]:.17g} {g.theta[j]:.17g} "
                    f"{vals[i * g.n_theta + j]:.17g}"
                )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_field(path) -> ScalarField:
    header: dict[str, str] = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                header[key.strip()] = value.strip()
            else:
                rows.append(line.split())
    try:
        kind = header["kind"]
        inner = float(header["inner_radius"])
        outer = float(header["outer_radius"])
        n_r = int(header["n_r"])
        n_theta = int(header["n_theta"])
    except KeyError as exc:
        raise GridError(f"field dump missing header key {exc}") from exc
    domain = Domain(kind, inner, outer)
    grid = _make_grid(domain, n_r, n_theta)
    values = np.zeros(grid.size)
    for row in rows:
        if domain.dim == 1:
            i, _r, v = int(row[0]), row[1], row[2]
            values[i] = float(v)
        else:
            i, j = int(row[0]), int(row[1])
            values[i * n_theta + j] = float(row[4])
    return ScalarField(values, grid)
