"""Probability measures on the real line.

A :class:`Measure` is a finite mixture of parts: point masses, semicircle
laws, Marchenko-Pastur laws, linearly interpolated density tables and
user-supplied densities on a compact interval. Atoms are tracked exactly;
continuous parts carry closed forms where they exist and fall back to
quadrature otherwise.

Measures are immutable and every method is a pure function of its
arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import optimize as _optimize

from . import numerics
from .errors import DomainError

WEIGHT_TOL = 1e-12
DENSITY_NORM_TOL = 1e-8
_QUAD_TOL = 1e-13


# ---------------------------------------------------------------------------
# interval unions


class IntervalUnion:
    """Sorted union of pairwise disjoint intervals.

    ``closed=True`` means every interval is closed (degenerate ``[a, a]``
    allowed, e.g. an isolated support point); ``closed=False`` means every
    interval is open. Endpoints may be infinite.
    """

    def __init__(self, intervals: Iterable[Sequence[float]] = (), closed: bool = True):
        self.closed = closed
        items = sorted((float(lo), float(hi)) for lo, hi in intervals)
        merged: list[list[float]] = []
        for lo, hi in items:
            if lo > hi:
                raise DomainError(f"interval with left endpoint > right: ({lo}, {hi})")
            if not closed and lo == hi:
                continue
            if merged and (lo < merged[-1][1] or (closed and lo == merged[-1][1])):
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        self.intervals: tuple[tuple[float, float], ...] = tuple((a, b) for a, b in merged)

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __eq__(self, other):
        return (isinstance(other, IntervalUnion) and self.closed == other.closed
                and self.intervals == other.intervals)

    def __repr__(self):
        kind = "closed" if self.closed else "open"
        return f"IntervalUnion({list(self.intervals)!r}, {kind})"

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def contains(self, x: float) -> bool:
        for lo, hi in self.intervals:
            if (lo <= x <= hi) if self.closed else (lo < x < hi):
                return True
        return False

    def component_of(self, x: float):
        for lo, hi in self.intervals:
            if (lo <= x <= hi) if self.closed else (lo < x < hi):
                return lo, hi
        return None

    def complement(self) -> "IntervalUnion":
        if not self.intervals:
            return IntervalUnion([(-math.inf, math.inf)], closed=not self.closed)
        bounds = [-math.inf] + [v for iv in self.intervals for v in iv] + [math.inf]
        out = []
        for lo, hi in zip(bounds[0::2], bounds[1::2]):
            if lo < hi or (self.closed is False and lo == hi and math.isfinite(lo)):
                out.append((lo, hi))
        return IntervalUnion(out, closed=not self.closed)

    def clip(self, lo: float, hi: float) -> "IntervalUnion":
        out = []
        for a, b in self.intervals:
            a2, b2 = max(a, lo), min(b, hi)
            if a2 < b2 or (self.closed and a2 == b2):
                out.append((a2, b2))
        return IntervalUnion(out, closed=self.closed)

    def hull(self):
        if not self.intervals:
            return None
        return self.intervals[0][0], self.intervals[-1][1]

    def total_length(self) -> float:
        return sum(b - a for a, b in self.intervals)

    def to_list(self):
        return [[a, b] for a, b in self.intervals]


# ---------------------------------------------------------------------------
# measure parts


@dataclass(frozen=True)
class Atom:
    location: float

    def to_dict(self):
        return {"type": "atom", "location": self.location}


def _segment_distance(z, lo: float, hi: float) -> float:
    x = min(max(z.real, lo), hi)
    return abs(complex(z) - x)


class _Continuous:
    """Shared behaviour of absolutely continuous parts on ``[lo, hi]``."""

    lo: float
    hi: float

    def interval(self):
        return self.lo, self.hi

    def pdf(self, x):
        raise NotImplementedError

    def expect(self, g: Callable[[np.ndarray], np.ndarray], tol: float = _QUAD_TOL):
        # x = mid + half*sin(theta) removes square-root endpoint behaviour.
        mid, half = 0.5 * (self.lo + self.hi), 0.5 * (self.hi - self.lo)

        def integrand(theta):
            c = np.cos(theta)
            x = mid + half * np.sin(theta)
            return g(x) * self.pdf(x) * half * c

        return numerics.gl_integrate(integrand, -0.5 * math.pi, 0.5 * math.pi, tol=tol)

    def stieltjes(self, z):
        return self.expect(lambda x: 1.0 / (x - z))

    def inverse_moment(self, z, k: int):
        return self.expect(lambda x: 1.0 / (x - z) ** k)

    def second_moment(self) -> float:
        return float(self.expect(lambda x: x * x))

    # Orders k for which inverse_moment is available in closed form.
    closed_orders = 0

    def ratio_moment(self, m, k: int):
        """``int (u / (1 + u m))^k`` against this part.

        Near-singular cases (``-1/m`` close to the support) use the exact
        expansion ``u/(1+um) = zeta^2/(zeta-u) - zeta`` with ``zeta = -1/m``
        when closed-form inverse moments exist.
        """
        if m != 0 and k <= self.closed_orders:
            zeta = -1.0 / m
            if _segment_distance(zeta, self.lo, self.hi) < 0.5 * (self.hi - self.lo):
                total = (-zeta) ** k
                for j in range(1, k + 1):
                    total += math.comb(k, j) * zeta ** (2 * j) * (-zeta) ** (k - j) * (-1) ** j * self.inverse_moment(zeta, j)
                return total
        return self.expect(lambda u: (u / (1.0 + u * m)) ** k)

    def cdf(self, x: float) -> float:
        if x <= self.lo:
            return 0.0
        if x >= self.hi:
            return 1.0
        mid, half = 0.5 * (self.lo + self.hi), 0.5 * (self.hi - self.lo)
        t_end = math.asin(min(1.0, max(-1.0, (x - mid) / half)))

        def integrand(theta):
            return self.pdf(mid + half * np.sin(theta)) * half * np.cos(theta)

        val = numerics.gl_integrate(integrand, -0.5 * math.pi, t_end, tol=1e-14)
        return float(min(1.0, max(0.0, val)))

    def unbounded_points(self) -> list[float]:
        """Points near which the Stieltjes transform of this part is unbounded."""
        return []


class Semicircle(_Continuous):
    """Semicircle law with density ``2/(pi R^2) sqrt(R^2 - (x-c)^2)``."""

    closed_orders = 5

    def __init__(self, radius: float, center: float = 0.0):
        if not radius > 0:
            raise DomainError("semicircle radius must be positive")
        self.radius = float(radius)
        self.center = float(center)
        self.lo, self.hi = self.center - self.radius, self.center + self.radius

    def __repr__(self):
        return f"Semicircle(radius={self.radius}, center={self.center})"

    def __eq__(self, other):
        return isinstance(other, Semicircle) and (self.radius, self.center) == (other.radius, other.center)

    def __hash__(self):
        return hash(("sc", self.radius, self.center))

    def to_dict(self):
        return {"type": "semicircle", "radius": self.radius, "center": self.center}

    def pdf(self, x):
        t = np.asarray(x, dtype=float) - self.center
        r2 = self.radius ** 2
        return 2.0 / (math.pi * r2) * np.sqrt(np.clip(r2 - t * t, 0.0, None))

    def expect(self, g, tol: float = _QUAD_TOL):
        c, r = self.center, self.radius

        def integrand(theta):
            ct = np.cos(theta)
            return g(c + r * np.sin(theta)) * (2.0 / math.pi) * ct * ct

        return numerics.gl_integrate(integrand, -0.5 * math.pi, 0.5 * math.pi, tol=tol)

    def _zeta_s(self, z):
        zeta = z - self.center
        r2 = self.radius ** 2
        if isinstance(z, complex) and z.imag != 0:
            # Lower half-plane values follow from m(conj z) = conj m(z).
            lower = z.imag < 0
            zu = zeta.conjugate() if lower else zeta
            s = complex(numerics.sqrt_upper(zu * zu - r2))
            if lower:
                s = s.conjugate()
        else:
            zeta = float(np.real(zeta))
            s = math.copysign(math.sqrt(max(zeta * zeta - r2, 0.0)), zeta)
        return zeta, s

    def stieltjes(self, z):
        zeta, s = self._zeta_s(z)
        return -2.0 / (zeta + s)

    def inverse_moment(self, z, k: int):
        zeta, s = self._zeta_s(z)
        if k == 1:
            return -2.0 / (zeta + s)
        if k == 2:
            return 2.0 / (s * (zeta + s))
        if k == 3:
            return -1.0 / s ** 3
        if k == 4:
            return zeta / s ** 5
        if k == 5:
            return -(4.0 * zeta * zeta + self.radius ** 2) / (4.0 * s ** 7)
        return super().inverse_moment(z, k)

    def second_moment(self) -> float:
        return self.center ** 2 + self.radius ** 2 / 4.0

    def cdf(self, x: float) -> float:
        t = min(1.0, max(-1.0, (x - self.center) / self.radius))
        return 0.5 + (t * math.sqrt(1.0 - t * t) + math.asin(t)) / math.pi


class MarchenkoPastur(_Continuous):
    """Marchenko-Pastur law with ratio ``lambda`` and scale ``sigma``.

    This is the law of ``sigma * X`` where ``X`` has density
    ``sqrt((b-x)(x-a)) / (2 pi lambda x)`` on ``[(1-sqrt(l))^2, (1+sqrt(l))^2]``
    plus an atom ``1 - 1/lambda`` at zero when ``lambda > 1``. Inside a
    :class:`Measure` the atom is split off, and the part itself stands for
    the normalized continuous bulk.
    """

    def __init__(self, ratio: float, scale: float = 1.0):
        if not ratio > 0 or not scale > 0:
            raise DomainError("Marchenko-Pastur ratio and scale must be positive")
        self.ratio = float(ratio)
        self.scale = float(scale)
        sq = math.sqrt(self.ratio)
        self.lo = self.scale * (1.0 - sq) ** 2
        self.hi = self.scale * (1.0 + sq) ** 2

    def __repr__(self):
        return f"MarchenkoPastur(ratio={self.ratio}, scale={self.scale})"

    def __eq__(self, other):
        return isinstance(other, MarchenkoPastur) and (self.ratio, self.scale) == (other.ratio, other.scale)

    def __hash__(self):
        return hash(("mp", self.ratio, self.scale))

    def to_dict(self):
        return {"type": "mp", "ratio": self.ratio, "scale": self.scale}

    @property
    def zero_mass(self) -> float:
        return max(0.0, 1.0 - 1.0 / self.ratio)

    def pdf(self, x):
        """Density of the normalized continuous bulk."""
        x = np.asarray(x, dtype=float)
        bulk = min(1.0, 1.0 / self.ratio)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.sqrt(np.clip((self.hi - x) * (x - self.lo), 0.0, None)) / (
                2.0 * math.pi * self.ratio * self.scale * x)
        return np.where((x > self.lo) & (x < self.hi), val / bulk, 0.0)

    def unbounded_points(self):
        return [0.0] if self.ratio >= 1.0 else []


class DensityTable(_Continuous):
    """Piecewise-linear density through the points ``(x_i, pdf_i)``.

    The table is renormalized by its trapezoid integral so that it is a
    probability density; outside ``[x_0, x_N]`` the density is zero.
    """

    def __init__(self, x: Sequence[float], pdf: Sequence[float]):
        x = np.asarray(x, dtype=float)
        p = np.asarray(pdf, dtype=float)
        if x.ndim != 1 or x.shape != p.shape or x.size < 2:
            raise DomainError("density table needs matching 1-d x and pdf arrays of length >= 2")
        if np.any(np.diff(x) <= 0):
            raise DomainError("density table x values must be strictly increasing")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise DomainError("density table pdf values must be finite and nonnegative")
        total = float(np.trapezoid(p, x))
        if not total > 0:
            raise DomainError("density table has zero mass")
        self.x = x
        self.p = p / total
        self.lo, self.hi = float(x[0]), float(x[-1])
        self._slope = np.diff(self.p) / np.diff(self.x)
        self._cum = np.concatenate([[0.0], np.cumsum(0.5 * (self.p[1:] + self.p[:-1]) * np.diff(self.x))])

    def __repr__(self):
        return f"DensityTable(n={self.x.size}, [{self.lo}, {self.hi}])"

    def __eq__(self, other):
        return (isinstance(other, DensityTable) and np.array_equal(self.x, other.x)
                and np.array_equal(self.p, other.p))

    def __hash__(self):
        return hash(("table", self.x.tobytes(), self.p.tobytes()))

    def to_dict(self):
        return {"type": "density_table", "x": self.x.tolist(), "pdf": self.p.tolist()}

    def pdf(self, x):
        return np.interp(x, self.x, self.p, left=0.0, right=0.0)

    def expect(self, g, tol: float = _QUAD_TOL):
        # Composite Gauss-Legendre per segment; 20 vs 10 nodes as error check.
        a, b = self.x[:-1], self.x[1:]
        half, mid = 0.5 * (b - a), 0.5 * (b + a)
        results = []
        for n in (10, 20):
            t, w = numerics.gauss_legendre(n)
            xs = mid[:, None] + half[:, None] * t[None, :]
            vals = g(xs.ravel()).reshape(xs.shape) * self.pdf(xs)
            results.append(np.sum(half * (vals @ w)))
        if abs(results[1] - results[0]) <= tol * max(1.0, abs(results[1])) * 1e3:
            return results[1]
        cplx = np.iscomplexobj(results[1])
        total = 0.0
        for lo, hi in zip(a, b):
            f = (lambda s: complex(g(np.array([s]))[0] * self.pdf(s))) if cplx else (
                lambda s: float(g(np.array([s]))[0] * self.pdf(s)))
            total += numerics.integrate(f, lo, hi, tol=1e-13)
        return total

    def _far(self, z) -> bool:
        width = self.hi - self.lo
        d = max(self.lo - z.real, z.real - self.hi, abs(z.imag), 0.0)
        return d > 4.0 * width

    def _log_ratio(self, z):
        if isinstance(z, complex) and z.imag != 0:
            return np.log(self.x[1:] - z) - np.log(self.x[:-1] - z)
        z = float(np.real(z))
        return np.log(np.abs(self.x[1:] - z)) - np.log(np.abs(self.x[:-1] - z))

    def stieltjes(self, z):
        if self._far(complex(z)):
            return super().stieltjes(z)
        s = self._slope
        pz = self.p[:-1] + s * (z - self.x[:-1])
        return np.sum(s * np.diff(self.x) + pz * self._log_ratio(z))

    def inverse_moment(self, z, k: int):
        if k == 1:
            return self.stieltjes(z)
        if k == 2 and not self._far(complex(z)):
            s = self._slope
            pz = self.p[:-1] + s * (z - self.x[:-1])
            return np.sum(s * self._log_ratio(z) + pz * (1.0 / (self.x[:-1] - z) - 1.0 / (self.x[1:] - z)))
        return super().inverse_moment(z, k)

    def second_moment(self) -> float:
        return float(self.expect(lambda x: x * x))

    # Orders k for which inverse_moment is available in closed form.
    closed_orders = 0

    def ratio_moment(self, m, k: int):
        """``int (u / (1 + u m))^k`` against this part.

        Near-singular cases (``-1/m`` close to the support) use the exact
        expansion ``u/(1+um) = zeta^2/(zeta-u) - zeta`` with ``zeta = -1/m``
        when closed-form inverse moments exist.
        """
        if m != 0 and k <= self.closed_orders:
            zeta = -1.0 / m
            if _segment_distance(zeta, self.lo, self.hi) < 0.5 * (self.hi - self.lo):
                total = (-zeta) ** k
                for j in range(1, k + 1):
                    total += math.comb(k, j) * zeta ** (2 * j) * (-zeta) ** (k - j) * (-1) ** j * self.inverse_moment(zeta, j)
                return total
        return self.expect(lambda u: (u / (1.0 + u * m)) ** k)

    def cdf(self, x: float) -> float:
        if x <= self.lo:
            return 0.0
        if x >= self.hi:
            return 1.0
        i = int(np.searchsorted(self.x, x, side="right")) - 1
        dx = x - self.x[i]
        return float(self._cum[i] + self.p[i] * dx + 0.5 * self._slope[i] * dx * dx)

    def unbounded_points(self):
        pts = []
        if self.p[0] > 0:
            pts.append(self.lo)
        if self.p[-1] > 0:
            pts.append(self.hi)
        return pts


class GeneralDensity(_Continuous):
    """Density given by a vectorized callback, supported on ``[a, b]``."""

    def __init__(self, pdf: Callable[[np.ndarray], np.ndarray], a: float, b: float, name: str = "density"):
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise DomainError("general density needs a finite interval a < b")
        self._pdf = pdf
        self.lo, self.hi = float(a), float(b)
        self.name = name
        total = float(super().expect(lambda x: np.ones_like(x)))
        if abs(total - 1.0) > DENSITY_NORM_TOL:
            raise DomainError(f"density integrates to {total!r}, not 1")

    def __repr__(self):
        return f"GeneralDensity({self.name!r}, [{self.lo}, {self.hi}])"

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            val = np.asarray(self._pdf(x), dtype=float)
        return np.where((x > self.lo) & (x < self.hi), val, 0.0)

    def to_dict(self):
        raise DomainError("general densities cannot be serialized; use a density_table")

    def unbounded_points(self):
        pts = []
        eps = 1e-9 * (self.hi - self.lo)
        if self.pdf(np.array([self.lo + eps]))[0] > 1e-6:
            pts.append(self.lo)
        if self.pdf(np.array([self.hi - eps]))[0] > 1e-6:
            pts.append(self.hi)
        return pts


Part = Atom | Semicircle | MarchenkoPastur | DensityTable | GeneralDensity


# ---------------------------------------------------------------------------
# measures


class Measure:
    """Probability measure: weighted mixture of parts.

    ``components`` is the flattened list of ``(weight, part)`` pairs as
    supplied (nested measures are expanded, duplicate atoms merged).
    Internally Marchenko-Pastur atoms at zero are split off so that all
    point masses live in one canonical table (:attr:`atom_locations`,
    :attr:`atom_weights`).
    """

    def __init__(self, components: Iterable[tuple[float, "Part | Measure"]]):
        flat: list[tuple[float, Part]] = []
        for w, part in components:
            w = float(w)
            if not (w > 0 and math.isfinite(w)):
                raise DomainError(f"component weight must be positive, got {w}")
            if isinstance(part, Measure):
                flat.extend((w * w2, p2) for w2, p2 in part.components)
            else:
                flat.append((w, part))
        total = sum(w for w, _ in flat)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise DomainError(f"weights sum to {total!r}, not 1")

        merged: list[tuple[float, Part]] = []
        atom_index: dict[float, int] = {}
        for w, part in flat:
            if isinstance(part, Atom):
                loc = float(part.location)
                if not math.isfinite(loc):
                    raise DomainError("atom location must be finite")
                if loc in atom_index:
                    i = atom_index[loc]
                    merged[i] = (merged[i][0] + w, merged[i][1])
                    continue
                atom_index[loc] = len(merged)
                merged.append((w, Atom(loc)))
            else:
                merged.append((w, part))
        self.components: tuple[tuple[float, Part], ...] = tuple(merged)

        atoms: dict[float, float] = {}
        cont: list[tuple[float, _Continuous]] = []
        for w, part in merged:
            if isinstance(part, Atom):
                atoms[part.location] = atoms.get(part.location, 0.0) + w
            elif isinstance(part, MarchenkoPastur) and part.zero_mass > 0:
                atoms[0.0] = atoms.get(0.0, 0.0) + w * part.zero_mass
                cont.append((w * (1.0 - part.zero_mass), part))
            else:
                cont.append((w, part))
        locs = sorted(atoms)
        self.atom_locations = np.array(locs, dtype=float)
        self.atom_weights = np.array([atoms[x] for x in locs], dtype=float)
        self.continuous: tuple[tuple[float, _Continuous], ...] = tuple(cont)

    # construction helpers -------------------------------------------------

    @classmethod
    def atom(cls, location: float) -> "Measure":
        return cls([(1.0, Atom(location))])

    @classmethod
    def discrete(cls, locations: Sequence[float], weights: Sequence[float]) -> "Measure":
        return cls([(w, Atom(x)) for x, w in zip(locations, weights)])

    @classmethod
    def semicircle(cls, radius: float = 1.0, center: float = 0.0) -> "Measure":
        return cls([(1.0, Semicircle(radius, center))])

    @classmethod
    def marchenko_pastur(cls, ratio: float, scale: float = 1.0) -> "Measure":
        return cls([(1.0, MarchenkoPastur(ratio, scale))])

    def __repr__(self):
        inner = ", ".join(f"{w:g}*{p!r}" for w, p in self.components)
        return f"Measure({inner})"

    def __eq__(self, other):
        return isinstance(other, Measure) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    # basic properties -----------------------------------------------------

    @property
    def is_dirac(self) -> bool:
        return not self.continuous and self.atom_locations.size == 1

    @property
    def is_discrete(self) -> bool:
        return not self.continuous

    def atom_mass(self, x: float) -> float:
        i = np.searchsorted(self.atom_locations, x)
        if i < self.atom_locations.size and self.atom_locations[i] == x:
            return float(self.atom_weights[i])
        return 0.0

    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.atom_locations.tolist(), self.atom_weights.tolist()))

    def support(self) -> IntervalUnion:
        pieces = [(x, x) for x in self.atom_locations]
        pieces += [part.interval() for _, part in self.continuous]
        return IntervalUnion(pieces, closed=True)

    def second_moment(self) -> float:
        val = float(np.dot(self.atom_weights, self.atom_locations ** 2))
        return val + sum(w * part.second_moment() for w, part in self.continuous)

    def mean(self) -> float:
        return float(np.real(self.expect(lambda x: x)))

    def is_compact(self) -> bool:
        hull = self.support().hull()
        return hull is not None and math.isfinite(hull[0]) and math.isfinite(hull[1])

    # integrals --------------------------------------------------------------

    def expect(self, g: Callable[[np.ndarray], np.ndarray]):
        """Integral of a vectorized function ``g`` against the measure."""
        val = np.dot(self.atom_weights, g(self.atom_locations)) if self.atom_locations.size else 0.0
        for w, part in self.continuous:
            val = val + w * part.expect(g)
        return val

    def ratio_moment(self, m, k: int):
        """``int (u / (1 + u m))^k`` against the measure."""
        u = self.atom_locations
        val = np.dot(self.atom_weights, (u / (1.0 + u * m)) ** k) if u.size else 0.0
        for w, part in self.continuous:
            val = val + w * part.ratio_moment(m, k)
        return val

    def stieltjes(self, z: complex) -> complex:
        """Stieltjes transform ``int mu(dx) / (x - z)`` for ``Im z > 0``."""
        z = complex(z)
        if not numerics.is_finite_complex(z):
            raise DomainError(f"non-finite argument {z!r}")
        if not z.imag > 0:
            raise DomainError(f"stieltjes needs Im z > 0, got {z!r}")
        return self.resolvent_moment(z, 1)

    def resolvent_moment(self, z: complex, k: int) -> complex:
        """``int mu(dx) / (x - z)^k`` for complex ``z`` off the support."""
        z = complex(z)
        val = complex(np.sum(self.atom_weights / (self.atom_locations - z) ** k))
        for w, part in self.continuous:
            val += w * complex(part.inverse_moment(z, k))
        return val

    def _check_outside(self, h: float):
        if not math.isfinite(h):
            raise DomainError(f"non-finite argument {h!r}")
        for loc in self.atom_locations:
            if h == loc:
                raise DomainError(f"h={h} is an atom of the measure (at {loc})")
        for _, part in self.continuous:
            if part.lo <= h <= part.hi:
                raise DomainError(f"h={h} lies in the support [{part.lo}, {part.hi}] of {part!r}")

    def stieltjes_real(self, h: float) -> float:
        """Real Stieltjes transform at a point outside the support."""
        return self.inverse_moment(h, 1)

    def inverse_moment(self, h: float, k: int) -> float:
        """``int mu(dx) / (x - h)^k`` for real ``h`` outside the support."""
        if k < 1 or int(k) != k:
            raise DomainError("moment order must be a positive integer")
        h = float(h)
        self._check_outside(h)
        val = float(np.sum(self.atom_weights / (self.atom_locations - h) ** k))
        for w, part in self.continuous:
            val += w * float(np.real(part.inverse_moment(h, k)))
        return val

    # distribution function and quantiles -------------------------------------

    def cdf(self, x: float) -> float:
        """Right-continuous distribution function."""
        val = float(np.sum(self.atom_weights[self.atom_locations <= x]))
        for w, part in self.continuous:
            val += w * part.cdf(x)
        return min(1.0, val)

    def cdf_left(self, x: float) -> float:
        """Left limit of the distribution function."""
        return self.cdf(x) - self.atom_mass(x)

    def quantile(self, q: float) -> float:
        """``inf{x : mu((-inf, x]) >= q}`` for ``q`` in ``(0, 1]``."""
        if not 0.0 < q <= 1.0:
            raise DomainError("quantile level must lie in (0, 1]")
        for loc, w in zip(self.atom_locations, self.atom_weights):
            c = self.cdf(loc)
            if c - w < q <= c:
                return float(loc)
        lo, hi = self.support().hull()
        f = lambda t: self.cdf(t) - q  # noqa: E731
        if f(lo) >= 0:
            return lo
        return float(_optimize.brentq(f, lo, hi, xtol=1e-14 * max(1.0, abs(hi - lo)), maxiter=200))

    def quantiles(self, n: int) -> np.ndarray:
        """Midpoint-rule quantiles ``q_i``, ``i = 1..n``, sorted ascending."""
        if n < 1:
            raise DomainError("number of quantiles must be positive")
        return np.array([self.quantile((i - 0.5) / n) for i in range(1, n + 1)])

    # regularity of the Stieltjes transform --------------------------------------

    def in_D(self, x: float) -> bool:
        """Whether the Stieltjes transform stays bounded near ``x``.

        Per-class rule: atoms, poles of Marchenko-Pastur bulks at zero and
        jump discontinuities at the ends of density tables are excluded;
        every other real point belongs to the set.
        """
        if self.atom_mass(x) > 0:
            return False
        for _, part in self.continuous:
            if any(x == p for p in part.unbounded_points()):
                return False
        return True

    def d_complement_points(self) -> list[float]:
        pts = set(self.atom_locations.tolist())
        for _, part in self.continuous:
            pts.update(part.unbounded_points())
        return sorted(pts)

    # serialization -------------------------------------------------------------

    def to_dict(self) -> dict:
        return {"components": [{"weight": w, "part": p.to_dict()} for w, p in self.components]}

    @classmethod
    def from_dict(cls, data: dict) -> "Measure":
        if not isinstance(data, dict) or "components" not in data:
            raise DomainError("measure must be an object with a 'components' list")
        comps = []
        for i, item in enumerate(data["components"]):
            try:
                w = item["weight"]
                comps.append((w, part_from_dict(item["part"])))
            except (KeyError, TypeError) as exc:
                raise DomainError(f"component {i}: missing field {exc}") from exc
        return cls(comps)


def part_from_dict(d: dict):
    kind = d.get("type")
    if kind == "atom":
        return Atom(float(d["location"]))
    if kind == "semicircle":
        return Semicircle(float(d["radius"]), float(d.get("center", 0.0)))
    if kind == "mp":
        return MarchenkoPastur(float(d["ratio"]), float(d.get("scale", 1.0)))
    if kind == "density_table":
        return DensityTable(d["x"], d["pdf"])
    if kind == "mixture":
        return Measure.from_dict(d)
    raise DomainError(f"unknown measure part type {kind!r}")


# module-level functional interface ------------------------------------------------


def stieltjes(mu: Measure, z: complex) -> complex:
    return mu.stieltjes(z)


def stieltjes_real(mu: Measure, h: float) -> float:
    return mu.stieltjes_real(h)


def inverse_moment(mu: Measure, h: float, k: int) -> float:
    return mu.inverse_moment(h, k)


def atom_mass(mu: Measure, x: float) -> float:
    return mu.atom_mass(x)


def support(mu: Measure) -> IntervalUnion:
    return mu.support()


def quantiles(mu: Measure, n: int) -> np.ndarray:
    return mu.quantiles(n)


def second_moment(mu: Measure) -> float:
    return mu.second_moment()


def in_D(mu: Measure, x: float) -> bool:
    return mu.in_D(x)
