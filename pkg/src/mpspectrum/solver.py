"""Fixed-point solver for the Stieltjes transform ``m(z)`` of the limit law.

For ``z`` in the upper half-plane ``m`` is the unique solution with
``Im m > 0`` of

    m = m_B(z - gamma * int u dA(u) / (1 + m u)).

On top of the solve this module evaluates the density of the limit law
(``Im m / pi`` on the real axis), its point masses and a model CDF.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import numerics
from .errors import ConsistencyError, ConvergenceError, DomainError
from .measures import Measure

log = logging.getLogger(__name__)

DEGENERATE_B_FLAG = "degenerate-B"


class OutsideDWarning(UserWarning):
    """Density requested at a point where m_B is not known to be bounded."""


@dataclass(frozen=True)
class SolverConfig:
    damping: float = 0.5
    max_iterations: int = 5000
    residual_tol: float = 1e-12
    newton_switch: float = 1e-3
    continuation_levels: tuple[float, ...] = tuple(0.5 ** k for k in range(0, 7))
    extrapolation_heights: tuple[float, ...] = (1e-2, 5e-3, 2.5e-3, 1.25e-3)
    polish_floor: float = 1e-11
    polish_ratio: float = 0.25

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise DomainError("damping must lie in (0, 1]")
        if not self.residual_tol > 0:
            raise DomainError("residual_tol must be positive")
        for name in ("continuation_levels", "extrapolation_heights"):
            seq = getattr(self, name)
            if any(b >= a for a, b in zip(seq, seq[1:])) or (seq and seq[-1] <= 0):
                raise DomainError(f"{name} must be strictly decreasing and positive")
        if len(self.extrapolation_heights) < 3:
            raise DomainError("need at least 3 extrapolation heights")

    def replace(self, **changes) -> "SolverConfig":
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(changes)
        for key in ("continuation_levels", "extrapolation_heights"):
            data[key] = tuple(data[key])
        return SolverConfig(**data)


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class SolutionPoint:
    z: complex
    m: complex
    residual: float
    alpha: float
    beta: float
    one_minus_ab: float
    iterations: int = 0


@dataclass
class DensityGrid:
    entries: list[tuple[float, float, float]] = field(default_factory=list)

    def __post_init__(self):
        self.entries = sorted((float(x), float(f), float(e)) for x, f, e in self.entries)
        if any(f < 0 for _, f, _ in self.entries):
            raise DomainError("density values must be nonnegative")

    @property
    def x(self):
        return np.array([e[0] for e in self.entries])

    @property
    def f(self):
        return np.array([e[1] for e in self.entries])

    @property
    def err(self):
        return np.array([e[2] for e in self.entries])

    def to_csv(self) -> str:
        lines = ["x,f,err"]
        lines += [f"{x:.17g},{f:.17g},{e:.17g}" for x, f, e in self.entries]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "DensityGrid":
        rows = text.strip().splitlines()
        if not rows or rows[0].strip() != "x,f,err":
            raise DomainError("density CSV must start with header 'x,f,err'")
        entries = []
        for line in rows[1:]:
            x, f, e = (float(v) for v in line.split(","))
            entries.append((x, f, e))
        return cls(entries)


class MasterEquation:
    """The fixed-point map for given ``(A, B, gamma)``."""

    def __init__(self, A: Measure, B: Measure, gamma: float):
        if not gamma > 0:
            raise DomainError("gamma must be positive")
        second = A.second_moment()
        if not math.isfinite(second):
            raise DomainError("A must have a finite second moment")
        if A.is_dirac and A.atom_locations[0] == 0.0:
            raise DomainError("A must not be the point mass at zero")
        self.A, self.B, self.gamma = A, B, float(gamma)
        self._center = B.mean() + self.gamma * A.mean()

    @property
    def degenerate_b(self) -> bool:
        return self.B.is_dirac

    # the map and its derivative -------------------------------------------

    def a_integrals(self, m: complex):
        """``(int u/(1+um) dA, int u^2/(1+um)^2 dA)``."""
        return complex(self.A.ratio_moment(m, 1)), complex(self.A.ratio_moment(m, 2))

    def rhs(self, z: complex, m: complex):
        """Right-hand side of the equation and its derivative in ``m``."""
        i1, i2 = self.a_integrals(m)
        w = z - self.gamma * i1
        mb = self.B.resolvent_moment(w, 1)
        mb2 = self.B.resolvent_moment(w, 2)
        return mb, mb2 * self.gamma * i2, w

    def diagnostics(self, z: complex, m: complex):
        """``(alpha(z, z*), beta(z, z*))`` by direct integration."""
        i1, _ = self.a_integrals(m)
        w = z - self.gamma * i1
        alpha = float(np.real(self.B.expect(lambda t: 1.0 / np.abs(t - w) ** 2)))
        beta = self.gamma * float(np.real(self.A.expect(lambda u: u * u / np.abs(1.0 + u * m) ** 2)))
        return alpha, beta

    # solving --------------------------------------------------------------

    def initial_guess(self, z: complex) -> complex:
        return -1.0 / (z - self._center)

    def iterate(self, z: complex, m0: complex | None = None, cfg: SolverConfig = DEFAULT_CONFIG,
                newton_only: bool = False):
        """Run damped Picard / Newton from ``m0``; return ``(m, residual, iterations)``."""
        m = self.initial_guess(z) if m0 is None else complex(m0)
        best = (math.inf, m)
        for it in range(1, cfg.max_iterations + 1):
            rhs, drhs, _ = self.rhs(z, m)
            res_vec = m - rhs
            res = abs(res_vec)
            scale = max(1.0, abs(m))
            if res < best[0]:
                best = (res, m)
            if res <= cfg.residual_tol * scale:
                return m, res, it
            step_done = False
            if newton_only or res < cfg.newton_switch * scale:
                denom = 1.0 - drhs
                if denom != 0:
                    m_new = m - res_vec / denom
                    if newton_only or m_new.imag > 0:
                        rhs2, _, _ = self.rhs(z, m_new)
                        if newton_only or abs(m_new - rhs2) < res:
                            m = m_new
                            step_done = True
            if not step_done:
                if newton_only:
                    break
                m = (1.0 - cfg.damping) * m + cfg.damping * rhs
        raise ConvergenceError(
            f"master equation did not converge at z={z!r} (best residual {best[0]:.3e})",
            best=best[1], residual=best[0],
        )

    def solve(self, z: complex, m0: complex | None = None, cfg: SolverConfig = DEFAULT_CONFIG,
              check: bool = True) -> SolutionPoint:
        z = complex(z)
        if not numerics.is_finite_complex(z) or not z.imag > 0:
            raise DomainError(f"solve needs finite z with Im z > 0, got {z!r}")
        m, res, its = self.iterate(z, m0, cfg)
        if not m.imag > 0:
            raise ConsistencyError(f"converged to Im m <= 0 at z={z!r}")
        alpha, beta = self.diagnostics(z, m)
        oab = 1.0 - alpha * beta
        if check and not oab > 0:
            raise ConsistencyError(f"1 - alpha*beta = {oab:.3e} <= 0 at z={z!r}; wrong branch")
        return SolutionPoint(z, m, res, alpha, beta, oab, its)

    def solve_path(self, x: float, heights: Sequence[float], cfg: SolverConfig = DEFAULT_CONFIG,
                   m0: complex | None = None) -> list[SolutionPoint]:
        """Solve at ``x + i y`` for decreasing ``y``, warm-starting each step."""
        out = []
        m = m0
        for y in heights:
            pt = self.solve(complex(x, y), m, cfg, check=False)
            m = pt.m
            out.append(pt)
        return out

    def continuation_heights(self, y_target: float, cfg: SolverConfig = DEFAULT_CONFIG):
        """Heights from the continuation levels down to ``y_target`` (inclusive)."""
        levels = [y for y in cfg.continuation_levels if y > y_target]
        if not levels:
            return [y_target]
        # Continue halving below the configured levels until the target.
        y = levels[-1]
        while y * 0.5 > y_target:
            y *= 0.5
            levels.append(y)
        return levels + [y_target]

    def solve_at(self, z: complex, cfg: SolverConfig = DEFAULT_CONFIG) -> SolutionPoint:
        """Solve with continuation from ``Im z = 1`` down to the target."""
        z = complex(z)
        if not numerics.is_finite_complex(z) or not z.imag > 0:
            raise DomainError(f"solve_at needs finite z with Im z > 0, got {z!r}")
        path = self.continuation_heights(z.imag, cfg)
        pts = self.solve_path(z.real, path[:-1], cfg)
        m0 = pts[-1].m if pts else None
        return self.solve(z, m0, cfg)

    def solve_real(self, x: float, m0: complex, cfg: SolverConfig = DEFAULT_CONFIG):
        """Newton solve of the equation at real ``x`` from a nearby start."""
        return self.iterate(complex(x, 0.0), m0, cfg, newton_only=True)

    # density --------------------------------------------------------------

    def density_at(self, x: float, cfg: SolverConfig = DEFAULT_CONFIG):
        """Density ``f(x)`` and an error estimate.

        Im m is computed along a continuation path, extrapolated to the
        axis over ``cfg.extrapolation_heights`` and then polished by a
        Newton solve at real ``x`` seeded from a point very close to the
        axis. The polished value is used when it converges; otherwise the
        extrapolated one (clamped at zero within its error).
        """
        x = float(x)
        if not self.B.in_D(x):
            warnings.warn(f"x={x} lies outside the set where m_B is bounded; "
                          "the density there is not guaranteed", OutsideDWarning, stacklevel=2)
        heights = list(cfg.extrapolation_heights)
        pre = [y for y in self.continuation_heights(heights[0], cfg)[:-1]]
        pts = self.solve_path(x, pre + heights, cfg)
        tail = pts[-len(heights):]
        limit, err = numerics.extrapolate_to_zero([(p.z.imag, p.m.imag) for p in tail])
        f_ext, err_ext = limit / math.pi, err / math.pi

        y = heights[-1]
        m = pts[-1].m
        try:
            while y > cfg.polish_floor:
                y *= cfg.polish_ratio
                m = self.solve(complex(x, y), m, cfg, check=False).m
            m_real, res, _ = self.solve_real(x, m, cfg)
        except (ConvergenceError, ConsistencyError) as exc:
            log.debug("real-axis polish failed at x=%g: %s", x, exc)
            m_real = None
        if m_real is not None and m_real.imag >= -1e-12 * max(1.0, abs(m_real)):
            f = max(m_real.imag, 0.0) / math.pi
            _, drhs, _ = self.rhs(complex(x, 0.0), m_real)
            denom = abs(1.0 - drhs)
            err_pol = (res / denom if denom > 0 else res) / math.pi + 1e-15 * max(1.0, abs(m_real))
            if f <= err_pol * 10:
                f = 0.0
            return f, err_pol
        if f_ext <= err_ext:
            return 0.0, err_ext
        return f_ext, err_ext

    def density_grid(self, xs: Sequence[float], cfg: SolverConfig = DEFAULT_CONFIG) -> DensityGrid:
        entries = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OutsideDWarning)
            for x in xs:
                f, e = self.density_at(float(x), cfg)
                entries.append((float(x), f, e))
        return DensityGrid(entries)

    # point masses -----------------------------------------------------------

    def atom_masses(self) -> list[tuple[float, float]]:
        free = self.gamma * (1.0 - self.A.atom_mass(0.0))
        out = []
        for b, w in self.B.atoms():
            excess = w - free
            if excess > 0:
                out.append((b, excess))
        return out

    def point_mass_probe(self, b: float, y: float = 1e-7, cfg: SolverConfig = DEFAULT_CONFIG) -> float:
        """``-Re(i y m(b + i y))``, which tends to the mass of ``{b}``."""
        pt = self.solve_at(complex(b, y), cfg)
        return float(-(1j * y * pt.m).real)


# functional interface ---------------------------------------------------------


def solve_at(A: Measure, B: Measure, gamma: float, z: complex, cfg: SolverConfig = DEFAULT_CONFIG) -> SolutionPoint:
    return MasterEquation(A, B, gamma).solve_at(z, cfg)


def density_at(A: Measure, B: Measure, gamma: float, x: float, cfg: SolverConfig = DEFAULT_CONFIG):
    return MasterEquation(A, B, gamma).density_at(x, cfg)


def atom_masses(A: Measure, B: Measure, gamma: float) -> list[tuple[float, float]]:
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    free = gamma * (1.0 - A.atom_mass(0.0))
    return [(b, w - free) for b, w in B.atoms() if w - free > 0]


class ModelCDF:
    """Distribution function of the limit law: integrated density plus atoms.

    On each support interval ``[a, b]`` (split at points where ``m_B`` is
    unbounded) the substitution ``x = a + (b - a)(1 - cos t)/2`` turns
    square-root edges and inverse-square-root singularities into an
    integrand ``f(x(t)) x'(t)`` that is analytic in ``t``. It is
    interpolated by a Chebyshev series on ``[0, pi]`` whose degree triples
    until the interval mass settles.
    """

    def __init__(self, eq: MasterEquation, report, cfg: SolverConfig = DEFAULT_CONFIG,
                 n0: int = 27, n_max: int = 729, mass_tol: float = 1e-7, table_size: int = 4097):
        self.atoms = [(float(b), float(w)) for b, w in report.atoms]
        cuts = eq.B.d_complement_points()
        self.pieces = []
        for a, b in report.support:
            if not (math.isfinite(a) and math.isfinite(b)):
                raise DomainError("model CDF needs a bounded support")
            if b <= a:
                continue
            knots = [a] + [c for c in cuts if a < c < b] + [b]
            for lo, hi in zip(knots, knots[1:]):
                self.pieces.append(self._build_piece(eq, lo, hi, cfg, n0, n_max, mass_tol, table_size))
        self.continuous_mass = sum(p[3] for p in self.pieces)
        self.total_mass = self.continuous_mass + sum(w for _, w in self.atoms)

    @staticmethod
    def _build_piece(eq, lo, hi, cfg, n0, n_max, mass_tol, table_size):
        half = 0.5 * (hi - lo)
        memo: dict[float, float] = {}

        def density(x):
            # First-kind Chebyshev points nest under tripling; reuse them.
            key = round(x, 13)
            if key not in memo:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", OutsideDWarning)
                    memo[key] = eq.density_at(x, cfg)[0]
            return memo[key]

        def g(t):
            xs = lo + half * (1.0 - np.cos(t))
            return np.array([density(x) for x in xs]) * half * np.sin(t)

        n, prev = n0, None
        while True:
            cheb = np.polynomial.Chebyshev.interpolate(g, n - 1, domain=[0.0, math.pi])
            G = cheb.integ(lbnd=0.0)
            mass = float(G(math.pi))
            if prev is not None and abs(mass - prev) <= mass_tol or n >= n_max:
                break
            prev, n = mass, 3 * n
        tt = np.linspace(0.0, math.pi, table_size)
        log.debug("model cdf piece [%g, %g]: %d nodes, %d density evaluations", lo, hi, n, len(memo))
        table = np.maximum.accumulate(np.clip(G(tt), 0.0, None))
        return lo, hi, (tt, table), float(table[-1])

    def _continuous(self, x: float) -> float:
        total = 0.0
        for lo, hi, (tt, G), mass in self.pieces:
            if x >= hi:
                total += mass
            elif x > lo:
                t = math.acos(min(1.0, max(-1.0, 1.0 - 2.0 * (x - lo) / (hi - lo))))
                total += float(np.interp(t, tt, G))
        return total

    def __call__(self, x):
        """Right-continuous CDF; accepts scalars or arrays."""
        if np.ndim(x):
            return np.array([self(v) for v in np.asarray(x, dtype=float)])
        x = float(x)
        return min(1.0, self._continuous(x) + sum(w for b, w in self.atoms if b <= x))

    def left(self, x):
        """Left limit of the CDF."""
        if np.ndim(x):
            return np.array([self.left(v) for v in np.asarray(x, dtype=float)])
        x = float(x)
        return min(1.0, self._continuous(x) + sum(w for b, w in self.atoms if b < x))


def model_cdf(A: Measure, B: Measure, gamma: float, support_report, x=None, cfg: SolverConfig = DEFAULT_CONFIG):
    """Model CDF built from a support report; evaluated at ``x`` when given."""
    F = ModelCDF(MasterEquation(A, B, gamma), support_report, cfg)
    return F if x is None else F(x)
