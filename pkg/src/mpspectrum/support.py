"""Support of the limit law from the curve ``x(h)``.

For ``h`` outside the support of B with ``m_B(h)`` admissible for A, the
curve ``x(h) = h + gamma * int u dA(u) / (1 + u m_B(h))`` maps every
stretch on which it increases onto the complement of the support. The
analysis below builds the admissible ``h`` set, scans each of its
components for sign changes of ``x'(h)``, and assembles the support,
its atoms and its square-root edges.

Derivatives use ``P_k(h) = gamma int u^k dA / (1 + u m_B(h))^k`` and
``Q_k(h) = int dB / (tau - h)^k``, with ``P_k' = -k P_{k+1} Q_2`` and
``Q_k' = k Q_{k+1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as _optimize

from . import numerics
from .errors import DegenerateEdgeError, DomainError
from .measures import IntervalUnion, Measure
from .solver import DEGENERATE_B_FLAG, atom_masses

FLAT_TOL = 1e-10
EDGE_X2_TOL = 1e-8


@dataclass(frozen=True)
class HCurvePoint:
    h: float
    m_B: float
    x: float
    x1: float
    x2: float
    x3: float


@dataclass(frozen=True)
class EdgeRecord:
    h0: float
    x0: float
    side: str
    x2: float
    q_prime: float
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise DomainError(f"edge side must be 'left' or 'right', got {self.side!r}")

    def to_dict(self):
        return {"h0": self.h0, "x0": self.x0, "side": self.side, "x2": self.x2, "q_prime": self.q_prime}


@dataclass
class SupportReport:
    support: IntervalUnion
    complement: IntervalUnion
    atoms: list[tuple[float, float]]
    edges: list[EdgeRecord]
    h_intervals_increasing: list[tuple[tuple[float, float], tuple[float, float]]]
    degenerate_flags: list[str] = field(default_factory=list)
    h_domain: IntervalUnion | None = None
    window: tuple[float, float] | None = None
    boundary_limits: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "support": self.support.to_list(),
            "atoms": [{"x": b, "mass": w} for b, w in self.atoms],
            "edges": [e.to_dict() for e in self.edges],
            "flags": list(self.degenerate_flags),
        }

    def edge_points(self) -> list[float]:
        return [e.x0 for e in self.edges]


class SupportAnalyzer:
    """x(h)-curve analysis for fixed ``(A, B, gamma)``."""

    def __init__(self, A: Measure, B: Measure, gamma: float, grid_points: int = 2048):
        if not gamma > 0:
            raise DomainError("gamma must be positive")
        self.A, self.B, self.gamma = A, B, float(gamma)
        self.grid_points = int(grid_points)
        self._supp_A = A.support()
        self._supp_B = B.support()

    # E(A) and the admissible h set ----------------------------------------

    def in_E_A(self, m: float) -> bool:
        if m == 0:
            return self.A.is_compact()
        return not self._supp_A.contains(-1.0 / m)

    def excluded_m_intervals(self) -> list[tuple[float, float]]:
        """Closed m-intervals with ``-1/m`` in the support of A."""
        out = []
        for a1, a2 in self._supp_A:
            if a1 > 0 or a2 < 0:
                out.append((-1.0 / a1, -1.0 / a2))
                continue
            if a2 > 0:
                out.append((-math.inf, -1.0 / a2))
            if a1 < 0:
                out.append((-1.0 / a1, math.inf))
        if not self.A.is_compact():
            out.append((0.0, 0.0))
        return out

    def default_window(self) -> tuple[float, float]:
        lo, hi = self._supp_B.hull()
        pad = 1.0 + self.gamma * math.sqrt(self.A.second_moment())
        for _ in range(60):
            wlo, whi = lo - pad, hi + pad
            try:
                ok = self.h_curve(wlo).x1 > 0.9 and self.h_curve(whi).x1 > 0.9
            except DomainError:
                ok = False
            if ok:
                return wlo, whi
            pad *= 2.0
        raise DomainError("could not find a window with x'(h) > 0.9 at both ends")

    def h_domain(self, window: tuple[float, float] | None = None) -> IntervalUnion:
        """Open union of admissible ``h`` within ``window``."""
        lo, hi = window if window is not None else self.default_window()
        pieces = []
        for l, r in self._supp_B.complement().clip(lo, hi):
            if not l < r:
                continue
            removed = []
            eta_l = 1e-13 * max(1.0, abs(l))
            eta_r = 1e-13 * max(1.0, abs(r))
            a, b = l + eta_l, r - eta_r
            mb = self.B.stieltjes_real
            ma, mb_ = mb(a), mb(b)
            for c, d in self.excluded_m_intervals():
                if d < ma or c > mb_:
                    continue
                hc = a if c <= ma else numerics.find_root(lambda h: mb(h) - c, numerics.BracketedRoot(a, b, 1e-14 * max(1.0, abs(a), abs(b))))
                hd = b if d >= mb_ else numerics.find_root(lambda h: mb(h) - d, numerics.BracketedRoot(a, b, 1e-14 * max(1.0, abs(a), abs(b))))
                removed.append((hc if c > ma else l, hd if d < mb_ else r))
            removed.sort()
            cur = l
            for rl, rr in removed:
                if rl > cur:
                    pieces.append((cur, rl))
                cur = max(cur, rr)
            if cur < r:
                pieces.append((cur, r))
        return IntervalUnion(pieces, closed=False)

    # the curve ------------------------------------------------------------

    def P(self, m: float, k: int) -> float:
        return self.gamma * float(np.real(self.A.ratio_moment(m, k)))

    def m_B(self, h: float) -> float:
        return self.B.stieltjes_real(h)

    def x_of(self, h: float) -> float:
        m = self._admissible_m(h)
        return h + self.P(m, 1)

    def x1_of(self, h: float) -> float:
        m = self._admissible_m(h)
        return 1.0 - self.P(m, 2) * self.B.inverse_moment(h, 2)

    def _admissible_m(self, h: float) -> float:
        m = self.B.stieltjes_real(h)
        if not self.in_E_A(m):
            raise DomainError(f"h={h}: m_B(h)={m} is not admissible for A")
        return m

    def h_curve(self, h: float) -> HCurvePoint:
        m = self._admissible_m(h)
        p1, p2, p3, p4 = (self.P(m, k) for k in (1, 2, 3, 4))
        q2, q3, q4 = (self.B.inverse_moment(h, k) for k in (2, 3, 4))
        x = h + p1
        x1 = 1.0 - p2 * q2
        x2 = 2.0 * p3 * q2 * q2 - 2.0 * p2 * q3
        x3 = -6.0 * p4 * q2 ** 3 + 12.0 * p3 * q2 * q3 - 6.0 * p2 * q4
        return HCurvePoint(h, m, x, x1, x2, x3)

    # edges ----------------------------------------------------------------

    def edge_behavior(self, h0: float, x1_tol: float = 1e-6) -> EdgeRecord:
        pt = self.h_curve(h0)
        if abs(pt.x1) > x1_tol:
            raise DomainError(f"h0={h0} is not a stationary point of x(h) (x'={pt.x1:.3e})")
        if abs(pt.x2) < EDGE_X2_TOL:
            raise DegenerateEdgeError(f"x''(h0) = {pt.x2:.3e} at h0={h0}: inflection, not an edge")
        q2 = self.B.inverse_moment(h0, 2)
        side = "left" if pt.x2 < 0 else "right"
        q_prime = math.sqrt(2.0 / abs(pt.x2)) * q2 / math.pi
        flags = []
        if not self.B.in_D(pt.x):
            flags.append("x0-outside-D")
        if self.B.atom_mass(pt.x) > 0:
            flags.append("x0-at-atom-of-B")
        return EdgeRecord(h0, pt.x, side, pt.x2, q_prime, tuple(flags))

    # limits at boundary points of the admissible set --------------------------

    def atom_limit_slope(self, h0: float, side: str, steps: int = 6) -> tuple[float, float]:
        """Extrapolated ``lim x'(h)`` as ``h -> h0`` from one side."""
        sign = 1.0 if side == "right" else -1.0
        scale = max(1.0, abs(h0))
        pairs = []
        d = 1e-4 * scale
        for _ in range(steps):
            pairs.append((d, self.x1_of(h0 + sign * d)))
            d *= 0.5
        return numerics.extrapolate_to_zero(pairs)

    def predicted_atom_slope(self, h0: float) -> float:
        return 1.0 - self.gamma * (1.0 - self.A.atom_mass(0.0)) / self.B.atom_mass(h0)

    # the scan -------------------------------------------------------------

    def _grid(self, a: float, b: float) -> np.ndarray:
        n = self.grid_points
        t = (np.arange(n) + 0.5) / n
        return a + (b - a) * 0.5 * (1.0 - np.cos(math.pi * t))

    def _scan_roots(self, a: float, b: float) -> list[float]:
        hs = self._grid(a, b)
        vals = np.array([self.x1_of(h) for h in hs])
        roots = []
        tol = 1e-14 * max(1.0, abs(a), abs(b))
        for i in range(len(hs) - 1):
            h0, h1 = hs[i], hs[i + 1]
            v0, v1 = vals[i], vals[i + 1]
            if v0 == 0.0:
                roots.append(h0)
                continue
            if v0 * v1 < 0:
                # Refine by 4 before bracketing to separate close roots.
                sub = np.linspace(h0, h1, 5)
                sv = [v0] + [self.x1_of(h) for h in sub[1:-1]] + [v1]
                for j in range(4):
                    if sv[j] == 0.0:
                        roots.append(sub[j])
                    elif sv[j] * sv[j + 1] < 0:
                        roots.append(numerics.find_root(self.x1_of, numerics.BracketedRoot(sub[j], sub[j + 1], tol)))
        # Local maxima of x' below zero may hide a pair of close roots.
        for i in range(1, len(hs) - 1):
            if vals[i] < 0 and vals[i] >= vals[i - 1] and vals[i] >= vals[i + 1] and vals[i] > -1e-2:
                res = _optimize.minimize_scalar(lambda h: -self.x1_of(h), bounds=(hs[i - 1], hs[i + 1]),
                                                method="bounded", options={"xatol": tol})
                if -res.fun > 0:
                    hm = res.x
                    roots.append(numerics.find_root(self.x1_of, numerics.BracketedRoot(hs[i - 1], hm, tol)))
                    roots.append(numerics.find_root(self.x1_of, numerics.BracketedRoot(hm, hs[i + 1], tol)))
        return sorted(set(roots))

    def _end_kind(self, e: float, window: tuple[float, float]) -> str:
        if e == window[0] or e == window[1]:
            return "window"
        if self.B.atom_mass(e) > 0 and not self._continuous_B_at(e):
            return "atom"
        return "boundary"

    def _continuous_B_at(self, e: float) -> bool:
        return any(part.lo <= e <= part.hi for _, part in self.B.continuous)

    def _end_limit_x(self, e: float, inward: float) -> float:
        """One-sided limit of x(h) at an end of an admissible component."""
        d = 1e-7 * max(1.0, abs(e))
        pairs = []
        for _ in range(4):
            pairs.append((d, self.x_of(e + inward * d)))
            d *= 0.5
        return numerics.extrapolate_to_zero(pairs)[0]

    def determine_support(self, window: tuple[float, float] | None = None) -> SupportReport:
        flags: list[str] = []
        if self.B.is_dirac:
            flags.append(DEGENERATE_B_FLAG)
        masses = atom_masses(self.A, self.B, self.gamma)
        if window is None:
            window = self.default_window()
        H = self.h_domain(window)
        if H.is_empty:
            full = IntervalUnion([(-math.inf, math.inf)], closed=True)
            return SupportReport(full, IntervalUnion([], closed=False), masses, [], [], flags + ["empty-H"],
                                 H, window)

        increasing: list[tuple[tuple[float, float], tuple[float, float]]] = []
        images = []
        edges: list[EdgeRecord] = []
        boundary_limits: list[dict] = []
        for a, b in H:
            roots = self._scan_roots(a, b)
            knots = [a] + roots + [b]
            for s, t in zip(knots, knots[1:]):
                mid = 0.5 * (s + t)
                if self.x1_of(mid) <= FLAT_TOL:
                    continue
                xs = self._image_end(s, +1.0, window, flags, boundary_limits, is_root=s in roots)
                xt = self._image_end(t, -1.0, window, flags, boundary_limits, is_root=t in roots)
                increasing.append(((s, t), (xs, xt)))
                images.append((xs, xt))
            for r in roots:
                try:
                    edges.append(self.edge_behavior(r))
                except DegenerateEdgeError:
                    flags.append(f"inflection:h0={r:.12g}")

        images.sort()
        for (x0a, x0b), (x1a, x1b) in zip(images, images[1:]):
            if x1a < x0b:
                flags.append(f"overlapping-images:{x0b:.12g}>{x1a:.12g}")
            elif x1a == x0b:
                flags.append(f"touching-images:{x0b:.12g}")
        complement = IntervalUnion(images, closed=False)
        support = complement.complement()
        for b, _ in masses:
            if not support.contains(b):
                flags.append(f"atom-outside-support:{b:.12g}")
        return SupportReport(support, complement, masses, edges, increasing, flags, H, window, boundary_limits)

    def _image_end(self, e, inward, window, flags, boundary_limits, is_root):
        if is_root:
            return self.x_of(e)
        kind = self._end_kind(e, window)
        if kind == "window":
            return -math.inf if inward > 0 else math.inf
        side = "right" if inward > 0 else "left"
        if kind == "atom":
            lim_x1, _ = self.atom_limit_slope(e, side)
            boundary_limits.append({"h0": e, "side": side, "x": e, "x1": lim_x1,
                                    "x1_predicted": self.predicted_atom_slope(e)})
            flags.append(f"boundary-of-H:h0={e:.12g}:side={side}:x->{e:.12g}:x1->{lim_x1:.6g}")
            return e
        x_lim = self._end_limit_x(e, inward)
        boundary_limits.append({"h0": e, "side": side, "x": x_lim, "x1": None, "x1_predicted": None})
        flags.append(f"boundary-of-H:h0={e:.12g}:side={side}:x->{x_lim:.12g}")
        return x_lim

    def curve_table(self, n: int = 400, window: tuple[float, float] | None = None):
        """Sampled ``(h, m_B, x, x1)`` rows over the admissible set."""
        if window is None:
            window = self.default_window()
        rows = []
        H = self.h_domain(window)
        total = H.total_length()
        for a, b in H:
            k = max(8, int(n * (b - a) / total))
            for h in _cheb(a, b, k):
                pt = self.h_curve(h)
                rows.append((h, pt.m_B, pt.x, pt.x1))
        return rows


def _cheb(a, b, k):
    t = (np.arange(k) + 0.5) / k
    return a + (b - a) * 0.5 * (1.0 - np.cos(math.pi * t))


def curve_csv(rows) -> str:
    lines = ["h,m_B,x,x1"] + [f"{h:.17g},{m:.17g},{x:.17g},{x1:.17g}" for h, m, x, x1 in rows]
    return "\n".join(lines) + "\n"


# functional interface ----------------------------------------------------------


def in_E_A(A: Measure, m: float) -> bool:
    return SupportAnalyzer(A, Measure.atom(0.0), 1.0).in_E_A(m)


def h_domain(A: Measure, B: Measure, search_window: tuple[float, float]) -> IntervalUnion:
    return SupportAnalyzer(A, B, 1.0).h_domain(search_window)


def h_curve(A: Measure, B: Measure, gamma: float, h: float) -> HCurvePoint:
    return SupportAnalyzer(A, B, gamma).h_curve(h)


def determine_support(A: Measure, B: Measure, gamma: float, window=None, grid_points: int = 2048) -> SupportReport:
    return SupportAnalyzer(A, B, gamma, grid_points).determine_support(window)


def edge_behavior(A: Measure, B: Measure, gamma: float, h0: float) -> EdgeRecord:
    return SupportAnalyzer(A, B, gamma).edge_behavior(h0)


def edge_density_fit(eq, edge: EdgeRecord, lo: float = 1e-4, hi: float = 1e-2, points: int = 9) -> dict:
    """Density near an edge: log-log slope and ``f / sqrt(dist)`` against ``q_prime``.

    ``eq`` is a solver with ``density_at``; samples lie on the support side
    of the edge at distances ``logspace(lo, hi)``.
    """
    d = np.logspace(math.log10(lo), math.log10(hi), points)
    sign = 1.0 if edge.side == "left" else -1.0
    f = np.array([eq.density_at(edge.x0 + sign * di)[0] for di in d])
    if np.any(f <= 0):
        return {"x0": edge.x0, "side": edge.side, "slope": float("nan"), "ratio_max_dev": float("inf"),
                "q_prime": edge.q_prime}
    slope = float(np.polyfit(np.log(d), np.log(f), 1)[0])
    ratio = f / np.sqrt(d) / edge.q_prime
    return {"x0": edge.x0, "side": edge.side, "slope": slope,
            "ratio_max_dev": float(np.max(np.abs(ratio - 1.0))), "q_prime": edge.q_prime}
