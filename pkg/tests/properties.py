"""Randomized property checks shared by the support tests and the acceptance run.

Each check returns a list of failure descriptions; an empty list is a pass.
"""
import numpy as np

from mpspectrum.measures import Measure
from mpspectrum.numerics import central_difference
from mpspectrum.support import SupportAnalyzer


def _uniform_in(union, rng, size):
    """Points drawn uniformly (by length) from a finite union of intervals."""
    ivs = [(a, b) for a, b in union if b > a]
    lengths = np.array([b - a for a, b in ivs])
    idx = rng.choice(len(ivs), size=size, p=lengths / lengths.sum())
    return np.array([ivs[i][0] + rng.uniform() * (ivs[i][1] - ivs[i][0]) for i in idx])


def _boundary_distance(H, h):
    return min(min(abs(h - a), abs(h - b)) for a, b in H)


def h_samples(an: SupportAnalyzer, rng, size, window=None, margin=1e-6):
    """Random admissible h, kept ``margin`` (relative) away from excluded points."""
    window = window or an.default_window()
    H = an.h_domain(window)
    out = []
    while len(out) < size:
        for h in _uniform_in(H, rng, size):
            if _boundary_distance(H, h) > margin * max(1.0, abs(h)):
                out.append(float(h))
    return np.array(out[:size]), H


def derivative_failures(an, rng, trials=100, rel=1e-6):
    hs, H = h_samples(an, rng, trials, margin=1e-3)
    fails = []
    for h in hs:
        dist = _boundary_distance(H, h)
        step = min(1e-3 * max(1.0, abs(h)), 5e-3 * dist)
        pt = an.h_curve(h)
        for name, exact, fn in (("x1", pt.x1, an.x_of), ("x2", pt.x2, an.x1_of),
                                ("x3", pt.x3, lambda t: an.h_curve(t).x2)):
            fd = central_difference(fn, h, step)
            if not abs(fd - exact) <= rel * max(1.0, abs(exact)):
                fails.append(f"{name} at h={h:.12g}: analytic {exact:.12g} vs fd {fd:.12g}")
    return fails


def ordering_failures(an, rng, trials=100):
    """x1 > 0 at h1 < h2 in the admissible set implies x(h1) < x(h2)."""
    fails, done = [], 0
    while done < trials:
        hs, _ = h_samples(an, rng, 2 * trials)
        pts = [an.h_curve(h) for h in hs]
        good = [p for p in pts if p.x1 > 0]
        for p, q in zip(good[0::2], good[1::2]):
            if done == trials:
                break
            lo, hi = (p, q) if p.h < q.h else (q, p)
            if lo.h == hi.h:
                continue
            done += 1
            if not lo.x < hi.x:
                fails.append(f"x({lo.h:.12g})={lo.x:.12g} >= x({hi.h:.12g})={hi.x:.12g}")
    return fails


def no_interior_root_failures(an, rng, trials=100, scan_points=256):
    """x1 > 0 at both ends of an admissible interval leaves no sign change inside."""
    window = an.default_window()
    H = an.h_domain(window)
    scan = SupportAnalyzer(an.A, an.B, an.gamma, grid_points=scan_points)
    fails, done = [], 0
    while done < trials:
        h = float(_uniform_in(H, rng, 1)[0])
        comp = H.component_of(h)
        if comp is None:
            continue
        a, b = comp
        h2 = float(rng.uniform(a, b))
        h1, h2 = min(h, h2), max(h, h2)
        if h2 - h1 < 1e-9 or an.x1_of(h1) <= 0 or an.x1_of(h2) <= 0:
            continue
        done += 1
        roots = scan._scan_roots(h1, h2)
        if roots:
            fails.append(f"sign change of x1 inside [{h1:.12g}, {h2:.12g}] at {roots}")
    return fails


def tail_failures(an, rng, trials=100, tol=1e-3):
    """``x(h)/h -> 1`` at far window ends."""
    fails = []
    lo, hi = an.B.support().hull()
    scale = max(1.0, abs(lo), abs(hi), an.gamma * an.A.second_moment())
    for _ in range(trials):
        side = rng.choice([-1.0, 1.0])
        h = side * scale * 10 ** rng.uniform(5, 8)
        pt = an.h_curve(h)
        if not (abs(pt.x / h - 1) < tol and abs(pt.x1 - 1) < tol):
            fails.append(f"h={h:.6g}: x/h={pt.x / h:.12g}, x1={pt.x1:.12g}")
    return fails


def random_isolated_atom_setting(rng):
    """Discrete A with an optional atom at 0 and discrete B with well separated atoms."""
    k = int(rng.integers(1, 4))
    a_locs = np.sort(rng.uniform(0.2, 8.0, k))
    a_w = rng.dirichlet(np.ones(k + 1))
    A = Measure.discrete([0.0, *a_locs], list(a_w))
    j = int(rng.integers(2, 4))
    b_locs = np.sort(rng.choice(np.arange(-10, 11), j, replace=False)).astype(float)
    b_w = rng.dirichlet(np.ones(j) * 3)
    B = Measure.discrete(list(b_locs), list(b_w))
    gamma = float(rng.uniform(0.05, 1.5))
    return A, B, gamma


def atom_limit_failures(rng, trials=100, tol=1e-4):
    """One-sided limits of x1 at isolated B atoms match the closed form."""
    fails = []
    for _ in range(trials):
        A, B, gamma = random_isolated_atom_setting(rng)
        an = SupportAnalyzer(A, B, gamma)
        h0 = float(rng.choice(B.atom_locations))
        side = str(rng.choice(["left", "right"]))
        val, _ = an.atom_limit_slope(h0, side)
        pred = an.predicted_atom_slope(h0)
        if not abs(val - pred) < tol:
            fails.append(f"h0={h0}, side={side}: limit {val:.10g} vs {pred:.10g}")
    return fails


def forward_failures(eq, report, rng, trials=100, height=1e-6, bound=1e-3):
    """Points of the reported complement have an almost real transform.

    The exact atom terms ``w / (b - z)`` are removed first: an atom at distance
    d alone contributes ``w y / d**2`` at height y although its real limit exists.
    """
    lo, hi = report.support.hull()
    span = hi - lo
    pool = report.complement.clip(lo - 0.5 * span, hi + 0.5 * span)
    fails = []
    for x in _uniform_in(pool, rng, trials):
        z = complex(x, height)
        im = (eq.solve_at(z).m - sum(w / (b - z) for b, w in report.atoms)).imag
        if not im < bound:
            fails.append(f"x={x:.12g}: Im m={im:.3e}")
    return fails


def converse_failures(eq, report, rng, trials=100, edge_tol=1e-8):
    """Interior points of the reported support carry positive density."""
    pool = [(a, b) for a, b in report.support if b > a]
    lo, hi = min(a for a, _ in pool), max(b for _, b in pool)
    from mpspectrum.measures import IntervalUnion
    pool = IntervalUnion(pool).clip(lo, hi)
    ends = [v for iv in report.support for v in iv]
    atoms = [b for b, _ in report.atoms]
    fails, done = [], 0
    while done < trials:
        x = float(_uniform_in(pool, rng, 1)[0])
        if atoms and min(abs(x - b) for b in atoms) < 1e-6:
            continue
        done += 1
        f, _ = eq.density_at(x)
        if f > 0:
            continue
        if min(abs(x - e) for e in ends) < edge_tol * max(1.0, abs(x)):
            continue
        fails.append(f"x={x:.12g}: density {f:.3e}")
    return fails
