"""Monte Carlo ensembles ``W = B_n + X^T A_n X / n`` and their spectra.

Random entries come from NumPy's Philox4x64 counter-based bit generator
keyed directly by the seed, so a seed fixes every matrix bit for bit.
Uniforms are the top 53 bits of each raw word, shifted into ``(0, 1]``;
Gaussians use the Box-Muller transform on consecutive pairs.

Eigenvalues are computed in-house: Householder reduction to tridiagonal
form followed by implicit-shift QL, compiled with numba when available.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError
from .measures import Measure

try:  # pragma: no cover - exercised implicitly
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

ENTRY_LAWS = ("gaussian", "rademacher")
_TWO_POW_M53 = 2.0 ** -53


@dataclass(frozen=True)
class EnsembleConfig:
    n: int
    gamma: float
    seed: int
    A: Measure
    B: Measure
    entry_law: str = "gaussian"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError("n must be an integer >= 2")
        if not self.gamma > 0:
            raise DomainError("gamma must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.entry_law not in ENTRY_LAWS:
            raise DomainError(f"entry_law must be one of {ENTRY_LAWS}")
        if self.p < 1:
            raise DomainError(f"p = round(gamma * n) = {self.p} must be at least 1")

    @property
    def p(self) -> int:
        return int(round(self.gamma * self.n))


# random entries -----------------------------------------------------------------


def raw_stream(seed: int, count: int) -> np.ndarray:
    """``count`` raw 64-bit words from Philox keyed by ``seed``."""
    bg = np.random.Philox(key=int(seed))
    return bg.random_raw(count)


def uniforms(raw: np.ndarray) -> np.ndarray:
    """Map raw words to doubles in ``(0, 1]``."""
    return ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_POW_M53


def gaussian_entries(seed: int, shape) -> np.ndarray:
    """Standard normal array via Box-Muller on Philox uniforms."""
    size = int(np.prod(shape))
    pairs = (size + 1) // 2
    u = uniforms(raw_stream(seed, 2 * pairs))
    r = np.sqrt(-2.0 * np.log(u[0::2]))
    theta = 2.0 * math.pi * u[1::2]
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(theta)
    z[1::2] = r * np.sin(theta)
    return z[:size].reshape(shape)


def rademacher_entries(seed: int, shape) -> np.ndarray:
    size = int(np.prod(shape))
    bits = raw_stream(seed, size) >> np.uint64(63)
    return (1.0 - 2.0 * bits.astype(np.float64)).reshape(shape)


def sample_x(cfg: EnsembleConfig) -> np.ndarray:
    shape = (cfg.p, cfg.n)
    if cfg.entry_law == "gaussian":
        return gaussian_entries(cfg.seed, shape)
    return rademacher_entries(cfg.seed, shape)


def sample_w(cfg: EnsembleConfig) -> np.ndarray:
    """Symmetric ``n x n`` matrix ``B_n + X^T A_n X / n``."""
    u = cfg.A.quantiles(cfg.p)
    b = cfg.B.quantiles(cfg.n)
    X = sample_x(cfg)
    W = (X.T * u) @ X / cfg.n
    W[np.diag_indices_from(W)] += b
    return 0.5 * (W + W.T)


# eigensolver --------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _tridiagonalize(a):
    """Householder reduction of a symmetric matrix (destroys ``a``)."""
    n = a.shape[0]
    d = np.zeros(n)
    e = np.zeros(n)
    v = np.zeros(n)
    p = np.zeros(n)
    for k in range(n - 2):
        s = 0.0
        for i in range(k + 1, n):
            s += a[i, k] * a[i, k]
        norm = math.sqrt(s)
        d[k] = a[k, k]
        if norm == 0.0:
            e[k] = 0.0
            continue
        x0 = a[k + 1, k]
        alpha = -norm if x0 >= 0 else norm
        e[k] = alpha
        # v = (x - alpha e1) / |x - alpha e1|
        vn2 = s - x0 * x0 + (x0 - alpha) * (x0 - alpha)
        if vn2 == 0.0:
            continue
        inv = 1.0 / math.sqrt(vn2)
        v[k + 1] = (x0 - alpha) * inv
        for i in range(k + 2, n):
            v[i] = a[i, k] * inv
        # p = S v using the lower triangle of the trailing block.
        for i in range(k + 1, n):
            p[i] = 0.0
        for i in range(k + 1, n):
            acc = a[i, i] * v[i]
            vi = v[i]
            for j in range(k + 1, i):
                aij = a[i, j]
                acc += aij * v[j]
                p[j] += aij * vi
            p[i] += acc
        kk = 0.0
        for i in range(k + 1, n):
            kk += v[i] * p[i]
        for i in range(k + 1, n):
            p[i] = 2.0 * (p[i] - kk * v[i])
        # S <- S - v q^T - q v^T with q = 2 (p - K v); lower triangle only.
        for i in range(k + 1, n):
            vi = v[i]
            pi = p[i]
            for j in range(k + 1, i + 1):
                a[i, j] -= vi * p[j] + pi * v[j]
    if n >= 2:
        d[n - 2] = a[n - 2, n - 2]
        e[n - 2] = a[n - 1, n - 2]
    d[n - 1] = a[n - 1, n - 1]
    return d, e


@njit(cache=True, nogil=True)
def _ql_implicit(d, e, max_sweeps):
    """Eigenvalues of the tridiagonal (d, e) by implicit-shift QL.

    ``e[i]`` couples ``d[i]`` and ``d[i+1]``. Returns
    ``(eigenvalues, status, max_deflated_offdiag)``; status 0 on success.
    """
    n = d.shape[0]
    d = d.copy()
    e = e.copy()
    e[n - 1] = 0.0
    sweeps = 0
    worst = 0.0
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= 2.220446049250313e-16 * dd:
                    if abs(e[m]) > worst:
                        worst = abs(e[m])
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                return d, 1, worst
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return d, 0, worst


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    max_offdiag_residual: float
    vector_residuals: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def to_csv(self) -> str:
        rows = ["index,lambda"] + [f"{i},{v:.17g}" for i, v in enumerate(self.eigenvalues)]
        return "\n".join(rows) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "EigenResult":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if lines[0].strip() != "index,lambda":
            raise DomainError("eigenvalue CSV must start with header 'index,lambda'")
        vals = [float(ln.split(",")[1]) for ln in lines[1:]]
        return cls(np.array(vals), 0.0)


def tridiagonalize(M) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of an orthogonally similar tridiagonal matrix."""
    a = np.array(M, dtype=np.float64, order="C", copy=True)
    if a.shape[0] == 1:
        return a[0].copy(), np.zeros(1)
    return _tridiagonalize(a)


def eigenvalues_symmetric(M, check_vectors: int = 0, seed: int = 0) -> EigenResult:
    """All eigenvalues of a real symmetric matrix, ascending.

    ``check_vectors > 0`` spot-checks that many eigenpairs by inverse
    iteration and records ``||Mv - lambda v||``.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError("matrix must be square")
    n = M.shape[0]
    scale = max(1.0, float(np.max(np.abs(M)))) if n else 1.0
    if n and np.max(np.abs(M - M.T)) > 1e-12 * scale:
        raise DomainError("matrix is not symmetric within 1e-12 relative")
    if n == 0:
        return EigenResult(np.zeros(0), 0.0)
    if n == 1:
        return EigenResult(M[0].copy(), 0.0)
    d, e = tridiagonalize(M)
    lam, status, worst = _ql_implicit(d, e, 30 * n)
    if status != 0:
        raise ConvergenceError(f"QL iteration did not converge within {30 * n} sweeps")
    lam = np.sort(lam)
    result = EigenResult(lam, float(worst))
    if check_vectors:
        result.vector_residuals = _spot_check(M, lam, int(check_vectors), seed)
    return result


def _spot_check(M, lam, count, seed):
    n = M.shape[0]
    idx = np.unique(np.linspace(0, n - 1, min(count, n)).astype(int))
    res = []
    v0 = gaussian_entries(seed, (n,))
    norm_f = np.linalg.norm(M)
    for i in idx:
        shift = lam[i] + 1e-10 * max(1.0, norm_f)
        v = v0 / np.linalg.norm(v0)
        for _ in range(3):
            try:
                v = np.linalg.solve(M - shift * np.eye(n), v)
            except np.linalg.LinAlgError:
                break
            v /= np.linalg.norm(v)
        res.append(float(np.linalg.norm(M @ v - lam[i] * v)))
    return res


def tridiagonal_count_below(d, e, x: float) -> int:
    """Number of eigenvalues of the tridiagonal (d, e) below ``x`` (Sturm)."""
    count = 0
    q = 1.0
    for i in range(len(d)):
        off = e[i - 1] ** 2 if i > 0 else 0.0
        q = d[i] - x - (off / q if i > 0 else 0.0)
        if q == 0.0:
            q = -1e-300
        if q < 0:
            count += 1
    return count


# comparisons with the model ----------------------------------------------------------


def snap_to_atoms(eigs: np.ndarray, atoms: Sequence[float], tol: float) -> np.ndarray:
    """Replace eigenvalues within ``tol`` of a model atom by the atom."""
    out = np.array(eigs, dtype=float)
    for b in atoms:
        out[np.abs(out - b) <= tol * max(1.0, abs(b))] = b
    return out


def ks_distance(eigs, cdf: Callable[[float], float], cdf_left: Callable[[float], float] | None = None,
                atoms: Sequence[float] | None = None, snap_tol: float = 1e-6) -> float:
    """Kolmogorov-Smirnov distance between the e.d.f. and a model CDF.

    Both one-sided limits are compared at each sample point. When the model
    has atoms (taken from ``cdf.atoms`` if present), eigenvalues within
    ``snap_tol`` of one are snapped onto it first so that numerically
    perturbed copies of an exact eigenvalue count toward the jump.
    """
    lam = np.sort(np.asarray(eigs.eigenvalues if isinstance(eigs, EigenResult) else eigs, dtype=float))
    n = lam.size
    if n == 0:
        raise DomainError("no eigenvalues")
    if cdf_left is None:
        cdf_left = getattr(cdf, "left", cdf)
    if atoms is None:
        atoms = [b for b, _ in getattr(cdf, "atoms", [])]
    lam = np.sort(snap_to_atoms(lam, atoms, snap_tol))
    vals, counts = np.unique(lam, return_counts=True)
    hi = np.cumsum(counts) / n
    lo = hi - counts / n
    F = np.array([float(cdf(v)) for v in vals])
    FL = np.array([float(cdf_left(v)) for v in vals])
    if np.any(np.diff(F) < 0) or np.any(FL > F):
        raise DomainError("model CDF is not nondecreasing on the sample")
    return float(max(np.max(np.abs(hi - F)), np.max(np.abs(lo - FL))))


@dataclass
class AuditRecord:
    gaps: list[dict]
    atoms: list[dict]
    margin: float
    atom_margin: float
    atom_tol: float

    @property
    def gaps_ok(self) -> bool:
        return all(g["deep_count"] == 0 for g in self.gaps)

    @property
    def atoms_ok(self) -> bool:
        return all(abs(a["fraction"] - a["mass"]) <= self.atom_tol for a in self.atoms)

    @property
    def ok(self) -> bool:
        return self.gaps_ok and self.atoms_ok

    def to_dict(self) -> dict:
        return {
            "margin": self.margin, "atom_margin": self.atom_margin, "atom_tol": self.atom_tol,
            "gaps": self.gaps, "atoms": self.atoms, "ok": self.ok,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AuditRecord":
        gaps = [{**g, "interval": [float(v) for v in g["interval"]]} for g in data["gaps"]]
        return cls(gaps, list(data["atoms"]), data["margin"], data["atom_margin"], data["atom_tol"])


def gap_and_mass_audit(eigs, report, margin: float, atom_margin: float | None = None,
                       atom_tol: float = 0.01) -> AuditRecord:
    """Eigenvalues deep inside reported gaps and near reported atoms."""
    if not margin > 0:
        raise DomainError("margin must be positive")
    lam = np.asarray(eigs.eigenvalues if isinstance(eigs, EigenResult) else eigs, dtype=float)
    atom_margin = margin if atom_margin is None else atom_margin
    gaps = []
    for a, b in report.complement:
        inside = (lam > a + margin) & (lam < b - margin)
        gaps.append({"interval": [a, b], "deep_count": int(np.count_nonzero(inside))})
    atoms = []
    for b, mass in report.atoms:
        frac = float(np.count_nonzero(np.abs(lam - b) <= atom_margin)) / lam.size
        atoms.append({"x": b, "mass": mass, "fraction": frac})
    return AuditRecord(gaps, atoms, margin, atom_margin, atom_tol)


# replicates ---------------------------------------------------------------------------


def worker_threads() -> int:
    try:
        cap = int(os.environ.get("MPSPECTRUM_THREADS", "0"))
    except ValueError:
        cap = 0
    avail = os.cpu_count() or 1
    return max(1, min(cap, avail) if cap > 0 else avail)


def simulate(cfg: EnsembleConfig) -> EigenResult:
    return eigenvalues_symmetric(sample_w(cfg))


def simulate_many(cfgs: Sequence[EnsembleConfig], threads: int | None = None) -> list[EigenResult]:
    """Independent replicates, one generator stream per seed."""
    threads = worker_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(cfgs) <= 1:
        return [simulate(c) for c in cfgs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(simulate, cfgs))
