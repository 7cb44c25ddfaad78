import json
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from mpspectrum.errors import ConvergenceError, DomainError
from mpspectrum.measures import Measure
from mpspectrum.simulate import (AuditRecord, EigenResult, EnsembleConfig, eigenvalues_symmetric, gap_and_mass_audit,
                                 gaussian_entries, ks_distance, raw_stream, sample_w, simulate, simulate_many,
                                 tridiagonal_count_below, tridiagonalize, uniforms, worker_threads)

from conftest import discrete_measures


def count_below(M, x):
    """Negative inertia of M - x I from a symmetric indefinite factorization."""
    _, D, _ = scipy.linalg.ldl(M - x * np.eye(M.shape[0]))
    return int(np.sum(np.linalg.eigvalsh(D) < 0)) if D.size else 0


def sturm_eigenvalues(M, tol=1e-13):
    n = M.shape[0]
    r = np.max(np.sum(np.abs(M), axis=1))
    out = []
    for k in range(n):
        lo, hi = -r - 1, r + 1
        while hi - lo > tol * max(1.0, abs(lo)):
            mid = 0.5 * (lo + hi)
            if count_below(M, mid) > k:
                hi = mid
            else:
                lo = mid
        out.append(0.5 * (lo + hi))
    return np.array(out)


def test_toeplitz_golden():
    T = np.diag(np.ones(3), 1) + np.diag(np.ones(3), -1)
    lam = eigenvalues_symmetric(T).eigenvalues
    golden = sorted(2 * math.cos(k * math.pi / 5) for k in range(1, 5))
    assert np.max(np.abs(lam - golden)) < 1e-10
    assert abs(lam[-1] - (1 + math.sqrt(5)) / 2) < 1e-10


def test_identity():
    assert list(eigenvalues_symmetric(np.eye(5)).eigenvalues) == [1.0] * 5


def test_small_sizes():
    assert eigenvalues_symmetric(np.array([[2.5]])).eigenvalues.tolist() == [2.5]
    lam = eigenvalues_symmetric(np.array([[0.0, 1.0], [1.0, 0.0]])).eigenvalues
    assert np.allclose(lam, [-1, 1], atol=1e-15)


def test_sturm_oracle_random_6x6():
    rng = np.random.default_rng(8)
    for _ in range(5):
        G = rng.normal(size=(6, 6))
        M = 0.5 * (G + G.T)
        assert np.max(np.abs(eigenvalues_symmetric(M).eigenvalues - sturm_eigenvalues(M))) < 1e-10


def test_tridiagonal_sturm_count_matches_inertia():
    rng = np.random.default_rng(9)
    G = rng.normal(size=(7, 7))
    M = G + G.T
    d, e = tridiagonalize(M)
    for x in rng.normal(scale=3, size=10):
        assert tridiagonal_count_below(d, e, x) == count_below(M, x)


def test_rejects_nonsymmetric():
    with pytest.raises(DomainError):
        eigenvalues_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_ql_failure_raises(monkeypatch):
    import mpspectrum.simulate as sim
    monkeypatch.setattr(sim, "_ql_implicit", lambda d, e, sweeps: (d, 1, 1.0))
    with pytest.raises(ConvergenceError):
        eigenvalues_symmetric(np.diag([1.0, 2.0, 3.0]) + 0.1)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2 ** 32))
def test_trace_and_frobenius_preserved(n, seed):
    G = gaussian_entries(seed, (n, n))
    M = G + G.T
    lam = eigenvalues_symmetric(M).eigenvalues
    assert abs(lam.sum() - np.trace(M)) <= 1e-9 * max(1.0, np.abs(M).sum())
    assert abs((lam ** 2).sum() - (M ** 2).sum()) <= 1e-9 * (M ** 2).sum()
    assert np.all(np.diff(lam) >= 0)


def test_matches_lapack_and_vector_check():
    G = gaussian_entries(3, (120, 120))
    M = (G + G.T) / 2
    res = eigenvalues_symmetric(M, check_vectors=5)
    assert np.max(np.abs(res.eigenvalues - np.linalg.eigvalsh(M))) < 1e-11
    assert max(res.vector_residuals) < 1e-8


# sampling -------------------------------------------------------------------------


def test_uniforms_in_unit_interval():
    u = uniforms(raw_stream(5, 10000))
    assert u.min() > 0 and u.max() <= 1
    assert abs(u.mean() - 0.5) < 0.01


def test_gaussian_moments():
    z = gaussian_entries(1, (200000,))
    assert abs(z.mean()) < 0.01
    assert abs(z.var() - 1) < 0.01


def test_seed_determinism():
    A, B, g = discrete_measures()
    cfg = EnsembleConfig(60, g, 17, A, B)
    W1, W2 = sample_w(cfg), sample_w(cfg)
    assert W1.tobytes() == W2.tobytes()
    assert simulate(cfg).eigenvalues.tobytes() == simulate(cfg).eigenvalues.tobytes()
    assert sample_w(EnsembleConfig(60, g, 18, A, B)).tobytes() != W1.tobytes()


def test_zero_perturbation_gives_B():
    B = Measure.discrete([-1.0, 2.0], [0.5, 0.5])
    for n in (2, 10):
        cfg = EnsembleConfig(n, 0.5, 1, Measure.atom(0.0), B)
        W = sample_w(cfg)
        assert np.array_equal(W, np.diag(B.quantiles(n)))
        lam = simulate(cfg).eigenvalues
        assert np.array_equal(lam, np.sort(B.quantiles(n)))


def test_rademacher_entries():
    A, B, g = discrete_measures()
    cfg = EnsembleConfig(40, g, 2, A, B, entry_law="rademacher")
    from mpspectrum.simulate import sample_x
    assert set(np.unique(sample_x(cfg))) == {-1.0, 1.0}


def test_weyl_containment():
    A = Measure.discrete([0.0, 1.0, 10.0], [0.2, 0.4, 0.4])
    B = Measure.discrete([-3.0, 3.0], [0.4, 0.6])
    for seed in range(3):
        cfg = EnsembleConfig(80, 0.5, seed, A, B)
        lam = simulate(cfg).eigenvalues
        base = np.sort(B.quantiles(80))
        assert np.all(lam >= base - 1e-10)


def test_config_validation():
    A, B, g = discrete_measures()
    with pytest.raises(DomainError):
        EnsembleConfig(1, g, 0, A, B)
    with pytest.raises(DomainError):
        EnsembleConfig(10, -1.0, 0, A, B)
    with pytest.raises(DomainError):
        EnsembleConfig(10, g, 0, A, B, entry_law="cauchy")


def test_simulate_many_threads_agree(monkeypatch):
    A, B, g = discrete_measures()
    cfgs = [EnsembleConfig(50, g, s, A, B) for s in range(4)]
    serial = simulate_many(cfgs, threads=1)
    parallel = simulate_many(cfgs, threads=3)
    for a, b in zip(serial, parallel):
        assert a.eigenvalues.tobytes() == b.eigenvalues.tobytes()
    monkeypatch.setenv("MPSPECTRUM_THREADS", "1")
    assert worker_threads() == 1


# comparisons -------------------------------------------------------------------------


def test_ks_exact_quantiles():
    mu = Measure([(0.3, Measure.atom(0.5)), (0.7, Measure.semicircle(1.0, 2.0))])
    for n in (10, 100, 1000):
        q = mu.quantiles(n)
        assert ks_distance(q, mu.cdf, mu.cdf_left, atoms=[0.5]) <= 1.0 / n + 1e-12


def test_ks_continuous_uniform():
    n = 50
    pts = (np.arange(n) + 0.5) / n
    F = lambda x: min(max(x, 0.0), 1.0)  # noqa: E731
    assert abs(ks_distance(pts, F) - 0.5 / n) < 1e-12


def test_ks_rejects_nonmonotone_cdf():
    with pytest.raises(DomainError):
        ks_distance(np.array([0.0, 1.0, 2.0]), lambda x: 1.0 - x / 3)


def test_eigen_csv_round_trip():
    res = EigenResult(np.array([-1.5, 0.1, 1.0 / 3]), 0.0)
    text = res.to_csv()
    assert text.splitlines()[0] == "index,lambda"
    assert np.array_equal(EigenResult.from_csv(text).eigenvalues, res.eigenvalues)


def test_audit_counts_and_round_trip(discrete):
    lam = np.array([-2.0, 2.0, 3.0, 3.0 + 1e-9, 4.0])
    rec = gap_and_mass_audit(lam, discrete.report, 0.05, atom_margin=1e-6)
    deep = {tuple(g["interval"]): g["deep_count"] for g in rec.gaps}
    assert sum(deep.values()) == 1  # only 2.0 lies deep inside a gap
    assert rec.atoms[0]["fraction"] == pytest.approx(0.4)
    assert not rec.ok
    again = AuditRecord.from_dict(json.loads(json.dumps(rec.to_dict())))
    assert again.to_dict() == rec.to_dict()
    with pytest.raises(DomainError):
        gap_and_mass_audit(lam, discrete.report, 0.0)


def test_zero_perturbation_atoms_audit_exactly():
    A, B = Measure.atom(0.0), Measure.discrete([-1.0, 2.0], [0.25, 0.75])
    from mpspectrum.support import determine_support
    report = determine_support(A, B, 0.5)
    lam = simulate(EnsembleConfig(40, 0.5, 0, A, B)).eigenvalues
    rec = gap_and_mass_audit(lam, report, 0.05, atom_margin=1e-12, atom_tol=0.0)
    assert rec.atoms_ok
