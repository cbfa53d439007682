"""Explicit-formula evaluators: summation engine, breakdowns, identities."""

import math
from itertools import product

import mpmath
import numpy as np
import pytest
from scipy.special import loggamma

from liouconv import convolve, explicit, sieve, specfun, zeros

mpmath.mp.dps = 30


@pytest.fixture(scope="module")
def lio_10k():
    return sieve.build_sieve(sieve.KIND_LIOUVILLE, 10 ** 4)


@pytest.fixture(scope="module")
def lio_series_10k(lio_10k):
    return convolve.convolve_fft(lio_10k, 2, 10 ** 4)


# ---------------------------------------------------------------------------
# the summation engine


def test_blocked_sum_matches_fsum(rng):
    # block sums are exact; the pairwise fold can round, so the bound
    # scales with the absolute mass rather than the (cancelling) total
    for size in (0, 1, 63, 64, 65, 200, 4097):
        vals = rng.normal(0.0, 1.0, size) * 10.0 ** rng.integers(-8, 8, size)
        got = explicit.blocked_sum(vals)
        want = math.fsum(vals) if size else 0.0
        mass = float(np.sum(np.abs(vals))) if size else 1.0
        assert abs(got - want) <= 1e-13 * mass


def test_blocked_sum_complex(rng):
    vals = rng.normal(size=513) + 1j * rng.normal(size=513)
    got = explicit.blocked_sum(vals)
    mass = float(np.sum(np.abs(vals)))
    assert abs(got.real - math.fsum(vals.real)) <= 1e-13 * mass
    assert abs(got.imag - math.fsum(vals.imag)) <= 1e-13 * mass


def test_blocked_sum_worker_invariance(rng):
    vals = rng.normal(0.0, 1.0, 10_001) * 10.0 ** rng.integers(-6, 6, 10_001)
    base = explicit.blocked_sum(vals, workers=1)
    for workers in (2, 3, 8):
        assert explicit.blocked_sum(vals, workers=workers) == base


# ---------------------------------------------------------------------------
# summatory formulas


def test_breakdown_parts_sum_exactly(zs1000, lio_10k):
    bd = explicit.explicit_summatory(sieve.KIND_LIOUVILLE, 500.0, zs1000)
    assert bd.total == bd.main_term + bd.single_sum + bd.double_sum
    assert bd.imag_residue < 1e-8 * (1.0 + abs(bd.total))
    assert bd.double_sum == 0.0
    assert bd.pair_terms == 0


def test_summatory_truncation_accounting(zs1000):
    bd = explicit.explicit_summatory(sieve.KIND_LIOUVILLE, 100.0, zs1000,
                                     T=100.0)
    assert bd.truncation_T == 100.0
    assert bd.zeros_used == int(np.searchsorted(zs1000.gammas, 100.0))
    with pytest.raises(ValueError):
        explicit.explicit_summatory(sieve.KIND_LIOUVILLE, 100.0, zs1000,
                                    T=zs1000.t_max + 5.0)


def test_summatory_single_sum_brute(zs1000):
    """Assemble the zero sum with a plain python loop and compare."""
    x = 350.0
    zsub = zeros.truncate(zs1000, count=50)
    bd = explicit.explicit_summatory(sieve.KIND_LIOUVILLE, x, zsub)
    acc = []
    for k in range(50):
        rho = complex(zsub.rhos[k])
        coeff = complex(zsub.z2rhos[k]) / (complex(zsub.zprimes[k]) * rho)
        term = coeff * x ** rho
        acc.append(term + term.conjugate())
    brute = math.fsum(t.real for t in acc)
    assert bd.single_sum == pytest.approx(brute, rel=1e-12)
    assert bd.main_term == pytest.approx(
        math.sqrt(x) / specfun.zeta_half() + 1.0, rel=1e-14)


def test_summatory_residual_within_envelope(zs1000, lio_10k):
    bd = explicit.explicit_summatory(sieve.KIND_LIOUVILLE, 2000.0, zs1000)
    direct = sieve.summatory(lio_10k, 2000.0)
    assert abs(direct - bd.total) < bd.envelope


def test_summatory_moebius_main_is_the_residue_constant(zs1000):
    bd = explicit.explicit_summatory(sieve.KIND_MOEBIUS, 777.0, zs1000)
    assert bd.main_term == -2.0


def test_remainder_bound_shape():
    lo = explicit.summatory_remainder_bound(sieve.KIND_LIOUVILLE, 100.0,
                                            500.0)
    mo = explicit.summatory_remainder_bound(sieve.KIND_MOEBIUS, 100.0, 500.0)
    assert 0.0 < lo < mo
    tighter = explicit.summatory_remainder_bound(sieve.KIND_LIOUVILLE, 100.0,
                                                 5000.0)
    assert tighter < lo
    # x = 1 hits the removable (x - x^c)/log x singularity
    assert math.isfinite(
        explicit.summatory_remainder_bound(sieve.KIND_LIOUVILLE, 1.0, 500.0))


# ---------------------------------------------------------------------------
# Cesaro formulas and the double-sum engine


def test_cesaro_main_term_closed_form(zs1000):
    x = 4000.0
    bd = explicit.explicit_cesaro(sieve.KIND_LIOUVILLE, x, zs1000, d=2)
    want = x * x * math.pi / (8.0 * specfun.zeta_half() ** 2)
    assert bd.main_term == pytest.approx(want, rel=1e-14)
    assert bd.pair_terms > 0
    assert bd.total == bd.main_term + bd.single_sum + bd.double_sum


def test_cesaro_double_sum_brute(zs1000):
    """All four conjugate sign patterns, summed the slow way."""
    x = 900.0
    zsub = zeros.truncate(zs1000, count=12)
    bd = explicit.explicit_cesaro(sieve.KIND_LIOUVILLE, x, zsub, d=2)
    coeff = zsub.z2rhos / zsub.zprimes
    terms = []
    for i, j in product(range(12), repeat=2):
        for s1, s2 in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            z1 = 0.5 + s1 * 1j * zsub.gammas[i]
            z2 = 0.5 + s2 * 1j * zsub.gammas[j]
            c1 = coeff[i] if s1 > 0 else np.conj(coeff[i])
            c2 = coeff[j] if s2 > 0 else np.conj(coeff[j])
            val = c1 * c2 * np.exp(
                loggamma(z1) + loggamma(z2) - loggamma(z1 + z2 + 2.0)
                + (z1 + z2 + 1.0) * math.log(x))
            terms.append(complex(val))
    brute = math.fsum(t.real for t in terms)
    assert bd.double_sum == pytest.approx(brute, rel=1e-10)


def test_cesaro_residual_scale(zs1000, lio_series_10k):
    x = 5000.0
    direct = convolve.cesaro_sum(lio_series_10k, x)
    bd = explicit.explicit_cesaro(sieve.KIND_LIOUVILLE, x, zs1000, d=2)
    assert abs(direct - bd.total) / x ** 1.5 < 50.0


def test_cesaro_moebius_is_double_only(zs1000):
    bd = explicit.explicit_cesaro(sieve.KIND_MOEBIUS, 1500.0, zs1000, d=2)
    assert bd.main_term == 0.0
    assert bd.single_sum == 0.0
    assert bd.double_sum != 0.0


def test_cesaro_extrapolation_flag(zs1000):
    with pytest.raises(ValueError):
        explicit.explicit_cesaro(sieve.KIND_MOEBIUS, 500.0, zs1000, d=3)
    bd = explicit.explicit_cesaro(sieve.KIND_MOEBIUS, 500.0, zs1000, d=3,
                                  extrapolated=True)
    assert math.isfinite(bd.total)


def test_cesaro_worker_determinism(zs1000):
    zsub = zeros.truncate(zs1000, count=300)
    base = explicit.explicit_cesaro(sieve.KIND_LIOUVILLE, 3000.0, zsub, d=2,
                                    workers=1)
    for workers in (2, 4):
        again = explicit.explicit_cesaro(sieve.KIND_LIOUVILLE, 3000.0, zsub,
                                         d=2, workers=workers)
        assert again.total == base.total
        assert again.double_sum == base.double_sum


# ---------------------------------------------------------------------------
# Dirichlet and exponential weightings


def test_dirichlet_direct_brute(lio_series_10k, rng):
    s = 3.0 + 1.0j
    got = explicit.dirichlet_direct(lio_series_10k, s, 400)
    vals = lio_series_10k.values
    acc = [int(vals[n]) * complex(n) ** (-s) for n in range(2, 401)]
    want = complex(math.fsum(t.real for t in acc),
                   math.fsum(t.imag for t in acc))
    assert got == pytest.approx(want, rel=1e-13)


def test_dirichlet_explicit_real_axis(zs1000, lio_series_10k):
    s = 3.0 + 0j
    direct = explicit.dirichlet_direct(lio_series_10k, s, 10 ** 4)
    bd = explicit.dirichlet_explicit(sieve.KIND_LIOUVILLE, s, zs1000)
    assert bd.imag_residue < 1e-8 * (1.0 + abs(bd.total))
    # the formula carries an O(1) defect by design, so only the reported
    # envelope is load bearing here
    assert abs(direct - bd.total) < bd.envelope
    assert bd.pair_terms > 0


def test_dirichlet_domain_and_pole_guards(zs1000):
    with pytest.raises(ValueError):
        explicit.dirichlet_explicit(sieve.KIND_LIOUVILLE, 0.9 + 0j, zs1000)
    near_pole = (1.0 + 1e-9) + 1j * float(zs1000.gammas[0])
    with pytest.raises(ValueError):
        explicit.dirichlet_explicit(sieve.KIND_LIOUVILLE, near_pole, zs1000)


def test_exponential_direct_needs_decayed_tail(lio_series_10k):
    with pytest.raises(ValueError):
        explicit.exponential_direct(lio_series_10k, 0.001, 10 ** 4)


def test_exponential_formula_structure(zs1000, lio_series_10k):
    y = 0.05
    direct = explicit.exponential_direct(lio_series_10k, y, 10 ** 4)
    bd = explicit.exponential_explicit(sieve.KIND_LIOUVILLE, y, zs1000)
    want_main = math.pi / (4.0 * specfun.zeta_half() ** 2 * y)
    assert bd.main_term == pytest.approx(want_main, rel=1e-14)
    assert bd.pair_terms == 0          # the double sum is a factored square
    assert abs(direct - bd.total) < bd.envelope
    mu = explicit.exponential_explicit(sieve.KIND_MOEBIUS, y, zs1000)
    assert mu.main_term == 0.0
    assert mu.double_sum >= 0.0


# ---------------------------------------------------------------------------
# weighted averages and the exact identity


def _brute_weighted(kind, w, table, d):
    """Triple loop over the cut first factor and the (d-1)-fold rest."""
    v = [int(t) for t in table.values]
    rest = [0] * (table.limit + 1)
    rest[0] = 1
    for _ in range(d - 1):
        nxt = [0] * (table.limit + 1)
        for i, r in enumerate(rest):
            if r == 0:
                continue
            for j in range(1, table.limit + 1 - i):
                nxt[i + j] += r * v[j]
        rest = nxt
    cut = int(math.floor(w.eta * w.a))
    acc = []
    for m in range(cut + 1, table.limit + 1):
        if v[m] == 0:
            continue
        for j in range(d - 1, table.limit + 1 - m):
            if rest[j]:
                acc.append(v[m] * rest[j] * float(w.f((m + j) / w.eta)))
    return math.fsum(acc)


@pytest.mark.parametrize("kind", [sieve.KIND_LIOUVILLE, sieve.KIND_MOEBIUS])
@pytest.mark.parametrize("d", [2, 3])
def test_weighted_direct_brute(kind, d):
    table = sieve.build_sieve(kind, 64)
    w = explicit.make_polynomial_weight(0.3, 2.1, 8.0, power=3)
    got = explicit.weighted_average_direct(kind, w, table, d=d)
    want = _brute_weighted(kind, w, table, d)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("kind", [sieve.KIND_LIOUVILLE, sieve.KIND_MOEBIUS])
def test_exact_identity_spot(kind):
    table = sieve.build_sieve(kind, 2048)
    for a, b, eta, p, d in ((0.0, 2.5, 37.0, 2, 2),
                            (1.3, 3.3, 25.0, 3, 3)):
        w = explicit.make_polynomial_weight(a, b, eta, power=p)
        direct = explicit.weighted_average_direct(kind, w, table, d=d)
        rhs = explicit.weighted_average_rhs(kind, w, table, d=d,
                                            mode="exact-identity")
        assert abs(direct - rhs) / max(1.0, abs(direct)) < 1e-10


def test_polynomial_weight_moments_against_quadrature():
    w = explicit.make_polynomial_weight(0.5, 3.0, 40.0, power=3)
    p = 3
    for z in (0.3 + 0j, 1.5 + 2.0j, 2.0 - 5.0j):
        got = complex(w.moments(np.array([z]))[0])
        f2 = lambda t: p * (p - 1) * (3.0 - t) ** (p - 2) * t ** (z + 1.0)
        want = complex(mpmath.quad(f2, [0.5, 3.0]))
        assert got == pytest.approx(want, rel=1e-10)


def test_polynomial_weight_derivatives_consistent():
    w = explicit.make_polynomial_weight(0.5, 3.0, 40.0, power=4)
    h = 1e-6
    for t in (0.8, 1.7, 2.9):
        fd1 = (w.f(t + h) - w.f(t - h)) / (2.0 * h)
        assert float(w.f_prime(t)) == pytest.approx(float(fd1), rel=1e-7)
        fd2 = (w.f_prime(t + h) - w.f_prime(t - h)) / (2.0 * h)
        assert float(w.f_second(t)) == pytest.approx(float(fd2), rel=1e-7)
    assert float(w.f(3.0)) == 0.0
    assert float(w.f(0.4)) == 0.0   # support starts at a


def test_weight_validation():
    with pytest.raises(ValueError):
        explicit.make_polynomial_weight(-0.5, 2.0, 10.0)
    with pytest.raises(ValueError):
        explicit.make_polynomial_weight(2.0, 2.0, 10.0)
    with pytest.raises(ValueError):
        explicit.make_polynomial_weight(0.0, 2.0, -1.0)
    with pytest.raises(ValueError):
        explicit.make_polynomial_weight(0.0, 2.0, 10.0, power=1)


def test_boundary_flag():
    assert not explicit.make_polynomial_weight(0.0, 2.0, 50.0).boundary_applies
    assert explicit.make_polynomial_weight(1.0, 2.0, 50.0).boundary_applies


def test_weighted_rhs_mode_guard(lio_10k, zs1000):
    w = explicit.make_polynomial_weight(0.5, 3.0, 50.0, power=3)
    with pytest.raises(ValueError):
        explicit.weighted_average_rhs(sieve.KIND_LIOUVILLE, w, lio_10k,
                                      mode="guess")
    with pytest.raises(ValueError):
        explicit.weighted_average_rhs(sieve.KIND_LIOUVILLE, w, lio_10k,
                                      mode="explicit-formula")


def test_weighted_explicit_formula_breakdown(lio_10k, zs1000):
    zsub = zeros.truncate(zs1000, count=300)
    w = explicit.make_polynomial_weight(0.5, 3.0, 50.0, power=3)
    direct = explicit.weighted_average_direct(sieve.KIND_LIOUVILLE, w,
                                              lio_10k, d=2)
    bd = explicit.weighted_average_rhs(sieve.KIND_LIOUVILLE, w, lio_10k,
                                       zs=zsub, d=2, mode="explicit-formula")
    assert bd.imag_residue < 1e-8 * (1.0 + abs(bd.total))
    assert abs(direct - bd.total) < bd.envelope


# ---------------------------------------------------------------------------
# the absolute double-series diagnostic


def test_double_series_against_independent_sum(zs1000):
    K = 64
    zsub = zeros.truncate(zs1000, count=K)
    for kind in (sieve.KIND_LIOUVILLE, sieve.KIND_MOEBIUS):
        mine = explicit.double_series_diagnostic(zsub, 1.0, kind, K)
        for pos, cut in enumerate((K // 8, K // 4, K // 2, K)):
            g = zsub.gammas[:cut]
            if kind == sieve.KIND_LIOUVILLE:
                c = np.abs(zsub.z2rhos[:cut] / zsub.zprimes[:cut])
            else:
                c = np.abs(1.0 / zsub.zprimes[:cut])
            i, j = np.triu_indices(cut)
            r1 = 0.5 + 1j * g[i]
            r2 = 0.5 + 1j * g[j]
            lg = loggamma(r1).real + loggamma(r2).real
            pp = np.exp(lg - loggamma(r1 + r2 + 2.0).real)
            pm = np.exp(lg - loggamma(r1 + np.conj(r2) + 2.0).real)
            want = float(np.sum(2.0 * c[i] * c[j] * (pp + pm)))
            assert mine[pos] == pytest.approx(want, rel=1e-10)


def test_double_series_partial_sums_increase(zs1000):
    out = explicit.double_series_diagnostic(zs1000, 1.0,
                                            sieve.KIND_LIOUVILLE, 800)
    assert out[0] < out[1] < out[2] < out[3]


def test_double_series_guards(zs1000):
    with pytest.raises(ValueError):
        explicit.double_series_diagnostic(zs1000, 0.5, sieve.KIND_LIOUVILLE,
                                          100)
    with pytest.raises(ValueError):
        explicit.double_series_diagnostic(zs1000, 1.0, sieve.KIND_LIOUVILLE,
                                          5000)
