"""Special-function layer against mpmath and closed-form identities."""

import math

import mpmath
import numpy as np
import pytest

from liouconv import specfun

mpmath.mp.dps = 30


def test_log_gamma_against_mpmath(rng):
    for _ in range(40):
        z = complex(rng.uniform(0.2, 25.0), rng.uniform(-200.0, 200.0))
        got = specfun.log_gamma(z)
        want = complex(mpmath.loggamma(mpmath.mpc(z.real, z.imag)))
        assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_log_gamma_recurrence():
    for z in (0.5 + 14.134725141734695j, 3.0 + 100.0j, 1.5 - 7.0j):
        lhs = specfun.log_gamma(z + 1.0) - specfun.log_gamma(z)
        # both sides use the principal branch, and Re z > 0 keeps log z on it
        assert lhs == pytest.approx(np.log(complex(z)), rel=1e-13)


def test_log_gamma_rejects_left_half_plane():
    with pytest.raises(ValueError):
        specfun.log_gamma(-1.5 + 2.0j)
    with pytest.raises(ValueError):
        specfun.log_gamma(complex("inf"))


def test_gamma_ratio_against_logs(rng):
    for _ in range(20):
        r1 = complex(rng.uniform(0.3, 3.0), rng.uniform(-80.0, 80.0))
        r2 = complex(rng.uniform(0.3, 3.0), rng.uniform(-80.0, 80.0))
        shift = float(rng.uniform(1.0, 4.0))
        got = specfun.gamma_ratio(r1, r2, shift)
        want = complex(mpmath.gamma(r1) * mpmath.gamma(r2)
                       / mpmath.gamma(r1 + r2 + shift))
        assert got == pytest.approx(want, rel=1e-10, abs=1e-300)


def test_gamma_abs_half_line_matches_log_gamma():
    # the closed form pi/cosh(pi y) against the scipy log-gamma route;
    # two independent evaluations of the same magnitude
    for y in (0.0, 1.0, 14.134725141734695, 50.0, 200.0):
        closed = specfun.gamma_abs_half_line(y)
        via_log = math.exp(specfun.log_gamma(0.5 + 1j * y).real)
        assert closed == pytest.approx(via_log, rel=1e-12)


def test_gamma_abs_lower_bound_holds(rng):
    for _ in range(25):
        x = float(rng.uniform(0.5, 4.0))
        y = float(rng.uniform(-60.0, 60.0))
        bound = specfun.gamma_abs_lower_bound(x, y)
        actual = math.exp(specfun.log_gamma(complex(x, y)).real)
        assert bound <= actual * (1.0 + 1e-12)


def test_stirling_estimate_tracks_gamma():
    for y in (20.0, 60.0, 150.0):
        est = specfun.stirling_gamma_abs(0.5, y)
        actual = math.exp(specfun.log_gamma(0.5 + 1j * y).real)
        assert 0.5 < est / actual < 2.0


def test_zeta_known_values():
    assert specfun.zeta(2.0) == pytest.approx(math.pi ** 2 / 6.0, rel=1e-13)
    assert specfun.zeta(4.0) == pytest.approx(math.pi ** 4 / 90.0, rel=1e-13)
    assert specfun.zeta_half() == pytest.approx(-1.4603545088095873,
                                                rel=1e-12)
    # the first zero really is a zero at this precision
    rho1 = 0.5 + 14.134725141734695j
    assert abs(specfun.zeta(rho1)) < 1e-9


def test_zeta_against_mpmath(rng):
    for _ in range(15):
        s = complex(rng.uniform(0.45, 3.0), rng.uniform(-400.0, 400.0))
        if abs(s - 1.0) < 0.05:
            continue
        got = specfun.zeta(s)
        want = complex(mpmath.zeta(mpmath.mpc(s.real, s.imag)))
        assert got == pytest.approx(want, rel=1e-9, abs=1e-12)


def test_zeta_batch_matches_scalar(rng):
    pts = np.array([complex(rng.uniform(0.5, 2.0), rng.uniform(-300.0, 300.0))
                    for _ in range(12)])
    batch = specfun.zeta(pts)
    for i, s in enumerate(pts):
        assert batch[i] == specfun.zeta(complex(s))


def test_zeta_derivative_against_mpmath(rng):
    for _ in range(10):
        s = complex(rng.uniform(0.5, 2.0), rng.uniform(-150.0, 150.0))
        if abs(s - 1.0) < 0.05:
            continue
        got = specfun.zeta_derivative(s)
        want = complex(mpmath.zeta(mpmath.mpc(s.real, s.imag), derivative=1))
        assert got == pytest.approx(want, rel=1e-9, abs=1e-12)


def test_zeta_derivative_at_first_zero():
    rho1 = 0.5 + 14.134725141734695j
    got = specfun.zeta_derivative(rho1)
    assert got == pytest.approx(0.7832965118670309 + 0.1246998297481711j,
                                rel=1e-10)


def test_zeta_domain_guards():
    with pytest.raises(ValueError):
        specfun.zeta(0.2 + 5.0j)
    with pytest.raises(ValueError):
        specfun.zeta(1.0 + 1e-9j)
