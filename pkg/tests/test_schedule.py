import math

import numpy as np
import pytest

from stableem.schedule import (
    StepSchedule,
    decay_diagnostics,
    omega_of,
    rho_theory,
)


def test_c_over_rho_n_values():
    s = StepSchedule.c_over_rho_n(c=0.5, rho=1.0)
    assert s.gamma_at(1) == 0.5
    assert s.gamma_at(10) == pytest.approx(0.05)
    np.testing.assert_allclose(s.gammas(4), [0.5, 0.25, 0.5 / 3, 0.125])


def test_polynomial_values():
    s = StepSchedule.polynomial(gamma1=0.1, a=0.5)
    assert s.gamma_at(4) == pytest.approx(0.05)
    assert s.t_at(0) == 0.0
    assert s.t_at(2) == pytest.approx(0.1 * (1 + 2**-0.5))


def test_explicit_validation():
    StepSchedule.explicit([0.5, 0.5, 0.25])
    with pytest.raises(ValueError):
        StepSchedule.explicit([0.25, 0.5])  # increasing
    with pytest.raises(ValueError):
        StepSchedule.explicit([0.5, 0.0])
    with pytest.raises(ValueError):
        StepSchedule.explicit([])
    with pytest.raises(IndexError):
        StepSchedule.explicit([0.5]).gamma_at(2)


def test_t_grid_matches_t_at():
    s = StepSchedule.c_over_rho_n(c=2.0, rho=0.5, theta=2.0 / 3.0)
    t = s.t_grid(1000)
    assert t[0] == 0.0
    for n in (1, 10, 1000):
        assert t[n] == pytest.approx(s.t_at(n), abs=1e-12)


def test_omega_closed_forms():
    # c/(rho n): omega = theta * rho / c
    s = StepSchedule.c_over_rho_n(c=2.0, rho=0.5, theta=2.0 / 3.0)
    assert omega_of(s) == pytest.approx(1.0 / 6.0, abs=1e-15)
    # polynomial with a < 1: steps decay sub-harmonically, omega = 0
    assert omega_of(StepSchedule.polynomial(0.1, 0.5, theta=0.5)) == 0.0
    # polynomial with a = 1: omega = theta / gamma1
    assert omega_of(StepSchedule.polynomial(0.25, 1.0, theta=0.5)) == pytest.approx(2.0)


def test_omega_explicit_tail_estimate():
    base = StepSchedule.c_over_rho_n(c=2.0, rho=0.5, theta=2.0 / 3.0)
    s = StepSchedule.explicit(base.gammas(20000), theta=2.0 / 3.0)
    assert omega_of(s) == pytest.approx(1.0 / 6.0, rel=1e-3)


def test_rho_theory_values():
    assert rho_theory(1.5, 1) == pytest.approx(0.5 * math.exp(-2.0), rel=1e-14)
    assert rho_theory(1.5, 2) == pytest.approx(4.19328284878e-5, rel=1e-9)
    with pytest.warns(RuntimeWarning):
        assert rho_theory(1.5, 12) == 0.0
    with pytest.raises(ValueError):
        rho_theory(2.5, 1)


def test_diagnostics_recurrence_matches_direct_sum():
    s = StepSchedule.c_over_rho_n(c=2.0, rho=0.5, theta=2.0 / 3.0)
    diag = decay_diagnostics(s, rho=0.5, n_max=500, alpha=1.5)
    for n in (1, 5, 50, 500):
        assert diag.v[n] == pytest.approx(diag.v_direct(n), abs=1e-12)


def test_diagnostics_requires_rho_above_omega():
    s = StepSchedule.c_over_rho_n(c=2.0, rho=0.5, theta=2.0 / 3.0)  # omega = 1/6
    with pytest.raises(ValueError):
        decay_diagnostics(s, rho=0.1, n_max=10)


def test_n_star_definition():
    s = StepSchedule.explicit([0.5] * 8)
    diag = decay_diagnostics(s, rho=1.0, n_max=8)
    # t_n = n/2; n*[n] = max{i : t_n - t_i > 1} = n - 3 once that is >= 0
    assert diag.n_star[0] == -1  # t_1 = 0.5
    assert diag.n_star[1] == -1  # t_2 = 1.0, gap never exceeds 1
    assert diag.n_star[2] == 0   # t_3 = 1.5 > 1 + t_0
    assert diag.n_star[3] == 1
    assert diag.n_star[7] == 5


def test_v_ratio_respects_bound():
    s = StepSchedule.c_over_rho_n(c=2.0, rho=0.5, theta=2.0 / 3.0)
    diag = decay_diagnostics(s, rho=0.5, n_max=5000, alpha=1.5)
    assert np.all(diag.v_over_gamma_theta <= diag.bound)
    assert np.all(np.isfinite(diag.windowed_sum_ratio[1:]))


def test_theta_validation():
    with pytest.raises(ValueError):
        StepSchedule.c_over_rho_n(c=1.0, rho=1.0, theta=1.5)
    with pytest.raises(ValueError):
        StepSchedule.c_over_rho_n(c=-1.0, rho=1.0)
