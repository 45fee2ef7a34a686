import numpy as np
import pytest

from stableem.drift import (
    DriftModel,
    builtin_ou,
    builtin_perturbed_ou,
    certify_assumptions,
    drift_by_name,
)
from stableem.rng import derive_stream


def test_builtin_ou_eval():
    m = builtin_ou(3)
    x = np.array([[1.0, -2.0, 0.5]])
    np.testing.assert_array_equal(m(x), -x)


def test_certify_builtin_ou_passes():
    rep = certify_assumptions(builtin_ou(2), 2000, 10.0, derive_stream(0, 0))
    assert rep.passed
    assert rep.witness is None
    assert set(rep.checks) >= {"lipschitz", "dissipativity", "linear_growth"}


def test_certify_perturbed_ou_passes():
    rep = certify_assumptions(builtin_perturbed_ou(2, 0.3), 2000, 10.0, derive_stream(1, 0))
    assert rep.passed


def test_certify_fails_with_witness_on_wrong_constants():
    lying = DriftModel(
        fn=lambda x: -2.0 * x,
        dim=1,
        lipschitz_l=1.0,  # actual Lipschitz constant is 2
        dissip_theta1=1.0,
        dissip_k=0.0,
        name="lying",
    )
    rep = certify_assumptions(lying, 2000, 10.0, derive_stream(2, 0))
    assert not rep.passed
    assert rep.witness is not None
    assert rep.witness["check"] == "lipschitz"
    assert rep.witness["lhs"] > rep.witness["rhs"]


def test_certify_detects_missing_dissipativity():
    expanding = DriftModel(
        fn=lambda x: 0.5 * x,
        dim=1,
        lipschitz_l=1.0,
        dissip_theta1=0.5,
        dissip_k=0.0,
        name="expanding",
    )
    rep = certify_assumptions(expanding, 2000, 10.0, derive_stream(3, 0))
    assert not rep.passed


def test_certify_requires_enough_pairs():
    with pytest.raises(ValueError):
        certify_assumptions(builtin_ou(1), 10, 10.0, derive_stream(0, 0))


def test_drift_by_name():
    assert drift_by_name("ou", 2).name == "ou"
    assert drift_by_name("perturbed-ou:0.2", 1).lipschitz_l == pytest.approx(1.2)
    with pytest.raises(ValueError):
        drift_by_name("bogus", 1)
    with pytest.raises(ValueError):
        builtin_perturbed_ou(1, 0.7)


def test_constant_validation():
    with pytest.raises(ValueError):
        DriftModel(fn=lambda x: -x, dim=1, lipschitz_l=0.0, dissip_theta1=1.0, dissip_k=0.0)
    with pytest.raises(ValueError):
        DriftModel(fn=lambda x: -x, dim=1, lipschitz_l=1.0, dissip_theta1=-1.0, dissip_k=0.0)
