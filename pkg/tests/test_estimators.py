import math

import numpy as np
import pytest
from helpers import random_correlation

import gausschain as gc
from gausschain.estimators import (
    burnin_bias_bound,
    burnin_delta,
    burnin_mse_bound,
    chain_average,
    kappa_prime,
    mse_bound,
    wasserstein_bound,
)
from gausschain.functionals import PythonFunctional
from gausschain.rng import RngStream


def test_constant_estimate():
    for n, b in ((1, 0), (10, 3), (5000, 4999)):
        est = gc.mcmc_estimate(gc.temperature_model(9), gc.Constant(3.0), n, b, seed=1)
        assert est.estimate == 3.0
        assert (est.n, est.b) == (n, b)


def test_default_burnin():
    assert gc.mcmc_estimate(gc.IdentityCorrelation(3), gc.Constant(1), 11).b == 5


def test_bad_burnin():
    with pytest.raises(ValueError):
        gc.mcmc_estimate(gc.IdentityCorrelation(3), gc.Constant(1), 10, 10)


def test_average_matches_explicit_trajectory():
    """Block-wise averaging equals averaging a stored trajectory."""
    model = gc.DenseCorrelation(random_correlation(6, 1))
    h = gc.Max()
    n, b = 9000, 4321
    states = []
    gc.run(model, stream=RngStream(5), n=n - 1,
           visitor=lambda k, s: states.append(h(s.x)))
    traj = [h(np.zeros(6))] + states  # h(X_0), ..., h(X_{n-1})
    want = np.mean(traj[b:n])
    got = chain_average(model, h, n, b, stream=RngStream(5))
    assert got == pytest.approx(want, rel=1e-12)


def test_python_functional_path_matches_kernel():
    model = gc.temperature_model(12)
    fast = chain_average(model, gc.Max(2.0), 5000, 1000, stream=RngStream(2))
    slow = chain_average(model, PythonFunctional(lambda x: 2.0 * np.max(x)), 5000, 1000,
                         stream=RngStream(2))
    assert fast == pytest.approx(slow, rel=1e-13)


def test_identity_norm_below_sqrt_n():
    d, n = 100, 25
    ests = [gc.mcmc_estimate(gc.IdentityCorrelation(d), gc.EuclideanNorm(), n, 0, seed=s).estimate
            for s in range(200)]
    assert np.mean(ests) <= math.sqrt(n)
    assert math.sqrt(d / 2) > 7.0


def test_temperature_estimate():
    est = gc.mcmc_estimate(gc.temperature_model(100), gc.Max(math.sqrt(8)), 10_000, seed=0)
    assert abs(est.estimate - 2.38) <= 0.5


def test_mse_constant_is_zero():
    rep = gc.estimate_mse(gc.temperature_model(9), gc.Constant(1.5), 100, 10, 10)
    assert rep.variance_term == 0 and rep.bias_term == 0 and rep.mse == 0


def test_mse_bias_vanishes_for_refreshed_coordinate():
    rep = gc.estimate_mse(gc.IdentityCorrelation(10), gc.Coordinate(0), 2000, 1000, 50, seed=3)
    # with V = I both chains agree once coordinate 0 has been refreshed
    assert abs(rep.bias_term) <= 1e-12


def test_mse_threads_do_not_change_report():
    model, h = gc.temperature_model(16), gc.Max()
    a = gc.estimate_mse(model, h, 800, None, 12, seed=4, threads=1)
    b = gc.estimate_mse(model, h, 800, None, 12, seed=4, threads=4)
    assert a == b


def test_mse_replication_zero_is_single_chain():
    model, h = gc.temperature_model(16), gc.Max()
    est = gc.mcmc_estimate(model, h, 500, seed=8).estimate
    rep = gc.estimate_mse(model, h, 500, None, 2, seed=8, threads=1)
    other = gc.mcmc_estimate(model, h, 500, stream=RngStream(8, 1)).estimate
    assert rep.mcmc_mean == pytest.approx((est + other) / 2, rel=1e-14)


def test_mse_below_lipschitz_bound():
    d, n = 12, 60
    v = random_correlation(d, 9)
    rep = gc.estimate_mse(gc.DenseCorrelation(v), gc.Max(), n, 0, 200, seed=2)
    assert rep.mse <= mse_bound(1.0, d, n)


def test_mse_needs_replications():
    with pytest.raises(ValueError):
        gc.estimate_mse(gc.IdentityCorrelation(3), gc.Max(), 10, 0, 1)


def test_mse_factorization_failure_propagates():
    v = np.array([[1.0, 0.9, 0.9], [0.9, 1.0, -0.9], [0.9, -0.9, 1.0]])
    with pytest.raises(gc.FactorizationError):
        gc.estimate_mse(gc.DenseCorrelation(v), gc.Max(), 10, 0, 5)


def test_bound_arithmetic():
    assert mse_bound(1.0, 10, 1800) == pytest.approx(1.0)
    assert mse_bound(0.0, 10, 100) == 0.0
    assert wasserstein_bound(100, 10_000) == pytest.approx(1.0)
    assert wasserstein_bound(10, 400) == pytest.approx(0.5)


def test_burnin_bias_bound_value():
    kp = kappa_prime(1.0, 0.07, 1.0, 100)
    assert kp == pytest.approx(2 * 100**2 / 0.07)
    want = 2 * (2 * 100**2 / 0.07) * math.exp(-3.5) / 20000
    assert burnin_bias_bound(kp, 0.07, 1.0, 20000, 100) == pytest.approx(want, rel=1e-14)


def test_burnin_bias_bound_decreasing_and_doubling():
    kp, lam, gamma, d = 10.0, 0.2, 0.5, 20
    vals = [burnin_bias_bound(kp, lam, gamma, n, d) for n in range(2, 4000, 2)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    n = 600
    ratio = burnin_bias_bound(kp, lam, gamma, 2 * n, d) / burnin_bias_bound(kp, lam, gamma, n, d)
    assert ratio == pytest.approx(math.exp(-lam * gamma * n / (4 * d)) / 2, rel=1e-12)


@pytest.mark.parametrize(
    "args", [(1.0, 0.0, 1.0, 10, 5), (1.0, -1, 1.0, 10, 5), (1.0, 0.1, 1.0, 11, 5), (1.0, 0.1, 1.0, 10, 2)]
)
def test_burnin_bias_bound_rejects(args):
    with pytest.raises(ValueError):
        burnin_bias_bound(*args)


def test_burnin_mse_bound():
    delta = burnin_delta(1.0, 0.5, 1.0, 10, 0.5)
    assert delta == math.ceil(40 * math.log(20) / 0.5)
    assert burnin_mse_bound(delta, 0.5, 2 * delta + 2) == pytest.approx(34 * delta * 0.25 / (2 * delta + 2))
    with pytest.raises(ValueError):
        burnin_mse_bound(delta, 0.5, 2 * delta)


def test_report_dict_keys():
    rep = gc.estimate_mse(gc.IdentityCorrelation(3), gc.Max(), 20, 5, 4)
    d = rep.as_dict()
    assert d["rmse"] == pytest.approx(math.sqrt(d["mse"]))
    assert {"varianceTerm", "biasTerm", "mseStderr"} <= set(d)
