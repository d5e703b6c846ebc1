import math

import pytest

import barrier_solver as bs


def example():
    return bs.ModelParams(mu=0.05, sigma=0.45, delta1=-0.56, delta2=0.1, lambda1=0.57, lambda2=0.0)


def test_example_barrier():
    assert abs(bs.example_barrier_lambda2_zero(example()) - 1.4248) < 5e-4


def test_solve_matches_closed_form():
    s = bs.solve(example())
    assert abs(s.barrier - bs.example_barrier_lambda2_zero(example())) < 1e-8
    assert s.hjb_passed
    assert s.v_low(s.barrier, 1) == pytest.approx(-1.0, abs=1e-10)


def test_v0_not_optimal():
    r = bs.v0(example())
    assert r.d2_low_at_0 == pytest.approx(-3.3077, abs=1e-3)
    assert not r.optimal


def test_function_json_round_trip():
    f = bs.solve(example()).v_low
    g = bs.PiecewiseExpPoly.from_json(f.to_json())
    for x in (0.0, 0.7, 1.5, 4.0):
        assert g(x) == f(x)


def test_validation_error():
    p = example()
    p.delta1 = -0.6
    assert "delta1" in bs.validate(p)
    with pytest.raises(bs.SolverError) as e:
        bs.solve(p)
    assert e.value.code == "IllPosed"


def test_discount_and_simulation():
    p = bs.ModelParams(0.05, 0.45, 0.06, 0.06, 0.4, 0.3, bs.ValidationMode.Relaxed)
    assert bs.expected_discount(p, bs.RateState.Low, 2.0) == pytest.approx(math.exp(-0.12), abs=1e-12)
    c = bs.SimConfig()
    c.n_paths = 1000
    c.seed = 5
    a = bs.simulate_value(p, bs.BarrierStrategy(0.0), c)
    b = bs.simulate_value(p, bs.BarrierStrategy(0.0), c)
    assert a.mean == b.mean
    assert a.mean > 0 and a.stderr > 0
