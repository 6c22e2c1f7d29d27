"""Smoke test for the linbandit_py extension.

Build and install first:
    pip install maturin
    pip install --no-build-isolation ./crates/python
"""

import json
import math
import random

import linbandit_py as lb


def check_estimators():
    xs = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
    rs = [1.0, 2.0, 3.0]
    theta = lb.ols_estimate(xs, rs)
    assert all(abs(a - b) < 1e-9 for a, b in zip(theta, [1.0, 2.0])), theta
    post = lb.bayes_posterior_mean(xs, rs, [0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]])
    assert all(abs(p) < abs(t) for p, t in zip(post, theta)), post
    assert abs(lb.min_eigenvalue([[2.0, 0.0], [0.0, 0.5]]) - 0.5) < 1e-12


def check_policy():
    theta = lb.two_bridge_theta(10_000, 0)
    assert theta[0] == 0.5 and theta[1] < 0.5
    pol = lb.Policy.linucb(2, 1000, ridge=1.0, seed=3)
    rng = random.Random(0)
    for _ in range(200):
        ctxs = [[rng.gauss(0, 1), rng.gauss(0, 1)] for _ in range(3)]
        action, prediction = pol.select(ctxs)
        assert action == prediction
        x = ctxs[action]
        pol.observe(x, x[0] * 0.5 + rng.gauss(0, 1))
    assert pol.observations == 200
    assert pol.name == "linucb"
    assert len(pol.covariance()) == 2

    oracle = lb.Policy.oracle(2)
    action, _ = oracle.select([None, [1.0, 0.0], [0.0, 1.0]], theta=[0.0, 1.0])
    assert action == 2

    bfg = lb.Policy.batch_freq_greedy(2, 5, [0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]])
    action, prediction = bfg.select([[1.0, 0.0], [0.0, 1.0]])
    assert action in (0, 1) and prediction in (0, 1)

    try:
        pol.select([[1.0, 0.0], [1.0]])
    except lb.LinbanditError:
        pass
    else:
        raise AssertionError("mismatched context dimensions should raise")


def check_helpers():
    w = lb.interval_width(0, 1000, 2, min_width=5.0)
    assert w >= 5.0
    assert lb.suggested_batch_size(0.3, 2, 5, 20_000, 0.01) >= 1
    batch = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
    weights, resid = lb.simulation_weights(batch, [0.3, 0.2])
    assert len(weights) == 3 and resid >= 0.0
    stat, p = lb.ks_two_sample([0.1, 0.2, 0.3], [0.1, 0.2, 0.3])
    assert stat == 0.0 and p > 0.99
    hs = [1e3, 1e4, 1e5]
    slope, _ = lb.scaling_exponent(hs, [math.sqrt(h) for h in hs])
    assert abs(slope - 0.5) < 1e-9


def check_runner():
    names = lb.list_experiments()
    assert "TwoBridgeLinUCB" in names and len(names) == 7
    text = lb.default_config("TwoBridgeLinUCB").replace(
        "horizons = 10000, 40000, 160000", "horizons = 1000, 2000, 4000"
    )
    csv, summary = lb.run(text, seed=5, replicates=3, workers=1)
    lines = csv.strip().splitlines()
    assert lines[0].startswith("experiment,policy,T,replicate,seed")
    assert len(lines) == 1 + 2 * 3 * 3, len(lines)
    again, _ = lb.run(text, seed=5, replicates=3, workers=1)
    assert csv == again
    s = json.loads(summary)
    assert s["experiment"] == "TwoBridgeLinUCB"


if __name__ == "__main__":
    check_estimators()
    check_policy()
    check_helpers()
    check_runner()
    print("smoke test ok")
