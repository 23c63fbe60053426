import json
import math

import numpy as np
import pytest

import ptloss


def kl(p, q):
    return sum(a * math.log(a / b) for a, b in zip(p, q) if a > 0)


def test_zero_coefficients_match_kl():
    t, s = [0.7, 0.2, 0.1], [0.3, 0.3, 0.4]
    cfg = ptloss.PerturbationConfig.zero(3, 2)
    assert cfg.is_zero()
    assert ptloss.pt_loss(t, s, cfg) == pytest.approx(kl(t, s), abs=1e-12)
    assert ptloss.kl_loss(t, s) == pytest.approx(kl(t, s), abs=1e-12)


def test_gradient_matches_finite_differences():
    t = [0.6, 0.3, 0.1]
    z = [0.2, -1.0, 0.5]
    cfg = ptloss.PerturbationConfig([[1.0, -0.5], [2.0, 0.3], [-1.0, 0.0]])
    value, grad = ptloss.pt_loss_grad(t, z, cfg)
    h = 1e-6
    for i in range(3):
        up, down = list(z), list(z)
        up[i] += h
        down[i] -= h
        fd = (ptloss.pt_loss(t, ptloss.softmax(up), cfg) - ptloss.pt_loss(t, ptloss.softmax(down), cfg)) / (2 * h)
        assert grad[i] == pytest.approx(fd, abs=1e-6)
    assert value == pytest.approx(ptloss.pt_loss(t, ptloss.softmax(z), cfg))


def test_series_bound():
    for x in (0.05, 0.5, 0.99):
        for order in (1, 10, 50):
            assert abs(math.log(x) - ptloss.maclaurin_log(x, order)) <= ptloss.truncation_bound(x, order)


def test_equivalence_and_proxy():
    report = ptloss.verify_equivalence("focal", 2.0, trials=5, seed=1)
    assert report["max_abs_deviation"] <= 1e-6
    sol = ptloss.solve_proxy([0.8, 0.2], ptloss.PerturbationConfig([[1.0], [1.0]]))
    assert sol["converged"]
    q0 = sol["proxy"][0]
    assert abs((q0 - 0.8) - q0 * (1 - q0) * 0.6) <= 1e-8
    proxies, fraction = ptloss.solve_proxy_batch([[0.5, 0.5], [0.9, 0.1]], ptloss.PerturbationConfig.zero(2, 1))
    assert fraction == 1.0
    assert proxies[1][0] == pytest.approx(0.9, abs=1e-8)


def test_search_on_generated_data():
    data = ptloss.generate_gaussian(classes=3, dim=4, n=600, split=[0.5, 0.25, 0.25], seed=3)
    inputs, labels = data["validation"]
    assert isinstance(inputs, np.ndarray) and inputs.shape[1] == 4
    posterior = data["test_posterior"]
    assert len(posterior) == len(data["test"][1])
    teacher = [[0.6 if c == y else 0.2 for c in range(3)] for y in labels]
    onehot = [[1.0 if c == y else 0.0 for c in range(3)] for y in labels]
    result = ptloss.search_coefficients(teacher, onehot, max_order=2, trials=5, seed=1)
    assert result["score"]["total"] <= result["baseline_score"]["total"]
    assert isinstance(result["best"], ptloss.PerturbationConfig)


def test_errors_map_to_exceptions():
    with pytest.raises(ptloss.InvalidInput):
        ptloss.kl_loss([0.5, 0.6], [0.5, 0.5])
    with pytest.raises(ptloss.Error):
        ptloss.verify_equivalence("ls", 0.1, order=3)
    assert issubclass(ptloss.ConfigError, ValueError)


def test_cli_entry_point(tmp_path):
    out = tmp_path / "eq.json"
    code = ptloss.run_cli(["verify-equivalence", "--method", "ls", "--param", "0.1", "--trials", "3",
                           "--seed", "1", "--out", str(out)])
    assert code == 0
    assert json.loads(out.read_text())["max_abs_deviation"] <= 1e-6
    assert ptloss.run_cli(["no-such-command"]) == 2
