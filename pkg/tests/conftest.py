import numpy as np
import pytest

from isopca.mixture import (
    GaussianMixture,
    isotropic_params,
    parallel_pancakes,
    random_separable_mixture,
    symmetric_mixture,
)

_acceptance_lines = []


def random_mixture(rng, k_max=4, n_max=10, offset=1.5):
    """Unconstrained random mixture with its mean pushed away from the origin."""
    k = int(rng.integers(1, k_max + 1))
    n = int(rng.integers(max(2, k), n_max + 1))
    w = 1.0 + rng.random(k)
    shift = rng.standard_normal(n)
    shift *= offset / np.linalg.norm(shift)
    means = shift + 0.7 * rng.standard_normal((k, n))
    covs = []
    for _ in range(k):
        g = rng.standard_normal((n, n))
        s = g @ g.T / n + 0.2 * np.eye(n)
        covs.append(s / np.trace(s) * n * rng.uniform(0.3, 1.5))
    return GaussianMixture(w / w.sum(), means, np.array(covs))


def random_isotropic_mixture(seed, k_choices=(2, 3, 4, 5), n_max=10, log_phi=(-4.0, -0.5)):
    """Isotropic mixture drawn from a mix of generators: random separable
    mixtures, symmetric orbits and imbalanced pancakes."""
    rng = np.random.default_rng(seed)
    kind = seed % 3
    if kind == 2:
        n = int(rng.integers(2, n_max + 1))
        w1 = float(rng.uniform(0.05, 0.95))
        mix = parallel_pancakes(n, 1.0, float(10 ** rng.uniform(-3, 0)), w1)
    elif kind == 1:
        k = int(rng.choice([c for c in k_choices if c <= n_max]))
        n = int(rng.integers(k, n_max + 1))
        mix = symmetric_mixture(k, n, float(10 ** rng.uniform(-3, -0.5)), seed=seed)
    else:
        k = int(rng.choice(k_choices))
        n = int(rng.integers(max(k - 1, 2), n_max + 1))
        mix = random_separable_mixture(k, n, float(10 ** rng.uniform(*log_phi)), seed=seed)
    return isotropic_params(mix)[1]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    detail = dict(report.user_properties).get("detail", "")
    status = "PASS" if report.passed else "FAIL"
    _acceptance_lines.append(f"{name}: {status} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
