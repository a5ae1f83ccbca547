import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from mallowslab import mallows
from mallowslab.dist import (
    DivergentMomentError,
    DomainError,
    EmpiricalDistribution,
    StepDistribution,
    parse_model,
    sample,
)
from mallowslab.mallows import (
    cell_partition,
    distance,
    distance_emp_cont,
    distance_step_step,
    dkw_bound,
    moment_gap_lower_bound,
    sup_cdf_gap,
)


def step_laws(max_atoms=6):
    @st.composite
    def build(draw):
        m = draw(st.integers(1, max_atoms))
        atoms = sorted(set(draw(st.lists(st.integers(-20, 20), min_size=m, max_size=m))))
        w = draw(st.lists(st.integers(1, 9), min_size=len(atoms), max_size=len(atoms)))
        w = np.array(w, dtype=float)
        return StepDistribution([a / 4 for a in atoms], w / w.sum())

    return build()


def brute_force(F, G, r, k=200_001):
    # midpoint rule on a fine probability grid, away from the jump points
    p = (np.arange(k) + 0.5) / k
    return float(np.mean(np.abs(F.quantile(p) - G.quantile(p)) ** r))


# --- step vs step -------------------------------------------------------------


def test_point_masses():
    res = distance_step_step(StepDistribution.point(0), StepDistribution.point(3), 2)
    assert res.value == 3.0
    assert res.method == "exact-step"
    assert res.error == 0.0


def test_bernoulli_vs_point_mass():
    res = distance_step_step(parse_model("bernoulli(p=0.5)"), StepDistribution.point(0), 2)
    assert res.value_pow == 0.5
    assert res.value == pytest.approx(0.70710678118654752, rel=1e-15)


@given(step_laws(), st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_self_distance_is_zero(F, r):
    assert distance_step_step(F, F, r).value == 0.0


@given(step_laws(), step_laws(), st.sampled_from([1.0, 2.0, 2.5]))
@settings(max_examples=40, deadline=None)
def test_step_distance_matches_brute_force_quantile_integral(F, G, r):
    exact = distance_step_step(F, G, r).value_pow
    assert exact == pytest.approx(brute_force(F, G, r), rel=1e-3, abs=1e-4)


def test_metric_axioms_random_triples(rng):
    def rand_law():
        m = int(rng.integers(1, 7))
        x = np.sort(rng.choice(np.arange(-30, 31), m, replace=False)) / 5.0
        w = rng.integers(1, 10, m).astype(float)
        return StepDistribution(x, w / w.sum())

    for _ in range(1000):
        F, G, H = rand_law(), rand_law(), rand_law()
        r = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        fg = distance_step_step(F, G, r).value
        assert fg == distance_step_step(G, F, r).value
        gh = distance_step_step(G, H, r).value
        fh = distance_step_step(F, H, r).value
        assert fh <= fg + gh + 1e-10
        same = np.array_equal(F.atoms, G.atoms) and np.allclose(F.cum, G.cum, atol=0)
        assert (fg == 0.0) == same


def test_coupling_oracle_monte_carlo(rng):
    for _ in range(5):
        m = int(rng.integers(2, 6))
        F = StepDistribution(np.sort(rng.choice(20, m, replace=False)) / 3.0, rng.dirichlet(np.ones(m)))
        G = StepDistribution(np.sort(rng.choice(20, m, replace=False)) / 3.0, rng.dirichlet(np.ones(m)))
        r = 2.0
        u = rng.random(10**6)
        z = np.abs(F.quantile(u) - G.quantile(u)) ** r
        est, se = z.mean(), z.std() / 1000.0
        exact = distance_step_step(F, G, r).value_pow
        assert abs(est - exact) <= 4 * se + 1e-12


@given(step_laws(), step_laws(), st.floats(-5, 5).filter(lambda a: abs(a) > 1e-3), st.floats(-10, 10))
def test_affine_scaling(F, G, a, b):
    r = 2.0
    base = distance_step_step(F, G, r).value
    scaled = distance_step_step(F.affine(a, b), G.affine(a, b), r).value
    assert scaled == pytest.approx(abs(a) * base, rel=1e-12, abs=1e-12)


def test_cell_partition_boundaries():
    F = StepDistribution([0, 1], [0.3, 0.7])
    G = StepDistribution([0, 2, 5], [0.5, 0.25, 0.25])
    cp = cell_partition(F, G)
    assert cp.boundaries.tolist() == [0.0, 0.3, 0.5, 0.75, 1.0]
    assert cp.lhs.tolist() == [0.0, 1.0, 1.0, 1.0]
    assert cp.rhs.tolist() == [0.0, 0.0, 2.0, 5.0]


def test_event_a_closed_form(rng):
    # on the event |qhat_j - q_j| <= min p_j / 3, d_2^2 = sum |qhat_j - q_j| (x_{j+1} - x_j)^2
    F = StepDistribution([0.0, 1.0, 3.0, 3.5], [0.2, 0.3, 0.4, 0.1])
    eps = F.masses.min() / 3
    hits = 0
    for _ in range(300):
        s = sample(F, 500, rng)
        qhat = np.array([np.mean(s.values <= x) for x in F.atoms])
        if np.all(np.abs(qhat - F.cum) <= eps):
            hits += 1
            lhs = distance_step_step(s, F, 2).value_pow
            rhs = float(np.sum(np.abs(qhat[:-1] - F.cum[:-1]) * np.diff(F.atoms) ** 2))
            assert lhs == pytest.approx(rhs, abs=1e-12)
    assert hits > 100


# --- empirical vs continuous --------------------------------------------------------


def test_single_point_vs_uniform():
    res = distance_emp_cont(EmpiricalDistribution([0.5]), parse_model("uniform(a=0,b=1)"), 2)
    assert res.value_pow == pytest.approx(1 / 12, rel=1e-14)


def test_two_points_vs_uniform_r1():
    F = parse_model("uniform(a=0,b=1)")
    s = EmpiricalDistribution([0.0, 1.0])
    assert distance_emp_cont(s, F, 1).value == pytest.approx(0.25, rel=1e-14)
    assert distance_emp_cont(s, F, 1, method="quadrature").value == pytest.approx(0.25, rel=1e-9)


def test_step_model_path_matches_step_step(rng):
    F = StepDistribution([0.0, 1.0, 2.0], [0.2, 0.5, 0.3])
    s = sample(F, 40, rng)
    G = s.to_step()
    a = distance(s, F, 2).value
    b = distance_step_step(G, F, 2).value
    assert a == pytest.approx(b, abs=1e-9)


def _oracle(s, F, r):
    # independent route: scipy quad over each cell of the probability axis
    n = s.n
    total = 0.0
    for i, x in enumerate(s.values):
        lo, hi = i / n, (i + 1) / n
        f = lambda p: abs(x - float(F.quantile(p))) ** r
        root = min(max(float(F.cdf(x)), lo), hi)
        for a, b in ((lo, root), (root, hi)):
            if b > a:
                total += integrate.quad(f, a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
    return total


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("r", [1.0, 1.5, 2.0, 3.0])
def test_emp_cont_matches_independent_oracle(any_model, r, rng):
    if not any_model.moment_finite(r):
        pytest.skip("moment is infinite")
    s = sample(any_model, 12, rng)
    got = distance_emp_cont(s, any_model, r)
    assert got.value_pow == pytest.approx(_oracle(s, any_model, r), rel=1e-7)
    assert got.error >= 0.0
    assert got.value == pytest.approx(got.value_pow ** (1 / r), rel=1e-12)


def test_closed_form_and_quadrature_agree(any_model, rng):
    s = sample(any_model, 30, rng)
    a = distance_emp_cont(s, any_model, 2)
    b = distance_emp_cont(s, any_model, 2, method="quadrature")
    assert a.method == "closed-form"
    assert b.method == "quadrature"
    assert a.value_pow == pytest.approx(b.value_pow, rel=1e-9)


def test_emp_cont_refuses_divergent_moment():
    with pytest.raises(DivergentMomentError):
        distance_emp_cont(EmpiricalDistribution([1.0, 2.0]), parse_model("pareto(alpha=1.5,xm=1)"), 2)


def test_order_below_one_rejected():
    with pytest.raises(DomainError):
        distance_step_step(StepDistribution.point(0), StepDistribution.point(1), 0.5)


def test_distance_dispatch_is_symmetric(rng):
    F = parse_model("normal(mu=0,sigma=1)")
    s = sample(F, 10, rng)
    assert distance(s, F, 2).value == distance(F, s, 2).value


# --- moment bound, DKW, Kolmogorov distance -------------------------------------------


def test_moment_gap_point_masses_tight():
    assert moment_gap_lower_bound(StepDistribution.point(0), StepDistribution.point(3), 2) == 3.0


def test_moment_gap_self_zero(any_model):
    assert moment_gap_lower_bound(any_model, any_model, 1) == 0.0


def test_normal_scale_pair_tight():
    F, G = parse_model("normal(mu=0,sigma=1)"), parse_model("normal(mu=0,sigma=2)")
    assert moment_gap_lower_bound(F, G, 2) == pytest.approx(1.0, rel=1e-12)
    assert distance(F, G, 2).value == pytest.approx(1.0, rel=1e-9)


@given(step_laws(), step_laws(), st.sampled_from([1.0, 2.0, 3.0]))
def test_moment_gap_below_distance(F, G, r):
    assert moment_gap_lower_bound(F, G, r) <= distance_step_step(F, G, r).value + 1e-12


def test_moment_gap_below_distance_continuous(any_model, rng):
    s = sample(any_model, 25, rng)
    assert moment_gap_lower_bound(s, any_model, 2) <= distance(s, any_model, 2).value + 1e-12


def test_dkw_values():
    assert dkw_bound(100, 0.1) == pytest.approx(2 * math.exp(-2), rel=1e-15)
    assert dkw_bound(1000, 0.05) == pytest.approx(2 * math.exp(-5), rel=1e-15)
    assert dkw_bound(1, 1e-6) == 1.0
    assert dkw_bound(10, 100.0) == 0.0


@pytest.mark.parametrize("n, eps", [(0, 0.1), (10, 0.0), (10, -1.0)])
def test_dkw_rejects_bad_input(n, eps):
    with pytest.raises(DomainError):
        dkw_bound(n, eps)


def test_sup_cdf_gap_matches_scipy_kstest(rng):
    from scipy import stats

    F = parse_model("normal(mu=0,sigma=1)")
    s = sample(F, 300, rng)
    assert sup_cdf_gap(s, F) == pytest.approx(stats.kstest(s.values, "norm").statistic, rel=1e-12)


def test_sup_cdf_gap_step_model():
    F = parse_model("bernoulli(p=0.5)")
    s = EmpiricalDistribution([0, 0, 0, 1])
    assert sup_cdf_gap(s, F) == 0.25
