"""Model layer: parameter validation, simulation, likelihood, MLE."""

import math

import numpy as np
import pytest
import scipy.stats

from dcsbm_monitor import (ChangeSpec, CommunityAssignment, DcsbmParams,
                           WeightedGraph, block_weight_matrix, degrees,
                           draw_labels, draw_theta, expected_weights,
                           log_likelihood, merge_communities, mle,
                           parse_param_file, reduction_checks, simulate_dynamic,
                           simulate_graph, split_community, write_param_file)
from dcsbm_monitor.rng import derive, key_from_seed

KEY = key_from_seed(2718)


def two_block(n=100):
    c = CommunityAssignment(np.repeat([1, 2], n // 2), k=2)
    P = np.array([[0.2, 0.1], [0.1, 0.2]])
    return c, P, np.array([0.5, 0.5])


# --------------------------------------------------------------- validation

def test_params_reject_bad_P():
    c, P, delta = two_block(10)
    with pytest.raises(ValueError):
        DcsbmParams(c, None, np.array([[0.2, 0.1], [0.3, 0.2]]), delta)
    with pytest.raises(ValueError):
        DcsbmParams(c, None, np.array([[0.2, 0.0], [0.0, 0.2]]), delta)
    with pytest.raises(ValueError):
        DcsbmParams(c, None, np.eye(3) + 0.1, delta)


def test_params_reject_bad_delta():
    c, P, _ = two_block(10)
    with pytest.raises(ValueError):
        DcsbmParams(c, None, P, np.array([0.5, 1.5]))
    with pytest.raises(ValueError):
        DcsbmParams(c, None, P, np.array([-0.1, 0.5]))


def test_params_enforce_identifiability():
    c, P, delta = two_block(10)
    with pytest.raises(ValueError):
        DcsbmParams(c, np.full(10, 1.01), P, delta)
    ok = DcsbmParams(c, np.ones(10), P, delta)
    assert ok.theta is not None


def test_params_reject_bad_pi():
    c, P, delta = two_block(10)
    with pytest.raises(ValueError):
        DcsbmParams(c, None, P, delta, pi=np.array([0.4, 0.4]))


def test_change_spec_needs_pre_change_step():
    c, P, delta = two_block(10)
    with pytest.raises(ValueError):
        ChangeSpec(1, c, P, delta)


# -------------------------------------------------------------- draw_labels

def test_labels_degenerate_pi():
    c = draw_labels([1.0], 5, KEY)
    np.testing.assert_array_equal(c.labels, [1, 1, 1, 1, 1])


def test_labels_binomial_concentration():
    c = draw_labels([0.5, 0.5], 10000, KEY)
    frac = (c.labels == 1).mean()
    assert abs(frac - 0.5) <= 3 * math.sqrt(0.25 / 10000)


def test_labels_skewed_pi_concentration():
    pi = [0.3, 0.7]
    c = draw_labels(pi, 10000, derive(KEY, 1))
    for r, p in enumerate(pi, 1):
        se = math.sqrt(p * (1 - p) / 10000)
        assert abs((c.labels == r).mean() - p) <= 3 * se


def test_labels_deterministic_in_key():
    a = draw_labels([0.3, 0.7], 50, KEY)
    b = draw_labels([0.3, 0.7], 50, KEY)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert not np.array_equal(a.labels, draw_labels([0.3, 0.7], 50, derive(KEY, 9)).labels)


# --------------------------------------------------------------- draw_theta

def test_theta_zero_spread():
    c, _, _ = two_block(10)
    np.testing.assert_array_equal(draw_theta(c, [0.0, 0.0], KEY), np.ones(10))


def test_theta_community_sums_forced():
    c = CommunityAssignment(np.repeat([1, 2, 3], [7, 11, 2]), k=3)
    theta = draw_theta(c, [0.2, 0.9, 0.5], KEY)
    for r, nr in ((1, 7), (2, 11), (3, 2)):
        s = theta[c.labels == r].sum()
        assert abs(s - nr) <= 1e-10 * nr


def test_theta_uniform_moment():
    delta = 0.5
    c = CommunityAssignment(np.ones(10000, np.int64), k=1)
    theta = draw_theta(c, [delta], KEY)
    sd = theta.std(ddof=1)
    # SE of the sample s.d. of U(1-d, 1+d): d / sqrt(15 n), plus a
    # rescaling term of the same order from the sum constraint
    se = delta / math.sqrt(15 * 10000)
    assert abs(sd - delta / math.sqrt(3)) <= 4 * se


def test_theta_empty_community_rejected():
    c = CommunityAssignment(np.array([1, 1, 3]), k=3)
    with pytest.raises(ValueError, match="empty community 2"):
        draw_theta(c, [0.5, 0.5, 0.5], KEY)


# ------------------------------------------------------------ simulate_graph

def test_simulate_graph_shape_and_symmetry():
    c, P, delta = two_block(60)
    params = DcsbmParams(c, draw_theta(c, delta, KEY), P, delta)
    g = simulate_graph(params, KEY)
    W = g.weights
    assert W.shape == (60, 60)
    assert (W == W.T).all()
    assert (np.diag(W) == 0).all()
    assert (W >= 0).all()
    assert np.issubdtype(W.dtype, np.integer)


def test_simulate_graph_near_zero_rates():
    c = CommunityAssignment(np.ones(20, np.int64), k=1)
    params = DcsbmParams(c, np.ones(20), np.array([[1e-12]]), np.array([0.0]))
    g = simulate_graph(params, KEY)
    assert g.weights.sum() == 0


def test_simulate_graph_erdos_renyi_mean():
    p = 0.35
    c = CommunityAssignment(np.ones(200, np.int64), k=1)
    params = DcsbmParams(c, np.ones(200), np.array([[p]]), np.array([0.0]))
    g = simulate_graph(params, KEY)
    pairs = 200 * 199 / 2
    mean = g.weights[np.triu_indices(200, 1)].mean()
    assert abs(mean - p) <= 4 * math.sqrt(p / pairs)


def test_simulate_graph_block_means_conditional_on_theta():
    """Observed block totals against their exact conditional means: the
    residual is pure Poisson noise, so z-scores stay small."""
    c, P, delta = two_block(100)
    lab0 = c.zero_based()
    reps = 200
    tot = np.zeros((2, 2))
    exp_tot = np.zeros((2, 2))
    for r in range(reps):
        kr = derive(KEY, 100 + r)
        theta = draw_theta(c, delta, kr)
        params = DcsbmParams(c, theta, P, delta)
        tot += block_weight_matrix(simulate_graph(params, kr), c)
        lam = expected_weights(theta, c.labels, P)
        for a in range(2):
            for b in range(2):
                exp_tot[a, b] += lam[np.ix_(lab0 == a, lab0 == b)].sum()
    # diagonal block totals count each edge twice: variance doubles
    var = exp_tot * (1 + np.eye(2))
    z = (tot - exp_tot) / np.sqrt(var)
    assert (np.abs(z) <= 4).all()


def test_block_mean_diagonal_bias_is_the_self_pair_hole():
    """m_rr/n_r^2 underestimates P_rr by about P(1+delta^2/3)/n_r
    because the diagonal of the weight matrix is structurally zero.
    This quantifies the bias so downstream checks can account for it."""
    c, P, delta = two_block(100)
    sizes = c.sizes().astype(float)
    den = np.outer(sizes, sizes)
    reps = 400
    vals = np.zeros((reps, 2, 2))
    for r in range(reps):
        kr = derive(KEY, 9000 + r)
        theta = draw_theta(c, delta, kr)
        g = simulate_graph(DcsbmParams(c, theta, P, delta), kr)
        vals[r] = block_weight_matrix(g, c) / den
    mean = vals.mean(0)
    se = vals.std(0, ddof=1) / math.sqrt(reps)
    predicted = P.copy()
    for r in (0, 1):
        predicted[r, r] -= P[r, r] * (1 + delta[r] ** 2 / 3) / sizes[r]
    assert (np.abs(mean - predicted) <= 4 * se).all()
    # and the bias really is there: diagonal means sit far below P
    assert mean[0, 0] < P[0, 0] - 3 * se[0, 0]
    assert mean[1, 1] < P[1, 1] - 3 * se[1, 1]
    # off-diagonal block means are unbiased
    assert abs(mean[0, 1] - P[0, 1]) <= 4 * se[0, 1]


def test_simulate_graph_requires_theta():
    c, P, delta = two_block(10)
    with pytest.raises(ValueError):
        simulate_graph(DcsbmParams(c, None, P, delta), KEY)


# ---------------------------------------------------------- simulate_dynamic

def test_noop_change_is_bitwise_noop():
    c, P, delta = two_block(30)
    params = DcsbmParams(c, None, P, delta)
    change = ChangeSpec(4, c, P, delta)
    a = simulate_dynamic(params, None, T=8, key=KEY)
    b = simulate_dynamic(params, change, T=8, key=KEY)
    for ga, gb in zip(a, b):
        np.testing.assert_array_equal(ga.weights, gb.weights)


def test_noop_change_two_sample_equivalence():
    """Mean total weight before/after a do-nothing change point: a
    two-sample t-test over replicates must not reject."""
    c, P, delta = two_block(30)
    params = DcsbmParams(c, None, P, delta)
    change = ChangeSpec(5, c, P, delta)
    pre, post = [], []
    for r in range(200):
        net = simulate_dynamic(params, change, T=8, key=derive(KEY, 7000 + r))
        w = [g.weights.sum() / 2 for g in net]
        pre.append(np.mean(w[:4]))
        post.append(np.mean(w[4:]))
    t, p = scipy.stats.ttest_ind(pre, post)
    assert p > 0.01


def test_change_point_boundary_counts():
    """T=50 with t_star=30: 29 pre-change graphs, 21 post-change."""
    c, P, delta = two_block(20)
    params = DcsbmParams(c, None, P, delta)
    change = ChangeSpec(30, c, P * 40.0, delta)
    base = simulate_dynamic(params, None, T=50, key=KEY)
    shifted = simulate_dynamic(params, change, T=50, key=KEY)
    same = [np.array_equal(a.weights, b.weights) for a, b in zip(base, shifted)]
    assert same[:29] == [True] * 29
    assert same[29:] == [False] * 21


def test_change_relabels_generation():
    c, P, delta = two_block(20)
    params = DcsbmParams(c, None, P, delta)
    merged, P_star, delta_star = merge_communities(c, P, delta, 1, 2)
    change = ChangeSpec(2, merged, P_star, delta_star)
    net = simulate_dynamic(params, change, T=3, key=KEY)
    assert len(net) == 3


def test_held_theta_is_constant_within_regime():
    c, P, delta = two_block(20)
    params = DcsbmParams(c, None, P, delta)
    change = ChangeSpec(3, c, P * 3, delta)
    net = simulate_dynamic(params, change, T=4, key=KEY, redraw_theta=False)
    # same theta, same P within a regime: expected weights equal across
    # steps, so degree vectors should correlate strongly between steps
    # of a regime; a bitwise check is impossible (fresh edge noise), so
    # check the regime boundary instead: steps 1,2 pre and 3,4 post
    d = np.array([degrees(g) for g in net], float)
    pre_corr = np.corrcoef(d[0], d[1])[0, 1]
    assert pre_corr > 0.2
    assert len(net) == 4


def test_dynamic_rejects_bad_T():
    c, P, delta = two_block(10)
    params = DcsbmParams(c, None, P, delta)
    with pytest.raises(ValueError):
        simulate_dynamic(params, None, T=0, key=KEY)


# ------------------------------------------------------------ log_likelihood

def test_loglik_hand_value():
    c = CommunityAssignment(np.array([1, 1]), k=1)
    params = DcsbmParams(c, np.ones(2), np.array([[1.0]]), np.array([0.0]))
    g = WeightedGraph(np.zeros((2, 2), np.int64))
    assert log_likelihood(g, params) == pytest.approx(-2.0, abs=1e-12)


def test_loglik_zero_theta_positive_degree():
    c = CommunityAssignment(np.array([1, 1]), k=1)
    theta = np.array([2.0, 0.0])
    params = DcsbmParams(c, theta, np.array([[1.0]]), np.array([0.0]))
    W = np.zeros((2, 2), np.int64)
    W[0, 1] = W[1, 0] = 3
    assert log_likelihood(WeightedGraph(W), params) == -math.inf


def test_loglik_includes_pi_term_only_when_present():
    c, P, delta = two_block(10)
    g = simulate_graph(DcsbmParams(c, np.ones(10), P, delta), KEY)
    base = log_likelihood(g, DcsbmParams(c, np.ones(10), P, delta))
    withpi = log_likelihood(g, DcsbmParams(c, np.ones(10), P, delta,
                                           pi=np.array([0.5, 0.5])))
    assert withpi == pytest.approx(base + 10 * math.log(0.5), rel=1e-12)


def test_loglik_matches_independent_evaluation():
    from oracles import conditional_loglik
    c, P, delta = two_block(12)
    theta = draw_theta(c, delta, KEY)
    g = simulate_graph(DcsbmParams(c, theta, P, delta), KEY)
    mine = log_likelihood(g, DcsbmParams(c, theta, P, delta))
    ref = conditional_loglik(g.weights.tolist(), c.labels.tolist(), 2,
                             theta.tolist(), P.tolist())
    assert mine == pytest.approx(ref, rel=1e-12)


# ----------------------------------------------------------------------- mle

def test_mle_equal_degrees_give_unit_theta():
    W = np.zeros((4, 4), np.int64)
    for u, v in [(0, 1), (2, 3)]:
        W[u, v] = W[v, u] = 5
    c = CommunityAssignment(np.array([1, 1, 2, 2]), k=2)
    fit = mle(WeightedGraph(W), c)
    np.testing.assert_allclose(fit.theta, 1.0)


def test_mle_hand_example():
    W = np.zeros((4, 4), np.int64)
    W[0, 2] = W[2, 0] = 10
    c = CommunityAssignment(np.array([1, 1, 2, 2]), k=2)
    fit = mle(WeightedGraph(W), c)
    assert fit.P[0, 1] == pytest.approx(2.5)
    assert fit.P[0, 0] == 0.0
    assert fit.P[1, 1] == 0.0
    np.testing.assert_allclose(fit.theta, [2.0, 0.0, 2.0, 0.0])
    np.testing.assert_allclose(fit.pi, [0.5, 0.5])
    assert not fit.degenerate


def test_mle_zero_degree_community_flagged():
    W = np.zeros((4, 4), np.int64)
    W[0, 1] = W[1, 0] = 2
    c = CommunityAssignment(np.array([1, 1, 2, 2]), k=2)
    fit = mle(WeightedGraph(W), c)
    assert fit.degenerate
    np.testing.assert_allclose(fit.theta[2:], 1.0)


def test_mle_diagonal_double_count():
    # single within-community edge of weight 3: m_11 = 6, P_11 = 6/4
    W = np.zeros((2, 2), np.int64)
    W[0, 1] = W[1, 0] = 3
    c = CommunityAssignment(np.array([1, 1]), k=1)
    fit = mle(WeightedGraph(W), c)
    assert fit.P[0, 0] == pytest.approx(6 / 4)


def test_mle_consistency_monte_carlo():
    c, P, delta = two_block(500)
    theta = draw_theta(c, delta, KEY)
    g = simulate_graph(DcsbmParams(c, theta, P, delta), KEY)
    fit = mle(g, c)
    sizes = c.sizes().astype(float)
    se = np.sqrt(2 * P / np.outer(sizes, sizes))
    assert (np.abs(fit.P - P) <= 4 * se).all()


def test_mle_maximality_under_perturbation():
    """Likelihood at the closed-form estimate beats 100 random feasible
    perturbations of (theta, P)."""
    gen = np.random.default_rng(0)
    c, P, delta = two_block(12)
    theta = draw_theta(c, delta, KEY)
    g = simulate_graph(DcsbmParams(c, theta, P, delta), derive(KEY, 3))
    fit = mle(g, c)
    Pfit = np.maximum(fit.P, 1e-12)
    best = log_likelihood(g, DcsbmParams(c, fit.theta, Pfit, delta))
    lab0 = c.zero_based()
    sizes = c.sizes().astype(float)
    for _ in range(100):
        th = np.maximum(fit.theta + gen.normal(0, 0.05, 12), 1e-9)
        sums = np.bincount(lab0, weights=th, minlength=2)
        th = th * sizes[lab0] / sums[lab0]
        Q = Pfit * np.exp(gen.normal(0, 0.05, (2, 2)))
        Q = (Q + Q.T) / 2
        ll = log_likelihood(g, DcsbmParams(c, th, Q, delta))
        assert ll <= best + 1e-9


# ----------------------------------------------------- reductions and algebra

def test_expected_weights_sbm_table():
    c, P, _ = two_block(4)
    E = expected_weights(np.ones(4), c.labels, P)
    assert E[0, 1] == 0.2 and E[0, 2] == 0.1 and E[2, 3] == 0.2
    assert (np.diag(E) == 0).all()


def test_expected_weights_constant_case():
    c = CommunityAssignment(np.array([1, 2, 1]), k=2)
    E = expected_weights(np.ones(3), c.labels, np.full((2, 2), 0.15))
    off = ~np.eye(3, dtype=bool)
    np.testing.assert_allclose(E[off], 0.15)


def test_expected_weights_chung_lu_scaling():
    theta = np.full(3, 2 / math.sqrt(6))
    E = expected_weights(theta, np.ones(3, np.int64), np.array([[1.0]]))
    off = ~np.eye(3, dtype=bool)
    np.testing.assert_allclose(E[off], 4 / 6, atol=1e-15)


def test_reduction_checks_report():
    c, P, delta = two_block(6)
    rep = reduction_checks(DcsbmParams(c, np.ones(6), P, delta))
    assert rep["sbm"]["holds"]
    assert "erdos_renyi" not in rep
    c1 = CommunityAssignment(np.ones(5, np.int64), k=1)
    rep1 = reduction_checks(DcsbmParams(c1, np.ones(5), np.array([[0.15]]),
                                        np.array([0.0])))
    assert rep1["erdos_renyi"]["holds"]
    assert rep1["chung_lu"]["holds"]
    assert rep1["chung_lu"]["max_deviation"] <= 1e-12


# ------------------------------------------------------------ merge and split

def test_merge_two_block_base():
    c, P, delta = two_block(10)
    merged, P_star, delta_star = merge_communities(c, P, delta, 1, 2)
    assert merged.k == 1
    np.testing.assert_allclose(P_star, [[0.15]])
    np.testing.assert_allclose(delta_star, [0.5])
    np.testing.assert_array_equal(merged.labels, 1)


def test_merge_three_communities_cross_rates():
    labels = np.repeat([1, 2, 3], 2)
    c = CommunityAssignment(labels, k=3)
    P = np.array([[0.5, 0.2, 0.3],
                  [0.2, 0.7, 0.1],
                  [0.3, 0.1, 0.9]])
    delta = np.array([0.1, 0.3, 0.5])
    merged, P_star, delta_star = merge_communities(c, P, delta, 2, 3)
    assert merged.k == 2
    # merged block: mean of P[{2,3},{2,3}] = (0.7+0.1+0.1+0.9)/4
    assert P_star[1, 1] == pytest.approx(0.45)
    assert P_star[0, 1] == pytest.approx(0.25)  # mean of 0.2 and 0.3
    assert P_star[0, 0] == 0.5
    assert delta_star[1] == pytest.approx(0.4)


def test_split_odd_community():
    labels = np.repeat([1, 2], [25, 25])
    c = CommunityAssignment(labels, k=2)
    out = split_community(c, 1)
    assert out.k == 3
    sizes = out.sizes()
    assert sizes[0] == 13 and sizes[2] == 12 and sizes[1] == 25
    # first ceil(n_r/2) members keep their label
    np.testing.assert_array_equal(out.labels[:13], 1)
    np.testing.assert_array_equal(out.labels[13:25], 3)


def test_split_rejects_tiny_community():
    c = CommunityAssignment(np.array([1, 2, 2]), k=2)
    with pytest.raises(ValueError):
        split_community(c, 1)


# ------------------------------------------------------------ parameter files

def test_param_file_round_trip(tmp_path):
    c, P, delta = two_block(10)
    params = DcsbmParams(c, None, P, delta)
    change = ChangeSpec(26, c, P + 0.1, delta)
    path = tmp_path / "params.txt"
    write_param_file(path, params, change)
    back, back_change = parse_param_file(path)
    np.testing.assert_array_equal(back.c.labels, c.labels)
    np.testing.assert_allclose(back.P, P)
    np.testing.assert_allclose(back.delta, delta)
    assert back_change.t_star == 26
    np.testing.assert_allclose(back_change.P_star, P + 0.1)


def test_param_file_with_pi(tmp_path):
    path = tmp_path / "pi.txt"
    path.write_text("n = 6\nk = 2\npi = 0.5 0.5\n"
                    "P = 0.2 0.1 0.1 0.2\ndelta = 0.5 0.5\n")
    params, change = parse_param_file(path)
    assert params.pi is not None
    assert change is None
    assert params.n == 6


def test_param_file_labels_and_pi_conflict(tmp_path):
    path = tmp_path / "both.txt"
    path.write_text("n = 4\nk = 2\npi = 0.5 0.5\nlabels = 1 1 2 2\n"
                    "P = 0.2 0.1 0.1 0.2\ndelta = 0.5 0.5\n")
    with pytest.raises(ValueError):
        parse_param_file(path)


def test_param_file_change_requires_t_star(tmp_path):
    path = tmp_path / "oops.txt"
    path.write_text("n = 4\nk = 2\nlabels = 1 1 2 2\n"
                    "P = 0.2 0.1 0.1 0.2\ndelta = 0.5 0.5\n"
                    "P_star = 0.3 0.1 0.1 0.2\n")
    with pytest.raises(ValueError, match="t_star"):
        parse_param_file(path)
