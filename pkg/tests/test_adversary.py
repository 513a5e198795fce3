import math

import numpy as np
import pytest

from lowbound.adversary import (
    AdversaryConfig,
    adversary_new,
    answer_query,
    finalize,
    lower_bound,
    replay_check,
    run_session,
)
from lowbound.exceptions import BudgetExhausted, IncompleteRun, InvalidConfig
from lowbound.kernel import make_kernel
from lowbound.methods import Method, default_step_constant
from lowbound.smoothing import check_locality, check_membership, smooth_eval
from lowbound.space import NormSpec, lp_norm

INF = math.inf


def test_derived_parameters_pinf():
    c = AdversaryConfig(NormSpec(INF, 20), 10)
    assert c.Delta == 1.0
    assert c.delta == pytest.approx(0.05, rel=1e-15)
    assert c.chi == pytest.approx(0.025, rel=1e-15)
    assert c.beta == pytest.approx(1.0 / (40.0 * c.M), rel=1e-14)


def test_derived_parameters_p2():
    c = AdversaryConfig(NormSpec(2, 8), 4)
    assert c.Delta == 0.5
    assert c.delta == 1 / 16 and c.chi == 1 / 32


def test_config_errors():
    with pytest.raises(InvalidConfig):
        AdversaryConfig(NormSpec(INF, 4), 5)
    with pytest.raises(InvalidConfig):
        AdversaryConfig(NormSpec(INF, 8), 4, kernel=make_kernel(NormSpec(INF, 9)))
    with pytest.raises(InvalidConfig):
        AdversaryConfig(NormSpec(1.5, 8), 4)
    with pytest.raises(InvalidConfig):
        AdversaryConfig(NormSpec(INF, 8), 4, kappa=1.0)


def test_tie_rules_and_signs():
    # n=2 has no l_inf kernel, so pad to n=3 and keep T=2
    st = adversary_new(AdversaryConfig(NormSpec(INF, 3), 2))
    answer_query(st, np.zeros(3))
    assert st.sigma == [0] and st.xi == [1.0]
    answer_query(st, np.array([-0.3, 0.5, 0.0]))
    assert st.sigma == [0, 1] and st.xi == [1.0, 1.0]
    with pytest.raises(BudgetExhausted):
        answer_query(st, np.zeros(3))


def test_sign_of_negative_coordinate():
    st = adversary_new(AdversaryConfig(NormSpec(4, 6), 3))
    answer_query(st, np.array([0.1, -0.7, 0.2, 0.7, 0, 0]))
    # |x_1| = |x_3| = 0.7: smallest index wins, sign -1
    assert st.sigma == [1] and st.xi == [-1.0]


def test_only_first_T_coordinates_are_used():
    st = adversary_new(AdversaryConfig(NormSpec(INF, 10), 2))
    answer_query(st, np.array([0.1, 0.2] + [5.0] * 8))
    assert st.sigma == [1]


def test_answer_floor_and_recorded_answers():
    c = AdversaryConfig(NormSpec(INF, 16), 8)
    st = adversary_new(c)
    rng = np.random.default_rng(0)
    for t in range(1, 9):
        x = rng.uniform(-1, 1, 16)
        a = answer_query(st, x)
        assert a.value >= -c.beta * ((t - 1) * c.delta + c.chi * c.rho) - 1e-15
        assert a.value == smooth_eval(st.instance(st.g), x).value
    assert len(set(st.sigma)) == 8


def test_finalize_examples():
    c = AdversaryConfig(NormSpec(INF, 5), 2)
    st = adversary_new(c)
    answer_query(st, np.zeros(5))
    answer_query(st, np.array([0.0, 0.3, 0, 0, 0]))
    hi = finalize(st)
    np.testing.assert_array_equal(hi.certificate, [-1, -1, 0, 0, 0])
    assert hi.f.g(hi.certificate) == -1.0
    assert hi.bound == pytest.approx(1 / (8 * c.M * 2), rel=1e-14)

    c2 = AdversaryConfig(NormSpec(2, 6), 4)
    st2 = adversary_new(c2)
    for x in np.eye(6)[:4] * 0.1:
        answer_query(st2, x)
    hi2 = finalize(st2)
    assert lp_norm(hi2.certificate, 2) == pytest.approx(1.0, rel=1e-15)
    assert np.count_nonzero(hi2.certificate) == 4
    assert hi2.f.g(hi2.certificate) <= -0.5


def test_incomplete_run():
    st = adversary_new(AdversaryConfig(NormSpec(INF, 5), 3))
    answer_query(st, np.zeros(5))
    with pytest.raises(IncompleteRun):
        finalize(st)


def test_lower_bound_examples():
    c = AdversaryConfig(NormSpec(INF, 50), 7)
    assert lower_bound(c) == pytest.approx(1 / (8 * c.M * 7), rel=1e-14)
    c2 = AdversaryConfig(NormSpec(2, 50), 7)
    assert lower_bound(c2) == pytest.approx(1 / (8 * 4.0 * 49), rel=1e-14)
    c3 = AdversaryConfig(NormSpec(4, 50), 7, kappa=1.5, R=2.0)
    c4 = AdversaryConfig(NormSpec(4, 50), 7, kappa=1.5, R=1.0)
    assert lower_bound(c3) / lower_bound(c4) == pytest.approx(2**1.5, rel=1e-14)


def _method(name, c):
    L_est = default_step_constant(c.kappa, c.L, c.R, c.T, c.space.p, c.space.n)
    return Method(name, c.T, L_est if name == "accelerated" else None)


@pytest.mark.parametrize("p", [2.0, 4.0, INF])
@pytest.mark.parametrize("name", ["cg", "accelerated", "subgradient"])
def test_session_properties(p, name):
    c = AdversaryConfig(NormSpec(p, 32), 8, kappa=1.5, R=2.0)
    m = _method(name, c)
    hi, tr = run_session(c, m)
    assert replay_check(hi, m)
    assert hi.certified_gap(tr.final_point) >= hi.bound
    st = hi.trace
    for t in range(len(st.queries)):
        x = st.queries[t]
        # the chosen index carries the largest unused magnitude
        unused = [i for i in range(c.T) if i not in st.sigma[:t]]
        assert st.xi[t] * x[st.sigma[t]] == max(abs(x[i]) for i in unused)
        if t >= 1:
            g_t = _prefix(hi.f.g, t)
            assert check_locality(g_t, hi.f.g, hi.f, st.queries[t - 1])
    assert check_membership(hi.f, 200, seed=0).passed


def _prefix(g, k):
    from lowbound.smoothing import MaxAffine

    return MaxAffine.sparse(g.n, g.index[:k], g.coef[:k], g.offsets[:k])


def test_replay_with_other_method_differs():
    c = AdversaryConfig(NormSpec(INF, 16), 6)
    hi, _ = run_session(c, Method("cg", 6))
    assert not replay_check(hi, Method("subgradient", 6))


def test_replay_T1_trivial():
    c = AdversaryConfig(NormSpec(INF, 4), 1)
    for name in ("cg", "subgradient"):
        hi, tr = run_session(c, Method(name, 1))
        assert replay_check(hi, Method(name, 1))
        np.testing.assert_array_equal(tr.queries[0], np.zeros(4))


def test_method_budget_mismatch():
    c = AdversaryConfig(NormSpec(INF, 8), 4)
    with pytest.raises(InvalidConfig):
        run_session(c, Method("cg", 5))


def test_sessions_are_deterministic():
    c = AdversaryConfig(NormSpec(4, 24), 6)
    a, _ = run_session(c, Method("subgradient", 6))
    b, _ = run_session(c, Method("subgradient", 6))
    assert a.trace.sigma == b.trace.sigma and a.trace.xi == b.trace.xi
    for x, y in zip(a.trace.queries, b.trace.queries):
        np.testing.assert_array_equal(x, y)
