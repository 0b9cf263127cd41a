import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from consensus_lab.conditions import (
    check_gain_constraints,
    check_initial_condition,
    predict_consensus_state,
    symmetric_profile,
)
from consensus_lab.dynamics import ProtocolSpec, SystemState
from consensus_lab.graph import WeightedGraph
from consensus_lab.scenarios import evenly_spaced_opinions
from consensus_lab.weights import Constant, CuckerSmale, LinearDecay, SmoothedConfidence, StepConfidence
from oracles import kappa_bruteforce, quad, staircase_literal

SD6 = WeightedGraph.state_dependent(6)


def test_gain_example_rendezvous():
    spec = ProtocolSpec("DT2-statedep", k1=1, k2=1.5, k3=0.14)
    rep = check_gain_constraints(spec, StepConfidence(1.0), SD6)
    assert rep.rhs == 0.15 and rep.holds
    assert [p.criterion for p in rep.parts] == ["k2", "k3"]
    assert rep.parts[0].rhs == 2.0


def test_gain_boundaries():
    spec = ProtocolSpec("DT2-fixed", k1=3, k2=2.0, k3=0.01)
    assert not check_gain_constraints(spec, Constant(1), WeightedGraph.complete(4)).holds
    # fixed links: d_max of a path is 2
    spec = ProtocolSpec("DT1-fixed", h=1 / (2 * 2 * 3.0))
    rep = check_gain_constraints(spec, Constant(3.0), WeightedGraph.path(5))
    assert rep.holds and rep.rhs == pytest.approx(2 * spec.h)
    spec = ProtocolSpec("DT1-statedep", h=0.2)
    rep = check_gain_constraints(spec, StepConfidence(1), WeightedGraph.state_dependent(6))
    assert not rep.holds and rep.rhs == pytest.approx(0.2)  # equality fails
    with pytest.raises(ValueError):
        check_gain_constraints(ProtocolSpec("CT1-fixed"), Constant(1), SD6)


def test_thm4_examples():
    g = WeightedGraph.state_dependent(2)
    rep = check_initial_condition("THM4", g, StepConfidence(1), SystemState([0.0, 0.5]))
    assert (rep.lhs, rep.rhs, rep.holds) == (pytest.approx(0.25), pytest.approx(1.0), True)
    rep = check_initial_condition("THM4", g, StepConfidence(1), SystemState([0.0, 1.2]))
    assert (rep.lhs, rep.rhs, rep.holds) == (pytest.approx(1.0), pytest.approx(1.0), False)


def w0_oracle(x, weight, r):
    alpha = lambda s: float(weight(s))
    total = 0.0
    for i, j in itertools.combinations(range(len(x)), 2):
        z = float((x[i] - x[j]) ** 2)
        total += staircase_literal(alpha, r, z) if r > 0 else quad(alpha, 0, z)
    return total


@pytest.mark.parametrize(
    "n, d, weight, r, holds",
    [
        (15, 0.35, StepConfidence(1.0), 0.1, False),
        (15, 0.08, StepConfidence(1.0), 0.1, False),  # literal arithmetic; see the acceptance suite
        (15, 0.08, StepConfidence(1.0), 0.0, True),
        (20, 0.07, LinearDecay(25, 10), 1.8, True),
        (20, 0.07, LinearDecay(25, 10), 0.0, False),
        (20, 0.07, LinearDecay(25, 10, cutoff=1.5), 1.8, True),
        (20, 0.07, LinearDecay(25, 10, cutoff=1.5), 0.0, False),
    ],
)
def test_thm11_against_oracle(n, d, weight, r, holds):
    x = d * np.arange(n)
    rep = check_initial_condition("THM11", WeightedGraph.state_dependent(n), weight, SystemState(x), r)
    lhs = w0_oracle(x, weight, r)
    R2 = weight.support
    wR = staircase_literal(lambda s: float(weight(s)), r, R2) if r > 0 else quad(lambda s: float(weight(s)), 0, R2)
    assert rep.lhs == pytest.approx(lhs, abs=1e-9)
    assert rep.rhs == pytest.approx((2 * n - 3) * wR, abs=1e-9)
    assert rep.holds is holds is (lhs < (2 * n - 3) * wR)


def test_thm11_hand_value_d008():
    # with R = 1 and r = 0.1 the staircase is min(z, 0.9) on the relevant range
    gaps = [(15 - k, (0.08 * k) ** 2) for k in range(1, 15)]
    hand = sum(c * min(z, 0.9) for c, z in gaps)
    rep = check_initial_condition("THM11", WeightedGraph.state_dependent(15), StepConfidence(1.0), SystemState(0.08 * np.arange(15)), 0.1)
    assert hand == pytest.approx(26.0976, abs=1e-12)
    assert rep.lhs == pytest.approx(hand, abs=1e-12) and rep.rhs == pytest.approx(24.3)


@pytest.mark.parametrize("d, holds", [(0.05, True), (0.2, False)])
def test_thm10_opinion_ct(d, holds):
    w = SmoothedConfidence(1, 1, 0.1)
    x = d * np.arange(20)
    rep = check_initial_condition("THM10", WeightedGraph.state_dependent(20), w, SystemState(x))
    alpha = lambda s: float(w(s))
    lhs = sum(quad(alpha, 0, min(z, 0.81)) + quad(alpha, min(z, 0.81), min(z, 1.0)) for z in ((x[:, None] - x[None]) ** 2)[np.triu_indices(20, 1)])
    rhs = 37 * (quad(alpha, 0, 0.81) + quad(alpha, 0.81, 1.0))
    assert rep.lhs == pytest.approx(lhs, abs=1e-8) and rep.rhs == pytest.approx(rhs, abs=1e-8)
    assert rep.holds is holds


def test_cor1_against_oracle():
    rng = np.random.default_rng(0)
    g = WeightedGraph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)])
    x, v = rng.uniform(0, 1, (5, 2)), rng.uniform(-1, 1, (5, 2))
    w = CuckerSmale(3.0, 3.0)
    rep = check_initial_condition("COR1", g, w, SystemState(x, v))
    q = v - v.mean(0)
    lhs = float(np.sum(q * q)) + sum(
        quad(lambda s: 3.0 / (1 + s) ** 3, 0, float(np.sum((x[i] - x[j]) ** 2))) for i, j in g.edges()
    )
    kappa = kappa_bruteforce(g.links.astype(int).tolist())
    assert kappa == 2
    assert rep.lhs == pytest.approx(lhs, abs=1e-9)
    assert rep.rhs == pytest.approx(kappa * 1.5)


def test_cor1_vacuous_for_divergent_integral():
    rep = check_initial_condition("COR1", WeightedGraph.complete(3), CuckerSmale(1, 1), SystemState([0.0, 1, 5], [1.0, 0, 0]))
    assert rep.holds and math.isinf(rep.rhs) and "vacuously holds" in rep.notes


def test_thm5_and_thm9_formulas():
    rng = np.random.default_rng(4)
    x, v = rng.uniform(0, 0.4, (4, 2)), rng.uniform(-0.1, 0.1, (4, 2))
    g = WeightedGraph.state_dependent(4)
    w = SmoothedConfidence()
    rep = check_initial_condition("THM5", g, w, SystemState(x, v))
    sq = [float(np.sum((x[i] - x[j]) ** 2)) for i, j in itertools.combinations(range(4), 2)]
    alpha = lambda s: float(w(s))
    ints = sum(quad(alpha, 0, min(z, 0.81)) + quad(alpha, min(z, 0.81), min(z, 1.0)) for z in sq)
    assert rep.lhs == pytest.approx(np.sum(v * v) + ints, abs=1e-9)

    spec = ProtocolSpec("DT2-statedep", k1=1.0, k2=1.5, k3=0.14)
    ws = StepConfidence(1.0)
    rep = check_initial_condition("THM9", g, ws, SystemState(x, v), 0.1, spec)
    c = (1 + 1 - 1.5) * 0.14
    W0 = sum(staircase_literal(lambda s: float(ws(s)), 0.1, z) for z in sq)
    lhs = 1.5**2 * np.sum(x * x) + 2 * 1.5 * np.sum(x * v) + 2 * np.sum(v * v) + c * W0
    assert rep.lhs == pytest.approx(lhs, abs=1e-12)
    assert rep.rhs == pytest.approx(c * 3 * 0.9)
    with pytest.raises(ValueError):
        check_initial_condition("THM9", g, ws, SystemState(x, v), 0.1, None)


def test_rejections():
    g = WeightedGraph.state_dependent(4)
    with pytest.raises(ValueError):
        check_initial_condition("THM10", g, SmoothedConfidence(), SystemState([0.0, 0.1, 0.5, 0.55]))
    with pytest.raises(ValueError):
        check_initial_condition("THM11", g, StepConfidence(1), SystemState(0.1 * np.arange(4)), 1.0)
    with pytest.raises(ValueError):
        check_initial_condition("THM4", g, CuckerSmale(), SystemState(np.arange(4.0)))
    with pytest.raises(ValueError):
        check_initial_condition("THM99", g, StepConfidence(1), SystemState(np.arange(4.0)))
    with pytest.raises(ValueError):
        check_initial_condition("COR1", g, CuckerSmale(), SystemState(np.arange(4.0)))


@pytest.mark.parametrize("x, connected", [([0.0, 0.9], True), ([0.0, 1.0], False), ([0.0, 0.6, 1.2], True), ([0.0, 1.5, 3.0], False)])
def test_small_n_reports_connectivity(x, connected):
    n = len(x)
    rep = check_initial_condition("THM11", WeightedGraph.state_dependent(n), StepConfidence(1), SystemState(x), 0.1)
    assert rep.holds is connected


def test_symmetric_profile():
    assert symmetric_profile(np.array([0.0, 0.2, 1.0, 1.8, 2.0]))
    assert symmetric_profile(evenly_spaced_opinions(7, 0.3).x)
    assert not symmetric_profile(np.array([0.0, 0.1, 1.0]))
    assert not symmetric_profile(np.zeros((3, 2)))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1), st.floats(0.05, 0.99), st.sampled_from(["THM4", "THM8"]))
def test_scale_coherence(n, seed, lam, crit):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1.2, (n, 2))
    g = WeightedGraph.state_dependent(n)
    w = SmoothedConfidence() if crit == "THM4" else StepConfidence(1.0)
    before = check_initial_condition(crit, g, w, SystemState(x), 0.1)
    after = check_initial_condition(crit, g, w, SystemState(lam * x), 0.1)
    assert after.lhs <= before.lhs + 1e-12
    assert not (before.holds and not after.holds)


def test_predict_examples():
    st2 = SystemState([0.0, 1.0], [0.0, 0.0])
    assert predict_consensus_state(ProtocolSpec("CT2-static", k=1.0), st2) == pytest.approx([0.5])
    assert predict_consensus_state(ProtocolSpec("CT1-fixed"), SystemState([0.0, 1.0, 5.0])) == pytest.approx([2.0])
    dt2 = ProtocolSpec("DT2-fixed", k1=1, k2=1.5, k3=0.14)
    assert predict_consensus_state(dt2, SystemState([0.0, 1.0], [0.3, -0.3])) == pytest.approx([0.5])
    # nonzero momentum shifts the DT2 agreement point by k1*sum(v)/(n*k2)
    assert predict_consensus_state(dt2, SystemState([0.0, 1.0], [0.3, 0.3])) == pytest.approx([0.5 + 0.6 / 3.0])
    dyn = ProtocolSpec("CT2-dynamic")
    assert predict_consensus_state(dyn, SystemState([0.0, 1.0], [0.3, -0.3])) == pytest.approx([0.5])
    with pytest.raises(ValueError):
        predict_consensus_state(dyn, SystemState([0.0, 1.0], [0.3, 0.3]))


def test_report_serialisation():
    rep = check_gain_constraints(ProtocolSpec("DT2-statedep", k1=1, k2=1.5, k3=0.14), StepConfidence(1), SD6)
    d = rep.to_dict()
    assert set(d) >= {"criterion", "lhs", "rhs", "holds", "staircase_r"} and len(d["parts"]) == 2
    assert rep.line().startswith("GAINS: lhs=0.14 rhs=0.15 holds")
