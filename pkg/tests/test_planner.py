import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from starkplan.emitters import (CATALOG, SigmoidQuench, StarkResponse, neutral_fraction,
                                stark_frequency, stark_linewidth)
from starkplan.errors import DomainError
from starkplan.interference import pair_overlap
from starkplan.planner import (InhomogeneousPdf, PlanConstraints, brute_force_plan,
                               effective_v_min, pdf_from_spectrum, plan_pairs, tunable_fraction)


def normal_pdf(sigma=1.0, n=4001, half=8.0):
    x = np.linspace(-half * sigma, half * sigma, n)
    return InhomogeneousPdf.normalized(x, norm.pdf(x, scale=sigma))


def random_emitters(seed, n, quench=True):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        vt = -rng.uniform(0, 5)
        q = SigmoidQuench(-rng.uniform(30, 110), rng.uniform(3, 10)) if quench and rng.random() < 0.5 else None
        out.append(StarkResponse(name=f"E{i}", nu0=226100 + rng.uniform(0, 30),
                                 gamma0=rng.uniform(1.5, 5.0), v_threshold=vt,
                                 v_min=vt - rng.uniform(10, 110), alpha1=rng.uniform(0.1, 2.0),
                                 gamma1=-rng.uniform(0, 0.3), quench=q))
    return out


def test_pdf_from_spectrum():
    f = np.linspace(0, 10, 11)
    pdf = pdf_from_spectrum(f, np.ones_like(f))
    assert np.allclose(pdf.density, 0.1)
    g = pdf_from_spectrum(f, np.exp(-(f - 5) ** 2) + 0.3, background=0.3)
    assert np.trapezoid(g.density, g.grid) == pytest.approx(1.0, abs=1e-9)
    assert g.background_level == 0.3
    with pytest.raises(DomainError):
        pdf_from_spectrum(f, np.ones_like(f), background=2.0)


def test_tunable_fraction_normal_oracle():
    pdf = normal_pdf()
    assert tunable_fraction(pdf, 2.0) == pytest.approx(norm.cdf(1) - norm.cdf(-1), abs=1e-6)
    assert tunable_fraction(pdf, 20.0) == 1.0
    assert tunable_fraction(pdf, 1e-6) < 1e-6


def test_tunable_fraction_uniform_window():
    f = np.linspace(0, 10, 11)
    pdf = pdf_from_spectrum(f, np.ones_like(f))
    assert tunable_fraction(pdf, 2.5) == pytest.approx(0.25, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 6.0), st.floats(0.05, 6.0), st.floats(-1e3, 1e3))
def test_tunable_fraction_monotone_and_translation_invariant(w1, w2, off):
    rng = np.random.default_rng(5)
    x = np.linspace(0, 20, 301)
    pdf = InhomogeneousPdf.normalized(x, rng.random(x.size) + np.exp(-(x - 7) ** 2))
    lo, hi = sorted((w1, w2))
    assert tunable_fraction(pdf, lo) <= tunable_fraction(pdf, hi) + 1e-12
    assert tunable_fraction(pdf.shifted(off), lo) == pytest.approx(tunable_fraction(pdf, lo),
                                                                   abs=1e-9)


def test_tunable_fraction_beats_every_sampled_window():
    rng = np.random.default_rng(6)
    x = np.sort(rng.uniform(0, 10, 80))
    pdf = InhomogeneousPdf.normalized(x, rng.random(80))
    best = tunable_fraction(pdf, 1.7)
    fine = np.linspace(x[0], x[-1], 200001)
    dens = np.interp(fine, x, pdf.density)
    cum = np.concatenate([[0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(fine))])
    k = int(round(1.7 / (fine[1] - fine[0])))
    assert best >= np.max(cum[k:] - cum[:-k]) - 1e-6


def test_identical_emitters_pair_at_zero_bias():
    r = CATALOG["A3"]
    twins = [StarkResponse(**{**r.__dict__, "name": n}) for n in ("x", "y")]
    plan = plan_pairs(twins)
    (pa,) = plan.pairs
    assert pa.v_a == 0.0 and pa.v_b == 0.0
    assert pa.p_exc == 1.0


def test_a1_b1_pair_found():
    b1 = StarkResponse(**{**CATALOG["B1"].__dict__, "v_min": -135.0, "quench": None})
    plan = plan_pairs([CATALOG["A1"], b1])
    (pa,) = plan.pairs
    assert pa.p_exc >= 0.1
    assert pa.v_b == pytest.approx(-135.0) and pa.v_a > -20


def test_a1_b1_catalog_limits():
    plan = plan_pairs([CATALOG["A1"], CATALOG["B1"]])
    assert plan.pairs == [] and sorted(plan.unpaired) == ["A1", "B1"]


def test_unreachable_emitter_left_unpaired():
    a = StarkResponse(name="a", nu0=226100.0, gamma0=2.0, v_threshold=0.0, v_min=-10.0,
                      alpha1=0.5)
    b = StarkResponse(name="b", nu0=226200.0, gamma0=2.0, v_threshold=0.0, v_min=-10.0,
                      alpha1=0.5)
    plan = plan_pairs([a, b])
    assert plan.pairs == [] and plan.objective_value == 0.0


def test_bias_limit_and_quench_limit():
    r = CATALOG["B1"]
    c = PlanConstraints(max_reverse_bias=50.0)
    assert effective_v_min(r, c) == -50.0
    lim = effective_v_min(r, PlanConstraints())
    assert neutral_fraction(r.quench, lim) >= math.exp(-1)
    assert lim > -112
    assert effective_v_min(r, PlanConstraints(min_neutral_fraction=0.0)) == r.v_min
    assert effective_v_min(r, PlanConstraints(max_reverse_bias={"B1": 20})) == -20.0


def test_constraint_validation():
    with pytest.raises(DomainError):
        PlanConstraints(red_shift_only=False)
    with pytest.raises(DomainError):
        PlanConstraints(objective="max")
    with pytest.raises(DomainError):
        plan_pairs([CATALOG["A1"]])


def check_self_consistent(emitters, plan, c):
    by = {r.name: r for r in emitters}
    seen = set()
    for pa in plan.pairs:
        ra, rb = by[pa.a], by[pa.b]
        assert not ({pa.a, pa.b} & seen)
        seen |= {pa.a, pa.b}
        for r, v in ((ra, pa.v_a), (rb, pa.v_b)):
            assert effective_v_min(r, c) <= v <= 0
            assert stark_frequency(r, v) == pytest.approx(pa.target_ghz, abs=1e-6)
        p = pair_overlap(stark_linewidth(ra, pa.v_a), stark_linewidth(rb, pa.v_b),
                         stark_frequency(ra, pa.v_a) - stark_frequency(rb, pa.v_b))
        assert p == pytest.approx(pa.p_exc, rel=1e-12)
    assert seen.isdisjoint(plan.unpaired)
    assert len(seen) + len(plan.unpaired) == len(emitters)


@pytest.mark.parametrize("seed", range(20))
def test_plan_matches_brute_force(seed):
    n = 2 + seed % 5
    ems = random_emitters(seed, n)
    for c in (PlanConstraints(), PlanConstraints(objective="linear")):
        plan = plan_pairs(ems, c)
        ref = brute_force_plan(ems, c)
        assert plan.objective_value == pytest.approx(ref.objective_value, rel=1e-12, abs=1e-12)
        check_self_consistent(ems, plan, c)


@pytest.mark.parametrize("seed", range(10))
def test_relaxing_quench_limit_never_hurts(seed):
    ems = random_emitters(100 + seed, 6)
    prev = -np.inf
    for nf in (0.8, 0.5, math.exp(-1), 0.1, 0.0):
        v = plan_pairs(ems, PlanConstraints(min_neutral_fraction=nf)).objective_value
        assert v >= prev - 1e-9
        prev = v


def test_greedy_beyond_exact_limit():
    ems = random_emitters(7, 8, quench=False)
    c = PlanConstraints(exact_limit=4)
    plan = plan_pairs(ems, c)
    assert plan.method == "greedy"
    check_self_consistent(ems, plan, c)
    assert plan.objective_value <= plan_pairs(ems).objective_value + 1e-12


def test_plan_serialises():
    plan = plan_pairs(random_emitters(3, 5))
    d = plan.to_dict()
    assert set(d) == {"objective", "objective_value", "method", "pairs", "unpaired"}
