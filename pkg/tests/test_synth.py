import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chi2

from starkplan import lineshapes as ls
from starkplan.emitters import CATALOG, CavityModel
from starkplan.errors import DomainError
from starkplan.fitting import coincidence_areas, g2_correct, raw_g2
from starkplan.synth import (FringeSpec, GridSpec, PoissonNoise, ShelvingTruth, SynthScenario,
                             background_for_raw_g2, decay_expected, gen_decay, gen_g2_stream,
                             gen_ple_scan, gen_reflection_scan, gen_shelving_sequence, ple_model,
                             reflection_params, shelving_expected)

A3 = CATALOG["A3"]
GRID = GridSpec(226100, 226200, 2001)


def test_single_emitter_peak_at_nu0():
    s = gen_ple_scan(SynthScenario([A3], GRID, scale=7.0))
    i = int(np.argmax(s.intensity))
    assert s.frequency[i] == pytest.approx(A3.nu0, abs=0.05)
    assert np.max(s.intensity) == pytest.approx(7.0, rel=1e-3)


def test_a3_centre_at_minus_14():
    s = gen_ple_scan(SynthScenario([A3], GridSpec(226120, 226160, 40001), bias=-14.0))
    assert s.frequency[int(np.argmax(s.intensity))] == pytest.approx(226139.87, abs=1e-3)


def test_equal_widths_reproduce_fwhm():
    nu = np.linspace(A3.nu0 - 10, A3.nu0 + 10, 200001)
    y = ple_model(SynthScenario([A3], GRID), nu)
    above = nu[y >= 0.5 * y.max()]
    assert above[-1] - above[0] == pytest.approx(A3.gamma0, abs=1e-3)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**63 - 1))
def test_determinism(seed):
    sc = SynthScenario([A3, CATALOG["A2"]], GRID, noise=PoissonNoise(50.0), seed=seed)
    a, b = gen_ple_scan(sc), gen_ple_scan(sc)
    assert a.intensity.tobytes() == b.intensity.tobytes()
    s1 = gen_g2_stream(1e4, 100, 100, 4.5e-6, 0.05, seed=seed)
    s2 = gen_g2_stream(1e4, 100, 100, 4.5e-6, 0.05, seed=seed)
    assert s1.t1.tobytes() == s2.t1.tobytes() and s1.t2.tobytes() == s2.t2.tobytes()


def test_seeds_differ():
    sc = SynthScenario([A3], GRID, noise=PoissonNoise(50.0), seed=1)
    sd = SynthScenario([A3], GRID, noise=PoissonNoise(50.0), seed=2)
    assert not np.array_equal(gen_ple_scan(sc).intensity, gen_ple_scan(sd).intensity)


def test_noiseless_equals_forward_model():
    sc = SynthScenario([A3, CATALOG["A1"]], GRID, bias=-10.0, background=3.0)
    assert np.max(np.abs(gen_ple_scan(sc).intensity - ple_model(sc, GRID.values()))) <= 1e-12
    cav = CavityModel(name="c", nu_cav=226158.0, q_factor=5500.0, purcell_max=1.0)
    rs = gen_reflection_scan(SynthScenario([], GridSpec(226100, 226220, 601), cavity=cav))
    ref = ls.cavity_reflection(rs.frequency, *reflection_params(cav, FringeSpec()))
    assert np.max(np.abs(rs.intensity - ref)) <= 1e-12
    tr = gen_decay(72.8, 100.0, 1.0, GridSpec(0, 400, 201), noise=False)
    assert np.max(np.abs(tr.counts - decay_expected(72.8, 100.0, 1.0, np.linspace(0, 400, 201)))) <= 1e-12


def test_noiseless_decay_one_over_e():
    # bin integrals of an exponential keep the exponential ratio between bins
    tau = 72.8
    tr = gen_decay(tau, 100.0, 0.0, GridSpec(0, 2 * tau, 201), noise=False)
    k = 100
    assert tr.time[k] == pytest.approx(tau)
    assert tr.counts[k] / tr.counts[0] == pytest.approx(math.exp(-1), rel=1e-12)


def test_zero_amplitude_is_background_noise():
    tr = gen_decay(50.0, 0.0, 20.0, GridSpec(0, 4000, 4001), seed=3)
    assert tr.counts.mean() == pytest.approx(20.0, rel=0.02)
    assert tr.counts.var() == pytest.approx(20.0, rel=0.1)


def test_poisson_chi_square():
    sc = SynthScenario([A3], GRID, scale=50.0, background=20.0, noise=PoissonNoise(100.0), seed=9)
    mu = ple_model(sc, GRID.values()) * 100.0
    y = gen_ple_scan(sc).intensity
    stat = float(np.sum((y - mu) ** 2 / mu))
    assert chi2.sf(stat, GRID.n) > 1e-3


def test_shelving_sequence_scaling():
    truth = ShelvingTruth()
    edges = np.linspace(0, 3000, 1501)
    seq = gen_shelving_sequence(truth, [0.0, 228.0], GridSpec(0, 3000, 1501), noise=False)
    late = edges[:-1] > 2100
    d0 = seq[0].counts - shelving_expected(ShelvingTruth(a2=0.0), 0.0, edges)
    d1 = seq[1].counts - shelving_expected(ShelvingTruth(a2=0.0), 0.0, edges)
    assert np.allclose(d1[late], d0[late] * math.exp(-1), rtol=1e-12)


def test_g2_stream_statistics():
    period = 4.5e-6
    st_ = gen_g2_stream(2e4, 0.0, 0.0, period, 5.0, seed=4, g2_intrinsic=0.0)
    o, c = coincidence_areas(st_.t1, st_.t2, period, 45e-9)
    assert c[o == 0][0] == 0
    assert st_.t1.size + st_.t2.size == pytest.approx(2e4 * 5.0, rel=0.02)
    assert np.all(np.diff(st_.t1) >= 0)


def test_zero_background_raw_equals_corrected():
    period, d, T = 4.5e-6, 45e-9, 10.0
    st_ = gen_g2_stream(2e4, 0.0, 0.0, period, T, seed=5, g2_intrinsic=0.3)
    o, c = coincidence_areas(st_.t1, st_.t2, period, d)
    n1, n2 = st_.t1.size / st_.duration, st_.t2.size / st_.duration
    g = g2_correct(c, n1, n2, 0.0, 0.0, d, period, st_.duration)
    assert g[o == 0][0] == pytest.approx(raw_g2(o, c), abs=0.05)
    assert g[o == 0][0] == pytest.approx(0.3, abs=0.06)


def test_pure_background_stream_uncorrelated():
    period = 4.5e-6
    st_ = gen_g2_stream(0.0, 2e4, 2e4, period, 20.0, seed=6)
    o, c = coincidence_areas(st_.t1, st_.t2, period, 45e-9)
    assert raw_g2(o, c) == pytest.approx(1.0, abs=0.1)


def test_background_for_raw_g2():
    beta = background_for_raw_g2(0.34, 0.09, 45e-9, 4.5e-6)
    c = 1e-2 * (2 * beta + beta**2)
    assert (0.09 + c) / (1 + c) == pytest.approx(0.34, rel=1e-12)
    with pytest.raises(DomainError):
        background_for_raw_g2(0.05, 0.09, 45e-9, 4.5e-6)


def test_generator_validation():
    with pytest.raises(DomainError):
        GridSpec(1.0, 0.0, 10)
    with pytest.raises(DomainError):
        gen_decay(0.0, 1.0, 0.0, GridSpec(0, 10, 11))
    with pytest.raises(DomainError):
        gen_reflection_scan(SynthScenario([], GRID))
    with pytest.raises(DomainError):
        gen_g2_stream(-1.0, 0, 0, 1e-6, 1.0)
