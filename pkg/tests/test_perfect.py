import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sticky_pep.core import ParticleState
from sticky_pep.perfect import glancing_time, synthesize_perfect, verify_perfect
from sticky_pep.systems import random_zero_frame_positions


def test_two_halves():
    vs = synthesize_perfect((0.5, 0.5), (-1.0, 1.0))
    assert vs == pytest.approx((math.sqrt(2) / 2, -math.sqrt(2) / 2))


def test_equal_thirds():
    vs = synthesize_perfect((1 / 3, 1 / 3, 1 / 3), (-1.0, 0.0, 1.0))
    v = math.sqrt(2 / 3)
    assert vs == pytest.approx((v, 0.0, -v), abs=1e-15)
    rep = verify_perfect(ParticleState((1 / 3,) * 3, (-1.0, 0.0, 1.0), vs))
    assert rep.perfect
    assert rep.collapse_time == pytest.approx(math.sqrt(6))


def test_single_particle_rests():
    assert synthesize_perfect((1.0,), (0.0,)) == (0.0,)


def test_off_center_rejected():
    with pytest.raises(ValueError, match="center of mass"):
        synthesize_perfect((0.5, 0.5), (0.0, 1.0))


def test_degenerate_gap_rejected():
    with pytest.raises(ValueError, match="degenerate"):
        synthesize_perfect((0.5, 0.5), (-1e-12, 1e-12))


def test_glancing_time_formula():
    assert glancing_time(0.5, 0.5, 2.0) == pytest.approx(2 * math.sqrt(2))


def test_unequal_pair_glances():
    # masses 3/4 and 1/4 around the origin
    ms, ys = (0.75, 0.25), (-0.25, 0.75)
    vs = synthesize_perfect(ms, ys)
    assert 0.75 * vs[0] + 0.25 * vs[1] == pytest.approx(0.0, abs=1e-15)
    assert verify_perfect(ParticleState(ms, ys, vs)).perfect


def test_perturbed_thirds_not_perfect():
    v = math.sqrt(2 / 3)
    s = ParticleState((1 / 3,) * 3, (-1.0, 0.0, 1.0), (v + 0.01, -0.02, -v + 0.01))
    rep = verify_perfect(s)
    assert not rep.perfect
    assert rep.reason


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_synthesized_fields_are_perfect(n, seed):
    ms, ys = random_zero_frame_positions(np.random.default_rng(seed), n, min_gap=1e-2)
    vs = synthesize_perfect(ms, ys)
    rep = verify_perfect(ParticleState(ms, ys, vs))
    assert rep.perfect, rep.reason
    m, y, v = rep.final_particle
    assert m == pytest.approx(1.0) and abs(y) < 1e-8 and abs(v) < 1e-8


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_perturbation_breaks_perfection(n, seed):
    rng = np.random.default_rng(seed)
    ms, ys = random_zero_frame_positions(rng, n, min_gap=1e-2)
    vs = np.asarray(synthesize_perfect(ms, ys))
    d = rng.normal(size=n)
    d -= np.asarray(ms) @ d
    d *= 1e-2 / np.linalg.norm(d)
    assert not verify_perfect(ParticleState(ms, ys, tuple((vs + d).tolist()))).perfect
