import math

import numpy as np
import pytest

from tracksim.geometry import FovParams, RobotConfig, TargetState, WorldState
from tracksim.particle_filter import (
    ContextModelParams,
    FilterDivergence,
    MissingCue,
    ParticleSet,
    PredictionUnavailable,
    RegenParams,
    context_component,
    entropy,
    information_gain,
    predict,
    resample,
    sample_mixture,
    systematic_resample,
    update,
)
from tracksim.pomdp import ContextBelief, ContextState
from tracksim.sensing import Detection, EMPTY_DETECTION, SensorParams

FOV = FovParams()
Q = RobotConfig(0, 0, 0, 0)
WORLD = WorldState(robot=Q, target=TargetState((2.0, 0.0)))
PARAMS = ContextModelParams(sigma_visible=0.1, sigma_occluded=0.5,
                            sigma_human=0.7, occluder_offset=0.5)


def uniform_set(n):
    xs = np.zeros((n, 2))
    return ParticleSet(xs, np.full(n, 1.0 / n))


class TestContextComponent:
    def test_visible_mean(self):
        comp = context_component(ContextState.VISIBLE, PARAMS,
                                 last_state=(np.array([1.0, 1.0]), np.zeros(2)))
        assert np.allclose(comp.mean, [1.0, 1.0])
        assert comp.sigma == PARAMS.sigma_visible

    def test_visible_velocity_advance(self):
        comp = context_component(ContextState.VISIBLE, PARAMS,
                                 last_state=(np.array([1.0, 1.0]), np.array([2.0, 0.0])),
                                 dt=0.5)
        assert np.allclose(comp.mean, [2.0, 1.0])

    def test_occluded_offset_along_bearing(self):
        comp = context_component(ContextState.OCCLUDED, PARAMS,
                                 occluder_point=np.array([3.0, 0.0]),
                                 sensor_origin=np.zeros(2))
        assert np.allclose(comp.mean, [3.5, 0.0])

    def test_disappearance_at_human(self):
        comp = context_component(ContextState.DISAPPEARANCE, PARAMS,
                                 human_position=np.array([5.0, 2.0]))
        assert np.allclose(comp.mean, [5.0, 2.0])

    def test_irrecoverable_none(self):
        assert context_component(ContextState.IRRECOVERABLE, PARAMS) is None

    def test_missing_cue_named(self):
        with pytest.raises(MissingCue, match="occluder"):
            context_component(ContextState.OCCLUDED, PARAMS)
        with pytest.raises(MissingCue, match="human"):
            context_component(ContextState.DISAPPEARANCE, PARAMS)
        with pytest.raises(MissingCue, match="target state"):
            context_component(ContextState.VISIBLE, PARAMS)


class TestPredict:
    def test_mean_concentrates_on_last_state(self):
        n = 10_000
        ps = uniform_set(n)
        belief = ContextBelief.point_mass(ContextState.VISIBLE)
        comps = {
            ContextState.VISIBLE: context_component(
                ContextState.VISIBLE, PARAMS,
                last_state=(np.array([1.0, -2.0]), np.zeros(2))),
            ContextState.OCCLUDED: None,
            ContextState.DISAPPEARANCE: None,
            ContextState.IRRECOVERABLE: None,
        }
        rng = np.random.default_rng(0)
        out = predict(ps, belief, comps, rng)
        se = 3 * PARAMS.sigma_visible / math.sqrt(n)
        assert out.xs[:, 0].mean() == pytest.approx(1.0, abs=se)
        assert out.xs[:, 1].mean() == pytest.approx(-2.0, abs=se)
        assert np.array_equal(out.ws, ps.ws)

    def test_mixture_mean(self):
        n = 20_000
        ps = uniform_set(n)
        belief = ContextBelief(np.array([0.5, 0.0, 0.5, 0.0]))
        comps = {
            ContextState.VISIBLE: context_component(
                ContextState.VISIBLE, PARAMS, last_state=(np.zeros(2), np.zeros(2))),
            ContextState.OCCLUDED: None,
            ContextState.DISAPPEARANCE: context_component(
                ContextState.DISAPPEARANCE, PARAMS, human_position=np.array([4.0, 0.0])),
            ContextState.IRRECOVERABLE: None,
        }
        rng = np.random.default_rng(1)
        out = predict(ps, belief, comps, rng)
        # mixture mean (2, 0); x-variance dominated by the bimodal split
        mix_var = 0.5 * (PARAMS.sigma_visible**2 + PARAMS.sigma_human**2) + 4.0
        se = 3 * math.sqrt(mix_var / n)
        assert out.xs[:, 0].mean() == pytest.approx(2.0, abs=se)

    def test_unavailable_errors(self):
        ps = uniform_set(10)
        belief = ContextBelief.point_mass(ContextState.IRRECOVERABLE)
        comps = {c: None for c in ContextState}
        with pytest.raises(PredictionUnavailable):
            predict(ps, belief, comps, np.random.default_rng(0))

    def test_renormalizes_over_available(self):
        # mass on an unavailable context flows to the available ones
        n = 4000
        ps = uniform_set(n)
        belief = ContextBelief(np.array([0.5, 0.5, 0.0, 0.0]))
        comps = {
            ContextState.VISIBLE: context_component(
                ContextState.VISIBLE, PARAMS, last_state=(np.array([3.0, 3.0]), np.zeros(2))),
            ContextState.OCCLUDED: None,
            ContextState.DISAPPEARANCE: None,
            ContextState.IRRECOVERABLE: None,
        }
        out = predict(ps, belief, comps, np.random.default_rng(2))
        assert out.xs[:, 0].mean() == pytest.approx(3.0, abs=0.02)


class TestUpdate:
    def test_empty_measurement_hand_arithmetic(self):
        # one particle in view, one outside: raw weights (0.05, 0.475)
        xs = np.array([[2.0, 0.0], [-2.0, 0.0]])
        ps = ParticleSet(xs, np.array([0.5, 0.5]))
        params = SensorParams(p_d=0.9, p_e=0.05)
        out = update(ps, EMPTY_DETECTION, WORLD, Q, FOV, params)
        assert out.ws[0] == pytest.approx(0.05 / 0.525)
        assert out.ws[1] == pytest.approx(0.475 / 0.525)
        assert out.ws[0] == pytest.approx(0.0952, abs=1e-4)
        assert out.ws[1] == pytest.approx(0.9048, abs=1e-4)

    def test_all_outside_unchanged(self):
        xs = np.array([[-2.0, 0.0], [-3.0, 1.0], [0.0, 5.0]])
        ps = ParticleSet(xs, np.array([0.2, 0.3, 0.5]))
        out = update(ps, EMPTY_DETECTION, WORLD, Q, FOV, SensorParams())
        assert np.allclose(out.ws, ps.ws)

    def test_likelihood_dominance(self):
        xs = np.array([[2.0, 0.0], [2.5, 0.5]])
        ps = ParticleSet(xs, np.array([0.5, 0.5]))
        params = SensorParams(noise_cov=((1e-4, 0.0), (0.0, 1e-4)))
        out = update(ps, Detection((2.0, 0.0)), WORLD, Q, FOV, params)
        assert out.ws[0] > 1.0 - 1e-9

    def test_divergence_raises(self):
        xs = np.array([[2.0, 0.0], [2.1, 0.0]])
        ps = ParticleSet(xs, np.array([0.5, 0.5]))
        params = SensorParams(p_d=1.0, p_e=0.0)
        with pytest.raises(FilterDivergence):
            update(ps, EMPTY_DETECTION, WORLD, Q, FOV, params)

    def test_normalization_preserved(self):
        rng = np.random.default_rng(5)
        xs = rng.uniform(-5, 5, (500, 2))
        ws = rng.uniform(0, 1, 500)
        ps = ParticleSet(xs, ws / ws.sum())
        out = update(ps, EMPTY_DETECTION, WORLD, Q, FOV, SensorParams())
        assert abs(out.ws.sum() - 1.0) <= 1e-9
        out2 = update(ps, Detection((2.0, 0.1)), WORLD, Q, FOV, SensorParams())
        assert abs(out2.ws.sum() - 1.0) <= 1e-9


def systematic_oracle(ws, u0):
    """Reference systematic resampler: cumulative walk with fixed comb."""
    n = len(ws)
    c = np.cumsum(ws)
    idx = []
    i = 0
    for m in range(n):
        u = (u0 + m) / n
        while u > c[i]:
            i += 1
        idx.append(i)
    return np.array(idx)


class TestResample:
    def test_noop_above_threshold(self):
        ps = uniform_set(100)
        res = resample(ps, WORLD, Q, FOV, RegenParams(), np.random.default_rng(0))
        assert res.particles is ps
        assert not res.resampled

    def test_weights_equal_after(self):
        rng = np.random.default_rng(1)
        xs = rng.uniform(-5, 5, (200, 2))
        ws = np.zeros(200)
        ws[:3] = [0.7, 0.2, 0.1]
        ps = ParticleSet(xs, ws)
        res = resample(ps, WORLD, Q, FOV, RegenParams(), rng)
        assert res.resampled
        assert np.allclose(res.particles.ws, 1.0 / 200)

    def test_degenerate_gives_copies(self):
        xs = np.array([[i * 1.0, 0.0] for i in range(50)])
        ws = np.zeros(50)
        ws[7] = 1.0
        ps = ParticleSet(xs, ws)
        res = resample(ps, WORLD, Q, FOV, RegenParams(), np.random.default_rng(2))
        assert np.all(res.particles.xs == xs[7])

    def test_matches_systematic_oracle(self):
        rng = np.random.default_rng(3)
        ws = rng.uniform(0, 1, 64)
        ws /= ws.sum()
        u0 = 0.3572
        class FixedRng:
            def uniform(self):
                return u0
        idx = systematic_resample(ws, FixedRng())
        oracle = systematic_oracle(ws, u0)
        assert np.array_equal(idx, oracle)

    def test_regeneration_moves_mass_outside_view(self):
        rng = np.random.default_rng(4)
        # all particles inside the sector, fully degenerate weights
        xs = np.full((300, 2), [2.0, 0.0])
        ws = np.zeros(300)
        ws[0] = 1.0
        ps = ParticleSet(xs, ws)
        regen = RegenParams(
            enabled=True,
            mixture_weights=np.array([1.0]),
            mixture_means=np.array([[2.5, 0.0]]),  # mass behind the sensor line
            mixture_sigmas=np.array([3.0]),
        )
        res = resample(ps, WORLD, Q, FOV, regen, rng)
        from tracksim.geometry import effective_fov_mask
        inside = effective_fov_mask(WORLD, Q, FOV, res.particles.xs)
        assert res.regenerated == 300
        assert not inside.any()


class TestEntropyAndGain:
    def test_uniform_entropy(self):
        assert entropy(uniform_set(4)) == pytest.approx(math.log(4))

    def test_point_mass_entropy(self):
        ps = ParticleSet(np.zeros((4, 2)), np.array([1.0, 0.0, 0.0, 0.0]))
        assert entropy(ps) == 0.0

    def test_two_point_entropy(self):
        ps = ParticleSet(np.zeros((4, 2)), np.array([0.5, 0.5, 0.0, 0.0]))
        assert entropy(ps) == pytest.approx(math.log(2))

    def test_gain_empty_view(self):
        ps = ParticleSet(np.full((10, 2), [-3.0, 0.0]), np.full(10, 0.1))
        assert information_gain(ps, Q, FOV, WORLD) == 0.0

    def test_gain_full_view(self):
        ps = ParticleSet(np.full((10, 2), [2.0, 0.0]), np.full(10, 0.1))
        assert information_gain(ps, Q, FOV, WORLD) == pytest.approx(math.log(10))

    def test_gain_partial_view(self):
        xs = np.array([[2.0, 0.0], [2.0, 0.1], [-2.0, 0.0], [-2.0, 1.0]])
        ps = ParticleSet(xs, np.full(4, 0.25))
        expected = 2 * 0.25 * math.log(4)
        assert information_gain(ps, Q, FOV, WORLD) == pytest.approx(expected)

    def test_entropy_equals_gain_with_covering_view(self):
        rng = np.random.default_rng(6)
        xs = rng.uniform(-1.5, 1.5, (100, 2)) + [2.0, 0.0]
        ws = rng.uniform(0, 1, 100)
        ps = ParticleSet(xs, ws / ws.sum())
        wide = FovParams(alpha=2 * math.pi - 1e-9, radius=100.0)
        assert information_gain(ps, Q, wide, WORLD) == pytest.approx(entropy(ps))


def test_sample_mixture_is_dimension_agnostic():
    rng = np.random.default_rng(0)
    out = sample_mixture(np.array([1.0]), np.array([[3.0]]), np.array([0.2]),
                         5000, rng)
    assert out.shape == (5000, 1)
    assert out.mean() == pytest.approx(3.0, abs=3 * 0.2 / math.sqrt(5000))
