import numpy as np
import pytest

from jamgen.attack import (AttackConfig, LinearToyTarget, build_generator,
                           clip_to_budget, clip_vjp, jammer, remap,
                           sample_trigger, train_pgm)
from jamgen.errors import DivergedError, ShapeMismatchError
from jamgen.nn import numeric_grad
from jamgen.signal_core import IqSignal, rotate_phase, rotate_phase_vjp
from jamgen.systems.autoencoder import evaluate_bler
from jamgen.systems.ofdm import FRAME_DIM, N_SC


class TestSampleTrigger:
    def test_uniform_statistics(self):
        z = sample_trigger(100, np.random.default_rng(0), n=10000)
        assert z.mean() == pytest.approx(0.5, abs=0.002)

    def test_range(self):
        z = sample_trigger(32, np.random.default_rng(1), n=1000)
        assert z.min() >= 0.0 and z.max() < 1.0

    def test_distinct_seeds_distinct_draws(self):
        a = sample_trigger(16, np.random.default_rng(2))
        b = sample_trigger(16, np.random.default_rng(3))
        assert not np.array_equal(a, b)

    def test_bad_dim(self):
        with pytest.raises(ValueError):
            sample_trigger(0, np.random.default_rng(4))


class TestRemap:
    def test_within_budget_unchanged(self):
        y = np.array([1.0, 2.0, 3.0, 4.0])
        delta = np.array([0.1, 0.0, -0.1, 0.0])
        assert np.allclose(remap(y, delta, p=1.0), y + delta)

    def test_clip_branch(self):
        out = remap(np.zeros(2), np.array([3.0, 4.0]), p=1.0)
        assert np.allclose(out, [0.6, 0.8], atol=1e-7)

    def test_zero_delta_convention(self):
        y = np.array([1.0, -1.0])
        assert np.allclose(remap(y, np.zeros(2), p=0.5), y)

    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            remap(np.zeros(4), np.zeros(6), p=1.0)

    def test_nonpositive_budget(self):
        with pytest.raises(ValueError):
            remap(np.zeros(2), np.zeros(2), p=0.0)

    def test_iqsignal_passthrough(self):
        y = IqSignal.from_iq([1.0, 0.0], [0.0, 0.0])
        out = remap(y, IqSignal(np.full(4, 10.0)), p=4.0)
        assert isinstance(out, IqSignal)
        assert np.sum((out.samples - y.samples) ** 2) == pytest.approx(4.0, rel=1e-6)


class TestClipGradient:
    @pytest.mark.parametrize("scale,label", [(0.1, "interior"), (5.0, "boundary")])
    def test_matches_finite_differences(self, scale, label):
        rng = np.random.default_rng(5)
        p = 2.0
        delta = (scale * rng.normal(size=(1, 6)))
        v = rng.normal(size=(1, 6))

        def f(d):
            clipped, _ = clip_to_budget(d.reshape(1, -1), p)
            return float(np.sum(v * clipped))

        _, cache = clip_to_budget(delta, p)
        analytic = clip_vjp(v, cache)
        numeric = numeric_grad(f, delta.astype(np.float64))
        assert np.allclose(analytic, numeric, rtol=1e-4, atol=1e-6), label

    def test_rotation_vjp_matches_fd(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(1, 8))
        v = rng.normal(size=(1, 8))
        theta = 0.7

        def f(xx):
            return float(np.sum(v * rotate_phase(xx, theta)))

        analytic = rotate_phase_vjp(v, theta)
        assert np.allclose(analytic, numeric_grad(f, x), rtol=1e-5, atol=1e-8)


def _toy_target(seed=1):
    w = np.random.default_rng(seed).normal(size=(6, 4)).astype(np.float32)
    return LinearToyTarget(w, noise_sigma=0.2)


def _toy_cfg(**over):
    base = dict(psr_db=-6.0, epochs=5, steps_per_epoch=100, batch=32, lr=1e-3,
                hidden_sizes=(32,))
    base.update(over)
    return AttackConfig(**base)


class TestTrainPgm:
    def test_beats_random_jamming_on_toy(self):
        toy = _toy_target()
        gen = train_pgm(toy, _toy_cfg(epochs=4, steps_per_epoch=50), np.random.default_rng(0))
        y, _ = toy.sample_inputs(20000, np.random.default_rng(5))
        truth = toy.predict(y)
        pgm_acc = np.mean(toy.predict(gen.perturb(y, np.random.default_rng(6))) == truth)
        jam_acc = np.mean(toy.predict(jammer(gen.power_budget)(y.copy(),
                          np.random.default_rng(7))) == truth)
        assert pgm_acc < jam_acc

    def test_generation_deterministic(self):
        gen = train_pgm(_toy_target(), _toy_cfg(epochs=2), np.random.default_rng(1))
        z = sample_trigger(gen.trigger_dim, np.random.default_rng(2))
        assert np.array_equal(gen.generate(z), gen.generate(z))

    def test_wrong_trigger_length(self):
        gen = build_generator(6, _toy_cfg(), np.random.default_rng(3), n_complex=3)
        with pytest.raises(ShapeMismatchError):
            gen.generate(np.zeros(5, dtype=np.float32))

    def test_victim_mutation_detected(self):
        toy = _toy_target()
        calls = {"n": 0}
        orig = toy.loss_and_input_grad

        def mutating(y, targets):
            calls["n"] += 1
            if calls["n"] == 10:
                toy.w = toy.w + 0.01
            return orig(y, targets)

        toy.loss_and_input_grad = mutating
        with pytest.raises(RuntimeError, match="victim parameters changed"):
            train_pgm(toy, _toy_cfg(epochs=1), np.random.default_rng(4))

    def test_no_improvement_raises(self):
        with pytest.raises(DivergedError, match="failed to improve"):
            train_pgm(_toy_target(), _toy_cfg(lr=0.0, epochs=1), np.random.default_rng(5))

    def test_invalid_weights(self):
        with pytest.raises(ValueError):
            AttackConfig(beta=-0.1)
        with pytest.raises(ValueError):
            AttackConfig(alpha=float("inf"))


class TestTrainedGenerator:
    def test_power_budget_never_exceeded(self, ae_pgm):
        z = sample_trigger(ae_pgm.trigger_dim, np.random.default_rng(8), n=10000)
        norms_sq = np.sum(ae_pgm.generate(z).astype(np.float64) ** 2, axis=1)
        assert np.all(norms_sq <= ae_pgm.power_budget + 1e-6)

    def test_diversity_beta_ordering(self, ae_pgm, ae_pgm_beta0):
        z = sample_trigger(ae_pgm.trigger_dim, np.random.default_rng(9), n=1000)
        def mean_pairwise(gen):
            d = gen.generate(z)
            idx = np.random.default_rng(10).integers(0, len(d), size=(2000, 2))
            return float(np.mean(np.linalg.norm(d[idx[:, 0]] - d[idx[:, 1]], axis=1)))
        assert mean_pairwise(ae_pgm) > mean_pairwise(ae_pgm_beta0)

    def test_rotation_robustness(self, ae_system, ae_pgm):
        fixed = evaluate_bler(ae_system, 7.0, 200000, np.random.default_rng(11),
                              perturb=ae_pgm.perturber("none")).value
        rotated = evaluate_bler(ae_system, 7.0, 200000, np.random.default_rng(12),
                                perturb=ae_pgm.perturber("per-transmission")).value
        assert abs(rotated - fixed) <= 0.2 * max(rotated, fixed)

    def test_perturb_budget_per_sample(self, ae_pgm):
        y = np.zeros((64, 14), dtype=np.float32)
        out = ae_pgm.perturb(y, np.random.default_rng(13))
        power = np.sum((out - y).astype(np.float64) ** 2, axis=1)
        assert np.all(power <= ae_pgm.power_budget + 1e-6)

    def test_fresh_trigger_per_transmission(self, ae_pgm):
        y = np.zeros((32, 14), dtype=np.float32)
        out = ae_pgm.perturb(y, np.random.default_rng(14), phase_policy="none")
        deltas = out - y
        assert len(np.unique(np.round(deltas, 5), axis=0)) > 1


class TestPerturbShapes:
    def test_zero_generator_is_identity(self):
        gen = build_generator(14, _toy_cfg(phase_policy="none"),
                              np.random.default_rng(15), n_complex=7)
        final = gen.model.layers[-1]
        final.params["W"][:] = 0
        final.params["b"][:] = 0
        y = np.random.default_rng(16).normal(size=(8, 14)).astype(np.float32)
        assert np.array_equal(gen.perturb(y, np.random.default_rng(17)), y)

    def test_ofdm_perturbation_spans_pilot_and_data(self):
        cfg = _toy_cfg(hidden_sizes=(64,), phase_policy="none")
        gen = build_generator(FRAME_DIM, cfg, np.random.default_rng(18),
                              n_complex=2 * N_SC)
        y = np.zeros((4, FRAME_DIM), dtype=np.float32)
        out = gen.perturb(y, np.random.default_rng(19))
        pilot_part = out[:, :2 * N_SC]
        data_part = out[:, 2 * N_SC:]
        assert np.any(pilot_part != 0) and np.any(data_part != 0)
