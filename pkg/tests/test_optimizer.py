import numpy as np
import pytest
from scipy.stats import spearmanr

import vvlearn.optimizer as optimizer_module
from vvlearn.core import LabeledExample, frobenius_norm, sparse_from_dense
from vvlearn.dataio import synth_gen
from vvlearn.losses import HINGE, LossSpec, standard_loss_specs
from vvlearn.optimizer import (
    CertificateError,
    RunRecord,
    StepSchedule,
    TrainConfig,
    evaluate_mean_loss,
    evaluate_objective,
    sgd_step,
    train,
)
from vvlearn.regularizers import RegularizerSpec
from vvlearn.seeding import generator

MLOG = LossSpec.multinomial_logistic()


def tiny_dataset(n=40, d=5, c=3, seed=0, task="mcc"):
    return synth_gen(n=n, d=d, c=c, task=task, noise=0.1, seed=seed)


class TestStepSchedule:
    def test_theorem_values(self):
        s = StepSchedule.theorem(0.5)
        assert s.eta(1) == 2.0
        assert s.eta(4) == 1.0 / (4 * 0.5)

    def test_experiment_values(self):
        s = StepSchedule.experiment(0.01)
        assert s.eta(1) == 1.0 / 1.01
        assert s.eta(100) == 1.0 / (0.01 * 100 + 1.0)

    @pytest.mark.parametrize("make", [StepSchedule.theorem, StepSchedule.experiment])
    def test_positive_and_nonincreasing(self, make):
        s = make(0.3)
        etas = [s.eta(t) for t in range(1, 200)]
        assert all(e > 0 for e in etas)
        assert all(a >= b for a, b in zip(etas, etas[1:]))

    def test_param_positive(self):
        with pytest.raises(ValueError):
            StepSchedule.theorem(0.0)
        with pytest.raises(ValueError):
            StepSchedule.experiment(-1.0)


class TestSgdStep:
    def test_zero_model_frobenius_is_pure_loss_step(self):
        z = LabeledExample(sparse_from_dense(np.array([1.0, -2.0])), 1)
        w = np.zeros((2, 3))
        reg = RegularizerSpec.frobenius(0.7)
        stepped = sgd_step(w, z, MLOG, reg, 0.25)
        expected = -0.25 * MLOG.subgrad(w, z)
        assert np.allclose(stepped, expected, atol=1e-15)

    def test_eta_zero_is_identity(self):
        z = LabeledExample(sparse_from_dense(np.array([1.0])), 0)
        w = np.array([[0.3, -0.2]])
        out = sgd_step(w, z, MLOG, RegularizerSpec.frobenius(1.0), 0.0)
        assert np.array_equal(out, w)

    def test_hand_derived_softmax_step(self):
        # c=2, d=1, x=(1), y=0, sigma=1, eta=1 from the zero matrix:
        # softmax at zero is (1/2, 1/2), so the update is (+1/2, -1/2)
        z = LabeledExample(sparse_from_dense(np.array([1.0])), 0)
        w = np.zeros((1, 2))
        out = sgd_step(w, z, MLOG, RegularizerSpec.frobenius(1.0), 1.0)
        assert np.allclose(out, np.array([[0.5, -0.5]]), atol=1e-15)

    def test_input_not_mutated(self):
        z = LabeledExample(sparse_from_dense(np.array([1.0, 2.0])), 0)
        w = np.full((2, 2), 0.5)
        before = w.copy()
        sgd_step(w, z, MLOG, RegularizerSpec.frobenius(0.5), 0.1)
        assert np.array_equal(w, before)

    def test_dimension_mismatch(self):
        z = LabeledExample(sparse_from_dense(np.array([1.0, 2.0, 3.0])), 0)
        with pytest.raises(ValueError):
            sgd_step(np.zeros((2, 2)), z, MLOG, RegularizerSpec.frobenius(0.5), 0.1)


class TestEvaluateObjective:
    def test_zero_model_log_c(self):
        data = tiny_dataset(c=4)
        w = np.zeros((data.d, data.c))
        got = evaluate_objective(w, data, MLOG, RegularizerSpec.frobenius(0.1))
        assert np.isclose(got, np.log(4), atol=1e-12)

    def test_single_example_identity(self):
        data = tiny_dataset(n=2)
        z = data.examples[0]
        w = np.full((data.d, data.c), 0.2)
        reg = RegularizerSpec.frobenius(0.3)
        got = evaluate_objective(w, [z], MLOG, reg)
        assert np.isclose(got, MLOG.value(w, z) + reg.value(w), atol=1e-15)

    def test_naive_two_pass_oracle(self):
        rng = np.random.default_rng(6)
        data = tiny_dataset(n=37)
        reg = RegularizerSpec.l2p(0.4, 1.5)
        for _ in range(10):
            w = rng.standard_normal((data.d, data.c))
            values = [MLOG.value(w, z) for z in data.examples]
            naive = sum(values) / len(values) + reg.value(w)
            assert np.isclose(evaluate_objective(w, data, MLOG, reg), naive, atol=1e-12)

    def test_mean_loss_excludes_regularizer(self):
        data = tiny_dataset(n=8)
        w = np.full((data.d, data.c), 0.3)
        reg = RegularizerSpec.frobenius(0.5)
        assert np.isclose(
            evaluate_objective(w, data, MLOG, reg) - evaluate_mean_loss(w, data, MLOG),
            reg.value(w),
            atol=1e-12,
        )

    def test_empty_data_rejected(self):
        with pytest.raises(ValueError):
            evaluate_objective(np.zeros((2, 2)), [], MLOG, RegularizerSpec.frobenius(0.1))


def config_for(data, total_steps, seed=0, sigma=0.05, record_every=None, loss=MLOG):
    return TrainConfig(
        loss=loss,
        reg=RegularizerSpec.frobenius(sigma),
        schedule=StepSchedule.theorem(sigma),
        total_steps=total_steps,
        seed=seed,
        record_every=record_every,
    )


class TestTrain:
    def test_single_step_reproduces_sgd_step(self):
        data = tiny_dataset()
        config = config_for(data, total_steps=1, seed=9)
        w, records = train(data, config)
        first_index = int(generator(9).integers(0, len(data), size=1)[0])
        z = data.examples[first_index]
        manual = sgd_step(
            np.zeros((data.d, data.c)), z, MLOG, config.reg, config.schedule.eta(1)
        )
        assert np.array_equal(w, manual)
        assert len(records) == 1 and records[0].step == 1

    def test_same_seed_bitwise_equal(self):
        data = tiny_dataset()
        config = config_for(data, total_steps=200, seed=3, record_every=50)
        w1, r1 = train(data, config)
        w2, r2 = train(data, config)
        assert np.array_equal(w1, w2)
        assert r1 == r2

    def test_different_seed_differs(self):
        data = tiny_dataset()
        w1, _ = train(data, config_for(data, total_steps=50, seed=1))
        w2, _ = train(data, config_for(data, total_steps=50, seed=2))
        assert not np.array_equal(w1, w2)

    def test_record_cadence_and_final_step(self):
        data = tiny_dataset()
        config = config_for(data, total_steps=130, record_every=50)
        _, records = train(data, config)
        assert [r.step for r in records] == [50, 100, 130]

    def test_records_are_finite_and_norm_correct(self):
        data = tiny_dataset()
        config = config_for(data, total_steps=80, record_every=40)
        w, records = train(data, config)
        for r in records:
            assert np.isfinite(r.empirical_objective)
            assert np.isfinite(r.iterate_frobenius_norm)
        assert np.isclose(records[-1].iterate_frobenius_norm, frobenius_norm(w), atol=1e-15)

    def test_holdout_objective_recorded(self):
        data = tiny_dataset(seed=0)
        holdout = tiny_dataset(seed=1)
        config = TrainConfig(
            loss=MLOG,
            reg=RegularizerSpec.frobenius(0.05),
            schedule=StepSchedule.theorem(0.05),
            total_steps=40,
            seed=0,
            record_every=20,
            eval_holdout=holdout,
        )
        w, records = train(data, config)
        assert all(r.holdout_objective is not None for r in records)
        assert np.isclose(
            records[-1].holdout_objective,
            evaluate_objective(w, holdout, MLOG, config.reg),
            atol=1e-15,
        )

    def test_empty_data_rejected(self):
        with pytest.raises(ValueError):
            train([], config_for(tiny_dataset(), total_steps=1))

    def test_elapsed_excluded_from_equality(self):
        a = RunRecord(step=1, empirical_objective=0.5, holdout_objective=None,
                      iterate_frobenius_norm=1.0, elapsed=0.1)
        b = RunRecord(step=1, empirical_objective=0.5, holdout_objective=None,
                      iterate_frobenius_norm=1.0, elapsed=99.0)
        assert a == b


class TestIterateNormCertificate:
    @pytest.mark.parametrize("spec", standard_loss_specs(k=2), ids=lambda s: s.name)
    def test_bound_holds_on_synthetic_runs(self, spec):
        task = "mlc" if spec.is_multilabel else "mcc"
        data = synth_gen(n=150, d=8, c=4, task=task, noise=0.1, seed=5)
        sigma = 0.05
        config = TrainConfig(
            loss=spec,
            reg=RegularizerSpec.frobenius(sigma),
            schedule=StepSchedule.theorem(sigma),
            total_steps=600,
            seed=11,
            record_every=60,
        )
        w, records = train(data, config)
        bound = spec.lipschitz_inf * data.kappa / sigma + 1e-9
        for r in records:
            assert r.iterate_frobenius_norm <= bound
        assert frobenius_norm(w) <= bound

    def test_violation_raises(self, monkeypatch):
        # force the norm computation to report a huge value so the guard trips
        data = tiny_dataset()
        monkeypatch.setattr(optimizer_module, "frobenius_norm", lambda w: 1e12)
        with pytest.raises(CertificateError):
            train(data, config_for(data, total_steps=5))

    def test_l2p_runs_complete_without_certificate(self):
        # the bound derivation is specific to the frobenius regularizer
        data = tiny_dataset()
        config = TrainConfig(
            loss=MLOG,
            reg=RegularizerSpec.l2p(0.05, 1.5),
            schedule=StepSchedule.theorem(0.05),
            total_steps=300,
            seed=2,
            record_every=100,
        )
        w, records = train(data, config)
        assert len(records) == 3
        assert np.all(np.isfinite(w))


class TestDescentProxy:
    def test_mean_objective_decreases_with_horizon(self):
        n = 400
        data = synth_gen(n=n, d=10, c=4, task="mcc", noise=0.05, seed=7)
        sigma = 0.05
        horizons = [n // 4, n // 2, n, 2 * n, 4 * n]
        means = []
        for total in horizons:
            finals = []
            for seed in range(10):
                w, _ = train(data, config_for(data, total_steps=total, seed=seed, sigma=sigma))
                finals.append(
                    evaluate_objective(w, data, MLOG, RegularizerSpec.frobenius(sigma))
                )
            means.append(float(np.mean(finals)))
        rho = spearmanr(horizons, means).statistic
        assert rho <= -0.9, (horizons, means, rho)


class TestTrainConfigValidation:
    def test_total_steps_positive(self):
        with pytest.raises(ValueError):
            config_for(tiny_dataset(), total_steps=0)

    def test_record_every_positive(self):
        with pytest.raises(ValueError):
            config_for(tiny_dataset(), total_steps=5, record_every=0)

    def test_seed_range(self):
        with pytest.raises(ValueError):
            config_for(tiny_dataset(), total_steps=5, seed=-1)
        with pytest.raises(ValueError):
            config_for(tiny_dataset(), total_steps=5, seed=2**64)
