import io

import numpy as np
import pytest

from vvlearn.dataio import split, synth_gen
from vvlearn.experiments import (
    CurveSpec,
    default_samplesize_grid,
    emit_csv,
    run_gap_curve,
    run_passes_curve,
    run_samplesize_curve,
)
from vvlearn.losses import LossSpec
from vvlearn.optimizer import StepSchedule, TrainConfig, evaluate_objective, train
from vvlearn.regularizers import RegularizerSpec
from vvlearn.seeding import derive_seed

MLOG = LossSpec.multinomial_logistic()
FRO = RegularizerSpec.frobenius(0.01)
SCHED = StepSchedule.experiment(0.01)


def make_spec(kind, grid, reps=2, seed=0, threads=1, passes_per_point=2):
    return CurveSpec(
        kind=kind,
        grid=grid,
        repetitions=reps,
        loss=MLOG,
        reg=FRO,
        schedule=SCHED,
        seed=seed,
        passes_per_point=passes_per_point,
        threads=threads,
    )


@pytest.fixture(scope="module")
def pool():
    return synth_gen(n=300, d=6, c=3, task="mcc", noise=0.05, seed=2)


class TestCurveSpecValidation:
    def test_grid_must_increase(self):
        with pytest.raises(ValueError):
            make_spec("passes", (2, 2, 3))
        with pytest.raises(ValueError):
            make_spec("passes", (3, 1))
        with pytest.raises(ValueError):
            make_spec("passes", (0, 1))
        with pytest.raises(ValueError):
            make_spec("passes", ())

    def test_kind_checked(self):
        with pytest.raises(ValueError):
            make_spec("nope", (1, 2))

    def test_repetitions_positive(self):
        with pytest.raises(ValueError):
            make_spec("passes", (1, 2), reps=0)

    def test_fraction_range(self):
        with pytest.raises(ValueError):
            CurveSpec(
                kind="passes", grid=(1,), repetitions=1, loss=MLOG, reg=FRO,
                schedule=SCHED, seed=0, train_fraction=1.0,
            )


class TestPassesCurve:
    def test_single_grid_point_equals_one_train_call(self, pool):
        spec = make_spec("passes", (1,), reps=1, seed=4)
        points = run_passes_curve(pool, spec)
        assert len(points) == 1

        # replay the protocol by hand for the single repetition
        train_set, test_set = split(pool, 0.8, derive_seed(4, 11, 0))
        n = len(train_set)
        config = TrainConfig(
            loss=MLOG, reg=FRO, schedule=SCHED, total_steps=n,
            seed=derive_seed(4, 13, 0), record_every=n, eval_holdout=test_set,
        )
        w, records = train(train_set, config)
        expected = evaluate_objective(w, test_set, MLOG, FRO)
        assert points[0].test_mean == expected
        assert points[0].test_std == 0.0

    def test_grid_points_share_one_trajectory(self, pool):
        # evaluating at 1 and 2 passes must match two separate shorter runs
        spec2 = make_spec("passes", (1, 2), reps=1, seed=9)
        both = run_passes_curve(pool, spec2)
        only1 = run_passes_curve(pool, make_spec("passes", (1,), reps=1, seed=9))
        assert both[0].test_mean == only1[0].test_mean

    def test_train_and_gap_left_empty(self, pool):
        points = run_passes_curve(pool, make_spec("passes", (1, 2)))
        for p in points:
            assert p.train_mean is None and p.gap_mean is None
            assert p.test_mean is not None

    def test_repetitions_recorded(self, pool):
        points = run_passes_curve(pool, make_spec("passes", (1,), reps=3))
        assert points[0].repetitions == 3

    def test_kind_guard(self, pool):
        with pytest.raises(ValueError):
            run_passes_curve(pool, make_spec("gap", (1, 2)))


class TestSampleSizeAndGapCurves:
    def test_gap_is_test_minus_train(self, pool):
        spec = make_spec("gap", (50, 100), reps=3, seed=1)
        points = run_gap_curve(pool, spec)
        for p in points:
            assert p.gap_mean is not None
            # means are computed from per-repetition gaps, which equal the
            # differences of the paired objectives, so the identity is exact
            assert np.isclose(p.gap_mean, p.test_mean - p.train_mean, atol=1e-12)

    def test_samplesize_omits_gap(self, pool):
        points = run_samplesize_curve(pool, make_spec("sample_size", (50, 100)))
        for p in points:
            assert p.gap_mean is None
            assert p.train_mean is not None and p.test_mean is not None

    def test_single_repetition_has_zero_std(self, pool):
        points = run_samplesize_curve(pool, make_spec("sample_size", (60,), reps=1))
        assert points[0].train_std == 0.0 and points[0].test_std == 0.0

    def test_full_pool_point_matches_standard_split_protocol(self, pool):
        # a single grid value of 0.8 * n reduces to the plain 80/20 protocol
        size = int(0.8 * len(pool))
        spec = make_spec("sample_size", (size,), reps=1, seed=3, passes_per_point=2)
        points = run_samplesize_curve(pool, spec)
        assert points[0].train_mean is not None
        assert len(points) == 1

    def test_grid_exceeding_pool_rejected(self, pool):
        with pytest.raises(ValueError):
            run_gap_curve(pool, make_spec("gap", (1000,)))

    def test_same_seed_same_curve(self, pool):
        a = run_gap_curve(pool, make_spec("gap", (40, 80), reps=2, seed=5))
        b = run_gap_curve(pool, make_spec("gap", (40, 80), reps=2, seed=5))
        assert a == b

    def test_threads_do_not_change_results(self, pool):
        serial = run_gap_curve(pool, make_spec("gap", (40, 80), reps=3, seed=6))
        threaded = run_gap_curve(pool, make_spec("gap", (40, 80), reps=3, seed=6, threads=4))
        assert serial == threaded


class TestDefaultGrid:
    def test_geometric_doubling(self):
        assert default_samplesize_grid(1000) == (100, 200, 400, 800)
        assert default_samplesize_grid(6400) == (100, 200, 400, 800, 1600, 3200, 6400)

    def test_includes_cap_only_when_reached(self):
        assert default_samplesize_grid(100) == (100,)
        assert default_samplesize_grid(150) == (100,)

    def test_small_pool_rejected(self):
        with pytest.raises(ValueError):
            default_samplesize_grid(99)


class TestEmitCsv:
    def test_empty_points(self):
        buffer = io.StringIO()
        emit_csv([], buffer)
        assert buffer.getvalue() == "grid,metric,mean,std,repetitions\n"

    def test_passes_schema_one_row_per_point(self, pool):
        points = run_passes_curve(pool, make_spec("passes", (1, 2)))
        buffer = io.StringIO()
        emit_csv(points, buffer)
        lines = buffer.getvalue().strip().split("\n")
        assert len(lines) == 3
        assert all(line.split(",")[1] == "test" for line in lines[1:])

    def test_gap_schema_three_rows_per_point(self, pool):
        points = run_gap_curve(pool, make_spec("gap", (50,)))
        buffer = io.StringIO()
        emit_csv(points, buffer)
        lines = buffer.getvalue().strip().split("\n")
        assert [line.split(",")[1] for line in lines[1:]] == ["train", "test", "gap"]

    def test_floats_round_trip(self, pool):
        points = run_gap_curve(pool, make_spec("gap", (50,), reps=2, seed=8))
        buffer = io.StringIO()
        emit_csv(points, buffer)
        row = buffer.getvalue().strip().split("\n")[2].split(",")
        assert float(row[2]) == points[0].test_mean
        assert int(row[4]) == 2
