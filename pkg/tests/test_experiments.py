"""Experiment layer: configuration, trials, sweeps, metrics.

The bitwise checks here pin the reproducibility contract: a trial is a pure
function of (config, trial_index), a sweep is a pure function of the config,
and neither depends on worker count or on whether snapshots come from a file
or are regenerated.
"""

import numpy as np
import pytest

from projda.errors import ConfigError
from projda.experiments import (
    MetricsRecord,
    default_config,
    load_config,
    replace,
    rmse,
    rmse_projected,
    run_point,
    run_sweep,
    run_trial,
    summarize,
    sweep_points,
    training_trajectory,
    write_summary_csv,
    write_trial_csv,
)
from projda.models import save_snapshots
from projda.reduction import ReductionBasis, pod_basis, save_basis


def _tiny(**overrides):
    base = dict(dimension=8, forcing=8.0, n_particles=4, n_observations=6,
                trials=2, burn_in=50, training_steps=40, training_stride=5,
                r_p=4, r_d=2, base_seed=777)
    base.update(overrides)
    return default_config("l96", **base)


class TestConfig:
    def test_per_model_defaults(self):
        assert default_config("l96").dt == 0.01
        swe = default_config("swe")
        assert swe.dt == 60.0 and swe.steps_per_observation == 60
        assert swe.resample_omega == 1e-4

    def test_unknown_model_kind(self):
        with pytest.raises(ConfigError):
            default_config("lorenz63")

    def test_l96_rejects_swe_scenarios(self):
        with pytest.raises(ConfigError):
            _tiny(scenario="uv")

    def test_optimal_proposal_needs_process_noise(self):
        with pytest.raises(ConfigError):
            _tiny(filter_kind="oppf", q_scale=0.0)

    def test_model_reduction_needs_rd_within_rp(self):
        with pytest.raises(ConfigError):
            _tiny(filter_kind="projoppf", reduction_kind="pod", r_p=4, r_d=6)

    def test_pod_needs_enough_snapshots(self):
        with pytest.raises(ConfigError):
            _tiny(filter_kind="projoppf", reduction_kind="pod",
                  training_steps=10, training_stride=5)  # 3 snapshots < r_p=4

    def test_sweep_axes_are_model_specific(self):
        with pytest.raises(ConfigError):
            _tiny(sweep_scenario=("all",))
        with pytest.raises(ConfigError):
            default_config("swe", sweep_forcing=(3.0,))

    def test_replace_revalidates(self):
        cfg = _tiny()
        with pytest.raises(ConfigError):
            replace(cfg, r_scale=-1.0)

    def test_identity_reduction_allowed_for_projected_filters(self):
        cfg = _tiny(filter_kind="projoppf", reduction_kind="identity")
        assert cfg.uses_identity_reduction

    def test_observation_blocks_for_swe(self):
        cfg = default_config("swe", nx=8, ny=4, scenario="h", obs_fraction=1.0,
                             filter_kind="oppf", n_particles=2,
                             n_observations=1, trials=1)
        h = cfg.build_observation(cfg.build_model())
        n = 8 * 4
        np.testing.assert_array_equal(h.indices, np.arange(2 * n, 3 * n))

    def test_observation_fraction_strides(self):
        cfg = _tiny(obs_fraction=0.25)
        h = cfg.build_observation(cfg.build_model())
        np.testing.assert_array_equal(h.indices, [0, 4])


class TestLoadConfig:
    def test_round_trip_with_defaults(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text(
            "[model]\nkind = l96\ndimension = 8\n"
            "[filter]\nkind = oppf\nn_particles = 4\n"
            "[experiment]\nn_observations = 6\ntrials = 2\nburn_in = 50\n"
        )
        cfg = load_config(str(path))
        assert cfg.dimension == 8 and cfg.dt == 0.01 and cfg.filter_kind == "oppf"

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text("[model]\nkind = l96\nflux_capacitor = 1\n")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_bad_value_names_section_and_key(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text("[model]\nkind = l96\ndimension = many\n")
        with pytest.raises(ConfigError, match="dimension"):
            load_config(str(path))

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_config("/nonexistent/exp.ini")

    def test_sweep_list_parsing(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text(
            "[model]\nkind = l96\ndimension = 8\n"
            "[reduction]\nkind = pod\nr_p = 4\nr_d = 2\n"
            "training_steps = 40\ntraining_stride = 5\n"
            "[filter]\nkind = projoppf\nn_particles = 4\n"
            "[experiment]\nsweep_r_p = 4, 6\nburn_in = 50\n"
        )
        assert load_config(str(path)).sweep_r_p == (4, 6)


class TestMetrics:
    def test_rmse_hand_oracle(self):
        assert rmse(np.ones(4), np.zeros(4)) == pytest.approx(1.0, abs=1e-15)
        assert rmse(np.array([3.0, 4.0]), np.zeros(2)) == pytest.approx(
            np.sqrt(12.5), abs=1e-12)

    def test_rmse_projected_hand_oracle(self):
        # U = e1 in R^2: truth (3, 4) reduces to (3,); estimate (1,) errs by 2
        basis = ReductionBasis(np.array([[1.0], [0.0]]), kind="pod")
        got = rmse_projected(np.array([1.0]), basis, np.array([3.0, 4.0]))
        assert got == pytest.approx(2.0, abs=1e-14)

    def test_rmse_shape_mismatch(self):
        with pytest.raises(ValueError):
            rmse(np.ones(3), np.ones(4))

    def test_record_properties(self):
        rec = MetricsRecord(trial=0, rmse=np.array([1.0, 3.0]),
                            rmse_proj=np.array([0.5, 0.5]),
                            ess=np.array([2.0, 4.0]),
                            resampled=np.array([True, False]))
        assert rec.mean_rmse == pytest.approx(2.0)
        assert rec.resample_fraction == pytest.approx(0.5)
        assert rec.n_observations == 2

    def test_empty_record_is_nan(self):
        rec = MetricsRecord(trial=0, rmse=np.zeros(0), rmse_proj=np.zeros(0),
                            ess=np.zeros(0), resampled=np.zeros(0, dtype=bool),
                            failed=True, failure="boom")
        assert np.isnan(rec.mean_rmse)


class TestRunTrial:
    def test_trial_is_reproducible(self):
        cfg = _tiny(filter_kind="oppf")
        a = run_trial(cfg, 0)
        b = run_trial(cfg, 0)
        np.testing.assert_array_equal(a.rmse, b.rmse)
        np.testing.assert_array_equal(a.ess, b.ess)
        c = run_trial(cfg, 1)
        assert not np.array_equal(a.rmse, c.rmse)

    def test_prefix_property(self):
        # extending the window leaves the shared prefix bitwise intact
        cfg5 = _tiny(filter_kind="oppf", n_observations=5)
        cfg9 = replace(cfg5, n_observations=9)
        a = run_trial(cfg5, 0)
        b = run_trial(cfg9, 0)
        np.testing.assert_array_equal(b.rmse[:5], a.rmse)
        np.testing.assert_array_equal(b.ess[:5], a.ess)
        np.testing.assert_array_equal(b.resampled[:5], a.resampled)

    def test_identity_projection_equals_unprojected(self):
        non = run_trial(_tiny(filter_kind="non"), 0)
        proj = run_trial(_tiny(filter_kind="projoppf", reduction_kind="identity"), 0)
        np.testing.assert_array_equal(non.rmse, proj.rmse)
        np.testing.assert_array_equal(non.ess, proj.ess)
        np.testing.assert_array_equal(non.resampled, proj.resampled)

    def test_all_filter_reduction_combinations_run(self):
        combos = [("pf", "identity"), ("oppf", "identity"), ("non", "identity"),
                  ("projpf", "pod"), ("projoppf", "pod"), ("projoppf", "dmd"),
                  ("projoppf", "aus")]
        for fk, rk in combos:
            over = {}
            if rk == "aus":
                over = dict(data_reduction="model", aus_spinup=8,
                            burn_in=50, training_steps=40)
            rec = run_trial(_tiny(filter_kind=fk, reduction_kind=rk, **over), 0)
            assert not rec.failed, (fk, rk, rec.failure)
            assert rec.n_observations == 6

    def test_snapshot_file_equals_in_trial_training(self, tmp_path):
        cfg = _tiny(filter_kind="projoppf", reduction_kind="pod")
        states, meta = training_trajectory(cfg, 0)
        assert states.shape[0] == cfg.n_training_snapshots
        path = str(tmp_path / "truth.bin")
        save_snapshots(path, states, meta)
        from_file = run_trial(replace(cfg, snapshot_file=path), 0)
        regenerated = run_trial(cfg, 0)
        np.testing.assert_array_equal(from_file.rmse, regenerated.rmse)
        np.testing.assert_array_equal(from_file.ess, regenerated.ess)

    def test_basis_file_is_honored(self, tmp_path):
        cfg = _tiny(filter_kind="projoppf", reduction_kind="pod")
        states, _ = training_trajectory(cfg, 0)
        path = str(tmp_path / "basis.bin")
        save_basis(path, pod_basis(states.T, 4))
        rec = run_trial(replace(cfg, basis_file=path), 0)
        assert not rec.failed
        np.testing.assert_array_equal(rec.rmse, run_trial(cfg, 0).rmse)

    def test_runtime_reduction_failure_is_reported(self, tmp_path):
        # canonical basis misses observed components: R^q is singular
        path = str(tmp_path / "bad.bin")
        save_basis(path, ReductionBasis(np.eye(8)[:, :4], kind="pod"))
        cfg = _tiny(filter_kind="projoppf", reduction_kind="pod",
                    obs_fraction=0.5, basis_file=path)
        rec = run_trial(cfg, 0)
        assert rec.failed
        assert "singular" in rec.failure
        assert rec.n_observations == 0

    def test_truth_noise_toggle_changes_truth(self):
        on = run_trial(_tiny(filter_kind="oppf"), 0)
        off = run_trial(_tiny(filter_kind="oppf", truth_noise=False), 0)
        assert not np.array_equal(on.rmse, off.rmse)


class TestSweep:
    def test_points_cover_axes_in_document_order(self):
        cfg = _tiny(filter_kind="projoppf", reduction_kind="pod",
                    sweep_r_p=(4, 6), sweep_r_d=(1, 2))
        pts = sweep_points(cfg)
        assert [(p.r_p, p.r_d) for p in pts] == [(4, 1), (4, 2), (6, 1), (6, 2)]
        assert all(p.sweep_r_p == () for p in pts)

    def test_forcing_axis(self):
        cfg = _tiny(filter_kind="oppf", sweep_forcing=(3.0, 8.0))
        assert [p.forcing for p in sweep_points(cfg)] == [3.0, 8.0]

    def test_parallel_matches_serial(self):
        cfg = _tiny(filter_kind="projoppf", reduction_kind="pod",
                    trials=3, sweep_r_p=(4, 6))
        serial = run_sweep(cfg, jobs=1)
        parallel = run_sweep(cfg, jobs=2)
        assert len(serial) == 2
        # SummaryRow is frozen, so == compares every aggregate exactly
        assert serial == parallel

    def test_summarize_aggregates_trial_means(self):
        cfg = _tiny(filter_kind="oppf", trials=2)
        recs = run_point(cfg)
        row = summarize(cfg, recs)
        per_trial = [r.mean_rmse for r in recs]
        assert row.mean_rmse == pytest.approx(np.mean(per_trial))
        assert row.std_rmse == pytest.approx(np.std(per_trial))
        assert row.failed_trials == 0
        assert row.resamp_pct == pytest.approx(
            100.0 * np.mean([r.resample_fraction for r in recs]))

    def test_summarize_with_all_failed(self):
        cfg = _tiny(filter_kind="oppf")
        recs = [MetricsRecord(trial=t, rmse=np.zeros(0), rmse_proj=np.zeros(0),
                              ess=np.zeros(0), resampled=np.zeros(0, dtype=bool),
                              failed=True, failure="x") for t in range(2)]
        row = summarize(cfg, recs)
        assert row.failed_trials == 2
        assert np.isnan(row.mean_rmse)


class TestCsvWriters:
    def test_trial_csv_layout(self, tmp_path):
        rec = MetricsRecord(trial=3, rmse=np.array([1.5, 2.5]),
                            rmse_proj=np.array([0.5, 1.0]),
                            ess=np.array([2.0, 3.0]),
                            resampled=np.array([True, False]))
        path = tmp_path / "m.csv"
        write_trial_csv(str(path), [rec], cycle_dt=0.05)
        lines = path.read_text().splitlines()
        assert lines[0] == "trial,obs_index,time,rmse,rmse_proj,ess,resampled"
        assert lines[1] == "3,1,0.05,1.5,0.5,2,1"
        assert lines[2] == "3,2,0.1,2.5,1,3,0"

    def test_summary_csv_l96_header(self, tmp_path):
        cfg = _tiny(filter_kind="oppf", trials=1, n_observations=3)
        rows = [summarize(cfg, run_point(cfg))]
        path = tmp_path / "s.csv"
        write_summary_csv(str(path), rows, cfg.model_kind)
        header = path.read_text().splitlines()[0]
        assert header == "r_p,r_d,F,Q_scale,mean_rmse,std_rmse,mean_rmse_proj,resamp_pct,failed_trials"

    def test_summary_csv_swe_header(self, tmp_path):
        cfg = default_config("swe", nx=8, ny=4, filter_kind="oppf",
                             n_particles=2, n_observations=1, trials=1,
                             burn_in=5, training_steps=5, q_scale=0.1)
        rows = [summarize(cfg, run_point(cfg))]
        path = tmp_path / "s.csv"
        write_summary_csv(str(path), rows, cfg.model_kind)
        header = path.read_text().splitlines()[0]
        assert header.split(",")[2] == "scenario"

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = _tiny(filter_kind="projoppf", reduction_kind="pod", trials=2)
        p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        write_trial_csv(p1, run_point(cfg), cycle_dt=cfg.dt * cfg.steps_per_observation)
        write_trial_csv(p2, run_point(cfg), cycle_dt=cfg.dt * cfg.steps_per_observation)
        assert open(p1, "rb").read() == open(p2, "rb").read()
