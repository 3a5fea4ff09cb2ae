"""
Run configuration: profiles, files, overrides and sweeps.
"""
import pytest

from src.app.exceptions import ConfigError
from src.app.services.config_service import (
    apply_overrides,
    config_hash,
    dump_ini,
    dump_json,
    load_config,
    parse_config_text,
    sweep_configs,
    write_config,
)
from src.models.variant import ModelVariant, Prediction, XiKind


class TestProfiles:

    def test_desk_defaults(self):
        cfg = load_config(profile="desk")
        assert cfg.optimizer.max_steps == 20000
        assert cfg.optimizer.lr == 1e-3
        assert cfg.optimizer.batch_size == 1024
        assert cfg.optimizer.clip_norm == 1.0
        assert cfg.schedule.T == 200
        assert cfg.model.hidden_dims == (256, 512, 1024, 512, 256)
        assert cfg.seeds == [0, 1, 2]

    def test_paper_profile(self):
        cfg = load_config(profile="paper")
        assert cfg.optimizer.max_steps == 200000
        assert len(cfg.seeds) == 6

    def test_unknown_profile(self):
        with pytest.raises(ConfigError):
            load_config(profile="cluster")


class TestVariantDefaults:

    def test_proposed_implies_balanced_correlated(self):
        cfg = load_config(overrides=["model.variant=proposed", "xi.sigma_c_sq=0.5"])
        assert cfg.schedule.balanced
        assert cfg.xi.kind == XiKind.CORRELATED_GAUSSIAN
        assert cfg.xi_spec().dim == cfg.dataset.dim
        assert cfg.sampler.variant == ModelVariant.PROPOSED

    def test_zero_snr_implies_v_prediction(self):
        cfg = load_config(overrides=["model.variant=zero_snr"])
        assert cfg.model.prediction == Prediction.V
        assert cfg.schedule.zero_snr
        assert cfg.sampler.prediction == Prediction.V

    def test_zero_snr_with_eps_rejected(self):
        with pytest.raises(ConfigError):
            load_config(overrides=["model.variant=zero_snr", "model.prediction=eps"])

    def test_balanced_base_rejected(self):
        with pytest.raises(ConfigError):
            load_config(overrides=["schedule.balanced=true"])

    def test_offset_sigma0_fixed(self):
        with pytest.raises(ConfigError):
            load_config(overrides=["model.variant=offset", "model.sigma0=2.0"])

    @pytest.mark.parametrize("sigma_c_sq", ["0.01", "0.05", "0.1", "0.5", "1.0"])
    def test_sigma_c_grid_accepted(self, sigma_c_sq):
        cfg = load_config(overrides=["model.variant=offset", f"xi.sigma_c_sq={sigma_c_sq}"])
        assert cfg.sigma_c_sq == float(sigma_c_sq)

    @pytest.mark.parametrize("variant", ["offset", "proposed"])
    def test_zero_variance_rejected(self, variant):
        with pytest.raises(ConfigError):
            load_config(overrides=[f"model.variant={variant}"])

    def test_negative_variance_rejected(self):
        with pytest.raises(ConfigError):
            load_config(overrides=["model.variant=offset", "xi.sigma_c_sq=-0.1"])


class TestOverrides:

    def test_nested_and_top_level(self):
        data = apply_overrides({}, ["optimizer.lr=0.01", "scaling_rho=0.9"])
        assert data == {"optimizer": {"lr": "0.01"}, "scaling_rho": "0.9"}

    def test_hidden_dims_list(self):
        cfg = load_config(overrides=["model.hidden_dims=16,16"])
        assert cfg.model.hidden_dims == (16, 16)

    @pytest.mark.parametrize("item", ["optimizer.lr", "nope.key=1", "a.b.c=1", "unknown=1", "=3"])
    def test_bad_override(self, item):
        with pytest.raises(ConfigError):
            apply_overrides({}, [item])

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigError):
            load_config(overrides=["optimizer.momentum=0.5"])


class TestSerialization:

    def test_ini_round_trip(self):
        cfg = load_config(overrides=["model.variant=proposed", "xi.sigma_c_sq=0.5", "dataset.dim=50"])
        assert parse_config_text(dump_ini(cfg), "ini") == cfg

    def test_json_round_trip(self):
        cfg = load_config(overrides=["model.variant=zero_snr", "scaling_rho=1.2"])
        assert parse_config_text(dump_json(cfg), "json") == cfg

    @pytest.mark.parametrize("name", ["run.ini", "run.json"])
    def test_file_round_trip(self, tmp_path, name):
        cfg = load_config(overrides=["optimizer.max_steps=10", "seeds=4,5"])
        path = write_config(cfg, tmp_path / name)
        assert load_config(path) == cfg

    def test_bad_ini_section(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[network]\nwidth = 3\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)


class TestHashAndSweep:

    def test_hash_stable(self):
        assert config_hash(load_config()) == config_hash(load_config())
        assert len(config_hash(load_config())) == 16

    def test_hash_sensitive(self):
        assert config_hash(load_config()) != config_hash(load_config(overrides=["optimizer.lr=0.002"]))

    def test_desk_sweep(self):
        configs = sweep_configs(load_config(profile="desk"))
        assert len(configs) == 33
        assert len({config_hash(c) for c in configs}) == 33
        assert {c.dataset.dim for c in configs} == {2, 50, 200}
        zero_snr = [c for c in configs if c.model.variant == ModelVariant.ZERO_SNR]
        assert all(c.model.prediction == Prediction.V for c in zero_snr)
        assert {c.dataset.seed for c in configs} == {0, 1, 2}
        assert all(c.sampler.seed == c.master_seed == c.dataset.seed for c in configs)
