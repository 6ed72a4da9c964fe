"""Config grammar: defaults, typed keys, precise error wording, round-trip."""

import pytest

from binquant.config import (ConfigError, parse_config, parse_config_text,
                             render_config, resolve_model_spec)
from binquant.datasets import DatasetSpec, generate


class TestDefaults:
    def test_empty_text_gives_documented_defaults(self):
        cfg = parse_config_text("")
        assert cfg.train.algorithm == "median_bc"
        assert cfg.train.blend_rho == 0.0
        assert cfg.train.lr_schedule.initial == 0.025
        assert cfg.train.lr_schedule.drop_at == (800,)
        assert cfg.train.epochs == 30
        assert cfg.train.batch_size == 32
        assert cfg.train.br_gamma == 1.1
        assert cfg.data.kind == "gaussian_blobs"
        assert cfg.data.class_separation == 4.0
        assert cfg.data.seed == 11
        assert cfg.model_dims is None

    def test_comments_and_blank_lines_ignored(self):
        cfg = parse_config_text("\n# a comment\n\ntrain.epochs = 2\n")
        assert cfg.train.epochs == 2


class TestParsing:
    def test_blended_median_bc(self):
        cfg = parse_config_text(
            "train.algorithm = median_bc\ntrain.blend_rho = 1e-5\n")
        assert cfg.train.algorithm == "median_bc"
        assert cfg.train.blend_rho == 1e-5

    def test_full_grammar(self):
        cfg = parse_config_text("""
            train.algorithm = br
            train.lr_initial = 0.01
            train.lr_drop_factor = 0.5
            train.lr_drop_at = 100, 200
            train.br_gamma = 1.02
            train.br_lambda0 = 2.0
            train.br_phase2_start = 900
            train.br_lambda_every = 25
            train.br_phase2_projector = l1
            data.kind = two_spirals
            data.num_classes = 2
            data.dim = 2
            data.samples_per_class = 50
            model.layer_dims = 2, 8, 2
        """)
        assert cfg.train.lr_schedule.drop_at == (100, 200)
        assert cfg.train.br_phase2_projector == "l1"
        assert cfg.model_dims == (2, 8, 2)

    def test_file_parse(self, tmp_path):
        p = tmp_path / "a.cfg"
        p.write_text("train.seed = 9\n")
        assert parse_config(p).train.seed == 9


class TestErrors:
    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match=r"unknown key 'train.lr'"):
            parse_config_text("train.lr = 0.1")

    def test_type_error_names_line_and_key(self):
        with pytest.raises(ConfigError, match=r"line 2.*train\.blend_rho.*banana"):
            parse_config_text("train.epochs = 1\ntrain.blend_rho = banana\n")

    def test_duplicate_key_names_both_lines(self):
        with pytest.raises(ConfigError, match=r"line 3, first set at line 1"):
            parse_config_text("train.seed = 1\n\ntrain.seed = 2\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config_text("train.seed 5")

    def test_bad_choice_value(self):
        with pytest.raises(ConfigError, match="must be one of"):
            parse_config_text("data.kind = cifar10")

    def test_br_keys_require_br_algorithm(self):
        with pytest.raises(ConfigError, match="only valid when train.algorithm = br"):
            parse_config_text("train.algorithm = bc\ntrain.br_lambda0 = 2.0\n")

    def test_cross_field_validation_still_applies(self):
        with pytest.raises(Exception, match="blend_rho"):
            parse_config_text("train.blend_rho = 1.5")

    def test_model_dims_must_match_data(self):
        with pytest.raises(ConfigError, match="model.layer_dims"):
            parse_config_text("data.dim = 8\nmodel.layer_dims = 6,4,10\n")


class TestRenderRoundTrip:
    def test_semantic_round_trip(self):
        texts = [
            "",
            "train.algorithm = bc\ntrain.blend_rho = 1e-5\ntrain.seed = 3\n",
            ("train.algorithm = br\ntrain.br_gamma = 1.3\n"
             "train.br_phase2_start = 10\ndata.noise_sigma = 0.25\n"),
            "model.layer_dims = 20,16,10\ndata.samples_per_class = 7\n",
        ]
        for text in texts:
            cfg = parse_config_text(text)
            assert parse_config_text(render_config(cfg)) == cfg


class TestResolveModelSpec:
    def test_default_architecture_from_data(self):
        cfg = parse_config_text("data.num_classes = 4\ndata.dim = 7\n"
                                "data.samples_per_class = 10\n")
        train, _ = generate(cfg.data)
        spec = resolve_model_spec(cfg, train)
        assert spec.layer_dims == (7, 64, 32, 4)

    def test_explicit_dims_win(self):
        cfg = parse_config_text("data.num_classes = 4\ndata.dim = 7\n"
                                "data.samples_per_class = 10\n"
                                "model.layer_dims = 7,5,4\n")
        train, _ = generate(cfg.data)
        assert resolve_model_spec(cfg, train).layer_dims == (7, 5, 4)
