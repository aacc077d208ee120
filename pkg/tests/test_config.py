"""Tests for configuration parsing."""
import pytest

from gsqg.config import SCHEMA, ConfigError, default_config, parse_config, parse_config_text


class TestParse:
    def test_defaults_filled(self):
        cfg = parse_config_text("[model]\ngamma = 0.0\nbeta = 1.8\n")
        assert cfg.gamma == 0.0 and cfg.beta == 1.8
        assert cfg["simulate"]["N"] == SCHEMA["simulate"]["N"][1]
        assert cfg["sweep"]["Ns"] == (8, 16, 32, 64, 128)

    def test_typed_values(self):
        text = "[sweep]\nexperiment = source_scaling\nNs = 16, 32 64 128\nfigures = yes\nn = 512\n"
        s = parse_config_text(text)["sweep"]
        assert s["Ns"] == (16, 32, 64, 128) and s["figures"] is True and s["n"] == 512

    def test_echo_round_trip(self):
        cfg = parse_config_text("[model]\ngamma = -0.5\nbeta = 1.2\n[sweep]\nKs = 10, 20, 40\n")
        again = parse_config_text(cfg.echo())
        assert again.sections == cfg.sections

    def test_sweep_pairs_default_to_model(self):
        sc = parse_config_text("[model]\ngamma = 0.0\nbeta = 1.8\n").sweep_config(seed=3)
        assert sc.pairs == [(0.0, 1.8)] and sc.seed == 3

    def test_from_file(self, tmp_path):
        p = tmp_path / "run.ini"
        p.write_text("# comment\n[norms]\ns = 1, 2\n")
        assert parse_config(p)["norms"]["s"] == (1.0, 2.0)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            parse_config(tmp_path / "absent.ini")


class TestRejects:
    @pytest.mark.parametrize(
        "text, match",
        [
            ("[model]\ngamma = 0.5\nbeta = 2.6\n", "β ≥ 2\\+γ"),
            ("[model]\ngamma = 0.5\nbeta = 1.9\n", "β ≤ 3/2\\+γ"),
            ("[model]\ngamma = 1.0\n", "outside"),
            ("[model]\n\nbogus = 1\n", ":3: unknown key 'bogus'"),
            ("[plots]\nx = 1\n", "unknown section"),
            ("gamma = 0.5\n", ":1: key outside"),
            ("[model]\ngamma = 0.5\ngamma = 0.4\n", ":3: duplicate key 'gamma'"),
            ("[model]\ngamma = 0.5\n[model]\n", "duplicate section"),
            ("[model]\n# note\ngamma = half\n", ":3: bad value for model.gamma"),
            ("[sweep]\nfigures = maybe\n", "not a boolean"),
            ("[sweep]\nNs = 8, 24\n", "ratio 2"),
            ("[sweep]\nexperiment = nope\n", "experiment must be one of"),
            ("[simulate]\ninitial = gaussian\n", "simulate.initial"),
            ("[simulate]\ninitial = radial\nforcing = manufactured\n", "needs initial = pseudo"),
            ("[construct]\nseed_a0 = 0.3\nseed_a1 = 0.2\n", "seed_a0"),
            ("[model]\nthis line has no separator\n", ":2: cannot parse"),
        ],
    )
    def test_message(self, text, match):
        with pytest.raises(ConfigError, match=match):
            parse_config_text(text)

    def test_default_config_is_valid(self):
        assert default_config().source == "<defaults>"
