"""Tests for configuration loading."""

import pytest
import yaml

from colibri_sim.config import (
    AdapterKind,
    AtomicFlavor,
    ConfigError,
    CoreProgram,
    ExplorationConfig,
    ProgramKind,
    SimConfig,
    config_manager,
)


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return path


class TestLoad:
    def test_defaults_without_file(self):
        run = config_manager.load()
        assert run.sim.n_cores == 4
        assert run.sim.adapter is AdapterKind.COLIBRI
        assert run.programs == []
        assert run.verify is None

    def test_fig2(self, fig2_run):
        assert fig2_run.sim.n_cores == 2
        assert fig2_run.sim.n_banks == 1
        assert fig2_run.sim.monitor is True
        assert [p.cores for p in fig2_run.programs] == ["0", "1"]
        assert fig2_run.verify.golden_trace == "fig2.golden.trace"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            config_manager.load(tmp_path / "nope.yaml")

    def test_malformed_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("sim: [1, 2\n")
        with pytest.raises(ConfigError, match="malformed"):
            config_manager.load(path)

    def test_top_level_must_be_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError, match="mapping"):
            config_manager.load(path)

    def test_empty_file_is_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert config_manager.load(path).sim == SimConfig()

    def test_unknown_key_named(self, tmp_path):
        path = write_yaml(tmp_path / "run.yaml", {"sim": {"n_cors": 2}})
        with pytest.raises(ConfigError, match="unknown key 'sim.n_cors'"):
            config_manager.load(path)

    def test_incompatible_flavor(self, tmp_path):
        data = {
            "sim": {"adapter": "plain-lrsc"},
            "programs": [{"kind": "rmw-loop", "atomic_flavor": "colibri"}],
        }
        with pytest.raises(ConfigError, match="cannot run on adapter plain-lrsc"):
            config_manager.load(write_yaml(tmp_path / "run.yaml", data))

    def test_service_rate_fixed(self):
        with pytest.raises(ConfigError, match="bank_service_rate"):
            config_manager.validate({"sim": {"bank_service_rate": 2}})


class TestOverrides:
    def test_dotted_override(self, fig2_path):
        run = config_manager.load(fig2_path, ["sim.n_banks=2", "sim.adapter=lrscwait-ideal"])
        assert run.sim.n_banks == 2
        assert run.sim.adapter is AdapterKind.LRSCWAIT_IDEAL

    def test_override_creates_section(self):
        run = config_manager.load(None, ["verify.n_cores=3"])
        assert run.verify == ExplorationConfig(n_cores=3)

    def test_contradictory(self):
        with pytest.raises(ConfigError, match="contradictory"):
            config_manager.parse_overrides(["sim.seed=1", "sim.seed=2"])

    def test_repeated_same_value_is_fine(self):
        assert config_manager.parse_overrides(["sim.seed=1", "sim.seed=1"]) == {"sim.seed": 1}

    @pytest.mark.parametrize("item", ["sim.seed", "=3"])
    def test_malformed(self, item):
        with pytest.raises(ConfigError):
            config_manager.parse_overrides([item])

    def test_override_through_scalar(self):
        with pytest.raises(ConfigError, match="not a section"):
            config_manager.load(None, ["sim=1", "sim.seed=2"])


class TestEnvSeed:
    def test_env_wins(self, fig2_path, monkeypatch):
        monkeypatch.setenv(config_manager.ENV_SEED, "42")
        run = config_manager.load(fig2_path, ["sim.seed=7"])
        assert run.sim.seed == 42

    def test_env_must_be_int(self, monkeypatch):
        monkeypatch.setenv(config_manager.ENV_SEED, "seven")
        with pytest.raises(ConfigError, match="must be an integer"):
            config_manager.load()


class TestCoreProgram:
    @pytest.mark.parametrize(
        "selector,expected",
        [("all", [0, 1, 2, 3]), ("1-2", [1, 2]), ("0,3", [0, 3]), ("0-1,3", [0, 1, 3])],
    )
    def test_core_ids(self, selector, expected):
        assert CoreProgram(cores=selector).core_ids(4) == expected

    def test_core_ids_out_of_range(self):
        with pytest.raises(ConfigError, match="outside"):
            CoreProgram(cores="2-5").core_ids(4)

    def test_lock_flavor_rules(self):
        with pytest.raises(ValueError):
            CoreProgram(kind=ProgramKind.RMW_LOOP, atomic_flavor=AtomicFlavor.MCS_MWAIT_LOCK)
        with pytest.raises(ValueError):
            CoreProgram(kind=ProgramKind.LOCKED_CS, atomic_flavor=AtomicFlavor.AMO_ADD)

    def test_background_only_without_iterations(self):
        with pytest.raises(ValueError):
            CoreProgram(iterations=None)
        assert CoreProgram(iterations=None, background=True).iterations is None


def test_flavor_acceptance():
    assert AtomicFlavor.AMO_ADD.accepts(AdapterKind.PLAIN_LRSC)
    assert AtomicFlavor.LR_SC.accepts(AdapterKind.PLAIN_LRSC)
    assert not AtomicFlavor.LR_SC.accepts(AdapterKind.COLIBRI)
    assert AtomicFlavor.LRSC_WAIT.accepts(AdapterKind.LRSCWAIT_BOUNDED)
    assert not AtomicFlavor.MCS_MWAIT_LOCK.accepts(AdapterKind.LRSCWAIT_IDEAL)


def test_delay_choices_normalized():
    assert ExplorationConfig(delay_choices=[3, 1, 3]).delay_choices == [1, 3]
    with pytest.raises(ValueError):
        ExplorationConfig(delay_choices=[0])


def test_echo_roundtrips(fig2_run, tmp_path):
    path = config_manager.echo(fig2_run, tmp_path / "out")
    assert path.name == "resolved-config.yaml"
    assert config_manager.load(path) == fig2_run
