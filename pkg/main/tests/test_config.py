import glob
import os

import pytest

from config import ConfigError, RunConfig, apply_overrides, config_from_dict, load_config, parse_config


def test_defaults_resolve_per_environment():
    config = parse_config("[run]\nenvironment = socialnav\n")
    assert config.latent_dim == 5 and config.rbf_neurons == 5
    assert config.task_family == "convex"
    config = parse_config("[run]\nenvironment = gaze_nonlinear\n[network]\nlatent_dim = 4\n")
    assert config.latent_dim == 4 and config.task_family == "mlp"


def test_values_are_typed():
    config = parse_config(
        "[network]\nhidden_sizes = 64, 64\nlatent_dim = auto\n"
        "[meta]\ntotal_env_steps = 150_000\n[sac]\ntwin_critics = false\n"
    )
    assert config.network.hidden_sizes == (64, 64)
    assert config.network.latent_dim is None
    assert config.meta.total_env_steps == 150000
    assert config.sac.twin_critics is False


def test_unknown_key_names_path_and_line():
    with pytest.raises(ConfigError, match=r"exp\.ini:3: unknown key 'lr_decay'"):
        parse_config("[run]\nseed = 1\nlr_decay = 0.5\n", path="exp.ini")


def test_unknown_section_and_bad_value():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[optim]\nlr = 1\n")
    with pytest.raises(ConfigError, match=r"<config>:2"):
        parse_config("[meta]\nn_train_tasks = many\n")


def test_validation_runs_before_compute():
    with pytest.raises(ConfigError, match="algorithm"):
        parse_config("[run]\nalgorithm = maml\n")
    with pytest.raises(ConfigError, match="rbf_neurons"):
        parse_config("[network]\nrbf_neurons = 1\n")
    with pytest.raises(ConfigError, match="tau"):
        parse_config("[sac]\ntau = 0\n")
    with pytest.raises(ConfigError, match="n_train_tasks"):
        parse_config("[meta]\nn_train_tasks = 0\n")
    # vanilla_pearl은 RBF neuron 수를 쓰지 않는다
    assert parse_config("[run]\nalgorithm = vanilla_pearl\n[network]\nrbf_neurons = 1\n")


def test_hash_ignores_paths_and_budget():
    a = RunConfig()
    b = apply_overrides(RunConfig(), output_dir="/tmp/x", name="other", threads=4)
    b.meta.total_env_steps = 5
    assert a.config_hash() == b.config_hash()
    b.sac.lr = 1e-3
    assert a.config_hash() != b.config_hash()
    assert apply_overrides(RunConfig(), seed=9).config_hash() != a.config_hash()


def test_dict_roundtrip_keeps_hash(tmp_config_file):
    config = load_config(tmp_config_file)
    restored = config_from_dict(config.to_dict())
    assert restored.config_hash() == config.config_hash()
    assert restored.network.hidden_sizes == config.network.hidden_sizes


@pytest.fixture
def tmp_config_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[run]\nenvironment = racer\n[network]\nhidden_sizes = 32, 16\n", encoding="utf-8")
    return str(path)


def test_shipped_configs_parse():
    root = os.path.join(os.path.dirname(__file__), "..", "..", "configs")
    paths = sorted(glob.glob(os.path.join(root, "*.ini")))
    assert paths
    for path in paths:
        load_config(path)


def test_context_must_fit_in_first_collection():
    with pytest.raises(ConfigError, match="context_size 64 exceeds the 40 transitions"):
        parse_config("[meta]\ncontext_size = 64\ntrajectories_per_task = 2\n[env]\nepisode_length = 20\n")
    config = parse_config("[meta]\ncontext_size = 40\ntrajectories_per_task = 2\n[env]\nepisode_length = 20\n")
    assert config.meta.context_size == 40
