import configparser
import dataclasses
import hashlib
import json
import math
import re
from dataclasses import dataclass, field, fields
from typing import Any, Dict, Optional, Tuple


ENVIRONMENTS = ("gaze_linear", "gaze_nonlinear", "socialnav", "racer", "constant")
ALGORITHMS = ("pearl_parity", "vanilla_pearl", "rbf_pearl", "rbf_pearl_fixed")

# latent size d and RBF neurons k used when the config leaves them empty
ENV_DEFAULTS = {
    "gaze_linear": {"latent_dim": 3, "rbf_neurons": 9, "family": "convex"},
    "gaze_nonlinear": {"latent_dim": 3, "rbf_neurons": 9, "family": "mlp"},
    "socialnav": {"latent_dim": 5, "rbf_neurons": 5, "family": "convex"},
    "racer": {"latent_dim": 3, "rbf_neurons": 9, "family": "racer"},
    "constant": {"latent_dim": 2, "rbf_neurons": 3, "family": "constant"},
}


class ConfigError(ValueError):
    """설정 파일이나 하이퍼파라미터가 잘못되었을 때 발생하는 예외"""


@dataclass
class RunSection:
    environment: str = "racer"
    algorithm: str = "rbf_pearl"
    seed: int = 0
    output_dir: str = "./runs"
    name: str = "exp"
    threads: int = 1


@dataclass
class MetaRunConfig:
    n_train_tasks: int = 100
    n_test_tasks: int = 20
    adaptation_steps: int = 200
    trajectories_per_task: int = 2
    context_size: int = 64
    updates_per_iter: int = 100
    tasks_per_update: int = 8
    collect_tasks_per_iter: int = 5
    total_env_steps: int = 1_000_000
    eval_interval: int = 5
    seeds: int = 5
    buffer_capacity: int = 100_000
    recent_window: int = 100_000
    probe_tasks: int = 5


@dataclass
class NetworkConfig:
    hidden_sizes: Tuple[int, ...] = (300, 300, 300)
    encoder_hidden_sizes: Tuple[int, ...] = (200, 200, 200)
    latent_dim: Optional[int] = None
    rbf_neurons: Optional[int] = None
    rbf_interval: Tuple[float, ...] = (-5.0, 5.0)
    activation: str = "relu"


@dataclass
class SacConfig:
    lr: float = 3e-4
    encoder_lr: float = 3e-4
    gamma: float = 0.99
    tau: float = 0.005
    alpha: float = 0.2
    batch_size: int = 256
    kl_weight: float = 0.1
    twin_critics: bool = True
    log_std_min: float = -20.0
    log_std_max: float = 2.0


@dataclass
class BaselineConfig:
    n_observations: int = 200
    gradient_steps_per_obs: int = 25
    budget_checkpoints: Tuple[int, ...] = (200, 1000, 5000, 50000)


@dataclass
class EnvConfig:
    episode_length: int = 200
    gaze_people: int = 3
    gaze_walk_sigma: float = 0.01
    gaze_switch_prob: float = 0.02
    gaze_silence_prob: float = 0.2
    nav_dt: float = 0.1
    nav_collision_distance: float = 0.4
    nav_social_distance: float = 1.2
    nav_theta_threshold: float = math.pi / 3
    nav_reassign_goal: bool = True
    racer_speed: float = 0.02
    racer_turn_rate: float = 0.3
    constant_reward: float = 1.0


@dataclass
class LoggingConfig:
    tensorboard: bool = True
    wandb: bool = False
    wandb_project: str = "rbf-pearl"
    log_interval: int = 1


@dataclass
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    meta: MetaRunConfig = field(default_factory=MetaRunConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    sac: SacConfig = field(default_factory=SacConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    @property
    def latent_dim(self) -> int:
        if self.network.latent_dim is not None:
            return self.network.latent_dim
        return ENV_DEFAULTS[self.run.environment]["latent_dim"]

    @property
    def rbf_neurons(self) -> int:
        if self.network.rbf_neurons is not None:
            return self.network.rbf_neurons
        return ENV_DEFAULTS[self.run.environment]["rbf_neurons"]

    @property
    def task_family(self) -> str:
        return ENV_DEFAULTS[self.run.environment]["family"]

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def validate(self):
        """계산을 시작하기 전에 설정값의 범위를 확인한다."""
        if self.run.environment not in ENVIRONMENTS:
            raise ConfigError(
                f"environment should be one of {ENVIRONMENTS}, {self.run.environment}"
            )
        if self.run.algorithm not in ALGORITHMS:
            raise ConfigError(
                f"algorithm should be one of {ALGORITHMS}, {self.run.algorithm}"
            )
        for f in fields(self.meta):
            value = getattr(self.meta, f.name)
            minimum = 0 if f.name == "total_env_steps" else 1
            if value < minimum:
                raise ConfigError(f"[meta] {f.name} must be >= {minimum}, got {value}")
        if self.run.threads < 1:
            raise ConfigError(f"[run] threads must be >= 1, got {self.run.threads}")
        if self.latent_dim < 1:
            raise ConfigError(f"[network] latent_dim must be >= 1, got {self.latent_dim}")
        if self.run.algorithm.startswith("rbf") and self.rbf_neurons < 2:
            raise ConfigError(f"[network] rbf_neurons must be >= 2, got {self.rbf_neurons}")
        if len(self.network.rbf_interval) != 2 or not (
            self.network.rbf_interval[0] < self.network.rbf_interval[1]
        ):
            raise ConfigError("[network] rbf_interval must be lo, hi with lo < hi")
        if any(w < 1 for w in self.network.hidden_sizes + self.network.encoder_hidden_sizes):
            raise ConfigError("[network] layer widths must be >= 1")
        if not 0.0 < self.sac.tau <= 1.0:
            raise ConfigError(f"[sac] tau must lie in (0, 1], got {self.sac.tau}")
        if self.sac.alpha <= 0:
            raise ConfigError(f"[sac] alpha must be positive, got {self.sac.alpha}")
        if self.sac.batch_size < 1:
            raise ConfigError(f"[sac] batch_size must be >= 1, got {self.sac.batch_size}")
        if self.baseline.gradient_steps_per_obs < 0:
            raise ConfigError("[baseline] gradient_steps_per_obs must be >= 0")
        if self.env.episode_length < 1:
            raise ConfigError("[env] episode_length must be >= 1")
        # 첫 수집(task마다 trajectory K개)만으로 context 하나를 채울 수 있어야 한다
        first_collection = self.meta.trajectories_per_task * self.env.episode_length
        if self.meta.context_size > first_collection:
            raise ConfigError(
                f"[meta] context_size {self.meta.context_size} exceeds the "
                f"{first_collection} transitions of the first collection "
                f"(trajectories_per_task x episode_length)"
            )
        return self

    def config_hash(self) -> str:
        """재시작(resume) 시 비교할 수치 관련 설정의 해시"""
        data = self.to_dict()
        for key in ("output_dir", "name", "threads"):
            data["run"].pop(key)
        data.pop("logging")
        data["meta"].pop("total_env_steps")
        data["meta"].pop("seeds")
        payload = json.dumps(data, sort_keys=True, default=list)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _coerce(raw: str, annotation, where: str):
    """문자열 값을 dataclass 필드 타입으로 변환한다."""
    text = raw.strip()
    optional = annotation in (Optional[int], Optional[float])
    if optional:
        if text.lower() in ("", "none", "auto"):
            return None
        annotation = int if annotation == Optional[int] else float
    try:
        if annotation is bool:
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if annotation is int:
            return int(text.replace("_", ""))
        if annotation is float:
            return float(text)
        if annotation in (Tuple[int, ...], Tuple[float, ...]):
            cast = int if annotation == Tuple[int, ...] else float
            return tuple(cast(item) for item in text.split(",") if item.strip())
        return text
    except ValueError:
        raise ConfigError(f"{where}: cannot parse '{text}' as {annotation}")


def _line_numbers(text: str) -> Dict[Tuple[str, str], int]:
    lines = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        match = re.match(r"^\[(.+)\]$", stripped)
        if match:
            section = match.group(1).strip()
            lines[(section, "")] = lineno
            continue
        match = re.match(r"^([^#;=\s][^=:]*?)\s*[=:]", stripped)
        if match and section is not None:
            lines[(section, match.group(1).strip().lower())] = lineno
    return lines


def parse_config(text: str, path: str = "<config>") -> RunConfig:
    """INI 형식의 설정 문자열을 RunConfig로 변환한다.

    Args:
        text (str): 설정 파일 내용
        path (str): 에러 메시지에 표시할 파일 경로

    Returns:
        RunConfig: 검증된 설정
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=path)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}")
    lines = _line_numbers(text)

    config = RunConfig()
    sections = {f.name: f for f in fields(config)}
    for section in parser.sections():
        if section not in sections:
            raise ConfigError(
                f"{path}:{lines.get((section, ''), 0)}: unknown section [{section}]"
            )
        target = getattr(config, section)
        known = {f.name: f for f in fields(target)}
        for key, raw in parser.items(section, raw=True):
            where = f"{path}:{lines.get((section, key), 0)}"
            if key not in known:
                raise ConfigError(f"{where}: unknown key '{key}' in section [{section}]")
            setattr(target, key, _coerce(raw, known[key].type, where))
    try:
        return config.validate()
    except ConfigError as e:
        raise ConfigError(f"{path}: {e}")


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read(), path=str(path))


def config_from_dict(data: Dict[str, Any]) -> RunConfig:
    """config.json 또는 체크포인트에 저장된 dict로부터 RunConfig를 복원한다."""
    config = RunConfig()
    for section, values in data.items():
        target = getattr(config, section)
        for f in fields(target):
            if f.name not in values:
                continue
            value = values[f.name]
            if isinstance(value, list):
                value = tuple(value)
            setattr(target, f.name, value)
    return config.validate()


def apply_overrides(config, seed=None, output_dir=None, name=None, threads=None):
    """커맨드 라인 인자로 [run] 섹션 값을 덮어쓴다."""
    if seed is not None:
        config.run.seed = seed
    if output_dir is not None:
        config.run.output_dir = output_dir
    if name is not None:
        config.run.name = name
    if threads is not None:
        config.run.threads = threads
    return config.validate()
