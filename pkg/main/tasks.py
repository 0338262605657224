import json
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

TASK_FAMILIES = ("convex", "mlp", "racer", "constant")

# 학습 / 테스트 task seed 범위 (서로 겹치지 않는다)
TRAIN_SEED_START = 0
TEST_SEED_START = 1000

REWARD_NET_DEPTHS = (1, 2, 3)
REWARD_NET_WIDTHS = (4, 5, 6)
SIGMOID_PROBABILITY = 0.75


@dataclass
class ConvexWeights:
    """reward component들의 convex combination 가중치 ω^τ (합이 1)"""

    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 1 or len(self.w) == 0:
            raise ValueError("convex weights must be a non-empty vector")
        if (self.w < 0).any() or (self.w > 1).any() or abs(self.w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights {self.w} do not lie on the simplex")

    @property
    def label(self):
        # 동률이면 앞쪽 component
        return int(np.argmax(self.w))


@dataclass
class RewardNetSpec:
    """
    무작위 MLP reward 함수 f^τ

    Attributes:
        weights (List[np.ndarray]): layer별 [out, in] 가중치, 마지막 layer는 출력 1
        biases (List[np.ndarray]): layer별 [out] bias
        activation (str): hidden layer activation (none / sigmoid)
    """

    weights: List[np.ndarray]
    biases: List[np.ndarray]
    activation: str

    @property
    def n_layers(self):
        return len(self.weights) - 1

    @property
    def widths(self):
        return [w.shape[0] for w in self.weights[:-1]]

    @property
    def in_features(self):
        return self.weights[0].shape[1]

    def __call__(self, x):
        h = np.asarray(x, dtype=np.float64)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = w @ h + b
            if i < len(self.weights) - 1 and self.activation == "sigmoid":
                h = 1.0 / (1.0 + np.exp(-h))
        return float(h[0])


@dataclass
class RacerGaussian:
    mu: float
    sigma: float


@dataclass
class RacerTask:
    """marker k마다 n_k ∈ {1, 2}개의 Gaussian (μ, σ)"""

    gaussians: List[List[RacerGaussian]]


@dataclass
class TaskSpec:
    """하나의 task τ: seed와 그 seed로 샘플링된 reward 함수"""

    family: str
    seed: int
    task_id: int = 0
    weights: Optional[ConvexWeights] = None
    net: Optional[RewardNetSpec] = None
    racer: Optional[RacerTask] = None
    constant: float = 1.0

    @property
    def label(self):
        """scatter plot용 대표 component (convex family만 정의, 그 외 -1)"""
        return self.weights.label if self.weights is not None else -1

    def evaluate(self, components):
        return evaluate_task_reward(self, components)

    def to_dict(self):
        data = {"family": self.family, "seed": self.seed, "task_id": self.task_id}
        if self.weights is not None:
            data["weights"] = self.weights.w.tolist()
        if self.net is not None:
            data["net"] = {
                "activation": self.net.activation,
                "weights": [w.tolist() for w in self.net.weights],
                "biases": [b.tolist() for b in self.net.biases],
            }
        if self.racer is not None:
            data["racer"] = [
                [{"mu": g.mu, "sigma": g.sigma} for g in marker] for marker in self.racer.gaussians
            ]
        if self.family == "constant":
            data["constant"] = self.constant
        return data

    @classmethod
    def from_dict(cls, data):
        task = cls(family=data["family"], seed=data["seed"], task_id=data.get("task_id", 0))
        if "weights" in data:
            task.weights = ConvexWeights(np.array(data["weights"]))
        if "net" in data:
            net = data["net"]
            task.net = RewardNetSpec(
                weights=[np.array(w) for w in net["weights"]],
                biases=[np.array(b) for b in net["biases"]],
                activation=net["activation"],
            )
        if "racer" in data:
            task.racer = RacerTask(
                [[RacerGaussian(g["mu"], g["sigma"]) for g in marker] for marker in data["racer"]]
            )
        if "constant" in data:
            task.constant = data["constant"]
        return task


def sample_convex_weights(m, rng):
    """(m-1)-simplex에서 uniform하게 샘플링 (정렬된 uniform 값들의 간격)"""
    if m < 1:
        raise ValueError(f"number of reward components must be >= 1, got {m}")
    cuts = np.sort(rng.uniform(0.0, 1.0, size=m - 1))
    w = np.diff(np.concatenate([[0.0], cuts, [1.0]]))
    # 부동소수점 오차로 합이 1에서 벗어나지 않도록 마지막 원소로 맞춘다
    w[-1] = 1.0 - w[:-1].sum()
    return ConvexWeights(np.clip(w, 0.0, 1.0))


def sample_reward_net(rng, in_features=3):
    """
    depth ~ U{1..3}, layer별 width ~ U{4..6}, activation은 0.75 확률로 sigmoid,
    가중치/bias ~ U(-1, 1)
    """
    depth = int(rng.choice(REWARD_NET_DEPTHS))
    widths = [int(rng.choice(REWARD_NET_WIDTHS)) for _ in range(depth)]
    activation = "sigmoid" if rng.uniform() < SIGMOID_PROBABILITY else "none"
    sizes = [in_features, *widths, 1]
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.uniform(-1.0, 1.0, size=(n_out, n_in)))
        biases.append(rng.uniform(-1.0, 1.0, size=n_out))
    return RewardNetSpec(weights, biases, activation)


def racer_sample_task(seed, n_markers=3):
    """n_k ~ U{1, 2}, μ ~ U(0, 0.7), σ ~ U(0.001, 0.01)"""
    rng = np.random.default_rng(seed)
    gaussians = []
    for _ in range(n_markers):
        n_k = int(rng.integers(1, 3))
        gaussians.append(
            [
                RacerGaussian(float(rng.uniform(0.0, 0.7)), float(rng.uniform(0.001, 0.01)))
                for _ in range(n_k)
            ]
        )
    return RacerTask(gaussians)


def racer_reward_component(d, task, k):
    """r_k(d) = max_j exp(-(d - μ_kj)^2 / σ_kj), σ는 제곱하지 않는다."""
    return max(float(np.exp(-((d - g.mu) ** 2) / g.sigma)) for g in task.gaussians[k])


def racer_total_reward(components):
    return float(np.mean(components))


def evaluate_task_reward(task, components):
    """
    environment가 내놓은 reward component 벡터를 task의 scalar reward로 바꾼다.

    Args:
        task (TaskSpec): convex / mlp / racer / constant
        components (np.ndarray): [m]

    Returns:
        float: R^τ
    """
    components = np.asarray(components, dtype=np.float64)
    if task.family == "constant":
        return float(task.constant)
    if task.family == "convex":
        if len(components) != len(task.weights.w):
            raise ValueError(
                f"task expects {len(task.weights.w)} reward components, got {len(components)}"
            )
        return float(task.weights.w @ components)
    if task.family == "mlp":
        if len(components) != task.net.in_features:
            raise ValueError(
                f"task expects {task.net.in_features} reward components, got {len(components)}"
            )
        return task.net(components)
    if task.family == "racer":
        if len(components) != len(task.racer.gaussians):
            raise ValueError(
                f"task expects {len(task.racer.gaussians)} reward components, got {len(components)}"
            )
        # racer component는 environment에서 이미 r_k(d_k)로 계산되어 있다
        return racer_total_reward(components)
    raise RuntimeError("Unknown task family (%s)" % task.family)


def make_task(family, seed, task_id=0, n_components=3, constant=1.0):
    rng = np.random.default_rng(seed)
    task = TaskSpec(family=family, seed=seed, task_id=task_id, constant=constant)
    if family == "convex":
        task.weights = sample_convex_weights(n_components, rng)
    elif family == "mlp":
        task.net = sample_reward_net(rng, n_components)
    elif family == "racer":
        task.racer = racer_sample_task(seed, n_components)
    elif family != "constant":
        raise RuntimeError("Unknown task family (%s)" % family)
    return task


def make_task_set(family, n_tasks, split="train", n_components=3, constant=1.0):
    """
    학습(seed 0..n-1) 또는 테스트(seed 1000..) task 집합을 만든다.

    Returns:
        List[TaskSpec]: task_id는 집합 안에서의 순번
    """
    start = TRAIN_SEED_START if split == "train" else TEST_SEED_START
    if split == "train" and n_tasks > TEST_SEED_START - TRAIN_SEED_START:
        raise ValueError(f"at most {TEST_SEED_START} training tasks keep the seed ranges disjoint")
    return [
        make_task(family, start + i, task_id=i, n_components=n_components, constant=constant)
        for i in range(n_tasks)
    ]


def save_task_manifest(tasks, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump([task.to_dict() for task in tasks], f, ensure_ascii=False, indent=4)


def load_task_manifest(path):
    with open(path, "r", encoding="utf-8") as f:
        return [TaskSpec.from_dict(data) for data in json.load(f)]
