import numpy as np

from env import TaskEnv

SCENE_SIZE = np.array([2.0, 1.0])
FOV_SIZE = np.array([0.4, 0.3])
# 최대 action에서 한 step에 움직이는 FOV 중심 거리 (pan, tilt)
MAX_SHIFT = np.array([0.16, 0.11])
K_MOV = 16.0

N_LANDMARKS = 18
POSE_GRID = (7, 7)
AUDIO_GRID = (14, 8)
OBS_DIM = N_LANDMARKS * POSE_GRID[0] * POSE_GRID[1] + AUDIO_GRID[0] * AUDIO_GRID[1] + 2

# 코(0번) 기준 landmark 위치 (scene 단위, y는 위쪽이 +)
# nose, neck, r/l shoulder-elbow-wrist, r/l hip-knee-ankle, r/l eye, r/l ear
LANDMARK_OFFSETS = np.array(
    [
        [0.0, 0.0],
        [0.0, -0.06],
        [-0.05, -0.07],
        [-0.07, -0.15],
        [-0.08, -0.23],
        [0.05, -0.07],
        [0.07, -0.15],
        [0.08, -0.23],
        [-0.03, -0.25],
        [-0.03, -0.36],
        [-0.03, -0.47],
        [0.03, -0.25],
        [0.03, -0.36],
        [0.03, -0.47],
        [-0.012, 0.012],
        [0.012, 0.012],
        [-0.025, 0.005],
        [0.025, 0.005],
    ]
)


def in_fov(points, head):
    """points [..., 2] 가 head를 중심으로 한 FOV 사각형 안에 있는지"""
    return np.all(np.abs(np.asarray(points) - head) <= FOV_SIZE / 2, axis=-1)


def reward_vis(visible, timers):
    """
    FOV 안에 얼굴이 보이는 사람마다 2 - exp(-t_p)

    Args:
        visible (np.ndarray): [P] bool
        timers (np.ndarray): [P] 마지막으로 보인 뒤 지난 step 수 (한 번도 안 보였으면 inf)
    """
    visible = np.asarray(visible, dtype=bool)
    timers = np.asarray(timers, dtype=np.float64)
    return float(np.sum(2.0 - np.exp(-timers[visible])))


def reward_aud(n_speakers, n_speakers_in_fov):
    if n_speakers == 0:
        return 0.0
    if n_speakers_in_fov == 0:
        return -0.5
    return 2.0 * n_speakers_in_fov


def reward_mov(action):
    """-K_mov * ||(pan, tilt)||"""
    return -K_MOV * float(np.linalg.norm(action))


def _blob_map(points, origin, cell, shape):
    """점마다 σ = 반 칸인 Gaussian blob을 그려 칸별 최댓값을 취한 heatmap"""
    heatmap = np.zeros(shape)
    if len(points) == 0:
        return heatmap
    centers_u = np.arange(shape[0]) + 0.5
    centers_v = np.arange(shape[1]) + 0.5
    for point in points:
        u, v = (point - origin) / cell
        du = (centers_u - u) ** 2
        dv = (centers_v - v) ** 2
        blob = np.exp(-(du[:, None] + dv[None, :]) / (2 * 0.5**2))
        heatmap = np.maximum(heatmap, blob)
    return np.clip(heatmap, 0.0, 1.0)


def render_pose_heatmaps(landmarks, head):
    """
    FOV 안 landmark의 heatmap J장 (FOV 밖 landmark는 그리지 않는다)

    Args:
        landmarks (np.ndarray): [P, J, 2]
        head (np.ndarray): [2]
    Returns:
        np.ndarray: [J, 7, 7]
    """
    origin = head - FOV_SIZE / 2
    cell = FOV_SIZE / np.array(POSE_GRID)
    maps = np.zeros((N_LANDMARKS, *POSE_GRID))
    for j in range(N_LANDMARKS):
        points = landmarks[:, j]
        maps[j] = _blob_map(points[in_fov(points, head)], origin, cell, POSE_GRID)
    return maps


def render_audio_heatmap(speaker_positions):
    """scene 전체를 덮는 14x8 화자 heatmap"""
    cell = SCENE_SIZE / np.array(AUDIO_GRID)
    return _blob_map(np.asarray(speaker_positions).reshape(-1, 2), np.zeros(2), cell, AUDIO_GRID)


class GazeEnv(TaskEnv):
    """
    2x1 scene 위에서 0.4x0.3 FOV를 pan/tilt 하는 로봇 머리

    observation: [18x7x7 pose heatmap | 14x8 audio heatmap | head (x, y)] = 996
    components: (r_vis, r_aud, r_mov)
    """

    obs_dim = OBS_DIM
    action_dim = 2
    n_components = 3

    def __init__(self, task, episode_length=200, n_people=3, walk_sigma=0.01, switch_prob=0.02,
                 silence_prob=0.2):
        super().__init__(task, episode_length)
        self.n_people = n_people
        self.walk_sigma = walk_sigma
        self.switch_prob = switch_prob
        self.silence_prob = silence_prob
        self.head_low = FOV_SIZE / 2
        self.head_high = SCENE_SIZE - FOV_SIZE / 2

    @classmethod
    def from_config(cls, task, env_config):
        return cls(
            task,
            episode_length=env_config.episode_length,
            n_people=env_config.gaze_people,
            walk_sigma=env_config.gaze_walk_sigma,
            switch_prob=env_config.gaze_switch_prob,
            silence_prob=env_config.gaze_silence_prob,
        )

    @property
    def landmarks(self):
        return self.people[:, None, :] + LANDMARK_OFFSETS[None, :, :]

    @property
    def speakers(self):
        return [] if self.speaker < 0 else [self.speaker]

    def _draw_speaker(self):
        if self.n_people == 0 or self.np_random.uniform() < self.silence_prob:
            return -1
        return int(self.np_random.integers(self.n_people))

    def _reset_state(self):
        self.head = SCENE_SIZE / 2
        self.people = self.np_random.uniform(0.0, 1.0, size=(self.n_people, 2)) * SCENE_SIZE
        self.timers = np.full(self.n_people, np.inf)
        self.speaker = self._draw_speaker()

    def _observe(self):
        pose = render_pose_heatmaps(self.landmarks, self.head)
        audio = render_audio_heatmap(self.people[self.speakers])
        return np.concatenate([pose.ravel(), audio.ravel(), self.head])

    def _walk_people(self):
        if self.walk_sigma > 0:
            self.people = self.people + self.np_random.normal(
                0.0, self.walk_sigma, size=self.people.shape
            )
        # 벽에서 반사
        self.people = np.abs(self.people)
        self.people = SCENE_SIZE - np.abs(SCENE_SIZE - self.people)
        self.people = np.clip(self.people, 0.0, SCENE_SIZE)

    def _advance(self, action):
        self.head = np.clip(self.head + MAX_SHIFT * action, self.head_low, self.head_high)
        self._walk_people()
        if self.np_random.uniform() < self.switch_prob:
            self.speaker = self._draw_speaker()

        visible = in_fov(self.people, self.head)
        r_vis = reward_vis(visible, self.timers)
        self.timers = np.where(visible, 0.0, self.timers + 1.0)

        speakers = self.speakers
        r_aud = reward_aud(len(speakers), int(np.sum(visible[speakers])))
        return [r_vis, r_aud, reward_mov(action)]
