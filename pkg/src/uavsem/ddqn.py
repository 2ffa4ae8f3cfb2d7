"""Double DQN agent in plain numpy.

The Q-network is a rectifier MLP with hand-written backpropagation and an
Adam optimiser. The online network picks the greedy next action and the
target network scores it.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from typing import Callable, Optional

import numpy as np

from .config import ScenarioConfig, TrainConfig, config_from_dict, config_to_dict

CHECKPOINT_MAGIC = b"UAVDDQN\x00"
CHECKPOINT_VERSION = 1


class QNetwork:
    """Fully connected network: rectifier hidden layers, linear output."""

    def __init__(self, dims, rng: Optional[np.random.Generator] = None, dtype=np.float64):
        self.dims = tuple(int(d) for d in dims)
        if len(self.dims) < 2:
            raise ValueError("need at least input and output widths")
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng() if rng is None else rng
        shapes = []
        for fan_in, fan_out in zip(self.dims[:-1], self.dims[1:]):
            shapes += [(fan_in, fan_out), (fan_out,)]
        # every parameter is a view into one flat vector
        self.flat = np.zeros(sum(int(np.prod(sh)) for sh in shapes), dtype=self.dtype)
        self.params, pos = [], 0
        for sh in shapes:
            n = int(np.prod(sh))
            self.params.append(self.flat[pos: pos + n].reshape(sh))
            pos += n
        for k in range(self.n_layers):
            bound = np.sqrt(6.0 / self.dims[k])
            W = self.params[2 * k]
            W[...] = rng.uniform(-bound, bound, size=W.shape)

    @property
    def n_layers(self) -> int:
        return len(self.dims) - 1

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_cache(x)[0]

    def forward_cache(self, x: np.ndarray):
        x = np.asarray(x, dtype=self.dtype)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.shape[1] != self.dims[0]:
            raise ValueError(f"input width {h.shape[1]} != {self.dims[0]}")
        acts = [h]
        for k in range(self.n_layers):
            z = h @ self.params[2 * k] + self.params[2 * k + 1]
            h = np.maximum(z, 0.0) if k < self.n_layers - 1 else z
            acts.append(h)
        out = h[0] if single else h
        return out, acts

    def backward(self, acts, dout: np.ndarray) -> list:
        """Parameter gradients given dLoss/dOutput for a cached batch."""
        grads = [None] * len(self.params)
        delta = dout
        for k in reversed(range(self.n_layers)):
            h_in = acts[k]
            grads[2 * k] = h_in.T @ delta
            grads[2 * k + 1] = delta.sum(axis=0)
            if k:
                delta = (delta @ self.params[2 * k].T) * (acts[k] > 0)
        return grads

    def copy(self) -> "QNetwork":
        twin = QNetwork.__new__(QNetwork)
        twin.dims, twin.dtype = self.dims, self.dtype
        twin.flat = self.flat.copy()
        twin.params, pos = [], 0
        for p in self.params:
            twin.params.append(twin.flat[pos: pos + p.size].reshape(p.shape))
            pos += p.size
        return twin

    def load_params(self, other: "QNetwork") -> None:
        if other.dims != self.dims:
            raise ValueError(f"architecture mismatch {other.dims} vs {self.dims}")
        self.flat[...] = other.flat


def forward(net: QNetwork, s: np.ndarray) -> np.ndarray:
    return net.forward(s)


class Adam:
    def __init__(self, params, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        step_size = self.lr / (1.0 - b1**self.t)
        inv_sqrt_c2 = 1.0 / np.sqrt(1.0 - b2**self.t)
        for p, g, m, v in zip(params, grads, self.m, self.v):
            tmp = np.multiply(g, 1.0 - b1)
            m *= b1
            m += tmp
            np.multiply(g, g, out=tmp)
            tmp *= 1.0 - b2
            v *= b2
            v += tmp
            np.sqrt(v, out=tmp)
            tmp *= inv_sqrt_c2
            tmp += self.eps
            np.divide(m, tmp, out=tmp)
            tmp *= step_size
            p -= tmp


def clip_global_norm(grads, max_norm: Optional[float]) -> float:
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if max_norm is not None and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for g in grads:
            g *= scale
    return norm


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform sampling."""

    def __init__(self, capacity: int, state_dim: int, dtype=np.float64):
        self.capacity = int(capacity)
        self.s = np.zeros((self.capacity, state_dim), dtype=dtype)
        self.s2 = np.zeros((self.capacity, state_dim), dtype=dtype)
        self.a = np.zeros(self.capacity, dtype=np.int64)
        self.r = np.zeros(self.capacity, dtype=np.float64)
        self.done = np.zeros(self.capacity, dtype=np.bool_)
        self.ptr = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, s, a, r, s2, done) -> None:
        if not np.isfinite(r):
            raise ValueError("reward must be finite")
        i = self.ptr
        self.s[i], self.a[i], self.r[i], self.s2[i], self.done[i] = s, a, r, s2, done
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return self.s[idx], self.a[idx], self.r[idx], self.s2[idx], self.done[idx]

    def contents(self):
        """Stored records oldest first."""
        if self.size < self.capacity:
            order = np.arange(self.size)
        else:
            order = (np.arange(self.capacity) + self.ptr) % self.capacity
        return self.s[order], self.a[order], self.r[order], self.s2[order], self.done[order]


def ddqn_target(batch, online: QNetwork, target: QNetwork, gamma: float) -> np.ndarray:
    """r + gamma * Q_target(s', argmax_a Q_online(s', a)), or r at terminal."""
    _, _, r, s2, done = batch
    q_online = online.forward(s2)
    best = np.argmax(q_online, axis=1)
    q_eval = target.forward(s2)[np.arange(len(best)), best]
    return r + gamma * np.where(done, 0.0, q_eval)


def select_action(net: QNetwork, s, epsilon: float, rng: np.random.Generator) -> int:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    n = net.dims[-1]
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(n))
    # np.argmax returns the first maximum, i.e. the lowest index on ties
    return int(np.argmax(net.forward(s)))


def sync_target(online: QNetwork, target: QNetwork) -> QNetwork:
    target.load_params(online)
    return target


def td_loss_and_grads(online: QNetwork, batch, y: np.ndarray):
    s, a, _, _, _ = batch
    q, acts = online.forward_cache(s)
    rows = np.arange(len(a))
    err = q[rows, a] - y.astype(q.dtype, copy=False)
    loss = float(np.mean(err**2))
    dout = np.zeros_like(q)
    dout[rows, a] = 2.0 * err / len(a)
    return loss, online.backward(acts, dout)


class DDQNAgent:
    def __init__(self, state_dim: int, n_actions: int, cfg: TrainConfig, seed: int = 0, dtype=np.float64):
        self.cfg = cfg
        self.seed = int(seed)
        self.rng = np.random.default_rng(seed)
        dims = (state_dim, *cfg.hidden, n_actions)
        self.online = QNetwork(dims, self.rng, dtype)
        self.target = self.online.copy()
        self.opt = Adam([self.online.flat], cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        self.buffer = ReplayBuffer(cfg.buffer_capacity, state_dim, dtype)
        self.env_steps = 0
        self.grad_steps = 0
        self.episodes_done = 0
        self.total_steps = None
        # parameters with the best greedy evaluation return seen so far
        self.best_flat = None
        self.best_return = None
        self.best_episode = None
        self.best_key = None

    @property
    def n_actions(self) -> int:
        return self.online.dims[-1]

    def epsilon(self) -> float:
        c = self.cfg
        if not self.total_steps:
            return c.eps_end
        horizon = c.eps_decay_fraction * self.total_steps
        if horizon <= 0:
            return c.eps_end
        frac = min(self.env_steps / horizon, 1.0)
        return c.eps_start + frac * (c.eps_end - c.eps_start)

    def act(self, s, epsilon: Optional[float] = None) -> int:
        eps = self.epsilon() if epsilon is None else epsilon
        return select_action(self.online, s, eps, self.rng)

    def greedy(self, s) -> int:
        return int(np.argmax(self.online.forward(s)))

    def policy_network(self) -> QNetwork:
        """Network used for deployment: the best evaluated one if tracked."""
        if self.best_flat is None:
            return self.online
        net = self.online.copy()
        net.flat[...] = self.best_flat
        return net

    def policy(self):
        net = self.policy_network()
        return lambda s: int(np.argmax(net.forward(s)))

    def remember(self, s, a, r, s2, done) -> None:
        self.buffer.push(s, a, r * self.cfg.reward_scale, s2, done)

    def train_step(self) -> float:
        if len(self.buffer) < self.cfg.warmup:
            raise RuntimeError("replay buffer below warmup size")
        batch = self.buffer.sample(self.cfg.batch_size, self.rng)
        y = ddqn_target(batch, self.online, self.target, self.cfg.gamma)
        loss, grads = td_loss_and_grads(self.online, batch, y)
        g = np.concatenate([gr.ravel() for gr in grads])
        clip_global_norm([g], self.cfg.max_grad_norm)
        self.opt.step([self.online.flat], [g])
        self.grad_steps += 1
        if self.grad_steps % self.cfg.target_sync_interval == 0:
            sync_target(self.online, self.target)
        return loss

    # -- checkpointing -----------------------------------------------------
    def _arrays(self) -> dict:
        arrays = {}
        for i, p in enumerate(self.online.params):
            arrays[f"online.{i}"] = p
        for i, p in enumerate(self.target.params):
            arrays[f"target.{i}"] = p
        arrays["adam_m"] = self.opt.m[0]
        arrays["adam_v"] = self.opt.v[0]
        n = self.buffer.size
        arrays["replay.s"] = self.buffer.s[:n]
        arrays["replay.a"] = self.buffer.a[:n]
        arrays["replay.r"] = self.buffer.r[:n]
        arrays["replay.s2"] = self.buffer.s2[:n]
        arrays["replay.done"] = self.buffer.done[:n].astype(np.uint8)
        if self.best_flat is not None:
            arrays["best"] = self.best_flat
        return arrays

    def save(self, path, scenario: Optional[ScenarioConfig] = None, extra: Optional[dict] = None) -> None:
        header = {
            "format_version": CHECKPOINT_VERSION,
            "dims": list(self.online.dims),
            "dtype": self.online.dtype.name,
            "seed": self.seed,
            "train_config": _jsonable(asdict(self.cfg)),
            "scenario": config_to_dict(scenario) if scenario is not None else None,
            "counters": {
                "env_steps": self.env_steps,
                "grad_steps": self.grad_steps,
                "episodes_done": self.episodes_done,
                "adam_t": self.opt.t,
                "total_steps": self.total_steps,
                "replay_ptr": self.buffer.ptr,
                "replay_size": self.buffer.size,
                "best_return": self.best_return,
                "best_key": self.best_key,
                "best_episode": self.best_episode,
            },
            "rng_state": self.rng.bit_generator.state,
            "extra": extra or {},
            "arrays": [],
        }
        blobs, offset = [], 0
        for name, arr in self._arrays().items():
            dt = np.dtype(arr.dtype).newbyteorder("<")
            raw = np.ascontiguousarray(arr, dtype=dt).tobytes()
            header["arrays"].append(
                {"name": name, "dtype": dt.str, "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)}
            )
            blobs.append(raw)
            offset += len(raw)
        hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
        with open(path, "wb") as fh:
            fh.write(CHECKPOINT_MAGIC)
            fh.write(struct.pack("<HQ", CHECKPOINT_VERSION, len(hbytes)))
            fh.write(hbytes)
            for raw in blobs:
                fh.write(raw)

    @classmethod
    def load(cls, path) -> "DDQNAgent":
        header, arrays = read_checkpoint(path)
        tc = dict(header["train_config"])
        cfg = TrainConfig(**tc)
        dims = header["dims"]
        agent = cls(dims[0], dims[-1], cfg, seed=header["seed"], dtype=np.dtype(header["dtype"]))
        if tuple(dims) != agent.online.dims:
            raise ValueError("checkpoint layer widths disagree with its train config")
        for i, p in enumerate(agent.online.params):
            p[...] = arrays[f"online.{i}"]
        for i, p in enumerate(agent.target.params):
            p[...] = arrays[f"target.{i}"]
        agent.opt.m[0][...] = arrays["adam_m"]
        agent.opt.v[0][...] = arrays["adam_v"]
        c = header["counters"]
        agent.opt.t = c["adam_t"]
        agent.env_steps, agent.grad_steps = c["env_steps"], c["grad_steps"]
        agent.episodes_done, agent.total_steps = c["episodes_done"], c["total_steps"]
        n = c["replay_size"]
        buf = agent.buffer
        buf.s[:n], buf.a[:n], buf.r[:n] = arrays["replay.s"], arrays["replay.a"], arrays["replay.r"]
        buf.s2[:n], buf.done[:n] = arrays["replay.s2"], arrays["replay.done"].astype(bool)
        buf.size, buf.ptr = n, c["replay_ptr"]
        if "best" in arrays:
            agent.best_flat = arrays["best"].astype(agent.online.dtype)
            agent.best_return, agent.best_episode = c["best_return"], c["best_episode"]
            agent.best_key = c.get("best_key")
        agent.rng.bit_generator.state = header["rng_state"]
        agent.header = header
        return agent

    def scenario(self) -> Optional[ScenarioConfig]:
        sc = getattr(self, "header", {}).get("scenario")
        return config_from_dict(sc) if sc else None


def _jsonable(obj):
    if isinstance(obj, tuple):
        return [_jsonable(o) for o in obj]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    return obj


def read_checkpoint(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path} is not a DDQN checkpoint")
    pos = len(CHECKPOINT_MAGIC)
    version, hlen = struct.unpack_from("<HQ", data, pos)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    pos += struct.calcsize("<HQ")
    header = json.loads(data[pos: pos + hlen])
    base = pos + hlen
    arrays = {}
    for entry in header["arrays"]:
        start = base + entry["offset"]
        raw = data[start: start + entry["nbytes"]]
        arrays[entry["name"]] = np.frombuffer(raw, dtype=np.dtype(entry["dtype"])).reshape(entry["shape"]).copy()
    return header, arrays


def train(
    env,
    agent: DDQNAgent,
    episodes: Optional[int] = None,
    stop_after: Optional[int] = None,
    on_episode: Optional[Callable[[dict], None]] = None,
) -> list:
    """Run epsilon-greedy training episodes until ``episodes`` have completed.

    ``stop_after`` halts early after that many additional episodes so a run
    can be checkpointed and resumed; the exploration schedule always spans the
    full ``episodes`` budget. Every ``eval_interval`` episodes a greedy episode
    is rolled out and the best parameters are kept in ``agent.best_flat``,
    ranked by goal reached, then mean all-device PSNR, then return. Returns
    one learning-curve row per episode.
    """
    episodes = agent.cfg.episodes if episodes is None else episodes
    agent.total_steps = episodes * env.cfg.horizon
    curve = []
    run = 0
    while agent.episodes_done < episodes and (stop_after is None or run < stop_after):
        s = env.reset()
        done, ep_return, losses = False, 0.0, []
        while not done:
            eps = agent.epsilon()
            a = agent.act(s, eps)
            s2, r, done = env.step(a)
            agent.remember(s, a, r.total, s2, done)
            agent.env_steps += 1
            ep_return += r.total
            if len(agent.buffer) >= agent.cfg.warmup and agent.env_steps % agent.cfg.train_every == 0:
                losses.append(agent.train_step())
            s = s2
        agent.episodes_done += 1
        run += 1
        out = env.outcome()
        row = {
            "episode": agent.episodes_done,
            "return": ep_return,
            "slots": out.slots,
            "epsilon": eps,
            "loss": float(np.mean(losses)) if losses else float("nan"),
            "visited": out.visited_count,
            "mean_psnr_all": out.mean_psnr_all,
            "mean_psnr_visited": out.mean_psnr_visited,
            "reached_goal": int(out.reached_goal),
        }
        k = agent.cfg.eval_interval
        if k and agent.episodes_done % k == 0:
            ev = env.rollout(agent.greedy)
            row["eval_return"] = ev.total_return
            row["eval_mean_psnr_all"] = ev.mean_psnr_all
            row["eval_reached_goal"] = int(ev.reached_goal)
            key = [int(ev.reached_goal), ev.mean_psnr_all, ev.total_return]
            if agent.best_key is None or key > agent.best_key:
                agent.best_flat = agent.online.flat.copy()
                agent.best_key = key
                agent.best_return = ev.total_return
                agent.best_episode = agent.episodes_done
        curve.append(row)
        if on_episode is not None:
            on_episode(row)
    return curve


def evaluate(env, agent: DDQNAgent, seed=None):
    """One greedy (epsilon = 0) episode with the deployment network."""
    return env.rollout(agent.policy(), seed)
