"""Alternating block gradient descent over ``(V, W)``.

Each outer iteration runs two inner loops: fixed-step descent on ``V`` with
``W`` frozen until one step improves the objective by at most ``epsilon``,
then the same on ``W``. Outer iterations stop when the relative objective
change falls below ``outer_tol``.
"""
from __future__ import annotations

import enum
import io
import json
import logging
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from .data import PairedDataset, ZScoreStats, read_matrix_binary, write_matrix_binary
from .objective import Hyperparams, ProjectionPair, Task, TaskObjective

logger = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 1e3
MAX_HALVINGS = 60


class StopReason(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    STEP_REJECTED = "step_rejected"


@dataclass(frozen=True)
class TrainConfig:
    hp: Hyperparams = Hyperparams()
    mu: float = 0.02
    epsilon: float = 1e-4
    max_outer_iter: int = 100
    max_inner_iter: int = 500
    init: str = "zeros"
    init_scale: float = 0.01
    seed: int = 0
    outer_tol: float = 1e-6
    step_halving: bool = False

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_outer_iter < 1:
            raise ValueError(f"max_outer_iter must be >= 1, got {self.max_outer_iter}")
        if self.max_inner_iter < 1:
            raise ValueError(f"max_inner_iter must be >= 1, got {self.max_inner_iter}")
        if self.init not in ("zeros", "gaussian"):
            raise ValueError(f"init must be 'zeros' or 'gaussian', got {self.init!r}")
        if self.outer_tol < 0:
            raise ValueError("outer_tol must be nonnegative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hp"] = asdict(self.hp)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["hp"] = Hyperparams(**d.get("hp", {}))
        return cls(**d)


PRESETS = ("wikipedia-public", "pascal-sentence", "inria-websearch", "custom")


def default_config(task, dataset: str = "custom") -> TrainConfig:
    """Published hyperparameters per dataset and task.

    Only the public-feature Wikipedia setting distinguishes the tasks
    (lambda 0.1 for i2t). Every other combination, including the unified
    model, uses lambda = eta1 = eta2 = 0.5. mu = 0.02 and epsilon = 1e-4 always.
    """
    task = Task.parse(task)
    key = dataset.lower().replace("_", "-")
    aliases = {"wikipedia": "wikipedia-public", "pascalsentence": "pascal-sentence",
               "inriawebsearch": "inria-websearch", "pascal": "pascal-sentence", "inria": "inria-websearch"}
    key = aliases.get(key, key)
    if key not in PRESETS:
        raise ValueError(f"unknown dataset preset {dataset!r}; expected one of {', '.join(PRESETS)}")
    lam = 0.1 if (key == "wikipedia-public" and task is Task.I2T) else 0.5
    return TrainConfig(hp=Hyperparams(lam=lam, eta1=0.5, eta2=0.5), mu=0.02, epsilon=1e-4)


@dataclass
class TraceEntry:
    outer: int
    block: str
    inner: int
    value: float


@dataclass
class TrainReport:
    pair: ProjectionPair
    trace: List[TraceEntry]
    stop_reason: StopReason
    outer_iters: int
    message: str = ""
    step_sizes: dict = field(default_factory=dict)

    @property
    def final_objective(self) -> float:
        return self.trace[-1].value

    @property
    def initial_objective(self) -> float:
        return self.trace[0].value

    def trace_csv(self) -> str:
        lines = ["outer,block,inner,objective"]
        lines += [f"{e.outer},{e.block},{e.inner},{e.value!r}" for e in self.trace]
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "task": self.pair.task.value,
            "stop_reason": self.stop_reason.value,
            "outer_iters": self.outer_iters,
            "accepted_steps": len(self.trace) - 1,
            "initial_objective": self.initial_objective,
            "final_objective": self.final_objective,
            "step_sizes": self.step_sizes,
            "message": self.message,
        }


def step_block(current, fixed, block: str, obj: TaskObjective, mu: float) -> Tuple[np.ndarray, float]:
    """One gradient step on ``block`` ('V' or 'W') with the other block held fixed.

    Returns the updated block and the objective at the new arrangement.

    Raises:
        FloatingPointError: if the step produces non-finite entries or objective.
    """
    if block not in ("V", "W"):
        raise ValueError(f"block must be 'V' or 'W', got {block!r}")
    with np.errstate(over="ignore", invalid="ignore"):
        if block == "V":
            new = current - mu * obj.grad_V(current, fixed)
            pair = (new, fixed)
        else:
            new = current - mu * obj.grad_W(fixed, current)
            pair = (fixed, new)
        if not np.all(np.isfinite(new)):
            raise FloatingPointError(f"non-finite entries after {block} step (mu={mu})")
        value = obj.value(*pair)
    if not np.isfinite(value):
        raise FloatingPointError(f"non-finite objective after {block} step (mu={mu})")
    return new, value


def initial_pair(c: int, p: int, q: int, task: Task, cfg: TrainConfig) -> ProjectionPair:
    if cfg.init == "zeros":
        return ProjectionPair.zeros(c, p, q, task)
    rng = np.random.default_rng(cfg.seed)
    return ProjectionPair(cfg.init_scale * rng.standard_normal((c, p)),
                          cfg.init_scale * rng.standard_normal((c, q)), task)


class _Diverged(Exception):
    pass


def _inner_loop(blocks, name, obj, cfg, mu, value, f0, outer, trace):
    """Descend on one block; returns (value, mu, accepted_steps, rejected)."""
    other = "W" if name == "V" else "V"
    accepted = 0
    for inner in range(1, cfg.max_inner_iter + 1):
        step = mu
        for _ in range(MAX_HALVINGS + 1):
            try:
                new, new_value = step_block(blocks[name], blocks[other], name, obj, step)
                blew_up = new_value > DIVERGENCE_FACTOR * max(f0, np.finfo(float).tiny)
            except FloatingPointError:
                new, new_value, blew_up = None, np.inf, True
            if new_value <= value:
                break
            if not cfg.step_halving:
                if blew_up:
                    raise _Diverged(f"{name} step at outer {outer}, inner {inner} diverged "
                                    f"(objective {new_value:.6g} vs initial {f0:.6g}, mu={step})")
                return value, mu, accepted, True
            step *= 0.5
        else:
            return value, mu, accepted, True
        mu = step
        improvement = value - new_value
        blocks[name] = new
        value = new_value
        accepted += 1
        trace.append(TraceEntry(outer, name, inner, value))
        if improvement <= cfg.epsilon:
            break
    return value, mu, accepted, False


def train(data: PairedDataset, task, cfg: Optional[TrainConfig] = None) -> TrainReport:
    """Learn a projection pair for ``task`` by alternating block descent.

    The objective never increases along the recorded trace: a step that would
    increase it is rejected (or, with ``cfg.step_halving``, retried at half
    the step size). A step whose objective exceeds 1e3 times the initial
    value, or is non-finite, aborts training with ``STEP_REJECTED``.
    """
    task = Task.parse(task)
    cfg = cfg or default_config(task)
    counts = np.bincount(data.labels, minlength=data.n_classes)
    if np.any(counts == 0):
        missing = np.flatnonzero(counts == 0).tolist()
        raise ValueError(f"classes {missing} have no training instances")
    obj = TaskObjective(data.images, data.texts, data.semantic_matrix(), task, cfg.hp)
    c, p, q = obj.shape
    start = initial_pair(c, p, q, task, cfg)
    blocks = {"V": start.V.copy(), "W": start.W.copy()}
    value = f0 = obj.value(blocks["V"], blocks["W"])
    trace = [TraceEntry(0, "init", 0, value)]
    mus = {"V": cfg.mu, "W": cfg.mu}
    reason, message = StopReason.MAX_ITERS, ""
    outer = 0
    for outer in range(1, cfg.max_outer_iter + 1):
        before = value
        progressed = 0
        rejected_any = False
        try:
            for name in ("V", "W"):
                value, mus[name], n_acc, rejected = _inner_loop(blocks, name, obj, cfg, mus[name],
                                                                value, f0, outer, trace)
                progressed += n_acc
                rejected_any |= rejected
        except _Diverged as exc:
            reason, message = StopReason.STEP_REJECTED, str(exc)
            logger.warning("training stopped: %s", message)
            break
        if progressed == 0 and rejected_any:
            reason = StopReason.STEP_REJECTED
            message = f"no step accepted in outer iteration {outer}; mu too large for this data"
            logger.warning("training stopped: %s", message)
            break
        rel = abs(before - value) / max(abs(before), np.finfo(float).tiny)
        logger.debug("outer %d: objective %.10g (rel change %.3g)", outer, value, rel)
        if rel <= cfg.outer_tol:
            reason = StopReason.CONVERGED
            break
    return TrainReport(ProjectionPair(blocks["V"], blocks["W"], task), trace, reason, outer,
                       message, step_sizes=dict(mus))


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------

MODEL_MAGIC = "MDCRMODEL1"


@dataclass
class Model:
    """A trained projection pair plus what is needed to apply it."""

    pair: ProjectionPair
    config: TrainConfig
    image_stats: Optional[ZScoreStats] = None
    text_stats: Optional[ZScoreStats] = None
    classes: Optional[list] = None

    @property
    def task(self) -> Task:
        return self.pair.task

    def header(self) -> dict:
        c, p = self.pair.V.shape
        h = {
            "task": self.task.value,
            "c": c,
            "p": p,
            "q": self.pair.W.shape[1],
            "lambda": self.config.hp.lam,
            "eta1": self.config.hp.eta1,
            "eta2": self.config.hp.eta2,
            "config": self.config.to_dict(),
        }
        for key, st in (("image_stats", self.image_stats), ("text_stats", self.text_stats)):
            if st is not None:
                h[key] = {"mean": st.mean.tolist(), "std": st.std.tolist()}
        if self.classes is not None:
            h["classes"] = list(self.classes)
        return h


def _header_value(v) -> str:
    return json.dumps(v, sort_keys=True, separators=(",", ":"))


def model_bytes(model: Model) -> bytes:
    buf = io.BytesIO()
    lines = [MODEL_MAGIC] + [f"{k}={_header_value(v)}" for k, v in model.header().items()] + ["end"]
    buf.write(("\n".join(lines) + "\n").encode("utf-8"))
    write_matrix_binary(buf, model.pair.V)
    write_matrix_binary(buf, model.pair.W)
    return buf.getvalue()


def save_model(path: Union[str, os.PathLike], model: Model) -> None:
    """Write the model atomically: header lines ``key=<json>``, then V and W as binary matrices."""
    path = Path(path)
    payload = model_bytes(model)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path: Union[str, os.PathLike]) -> Model:
    with open(path, "rb") as fh:
        first = fh.readline().decode("utf-8").rstrip("\n")
        if first != MODEL_MAGIC:
            raise ValueError(f"{path}: not a model file (magic {first!r})")
        header = {}
        while True:
            line = fh.readline()
            if not line:
                raise ValueError(f"{path}: truncated model header")
            s = line.decode("utf-8").rstrip("\n")
            if s == "end":
                break
            key, _, raw = s.partition("=")
            header[key] = json.loads(raw)
        V = read_matrix_binary(fh, f"{path} (V)")
        W = read_matrix_binary(fh, f"{path} (W)")
    pair = ProjectionPair(V, W, header["task"])
    if V.shape != (header["c"], header["p"]) or W.shape != (header["c"], header["q"]):
        raise ValueError(f"{path}: matrix shapes disagree with header")
    stats = {}
    for key in ("image_stats", "text_stats"):
        if key in header:
            stats[key] = ZScoreStats(np.asarray(header[key]["mean"]), np.asarray(header[key]["std"]))
    return Model(pair, TrainConfig.from_dict(header["config"]), stats.get("image_stats"),
                 stats.get("text_stats"), header.get("classes"))
