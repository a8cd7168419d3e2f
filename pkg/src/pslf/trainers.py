"""Training loops for the five compared optimizers, early stopping and grid search.

``sgd``, ``adam`` and ``sam`` update per rating in a seeded shuffled order.
``slf`` and ``pslf`` take one full-batch damped Gauss-Newton step per epoch,
solved by conjugate gradient; ``pslf`` feeds PID-refined errors into the
right-hand side.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .data import Partition
from .errors import ConfigError, DivergenceError, GridSearchError, PslfError, SolverError
from .lfa import LatentState, assemble_gradient, init_latent, residuals, rmse
from .pid import PidGains, init_pid, refine_errors
from .second_order import GaussNewtonOperator, HvpConfig, cg_solve

OPTIMIZERS = ("sgd", "adam", "sam", "slf", "pslf")
SECOND_ORDER = ("slf", "pslf")

DEFAULT_LR = {"sgd": 2.0 ** -8, "adam": 1e-3, "sam": 2.0 ** -8, "slf": 1.0, "pslf": 1.0}
DEFAULT_GAMMA = {"slf": 60.0, "pslf": 60.0, "adam": 1e-8}


@dataclass(frozen=True)
class TrainConfig:
    """All hyperparameters of one training run.

    ``gamma`` is the damping coefficient for ``slf``/``pslf`` and the epsilon
    of ``adam``. ``None`` fields are filled per optimizer by ``resolved()``.
    """

    optimizer: str = "pslf"
    f: int = 20
    lam: float = 0.05
    gamma: float | None = None
    tau: float = 100.0
    cg_max_iters: int = 50
    cg_norm: str = "l2"
    kp: float = 1.5
    ki: float = 0.005
    kd: float = 0.05
    lr: float | None = None
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    sam_rho: float = 2.0 ** -5
    sam_mode: str = "rating"
    max_epochs: int = 500
    early_stop: int = 10
    seed: int = 0

    @property
    def gains(self) -> PidGains:
        return PidGains(self.kp, self.ki, self.kd)

    def resolved(self) -> "TrainConfig":
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}; expected one of {OPTIMIZERS}")
        cfg = self
        if cfg.lr is None:
            cfg = replace(cfg, lr=DEFAULT_LR[cfg.optimizer])
        if cfg.gamma is None:
            cfg = replace(cfg, gamma=DEFAULT_GAMMA.get(cfg.optimizer, 0.0))
        cfg.validate()
        return cfg

    def validate(self):
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}; expected one of {OPTIMIZERS}")
        if self.f < 1:
            raise ConfigError("f must be >= 1")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.early_stop < 1:
            raise ConfigError("early_stop patience must be >= 1")
        if self.lam < 0:
            raise ConfigError("lambda must be non-negative")
        if self.gamma is not None and self.gamma < 0:
            raise ConfigError("gamma must be non-negative")
        if self.optimizer in SECOND_ORDER:
            if self.lr is not None and self.lr != 1.0:
                raise ConfigError("second-order models take the full CG step; lr is fixed at 1")
            if self.cg_max_iters < 0 or self.tau < 0:
                raise ConfigError("tau and cg_max_iters must be non-negative")
            if self.cg_norm not in ("l2", "max"):
                raise ConfigError(f"cg_norm must be 'l2' or 'max', got {self.cg_norm!r}")
        elif self.lr is not None and not self.lr >= 0:
            raise ConfigError("lr must be non-negative")
        if self.optimizer == "sam":
            if self.sam_rho < 0:
                raise ConfigError("sam_rho must be non-negative")
            if self.sam_mode not in ("rating", "global"):
                raise ConfigError(f"sam_mode must be 'rating' or 'global', got {self.sam_mode!r}")
        self.gains  # finiteness check

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrainConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)


@dataclass
class EpochRecord:
    epoch: int
    train_rmse: float
    valid_rmse: float
    time_sec: float
    cg_iters: int = 0


@dataclass
class TrainReport:
    config: TrainConfig
    records: list[EpochRecord]
    best_epoch: int
    best_validation_rmse: float
    test_rmse: float
    stop_reason: str  # early_stop | max_epochs | solver_error
    message: str = ""
    best_state: LatentState | None = field(default=None, repr=False, compare=False)

    @property
    def epochs(self) -> int:
        return len(self.records)

    @property
    def time_sec(self) -> float:
        return self.records[-1].time_sec if self.records else 0.0

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "best_epoch": self.best_epoch,
            "best_validation_rmse": self.best_validation_rmse,
            "test_rmse": self.test_rmse,
            "epochs": self.epochs,
            "time_sec": self.time_sec,
            "stop_reason": self.stop_reason,
            "message": self.message,
            "records": [asdict(r) for r in self.records],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrainReport":
        return cls(TrainConfig.from_dict(d["config"]),
                   [EpochRecord(**r) for r in d["records"]],
                   d["best_epoch"], d["best_validation_rmse"], d["test_rmse"],
                   d["stop_reason"], d.get("message", ""))


class EarlyStop(NamedTuple):
    stop: bool
    best_epoch: int  # 1-based


def check_early_stop(history: Sequence[float], patience: int) -> EarlyStop:
    """Stop once ``patience`` epochs pass without a strict improvement on the best."""
    if not history:
        raise ValueError("empty validation history")
    best = int(np.argmin(history)) + 1  # argmin returns the first minimum: ties do not improve
    return EarlyStop(len(history) - best >= patience, best)


def _shuffle_rng(seed):
    return np.random.default_rng([seed, 0x5EED])


def _run(data: Partition, cfg: TrainConfig, step: Callable[[LatentState, int], int],
         state: LatentState, clock, callback=None) -> TrainReport:
    records = []
    history = []
    best_state, best_epoch, best_val = state.copy(), 0, math.inf
    stop_reason, message = "max_epochs", ""
    t0 = clock()
    for epoch in range(1, cfg.max_epochs + 1):
        try:
            cg_iters = step(state, epoch)
        except SolverError as exc:
            exc.epoch = epoch
            if not records:
                raise
            stop_reason, message = "solver_error", f"epoch {epoch}: {exc}"
            break
        tr = rmse(state, data.train)
        va = rmse(state, data.validation)
        if not (math.isfinite(tr) and math.isfinite(va)):
            raise DivergenceError(epoch)
        records.append(EpochRecord(epoch, tr, va, clock() - t0, cg_iters))
        if callback is not None:
            callback(epoch, state)
        history.append(va)
        if va < best_val:
            best_state, best_epoch, best_val = state.copy(), epoch, va
        if check_early_stop(history, cfg.early_stop).stop:
            stop_reason = "early_stop"
            break
    return TrainReport(cfg, records, best_epoch, best_val, rmse(best_state, data.test),
                       stop_reason, message, best_state)


def _second_order(data: Partition, cfg: TrainConfig, use_pid: bool, clock, callback) -> TrainReport:
    cfg = cfg.resolved()
    train = data.train
    state = init_latent(train.num_users, train.num_items, cfg.f, cfg.seed)
    hvp_cfg = HvpConfig(cfg.lam, cfg.gamma)
    pid = init_pid(train.num_entries) if use_pid else None
    gains = cfg.gains

    def step(state, epoch):
        err = residuals(state, train)
        if pid is not None:
            err = refine_errors(pid, err, gains)
        rhs = assemble_gradient(state, err, train, cfg.lam)
        op = GaussNewtonOperator(state, train, hvp_cfg)
        res = cg_solve(op, rhs, cfg.tau, cfg.cg_max_iters, cfg.cg_norm)
        state.add_(res.delta)
        return res.iterations

    return _run(data, cfg, step, state, clock, callback)


def train_slf(data: Partition, cfg: TrainConfig, clock=time.perf_counter, callback=None) -> TrainReport:
    """Damped Gauss-Newton / CG on the raw residual gradient."""
    return _second_order(data, cfg, False, clock, callback)


def train_pslf(data: Partition, cfg: TrainConfig, clock=time.perf_counter, callback=None) -> TrainReport:
    """Damped Gauss-Newton / CG on the PID-refined gradient."""
    return _second_order(data, cfg, True, clock, callback)


def _first_order(data: Partition, cfg: TrainConfig, make_step, clock, callback) -> TrainReport:
    cfg = cfg.resolved()
    train = data.train
    state = init_latent(train.num_users, train.num_items, cfg.f, cfg.seed)
    rng = _shuffle_rng(cfg.seed)
    epoch_kernel = make_step(state)

    def step(state, epoch):
        epoch_kernel(rng.permutation(train.num_entries))
        return 0

    return _run(data, cfg, step, state, clock, callback)


def train_sgd(data: Partition, cfg: TrainConfig, clock=time.perf_counter, callback=None) -> TrainReport:
    train = data.train
    cfg = cfg.resolved()

    def make_step(state):
        return lambda order: _kernels.sgd_epoch(
            state.user_factors, state.item_factors, train.users, train.items, train.ratings,
            order, float(cfg.lr), float(cfg.lam))

    return _first_order(data, cfg, make_step, clock, callback)


def train_adam(data: Partition, cfg: TrainConfig, clock=time.perf_counter, callback=None) -> TrainReport:
    train = data.train
    cfg = cfg.resolved()

    def make_step(state):
        MU, VU = np.zeros_like(state.user_factors), np.zeros_like(state.user_factors)
        MI, VI = np.zeros_like(state.item_factors), np.zeros_like(state.item_factors)
        TU = np.zeros(state.num_users, dtype=np.int64)
        TI = np.zeros(state.num_items, dtype=np.int64)
        return lambda order: _kernels.adam_epoch(
            state.user_factors, state.item_factors, train.users, train.items, train.ratings,
            order, float(cfg.lr), float(cfg.lam), float(cfg.adam_beta1), float(cfg.adam_beta2),
            float(cfg.gamma), MU, VU, MI, VI, TU, TI)

    return _first_order(data, cfg, make_step, clock, callback)


def _global_sam_step(state: LatentState, data: Partition, cfg: TrainConfig):
    train = data.train
    g = -assemble_gradient(state, residuals(state, train), train, cfg.lam)
    gnorm = float(np.linalg.norm(g))
    probe = state
    if cfg.sam_rho > 0 and gnorm > 0:
        probe = state.copy().add_(cfg.sam_rho / gnorm * g)
    neg_g = assemble_gradient(probe, residuals(probe, train), train, cfg.lam)
    state.add_(cfg.lr * neg_g)


def train_sam(data: Partition, cfg: TrainConfig, clock=time.perf_counter, callback=None) -> TrainReport:
    """Sharpness-aware SGD; the perturbation is taken on the slice touched by each rating,
    or on the full-batch gradient when ``sam_mode='global'``."""
    train = data.train
    cfg = cfg.resolved()
    if cfg.sam_mode == "global":
        state = init_latent(train.num_users, train.num_items, cfg.f, cfg.seed)

        def step(state, epoch):
            _global_sam_step(state, data, cfg)
            return 0

        return _run(data, cfg, step, state, clock, callback)

    def make_step(state):
        return lambda order: _kernels.sam_epoch(
            state.user_factors, state.item_factors, train.users, train.items, train.ratings,
            order, float(cfg.lr), float(cfg.lam), float(cfg.sam_rho))

    return _first_order(data, cfg, make_step, clock, callback)


TRAINERS = {
    "sgd": train_sgd,
    "adam": train_adam,
    "sam": train_sam,
    "slf": train_slf,
    "pslf": train_pslf,
}


def train(data: Partition, cfg: TrainConfig, clock=time.perf_counter, callback=None) -> TrainReport:
    cfg = cfg.resolved()
    return TRAINERS[cfg.optimizer](data, cfg, clock, callback)


def expand_grid(base: TrainConfig, grid: Mapping[str, Sequence]) -> list[TrainConfig]:
    """Cartesian product of ``grid`` over ``base``; the last key varies fastest."""
    names = {f.name for f in fields(TrainConfig)}
    bad = set(grid) - names
    if bad:
        raise ConfigError(f"unknown grid fields: {sorted(bad)}")
    keys = list(grid)
    if any(len(grid[k]) == 0 for k in keys):
        raise ConfigError("every grid axis needs at least one value")
    return [replace(base, **dict(zip(keys, values)))
            for values in itertools.product(*(grid[k] for k in keys))]


@dataclass
class GridRun:
    config: TrainConfig
    report: TrainReport | None
    error: str = ""


def grid_search(data: Partition, base: TrainConfig, grid: Mapping[str, Sequence],
                on_result: Callable[[GridRun], None] | None = None,
                clock=time.perf_counter) -> tuple[TrainConfig, list[GridRun]]:
    """Train every grid point and pick the lowest best-validation RMSE.

    Ties go to the earlier grid point. Failed runs are kept with their error.
    """
    configs = expand_grid(base, grid)
    if not configs:
        raise ConfigError("empty grid")
    runs = []
    for cfg in configs:
        try:
            run = GridRun(cfg, train(data, cfg, clock))
        except PslfError as exc:
            run = GridRun(cfg, None, f"{type(exc).__name__}: {exc}")
        runs.append(run)
        if on_result is not None:
            on_result(run)
    return select_best(runs), runs


def select_best(runs: Sequence[GridRun]) -> TrainConfig:
    ok = [r for r in runs if r.report is not None]
    if not ok:
        raise GridSearchError([r.error for r in runs])
    best = min(ok, key=lambda r: r.report.best_validation_rmse)  # min keeps the first of ties
    return best.config
