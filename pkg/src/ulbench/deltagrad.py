"""Recorded-gradient replay unlearning with quasi-Newton gradient estimates.

Training is plain mini-batch SGD that records every post-step weight
vector with the full-set gradient there; the released model adds optional
isotropic Gaussian noise on top of the final iterate.  Unlearning replays
the iteration sequence with the deleted rows dropped from each batch.
Early iterations, and every t0_period-th iteration after the burn-in,
recompute the remaining-set gradient exactly and feed curvature pairs to
a limited-memory quasi-Newton history; the iterations in between estimate
the pre-deletion gradient from the stored one through that history and
combine it with the deleted set's exact gradient, weighted by the batch's
own member counts.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .common import Stopwatch, UnlearnResult, substream
from .data import DatasetView, base_signed, binary_task, check_deletion_ids
from .errors import ConfigError, NumericalError
from .objective import ObjectiveConfig, gradient
from .sgd import BatchSchedule, SgdConfig, TrainingTrajectory, save_trajectory, train

CURVATURE_FLOOR = 1e-12


@dataclass
class DeltaGradConfig:
    """Replay controls: exactness period, burn-in, history depth, noise."""

    t0_period: int
    burn_in: int = 0
    history: int = 2
    sigma: float = 0.0
    noise_seed: int = 0

    def __post_init__(self):
        if self.t0_period < 1:
            raise ConfigError(f"t0_period must be >= 1, got {self.t0_period}")
        if self.burn_in < 0:
            raise ConfigError(f"burn_in must be >= 0, got {self.burn_in}")
        if self.history < 1:
            raise ConfigError(f"history must be >= 1, got {self.history}")
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")


class LbfgsHistory:
    """Bounded store of (dw, dg) curvature pairs with a compact Hessian form.

    Pairs whose curvature dw.dg falls at or below a small floor are
    rejected; pushing beyond the bound drops the oldest pair.
    """

    def __init__(self, maxlen: int):
        if maxlen < 1:
            raise ConfigError(f"history length must be >= 1, got {maxlen}")
        self._pairs: deque = deque(maxlen=maxlen)

    def __len__(self) -> int:
        return len(self._pairs)

    def push(self, dw: np.ndarray, dg: np.ndarray) -> bool:
        """Keep the pair if its curvature is usable; report whether kept."""
        if float(dw @ dg) <= CURVATURE_FLOOR:
            return False
        self._pairs.append((np.array(dw, copy=True), np.array(dg, copy=True)))
        return True

    def apply_hessian(self, v: np.ndarray) -> np.ndarray:
        """B v for the compact limited-memory BFGS matrix built on the pairs.

        B = c I - W M^{-1} W^T with c = (dg.dg)/(dw.dg) of the newest pair,
        W = [c S  Y], and M the standard compact-form block matrix.  For a
        single pair this satisfies B dw = dg exactly.
        """
        if not self._pairs:
            raise NumericalError("quasi-Newton history is empty")
        S = np.stack([p[0] for p in self._pairs], axis=1)
        Y = np.stack([p[1] for p in self._pairs], axis=1)
        s_last, y_last = self._pairs[-1]
        c = float(y_last @ y_last) / float(s_last @ y_last)
        A = S.T @ Y
        L = np.tril(A, k=-1)
        D = np.diag(np.diag(A))
        M = np.block([[c * (S.T @ S), L], [L.T, -D]])
        W = np.concatenate([c * S, Y], axis=1)
        try:
            inner = np.linalg.solve(M, W.T @ v)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"degenerate curvature history: {exc}") from exc
        return c * v - W @ inner


def lbfgs_gradient_estimate(history: LbfgsHistory, g: np.ndarray, dw: np.ndarray) -> np.ndarray:
    """Estimate the gradient at w + dw from the gradient g stored at w."""
    return g + history.apply_hessian(dw)


def dg_train(
    view: DatasetView,
    lam: float,
    sgd_cfg: SgdConfig,
    cfg: DeltaGradConfig,
    y: np.ndarray | None = None,
    trajectory_path=None,
) -> tuple[np.ndarray, TrainingTrajectory]:
    """Plain recorded SGD; the returned model adds sigma-scaled noise.

    The trajectory holds the noise-free sequence and is written to
    trajectory_path when given.
    """
    if not sgd_cfg.record_trajectory:
        raise ConfigError("replay unlearning needs record_trajectory enabled")
    X, ys = binary_task(view, y)
    w, traj = train(X, ys, ObjectiveConfig(lam=lam), sgd_cfg)
    assert traj is not None
    if trajectory_path is not None:
        save_trajectory(traj, trajectory_path)
    if cfg.sigma > 0.0:
        b = substream(cfg.noise_seed, 0).standard_normal(len(w))
        w = w + cfg.sigma * b
    return w, traj


def _validate_replay_inputs(
    traj: TrainingTrajectory, view: DatasetView, schedule: BatchSchedule
) -> None:
    # the schedule always spans the original training rows so that the
    # same batch structure can be replayed across sequential deletions
    if schedule.n != view.base.n:
        raise ConfigError(
            f"schedule covers n={schedule.n} rows, dataset was trained on {view.base.n}"
        )
    if traj.iterations != schedule.iterations:
        raise ConfigError(
            f"trajectory has {traj.iterations} iterations, schedule has {schedule.iterations}"
        )
    if traj.d != view.base.d:
        raise ConfigError(f"trajectory d={traj.d} does not match dataset d={view.base.d}")
    if traj.batch_size != schedule.batch_size or traj.seed != schedule.seed:
        raise ConfigError("trajectory and schedule disagree on batch size or seed")


def dg_unlearn(
    traj: TrainingTrajectory,
    view: DatasetView,
    deleted_ids,
    lam: float,
    schedule: BatchSchedule,
    cfg: DeltaGradConfig,
    y: np.ndarray | None = None,
) -> tuple[UnlearnResult, TrainingTrajectory]:
    """Replay training with deleted rows dropped from every batch.

    The schedule is the one training ran with, spanning the original
    rows; the view reflects the current remaining set, so rows removed
    by earlier rounds stay out of every gradient and batch count while
    deleted_ids are the rows being removed now.  Iteration t is exact
    when t <= burn_in, when
    (t - burn_in) is a multiple of t0_period, or when the curvature
    history is empty; exact iterations recompute the remaining-set
    gradient, refresh the history, and step on the batch's surviving
    rows.  Approximate iterations step with the estimated pre-deletion
    gradient corrected by the deleted set's gradient through the
    leave-m-out combination at the batch's member counts; a batch with
    no survivors is skipped.  Stored trajectory terms are overwritten in
    a copy, which is returned alongside the result for sequential
    deletions.
    """
    ids = np.asarray(deleted_ids, dtype=np.int64)
    if ids.size > 0:
        ids = check_deletion_ids(view, ids)
    _validate_replay_inputs(traj, view, schedule)
    if ids.size == 0:
        # nothing to remove: the replay would retrace the recorded sequence
        with Stopwatch() as sw:
            w = traj.weights[-1].copy()
            if cfg.sigma > 0.0:
                w = w + cfg.sigma * substream(cfg.noise_seed, 1).standard_normal(traj.d)
        result = UnlearnResult(
            weights=w,
            method="deltagrad",
            seconds=sw.seconds,
            params={
                "lam": lam,
                "sigma": cfg.sigma,
                "t0_period": cfg.t0_period,
                "burn_in": cfg.burn_in,
                "history": cfg.history,
                "noise_seed": cfg.noise_seed,
                "deleted": 0,
            },
            diagnostics={"exact_iterations": 0, "total_iterations": traj.iterations},
        )
        return result, traj.copy()
    base = view.base
    signed = base_signed(base, y)
    obj = ObjectiveConfig(lam=lam)
    eta = traj.eta
    T = traj.iterations
    with Stopwatch() as sw:
        X = base.features
        yv = signed
        # batch positions are base row ids; rows deleted in earlier
        # rounds are already absent from the view and drop out of both
        # masks, so they contribute to neither gradients nor counts
        del_mask = np.zeros(base.n, dtype=bool)
        del_mask[ids] = True
        keep_mask = np.zeros(base.n, dtype=bool)
        keep_mask[view.remaining] = True
        keep_mask &= ~del_mask
        rem_rows = np.flatnonzero(keep_mask)
        Xr = X[rem_rows]
        yr = yv[rem_rows]
        if len(Xr) == 0:
            raise ConfigError("deletions would empty the remaining set")
        cur_rows = view.remaining
        n_cur = len(cur_rows)
        m_cur = len(ids)
        n_rem = n_cur - m_cur
        W = traj.weights.copy()
        G = traj.gradients.copy()
        hist = LbfgsHistory(cfg.history)
        w = np.zeros(traj.d)
        zeros = np.zeros(traj.d)
        exact_count = 0
        for t in range(T):
            batch = schedule.batches[t]
            bdel = batch[del_mask[batch]]
            brem = batch[keep_mask[batch]]
            stored_w = W[t - 1] if t >= 1 else zeros
            exact = t <= cfg.burn_in or (t - cfg.burn_in) % cfg.t0_period == 0 or len(hist) == 0
            if exact:
                exact_count += 1
                g_rem = gradient(w, Xr, yr, obj)
                if t >= 1:
                    # curvature pairs compare gradients over the same set
                    # of rows the stored terms came from, keeping dw.dg
                    # positive for the convex objective; g_cur recombines
                    # the remaining and deleted shares exactly
                    g_del = gradient(w, X[ids], yv[ids], obj)
                    g_cur = (n_rem * g_rem + m_cur * g_del) / n_cur
                    hist.push(w - stored_w, g_cur - G[t - 1])
                    W[t - 1] = w
                    G[t - 1] = g_rem
                if len(brem) > 0:
                    w_next = w - eta * gradient(w, X[brem], yv[brem], obj)
                else:
                    w_next = w
            else:
                ghat = G[t - 1] + hist.apply_hessian(w - stored_w)
                g_del = gradient(w, X[ids], yv[ids], obj)
                n_t = len(brem) + len(bdel)
                m_t = len(bdel)
                if m_t == n_t:
                    w_next = w
                elif m_t == 0:
                    w_next = w - eta * ghat
                else:
                    w_next = w - (eta / (n_t - m_t)) * (n_t * ghat - m_t * g_del)
                W[t - 1] = w
                G[t - 1] = (n_cur * ghat - m_cur * g_del) / n_rem
            if not np.isfinite(w_next).all():
                raise NumericalError(f"non-finite replay weights at iteration {t + 1}")
            w = w_next
        W[T - 1] = w
        G[T - 1] = gradient(w, Xr, yr, obj)
        if cfg.sigma > 0.0:
            b = substream(cfg.noise_seed, 1).standard_normal(traj.d)
            w_out = w + cfg.sigma * b
        else:
            w_out = w
    new_traj = TrainingTrajectory(W, G, traj.seed, traj.eta, traj.batch_size, traj.epochs)
    result = UnlearnResult(
        weights=w_out,
        method="deltagrad",
        seconds=sw.seconds,
        params={
            "lam": lam,
            "sigma": cfg.sigma,
            "t0_period": cfg.t0_period,
            "burn_in": cfg.burn_in,
            "history": cfg.history,
            "noise_seed": cfg.noise_seed,
            "deleted": len(ids),
        },
        diagnostics={"exact_iterations": exact_count, "total_iterations": T},
    )
    return result, new_traj
