"""Overdamped Langevin dynamics on the 2D double well with an annealed Vendi force.

Update rule (Euler-Maruyama, unit friction, beta = 1)::

    x <- x - grad u(x) dt + nu(t) grad_x log VS_q dt + sqrt(2 dt) xi

The Vendi-force coefficient decays linearly from ``nu0`` and reaches zero at
step ``1 / anneal_rate``; it stays zero afterwards. Free-energy estimates use
only samples recorded in the zero-coefficient phase.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _accel
from .kernels import Kernel
from .scores import as_order
from .spectrum import DEFAULT_SUPPORT_TOL

# Regions compared by the free-energy estimate and its quadrature oracle.
DEFAULT_X_RANGE = (-2.5, 2.5)
DEFAULT_Y_RANGE = (-4.0, 4.0)
CHUNK_RECORDS = 64

# Vendi-force coefficient and annealing rate per order, for full-length runs.
REFERENCE_SCHEDULE = {
    0.1: (50.0, 1 / 50000),
    math.inf: (50.0, 1 / 50000),
    0.5: (100.0, 1 / 100000),
    1.0: (100.0, 1 / 100000),
    1.5: (50.0, 1 / 25000),
    2.0: (50.0, 1 / 25000),
}
REFERENCE_STEPS = 2_000_000
DESK_STEPS = 200_000
DESK_RATE_FACTOR = 10


class DivergenceError(RuntimeError):
    def __init__(self, step):
        self.step = step
        super().__init__(f"Langevin integration produced non-finite positions at step {step}")


class UndefinedEstimateError(ValueError):
    """A region has no samples, or the window includes biased samples."""


@dataclass(frozen=True)
class DoubleWell:
    """u(x, y) = a/4 x^4 + b/2 x^2 + c x + y^2 / 2."""

    a: float = 1.0
    b: float = -6.0
    c: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive for a confining potential")


def potential_energy(p: DoubleWell, pos) -> np.ndarray:
    pos = np.asarray(pos, dtype=float)
    x, y = pos[..., 0], pos[..., 1]
    return p.a / 4 * x**4 + p.b / 2 * x**2 + p.c * x + 0.5 * y**2


def potential_gradient(p: DoubleWell, pos) -> np.ndarray:
    pos = np.asarray(pos, dtype=float)
    x, y = pos[..., 0], pos[..., 1]
    return np.stack([p.a * x**3 + p.b * x + p.c, y], axis=-1)


@dataclass(frozen=True)
class SamplerConfig:
    """Vendi-Sampling run.

    ``anneal_rate`` is the fraction of ``nu0`` removed per step, so the force
    vanishes at step ``round(1 / anneal_rate)``.
    """

    replicas: int = 16
    step_size: float = 1e-2
    total_steps: int = DESK_STEPS
    nu0: float = 100.0
    anneal_rate: float = DESK_RATE_FACTOR / 100000
    q: float = 1.0
    kernel: Kernel = field(default_factory=lambda: Kernel("ratio1d"))
    init_box: tuple = (-2.5, 2.5)
    seed: int = 0
    record_stride: int = 100
    potential: DoubleWell = field(default_factory=DoubleWell)
    support_tol: float = DEFAULT_SUPPORT_TOL

    def __post_init__(self):
        object.__setattr__(self, "q", as_order(self.q))
        if self.replicas < 1 or (self.nu0 > 0 and self.replicas < 2):
            raise ValueError("need at least 2 replicas when the Vendi force is on")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.total_steps < 0 or self.record_stride < 1:
            raise ValueError("total_steps must be >= 0 and record_stride >= 1")
        if self.nu0 < 0 or self.anneal_rate < 0:
            raise ValueError("nu0 and anneal_rate must be non-negative")
        if self.nu0 > 0 and self.anneal_rate == 0:
            raise ValueError("anneal_rate must be positive when nu0 > 0")
        if self.kernel.kind not in ("ratio1d", "rbf"):
            raise ValueError(f"sampler needs a differentiable kernel, got {self.kernel.kind!r}")
        lo, hi = self.init_box
        if not lo < hi:
            raise ValueError("init_box must be an increasing interval")

    @property
    def anneal_end(self) -> int:
        """First step at which the Vendi-force coefficient is exactly zero."""
        if self.nu0 == 0:
            return 0
        return int(round(1.0 / self.anneal_rate))

    def nu(self, t) -> float:
        end = self.anneal_end
        if t >= end:
            return 0.0
        return self.nu0 * (1.0 - t / end)

    @property
    def kind_code(self):
        if self.nu0 == 0:
            return _accel.KIND_NONE
        return _accel.KIND_RATIO if self.kernel.kind == "ratio1d" else _accel.KIND_RBF


def reference_config(q, desk=True, **overrides) -> SamplerConfig:
    """Configuration following the reference per-order schedule.

    ``desk=True`` shortens the run to 2e5 steps and multiplies the annealing
    rate by 10 so the force-off phase keeps the same share of the run.
    """
    q = as_order(q)
    if q not in REFERENCE_SCHEDULE:
        raise ValueError(f"no reference schedule for q={q}")
    nu0, rate = REFERENCE_SCHEDULE[q]
    steps = REFERENCE_STEPS
    if desk:
        rate *= DESK_RATE_FACTOR
        steps = DESK_STEPS
    base = dict(replicas=16, step_size=1e-2, total_steps=steps, nu0=nu0,
                anneal_rate=rate, q=q, kernel=Kernel("ratio1d"), init_box=(-2.5, 2.5))
    base.update(overrides)
    return SamplerConfig(**base)


@dataclass
class Trajectory:
    positions: np.ndarray  # (records, R, 2)
    steps: np.ndarray
    nu_history: np.ndarray
    config: SamplerConfig
    degenerate_steps: int = 0


def _advance(cfg: SamplerConfig, pos, noise, t0, rec):
    p = cfg.potential
    return _accel.dw_advance(pos, noise, t0, cfg.step_size, float(cfg.nu0), cfg.anneal_end,
                             cfg.kind_code, float(cfg.kernel.gamma), float(cfg.q),
                             float(cfg.support_tol), float(p.a), float(p.b), float(p.c),
                             cfg.record_stride, rec)


def langevin_step(state, t: int, cfg: SamplerConfig, rng=None, noise=None) -> np.ndarray:
    """One Euler-Maruyama step from ``state`` (R x 2) at step index ``t``.

    Noise comes from ``noise`` if given, else ``rng.standard_normal``; with
    neither the step is noiseless.
    """
    pos = np.array(state, dtype=float)
    if noise is None:
        noise = rng.standard_normal(pos.shape) if rng is not None else np.zeros(pos.shape)
    noise = np.asarray(noise, dtype=float).reshape(1, *pos.shape)
    rec = np.empty((1, *pos.shape))
    one = replace(cfg, record_stride=1)
    _, bad, _ = _advance(one, pos, noise, t, rec)
    if bad >= 0:
        raise DivergenceError(bad)
    return pos


def run_vendi_sampling(cfg: SamplerConfig) -> Trajectory:
    """Run ``cfg.total_steps`` steps, recording every ``record_stride`` steps.

    Noise is drawn in fixed-size chunks from ``default_rng(seed)`` after the
    initial positions, so runs are reproducible for a given seed and backend.
    """
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.init_box
    R = cfg.replicas
    pos = rng.uniform(lo, hi, size=(R, 2))
    n_rec = cfg.total_steps // cfg.record_stride + 1
    out = np.empty((n_rec, R, 2))
    out[0] = pos
    filled = 1
    chunk = CHUNK_RECORDS * cfg.record_stride
    degenerate = 0
    t = 0
    while t < cfg.total_steps:
        n = min(chunk, cfg.total_steps - t)
        noise = rng.standard_normal((n, R, 2))
        rec = np.empty((n // cfg.record_stride + 1, R, 2))
        written, bad, deg = _advance(cfg, pos, noise, t, rec)
        if bad >= 0:
            raise DivergenceError(bad)
        out[filled:filled + written] = rec[:written]
        filled += written
        degenerate += deg
        t += n
    steps = np.arange(n_rec) * cfg.record_stride
    nus = np.array([cfg.nu(s) for s in steps])
    return Trajectory(out, steps, nus, cfg, degenerate)


def count_transitions(traj: Trajectory, boundary: float = 0.0, per_replica: bool = False):
    """Cumulative boundary crossings of the x-coordinate between records.

    A crossing is a change of side (x > boundary versus x <= boundary) between
    consecutive records. Returns one cumulative total per record, or a
    (records, R) array with ``per_replica=True``.
    """
    x = traj.positions[..., 0]
    if x.shape[0] == 0:
        raise ValueError("empty trajectory")
    side = x > boundary
    flips = np.zeros(side.shape, dtype=np.int64)
    flips[1:] = side[1:] != side[:-1]
    cum = np.cumsum(flips, axis=0)
    return cum if per_replica else cum.sum(axis=1)


@dataclass(frozen=True)
class FreeEnergyEstimate:
    F: float
    n_right: int
    n_left: int
    window: tuple


def default_window(traj: Trajectory) -> tuple:
    end = traj.config.anneal_end
    first = int(np.searchsorted(traj.steps, end))
    if first >= len(traj.steps):
        raise UndefinedEstimateError("no records after the Vendi force is switched off")
    return int(traj.steps[first]), int(traj.steps[-1])


def free_energy_difference(traj: Trajectory, window=None, boundary: float = 0.0,
                           x_range=DEFAULT_X_RANGE, y_range=DEFAULT_Y_RANGE) -> FreeEnergyEstimate:
    """F = -log(n_right / n_left) over recorded samples in the step window.

    Samples are pooled across replicas and counted only inside the region
    boxes (pass ``x_range=None``/``y_range=None`` to use whole half-planes).
    The window must lie in the zero-force phase.
    """
    lo, hi = default_window(traj) if window is None else window
    sel = (traj.steps >= lo) & (traj.steps <= hi)
    if not sel.any():
        raise UndefinedEstimateError(f"window {lo}..{hi} contains no records")
    if np.any(traj.nu_history[sel] != 0.0) or lo < traj.config.anneal_end:
        raise UndefinedEstimateError(
            f"window {lo}..{hi} overlaps the biased phase (force is on until step "
            f"{traj.config.anneal_end})")
    pts = traj.positions[sel].reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    inside = np.ones(len(x), dtype=bool)
    if x_range is not None:
        inside &= (x >= x_range[0]) & (x <= x_range[1])
    if y_range is not None:
        inside &= (y >= y_range[0]) & (y <= y_range[1])
    n_right = int(np.count_nonzero(inside & (x > boundary)))
    n_left = int(np.count_nonzero(inside & (x <= boundary)))
    if n_right == 0 or n_left == 0:
        raise UndefinedEstimateError(
            f"a region is empty (n_right={n_right}, n_left={n_left}); estimate undefined")
    return FreeEnergyEstimate(-math.log(n_right / n_left), n_right, n_left, (int(lo), int(hi)))


def _simpson_weights(n):
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def _box_integrals(p: DoubleWell, x_range, y_range, n):
    """Composite Simpson integrals of exp(-u) over the left and right boxes.

    The right box is sampled at the mirror images of the left nodes so a
    symmetric potential gives bit-identical integrals.
    """
    x_lo, x_hi = x_range
    if x_lo != -x_hi:
        raise ValueError("x_range must be symmetric about the boundary")
    xl = np.linspace(x_lo, 0.0, n + 1)
    xr = -xl
    ys = np.linspace(y_range[0], y_range[1], n + 1)
    wx = _simpson_weights(n) * (abs(x_lo) / n)
    wy = _simpson_weights(n) * ((y_range[1] - y_range[0]) / n)

    def integral(xs):
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        f = np.exp(-potential_energy(p, np.stack([X, Y], axis=-1)))
        return float(wx @ f @ wy)

    return integral(xr), integral(xl)


def free_energy_oracle(p: DoubleWell, x_range=DEFAULT_X_RANGE, y_range=DEFAULT_Y_RANGE,
                       tol: float = 1e-6, max_level: int = 14) -> float:
    """-log(Z_right / Z_left) by 2D composite Simpson quadrature.

    The grid is doubled until successive estimates agree within ``tol``
    (followed by one Richardson step).
    """
    n = 64
    right, left = _box_integrals(p, x_range, y_range, n)
    prev = -math.log(right / left)
    for _ in range(max_level):
        n *= 2
        right, left = _box_integrals(p, x_range, y_range, n)
        cur = -math.log(right / left)
        if abs(cur - prev) < tol:
            return cur + (cur - prev) / 15.0
        prev = cur
    raise ArithmeticError("quadrature refinement did not converge")
