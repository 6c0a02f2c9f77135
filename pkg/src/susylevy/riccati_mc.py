"""Monte Carlo for the Riccati flow driven by a Levy superpotential.

The Riccati variable obeys ``Z' = -E - Z^2 + w Z`` with ``w = W'``.  Writing
``Z = A/B`` linearises the flow between jumps,

    A' = d A - E B,   B' = A,

with ``d`` the drift rate of ``W``, and a jump of ``W`` by ``h`` acts as
``Z -> Z exp(h)`` (``A -> exp(h) A``).  The linear flow is integrated
exactly, so only the Brownian part needs time stepping.  Passages of Z
through -inf are the zeros of B; their rate per unit length estimates
N(E).  The Lyapunov exponent follows from

    gamma = c(0)/2 + <-E/Z>,   <-E/Z> = (ln|v(L)| - ln|v(0)| - (W(L) - W(0)))/L,

where ``v = (A, B)``.

Infinite-activity subordinators are replaced by their interlacing
approximation (jumps below ``epsilon`` folded into the drift).
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .errors import DomainError, InfiniteMeanError, UnsupportedError
from .levy_core import (Family, InterlacingSpec, LevyProcessSpec, coefficient_c, interlace,
                        sample_gamma, sample_stable)

__all__ = [
    "PathConfig",
    "RiccatiRun",
    "MCEstimate",
    "IncrementBlock",
    "simulate_increments",
    "sample_w",
    "sample_path",
    "riccati_evolve",
    "estimate",
    "ks_distance",
]

_CHUNK = 1 << 16
_EXACT_EPS = 1e-300


@dataclass(frozen=True)
class PathConfig:
    """Simulation settings.

    Parameters
    ----------
    total_length : float
        Length L of each trajectory (after burn-in).
    dt : float
        Time step of the Brownian part and default sampling stride unit.
    epsilon : float
        Jump truncation for infinite-activity subordinators.
    seed : int
        Master seed; trajectories use independent spawned streams.
    n_trajectories : int
    blowup_threshold : float
        Large negative level that defines a blow-up.  The exact flow
        detects passages through -inf directly, so every threshold below
        the support gives the same count; the value is validated and kept
        for the record.
    burn_in : float or None
        Discarded initial length; default max(10/sqrt|E|, 1e5 dt).
    n_batches : int
        Batches per trajectory for the batch-means standard error.
    sample_stride : float or None
        Spacing of the Z samples for the histogram (default 100 dt).
    workers : int or None
        Thread pool size (default: CPU count).
    """

    total_length: float = 1e4
    dt: float = 1e-3
    epsilon: float = 1e-3
    seed: int = 0
    n_trajectories: int = 4
    blowup_threshold: float = -1e12
    burn_in: float | None = None
    n_batches: int = 10
    sample_stride: float | None = None
    workers: int | None = None

    def __post_init__(self):
        if not (self.total_length > 0 and math.isfinite(self.total_length)):
            raise DomainError("total_length must be positive and finite")
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if not (self.n_trajectories >= 1 and self.n_batches >= 1):
            raise DomainError("n_trajectories and n_batches must be >= 1")
        if not (self.blowup_threshold < 0 and math.isfinite(self.blowup_threshold)):
            raise DomainError("blowup_threshold must be finite and negative")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    def burn_in_for(self, E):
        if self.burn_in is not None:
            return float(self.burn_in)
        return max(10.0 / math.sqrt(abs(E)) if E != 0 else 0.0, 1e5 * self.dt)

    def stride(self):
        return self.sample_stride if self.sample_stride is not None else 100.0 * self.dt

    def validate_for(self, spec: LevyProcessSpec, E: float):
        """Energy-scale monitor: the Brownian step must resolve 1/max(|E|, c(0)^2)."""
        if spec.family in (Family.BROWNIAN,):
            mu, g = spec.params["mu"], spec.gaussian_g
            scale = max(abs(E), (2 * mu * g) ** 2, 4 * g * g)
            if self.dt * scale > 0.05:
                raise DomainError(
                    f"dt={self.dt} too coarse for E={E}: need dt * max(|E|, c0^2) <= 0.05, "
                    f"i.e. dt <= {0.05 / scale:.3g}")


@dataclass
class RiccatiRun:
    """Summary of one trajectory.

    ``mean_minus_E_over_Z`` is the time average of -E/Z; ``resets`` counts
    passages through -inf after burn-in.
    """

    length: float
    resets: int
    mean_minus_E_over_Z: float
    log_growth: float
    w_increment: float
    batch_lengths: np.ndarray
    batch_resets: np.ndarray
    batch_minus_E_over_Z: np.ndarray
    z_samples: np.ndarray
    z_min: float
    seed_entropy: tuple = ()

    def histogram(self, bins=100, range=None):
        return _histogram(self.z_samples, bins, range)


@dataclass
class MCEstimate:
    """Aggregated Monte Carlo estimate over trajectories.

    ``histogram`` is ``(edges, mass)`` with mass summing to one.
    """

    E: float
    N_hat: float
    gamma_hat: float
    stderr_N: float
    stderr_gamma: float
    histogram: tuple
    resets: int
    L: float
    seed: int
    z_samples: np.ndarray = field(repr=False, default=None)
    z_min: float = math.inf

    def to_dict(self):
        return {"E": self.E, "N_hat": self.N_hat, "stderr_N": self.stderr_N,
                "gamma_hat": self.gamma_hat, "stderr_gamma": self.stderr_gamma,
                "resets": int(self.resets), "L": self.L, "seed": int(self.seed)}

    def histogram_rows(self):
        edges, mass = self.histogram
        return [(float(lo), float(hi), float(m)) for lo, hi, m in zip(edges[:-1], edges[1:], mass)]


def _histogram(samples, bins=100, range=None):
    s = np.asarray(samples)
    s = s[np.isfinite(s)]
    if s.size == 0:
        return np.array([0.0, 1.0]), np.array([0.0])
    if range is None:
        lo, hi = np.quantile(s, [0.001, 0.999])
        if hi <= lo:
            hi = lo + 1.0
        range = (lo, hi)
    counts, edges = np.histogram(np.clip(s, range[0], range[1]), bins=bins, range=range)
    return edges, counts / counts.sum()


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _flow(A, B, t, d, E):
    """Exact linear flow over length t.

    Returns (A, B, zero crossings of B in (0, t], log of the norm factor
    removed).  The state is returned normalised.
    """
    half = 0.5 * d
    delta = half * half - E
    tiny = 1e-14 * (half * half + abs(E))
    crossings = 0
    log_scale = 0.0
    remaining = t
    while remaining > 0.0:
        step = remaining
        if delta > tiny:
            sg = math.sqrt(delta)
            if sg * step > 20.0:
                step = 20.0 / sg
        if half * step > 20.0:
            step = 20.0 / half
        remaining -= step
        P = B
        if delta < -tiny:
            om = math.sqrt(-delta)
            Q = (A - half * B) / om
            phi = math.atan2(Q, P)
            crossings += int(math.floor((om * step - phi - 0.5 * math.pi) / math.pi)
                             - math.floor((-phi - 0.5 * math.pi) / math.pi))
            c = math.cos(om * step)
            s = math.sin(om * step)
            Bn = P * c + Q * s
            An = half * Bn + om * (Q * c - P * s)
        elif delta > tiny:
            sg = math.sqrt(delta)
            Q = (A - half * B) / sg
            th = math.tanh(sg * step)
            if P * Q < 0.0 and abs(P) <= abs(Q) * th:
                crossings += 1
            ch = math.cosh(sg * step)
            sh = math.sinh(sg * step)
            Bn = P * ch + Q * sh
            An = half * Bn + sg * (P * sh + Q * ch)
        else:
            Q = A - half * B
            if P * Q < 0.0 and -P / Q <= step:
                crossings += 1
            Bn = P + Q * step
            An = half * Bn + Q
        nrm = math.sqrt(An * An + Bn * Bn)
        A = An / nrm
        B = Bn / nrm
        log_scale += half * step + math.log(nrm)
    return A, B, crossings, log_scale


@numba.njit(cache=True, nogil=True)
def _apply_jump(A, B, h):
    """Z -> Z exp(h), i.e. (A, B) -> (exp(h) A, B), kept normalised."""
    if h > 0.0:
        Bn = B * math.exp(-h)
        An = A
        ls = h
    else:
        An = A * math.exp(h)
        Bn = B
        ls = 0.0
    nrm = math.sqrt(An * An + Bn * Bn)
    return An / nrm, Bn / nrm, ls + math.log(nrm)


@numba.njit(cache=True, nogil=True)
def _run_jumps(gaps, sizes, E, d, A, B, x, x_end, next_sample, stride, samples, n_samp, z_min):
    """Alternate exact flows over ``gaps`` and jumps ``sizes`` until x reaches x_end.

    Returns (A, B, x, next_sample, n_samp, crossings, log_growth, w_jumps,
    jumps consumed, reached_end, z_min).
    """
    crossings = 0
    log_growth = 0.0
    w_jumps = 0.0
    n = gaps.shape[0]
    cap = samples.shape[0]
    i = 0
    reached = False
    while i < n:
        g = gaps[i]
        target = x + g
        stop = False
        if target >= x_end:
            target = x_end
            stop = True
        # flow to each sample point in (x, target]
        while next_sample <= target:
            A, B, c, ls = _flow(A, B, next_sample - x, d, E)
            crossings += c
            log_growth += ls
            x = next_sample
            if n_samp < cap:
                samples[n_samp] = A / B if B != 0.0 else math.inf
                n_samp += 1
            next_sample += stride
        if target > x:
            A, B, c, ls = _flow(A, B, target - x, d, E)
            crossings += c
            log_growth += ls
            x = target
        if B != 0.0:
            z = A / B
            if z < z_min:
                z_min = z
        if stop:
            reached = True
            break
        A, B, ls = _apply_jump(A, B, sizes[i])
        log_growth += ls
        w_jumps += sizes[i]
        i += 1
    return A, B, x, next_sample, n_samp, crossings, log_growth, w_jumps, i, reached, z_min


@numba.njit(cache=True, nogil=True)
def _run_brownian(noise, E, d, dt, A, B, x, next_sample, stride, samples, n_samp, z_min):
    """Strang splitting: half drift flow, multiplicative kick exp(h), half drift flow."""
    crossings = 0
    log_growth = 0.0
    w_noise = 0.0
    cap = samples.shape[0]
    for i in range(noise.shape[0]):
        A, B, c, ls = _flow(A, B, 0.5 * dt, d, E)
        crossings += c
        log_growth += ls
        A, B, ls = _apply_jump(A, B, noise[i])
        log_growth += ls
        w_noise += noise[i]
        A, B, c, ls = _flow(A, B, 0.5 * dt, d, E)
        crossings += c
        log_growth += ls
        x += dt
        if x >= next_sample:
            if n_samp < cap:
                samples[n_samp] = A / B if B != 0.0 else math.inf
                n_samp += 1
            next_sample += stride
        if B != 0.0:
            z = A / B
            if z < z_min:
                z_min = z
    return A, B, x, next_sample, n_samp, crossings, log_growth, w_noise, z_min


# ---------------------------------------------------------------------------
# process models for simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _SimModel:
    kind: str  # "drift" | "jumps" | "brownian"
    d: float  # drift rate of W between jumps
    rate: float = 0.0
    sampler: object = None
    sigma: float = 0.0
    c0: float = math.nan


def _sim_model(spec: LevyProcessSpec, eps: float) -> _SimModel:
    try:
        c0 = coefficient_c(spec, 0.0)
    except InfiniteMeanError:
        c0 = math.nan
    if spec.family is Family.BROWNIAN:
        g = spec.gaussian_g
        return _SimModel("brownian", 2 * spec.params["mu"] * g, sigma=2 * math.sqrt(g), c0=c0)
    if spec.family is Family.PURE_DRIFT:
        return _SimModel("drift", 2 * spec.drift_a, c0=c0)
    # finite measures are simulated exactly: truncate at a negligible level
    il: InterlacingSpec = interlace(spec, _EXACT_EPS if spec.has_finite_measure else eps)
    return _SimModel("jumps", il.w_drift, il.jump_rate, il.jump_sampler, c0=c0)


# ---------------------------------------------------------------------------
# increments and paths
# ---------------------------------------------------------------------------

@dataclass
class IncrementBlock:
    """Increments of W over consecutive steps of length ``dx``.

    ``drift``, ``brownian`` and ``jumps`` hold per-step contributions;
    for compound Poisson parts the individual events are listed in
    ``jump_positions``/``jump_sizes`` (None for exactly sampled
    infinite-activity increments).
    """

    x0: float
    dx: float
    drift: np.ndarray
    brownian: np.ndarray
    jumps: np.ndarray
    jump_positions: np.ndarray | None = None
    jump_sizes: np.ndarray | None = None

    @property
    def total(self):
        return self.drift + self.brownian + self.jumps


def simulate_increments(spec: LevyProcessSpec, cfg: PathConfig, rng=None, block_steps=100_000):
    """Yield :class:`IncrementBlock` covering [0, cfg.total_length] in steps of cfg.dt.

    Gamma and alpha-stable increments are sampled exactly from their
    laws; the Hermite and tabulated families use the interlacing
    approximation at ``cfg.epsilon``.
    """
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    dx = cfg.dt
    n_total = int(math.ceil(cfg.total_length / dx))
    fam = spec.family
    x0 = 0.0
    done = 0
    model = None if fam in (Family.GAMMA, Family.ALPHA_STABLE) else _sim_model(spec, cfg.epsilon)
    while done < n_total:
        n = min(block_steps, n_total - done)
        zeros = np.zeros(n)
        pos = sizes = None
        if fam is Family.BROWNIAN:
            drift = np.full(n, model.d * dx)
            brown = model.sigma * math.sqrt(dx) * rng.standard_normal(n)
            jumps = zeros
        elif fam is Family.GAMMA:
            drift = np.full(n, 2 * spec.drift_a * dx)
            brown = zeros
            jumps = sample_gamma(spec.params["b"], dx, n, rng)
        elif fam is Family.ALPHA_STABLE:
            drift = np.full(n, 2 * spec.drift_a * dx)
            brown = zeros
            al = spec.params["alpha"]
            jumps = sample_stable(al, n, rng, scale=(spec.params["p"] * dx) ** (1.0 / al))
        else:
            drift = np.full(n, model.d * dx)
            brown = zeros
            length = n * dx
            k = rng.poisson(model.rate * length) if model.rate > 0 else 0
            pos = np.sort(rng.random(k)) * length + x0
            sizes = model.sampler(rng, k) if k else np.zeros(0)
            idx = np.minimum(((pos - x0) / dx).astype(np.int64), n - 1)
            jumps = np.bincount(idx, weights=sizes, minlength=n).astype(float)
        yield IncrementBlock(x0, dx, drift, brown, jumps, pos, sizes)
        done += n
        x0 += n * dx


def sample_path(spec: LevyProcessSpec, cfg: PathConfig, rng=None):
    """W on the grid x = 0, dt, 2 dt, ... (W(0) = 0)."""
    xs, ws = [np.zeros(1)], [np.zeros(1)]
    w_last = 0.0
    for blk in simulate_increments(spec, cfg, rng):
        inc = np.cumsum(blk.total) + w_last
        ws.append(inc)
        xs.append(blk.x0 + blk.dx * np.arange(1, inc.size + 1))
        w_last = inc[-1]
    return np.concatenate(xs), np.concatenate(ws)


def sample_w(spec: LevyProcessSpec, x: float, size: int, rng: np.random.Generator, eps: float = 1e-4):
    """Independent samples of W(x).

    Exact for drift, Brownian, exponential-jump, gamma and alpha-stable
    processes; interlacing at ``eps`` otherwise.
    """
    fam = spec.family
    pr = spec.params
    base = 2 * spec.drift_a * x
    if fam is Family.PURE_DRIFT:
        return np.full(size, base)
    if fam is Family.BROWNIAN:
        g = spec.gaussian_g
        return 2 * pr["mu"] * g * x + 2 * math.sqrt(g * x) * rng.standard_normal(size)
    if fam is Family.GAMMA:
        return base + sample_gamma(pr["b"], x, size, rng)
    if fam is Family.ALPHA_STABLE:
        al = pr["alpha"]
        return base + sample_stable(al, size, rng, scale=(pr["p"] * x) ** (1.0 / al))
    if fam is Family.EXP_POISSON:
        counts = rng.poisson(pr["rho"] * x, size)
        out = np.zeros(size)
        pos = counts > 0
        out[pos] = rng.gamma(counts[pos], 1.0 / pr["q"])
        return base + out
    il = interlace(spec, eps)
    counts = rng.poisson(il.jump_rate * x, size)
    jumps = il.jump_sampler(rng, int(counts.sum()))
    owner = np.repeat(np.arange(size), counts)
    return il.w_drift * x + np.bincount(owner, weights=jumps, minlength=size)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

class _Trajectory:
    def __init__(self, model: _SimModel, E: float, rng: np.random.Generator, stride: float,
                 dt: float, sample_cap: int):
        self.m = model
        self.E = float(E)
        self.rng = rng
        self.stride = stride
        self.dt = dt
        # start at Z = +inf
        self.A, self.B = 1.0, 0.0
        self.x = 0.0
        self.next_sample = stride
        self.samples = np.empty(sample_cap)
        self.n_samp = 0
        self.z_min = math.inf

    def advance(self, length, record=True):
        """Evolve over ``length``; returns (crossings, log_growth, W increment)."""
        m = self.m
        x_end = self.x + length
        crossings, log_growth, w_inc = 0, 0.0, m.d * length
        buf = self.samples if record else np.empty(0)
        n_samp = self.n_samp if record else 0
        if m.kind == "drift":
            A, B, c, ls = _flow(self.A, self.B, length, m.d, self.E)
            self.A, self.B, self.x = A, B, x_end
            if record:
                n_new = int(math.floor((x_end - self.next_sample) / self.stride)) + 1 if x_end >= self.next_sample else 0
                z = A / B if B != 0 else math.inf
                take = min(n_new, buf.size - n_samp)
                buf[n_samp:n_samp + take] = z  # deterministic steady state
                n_samp += take
                self.next_sample += n_new * self.stride
                self.z_min = min(self.z_min, z)
            return c, ls, w_inc
        if m.kind == "brownian":
            n_steps = int(round(length / self.dt))
            w_inc = 0.0
            done = 0
            while done < n_steps:
                n = min(_CHUNK * 4, n_steps - done)
                noise = m.sigma * math.sqrt(self.dt) * self.rng.standard_normal(n)
                (self.A, self.B, self.x, self.next_sample, n_samp, c, ls, wn, self.z_min) = _run_brownian(
                    noise, self.E, m.d, self.dt, self.A, self.B, self.x,
                    self.next_sample if record else math.inf, self.stride, buf, n_samp, self.z_min)
                crossings += c
                log_growth += ls
                w_inc += wn + m.d * self.dt * n
                done += n
            if record:
                self.n_samp = n_samp
            return crossings, log_growth, w_inc
        # compound Poisson + drift
        reached = False
        while not reached:
            n = _CHUNK
            gaps = self.rng.standard_exponential(n) / m.rate
            sizes = m.sampler(self.rng, n)
            (self.A, self.B, self.x, nxt, n_samp, c, ls, wj, used, reached, self.z_min) = _run_jumps(
                gaps, sizes, self.E, m.d, self.A, self.B, self.x, x_end,
                self.next_sample if record else math.inf, self.stride, buf, n_samp, self.z_min)
            if record:
                self.next_sample = nxt
            crossings += c
            log_growth += ls
            w_inc += wj
        if record:
            self.n_samp = n_samp
        return crossings, log_growth, w_inc


def _default_sample_cap(cfg: PathConfig):
    return int(min(cfg.total_length / cfg.stride() + 2, 5_000_000))


def riccati_evolve(spec: LevyProcessSpec, E: float, cfg: PathConfig, rng=None) -> RiccatiRun:
    """Evolve one Riccati trajectory of length ``cfg.total_length`` after burn-in."""
    cfg.validate_for(spec, E)
    if not spec.is_subordinator and spec.family is not Family.BROWNIAN:  # pragma: no cover
        raise UnsupportedError("unsupported process")
    model = _sim_model(spec, cfg.epsilon)
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    traj = _Trajectory(model, E, rng, cfg.stride(), cfg.dt, _default_sample_cap(cfg))
    burn = cfg.burn_in_for(E)
    if burn > 0:
        traj.advance(burn, record=False)
        traj.next_sample = traj.x + traj.stride
        traj.z_min = math.inf
    nb = cfg.n_batches
    lb = cfg.total_length / nb
    resets = np.zeros(nb, dtype=np.int64)
    mez = np.zeros(nb)
    tot_log, tot_w = 0.0, 0.0
    for b in range(nb):
        c, ls, w = traj.advance(lb)
        resets[b] = c
        mez[b] = (ls - w) / lb
        tot_log += ls
        tot_w += w
    L = cfg.total_length
    return RiccatiRun(L, int(resets.sum()), (tot_log - tot_w) / L, tot_log, tot_w,
                      np.full(nb, lb), resets, mez, traj.samples[:traj.n_samp].copy(), traj.z_min)


def estimate(spec: LevyProcessSpec, E: float, cfg: PathConfig) -> MCEstimate:
    """Aggregate independent trajectories into N and gamma estimates.

    Each trajectory draws from its own stream spawned from ``cfg.seed``,
    so results do not depend on the number of worker threads.  Standard
    errors are batch means over all trajectories and batches.
    """
    cfg.validate_for(spec, E)
    ss = np.random.SeedSequence(int(cfg.seed))
    children = ss.spawn(cfg.n_trajectories)
    workers = cfg.workers or os.cpu_count() or 1

    def run(child):
        return riccati_evolve(spec, E, cfg, np.random.Generator(np.random.PCG64(child)))

    if workers == 1 or cfg.n_trajectories == 1:
        runs = [run(ch) for ch in children]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            runs = list(ex.map(run, children))
    model = _sim_model(spec, cfg.epsilon)
    lengths = np.concatenate([r.batch_lengths for r in runs])
    counts = np.concatenate([r.batch_resets for r in runs]).astype(float)
    mez = np.concatenate([r.batch_minus_E_over_Z for r in runs])
    L_tot = float(lengths.sum())
    n_rates = counts / lengths
    N_hat = float(counts.sum() / L_tot)
    nb = n_rates.size
    stderr_N = float(np.std(n_rates, ddof=1) / math.sqrt(nb)) if nb > 1 else math.inf
    mez_mean = float(np.sum(mez * lengths) / L_tot)
    stderr_g = float(np.std(mez, ddof=1) / math.sqrt(nb)) if nb > 1 else math.inf
    gamma_hat = model.c0 / 2.0 + mez_mean if math.isfinite(model.c0) else math.nan
    resets = int(counts.sum())
    if E > 0 and resets < 100:
        # too few events for a reliable batch variance: use the Poisson bound
        stderr_N = max(stderr_N, math.sqrt(max(resets, 1)) / L_tot)
        warnings.warn(f"only {resets} resets observed; N_hat is imprecise", RuntimeWarning)
    samples = np.concatenate([r.z_samples for r in runs])
    hist = _histogram(samples)
    return MCEstimate(float(E), N_hat, gamma_hat, stderr_N, stderr_g, hist, resets, L_tot,
                      int(cfg.seed), samples, float(min(r.z_min for r in runs)))


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov distance between samples and a model CDF (callable)."""
    s = np.sort(np.asarray(samples, dtype=float))
    s = s[np.isfinite(s)]
    n = s.size
    F = np.asarray(cdf(s), dtype=float)
    hi = np.arange(1, n + 1) / n - F
    lo = F - np.arange(0, n) / n
    return float(max(hi.max(), lo.max()))
