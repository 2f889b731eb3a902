"""Empirical-measure solutions and their martingale functionals.

The measure-valued process under study has solutions only when the noise
parameter is a positive integer n and the initial condition is n atoms of
weight 1/n.  Those solutions are explicit: run n independent Brownian
particles (generator Laplacian/2) at internal time n*t and take the
empirical measure.  This module samples exactly that construction and
evaluates the martingale functional

    M_t(phi) = <mu_t, phi> - <mu_0, phi> - (alpha/2) int_0^t <mu_s, L phi> ds

together with its predicted quadratic variation int_0^t <mu_s, Gamma phi> ds.

Brownian increments are exact in law at the stored grid times (Gaussian
increments plus wrap-around), so the only discretization error is the
trapezoid rule in the two time integrals, O((t/num_steps)^2) per integral.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .parallel import run_chunked
from .rng import RngStream, StreamBank, REPLICATE_STRIDE, gaussian_increment
from .torus import FourierFunction, carre_du_champ, generator_L, wrap


def require_integer_alpha(alpha, n_atoms: int) -> int:
    """Validate the only parameter regime in which the process exists."""
    if not float(alpha).is_integer() or alpha < 1:
        raise ValueError(
            f"alpha = {alpha}: the dynamics only exists for positive integer "
            "alpha with alpha atoms of weight 1/alpha; for non-integer alpha "
            "there is no process to sample, so the request is refused rather "
            "than fabricated"
        )
    n = int(alpha)
    if n != n_atoms:
        raise ValueError(
            f"alpha = {n} requires exactly {n} atoms of weight 1/{n}, "
            f"got {n_atoms}"
        )
    return n


@dataclass(frozen=True)
class EmpiricalMeasure:
    """n unit-weight/n atoms on the torus; total mass is exactly 1."""

    positions: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.positions, dtype=float))
        if p.ndim != 1 or p.size == 0:
            raise ValueError("positions must be a nonempty 1-D array")
        object.__setattr__(self, "positions", wrap(p))

    @property
    def n(self) -> int:
        return self.positions.size

    def integrate(self, f) -> float:
        """<mu, f> = (1/n) sum f(x_i), exact."""
        return float(np.mean(f(self.positions)))


def pair_against(phi: FourierFunction, mu: EmpiricalMeasure) -> float:
    """<mu, phi>: the exact average of phi over the atoms."""
    return mu.integrate(phi)


@dataclass(frozen=True)
class ParticlePath:
    """Trajectory of the empirical measure on a uniform time grid.

    positions[k, i] is particle i at external time times[k]; increments
    between grid times are exact Gaussian draws of variance
    alpha * (time step) per particle (internal clock runs alpha times
    faster than the external one).
    """

    times: np.ndarray
    positions: np.ndarray  # shape (len(times), n)
    alpha: int

    @cached_property
    def states(self) -> list[EmpiricalMeasure]:
        return [EmpiricalMeasure(row) for row in self.positions]

    def measure_at(self, k: int) -> EmpiricalMeasure:
        return EmpiricalMeasure(self.positions[k])


@dataclass(frozen=True)
class MartingaleSample:
    """M_t(phi) and the quadratic-variation integrand along one path."""

    phi: FourierFunction
    times: np.ndarray
    m_values: np.ndarray
    qv_integral: np.ndarray


def simulate_path(
    mu0: EmpiricalMeasure,
    alpha: int,
    t_final: float,
    num_steps: int,
    stream: RngStream,
) -> ParticlePath:
    """Sample one path of the empirical-measure process.

    Particle i draws its increments from stream.child(i), so with
    stream = replicate_stream(seed, r) the layout is the documented
    stream_id = r * 2**32 + i.

    Parameters
    ----------
    mu0 : EmpiricalMeasure
        Initial atoms; must be alpha atoms of weight 1/alpha (repetitions
        allowed).
    alpha : int
        Positive integer parameter; also the particle count.
    t_final : float
        External end time (internal clock runs to alpha * t_final).
    num_steps : int
        Uniform steps of the storage grid.
    stream : RngStream
        Base stream of this replicate.
    """
    n = require_integer_alpha(alpha, mu0.n)
    if t_final < 0:
        raise ValueError("t_final must be nonnegative")
    if num_steps < 1:
        raise ValueError("num_steps must be positive")
    times = np.linspace(0.0, t_final, num_steps + 1)
    dt_internal = n * (t_final / num_steps)
    incr = np.empty((num_steps, n))
    for i in range(n):
        incr[:, i] = gaussian_increment(stream.child(i), num_steps, dt_internal)
    pos = np.empty((num_steps + 1, n))
    pos[0] = mu0.positions
    pos[1:] = wrap(mu0.positions[None, :] + np.cumsum(incr, axis=0))
    return ParticlePath(times=times, positions=pos, alpha=n)


def sample_terminal(
    mu0: EmpiricalMeasure, alpha: int, t: float, stream: RngStream
) -> EmpiricalMeasure:
    """Exact-in-law sample of mu_t without storing a path.

    Particle i sits at x_i + N(0, alpha * t) wrapped; one draw per
    particle from stream.child(i).
    """
    n = require_integer_alpha(alpha, mu0.n)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0.0:
        return mu0
    sigma = np.sqrt(n * t)
    incr = np.array(
        [gaussian_increment(stream.child(i), 1, 1.0)[0] for i in range(n)]
    )
    return EmpiricalMeasure(wrap(mu0.positions + sigma * incr))


def martingale_functional(path: ParticlePath, phi: FourierFunction) -> MartingaleSample:
    """Evaluate M_t(phi) and the QV integrand along the stored grid.

    Time integrals use the trapezoid rule on the path's grid; the grid must
    be fine enough for the resulting O(dt^2) bias to sit below the
    caller's tolerance.
    """
    lphi = generator_L(phi)
    gphi = carre_du_champ(phi)
    pairing = phi.evaluate(path.positions).mean(axis=1)
    l_pairing = lphi.evaluate(path.positions).mean(axis=1)
    g_pairing = gphi.evaluate(path.positions).mean(axis=1)
    m, qv = _assemble_functionals(
        path.times, pairing, l_pairing, g_pairing, path.alpha
    )
    return MartingaleSample(phi=phi, times=path.times, m_values=m, qv_integral=qv)


def _assemble_functionals(times, pairing, l_pairing, g_pairing, alpha):
    """Trapezoid accumulation shared by the single-path and ensemble drivers.

    pairing arrays may be (T,) or (R, T); operates along the last axis.
    """
    dt = np.diff(times)
    cumtrap = lambda y: np.concatenate(  # noqa: E731
        [
            np.zeros(y.shape[:-1] + (1,)),
            np.cumsum(0.5 * dt * (y[..., 1:] + y[..., :-1]), axis=-1),
        ],
        axis=-1,
    )
    m = pairing - pairing[..., :1] - 0.5 * alpha * cumtrap(l_pairing)
    qv = cumtrap(g_pairing)
    return m, qv


@dataclass(frozen=True)
class QvReport:
    """Ensemble statistics for the martingale and quadratic-variation checks."""

    t: float
    replicates: int
    mean_m: float
    se_m: float
    z_mean: float
    mean_m2: float
    mean_qv: float
    se_diff: float
    z_qv: float

    @property
    def passed(self) -> bool:
        return abs(self.z_mean) <= 3.0 and abs(self.z_qv) <= 3.0


def qv_statistic(samples, t_index: int = -1) -> QvReport:
    """Reduce an ensemble of MartingaleSample (or raw (m, qv) arrays).

    The QV z-score uses the paired per-replicate differences
    M_t^2 - qv_t, which is the correct standard error for testing that
    their common mean gap is zero.
    """
    if isinstance(samples, tuple):
        m_final, qv_final, t = samples
    else:
        samples = list(samples)
        if not samples:
            raise ValueError("empty ensemble")
        m_final = np.array([s.m_values[t_index] for s in samples])
        qv_final = np.array([s.qv_integral[t_index] for s in samples])
        t = float(samples[0].times[t_index])
    r = m_final.size
    if r < 100:
        raise ValueError(f"need at least 100 replicates, got {r}")
    se = lambda x: float(np.std(x, ddof=1) / np.sqrt(x.size))  # noqa: E731
    mean_m = float(np.mean(m_final))
    se_m = se(m_final)
    diff = m_final**2 - qv_final
    se_d = se(diff)
    return QvReport(
        t=float(t),
        replicates=r,
        mean_m=mean_m,
        se_m=se_m,
        z_mean=mean_m / se_m if se_m > 0 else 0.0,
        mean_m2=float(np.mean(m_final**2)),
        mean_qv=float(np.mean(qv_final)),
        se_diff=se_d,
        z_qv=float(np.mean(diff) / se_d) if se_d > 0 else 0.0,
    )


# -- vectorized ensemble drivers ---------------------------------------------
#
# The replicate loops below reproduce, bit for bit, what per-replicate
# simulate_path / sample_terminal calls would draw (same stream keys, same
# draw order); only the post-processing is batched.


def standard_increments(
    n: int, replicates: int, seed: int, first_replicate: int = 0, threads: int | None = None
) -> np.ndarray:
    """One standard normal per (replicate, particle), shape (replicates, n).

    Replicate r (global index first_replicate + r) particle i draws from
    stream (seed, (first_replicate + r) * 2**32 + i); values depend only on
    those keys, so the chunked parallel fill is schedule-independent.
    """
    xi = np.empty((replicates, n))

    def fill(lo, hi):
        bank = StreamBank(seed)
        for r in range(lo, hi):
            base = (first_replicate + r) * REPLICATE_STRIDE
            for i in range(n):
                xi[r, i] = bank.normals(base + i, 1)[0]

    run_chunked(replicates, fill, threads)
    return xi


def terminal_ensemble(
    mu0: EmpiricalMeasure,
    alpha: int,
    t: float,
    replicates: int,
    seed: int,
    first_replicate: int = 0,
    threads: int | None = None,
) -> np.ndarray:
    """Positions of mu_t for a block of replicates, shape (replicates, n)."""
    n = require_integer_alpha(alpha, mu0.n)
    xi = standard_increments(n, replicates, seed, first_replicate, threads)
    if t == 0.0:
        return np.tile(mu0.positions, (replicates, 1))
    return wrap(mu0.positions[None, :] + np.sqrt(n * t) * xi)


def martingale_ensemble(
    mu0: EmpiricalMeasure,
    alpha: int,
    phi: FourierFunction,
    t_final: float,
    num_steps: int,
    replicates: int,
    seed: int,
    threads: int | None = None,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Final-time (M_t(phi), qv_t) over an ensemble of paths.

    Returns (m_final, qv_final, t_final) ready for qv_statistic.  Paths are
    simulated in chunks: the per-replicate stream draws are identical to
    simulate_path, the phi evaluations are batched.
    """
    n = require_integer_alpha(alpha, mu0.n)
    times = np.linspace(0.0, t_final, num_steps + 1)
    dt_internal = n * (t_final / num_steps)
    lphi = generator_L(phi)
    gphi = carre_du_champ(phi)
    m_final = np.empty(replicates)
    qv_final = np.empty(replicates)
    sigma = np.sqrt(dt_internal)

    def fill(lo, hi):
        bank = StreamBank(seed)
        incr = np.empty((hi - lo, num_steps, n))
        for r in range(lo, hi):
            base = r * REPLICATE_STRIDE
            for i in range(n):
                incr[r - lo, :, i] = bank.normals(base + i, num_steps)
        pos = np.empty((hi - lo, num_steps + 1, n))
        pos[:, 0, :] = mu0.positions
        pos[:, 1:, :] = wrap(
            mu0.positions[None, None, :] + sigma * np.cumsum(incr, axis=1)
        )
        pairing = phi.evaluate(pos).mean(axis=2)
        l_pairing = lphi.evaluate(pos).mean(axis=2)
        g_pairing = gphi.evaluate(pos).mean(axis=2)
        m, qv = _assemble_functionals(times, pairing, l_pairing, g_pairing, n)
        m_final[lo:hi] = m[:, -1]
        qv_final[lo:hi] = qv[:, -1]

    run_chunked(replicates, fill, threads, min_chunk=512)
    return m_final, qv_final, t_final
