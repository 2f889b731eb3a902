"""Periodic state space and exact spectral calculus.

Everything downstream (particle simulation, the viscous Hamilton-Jacobi
solver, the occupation-function machinery) lives on the unit torus [0, 1).
Test functions and initial data are finite Fourier sums, so the Laplacian,
the squared-gradient form, and the heat semigroup are all exact: the only
error budgets left in the laboratory are Monte Carlo noise and explicitly
reported projection error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TorusDomain:
    """Uniform grid on the unit torus.

    grid_size must be a power of two and at least 8 so that forward and
    inverse real FFTs are exact, fast transforms of trigonometric
    polynomials up to mode grid_size/2 - 1.
    """

    grid_size: int = 256

    def __post_init__(self):
        n = self.grid_size
        if n < 8 or (n & (n - 1)) != 0:
            raise ValueError(
                f"grid_size must be a power of two >= 8, got {n}"
            )

    @property
    def dx(self) -> float:
        return 1.0 / self.grid_size

    def grid(self, oversample: int = 1) -> np.ndarray:
        """Grid points j/(oversample*N), j = 0..oversample*N-1."""
        n = self.grid_size * oversample
        return np.arange(n) / n

    @property
    def max_mode(self) -> int:
        """Highest Fourier mode representable without aliasing (Nyquist excluded)."""
        return self.grid_size // 2 - 1


def wrap(x: np.ndarray | float) -> np.ndarray | float:
    """Reduce coordinates modulo 1 into [0, 1)."""
    return np.mod(x, 1.0)


@dataclass(frozen=True)
class FourierFunction:
    """Real trigonometric polynomial f(x) = mean + sum_k (a_k cos 2pi k x + b_k sin 2pi k x).

    cos_coeffs[k-1] and sin_coeffs[k-1] hold the mode-k coefficients.
    Evaluation, differentiation and the heat flow act on the coefficients
    exactly; no grid is involved until a caller samples the function.
    """

    mean: float
    cos_coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sin_coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.cos_coeffs, dtype=float))
        b = np.atleast_1d(np.asarray(self.sin_coeffs, dtype=float))
        m = max(a.size, b.size)
        a = np.pad(a, (0, m - a.size))
        b = np.pad(b, (0, m - b.size))
        object.__setattr__(self, "cos_coeffs", a)
        object.__setattr__(self, "sin_coeffs", b)
        object.__setattr__(self, "mean", float(self.mean))

    # -- construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, c: float) -> "FourierFunction":
        return cls(mean=c)

    @classmethod
    def from_modes(
        cls,
        mean: float = 0.0,
        cos: dict[int, float] | None = None,
        sin: dict[int, float] | None = None,
    ) -> "FourierFunction":
        """Build from sparse {mode: coefficient} dictionaries (modes >= 1)."""
        cos = cos or {}
        sin = sin or {}
        kmax = max([0, *cos.keys(), *sin.keys()])
        a = np.zeros(kmax)
        b = np.zeros(kmax)
        for k, v in cos.items():
            if k < 1:
                raise ValueError("cosine modes must be >= 1")
            a[k - 1] = v
        for k, v in sin.items():
            if k < 1:
                raise ValueError("sine modes must be >= 1")
            b[k - 1] = v
        return cls(mean=mean, cos_coeffs=a, sin_coeffs=b)

    @classmethod
    def from_grid(cls, values: np.ndarray, max_mode: int | None = None) -> "FourierFunction":
        """Project uniform-grid samples onto Fourier modes 1..max_mode.

        For a trigonometric polynomial of degree < len(values)/2 the
        projection is exact; for general smooth data it is the alias-folded
        truncation.  The Nyquist mode is always dropped, so the default
        max_mode is len(values)//2 - 1.
        """
        v = np.asarray(values, dtype=float)
        n = v.size
        if max_mode is None:
            max_mode = n // 2 - 1
        if max_mode > n // 2 - 1:
            raise ValueError("max_mode exceeds what the grid resolves")
        spec = np.fft.rfft(v)
        a = 2.0 * spec[1 : max_mode + 1].real / n
        b = -2.0 * spec[1 : max_mode + 1].imag / n
        return cls(mean=spec[0].real / n, cos_coeffs=a, sin_coeffs=b)

    # -- basic queries ---------------------------------------------------------

    @property
    def max_mode(self) -> int:
        return self.cos_coeffs.size

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        """Evaluate at arbitrary points (periodic, so no wrapping needed)."""
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.mean)
        for k in range(1, self.max_mode + 1):
            a = self.cos_coeffs[k - 1]
            b = self.sin_coeffs[k - 1]
            if a == 0.0 and b == 0.0:
                continue
            ang = TWO_PI * k * x
            if a != 0.0:
                out += a * np.cos(ang)
            if b != 0.0:
                out += b * np.sin(ang)
        return out if out.shape else float(out)

    def sample(self, dom: TorusDomain, oversample: int = 1) -> np.ndarray:
        """Exact samples on the domain grid via inverse FFT.

        Requires max_mode < oversample*grid_size/2.
        """
        n = dom.grid_size * oversample
        if self.max_mode >= n // 2:
            raise ValueError("grid too coarse to hold this function exactly")
        spec = np.zeros(n // 2 + 1, dtype=complex)
        spec[0] = n * self.mean
        k = self.max_mode
        spec[1 : k + 1] = 0.5 * n * (self.cos_coeffs - 1j * self.sin_coeffs)
        return np.fft.irfft(spec, n=n)

    def extrema(self, n_points: int = 4096) -> tuple[float, float]:
        """(min, max) over a refined grid; n_points is raised if the
        function has modes too high for the default sampling."""
        n = max(n_points, 8 * (self.max_mode + 1))
        x = np.arange(n) / n
        v = self.evaluate(x)
        return float(v.min()), float(v.max())

    # -- calculus (exact on coefficients) --------------------------------------

    def derivative(self) -> "FourierFunction":
        k = np.arange(1, self.max_mode + 1)
        return FourierFunction(
            mean=0.0,
            cos_coeffs=TWO_PI * k * self.sin_coeffs,
            sin_coeffs=-TWO_PI * k * self.cos_coeffs,
        )

    def laplacian(self) -> "FourierFunction":
        k = np.arange(1, self.max_mode + 1)
        mult = -((TWO_PI * k) ** 2)
        return FourierFunction(
            mean=0.0,
            cos_coeffs=mult * self.cos_coeffs,
            sin_coeffs=mult * self.sin_coeffs,
        )

    def __add__(self, other):
        if isinstance(other, FourierFunction):
            m = max(self.max_mode, other.max_mode)
            pad = lambda c, n: np.pad(c, (0, n - c.size))  # noqa: E731
            return FourierFunction(
                self.mean + other.mean,
                pad(self.cos_coeffs, m) + pad(other.cos_coeffs, m),
                pad(self.sin_coeffs, m) + pad(other.sin_coeffs, m),
            )
        return FourierFunction(self.mean + float(other), self.cos_coeffs, self.sin_coeffs)

    def __sub__(self, other):
        return self + (other * -1.0 if isinstance(other, FourierFunction) else -float(other))

    def __mul__(self, scalar: float) -> "FourierFunction":
        s = float(scalar)
        return FourierFunction(self.mean * s, self.cos_coeffs * s, self.sin_coeffs * s)

    __rmul__ = __mul__


def product(f: FourierFunction, g: FourierFunction) -> FourierFunction:
    """Exact pointwise product, a trigonometric polynomial of degree
    max_mode(f) + max_mode(g).

    Computed by sampling on a grid fine enough to avoid aliasing and
    projecting back, which is exact (up to round-off) for trig polynomials.
    """
    deg = f.max_mode + g.max_mode
    n = 8
    while n < 2 * deg + 2:
        n *= 2
    x = np.arange(n) / n
    vals = f.evaluate(x) * g.evaluate(x)
    return FourierFunction.from_grid(vals, max_mode=deg if deg > 0 else None)


def generator_L(f: FourierFunction) -> FourierFunction:
    """The generator, the one-dimensional Laplacian: mode-k multiplier -(2 pi k)^2."""
    return f.laplacian()


def heat_semigroup(
    dom: TorusDomain, f: FourierFunction, diffusivity: float, t: float
) -> FourierFunction:
    """Apply the heat flow with generator (diffusivity/2) * Laplacian for time t.

    Acts diagonally on modes: coefficient k picks up
    exp(-(diffusivity/2) (2 pi k)^2 t); the mean is untouched, so mass is
    conserved exactly.

    Parameters
    ----------
    dom : TorusDomain
        Domain the function lives on (the flow itself is grid-free).
    f : FourierFunction
        Input function.
    diffusivity : float
        Positive diffusion coefficient in front of Laplacian/2.
    t : float
        Nonnegative time.
    """
    if t < 0:
        raise ValueError(f"heat flow needs t >= 0, got {t}")
    if diffusivity <= 0:
        raise ValueError(f"diffusivity must be positive, got {diffusivity}")
    if f.max_mode == 0:
        return f
    k = np.arange(1, f.max_mode + 1)
    damp = np.exp(-0.5 * diffusivity * (TWO_PI * k) ** 2 * t)
    return FourierFunction(f.mean, f.cos_coeffs * damp, f.sin_coeffs * damp)


def carre_du_champ(f: FourierFunction, g: FourierFunction | None = None) -> FourierFunction:
    """Squared-gradient form Gamma(f, g) = f' g' (g defaults to f).

    The result is returned as an exact FourierFunction (the product of two
    trig polynomials is one), so it can be evaluated pointwise or pushed
    through the heat flow without further approximation.
    """
    if g is None:
        g = f
    return product(f.derivative(), g.derivative())


def random_fourier_suite(
    seed: int,
    count: int,
    max_mode: int = 3,
    amplitude: float = 0.5,
    nonnegative: bool = False,
) -> list[FourierFunction]:
    """Deterministic suite of random low-mode test functions.

    Coefficients decay like 1/k so the functions stay tame; with
    nonnegative=True the mean is lifted until min f >= amplitude/10.
    """
    rng = np.random.Generator(np.random.Philox(key=(seed, 0xF0F0)))
    out = []
    for _ in range(count):
        k = np.arange(1, max_mode + 1)
        a = amplitude * rng.uniform(-1, 1, max_mode) / k
        b = amplitude * rng.uniform(-1, 1, max_mode) / k
        f = FourierFunction(rng.uniform(-1, 1), a, b)
        if nonnegative:
            lo, _ = f.extrema()
            floor = amplitude / 10.0
            if lo < floor:
                f = FourierFunction(f.mean + (floor - lo), f.cos_coeffs, f.sin_coeffs)
        out.append(f)
    return out
