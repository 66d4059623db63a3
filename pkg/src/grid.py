"""
Uniform grids, sampled fields and the free-space Riesz potential.

Everything lives on the box [-L, L)^N sampled at the nodes x_j = -L + j*h,
j = 0..n-1, with h = 2L/n. Integrals use the rectangle rule, derivatives use
Fourier multipliers on the periodic extension of the box, and the Riesz
potential I_alpha * f is a true free-space convolution over the box obtained
by zero padding to the doubled grid.
"""

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import product
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft, special
from scipy import integrate as sp_integrate

from .utils import (
    get_logger,
    log_function_call,
    BoundaryDecayError,
    GridMismatchError,
    ParameterError,
    ResolutionError,
)

logger = get_logger(__name__)

SELF_CELL_RULES = ("average", "lattice")

DEFAULT_BOUNDARY_LAYER = 4
DEFAULT_BOUNDARY_TOL = 1e-6
DEFAULT_LOST_FRACTION_TOL = 1e-4


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid on [-L, L)^N with n points per axis."""

    dim: int
    points_per_axis: int
    half_extent: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ParameterError(f"invalid dimension {self.dim}: must be 1, 2 or 3")
        n = self.points_per_axis
        if n < 8 or n & (n - 1):
            raise ParameterError(f"points_per_axis={n} must be a power of two >= 8")
        if not self.half_extent > 0:
            raise ParameterError(f"half_extent={self.half_extent} must be positive")
        object.__setattr__(self, "half_extent", float(self.half_extent))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.points_per_axis

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def nyquist(self) -> float:
        return math.pi / self.spacing

    def axis(self) -> np.ndarray:
        return -self.half_extent + self.spacing * np.arange(self.points_per_axis)

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * math.pi * fft.fftfreq(self.points_per_axis, d=self.spacing)

    def coordinates(self) -> Tuple[np.ndarray, ...]:
        """Coordinate arrays broadcastable to ``shape`` (sparse meshgrid)."""
        return tuple(np.meshgrid(*([self.axis()] * self.dim), indexing="ij", sparse=True))

    def distance_from(self, center: Sequence[float]) -> np.ndarray:
        center = as_point(center, self.dim)
        sq = sum((x - c) ** 2 for x, c in zip(self.coordinates(), center))
        return np.sqrt(np.broadcast_to(sq, self.shape))

    def point(self, flat_index: int) -> Tuple[float, ...]:
        index = np.unravel_index(flat_index, self.shape)
        axis = self.axis()
        return tuple(float(axis[i]) for i in index)

    def doubled(self) -> "GridSpec":
        """Grid with the same spacing and twice the extent."""
        return GridSpec(self.dim, 2 * self.points_per_axis, 2.0 * self.half_extent)

    def boundary_layer(self, cells: int = DEFAULT_BOUNDARY_LAYER) -> np.ndarray:
        idx = np.arange(self.points_per_axis)
        edge = (idx < cells) | (idx >= self.points_per_axis - cells)
        mask = np.zeros(self.shape, dtype=bool)
        for d in range(self.dim):
            shape = [1] * self.dim
            shape[d] = self.points_per_axis
            mask |= edge.reshape(shape)
        return mask


def make_grid(dim: int, points_per_axis: int, half_extent: float) -> GridSpec:
    """Validated grid constructor."""
    return GridSpec(int(dim), int(points_per_axis), float(half_extent))


def as_point(point: Union[float, Sequence[float]], dim: int) -> Tuple[float, ...]:
    if np.isscalar(point):
        return (float(point),) * dim
    point = tuple(float(c) for c in point)
    if len(point) != dim:
        raise ParameterError(f"point {point} does not have {dim} coordinates")
    return point


@dataclass(frozen=True, eq=False)
class Field:
    """Real scalar function sampled on a grid (row-major values)."""

    grid: GridSpec
    values: np.ndarray

    # numpy scalars on the left defer to the reflected operators below
    __array_ufunc__ = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.size != self.grid.size:
            raise ParameterError(
                f"field has {values.size} values, grid expects {self.grid.size}"
            )
        values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ParameterError("field values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: GridSpec, func: Callable[..., np.ndarray]) -> "Field":
        """Sample ``func(x0, x1, ...)`` on the grid nodes."""
        return cls(grid, np.broadcast_to(func(*grid.coordinates()), grid.shape))

    def like(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def require_same_grid(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise GridMismatchError(f"grid mismatch: {self.grid} vs {other.grid}")

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def positive_part(self) -> "Field":
        return self.like(np.maximum(self.values, 0.0))

    def norm(self) -> float:
        """Discrete L^2 norm."""
        return math.sqrt(integrate_values(self.values ** 2, self.grid))

    def max(self) -> float:
        return float(self.values.max())

    def min(self) -> float:
        return float(self.values.min())

    def argmax(self) -> int:
        """Flat index of the maximum; ties go to the lowest row-major index."""
        return int(np.argmax(self.values))

    def _other_values(self, other):
        if isinstance(other, Field):
            self.require_same_grid(other)
            return other.values
        return other

    def __add__(self, other):
        return self.like(self.values + self._other_values(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.like(self.values - self._other_values(other))

    def __rsub__(self, other):
        return self.like(self._other_values(other) - self.values)

    def __mul__(self, other):
        return self.like(self.values * self._other_values(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.like(self.values / self._other_values(other))

    def __neg__(self):
        return self.like(-self.values)


def integrate_values(values: np.ndarray, grid: GridSpec) -> float:
    return float(grid.cell_volume * np.sum(values))


def integrate(f: Field) -> float:
    """Rectangle rule h^N * sum(values)."""
    return integrate_values(f.values, f.grid)


# Fourier multipliers

@lru_cache(maxsize=64)
def _wavenumber_sq(grid: GridSpec) -> np.ndarray:
    """|xi|^2 on the half spectrum used by rfftn."""
    k = grid.wavenumbers()
    k_last = 2.0 * math.pi * fft.rfftfreq(grid.points_per_axis, d=grid.spacing)
    axes = [k] * (grid.dim - 1) + [k_last]
    mesh = np.meshgrid(*axes, indexing="ij", sparse=True)
    return sum(m ** 2 for m in mesh)


@lru_cache(maxsize=64)
def _half_spectrum_weights(grid: GridSpec) -> np.ndarray:
    n = grid.points_per_axis
    weights = np.full(n // 2 + 1, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0
    return weights


def apply_multiplier(f: Field, multiplier: np.ndarray) -> Field:
    spectrum = fft.rfftn(f.values)
    return f.like(fft.irfftn(multiplier * spectrum, s=f.grid.shape))


def laplacian(f: Field) -> Field:
    return apply_multiplier(f, -_wavenumber_sq(f.grid))


def boundary_decay_ratio(f: Field, layer_cells: int = DEFAULT_BOUNDARY_LAYER) -> float:
    """max |f| in the boundary layer relative to max |f|."""
    peak = float(np.max(np.abs(f.values)))
    if peak == 0.0:
        return 0.0
    return float(np.max(np.abs(f.values[f.grid.boundary_layer(layer_cells)]))) / peak


def boundary_mass_fraction(f: Field, layer_cells: int = DEFAULT_BOUNDARY_LAYER) -> float:
    """Share of the L^2 mass carried by the boundary layer."""
    total = float(np.sum(f.values ** 2))
    if total == 0.0:
        return 0.0
    return float(np.sum(f.values[f.grid.boundary_layer(layer_cells)] ** 2)) / total


def check_boundary_decay(
    f: Field,
    *,
    strict: bool = False,
    tol: float = DEFAULT_BOUNDARY_TOL,
    layer_cells: int = DEFAULT_BOUNDARY_LAYER,
    label: str = "field",
) -> float:
    ratio = boundary_decay_ratio(f, layer_cells)
    if ratio > tol:
        message = f"{label} does not decay near the box boundary (ratio {ratio:.3e} > {tol:.1e})"
        if strict:
            raise BoundaryDecayError(message)
        logger.warning("Weak boundary decay", label=label, ratio=ratio, tol=tol)
    return ratio


def grad_sq_integral(f: Field, *, strict: bool = False, check: bool = True,
                     tol: float = DEFAULT_BOUNDARY_TOL) -> float:
    """Integral of |grad f|^2 through Parseval with the multiplier |xi|^2."""
    if check:
        check_boundary_decay(f, strict=strict, tol=tol)
    spectrum = fft.rfftn(f.values)
    power = _half_spectrum_weights(f.grid) * _wavenumber_sq(f.grid) * np.abs(spectrum) ** 2
    return float(f.grid.cell_volume * np.sum(power) / f.grid.size)


def inv_helmholtz(f: Field, eps2: float, shift: float) -> Field:
    """(-eps2 * Lap + shift)^{-1} f."""
    if not eps2 > 0 or not shift > 0:
        raise ParameterError(f"inv_helmholtz needs eps2 > 0 and shift > 0, got {eps2}, {shift}")
    return apply_multiplier(f, 1.0 / (eps2 * _wavenumber_sq(f.grid) + shift))


# Riesz potential

def riesz_normalization(dim: int, alpha: float) -> float:
    """A_alpha = Gamma((N-alpha)/2) / (Gamma(alpha/2) pi^{N/2} 2^alpha)."""
    return math.gamma((dim - alpha) / 2.0) / (
        math.gamma(alpha / 2.0) * math.pi ** (dim / 2.0) * 2.0 ** alpha
    )


@lru_cache(maxsize=None)
def cube_average(dim: int, alpha: float) -> float:
    """Average of |x|^{alpha-N} over the cube [-1, 1]^N."""
    if dim == 1:
        return 1.0 / alpha
    exponent = (alpha - dim) / 2.0
    if dim == 2:
        value, _ = sp_integrate.quad(lambda s: (1.0 + s * s) ** exponent, 0.0, 1.0,
                                  epsabs=1e-14, epsrel=1e-13)
    else:
        value, _ = sp_integrate.dblquad(lambda t, s: (1.0 + s * s + t * t) ** exponent,
                                     0.0, 1.0, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    return dim / alpha * value


@lru_cache(maxsize=None)
def epstein_zeta(dim: int, s: float, cutoff: int = 5) -> float:
    """
    Epstein zeta function of the lattice Z^N, continued to 0 < s < N.

    Uses the theta-function splitting of the Mellin integral at t = 1, so
    both lattice sums converge like exp(-pi |m|^2).
    """
    if not 0.0 < s < dim:
        raise ParameterError(f"epstein_zeta needs 0 < s < {dim}, got {s}")
    rng = range(-cutoff, cutoff + 1)
    points = np.array([m for m in product(rng, repeat=dim) if any(m)], dtype=float)
    q = math.pi * np.sum(points ** 2, axis=1)
    a, b = s / 2.0, (dim - s) / 2.0
    direct = np.sum(special.gammaincc(a, q) * special.gamma(a) * q ** (-a))
    dual = np.sum(special.gammaincc(b, q) * special.gamma(b) * q ** (-b))
    bracket = direct + dual - 1.0 / b - 1.0 / a
    return float(math.pi ** a / math.gamma(a) * bracket)


def self_cell_value(dim: int, alpha: float, spacing: float, rule: str = "average") -> float:
    """Value used for the kernel at the zero offset (kernel units, not weights)."""
    a_alpha = riesz_normalization(dim, alpha)
    if rule == "average":
        return a_alpha * (spacing / 2.0) ** (alpha - dim) * cube_average(dim, alpha)
    if rule == "lattice":
        return -a_alpha * spacing ** (alpha - dim) * epstein_zeta(dim, dim - alpha)
    raise ParameterError(f"unknown self-cell rule {rule!r}; expected one of {SELF_CELL_RULES}")


@dataclass(frozen=True, eq=False)
class RieszKernel:
    """Sampled I_alpha on the doubled grid, stored in wrap-around order."""

    grid: GridSpec
    alpha: float
    self_cell: str = "average"

    def __post_init__(self):
        if not 0.0 < self.alpha < self.grid.dim:
            raise ParameterError(f"alpha={self.alpha} must lie in (0, {self.grid.dim})")
        if self.self_cell not in SELF_CELL_RULES:
            raise ParameterError(
                f"unknown self-cell rule {self.self_cell!r}; expected one of {SELF_CELL_RULES}"
            )

    @cached_property
    def normalization(self) -> float:
        return riesz_normalization(self.grid.dim, self.alpha)

    @cached_property
    def self_cell_weight(self) -> float:
        return self_cell_value(self.grid.dim, self.alpha, self.grid.spacing, self.self_cell)

    @cached_property
    def sampled_kernel(self) -> Field:
        big = self.grid.doubled()
        n2 = big.points_per_axis
        offsets = np.arange(n2)
        offsets = np.where(offsets < n2 // 2, offsets, offsets - n2) * self.grid.spacing
        mesh = np.meshgrid(*([offsets] * self.grid.dim), indexing="ij", sparse=True)
        r = np.sqrt(sum(m ** 2 for m in mesh))
        with np.errstate(divide="ignore"):
            values = self.normalization * r ** (self.alpha - self.grid.dim)
        values[(0,) * self.grid.dim] = self.self_cell_weight
        return Field(big, values)

    @cached_property
    def spectrum(self) -> np.ndarray:
        return fft.rfftn(self.sampled_kernel.values) * self.grid.cell_volume


@lru_cache(maxsize=32)
def riesz_kernel(grid: GridSpec, alpha: float, self_cell: str = "average") -> RieszKernel:
    """Cached kernel factory; kernels are immutable and safe to share."""
    logger.debug("Building Riesz kernel", **log_function_call(
        "riesz_kernel", dim=grid.dim, n=grid.points_per_axis, alpha=alpha, self_cell=self_cell))
    return RieszKernel(grid, float(alpha), self_cell)


def _embed(values: np.ndarray, shape: Tuple[int, ...], offset: int = 0) -> np.ndarray:
    padded = np.zeros(shape)
    index = tuple(slice(offset, offset + s) for s in values.shape)
    padded[index] = values
    return padded


def riesz_convolve(f: Field, kernel: RieszKernel) -> Field:
    """(I_alpha * f) on the box by zero-padded FFT on the doubled grid."""
    if f.grid != kernel.grid:
        raise GridMismatchError(f"field grid {f.grid} does not match kernel grid {kernel.grid}")
    big_shape = kernel.sampled_kernel.grid.shape
    padded = fft.rfftn(_embed(f.values, big_shape))
    full = fft.irfftn(kernel.spectrum * padded, s=big_shape)
    n = f.grid.points_per_axis
    return f.like(full[(slice(0, n),) * f.grid.dim])


def riesz_bilinear(f: Field, g: Field, kernel: RieszKernel) -> float:
    """Integral of (I_alpha * f) g."""
    f.require_same_grid(g)
    return integrate(riesz_convolve(f, kernel) * g)


def riesz_semigroup_defect(f: Field, alpha: float, self_cell: str = "average",
                           window: Optional[float] = None) -> float:
    """
    Relative L^2 gap between I_{a/2} * (I_{a/2} * f) and I_a * f on the box,
    or on the ball of radius ``window`` about the origin.

    The intermediate potential is evaluated on the box doubled in extent;
    what remains is the tail of I_{a/2} * f beyond it, pointwise of order L^{a-N}.
    """
    grid = f.grid
    big = grid.doubled()
    offset = grid.points_per_axis // 2
    half = riesz_kernel(big, alpha / 2.0, self_cell)
    embedded = Field(big, _embed(f.values, big.shape, offset))
    twice = riesz_convolve(riesz_convolve(embedded, half), half)
    inner = tuple(slice(offset, offset + grid.points_per_axis) for _ in range(grid.dim))
    composed = twice.values[inner]
    direct = riesz_convolve(f, riesz_kernel(grid, alpha, self_cell)).values
    if window is not None:
        keep = grid.distance_from(0.0) <= window
        composed, direct = composed[keep], direct[keep]
    scale = np.linalg.norm(direct)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(composed - direct) / scale)


# Band-limited resampling

def _interpolation_matrix(source: GridSpec, points: np.ndarray) -> np.ndarray:
    n = source.points_per_axis
    k = source.wavenumbers()
    shifted = points + source.half_extent
    matrix = np.exp(1j * np.outer(shifted, k)) / n
    matrix[:, n // 2] = np.cos(shifted * k[n // 2]) / n
    outside = (points < -source.half_extent) | (points >= source.half_extent)
    matrix[outside, :] = 0.0
    return matrix


def lost_spectral_fraction(f: Field, factor: float, target: GridSpec) -> float:
    """Spectral energy of f pushed beyond the target Nyquist by a compression ``factor``."""
    spectrum = np.abs(fft.fftn(f.values)) ** 2
    total = float(spectrum.sum())
    if total == 0.0:
        return 0.0
    k = np.abs(f.grid.wavenumbers()) * abs(factor)
    beyond = k > target.nyquist
    mesh = np.meshgrid(*([beyond] * f.grid.dim), indexing="ij", sparse=True)
    lost = np.zeros(f.grid.shape, dtype=bool)
    for m in mesh:
        lost = lost | m
    return float(spectrum[lost].sum()) / total


def resample(
    f: Field,
    target: GridSpec,
    *,
    source_origin: Optional[Sequence[float]] = None,
    target_origin: Optional[Sequence[float]] = None,
    factor: float = 1.0,
    amplitude: float = 1.0,
    lost_fraction_tol: float = DEFAULT_LOST_FRACTION_TOL,
) -> Field:
    """
    Evaluate amplitude * f(source_origin + factor * (x - target_origin)) on ``target``.

    The trigonometric interpolant of f is used; points outside the source box
    get zero. Raises ResolutionError when more than ``lost_fraction_tol`` of
    the spectral energy would land beyond the target Nyquist frequency.
    """
    if target.dim != f.grid.dim:
        raise GridMismatchError(f"cannot resample {f.grid.dim}-D field onto {target.dim}-D grid")
    source_origin = as_point(0.0 if source_origin is None else source_origin, target.dim)
    target_origin = as_point(0.0 if target_origin is None else target_origin, target.dim)
    lost = lost_spectral_fraction(f, factor, target)
    if lost > lost_fraction_tol:
        raise ResolutionError(
            f"target grid cannot resolve the resampled profile "
            f"(lost spectral fraction {lost:.2e} > {lost_fraction_tol:.1e})"
        )
    spectrum = fft.fftn(f.values)
    axis = target.axis()
    for d in range(target.dim):
        points = source_origin[d] + factor * (axis - target_origin[d])
        matrix = _interpolation_matrix(f.grid, points)
        spectrum = np.moveaxis(np.tensordot(matrix, spectrum, axes=([1], [d])), 0, d)
    return Field(target, amplitude * spectrum.real)
