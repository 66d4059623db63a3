"""Tests for grids, fields, Fourier multipliers and the Riesz potential."""

import math

import numpy as np
import pytest

from src.grid import (
    Field,
    GridSpec,
    boundary_decay_ratio,
    boundary_mass_fraction,
    check_boundary_decay,
    epstein_zeta,
    grad_sq_integral,
    integrate,
    inv_helmholtz,
    laplacian,
    lost_spectral_fraction,
    make_grid,
    resample,
    riesz_convolve,
    riesz_kernel,
    riesz_normalization,
    riesz_semigroup_defect,
    self_cell_value,
)
from src.utils import BoundaryDecayError, GridMismatchError, ParameterError, ResolutionError
from tests.conftest import direct_riesz_1d, gaussian


@pytest.mark.parametrize("dim, n, half_extent", [(4, 64, 8.0), (1, 100, 8.0), (1, 4, 8.0), (2, 64, 0.0)])
def test_invalid_grid_rejected(dim: int, n: int, half_extent: float) -> None:
    with pytest.raises(ParameterError):
        make_grid(dim, n, half_extent)


def test_origin_is_a_node(grid1: GridSpec) -> None:
    axis = grid1.axis()
    assert axis[0] == -8.0
    assert axis[grid1.points_per_axis // 2] == 0.0
    assert grid1.spacing == 0.25
    assert grid1.point(grid1.points_per_axis // 2) == (0.0,)


def test_doubled_grid_keeps_spacing(grid2: GridSpec) -> None:
    big = grid2.doubled()
    assert big.spacing == grid2.spacing
    assert big.half_extent == 2.0 * grid2.half_extent


def test_field_rejects_bad_values(grid1: GridSpec) -> None:
    with pytest.raises(ParameterError):
        Field(grid1, np.full(grid1.shape, np.nan))
    with pytest.raises(ParameterError):
        Field(grid1, np.zeros(grid1.size + 1))


def test_field_arithmetic_requires_same_grid(grid1: GridSpec) -> None:
    other = make_grid(1, 128, 8.0)
    with pytest.raises(GridMismatchError):
        Field.zeros(grid1) + Field.zeros(other)


def test_numpy_scalar_scales_field(grid1: GridSpec) -> None:
    f = gaussian(grid1)
    scaled = np.float64(2.0) * f
    assert isinstance(scaled, Field)
    np.testing.assert_allclose(scaled.values, 2.0 * f.values)


def test_argmax_ties_go_to_lowest_index(grid1: GridSpec) -> None:
    f = Field.constant(grid1, 1.0)
    assert f.argmax() == 0


def test_integrate_gaussian(grid1: GridSpec, grid2: GridSpec) -> None:
    assert math.isclose(integrate(gaussian(grid1)), math.sqrt(math.pi), rel_tol=1e-10)
    assert math.isclose(integrate(gaussian(grid2)), math.pi, rel_tol=1e-10)


def test_laplacian_of_gaussian(grid1: GridSpec) -> None:
    x = grid1.axis()
    expected = (4.0 * x ** 2 - 2.0) * np.exp(-x ** 2)
    np.testing.assert_allclose(laplacian(gaussian(grid1)).values, expected, atol=1e-10)


def test_grad_sq_integral_of_gaussian(grid1: GridSpec) -> None:
    assert math.isclose(grad_sq_integral(gaussian(grid1)), math.sqrt(math.pi / 2.0), rel_tol=1e-10)


def test_inv_helmholtz_inverts_operator(grid2: GridSpec) -> None:
    f = gaussian(grid2, (0.5, -1.0))
    g = inv_helmholtz(f, 0.3, 1.7)
    back = -0.3 * laplacian(g) + 1.7 * g
    np.testing.assert_allclose(back.values, f.values, atol=1e-12)


def test_inv_helmholtz_rejects_nonpositive_shift(grid1: GridSpec) -> None:
    with pytest.raises(ParameterError):
        inv_helmholtz(gaussian(grid1), 1.0, 0.0)


def test_boundary_decay(grid1: GridSpec) -> None:
    assert boundary_decay_ratio(gaussian(grid1)) < 1e-6
    assert boundary_mass_fraction(gaussian(grid1)) < 1e-12
    flat = Field.constant(grid1, 1.0)
    assert check_boundary_decay(flat) == 1.0
    with pytest.raises(BoundaryDecayError):
        check_boundary_decay(flat, strict=True)


# Riesz potential

def test_riesz_normalization_constant() -> None:
    assert math.isclose(riesz_normalization(3, 2.0), 1.0 / (4.0 * math.pi), rel_tol=1e-14)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9])
@pytest.mark.parametrize("rule", ["average", "lattice"])
def test_riesz_matches_direct_summation(alpha: float, rule: str, grid1: GridSpec) -> None:
    f = gaussian(grid1, 0.7)
    kernel = riesz_kernel(grid1, alpha, rule)
    fast = riesz_convolve(f, kernel).values
    slow = direct_riesz_1d(f, alpha, kernel.self_cell_weight)
    assert np.linalg.norm(fast - slow) / np.linalg.norm(slow) < 1e-10


def test_riesz_kernel_rejects_bad_alpha(grid1: GridSpec) -> None:
    with pytest.raises(ParameterError):
        riesz_kernel(grid1, 1.0)
    with pytest.raises(ParameterError):
        riesz_kernel(grid1, 0.5, "midpoint")


def test_riesz_convolve_requires_kernel_grid(grid1: GridSpec) -> None:
    kernel = riesz_kernel(make_grid(1, 128, 8.0), 0.5)
    with pytest.raises(GridMismatchError):
        riesz_convolve(gaussian(grid1), kernel)


def test_riesz_matches_direct_summation_for_random_field(grid1: GridSpec, rng) -> None:
    f = Field(grid1, rng.normal(size=grid1.shape))
    kernel = riesz_kernel(grid1, 0.5, "lattice")
    fast = riesz_convolve(f, kernel).values
    slow = direct_riesz_1d(f, 0.5, kernel.self_cell_weight)
    assert np.linalg.norm(fast - slow) / np.linalg.norm(slow) < 1e-10


def test_riesz_matches_direct_summation_in_two_dimensions(rng) -> None:
    grid = make_grid(2, 16, 4.0)
    alpha = 1.0
    f = Field(grid, rng.normal(size=grid.shape))
    kernel = riesz_kernel(grid, alpha)
    xs, ys = (c.ravel() for c in np.meshgrid(grid.axis(), grid.axis(), indexing="ij"))
    offsets = np.hypot(xs[:, None] - xs[None, :], ys[:, None] - ys[None, :])
    with np.errstate(divide="ignore"):
        matrix = riesz_normalization(2, alpha) * offsets ** (alpha - 2.0)
    np.fill_diagonal(matrix, kernel.self_cell_weight)
    slow = (grid.cell_volume * matrix @ f.values.ravel()).reshape(grid.shape)
    fast = riesz_convolve(f, kernel).values
    assert np.linalg.norm(fast - slow) / np.linalg.norm(slow) < 1e-10


def test_riesz_convolve_is_linear_and_positive(grid1: GridSpec, rng) -> None:
    kernel = riesz_kernel(grid1, 0.5)
    f = Field(grid1, rng.normal(size=grid1.shape))
    g = Field(grid1, rng.normal(size=grid1.shape))
    combined = riesz_convolve(2.0 * f - 3.0 * g, kernel).values
    separate = 2.0 * riesz_convolve(f, kernel).values - 3.0 * riesz_convolve(g, kernel).values
    np.testing.assert_allclose(combined, separate, atol=1e-12 * np.abs(separate).max())
    # a nonnegative, nonzero source gives a strictly positive potential everywhere
    bump = Field(grid1, np.maximum(0.0, 1.0 - grid1.axis() ** 2))
    assert riesz_convolve(bump, kernel).min() > 0.0


def test_epstein_zeta_one_dimension() -> None:
    # Z_1(s) = 2 zeta(s); zeta(1/2) = -1.4603545088095868...
    assert math.isclose(epstein_zeta(1, 0.5), 2.0 * -1.4603545088095868, rel_tol=1e-8)


def test_self_cell_weights_positive_in_one_dimension() -> None:
    # zeta(s) < 0 on (0, 1), so the lattice weight is positive
    assert self_cell_value(1, 0.5, 0.25, "lattice") > 0.0
    assert self_cell_value(1, 0.5, 0.25, "average") > 0.0
    with pytest.raises(ParameterError):
        self_cell_value(1, 0.5, 0.25, "midpoint")


def test_lattice_rule_reduces_local_bias() -> None:
    # I_alpha * exp(-x^2) at 0 equals A_alpha Gamma(alpha/2) in one dimension
    alpha = 0.5
    exact = riesz_normalization(1, alpha) * math.gamma(alpha / 2.0)
    errors = {}
    for rule in ("average", "lattice"):
        grid = make_grid(1, 256, 16.0)
        value = riesz_convolve(gaussian(grid), riesz_kernel(grid, alpha, rule)).values[128]
        errors[rule] = abs(value - exact)
    assert errors["lattice"] < errors["average"]


def test_semigroup_defect_follows_tail_rate() -> None:
    # near the origin the truncated tail is of order L^{alpha-N}; spacing is 0.25 on both boxes
    alpha = 0.5
    defects = []
    for n, half_extent in ((64, 8.0), (256, 32.0)):
        grid = make_grid(1, n, half_extent)
        bump = Field(grid, np.maximum(0.0, 1.0 - grid.axis() ** 2) ** 3)
        defects.append(riesz_semigroup_defect(bump, alpha, "lattice", window=2.0))
    predicted = (8.0 / 32.0) ** (1.0 - alpha)
    assert defects[1] <= 1.5 * predicted * defects[0]


# Resampling

def test_resample_identity(grid1: GridSpec) -> None:
    f = gaussian(grid1, 0.3)
    np.testing.assert_allclose(resample(f, grid1).values, f.values, atol=1e-12)


def test_resample_shift(grid1: GridSpec) -> None:
    f = gaussian(grid1)
    shifted = resample(f, grid1, source_origin=1.0, target_origin=0.0)
    expected = np.exp(-(1.0 + grid1.axis()) ** 2)
    np.testing.assert_allclose(shifted.values, expected, atol=1e-10)


def test_resample_zero_outside_source_box(grid1: GridSpec) -> None:
    target = make_grid(1, 128, 16.0)
    out = resample(gaussian(grid1), target)
    axis = target.axis()
    outside = (axis < -8.0) | (axis >= 8.0)
    assert np.all(out.values[outside] == 0.0)
    np.testing.assert_allclose(out.values[~outside], np.exp(-axis[~outside] ** 2), atol=1e-10)


def test_resample_guards_resolution(grid1: GridSpec) -> None:
    f = gaussian(grid1)
    assert lost_spectral_fraction(f, 20.0, grid1) > 1e-4
    with pytest.raises(ResolutionError):
        resample(f, grid1, factor=20.0)


def test_resample_dimension_mismatch(grid1: GridSpec, grid2: GridSpec) -> None:
    with pytest.raises(GridMismatchError):
        resample(gaussian(grid1), grid2)
