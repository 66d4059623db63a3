"""Shared fixtures for the Choquard solver tests."""

import numpy as np
import pytest

from src.grid import Field, GridSpec, make_grid, riesz_normalization
from src.model import ChoquardProblem, PotentialSpec, ProblemParams, RegionSpec


WELL = PotentialSpec(kind="gaussian_well", floor=2.0, depth=1.0, width=1.0)


def direct_riesz_1d(f: Field, alpha: float, self_cell_weight: float) -> np.ndarray:
    """O(n^2) summation of h * sum_j K(x_i - x_j) f_j, the oracle for the FFT convolution."""
    grid = f.grid
    x = grid.axis()
    offsets = np.abs(x[:, None] - x[None, :])
    with np.errstate(divide="ignore"):
        kernel = riesz_normalization(1, alpha) * offsets ** (alpha - 1.0)
    np.fill_diagonal(kernel, self_cell_weight)
    return grid.spacing * kernel @ f.values


def gaussian(grid: GridSpec, center=0.0, width: float = 1.0) -> Field:
    return Field(grid, np.exp(-(grid.distance_from(center) / width) ** 2))


def make_problem(eps: float = 0.5, *, dim: int = 1, alpha: float = 0.5, p: float = 2.0,
                 n: int = 128, half_extent: float = 8.0, potential: PotentialSpec = WELL,
                 lambda_radius: float = 1.0, outer_radius: float = 2.0,
                 self_cell: str = "average") -> ChoquardProblem:
    params = ProblemParams(
        dim=dim,
        alpha=alpha,
        p=p,
        eps=eps,
        potential=potential,
        lambda_region=RegionSpec(radius=lambda_radius),
        outer_region=RegionSpec(radius=outer_radius),
    )
    grid = make_grid(dim, n, half_extent)
    return ChoquardProblem(params=params, grid=grid, self_cell=self_cell)


@pytest.fixture
def grid1() -> GridSpec:
    return make_grid(1, 64, 8.0)


@pytest.fixture
def grid2() -> GridSpec:
    return make_grid(2, 32, 8.0)


@pytest.fixture
def problem() -> ChoquardProblem:
    return make_problem()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)
