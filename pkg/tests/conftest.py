"""Shared fixtures: small grids, a reduced rigid-sphere reference, and
synthetic bandlimited HRTF sets whose SH representation is exact."""

import numpy as np
import pytest

from imagls.hrtf import FrequencyGrid, HrtfSet, SphereModelConfig, rigid_sphere_hrtf
from imagls.sh import SphericalGrid, gauss_grid, sh_matrix


@pytest.fixture(scope="session")
def small_freqs() -> FrequencyGrid:
    return FrequencyGrid.uniform(24, 750.0)  # 750 Hz .. 18 kHz


@pytest.fixture(scope="session")
def small_grid() -> SphericalGrid:
    return gauss_grid(8)


@pytest.fixture(scope="session")
def sphere_small(small_grid, small_freqs) -> HrtfSet:
    return rigid_sphere_hrtf(SphereModelConfig(), small_grid, small_freqs)


def synth_bandlimited(grid: SphericalGrid, freqs: FrequencyGrid, order: int,
                      seed: int = 0, coherent_phase: bool = False) -> HrtfSet:
    """Random order-``order`` bandlimited HRTF set, exactly representable.

    With ``coherent_phase`` the same spatial pattern is scaled by a
    positive gain per bin, so phases agree across frequency (the MagLS
    phase-continuation fixed point).  A ``point_eval`` closure based on
    the generating coefficients is attached.
    """
    rng = np.random.default_rng(seed)
    k = (order + 1) ** 2
    if coherent_phase:
        pattern = rng.standard_normal((2, 1, k)) + 1j * rng.standard_normal((2, 1, k))
        gains = 0.5 + rng.random((2, freqs.size, 1))
        coeffs = gains * pattern
    else:
        coeffs = rng.standard_normal((2, freqs.size, k)) \
            + 1j * rng.standard_normal((2, freqs.size, k))

    def point_eval(azimuths, colatitudes):
        y = sh_matrix(order, azimuths, colatitudes)
        return y @ coeffs[0].T, y @ coeffs[1].T

    left, right = point_eval(grid.azimuths, grid.colatitudes)
    return HrtfSet(grid, freqs, left, right, label=f"synthetic-order-{order}",
                   point_eval=point_eval)


@pytest.fixture()
def bandlimited_small(small_grid, small_freqs) -> HrtfSet:
    return synth_bandlimited(small_grid, small_freqs, order=3, seed=11)
