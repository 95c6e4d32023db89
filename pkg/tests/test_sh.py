"""Spherical-harmonics basis, transforms, and grid handling."""

import math

import numpy as np
import pytest

from imagls.sh import (
    Direction,
    GridParseError,
    OrthonormalityError,
    ShCoeffVec,
    SphericalGrid,
    WeightSumError,
    acn_index,
    gauss_grid,
    isht,
    load_grid,
    save_grid,
    sh_basis,
    sh_matrix,
    sht,
    verify_quadrature,
)

FOUR_PI = 4.0 * math.pi


def closed_form_sh(n: int, m: int, az: float, col: float) -> complex:
    """Table expressions for n <= 3, orthonormal with Condon-Shortley."""
    s, c = math.sin(col), math.cos(col)
    e = np.exp(1j * m * az)
    table = {
        (0, 0): 0.5 * math.sqrt(1 / math.pi),
        (1, -1): 0.5 * math.sqrt(3 / (2 * math.pi)) * s,
        (1, 0): 0.5 * math.sqrt(3 / math.pi) * c,
        (1, 1): -0.5 * math.sqrt(3 / (2 * math.pi)) * s,
        (2, -2): 0.25 * math.sqrt(15 / (2 * math.pi)) * s * s,
        (2, -1): 0.5 * math.sqrt(15 / (2 * math.pi)) * s * c,
        (2, 0): 0.25 * math.sqrt(5 / math.pi) * (3 * c * c - 1),
        (2, 1): -0.5 * math.sqrt(15 / (2 * math.pi)) * s * c,
        (2, 2): 0.25 * math.sqrt(15 / (2 * math.pi)) * s * s,
        (3, -3): 0.125 * math.sqrt(35 / math.pi) * s ** 3,
        (3, -2): 0.25 * math.sqrt(105 / (2 * math.pi)) * s * s * c,
        (3, -1): 0.125 * math.sqrt(21 / math.pi) * s * (5 * c * c - 1),
        (3, 0): 0.25 * math.sqrt(7 / math.pi) * (5 * c ** 3 - 3 * c),
        (3, 1): -0.125 * math.sqrt(21 / math.pi) * s * (5 * c * c - 1),
        (3, 2): 0.25 * math.sqrt(105 / (2 * math.pi)) * s * s * c,
        (3, 3): -0.125 * math.sqrt(35 / math.pi) * s ** 3,
    }
    return table[(n, m)] * e


class TestDirection:
    def test_azimuth_normalized(self):
        assert Direction(2 * math.pi + 0.25, 1.0).azimuth == pytest.approx(0.25)
        assert Direction(-0.25, 1.0).azimuth == pytest.approx(2 * math.pi - 0.25)
        assert 0.0 <= Direction(-1e-18, 1.0).azimuth < 2 * math.pi

    def test_colatitude_rejected_not_clamped(self):
        with pytest.raises(ValueError):
            Direction(0.0, -0.001)
        with pytest.raises(ValueError):
            Direction(0.0, math.pi + 0.001)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            Direction(math.nan, 1.0)


class TestShBasis:
    def test_constant(self):
        assert sh_basis(0, 0, Direction(1.3, 0.4)) == pytest.approx(
            0.2820948, abs=1e-7)

    def test_pole_value(self):
        assert sh_basis(1, 0, Direction(0.0, 0.0)) == pytest.approx(
            0.4886025, abs=1e-7)

    def test_against_closed_forms(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            az = rng.uniform(0, 2 * math.pi)
            col = rng.uniform(0, math.pi)
            for n in range(4):
                for m in range(-n, n + 1):
                    ref = closed_form_sh(n, m, az, col)
                    got = sh_basis(n, m, Direction(az, col))
                    assert got == pytest.approx(ref, abs=1e-12)

    def test_example_n3_m2(self):
        got = sh_basis(3, 2, Direction(0.7, 1.1))
        assert got == pytest.approx(closed_form_sh(3, 2, 0.7, 1.1), abs=1e-12)

    def test_invalid_degree_order(self):
        with pytest.raises(ValueError):
            sh_basis(-1, 0, Direction(0, 0))
        with pytest.raises(ValueError):
            sh_basis(2, 3, Direction(0, 0))

    def test_conjugation_symmetry(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            d = Direction(rng.uniform(0, 2 * math.pi), rng.uniform(0, math.pi))
            for n in range(6):
                for m in range(1, n + 1):
                    y_pos = sh_basis(n, m, d)
                    y_neg = sh_basis(n, -m, d)
                    assert y_neg == pytest.approx(
                        (-1) ** m * np.conj(y_pos), abs=1e-12)

    def test_addition_theorem(self):
        rng = np.random.default_rng(4)
        az = rng.uniform(0, 2 * math.pi, 6)
        col = rng.uniform(0, math.pi, 6)
        y = sh_matrix(7, az, col)
        for n in range(8):
            total = (np.abs(y[:, n * n:(n + 1) ** 2]) ** 2).sum(axis=1)
            assert np.max(np.abs(total - (2 * n + 1) / FOUR_PI)) < 1e-10

    def test_high_degree_finite(self):
        y = sh_matrix(40, [1.1], [0.7])
        assert np.all(np.isfinite(y))


class TestTransforms:
    def test_sht_constant(self):
        grid = gauss_grid(3)
        values = np.full(grid.size, 1 / math.sqrt(FOUR_PI))
        coeffs = sht(grid, values, 0)
        assert coeffs.coeffs[0] == pytest.approx(1.0, abs=1e-12)

    def test_sht_picks_single_mode(self):
        grid = gauss_grid(4)
        values = sh_matrix(2, grid.azimuths, grid.colatitudes)[:, acn_index(2, 1)]
        coeffs = sht(grid, values, 2).coeffs
        assert coeffs[acn_index(2, 1)] == pytest.approx(1.0, abs=1e-10)
        others = np.delete(coeffs, acn_index(2, 1))
        assert np.max(np.abs(others)) < 1e-10

    def test_round_trip_random(self):
        grid = gauss_grid(6)
        rng = np.random.default_rng(0)
        coeffs = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        values = isht(ShCoeffVec(3, coeffs), grid)
        back = sht(grid, values, 3).coeffs
        assert np.max(np.abs(back - coeffs)) < 1e-10

    def test_sht_rejects_aliasing_order(self):
        grid = gauss_grid(3)
        with pytest.raises(ValueError, match="alias"):
            sht(grid, np.ones(grid.size), 4)

    def test_sht_rejects_wrong_length(self):
        grid = gauss_grid(3)
        with pytest.raises(ValueError):
            sht(grid, np.ones(grid.size - 1), 2)

    def test_isht_constant(self):
        coeffs = ShCoeffVec(0, [math.sqrt(FOUR_PI)])
        dirs = ([0.1, 2.0, 4.0], [0.3, 1.3, 2.8])
        values = isht(coeffs, dirs)
        assert np.max(np.abs(values - 1.0)) < 1e-12

    def test_isht_reproduces_basis_function(self):
        grid = gauss_grid(4)
        samples = sh_matrix(1, grid.azimuths, grid.colatitudes)[:, acn_index(1, -1)]
        coeffs = sht(grid, samples, 1)
        assert np.max(np.abs(isht(coeffs, grid) - samples)) < 1e-10

    def test_isht_against_naive_summation(self):
        rng = np.random.default_rng(5)
        coeffs = rng.standard_normal(36) + 1j * rng.standard_normal(36)
        az = rng.uniform(0, 2 * math.pi, 10)
        col = rng.uniform(0, math.pi, 10)
        got = isht(ShCoeffVec(5, coeffs), (az, col))
        for q in range(10):
            naive = 0.0 + 0.0j
            for n in range(6):
                for m in range(-n, n + 1):
                    naive += coeffs[acn_index(n, m)] * sh_basis(
                        n, m, Direction(az[q], col[q]))
            assert got[q] == pytest.approx(naive, abs=1e-12)


class TestGaussGrid:
    def test_order_zero(self):
        grid = gauss_grid(0)
        assert grid.size == 2
        assert grid.weights.sum() == pytest.approx(FOUR_PI, rel=1e-12)

    def test_order_one_shape_and_exactness(self):
        grid = gauss_grid(1)
        assert grid.size == 8  # 2 colatitudes x 4 azimuths
        values = np.full(grid.size, 2.0)
        coeffs = sht(grid, values, 0)
        assert coeffs.coeffs[0] == pytest.approx(
            2.0 * math.sqrt(FOUR_PI), rel=1e-12)

    @pytest.mark.parametrize("order", [2, 5, 9])
    def test_orthonormality(self, order):
        assert verify_quadrature(gauss_grid(order)) < 1e-8

    def test_declared_order_is_sharp(self):
        grid = gauss_grid(35)
        assert grid.size == 36 * 72
        assert grid.max_exact_order == 35


class TestGridFiles:
    def test_round_trip(self, tmp_path):
        grid = gauss_grid(5)
        path = tmp_path / "g.sphgrid"
        save_grid(grid, path)
        back = load_grid(path)
        assert back.size == grid.size
        assert back.max_exact_order == 5
        assert np.array_equal(back.weights, grid.weights)
        assert np.array_equal(back.azimuths, grid.azimuths)

    def test_lebedev_1730_fixture(self):
        from pathlib import Path
        path = Path(__file__).parent / "data" / "lebedev_1730.sphgrid"
        grid = load_grid(path)
        assert grid.size == 1730
        assert grid.max_exact_order == 35

    def test_two_point_order_zero(self, tmp_path):
        path = tmp_path / "two.sphgrid"
        path.write_text(
            "sphgrid v1 2 0\n"
            f"0 {math.pi / 2:.17g} {2 * math.pi:.17g}\n"
            f"{math.pi:.17g} {math.pi / 2:.17g} {2 * math.pi:.17g}\n")
        grid = load_grid(path)
        assert grid.size == 2
        assert grid.max_exact_order == 0

    def test_weight_sum_error(self, tmp_path):
        path = tmp_path / "bad.sphgrid"
        path.write_text(
            "sphgrid v1 2 0\n"
            f"0 1.0 {math.pi:.17g}\n"
            f"3.0 1.5 {math.pi:.17g}\n")
        with pytest.raises(WeightSumError):
            load_grid(path)

    def test_parse_errors_are_distinct(self, tmp_path):
        bad_header = tmp_path / "h.sphgrid"
        bad_header.write_text("sphgrid v2 1 0\n0 1 12.56\n")
        with pytest.raises(GridParseError):
            load_grid(bad_header)
        bad_count = tmp_path / "c.sphgrid"
        bad_count.write_text("sphgrid v1 3 0\n0 1 12.56\n")
        with pytest.raises(GridParseError):
            load_grid(bad_count)
        bad_number = tmp_path / "n.sphgrid"
        bad_number.write_text("sphgrid v1 1 0\n0 one 12.56\n")
        with pytest.raises(GridParseError):
            load_grid(bad_number)

    def test_gram_failure_detected(self, tmp_path):
        # Equal-weight random directions are no quadrature at order 5.
        rng = np.random.default_rng(1)
        q = 40
        lines = [f"sphgrid v1 {q} 5"]
        for _ in range(q):
            lines.append(f"{rng.uniform(0, 2 * math.pi):.17g} "
                         f"{rng.uniform(0.1, math.pi - 0.1):.17g} "
                         f"{FOUR_PI / q:.17g}")
        path = tmp_path / "r.sphgrid"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(OrthonormalityError):
            load_grid(path)


class TestSphericalGridInvariants:
    def test_weight_sum_enforced(self):
        with pytest.raises(WeightSumError):
            SphericalGrid([0.0], [1.0], [1.0], 0)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            SphericalGrid([0.0, 1.0], [1.0, 1.0],
                          [FOUR_PI + 1.0, -1.0], 0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            SphericalGrid([0.0, 1.0], [1.0], [FOUR_PI], 0)

    def test_coeff_vec_length(self):
        with pytest.raises(ValueError):
            ShCoeffVec(2, np.zeros(8))
