import numpy as np
import pytest

from sparsekit import (
    ConeKind,
    ConeProgram,
    cone_violation,
    project_cone,
    project_dual_cone,
    project_product,
    rsoc_to_soc,
)
from sparsekit.exceptions import DimensionMismatch


def test_soc_interior_unchanged():
    assert project_cone(ConeKind.SOC, [10, 3, 4]) == pytest.approx([10, 3, 4])


def test_soc_polar_goes_to_zero():
    assert project_cone(ConeKind.SOC, [-10, 3, 4]) == pytest.approx([0, 0, 0])


def test_soc_boundary_projection():
    assert project_cone(ConeKind.SOC, [0, 3, 4]) == pytest.approx([2.5, 1.5, 2.0])


def test_projection_idempotent_and_nonexpansive():
    rng = np.random.default_rng(3)
    for kind, dim in [(ConeKind.NONNEG, 4), (ConeKind.SOC, 4), (ConeKind.RSOC, 4)]:
        for _ in range(50):
            u, v = rng.standard_normal((2, dim)) * 3
            pu = project_cone(kind, u)
            assert project_cone(kind, pu) == pytest.approx(pu)
            assert np.linalg.norm(pu - project_cone(kind, v)) <= \
                np.linalg.norm(u - v) + 1e-12


def test_rsoc_projection_lands_in_cone():
    rng = np.random.default_rng(4)
    for _ in range(50):
        p, q, *r = project_cone(ConeKind.RSOC, rng.standard_normal(5))
        assert p >= -1e-12 and q >= -1e-12
        assert 2 * p * q >= np.dot(r, r) - 1e-9


def test_rsoc_map_is_involution():
    v = np.array([1.0, 2.0, 3.0])
    assert rsoc_to_soc(rsoc_to_soc(v)) == pytest.approx(v)


def test_zero_cone_and_its_dual():
    assert project_cone(ConeKind.ZERO, [1, -2]) == pytest.approx([0, 0])
    assert project_dual_cone(ConeKind.ZERO, [1, -2]) == pytest.approx([1, -2])


def test_product_projection():
    cones = [(ConeKind.NONNEG, 2), (ConeKind.SOC, 3)]
    v = np.array([-1.0, 2.0, 0.0, 3.0, 4.0])
    assert project_product(cones, v) == pytest.approx([0, 2, 2.5, 1.5, 2.0])
    assert cone_violation(cones, [1, 2, 5, 3, 4]) == 0.0


def test_rsoc_block_needs_three_rows():
    with pytest.raises(DimensionMismatch):
        project_cone(ConeKind.RSOC, [1, 1])


def test_program_checks_dimensions():
    with pytest.raises(DimensionMismatch):
        ConeProgram([1.0], [[1.0], [2.0]], [1.0], [(ConeKind.NONNEG, 1)])
    with pytest.raises(DimensionMismatch):
        ConeProgram([1.0], [[1.0]], [1.0], [(ConeKind.NONNEG, 2)])
    with pytest.raises(DimensionMismatch):
        ConeProgram([1.0, 2.0], [[1.0]], [1.0], [(ConeKind.NONNEG, 1)])


def test_program_blocks():
    p = ConeProgram([1.0], [[1.0], [0.0], [0.0]], [0, 3, 4], [(ConeKind.ZERO, 1),
                                                            (ConeKind.NONNEG, 2)])
    assert p.num_vars == 1 and p.num_rows == 3
    assert [len(b) for b in p.split(np.arange(3.0))] == [1, 2]
