import numpy as np
import pytest

from sparsekit import (
    Instance,
    MAX_ENUMERATION,
    generate_instance,
    l0_min,
    support_feasible,
)
from sparsekit.exceptions import CardinalityLimit, DomainError


def test_example_oracle(ex1):
    result = l0_min(ex1)
    assert result.found
    assert result.k_star == 2
    assert result.support == (2, 3)


def test_example_supports(ex1):
    assert support_feasible(ex1, [2, 3])
    assert not support_feasible(ex1, [1])
    assert not support_feasible(ex1, [])
    with pytest.raises(DomainError):
        support_feasible(ex1, [4])


def test_supersets_stay_feasible(ex1):
    assert support_feasible(ex1, [0, 2, 3])
    assert support_feasible(ex1, range(4))


def test_zero_observation(origin_instance):
    assert support_feasible(origin_instance, [])
    assert l0_min(origin_instance) == (0, ())


def test_capped_search(ex1):
    assert l0_min(ex1, max_card=1) == (None, None)
    assert not l0_min(ex1, max_card=1).found
    with pytest.raises(DomainError):
        l0_min(ex1, max_card=5)


def test_threads_agree(ex1):
    assert l0_min(ex1, threads=3) == l0_min(ex1)


def test_planted_point_bounds_oracle():
    rng = np.random.default_rng(8)
    A = rng.standard_normal((6, 10))
    x = np.zeros(10)
    x[[1, 7]] = [1.5, -2.0]
    inst = Instance(A, A @ x, rng.standard_normal((2, 10)), np.ones(2) * 50, 1e-3)
    result = l0_min(inst)
    assert result.k_star <= 2
    assert support_feasible(inst, result.support)


def test_refuses_large_problems():
    n = MAX_ENUMERATION + 1
    inst = Instance(np.ones((1, n)), [1.0], eps_noise=0.1)
    with pytest.raises(CardinalityLimit):
        l0_min(inst)


def test_ill_conditioned_instance():
    generated = generate_instance((5, 10, 0), 2, 1e-4, seed=33)
    inst = generated.instance
    result = l0_min(inst)
    assert result.found
    assert support_feasible(inst, result.support)
    assert result.k_star <= inst.m
    if generated.noise <= inst.eps_noise:
        assert result.k_star <= 2
