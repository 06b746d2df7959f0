import numpy as np
import pytest

from sparsekit import Instance, example1


def interior_instance(seed, m=10, n=30, l=5, k=4, eps_noise=0.1):
    """
    Random instance whose planted point lies strictly inside T
    """
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    B = rng.standard_normal((l, n))
    x = np.zeros(n)
    x[rng.choice(n, k, replace=False)] = rng.standard_normal(k)
    noise = rng.standard_normal(m)
    noise *= 0.5 * eps_noise / np.linalg.norm(noise)
    return Instance(A, A @ x + noise, B, B @ x + 0.5 + rng.uniform(size=l), eps_noise), x


@pytest.fixture()
def ex1():
    return example1()


@pytest.fixture()
def origin_instance():
    rng = np.random.default_rng(11)
    return Instance(rng.standard_normal((3, 6)), np.zeros(3),
                    rng.standard_normal((2, 6)), np.ones(2), 0.1)
