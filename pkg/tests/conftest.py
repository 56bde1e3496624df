import numpy as np
import pytest

from multioss.instance import SelectionInstance


def random_instance(rng, m, r, distinct_losses=False):
    upper = np.triu(rng.uniform(size=(m, m)), k=1)
    d_new = upper + upper.T
    d_old = rng.uniform(size=(m, r))
    if distinct_losses:
        loss_new = rng.permutation(m + r)[:m] / (m + r) + rng.uniform(0, 1e-3)
        loss_old = rng.uniform(size=r)
    else:
        loss_new = rng.uniform(size=m)
        loss_old = rng.uniform(size=r)
    return SelectionInstance.build(d_new=d_new, loss_new=loss_new, d_old=d_old, loss_old=loss_old)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def mcoss_ex1():
    return SelectionInstance.build(
        d_new=[[0, 0.9], [0.9, 0]], loss_new=[0, 0], d_old=[[0.1], [0.1]], loss_old=[0]
    )


@pytest.fixture
def mcoss_ex2():
    return SelectionInstance.build(
        d_new=[[0, 0.9], [0.9, 0]], loss_new=[0, 0], d_old=[[0.9], [0.9]], loss_old=[0]
    )


@pytest.fixture
def loss_pair():
    # the rho = 0 example shared by both convex solvers
    return SelectionInstance.build(
        d_new=[[0, 0.9], [0.9, 0]], loss_new=[0.5, 0.9], d_old=[[0.1], [0.1]], loss_old=[0.2]
    )
