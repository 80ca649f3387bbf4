"""Feasible starting points from the diagonal splitting iteration."""

import numpy as np
import pytest

from mteq import (SolverConfig, Tensor, find_certificate, hadamard_power,
                  in_feasible, in_feasible_split, initial_point, jacobi_step,
                  make_problem)
from mteq.initializer import MAX_SWEEPS, InitializationError
from mteq.problems import gen_problem1, gen_problem3, gen_problem5, zero_out_rhs


def test_jacobi_step_identity_fixed_point():
    t = Tensor.identity(3, 4)
    e = np.ones(4)
    assert np.array_equal(jacobi_step(t, e, e), e)


def test_jacobi_step_diagonal_tensor():
    # a_{iii} = 4, m = 3, unit target: x+ = (1/4)^{1/2} e
    dense = np.zeros((2, 2, 2))
    dense[0, 0, 0] = 4.0
    dense[1, 1, 1] = 4.0
    t = Tensor.from_dense(dense)
    out = jacobi_step(t, np.ones(2), np.full(2, 7.0))
    assert np.allclose(out, 0.5, rtol=1e-15, atol=0)


def test_jacobi_step_refuses_nonpositive_diagonal():
    dense = np.zeros((2, 2, 2))
    dense[0, 0, 0] = 1.0  # second diagonal entry is zero
    with pytest.raises(InitializationError):
        jacobi_step(Tensor.from_dense(dense), np.ones(2), np.ones(2))


def test_find_certificate_problem5():
    p = gen_problem5(3, 20, seed=0)
    u, sweeps = find_certificate(p.A, max_sweeps=500)
    assert sweeps <= 500
    assert p.A.apply(u).min() > 0.0


def test_find_certificate_validates_target():
    t = Tensor.identity(3, 2)
    with pytest.raises(ValueError):
        find_certificate(t, rhs=np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        find_certificate(t, rhs=np.ones(3))


def test_find_certificate_cap_exhaustion():
    # shift below the spectral radius of the all-ones part: not a strong
    # M-tensor, the sweeps never produce a positive image
    dense = -np.ones((2, 2, 2))
    dense[0, 0, 0] += 3.9
    dense[1, 1, 1] += 3.9
    with pytest.raises(InitializationError):
        find_certificate(Tensor.from_dense(dense), max_sweeps=200)


def test_dominant_shortcut_uses_ones():
    p = gen_problem1(3, 10, 0)
    ip = initial_point(p)
    assert ip.iterations == 0
    assert np.array_equal(ip.u, np.ones(10))
    assert np.array_equal(ip.y0, hadamard_power(ip.x0, 2))


def test_identity_inflation_arithmetic():
    # u = e, A e^2 = e, so t = sqrt(0.1 * 27) * 1.01
    p = make_problem(Tensor.identity(3, 2), np.array([8.0, 27.0]))
    ip = initial_point(p)
    t_expect = np.sqrt(2.7) * 1.01
    assert np.allclose(ip.x0, t_expect, rtol=1e-14, atol=0)
    assert in_feasible(p, ip.y0, 0.1)


def test_initial_point_rejects_zero_rhs():
    p = make_problem(Tensor.identity(3, 2), np.zeros(2))
    with pytest.raises(InitializationError):
        initial_point(p)


def test_boundary_value_problem_start_is_feasible():
    p = gen_problem3(20)
    cfg = SolverConfig(relative_stop=True)
    ip = initial_point(p, cfg)
    assert 0 < ip.iterations < MAX_SWEEPS
    assert ip.x0.min() > 0.0
    assert in_feasible(p, ip.y0, cfg.eps)


def test_split_feasible_start_for_zeroed_rhs():
    p0 = gen_problem5(3, 10, seed=4)
    b = zero_out_rhs(p0.b, seed=4, keep=(0,))
    p = make_problem(p0.A, b)
    cfg = SolverConfig()
    ip = initial_point(p, cfg)
    assert ip.iterations > 0  # not diagonally dominant, sweeps required
    assert in_feasible_split(p, ip.y0, cfg.eps, cfg.eps2)


@pytest.mark.parametrize("seed", range(3))
def test_start_feasible_across_generators(seed):
    cfg = SolverConfig()
    for p in (gen_problem1(3, 12, seed), gen_problem5(3, 12, seed)):
        ip = initial_point(p, cfg)
        assert in_feasible(p, ip.y0, cfg.eps)
