import numpy as np
import pytest

import sopinf as sp
from sopinf.errors import (
    DimensionMismatchError,
    SingularEffectiveMatrixError,
)


def sdof(k=(2 * np.pi) ** 2, d=0.0):
    return sp.SecondOrderSystem(M=[[1.0]], D=[[d]], K=[[k]], B=[[1.0]])


def sdof_error(dt, t_end=1.0):
    n_steps = int(round(t_end / dt))
    cfg = sp.NewmarkConfig(dt=dt, n_steps=n_steps, x0=np.array([1.0]))
    snaps = sp.integrate(sdof(), 0.0, np.zeros((1, n_steps + 1)), cfg)
    return float(np.max(np.abs(snaps.X[0] - np.cos(2 * np.pi * snaps.times))))


def test_equilibrium_stays_at_rest():
    sys = sp.build_synthetic(4, 1, seed=0)
    cfg = sp.NewmarkConfig(dt=0.01, n_steps=50)
    snaps = sp.integrate(sys, 0.0, np.zeros((1, 51)), cfg)
    np.testing.assert_array_equal(snaps.X, 0.0)
    np.testing.assert_array_equal(snaps.Xd, 0.0)
    np.testing.assert_array_equal(snaps.Xdd, 0.0)


def test_sdof_oscillator_matches_analytic_solution():
    assert sdof_error(1e-3) < 1e-4


def test_halving_dt_shows_second_order_convergence():
    ratio = sdof_error(1e-3) / sdof_error(5e-4)
    assert 3.5 <= ratio <= 4.5


def test_per_step_residual_bound():
    # snapshots must satisfy the governing equations at every grid point
    sys = sp.build_rotor(sp.RotorSpec())
    omega = 600.0
    dt, n_steps = 1e-3, 400
    cfg = sp.NewmarkConfig(dt=dt, n_steps=n_steps)
    times = dt * np.arange(n_steps + 1)
    U = sp.sample_input(
        [sp.ChirpSpec(10.0, 0.0, 1.0, 4.0, 0.4),
         sp.ChirpSpec(10.0, np.pi / 2, 1.0, 4.0, 0.4)], times)
    snaps = sp.integrate(sys, omega, U, cfg)
    E = sys.e_matrix(omega)
    BU = sys.B @ snaps.U
    residual = sys.M @ snaps.Xdd + E @ snaps.Xd + sys.K @ snaps.X - BU
    bound = 1e-8 * np.linalg.norm(BU)
    assert float(np.max(np.linalg.norm(residual, axis=0))) <= bound


def test_average_acceleration_conserves_energy():
    sys = sp.build_synthetic(3, 1, seed=2)
    undamped = sp.SecondOrderSystem(M=sys.M, D=np.zeros((3, 3)), K=sys.K, B=sys.B)
    rng = np.random.default_rng(0)
    x0 = rng.standard_normal(3)
    v0 = rng.standard_normal(3)
    cfg = sp.NewmarkConfig(dt=1e-3, n_steps=10_000, x0=x0, v0=v0)
    snaps = sp.integrate(undamped, 0.0, np.zeros((1, 10_001)), cfg)
    energy = 0.5 * (np.einsum("in,ij,jn->n", snaps.Xd, undamped.M, snaps.Xd)
                    + np.einsum("in,ij,jn->n", snaps.X, undamped.K, snaps.X))
    drift = np.max(np.abs(energy - energy[0])) / energy[0]
    assert drift < 1e-8


def test_integration_is_deterministic():
    sys = sp.build_synthetic(5, 2, seed=4)
    cfg = sp.NewmarkConfig(dt=0.01, n_steps=100)
    rng = np.random.default_rng(1)
    U = rng.standard_normal((2, 101))
    a = sp.integrate(sys, 0.0, U, cfg)
    b = sp.integrate(sys, 0.0, U, cfg)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.Xdd, b.Xdd)


def test_input_shape_and_gyro_preconditions():
    sys = sp.build_synthetic(3, 1, seed=0)
    cfg = sp.NewmarkConfig(dt=0.01, n_steps=10)
    with pytest.raises(DimensionMismatchError):
        sp.integrate(sys, 0.0, np.zeros((1, 10)), cfg)
    plain = sp.SecondOrderSystem(M=np.eye(2), D=np.zeros((2, 2)), K=np.eye(2),
                                 B=np.ones((2, 1)))
    with pytest.raises(ValueError):
        sp.integrate(plain, 1.0, np.zeros((1, 11)), cfg)


def test_singular_effective_matrix_raises():
    sys = sp.SecondOrderSystem(M=np.zeros((2, 2)), D=np.zeros((2, 2)),
                               K=np.zeros((2, 2)), B=np.ones((2, 1)))
    cfg = sp.NewmarkConfig(dt=0.01, n_steps=5)
    with pytest.raises(SingularEffectiveMatrixError):
        sp.integrate(sys, 0.0, np.ones((1, 6)), cfg)


def test_newmark_config_validation():
    with pytest.raises(ValueError):
        sp.NewmarkConfig(dt=0.0, n_steps=5)
    with pytest.raises(ValueError):
        sp.NewmarkConfig(dt=0.1, n_steps=0)
    with pytest.raises(ValueError):
        sp.NewmarkConfig(dt=0.1, n_steps=5, beta=0.6)
    with pytest.raises(ValueError):
        sp.NewmarkConfig(dt=0.1, n_steps=5, gamma=1.5)
