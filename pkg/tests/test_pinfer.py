import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import sopinf as sp
from sopinf.errors import (
    IllConditionedStiffnessError,
    NonFiniteError,
    RankDeficientRegressorError,
)
from conftest import make_snapshots, normalized_snapshots


def random_params(rng, r, m):
    return sp.FactorParams(
        Mc=rng.standard_normal((r, r)), Dc=rng.standard_normal((r, r)),
        Gc=rng.standard_normal((r, r)), Kc=rng.standard_normal((r, r)),
        Bt=rng.standard_normal((r, m)),
    )


def fd_gradient(params, data, omega, h=1e-6):
    """Central-difference oracle, independent of the analytic formulas."""
    blocks = {}
    for name in ("Mc", "Dc", "Gc", "Kc", "Bt"):
        A = getattr(params, name)
        g = np.zeros_like(A)
        for idx in np.ndindex(A.shape):
            for sign in (+1.0, -1.0):
                mats = {k: getattr(params, k) for k in ("Mc", "Dc", "Gc", "Kc", "Bt")}
                bumped = mats[name].copy()
                bumped[idx] += sign * h
                mats[name] = bumped
                g[idx] += sign * sp.loss(sp.FactorParams(**mats), data, omega)
        blocks[name] = g / (2.0 * h)
    return blocks


# ---------------------------------------------------------------------------
# initialization

def test_init_params_structure():
    p = sp.init_params(3, 2, seed=0)
    np.testing.assert_array_equal(p.Gc, np.zeros((3, 3)))
    np.testing.assert_array_equal(p.Bt, np.ones((3, 2)))
    assert np.all(p.Mc >= 0) and np.all(p.Mc < 1)
    assert np.all(p.Dc >= 0) and np.all(p.Dc < 1)
    assert np.all(p.Kc >= 0) and np.all(p.Kc < 1)


def test_init_params_deterministic_and_seed_sensitive():
    a = sp.init_params(3, 1, seed=0)
    b = sp.init_params(3, 1, seed=0)
    c = sp.init_params(3, 1, seed=1)
    np.testing.assert_array_equal(a.Mc, b.Mc)
    assert np.any(a.Mc != c.Mc)


# ---------------------------------------------------------------------------
# prediction and loss

def test_zero_factors_predict_zero():
    rng = np.random.default_rng(0)
    data = make_snapshots(rng, 2, 1, 10)
    zero = sp.FactorParams(Mc=np.zeros((2, 2)), Dc=np.zeros((2, 2)),
                           Gc=np.zeros((2, 2)), Kc=np.zeros((2, 2)),
                           Bt=np.zeros((2, 1)))
    np.testing.assert_array_equal(sp.predict_displacements(zero, data, 0.0), 0.0)


def test_gyro_factor_inert_without_rotation():
    rng = np.random.default_rng(1)
    data = make_snapshots(rng, 3, 1, 15)
    p = random_params(rng, 3, 1)
    bumped = sp.FactorParams(Mc=p.Mc, Dc=p.Dc, Gc=p.Gc + rng.standard_normal((3, 3)),
                             Kc=p.Kc, Bt=p.Bt)
    np.testing.assert_array_equal(
        sp.predict_displacements(p, data, 0.0),
        sp.predict_displacements(bumped, data, 0.0),
    )


def test_exact_factor_substitution_reproduces_displacements():
    # integrate a known structured system and hand its exact factors over
    M = np.array([[2.0, 0.3], [0.3, 1.0]])
    K = np.array([[90.0, -10.0], [-10.0, 60.0]])
    D = np.array([[0.3, 0.05], [0.05, 0.2]])
    G = np.array([[0.0, 0.4], [-0.4, 0.0]])
    B = np.array([[1.0], [0.7]])
    omega = 5.0
    sys = sp.SecondOrderSystem(M=M, D=D, K=K, B=B, G=G, has_gyro=True)
    cfg = sp.NewmarkConfig(dt=1e-3, n_steps=2000)
    times = 1e-3 * np.arange(2001)
    U = sp.sample_input([sp.ChirpSpec(1.0, -np.pi / 2, 1.0, 3.0, 2.0)], times)
    snaps = sp.integrate(sys, omega, U, cfg)

    params = sp.FactorParams(
        Mc=np.linalg.cholesky(M), Dc=np.linalg.cholesky(D),
        Gc=np.triu(G), Kc=np.linalg.cholesky(np.linalg.inv(K)), Bt=B,
    )
    Xp = sp.predict_displacements(params, snaps, omega)
    scale = np.max(np.abs(snaps.X))
    assert np.max(np.abs(Xp - snaps.X)) < 1e-7 * scale
    assert sp.loss(params, snaps, omega) < 1e-16
    # stationarity: every gradient block vanishes at the zero-loss point
    g = sp.loss_grad(params, snaps, omega)
    for name in ("Mc", "Dc", "Gc", "Kc", "Bt"):
        assert np.linalg.norm(getattr(g, name)) < 1e-10


def test_loss_of_perfect_prediction_is_zero():
    rng = np.random.default_rng(2)
    data = make_snapshots(rng, 2, 1, 12)
    p = random_params(rng, 2, 1)
    Xp = sp.predict_displacements(p, data, 0.3)
    matched = sp.SnapshotSet(times=data.times, U=data.U, X=Xp, Xd=data.Xd,
                             Xdd=data.Xdd)
    assert sp.loss(p, matched, 0.3) == 0.0


def test_loss_of_zero_params_on_unit_data():
    rng = np.random.default_rng(3)
    data = normalized_snapshots(rng, 3, 1, 50)
    zero = sp.FactorParams(Mc=np.zeros((3, 3)), Dc=np.zeros((3, 3)),
                           Gc=np.zeros((3, 3)), Kc=np.zeros((3, 3)),
                           Bt=np.zeros((3, 1)))
    assert sp.loss(zero, data, 0.0) == pytest.approx(1.0 / 50, rel=1e-12)


def test_duplicating_columns_leaves_loss_unchanged():
    rng = np.random.default_rng(4)
    data = make_snapshots(rng, 2, 1, 20)
    p = random_params(rng, 2, 1)
    doubled = sp.SnapshotSet(
        times=data.dt * np.arange(2 * data.n_samples),
        U=np.hstack([data.U, data.U]), X=np.hstack([data.X, data.X]),
        Xd=np.hstack([data.Xd, data.Xd]), Xdd=np.hstack([data.Xdd, data.Xdd]),
    )
    assert sp.loss(p, doubled, 0.7) == pytest.approx(sp.loss(p, data, 0.7), rel=1e-14)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.1, 4.0))
def test_loss_scale_identity(seed, c):
    # scaling X, Xd, Xdd and U jointly by c scales the loss by c^2
    rng = np.random.default_rng(seed)
    data = make_snapshots(rng, 2, 1, 15)
    p = random_params(rng, 2, 1)
    scaled = sp.SnapshotSet(times=data.times, U=c * data.U, X=c * data.X,
                            Xd=c * data.Xd, Xdd=c * data.Xdd)
    assert sp.loss(p, scaled, 0.5) == pytest.approx(
        c * c * sp.loss(p, data, 0.5), rel=1e-10)


# ---------------------------------------------------------------------------
# gradients

def test_gyro_gradient_vanishes_without_rotation():
    rng = np.random.default_rng(5)
    data = make_snapshots(rng, 3, 2, 20)
    g = sp.loss_grad(random_params(rng, 3, 2), data, 0.0)
    np.testing.assert_array_equal(g.Gc, np.zeros((3, 3)))


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(42)
    data = make_snapshots(rng, 3, 2, 50)
    params = random_params(rng, 3, 2)
    omega = 0.7
    analytic = sp.loss_grad(params, data, omega)
    fd = fd_gradient(params, data, omega)
    for name in ("Mc", "Dc", "Gc", "Kc", "Bt"):
        a = getattr(analytic, name)
        mask = np.abs(a) > 1e-8
        rel = np.abs(fd[name][mask] - a[mask]) / np.abs(a[mask])
        assert np.max(rel) < 1e-6


# ---------------------------------------------------------------------------
# schedule and training

def test_cyclic_lr_triangular_wave():
    lo, hi, half = 5e-6, 1e-3, 2000
    assert sp.cyclic_lr(0, lo, hi, half) == pytest.approx(lo)
    assert sp.cyclic_lr(half, lo, hi, half) == pytest.approx(hi)
    assert sp.cyclic_lr(2 * half, lo, hi, half) == pytest.approx(lo)
    assert sp.cyclic_lr(half // 2, lo, hi, half) == pytest.approx((lo + hi) / 2)
    assert sp.cyclic_lr(5 * half, lo, hi, half) == pytest.approx(hi)


def test_single_epoch_takes_one_step():
    rng = np.random.default_rng(6)
    data = normalized_snapshots(rng, 2, 1, 30)
    scales = sp.Scales(1.0, 1.0, 1.0, 1.0)
    cfg = sp.TrainConfig(epochs=1, seed=0)
    result = sp.train(data, scales, cfg)
    assert result.loss_history.shape == (1,)
    start = sp.init_params(2, 1, seed=0)
    assert np.any(result.params.Mc != start.Mc)


def test_default_config_matches_reference_hyperparameters():
    cfg = sp.TrainConfig()
    assert cfg.epochs == 36000
    assert cfg.lr_low == pytest.approx(5e-6)
    assert cfg.lr_high == pytest.approx(1e-3)


def test_best_iterate_tracking():
    rng = np.random.default_rng(7)
    data = normalized_snapshots(rng, 2, 1, 40)
    scales = sp.Scales(1.0, 1.0, 1.0, 1.0)
    cfg = sp.TrainConfig(epochs=500, seed=1)
    result = sp.train(data, scales, cfg)
    assert result.final_loss == result.loss_history.min()
    assert result.loss_history[result.best_epoch] == result.final_loss
    # returned params evaluate exactly to the reported best loss
    assert sp.loss(result.params, data, cfg.omega) == pytest.approx(
        result.final_loss, rel=1e-12)
    # best-so-far sequence is non-increasing
    best_so_far = np.minimum.accumulate(result.loss_history)
    assert np.all(np.diff(best_so_far) <= 0)


def test_training_is_bitwise_deterministic():
    rng = np.random.default_rng(8)
    data = normalized_snapshots(rng, 2, 1, 30)
    scales = sp.Scales(1.0, 1.0, 1.0, 1.0)
    cfg = sp.TrainConfig(epochs=200, seed=3)
    a = sp.train(data, scales, cfg)
    b = sp.train(data, scales, cfg)
    np.testing.assert_array_equal(a.loss_history, b.loss_history)
    for name in ("Mc", "Dc", "Gc", "Kc", "Bt"):
        np.testing.assert_array_equal(getattr(a.params, name),
                                      getattr(b.params, name))


def test_train_requires_normalized_data():
    rng = np.random.default_rng(9)
    data = make_snapshots(rng, 2, 1, 30)
    with pytest.raises(ValueError):
        sp.train(data, sp.Scales(1.0, 1.0, 1.0, 1.0), sp.TrainConfig(epochs=1))


def test_training_divergence_is_reported():
    rng = np.random.default_rng(10)
    data = normalized_snapshots(rng, 2, 1, 30)
    cfg = sp.TrainConfig(epochs=50, lr_low=1e150, lr_high=1e160, seed=0)
    with np.errstate(all="ignore"), pytest.raises(NonFiniteError):
        sp.train(data, sp.Scales(1.0, 1.0, 1.0, 1.0), cfg)


# ---------------------------------------------------------------------------
# assembly

def test_assemble_with_unit_scales():
    rng = np.random.default_rng(11)
    p = random_params(rng, 3, 1)
    result = sp.TrainResult(params=p, loss_history=np.array([1.0]), final_loss=1.0)
    scales = sp.Scales(1.0, 1.0, 1.0, 1.0)
    rom = sp.assemble_rom(result, scales, sp.identity_basis(3), 0.0)
    np.testing.assert_allclose(rom.Mr, p.Mc @ p.Mc.T, atol=1e-14)
    np.testing.assert_allclose(rom.Dr, p.Dc @ p.Dc.T, atol=1e-14)
    Kinv = p.Kc @ p.Kc.T
    np.testing.assert_allclose(rom.Kr @ Kinv, np.eye(3), atol=1e-10)
    assert sp.check_structure(rom).passed


def test_assembled_stiffness_tracks_displacement_scale():
    rng = np.random.default_rng(12)
    p = random_params(rng, 2, 1)
    result = sp.TrainResult(params=p, loss_history=np.array([0.5]), final_loss=0.5)
    base = sp.assemble_rom(result, sp.Scales(1.0, 1.0, 1.0, 1.0),
                           sp.identity_basis(2), 0.0)
    scaled = sp.assemble_rom(result, sp.Scales(10.0, 1.0, 1.0, 1.0),
                             sp.identity_basis(2), 0.0)
    np.testing.assert_allclose(scaled.Kr, base.Kr / 10.0, rtol=1e-12)
    np.testing.assert_allclose(scaled.Mr, base.Mr, rtol=1e-15)


def test_assemble_guards_ill_conditioned_stiffness():
    p = sp.FactorParams(Mc=np.eye(2), Dc=np.eye(2), Gc=np.zeros((2, 2)),
                        Kc=np.diag([1.0, 1e-9]), Bt=np.ones((2, 1)))
    result = sp.TrainResult(params=p, loss_history=np.array([1.0]), final_loss=1.0)
    with pytest.raises(IllConditionedStiffnessError):
        sp.assemble_rom(result, sp.Scales(1.0, 1.0, 1.0, 1.0),
                        sp.identity_basis(2), 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_factor_products_are_structured_by_construction(seed):
    rng = np.random.default_rng(seed)
    p = random_params(rng, 3, 1)
    for F in (p.Mc, p.Dc, p.Kc):
        prod = F @ F.T
        w = np.linalg.eigvalsh((prod + prod.T) / 2)
        assert w.min() >= -1e-12 * max(np.linalg.norm(prod), 1.0)
    skew = p.Gc - p.Gc.T
    assert np.linalg.norm(skew + skew.T) == 0.0


# ---------------------------------------------------------------------------
# least-squares baseline

def sdof_free_oscillation(N=400, dt=0.01):
    t = dt * np.arange(N)
    X = np.cos(t)[None, :]
    Xd = -np.sin(t)[None, :]
    Xdd = -np.cos(t)[None, :]
    return sp.SnapshotSet(times=t, U=np.zeros((1, N)), X=X, Xd=Xd, Xdd=Xdd)


def test_baseline_recovers_sdof_oscillator():
    rom = sp.ls_opinf_baseline(sdof_free_oscillation(), 0.0)
    assert rom.Kr[0, 0] == pytest.approx(1.0, abs=1e-6)
    assert abs(rom.Dr[0, 0]) < 1e-6
    assert not rom.structure_guaranteed
    np.testing.assert_array_equal(rom.Br, np.zeros((1, 1)))


def test_baseline_exact_data_has_tiny_residual():
    rng = np.random.default_rng(13)
    r, N = 3, 60
    E_true = rng.standard_normal((r, r))
    K_true = rng.standard_normal((r, r))
    B_true = rng.standard_normal((r, 1))
    X = rng.standard_normal((r, N))
    Xd = rng.standard_normal((r, N))
    U = rng.standard_normal((1, N))
    Xdd = -E_true @ Xd - K_true @ X + B_true @ U
    data = sp.SnapshotSet(times=0.01 * np.arange(N), U=U, X=X, Xd=Xd, Xdd=Xdd)
    rom = sp.ls_opinf_baseline(data, 0.0)
    resid = Xdd + rom.Dr @ Xd + rom.Kr @ X - rom.Br @ U
    assert np.linalg.norm(resid) < 1e-10


def test_baseline_duplicated_columns_equal_solution():
    rng = np.random.default_rng(14)
    data = make_snapshots(rng, 2, 1, 30)
    doubled = sp.SnapshotSet(
        times=data.dt * np.arange(60), U=np.hstack([data.U, data.U]),
        X=np.hstack([data.X, data.X]), Xd=np.hstack([data.Xd, data.Xd]),
        Xdd=np.hstack([data.Xdd, data.Xdd]))
    a = sp.ls_opinf_baseline(data, 0.0)
    b = sp.ls_opinf_baseline(doubled, 0.0)
    np.testing.assert_allclose(a.Kr, b.Kr, rtol=1e-9)
    np.testing.assert_allclose(a.Dr, b.Dr, rtol=1e-9)


def test_baseline_rank_deficiency_raises():
    N = 20
    t = 0.01 * np.arange(N)
    row = np.sin(t)[None, :]
    data = sp.SnapshotSet(times=t, U=np.ones((1, N)), X=row, Xd=row, Xdd=row)
    with pytest.raises(RankDeficientRegressorError):
        sp.ls_opinf_baseline(data, 0.0)


def test_baseline_splits_velocity_operator_when_rotating():
    rng = np.random.default_rng(15)
    r, N, omega = 2, 50, 4.0
    D_true = np.array([[0.5, 0.1], [0.1, 0.4]])
    G_true = np.array([[0.0, 0.3], [-0.3, 0.0]])
    K_true = np.array([[2.0, 0.2], [0.2, 1.5]])
    B_true = np.array([[1.0], [0.5]])
    X = rng.standard_normal((r, N))
    Xd = rng.standard_normal((r, N))
    U = rng.standard_normal((1, N))
    Xdd = -(D_true + omega * G_true) @ Xd - K_true @ X + B_true @ U
    data = sp.SnapshotSet(times=0.01 * np.arange(N), U=U, X=X, Xd=Xd, Xdd=Xdd)
    rom = sp.ls_opinf_baseline(data, omega)
    np.testing.assert_allclose(rom.Dr, D_true, atol=1e-8)
    np.testing.assert_allclose(rom.Gr, G_true, atol=1e-8)
    np.testing.assert_allclose(rom.Kr, K_true, atol=1e-8)
