"""Shared fixtures.

The heavy trained-model fixtures are session-scoped: the cantilever and
rotor presets each run the full pipeline once (36 000 epochs), and the
exact-recovery study trains once; acceptance and module tests share them.
"""

import numpy as np
import pytest

import sopinf as sp
from sopinf.pipeline import load_config, run_all


def preset_path(name):
    from importlib import resources

    return str(resources.files("sopinf.presets") / f"{name}.cfg")


def make_snapshots(rng, r, m, N, dt=0.01):
    """Random (already reduced) snapshot data for optimizer-level tests."""
    times = dt * np.arange(N)
    return sp.SnapshotSet(
        times=times,
        U=rng.standard_normal((m, N)),
        X=rng.standard_normal((r, N)),
        Xd=rng.standard_normal((r, N)),
        Xdd=rng.standard_normal((r, N)),
    )


def normalized_snapshots(rng, r, m, N, dt=0.01):
    snaps = make_snapshots(rng, r, m, N, dt)
    return sp.normalize(snaps, sp.compute_scales(snaps))


@pytest.fixture(scope="session")
def exact_recovery():
    """Train on data generated by a known 2x2 structured system (V = I)."""
    M = np.array([[2.0, 0.4], [0.4, 1.5]])
    K = np.array([[180.0, -30.0], [-30.0, 140.0]])
    D = np.array([[0.4, 0.1], [0.1, 0.3]])
    B = np.array([[1.0], [0.5]])
    sys = sp.SecondOrderSystem(M=M, D=D, K=K, B=B)

    dt, t_end = 0.01, 15.0
    cfg = sp.NewmarkConfig(dt=dt, n_steps=int(round(t_end / dt)))
    times = dt * np.arange(cfg.n_steps + 1)
    chirp = sp.ChirpSpec(amplitude=1.0, phi0=0.0, f0=1.0, f1=3.0, sweep_time=t_end)
    U = sp.sample_input([chirp], times)
    snaps = sp.integrate(sys, 0.0, U, cfg)

    basis = sp.identity_basis(2, np.linalg.svd(snaps.X, compute_uv=False))
    reduced = sp.project(basis, snaps)
    scales = sp.compute_scales(reduced)
    train_cfg = sp.TrainConfig(seed=0, omega=0.0)
    result = sp.train(sp.normalize(reduced, scales), scales, train_cfg)
    rom = sp.assemble_rom(result, scales, basis, 0.0)
    return {
        "sys": sys, "snaps": snaps, "basis": basis, "scales": scales,
        "result": result, "rom": rom, "newmark": cfg, "U": U,
        "train_cfg": train_cfg, "reduced": reduced,
    }


@pytest.fixture(scope="session")
def cantilever_run(tmp_path_factory):
    outdir = tmp_path_factory.mktemp("cantilever")
    cfg = load_config(preset_path("cantilever"))
    run_all(cfg, outdir)
    return {"outdir": outdir, "cfg": cfg}


@pytest.fixture(scope="session")
def rotor_run(tmp_path_factory):
    outdir = tmp_path_factory.mktemp("rotor")
    cfg = load_config(preset_path("rotor"))
    run_all(cfg, outdir)
    return {"outdir": outdir, "cfg": cfg}
