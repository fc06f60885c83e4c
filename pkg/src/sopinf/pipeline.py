"""Configuration-driven pipeline: generate -> compress -> train -> validate
-> sweep, with reproducible artifacts on disk.

Experiments are described by one INI-style config file (sections: model,
excitation, integration, reduction, training, validation, output).  Every
stage loads its inputs from the artifact directory and writes its outputs
there, so chained stage invocations produce bitwise-identical artifacts to a
monolithic run.  The manifest records the resolved config, its SHA-256 and
the effective seed; no timestamps are written anywhere.
"""

import configparser
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import matio
from .errors import ConfigError, MissingArtifactError
from .evalkit import (
    frequency_sweep,
    intrusive_galerkin,
    relative_error,
    simulate_rom,
    speed_sweep,
)
from .excite import ChirpSpec, HarmonicSpec, sample_input
from .fomlab import BeamSpec, Cantilever, Overhanging, RotorSpec, build_beam, build_rotor, build_synthetic
from .pinfer import TrainConfig, assemble_rom, cyclic_lr, train
from .podspace import PodBasis, compute_scales, normalize, pod_basis, project, select_order
from .structures import SecondOrderSystem, SnapshotSet, StructuredROM, check_structure
from .timestep import NewmarkConfig, integrate

__all__ = ["PipelineConfig", "load_config", "run_all", "STAGES"]

_FOM_FILES = ("M", "D", "G", "K", "B")
_SNAP_FILES = ("times", "U", "X", "Xd", "Xdd")
_ROM_FILES = ("Mr", "Dr", "Gr", "Kr", "Br")
_FACTOR_FILES = ("Mc", "Dc", "Gc", "Kc", "Bt")


@dataclass(frozen=True)
class _SyntheticSpec:
    n: int
    m: int
    seed: int


@dataclass(frozen=True)
class PipelineConfig:
    """Parsed and validated experiment description."""

    model: BeamSpec | RotorSpec | _SyntheticSpec
    excitation_kind: str
    amplitude: float
    f0: float
    f1: float
    frequency: float
    phases: tuple
    sweep_time: float | None
    dt: float
    t_end: float
    beta: float
    gamma: float
    r: int | None
    energy_tol: float
    training: TrainConfig
    val_frequencies: tuple
    val_speeds: tuple
    val_amplitude: float
    val_t_end: float
    outdir: str | None
    raw: dict

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def newmark(self, t_end: float | None = None) -> NewmarkConfig:
        horizon = self.t_end if t_end is None else t_end
        return NewmarkConfig(dt=self.dt, n_steps=int(round(horizon / self.dt)),
                             beta=self.beta, gamma=self.gamma)


class _Section:
    """Typed accessors over one config section with field-path errors."""

    def __init__(self, name, mapping):
        self.name = name
        self.mapping = dict(mapping)

    def _fetch(self, key, cast, default, required):
        if key not in self.mapping:
            if required:
                raise ConfigError(f"{self.name}.{key}: missing required key")
            return default
        raw = self.mapping[key].strip()
        try:
            return cast(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{self.name}.{key}: {exc}") from exc

    def str(self, key, default=None, required=False):
        return self._fetch(key, str, default, required)

    def float(self, key, default=None, required=False):
        return self._fetch(key, float, default, required)

    def int(self, key, default=None, required=False):
        return self._fetch(key, int, default, required)

    def floats(self, key, default=(), required=False):
        def cast(raw):
            return tuple(float(tok) for tok in raw.split(",") if tok.strip())
        return self._fetch(key, cast, tuple(default), required)

    def ints(self, key, default=(), required=False):
        def cast(raw):
            return tuple(int(tok) for tok in raw.split(",") if tok.strip())
        return self._fetch(key, cast, tuple(default), required)


def _parse_model(sec: _Section):
    kind = sec.str("kind", required=True).lower()
    try:
        if kind == "beam":
            support_name = sec.str("support", default="cantilever").lower()
            if support_name == "cantilever":
                support = Cantilever()
            elif support_name == "overhanging":
                nodes = sec.ints("support_nodes", required=True)
                if len(nodes) != 2:
                    raise ConfigError("model.support_nodes: need exactly two nodes")
                support = Overhanging(*nodes)
            else:
                raise ConfigError(f"model.support: unknown support '{support_name}'")
            defaults = BeamSpec()
            return BeamSpec(
                n_elements=sec.int("n_elements", defaults.n_elements),
                length=sec.float("length", defaults.length),
                youngs_modulus=sec.float("youngs_modulus", defaults.youngs_modulus),
                density=sec.float("density", defaults.density),
                cross_section_area=sec.float("cross_section_area", defaults.cross_section_area),
                second_moment=sec.float("second_moment", defaults.second_moment),
                support=support,
                rayleigh_alpha=sec.float("rayleigh_alpha", 0.0),
                rayleigh_beta=sec.float("rayleigh_beta", 0.0),
                load_nodes=sec.ints("load_nodes", defaults.load_nodes),
            )
        if kind == "rotor":
            defaults = RotorSpec()
            return RotorSpec(
                n_nodes=sec.int("n_nodes", defaults.n_nodes),
                node_mass=sec.float("node_mass", defaults.node_mass),
                node_transverse_inertia=sec.float("node_transverse_inertia", defaults.node_transverse_inertia),
                node_polar_inertia=sec.float("node_polar_inertia", defaults.node_polar_inertia),
                shaft_bending_stiffness=sec.float("shaft_bending_stiffness", defaults.shaft_bending_stiffness),
                bearing_nodes=sec.ints("bearing_nodes", defaults.bearing_nodes),
                bearing_stiffness=sec.float("bearing_stiffness", defaults.bearing_stiffness),
                bearing_damping=sec.float("bearing_damping", defaults.bearing_damping),
                forced_node=sec.int("forced_node", defaults.forced_node),
            )
        if kind == "synthetic":
            return _SyntheticSpec(
                n=sec.int("n", required=True),
                m=sec.int("m", default=1),
                seed=sec.int("seed", default=0),
            )
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc
    raise ConfigError(f"model.kind: unknown model kind '{kind}'")


def load_config(path, seed_override: int | None = None) -> PipelineConfig:
    """Parse and validate a pipeline config file.

    Raises
    ------
    ConfigError
        Naming the offending section.key on any invalid or missing field.
    """
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")

    def section(name, required=True):
        if not parser.has_section(name):
            if required:
                raise ConfigError(f"{name}: missing required section")
            return _Section(name, {})
        return _Section(name, parser[name])

    model = _parse_model(section("model"))

    exc_sec = section("excitation")
    kind = exc_sec.str("kind", default="chirp").lower()
    if kind not in ("chirp", "harmonic"):
        raise ConfigError(f"excitation.kind: unknown kind '{kind}'")
    n_channels = 2 if isinstance(model, RotorSpec) else (
        model.m if isinstance(model, _SyntheticSpec) else 1)
    phases_deg = exc_sec.floats("phi0_deg", default=(0.0,))
    if len(phases_deg) == 1:
        phases_deg = phases_deg * n_channels
    if len(phases_deg) != n_channels:
        raise ConfigError(
            f"excitation.phi0_deg: need {n_channels} phases, got {len(phases_deg)}"
        )
    phases = tuple(math.radians(p) for p in phases_deg)

    int_sec = section("integration")
    dt = int_sec.float("dt", required=True)
    t_end = int_sec.float("t_end", required=True)
    if dt <= 0 or t_end <= 0:
        raise ConfigError("integration.dt: dt and t_end must be positive")
    n_steps = round(t_end / dt)
    if n_steps < 1 or abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ConfigError("integration.t_end: t_end must be a multiple of dt")

    red_sec = section("reduction")
    r = red_sec.int("r", default=None)
    energy_tol = red_sec.float("energy_tol", default=1e-10)
    if r is None and "energy_tol" not in red_sec.mapping:
        raise ConfigError("reduction.r: set r or energy_tol")
    if r is not None and r < 1:
        raise ConfigError("reduction.r: must be >= 1")

    tr_sec = section("training")
    seed = tr_sec.int("seed", default=0)
    if seed_override is not None:
        seed = int(seed_override)
    try:
        training = TrainConfig(
            epochs=tr_sec.int("epochs", 36000),
            lr_low=tr_sec.float("lr_low", 5e-6),
            lr_high=tr_sec.float("lr_high", 1e-3),
            cycle_length=tr_sec.int("cycle_length", 2000),
            adam_beta1=tr_sec.float("adam_beta1", 0.9),
            adam_beta2=tr_sec.float("adam_beta2", 0.999),
            adam_eps=tr_sec.float("adam_eps", 1e-8),
            seed=seed,
            omega=tr_sec.float("omega", 0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"training: {exc}") from exc

    val_sec = section("validation", required=False)
    amplitude = exc_sec.float("amplitude", default=1.0)

    out_sec = section("output", required=False)
    outdir = out_sec.str("dir", default=None)

    raw = {name: dict(parser[name]) for name in parser.sections()}
    if seed_override is not None:
        raw.setdefault("training", {})["seed"] = str(seed)

    return PipelineConfig(
        model=model,
        excitation_kind=kind,
        amplitude=amplitude,
        f0=exc_sec.float("f0", default=1.0),
        f1=exc_sec.float("f1", default=1.0),
        frequency=exc_sec.float("frequency", default=1.0),
        phases=phases,
        sweep_time=exc_sec.float("sweep_time", default=None),
        dt=dt,
        t_end=t_end,
        beta=int_sec.float("beta", 0.25),
        gamma=int_sec.float("gamma", 0.5),
        r=r,
        energy_tol=energy_tol,
        training=training,
        val_frequencies=val_sec.floats("frequencies", default=()),
        val_speeds=val_sec.floats("speeds", default=()),
        val_amplitude=val_sec.float("amplitude", default=amplitude),
        val_t_end=val_sec.float("t_end", default=t_end),
        outdir=outdir,
        raw=raw,
    )


def config_hash(cfg: PipelineConfig) -> str:
    blob = json.dumps(cfg.raw, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def build_model(cfg: PipelineConfig) -> SecondOrderSystem:
    if isinstance(cfg.model, BeamSpec):
        return build_beam(cfg.model)
    if isinstance(cfg.model, RotorSpec):
        return build_rotor(cfg.model)
    return build_synthetic(cfg.model.n, cfg.model.m, cfg.model.seed)


def build_channels(cfg: PipelineConfig):
    """One excitation spec per input channel (chirp or harmonic)."""
    sweep_time = cfg.sweep_time if cfg.sweep_time is not None else cfg.t_end
    channels = []
    for phi0 in cfg.phases:
        if cfg.excitation_kind == "chirp":
            channels.append(ChirpSpec(amplitude=cfg.amplitude, phi0=phi0,
                                      f0=cfg.f0, f1=cfg.f1, sweep_time=sweep_time))
        else:
            channels.append(HarmonicSpec(amplitude=cfg.amplitude, phi0=phi0,
                                         frequency=cfg.frequency))
    return channels


# ---------------------------------------------------------------------------
# artifact helpers

def _need(path: Path) -> Path:
    if not path.exists():
        raise MissingArtifactError(f"missing artifact: {path}")
    return path


def _write_records(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _update_manifest(outdir: Path, cfg: PipelineConfig, entries: dict):
    path = outdir / "manifest.json"
    manifest = json.loads(path.read_text()) if path.exists() else {}
    manifest["config"] = cfg.raw
    manifest["config_sha256"] = config_hash(cfg)
    manifest["seed"] = cfg.training.seed
    manifest.update(entries)
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _save_system(outdir: Path, sys: SecondOrderSystem):
    fom_dir = outdir / "fom"
    fom_dir.mkdir(parents=True, exist_ok=True)
    for name in _FOM_FILES:
        matio.save_matrix(fom_dir / f"{name}.sopf", getattr(sys, name))
    meta = {"n": sys.n, "m": sys.m, "has_gyro": sys.has_gyro}
    (fom_dir / "system.json").write_text(json.dumps(meta, sort_keys=True) + "\n")


def _load_system(outdir: Path) -> SecondOrderSystem:
    fom_dir = outdir / "fom"
    meta = json.loads(_need(fom_dir / "system.json").read_text())
    mats = {name: matio.load_matrix(_need(fom_dir / f"{name}.sopf"))
            for name in _FOM_FILES}
    return SecondOrderSystem(M=mats["M"], D=mats["D"], K=mats["K"], B=mats["B"],
                             G=mats["G"], has_gyro=meta["has_gyro"])


def _save_snapshots(outdir: Path, snaps: SnapshotSet):
    snap_dir = outdir / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    matio.save_matrix(snap_dir / "times.sopf", snaps.times[:, None])
    for name in ("U", "X", "Xd", "Xdd"):
        matio.save_matrix(snap_dir / f"{name}.sopf", getattr(snaps, name))


def _load_snapshots(outdir: Path) -> SnapshotSet:
    snap_dir = outdir / "snapshots"
    times = matio.load_matrix(_need(snap_dir / "times.sopf"))[:, 0]
    mats = {name: matio.load_matrix(_need(snap_dir / f"{name}.sopf"))
            for name in ("U", "X", "Xd", "Xdd")}
    return SnapshotSet(times=times, **mats)


def _save_rom(outdir: Path, rom: StructuredROM, basis: PodBasis, scales, result):
    rom_dir = outdir / "rom"
    rom_dir.mkdir(parents=True, exist_ok=True)
    matio.save_matrix(rom_dir / "basis.sopf", basis.V)
    matio.save_matrix(rom_dir / "singular_values.sopf", basis.singular_values[:, None])
    for name in _ROM_FILES:
        matio.save_matrix(rom_dir / f"{name}.sopf", getattr(rom, name))
    for name in _FACTOR_FILES:
        matio.save_matrix(rom_dir / f"{name}.sopf", getattr(result.params, name))
    meta = {
        "r": rom.r,
        "m": rom.m,
        "omega_train": rom.omega_train,
        "structure_guaranteed": rom.structure_guaranteed,
        "scales": {"alpha_x": scales.alpha_x, "alpha_v": scales.alpha_v,
                   "alpha_a": scales.alpha_a, "alpha_u": scales.alpha_u},
        "final_loss": result.final_loss,
        "best_epoch": result.best_epoch,
    }
    (rom_dir / "rom.json").write_text(json.dumps(meta, sort_keys=True) + "\n")


def _load_rom(outdir: Path) -> tuple[StructuredROM, PodBasis]:
    rom_dir = outdir / "rom"
    meta = json.loads(_need(rom_dir / "rom.json").read_text())
    V = matio.load_matrix(_need(rom_dir / "basis.sopf"))
    sv = matio.load_matrix(_need(rom_dir / "singular_values.sopf"))[:, 0]
    basis = PodBasis(V=V, singular_values=sv, r=V.shape[1])
    mats = {name: matio.load_matrix(_need(rom_dir / f"{name}.sopf"))
            for name in _ROM_FILES}
    rom = StructuredROM(**mats, basis=V, omega_train=meta["omega_train"],
                        structure_guaranteed=meta["structure_guaranteed"])
    return rom, basis


# ---------------------------------------------------------------------------
# stages

def stage_generate(cfg: PipelineConfig, outdir: Path):
    """Build the full-order model, sample the input and integrate."""
    outdir.mkdir(parents=True, exist_ok=True)
    sys = build_model(cfg)
    if len(cfg.phases) != sys.m:
        raise ConfigError(
            f"excitation.phi0_deg: model has {sys.m} channels, got {len(cfg.phases)}"
        )
    newmark = cfg.newmark()
    times = cfg.dt * np.arange(newmark.n_steps + 1)
    U = sample_input(build_channels(cfg), times)
    omega = cfg.training.omega if sys.has_gyro else 0.0
    snaps = integrate(sys, omega, U, newmark)
    _save_system(outdir, sys)
    _save_snapshots(outdir, snaps)
    _update_manifest(outdir, cfg, {"generate": {"n": sys.n, "m": sys.m,
                                                "n_samples": snaps.n_samples,
                                                "omega": omega}})


def stage_svd_report(cfg: PipelineConfig, outdir: Path):
    """Write the singular-value decay CSV used for order selection."""
    snaps = _load_snapshots(outdir)
    sv = np.linalg.svd(snaps.X, compute_uv=False)
    svd_dir = outdir / "svd"
    svd_dir.mkdir(parents=True, exist_ok=True)
    rows = [(k + 1, float(s / sv[0])) for k, s in enumerate(sv)]
    _write_records(svd_dir / "sv_decay.csv", "r,sigma_ratio", rows)
    _update_manifest(outdir, cfg, {"svd": {"n_values": len(sv)}})


def stage_train(cfg: PipelineConfig, outdir: Path):
    """Compress, normalize, optimize and assemble the reduced model."""
    snaps = _load_snapshots(outdir)
    if cfg.r is not None and cfg.r > min(snaps.n, snaps.n_samples):
        raise ConfigError(
            f"reduction.r: r={cfg.r} exceeds state dimension {snaps.n}"
        )
    if cfg.r is not None:
        r = cfg.r
    else:
        sv = np.linalg.svd(snaps.X, compute_uv=False)
        r = select_order(sv, cfg.energy_tol)
    basis = pod_basis(snaps.X, r)
    reduced = project(basis, snaps)
    scales = compute_scales(reduced)
    result = train(normalize(reduced, scales), scales, cfg.training)
    rom = assemble_rom(result, scales, basis, cfg.training.omega)

    _save_rom(outdir, rom, basis, scales, result)
    train_dir = outdir / "train"
    train_dir.mkdir(parents=True, exist_ok=True)
    tc = cfg.training
    rows = [(k, float(result.loss_history[k]),
             cyclic_lr(k, tc.lr_low, tc.lr_high, tc.cycle_length))
            for k in range(tc.epochs)]
    _write_records(train_dir / "loss_history.csv", "epoch,loss,lr", rows)
    lines = [f"config_sha256 = {config_hash(cfg)}", f"seed = {tc.seed}",
             f"epochs = {tc.epochs}", f"lr_low = {tc.lr_low:.17g}",
             f"lr_high = {tc.lr_high:.17g}", f"cycle_length = {tc.cycle_length}",
             f"omega = {tc.omega:.17g}", f"r = {r}",
             f"alpha_x = {scales.alpha_x:.17g}", f"alpha_v = {scales.alpha_v:.17g}",
             f"alpha_a = {scales.alpha_a:.17g}", f"alpha_u = {scales.alpha_u:.17g}",
             f"final_loss = {result.final_loss:.17g}",
             f"best_epoch = {result.best_epoch}"]
    (train_dir / "run_manifest.txt").write_text("\n".join(lines) + "\n")
    _update_manifest(outdir, cfg, {"train": {"r": r, "final_loss": result.final_loss,
                                             "best_epoch": result.best_epoch}})


def stage_validate(cfg: PipelineConfig, outdir: Path):
    """Re-simulate the ROM under the training input and compare to the FOM."""
    sys = _load_system(outdir)
    snaps = _load_snapshots(outdir)
    rom, basis = _load_rom(outdir)
    newmark = cfg.newmark()
    omega = rom.omega_train if sys.has_gyro else 0.0
    Xhat = simulate_rom(rom, omega, snaps.U, newmark)
    gal = intrusive_galerkin(sys, basis)
    Xgal = simulate_rom(gal, omega, snaps.U, newmark)
    err = relative_error(snaps.X, Xhat)
    err_gal = relative_error(snaps.X, Xgal)
    dof = int(np.argmax(np.max(np.abs(snaps.X), axis=1)))

    val_dir = outdir / "validate"
    val_dir.mkdir(parents=True, exist_ok=True)
    rows = [(float(t), float(a), float(b), float(c)) for t, a, b, c in
            zip(snaps.times, snaps.X[dof], Xhat[dof], Xgal[dof])]
    _write_records(val_dir / "traj.csv", "time,fom,rom,galerkin", rows)
    rows = [(float(t), float(a), float(b)) for t, a, b in
            zip(snaps.times, err, err_gal)]
    _write_records(val_dir / "error.csv", "time,err_pinf,err_galerkin", rows)
    metrics = {
        "max_rel_error": float(np.max(err)),
        "max_rel_error_galerkin": float(np.max(err_gal)),
        "dof": dof,
        "structure_passed": check_structure(rom).passed,
    }
    (val_dir / "metrics.json").write_text(json.dumps(metrics, sort_keys=True) + "\n")
    _update_manifest(outdir, cfg, {"validate": metrics})


def stage_sweep(cfg: PipelineConfig, outdir: Path, jobs: int = 1):
    """Frequency sweep (and spin-speed sweep for rotating models)."""
    sys = _load_system(outdir)
    rom, basis = _load_rom(outdir)
    gal = intrusive_galerkin(sys, basis)
    sweep_dir = outdir / "sweep"
    sweep_dir.mkdir(parents=True, exist_ok=True)
    newmark = cfg.newmark(cfg.val_t_end)
    summary = {}

    if cfg.val_frequencies:
        omega = rom.omega_train if sys.has_gyro else 0.0
        result = frequency_sweep(
            sys, rom, cfg.val_frequencies, cfg.val_amplitude, newmark,
            baseline=gal, omega=omega, phases=cfg.phases,
            train_band=(cfg.f0, cfg.f1), jobs=jobs,
        )
        rows = list(zip(result.axis_values.tolist(),
                        result.max_rel_error_p.tolist(),
                        result.max_rel_error_baseline.tolist()))
        _write_records(sweep_dir / "freq_sweep.csv", "axis,err_pinf,err_baseline", rows)
        meta = {"axis": "frequency_hz", "train_band": [cfg.f0, cfg.f1],
                "amplitude": cfg.val_amplitude, "t_end": cfg.val_t_end,
                "omega": omega}
        (sweep_dir / "freq_sweep_meta.json").write_text(
            json.dumps(meta, sort_keys=True) + "\n")
        summary["freq_max_err"] = float(np.max(result.max_rel_error_p))

    if cfg.val_speeds:
        if not sys.has_gyro:
            raise ConfigError("validation.speeds: model has no gyroscopic term")
        result = speed_sweep(
            sys, rom, cfg.val_speeds, build_channels(cfg), newmark,
            baseline=gal, train_band=(rom.omega_train, rom.omega_train), jobs=jobs,
        )
        rows = list(zip(result.axis_values.tolist(),
                        result.max_rel_error_p.tolist(),
                        result.max_rel_error_baseline.tolist()))
        _write_records(sweep_dir / "speed_sweep.csv", "axis,err_pinf,err_baseline", rows)
        meta = {"axis": "spin_speed_rad_s",
                "train_band": [rom.omega_train, rom.omega_train],
                "t_end": cfg.val_t_end}
        (sweep_dir / "speed_sweep_meta.json").write_text(
            json.dumps(meta, sort_keys=True) + "\n")
        summary["speed_max_err"] = float(np.max(result.max_rel_error_p))

    _update_manifest(outdir, cfg, {"sweep": summary})


STAGES = {
    "generate": stage_generate,
    "svd-report": stage_svd_report,
    "train": stage_train,
    "validate": stage_validate,
    "sweep": stage_sweep,
}


def run_all(cfg: PipelineConfig, outdir: Path, jobs: int = 1):
    """Run the whole pipeline; equivalent to chaining the subcommands."""
    stage_generate(cfg, outdir)
    stage_svd_report(cfg, outdir)
    stage_train(cfg, outdir)
    stage_validate(cfg, outdir)
    stage_sweep(cfg, outdir, jobs=jobs)
