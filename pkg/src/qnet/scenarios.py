"""Scenario configuration, initial states, sweeps and figure presets."""

from __future__ import annotations

import dataclasses
import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__, qops
from . import correlations as corr
from . import csvio
from . import floquet
from . import lindblad as lb
from . import metrics
from . import network as nw

log = logging.getLogger(__name__)

STATE_KINDS = ("entangled", "mixed", "theta-pure", "ground", "custom")
SWEEP_AXES = ("state", "gamma", "drain", "theta", "drive")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InitialStateSpec:
    kind: str = "entangled"
    theta: float = 0.0
    matrix: tuple | None = None

    def __post_init__(self):
        if self.kind not in STATE_KINDS:
            raise ConfigError(f"unknown initial state kind {self.kind!r}")
        if not 0.0 <= self.theta <= math.pi / 2 + 1e-12:
            raise ConfigError("theta must lie in [0, pi/2]")
        if self.kind == "custom":
            if self.matrix is None:
                raise ConfigError("custom initial state needs a matrix")
            m = np.array(self.matrix, dtype=complex)
            try:
                qops.validate_density(m)
            except qops.InvalidStateError as exc:
                raise ConfigError(f"invalid custom matrix: {exc}") from None
            object.__setattr__(self, "matrix", tuple(tuple(complex(v) for v in row) for row in m))


def initial_state(spec: InitialStateSpec) -> np.ndarray:
    """16x16 initial state; sites 1 and 3 start in the ground state."""
    eg, ge = qops.basis_state("gegg"), qops.basis_state("ggge")
    if spec.kind == "entangled":
        return qops.ket2dm((eg + ge) / math.sqrt(2))
    if spec.kind == "mixed":
        return 0.5 * (qops.ket2dm(eg) + qops.ket2dm(ge))
    if spec.kind == "theta-pure":
        return qops.ket2dm(math.cos(spec.theta) * eg + math.sin(spec.theta) * ge)
    if spec.kind == "ground":
        return qops.ket2dm(qops.basis_state("gggg"))
    return np.array(spec.matrix, dtype=complex)


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    name: str = "sweep"
    correlations: bool = False
    correlation_every: int = 1
    trajectories: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to run a sweep; ``horizon`` is in ct units.

    Sweep axes, evaluated as a Cartesian product in the order given:

    ``drive``  rescaled drive strength eta_d omega_d / c
    ``gamma``  uniform dephasing in units of c
    ``drain``  drain rate in units of c, with the source kept at twice it
    ``theta``  angle of the theta-pure initial state
    ``state``  initial state kind
    """

    network: nw.NetworkSpec = field(default_factory=nw.default_network)
    dissipators: lb.DissipatorSpec = field(default_factory=lb.default_dissipators)
    integrator: lb.IntegratorSpec = field(default_factory=lb.IntegratorSpec)
    initial: InitialStateSpec = field(default_factory=InitialStateSpec)
    horizon: float = 10.0
    sweep: dict = field(default_factory=dict)
    outputs: OutputSpec = field(default_factory=OutputSpec)

    def __post_init__(self):
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        sweep = {}
        for axis, values in dict(self.sweep).items():
            if axis not in SWEEP_AXES:
                raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
            values = tuple(values)
            if not values:
                raise ConfigError(f"sweep axis {axis!r} is empty")
            if axis == "state":
                bad = [v for v in values if v not in STATE_KINDS or v == "custom"]
            else:
                bad = [v for v in values if not isinstance(v, (int, float)) or isinstance(v, bool)]
            if bad:
                raise ConfigError(f"invalid values on axis {axis!r}: {bad}")
            sweep[axis] = values
        object.__setattr__(self, "sweep", sweep)


# ---------------------------------------------------------------------------
# JSON round trip


def _strict(cls, data: Any, where: str) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    return dict(data)


def _parse_network(data) -> nw.NetworkSpec:
    d = _strict(nw.NetworkSpec, data, "network")
    sites = tuple(
        nw.SiteSpec(**_strict(nw.SiteSpec, s, f"network.sites[{i}]")) for i, s in enumerate(d.get("sites", ()))
    )
    drive = nw.DriveSpec(**_strict(nw.DriveSpec, d.get("drive", {}), "network.drive"))
    return nw.NetworkSpec(sites, drive, tuple(tuple(row) for row in d.get("hopping", ())))


def _parse_initial(data) -> InitialStateSpec:
    d = _strict(InitialStateSpec, data, "initial")
    if d.get("matrix") is not None:
        m = d["matrix"]
        if not isinstance(m, dict) or set(m) != {"real", "imag"}:
            raise ConfigError("initial.matrix must be {'real': [[...]], 'imag': [[...]]}")
        d["matrix"] = tuple(map(tuple, np.array(m["real"]) + 1j * np.array(m["imag"])))
    return InitialStateSpec(**d)


def config_from_dict(data: dict) -> ScenarioConfig:
    d = _strict(ScenarioConfig, data, "config")
    kwargs: dict[str, Any] = {}
    try:
        if "network" in d:
            kwargs["network"] = _parse_network(d["network"])
        if "dissipators" in d:
            kwargs["dissipators"] = lb.DissipatorSpec(**_strict(lb.DissipatorSpec, d["dissipators"], "dissipators"))
        if "integrator" in d:
            kwargs["integrator"] = lb.IntegratorSpec(**_strict(lb.IntegratorSpec, d["integrator"], "integrator"))
        if "initial" in d:
            kwargs["initial"] = _parse_initial(d["initial"])
        if "outputs" in d:
            kwargs["outputs"] = OutputSpec(**_strict(OutputSpec, d["outputs"], "outputs"))
        if "horizon" in d:
            kwargs["horizon"] = float(d["horizon"])
        if "sweep" in d:
            if not isinstance(d["sweep"], dict):
                raise ConfigError("sweep must be an object of axis -> list")
            kwargs["sweep"] = d["sweep"]
        return ScenarioConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def config_to_dict(cfg: ScenarioConfig) -> dict:
    out = dataclasses.asdict(cfg)
    out["network"]["sites"] = [dict(s, coord=list(s["coord"])) for s in out["network"]["sites"]]
    out["network"]["hopping"] = [list(r) for r in cfg.network.hopping]
    out["dissipators"]["gamma_deph"] = list(cfg.dissipators.gamma_deph)
    out["sweep"] = {k: list(v) for k, v in cfg.sweep.items()}
    m = cfg.initial.matrix
    out["initial"]["matrix"] = None if m is None else {
        "real": np.real(np.array(m)).tolist(),
        "imag": np.imag(np.array(m)).tolist(),
    }
    return out


def dumps(cfg: ScenarioConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"


def loads(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return config_from_dict(data)


def load(path: str | Path) -> ScenarioConfig:
    return loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# sweeps


def sweep_points(cfg: ScenarioConfig) -> list[dict]:
    axes = list(cfg.sweep)
    return [dict(zip(axes, combo)) for combo in itertools.product(*cfg.sweep.values())]


def resolve_point(cfg: ScenarioConfig, point: dict):
    """Network, dissipators and initial state at one sweep point."""
    net, dis, init = cfg.network, cfg.dissipators, cfg.initial
    c = net.c
    if "drive" in point:
        net = net.with_drive_strength(point["drive"])
    if "gamma" in point:
        dis = replace(dis, gamma_deph=(point["gamma"] * c,) * net.n_sites)
    if "drain" in point:
        dis = replace(dis, gamma_d=point["drain"] * c, gamma_s=2.0 * point["drain"] * c)
    if "state" in point:
        init = InitialStateSpec(point["state"], init.theta if point["state"] == "theta-pure" else 0.0)
    if "theta" in point:
        init = InitialStateSpec("theta-pure", point["theta"])
    return net, dis, init


@dataclass
class PointResult:
    point: dict
    record: metrics.EfficiencyRecord | None
    average: corr.CorrelationSample | None
    diagnostics: dict
    status: str
    trajectory: lb.Trajectory | None = None


def evaluate_point(cfg: ScenarioConfig, point: dict, keep_trajectory: bool = False) -> PointResult:
    try:
        net, dis, init = resolve_point(cfg, point)
        traj = lb.evolve(initial_state(init), net, dis, cfg.integrator, t_end=cfg.horizon / net.c)
        gamma_d = dis.gamma_d if dis.gamma_d > 0 else math.nan
        p3 = metrics.integrated_population(traj, dis.drain_site)
        record = metrics.EfficiencyRecord(p3, 2.0 * gamma_d * p3, cfg.horizon, dict(point))
        average = None
        if cfg.outputs.correlations:
            series = corr.correlation_series(traj, cfg.outputs.correlation_every)
            average = corr.time_average(series, cfg.horizon)
        keep = keep_trajectory or cfg.outputs.trajectories
        return PointResult(point, record, average, traj.diagnostics, "ok", traj if keep else None)
    except (lb.IntegrationError, ValueError, ArithmeticError) as exc:
        log.warning("sweep point %s failed: %s", point, exc)
        return PointResult(point, None, None, {}, f"error: {exc}".replace("\n", " "))


def sweep_columns(cfg: ScenarioConfig) -> list[str]:
    cols = list(cfg.sweep) + ["P3", "eta_eff"]
    if cfg.outputs.correlations:
        cols += ["eof", "discord2", "discord4", "mutual_info"]
    return cols + ["max_trace_drift", "min_eig", "status"]


def _row(cfg: ScenarioConfig, res: PointResult) -> dict:
    nan = math.nan
    row = dict(res.point)
    rec = res.record
    row["P3"] = rec.p3_integral if rec else nan
    row["eta_eff"] = rec.eta_eff if rec else nan
    if cfg.outputs.correlations:
        avg = res.average
        row.update(
            eof=avg.eof if avg else nan,
            discord2=avg.discord_2 if avg else nan,
            discord4=avg.discord_4 if avg else nan,
            mutual_info=avg.mutual_info if avg else nan,
        )
    row["max_trace_drift"] = res.diagnostics.get("max_trace_drift", nan)
    row["min_eig"] = res.diagnostics.get("min_eig", nan)
    row["status"] = res.status
    return row


def _point_label(point: dict) -> str:
    return "_".join(f"{k}{csvio.fmt(v)}" for k, v in point.items()) or "point"


def run_sweep(
    cfg: ScenarioConfig,
    threads: int = 1,
    out_dir: str | Path | None = None,
    name: str | None = None,
) -> tuple[Path, list[PointResult]]:
    """Evaluate every sweep point and stream one CSV row per point in grid order."""
    out_dir = Path(out_dir if out_dir is not None else cfg.outputs.directory)
    path = out_dir / f"{name or cfg.outputs.name}.csv"
    points = sweep_points(cfg)
    results = []
    with csvio.RowWriter(path, sweep_columns(cfg)) as writer:
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            for res in pool.map(lambda p: evaluate_point(cfg, p), points):
                writer.write(_row(cfg, res))
                if cfg.outputs.trajectories and res.trajectory is not None:
                    csvio.write_trajectory(out_dir / f"{path.stem}_{_point_label(res.point)}.csv", res.trajectory)
                    res.trajectory = None
                results.append(res)
    return path, results


# ---------------------------------------------------------------------------
# presets

DRIVE_GRID = tuple(round(0.4 * i, 10) for i in range(151))
FIRST_MIN, FIRST_MAX = 18.0, 38.8
GAMMA_GRID = tuple(round(0.1 * i, 10) for i in range(11))
ENTVAR_GAMMA = tuple(round(0.05 * i, 10) for i in range(21))
ENTVAR_THETA = tuple(math.pi / 32 * i for i in range(9))
LONG_HORIZON = 100.0
CORR_EVERY = 5  # correlations every ct = 0.01 on the default record grid
FMAP_ETA = tuple(2.5 * i / 100 for i in range(101))
FMAP_DPHI = tuple(-2 * math.pi + 4 * math.pi * i / 160 for i in range(161))

PRESETS = ("fig2", "fig3", "fig3heat", "fig4", "fig5", "fig6", "gamd", "entvar")


def default_config(
    state: str = "entangled",
    gamma: float = 0.0,
    drain: float = 0.01,
    drive: float = 0.0,
    horizon: float = 10.0,
    sweep: dict | None = None,
    **outputs,
) -> ScenarioConfig:
    """Config for the default square network; rates are given in units of c."""
    net = nw.default_network(drive_strength=drive)
    c = net.c
    dis = lb.DissipatorSpec(gamma_s=2 * drain * c, gamma_d=drain * c, gamma_deph=(gamma * c,) * 4)
    return ScenarioConfig(
        network=net,
        dissipators=dis,
        initial=InitialStateSpec(state),
        horizon=horizon,
        sweep=sweep or {},
        outputs=OutputSpec(**outputs),
    )


def _tag(x: float) -> str:
    return csvio.fmt(x).replace(".", "p")


def preset_configs(name: str) -> dict[str, ScenarioConfig]:
    """Named sweep configurations making up a preset (empty for fig2)."""
    if name == "fig2":
        return {}
    if name == "fig3":
        return {
            f"fig3_{state[:3]}_gamma{_tag(g)}": default_config(state, gamma=g, sweep={"drive": DRIVE_GRID})
            for g in (0.0, 0.1)
            for state in ("entangled", "mixed")
        }
    if name == "fig3heat":
        return {
            f"fig3heat_{state[:3]}": default_config(state, sweep={"gamma": GAMMA_GRID, "drive": DRIVE_GRID})
            for state in ("entangled", "mixed")
        }
    if name == "fig4":
        return {
            f"fig4_{label}_{state[:3]}_gamma{_tag(g)}": default_config(
                state, gamma=g, horizon=LONG_HORIZON, sweep={"drive": (x,)}, trajectories=True
            )
            for label, x in (("max", FIRST_MAX), ("min", FIRST_MIN))
            for state in ("entangled", "mixed")
            for g in (0.0, 0.1)
        }
    if name == "fig5":
        return {
            f"fig5_{label}": default_config(
                "entangled", gamma=0.0, horizon=LONG_HORIZON, sweep={"drive": (x,)},
                correlations=True, correlation_every=CORR_EVERY,
            )
            for label, x in (("max", FIRST_MAX), ("min", FIRST_MIN))
        }
    if name == "fig6":
        return {"fig6": default_config("entangled", gamma=1.0, sweep={"drive": DRIVE_GRID}, correlations=True,
                                     correlation_every=CORR_EVERY)}
    if name == "gamd":
        return {
            f"gamd_{state[:3]}_drain{_tag(d)}": default_config(state, gamma=0.1, drain=d, sweep={"drive": DRIVE_GRID})
            for d in (0.01, 0.1)
            for state in ("entangled", "mixed")
        }
    if name == "entvar":
        return {
            "entvar": default_config(sweep={"gamma": ENTVAR_GAMMA, "theta": ENTVAR_THETA}, drive=FIRST_MAX)
        }
    raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def _override(cfg: ScenarioConfig, dt: float | None, horizon: float | None) -> ScenarioConfig:
    if dt is not None:
        cfg = replace(cfg, integrator=replace(cfg.integrator, dt=dt))
    if horizon is not None:
        cfg = replace(cfg, horizon=horizon)
    return cfg


def suppression_maps(out_dir: Path, eta=FMAP_ETA, dphi=FMAP_DPHI, pairs=((1, 3), (2, 4)), prefix="fig2"):
    paths = []
    for j, k in pairs:
        values = floquet.suppression_map((j, k), eta, dphi)
        paths.append(csvio.write_map(Path(out_dir) / f"{prefix}_pair{j}{k}.csv", eta, dphi, values))
    return paths


def run_preset(
    name: str,
    out_dir: str | Path = "out",
    threads: int = 1,
    dt: float | None = None,
    horizon: float | None = None,
    progress: Callable[[str], None] | None = None,
) -> list[Path]:
    """Write the CSV files of a figure preset plus ``<name>_manifest.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    configs = {k: _override(v, dt, horizon) for k, v in preset_configs(name).items()}
    paths: list[Path] = []
    if name == "fig2":
        paths += suppression_maps(out_dir)
    elif name == "fig5":
        for stem, cfg in configs.items():
            net, dis, init = resolve_point(cfg, sweep_points(cfg)[0])
            traj = lb.evolve(initial_state(init), net, dis, cfg.integrator, t_end=cfg.horizon / net.c)
            paths.append(csvio.write_correlations(out_dir / f"{stem}.csv", corr.correlation_series(traj, cfg.outputs.correlation_every)))
            if progress:
                progress(stem)
    else:
        for stem, cfg in configs.items():
            path, _ = run_sweep(cfg, threads=threads, out_dir=out_dir, name=stem)
            paths.append(path)
            if cfg.outputs.trajectories:
                paths += sorted(out_dir.glob(f"{stem}_*.csv"))
            if progress:
                progress(stem)
    manifest = {
        "preset": name,
        "version": __version__,
        "configs": {k: config_to_dict(v) for k, v in configs.items()},
        "files": [p.name for p in paths],
    }
    mpath = out_dir / f"{name}_manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return paths + [mpath]
