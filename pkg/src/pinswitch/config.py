"""Experiment configuration: nested dataclasses mirrored by a YAML file.

Matrices are written inline as lists of rows, or as a string naming a plain
text file of whitespace-separated rows (resolved relative to the config file).
"""

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import yaml

from . import instances as inst

KINDS = ("slow-switching", "mobile-spatial", "custom")


class ConfigError(ValueError):
    pass


def _rows(M):
    return [[float(v) for v in row] for row in np.asarray(M, float)]


@dataclass
class NetworkConfig:
    L: List = field(default_factory=list)
    C: List = field(default_factory=list)  # diagonals (lists of 0/1) or full matrices
    kappa: float = inst.SLOW_KAPPA
    eps: float = inst.SLOW_EPS


@dataclass
class MarkovConfig:
    embedded: List = field(default_factory=list)
    rates: Optional[List[float]] = None  # drawn once from Uniform(0, rate_max) if absent
    rate_max: float = inst.SLOW_RATE_MAX


@dataclass
class DynamicsConfig:
    T: List = field(default_factory=lambda: _rows(inst_cnn()))
    D: List = field(default_factory=lambda: _rows(np.eye(3)))
    alpha: float = inst.SLOW_ALPHA
    beta: float = inst.SLOW_BETA
    Lf: float = inst.MOBILE_LF
    G: Optional[List] = None
    Gamma: Optional[List] = None


@dataclass
class SimulationConfig:
    h: float = inst.SLOW_STEP
    horizon: float = 10.0
    stride: int = 1
    init_box: float = 1.0  # x0, s0 drawn from Uniform(-init_box, init_box)


@dataclass
class MobilitySection:
    m: int = 10
    width: float = 100.0
    region: List[float] = field(default_factory=lambda: [0.0, 50.0, 0.0, 50.0])
    r_link: float = 10.0
    v_min: float = 500.0
    v_max: float = 600.0
    w_min: float = 0.29
    w_max: float = 0.33
    dump_stride: int = 0  # 0 disables the position dump
    stats_horizon: float = 1000.0
    stats_dt: float = 1e-2


@dataclass
class CertificateConfig:
    requested: List[str] = field(default_factory=lambda: ["theorem1", "theorem2"])
    weights: str = "identity"  # identity | perron
    delta: float = inst.MOBILE_DELTA
    r_steps: int = inst.MOBILE_R_STEPS
    p_bar: float = 0.99
    p_tilde: float = 0.75


@dataclass
class ExperimentConfig:
    kind: str = "slow-switching"
    seed: int = 42
    runs: int = 1
    out: str = "out"
    network: NetworkConfig = field(default_factory=NetworkConfig)
    markov: MarkovConfig = field(default_factory=MarkovConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    mobility: MobilitySection = field(default_factory=MobilitySection)
    certificates: CertificateConfig = field(default_factory=CertificateConfig)

    def validate(self):
        """Raise ``ConfigError`` on inconsistent or malformed settings."""
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        sim = self.simulation
        if sim.h <= 0 or sim.horizon <= 0 or sim.stride < 1:
            raise ConfigError("simulation needs h > 0, horizon > 0, stride >= 1")
        if self.network.kappa <= 0 or self.network.eps <= 0:
            raise ConfigError("kappa and eps must be positive")
        T, D = np.asarray(self.dynamics.T, float), np.asarray(self.dynamics.D, float)
        if T.shape != D.shape or T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ConfigError("dynamics T and D must be square and the same size")
        if self.dynamics.beta <= 0:
            raise ConfigError("beta must be positive")
        if self.kind != "mobile-spatial":
            self._validate_switched()
        else:
            try:
                self.mobility_config()
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        return self

    def _validate_switched(self):
        from .switchnet import SwitchedTopology

        if not self.network.L:
            raise ConfigError("topology list is empty")
        try:
            topo = SwitchedTopology(self.network.L, self.network.C)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        P = np.asarray(self.markov.embedded, float)
        if P.shape != (topo.N, topo.N):
            raise ConfigError("embedded chain size does not match the topology family")
        from .markov import check_embedded

        try:
            check_embedded(P)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.markov.rates is not None:
            q = np.asarray(self.markov.rates, float)
            if q.shape != (topo.N,) or np.any(q <= 0):
                raise ConfigError("rates must be positive, one per state")
        elif self.markov.rate_max <= 0:
            raise ConfigError("rate_max must be positive")

    def mobility_config(self):
        from .mobility import MobilityConfig

        mb = self.mobility
        return MobilityConfig(
            m=mb.m, width=mb.width, region=tuple(mb.region), r_link=mb.r_link,
            v_min=mb.v_min, v_max=mb.v_max, w_min=mb.w_min, w_max=mb.w_max,
        )

    def to_dict(self):
        return _plain(dataclasses.asdict(self))

    def dump(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)


def _plain(obj):
    """Recursively turn numpy scalars/arrays and tuples into plain YAML-safe values."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def inst_cnn():
    from .dynamics import CNN_WEIGHTS

    return CNN_WEIGHTS


def slow_switching_defaults():
    return ExperimentConfig(
        kind="slow-switching",
        network=NetworkConfig(L=[_rows(L) for L in inst.SLOW_L], C=[list(np.diag(C)) for C in inst.SLOW_C]),
        markov=MarkovConfig(embedded=_rows(inst.SLOW_EMBEDDED)),
    )


def mobile_spatial_defaults():
    return ExperimentConfig(
        kind="mobile-spatial",
        seed=7,
        network=NetworkConfig(kappa=inst.MOBILE_KAPPA, eps=inst.MOBILE_EPS),
        simulation=SimulationConfig(h=inst.MOBILE_STEP, horizon=1.0, stride=10),
        certificates=CertificateConfig(requested=["theorem3"]),
    )


def load_matrix_file(path):
    rows = [line.split() for line in Path(path).read_text().splitlines() if line.strip() and not line.lstrip().startswith("#")]
    try:
        return [[float(v) for v in r] for r in rows]
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric matrix entry") from exc


def _resolve(value, base):
    if isinstance(value, str):
        p = Path(value)
        if not p.is_absolute():
            p = base / p
        if not p.exists():
            raise ConfigError(f"matrix file not found: {p}")
        return load_matrix_file(p)
    return value


def _build(cls, data, path=""):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section {path or cls.__name__} must be a mapping")
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(names)
    if unknown:
        raise ConfigError(f"unknown keys in {path or 'config'}: {sorted(unknown)}")
    kwargs = {}
    for k, v in data.items():
        sub = _SECTIONS.get(k) if cls is ExperimentConfig else None
        kwargs[k] = _build(sub, v, k) if sub else v
    return cls(**kwargs)


_SECTIONS = {
    "network": NetworkConfig,
    "markov": MarkovConfig,
    "dynamics": DynamicsConfig,
    "simulation": SimulationConfig,
    "mobility": MobilitySection,
    "certificates": CertificateConfig,
}


def from_dict(data, base=Path(".")):
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    kind = data.get("kind", "slow-switching")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    defaults = mobile_spatial_defaults() if kind == "mobile-spatial" else slow_switching_defaults()
    merged = defaults.to_dict()
    for k, v in data.items():
        if k in _SECTIONS and isinstance(v, dict) and isinstance(merged.get(k), dict):
            merged[k] = {**merged[k], **v}
        else:
            merged[k] = v
    net = merged.get("network", {})
    if isinstance(net, dict):
        for key in ("L", "C"):
            if key in net and isinstance(net[key], list):
                net[key] = [_resolve(M, base) for M in net[key]]
    for sec, keys in (("markov", ("embedded",)), ("dynamics", ("T", "D", "G", "Gamma"))):
        d = merged.get(sec)
        if isinstance(d, dict):
            for key in keys:
                if d.get(key) is not None:
                    d[key] = _resolve(d[key], base)
    try:
        cfg = _build(ExperimentConfig, merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def load(path):
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return from_dict(data or {}, base=path.parent)


def loads(text, base=Path(".")):
    return from_dict(yaml.safe_load(text) or {}, base=base)
