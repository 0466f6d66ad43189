"""Experiment configuration: YAML file + command-line overrides."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .dynamics import NoiseParams
from .ga import GAConfig

KINDS = ("train", "sweep-pulses", "sweep-gears", "sweep-size", "sweep-thermal", "phase-space")
SWEEP_KINDS = tuple(k for k in KINDS if k.startswith("sweep-"))

# amplitude tables for the gear sweep, keyed by gear count
GEAR_TABLES = {
    3: (1.0, 0.0, -1.0),
    5: (1.0, 0.5, 0.0, -0.5, -1.0),
    7: (1.0, 0.67, 0.33, 0.0, -0.33, -0.67, -1.0),
    9: (1.0, 0.75, 0.5, 0.25, 0.0, -0.25, -0.5, -0.75, -1.0),
}

SWEEP_DEFAULTS = {
    "sweep-pulses": [25, 50, 100, 200],
    "sweep-gears": [3, 5, 7, 9],
    "sweep-size": [4, 10, 20],
    "sweep-thermal": [0.0, 0.1, 0.5, 1.0],
}

SWEEP_GENERATIONS = 150
TRAIN_RECORD_EVERY = 2
SWEEP_RECORD_EVERY = 30


class ConfigError(ValueError):
    pass


@dataclass
class PhaseSpaceConfig:
    sequence_file: str | None = None
    sequence: list | None = None
    sample_times: list | None = None
    n_theta: int = 64
    n_phi: int = 128


@dataclass
class ExperimentConfig:
    kind: str = "train"
    ga: GAConfig = field(default_factory=GAConfig)
    sweep_values: list | None = None
    repetitions: int = 5
    output_dir: str = "runs/out"
    record_every: int | None = None
    workers: int = 1
    phase_space: PhaseSpaceConfig = field(default_factory=PhaseSpaceConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in SWEEP_KINDS and self.sweep_values is None:
            self.sweep_values = list(SWEEP_DEFAULTS[self.kind])
        if self.record_every is None:
            self.record_every = SWEEP_RECORD_EVERY if self.kind in SWEEP_KINDS else TRAIN_RECORD_EVERY
        self.validate()

    def validate(self):
        if self.kind in SWEEP_KINDS and not self.sweep_values:
            raise ConfigError("sweep values must be non-empty")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.kind == "sweep-gears":
            for v in self.sweep_values:
                gear_table(v)

    def recorded_generations(self) -> list[int]:
        g = self.ga.generations
        gens = list(range(1, g + 1, self.record_every))
        if gens[-1] != g:
            gens.append(g)
        return gens

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def gear_table(value) -> tuple:
    """A gear count (3, 5, 7, 9 have built-in tables) or an explicit amplitude list."""
    if isinstance(value, (list, tuple)):
        if not value:
            raise ConfigError("empty amplitude table")
        return tuple(float(x) for x in value)
    if int(value) in GEAR_TABLES:
        return GEAR_TABLES[int(value)]
    raise ConfigError(f"no amplitude table for {value} gears; give the table explicitly")


def _build(cls, data: dict, where: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    return data


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw or {})
    ga_raw = dict(_build(GAConfig, raw.pop("ga", None), "ga"))
    noise_raw = _build(NoiseParams, ga_raw.pop("noise", None), "ga.noise")
    ps_raw = _build(PhaseSpaceConfig, raw.pop("phase_space", None), "phase_space")
    sweep = raw.pop("sweep", None) or {}
    if "values" in sweep:
        raw["sweep_values"] = sweep.pop("values")
    if sweep:
        raise ConfigError(f"sweep: unknown keys {sorted(sweep)}")
    _build(ExperimentConfig, raw, "config")
    kind = raw.get("kind", "train")
    if kind in SWEEP_KINDS and "generations" not in ga_raw:
        ga_raw["generations"] = SWEEP_GENERATIONS
    try:
        ga = GAConfig(noise=NoiseParams(**noise_raw), **ga_raw)
        return ExperimentConfig(ga=ga, phase_space=PhaseSpaceConfig(**ps_raw), **raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None, overrides: dict | None = None) -> ExperimentConfig:
    """Read YAML (if given), apply dotted-key overrides such as {"ga.seed": 3}."""
    raw = {}
    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    for key, value in (overrides or {}).items():
        node = raw
        *parents, leaf = key.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    return config_from_dict(raw)


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=True, default_flow_style=None)
