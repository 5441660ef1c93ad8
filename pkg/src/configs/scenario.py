"""
Scenario files.

A scenario is a flat `key = value` file under a `[scenario]` header, `#` starts a
comment:

    [scenario]
    name = fig1a            # optional
    model = driven_collective
    initial_state = theta_superposition
    theta = 0
    omega_over_gamma = 5
    t_final = 20
    dt_out = 0.1
    outputs = psi_plus_norm, singlet

`amplitudes` (for `initial_state = custom_amplitudes`) is a comma list of Python
complex literals over the product basis, e.g. `0, 0.6, 0.8j, 0`.
"""

import configparser
import math
from enum import StrEnum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.configs.settings import IntegratorChoice
from src.physics.errors import WernerSimError
from src.physics.lindblad import ModelTag

SECTION = "scenario"
MAX_PARTICLES = 6


class ConfigError(WernerSimError):
    """A scenario file or option violates a constraint; names the offending field."""

    def __init__(self, field: str, constraint: str) -> None:
        super().__init__(f"{field}: {constraint}")
        self.field = field
        self.constraint = constraint


class InitialPreset(StrEnum):
    EG = "eg"
    GE = "ge"
    THETA_SUPERPOSITION = "theta_superposition"
    FOUR_PARTICLE_THETA = "four_particle_theta"
    CUSTOM_AMPLITUDES = "custom_amplitudes"


class Observable(StrEnum):
    POPULATIONS = "populations"
    PURITY = "purity"
    ENTROPY_PAPER = "entropy_paper"
    SINGLET = "singlet"
    PSI_PLUS = "psi_plus"
    PHI_PLUS = "phi_plus"
    PHI_MINUS = "phi_minus"
    PSI_PLUS_NORM = "psi_plus_norm"
    FIDELITY_PSIE = "fidelity_psiE"
    GG_POPULATION = "gg_population"
    PHOTON_NUMBER = "photon_number"
    SECTOR_WEIGHTS = "sector_weights"


TWO_ATOM_OBSERVABLES = frozenset(
    {
        Observable.SINGLET,
        Observable.PSI_PLUS,
        Observable.PHI_PLUS,
        Observable.PHI_MINUS,
        Observable.PSI_PLUS_NORM,
        Observable.GG_POPULATION,
    }
)


class ScenarioParameters(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    omega_over_gamma: float = Field(0.0, ge=0.0)
    phi: float = 0.0
    gamma: float = Field(1.0, gt=0.0)
    xi: float = math.pi / 4
    g: float | None = Field(None, ge=0.0)
    kappa: float | None = Field(None, gt=0.0)
    n_max: int | None = Field(None, ge=1)
    theta: float = 0.0
    n_particles: int = Field(2, ge=2, le=MAX_PARTICLES)


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "scenario"
    model: ModelTag
    parameters: ScenarioParameters = ScenarioParameters()
    initial_state: InitialPreset
    amplitudes: tuple[complex, ...] | None = None
    t_final: float = Field(gt=0.0)
    dt_out: float = Field(gt=0.0)
    outputs: tuple[Observable, ...] = (Observable.POPULATIONS,)
    integrator: IntegratorChoice | None = None

    @property
    def n_atoms(self) -> int:
        if self.model is ModelTag.DRIVEN_COLLECTIVE:
            return self.parameters.n_particles
        return 2

    @model_validator(mode="after")
    def _check_consistency(self) -> "ScenarioConfig":
        params = self.parameters
        if params.n_particles % 2:
            raise ValueError("n_particles must be even")
        if self.model is not ModelTag.DRIVEN_COLLECTIVE and params.n_particles != 2:
            raise ValueError(f"model {self.model} holds exactly two atoms")
        if self.model is ModelTag.CAVITY_FULL and (params.g is None or params.kappa is None):
            raise ValueError("cavity_full needs both g and kappa")

        if self.initial_state is InitialPreset.FOUR_PARTICLE_THETA:
            if self.n_atoms != 4:
                raise ValueError("four_particle_theta needs driven_collective with n_particles = 4")
        elif self.initial_state is not InitialPreset.CUSTOM_AMPLITUDES and self.n_atoms != 2:
            raise ValueError(f"initial state {self.initial_state} is a two-atom state")
        if self.initial_state is InitialPreset.CUSTOM_AMPLITUDES:
            if self.amplitudes is None:
                raise ValueError("custom_amplitudes needs an amplitudes list")
            if len(self.amplitudes) != 2**self.n_atoms:
                raise ValueError(f"amplitudes must have {2**self.n_atoms} entries")
            if not any(abs(value) > 0 for value in self.amplitudes):
                raise ValueError("amplitudes are all zero")

        for observable in self.outputs:
            if observable in TWO_ATOM_OBSERVABLES and self.n_atoms != 2:
                raise ValueError(f"output {observable} is defined for two atoms only")
            if observable is Observable.FIDELITY_PSIE and self.model is ModelTag.DRIVEN_COLLECTIVE:
                raise ValueError("fidelity_psiE needs a xi-dependent model")
            if observable is Observable.PHOTON_NUMBER and self.model is not ModelTag.CAVITY_FULL:
                raise ValueError("photon_number needs the cavity_full model")
            collective = self.model is ModelTag.DRIVEN_COLLECTIVE
            if observable is Observable.SECTOR_WEIGHTS and not collective:
                raise ValueError("sector_weights needs the driven_collective model")
        if len(set(self.outputs)) != len(self.outputs):
            raise ValueError("outputs are listed twice")
        return self


_TOP_LEVEL_KEYS = frozenset(
    {"name", "model", "initial_state", "amplitudes", "t_final", "dt_out", "outputs", "integrator"}
)


def _split(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _parse_amplitudes(value: str) -> list[complex]:
    amplitudes = []
    for item in _split(value):
        try:
            amplitudes.append(complex(item.replace(" ", "")))
        except ValueError as exc:
            raise ConfigError("amplitudes", f"{item!r} is not a complex number") from exc
    return amplitudes


def _first_error(exc: ValidationError) -> ConfigError:
    error = exc.errors()[0]
    location = [str(part) for part in error["loc"] if part != "parameters"]
    field = ".".join(location) or "scenario"
    return ConfigError(field, error["msg"])


def build_scenario(data: dict) -> ScenarioConfig:
    """Validate a mapping of scenario keys; parameter names may sit at the top level."""
    top = {key: value for key, value in data.items() if key in _TOP_LEVEL_KEYS}
    parameters = {key: value for key, value in data.items() if key not in _TOP_LEVEL_KEYS}
    unknown = sorted(set(parameters) - set(ScenarioParameters.model_fields))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    try:
        return ScenarioConfig.model_validate({**top, "parameters": parameters})
    except ValidationError as exc:
        raise _first_error(exc) from exc


def parse_scenario_text(text: str) -> ScenarioConfig:
    parser = configparser.ConfigParser(
        comment_prefixes=("#",), inline_comment_prefixes=("#",), interpolation=None
    )
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"[{SECTION}]", "section header missing") from exc
    except configparser.Error as exc:
        raise ConfigError("scenario", f"malformed file: {exc.message}") from exc
    if not parser.has_section(SECTION):
        raise ConfigError(f"[{SECTION}]", "section header missing")

    data: dict = {}
    for key, value in parser.items(SECTION):
        if key == "outputs":
            data[key] = _split(value)
        elif key == "amplitudes":
            data[key] = _parse_amplitudes(value)
        else:
            data[key] = value.strip()
    return build_scenario(data)


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read file: {exc.strerror}") from exc
    config = parse_scenario_text(text)
    if config.name == "scenario":
        config = config.model_copy(update={"name": path.stem})
    return config
