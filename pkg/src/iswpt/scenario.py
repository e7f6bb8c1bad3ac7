"""Reproducible problem instances: channels, steering, grids, desired patterns.

Randomness convention (pinned so golden files stay stable): uniforms come
from ``numpy.random.Generator`` over a ``PCG64`` bit generator seeded through
``SeedSequence((seed, stream))``, and Gaussians are produced from those
uniforms by an explicit Box-Muller transform in this module. Nothing here
depends on numpy's own normal-distribution implementation, whose stream is
not guaranteed stable across versions.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np

# substream tags under the user-facing seed
CHANNEL_STREAM = 0
RANDOMIZATION_STREAM = 1


class ConfigError(ValueError):
    """Invalid scenario configuration (bad JSON, unknown key, broken invariant)."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Scenario parameters; defaults mirror the desk-scale experiment setup."""

    antennas: int = 10
    users: int = 3
    total_power: float = 1.0          # W
    efficiency: float = 0.5           # energy conversion, in (0, 1)
    attenuation: float = 30.0         # channel attenuation, dB (power)
    element_spacing: float = 0.5      # wavelengths
    grid_start: float = -90.0         # degrees
    grid_stop: float = 90.0
    grid_step: float = 0.1
    mainlobe_centers: tuple = (-40.0, 0.0, 40.0)
    mainlobe_halfwidth: float = 5.0
    seed: int = 7

    def __post_init__(self):
        if not (self.antennas >= self.users >= 1):
            raise ConfigError(
                f"need antennas >= users >= 1, got antennas={self.antennas}, users={self.users}"
            )
        if not (0.0 < self.efficiency < 1.0):
            raise ConfigError(f"efficiency must lie in (0, 1), got {self.efficiency}")
        if not self.total_power > 0:
            raise ConfigError(f"total_power must be positive, got {self.total_power}")
        if not self.grid_step > 0:
            raise ConfigError(f"grid_step must be positive, got {self.grid_step}")
        if not self.grid_start < self.grid_stop:
            raise ConfigError(
                f"grid_start must be below grid_stop, got [{self.grid_start}, {self.grid_stop}]"
            )
        if not self.mainlobe_halfwidth > 0:
            raise ConfigError(f"mainlobe_halfwidth must be positive, got {self.mainlobe_halfwidth}")
        object.__setattr__(self, "mainlobe_centers", tuple(float(c) for c in self.mainlobe_centers))


_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
_INT_FIELDS = {"antennas", "users", "seed"}


def config_from_dict(doc):
    """Build a :class:`ScenarioConfig` from a decoded JSON document.

    Keys must come from the config field set (unknown keys are rejected);
    missing keys fall back to the defaults.
    """
    if not isinstance(doc, dict):
        raise ConfigError(f"config document must be a JSON object, got {type(doc).__name__}")
    unknown = set(doc) - set(_CONFIG_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in doc.items():
        if key == "mainlobe_centers":
            if not isinstance(value, (list, tuple)) or any(
                isinstance(v, bool) or not isinstance(v, (int, float)) for v in value
            ):
                raise ConfigError("mainlobe_centers must be a list of numbers")
            kwargs[key] = tuple(float(v) for v in value)
        elif key in _INT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{key} must be an integer, got {value!r}")
            kwargs[key] = value
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{key} must be a number, got {value!r}")
            kwargs[key] = float(value)
    return ScenarioConfig(**kwargs)


def load_config(path):
    """Load a :class:`ScenarioConfig` from a JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return config_from_dict(doc)


@dataclass
class Scenario:
    """Immutable problem instance assembled from a config."""

    config: ScenarioConfig
    channels: np.ndarray   # (M, N) complex, rows are per-user channels
    steering: np.ndarray   # (N, L) complex, columns are steering vectors
    desired: np.ndarray    # (L,) desired pattern, entries in {0, 1}
    grid: np.ndarray       # (L,) angles in degrees


def uniform_generator(seed, stream=CHANNEL_STREAM):
    """PCG64 generator for the given (seed, stream) pair."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((int(seed), int(stream)))))


def standard_complex_gaussian(rng, shape):
    """CN(0, 1) samples via Box-Muller on the generator's uniform stream.

    Each entry consumes exactly two uniforms: radius from ``u1``, phase from
    ``u2``; real and imaginary parts are the Box-Muller cosine/sine pair
    scaled by 1/sqrt(2) so that E|z|^2 = 1.
    """
    u1 = rng.random(shape)
    u2 = rng.random(shape)
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    return radius * np.exp(2j * np.pi * u2) / math.sqrt(2.0)


def steering_vector(theta_deg, n_antennas, spacing):
    """Uniform-linear-array steering vector a(theta).

    Entry n is ``exp(j 2 pi spacing n sin(theta))`` for n = 0..N-1, with
    theta in degrees and spacing in wavelengths.
    """
    if n_antennas < 1:
        raise ValueError(f"need at least one antenna, got {n_antennas}")
    phase = 2.0 * np.pi * spacing * np.sin(np.deg2rad(theta_deg))
    return np.exp(1j * phase * np.arange(n_antennas))


def steering_matrix(grid_deg, n_antennas, spacing):
    """Stack steering vectors for all grid angles into an (N, L) matrix."""
    phases = 2.0 * np.pi * spacing * np.sin(np.deg2rad(np.asarray(grid_deg, dtype=float)))
    return np.exp(1j * np.outer(np.arange(n_antennas), phases))


def desired_pattern(grid_deg, centers, halfwidth):
    """Indicator pattern: 1 within ``halfwidth`` degrees of any center, else 0."""
    if not halfwidth > 0:
        raise ValueError(f"halfwidth must be positive, got {halfwidth}")
    grid = np.asarray(grid_deg, dtype=float)
    d = np.zeros(grid.shape)
    for c in centers:
        d[np.abs(grid - c) <= halfwidth] = 1.0
    return d


def generate_channels(config):
    """Draw the (M, N) channel matrix for a config, deterministically in the seed.

    Entries are ``10**(-attenuation/20) * CN(0, 1)`` so the attenuation acts
    on power: at 30 dB the mean squared magnitude is 1e-3.
    """
    rng = uniform_generator(config.seed, CHANNEL_STREAM)
    amplitude = 10.0 ** (-config.attenuation / 20.0)
    return amplitude * standard_complex_gaussian(rng, (config.users, config.antennas))


def grid_angles(config):
    """Angle grid in degrees: start + k*step for k = 0..L-1."""
    span = config.grid_stop - config.grid_start
    count = int(math.floor(span / config.grid_step + 1e-9)) + 1
    return config.grid_start + config.grid_step * np.arange(count)


def build_scenario(config):
    """Assemble grid, steering matrix, desired pattern, and channels."""
    grid = grid_angles(config)
    return Scenario(
        config=config,
        channels=generate_channels(config),
        steering=steering_matrix(grid, config.antennas, config.element_spacing),
        desired=desired_pattern(grid, config.mainlobe_centers, config.mainlobe_halfwidth),
        grid=grid,
    )
