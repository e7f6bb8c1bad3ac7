import numpy as np
import pytest

from iswpt import designs, scenario


@pytest.fixture(scope="session")
def small_config():
    # coarse grid keeps solves fast; N=4 is enough to exercise every path
    return scenario.ScenarioConfig(antennas=4, users=2, grid_step=5.0, seed=3)


@pytest.fixture(scope="session")
def small_scenario(small_config):
    return scenario.build_scenario(small_config)


@pytest.fixture(scope="session")
def small_targets(small_scenario):
    return designs.wpt_power_targets(small_scenario).targets


def make_scenario(channels, config=None, **config_kwargs):
    """Scenario with hand-picked channel rows (for worked examples)."""
    channels = np.atleast_2d(np.asarray(channels, dtype=complex))
    m, n = channels.shape
    if config is None:
        config_kwargs.setdefault("antennas", n)
        config_kwargs.setdefault("users", m)
        config_kwargs.setdefault("grid_step", 5.0)
        config = scenario.ScenarioConfig(**config_kwargs)
    built = scenario.build_scenario(config)
    return scenario.Scenario(
        config=config,
        channels=channels,
        steering=built.steering,
        desired=built.desired,
        grid=built.grid,
    )
