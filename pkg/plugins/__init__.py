"""Scenario plugins. Each module registers its scenarios with the `scenario` decorator;
`load_plugins` imports every module under the plugin root."""

from dataclasses import dataclass
from importlib import import_module
from logging import getLogger
from pkgutil import iter_modules
from typing import Callable

import state

LOGGER = getLogger(__name__)

PLUGIN_ROOT = "plugins"


@dataclass(frozen=True)
class ScenarioEntry:
    name: str
    description: str
    run: Callable


def scenario(name: str, description: str):
    def decorator(func):
        state.scenario_registry[name] = ScenarioEntry(name, description, func)
        return func

    return decorator


def load_plugins(root: str = PLUGIN_ROOT):
    package = import_module(root)
    for module in iter_modules(package.__path__):
        import_module(f"{root}.{module.name}")
    LOGGER.debug(f"Loaded {len(state.scenario_registry)} scenarios from {root}")
    return state.scenario_registry
