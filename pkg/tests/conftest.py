import json

import pytest

from src.config.index import appConfig
from src.synthgen.index import generate, write_scenario
from src.synthgen.presets import decoupled_scenario, floater_scenario, planted_scenario

from tests.factories import AUDIT_CHAT


@pytest.fixture
def app_config():
    """appConfig with every change undone after the test."""
    saved = dict(appConfig)
    yield appConfig
    appConfig.clear()
    appConfig.update(saved)


@pytest.fixture(scope="session")
def floater():
    return generate(floater_scenario())


@pytest.fixture(scope="session")
def decoupled():
    return generate(decoupled_scenario())


@pytest.fixture(scope="session")
def planted():
    return generate(planted_scenario())


def _services_file(directory, service_map) -> str:
    path = directory / "services.json"
    path.write_text(json.dumps({prefix: name for prefix, name in service_map.entries}), encoding="utf-8")
    return str(path)


@pytest.fixture
def floater_exports(tmp_path, floater):
    log, _ = floater
    commits, issues = write_scenario(log, str(tmp_path / "data"))
    return {"commits": commits, "issues": issues, "services": _services_file(tmp_path, AUDIT_CHAT)}


@pytest.fixture
def planted_exports(tmp_path, planted):
    log, _ = planted
    commits, issues = write_scenario(log, str(tmp_path / "data"))
    return {"commits": commits, "issues": issues, "services": _services_file(tmp_path, AUDIT_CHAT)}
