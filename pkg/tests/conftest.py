import contextlib

import pytest

from smartcloud.apps.classifier import load_classifier_config
from smartcloud.gateway.cli import default_fixture_manifest
from smartcloud.gateway.runner import ServerHandle
from smartcloud.gateway.state import GatewayState
from smartcloud.simnet.scenario import default_fixtures_dir


def make_state(**kwargs) -> GatewayState:
    manifest = default_fixture_manifest()
    kwargs.setdefault(
        "classifier_config", load_classifier_config(manifest) if manifest else None
    )
    return GatewayState(**kwargs)


@contextlib.contextmanager
def fresh_gateway(**kwargs):
    """A gateway on an ephemeral port with clean counters."""
    with ServerHandle(make_state(**kwargs)) as handle:
        yield handle


@pytest.fixture(scope="session")
def gateway():
    """Shared gateway for read-mostly integration tests; use unique robot ids."""
    with ServerHandle(make_state()) as handle:
        yield handle


@pytest.fixture(scope="session")
def fixtures_dir():
    return default_fixtures_dir()
