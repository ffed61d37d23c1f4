"""Shared fixtures: the demo network is built once per session."""

from __future__ import annotations

import pytest

from nomonet.demo import demo_corpus
from nomonet.embedding import ProviderConfig
from nomonet.pipeline import build_network, write_network


@pytest.fixture(scope="session")
def provider():
    return ProviderConfig(kind="deterministic-test")


@pytest.fixture(scope="session")
def demo_artifacts(provider):
    return build_network(demo_corpus(), provider, components=3)


@pytest.fixture(scope="session")
def demo_network_dir(tmp_path_factory, demo_artifacts):
    directory = tmp_path_factory.mktemp("networks") / "demo"
    write_network(demo_artifacts, directory)
    return directory
