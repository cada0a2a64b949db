from __future__ import annotations

import os
from dataclasses import dataclass

import pytest
from hypothesis import HealthCheck, settings

from ethracer import corpus
from ethracer.events import EventSet, Scenario, generate_events
from ethracer.hb import HBRelation, extract_whb
from ethracer.lang import ContractDef
from ethracer.state import WorldState
from ethracer.vm import VM

settings.register_profile("ci", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


@dataclass
class Setup:
    contract: ContractDef
    scenario: Scenario
    s0: WorldState
    events: EventSet
    vm: VM
    hb: HBRelation

    @property
    def names(self) -> dict[int, str]:
        return self.scenario.names


def build(name: str) -> Setup:
    contract, scenario = corpus.load(name)
    s0 = scenario.initial_world(contract)
    events = generate_events(contract, scenario, s0)
    vm = VM(contract)
    return Setup(contract, scenario, s0, events, vm, extract_whb(vm, s0, events))


@pytest.fixture(scope="session")
def setup():
    cache: dict[str, Setup] = {}

    def get(name: str) -> Setup:
        if name not in cache:
            cache[name] = build(name)
        return cache[name]

    return get


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
