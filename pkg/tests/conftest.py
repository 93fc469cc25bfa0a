import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sopforge.gateway import CostLedger, Gateway, Playbook, PlaybookEntry  # noqa: E402
from sopforge.sandbox import ExecLimits, Sandbox  # noqa: E402


@pytest.fixture
def sandbox():
    return Sandbox(limits=ExecLimits(timeout=20.0))


def make_gateway(entries, price_per_1k=None):
    """Gateway over a scripted playbook; entries are (role, action, response)
    triples or bare response strings (wildcard match)."""
    normalized = []
    for entry in entries:
        if isinstance(entry, str):
            normalized.append(PlaybookEntry(response=entry))
        else:
            role, action, response = entry
            normalized.append(PlaybookEntry(role=role, action=action, response=response))
    return Gateway(provider=Playbook(normalized), ledger=CostLedger(price_per_1k=price_per_1k))


@pytest.fixture
def gateway_factory():
    return make_gateway
