import random
import socket

import pytest

from kudp import PortKey

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES: list[str] = []


def _bindable(base: int, k: int) -> bool:
    socks = []
    try:
        for port in range(base, base + k):
            s = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            socks.append(s)
            s.bind(("127.0.0.1", port))
        return True
    except OSError:
        return False
    finally:
        for s in socks:
            s.close()


def find_free_key(k: int) -> PortKey:
    rng = random.Random()
    for _ in range(200):
        base = rng.randrange(20000, 60000 - k)
        if _bindable(base, k):
            return PortKey(base, k)
    raise RuntimeError(f"no {k} consecutive free UDP ports found")


@pytest.fixture
def free_key():
    return find_free_key


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
