import pathlib

import numpy as np
import pytest

from sticky_pep.systems import random_state
from sticky_pep.perfect import synthesize_perfect
from sticky_pep.core import ParticleState

FIXTURES = pathlib.Path(__file__).parent / "fixtures"

# criterion number -> list of (label, passed, detail)
_ACCEPTANCE: dict[int, list] = {}


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def acceptance():
    def record(criterion: int, label: str, passed: bool, detail: str = ""):
        _ACCEPTANCE.setdefault(criterion, []).append((label, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        parts = _ACCEPTANCE[k]
        ok = all(p for _, p, _ in parts)
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}")
        for label, passed, detail in parts:
            mark = "ok " if passed else "BAD"
            terminalreporter.write_line(f"    [{mark}] {label}: {detail}")


def audit_corpus(seed=3, count=500):
    """Random systems with up to 8 particles, mixed frames and speeds."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(1, 9))
        out.append(random_state(rng, n, zero_frame=bool(k % 2), vel_scale=(0.3, 1.0, 3.0)[k % 3]))
    return out


def perfect_corpus(seed=11, count=100):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(1, 9))
        s = random_state(rng, n, zero_frame=True, min_gap=1e-2)
        out.append(ParticleState(s.masses, s.positions, synthesize_perfect(s.masses, s.positions)))
    return out


def criteria_corpus(seed=7, count=200):
    """Zero-frame, unit-mass systems: perfect velocities plus noise of
    varying size, so that both outcomes are well represented."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(2, 9))
        s = random_state(rng, n, zero_frame=True, min_gap=1e-2)
        ms = np.asarray(s.masses)
        vs = np.asarray(synthesize_perfect(s.masses, s.positions))
        noise = rng.normal(0.0, (0.0, 0.01, 0.1, 0.3, 1.0)[k % 5], n)
        noise -= ms @ noise
        out.append(ParticleState(s.masses, s.positions, tuple((vs + noise).tolist())))
    return out
