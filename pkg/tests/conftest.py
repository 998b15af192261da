"""Shared scenario builders and session-cached runs."""

from __future__ import annotations

import random

import pytest

from prisim.engine import Engine, Scenario


def diag_scenario(stages: int = 200) -> Scenario:
    """P_0 at the root against an honest functional; no R firing."""
    return Scenario(stages=stages, assignment={0: ("P", 0)},
                    phi_honest={0: 0})


def gen_meet_scenario(stages: int = 50) -> Scenario:
    """R_0 at the root; W_0 enumerates all length-8 strings at stage 10."""
    ce = [(0, 10, format(i, "08b")) for i in range(256)]
    return Scenario(stages=stages, assignment={0: ("R", 0)}, ce=ce)


def gen_avoid_scenario(stages: int = 50) -> Scenario:
    """R_0 at the root; W_0 stays empty, so R_0 parks at Wait(1)."""
    return Scenario(stages=stages, assignment={0: ("R", 0)})


def interact_scenario(stages: int = 300) -> Scenario:
    """S above R above P: the copier feeds S, P diagonalizes and challenges,
    R fires into a string set that appears only afterwards."""
    ce = [(0, 100, "0" * k) for k in range(1, 61)]
    return Scenario(
        stages=stages,
        assignment={0: ("S", 0), 1: ("R", 0), 2: ("P", 0)},
        ce=ce,
        phi_honest={0: 2},
        copiers={0: 0},
    )


def random_scenario(seed: int, stages: int = 150) -> Scenario:
    """Seeded scenario mixing the three strategy kinds and adversaries."""
    rng = random.Random(seed)
    sc = Scenario(stages=stages)
    # default round-robin assignment with occasional overrides
    for level in range(3):
        if rng.random() < 0.4:
            sc.assignment[level] = (rng.choice(["R", "P", "S"]),
                                    rng.randrange(2))
    for j in range(rng.randrange(3)):
        appear = rng.randrange(5, stages)
        for k in range(1, rng.randrange(2, 30)):
            sc.ce.append((j, appear, "0" * k))
        if rng.random() < 0.5:
            bits = "".join(rng.choice("01")
                           for _ in range(rng.randrange(1, 12)))
            sc.ce.append((j, rng.randrange(stages), bits))
    for e in range(rng.randrange(2)):
        sc.phi_honest[e] = rng.randrange(3)
    if rng.random() < 0.25:
        sc.copiers[0] = rng.randrange(2)
    return sc


def run(scenario: Scenario) -> tuple[Engine, list[dict]]:
    engine = Engine(scenario)
    engine.run()
    return engine, engine.trace


@pytest.fixture(scope="session")
def diag_run():
    return run(diag_scenario())


@pytest.fixture(scope="session")
def gen_meet_run():
    return run(gen_meet_scenario())


@pytest.fixture(scope="session")
def gen_avoid_run():
    return run(gen_avoid_scenario())


@pytest.fixture(scope="session")
def interact_run():
    return run(interact_scenario())
