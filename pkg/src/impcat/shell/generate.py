"""Seeded random models between autonomous systems."""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..errors import InvariantViolation, SpecError
from ..finsys import FinSet, System, SystemMap, autonomous_system, check_model, make_map


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    model_states: int = 2
    max_fibre: int = 2
    input_size: int = 1

    def __post_init__(self):
        if self.model_states < 1:
            raise SpecError("model_states must be at least 1")
        if self.max_fibre < 1:
            raise SpecError("max_fibre must be at least 1")
        if self.input_size != 1:
            raise SpecError("only autonomous generation is supported (input_size = 1)")
        if not 0 <= self.seed < 2 ** 64:
            raise SpecError("seed must be a 64-bit unsigned integer")


def generate_model_instance(cfg: GenConfig) -> tuple[System, System, SystemMap]:
    """Draw M's dynamics, fibre sizes, then X's dynamics fibre-compatibly.

    Each x in the fibre over m steps to a uniformly chosen state in the
    fibre over upd_M(m), so mu_s commutes with the dynamics by construction.
    """
    rng = random.Random(cfg.seed)
    K = cfg.model_states
    m_names = [f"m{k}" for k in range(K)]
    upd_m = {m: m_names[rng.randrange(K)] for m in m_names}
    fibres: dict[str, list[str]] = {}
    x_names: list[str] = []
    for m in m_names:
        size = rng.randint(1, cfg.max_fibre)
        fibres[m] = [f"x{len(x_names) + k}" for k in range(size)]
        x_names += fibres[m]
    mu_s = {x: m for m, xs in fibres.items() for x in xs}
    upd_x = {x: rng.choice(fibres[upd_m[mu_s[x]]]) for x in x_names}

    M = autonomous_system(FinSet("M", m_names), upd_m, "M")
    X = autonomous_system(FinSet("X", x_names), upd_x, "X")
    mu = make_map(X, M, mu_s, name="mu")
    if not check_model(mu):
        raise InvariantViolation(f"generated instance for seed {cfg.seed} is not a model")
    return X, M, mu
