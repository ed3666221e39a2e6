"""Monte Carlo execution of branching population dynamics.

Runs are generation-synchronous: the strategy fixes an action per entity,
then one rule is sampled independently per entity.  Entities of one type
under one action are exchangeable, so sampling uses multinomial draws per
(type, action) in canonical order (type index ascending); the queen of a
queen-worker strategy is the single entity handled individually.  Each run
owns a counter-based generator keyed by (seed, run index), so outcomes are
reproducible and independent across runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import sqrt
from typing import Mapping

import numpy as np

from .errors import PpsolveError, PreconditionError
from .bmdp import RANDOM, Bssg, Population
from .system import _frac

REACHED = "reached"
EXTINCT = "extinct"
CENSORED = "censored"


@dataclass(frozen=True)
class RunConfig:
    seed: int
    runs: int = 1
    max_generations: int = 1_000
    max_population: int = 100_000

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.runs <= 0:
            raise ValueError("runs must be positive")
        if self.max_generations <= 0 or self.max_population <= 0:
            raise ValueError("caps must be positive")


@dataclass(frozen=True)
class RunOutcome:
    verdict: str
    generations_used: int
    peak_population: int


def _norm_choices(choices: Mapping[int, object]) -> dict[int, object]:
    out: dict[int, object] = {}
    for t, c in dict(choices).items():
        if isinstance(c, int):
            out[int(t)] = c
            continue
        dist = [(int(a), _frac(w)) for a, w in c if _frac(w) != 0]
        if sum(w for _, w in dist) != 1:
            raise ValueError(f"action weights for type {t} must sum to 1")
        out[int(t)] = tuple(dist) if len(dist) > 1 else dist[0][0]
    return out


@dataclass(frozen=True)
class StaticStrategy:
    """Per-type action choice (deterministic or randomized), fixed forever."""

    choices: Mapping[int, object]

    def __post_init__(self):
        object.__setattr__(self, "choices", _norm_choices(self.choices))


@dataclass(frozen=True)
class ThresholdStrategy:
    """Use `before` until the population size at the start of a generation
    first reaches the threshold; use `after` from then on."""

    before: Mapping[int, object]
    after: Mapping[int, object]
    threshold: int

    def __post_init__(self):
        if self.threshold < 1:
            raise ValueError("threshold must be at least 1")
        object.__setattr__(self, "before", _norm_choices(self.before))
        object.__setattr__(self, "after", _norm_choices(self.after))


@dataclass(frozen=True)
class QueenWorkerStrategy:
    """One queen follows the queen choices and stays inside the designated
    type set; everyone else follows the worker choices."""

    queen: Mapping[int, object]
    worker: Mapping[int, object]
    queen_types: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "queen", _norm_choices(self.queen))
        object.__setattr__(self, "worker", _norm_choices(self.worker))
        object.__setattr__(self, "queen_types", frozenset(self.queen_types))


ModelStrategy = StaticStrategy | ThresholdStrategy | QueenWorkerStrategy


class _Compiled:
    """Per-(type, action) rule tables with float probabilities."""

    def __init__(self, model: Bssg):
        self.model = model
        self.table: dict[tuple[int, int], tuple[np.ndarray, list]] = {}
        for t in range(model.n_types):
            if t in model.targets:
                continue
            for a, rules in enumerate(model.rules[t]):
                probs = np.array([float(r.probability) for r in rules])
                probs = probs / probs.sum()
                info = [
                    (
                        any(o in model.targets for o in r.offspring),
                        r.offspring,
                    )
                    for r in rules
                ]
                self.table[(t, a)] = (probs, info)

    def action_index(self, t: int, choice: object, rng) -> int:
        if isinstance(choice, int):
            return choice
        weights = np.array([float(w) for _, w in choice])
        pick = rng.choice(len(choice), p=weights / weights.sum())
        return choice[pick][0]


def _require_choice(choices: Mapping[int, object], t: int, model: Bssg) -> object:
    if model.owners[t] == RANDOM or len(model.actions[t]) == 1:
        return 0
    if t not in choices:
        raise PreconditionError(
            f"strategy covers no action for controlled type "
            f"{model.type_names[t]!r}"
        )
    return choices[t]


def simulate_run(
    model: Bssg,
    strategy: ModelStrategy,
    mu: Population,
    config: RunConfig,
    rng: np.random.Generator,
) -> RunOutcome:
    """One trajectory; see the module docstring for the sampling order.

    A population already containing the target counts as reached in
    generation 0.
    """
    compiled = _Compiled(model)
    counts: dict[int, int] = {}
    for t, c in mu.counts:
        if t in model.targets and c > 0:
            return RunOutcome(REACHED, 0, mu.total)
        counts[t] = counts.get(t, 0) + c
    peak = mu.total
    switched = False
    queen_type: int | None = None
    if isinstance(strategy, QueenWorkerStrategy):
        candidates = [t for t in sorted(counts) if t in strategy.queen_types]
        if not candidates:
            raise PreconditionError(
                "queen-worker strategy needs an initial member inside the "
                "almost-sure reach set"
            )
        queen_type = candidates[0]

    for gen in range(1, config.max_generations + 1):
        total = sum(counts.values())
        if total == 0:
            return RunOutcome(EXTINCT, gen - 1, peak)
        if isinstance(strategy, ThresholdStrategy) and not switched:
            switched = total >= strategy.threshold
        if isinstance(strategy, StaticStrategy):
            worker_choices = strategy.choices
        elif isinstance(strategy, ThresholdStrategy):
            worker_choices = strategy.after if switched else strategy.before
        else:
            worker_choices = strategy.worker

        reached = False
        offspring: dict[int, int] = {}
        next_queen: int | None = None

        if queen_type is not None:
            probs, info = compiled.table[(
                queen_type,
                compiled.action_index(
                    queen_type,
                    _require_choice(strategy.queen, queen_type, model),
                    rng,
                ),
            )]
            rule = int(rng.choice(len(probs), p=probs))
            makes_target, kids = info[rule]
            if makes_target:
                reached = True
            else:
                for o in kids:
                    if next_queen is None and o in strategy.queen_types:
                        next_queen = o
                    else:
                        offspring[o] = offspring.get(o, 0) + 1
                if next_queen is None:
                    raise PpsolveError(
                        "queen lineage broke: no successor inside the "
                        "almost-sure reach set"
                    )
            counts = dict(counts)
            counts[queen_type] -= 1
            if counts[queen_type] == 0:
                del counts[queen_type]

        for t in sorted(counts):
            m = counts[t]
            choice = _require_choice(worker_choices, t, model)
            if isinstance(choice, int):
                per_action = {choice: m}
            else:
                weights = np.array([float(w) for _, w in choice])
                draws = rng.multinomial(m, weights / weights.sum())
                per_action = {a: int(k) for (a, _), k in zip(choice, draws) if k}
            for a, k in per_action.items():
                probs, info = compiled.table[(t, a)]
                rule_counts = rng.multinomial(k, probs)
                for (makes_target, kids), c in zip(info, rule_counts):
                    if not c:
                        continue
                    if makes_target:
                        reached = True
                    else:
                        for o in kids:
                            offspring[o] = offspring.get(o, 0) + c

        if reached:
            return RunOutcome(REACHED, gen, peak)
        queen_type = next_queen
        counts = {t: c for t, c in offspring.items() if c}
        if queen_type is not None:
            counts[queen_type] = counts.get(queen_type, 0) + 1
        total = sum(counts.values())
        peak = max(peak, total)
        if total > config.max_population:
            return RunOutcome(CENSORED, gen, peak)
    if sum(counts.values()) == 0:
        return RunOutcome(EXTINCT, config.max_generations, peak)
    return RunOutcome(CENSORED, config.max_generations, peak)


def rng_for_run(seed: int, run_index: int) -> np.random.Generator:
    """Philox stream keyed by (seed, run index); frozen per release so
    identical inputs replay identical outcomes."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, run_index])))


@dataclass
class ReachEstimate:
    p_hat: float
    wilson_low: float
    wilson_high: float
    censor_fraction: float
    bracket: tuple[float, float]   # [reached share, reached + censored share]
    counts: dict[str, int]
    outcomes: list[RunOutcome]


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = successes / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def estimate_reach(
    model: Bssg,
    strategy: ModelStrategy,
    mu: Population,
    config: RunConfig,
) -> ReachEstimate:
    """Independent runs on per-run streams; Wilson 95% interval on the
    reached share, with censored runs reported separately (the true
    probability lies inside the reported bracket)."""
    outcomes = []
    tally = {REACHED: 0, EXTINCT: 0, CENSORED: 0}
    for k in range(config.runs):
        out = simulate_run(model, strategy, mu, config, rng_for_run(config.seed, k))
        outcomes.append(out)
        tally[out.verdict] += 1
    p_hat = tally[REACHED] / config.runs
    censor = tally[CENSORED] / config.runs
    low, high = wilson_interval(tally[REACHED], config.runs)
    return ReachEstimate(
        p_hat, low, high, censor, (p_hat, min(1.0, p_hat + censor)),
        dict(tally), outcomes
    )


def outcome_rows(outcomes) -> list[tuple[int, str, int, int]]:
    """CSV-ready rows: run, verdict, generations, peak."""
    return [
        (i, o.verdict, o.generations_used, o.peak_population)
        for i, o in enumerate(outcomes)
    ]
