"""Branching game model layer: typed populations with controlled and
random types, reduction to equation systems for reachability objectives,
value assembly, and translation of equation-level policies to per-type
action choices.

Owners are named from the reachability point of view: a "max" type is
controlled by the player maximizing the probability of reaching the
target, which is the *minimizing* player of the non-reachability
equations (and vice versa), so reach-max types produce min equations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import PreconditionError, ValidationError
from .gnm import SolveOptions, SolveReport, solve_gfp
from .policies import (
    QueenWorker,
    StaticDeterministic,
    StaticRandomized,
    StrategyDescriptor,
    ThresholdSwitch,
    almost_sure_reach_strategy,
    eps_optimal_policy_maxpps_gfp,
    eps_optimal_randomized_minpps,
    nonstatic_threshold_strategy,
    optimal_max_policy_gfp,
)
from .qualitative import gfp_one_set, gfp_zero_set, remove_one_vars
from .snf import SnfSystem, policy_to_original, to_snf
from .system import (
    MAXOF,
    MAX_PLAYER,
    MINOF,
    MIN_PLAYER,
    SINGLE,
    Equation,
    MaxMinPps,
    Monomial,
    Policy,
    ProbPolynomial,
    ValueVector,
    _frac,
)

REACH_MAX = "max"     # controls to maximize reaching the target
REACH_MIN = "min"     # controls to avoid the target
RANDOM = "random"


@dataclass(frozen=True)
class Rule:
    probability: Fraction
    offspring: tuple[int, ...]  # type indices, order preserved (birth order)

    def __post_init__(self):
        object.__setattr__(self, "probability", _frac(self.probability))
        object.__setattr__(self, "offspring", tuple(int(t) for t in self.offspring))


@dataclass(frozen=True)
class Bssg:
    type_names: tuple[str, ...]
    owners: tuple[str, ...]
    actions: tuple[tuple[str, ...], ...]          # action names per type
    rules: tuple[tuple[tuple[Rule, ...], ...], ...]  # rules[type][action]
    targets: frozenset[int]

    def __post_init__(self):
        n = len(self.type_names)
        if len(set(self.type_names)) != n:
            raise ValueError("duplicate type names")
        if len(self.owners) != n or len(self.actions) != n or len(self.rules) != n:
            raise ValueError("per-type fields must align")
        if any(o not in (REACH_MAX, REACH_MIN, RANDOM) for o in self.owners):
            raise ValueError("unknown owner")
        for t in range(n):
            if len(self.rules[t]) != len(self.actions[t]):
                raise ValueError(f"type {t}: one rule list per action")
            for rules in self.rules[t]:
                for r in rules:
                    if any(not 0 <= o < n for o in r.offspring):
                        raise ValueError("offspring type out of range")
        object.__setattr__(self, "targets", frozenset(self.targets))

    @property
    def n_types(self) -> int:
        return len(self.type_names)

    def index_of(self, name: str) -> int:
        return self.type_names.index(name)

    @property
    def controlled_owners(self) -> set[str]:
        return {
            self.owners[t]
            for t in range(self.n_types)
            if self.owners[t] != RANDOM and t not in self.targets
        }

    @property
    def is_bmdp(self) -> bool:
        return len(self.controlled_owners) <= 1

    @property
    def is_bp(self) -> bool:
        return not self.controlled_owners


@dataclass(frozen=True)
class Population:
    counts: tuple[tuple[int, int], ...]

    def __post_init__(self):
        items = dict(self.counts) if not isinstance(self.counts, Mapping) else dict(self.counts)
        if any(c < 0 for c in items.values()):
            raise ValueError("population counts must be non-negative")
        object.__setattr__(
            self, "counts", tuple(sorted((t, c) for t, c in items.items() if c))
        )

    @staticmethod
    def of(mapping: Mapping[int, int]) -> "Population":
        return Population(tuple(mapping.items()))

    @property
    def total(self) -> int:
        return sum(c for _, c in self.counts)

    def as_dict(self) -> dict[int, int]:
        return dict(self.counts)


@dataclass(frozen=True)
class ModelViolation:
    type_index: int | None
    action: str | None
    message: str

    def __str__(self) -> str:
        where = ""
        if self.type_index is not None:
            where = f" at type {self.type_index}"
            if self.action is not None:
                where += f", action {self.action!r}"
        return self.message + where


def validate_bssg(model: Bssg) -> list[ModelViolation]:
    """Exact checks: per-action rule probabilities sum to 1, the target
    exists, random types have exactly one action.  Target types are exempt
    from the action requirements (their evolution is never taken)."""
    out = []
    if not model.targets:
        out.append(ModelViolation(None, None, "missing target type"))
    for t in range(model.n_types):
        if t in model.targets:
            continue
        if not model.actions[t]:
            out.append(ModelViolation(t, None, "type has no actions"))
        if model.owners[t] == RANDOM and len(model.actions[t]) != 1:
            out.append(
                ModelViolation(t, None,
                               f"random type has {len(model.actions[t])} actions")
            )
        for a, rules in enumerate(model.rules[t]):
            total = sum((r.probability for r in rules), Fraction(0))
            if total != 1:
                out.append(
                    ModelViolation(t, model.actions[t][a],
                                   f"rule probabilities sum to {total}")
                )
            if any(r.probability <= 0 for r in rules):
                out.append(
                    ModelViolation(t, model.actions[t][a],
                                   "rule probabilities must be positive")
                )
    return out


@dataclass(frozen=True)
class VarMap:
    """Variable <-> type correspondence for a reduction (targets have no
    variable)."""

    type_of_var: tuple[int, ...]
    var_of_type: tuple[int | None, ...]

    def var(self, type_index: int) -> int:
        v = self.var_of_type[type_index]
        if v is None:
            raise KeyError(f"type {type_index} is a target; it has no variable")
        return v


def to_nonreach_pps(model: Bssg) -> tuple[MaxMinPps, VarMap]:
    """Bellman equations whose GFP is the non-reachability value vector.

    One variable per non-target type.  Each action contributes the
    polynomial over the rules that do not generate the target; rules that
    do are dropped entirely (their mass feeds reaching).  Reach-max types
    take the min over their actions, reach-min types the max, random types
    are single.
    """
    violations = validate_bssg(model)
    if violations:
        raise ValidationError(violations)
    var_of_type: list[int | None] = [None] * model.n_types
    type_of_var: list[int] = []
    for t in range(model.n_types):
        if t not in model.targets:
            var_of_type[t] = len(type_of_var)
            type_of_var.append(t)
    equations = []
    for t in type_of_var:
        branches = []
        for rules in model.rules[t]:
            monomials = []
            for r in rules:
                if any(o in model.targets for o in r.offspring):
                    continue
                exps: dict[int, int] = {}
                for o in r.offspring:
                    v = var_of_type[o]
                    exps[v] = exps.get(v, 0) + 1
                monomials.append(Monomial(r.probability, tuple(exps.items())))
            branches.append(ProbPolynomial(tuple(monomials)))
        owner = model.owners[t]
        if owner == REACH_MAX and len(branches) > 1:
            equations.append(Equation(MINOF, tuple(branches)))
        elif owner == REACH_MIN and len(branches) > 1:
            equations.append(Equation(MAXOF, tuple(branches)))
        else:
            equations.append(Equation(SINGLE, (branches[0],)))
    names = tuple(model.type_names[t] for t in type_of_var)
    pps = MaxMinPps(tuple(equations), names)
    return pps, VarMap(tuple(type_of_var), tuple(var_of_type))


# ---------------------------------------------------------------------------
# Policy translation to actions


def _policy_action_indices(
    model: Bssg,
    vmap: VarMap,
    snf: SnfSystem,
    policy: Policy,
    forced: Mapping[int, int] | None = None,
) -> dict[int, object]:
    """Equation-level policy -> {type index: action index or distribution}."""
    original = policy_to_original(snf, policy, forced=forced, strict=False)
    out: dict[int, object] = {}
    for var, choice in original.choices:
        out[vmap.type_of_var[var]] = choice
    return out


def policy_to_actions(
    model: Bssg,
    vmap: VarMap,
    snf: SnfSystem,
    policy: Policy,
    forced: Mapping[int, int] | None = None,
) -> dict[str, object]:
    """Equation-level policy -> {type name: action name or distribution}.

    Only types whose equations actually offer a choice appear.  Partial
    policies translate the chains they fully cover.
    """
    out: dict[str, object] = {}
    for t, choice in _policy_action_indices(model, vmap, snf, policy, forced).items():
        names = model.actions[t]
        if isinstance(choice, int):
            out[model.type_names[t]] = names[choice]
        else:
            out[model.type_names[t]] = tuple((names[b], w) for b, w in choice)
    return out


def build_simulation_strategy(
    model: Bssg,
    vmap: VarMap,
    snf: SnfSystem,
    descriptor: StrategyDescriptor,
    opponent: Policy | None = None,
):
    """Turn an equation-level strategy descriptor into a simulator
    strategy over type/action indices.

    `opponent` supplies the other player's static choices for two-player
    models; the merged strategy must cover every controlled type.
    """
    from . import sim  # sim imports this module

    opp = (
        _policy_action_indices(model, vmap, snf, opponent) if opponent else {}
    )

    def merged(policy: Policy) -> dict[int, object]:
        choices = _policy_action_indices(model, vmap, snf, policy)
        choices.update(opp)
        return choices

    if isinstance(descriptor, (StaticDeterministic, StaticRandomized)):
        return sim.StaticStrategy(merged(descriptor.policy))
    if isinstance(descriptor, ThresholdSwitch):
        return sim.ThresholdStrategy(
            merged(descriptor.sigma),
            merged(descriptor.tau),
            descriptor.population_threshold,
        )
    if isinstance(descriptor, QueenWorker):
        queen_types = frozenset(
            vmap.type_of_var[orig]
            for orig, idx in snf.origin
            if idx in descriptor.zero_set
        )
        return sim.QueenWorkerStrategy(
            merged(descriptor.tau_star),
            merged(descriptor.worker),
            queen_types,
        )
    raise TypeError(f"unknown strategy descriptor {descriptor!r}")


# ---------------------------------------------------------------------------
# Reachability analysis


@dataclass
class QualitativeReach:
    classification: dict[str, str]         # type name -> value=0 / value=1 / interior
    one_set_types: frozenset[int]          # reach value 0
    zero_set_types: frozenset[int]         # reach value 1
    reach_zero_witness: dict[str, object]  # actions pinning reach value 0
    reach_positive_witness: dict[str, object]
    queen_worker: QueenWorker | None
    snf: SnfSystem
    varmap: VarMap


def qualitative_reach(model: Bssg) -> QualitativeReach:
    """Per-type classification: reach value 1 (non-reach 0), reach value 0
    (non-reach 1), or strictly inside, with action witnesses."""
    pps, vmap = to_nonreach_pps(model)
    snf = to_snf(pps)
    origin = snf.origin_map
    ones = gfp_one_set(snf)
    prune = remove_one_vars(snf, ones.one_set)
    if prune.system.n:
        zres = gfp_zero_set(prune.system)
        zero_full = frozenset(prune.survivors[i] for i in zres.zero_set)
    else:
        zero_full = frozenset()
    classification: dict[str, str] = {}
    one_types = set()
    zero_types = set()
    for t in range(model.n_types):
        name = model.type_names[t]
        if t in model.targets:
            classification[name] = "value=1"
            continue
        idx = origin[vmap.var(t)]
        if idx in ones.one_set:
            classification[name] = "value=0"
            one_types.add(t)
        elif idx in zero_full:
            classification[name] = "value=1"
            zero_types.add(t)
        else:
            classification[name] = "interior"
    queen = None
    if zero_full:
        queen = almost_sure_reach_strategy(snf)
    reach_zero = policy_to_actions(model, vmap, snf, ones.max_witness)
    reach_positive = policy_to_actions(model, vmap, snf, ones.min_witness,
                                       forced=prune.forced)
    return QualitativeReach(
        classification,
        frozenset(one_types),
        frozenset(zero_types),
        reach_zero,
        reach_positive,
        queen,
        snf,
        vmap,
    )


@dataclass
class ReachReport:
    model: Bssg
    reach_values: dict[str, object] | None   # per type; None for qualitative-only
    non_reach_values: dict[str, object] | None
    epsilon: Fraction
    solve_report: SolveReport | None
    qualitative: QualitativeReach
    strategies: dict[str, StrategyDescriptor]
    action_strategies: dict[str, dict[str, object]]
    notes: tuple[str, ...] = ()


def reachability_values(
    model: Bssg,
    epsilon,
    opts: SolveOptions | None = None,
    threshold_cap: int | None = None,
) -> ReachReport:
    """Reach values r = 1 - g per type, with witness and epsilon-optimal
    strategies attached.

    Mixed two-player games get the qualitative classification only; the
    report says so and quantitative output requires certification with a
    supplied policy pair.
    """
    eps = _frac(epsilon)
    opts = (opts or SolveOptions()).with_epsilon(eps)
    qual = qualitative_reach(model)
    snf, vmap = qual.snf, qual.varmap
    origin = snf.origin_map
    kind = snf.classify()
    notes: list[str] = []
    strategies: dict[str, StrategyDescriptor] = {}
    action_strategies: dict[str, dict[str, object]] = {}

    if kind == "maxminpps":
        notes.append(
            "qualitative only; supply policies for certification "
            "(two-player quantitative solving is certificate-based)"
        )
        return ReachReport(model, None, None, eps, None, qual, {}, {},
                           tuple(notes))

    report = solve_gfp(snf, opts)
    one = Fraction(1) if opts.mode == "exact" else 1.0
    non_reach: dict[str, object] = {}
    reach: dict[str, object] = {}
    for t in range(model.n_types):
        name = model.type_names[t]
        if t in model.targets:
            non_reach[name] = one - one
            reach[name] = one
            continue
        g = report.value[origin[vmap.var(t)]]
        non_reach[name] = g
        reach[name] = one - g

    if kind == "minpps":
        randomized = eps_optimal_randomized_minpps(snf, eps, opts, verify=False)
        strategies["static-randomized"] = randomized
        action_strategies["static-randomized"] = policy_to_actions(
            model, vmap, snf, randomized.policy
        )
        threshold = nonstatic_threshold_strategy(snf, eps, opts,
                                                 threshold_cap=threshold_cap)
        strategies["threshold-switch"] = threshold
        action_strategies["threshold-switch-sigma"] = policy_to_actions(
            model, vmap, snf, threshold.sigma
        )
        action_strategies["threshold-switch-tau"] = policy_to_actions(
            model, vmap, snf, threshold.tau
        )
        if qual.queen_worker is not None:
            strategies["queen-worker"] = qual.queen_worker
            action_strategies["queen-worker-queen"] = policy_to_actions(
                model, vmap, snf, qual.queen_worker.tau_star
            )
            action_strategies["queen-worker-worker"] = policy_to_actions(
                model, vmap, snf, qual.queen_worker.worker
            )
    elif kind == "maxpps":
        sigma, _ = eps_optimal_policy_maxpps_gfp(snf, eps, opts)
        strategies["static-deterministic"] = StaticDeterministic(
            sigma, eps, "value-1 witness on the pruned set, operator policy below"
        )
        action_strategies["static-deterministic"] = policy_to_actions(
            model, vmap, snf, sigma
        )
        greedy = optimal_max_policy_gfp(snf, report.value, eps)
        strategies["greedy-optimal"] = StaticDeterministic(
            greedy, None,
            "argmax on the solved values; exact optimality requires the "
            "tolerance below the value separation",
        )
        action_strategies["greedy-optimal"] = policy_to_actions(
            model, vmap, snf, greedy
        )
    return ReachReport(model, reach, non_reach, eps, report, qual,
                       strategies, action_strategies, tuple(notes))


def population_reach_value(report: ReachReport, mu: Population) -> object:
    """1 - prod(g_t^mu_t); populations already containing the target count
    as reached (an extension of the single-type convention)."""
    if report.non_reach_values is None:
        raise PreconditionError("no quantitative values in this report")
    g = Fraction(1)
    for t, c in mu.counts:
        if t in report.model.targets:
            return Fraction(1)
        g = g * _frac(report.non_reach_values[report.model.type_names[t]]) ** c
    return 1 - g
