"""Construction of epsilon-optimal and optimal policies and strategies for
greatest-fixed-point objectives.

Min-player constructions follow the switch-and-verify algorithm: solve to
high accuracy, start from the pointwise argmin policy, then move choices
toward the "can reach a non-degenerate row" region while the solved values
permit, finishing with an a-posteriori check of the induced system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import ClassVar, Mapping

from .errors import PolicyError, PreconditionError, SolverFault
from .gnm import SolveOptions, solve_gfp_minpps, solve_gfp_pps, solve_gfp_maxpps, solve_lfp
from .graphs import reachable_to
from .qualitative import (
    ReachTree,
    ZeroSetResult,
    gfp_one_set,
    gfp_zero_set,
    is_ldf,
    remove_one_vars,
)
from .snf import FormL, FormM, FormQ, SnfSystem, apply_policy_snf, dependency_graph
from .system import (
    MAX_PLAYER,
    MIN_PLAYER,
    Policy,
    ValueVector,
    encoding_size,
    _frac,
)


@dataclass(frozen=True)
class StaticDeterministic:
    kind: ClassVar[str] = "static-deterministic"
    policy: Policy
    epsilon: Fraction | None = None
    provenance: str = ""


@dataclass(frozen=True)
class StaticRandomized:
    kind: ClassVar[str] = "static-randomized"
    policy: Policy
    epsilon: Fraction | None = None
    provenance: str = ""


@dataclass(frozen=True)
class ThresholdSwitch:
    """Play sigma until the population first reaches the threshold, then
    switch to the always-can-reach policy tau."""

    kind: ClassVar[str] = "threshold-switch"
    sigma: Policy
    tau: Policy
    population_threshold: int
    epsilon: Fraction | None = None
    provenance: str = ""

    def __post_init__(self):
        if self.population_threshold < 1:
            raise ValueError("population threshold must be at least 1")


@dataclass(frozen=True)
class QueenWorker:
    """One designated queen follows tau_star (staying inside the zero set),
    all other members follow the worker policy."""

    kind: ClassVar[str] = "queen-worker"
    tau_star: Policy
    worker: Policy
    zero_set: frozenset[int]
    reach_trees: Mapping[int, ReachTree]
    epsilon: Fraction | None = None
    provenance: str = ""

    def __post_init__(self):
        if not self.zero_set:
            raise ValueError("queen-worker strategy needs a non-empty zero set")
        if set(self.reach_trees) != set(self.zero_set):
            raise ValueError("reach trees must cover exactly the zero set")


StrategyDescriptor = (
    StaticDeterministic | StaticRandomized | ThresholdSwitch | QueenWorker
)


# ---------------------------------------------------------------------------


def optimal_max_policy_gfp(snf: SnfSystem, g_tilde: ValueVector, tol) -> Policy:
    """Greedy max policy on an approximate fixed point.

    Picks the child with the larger value for every max row; ties within
    2*tol go to the lower variable index.  Near-ties mean exact optimality
    is certified only when tol is below the instance's value separation,
    which is recorded in the caller-facing provenance.
    """
    tol = _frac(tol) if g_tilde.mode == "exact" else float(tol)
    choices = {}
    for i in snf.m_vars(MAX_PLAYER):
        f = snf.forms[i]
        a, b = g_tilde[f.j], g_tilde[f.k]
        if abs(a - b) <= 2 * tol:
            choices[i] = 0 if f.j <= f.k else 1
        else:
            choices[i] = 0 if a > b else 1
    return Policy.of(MAX_PLAYER, choices)


def _fill_policy(policy: Policy, snf: SnfSystem, player: str) -> Policy:
    """Extend a partial policy with branch-0 choices so it is total."""
    choices = policy.as_dict()
    for i in snf.m_vars(player):
        choices.setdefault(i, 0)
    return Policy.of(player, choices)


def _lift(policy: Policy, survivors: tuple[int, ...]) -> Policy:
    return Policy.of(policy.player, {survivors[v]: c for v, c in policy.choices})


def eps_optimal_policy_maxpps_gfp(
    snf: SnfSystem,
    epsilon,
    opts: SolveOptions | None = None,
) -> tuple[Policy, dict]:
    """Deterministic policy within epsilon of the max system's GFP.

    Combines the value-1 witness on the pruned coordinates with the
    realizing policy of the final Newton operator on the residual, then
    verifies by solving the induced PPS; on failure the inner accuracy is
    tightened and the construction retried.
    """
    eps = _frac(epsilon)
    opts = opts or SolveOptions()
    ones = gfp_one_set(snf)
    inner_eps = eps / 2
    last_gap = None
    for _ in range(4):
        report = solve_gfp_maxpps(snf, replace(opts, epsilon=inner_eps))
        choices = dict(ones.max_witness.choices)
        greedy = report.witnesses.get("gfp_greedy_max")
        if greedy is not None:
            choices.update(greedy.choices)
        sigma = _fill_policy(Policy.of(MAX_PLAYER, choices), snf, MAX_PLAYER)
        induced = apply_policy_snf(snf, sigma=sigma)
        check = solve_gfp_pps(induced, replace(opts, epsilon=inner_eps))
        gap = max(
            (abs(a - b) for a, b in zip(check.value, report.value)),
            default=Fraction(0),
        )
        tol = 2 * eps if opts.mode == "exact" else 2 * float(eps)
        if gap <= tol:
            return sigma, {"value": report.value, "gap": gap}
        last_gap = gap
        inner_eps = inner_eps / 16
    raise SolverFault(
        f"max policy verification failed; residual gap {last_gap} above {2 * eps}"
    )


# ---------------------------------------------------------------------------
# Min player


def _argmin_policy(snf: SnfSystem, y) -> dict[int, int]:
    choices = {}
    for i in snf.m_vars(MIN_PLAYER):
        f = snf.forms[i]
        choices[i] = 0 if y[f.j] <= y[f.k] else 1
    return choices


def _policy1_switches(snf: SnfSystem, y, theta) -> Policy:
    """Steps 2-5: move min choices into the can-reach-progress region."""
    min_vars = snf.m_vars(MIN_PLAYER)
    choices = _argmin_policy(snf, y)
    n = snf.n
    for _ in range(n + 1):
        fixed = apply_policy_snf(snf, tau=Policy.of(MIN_PLAYER, choices))
        adj = dependency_graph(fixed)
        targets = [
            i
            for i, f in enumerate(fixed.forms)
            if isinstance(f, FormQ)
            or (isinstance(f, FormL) and (f.row_sum < 1 or f.const > 0))
        ]
        f_set = reachable_to(adj, targets)
        if len(f_set) == n:
            return Policy.of(MIN_PLAYER, choices)
        switch = None
        for i in min_vars:
            if i in f_set:
                continue
            form = snf.forms[i]
            other = 1 - choices[i]
            child = form.child(other)
            if child in f_set and abs(y[i] - y[child]) <= theta:
                switch = (i, other)
                break
        if switch is None:
            raise SolverFault(
                "no qualifying switch despite degenerate region; "
                "inner accuracy too coarse"
            )
        choices[switch[0]] = switch[1]
    raise SolverFault("switch loop exceeded the variable count")


def minpps_eps_policy1(
    snf: SnfSystem,
    epsilon,
    opts: SolveOptions | None = None,
) -> tuple[Policy, dict]:
    """Deterministic LDF min policy sigma with LFP(P_sigma) within
    epsilon/2 of the GFP; requires the value-1 coordinates removed.

    Certified mode uses the 2^(-14|P|-3) * eps inner accuracy and
    2^(-14|P|-2) * eps switch threshold verbatim; practical mode floors the
    accuracy at 2^-60 and restores soundness by verifying the output
    against the solved LFP, retrying at higher precision on failure.
    """
    eps = _frac(epsilon)
    opts = opts or SolveOptions()
    if gfp_one_set(snf).one_set:
        raise PreconditionError("value-1 coordinates must be removed first")
    if not snf.m_vars(MIN_PLAYER):
        return Policy.of(MIN_PLAYER, {}), {"switches": 0}
    size = encoding_size(snf)
    paper_delta = Fraction(1, 2 ** (14 * size + 3)) * eps

    attempts: list[tuple[str, Fraction, bool]] = []
    if opts.certified:
        attempts.append(("exact", paper_delta, True))
    else:
        delta = max(Fraction(1, 2**60), paper_delta)
        attempts.append((opts.mode, delta, False))
        attempts.append(("exact", max(paper_delta, delta * Fraction(1, 2**30)), False))
        attempts.append(("exact", paper_delta, True))

    last_error: Exception | None = None
    for mode, delta, certified in attempts:
        inner = replace(opts, mode=mode, epsilon=delta, certified=certified)
        y = solve_gfp_minpps(snf, inner).value
        theta = 2 * delta if certified else 4 * delta
        if mode != "exact":
            # float solves bottom out near machine precision
            theta = max(float(theta), 1e-12)
        try:
            sigma = _policy1_switches(snf, list(y), theta)
        except SolverFault as exc:
            last_error = exc
            if certified:
                raise
            continue
        ldf_ok, _ = is_ldf(snf, sigma)
        induced = apply_policy_snf(snf, tau=sigma)
        lfp = solve_lfp(induced, replace(opts, mode=mode, epsilon=eps / 8,
                                         certified=certified))
        gap = max(
            (abs(a - b) for a, b in zip(lfp.value, y)), default=Fraction(0)
        )
        bound = eps / 2 if mode == "exact" else float(eps / 2)
        if ldf_ok and gap <= bound:
            return sigma, {"value": y, "lfp": lfp.value, "gap": gap,
                           "mode": mode, "certified": certified}
        last_error = SolverFault(
            f"policy verification failed: ldf={ldf_ok}, gap={gap}"
        )
    raise last_error if last_error else SolverFault("policy construction failed")


def eps_optimal_deterministic_minpps(
    snf: SnfSystem,
    epsilon,
    opts: SolveOptions | None = None,
) -> Policy:
    """Total deterministic min policy: the switch construction on the
    residual below value 1, branch 0 on the pruned coordinates."""
    eps = _frac(epsilon)
    ones = gfp_one_set(snf)
    prune = remove_one_vars(snf, ones.one_set)
    if prune.system.m_vars(MIN_PLAYER):
        sigma, _ = minpps_eps_policy1(prune.system, eps, opts)
        return _fill_policy(_lift(sigma, prune.survivors), snf, MIN_PLAYER)
    return _fill_policy(Policy.of(MIN_PLAYER, {}), snf, MIN_PLAYER)


def mix_policies(sigma: Policy, tau: Policy, p) -> Policy:
    """Follow tau with probability p and sigma otherwise, per variable;
    coinciding choices merge to a deterministic choice."""
    p = _frac(p)
    if not 0 <= p <= 1:
        raise ValueError("mixing probability must lie in [0, 1]")
    if sigma.player != tau.player:
        raise PolicyError("cannot mix policies of different players")
    if not (sigma.is_deterministic and tau.is_deterministic):
        raise PolicyError("mixing requires deterministic policies")
    if sigma.variables != tau.variables:
        raise PolicyError("policies cover different variables")
    choices: dict[int, object] = {}
    for (var, a), (_, b) in zip(sigma.choices, tau.choices):
        if a == b or p == 0:
            choices[var] = a
        elif p == 1:
            choices[var] = b
        else:
            choices[var] = ((a, 1 - p), (b, p))
    return Policy.of(sigma.player, choices)


def eps_optimal_randomized_minpps(
    snf: SnfSystem,
    epsilon,
    opts: SolveOptions | None = None,
    verify: bool = True,
) -> StaticRandomized:
    """Static randomized min policy within epsilon of the GFP.

    Mixes the switch-construction policy with the always-can-escape
    witness at probability 2^(-28|P|-4) * eps.  Coordinates removed by
    value-1 pruning get a recorded deterministic choice.
    """
    eps = _frac(epsilon)
    opts = opts or SolveOptions()
    ones = gfp_one_set(snf)
    prune = remove_one_vars(snf, ones.one_set)
    res = prune.system
    if not res.m_vars(MIN_PLAYER):
        policy = _fill_policy(Policy.of(MIN_PLAYER, {}), snf, MIN_PLAYER)
        return StaticRandomized(policy, eps, "no min choices below value 1")
    sigma, info = minpps_eps_policy1(res, eps, opts)
    tau = gfp_one_set(res).min_witness
    size = encoding_size(res)
    p = min(Fraction(1), Fraction(1, 2 ** (28 * size + 4)) * eps)
    upsilon = mix_policies(sigma, tau, p)
    full = _fill_policy(_lift(upsilon, prune.survivors), snf, MIN_PLAYER)
    provenance = (
        f"mix of switch policy and escape witness at weight {p}; "
        "pruned coordinates fixed to branch 0"
    )
    if verify:
        induced = apply_policy_snf(snf, tau=full)
        mode = "exact" if p < Fraction(1, 2**40) else opts.mode
        solved = solve_gfp_pps(induced, replace(opts, mode=mode, epsilon=eps / 8))
        reference = solve_gfp_minpps(snf, replace(opts, mode=mode, epsilon=eps / 8))
        gap = max(
            (abs(_frac(a) - _frac(b))
             for a, b in zip(solved.value, reference.value)),
            default=Fraction(0),
        )
        if gap > eps + _frac(reference.epsilon) + _frac(solved.epsilon):
            raise SolverFault(f"randomized policy verification failed: gap {gap}")
    return StaticRandomized(full, eps, provenance)


def nonstatic_threshold_strategy(
    snf: SnfSystem,
    epsilon,
    opts: SolveOptions | None = None,
    threshold_cap: int | None = None,
) -> ThresholdSwitch:
    """Switch from the epsilon-policy to the escape witness once the
    population reaches 2^(4|P|+1) / epsilon (|P| of the pruned system).

    The formula threshold is astronomically conservative; an optional cap
    clamps it for simulation, recorded in the provenance.
    """
    eps = _frac(epsilon)
    opts = opts or SolveOptions()
    ones = gfp_one_set(snf)
    prune = remove_one_vars(snf, ones.one_set)
    res = prune.system
    if res.m_vars(MIN_PLAYER):
        sigma, _ = minpps_eps_policy1(res, eps, opts)
        tau = gfp_one_set(res).min_witness
        sigma_full = _fill_policy(_lift(sigma, prune.survivors), snf, MIN_PLAYER)
        tau_full = _fill_policy(_lift(tau, prune.survivors), snf, MIN_PLAYER)
    else:
        sigma_full = _fill_policy(Policy.of(MIN_PLAYER, {}), snf, MIN_PLAYER)
        tau_full = sigma_full
    size = encoding_size(res) if res.n else 1
    threshold = max(1, math.ceil(Fraction(2 ** (4 * size + 1)) / eps))
    provenance = f"formula threshold ceil(2^(4*{size}+1)/eps) = {threshold}"
    if threshold_cap is not None and threshold_cap < threshold:
        threshold = max(1, threshold_cap)
        provenance += f", clamped to {threshold} for simulation"
    return ThresholdSwitch(sigma_full, tau_full, threshold, eps, provenance)


def almost_sure_reach_strategy(
    snf: SnfSystem,
    zero_result: ZeroSetResult | None = None,
) -> QueenWorker:
    """Queen-worker strategy reaching the target almost surely from any
    zero-set coordinate: the queen keeps the lineage inside the zero set,
    the workers always retain escape probability."""
    ones = gfp_one_set(snf)
    prune = remove_one_vars(snf, ones.one_set)
    res = prune.system
    zr = zero_result or gfp_zero_set(res)
    if not zr.zero_set:
        raise PreconditionError("zero set is empty; nothing reaches almost surely")
    worker = gfp_one_set(res).min_witness
    queen = zr.tau_star
    survivors = prune.survivors

    def remap_tree(tree: ReachTree) -> ReachTree:
        return ReachTree(
            survivors[tree.var], tuple(remap_tree(c) for c in tree.children)
        )

    zero_full = frozenset(survivors[i] for i in zr.zero_set)
    trees_full = {survivors[i]: remap_tree(t) for i, t in zr.reach_trees.items()}
    return QueenWorker(
        tau_star=_fill_policy(_lift(queen, survivors), snf, MIN_PLAYER),
        worker=_fill_policy(_lift(worker, survivors), snf, MIN_PLAYER),
        zero_set=zero_full,
        reach_trees=trees_full,
        provenance="queen follows the zero-set order, workers the escape witness",
    )
