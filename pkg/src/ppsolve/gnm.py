"""Numerical core: Newton steps, the generalized Newton operator, rounded
iteration drivers for greatest (and least) fixed points, and the
policy-pair certificate verifier.

All drivers share the same pipeline: structural pruning of known-value
coordinates, rounded iteration of the Newton operator from zero on the
residual system, then reassembly.  In certified mode the rounding
parameter follows the h = j + 2 + 4|P| schedule and iterates stay below
the target fixed point by construction; practical mode caps h and stops on
a residual test instead, and is labeled as such in the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import PolicyError, PreconditionError, SolverFault
from . import simplex
from .linalg import inverse_exact, solve_exact, solve_float
from .qualitative import (
    OneSetResult,
    PruneResult,
    gfp_one_set,
    lfp_one_set_bounded,
    lfp_one_set_pps,
    lfp_zero_set,
    is_ldf,
    remove_one_vars,
    remove_zero_vars,
)
from .snf import (
    FormL,
    FormM,
    FormQ,
    LinearizedSystem,
    SnfSystem,
    apply_policy_snf,
    evaluate,
    jacobian,
    linearize,
    policy_from_original,
    to_snf,
)
from .system import (
    MAXOF,
    MAX_PLAYER,
    MINOF,
    MIN_PLAYER,
    MaxMinPps,
    Policy,
    ValueVector,
    encoding_size,
    _frac,
)

FLOAT_SWITCH_TOL = 1e-12


@dataclass(frozen=True)
class SolveOptions:
    mode: str = "float"                 # "exact" (authoritative) or "float"
    epsilon: Fraction = Fraction(1, 10**9)
    certified: bool = False             # exact h = j + 2 + 4|P| schedule
    h_override: int | None = None
    h_cap: int = 128                    # practical-mode cap on h
    max_outer_iterations: int = 512
    operator_strategy: str = "auto"     # "auto" | "lp" | "improve"
    keep_trace: bool = False
    enumeration_budget: int = 2**20

    def __post_init__(self):
        eps = _frac(self.epsilon)
        if eps <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_outer_iterations <= 0:
            raise ValueError("iteration budget must be positive")
        object.__setattr__(self, "epsilon", eps)

    def with_epsilon(self, epsilon) -> "SolveOptions":
        return replace(self, epsilon=_frac(epsilon))


def bits_of_accuracy(eps: Fraction) -> int:
    """Smallest j with 2^-j <= eps."""
    j = max(0, eps.denominator.bit_length() - eps.numerator.bit_length())
    while Fraction(1, 2**j) > eps:
        j += 1
    while j > 0 and Fraction(1, 2 ** (j - 1)) <= eps:
        j -= 1
    return j


def rounding_schedule(eps: Fraction, size: int) -> int:
    return bits_of_accuracy(eps) + 2 + 4 * size


def round_down(v: ValueVector, h: int) -> ValueVector:
    """Round each entry down to the 2^-h grid and clamp at zero."""
    if h <= 0:
        raise ValueError("rounding parameter must be positive")
    if v.mode == "exact":
        scale = 1 << h
        return ValueVector.exact(
            max(Fraction(0), Fraction(math.floor(x * scale), scale)) for x in v
        )
    if h >= 1020:  # grid finer than any binary64 spacing on [0, 1]
        return ValueVector.floats(max(0.0, x) for x in v)
    scale = 2.0**h
    return ValueVector.floats(max(0.0, math.floor(x * scale) / scale) for x in v)


# ---------------------------------------------------------------------------
# Newton operator


def newton_step(snf: SnfSystem, y: ValueVector, check_inverse: bool | None = None) -> ValueVector:
    """One Newton iteration x + (I - B(x))^-1 (P(x) - x) on a pure PPS.

    In exact mode the inverse is additionally checked to be entrywise
    non-negative (the guarantee when the system is LDF and the iterate is
    below the fixed point); a violation is reported as a solver fault.
    """
    if not snf.is_pps:
        raise PreconditionError("newton_step requires all M forms resolved")
    if check_inverse is None:
        check_inverse = y.mode == "exact"
    if y.mode == "exact":
        b = jacobian(snf, list(y))
        n = snf.n
        a = [[(1 if i == j else 0) - b[i][j] for j in range(n)] for i in range(n)]
        p = evaluate(snf, y)
        rhs = [pv - yv for pv, yv in zip(p, y)]
        d = solve_exact(a, rhs)
        if check_inverse:
            inv = inverse_exact(a)
            if any(entry < 0 for row in inv for entry in row):
                raise SolverFault(
                    "(I - B(y))^-1 has a negative entry; LDF precondition violated"
                )
        return ValueVector.exact([yv + dv for yv, dv in zip(y, d)])
    b = jacobian(snf, list(y))
    a = np.eye(snf.n) - np.asarray(b, dtype=float)
    p = np.array(evaluate(snf, y).entries)
    d = solve_float(a, p - np.array(y.entries))
    return ValueVector.floats((np.array(y.entries) + d).tolist())


@dataclass
class OperatorStep:
    value: ValueVector
    policy: Policy
    switches: int


def _argopt_branch(form: FormM, values, prefer_max: bool) -> int:
    a, b = values[form.j], values[form.k]
    if prefer_max:
        return 0 if a >= b else 1
    return 0 if a <= b else 1


def _improve_minpps(snf: SnfSystem, y: ValueVector, start: Policy) -> OperatorStep:
    """Inner policy improvement realizing I(y) = N_sigma(y) for a minPPS."""
    sigma = start
    min_vars = snf.m_vars(MIN_PLAYER)
    exact = y.mode == "exact"
    tol = Fraction(0) if exact else FLOAT_SWITCH_TOL
    switches = 0
    limit = 4 * (len(min_vars) + 1) ** 2 + 16
    while True:
        fixed = apply_policy_snf(snf, tau=sigma)
        z = newton_step(fixed, y, check_inverse=False)
        violated = None
        for i in min_vars:
            f = snf.forms[i]
            low = min(z[f.j], z[f.k])
            if low < z[i] - tol:
                violated = i
                break
        if violated is None:
            return OperatorStep(z, sigma, switches)
        f = snf.forms[violated]
        choice = 0 if z[f.j] <= z[f.k] else 1
        choices = sigma.as_dict()
        choices[violated] = choice
        sigma = Policy.of(MIN_PLAYER, choices)
        switches += 1
        if switches > limit:
            raise SolverFault(
                f"policy improvement failed to settle after {switches} switches"
            )


def _operator_lp(snf: SnfSystem, y: ValueVector, minimize: bool) -> ValueVector:
    """I(y) via the linear program; exact rational arithmetic throughout."""
    ys = [_frac(v) for v in y]
    lin = linearize(snf, ys)
    n = snf.n
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []

    def add_row(coeffs: dict[int, Fraction], bound: Fraction):
        row = [Fraction(0)] * n
        for v, c in coeffs.items():
            row[v] += c
        rows.append(row)
        rhs.append(bound)

    for i, rrow in enumerate(lin.rows):
        if isinstance(rrow, FormM):
            for child in (rrow.j, rrow.k):
                if minimize:
                    add_row({child: Fraction(1), i: Fraction(-1)}, Fraction(0))
                else:
                    add_row({i: Fraction(1), child: Fraction(-1)}, Fraction(0))
            continue
        coeffs = {i: Fraction(1)}
        for v, c in rrow.terms:
            coeffs[v] = coeffs.get(v, Fraction(0)) - c
        if minimize:
            coeffs = {v: -c for v, c in coeffs.items()}
            add_row(coeffs, -rrow.const)
        else:
            add_row(coeffs, rrow.const)

    objective = [Fraction(1)] * n
    try:
        if minimize:
            sol = simplex.minimize(objective, rows, rhs)
        else:
            sol = simplex.maximize(objective, rows, rhs)
    except (simplex.LpInfeasible, simplex.LpUnbounded) as exc:
        raise SolverFault(
            f"Newton-operator program failed ({exc}); "
            "system likely has unpruned boundary coordinates"
        ) from exc
    fixed = lin.evaluate(sol.x)
    if any(fv != xv for fv, xv in zip(fixed, sol.x)):
        raise SolverFault("operator program optimum is not a linearized fixed point")
    if y.mode == "exact":
        return ValueVector.exact(sol.x)
    return ValueVector.floats(float(v) for v in sol.x)


def gnm_operator(
    snf: SnfSystem,
    y: ValueVector,
    strategy: str = "auto",
    start_policy: Policy | None = None,
) -> OperatorStep:
    """The generalized Newton operator I(y) with its realizing policy.

    For a pure PPS this is one Newton step.  A min system uses inner policy
    improvement from an LDF start by default, or the exact LP; a max system
    always uses the LP (the improvement termination argument is specific to
    the min side).  Both strategies agree within mode tolerance.
    """
    kind = snf.classify()
    if kind == "maxminpps":
        raise PreconditionError("operator undefined for mixed max/min systems")
    if kind == "pps":
        return OperatorStep(newton_step(snf, y, check_inverse=False),
                            Policy.of(MIN_PLAYER, {}), 0)
    if kind == "minpps":
        if strategy in ("auto", "improve"):
            if start_policy is None:
                ones = gfp_one_set(snf)
                if ones.one_set:
                    raise PreconditionError(
                        "operator requires value-1 coordinates to be pruned first"
                    )
                start_policy = ones.min_witness
            return _improve_minpps(snf, y, start_policy)
        value = _operator_lp(snf, y, minimize=False)
        sigma = Policy.of(
            MIN_PLAYER,
            {
                i: _argopt_branch(snf.forms[i], list(value), prefer_max=False)
                for i in snf.m_vars(MIN_PLAYER)
            },
        )
        return OperatorStep(value, sigma, 0)
    # max system: minimize the coordinate sum subject to P^y(a) <= a
    if strategy == "improve":
        raise PreconditionError(
            "policy improvement is only available for min systems; use the LP"
        )
    value = _operator_lp(snf, y, minimize=True)
    sigma = Policy.of(
        MAX_PLAYER,
        {
            i: _argopt_branch(snf.forms[i], list(value), prefer_max=True)
            for i in snf.m_vars(MAX_PLAYER)
        },
    )
    return OperatorStep(value, sigma, 0)


# ---------------------------------------------------------------------------
# Rounded iteration driver


@dataclass
class SolveReport:
    value: ValueVector
    names: tuple[str, ...]
    system: SnfSystem
    method: str
    mode: str
    epsilon: Fraction
    certified: bool
    h: int | None
    iterations: int
    converged: bool
    final_residual: object
    inner_policy_switches: int
    witnesses: dict[str, Policy]
    pruned_one_set: frozenset[int]
    pruned_zero_set: frozenset[int]
    trace: list[ValueVector] | None = None
    trace_survivors: tuple[int, ...] | None = None
    notes: tuple[str, ...] = ()

    def value_by_name(self) -> dict[str, object]:
        return dict(zip(self.names, self.value.entries))

    def project(self, origin: dict[int, int]) -> dict[int, object]:
        """Values of original variables through an origin map."""
        return {orig: self.value[idx] for orig, idx in origin.items()}


@dataclass
class _LoopResult:
    value: ValueVector
    iterations: int
    switches: int
    converged: bool
    last_policy: Policy | None
    trace: list[ValueVector]


def _zero_vector(n: int, mode: str) -> ValueVector:
    if mode == "exact":
        return ValueVector.exact([Fraction(0)] * n)
    return ValueVector.floats([0.0] * n)


def _sup_diff(a: ValueVector, b: ValueVector):
    if a.mode == "exact":
        return max((abs(x - y) for x, y in zip(a, b)), default=Fraction(0))
    return max((abs(x - y) for x, y in zip(a, b)), default=0.0)


def _run_rounded(
    snf: SnfSystem,
    opts: SolveOptions,
    h: int,
    operator: Callable[[ValueVector], OperatorStep],
) -> _LoopResult:
    x = _zero_vector(snf.n, opts.mode)
    trace = [x] if opts.keep_trace else []
    switches = 0
    last_policy = None
    eps4 = opts.epsilon / 4
    if opts.certified:
        for _ in range(h):
            step = operator(x)
            switches += step.switches
            last_policy = step.policy
            x = round_down(step.value, h)
            if opts.keep_trace:
                trace.append(x)
        return _LoopResult(x, h, switches, True, last_policy, trace)
    threshold = eps4 if opts.mode == "exact" else float(eps4)
    best = x
    for k in range(1, opts.max_outer_iterations + 1):
        step = operator(x)
        switches += step.switches
        last_policy = step.policy
        best = step.value
        if _sup_diff(step.value, x) <= threshold:
            if opts.keep_trace:
                trace.append(step.value)
            return _LoopResult(step.value, k, switches, True, last_policy, trace)
        nxt = round_down(step.value, h)
        if nxt.entries == x.entries:
            # The 2^-h grid cannot make further progress.
            return _LoopResult(step.value, k, switches, False, last_policy, trace)
        x = nxt
        if opts.keep_trace:
            trace.append(x)
    return _LoopResult(best, opts.max_outer_iterations, switches, False,
                       last_policy, trace)


def _pick_h(opts: SolveOptions, size: int) -> int:
    if opts.h_override is not None:
        return opts.h_override
    schedule = rounding_schedule(opts.epsilon, size)
    if opts.certified:
        return schedule
    return min(opts.h_cap, schedule)


def _lift_policy(policy: Policy, survivors: tuple[int, ...]) -> Policy:
    return Policy.of(
        policy.player,
        {survivors[v]: c for v, c in policy.choices},
    )


def _residual(snf: SnfSystem, value: ValueVector):
    return _sup_diff(evaluate(snf, value), value)


def _finish(
    snf: SnfSystem,
    opts: SolveOptions,
    method: str,
    full_entries,
    h,
    loop: _LoopResult | None,
    witnesses,
    one_set,
    zero_set,
    survivors=None,
    notes=(),
) -> SolveReport:
    mode = opts.mode
    value = ValueVector(mode, tuple(full_entries))
    return SolveReport(
        value=value,
        names=snf.names,
        system=snf,
        method=method,
        mode=mode,
        epsilon=opts.epsilon,
        certified=opts.certified,
        h=h,
        iterations=loop.iterations if loop else 0,
        converged=loop.converged if loop else True,
        final_residual=_residual(snf, value),
        inner_policy_switches=loop.switches if loop else 0,
        witnesses=witnesses,
        pruned_one_set=frozenset(one_set),
        pruned_zero_set=frozenset(zero_set),
        trace=(loop.trace if loop and opts.keep_trace else None),
        trace_survivors=survivors if loop and opts.keep_trace else None,
        notes=tuple(notes),
    )


def solve_gfp_minpps(snf: SnfSystem, opts: SolveOptions = SolveOptions()) -> SolveReport:
    """GFP of a min system: prune value-1 coordinates, then rounded Newton
    iteration from zero on the residual (which skips over its LFP)."""
    if snf.m_vars(MAX_PLAYER):
        raise PreconditionError("solve_gfp_minpps expects a min system")
    ones = gfp_one_set(snf)
    prune = remove_one_vars(snf, ones.one_set)
    res = prune.system
    one_value = Fraction(1) if opts.mode == "exact" else 1.0
    witnesses = {
        "one_set_max": ones.max_witness,
        "one_set_min": ones.min_witness,
    }
    if res.n == 0:
        return _finish(snf, opts, "gfp-min", [one_value] * snf.n, None, None,
                       witnesses, ones.one_set, frozenset())
    h = _pick_h(opts, encoding_size(res))
    current = {"sigma": gfp_one_set(res).min_witness if res.m_vars(MIN_PLAYER) else None}

    def operator(y: ValueVector) -> OperatorStep:
        step = gnm_operator(res, y, strategy=opts.operator_strategy,
                            start_policy=current["sigma"])
        if step.policy.choices:
            current["sigma"] = step.policy
        return step

    loop = _run_rounded(res, opts, h, operator)
    full = prune.lift_vector(list(loop.value), one_value)
    if loop.last_policy is not None and loop.last_policy.choices:
        witnesses["gfp_ldf_min"] = _lift_policy(loop.last_policy, prune.survivors)
    return _finish(snf, opts, "gfp-min", full, h, loop, witnesses,
                   ones.one_set, frozenset(), prune.survivors)


def solve_gfp_maxpps(snf: SnfSystem, opts: SolveOptions = SolveOptions()) -> SolveReport:
    """GFP of a max system: after pruning value-1 coordinates the GFP is
    the unique fixed point, so remove the value-0 coordinates and run the
    least-fixed-point iteration from zero."""
    if snf.m_vars(MIN_PLAYER):
        raise PreconditionError("solve_gfp_maxpps expects a max system")
    ones = gfp_one_set(snf)
    prune1 = remove_one_vars(snf, ones.one_set)
    res1 = prune1.system
    one_value = Fraction(1) if opts.mode == "exact" else 1.0
    zero_value = Fraction(0) if opts.mode == "exact" else 0.0
    witnesses = {"one_set_max": ones.max_witness, "one_set_min": ones.min_witness}
    if res1.n == 0:
        return _finish(snf, opts, "gfp-max", [one_value] * snf.n, None, None,
                       witnesses, ones.one_set, frozenset())
    zeros = lfp_zero_set(res1)
    prune2 = remove_zero_vars(res1, zeros)
    res2 = prune2.system
    zero_full = frozenset(prune1.survivors[i] for i in zeros)
    if res2.n == 0:
        res1_vec = prune2.lift_vector([], zero_value)
        full = prune1.lift_vector(res1_vec, one_value)
        return _finish(snf, opts, "gfp-max", full, None, None, witnesses,
                       ones.one_set, zero_full)
    h = _pick_h(opts, encoding_size(res2))
    loop = _run_rounded(
        res2, opts, h,
        lambda y: gnm_operator(res2, y, strategy="lp"),
    )
    res1_vec = prune2.lift_vector(list(loop.value), zero_value)
    full = prune1.lift_vector(res1_vec, one_value)
    if loop.last_policy is not None and loop.last_policy.choices:
        lifted = _lift_policy(loop.last_policy, prune2.survivors)
        witnesses["gfp_greedy_max"] = _lift_policy(lifted, prune1.survivors)
    survivors = tuple(prune1.survivors[prune2.survivors[i]] for i in range(res2.n))
    return _finish(snf, opts, "gfp-max", full, h, loop, witnesses,
                   ones.one_set, zero_full, survivors)


def solve_gfp_pps(snf: SnfSystem, opts: SolveOptions = SolveOptions()) -> SolveReport:
    """GFP of a pure PPS: prune value-1 coordinates; the residual has a
    unique fixed point reached by rounded Newton iteration from zero."""
    if not snf.is_pps:
        raise PreconditionError("solve_gfp_pps expects a pure PPS")
    report = solve_gfp_minpps(snf, opts)
    return replace(report, method="gfp-pps")


def solve_gfp(system, opts: SolveOptions = SolveOptions()) -> SolveReport:
    """Dispatch on the system class; mixed max/min systems are
    certification-only and rejected here."""
    snf = system if isinstance(system, SnfSystem) else to_snf(system)
    kind = snf.classify()
    if kind == "pps":
        return solve_gfp_pps(snf, opts)
    if kind == "minpps":
        return solve_gfp_minpps(snf, opts)
    if kind == "maxpps":
        return solve_gfp_maxpps(snf, opts)
    raise PreconditionError(
        "quantitative solving of mixed max/min systems is supported only "
        "through certify_pair"
    )


def solve_lfp(system, opts: SolveOptions = SolveOptions()) -> SolveReport:
    """LFP of a PPS / max / min system: remove value-0 and value-1
    coordinates, then rounded Newton iteration from zero.

    Value-1 detection for max/min systems uses the bounded
    policy-enumeration oracle.
    """
    snf = system if isinstance(system, SnfSystem) else to_snf(system)
    kind = snf.classify()
    if kind == "maxminpps":
        raise PreconditionError("LFP solving of mixed max/min systems is out of scope")
    zeros = lfp_zero_set(snf)
    if kind == "pps":
        ones = lfp_one_set_pps(snf)
    else:
        ones = lfp_one_set_bounded(snf, opts.enumeration_budget)
    one_value = Fraction(1) if opts.mode == "exact" else 1.0
    zero_value = Fraction(0) if opts.mode == "exact" else 0.0
    prune1 = remove_one_vars(snf, ones)
    zeros_res = frozenset(prune1.old_to_new()[z] for z in zeros)
    prune2 = remove_zero_vars(prune1.system, zeros_res)
    res = prune2.system
    witnesses: dict[str, Policy] = {}
    if res.n == 0:
        vec1 = prune2.lift_vector([], zero_value)
        full = prune1.lift_vector(vec1, one_value)
        return _finish(snf, opts, "lfp", full, None, None, witnesses, ones, zeros)
    h = _pick_h(opts, encoding_size(res))
    strategy = "lp" if res.m_vars(MIN_PLAYER) else opts.operator_strategy
    loop = _run_rounded(res, opts, h, lambda y: gnm_operator(res, y, strategy=strategy))
    vec1 = prune2.lift_vector(list(loop.value), zero_value)
    full = prune1.lift_vector(vec1, one_value)
    if loop.last_policy is not None and loop.last_policy.choices:
        lifted = _lift_policy(loop.last_policy, prune2.survivors)
        witnesses["lfp_policy"] = _lift_policy(lifted, prune1.survivors)
    survivors = tuple(prune1.survivors[prune2.survivors[i]] for i in range(res.n))
    return _finish(snf, opts, "lfp", full, h, loop, witnesses, ones, zeros,
                   survivors)


# ---------------------------------------------------------------------------
# Certificates


@dataclass
class CertifyOutcome:
    accepted: bool
    value: ValueVector | None
    reason: str | None
    gap: object | None = None
    v_sigma: ValueVector | None = None
    v_tau: ValueVector | None = None
    ldf_witness: frozenset[int] | None = None

    @property
    def rejected(self) -> bool:
        return not self.accepted


def certify_pair(
    system,
    sigma: Policy,
    tau: Policy,
    epsilon,
    opts: SolveOptions | None = None,
) -> CertifyOutcome:
    """Verify a guessed policy pair and output a certified value vector.

    Rejects when tau is not linear-degeneracy-free, when the enumeration
    oracle finds certain-extinction coordinates under tau (or runs out of
    budget), or when the two one-sided approximations disagree by more than
    epsilon/2.  Acceptance guarantees the output is within epsilon of the
    exact fixed point; a wrong accept is impossible.
    """
    eps = _frac(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    base = opts or SolveOptions(mode="exact")
    inner = replace(base, epsilon=eps / 2, certified=True, keep_trace=False)

    if isinstance(system, SnfSystem):
        snf = system
        sigma_snf, tau_snf = sigma, tau
    else:
        snf = to_snf(system)
        sigma_snf = policy_from_original(snf, sigma)
        tau_snf = policy_from_original(snf, tau)
    if not (sigma_snf.is_deterministic and tau_snf.is_deterministic):
        raise PolicyError("certification requires deterministic policies")

    ones = gfp_one_set(snf)
    prune = remove_one_vars(snf, ones.one_set)
    res = prune.system
    one_value = Fraction(1) if inner.mode == "exact" else 1.0

    def restrict(policy: Policy) -> Policy:
        new_of = prune.old_to_new()
        kept = {
            new_of[v]: c
            for v, c in policy.choices
            if v not in prune.removed and isinstance(res.forms[new_of[v]], FormM)
        }
        return Policy.of(policy.player, kept)

    if res.n == 0:
        value = ValueVector(inner.mode, tuple([one_value] * snf.n))
        return CertifyOutcome(True, value, None, gap=0)

    sigma_r = restrict(sigma_snf)
    tau_r = restrict(tau_snf)

    ldf_ok, witness = is_ldf(res, tau_r)
    if not ldf_ok:
        full_witness = frozenset(prune.survivors[i] for i in witness)
        return CertifyOutcome(False, None, "min policy is not LDF",
                              ldf_witness=full_witness)

    min_side = apply_policy_snf(res, sigma=sigma_r)
    v_sigma = solve_gfp_minpps(min_side, inner).value

    max_side = apply_policy_snf(res, tau=tau_r)
    try:
        tau_ones = lfp_one_set_bounded(max_side, base.enumeration_budget)
    except Exception as exc:  # EnumerationBudgetExceeded
        from .errors import EnumerationBudgetExceeded

        if isinstance(exc, EnumerationBudgetExceeded):
            return CertifyOutcome(False, None, "enumeration budget exceeded")
        raise
    if tau_ones:
        return CertifyOutcome(
            False, None,
            "min policy admits certain-extinction coordinates "
            f"{sorted(res.names[i] for i in tau_ones)}",
        )
    v_tau = solve_lfp(max_side, inner).value

    gap = _sup_diff(v_sigma, v_tau)
    half = eps / 2 if inner.mode == "exact" else float(eps / 2)
    if gap > half:
        return CertifyOutcome(False, None, f"value gap {gap} exceeds epsilon/2",
                              gap=gap, v_sigma=v_sigma, v_tau=v_tau)
    full = prune.lift_vector(list(v_sigma), one_value)
    return CertifyOutcome(True, ValueVector(inner.mode, tuple(full)), None,
                          gap=gap, v_sigma=v_sigma, v_tau=v_tau)
