"""Text formats: equation systems (.pps), branching models (.bmdp),
policies (.pol), and simulator strategies (.strat).

All rationals are parsed exactly; decimals convert to exact fractions.
Lines starting with '#' (or trailing '# ...' fragments) are comments.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .errors import ParseError, ValidationError
from .bmdp import RANDOM, REACH_MAX, REACH_MIN, Bssg, Rule, validate_bssg
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
    validate,
)

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_']*$")
_NUMBER = re.compile(r"^\d+(/\d+)?$|^\d*\.\d+$|^\d+\.$")


def _strip(line: str) -> str:
    if "#" in line:
        line = line[: line.index("#")]
    return line.strip()


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if line:
            yield lineno, line


def _rational(token: str, lineno: int) -> Fraction:
    token = token.strip()
    if not _NUMBER.match(token):
        raise ParseError(f"expected a number, got {token!r}", lineno)
    return Fraction(token)


# ---------------------------------------------------------------------------
# .pps


def _parse_term(term: str, var_index: dict[str, int], lineno: int) -> Monomial | Fraction:
    """One product of numeric factors and powers; returns the constant when
    no variable occurs."""
    coeff = Fraction(1)
    exponents: dict[int, int] = {}
    factors = [f.strip() for f in term.split("*")]
    if any(not f for f in factors):
        raise ParseError("empty factor in term", lineno)
    for factor in factors:
        if _NUMBER.match(factor):
            coeff *= Fraction(factor)
            continue
        name, _, power = factor.partition("^")
        name = name.strip()
        if name not in var_index:
            raise ParseError(f"unknown variable {name!r}", lineno)
        if power:
            try:
                e = int(power)
            except ValueError:
                raise ParseError(f"bad exponent {power!r}", lineno) from None
            if e <= 0:
                raise ParseError("exponents must be positive", lineno)
        else:
            e = 1
        v = var_index[name]
        exponents[v] = exponents.get(v, 0) + e
    if not exponents:
        return coeff
    if coeff == 0:
        return Fraction(0)
    return Monomial(coeff, tuple(exponents.items()))


def _parse_expr(expr: str, var_index: dict[str, int], lineno: int) -> ProbPolynomial:
    expr = expr.strip()
    if not expr:
        raise ParseError("empty expression", lineno)
    if expr == "0":
        return ProbPolynomial(())
    monomials = []
    constant = Fraction(0)
    for term in expr.split("+"):
        term = term.strip()
        if not term:
            raise ParseError("empty term (stray '+')", lineno)
        parsed = _parse_term(term, var_index, lineno)
        if isinstance(parsed, Fraction):
            constant += parsed
        else:
            monomials.append(parsed)
    if constant:
        monomials.append(Monomial(constant, ()))
    return ProbPolynomial(tuple(monomials))


def parse_pps(text: str) -> MaxMinPps:
    """Parse an equation system; raises ParseError on syntax problems and
    ValidationError (verbatim diagnostics) on non-probabilistic input."""
    entries: list[tuple[int, str, str]] = []
    names: list[str] = []
    for lineno, line in _lines(text):
        name, eq, rhs = line.partition("=")
        if not eq:
            raise ParseError("expected 'name = expression'", lineno)
        name = name.strip()
        if not _NAME.match(name):
            raise ParseError(f"bad variable name {name!r}", lineno)
        if name in names:
            raise ParseError(f"duplicate equation for {name!r}", lineno)
        names.append(name)
        entries.append((lineno, name, rhs.strip()))
    if not entries:
        raise ParseError("no equations found", 0)
    var_index = {n: i for i, n in enumerate(names)}
    equations = []
    for lineno, name, rhs in entries:
        m = re.match(r"^(min|max)\s*\{(.*)\}$", rhs, re.DOTALL)
        if m:
            kind = MINOF if m.group(1) == "min" else MAXOF
            body = m.group(2).strip()
            if not body:
                raise ParseError(f"empty {m.group(1)}", lineno)
            branches = tuple(
                _parse_expr(part, var_index, lineno) for part in body.split(";")
            )
            equations.append(Equation(kind, branches))
        else:
            equations.append(Equation(SINGLE, (_parse_expr(rhs, var_index, lineno),)))
    pps = MaxMinPps(tuple(equations), tuple(names))
    violations = validate(pps)
    if violations:
        raise ValidationError(violations)
    return pps


def _format_monomial(m: Monomial, names) -> str:
    parts = []
    if m.coefficient != 1 or not m.exponents:
        parts.append(str(m.coefficient))
    for v, e in m.exponents:
        parts.append(names[v] if e == 1 else f"{names[v]}^{e}")
    return " * ".join(parts)


def format_polynomial(p: ProbPolynomial, names) -> str:
    if not p.monomials:
        return "0"
    return " + ".join(_format_monomial(m, names) for m in p.monomials)


def serialize_pps(pps: MaxMinPps) -> str:
    lines = []
    for name, eq in zip(pps.names, pps.equations):
        if eq.kind == SINGLE:
            rhs = format_polynomial(eq.branches[0], pps.names)
        else:
            body = " ; ".join(format_polynomial(b, pps.names) for b in eq.branches)
            rhs = f"{eq.kind}{{ {body} }}"
        lines.append(f"{name} = {rhs}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# .bmdp


_RULE_LINE = re.compile(r"^(\S+)\s*-(\S+)->\s*(.*)$")

EMPTY_TOKEN = "<empty>"


def parse_bmdp(text: str) -> Bssg:
    """Parse a branching model; rule lines may repeat a (type, action) pair
    to append alternatives.  Validation violations are raised verbatim."""
    type_names: list[str] = []
    owners: list[str] = []
    targets: list[str] = []
    rule_lines: list[tuple[int, str, str, str]] = []
    for lineno, line in _lines(text):
        if line.startswith("type "):
            m = re.match(r"^type\s+(\S+)\s*:\s*(max|min|random)$", line)
            if not m:
                raise ParseError("expected 'type NAME : max|min|random'", lineno)
            name = m.group(1)
            if name in type_names:
                raise ParseError(f"duplicate type {name!r}", lineno)
            type_names.append(name)
            owners.append({"max": REACH_MAX, "min": REACH_MIN, "random": RANDOM}[m.group(2)])
        elif line.startswith("target"):
            targets.extend(line.split()[1:])
        else:
            m = _RULE_LINE.match(line)
            if not m:
                raise ParseError("expected a type, target, or rule line", lineno)
            rule_lines.append((lineno, m.group(1), m.group(2), m.group(3)))
    index = {n: i for i, n in enumerate(type_names)}
    for t in targets:
        if t not in index:
            raise ParseError(f"target {t!r} is not a declared type", 0)
    actions: list[list[str]] = [[] for _ in type_names]
    rules: list[list[list[Rule]]] = [[] for _ in type_names]
    for lineno, tname, action, rest in rule_lines:
        if tname not in index:
            raise ParseError(f"unknown type {tname!r}", lineno)
        t = index[tname]
        if action not in actions[t]:
            actions[t].append(action)
            rules[t].append([])
        a = actions[t].index(action)
        for alt in rest.split("|"):
            prob_text, colon, kids_text = alt.partition(":")
            if not colon:
                raise ParseError("expected 'prob : offspring'", lineno)
            prob = _rational(prob_text, lineno)
            kids_text = kids_text.strip()
            if kids_text == EMPTY_TOKEN:
                offspring: tuple[int, ...] = ()
            else:
                kids = kids_text.split()
                if not kids:
                    raise ParseError("empty offspring (use <empty>)", lineno)
                for k in kids:
                    if k not in index:
                        raise ParseError(f"unknown type {k!r} in offspring", lineno)
                offspring = tuple(index[k] for k in kids)
            rules[t][a].append(Rule(prob, offspring))
    model = Bssg(
        tuple(type_names),
        tuple(owners),
        tuple(tuple(a) for a in actions),
        tuple(tuple(tuple(r) for r in t_rules) for t_rules in rules),
        frozenset(index[t] for t in targets),
    )
    violations = validate_bssg(model)
    if violations:
        raise ValidationError(violations)
    return model


def serialize_bmdp(model: Bssg) -> str:
    owner_word = {REACH_MAX: "max", REACH_MIN: "min", RANDOM: "random"}
    lines = [
        f"type {name} : {owner_word[model.owners[i]]}"
        for i, name in enumerate(model.type_names)
    ]
    if model.targets:
        lines.append("target " + " ".join(model.type_names[t] for t in sorted(model.targets)))
    for t in range(model.n_types):
        for a, rules in enumerate(model.rules[t]):
            alts = []
            for r in rules:
                kids = " ".join(model.type_names[o] for o in r.offspring) or EMPTY_TOKEN
                alts.append(f"{r.probability} : {kids}")
            if alts:
                lines.append(f"{model.type_names[t]} -{model.actions[t][a]}-> " + " | ".join(alts))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# .pol (equation-level policies, variables by name)


def parse_policy(text: str, names, player: str | None = None) -> Policy:
    """Lines 'variable = branch' or 'variable = { branch: weight, ... }';
    an optional 'player: max|min' header overrides the argument."""
    index = {n: i for i, n in enumerate(names)}
    choices: dict[int, object] = {}
    for lineno, line in _lines(text):
        m = re.match(r"^player\s*:\s*(max|min)$", line)
        if m:
            player = MAX_PLAYER if m.group(1) == "max" else MIN_PLAYER
            continue
        name, eq, rhs = line.partition("=")
        if not eq:
            raise ParseError("expected 'variable = choice'", lineno)
        name = name.strip()
        if name not in index:
            raise ParseError(f"unknown variable {name!r}", lineno)
        rhs = rhs.strip()
        if rhs.startswith("{"):
            if not rhs.endswith("}"):
                raise ParseError("unterminated distribution", lineno)
            dist = []
            for part in rhs[1:-1].split(","):
                b, colon, w = part.partition(":")
                if not colon:
                    raise ParseError("expected 'branch: weight'", lineno)
                dist.append((int(b.strip()), _rational(w, lineno)))
            choices[index[name]] = tuple(dist)
        else:
            try:
                choices[index[name]] = int(rhs)
            except ValueError:
                raise ParseError(f"bad branch index {rhs!r}", lineno) from None
    if player is None:
        raise ParseError("policy player not specified (add 'player: max|min')", 0)
    return Policy.of(player, choices)


def serialize_policy(policy: Policy, names) -> str:
    lines = [f"player: {policy.player}"]
    for var, choice in policy.choices:
        if isinstance(choice, int):
            lines.append(f"{names[var]} = {choice}")
        else:
            body = ", ".join(f"{b}: {w}" for b, w in choice)
            lines.append(f"{names[var]} = {{ {body} }}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# .strat (simulator strategies, types and actions by name)


def parse_strategy(text: str, model: Bssg):
    """Strategy file with a 'kind:' header.

    static kinds list 'Type = action' (or distributions) at top level;
    threshold-switch uses [before]/[after] sections plus 'threshold:';
    queen-worker uses [queen]/[worker] sections plus 'queen-types:'.
    """
    from . import sim

    index = {n: i for i, n in enumerate(model.type_names)}
    kind = None
    threshold = None
    queen_types: list[int] = []
    section = "top"
    sections: dict[str, dict[int, object]] = {"top": {}}

    def parse_choice(t: int, rhs: str, lineno: int):
        rhs = rhs.strip()
        action_names = list(model.actions[t])
        if rhs.startswith("{"):
            if not rhs.endswith("}"):
                raise ParseError("unterminated distribution", lineno)
            dist = []
            for part in rhs[1:-1].split(","):
                a, colon, w = part.partition(":")
                if not colon:
                    raise ParseError("expected 'action: weight'", lineno)
                a = a.strip()
                if a not in action_names:
                    raise ParseError(f"unknown action {a!r}", lineno)
                dist.append((action_names.index(a), _rational(w, lineno)))
            return tuple(dist)
        if rhs not in action_names:
            raise ParseError(f"unknown action {rhs!r}", lineno)
        return action_names.index(rhs)

    for lineno, line in _lines(text):
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            sections.setdefault(section, {})
            continue
        key, colon, value = line.partition(":")
        if colon and key.strip() in ("kind", "threshold", "queen-types", "epsilon", "provenance"):
            key, value = key.strip(), value.strip()
            if key == "kind":
                kind = value
            elif key == "threshold":
                threshold = int(value)
            elif key == "queen-types":
                for name in value.split():
                    if name not in index:
                        raise ParseError(f"unknown type {name!r}", lineno)
                    queen_types.append(index[name])
            continue
        name, eq, rhs = line.partition("=")
        if not eq:
            raise ParseError("expected 'Type = action'", lineno)
        name = name.strip()
        if name not in index:
            raise ParseError(f"unknown type {name!r}", lineno)
        t = index[name]
        sections[section][t] = parse_choice(t, rhs, lineno)

    if kind in ("static", "static-deterministic", "static-randomized"):
        return sim.StaticStrategy(sections["top"])
    if kind == "threshold-switch":
        if threshold is None:
            raise ParseError("threshold-switch needs 'threshold:'", 0)
        return sim.ThresholdStrategy(
            sections.get("before", {}), sections.get("after", {}), threshold
        )
    if kind == "queen-worker":
        if not queen_types:
            raise ParseError("queen-worker needs 'queen-types:'", 0)
        return sim.QueenWorkerStrategy(
            sections.get("queen", {}), sections.get("worker", {}),
            frozenset(queen_types),
        )
    raise ParseError(f"unknown strategy kind {kind!r}", 0)


def serialize_strategy(model: Bssg, strategy) -> str:
    from . import sim

    def choice_lines(choices: dict[int, object]) -> list[str]:
        out = []
        for t in sorted(choices):
            names = model.actions[t]
            c = choices[t]
            if isinstance(c, int):
                out.append(f"{model.type_names[t]} = {names[c]}")
            else:
                body = ", ".join(f"{names[a]}: {w}" for a, w in c)
                out.append(f"{model.type_names[t]} = {{ {body} }}")
        return out

    if isinstance(strategy, sim.StaticStrategy):
        return "\n".join(["kind: static"] + choice_lines(strategy.choices)) + "\n"
    if isinstance(strategy, sim.ThresholdStrategy):
        lines = ["kind: threshold-switch", f"threshold: {strategy.threshold}", "[before]"]
        lines += choice_lines(strategy.before)
        lines.append("[after]")
        lines += choice_lines(strategy.after)
        return "\n".join(lines) + "\n"
    if isinstance(strategy, sim.QueenWorkerStrategy):
        lines = [
            "kind: queen-worker",
            "queen-types: " + " ".join(
                model.type_names[t] for t in sorted(strategy.queen_types)
            ),
            "[queen]",
        ]
        lines += choice_lines(strategy.queen)
        lines.append("[worker]")
        lines += choice_lines(strategy.worker)
        return "\n".join(lines) + "\n"
    raise TypeError(f"cannot serialize {strategy!r}")
