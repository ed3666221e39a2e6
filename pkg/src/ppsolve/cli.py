"""Command-line front end.

Exit codes: 0 success, 1 validation or parse error, 2 solver fault,
3 certificate rejection.  Numeric output is printed as a 15-significant-
digit decimal, followed by the exact rational in exact mode.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import sim, textio
from .bmdp import (
    Population,
    build_simulation_strategy,
    qualitative_reach,
    reachability_values,
    to_nonreach_pps,
)
from .errors import (
    ParseError,
    PolicyError,
    PpsolveError,
    PreconditionError,
    SolverFault,
    ValidationError,
)
from .gnm import SolveOptions, certify_pair, solve_gfp, solve_lfp
from .policies import (
    eps_optimal_deterministic_minpps,
    eps_optimal_policy_maxpps_gfp,
    eps_optimal_randomized_minpps,
)
from .qualitative import gfp_one_set, gfp_zero_set, remove_one_vars
from .snf import policy_to_original, to_snf
from .system import MAX_PLAYER, MIN_PLAYER, ValueVector, _frac

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_REJECTED = 3


def _fmt(value, exact: bool) -> str:
    decimal = f"{float(value):.15g}"
    if exact and isinstance(value, Fraction):
        return f"{decimal} ({value})"
    return decimal


def _eps(text: str) -> Fraction:
    eps = _frac(text)
    if eps <= 0:
        raise argparse.ArgumentTypeError("epsilon must be positive")
    return eps


def _options(args) -> SolveOptions:
    return SolveOptions(
        mode=args.mode,
        epsilon=getattr(args, "eps", Fraction(1, 10**9)),
        certified=getattr(args, "certified", False),
    )


def _print_kv(pairs) -> None:
    for key, value in pairs:
        print(f"{key}={value}")


def _load_system(path: Path):
    text = path.read_text()
    if path.suffix == ".bmdp":
        model = textio.parse_bmdp(text)
        pps, _ = to_nonreach_pps(model)
        return pps
    return textio.parse_pps(text)


def _cmd_solve(args) -> int:
    pps = _load_system(Path(args.file))
    snf = to_snf(pps)
    opts = _options(args)
    if snf.classify() == "maxminpps":
        ones = gfp_one_set(snf)
        print("mixed max/min system: quantitative solving is certification-only")
        print("value-1 variables:", " ".join(snf.names[i] for i in sorted(ones.one_set)) or "(none)")
        prune = remove_one_vars(snf, ones.one_set)
        if prune.system.n:
            zres = gfp_zero_set(prune.system)
            zero = sorted(prune.survivors[i] for i in zres.zero_set)
        else:
            zero = []
        print("value-0 variables:", " ".join(snf.names[i] for i in zero) or "(none)")
        print("use 'certify' with a policy pair for values")
        return EXIT_OK
    report = solve_lfp(snf, opts) if args.lfp else solve_gfp(snf, opts)
    exact = report.mode == "exact"
    target = "LFP" if args.lfp else "GFP"
    print(f"{target} of {args.file} ({snf.classify()}, mode={report.mode}, "
          f"{'certified' if report.certified else 'practical'})")
    print(f"epsilon={_fmt(report.epsilon, False)} h={report.h} "
          f"iterations={report.iterations} converged={report.converged} "
          f"residual={_fmt(report.final_residual, False)} "
          f"policy_switches={report.inner_policy_switches}")
    for name, value in zip(report.names, report.value):
        print(f"  {name} = {_fmt(value, exact)}")
    if args.kv:
        _print_kv(
            [("mode", report.mode), ("epsilon", report.epsilon),
             ("h", report.h), ("iterations", report.iterations),
             ("converged", int(report.converged)),
             ("residual", float(report.final_residual))]
            + [(f"value.{n}", float(v)) for n, v in zip(report.names, report.value)]
        )
    if not report.converged:
        print("warning: iteration budget exhausted; values are best effort")
    return EXIT_OK


def _cmd_qualitative(args) -> int:
    path = Path(args.file)
    if path.suffix == ".bmdp":
        model = textio.parse_bmdp(path.read_text())
        qual = qualitative_reach(model)
        print(f"qualitative reachability for {args.file}")
        for name, cls in qual.classification.items():
            print(f"  {name}: reach {cls}")
        if qual.reach_zero_witness:
            print("avoid-target witness (reach value 0):", qual.reach_zero_witness)
        if qual.reach_positive_witness:
            print("positive-reach witness:", qual.reach_positive_witness)
        return EXIT_OK
    pps = textio.parse_pps(path.read_text())
    snf = to_snf(pps)
    ones = gfp_one_set(snf)
    prune = remove_one_vars(snf, ones.one_set)
    if prune.system.n:
        zres = gfp_zero_set(prune.system)
        zero = sorted(prune.survivors[i] for i in zres.zero_set)
        tau_star = zres.tau_star
    else:
        zero, tau_star = [], None
    print(f"one set (GFP value 1): "
          f"{{{', '.join(snf.names[i] for i in sorted(ones.one_set))}}}")
    print(f"zero set (GFP value 0): {{{', '.join(snf.names[i] for i in zero)}}}")
    print("# max witness (keeps one set at 1)")
    print(textio.serialize_policy(ones.max_witness, snf.names), end="")
    print("# min witness (forces the rest below 1)")
    print(textio.serialize_policy(ones.min_witness, snf.names), end="")
    if tau_star is not None and zero:
        print("# zero-set policy (drives the zero set to 0)")
        print(textio.serialize_policy(tau_star, prune.system.names), end="")
    return EXIT_OK


def _cmd_reach(args) -> int:
    model = textio.parse_bmdp(Path(args.file).read_text())
    report = reachability_values(
        model, args.eps, _options(args), threshold_cap=args.threshold_cap
    )
    exact = args.mode == "exact"
    if report.reach_values is None:
        print("two-player game: qualitative classification only")
        for name, cls in report.qualitative.classification.items():
            print(f"  {name}: reach {cls}")
        for note in report.notes:
            print(f"note: {note}")
        return EXIT_OK
    print(f"reachability values for {args.file} (eps={_fmt(args.eps, False)})")
    for name in model.type_names:
        cls = report.qualitative.classification[name]
        print(f"  {name} = {_fmt(report.reach_values[name], exact)}  [{cls}]")
    sr = report.solve_report
    print(f"mode={sr.mode} h={sr.h} iterations={sr.iterations} "
          f"residual={_fmt(sr.final_residual, False)}")
    written = []
    if args.strategy_out:
        out_dir = Path(args.strategy_out)
        out_dir.mkdir(parents=True, exist_ok=True)
        pps, vmap = to_nonreach_pps(model)
        snf = report.qualitative.snf
        for key, descriptor in report.strategies.items():
            strategy = build_simulation_strategy(model, vmap, snf, descriptor)
            dest = out_dir / f"{Path(args.file).stem}.{key}.strat"
            dest.write_text(textio.serialize_strategy(model, strategy))
            written.append(str(dest))
    for key, actions in report.action_strategies.items():
        print(f"strategy {key}: {actions}")
    for dest in written:
        print(f"wrote {dest}")
    if args.kv:
        _print_kv((f"reach.{n}", float(report.reach_values[n]))
                  for n in model.type_names)
    return EXIT_OK


def _cmd_policy(args) -> int:
    path = Path(args.file)
    opts = _options(args)
    if path.suffix == ".bmdp":
        model = textio.parse_bmdp(path.read_text())
        pps, vmap = to_nonreach_pps(model)
    else:
        model, vmap = None, None
        pps = textio.parse_pps(path.read_text())
    snf = to_snf(pps)
    kind = args.kind
    if kind in ("threshold-switch", "queen-worker") and model is None:
        print("error: this strategy kind needs a .bmdp model", file=sys.stderr)
        return EXIT_VALIDATION
    if kind == "min-deterministic":
        policy = eps_optimal_deterministic_minpps(snf, args.eps, opts)
        text = textio.serialize_policy(policy_to_original(snf, policy), pps.names)
    elif kind == "min-randomized":
        descriptor = eps_optimal_randomized_minpps(snf, args.eps, opts, verify=False)
        text = textio.serialize_policy(
            policy_to_original(snf, descriptor.policy), pps.names
        )
    elif kind == "max-deterministic":
        policy, _ = eps_optimal_policy_maxpps_gfp(snf, args.eps, opts)
        text = textio.serialize_policy(policy_to_original(snf, policy), pps.names)
    else:
        from .policies import almost_sure_reach_strategy, nonstatic_threshold_strategy

        if kind == "threshold-switch":
            descriptor = nonstatic_threshold_strategy(
                snf, args.eps, opts, threshold_cap=args.threshold_cap
            )
        else:
            descriptor = almost_sure_reach_strategy(snf)
        strategy = build_simulation_strategy(model, vmap, snf, descriptor)
        text = textio.serialize_strategy(model, strategy)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


def _cmd_certify(args) -> int:
    pps = textio.parse_pps(Path(args.file).read_text())
    sigma = textio.parse_policy(Path(args.sigma).read_text(), pps.names, MAX_PLAYER)
    tau = textio.parse_policy(Path(args.tau).read_text(), pps.names, MIN_PLAYER)
    opts = SolveOptions(mode=args.mode, certified=True)
    outcome = certify_pair(pps, sigma, tau, args.eps, opts)
    if not outcome.accepted:
        print(f"REJECT: {outcome.reason}")
        if outcome.ldf_witness:
            snf = to_snf(pps)
            print("closed-set witness:",
                  " ".join(snf.names[i] for i in sorted(outcome.ldf_witness)))
        return EXIT_REJECTED
    snf = to_snf(pps)
    exact = args.mode == "exact"
    print(f"ACCEPT (gap {_fmt(outcome.gap, False)} <= eps/2)")
    for name, value in zip(snf.names, outcome.value):
        print(f"  {name} = {_fmt(value, exact)}")
    return EXIT_OK


def _parse_population(text: str, model) -> Population:
    counts: dict[int, int] = {}
    for part in text.split(","):
        name, eq, count = part.partition("=")
        if not eq:
            raise ParseError(f"expected 'Type=count', got {part!r}")
        name = name.strip()
        if name not in model.type_names:
            raise ParseError(f"unknown type {name!r}")
        counts[model.type_names.index(name)] = int(count)
    return Population.of(counts)


def _cmd_simulate(args) -> int:
    model = textio.parse_bmdp(Path(args.file).read_text())
    strategy = textio.parse_strategy(Path(args.strategy).read_text(), model)
    if args.initial:
        mu = _parse_population(args.initial, model)
    else:
        first = next(
            t for t in range(model.n_types) if t not in model.targets
        )
        mu = Population.of({first: 1})
    config = sim.RunConfig(
        seed=args.seed,
        runs=args.runs,
        max_generations=args.max_gen,
        max_population=args.max_pop,
    )
    estimate = sim.estimate_reach(model, strategy, mu, config)
    rows = sim.outcome_rows(estimate.outcomes)
    lines = ["run,verdict,generations,peak"]
    lines += [f"{r},{v},{g},{p}" for r, v, g, p in rows]
    csv_text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(csv_text)
        print(f"wrote {args.out}")
    else:
        print(csv_text, end="")
    print(f"# reached={estimate.counts['reached']} "
          f"extinct={estimate.counts['extinct']} "
          f"censored={estimate.counts['censored']} runs={args.runs}", file=sys.stderr)
    print(f"# p_hat={estimate.p_hat:.6f} "
          f"wilson95=[{estimate.wilson_low:.6f}, {estimate.wilson_high:.6f}] "
          f"censor_fraction={estimate.censor_fraction:.6f} "
          f"bracket=[{estimate.bracket[0]:.6f}, {estimate.bracket[1]:.6f}]",
          file=sys.stderr)
    return EXIT_OK


def _cmd_convert(args) -> int:
    model = textio.parse_bmdp(Path(args.file).read_text())
    pps, _ = to_nonreach_pps(model)
    print(textio.serialize_pps(pps), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppsolve",
        description="Fixed points of probabilistic min/max polynomial systems "
                    "and reachability for branching MDPs/games.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, eps_default="1/1000000000"):
        p.add_argument("--eps", type=_eps, default=_eps(eps_default),
                       help="target accuracy (rational or decimal)")
        p.add_argument("--mode", choices=("exact", "float"), default="float")

    p = sub.add_parser("solve", help="solve the GFP (or LFP) of a system")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--gfp", action="store_true", default=True)
    group.add_argument("--lfp", action="store_true", default=False)
    common(p)
    p.add_argument("--certified", action="store_true",
                   help="exact rounding schedule with from-below guarantee")
    p.add_argument("--kv", action="store_true", help="machine-readable key=value lines")
    p.add_argument("file")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("qualitative", help="value-0/value-1 analysis with witnesses")
    p.add_argument("file")
    p.set_defaults(func=_cmd_qualitative, mode="float")

    p = sub.add_parser("reach", help="reachability values of a branching model")
    common(p)
    p.add_argument("--threshold-cap", type=int, default=None,
                   help="clamp the switch threshold for simulatability")
    p.add_argument("--strategy-out", default=None,
                   help="directory to write .strat files")
    p.add_argument("--kv", action="store_true")
    p.add_argument("file")
    p.set_defaults(func=_cmd_reach)

    p = sub.add_parser("policy", help="compute an epsilon-optimal policy/strategy")
    common(p, eps_default="1/100")
    p.add_argument("--kind", required=True,
                   choices=("min-deterministic", "min-randomized",
                            "max-deterministic", "threshold-switch", "queen-worker"))
    p.add_argument("--threshold-cap", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("file")
    p.set_defaults(func=_cmd_policy)

    p = sub.add_parser("certify", help="verify a policy pair and output values")
    common(p, eps_default="1/1000")
    p.set_defaults(mode="exact")
    p.add_argument("--sigma", required=True, help="max-player .pol file")
    p.add_argument("--tau", required=True, help="min-player .pol file")
    p.add_argument("file")
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("simulate", help="Monte Carlo runs under a strategy file")
    p.add_argument("--runs", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-gen", type=int, default=1000)
    p.add_argument("--max-pop", type=int, default=100000)
    p.add_argument("--strategy", required=True)
    p.add_argument("--initial", default=None, help='e.g. "A=1,B=2"')
    p.add_argument("--out", default=None, help="CSV output path")
    p.add_argument("file")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("convert", help="emit the equation system of a .bmdp model")
    p.add_argument("file")
    p.set_defaults(func=_cmd_convert)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SolverFault, PreconditionError, PolicyError, PpsolveError) as exc:
        print(f"solver fault: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
