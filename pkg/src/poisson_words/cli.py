"""Command-line entry point: ``poisson-words <subcommand> [flags]``.

Exit codes: 0 success, 1 validation error, 2 guard trip (a partial report is
still written), 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import analytic
from .analytic import ConditionalPoisson, EntropyExponentShifted, EntropyScaled, Explicit, ModelParams
from .config import KEYS, parse_config_file, parse_int_list, parse_seeds
from .errors import ConfigError, DomainError, GuardError, InvariantError
from .experiments import ExperimentSpec, run

EXIT_OK, EXIT_VALIDATION, EXIT_GUARD, EXIT_INVARIANT = 0, 1, 2, 3

SUBCOMMANDS = {
    "annealed-exact": ("AnnealedExact", "exact annealed match-count law per k"),
    "annealed-mc": ("AnnealedMC", "Monte Carlo of the non-intersecting model vs the exact law"),
    "quenched": ("QuenchedRegime", "quenched count law of a Ber^k(p) word in sampled prefixes"),
    "conditional-poisson": ("ConditionalPoisson", "exact fixed-weight quenched law vs Po(lambda_k)"),
    "non-poisson-witness": ("NonPoissonWitness", "pmf[1] vs the Poisson law matching pmf[0]"),
    "tv-bound": ("TvBound", "Stein-Chen TV bound, optionally vs Monte Carlo"),
    "concentration": ("ConcentrationSweep", "cross-seed dispersion of quenched statistics"),
}

ANALYTIC_FNS = ("entropy", "phi", "phi-p", "limit-atom", "match-prob", "n-k", "N-k")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise ConfigError(f"{self.prog}: {message}")


def _experiment_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", metavar="FILE", help="flat key = value file; flags override its entries")
    sp.add_argument("--p", type=float, help="p: probability of letter 1 in each Bernoulli letter")
    sp.add_argument("--k", help="k: word length; comma list for several (e.g. 256,1024,4096)")
    rule = sp.add_argument_group("sequence-length rule N_k (give exactly one family)")
    rule.add_argument("--a", type=float, help="a: N_k = 2^(k H(p)) a^sqrt(k)")
    rule.add_argument("--delta", type=float, help="delta: N_k = 2^(k (H(p) + delta))")
    rule.add_argument("--c", type=float, help="c: target weight n_k = floor(p k - c sqrt(k)); with --lambda")
    rule.add_argument("--lambda", dest="lambda_", metavar="LAMBDA", type=float,
                      help="lambda: N_k = floor(lambda / q), q = p^n_k (1-p)^(k-n_k)")
    rule.add_argument("--n-k", dest="n_k", type=int, help="n_k: override the target weight")
    rule.add_argument("--N", type=int, help="N_k: explicit number of windows counted")
    sp.add_argument("--seeds", help="seeds: N (means 1..N), a..b, or comma list")
    sp.add_argument("--trials", type=int, help="Monte Carlo trials (tv-bound: sampled sequences)")
    sp.add_argument("--n-max", dest="n_max", type=int, help="largest count tabulated; the rest goes to the tail")
    sp.add_argument("--threads", type=int, help="worker threads (outputs do not depend on it)")
    sp.add_argument("--memory-mb", dest="memory_budget_mb", type=int, help="memory budget in MiB")
    sp.add_argument("--tolerance", type=float, help="verdict threshold (default depends on the experiment)")
    sp.add_argument("--mode", help="annealed-mc: fast|honest; witness: exact|quenched; tv-bound: brute|analytic")
    sp.add_argument("--out", metavar="CSV", help="write the CSV table here (default: stdout)")
    sp.add_argument("--json", metavar="JSON", help="write the full nested report here")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="poisson-words", description="Word occurrence counts in Bernoulli(p) sequences.")
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, doc) in SUBCOMMANDS.items():
        _experiment_flags(subs.add_parser(name, help=doc, description=doc))
    sp = subs.add_parser("analytic", help="evaluate one scalar function", description="evaluate one scalar function")
    sp.add_argument("--fn", required=True, choices=ANALYTIC_FNS,
                    help="entropy: H(p); phi: Phi(s); phi-p: Phi_p(s); limit-atom: Phi_p(-c) for a; "
                         "match-prob: (p^2+(1-p)^2)^k; n-k: target weight; N-k: sequence length")
    sp.add_argument("--p", type=float, help="p: Bernoulli bias")
    sp.add_argument("--s", type=float, help="s: argument of Phi / Phi_p")
    sp.add_argument("--k", type=int, help="k: word length")
    sp.add_argument("--a", type=float, help="a: entropy-scale factor")
    sp.add_argument("--delta", type=float, help="delta: entropy exponent shift (N-k)")
    sp.add_argument("--c", type=float, help="c: weight offset in n_k = floor(p k - c sqrt(k))")
    sp.add_argument("--lambda", dest="lambda_", metavar="LAMBDA", type=float, help="lambda: target Poisson mean (N-k)")
    sp.add_argument("--N", type=int, help="N_k: explicit length (N-k)")
    return parser


def _need(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise ConfigError(f"--{n.rstrip('_').replace('_', '-')} is required for --fn {args.fn}")


def _rule_from(values: dict):
    families = [f for f in ("a", "delta", "c_lambda", "N") if
                (f == "c_lambda" and ("c" in values or "lambda" in values)) or f in values]
    if len(families) != 1:
        raise ConfigError("give exactly one rule family: a | delta | c and lambda | N")
    fam = families[0]
    if fam == "a":
        return EntropyScaled(values["a"])
    if fam == "delta":
        return EntropyExponentShifted(values["delta"])
    if fam == "N":
        return Explicit(values["N"])
    if "c" not in values or "lambda" not in values:
        raise ConfigError("the conditional rule needs both c and lambda")
    return ConditionalPoisson(values["c"], values["lambda"], values.get("n_k"))


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def run_analytic(args) -> int:
    fn = args.fn
    if fn == "entropy":
        _need(args, "p")
        value = analytic.binary_entropy(args.p)
    elif fn == "phi":
        _need(args, "s")
        value = analytic.gaussian_cdf(args.s)
    elif fn == "phi-p":
        _need(args, "s", "p")
        value = analytic.gaussian_cdf_scaled(args.s, args.p)
    elif fn == "limit-atom":
        _need(args, "a", "p")
        value = analytic.limit_atom(args.a, args.p)
    elif fn == "match-prob":
        _need(args, "k", "p")
        value = analytic.match_prob(args.k, args.p)
    elif fn == "n-k":
        _need(args, "k", "p", "c")
        print(analytic.weight_floor(args.k, args.p, args.c))
        return EXIT_OK
    else:
        _need(args, "k", "p")
        vals = {"a": args.a, "delta": args.delta, "c": args.c, "lambda": args.lambda_, "N": args.N}
        rule = _rule_from({k: v for k, v in vals.items() if v is not None})
        print(analytic.resolve_regime(rule, ModelParams(args.p, args.k)))
        return EXIT_OK
    print(_fmt(value))
    return EXIT_OK


def effective_values(args) -> dict:
    """Config file entries overridden by any flag given on the command line."""
    values = parse_config_file(args.config) if args.config else {}
    flags = {
        "p": args.p,
        "k": parse_int_list(args.k) if args.k is not None else None,
        "a": args.a,
        "delta": args.delta,
        "c": args.c,
        "lambda": args.lambda_,
        "n_k": args.n_k,
        "N": args.N,
        "seeds": parse_seeds(args.seeds) if args.seeds is not None else None,
        "trials": args.trials,
        "n_max": args.n_max,
        "threads": args.threads,
        "memory_budget_mb": args.memory_budget_mb,
        "tolerance": args.tolerance,
        "mode": args.mode,
        "out": args.out,
        "json": args.json,
    }
    assert set(flags) <= set(KEYS)
    values.update({k: v for k, v in flags.items() if v is not None})
    return values


def spec_from_values(kind: str, values: dict) -> ExperimentSpec:
    if "experiment" in values and values["experiment"] not in (kind,):
        raise ConfigError(f"config is for experiment {values['experiment']!r}, subcommand runs {kind!r}")
    for key in ("p", "k"):
        if key not in values:
            raise ConfigError(f"missing required setting {key!r}")
    mode = values.get("mode", "default")
    if kind == "TvBound":
        mode = {"brute": "default", "analytic": "analytic", "default": "default"}.get(mode, mode)
    spec = ExperimentSpec(
        kind=kind,
        p=values["p"],
        rule=_rule_from(values),
        k_list=tuple(values["k"]),
        seeds=tuple(values.get("seeds", ())),
        trials=values.get("trials", 0),
        n_max=values.get("n_max", 20),
        threads=values.get("threads", 1),
        memory_budget_mb=values.get("memory_budget_mb", 4096),
        tolerance=values.get("tolerance"),
        mode=mode,
    )
    # model-level validation before any work starts
    for k in spec.k_list:
        if kind not in ("AnnealedExact", "NonPoissonWitness") or spec.mode == "quenched":
            ModelParams(spec.p, k)
    return spec


def _summary_lines(report) -> list[str]:
    lines = []
    for c in report.checks:
        value = c["value"]
        shown = f"{value:.6g}" if isinstance(value, float) else value
        if isinstance(value, list):
            shown = "[" + ", ".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in value) + "]"
        lines.append(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {shown} (threshold {c['threshold']})")
    for g in report.guards:
        lines.append(f"GUARD {g}")
    return lines


def run_experiment(command: str, args) -> int:
    kind = SUBCOMMANDS[command][0]
    values = effective_values(args)
    spec = spec_from_values(kind, values)
    echo = spec.to_dict()
    echo["out"], echo["json"] = values.get("out"), values.get("json")
    print("effective spec: " + json.dumps(echo, sort_keys=True), file=sys.stderr)
    report = run(spec)
    csv_text = report.to_csv()
    if values.get("out"):
        with open(values["out"], "w") as fh:
            fh.write(csv_text)
        for line in _summary_lines(report):
            print(line)
    else:
        sys.stdout.write(csv_text)
        for line in _summary_lines(report):
            print(line, file=sys.stderr)
    if values.get("json"):
        report.to_json(values["json"])
    return EXIT_GUARD if report.guards else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "analytic":
            return run_analytic(args)
        return run_experiment(args.command, args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except GuardError as exc:
        print(f"guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (InvariantError, AssertionError) as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
