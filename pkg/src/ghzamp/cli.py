"""Command-line front end: thresholds, bias curves, and single experiments.

Every emitted row names the module and operation that produced its numbers.
Output goes to ``--out`` if given, else to ``$GHZAMP_OUT_DIR/<name>.<format>``
when that variable is set, else to stdout.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import adversary, engine, extractor, ghz_core, randsource

OUT_DIR_ENV = "GHZAMP_OUT_DIR"
EXPERIMENTS = (
    "thresholds",
    "classical-bound",
    "honest-run",
    "resend-attack",
    "risking-attack",
    "extractor-bound",
    "appendix-bias",
)
# parameters each experiment reads; anything else given is a usage error
PARAMS = {
    "thresholds": set(),
    "classical-bound": set(),
    "honest-run": {"n", "mode", "trials"},
    "resend-attack": {"n", "mode", "trials"},
    "risking-attack": {"n"},
    "extractor-bound": {"n", "trials"},
    "appendix-bias": {"k", "s"},
}
REQUIRED = {
    "honest-run": {"n"},
    "resend-attack": {"n"},
    "risking-attack": {"n"},
    "extractor-bound": {"n", "trials"},
    "appendix-bias": {"k", "s"},
}


class UsageError(Exception):
    pass


def _num(x):
    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


def _row(module: str, operation: str, **values) -> dict:
    return {"module": module, "operation": operation, **{k: _num(v) for k, v in values.items()}}


# -- experiments ------------------------------------------------------------


def cmd_thresholds() -> list[dict]:
    t = adversary.THRESHOLDS
    roles = [
        ("r_trivial", t.r_trivial, "log2(sqrt 3)", "at or below: a single round is classically winnable"),
        ("r_max", t.r_max, "log2(10)/4", "at or below: the re-send attack cheats fully"),
        ("r_H", t.r_H, "log2(12)/4", "at or below: zero-error full cheating is possible"),
    ]
    return [
        _row("adversary", "Thresholds", name=name, value=round(v, 6), expression=expr, role=role)
        for name, v, expr, role in roles
    ]


def _bias_bound(eps: float, n: int) -> float:
    if eps == 0:
        return 0.5
    return adversary.cheat_bias_bound(adversary.THRESHOLDS.r_H + eps, n)


def _exact_cheat_bias(n: int, eps: float):
    """Zero-error attack bias on the flat augmented alternating source."""
    if n % 2 or n > engine.EXACT_MAX_ROUNDS or eps <= 0:
        return None
    try:
        src = adversary.augmented_alternating_source(n, eps)
    except ValueError:
        return None
    attack = adversary.zero_error_attack(src)
    return engine.run_exact(engine.ProtocolConfig(n, src, attack.devices())).bias


def cmd_bias_curve(ns, epsilons, exact: bool = True) -> list[dict]:
    rows = []
    for n in ns:
        for eps in epsilons:
            if eps < 0:
                raise UsageError("adversary.guess_success: epsilon must be >= 0")
            rate = adversary.THRESHOLDS.r_H + eps
            rows.append(
                _row(
                    "adversary",
                    "guess_success/cheat_bias_bound",
                    n=n,
                    epsilon=eps,
                    p_cheat_bound=adversary.guess_success(rate, n),
                    bias_bound=_bias_bound(eps, n),
                    exact_bias=_exact_cheat_bias(n, eps) if exact else None,
                )
            )
    return rows


def cmd_classical_bound() -> list[dict]:
    value, best = ghz_core.classical_win_value()
    return [
        _row(
            "ghz_core", "classical_win_value",
            value=str(value), value_float=value, strategies=len(ghz_core.all_local_strategies()),
            maximisers=len(best),
        )
    ]


def _run_report(kind, n, source, devices, mode, trials, seed, transcripts=None, keep=0):
    cfg = engine.ProtocolConfig(
        n, source, devices, mode="exact" if mode == "exact" else "montecarlo", trials=trials or 0, seed=seed
    )
    if mode == "exact":
        report = engine.run_exact(cfg)
        report.seed = seed
    else:
        if not trials:
            raise UsageError("engine.run_montecarlo: --trials must be positive")
        report = engine.run_montecarlo(cfg, transcripts=keep if transcripts else 0)
        if transcripts:
            with open(transcripts, "w", newline="") as fh:
                engine.write_transcripts_csv(report.transcripts, fh)
    op = "run_exact" if mode == "exact" else "run_montecarlo"
    return [_row("engine", op, experiment=kind, **report.as_dict())]


def cmd_run(args) -> list[dict]:
    kind = args.kind
    given = {k for k in ("n", "epsilon", "k", "s", "trials") if getattr(args, k) is not None}
    if args.mode is not None:
        given.add("mode")
    extra = given - PARAMS[kind]
    if extra:
        raise UsageError(f"{kind} does not take {', '.join('--' + e for e in sorted(extra))}")
    missing = REQUIRED.get(kind, set()) - given
    if missing:
        raise UsageError(f"{kind} requires {', '.join('--' + m for m in sorted(missing))}")
    mode = args.mode or "exact"
    seed = args.seed

    if kind == "thresholds":
        return cmd_thresholds()
    if kind == "classical-bound":
        return cmd_classical_bound()
    if kind == "honest-run":
        if args.n < 1:
            raise UsageError("engine.ProtocolConfig: n must be >= 1")
        if mode == "exact" and args.n > engine.EXACT_MAX_ROUNDS:
            raise UsageError(f"engine.run_exact: n must be <= {engine.EXACT_MAX_ROUNDS}")
        source = randsource.SourceTree.uniform(args.n) if mode == "exact" else _uniform_sampler(args.n)
        return _run_report(kind, args.n, source, engine.honest_devices(), mode, args.trials, seed,
                           args.transcripts, args.keep)
    if kind == "resend-attack":
        _even(args.n, "adversary.build_resend_tree")
        attack = adversary.build_resend_tree(args.n)
        rows = _run_report(kind, args.n, attack.tree, attack.devices(), mode, args.trials, seed,
                           args.transcripts, args.keep)
        rows[0]["source_rate"] = attack.tree.min_entropy_rate()
        return rows
    if kind == "risking-attack":
        _even(args.n, "adversary.build_risking_tree")
        risky = adversary.build_risking_tree(adversary.build_alternating_tree(args.n))
        report = engine.run_exact(engine.ProtocolConfig(args.n, risky.tree, risky.devices()))
        report.seed = seed
        rate = risky.tree.min_entropy_rate()
        return [
            _row(
                "engine", "run_exact", experiment=kind, **report.as_dict(),
                source_rate=rate, epsilon=rate - adversary.THRESHOLDS.r_H,
                non_abort=str(1 - report.abort_prob), p_guess=adversary.guess_success(rate, args.n),
            )
        ]
    if kind == "extractor-bound":
        return [cmd_extractor_bound(args.n, args.trials, seed)]
    if kind == "appendix-bias":
        return [cmd_appendix_bias(args.k, args.s)]
    raise UsageError(f"unknown experiment {kind!r}")


def _even(n, where):
    if n < 2 or n % 2:
        raise UsageError(f"{where}: n must be a positive even number")
    if n > adversary.TREE_CAP:
        raise UsageError(f"{where}: n must be <= {adversary.TREE_CAP}")


def _uniform_sampler(n):
    return lambda rng, size: rng.integers(0, 4, size=(size, n), dtype=np.int8)


def random_flat_pair(n: int, rng: np.random.Generator):
    """Random flat ``(A, B)`` over ``n`` bits with ``k_a + k_b >= n/2``."""
    while True:
        ka, kb = rng.integers(0, n + 1, size=2)
        if ka + kb >= n / 2:
            break
    dists = []
    for k in (ka, kb):
        support = rng.choice(2**n, size=2 ** int(k), replace=False)
        dists.append(randsource.CondDistribution.flat(n, support))
    return dists


def cmd_extractor_bound(n: int, trials: int, seed: int) -> dict:
    if not 1 <= n <= extractor.EXACT_CAP:
        raise UsageError(f"extractor.hadamard_bound_check: n must be in 1..{extractor.EXACT_CAP}")
    if trials < 1:
        raise UsageError("extractor.hadamard_bound_check: --trials must be positive")
    rng = np.random.default_rng(seed)
    worst_ratio, worst_distance, violations = 0.0, 0.0, 0
    for _ in range(trials):
        da, db = random_flat_pair(n, rng)
        (check,) = extractor.hadamard_bound_check(extractor.JointSource.independent(da, db))
        violations += not check.holds
        worst_distance = max(worst_distance, check.distance)
        worst_ratio = max(worst_ratio, check.distance / check.bound)
    return _row(
        "extractor", "hadamard_bound_check",
        n=n, pairs=trials, seed=seed, violations=violations,
        max_distance=worst_distance, max_distance_over_bound=worst_ratio,
    )


def cmd_appendix_bias(k: int, s: int) -> dict:
    if not 1 <= k <= adversary.BRUTEFORCE_CAP:
        raise UsageError(f"adversary.resend_bias_bruteforce: k must be in 1..{adversary.BRUTEFORCE_CAP}")
    if not 0 <= s <= k:
        raise UsageError("adversary.resend_bias_closed_form: need 0 <= s <= k")
    brute = adversary.resend_bias_bruteforce(k, range(1, s + 1))
    closed = adversary.resend_bias_closed_form(k, s)
    return _row(
        "adversary", "resend_bias_bruteforce",
        k=k, s=s, bias=str(brute), bias_float=brute, closed_form=str(closed), agree=brute == closed,
    )


# -- output -------------------------------------------------------------------


def render(name: str, params: dict, rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        doc = {"experiment": name, "params": params, "rows": rows}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    fields: list[str] = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: "" if r.get(k) is None else r.get(k) for k in fields})
    return buf.getvalue()


def _destination(out, name, fmt):
    if out:
        return out
    base = os.environ.get(OUT_DIR_ENV)
    if base:
        os.makedirs(base, exist_ok=True)
        return os.path.join(base, f"{name}.{fmt}")
    return None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ghzamp", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file (default: $%s/<name>.<format> or stdout)" % OUT_DIR_ENV)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("thresholds", parents=[common], help="the three rate thresholds")

    bc = sub.add_parser("bias-curve", parents=[common], help="cheating bounds over n and epsilon")
    bc.add_argument("--n", type=_int_list, required=True, help="comma-separated round counts")
    bc.add_argument("--epsilon", type=_float_list, required=True, help="comma-separated rate excess over r_H")
    bc.add_argument("--no-exact", action="store_true", help="skip exact attack evaluation")

    run = sub.add_parser("run", parents=[common], help="run one experiment")
    run.add_argument("kind", choices=EXPERIMENTS)
    run.add_argument("--n", type=int)
    run.add_argument("--epsilon", type=float)
    run.add_argument("--k", type=int)
    run.add_argument("--s", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--mode", choices=("exact", "mc"))
    run.add_argument("--transcripts", help="CSV file for Monte Carlo transcripts")
    run.add_argument("--keep", type=int, default=100, help="transcripts to keep (default 100)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "thresholds":
            name, params, rows = "thresholds", {"seed": args.seed}, cmd_thresholds()
        elif args.command == "bias-curve":
            name = "bias-curve"
            params = {"n": args.n, "epsilon": args.epsilon, "seed": args.seed}
            rows = cmd_bias_curve(args.n, args.epsilon, exact=not args.no_exact)
        else:
            name = args.kind
            params = {
                k: getattr(args, k)
                for k in ("n", "epsilon", "k", "s", "trials", "mode")
                if getattr(args, k) is not None
            }
            params["seed"] = args.seed
            rows = cmd_run(args)
    except UsageError as e:
        parser.error(str(e))
    except ValueError as e:
        print(f"ghzamp: error: {e}", file=sys.stderr)
        return 1
    text = render(name, params, rows, args.format)
    dest = _destination(args.out, name, args.format)
    if dest is None:
        sys.stdout.write(text)
    else:
        with open(dest, "w", newline="") as fh:
            fh.write(text)
        print(f"wrote {dest}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
