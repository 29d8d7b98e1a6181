"""Batch front-end: rate curves, thresholds, simulations and validations.

Emits plot-ready CSV or JSON; rendering is left to the caller's toolchain.
Every output embeds the fully resolved parameter set (flags merged over an
optional JSON config file, defaults filled in) plus the seed, so identical
inputs reproduce byte-identical files.

Exit codes: 0 success, 2 usage error, 3 validation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Dict, List, Optional, Sequence

from .finite_key import ConfigurationError, Protocol, ProtocolConfig
from .noise import NoiseModel, NoiseScenario, expected_observed_stats, marginal_probabilities
from .numerics import LogEps
from .optimize import SearchConfig, optimize_rate, threshold_L
from .asymptotic import rate_bb84_asymptotic, rate_sixstate_asymptotic
from .simulate import ec_toy_run, exact_marginals, sampling_lemma_experiment, simulate_rounds

SCHEMA_VERSION = 1

USAGE_ERROR = 2
VALIDATION_FAILURE = 3


def _die_usage(message: str) -> "SystemExit":
    print(f"error: {message}", file=sys.stderr)
    return SystemExit(USAGE_ERROR)


def _parse_grid(spec: str, log10: bool = False) -> List[float]:
    """Grid syntax: either 'a,b,c' or 'lo:hi:steps' (inclusive linspace)."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise _die_usage(f"grid must be lo:hi:steps, got {spec!r}")
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
        if steps < 1:
            raise _die_usage("grid needs at least one step")
        if steps == 1:
            return [lo]
        if log10:
            lo, hi = math.log10(lo), math.log10(hi)
            return [10.0 ** (lo + (hi - lo) * i / (steps - 1)) for i in range(steps)]
        return [lo + (hi - lo) * i / (steps - 1) for i in range(steps)]
    return [float(v) for v in spec.split(",")]


def _parse_int_list(spec: str) -> List[int]:
    return [int(v) for v in spec.split(",")]


def _model(name: str) -> NoiseModel:
    return NoiseModel.GLOBAL_DEPOLARIZING if name == "global" else NoiseModel.LOCAL_DEPOLARIZING


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _echoed(config: Dict) -> Dict:
    # the destination path plays no part in the computation
    return {k: v for k, v in config.items() if k != "out"}


def _emit(config: Dict, columns: List[str], rows: List[Dict], args) -> None:
    fmt = config.get("format", "csv")
    if fmt == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": config["command"],
            "config": _echoed(config),
            "rows": rows,
        }
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    else:
        lines = [
            f"# mpqkd schema {SCHEMA_VERSION}",
            "# config " + json.dumps(_echoed(config), sort_keys=True),
            ",".join(columns),
        ]
        for row in rows:
            lines.append(",".join(_fmt(row[c]) for c in columns))
        text = "\n".join(lines) + "\n"
    out = config.get("out")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_report(config: Dict, report: Dict, args) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": config["command"],
        "config": _echoed(config),
        "report": report,
    }
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    out = config.get("out")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _resolve(args: argparse.Namespace, defaults: Dict) -> Dict:
    """Defaults < config file < explicit flags, echoed back in every output."""
    resolved = dict(defaults)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_conf = json.load(fh)
        unknown = set(file_conf) - set(defaults)
        if unknown:
            raise _die_usage(f"unknown config keys: {sorted(unknown)}")
        resolved.update(file_conf)
    for key in defaults:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            resolved[key] = value
    return resolved


def _search_config(resolved: Dict) -> SearchConfig:
    return SearchConfig(
        max_evaluations=int(resolved["max-evals"]),
        starts=int(resolved["starts"]),
        seed=int(resolved["seed"]),
    )


def cmd_asymptotic(args: argparse.Namespace) -> int:
    defaults = {
        "command": "asymptotic",
        "model": "global",
        "parties": "2,5",
        "qab": "0.0:0.12:25",
        "format": "csv",
        "out": None,
    }
    conf = _resolve(args, defaults)
    model = _model(conf["model"])
    rows = []
    for parties in _parse_int_list(conf["parties"]):
        for p_ab in _parse_grid(conf["qab"]):
            scenario = NoiseScenario(model, nu=2.0 * p_ab, parties=parties)
            probs = marginal_probabilities(scenario)
            r_bb84 = rate_bb84_asymptotic(probs.p_ab, probs.p_x)
            r_six = rate_sixstate_asymptotic(probs)
            rows.append(
                {
                    "model": conf["model"],
                    "parties": parties,
                    "p_ab": p_ab,
                    "rate_bb84": max(r_bb84, 0.0),
                    "rate_sixstate": 0.0 if math.isnan(r_six) else max(r_six, 0.0),
                }
            )
    rows.sort(key=lambda r: (r["parties"], r["p_ab"]))
    _emit(conf, ["model", "parties", "p_ab", "rate_bb84", "rate_sixstate"], rows, args)
    return 0


def cmd_finite(args: argparse.Namespace) -> int:
    defaults = {
        "command": "finite",
        "model": "global",
        "parties": "2",
        "qab": "0.05",
        "rounds": "1e5:1e10:11",
        "eps-tot": 5e-9,
        "seed": 0,
        "starts": 8,
        "max-evals": 5000,
        "format": "csv",
        "out": None,
    }
    conf = _resolve(args, defaults)
    target = LogEps.from_eps(float(conf["eps-tot"]))
    search = _search_config(conf)
    q_ab = float(conf["qab"])
    rows = []
    for parties in _parse_int_list(conf["parties"]):
        scenario = NoiseScenario(_model(conf["model"]), nu=2.0 * q_ab, parties=parties)
        stats = expected_observed_stats(scenario)
        for rounds_f in _parse_grid(conf["rounds"], log10=True):
            total = int(round(rounds_f))
            row = {"parties": parties, "rounds": total}
            for kind, tag in ((Protocol.N_BB84, "bb84"), (Protocol.N_SIX_STATE, "sixstate")):
                try:
                    opt = optimize_rate(kind, parties, total, stats, target, search)
                    row[f"rate_{tag}"] = opt.rate
                    row[f"p_{tag}"] = opt.shares.p
                    row[f"shares_{tag}"] = ";".join(repr(w) for w in opt.shares.weights)
                except ConfigurationError:  # L too small for this protocol
                    row[f"rate_{tag}"] = 0.0
                    row[f"p_{tag}"] = None
                    row[f"shares_{tag}"] = ""
            rows.append(row)
    rows.sort(key=lambda r: (r["parties"], r["rounds"]))
    columns = [
        "parties",
        "rounds",
        "rate_bb84",
        "rate_sixstate",
        "p_bb84",
        "p_sixstate",
        "shares_bb84",
        "shares_sixstate",
    ]
    _emit(conf, columns, rows, args)
    return 0


def cmd_threshold(args: argparse.Namespace) -> int:
    defaults = {
        "command": "threshold",
        "qab": "0.05",
        "parties": "2",
        "eps-tot": 5e-9,
        "lmax": 1e14,
        "seed": 0,
        "starts": 8,
        "max-evals": 5000,
        "format": "csv",
        "out": None,
    }
    conf = _resolve(args, defaults)
    target = LogEps.from_eps(float(conf["eps-tot"]))
    search = _search_config(conf)
    rows = []
    for parties in _parse_int_list(conf["parties"]):
        for q_ab in _parse_grid(conf["qab"]):
            lbar = threshold_L(
                q_ab, parties, target, l_max=int(float(conf["lmax"])), search_config=search
            )
            rows.append({"q_ab": q_ab, "parties": parties, "threshold_rounds": lbar})
    rows.sort(key=lambda r: (r["parties"], r["q_ab"]))
    _emit(conf, ["q_ab", "parties", "threshold_rounds"], rows, args)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    defaults = {
        "command": "simulate-rounds",
        "model": "global",
        "noise": 0.1,
        "parties": 3,
        "protocol": "n-six-state",
        "rounds": 1_000_000,
        "p": 0.25,
        "seed": 0,
        "out": None,
    }
    conf = _resolve(args, defaults)
    scenario = NoiseScenario(_model(conf["model"]), nu=float(conf["noise"]), parties=int(conf["parties"]))
    config = ProtocolConfig(
        Protocol(conf["protocol"]), int(conf["parties"]), int(float(conf["rounds"])), float(conf["p"])
    )
    report = simulate_rounds(scenario, config, seed=int(conf["seed"]))
    _emit_report(
        conf,
        {
            "ab_errors": list(report.ab_errors),
            "ab_rounds": report.ab_rounds,
            "x_errors": report.x_errors,
            "x_rounds": report.x_rounds,
            "z_errors": report.z_errors,
            "z_rounds": report.z_rounds,
            "key_rounds": report.key_rounds,
            "q_ab": report.q_ab,
            "q_x": report.q_x,
            "q_z": report.q_z,
            "seed": report.seed,
        },
        args,
    )
    return 0


def _sigma(bound: float, trials: int) -> float:
    return math.sqrt(bound * (1.0 - bound) / trials)


def cmd_validate(args: argparse.Namespace) -> int:
    check = args.check
    if check == "marginals":
        defaults = {
            "command": "validate-marginals",
            "tol": 1e-12,
            "out": None,
        }
        conf = _resolve(args, defaults)
        tol = float(conf["tol"])
        cases = []
        worst = 0.0
        for model in (NoiseModel.GLOBAL_DEPOLARIZING, NoiseModel.LOCAL_DEPOLARIZING):
            for parties in (2, 3, 4):
                for nu in (0.0, 0.1, 0.5, 1.0):
                    scenario = NoiseScenario(model, nu, parties)
                    closed = marginal_probabilities(scenario)
                    dense = exact_marginals(scenario)
                    err = max(
                        abs(closed.p_ab - dense.p_ab),
                        abs(closed.p_x - dense.p_x),
                        abs(closed.p_z - dense.p_z),
                    )
                    worst = max(worst, err)
                    cases.append(
                        {
                            "model": model.value,
                            "parties": parties,
                            "nu": nu,
                            "max_abs_error": err,
                            "pass": err <= tol,
                        }
                    )
        ok = all(c["pass"] for c in cases)
        _emit_report(conf, {"cases": cases, "worst_error": worst, "pass": ok}, args)
        return 0 if ok else VALIDATION_FAILURE

    if check == "sampling-lemma":
        defaults = {
            "command": "validate-sampling-lemma",
            "bits": 2000,
            "sample": 1000,
            "weight": 100,
            "eps": 0.01,
            "trials": 100_000,
            "seed": 0,
            "out": None,
        }
        conf = _resolve(args, defaults)
        report = sampling_lemma_experiment(
            int(conf["bits"]),
            int(conf["sample"]),
            int(conf["weight"]),
            int(conf["trials"]),
            LogEps.from_eps(float(conf["eps"])),
            int(conf["seed"]),
        )
        trials = report.trials
        checks = {
            "two_sided": (report.freq_two_sided, report.bound_two_sided),
            "upper": (report.freq_upper, report.bound_one_sided),
            "lower": (report.freq_lower, report.bound_one_sided),
        }
        results = {
            name: {
                "frequency": freq,
                "bound": bound,
                "limit": bound + 3.0 * _sigma(bound, trials),
                "pass": freq <= bound + 3.0 * _sigma(bound, trials),
            }
            for name, (freq, bound) in checks.items()
        }
        ok = all(r["pass"] for r in results.values())
        _emit_report(conf, {"checks": results, "trials": trials, "seed": report.seed, "pass": ok}, args)
        return 0 if ok else VALIDATION_FAILURE

    if check == "ec-toy":
        defaults = {
            "command": "validate-ec-toy",
            "parties": 3,
            "key-bits": 12,
            "q": 0.05,
            "eps-ec": 2.0**-6,
            "radius": 3,
            "trials": 100_000,
            "seed": 0,
            "out": None,
        }
        conf = _resolve(args, defaults)
        eps_ec = LogEps.from_eps(float(conf["eps-ec"]))
        report = ec_toy_run(
            int(conf["parties"]),
            int(conf["key-bits"]),
            float(conf["q"]),
            eps_ec,
            int(conf["radius"]),
            int(conf["trials"]),
            int(conf["seed"]),
        )
        limit = eps_ec.eps + 3.0 * _sigma(eps_ec.eps, report.trials)
        ok = report.failure_freq <= limit
        _emit_report(
            conf,
            {
                "failure_freq": report.failure_freq,
                "abort_freq": report.abort_freq,
                "leakage_bits": report.leakage_bits,
                "degenerate": report.degenerate,
                "bound": eps_ec.eps,
                "limit": limit,
                "trials": report.trials,
                "seed": report.seed,
                "pass": ok,
            },
            args,
        )
        return 0 if ok else VALIDATION_FAILURE

    raise _die_usage(f"unknown validation check {check!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpqkd",
        description="Finite-key and asymptotic rates for multipartite QKD protocols",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser, fmt: bool = True) -> None:
        p.add_argument("--config", help="JSON file with defaults for this command")
        p.add_argument("--out", help="output path (default: stdout)")
        if fmt:
            p.add_argument("--format", choices=["csv", "json"], help="output format")

    p_asym = sub.add_parser("asymptotic", help="asymptotic rate curves")
    p_asym.add_argument("--model", choices=["global", "local"])
    p_asym.add_argument("--parties", help="comma list, e.g. 2,5,8")
    p_asym.add_argument("--qab", help="grid lo:hi:steps or comma list")
    common(p_asym)
    p_asym.set_defaults(func=cmd_asymptotic)

    p_fin = sub.add_parser("finite", help="optimized finite-key rates over L")
    p_fin.add_argument("--model", choices=["global", "local"])
    p_fin.add_argument("--parties", help="comma list of party counts")
    p_fin.add_argument("--qab", help="observed Q_AB (other stats via the model)")
    p_fin.add_argument("--rounds", help="L grid lo:hi:steps (log-spaced) or comma list")
    p_fin.add_argument("--eps-tot", type=float, help="total security parameter")
    p_fin.add_argument("--seed", type=int)
    p_fin.add_argument("--starts", type=int)
    p_fin.add_argument("--max-evals", type=int)
    common(p_fin)
    p_fin.set_defaults(func=cmd_finite)

    p_thr = sub.add_parser("threshold", help="six-state/BB84 crossover round counts")
    p_thr.add_argument("--qab", help="comma list of Q_AB values")
    p_thr.add_argument("--parties", help="comma list of party counts")
    p_thr.add_argument("--eps-tot", type=float)
    p_thr.add_argument("--lmax", type=float)
    p_thr.add_argument("--seed", type=int)
    p_thr.add_argument("--starts", type=int)
    p_thr.add_argument("--max-evals", type=int)
    common(p_thr)
    p_thr.set_defaults(func=cmd_threshold)

    p_sim = sub.add_parser("simulate", help="Monte Carlo protocol rounds")
    p_sim.add_argument("--model", choices=["global", "local"])
    p_sim.add_argument("--noise", type=float, help="depolarizing strength nu")
    p_sim.add_argument("--parties", type=int)
    p_sim.add_argument("--protocol", choices=[k.value for k in Protocol])
    p_sim.add_argument("--rounds", type=float)
    p_sim.add_argument("--p", type=float, help="second-type round probability")
    p_sim.add_argument("--seed", type=int)
    common(p_sim, fmt=False)
    p_sim.set_defaults(func=cmd_simulate)

    p_val = sub.add_parser("validate", help="oracle-band validation experiments")
    p_val.add_argument("check", choices=["marginals", "sampling-lemma", "ec-toy"])
    p_val.add_argument("--tol", type=float, help="marginals: tolerance")
    p_val.add_argument("--bits", type=int, help="sampling-lemma: string length M")
    p_val.add_argument("--sample", type=int, help="sampling-lemma: sample size m")
    p_val.add_argument("--weight", type=int, help="sampling-lemma: Hamming weight")
    p_val.add_argument("--eps", type=float, help="sampling-lemma: epsilon")
    p_val.add_argument("--parties", type=int)
    p_val.add_argument("--key-bits", type=int)
    p_val.add_argument("--q", type=float, help="ec-toy: channel flip rate")
    p_val.add_argument("--eps-ec", type=float)
    p_val.add_argument("--radius", type=int)
    p_val.add_argument("--trials", type=int)
    p_val.add_argument("--seed", type=int)
    common(p_val, fmt=False)
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
