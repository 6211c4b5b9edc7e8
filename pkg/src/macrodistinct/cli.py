"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 bound or suite failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import bounds, config, verify
from .decoherence import DephasingSpec
from .distinctness import GridError, NoiseKernel, classical_trace_distance, coarse_distribution, ideal_distribution, max_tolerable_noise
from .loss import LOSS_FAMILIES, LossDilation, TruncationError, loss_guessing_probability, min_sensitivity
from .qcore import LayoutError, StateError
from .states import FAMILIES, StateFamilySpec, make_components, number_operator, sz_operator, x_quadrature

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 2, 3
OUT_DIR_ENV = "MACRODISTINCT_OUT_DIR"
OBSERVABLES = ("natural", "x-quadrature", "number", "sz")
CHANNELS = ("dephasing",) + LOSS_FAMILIES
DEFAULT_SWEEPS = {
    "distinctness": "0.1:10:20:log",
    "fragility": "0.01:10:16:log",
    "loss": "0:1:16:linear",
    "certify-dephasing": "0.01:10:16:log",
    "certify-loss": "0:1:16:linear",
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# serialization


def _fmt_float(x: float) -> Optional[str]:
    return format(x, ".17g") if math.isfinite(x) else None


def _scalar(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits; NaN and infinities become null."""
    obj = _scalar(obj)
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [inner + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, float):
        s = _fmt_float(obj)
        return "null" if s is None else s
    return json.dumps(obj)


def _csv_cell(v) -> str:
    v = _scalar(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return _fmt_float(v) or ""
    return str(v)


def to_csv(records: Sequence[dict]) -> str:
    fields: list = []
    for r in records:
        fields += [k for k in r if k not in fields]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in records:
        w.writerow([_csv_cell(r.get(k)) for k in fields])
    return buf.getvalue()


def _uniform(records: list) -> list:
    """Give every record the same keys (in first-seen order) so JSON and CSV agree field for field."""
    fields: list = []
    for r in records:
        fields += [k for k in r if k not in fields]
    return [{k: r.get(k) for k in fields} for r in records]


# ---------------------------------------------------------------------------
# configuration


def parse_sweep(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ConfigError(f"sweep must be START:STOP:COUNT[:linear|log], got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"malformed sweep {text!r}") from None
    scale = parts[3] if len(parts) == 4 else "linear"
    if scale not in ("linear", "log"):
        raise ConfigError(f"sweep scale must be linear or log, got {scale!r}")
    if count < 1:
        raise ConfigError("sweep count must be at least 1")
    if not start <= stop:
        raise ConfigError(f"sweep start {start} exceeds stop {stop}")
    if not (math.isfinite(start) and math.isfinite(stop)):
        raise ConfigError("sweep bounds must be finite")
    if scale == "log":
        if start <= 0:
            raise ConfigError("log sweeps need a positive start")
        return np.geomspace(start, stop, count) if count > 1 else np.array([start])
    return np.linspace(start, stop, count) if count > 1 else np.array([start])


def _family_spec(args) -> StateFamilySpec:
    try:
        return StateFamilySpec(args.family, alpha=args.alpha, N=args.fock_n, n=args.n_qubits, cutoff=args.cutoff)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _components(args):
    spec = _family_spec(args)
    A, D, X = make_components(spec)
    choice = args.observable
    bosonic = spec.family != "ghz"
    if choice == "natural":
        return A, D, X
    if choice == "sz":
        if bosonic:
            raise ConfigError(f"observable sz needs the ghz family, not {spec.family}")
        return A, D, sz_operator(spec.n)
    if not bosonic:
        raise ConfigError(f"observable {choice} needs a bosonic family, not ghz")
    cutoff = spec.resolved_cutoff()
    return A, D, (x_quadrature(cutoff) if choice == "x-quadrature" else number_operator(cutoff))


def _default_loss_family(args) -> str:
    if args.loss_family:
        return args.loss_family
    return "qubit-swap" if args.family == "ghz" else "beamsplitter"


def _tolerance_overrides(args) -> dict:
    out = {}
    for item in args.tol or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"tolerance override must be NAME=VALUE, got {item!r}")
        out[key.replace("-", "_")] = value
    if args.slack_tol is not None:
        out["slack"] = args.slack_tol
    parsed = {}
    for key, value in out.items():
        if not hasattr(config.DEFAULT_TOLERANCES, key):
            raise ConfigError(f"unknown tolerance {key!r}")
        try:
            default = getattr(config.DEFAULT_TOLERANCES, key)
            parsed[key] = type(default)(value)
        except ValueError:
            raise ConfigError(f"bad value for tolerance {key!r}: {value!r}") from None
    return parsed


# ---------------------------------------------------------------------------
# commands


def _targets(args) -> list:
    for pg in args.pg or []:
        if not 0.5 <= pg <= 1.0:
            raise ConfigError(f"target guessing probability must lie in [1/2, 1], got {pg}")
    return list(args.pg or [])


def run_distinctness(args):
    A, D, X = _components(args)
    records = []
    for i, sigma in enumerate(parse_sweep(args.sweep or DEFAULT_SWEEPS["distinctness"])):
        if sigma < 0:
            raise ConfigError("noise sigma must be nonnegative")
        if sigma == 0:
            dist = classical_trace_distance(ideal_distribution(A, X), ideal_distribution(D, X))
        else:
            k = NoiseKernel(float(sigma))
            dist = classical_trace_distance(coarse_distribution(A, X, k), coarse_distribution(D, X, k))
        records.append({"kind": "sweep", "index": i, "sigma": float(sigma), "trace_distance": dist,
                        "guessing_probability": 0.5 * (1 + dist)})
    for pg in _targets(args):
        r = max_tolerable_noise(A, D, X, pg)
        records.append({"kind": "noise_tolerance", "target": pg, "sigma": r.sigma, "status": r.status,
                        "guessing_probability": r.probability_at_sigma})
    probs = [r["guessing_probability"] for r in records if r["kind"] == "sweep"]
    summary = {"points": len(probs), "monotone_nonincreasing": bool(np.all(np.diff(probs) <= 1e-8))}
    return records, summary, True


def _bound_records(reports, parameter: str, values) -> list:
    out = []
    for i, (v, rep) in enumerate(zip(values, reports)):
        rec = {"kind": "sweep", "index": i, parameter: float(v)}
        rec.update(lhs=rep.lhs_value, rhs=rep.rhs_value, slack=rep.slack, satisfied=rep.satisfied)
        for key, value in rep.context.items():
            if key not in rec and key != parameter:
                rec[key] = value
        out.append(rec)
    return out


def _bound_summary(records) -> dict:
    slacks = [r["slack"] for r in records]
    return {
        "points": len(records),
        "all_satisfied": all(r["satisfied"] for r in records),
        "min_slack": min(slacks) if slacks else None,
        "violations": [r["index"] for r in records if not r["satisfied"]],
    }


def _check_unit(values, name):
    if np.any(values < 0) or np.any(values > 1):
        raise ConfigError(f"{name} sweep must stay within [0, 1]")


def run_fragility(args):
    A, D, X = _components(args)
    deltas = parse_sweep(args.sweep or DEFAULT_SWEEPS["fragility"])
    if np.any(deltas < 0):
        raise ConfigError("dephasing strength must be nonnegative")
    reports = [bounds.noise_fragility_check(A, D, X, float(d)) for d in deltas]
    records = _bound_records(reports, "delta", deltas)
    summary = _bound_summary(records)
    return records, summary, summary["all_satisfied"]


def run_loss(args):
    A, D, _ = _components(args)
    family = _default_loss_family(args)
    etas = parse_sweep(args.sweep or DEFAULT_SWEEPS["loss"])
    _check_unit(etas, "efficiency")
    reports = [bounds.loss_fragility_check(A, D, family, float(e)) for e in etas]
    records = _bound_records(reports, "eta", etas)
    for rec, e in zip(records, etas):
        rec["loss_guessing_probability"] = loss_guessing_probability(A, D, family, float(e))
    for pg in _targets(args):
        r = min_sensitivity(A, D, family, pg)
        records.append({"kind": "min_sensitivity", "target": pg, "eta": r.eta, "status": r.status,
                        "loss_guessing_probability": r.probability_at_eta, "monotone": r.monotone})
    sweep = [r for r in records if r["kind"] == "sweep"]
    summary = _bound_summary(sweep)
    summary["family"] = family
    return records, summary, summary["all_satisfied"]


def run_certify(args):
    A, D, X = _components(args)
    channel = args.channel
    if channel == "dephasing":
        values = parse_sweep(args.sweep or DEFAULT_SWEEPS["certify-dephasing"])
        if np.any(values < 0):
            raise ConfigError("dephasing strength must be nonnegative")
        reports = [bounds.certifiability_distance(A, D, DephasingSpec(X, float(v)))[1] for v in values]
        records = _bound_records(reports, "delta", values)
    else:
        values = parse_sweep(args.sweep or DEFAULT_SWEEPS["certify-loss"])
        _check_unit(values, "efficiency")
        reports = [bounds.certifiability_distance(A, D, LossDilation(channel, float(v)))[1] for v in values]
        records = _bound_records(reports, "eta", values)
    summary = _bound_summary(records)
    summary["channel"] = channel
    return records, summary, summary["all_satisfied"]


def run_verify(args):
    if args.trials < 1:
        raise ConfigError("trials must be at least 1")
    if args.seed < 0:
        raise ConfigError("seed must be a nonnegative integer")
    suites = args.suite or list(verify.SUITES)
    for s in suites:
        if s not in verify.SUITES:
            raise ConfigError(f"unknown suite {s!r}; choose from {sorted(verify.SUITES)}")

    def progress(s):
        print(f"{s.suite}: {s.passed}/{s.trials} passed, max |slack| {s.max_abs_slack:.3g}", file=sys.stderr)

    summaries = verify.run_all(args.seed, args.trials, args.inject_fault, suites, progress)
    records = [
        {
            "suite": s.suite,
            "trials": s.trials,
            "passed": s.passed,
            "min_slack": s.min_slack,
            "max_abs_slack": s.max_abs_slack,
            "failing_tokens": ";".join(tok for tok, _ in s.failures),
        }
        for s in summaries
    ]
    failing = [tok for s in summaries for tok, _ in s.failures]
    for tok in failing:
        print(f"failed trial: {tok}", file=sys.stderr)
    summary = {"suites": len(records), "all_passed": not failing, "failures": len(failing)}
    return records, summary, not failing


COMMANDS = {
    "distinctness": run_distinctness,
    "fragility": run_fragility,
    "loss": run_loss,
    "certify": run_certify,
    "verify": run_verify,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="macrodistinct",
        description="Distinguishability under coarse-grained and lossy measurements, and entanglement fragility bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output file (default: ${OUT_DIR_ENV}/<command>.<format>, else stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=verify.DEFAULT_SEED)
    common.add_argument("--slack-tol", type=float, help="tolerance below zero accepted for bound slack")
    common.add_argument("--tol", action="append", metavar="NAME=VALUE", help="override any tolerance field")

    family = argparse.ArgumentParser(add_help=False)
    family.add_argument("--family", choices=FAMILIES, default="coherent-cat")
    family.add_argument("--alpha", type=float, default=2.0, help="cat amplitude")
    family.add_argument("--fock-n", type=int, default=4, help="Fock level N of |0> + |N>")
    family.add_argument("--n-qubits", type=int, default=4, help="GHZ register size")
    family.add_argument("--cutoff", type=int, help="Fock truncation (default from the family rule)")
    family.add_argument("--observable", choices=OBSERVABLES, default="natural")
    family.add_argument("--sweep", metavar="START:STOP:COUNT[:linear|log]")

    p = sub.add_parser("distinctness", parents=[common, family], help="guessing probability versus noise sigma")
    p.add_argument("--pg", type=float, action="append", help="target guessing probability for R_Pg (repeatable)")

    sub.add_parser("fragility", parents=[common, family], help="negativity bound under dephasing (delta sweep)")

    p = sub.add_parser("loss", parents=[common, family], help="negativity bound under loss (eta sweep)")
    p.add_argument("--loss-family", choices=LOSS_FAMILIES)
    p.add_argument("--pg", type=float, action="append", help="target guessing probability for S_Pg (repeatable)")

    p = sub.add_parser("certify", parents=[common, family], help="superposition versus mixture after a channel")
    p.add_argument("--channel", choices=CHANNELS, default="dephasing")

    p = sub.add_parser("verify", parents=[common], help="randomized invariant suites")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--suite", action="append", help="restrict to a suite (repeatable)")
    p.add_argument("--inject-fault", choices=verify.FAULTS, help=argparse.SUPPRESS)
    return parser


def _config_echo(args) -> dict:
    skip = {"out", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _destination(args) -> Optional[str]:
    if args.out:
        return args.out
    out_dir = os.environ.get(OUT_DIR_ENV)
    if out_dir:
        return os.path.join(out_dir, f"{args.command}.{args.format}")
    return None


def render(args, records, summary) -> str:
    records = _uniform(records)
    if args.format == "csv":
        return to_csv(records)
    return dumps({"config_echo": _config_echo(args), "records": records, "summary": summary}) + "\n"


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = _tolerance_overrides(args)
        with config.tolerances(**overrides):
            records, summary, ok = COMMANDS[args.command](args)
        text = render(args, records, summary)
        dest = _destination(args)
        if dest is None:
            sys.stdout.write(text)
        else:
            parent = os.path.dirname(dest)
            if parent:
                os.makedirs(parent, exist_ok=True)
            with open(dest, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
    except (ConfigError, StateError, LayoutError, GridError, TruncationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not ok:
        print("error: one or more bounds or checks failed", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK
