"""Command-line front end: ``rspcast run|sweep|verify``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

from . import circuits, hilbert, verification
from . import protocols as P
from .protocols.transcript import SCHEMA_VERSION

PROTOCOLS = ("single", "basic", "diff-bases", "probabilistic", "nparty", "diff-states", "qutrit",
             "encrypted", "voting", "bell", "controlled")
ANGLE_FLAGS = ("theta", "theta0", "theta1", "theta2", "phi")
COEFF_FLAGS = ("alpha", "beta", "gamma")
# command-line coefficients are typed to a few digits; closer than this to
# unit norm they are renormalized, further away they are rejected
INPUT_NORM_TOL = 1e-4

EXIT_OK, EXIT_FAILED, EXIT_PARAMS = 0, 1, 2


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    protocol: str
    params: dict[str, Any] = field(default_factory=dict)
    mode: str = "enumerate"
    seed: int | None = None
    fmt: str = "json"
    out: str | None = None
    tolerance: float = hilbert.ALGEBRA_TOL


def normalize_coefficients(values: Sequence[float]) -> tuple[float, ...]:
    if any(not math.isfinite(v) or v < 0 for v in values):
        raise ParameterError(f"coefficients must be finite and non-negative, got {list(values)}")
    norm = sum(v * v for v in values)
    if abs(norm - 1.0) > INPUT_NORM_TOL:
        raise ParameterError(f"coefficients {list(values)} have squared norm {norm:.6g}, not 1")
    scale = math.sqrt(norm)
    return tuple(v / scale for v in values)


def _coeffs(p: dict[str, Any], names: Sequence[str], default: float) -> tuple[float, ...]:
    given = [p.get(n) for n in names]
    if all(g is None for g in given):
        return (default,) * len(names)
    if any(g is None for g in given):
        raise ParameterError(f"give all of {', '.join('--' + n for n in names)} or none")
    return normalize_coefficients([float(g) for g in given])


def _parse_votes(text: str) -> list[int]:
    if not text or any(ch not in "01" for ch in text):
        raise ParameterError(f"--votes must be a string of 0s and 1s, got {text!r}")
    return [int(ch) for ch in text]


def _parse_tamper(items: Sequence[str]) -> list[tuple[int, int]]:
    out = []
    for item in items:
        try:
            voter, decoy = item.split(":")
            out.append((int(voter), int(decoy)))
        except ValueError:
            raise ParameterError(f"--tamper expects VOTER:DECOY, got {item!r}") from None
    return out


def build_runner(cfg: ScenarioConfig) -> Callable[[], P.ProtocolTranscript]:
    """Validate parameters for the protocol and return a zero-argument runner."""
    p = cfg.params
    common = {"mode": cfg.mode, "seed": cfg.seed, "tol": cfg.tolerance}
    theta = p.get("theta") or 0.0
    r2, r3 = 1 / math.sqrt(2), 1 / math.sqrt(3)
    proto = cfg.protocol
    if proto == "single":
        return lambda: P.run_single_receiver_rsp(theta, **common)
    if proto == "basic":
        a, b = _coeffs(p, ("alpha", "beta"), r2)
        return lambda: P.run_basic_broadcast(a, b, theta, **common)
    if proto == "diff-bases":
        return lambda: P.run_diff_bases(theta, **common)
    if proto == "probabilistic":
        a, b = _coeffs(p, ("alpha", "beta"), r2)
        return lambda: P.run_probabilistic_unknown_angle(a, b, theta, **common)
    if proto == "nparty":
        n = p.get("n") or 2
        if not 1 <= n <= circuits.MAX_PARTIES:
            raise ParameterError(f"--n must be in 1..{circuits.MAX_PARTIES}, got {n}")
        a, b = _coeffs(p, ("alpha", "beta"), r2)
        return lambda: P.run_n_party(a, b, theta, n, **common)
    if proto == "diff-states":
        return lambda: P.run_diff_states(p.get("theta1") or 0.0, p.get("theta2") or 0.0, **common)
    if proto == "qutrit":
        a, b, g = _coeffs(p, COEFF_FLAGS, r3)
        return lambda: P.run_qutrit_broadcast(p.get("theta1") or 0.0, p.get("theta2") or 0.0, a, b, g, **common)
    if proto == "encrypted":
        grid = p.get("grid_points") or 256
        if grid < 2:
            raise ParameterError(f"--grid-points must be at least 2, got {grid}")
        return lambda: P.run_encrypted_transfer(theta, p.get("phi") or 0.0, grid, **common)
    if proto == "voting":
        votes = _parse_votes(p.get("votes") or "")
        decoys = p.get("decoys")
        decoys = 2 if decoys is None else decoys
        if decoys < 0:
            raise ParameterError(f"--decoys must be non-negative, got {decoys}")
        tamper = _parse_tamper(p.get("tamper") or ())
        for i, j in tamper:
            if not (0 <= i < len(votes) and 0 <= j < decoys):
                raise ParameterError(f"--tamper {i}:{j} names a decoy that does not exist")
        seed = 0 if cfg.seed is None else cfg.seed
        return lambda: P.run_voting(votes, theta, decoys, seed, tamper, cfg.tolerance)
    if proto == "bell":
        return lambda: P.run_bell_sharing(**common)
    if proto == "controlled":
        return lambda: P.run_controlled_entanglement(p.get("theta0") or 0.0, p.get("theta1") or 0.0, **common)
    raise ParameterError(f"unknown protocol {proto!r}; expected one of {', '.join(PROTOCOLS)}")


def report_dict(t: P.ProtocolTranscript) -> dict[str, Any] | None:
    try:
        return asdict(P.resource_report(t))
    except P.IncompleteTranscript:
        return None


def run_document(cfg: ScenarioConfig) -> tuple[dict[str, Any], bool]:
    t = build_runner(cfg)()
    doc = {"schema": SCHEMA_VERSION, "transcript": P.transcript_to_dict(t), "report": report_dict(t)}
    return doc, t.verified


def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def run_csv(doc: dict[str, Any]) -> str:
    rows = []
    for o in doc["transcript"]["outcomes"]:
        fids = [fs["fidelity"] for fs in o["final_states"]]
        rows.append([" ".join(map(str, o["path"])), o["label"], repr(o["probability"]), o["success"],
                     repr(min(fids)) if fids else ""])
    return _csv(["path", "label", "probability", "success", "min_fidelity"], rows)


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def cmd_run(cfg: ScenarioConfig) -> tuple[str, int]:
    doc, ok = run_document(cfg)
    text = dumps(doc) if cfg.fmt == "json" else run_csv(doc)
    return text, EXIT_OK if ok else EXIT_FAILED


def cmd_sweep(p_from: float, p_to: float, steps: int, fmt: str) -> tuple[str, int]:
    try:
        rows = P.entropy_sweep(p_from, p_to, steps)
    except ValueError as exc:
        raise ParameterError(str(exc)) from None
    if fmt == "csv":
        return _csv(["p", "closed_form", "numerical", "difference"],
                    [[repr(r.p), repr(r.closed_form), repr(r.numerical), repr(r.difference)] for r in rows]), EXIT_OK
    doc = {"schema": SCHEMA_VERSION, "kind": "entropy",
           "rows": [{"p": r.p, "closed_form": r.closed_form, "numerical": r.numerical,
                     "difference": r.difference} for r in rows]}
    return dumps(doc), EXIT_OK


def cmd_verify(suite: str, tol: float, fmt: str) -> tuple[str, int]:
    try:
        results = verification.run_suite(suite, tol)
    except ValueError as exc:
        raise ParameterError(str(exc)) from None
    ok = all(r.ok for r in results)
    if fmt == "json":
        text = dumps({"schema": SCHEMA_VERSION, "suite": suite, "tolerance": tol, "passed": ok,
                      "invariants": [asdict(r) for r in results]})
    elif fmt == "csv":
        text = _csv(["suite", "invariant", "passed", "failed", "worst_residual", "error"],
                    [[r.suite, r.name, r.passed, r.failed, repr(r.worst), r.error or ""] for r in results])
    else:
        lines = []
        for r in results:
            status = "PASS" if r.ok else "FAIL"
            lines.append(f"{status}  {r.suite:<10} {r.name:<36} pass={r.passed:<4} fail={r.failed:<3} "
                         f"worst={r.worst:.3e}")
            lines += [f"        {f}" for f in r.failures[:5]]
            if r.error:
                lines.append(f"        error: {r.error}")
        failed = sum(not r.ok for r in results)
        lines.append(f"{len(results) - failed}/{len(results)} invariants passed")
        text = "\n".join(lines) + "\n"
    return text, EXIT_OK if ok else EXIT_FAILED


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rspcast", description="Remote state preparation broadcast simulator.")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p: argparse.ArgumentParser, formats=("json", "csv"), default="json") -> None:
        p.add_argument("--format", choices=formats, default=default)
        p.add_argument("--out", help="write output here instead of standard output")

    run = sub.add_parser("run", help="run one protocol and emit its transcript")
    run.add_argument("protocol", choices=PROTOCOLS)
    run.add_argument("--mode", choices=("enumerate", "sample"), default="enumerate")
    run.add_argument("--seed", type=int)
    run.add_argument("--tolerance", type=float, default=hilbert.ALGEBRA_TOL)
    run.add_argument("--degrees", action="store_true", help="angles are given in degrees")
    for name in COEFF_FLAGS + ANGLE_FLAGS:
        run.add_argument(f"--{name}", type=float)
    run.add_argument("--n", type=int)
    run.add_argument("--grid-points", type=int)
    run.add_argument("--votes")
    run.add_argument("--decoys", type=int)
    run.add_argument("--tamper", action="append", metavar="VOTER:DECOY")
    common(run)

    sweep = sub.add_parser("sweep", help="emit a parameter curve")
    sweep.add_argument("kind", choices=("entropy",))
    sweep.add_argument("--from", dest="p_from", type=float, default=0.0)
    sweep.add_argument("--to", dest="p_to", type=float, default=1.0)
    sweep.add_argument("--steps", type=int, default=101)
    common(sweep)

    verify = sub.add_parser("verify", help="run the invariant suite")
    verify.add_argument("suite", nargs="?", default="all")
    verify.add_argument("--tolerance", type=float, default=hilbert.ALGEBRA_TOL)
    common(verify, ("text", "json", "csv"), "text")
    return parser


def config_from_args(args: argparse.Namespace) -> ScenarioConfig:
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        raise ParameterError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
    if not args.tolerance > 0:
        raise ParameterError(f"--tolerance must be positive, got {args.tolerance}")
    params: dict[str, Any] = {}
    for name in COEFF_FLAGS + ANGLE_FLAGS + ("n", "grid_points", "votes", "decoys", "tamper"):
        value = getattr(args, name)
        if value is None:
            continue
        if name in ANGLE_FLAGS:
            if not math.isfinite(value):
                raise ParameterError(f"--{name} must be finite")
            if args.degrees:
                value = math.radians(value)
        params[name] = value
    return ScenarioConfig(args.protocol, params, args.mode, args.seed, args.format, args.out, args.tolerance)


def main(argv: Sequence[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.verb == "run":
            text, code = cmd_run(config_from_args(args))
        elif args.verb == "sweep":
            text, code = cmd_sweep(args.p_from, args.p_to, args.steps, args.format)
        else:
            text, code = cmd_verify(args.suite, args.tolerance, args.format)
    except (ParameterError, hilbert.HilbertError, ValueError) as exc:
        print(f"rspcast: parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
