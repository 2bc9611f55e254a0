"""Command-line front end.

    hqmm reproduce --convention unnormalized --n-max 8 --csv table.csv
    hqmm decode --model model.json --obs "+,-,+"
    hqmm compare --model model.json --obs-file obs.txt
    hqmm sweep --axis eta --start 0.05 --stop 0.95 --steps 19
    hqmm build-qubit --phi 0.785398 --theta 0 --eta 0.5 --out model.json
"""
import argparse
import csv
import json
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .channels import l1_coherence
from .decoder import (
    DecodeResult,
    DecoderConfig,
    diagonal_restricted_decode,
    eigen_ascent_decode,
    gap_and_coherence,
    grid_oracle_decode,
)
from .errors import HqmmError, ValidationError
from .io import load_model, load_observations, save_model
from .model import Convention, ObservationSequence, build_qubit_memory, canonical_qubit_model

REPRODUCE_TOL = 1e-8
MAX_REPRODUCE_N = 12

REPRODUCE_COLUMNS = ["n", "classical_score", "quantum_score", "gap", "coherence",
                     "expected_gap", "abs_error"]
COMPARE_COLUMNS = ["n", "convention", "quantum_score", "classical_score", "gap", "coherence", "bound_rhs"]
SWEEP_COLUMNS = ["axis", "value", "quantum_score", "classical_score", "gap"]
DECODE_COLUMNS = ["slot", "ket", "coherence"]

# per-step factor of the diagonal optimum on the canonical model, by convention
_STEP_WEIGHT = {Convention.UNNORMALIZED: 0.75, Convention.NORMALIZED: 0.375}


def fmt_csv(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


def fmt_human(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".6g")
    if value is None:
        return "-"
    return str(value)


def write_csv(path: str, columns: Sequence[str], rows: List[Dict]) -> None:
    handle = sys.stdout if path == "-" else open(path, "w", newline="")
    try:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt_csv(row[c]) for c in columns])
    finally:
        if handle is not sys.stdout:
            handle.close()


def print_table(columns: Sequence[str], rows: List[Dict], out=None) -> None:
    out = out or sys.stdout
    cells = [[fmt_human(row[c]) for c in columns] for row in rows]
    widths = [max([len(c)] + [len(r[i]) for r in cells]) for i, c in enumerate(columns)]
    print("  ".join(c.rjust(w) for c, w in zip(columns, widths)), file=out)
    for r in cells:
        print("  ".join(v.rjust(w) for v, w in zip(r, widths)), file=out)


def _config(args) -> DecoderConfig:
    return DecoderConfig(restarts=args.restarts, max_sweeps=args.max_sweeps, convergence_tol=args.tol,
                         net_resolution=args.net, rng_seed=args.seed)


def _observations(args) -> ObservationSequence:
    if args.obs_file:
        return load_observations(args.obs_file)
    if args.obs:
        return ObservationSequence.parse(args.obs)
    raise ValidationError("give observations with --obs or --obs-file")


# --------------------------------------------------------------------------- commands


def reproduce_rows(convention: Convention, n_max: int, config: Optional[DecoderConfig] = None) -> List[Dict]:
    """Canonical-model table: diagonal vs quantum optimum for ``n = 0..n_max``."""
    if not 0 <= n_max <= MAX_REPRODUCE_N:
        raise ValidationError(f"--n-max must be between 0 and {MAX_REPRODUCE_N}")
    convention = Convention(convention)
    model = canonical_qubit_model(convention)
    rows = []
    for n in range(n_max + 1):
        report = gap_and_coherence(model, ["+"] * (n + 1), config)
        expected = 0.125 * _STEP_WEIGHT[convention] ** n
        rows.append({
            "n": n,
            "classical_score": report.classical_score,
            "quantum_score": report.quantum_score,
            "gap": report.gap,
            "coherence": report.coherence,
            "expected_gap": expected,
            "abs_error": abs(report.gap - expected),
        })
    return rows


def cmd_reproduce(args) -> int:
    rows = reproduce_rows(Convention(args.convention), args.n_max, _config(args))
    print_table(REPRODUCE_COLUMNS, rows)
    if args.csv:
        write_csv(args.csv, REPRODUCE_COLUMNS, rows)
    failed = [r["n"] for r in rows if r["abs_error"] > REPRODUCE_TOL]
    if failed:
        print(f"FAIL: gap off by more than {REPRODUCE_TOL:g} at n = {failed}", file=sys.stderr)
        return 1
    return 0


def _decode(model, obs, method: str, config: DecoderConfig) -> DecodeResult:
    if method == "ascent":
        return eigen_ascent_decode(model, obs, config)
    if method == "grid":
        return grid_oracle_decode(model, obs, config.net_resolution)
    return diagonal_restricted_decode(model, obs)


def cmd_decode(args) -> int:
    model = load_model(args.model)
    result = _decode(model, _observations(args), args.method, _config(args))
    doc = {
        "method": args.method,
        "score": result.score,
        "trajectory": result.kets(),
        "sweeps": result.sweeps,
        "restarts_used": result.restarts_used,
        "converged": result.converged,
        "history": result.history,
    }
    print(json.dumps(doc, indent=1))
    if args.csv:
        rows = [{"slot": m, "ket": json.dumps(k), "coherence": l1_coherence(p.matrix)}
                for m, (k, p) in enumerate(zip(result.kets(), result.trajectory))]
        write_csv(args.csv, DECODE_COLUMNS, rows)
    return 0


def compare_row(model, obs, config: DecoderConfig) -> Dict:
    report = gap_and_coherence(model, obs, config)
    return {
        "n": report.n,
        "convention": report.convention.value,
        "quantum_score": report.quantum_score,
        "classical_score": report.classical_score,
        "gap": report.gap,
        "coherence": report.coherence,
        "bound_rhs": report.bound_rhs,
    }


def cmd_compare(args) -> int:
    row = compare_row(load_model(args.model), _observations(args), _config(args))
    print_table(COMPARE_COLUMNS, [row])
    if args.csv:
        write_csv(args.csv, COMPARE_COLUMNS, [row])
    return 0


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    start: float
    stop: float
    steps: int
    phi: float = np.pi / 4
    theta: float = 0.0
    eta: float = 0.5
    n: int = 0
    convention: Convention = Convention.NORMALIZED
    label: str = "+"

    def __post_init__(self):
        if self.axis not in ("eta", "theta", "phi", "n"):
            raise ValidationError(f"unknown sweep axis {self.axis!r}")
        if self.steps < 2:
            raise ValidationError("a sweep needs at least 2 steps")
        lo, hi = min(self.start, self.stop), max(self.start, self.stop)
        if self.axis == "eta" and not (0 < lo and hi < 1):
            raise ValidationError("eta range must lie inside (0, 1)")
        if self.axis == "theta" and not (0 <= lo and hi <= 1):
            raise ValidationError("theta range must lie inside [0, 1]")
        if self.axis == "n" and not (0 <= lo and hi <= MAX_REPRODUCE_N):
            raise ValidationError(f"n range must lie inside [0, {MAX_REPRODUCE_N}]")

    def values(self) -> List[float]:
        if self.axis == "n":
            return sorted({int(round(v)) for v in np.linspace(self.start, self.stop, self.steps)})
        return [float(v) for v in np.linspace(self.start, self.stop, self.steps)]


def sweep_rows(spec: SweepSpec, config: Optional[DecoderConfig] = None) -> List[Dict]:
    rows = []
    for value in spec.values():
        params = {"phi": spec.phi, "theta": spec.theta, "eta": spec.eta, "n": spec.n}
        params[spec.axis] = value
        model = build_qubit_memory(params["phi"], params["theta"], params["eta"], spec.convention)
        report = gap_and_coherence(model, [spec.label] * (int(params["n"]) + 1), config)
        rows.append({"axis": spec.axis, "value": value, "quantum_score": report.quantum_score,
                     "classical_score": report.classical_score, "gap": report.gap})
    return rows


def cmd_sweep(args) -> int:
    spec = SweepSpec(args.axis, args.start, args.stop, args.steps, phi=args.phi, theta=args.theta,
                     eta=args.eta, n=args.n, convention=Convention(args.convention), label=args.label)
    rows = sweep_rows(spec, _config(args))
    print_table(SWEEP_COLUMNS, rows)
    if args.csv:
        write_csv(args.csv, SWEEP_COLUMNS, rows)
    return 0


def cmd_build_qubit(args) -> int:
    model = build_qubit_memory(args.phi, args.theta, args.eta, Convention(args.convention))
    save_model(model, args.out)
    print(f"wrote {args.out}")
    return 0


# --------------------------------------------------------------------------- parser


def _decoder_flags(p: argparse.ArgumentParser) -> None:
    d = DecoderConfig()
    p.add_argument("--restarts", type=int, default=d.restarts, help="ascent restarts (default %(default)s)")
    p.add_argument("--net", type=int, default=d.net_resolution, help="pure states per slot in the net (default %(default)s)")
    p.add_argument("--seed", type=int, default=d.rng_seed, help="restart seed (default %(default)s)")
    p.add_argument("--tol", type=float, default=d.convergence_tol, help="relative improvement stop (default %(default)s)")
    p.add_argument("--max-sweeps", type=int, default=d.max_sweeps, help="sweep cap per restart (default %(default)s)")
    p.add_argument("--csv", metavar="PATH", help="also write CSV here ('-' for stdout)")


def _obs_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--obs", help='comma-separated outcome labels, e.g. "+,-,+" or "0,1,1"')
    g.add_argument("--obs-file", metavar="PATH", help="one outcome per line: label, index or [re,im],[re,im] ket")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hqmm", description="Quantum and classical Viterbi decoding for HQMMs.")
    sub = parser.add_subparsers(dest="command", required=True)
    conventions = [c.value for c in Convention]

    p = sub.add_parser("reproduce", help="canonical qubit table, quantum vs classical gap",
                       description="CSV columns: " + ", ".join(REPRODUCE_COLUMNS)
                       + f". Exit status 1 if any abs_error exceeds {REPRODUCE_TOL:g}.")
    p.add_argument("--convention", choices=conventions, default=Convention.UNNORMALIZED.value)
    p.add_argument("--n-max", type=int, default=8)
    _decoder_flags(p)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("decode", help="decode one observation sequence",
                       description="Prints a JSON document; CSV columns: " + ", ".join(DECODE_COLUMNS))
    p.add_argument("--model", required=True, metavar="PATH")
    p.add_argument("--method", choices=["ascent", "grid", "diagonal"], default="ascent")
    _obs_flags(p)
    _decoder_flags(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("compare", help="quantum vs diagonal-restricted optimum",
                       description="CSV columns: " + ", ".join(COMPARE_COLUMNS))
    p.add_argument("--model", required=True, metavar="PATH")
    _obs_flags(p)
    _decoder_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="vary one qubit-model parameter",
                       description="CSV columns: " + ", ".join(SWEEP_COLUMNS))
    p.add_argument("--axis", choices=["eta", "theta", "phi", "n"], required=True)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--phi", type=float, default=np.pi / 4)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--n", type=int, default=0, help="horizon when not swept")
    p.add_argument("--label", default="+", help="observed outcome at every step")
    p.add_argument("--convention", choices=conventions, default=Convention.NORMALIZED.value)
    _decoder_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("build-qubit", help="write a qubit memory model file")
    p.add_argument("--phi", type=float, default=np.pi / 4)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--convention", choices=conventions, default=Convention.NORMALIZED.value)
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=cmd_build_qubit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HqmmError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
