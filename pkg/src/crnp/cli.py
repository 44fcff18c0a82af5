"""Command-line front end.

    crnp analyze NET.crn [--out FILE]
    crnp explain NET.crn --set X1,X2
    crnp simulate NET.crn --init X1=2,X2=0.5 [--t-end T] [--step H] [--out CSV]
    crnp reduce NET.crn --keep X1,X2

Exit codes: 0 ok / Persistent, 2 bad input, 3 Undecided, 4 too many species
for exhaustive enumeration, 5 simulation blew up.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .compose import (
    PersistenceCertificate,
    Rule,
    Verdict,
    apply_rules,
    case_label,
    certify_persistence,
    decompose,
    evaluate_rules,
)
from .dde import HistoryFunction, simulate, write_trajectory_csv
from .errors import (
    CRNError,
    MemoryCapExceeded,
    NetworkError,
    SimulationError,
    StepTooLarge,
    TooLarge,
    UnknownSpecies,
    WindowTooShort,
)
from .model import ReactionNetwork, with_single_block
from .parser import load_network, serialize_network
from .reduce import reduce_on, reduced_subspace_dim
from .siphon import DEFAULT_MAX_N, semilocking_report, semilocking_violation
from .stoich import conservation_basis, projected_dimension, stoich_matrix, subspace_basis

SCHEMA_VERSION = "1"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_UNDECIDED = 3
EXIT_TOO_LARGE = 4
EXIT_SIMULATION = 5


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _load(path: str) -> ReactionNetwork:
    try:
        return load_network(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None


def _names(net, members) -> list[str]:
    return net.format_set(members)


def _parse_set(net: ReactionNetwork, text: str) -> frozenset[int]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    if not names:
        raise CliError("empty species set")
    return net.resolve(names)


def _max_n() -> int:
    raw = os.environ.get("CRNP_MAX_N")
    if raw is None:
        return DEFAULT_MAX_N
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"CRNP_MAX_N must be an integer, got {raw!r}") from None


# -- analyze ---------------------------------------------------------------------------

def certificate_document(net: ReactionNetwork, cert: PersistenceCertificate) -> dict:
    """JSON-ready certificate; everything outside ``meta`` is deterministic."""
    full = with_single_block(net)
    dec = cert.decomposition
    canonical = serialize_network(net)
    blocks = []
    for p, block in enumerate(dec.blocks):
        blocks.append({
            "name": full.block_names[p],
            "reactions": sorted(block),
            "species": _names(net, dec.block_species[p]),
            "dimension": dec.block_dims[p],
        })
    records = []
    for rec in cert.records:
        rep, an, dis = rec.report, rec.analysis, rec.discharge
        cp = rep.complement_partition
        records.append({
            "members": _names(net, rep.members),
            "trivial": rep.trivial,
            "boundary": str(rep.boundary),
            "face_dim": rep.boundary.face_dim,
            "complement_projection_dim": projected_dimension(net, net.all_species - rep.members),
            "partition": {"tf": _names(net, cp.tf), "sr": _names(net, cp.sr), "tr": _names(net, cp.tr)},
            "case": an.case_label.value,
            "meets_shared_species": an.meets_sc,
            "restrictions": [
                {
                    "block": r.block,
                    "members": _names(net, r.members),
                    "kind": r.kind.value,
                    "face_dim": r.face_dim,
                    "block_dim": r.block_dim,
                }
                for r in an.restrictions
            ],
            "rule": dis.rule.value,
            "applicable": [r.value for r in rec.applicable],
            "citation": dis.citation,
            "justification": dis.justification,
            "witnesses": dis.witnesses,
        })
    basis = conservation_basis(stoich_matrix(net))
    return {
        "schema_version": SCHEMA_VERSION,
        "network_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "species": list(net.names),
        "conservation_basis": basis.as_strings(),
        "decomposition": {
            "blocks": blocks,
            "shared_species": _names(net, dec.intersecting),
        },
        "semilocking_sets": records,
        "verdict": cert.verdict.value,
        "verdict_text": cert.verdict_text,
        "conditional": cert.conditional,
        "caveats": list(cert.caveats),
        "meta": {"tool_version": __version__},
    }


def cmd_analyze(args) -> int:
    net = _load(args.network)
    try:
        cert = certify_persistence(net, _max_n())
    except TooLarge as exc:
        raise CliError(str(exc), EXIT_TOO_LARGE) from None
    text = json.dumps(certificate_document(net, cert), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if cert.verdict is Verdict.PERSISTENT else EXIT_UNDECIDED


# -- explain ---------------------------------------------------------------------------

def explain_set(net: ReactionNetwork, members) -> list[str]:
    """Human-readable analysis of one candidate set; first line is a summary."""
    w = net.resolve(members)
    bad = semilocking_violation(net, w)
    if bad is not None:
        rx = net.reactions[bad]
        return [f"semilocking: no; witness reaction {bad}: {rx.format(net.names)}"]
    full = with_single_block(net)
    dec = decompose(full)
    report = semilocking_report(full, w)
    analysis = case_label(dec, w)
    dis = apply_rules(full, dec, w, analysis, report)
    boundary = report.boundary.kind.value.lower()
    lines = [f"semilocking: yes; boundary: {boundary}; rule: {dis.rule.value} ({dis.citation})"]
    lines.append(f"set: {{{', '.join(_names(net, w))}}}{' (all species)' if report.trivial else ''}")
    lines.append(
        f"face dimension: {report.boundary.face_dim} (stoichiometric dimension {_dim(net)}); "
        f"complement projection dimension: {projected_dimension(net, net.all_species - w)}"
    )
    cp = report.complement_partition
    for label, part in (("tf", cp.tf), ("sr", cp.sr), ("tr", cp.tr)):
        lines.append(f"W^{label}: {{{', '.join(_names(net, part))}}}")
    lines.append(f"case: {analysis.case_label.value}; meets shared species: {'yes' if analysis.meets_sc else 'no'}")
    for r in analysis.restrictions:
        lines.append(
            f"  block {r.block} ({full.block_names[r.block]}, dim {r.block_dim}): "
            f"{{{', '.join(_names(net, r.members))}}} -> {r.kind.value}"
        )
    if not report.trivial:
        hits, withheld = evaluate_rules(full, dec, report, analysis)
        if hits:
            lines.append("applicable rules: " + ", ".join(h[0].value for h in hits))
        for rule, blocks in withheld:
            lines.append(f"withheld: {rule.value} (blocks {', '.join(map(str, blocks))} not 2-dimensional)")
    lines.append(f"justification: {dis.justification}")
    return lines


def _dim(net: ReactionNetwork) -> int:
    return subspace_basis(stoich_matrix(net)).dim


def cmd_explain(args) -> int:
    net = _load(args.network)
    w = _parse_set(net, args.set)
    for line in explain_set(net, w):
        print(line)
    return EXIT_OK


# -- simulate --------------------------------------------------------------------------

def parse_init(net: ReactionNetwork, text: str) -> np.ndarray:
    values = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, raw = item.partition("=")
        if not sep:
            raise CliError(f"bad --init entry {item!r}; expected Name=value")
        name = name.strip()
        try:
            v = float(raw)
        except ValueError:
            raise CliError(f"bad value for {name}: {raw.strip()!r}") from None
        if not (math.isfinite(v) and v > 0):
            raise CliError(f"initial value for {name} must be positive, got {raw.strip()}")
        values[net.index_of(name)] = v
    missing = [s.name for s in net.species if s.index not in values]
    if missing:
        raise CliError(f"--init is missing species: {', '.join(missing)}")
    return np.array([values[j] for j in range(net.n)])


def run_report_document(net, state, report) -> dict:
    series = report.lyapunov_series
    lyap = None
    if series.size:
        v = series[:, 1]
        lyap = {
            "samples": int(v.size),
            "initial": float(v[0]),
            "final": float(v[-1]),
            "max_increase": float(np.max(np.diff(v))) if v.size > 1 else 0.0,
            "min": float(v.min()),
        }
    return {
        "conservation_drift": report.conservation_drift,
        "min_concentration": dict(zip(net.names, map(float, report.min_concentration))),
        "terminal_state": dict(zip(net.names, map(float, report.terminal_state))),
        "equilibrium_residual": report.equilibrium_residual,
        "reference_equilibrium": None if report.equilibrium is None else [f"{x:.17g}" for x in report.equilibrium],
        "lyapunov": lyap,
        "step": state.step_h,
        "delays_used": [float(d * state.step_h) for d in state.delay_offsets],
        "warnings": list(state.warnings),
    }


def cmd_simulate(args) -> int:
    net = _load(args.network)
    psi = HistoryFunction.constant(parse_init(net, args.init))
    if not (args.step > 0 and math.isfinite(args.step)):
        raise CliError("--step must be positive")
    if not (args.t_end > 0 and math.isfinite(args.t_end)):
        raise CliError("--t-end must be positive")
    if args.every < 1:
        raise CliError("--every must be at least 1")
    if args.tau_override is not None and not (args.tau_override >= 0 and math.isfinite(args.tau_override)):
        raise CliError("--tau-override must be non-negative")
    try:
        state, report = simulate(
            net, psi, args.t_end, args.step, delays=args.tau_override, interpolation=args.interpolation
        )
    except (StepTooLarge, MemoryCapExceeded, WindowTooShort) as exc:
        raise CliError(str(exc)) from None
    except SimulationError as exc:
        raise CliError(str(exc), EXIT_SIMULATION) from None
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_trajectory_csv(state, net.names, fh, args.every)
    else:
        write_trajectory_csv(state, net.names, sys.stdout, args.every)
    doc = json.dumps(run_report_document(net, state, report), indent=2) + "\n"
    if args.report:
        Path(args.report).write_text(doc)
    elif args.out:
        sys.stdout.write(doc)
    else:
        sys.stderr.write(doc)
    return EXIT_OK


# -- reduce ------------------------------------------------------------------------------

def cmd_reduce(args) -> int:
    net = _load(args.network)
    keep = _parse_set(net, args.keep)
    rs = reduce_on(net, keep)
    sys.stdout.write(rs.to_text())
    d = reduced_subspace_dim(rs)
    print(f"# reduced dimension {d}, kept species {len(keep)}")
    return EXIT_OK


# -- entry point -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crnp", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"crnp {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="certify persistence and print a JSON certificate")
    a.add_argument("network")
    a.add_argument("--out", help="write the JSON here instead of stdout")
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("explain", help="walk through the analysis of one species set")
    e.add_argument("network")
    e.add_argument("--set", required=True, help='comma-separated species, e.g. "X1,X2"')
    e.set_defaults(func=cmd_explain)

    s = sub.add_parser("simulate", help="integrate from a constant history")
    s.add_argument("network")
    s.add_argument("--init", required=True, help='constant history, e.g. "X1=2,X2=0.5"')
    s.add_argument("--tau-override", type=float, default=None, help="use this delay for every reaction")
    s.add_argument("--t-end", type=float, default=10.0)
    s.add_argument("--step", type=float, default=1e-3)
    s.add_argument("--every", type=int, default=1, help="write every N-th grid point")
    s.add_argument("--interpolation", choices=("hermite", "linear"), default="hermite")
    s.add_argument("--out", help="CSV path (default stdout)")
    s.add_argument("--report", help="RunReport JSON path")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("reduce", help="print the reduced system on a species subset")
    r.add_argument("network")
    r.add_argument("--keep", required=True)
    r.set_defaults(func=cmd_reduce)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"crnp: {exc}", file=sys.stderr)
        return exc.code
    except TooLarge as exc:
        print(f"crnp: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except (NetworkError, UnknownSpecies) as exc:
        print(f"crnp: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CRNError as exc:
        print(f"crnp: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
