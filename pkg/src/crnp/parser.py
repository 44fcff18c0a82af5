"""Reader and writer for the line-oriented network text format.

    # comment
    species X1 X2 X3
    subnet left {
        X2 + X1 <-> 2 X1   [k=1,1, tau=0.1,0.1]
    }
    subnet right {
        X3 + X1 <-> 2 X1   [k=1,1, tau=0.1,0.1]
    }

Reactions outside a ``subnet`` block are only allowed when the file has no
``subnet`` blocks at all; they then form one implicit block.
"""

from __future__ import annotations

import re
from pathlib import Path

from .errors import (
    DuplicateSpeciesDecl,
    EmptyNetwork,
    NegativeDelay,
    NonPositiveRate,
    NetworkError,
    ParseError,
)
from .model import NAME_RE, Complex, Reaction, ReactionNetwork, Species

_REACTION_RE = re.compile(
    r"^(?P<lhs>[^\[]*?)\s*(?P<arrow><->|->)\s*(?P<rhs>[^\[]*?)\s*(?:\[(?P<params>[^\]]*)\])?\s*$"
)
_PARAM_RE = re.compile(r"\s*(k|tau)\s*=\s*(.*?)\s*(?=,\s*(?:k|tau)\s*=|$)")
_TERM_RE = re.compile(r"^(?:(\d+)\s*)?([A-Za-z_][A-Za-z0-9_]*)$")
_SUBNET_RE = re.compile(r"^subnet\s+(\S+)\s*\{\s*(.*)$")


def _parse_complex(text: str, lineno: int) -> list[tuple[str, int]]:
    text = text.strip()
    if text == "0":
        return []
    if not text:
        raise ParseError("missing complex", lineno)
    terms = []
    for raw in text.split("+"):
        m = _TERM_RE.match(raw.strip())
        if not m:
            raise ParseError(f"bad term {raw.strip()!r}", lineno)
        coeff = int(m.group(1)) if m.group(1) else 1
        if coeff < 1:
            raise ParseError(f"coefficient must be >= 1 in {raw.strip()!r}", lineno)
        terms.append((m.group(2), coeff))
    return terms


def _parse_numbers(text: str, key: str, lineno: int) -> list[float]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        try:
            out.append(float(tok))
        except ValueError:
            raise ParseError(f"bad number {tok!r} for {key}", lineno) from None
    return out


def _parse_params(text: str | None, lineno: int, count: int) -> tuple[list[float], list[float]]:
    if text is None or not text.strip():
        raise ParseError("missing [k=..., tau=...] annotation", lineno)
    values: dict[str, list[float]] = {}
    pos = 0
    for m in _PARAM_RE.finditer(text):
        if m.start() != pos and text[pos:m.start()].strip(" ,"):
            raise ParseError(f"cannot parse parameters {text!r}", lineno)
        key = m.group(1)
        if key in values:
            raise ParseError(f"parameter {key} given twice", lineno)
        values[key] = _parse_numbers(m.group(2), key, lineno)
        pos = m.end()
    if text[pos:].strip(" ,"):
        raise ParseError(f"cannot parse parameters {text!r}", lineno)
    if "k" not in values:
        raise ParseError("missing rate constant k", lineno)
    ks = values["k"]
    taus = values.get("tau", [0.0])
    if len(ks) == 1:
        ks = ks * count
    if len(taus) == 1:
        taus = taus * count
    if len(ks) != count or len(taus) != count:
        raise ParseError(f"expected {count} value(s) for k and tau", lineno)
    return ks, taus


def _strip_comment(line: str) -> str:
    pos = line.find("#")
    return line if pos < 0 else line[:pos]


def parse_network(text: str) -> ReactionNetwork:
    """Parse network text; see the module docstring for the grammar."""
    declared: list[str] | None = None
    # (lhs terms, rhs terms, k, tau, lineno, block)
    pending: list[tuple] = []
    blocks: list[str] = []
    top_level_lines: list[int] = []
    current: int | None = None
    current_start = 0
    block_sizes: dict[int, int] = {}

    def handle_reaction(body: str, lineno: int):
        m = _REACTION_RE.match(body)
        if not m:
            raise ParseError(f"cannot parse reaction {body!r}", lineno)
        lhs = _parse_complex(m.group("lhs"), lineno)
        rhs = _parse_complex(m.group("rhs"), lineno)
        reversible = m.group("arrow") == "<->"
        ks, taus = _parse_params(m.group("params"), lineno, 2 if reversible else 1)
        if current is None:
            top_level_lines.append(lineno)
        else:
            block_sizes[current] = block_sizes.get(current, 0) + (2 if reversible else 1)
        pending.append((lhs, rhs, ks[0], taus[0], lineno, current))
        if reversible:
            pending.append((rhs, lhs, ks[1], taus[1], lineno, current))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        while line:
            is_subnet = line.startswith("subnet") and (len(line) == 6 or not (line[6].isalnum() or line[6] == "_"))
            if current is None and is_subnet:
                m = _SUBNET_RE.match(line)
                if not m:
                    raise ParseError("expected 'subnet NAME {'", lineno)
                name = m.group(1)
                if not NAME_RE.match(name):
                    raise ParseError(f"bad subnet name {name!r}", lineno)
                if name in blocks:
                    raise ParseError(f"subnet {name} declared twice", lineno)
                blocks.append(name)
                current = len(blocks) - 1
                current_start = lineno
                line = m.group(2).strip()
                continue
            if line.startswith("}"):
                if current is None:
                    raise ParseError("'}' without an open subnet", lineno)
                if block_sizes.get(current, 0) == 0:
                    raise ParseError(f"subnet {blocks[current]} is empty", lineno)
                current = None
                line = line[1:].strip()
                continue
            if line.startswith("species") and (len(line) == 7 or line[7].isspace()):
                if current is not None:
                    raise ParseError("species directive inside subnet", lineno)
                if declared is not None:
                    raise DuplicateSpeciesDecl("species directive given twice", lineno)
                names = line.split()[1:]
                for name in names:
                    if not NAME_RE.match(name):
                        raise ParseError(f"bad species name {name!r}", lineno)
                dupes = sorted({x for x in names if names.count(x) > 1})
                if dupes:
                    raise DuplicateSpeciesDecl(f"species {dupes[0]} declared twice", lineno)
                declared = names
                line = ""
                continue
            if is_subnet:
                raise ParseError("nested subnet blocks are not allowed", lineno)
            body, sep, rest = line.partition("}")
            handle_reaction(body.strip(), lineno)
            line = (sep + rest).strip()

    if current is not None:
        raise ParseError(f"subnet {blocks[current]} is never closed", current_start)
    if blocks and top_level_lines:
        raise ParseError("reaction outside a subnet block", top_level_lines[0])
    if not pending:
        raise EmptyNetwork("network has no reactions")

    if declared is not None:
        order = list(declared)
    else:
        order = []
        for lhs, rhs, *_ in pending:
            for name, _c in lhs + rhs:
                if name not in order:
                    order.append(name)
    index = {name: i for i, name in enumerate(order)}

    reactions = []
    owners = []
    for lhs, rhs, k, tau, lineno, block in pending:
        try:
            reactant = _to_complex(lhs, index)
            product = _to_complex(rhs, index)
        except KeyError as exc:
            raise ParseError(f"species {exc.args[0]} not in species directive", lineno) from None
        try:
            reactions.append(Reaction(reactant, product, k, tau))
        except (NonPositiveRate, NegativeDelay) as exc:
            raise type(exc)(f"line {lineno}: {exc}") from None
        except NetworkError as exc:
            raise ParseError(str(exc), lineno) from None
        owners.append(block)

    species = tuple(Species(i, name) for i, name in enumerate(order))
    if blocks:
        partition = tuple(
            frozenset(i for i, b in enumerate(owners) if b == p) for p in range(len(blocks))
        )
        return ReactionNetwork(species, tuple(reactions), partition, tuple(blocks))
    return ReactionNetwork(
        species, tuple(reactions), (frozenset(range(len(reactions))),), ("main",), implicit_partition=True
    )


def _to_complex(terms, index) -> Complex:
    acc: dict[int, int] = {}
    for name, c in terms:
        j = index[name]
        acc[j] = acc.get(j, 0) + c
    return Complex.from_mapping(acc)


def load_network(path) -> ReactionNetwork:
    return parse_network(Path(path).read_text(encoding="utf-8"))


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_network(net: ReactionNetwork) -> str:
    """Canonical text form; parsing it gives back an equal network."""
    names = net.names
    lines = ["species " + " ".join(names)]

    def reaction_line(i):
        rx = net.reactions[i]
        return f"{rx.format(names)} [k={_fmt(rx.rate_k)}, tau={_fmt(rx.delay_tau)}]"

    if net.partition is None or net.implicit_partition:
        lines += [reaction_line(i) for i in range(net.r)]
    else:
        block_names = net.block_names or tuple(f"block{p}" for p in range(len(net.partition)))
        if any(b and max(b) - min(b) + 1 != len(b) for b in net.partition):
            # interleaved blocks cannot keep reaction order through a reparse
            raise NetworkError("cannot serialize interleaved partition blocks")
        order = sorted(range(len(net.partition)), key=lambda p: min(net.partition[p], default=net.r))
        for p in order:
            lines.append(f"subnet {block_names[p]} {{")
            lines += ["    " + reaction_line(i) for i in sorted(net.partition[p])]
            lines.append("}")
    return "\n".join(lines) + "\n"

