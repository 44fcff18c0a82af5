"""Persistence certificates for networks assembled from subnetworks.

Every semilocking set W is split into its restrictions W ∩ S(p) to the
blocks.  Each restriction is classified by the face it cuts out of the
block's own stoichiometric subspace, and a fixed, ordered list of rules
decides whether the boundary face of W can be excluded from ω-limit sets:

    R1  some restriction is facet-type and W avoids the shared species
    R2  every restriction is vertex-type and W avoids the shared species
    R3  restrictions vertex-type or empty, W^cv nonempty, no shared species
    R4  restrictions vertex-type or empty, W^cv empty, no shared species
    R5  every restriction is facet-type or empty
    R6  some species of W sits only in facet-type restrictions
    R7  the complement splits into tf and tr only, with tf nonempty
    R8  the reduced system on W has dimension below |W|

The trivial set W = S is handled separately: its face is the origin, which a
nonnegative conservation law keeps out of every positive compatibility class.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .balance import deficiency, find_complex_balanced_equilibrium, is_weakly_reversible
from .errors import InternalInconsistency, NetworkError, NoPartition
from .model import ReactionNetwork, block_network, species_of_block, validate_network, with_single_block
from .reduce import reduce_on, reduced_subspace_dim
from .siphon import (
    DEFAULT_MAX_N,
    SemilockingReport,
    _require_semilocking,
    enumerate_semilocking,
    semilocking_report,
)
from .stoich import (
    _face_kernel_from_basis,
    face_dimension,
    has_nonnegative_conservation,
    stoich_matrix,
    subspace_basis,
)

log = logging.getLogger(__name__)


class RestrictionKind(str, Enum):
    EMPTY = "Empty"
    FACET = "FacetType"
    VERTEX = "VertexType"
    OTHER = "OtherType"


class Case(str, Enum):
    CASE_I = "CaseI"
    CASE_II = "CaseII"
    CASE_III = "CaseIII"
    UNCLASSIFIED = "Unclassified"


class Rule(str, Enum):
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"
    R4 = "R4"
    R5 = "R5"
    R6 = "R6"
    R7 = "R7"
    R8 = "R8"
    TRIVIAL = "TrivialConservation"
    UNDECIDED = "Undecided"


RULE_TITLES = {
    Rule.R1: "facet-type restriction, W avoids shared species",
    Rule.R2: "all restrictions vertex-type, W avoids shared species",
    Rule.R3: "vertex-or-empty restrictions with nonempty W^cv, W avoids shared species",
    Rule.R4: "vertex-or-empty restrictions with empty W^cv, W avoids shared species",
    Rule.R5: "every restriction facet-type or empty",
    Rule.R6: "a species of W lies only in facet-type restrictions",
    Rule.R7: "complement is tf and tr only, tf nonempty",
    Rule.R8: "reduced system on W has dimension below |W|",
    Rule.TRIVIAL: "nonnegative conservation law excludes the origin",
    Rule.UNDECIDED: "no rule applies",
}

# rules whose underlying results are stated for 2-dimensional blocks
TWO_D_RULES = frozenset({Rule.R2, Rule.R3, Rule.R4, Rule.R7})
RULE_ORDER = (Rule.R1, Rule.R2, Rule.R3, Rule.R4, Rule.R5, Rule.R6, Rule.R7, Rule.R8)


class Verdict(str, Enum):
    PERSISTENT = "Persistent"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class Decomposition:
    net: ReactionNetwork = field(repr=False)
    blocks: tuple[frozenset[int], ...]
    block_species: tuple[frozenset[int], ...]
    intersecting: frozenset[int]
    block_dims: tuple[int, ...]
    block_bases: tuple = field(default=(), repr=False, compare=False)


@dataclass(frozen=True)
class Restriction:
    block: int
    members: frozenset[int]
    kind: RestrictionKind
    face_dim: int | None
    block_dim: int

    @property
    def empty(self) -> bool:
        return not self.members

    @property
    def is_facet(self) -> bool:
        # face one below the block dimension, at any block dimension
        return bool(self.members) and self.block_dim >= 1 and self.face_dim == self.block_dim - 1

    @property
    def is_vertex(self) -> bool:
        return bool(self.members) and self.face_dim == 0


@dataclass(frozen=True)
class CaseAnalysis:
    members: frozenset[int]
    restrictions: tuple[Restriction, ...]
    case_label: Case
    meets_sc: bool
    cv: frozenset[int]
    cn: frozenset[int]


@dataclass(frozen=True)
class Discharge:
    rule: Rule
    justification: str
    witnesses: dict = field(default_factory=dict)

    @property
    def citation(self) -> str:
        return RULE_TITLES[self.rule]


@dataclass(frozen=True)
class SetRecord:
    report: SemilockingReport
    analysis: CaseAnalysis
    discharge: Discharge
    applicable: tuple[Rule, ...] = ()


@dataclass
class PersistenceCertificate:
    decomposition: Decomposition
    records: list[SetRecord]
    verdict: Verdict
    conditional: bool = False
    caveats: list[str] = field(default_factory=list)

    @property
    def verdict_text(self) -> str:
        if self.verdict is Verdict.PERSISTENT and self.conditional:
            return "Persistent (conditional on complex balance)"
        return self.verdict.value


# -- decomposition -------------------------------------------------------------

def decompose(net: ReactionNetwork) -> Decomposition:
    if net.partition is None:
        raise NoPartition("network has no subnetwork partition")
    block_species = tuple(species_of_block(net, p) for p in range(len(net.partition)))
    counts: dict[int, int] = {}
    for sp in block_species:
        for j in sp:
            counts[j] = counts.get(j, 0) + 1
    bases = tuple(subspace_basis(stoich_matrix(net, b)).vectors for b in net.partition)
    return Decomposition(
        net=net,
        blocks=net.partition,
        block_species=block_species,
        intersecting=frozenset(j for j, c in counts.items() if c >= 2),
        block_dims=tuple(len(b) for b in bases),
        block_bases=bases,
    )


def _block_semilocking(net: ReactionNetwork, block: frozenset[int], w: frozenset[int]) -> bool:
    for i in block:
        rx = net.reactions[i]
        if w & rx.product.support and not w & rx.reactant.support:
            return False
    return True


def restrict_semilocking(dec: Decomposition, members: Iterable[int | str], p: int) -> Restriction:
    """Restriction W ∩ S(p), classified by its face in block p.

    A nonempty restriction of a semilocking set is always semilocking in
    the block; a violation means the partition or the enumeration is wrong.
    """
    net = dec.net
    w = net.resolve(members)
    wp = w & dec.block_species[p]
    dim = dec.block_dims[p]
    if not wp:
        return Restriction(p, wp, RestrictionKind.EMPTY, None, dim)
    if not _block_semilocking(net, dec.blocks[p], wp):
        raise InternalInconsistency(
            f"restriction {net.format_set(wp)} of a semilocking set is not semilocking in block {p}"
        )
    bases = dec.block_bases or tuple(subspace_basis(stoich_matrix(net, b)).vectors for b in dec.blocks)
    face = len(_face_kernel_from_basis(bases[p], wp))
    if face == 0:
        kind = RestrictionKind.VERTEX
    elif face == dim - 1:
        kind = RestrictionKind.FACET
    else:
        kind = RestrictionKind.OTHER
    return Restriction(p, wp, kind, face, dim)


def case_label(dec: Decomposition, members: Iterable[int | str]) -> CaseAnalysis:
    net = dec.net
    w = _require_semilocking(net, members)
    restrictions = tuple(restrict_semilocking(dec, w, p) for p in range(len(dec.blocks)))
    kinds = [r.kind for r in restrictions]
    nonempty = [k for k in kinds if k is not RestrictionKind.EMPTY]
    if RestrictionKind.FACET in kinds:
        label = Case.CASE_I
    elif nonempty and all(k is RestrictionKind.VERTEX for k in kinds):
        label = Case.CASE_II
    elif nonempty and all(k in (RestrictionKind.VERTEX, RestrictionKind.EMPTY) for k in kinds):
        label = Case.CASE_III
    else:
        label = Case.UNCLASSIFIED
    comp = net.all_species - w
    in_empty_block = set()
    for r, sp in zip(restrictions, dec.block_species):
        if r.empty:
            in_empty_block |= sp
    cn = frozenset(comp & in_empty_block)
    return CaseAnalysis(
        members=w,
        restrictions=restrictions,
        case_label=label,
        meets_sc=bool(w & dec.intersecting),
        cv=frozenset(comp - cn),
        cn=cn,
    )


# -- rules ------------------------------------------------------------------------

@dataclass(frozen=True)
class _Context:
    net: ReactionNetwork
    dec: Decomposition
    report: SemilockingReport
    analysis: CaseAnalysis


def _names(net, s) -> str:
    return "{" + ", ".join(net.format_set(s)) + "}"


def _two_d_gate(ctx: _Context) -> list[int]:
    """Blocks with a nonempty restriction whose dimension is not 2."""
    return [r.block for r in ctx.analysis.restrictions if not r.empty and r.block_dim != 2]


def _r1(ctx):
    a = ctx.analysis
    if a.meets_sc:
        return None
    facets = [r for r in a.restrictions if r.is_facet]
    if not facets:
        return None
    r = facets[0]
    return (
        f"restriction {_names(ctx.net, r.members)} is facet-type in block {r.block} "
        f"(face {r.face_dim} = {r.block_dim} - 1) and W contains no shared species",
        {"facet_block": r.block, "face_dim": r.face_dim, "block_dim": r.block_dim},
    )


def _r2(ctx):
    a = ctx.analysis
    if a.meets_sc or a.case_label is not Case.CASE_II:
        return None
    full = face_dimension(ctx.net, a.members)
    if full != 0:
        return None
    return (
        "every restriction is vertex-type, W contains no shared species, and W is itself "
        "vertex-type (no nonzero stoichiometric vector vanishes on W)",
        {"full_face_dim": full},
    )


def _r3(ctx):
    a = ctx.analysis
    if a.meets_sc or a.case_label is not Case.CASE_III or not a.cv:
        return None
    return (
        f"restrictions are vertex-type or empty, W^cv = {_names(ctx.net, a.cv)} is nonempty "
        "and W contains no shared species",
        {"cv": ctx.net.format_set(a.cv)},
    )


def _r4(ctx):
    a = ctx.analysis
    if a.meets_sc or a.case_label is not Case.CASE_III or a.cv:
        return None
    return (
        f"restrictions are vertex-type or empty, W^cv is empty (W^cn = {_names(ctx.net, a.cn)}) "
        "and W contains no shared species",
        {"cn": ctx.net.format_set(a.cn)},
    )


def _r5(ctx):
    rs = ctx.analysis.restrictions
    if not all(r.empty or r.is_facet for r in rs):
        return None
    blocks = [r.block for r in rs if not r.empty]
    return (
        f"every nonempty restriction (blocks {blocks}) is facet-type in its block",
        {"facet_blocks": blocks},
    )


def _r6(ctx):
    a = ctx.analysis
    for j in sorted(a.members):
        touching = [r for r, sp in zip(a.restrictions, ctx.dec.block_species) if j in sp]
        if touching and all(r.is_facet for r in touching):
            name = ctx.net.species[j].name
            blocks = [r.block for r in touching]
            return (
                f"species {name} appears only in facet-type restrictions (blocks {blocks})",
                {"species": name, "facet_blocks": blocks},
            )
    return None


def _r7(ctx):
    part = ctx.report.complement_partition
    if part.sr or not part.tf:
        return None
    witness = {}
    comp = ctx.net.all_species - ctx.analysis.members
    for j in sorted(part.tf):
        for i, rx in enumerate(ctx.net.reactions):
            if rx.species <= comp and rx.net_change(j) != 0:
                witness[ctx.net.species[j].name] = i
                break
    return (
        f"complement splits into tf = {_names(ctx.net, part.tf)} and tr = {_names(ctx.net, part.tr)} "
        "with no semi-restricted species",
        {"tf_reactions": witness, "tr": ctx.net.format_set(part.tr)},
    )


def _r8(ctx):
    w = ctx.analysis.members
    d = reduced_subspace_dim(reduce_on(ctx.net, w))
    if d >= len(w):
        return None
    return (
        f"the reduced system on W has stoichiometric dimension {d} < |W| = {len(w)}",
        {"reduced_dim": d, "size": len(w)},
    )


_CHECKS = {
    Rule.R1: _r1,
    Rule.R2: _r2,
    Rule.R3: _r3,
    Rule.R4: _r4,
    Rule.R5: _r5,
    Rule.R6: _r6,
    Rule.R7: _r7,
    Rule.R8: _r8,
}


def evaluate_rules(net, dec, report: SemilockingReport, analysis: CaseAnalysis):
    """All rules whose preconditions hold, in order, plus withheld ones.

    Returns ``(hits, withheld)``: ``hits`` is a list of
    ``(rule, justification, witnesses)``; ``withheld`` lists
    ``(rule, offending blocks)`` for rules blocked only by the 2d gate.
    """
    ctx = _Context(net, dec, report, analysis)
    hits, withheld = [], []
    for rule in RULE_ORDER:
        res = _CHECKS[rule](ctx)
        if res is None:
            continue
        if rule in TWO_D_RULES:
            bad = _two_d_gate(ctx)
            if bad:
                withheld.append((rule, bad))
                continue
        hits.append((rule, res[0], res[1]))
    return hits, withheld


def _trivial_discharge(net) -> Discharge:
    ok, witness = has_nonnegative_conservation(stoich_matrix(net))
    if ok:
        vec = [str(x) for x in witness]
        return Discharge(
            Rule.TRIVIAL,
            f"nonnegative conservation law ({', '.join(vec)}) keeps the origin out of every "
            "positive compatibility class",
            {"conservation": vec},
        )
    return Discharge(Rule.UNDECIDED, "trivial set without a nonnegative conservation law", {})


def apply_rules(
    net: ReactionNetwork,
    dec: Decomposition,
    members: Iterable[int | str],
    analysis: CaseAnalysis | None = None,
    report: SemilockingReport | None = None,
) -> Discharge:
    """First applicable rule for one semilocking set (or Undecided)."""
    w = net.resolve(members)
    report = report or semilocking_report(net, w)
    analysis = analysis or case_label(dec, w)
    if report.trivial:
        return _trivial_discharge(net)
    hits, _ = evaluate_rules(net, dec, report, analysis)
    if not hits:
        return Discharge(Rule.UNDECIDED, "no rule applies", {})
    rule, why, wit = hits[0]
    return Discharge(rule, why, wit)


# -- certificate --------------------------------------------------------------------

def complex_balance_caveats(net: ReactionNetwork) -> list[str]:
    """Caveats for the network and each block whose complex balance is not shown."""
    out = []
    targets = [("network", net)]
    if net.partition is not None and len(net.partition) > 1:
        targets += [(f"block {p} ({net.block_names[p]})", block_network(net, p)) for p in range(len(net.partition))]
    elif net.partition is not None:
        targets = [(f"block 0 ({net.block_names[0]})", net)]
    for label, sub in targets:
        if not is_weakly_reversible(sub):
            out.append(f"{label}: complex balance unverified (not weakly reversible)")
            continue
        if deficiency(sub) == 0:
            continue
        if find_complex_balanced_equilibrium(sub) is None:
            out.append(f"{label}: complex balance unverified (no complex-balanced equilibrium found)")
    return out


def certify_persistence(net: ReactionNetwork, max_n: int = DEFAULT_MAX_N) -> PersistenceCertificate:
    diags = validate_network(net)
    if diags:
        raise NetworkError("; ".join(diags))
    net = with_single_block(net)
    dec = decompose(net)
    records = []
    caveats = complex_balance_caveats(net)
    conditional = bool(caveats)
    for report in enumerate_semilocking(net, max_n):
        analysis = case_label(dec, report.members)
        if report.trivial:
            discharge = _trivial_discharge(net)
            applicable = (discharge.rule,) if discharge.rule is not Rule.UNDECIDED else ()
        else:
            hits, withheld = evaluate_rules(net, dec, report, analysis)
            applicable = tuple(h[0] for h in hits)
            if hits:
                discharge = Discharge(*hits[0])
            else:
                discharge = Discharge(Rule.UNDECIDED, "no rule applies", {})
            if withheld and not hits:
                for rule, blocks in withheld:
                    dims = ", ".join(f"block {b} has dimension {dec.block_dims[b]}" for b in blocks)
                    caveats.append(
                        f"W = {_names(net, report.members)}: {rule.value} withheld, it needs 2-dimensional blocks ({dims})"
                    )
        records.append(SetRecord(report, analysis, discharge, applicable))
    verdict = Verdict.PERSISTENT if all(r.discharge.rule is not Rule.UNDECIDED for r in records) else Verdict.UNDECIDED
    log.debug("certified %d semilocking sets: %s", len(records), verdict.value)
    return PersistenceCertificate(dec, records, verdict, conditional, caveats)


def verify_record(net: ReactionNetwork, record: SetRecord) -> bool:
    """Re-derive a record's discharge from the raw network."""
    net = with_single_block(net)
    dec = decompose(net)
    w = record.report.members
    fresh = apply_rules(net, dec, w)
    if fresh.rule is not record.discharge.rule:
        return False
    if fresh.rule is Rule.TRIVIAL:
        return w == net.all_species
    if fresh.rule is Rule.UNDECIDED:
        return True
    hits, _ = evaluate_rules(net, dec, semilocking_report(net, w), case_label(dec, w))
    return any(h[0] is record.discharge.rule for h in hits)
