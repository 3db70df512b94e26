"""Technology-independent design proxies for NMR against its counterpart MMR.

Gate totals and logic depth stand in for area and delay; the voter share of the
system gate count stands in for how much of the area and power the voters take.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from redlab.core.logging import get_logger
from redlab.services.function_units import FunctionUnitSpec
from redlab.services.netlist import Netlist, gate_count, logic_depth
from redlab.services.voters import RedundancyScheme, build_redundant_system, build_voter

logger = get_logger(__name__)


@dataclass(frozen=True)
class DesignProxyRow:
    unit: str
    scheme: str
    label: str
    units: int
    tolerance: int
    voter_gates: int
    voter_depth: int
    system_gates: int
    system_depth: int
    voter_share: float


def counterpart_pairs(ks: Iterable[int]) -> list[tuple[RedundancyScheme, RedundancyScheme]]:
    """(NMR, MMR) pairs with the same best-placement tolerance: k-MMR against (2k-5)MR."""
    pairs = []
    for k in ks:
        mmr = RedundancyScheme.mmr(k)
        pairs.append((mmr.counterpart(), mmr))
    return pairs


def system_totals(unit: Netlist, scheme: RedundancyScheme) -> tuple[int, int]:
    """Gate total and logic depth of the redundant system, not counting the output taps."""
    system = build_redundant_system(unit, scheme)
    taps = scheme.unit_count * unit.output_count
    # every input-to-output path crosses exactly one tap
    return gate_count(system).total - taps, logic_depth(system) - 1


def design_proxy_row(unit_spec: FunctionUnitSpec, scheme: RedundancyScheme) -> DesignProxyRow:
    unit = unit_spec.build()
    voter = build_voter(scheme)
    system_gates, system_depth = system_totals(unit, scheme)
    voter_gates = gate_count(voter).total
    voters_total = voter_gates * unit.output_count

    return DesignProxyRow(
        unit=str(unit_spec),
        scheme=str(scheme),
        label=scheme.label,
        units=scheme.unit_count,
        tolerance=scheme.claimed_tolerance,
        voter_gates=voter_gates,
        voter_depth=logic_depth(voter),
        system_gates=system_gates,
        system_depth=system_depth,
        voter_share=voters_total / system_gates,
    )


def design_proxy_rows(
    unit_spec: FunctionUnitSpec,
    pairs: Sequence[tuple[RedundancyScheme, RedundancyScheme]],
) -> list[DesignProxyRow]:
    rows = []
    for nmr, mmr in pairs:
        rows.append(design_proxy_row(unit_spec, nmr))
        rows.append(design_proxy_row(unit_spec, mmr))
    logger.info("comparison.rows.completed", extra={"unit": str(unit_spec), "rows": len(rows)})
    return rows
