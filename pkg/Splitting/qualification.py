"""
Advisory checks of the domain qualification condition.

Convergence of PPXA needs the domains of the f_i to overlap in a strong
sense that has no finite numerical test. The structured cases below can
be recognised from domain descriptors; anything else is reported as
UNKNOWN and logged. A run is never blocked by the outcome.
"""
import enum
import logging
from dataclasses import dataclass, field
from typing import Optional

from Proximity.base import DomainKind, ProxFn

logger = logging.getLogger(__name__)


class Advisory(str, enum.Enum):
    SATISFIED = "satisfied"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class QualificationReport:
    status: Advisory
    reason: str
    case: Optional[str] = None
    restricted: tuple = field(default_factory=tuple)

    @property
    def satisfied(self):
        return self.status == Advisory.SATISFIED


def domain_descriptor(item):
    """DomainKind of a ProxFn, or the item itself when it already is one."""
    if isinstance(item, ProxFn):
        return DomainKind(item.domain)
    return DomainKind(item)


def _points_in_domains(functions, point):
    # bare descriptors cannot be checked; the assertion stands for them
    failing = []
    for index, f in enumerate(functions):
        if isinstance(f, ProxFn) and not f.in_domain(point):
            failing.append(index)
    return failing


def qualification_advisory(items, interior_point=None, common_point=None):
    """
    Classify a list of ProxFn (or DomainKind descriptors).

    SATISFIED when at most one domain is restricted, when
    ``interior_point`` is asserted to lie in the relative interior of
    every domain, or when every restricted domain is affine and
    ``common_point`` lies in all of them.

    For ``interior_point`` only domain membership is checked, and only for
    ProxFn items; a point on the boundary of a domain passes. Being in the
    relative interior remains the caller's assertion, and the report
    reason says so.
    """
    items = list(items)
    kinds = [domain_descriptor(item) for item in items]
    restricted = tuple(i for i, kind in enumerate(kinds) if kind != DomainKind.FULL)

    if len(restricted) <= 1:
        report = QualificationReport(
            Advisory.SATISFIED, "at most one potential has a restricted domain", "single_restriction", restricted
        )
    elif interior_point is not None and not _points_in_domains(items, interior_point):
        report = QualificationReport(
            Advisory.SATISFIED,
            "asserted point lies in every domain; relative interior not verified",
            "interior_point",
            restricted,
        )
    elif (
        common_point is not None
        and all(kinds[i] == DomainKind.AFFINE for i in restricted)
        and not _points_in_domains(items, common_point)
    ):
        report = QualificationReport(
            Advisory.SATISFIED, "all restricted domains are affine and share a point", "affine_common_point", restricted
        )
    else:
        names = ", ".join(f"f_{i}" for i in restricted)
        report = QualificationReport(
            Advisory.UNKNOWN,
            f"domains of {names} need a common point of their relative interiors; supply one to confirm",
            None,
            restricted,
        )

    if report.satisfied:
        logger.info(f"qualification: {report.reason}")
    else:
        logger.warning(f"qualification unknown: {report.reason}")
    return report
