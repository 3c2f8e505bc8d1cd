"""Families mutually orthogonal with respect to a positive weight.

Every member is kept as a coefficient row over the seeds, so a member
costs at most one evaluation per seed no matter how many projections
built it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import logfire
import numpy as np

from src.errors import DegenerateFamilyError, DimensionMismatchError, FamilyNotCertifiedError, WeightError
from src.integrate.estimate import IntegralEstimate
from src.integrate.field import ScalarField, combine
from src.integrate.integrate import inner_product, is_positive_weight
from src.integrate.settings import IntegratorSettings
from src.region.region import Region

ORTHOGONALITY_TOLERANCE = 1e-6
DROP_THRESHOLD = 1e-10


@dataclass(frozen=True)
class OrthogonalFamily:
    region: Region
    weight: ScalarField
    members: tuple[ScalarField, ...]
    norms: tuple[IntegralEstimate, ...]
    residual: float
    tolerance: float
    dropped: tuple[int, ...] = ()  # 1-based seed positions
    seeds: tuple[ScalarField, ...] = ()
    coefficients: Optional[np.ndarray] = None  # (K, len(seeds)) rows over the seeds
    certified: bool = True

    @property
    def size(self) -> int:
        return len(self.members)

    def labels(self) -> list[str]:
        return [m.label for m in self.members]

    @classmethod
    def from_members(
        cls,
        members: Sequence[ScalarField],
        weight: ScalarField,
        region: Region,
        settings: Optional[IntegratorSettings] = None,
        *,
        tolerance: float = ORTHOGONALITY_TOLERANCE,
        certify: bool = False,
    ) -> "OrthogonalFamily":
        """Wrap a given family as-is; `certified` records whether its residual is within tolerance."""
        _check_inputs(members, weight, region)
        norms = tuple(inner_product(m, m, weight, region, settings) for m in members)
        residual = _residual(members, norms, weight, region, settings)
        family = cls(
            region=region,
            weight=weight,
            members=tuple(members),
            norms=norms,
            residual=residual,
            tolerance=tolerance,
            seeds=tuple(members),
            certified=residual <= tolerance,
        )
        if certify and not family.certified:
            raise FamilyNotCertifiedError(
                f"family residual {residual:.3g} exceeds orthogonality tolerance {tolerance:.3g}"
            )
        return family


def _check_inputs(seeds: Sequence[ScalarField], weight: ScalarField, region: Region) -> None:
    if not seeds:
        raise DegenerateFamilyError("a family needs at least one function")
    if not is_positive_weight(weight):
        raise WeightError(f"weight '{weight.label}' has no declared positivity floor")
    for s in (*seeds, weight):
        if s.dim != region.dim:
            raise DimensionMismatchError(f"'{s.label}' has dimension {s.dim}, region has {region.dim}")


def _residual(
    members: Sequence[ScalarField],
    norms: Sequence[IntegralEstimate],
    weight: ScalarField,
    region: Region,
    settings: Optional[IntegratorSettings],
) -> float:
    worst = 0.0
    for i, j in itertools.combinations(range(len(members)), 2):
        scale = norms[i].value * norms[j].value
        if scale <= 0:
            return float("inf")
        ip = inner_product(members[i], members[j], weight, region, settings)
        worst = max(worst, abs(ip.value) / np.sqrt(scale))
    return float(worst)


def orthogonality_residual(family: OrthogonalFamily, settings: Optional[IntegratorSettings] = None) -> float:
    """max over i != j of |<φ_i, φ_j>| / sqrt(<φ_i, φ_i><φ_j, φ_j>), recomputed under `settings`."""
    norms = [inner_product(m, m, family.weight, family.region, settings) for m in family.members]
    return _residual(family.members, norms, family.weight, family.region, settings)


def _member(seeds: Sequence[ScalarField], row: np.ndarray, k: int) -> ScalarField:
    used = [i for i in range(k + 1) if row[i] != 0.0]
    if used == [k] and row[k] == 1.0:
        return seeds[k]
    return combine([seeds[i] for i in used], [float(row[i]) for i in used])


def gram_schmidt(
    seeds: Sequence[ScalarField],
    weight: ScalarField,
    region: Region,
    settings: Optional[IntegratorSettings] = None,
    *,
    tolerance: float = ORTHOGONALITY_TOLERANCE,
    drop_threshold: float = DROP_THRESHOLD,
) -> OrthogonalFamily:
    """Modified Gram-Schmidt in <u, v> = ∫ u v w, with one re-orthogonalization pass.

    Every projection coefficient <φ, φ_j>/<φ_j, φ_j> is integrated against
    the partially orthogonalized candidate itself, so the second pass
    removes what quadrature error the first one left behind. The first
    surviving seed is kept as it is. A seed whose remaining norm² falls
    below `drop_threshold` times the largest seed norm² is dropped and its
    1-based position recorded.
    """
    _check_inputs(seeds, weight, region)
    with logfire.span("gram_schmidt", seeds=len(seeds), weight=weight.label):
        scale = max(inner_product(s, s, weight, region, settings).value for s in seeds)
        if not scale > 0:
            raise DegenerateFamilyError("every seed has zero weighted norm")

        rows: list[np.ndarray] = []
        members: list[ScalarField] = []
        norms: list[IntegralEstimate] = []
        dropped: list[int] = []
        for k in range(len(seeds)):
            row = np.zeros(len(seeds))
            row[k] = 1.0
            candidate = seeds[k]
            for _ in range(2):
                for r, m, n in zip(rows, members, norms):
                    c = inner_product(candidate, m, weight, region, settings).value / n.value
                    row = row - c * r
                    candidate = _member(seeds, row, k)
            norm = inner_product(candidate, candidate, weight, region, settings)
            if norm.value < drop_threshold * scale:
                dropped.append(k + 1)
                logfire.info("dropped seed {position}: '{seed}'", position=k + 1, seed=seeds[k].label, norm2=norm.value)
                continue
            rows.append(row)
            members.append(candidate)
            norms.append(norm)

        residual = _residual(members, norms, weight, region, settings)
        if residual > tolerance:
            raise FamilyNotCertifiedError(
                f"orthogonalized family has residual {residual:.3g} > tolerance {tolerance:.3g}"
            )
    return OrthogonalFamily(
        region=region,
        weight=weight,
        members=tuple(members),
        norms=tuple(norms),
        residual=residual,
        tolerance=tolerance,
        dropped=tuple(dropped),
        seeds=tuple(seeds),
        coefficients=np.array(rows),
        certified=True,
    )


def project(u: ScalarField, family: OrthogonalFamily, settings: Optional[IntegratorSettings] = None) -> ScalarField:
    """Weighted orthogonal projection of `u` onto the span of the family."""
    coeffs = [
        inner_product(u, m, family.weight, family.region, settings).value / n.value
        for m, n in zip(family.members, family.norms)
    ]
    return combine(list(family.members), coeffs)
