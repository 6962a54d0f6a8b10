"""Seeded identity suites behind ``hallmhd verify``.

Every check yields a :class:`Row` with an absolute discrepancy ``value`` and
a ``normalizer``; the row passes when value <= tolerance * normalizer.  For
cancellations the normaliser is the largest individual term of the group,
never the (vanishing) sum.  Trial ``i`` uses seed ``seed + i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import curl, random_field, random_solenoidal
from .hall import (
    decompose_hall_2d,
    decompose_hall_3d,
    divcurl_identity,
    divcurl_normalizers,
    grouped_bounds_witness_3d,
    z1_equation_residual,
    z2_equation_residual,
)
from .mhd import State, energy_flux_hall, hall_flux_scale, hall_term
from .spectral import Grid

__all__ = ["SUITES", "DEFAULT_N", "Row", "run_suite", "suite_rows"]

SUITES = ("identities2d", "identities3d", "divcurl", "residuals")
DEFAULT_N = {"identities2d": 64, "identities3d": 32, "divcurl": 64, "residuals": 64}

TOL_CANCEL = 1e-10
TOL_SUM = 1e-9
TOL_RESIDUAL = 1e-8


@dataclass(frozen=True)
class Row:
    suite: str
    identity: str
    seed: int
    value: float
    normalizer: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value)) and self.value <= self.tolerance * self.normalizer

    def as_list(self) -> list:
        return [self.suite, self.identity, self.seed, self.value, self.normalizer, self.tolerance, self.passed]


HEADER = ["suite", "identity", "seed", "value", "normalizer", "tolerance", "pass"]


def _hall_common(suite, seed, b) -> list[Row]:
    h1 = hall_term(b, "curl_cross")
    h2 = hall_term(b, "curl_advect")
    return [
        Row(suite, "est11", seed, abs(energy_flux_hall(b)), hall_flux_scale(b), TOL_CANCEL),
        Row(suite, "hall_rewrite", seed, (h1 - h2).l2_norm(), h1.l2_norm(), TOL_CANCEL),
    ]


def _identities2d(seed: int, n: int) -> list[Row]:
    s = "identities2d"
    b = random_solenoidal(Grid(2, n), (n - 1) // 3, seed, "b")
    br = decompose_hall_2d(b, 1.0)
    rows = []
    for d, tag in ((1, "est19"), (2, "est20")):
        val, norm = br.cancellation(d)
        rows.append(Row(s, tag, seed, abs(val), norm, TOL_CANCEL))
    total, direct, norm = br.decomposition()
    rows.append(Row(s, "est16_22", seed, abs(total - direct), norm, TOL_SUM))
    return rows + _hall_common(s, seed, b)


def _identities3d(seed: int, n: int) -> list[Row]:
    s = "identities3d"
    b = random_solenoidal(Grid(3, n), (n - 1) // 3, seed, "b")
    br = decompose_hall_3d(b, 1.0)
    rows = []
    for k in (1, 2, 3):
        for tag, (val, norm) in br.cancellations(k).items():
            rows.append(Row(s, f"{tag}_k{k}", seed, abs(val), norm, TOL_CANCEL))
        for tag, (lhs, rhs, norm) in br.regroupings(k).items():
            rows.append(Row(s, f"{tag}_k{k}", seed, abs(lhs - rhs), norm, TOL_SUM))
    total, direct, norm = br.decomposition()
    rows.append(Row(s, "est87_89", seed, abs(total - direct), norm, TOL_SUM))
    for gi in grouped_bounds_witness_3d(b).identities:
        rows.append(Row(s, gi.name, seed, abs(gi.lhs - gi.rhs), gi.normalizer, TOL_SUM))
    return rows + _hall_common(s, seed, b)


def _divcurl(seed: int, n: int) -> list[Row]:
    s = "divcurl"
    grid = Grid(2, n)
    K = (n - 1) // 3
    f = random_field(grid, K, [seed, 0])
    g41 = curl(random_field(grid, K, [seed, 1]))
    g42 = random_solenoidal(grid, K, [seed, 2])
    l41, r41, _, _ = divcurl_identity(f, g41)
    _, _, l42, r42 = divcurl_identity(f, g42)
    n41, _ = divcurl_normalizers(f, g41)
    _, n42 = divcurl_normalizers(f, g42)
    return [
        Row(s, "est41", seed, abs(l41 - r41), n41, TOL_CANCEL),
        Row(s, "est42", seed, abs(l42 - r42), n42, TOL_CANCEL),
    ]


def _residuals(seed: int, n: int) -> list[Row]:
    s = "residuals"
    grid = Grid(2, n)
    K = n // 4
    state = State(random_solenoidal(grid, K, [seed, 0], "u"), random_solenoidal(grid, K, [seed, 1], "b"))
    return [
        Row(s, "est29", seed, z1_equation_residual(state), 1.0, TOL_RESIDUAL),
        Row(s, "est33", seed, z2_equation_residual(state), 1.0, TOL_RESIDUAL),
    ]


_BUILDERS = {
    "identities2d": _identities2d,
    "identities3d": _identities3d,
    "divcurl": _divcurl,
    "residuals": _residuals,
}


def suite_rows(suite: str, seed: int, n: int | None = None) -> list[Row]:
    """All rows of one suite for a single seed."""
    if suite not in _BUILDERS:
        raise ValueError(f"unknown suite {suite!r}")
    return _BUILDERS[suite](seed, n or DEFAULT_N[suite])


def run_suite(suite: str, trials: int, seed: int, n: int | None = None):
    """Yield rows for ``trials`` seeds starting at ``seed``; ``all`` runs every suite."""
    if trials < 0:
        raise ValueError("trials must be >= 0")
    names = SUITES if suite == "all" else (suite,)
    for name in names:
        for i in range(trials):
            yield from suite_rows(name, seed + i, n)
