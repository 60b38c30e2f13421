"""Dyadic intervals, tiles, boxes, and the off-diagonal Whitney pair machinery.

Intervals are half-open [n 2^-j, (n+1) 2^-j), so same-scale intervals are
disjoint or equal and the usual measure-zero boundary set is literally empty
on any lattice.  A Whitney pair consists of two same-scale intervals (per
axis) that are non-adjacent but have adjacent parents; this is the classical
construction that tiles the off-diagonal exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

# the standard square [-1,1)^2 used by tiles; each factor is the symmetric
# union of the two scale-0 dyadic intervals [-1,0) and [0,1)
SYMMETRIC_1D = (-1, 1)
SYMMETRIC_SQUARE = (SYMMETRIC_1D, SYMMETRIC_1D)


class InvalidScaleError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """The interval [n 2^-j, (n+1) 2^-j)."""

    j: int
    n: int

    @property
    def lo(self) -> float:
        return self.n * 2.0 ** (-self.j)

    @property
    def hi(self) -> float:
        return (self.n + 1) * 2.0 ** (-self.j)

    @property
    def lo_frac(self) -> Fraction:
        return Fraction(self.n) * Fraction(2) ** (-self.j)

    @property
    def hi_frac(self) -> Fraction:
        return Fraction(self.n + 1) * Fraction(2) ** (-self.j)

    @property
    def length(self) -> float:
        return 2.0 ** (-self.j)

    def parent(self) -> "DyadicInterval":
        return DyadicInterval(self.j - 1, self.n >> 1)

    def ancestor(self, j: int) -> "DyadicInterval":
        if j > self.j:
            raise InvalidScaleError(f"ancestor scale {j} finer than {self.j}")
        return DyadicInterval(j, self.n >> (self.j - j))

    def subdivide(self, j: int) -> list["DyadicInterval"]:
        if j < self.j:
            raise InvalidScaleError(f"subdivision scale {j} coarser than {self.j}")
        f = j - self.j
        return [DyadicInterval(j, (self.n << f) + i) for i in range(1 << f)]

    def contains(self, x: float) -> bool:
        return self.lo <= x < self.hi

    def is_adjacent(self, other: "DyadicInterval") -> bool:
        """Distinct same-scale intervals whose closures intersect."""
        if self.j != other.j:
            raise InvalidScaleError("adjacency is defined per scale")
        return abs(self.n - other.n) == 1


def _index_range(j: int, domain) -> tuple[int, int]:
    """Index range [n_lo, n_hi) of scale-j dyadic subintervals of the domain.

    The domain is a DyadicInterval or an (lo, hi) pair of dyadic rationals
    (the symmetric interval (-1, 1) is the main non-dyadic-domain case).
    """
    if isinstance(domain, DyadicInterval):
        lo, hi = domain.lo_frac, domain.hi_frac
    else:
        lo, hi = Fraction(domain[0]), Fraction(domain[1])
    n_lo = lo * 2**j
    n_hi = hi * 2**j
    if n_lo.denominator != 1 or n_hi.denominator != 1 or n_hi <= n_lo:
        raise InvalidScaleError(f"scale {j} does not subdivide domain {domain}")
    return int(n_lo), int(n_hi)


def is_whitney_index_pair(n: int, m: int) -> bool:
    """Non-adjacent same-scale indices with adjacent, distinct parents."""
    return abs(n - m) >= 2 and abs((n >> 1) - (m >> 1)) == 1


def whitney_pairs_1d(j: int, domain) -> list[tuple[DyadicInterval, DyadicInterval]]:
    """All ordered Whitney pairs of scale-j subintervals of the domain.

    A pair (I, I') qualifies when the closures of I and I' are disjoint while
    their parents are distinct with intersecting closures.  The separation
    between members is then 2^-j or 2 * 2^-j, inside the [2^-j, 3 * 2^-j]
    bracket.
    """
    n_lo, n_hi = _index_range(j, domain)
    pairs = []
    for n in range(n_lo, n_hi):
        for m in (n - 3, n - 2, n + 2, n + 3):
            if n_lo <= m < n_hi and is_whitney_index_pair(n, m):
                pairs.append((DyadicInterval(j, n), DyadicInterval(j, m)))
    return pairs


@dataclass(frozen=True)
class Tile:
    """Product of two dyadic intervals; a member of T_{j,k}."""

    i1: DyadicInterval
    i2: DyadicInterval

    @property
    def j(self) -> int:
        return self.i1.j

    @property
    def k(self) -> int:
        return self.i2.j

    @property
    def area(self) -> float:
        return 2.0 ** (-self.j - self.k)

    def extrude(self) -> "Box":
        return Box(self)

    def key(self) -> tuple[int, int, int, int]:
        return (self.j, self.k, self.i1.n, self.i2.n)


@dataclass(frozen=True)
class Box:
    """Extrusion tile x [1,2); volume 2^-j-k."""

    tile: Tile

    @property
    def volume(self) -> float:
        return self.tile.area


@dataclass(frozen=True)
class WhitneyPair:
    """Tiles tau ~ kappa: per-axis Whitney pairs at common scales (j,k)."""

    tau: Tile
    kappa: Tile

    def __post_init__(self) -> None:
        if self.tau.j != self.kappa.j or self.tau.k != self.kappa.k:
            raise InvalidScaleError("Whitney pair members must share scales")
        for a, b in ((self.tau.i1, self.kappa.i1), (self.tau.i2, self.kappa.i2)):
            if not is_whitney_index_pair(a.n, b.n):
                raise ValueError("axis components are not a Whitney index pair")
        gh = self.separation()
        for gap, j in zip(gh, (self.tau.j, self.tau.k)):
            assert 2.0 ** (-j) <= gap <= 3.0 * 2.0 ** (-j)

    def separation(self) -> tuple[float, float]:
        """Per-axis distance between the closed components."""
        d1 = (abs(self.tau.i1.n - self.kappa.i1.n) - 1) * 2.0 ** (-self.tau.j)
        d2 = (abs(self.tau.i2.n - self.kappa.i2.n) - 1) * 2.0 ** (-self.tau.k)
        return d1, d2


def whitney_tiles(j: int, k: int, domain=SYMMETRIC_SQUARE) -> list[WhitneyPair]:
    """Ordered Whitney tile pairs at scales (j,k): the Cartesian combination
    of the per-axis 1-d pairs.  Every tau has at most 9 partners (3 per axis).
    """
    h_pairs = whitney_pairs_1d(j, domain[0])
    v_pairs = whitney_pairs_1d(k, domain[1])
    out = []
    for a, b in h_pairs:
        for c, d in v_pairs:
            out.append(WhitneyPair(Tile(a, c), Tile(b, d)))
    return out


def _midpoint_multiplicity_matrix(L: int) -> np.ndarray:
    """1-d Whitney multiplicities over cell midpoints of [-1,1) at resolution L.

    Cell i of 2^(L+1) cells has midpoint -1 + (i + 1/2) 2^-L, an odd multiple
    of 2^-(L+1).  Entry (a,b) counts the scales j at which the scale-j
    intervals containing the two midpoints form a Whitney pair.  No scale
    beyond L+1 can contribute: at scale L+1 every pair of distinct midpoints
    is already non-adjacent, so all finer parents are non-adjacent too.
    """
    ncells = 1 << (L + 1)
    u = 2 * np.arange(ncells, dtype=np.int64) + 1 - ncells  # units of 2^-(L+1)
    mult = np.zeros((ncells, ncells), dtype=np.int64)
    for j in range(0, L + 2):
        idx = u >> (L + 1 - j)  # floor division by 2^(L+1-j)
        na, nb = np.meshgrid(idx, idx, indexing="ij")
        whit = (np.abs(na - nb) >= 2) & (np.abs((na >> 1) - (nb >> 1)) == 1)
        mult += whit.astype(np.int64)
    return mult


def whitney_cover_check(L: int) -> tuple[bool, dict[int, int]]:
    """Brute-force exact-once coverage check at resolution L.

    For every ordered pair of lattice cells of [-1,1)^2 whose midpoints
    differ in BOTH coordinates there must be exactly one (j, k, tau, kappa)
    with tau ~ kappa whose components contain the respective midpoints.
    Pairs sharing a midpoint in some coordinate are the measure-zero
    exception and have multiplicity zero.

    Returns (all multiplicities one?, histogram multiplicity -> pair count).
    """
    if L > 5:
        raise ValueError("brute-force cover check is limited to L <= 5")
    m1 = _midpoint_multiplicity_matrix(L)
    off = ~np.eye(m1.shape[0], dtype=bool)
    vals, counts = np.unique(m1[off], return_counts=True)
    # 2-d multiplicity of a cell pair is the product of the per-axis ones;
    # histogram over off-in-both-coordinates pairs via the value counts
    hist: dict[int, int] = {}
    for va, ca in zip(vals, counts):
        for vb, cb in zip(vals, counts):
            key = int(va * vb)
            hist[key] = hist.get(key, 0) + int(ca * cb)
    ok = set(hist) == {1}
    return ok, hist
