"""Voxelized measurable subsets of [-1,1)^2 x [1,2) on a dyadic lattice.

A GridSet at resolution (L1, L2, L3) stores a boolean occupancy array of
shape (2^(L1+1), 2^(L2+1), 2^L3) over half-open cells; axis 0 is zeta1,
axis 1 is zeta2, axis 2 is sigma.  Measures, fiber lengths and projection
measures are exact (occupied-cell counts times powers of two).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dyadic import Box, DyadicInterval, Tile
from .params import bucket_left_closed

GSET_MAGIC = b"GSET1"

AXIS_DOMAINS = {"zeta1": (-1.0, 1.0), "zeta2": (-1.0, 1.0), "sigma": (1.0, 2.0)}


class InfeasibleSpecError(ValueError):
    pass


@dataclass(frozen=True)
class CellSet1D:
    """Cells of width 2^-width_exp tiling [lo, lo + n 2^-width_exp)."""

    lo: float
    width_exp: int
    mask: np.ndarray  # bool, 1-d

    @property
    def measure(self) -> float:
        return int(self.mask.sum()) * 2.0 ** (-self.width_exp)

    @property
    def measure_frac(self) -> Fraction:
        return Fraction(int(self.mask.sum()), 2**self.width_exp)

    def cell_interval(self, i: int) -> tuple[float, float]:
        w = 2.0 ** (-self.width_exp)
        return self.lo + i * w, self.lo + (i + 1) * w

    def abs_index(self, i: int) -> int:
        """Absolute dyadic index of cell i at scale width_exp."""
        base = Fraction(self.lo) * 2**self.width_exp
        assert base.denominator == 1
        return int(base) + i


@dataclass(frozen=True)
class CellSet2D:
    """Projected cell set over (zeta_i, sigma)."""

    axis: str  # 'zeta1' or 'zeta2'
    lo: tuple[float, float]
    width_exps: tuple[int, int]
    mask: np.ndarray  # bool, 2-d

    @property
    def measure(self) -> float:
        return int(self.mask.sum()) * 2.0 ** (-sum(self.width_exps))

    @property
    def measure_frac(self) -> Fraction:
        return Fraction(int(self.mask.sum()), 2 ** sum(self.width_exps))


@dataclass(frozen=True)
class Stratum:
    K: int
    subset: "GridSet"


@dataclass(frozen=True, eq=False)
class GridSet:
    L1: int
    L2: int
    L3: int
    occ: np.ndarray  # bool, shape (2^(L1+1), 2^(L2+1), 2^L3)

    def __post_init__(self) -> None:
        shape = (1 << (self.L1 + 1), 1 << (self.L2 + 1), 1 << self.L3)
        if self.occ.shape != shape or self.occ.dtype != np.bool_:
            raise ValueError(f"occupancy must be bool of shape {shape}")

    # ---- basic geometry -------------------------------------------------

    @property
    def resolution(self) -> tuple[int, int, int]:
        return (self.L1, self.L2, self.L3)

    @property
    def cell_volume(self) -> float:
        return 2.0 ** (-(self.L1 + self.L2 + self.L3))

    @property
    def count(self) -> int:
        return int(self.occ.sum())

    @property
    def is_empty(self) -> bool:
        return not self.occ.any()

    def measure(self) -> float:
        """|Omega|, exactly count * cell volume."""
        return self.count * self.cell_volume

    def measure_frac(self) -> Fraction:
        return Fraction(self.count, 2 ** (self.L1 + self.L2 + self.L3))

    def key(self) -> bytes:
        return struct.pack("BBB", self.L1, self.L2, self.L3) + np.packbits(
            self.occ.reshape(-1)
        ).tobytes()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GridSet)
            and self.resolution == other.resolution
            and bool(np.array_equal(self.occ, other.occ))
        )

    def __hash__(self) -> int:
        return hash(self.key())

    # ---- set algebra -----------------------------------------------------

    def _like(self, occ: np.ndarray) -> "GridSet":
        return GridSet(self.L1, self.L2, self.L3, occ)

    def union(self, other: "GridSet") -> "GridSet":
        self._check_same_resolution(other)
        return self._like(self.occ | other.occ)

    def intersect(self, other: "GridSet") -> "GridSet":
        self._check_same_resolution(other)
        return self._like(self.occ & other.occ)

    def difference(self, other: "GridSet") -> "GridSet":
        self._check_same_resolution(other)
        return self._like(self.occ & ~other.occ)

    def contains(self, other: "GridSet") -> bool:
        self._check_same_resolution(other)
        return bool((other.occ & ~self.occ).sum() == 0)

    def _check_same_resolution(self, other: "GridSet") -> None:
        if self.resolution != other.resolution:
            raise ValueError("resolution mismatch")

    def swap_zeta(self) -> "GridSet":
        """Exchange the zeta1 and zeta2 axes."""
        return GridSet(self.L2, self.L1, self.L3, self.occ.transpose(1, 0, 2).copy())

    # ---- fibers, projections, strata --------------------------------------

    def fiber_length(self, axis: str, base: tuple[int, int]) -> float:
        """Exact 1-d measure of the fiber over a base cell.

        axis 'pi13': base is (i1, i3), the fiber runs along zeta2.
        axis 'pi23': base is (i2, i3), the fiber runs along zeta1.
        """
        if axis == "pi13":
            i1, i3 = base
            return int(self.occ[i1, :, i3].sum()) * 2.0 ** (-self.L2)
        if axis == "pi23":
            i2, i3 = base
            return int(self.occ[:, i2, i3].sum()) * 2.0 ** (-self.L1)
        raise ValueError(f"unknown axis {axis!r}")

    def project(self, which: str):
        """Projection as a cell set with exact measure.

        'pi13'  -> CellSet2D over (zeta1, sigma)
        'pi23'  -> CellSet2D over (zeta2, sigma)
        'pi1_of_pi13' -> CellSet1D over zeta1
        'pi1_of_pi23' -> CellSet1D over zeta2
        """
        if which == "pi13":
            return CellSet2D("zeta1", (-1.0, 1.0), (self.L1, self.L3), self.occ.any(axis=1))
        if which == "pi23":
            return CellSet2D("zeta2", (-1.0, 1.0), (self.L2, self.L3), self.occ.any(axis=0))
        if which == "pi1_of_pi13":
            return CellSet1D(-1.0, self.L1, self.occ.any(axis=(1, 2)))
        if which == "pi1_of_pi23":
            return CellSet1D(-1.0, self.L2, self.occ.any(axis=(0, 2)))
        raise ValueError(f"unknown projection {which!r}")

    def _fiber_count_table(self, axis: str) -> np.ndarray:
        """Occupied-cell count of every fiber, indexed by the base cell."""
        if axis == "pi13":
            return self.occ.sum(axis=1, dtype=np.int64)  # (i1, i3)
        if axis == "pi23":
            return self.occ.sum(axis=0, dtype=np.int64)  # (i2, i3)
        raise ValueError(f"unknown axis {axis!r}")

    def fiber_bucket_table(self, axis: str) -> np.ndarray:
        """Dyadic bucket K per base cell: 2^-K <= fiber length < 2^-K+1.

        Entries without fiber are set to the sentinel minimum int.
        """
        counts = self._fiber_count_table(axis)
        L_free = self.L2 if axis == "pi13" else self.L1
        buckets = np.full(counts.shape, np.iinfo(np.int64).min, dtype=np.int64)
        nz = counts > 0
        # fiber length c * 2^-L has bucket L - floor(log2 c)
        logs = np.frompyfunc(lambda c: c.bit_length() - 1, 1, 1)(counts[nz])
        buckets[nz] = L_free - logs.astype(np.int64)
        return buckets

    def stratify_constant_fiber(self, axis: str = "pi13") -> list[Stratum]:
        """Partition into strata of dyadically-constant fiber length.

        A point lands in bucket K when the fiber through it has length in
        [2^-K, 2^-K+1).  K >= -1; the strata partition the set exactly.
        """
        buckets = self.fiber_bucket_table(axis)
        present = np.unique(buckets[buckets != np.iinfo(np.int64).min])
        strata = []
        for K in sorted(int(k) for k in present):
            if axis == "pi13":
                sel = (buckets == K)[:, None, :]
            else:
                sel = (buckets == K)[None, :, :]
            strata.append(Stratum(K, self._like(self.occ & sel)))
        return strata

    def constant_fiber_bucket(self, axis: str = "pi13") -> int | None:
        """The single stratum bucket, or None if fibers span several buckets."""
        strata = self.stratify_constant_fiber(axis)
        if len(strata) != 1:
            return None
        return strata[0].K

    # ---- restriction ------------------------------------------------------

    def _axis_cells(self, axis_idx: int) -> tuple[Fraction, Fraction, int, int]:
        if axis_idx == 0:
            return Fraction(-1), Fraction(1), self.L1, 1 << (self.L1 + 1)
        if axis_idx == 1:
            return Fraction(-1), Fraction(1), self.L2, 1 << (self.L2 + 1)
        return Fraction(1), Fraction(2), self.L3, 1 << self.L3

    def _axis_inclusion(self, axis_idx: int, lo: Fraction, hi: Fraction) -> np.ndarray:
        """Half-cell rule: cell included iff it overlaps [lo,hi) by >= w/2."""
        alo, ahi, L, n = self._axis_cells(axis_idx)
        i0, i1 = inclusion_range(alo, ahi, L, n, lo, hi)
        mask = np.zeros(n, dtype=bool)
        mask[i0:i1] = True
        return mask

    def restrict(self, region, dilation: float = 1.0) -> "GridSet":
        """Omega intersected with the dilated, domain-clipped region.

        region is a Box, a Tile, or a pair ((lo1,hi1),(lo2,hi2)) of zeta
        intervals; the sigma extent of a tile/rectangle region is the whole
        [1,2).  Dilation scales every axis interval about its center; cells
        overlapping the result by at least half a cell are kept.
        """
        if isinstance(region, Box):
            region = region.tile
        if isinstance(region, Tile):
            ivals = [
                (region.i1.lo_frac, region.i1.hi_frac),
                (region.i2.lo_frac, region.i2.hi_frac),
                (Fraction(1), Fraction(2)),
            ]
        else:
            (lo1, hi1), (lo2, hi2) = region
            ivals = [
                (Fraction(lo1), Fraction(hi1)),
                (Fraction(lo2), Fraction(hi2)),
                (Fraction(1), Fraction(2)),
            ]
        c = Fraction(dilation)
        masks = []
        for ax, (lo, hi) in enumerate(ivals):
            mid = (lo + hi) / 2
            half = (hi - lo) / 2 * c
            masks.append(self._axis_inclusion(ax, mid - half, mid + half))
        sel = masks[0][:, None, None] & masks[1][None, :, None] & masks[2][None, None, :]
        return self._like(self.occ & sel)

    # ---- random subsets ---------------------------------------------------

    def random_subset(self, seed: int, density: float = 0.5) -> "GridSet":
        rng = np.random.default_rng(seed)
        keep = rng.random(self.occ.shape) < density
        return self._like(self.occ & keep)


def inclusion_range(
    alo: Fraction, ahi: Fraction, L: int, n: int, lo: Fraction, hi: Fraction
) -> tuple[int, int]:
    """Cell index range kept by the half-cell rule for the clipped [lo, hi).

    A cell of width w = 2^-L is kept iff its overlap with the interval
    (clipped to the axis [alo, ahi)) is at least w/2; ties keep the cell.
    The kept cells are exactly those whose centers lie in the closed clipped
    interval, hence form one contiguous index range.
    """
    lo, hi = max(lo, alo), min(hi, ahi)
    w = Fraction(1, 2**L)
    if hi - lo < w / 2:
        return 0, 0  # no cell can reach half-cell overlap
    i_start = -((-((lo - alo) / w - Fraction(1, 2))).__floor__())  # ceil
    i_end = ((hi - alo) / w + Fraction(1, 2)).__floor__()
    return max(0, i_start), min(n, i_end)


# ---- generators -----------------------------------------------------------


def empty_set(res: tuple[int, int, int]) -> GridSet:
    L1, L2, L3 = res
    return GridSet(L1, L2, L3, np.zeros((1 << (L1 + 1), 1 << (L2 + 1), 1 << L3), dtype=bool))


def full_domain(res: tuple[int, int, int]) -> GridSet:
    L1, L2, L3 = res
    return GridSet(L1, L2, L3, np.ones((1 << (L1 + 1), 1 << (L2 + 1), 1 << L3), dtype=bool))


def _interval_cell_range(iv: DyadicInterval, L: int, lo: int) -> tuple[int, int]:
    """Cell index range of a dyadic interval on an axis with 2^-L cells.

    lo is the axis origin in cell units (e.g. -2^L for the zeta axes).
    """
    if iv.j > L:
        raise InfeasibleSpecError(
            f"interval scale {iv.j} finer than the lattice (L={L})"
        )
    f = L - iv.j
    return (iv.n << f) - lo, ((iv.n + 1) << f) - lo


def box_set(tile: Tile, res: tuple[int, int, int]) -> GridSet:
    """The extruded box tile x [1,2) as a GridSet."""
    g = empty_set(res)
    a0, a1 = _interval_cell_range(tile.i1, res[0], -(1 << res[0]))
    b0, b1 = _interval_cell_range(tile.i2, res[1], -(1 << res[1]))
    occ = g.occ.copy()
    if not (0 <= a0 < a1 <= occ.shape[0] and 0 <= b0 < b1 <= occ.shape[1]):
        raise InfeasibleSpecError("tile lies outside [-1,1)^2")
    occ[a0:a1, b0:b1, :] = True
    return GridSet(*res, occ)


def union_of_boxes(tiles, res: tuple[int, int, int]) -> GridSet:
    g = empty_set(res)
    for t in tiles:
        g = g.union(box_set(t, res))
    return g


def random_set(res: tuple[int, int, int], density: float, seed: int) -> GridSet:
    rng = np.random.default_rng(seed)
    g = empty_set(res)
    return GridSet(*res, rng.random(g.occ.shape) < density)


def random_constant_fiber(
    res: tuple[int, int, int], K: int, footprint_density: float, seed: int
) -> GridSet:
    """Random set whose every nonempty pi13-fiber has exactly 2^(L2-K) cells.

    The (zeta1, sigma) footprint takes round(density * #cells) cells, chosen
    by a seeded permutation, so the footprint measure is deterministic.
    """
    L1, L2, L3 = res
    if K < -1 or K > L2:
        raise InfeasibleSpecError(
            f"fiber bucket K={K} not realizable at L2={L2} (need -1 <= K <= L2)"
        )
    fiber_cells = 1 << (L2 - K)  # K = -1 gives the full column 2^(L2+1)
    n1, n3 = 1 << (L1 + 1), 1 << L3
    n2 = 1 << (L2 + 1)
    if fiber_cells > n2:
        raise InfeasibleSpecError("fiber exceeds the zeta2 extent")
    total = n1 * n3
    count = int(round(footprint_density * total))
    count = max(0, min(total, count))
    rng = np.random.default_rng(seed)
    chosen = rng.permutation(total)[:count]
    occ = np.zeros((n1, n2, n3), dtype=bool)
    for flat in chosen:
        i1, i3 = divmod(int(flat), n3)
        cols = rng.choice(n2, size=fiber_cells, replace=False)
        occ[i1, cols, i3] = True
    return GridSet(L1, L2, L3, occ)


def checkerboard(res: tuple[int, int, int], period: int) -> GridSet:
    if period < 1:
        raise InfeasibleSpecError("checkerboard period must be >= 1")
    L1, L2, L3 = res
    i1 = np.arange(1 << (L1 + 1))[:, None, None] // period
    i2 = np.arange(1 << (L2 + 1))[None, :, None] // period
    i3 = np.arange(1 << L3)[None, None, :] // period
    return GridSet(L1, L2, L3, (i1 + i2 + i3) % 2 == 0)


def from_generator(spec: str, res: tuple[int, int, int], seed: int = 0) -> GridSet:
    """Build a GridSet from a compact generator description.

    Accepted forms:
      full
      box:J,K,n1,n2                      tile I(J,n1) x I(K,n2), extruded
      boxes:J,K,n1,n2|J,K,n1,n2|...      union of boxes
      random:DENSITY
      cfiber:K,FOOTPRINT_DENSITY        random constant-fiber
      checker:PERIOD
      file:PATH                          GSET file (resolution from the file)
    """
    kind, _, rest = spec.partition(":")
    if kind == "full":
        return full_domain(res)
    if kind == "box":
        j, k, n1, n2 = (int(x) for x in rest.split(","))
        return box_set(Tile(DyadicInterval(j, n1), DyadicInterval(k, n2)), res)
    if kind == "boxes":
        tiles = []
        for part in rest.split("|"):
            j, k, n1, n2 = (int(x) for x in part.split(","))
            tiles.append(Tile(DyadicInterval(j, n1), DyadicInterval(k, n2)))
        return union_of_boxes(tiles, res)
    if kind == "random":
        return random_set(res, float(rest), seed)
    if kind == "cfiber":
        k_str, dens = rest.split(",")
        return random_constant_fiber(res, int(k_str), float(dens), seed)
    if kind == "checker":
        return checkerboard(res, int(rest))
    if kind == "file":
        return load_gset(rest)
    raise InfeasibleSpecError(f"unknown generator {spec!r}")


# ---- GSET file format -------------------------------------------------------


def save_gset(g: GridSet, path: str) -> None:
    """Bit-exact set file: magic, L1 L2 L3 as uint8, then packed occupancy
    (i1 slowest-varying, i3 fastest, least-significant bit first per byte).
    """
    bits = g.occ.reshape(-1)
    payload = np.packbits(bits, bitorder="little").tobytes()
    with open(path, "wb") as f:
        f.write(GSET_MAGIC)
        f.write(struct.pack("BBB", g.L1, g.L2, g.L3))
        f.write(payload)


def load_gset(path: str) -> GridSet:
    with open(path, "rb") as f:
        magic = f.read(5)
        if magic != GSET_MAGIC:
            raise ValueError(f"not a GSET file: bad magic {magic!r}")
        L1, L2, L3 = struct.unpack("BBB", f.read(3))
        total = (1 << (L1 + 1)) * (1 << (L2 + 1)) * (1 << L3)
        payload = f.read((total + 7) // 8)
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=total, bitorder="little")
    occ = bits.astype(bool).reshape((1 << (L1 + 1), 1 << (L2 + 1), 1 << L3))
    return GridSet(L1, L2, L3, occ)


def projection_bucket(g: GridSet, axis: str = "pi13") -> int:
    """Left-closed bucket J of the projection measure: 2^-J <= |proj| < 2^-J+1."""
    m = g.project(axis).measure_frac
    return bucket_left_closed(m)
