"""Computable upper-bound surrogates for the squared extension norm.

The Whitney sum runs over tile scales (j,k), weighting the largest mass a
10-dilated extruded tile can capture:

    M(Omega) = sum_{j,k} 2^{-(j+k)(1-2/q)} cap(j,k)^{1-1/q} |Omega|^{1/q}

with three cap profiles: the measured per-scale maxima of |Omega * 10 tau~|,
the Fubini product min{2^-J,2^-j} min{2^-K,2^-k}, and the four-component
regioned cap min{2^-J-K, 2^-j-K, 2^-j-k, rho^2C 2^-J-k}.  The sum is cut at
j,k = max(L1,L2)+4 and closed with analytic geometric tails that extend the
boundary terms by the continuum decay law 2^{-(j+k)(2-3/q)}.

The unknown absolute constant of the underlying bilinear estimate is never
asserted; every consumer treats these values as ratio-stable scales only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .gridset import GridSet, inclusion_range
from .params import Params, bucket_left_closed


@dataclass(frozen=True)
class CapProfile:
    """Cap choice for the Whitney sum.

    kind 'measured' takes exact per-scale maxima over tiles (of `reference`
    when given, else of the set being bounded -- the reference form is what
    makes the bound uniform over subsets).  'fubini' and 'regioned' use the
    closed-form caps; 'regioned' additionally needs the dyadic rho.
    """

    kind: str = "measured"
    rho: float = 1.0
    reference: GridSet | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("measured", "fubini", "regioned"):
            raise ValueError(f"unknown cap profile {self.kind!r}")


@dataclass
class MajorantReport:
    total: float
    window: float
    tail: float
    rows: list[tuple[int, int, float, float]]  # (j, k, cap, term)
    cap_kind: str
    jk_max: int
    J: int | None = None
    K: int | None = None


def _dilated_tile_ranges(L: int, ncells: int, j: int, dilation: int = 10):
    """Half-cell inclusion ranges of every dilated scale-j interval of [-1,1)."""
    alo, ahi = Fraction(-1), Fraction(1)
    out = []
    for n in range(-(1 << j), 1 << j):
        lo = Fraction(2 * n + 1 - dilation, 2 ** (j + 1))
        hi = Fraction(2 * n + 1 + dilation, 2 ** (j + 1))
        out.append(inclusion_range(alo, ahi, L, ncells, lo, hi))
    return out


def measured_caps(omega: GridSet, jk_max: int, dilation: int = 10) -> np.ndarray:
    """cap[j,k] = max over tiles tau in T_{j,k} of |Omega * dilation*tau~|."""
    counts = omega.occ.sum(axis=2, dtype=np.int64)  # (i1, i2), sigma collapsed
    pref = np.zeros((counts.shape[0] + 1, counts.shape[1] + 1), dtype=np.int64)
    pref[1:, 1:] = counts.cumsum(0).cumsum(1)
    vol = omega.cell_volume
    caps = np.zeros((jk_max + 1, jk_max + 1))
    r1 = {j: _dilated_tile_ranges(omega.L1, counts.shape[0], j, dilation) for j in range(jk_max + 1)}
    r2 = {k: _dilated_tile_ranges(omega.L2, counts.shape[1], k, dilation) for k in range(jk_max + 1)}
    for j in range(jk_max + 1):
        s1 = np.array([a for a, _ in r1[j]])
        e1 = np.array([b for _, b in r1[j]])
        for k in range(jk_max + 1):
            s2 = np.array([a for a, _ in r2[k]])
            e2 = np.array([b for _, b in r2[k]])
            sums = (
                pref[np.ix_(e1, e2)]
                - pref[np.ix_(s1, e2)]
                - pref[np.ix_(e1, s2)]
                + pref[np.ix_(s1, s2)]
            )
            caps[j, k] = int(sums.max()) * vol
    return caps


def fubini_caps(J: int, K: int, jk_max: int) -> np.ndarray:
    j = np.arange(jk_max + 1)
    cj = np.minimum(2.0 ** (-float(J)), 2.0 ** (-j))
    ck = np.minimum(2.0 ** (-float(K)), 2.0 ** (-j))
    return np.outer(cj, ck)


def regioned_caps(J: int, K: int, rho: float, C: float, jk_max: int) -> np.ndarray:
    j = np.arange(jk_max + 1, dtype=float)
    jj, kk = np.meshgrid(j, j, indexing="ij")
    return np.minimum.reduce(
        [
            np.full(jj.shape, 2.0 ** (-J - K)),
            2.0 ** (-jj - K),
            2.0 ** (-jj - kk),
            rho ** (2.0 * C) * 2.0 ** (-J - kk),
        ]
    )


def fubini_exponents(omega: GridSet) -> tuple[int, int]:
    """Left-closed buckets J of |pi13(Omega)| and K of the mean fiber length."""
    proj = omega.project("pi13").measure_frac
    J = bucket_left_closed(proj)
    K = bucket_left_closed(omega.measure_frac() / proj)
    return J, K


def whitney_majorant(
    omega: GridSet, params: Params, cap: CapProfile = CapProfile()
) -> MajorantReport:
    """The Whitney-sum majorant M(Omega) with the requested cap profile."""
    jk_max = max(omega.L1, omega.L2) + 4
    if omega.is_empty:
        return MajorantReport(0.0, 0.0, 0.0, [], cap.kind, jk_max)
    J = K = None
    if cap.kind == "measured":
        caps = measured_caps(cap.reference if cap.reference is not None else omega, jk_max)
    else:
        J, K = fubini_exponents(omega)
        if cap.kind == "fubini":
            caps = fubini_caps(J, K, jk_max)
        else:
            caps = regioned_caps(J, K, cap.rho, params.C, jk_max)

    q = params.q
    g = 2.0 / q - 1.0
    dd = 1.0 - 1.0 / q
    meas_factor = omega.measure() ** (1.0 / q)
    jk = np.arange(jk_max + 1)
    weight = 2.0 ** (np.add.outer(jk, jk) * g)
    terms = weight * caps**dd * meas_factor

    r = 2.0 ** (3.0 / q - 2.0)  # per-step tail ratio, < 1 for q > 3/2
    geo = r / (1.0 - r)
    tail = geo * (terms[jk_max, :].sum() + terms[:, jk_max].sum()) + geo**2 * terms[jk_max, jk_max]
    window = float(terms.sum())
    rows = [
        (int(j), int(k), float(caps[j, k]), float(terms[j, k]))
        for j in range(jk_max + 1)
        for k in range(jk_max + 1)
    ]
    return MajorantReport(window + float(tail), window, float(tail), rows, cap.kind, jk_max, J, K)


# ---- closed forms -----------------------------------------------------------


def _geom_finite(g: float, a: int, b: int) -> float:
    """sum_{i=a}^{b} 2^{i g}, zero when the range is empty."""
    if b < a:
        return 0.0
    if g == 0.0:
        return float(b - a + 1)
    return (2.0 ** ((b + 1) * g) - 2.0 ** (a * g)) / (2.0**g - 1.0)


def _geom_tail(e: float, a: int) -> float:
    """sum_{i=a}^{inf} 2^{i e} for e < 0."""
    assert e < 0.0
    return 2.0 ** (a * e) / (1.0 - 2.0**e)


def closed_form_bound(J: int, K: int, params: Params) -> float:
    """Exact four-region evaluation of the Whitney sum with the Fubini cap
    and |Omega| = 2^-J-K; bounds the squared norm up to the bilinear constant.
    """
    if J < -1 or K < -1:
        raise ValueError("J and K must be >= -1")
    q = params.q
    g = 2.0 / q - 1.0
    d = 1.0 - 1.0 / q
    e = 3.0 / q - 2.0
    X = 2.0 ** (-(J + K) / q)
    part1 = 2.0 ** (-(J + K) * d) * X * _geom_finite(g, 0, J) * _geom_finite(g, 0, K)
    part2 = 2.0 ** (-J * d) * X * _geom_finite(g, 0, J) * _geom_tail(e, K + 1)
    part3 = 2.0 ** (-K * d) * X * _geom_finite(g, 0, K) * _geom_tail(e, J + 1)
    part4 = X * _geom_tail(e, J + 1) * _geom_tail(e, K + 1)
    return part1 + part2 + part3 + part4


def _dyadic_exp(rho: float) -> int:
    m, e = math.frexp(rho)
    if m != 0.5 or rho > 1.0 or rho <= 0.0:
        raise ValueError(f"rho must be a dyadic 2^-d in (0,1], got {rho}")
    return 1 - e


def regioned_bound(
    J: int, K: int, rho: float, params: Params
) -> tuple[float, dict[str, float]]:
    """The four-region sum of the inverse-problem cap with log-offsets.

    Each scale pair (j,k) is assigned to the first region R1..R4 containing
    it (the regions cover the quadrant; first-match makes them a partition,
    and at rho = 1 the partition and caps reduce to the closed form).
    Returns (value, per-region totals).
    """
    d_exp = _dyadic_exp(rho)
    q, C = params.q, params.C
    ell = C * d_exp  # C * log2(1/rho)
    g = 2.0 / q - 1.0
    d = 1.0 - 1.0 / q
    e = 3.0 / q - 2.0
    X = 2.0 ** (-(J + K) / q)
    rho_cap = rho ** (2.0 * C * d)

    W = int(max(J, K, 0) + math.ceil(ell)) + 2
    totals = {"R1": 0.0, "R2": 0.0, "R3": 0.0, "R4": 0.0}
    for j in range(W + 1):
        for k in range(W + 1):
            if (j <= J - ell and k <= K) or (j <= J and k <= K - ell):
                totals["R1"] += 2.0 ** ((j + k) * g) * 2.0 ** (-(J + K) * d) * X
            elif (j >= J + ell and k <= K) or (j >= J and k <= K - ell):
                totals["R2"] += 2.0 ** ((j + k) * g) * 2.0 ** (-(j + K) * d) * X
            elif (j >= J + ell and k >= K) or (j >= J and k >= K + ell):
                totals["R3"] += 2.0 ** ((j + k) * g) * 2.0 ** (-(j + k) * d) * X
            elif j <= J + ell and k >= K - ell:
                totals["R4"] += 2.0 ** ((j + k) * g) * rho_cap * 2.0 ** (-(J + k) * d) * X
            else:  # pragma: no cover - the four regions cover the quadrant
                raise AssertionError(f"({j},{k}) not covered by any region")

    # analytic tails; beyond the window rows/columns classify as derived here
    jtail = _geom_tail(e, W + 1)
    # j > W: k <= K -> R2, K < k <= W -> R3
    totals["R2"] += jtail * 2.0 ** (-K * d) * X * _geom_finite(g, 0, min(K, W))
    totals["R3"] += jtail * X * _geom_finite(e, max(K + 1, 0), W)
    # k > W: j < J -> R4, J <= j <= W -> R3
    totals["R4"] += jtail * rho_cap * 2.0 ** (-J * d) * X * _geom_finite(g, 0, min(J - 1, W))
    totals["R3"] += jtail * X * _geom_finite(e, max(J, 0), W)
    # j > W and k > W -> R3
    totals["R3"] += jtail * jtail * X
    return sum(totals.values()), totals
