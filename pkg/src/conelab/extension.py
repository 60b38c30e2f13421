"""Numerical evaluation of the cone extension of a set on a 4-d lattice.

The operator maps the characteristic function of Omega to

    F(x1, x2, x', t) = sum over quadrature points (z1, z2, s) in Omega of
                       w * exp(i (x1 z1 + x2 z2 + x' s + t z1 z2 / s))

with midpoint quadrature (optional s^3 subdivision per cell), evaluated on a
symmetric lattice [-R,R]^4 with step h.  Midpoint weights make F(0) = |Omega|
an exact identity up to rounding.

Two evaluation paths compute the same quadrature sum:

* ``direct``  - plane-wave summation over source points in cell index order,
  reduced with BLAS matrix products in fixed chunks; the reference path.
* ``binned``  - the sources live on a product grid of per-axis midpoints, so
  the sum factorizes into per-axis phase tables contracted against the
  occupancy tensor.  Identical quadrature, much faster, and required to agree
  with the direct path to 1e-6 relative on norms (observed ~1e-14).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gridset import GridSet
from .params import Params


class AliasingError(ValueError):
    pass


class UndefinedQuotientError(ValueError):
    pass


@dataclass(frozen=True)
class SpacetimeGrid:
    """Symmetric lattice with 2*floor(R/h)+1 points per axis, origin included."""

    R: float = 16.0
    h: float = 1.0

    def __post_init__(self) -> None:
        if self.h <= 0 or self.R < self.h:
            raise ValueError("need 0 < h <= R")
        if self.h > math.pi / 2:
            raise AliasingError(
                f"step h={self.h} exceeds pi/2; frequencies up to 2 would alias"
            )
        if self.points_per_axis > 81:
            raise ValueError("lattice too large; keep R/h <= 40")

    @property
    def half_points(self) -> int:
        return int(math.floor(self.R / self.h))

    @property
    def points_per_axis(self) -> int:
        return 2 * self.half_points + 1

    @property
    def origin_index(self) -> int:
        return self.half_points

    def axis(self) -> np.ndarray:
        n = self.half_points
        return self.h * (np.arange(2 * n + 1) - n)


@dataclass(frozen=True, eq=False)
class ExtensionField:
    values: np.ndarray  # complex, shape (N, N, N, N)
    grid: SpacetimeGrid
    resolution: tuple[int, int, int]
    subdivision: int
    omega_measure: float
    method: str

    @property
    def at_origin(self) -> complex:
        o = self.grid.origin_index
        return complex(self.values[o, o, o, o])

    def conj_residual(self) -> float:
        """max |F(-x) - conj F(x)| over the lattice."""
        flipped = self.values[::-1, ::-1, ::-1, ::-1]
        return float(np.abs(flipped - np.conj(self.values)).max())

    def swap_residual(self) -> float:
        """max |F(x2,x1,x',t) - F(x1,x2,x',t)|; zero for swap-symmetric sets."""
        return float(np.abs(self.values.transpose(1, 0, 2, 3) - self.values).max())


def _axis_midpoints(lo: float, L: int, ncells: int, s: int) -> np.ndarray:
    w = 2.0 ** (-L)
    return lo + (np.arange(ncells * s) + 0.5) * (w / s)


def _source_grid(omega: GridSet, s: int):
    """Per-axis midpoint coordinates and the subdivided occupancy tensor."""
    z1 = _axis_midpoints(-1.0, omega.L1, 1 << (omega.L1 + 1), s)
    z2 = _axis_midpoints(-1.0, omega.L2, 1 << (omega.L2 + 1), s)
    sg = _axis_midpoints(1.0, omega.L3, 1 << omega.L3, s)
    occ = np.repeat(np.repeat(np.repeat(omega.occ, s, 0), s, 1), s, 2)
    return z1, z2, sg, occ


def evaluate_field(
    omega: GridSet,
    grid: SpacetimeGrid | None = None,
    subdivision: int = 1,
    method: str = "auto",
) -> ExtensionField:
    """Quadrature samples of the extension of Omega on the spacetime lattice.

    subdivision s >= 1 places s^3 sub-midpoints in every cell, each with
    weight vol/s^3.  Deterministic for a fixed method and shapes.
    """
    if subdivision < 1:
        raise ValueError("subdivision must be >= 1")
    grid = grid or SpacetimeGrid()
    if method not in ("auto", "direct", "binned"):
        raise ValueError(f"unknown method {method!r}")
    resolved = "binned" if method == "auto" else method
    N = grid.points_per_axis
    if omega.is_empty:
        vals = np.zeros((N, N, N, N), dtype=np.complex128)
        return ExtensionField(vals, grid, omega.resolution, subdivision, 0.0, resolved)
    if resolved == "binned":
        vals = _evaluate_binned(omega, grid, subdivision)
    else:
        vals = _evaluate_direct(omega, grid, subdivision)
    return ExtensionField(
        vals, grid, omega.resolution, subdivision, omega.measure(), resolved
    )


def _evaluate_binned(omega: GridSet, grid: SpacetimeGrid, s: int) -> np.ndarray:
    z1, z2, sg, occ = _source_grid(omega, s)
    x = grid.axis()
    w = omega.cell_volume / s**3
    weights = occ.astype(np.float64) * w

    a = np.exp(1j * np.outer(x, z1))  # (N, U)
    b = np.exp(1j * np.outer(x, z2))  # (N, V)
    c = np.exp(1j * np.outer(x, sg))  # (N, W)
    phi = (z1[:, None, None] * z2[None, :, None]) / sg[None, None, :]  # (U,V,W)

    # G[t,u,v,w] = weights * e^{i t phi}; contract axes u, v, w in turn
    G = np.exp(1j * x[:, None] * phi.reshape(1, -1))
    G *= weights.reshape(1, -1)
    G = G.reshape((len(x),) + phi.shape)
    T1 = np.tensordot(G, a, axes=([1], [1]))  # (T, V, W, N1)
    T2 = np.tensordot(T1, b, axes=([1], [1]))  # (T, W, N1, N2)
    T3 = np.tensordot(T2, c, axes=([1], [1]))  # (T, N1, N2, N3)
    return np.ascontiguousarray(np.moveaxis(T3, 0, 3))  # (N1, N2, N3, T)


def _evaluate_direct(
    omega: GridSet, grid: SpacetimeGrid, s: int, chunk: int = 1024
) -> np.ndarray:
    """Reference plane-wave summation over sources in cell index order."""
    z1, z2, sg, occ = _source_grid(omega, s)
    idx = np.argwhere(occ)  # already in C (cell index) order
    p1 = z1[idx[:, 0]]
    p2 = z2[idx[:, 1]]
    p3 = sg[idx[:, 2]]
    phi = p1 * p2 / p3
    x = grid.axis()
    N = len(x)
    w = omega.cell_volume / s**3
    out = np.zeros((N * N, N * N), dtype=np.complex128)
    for start in range(0, len(p1), chunk):
        sl = slice(start, start + chunk)
        A = np.exp(1j * np.outer(p1[sl], x))
        B = np.exp(1j * np.outer(p2[sl], x))
        C = np.exp(1j * np.outer(p3[sl], x))
        D = np.exp(1j * np.outer(phi[sl], x))
        E12 = (A[:, :, None] * B[:, None, :]).reshape(len(A), -1)
        E34 = (C[:, :, None] * D[:, None, :]).reshape(len(A), -1)
        out += E12.T @ E34
    return (w * out).reshape(N, N, N, N)


def evaluate_at(omega: GridSet, points: np.ndarray, subdivision: int = 1) -> np.ndarray:
    """Direct quadrature sum at arbitrary spacetime points (M, 4)."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[None, :]
    if omega.is_empty:
        return np.zeros(len(points), dtype=np.complex128)
    z1, z2, sg, occ = _source_grid(omega, subdivision)
    idx = np.argwhere(occ)
    p1, p2, p3 = z1[idx[:, 0]], z2[idx[:, 1]], sg[idx[:, 2]]
    phi = p1 * p2 / p3
    w = omega.cell_volume / subdivision**3
    phase = (
        np.outer(points[:, 0], p1)
        + np.outer(points[:, 1], p2)
        + np.outer(points[:, 2], p3)
        + np.outer(points[:, 3], phi)
    )
    return w * np.exp(1j * phase).sum(axis=1)


def _lp_of_array(values: np.ndarray, p: float, h: float) -> float:
    if p <= 0 or not math.isfinite(p):
        raise ValueError("p must be a positive finite exponent")
    m2 = values.real**2 + values.imag**2
    total = float(np.sum(m2 ** (p / 2.0)))  # numpy pairwise reduction
    return (total * h**4) ** (1.0 / p)


def lp_norm(field: ExtensionField, p: float) -> float:
    """Lattice L^p norm (sum |F|^p h^4)^(1/p) over the truncated spacetime."""
    return _lp_of_array(field.values, p, field.grid.h)


def quotient(
    omega: GridSet,
    params: Params,
    grid: SpacetimeGrid | None = None,
    subdivision: int = 1,
    method: str = "auto",
) -> float:
    """The restriction quotient |E chi|_{2q} / |Omega|^(1/q')."""
    if omega.is_empty:
        raise UndefinedQuotientError("quotient of the empty set is undefined")
    field = evaluate_field(omega, grid, subdivision, method)
    return lp_norm(field, 2.0 * params.q) / omega.measure() ** (1.0 / params.qprime)


def bilinear_norm(
    omega_a: GridSet,
    omega_b: GridSet,
    q: float,
    grid: SpacetimeGrid | None = None,
    subdivision: int = 1,
    method: str = "auto",
) -> float:
    """|E chi_A * E chi_B|_q on the shared lattice."""
    if omega_a.resolution != omega_b.resolution:
        raise ValueError("resolution mismatch between the two sets")
    grid = grid or SpacetimeGrid()
    fa = evaluate_field(omega_a, grid, subdivision, method)
    fb = evaluate_field(omega_b, grid, subdivision, method)
    return _lp_of_array(fa.values * fb.values, q, grid.h)
