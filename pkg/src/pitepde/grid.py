"""Periodic grids, shifted Fourier operators and the discretized Hamiltonian.

Grid points are ordered row-major with axis 0 most significant, so a flat
index ``l`` and the multi-index ``(l_0, ..., l_{d-1})`` satisfy
``l = l_0 * N**(d-1) + ... + l_{d-1}``.  The same ordering is used for the
shifted wavenumber register, whose slot ``k`` holds the mode ``k - N/2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

MAX_DENSE_QUBITS = 14


class GridError(ValueError):
    """Raised for inconsistent grid or operator arguments."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[0, L)^d`` with ``N = 2**n`` points per axis."""

    d: int
    n: int
    L: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise GridError(f"d must be a positive integer, got {self.d}")
        if int(self.n) != self.n or self.n < 1:
            raise GridError(f"n must be a positive integer, got {self.n}")
        if not np.isfinite(self.L) or self.L <= 0:
            raise GridError(f"L must be positive, got {self.L}")

    @property
    def N(self) -> int:
        return 2 ** self.n

    @property
    def size(self) -> int:
        return self.N ** self.d

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    @property
    def h(self) -> float:
        return self.L / self.N


@dataclass(frozen=True)
class SpectralDiagonal:
    """Real diagonal operator tagged with the basis it is diagonal in."""

    values: np.ndarray
    basis: str

    def __post_init__(self):
        if self.basis not in ("position", "fourier"):
            raise GridError(f"unknown basis {self.basis!r}")
        values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise GridError("diagonal contains non-finite values")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size


def axis_coordinates(spec: GridSpec) -> np.ndarray:
    """Points ``(L/N) * l`` for ``l = 0..N-1`` along one axis."""
    return spec.h * np.arange(spec.N)


def shifted_wavenumbers(spec: GridSpec) -> np.ndarray:
    """Wavenumbers ``k - N/2`` stored in register slots ``k = 0..N-1``."""
    return np.arange(spec.N) - spec.N // 2


def grid_points(spec: GridSpec) -> np.ndarray:
    """All grid points as an ``(N**d, d)`` array in row-major order.

    Examples
    --------
    >>> grid_points(GridSpec(d=2, n=1, L=1.0))
    array([[0. , 0. ],
           [0. , 0.5],
           [0.5, 0. ],
           [0.5, 0.5]])
    """
    idx = np.indices(spec.shape).reshape(spec.d, -1).T
    return spec.h * idx


def _mesh(values: np.ndarray, d: int) -> list:
    return np.meshgrid(*([values] * d), indexing="ij")


def kinetic_diagonal(spec: GridSpec, a: Union[float, Sequence[float]]) -> SpectralDiagonal:
    """Diffusion eigenvalues ``a (2 pi / L)^2 |k - N/2|^2`` in the Fourier basis.

    Parameters
    ----------
    spec : GridSpec
    a : float or sequence of float
        Diffusion coefficient, either shared by all axes or one per axis.

    Returns
    -------
    SpectralDiagonal
        Flat length ``N**d`` diagonal with ``basis="fourier"``.
    """
    coeffs = np.broadcast_to(np.asarray(a, dtype=float), (spec.d,))
    if np.any(coeffs <= 0):
        raise GridError("diffusion coefficient must be positive")
    kk = shifted_wavenumbers(spec).astype(float)
    factor = (2 * np.pi / spec.L) ** 2
    total = np.zeros(spec.shape)
    for coeff, km in zip(coeffs, _mesh(kk, spec.d)):
        total += coeff * factor * km ** 2
    return SpectralDiagonal(total.ravel(), "fourier")


def advection_diagonal(spec: GridSpec, v: float, axis: int) -> SpectralDiagonal:
    """Single-axis advection eigenvalues ``v (2 pi / L) (k - N/2)``.

    The result has length ``N`` and acts on the register of ``axis``.
    """
    if not 0 <= axis < spec.d:
        raise GridError(f"axis {axis} out of range for d={spec.d}")
    values = v * (2 * np.pi / spec.L) * shifted_wavenumbers(spec)
    return SpectralDiagonal(values.astype(float), "fourier")


def advection_total(spec: GridSpec, v: Sequence[float]) -> SpectralDiagonal:
    """Sum of the single-axis advection diagonals, expanded to length ``N**d``."""
    vel = np.asarray(v, dtype=float).reshape(-1)
    if vel.size != spec.d:
        raise GridError(f"velocity needs {spec.d} components, got {vel.size}")
    total = np.zeros(spec.shape)
    for axis, km in enumerate(_mesh(shifted_wavenumbers(spec).astype(float), spec.d)):
        total += vel[axis] * (2 * np.pi / spec.L) * km
    return SpectralDiagonal(total.ravel(), "fourier")


# potentials ---------------------------------------------------------------

def box_potential(height: float, center, halfwidth: float) -> Callable:
    """``height`` where every coordinate is within ``halfwidth`` of ``center``.

    Boundary points count as inside; a relative slack of 1e-12 keeps that
    decision stable under rounding of ``L/N * l``.
    """
    def V(points):
        pts = np.atleast_2d(points)
        c = np.broadcast_to(np.asarray(center, dtype=float), (pts.shape[1],))
        slack = 1e-12 * max(1.0, abs(halfwidth))
        inside = np.all(np.abs(pts - c) <= halfwidth + slack, axis=1)
        return np.where(inside, float(height), 0.0)
    return V


def gaussian_potential(A: float, x0, sigma: float) -> Callable:
    def V(points):
        pts = np.atleast_2d(points)
        r2 = np.sum((pts - np.asarray(x0, dtype=float)) ** 2, axis=1)
        return A * np.exp(-r2 / (2 * sigma ** 2))
    return V


def make_potential(spec: GridSpec, kind: str, **params) -> Callable:
    """Look up a catalog potential.

    ``zero``; ``box1d(height, center=L/2, halfwidth=L/4)``;
    ``box2d(height, center=L/2, halfwidth=L/4)``; ``gaussian(A, x0, sigma)``.
    """
    L = spec.L
    if kind == "zero":
        return lambda points: np.zeros(np.atleast_2d(points).shape[0])
    if kind in ("box1d", "box2d", "box"):
        return box_potential(params.get("height", 10.0),
                             params.get("center", L / 2),
                             params.get("halfwidth", L / 4))
    if kind == "gaussian":
        return gaussian_potential(params["A"], params["x0"], params["sigma"])
    raise GridError(f"unknown potential kind {kind!r}")


@dataclass(frozen=True)
class Potential:
    samples: np.ndarray
    V0: float
    V1: float
    shifted: SpectralDiagonal


def potential_diagonal(spec: GridSpec, V) -> Potential:
    """Sample ``V`` on the grid and shift it to be non-negative.

    ``V`` may be a callable of an ``(M, d)`` point array, or a table of
    ``N**d`` values (any shape that flattens row-major to that length).
    """
    if callable(V):
        samples = np.asarray(V(grid_points(spec)), dtype=float).reshape(-1)
    else:
        samples = np.asarray(V, dtype=float).reshape(-1)
    if samples.size != spec.size:
        raise GridError(f"potential has {samples.size} samples, grid has {spec.size}")
    if not np.all(np.isfinite(samples)):
        raise GridError("potential contains non-finite values")
    V0, V1 = float(samples.min()), float(samples.max())
    return Potential(samples, V0, V1, SpectralDiagonal(samples - V0, "position"))


@dataclass(frozen=True)
class HamiltonianParams:
    """Everything the stepper needs about ``-a Lap + v.grad + V`` on one grid."""

    spec: GridSpec
    a: tuple
    v: tuple
    potential: Potential
    kinetic: SpectralDiagonal = field(repr=False)
    advection: SpectralDiagonal = field(repr=False)

    @property
    def V0(self) -> float:
        return self.potential.V0

    @property
    def V1(self) -> float:
        return self.potential.V1


def hamiltonian(spec: GridSpec, a, v, V=None) -> HamiltonianParams:
    a_t = tuple(np.broadcast_to(np.asarray(a, dtype=float), (spec.d,)).tolist())
    v_t = tuple(np.broadcast_to(np.asarray(v, dtype=float), (spec.d,)).tolist())
    if V is None:
        V = np.zeros(spec.size)
    pot = potential_diagonal(spec, V)
    return HamiltonianParams(spec, a_t, v_t, pot,
                             kinetic_diagonal(spec, a_t),
                             advection_total(spec, v_t))


# dense operators ----------------------------------------------------------

def shifted_dft_matrix(N: int) -> np.ndarray:
    """Dense ``F_N`` with entries ``exp(i 2 pi (k - N/2) l / N) / sqrt(N)``.

    Rows are positions ``l``, columns are register slots ``k``.
    """
    l = np.arange(N)[:, None]
    k = np.arange(N)[None, :] - N // 2
    return np.exp(2j * np.pi * k * l / N) / np.sqrt(N)


def dense_fourier_matrix(spec: GridSpec) -> np.ndarray:
    F1 = shifted_dft_matrix(spec.N)
    F = F1
    for _ in range(spec.d - 1):
        F = np.kron(F, F1)
    return F


def check_dense_size(spec: GridSpec, extra_qubits: int = 0):
    if spec.d * spec.n + extra_qubits > MAX_DENSE_QUBITS:
        raise GridError(
            f"dense operators limited to {MAX_DENSE_QUBITS} qubits, "
            f"requested {spec.d * spec.n + extra_qubits}")


def assemble_dense_hamiltonian(params: HamiltonianParams) -> np.ndarray:
    """Dense ``F (D2 + i D1) F^dagger + diag(V)`` of size ``N**d``.

    With ``F`` mapping coefficients to grid values, ``F (i D1) F^dagger`` is
    the discrete ``v . grad``, so ``exp(-t H)`` transports along ``+v``.
    """
    spec = params.spec
    check_dense_size(spec)
    F = dense_fourier_matrix(spec)
    inner = params.kinetic.values + 1j * params.advection.values
    H = (F * inner[None, :]) @ F.conj().T
    H[np.diag_indices_from(H)] += params.potential.samples
    return H
