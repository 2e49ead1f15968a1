"""Initial-state preparation and reconstruction of fields from amplitudes.

The Fourier coefficients use the orthonormal basis
``phi_k(x) = L^{-d/2} exp(i 2 pi k.x / L)``.  Coefficient ``k`` is stored in
register slot ``k + N/2`` on every axis.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import wofz

from .grid import GridSpec, axis_coordinates, grid_points, shifted_wavenumbers
from .statevector import State, apply_shifted_qft, set_statevector

OVERSAMPLE = 8


@dataclass(frozen=True)
class CoeffVector:
    """Coefficients in register order and their Euclidean norm."""

    values: np.ndarray
    norm0: float


# initial conditions -------------------------------------------------------

def _scaled_erfc(u: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """``exp(-beta^2) * erfc(u + i beta)`` without overflow."""
    u = np.asarray(u, dtype=float)
    phase = np.exp(-u ** 2 - 2j * u * beta)
    # both branches are evaluated; the unused one may overflow
    with np.errstate(invalid="ignore", over="ignore"):
        pos = phase * wofz(-beta + 1j * u)
        neg = 2 * np.exp(-beta ** 2) - phase * wofz(beta - 1j * u)
    return np.where(u >= 0, pos, neg)


def gaussian_coefficients_1d(k: np.ndarray, L: float, x0: float, sigma: float) -> np.ndarray:
    """``L^{-1/2} int_0^L exp(-(x-x0)^2 / 2 sigma^2) exp(-i 2 pi k x / L) dx`` in closed form."""
    omega = 2 * np.pi * np.asarray(k, dtype=float) / L
    beta = omega * sigma / np.sqrt(2)
    ua = -x0 / (sigma * np.sqrt(2))
    ub = (L - x0) / (sigma * np.sqrt(2))
    bracket = _scaled_erfc(ua, beta) - _scaled_erfc(ub, beta)
    return sigma * np.sqrt(np.pi / 2) * np.exp(-1j * omega * x0) * bracket / np.sqrt(L)


class InitialCondition:
    """A function on the periodic box with an optional closed-form spectrum."""

    def __init__(self, func: Callable, coeff_fn: Optional[Callable] = None, name: str = "custom"):
        self.func = func
        self.coeff_fn = coeff_fn
        self.name = name

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.func(np.atleast_2d(points))

    def coefficients(self, spec: GridSpec) -> np.ndarray:
        if self.coeff_fn is not None:
            return np.asarray(self.coeff_fn(spec), dtype=complex).reshape(-1)
        return dft_coefficients(self.func, spec)


def _separable(spec: GridSpec, factors_1d: Sequence[np.ndarray]) -> np.ndarray:
    out = factors_1d[0]
    for f in factors_1d[1:]:
        out = np.multiply.outer(out, f)
    return np.asarray(out).reshape(-1)


def sine_initial(L: float = 1.0) -> InitialCondition:
    """``sin(pi x / L)`` on a 1D box."""
    def func(points):
        return np.sin(np.pi * points[:, 0] / L)

    def coeffs(spec):
        if spec.d != 1:
            raise ValueError("sine initial condition is one-dimensional")
        k = shifted_wavenumbers(spec)
        return -2 * np.sqrt(L) / (np.pi * (4 * k ** 2 - 1.0))
    return InitialCondition(func, coeffs, "sine")


def delta_initial(L: float = 1.0) -> InitialCondition:
    """Dirac delta at ``L/2``; only the spectrum is meaningful."""
    def func(points):
        raise ValueError("the delta initial condition has no point values")

    def coeffs(spec):
        if spec.d != 1:
            raise ValueError("delta initial condition is one-dimensional")
        k = shifted_wavenumbers(spec)
        return np.where(k % 2 == 0, 1.0, -1.0) / np.sqrt(L) + 0j
    return InitialCondition(func, coeffs, "delta")


def gaussian_initial(A: float, x0: Sequence[float], sigma: float, L: float) -> InitialCondition:
    x0 = np.asarray(x0, dtype=float).reshape(-1)

    def func(points):
        r2 = np.sum((points - x0[: points.shape[1]]) ** 2, axis=1)
        return A * np.exp(-r2 / (2 * sigma ** 2))

    def coeffs(spec):
        if x0.size != spec.d:
            raise ValueError(f"gaussian centre needs {spec.d} components")
        k = shifted_wavenumbers(spec)
        return A * _separable(spec, [gaussian_coefficients_1d(k, L, c, sigma) for c in x0])
    return InitialCondition(func, coeffs, "gaussian")


def gaussian_sum_initial(centers: Sequence[Sequence[float]], sigma2: float, L: float,
                         A: float = 1.0) -> InitialCondition:
    """``A`` times a sum of equal Gaussians of variance ``sigma2``."""
    parts = [gaussian_initial(A, c, np.sqrt(sigma2), L) for c in centers]

    def func(points):
        return sum(p.func(points) for p in parts)

    def coeffs(spec):
        return sum(p.coeff_fn(spec) for p in parts)
    return InitialCondition(func, coeffs, "gaussian_sum")


def unit_grid_amplitude(u0: InitialCondition, spec: GridSpec) -> float:
    """Factor that gives the samples of ``u0`` on ``spec`` unit l2 norm."""
    return 1.0 / float(np.linalg.norm(u0(grid_points(spec))))


def turing_centers(L: float = 2 * np.pi) -> list:
    q = L / 4
    return [(q, q), (q, 3 * q), (3 * q, q), (3 * q, 3 * q)]


def mode_initial(amplitude: float, wavenumber: Sequence[int], kind: str, L: float) -> InitialCondition:
    """``amplitude * sin`` or ``cos`` of ``2 pi m.x / L``, or a constant when ``m = 0``."""
    m = np.asarray(wavenumber, dtype=int).reshape(-1)

    def func(points):
        arg = 2 * np.pi * points[:, : m.size] @ m / L
        return amplitude * (np.sin(arg) if kind == "sin" else np.cos(arg))

    def coeffs(spec):
        if m.size != spec.d:
            raise ValueError(f"wavenumber needs {spec.d} components")
        if np.any(np.abs(m) >= spec.N // 2):
            raise ValueError("mode is not resolved on this grid")
        c = np.zeros(spec.shape, dtype=complex)
        vol = np.sqrt(L ** spec.d)
        plus = tuple(int(x) + spec.N // 2 for x in m)
        minus = tuple(-int(x) + spec.N // 2 for x in m)
        if kind == "sin":
            if not np.any(m):
                return c.reshape(-1)
            c[plus] += amplitude * vol / 2j
            c[minus] -= amplitude * vol / 2j
        else:
            c[plus] += amplitude * vol / 2
            c[minus] += amplitude * vol / 2
        return c.reshape(-1)
    return InitialCondition(func, coeffs, f"{kind}_mode")


def make_initial(kind: str, spec: GridSpec, **params) -> InitialCondition:
    """Catalog: ``sine``, ``delta``, ``gaussian``, ``gaussian_sum``, ``sin_mode``,
    ``cos_mode``, ``constant``.

    ``gaussian_sum`` without an explicit ``A`` is scaled to unit l2 norm on
    the grid of ``spec``.
    """
    L = spec.L
    if kind == "sine":
        return sine_initial(L)
    if kind == "delta":
        return delta_initial(L)
    if kind == "gaussian":
        return gaussian_initial(params.get("A", 1.0), params["x0"], params["sigma"], L)
    if kind == "gaussian_sum":
        centers = params.get("centers") or turing_centers(L)
        sigma2 = params.get("sigma2", 0.05)
        if params.get("A") is not None:
            return gaussian_sum_initial(centers, sigma2, L, params["A"])
        A = unit_grid_amplitude(gaussian_sum_initial(centers, sigma2, L), spec)
        return gaussian_sum_initial(centers, sigma2, L, A)
    if kind in ("sin_mode", "cos_mode"):
        return mode_initial(params.get("amplitude", 1.0), params["wavenumber"],
                            kind.split("_")[0], L)
    if kind == "constant":
        return mode_initial(params.get("value", 1.0), [0] * spec.d, "cos", L)
    raise ValueError(f"unknown initial condition {kind!r}")


# coefficients -------------------------------------------------------------

def _samples_to_coefficients(samples: np.ndarray, L: float, N: int) -> np.ndarray:
    """Rectangle-rule coefficients from an ``M^d`` table, keeping ``N^d`` modes."""
    d = samples.ndim
    M = samples.shape[0]
    if M < N:
        raise ValueError(f"table with {M} points per axis cannot resolve {N} modes")
    spec_k = np.arange(N) - N // 2
    c = np.fft.fftn(samples) * (L / M) ** d / np.sqrt(L ** d)
    idx = np.ix_(*([spec_k % M] * d))
    return c[idx].reshape(-1)


def dft_coefficients(func: Callable, spec: GridSpec, oversample: int = OVERSAMPLE) -> np.ndarray:
    """Coefficients of a callable via an oversampled rectangle rule."""
    fine = GridSpec(spec.d, spec.n + int(np.log2(oversample)), spec.L)
    samples = np.asarray(func(grid_points(fine)), dtype=complex).reshape(fine.shape)
    return _samples_to_coefficients(samples, spec.L, spec.N)


def fourier_coefficients(u0, spec: GridSpec) -> CoeffVector:
    """Coefficient vector for ``u0``.

    ``u0`` may be an :class:`InitialCondition`, a callable of an ``(M, d)``
    point array, or a table of samples on an ``M^d`` periodic grid with
    ``M >= N`` a power of two.
    """
    if isinstance(u0, InitialCondition):
        c = u0.coefficients(spec)
    elif callable(u0):
        c = dft_coefficients(u0, spec)
    else:
        table = np.asarray(u0)
        M = round(table.size ** (1 / spec.d))
        if M ** spec.d != table.size or M & (M - 1):
            raise ValueError("sample table must hold M^d values with M a power of two")
        c = _samples_to_coefficients(table.reshape((M,) * spec.d).astype(complex), spec.L, spec.N)
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients are not finite")
    norm0 = float(np.linalg.norm(c))
    if norm0 == 0:
        raise ValueError("initial condition has no resolved modes")
    return CoeffVector(c, norm0)


def prepare_initial_state(coeffs: CoeffVector, spec: GridSpec, n_anc: int = 1) -> State:
    """``F_N c / |c|`` in the position basis, with ``scale = |c|``."""
    state = State(spec, n_anc=n_anc)
    set_statevector(state, coeffs.values)
    state.basis = "fourier"
    apply_shifted_qft(state, "forward")
    state.scale = coeffs.norm0
    return state


def prepare_system_state(coeffs: Sequence[CoeffVector], spec: GridSpec) -> State:
    """Two species stacked on a species qubit, normalized jointly."""
    if len(coeffs) != 2:
        raise ValueError("exactly two species are supported")
    stacked = np.concatenate([c.values for c in coeffs])
    state = State(spec, n_species=1)
    set_statevector(state, stacked)
    state.basis = "fourier"
    apply_shifted_qft(state, "forward")
    return state


# reconstruction -----------------------------------------------------------

@dataclass(frozen=True)
class PixelKernel:
    spec: GridSpec

    def h(self, x, p) -> np.ndarray:
        """One-axis pixel function ``h_N(x; p)``."""
        N, L = self.spec.N, self.spec.L
        r = np.asarray(x, dtype=float) - np.asarray(p, dtype=float)
        k = np.arange(N // 2)
        s = np.cos(np.pi * np.multiply.outer(r, 2 * k + 1) / L).sum(axis=-1)
        return 2 / np.sqrt(N * L) * np.exp(-1j * np.pi * r / L) * s

    def matrix(self, N_f: int) -> np.ndarray:
        """``(N_f, N)`` samples ``h_N(x_q; p_l)`` on a fine grid."""
        xq = self.spec.L / N_f * np.arange(N_f)
        return self.h(xq[:, None], axis_coordinates(self.spec)[None, :])


def pixel_eval(kernel: PixelKernel, x, p) -> complex:
    """``g_N(x; p)``, the product of ``h_N`` over axes."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    return complex(np.prod(kernel.h(x, p)))


def _check_fine(N_f: int, N: int):
    if N_f < N or N_f & (N_f - 1):
        raise ValueError(f"N_f={N_f} must be a power of two with N_f >= N={N}")


def reconstruct(vec: np.ndarray, spec: GridSpec, N_f: int, amplitude: float = 1.0) -> np.ndarray:
    """Evaluate ``amplitude * sum_l vec_l g_N(x_q; p_l)`` on the ``N_f^d`` grid.

    The kernel is applied one axis at a time; since ``g_N`` is a product of
    one-axis factors this equals the dense ``N_f^d x N^d`` contraction.
    """
    _check_fine(N_f, spec.N)
    G = PixelKernel(spec).matrix(N_f)
    arr = np.asarray(vec, dtype=complex).reshape(spec.shape)
    for ax in range(spec.d):
        arr = np.moveaxis(np.tensordot(G, arr, axes=([1], [ax])), 0, ax)
    return amplitude * arr


def reconstruct_solution(final: State, kernel: PixelKernel, N_f: int) -> np.ndarray:
    """Fine-grid field of ``sqrt(P) * scale * psi`` for a single-species state."""
    amp = np.exp(0.5 * final.log_success) * final.scale
    if final.n_species:
        blocks = final.system.reshape(2, -1)
        return np.stack([reconstruct(b, kernel.spec, N_f, amp) for b in blocks])
    return reconstruct(final.system, kernel.spec, N_f, amp)


def grid_values(vec: np.ndarray, spec: GridSpec, amplitude: float = 1.0) -> np.ndarray:
    """Field at the coarse grid points: ``amplitude * (N/L)^{d/2} * vec``."""
    return amplitude * (spec.N / spec.L) ** (spec.d / 2) * np.asarray(vec).reshape(spec.shape)


def write_field_csv(path, field: np.ndarray, L: float, columns_prefix: str = "") -> None:
    """Rows of (index per axis, x per axis, re, im, abs) in row-major order."""
    field = np.asarray(field)
    d = field.ndim
    M = field.shape[0]
    h = L / M
    idx = np.indices(field.shape).reshape(d, -1).T
    flat = field.reshape(-1)
    head = [f"i{a}" for a in range(d)] + [f"x{a}" for a in range(d)] + ["re", "im", "abs"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([columns_prefix + c for c in head] if columns_prefix else head)
        for row, val in zip(idx, flat):
            w.writerow(list(row) + [repr(float(h * i)) for i in row]
                       + [repr(float(val.real)), repr(float(val.imag)), repr(float(abs(val)))])
