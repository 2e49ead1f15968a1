"""Two coupled reaction-diffusion fields on a species qubit.

The reaction matrix ``P`` is split into its diagonal blocks, the symmetric
off-diagonal part ``X (p12 + p21) / 2`` and the antisymmetric part
``i Y (p12 - p21) / 2``.  ``X = H Z H`` and ``Y = W Z W^dagger`` reduce every
factor to a diagonal one.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .grid import GridSpec, SpectralDiagonal, kinetic_diagonal
from .postproc import CoeffVector, grid_values, prepare_system_state
from .statevector import (NumericalAbort, State, apply_diagonal_phase, apply_shifted_qft,
                          apply_single_qubit_gate, pite_block)
from .variants import PiteConfig, block_gain, build_theta

SPECIES_QUBIT = 1


@dataclass(frozen=True)
class CoupledModel:
    spec: GridSpec
    a: tuple
    p11: np.ndarray
    p12: np.ndarray
    p21: np.ndarray
    p22: np.ndarray

    @property
    def P0(self) -> float:
        return float(-min(self.p11.min(), self.p22.min()))

    @property
    def P1(self) -> float:
        return float(np.abs(self.p12 + self.p21).max())


def make_model(spec: GridSpec, a: Sequence[float], p11, p12, p21, p22) -> CoupledModel:
    def field(p):
        arr = np.broadcast_to(np.asarray(p, dtype=float), (spec.size,)) if np.ndim(p) == 0 \
            else np.asarray(p, dtype=float).reshape(-1)
        if arr.size != spec.size:
            raise ValueError(f"reaction field has {arr.size} samples, grid has {spec.size}")
        return np.array(arr)
    if len(a) != 2 or min(a) <= 0:
        raise ValueError("need two positive diffusion coefficients")
    return CoupledModel(spec, tuple(float(x) for x in a), field(p11), field(p12),
                        field(p21), field(p22))


def species_kinetic(model: CoupledModel) -> SpectralDiagonal:
    parts = [kinetic_diagonal(model.spec, aj).values for aj in model.a]
    return SpectralDiagonal(np.concatenate(parts), "fourier")


def _reaction_factors(model: CoupledModel):
    """(diagonal shifted, symmetric shifted / 2, antisymmetric / 2) on species x grid."""
    diag = np.concatenate([model.p11, model.p22]) + model.P0
    s = model.p12 + model.p21
    sym = 0.5 * (np.concatenate([s, -s]) + model.P1)
    m = model.p12 - model.p21
    anti = 0.5 * np.concatenate([m, -m])
    return (SpectralDiagonal(diag, "position"), SpectralDiagonal(np.maximum(sym, 0.0), "position"),
            SpectralDiagonal(anti, "position"))


def coupled_step(state: State, model: CoupledModel, dtau: float,
                 cfg: Optional[PiteConfig] = None, reversed_order: bool = False) -> list:
    """One first-order step; returns the three block probabilities.

    Right to left: ``W^dagger``, antisymmetric phase, ``W``; ``H``,
    symmetric PITE, ``H``; diagonal reaction PITE; kinetic PITE between
    ``F^dagger`` and ``F``.  ``reversed_order`` applies the same factors
    left to right instead.
    """
    if state.n_species != 1:
        raise ValueError("coupled_step needs a species qubit")
    if state.basis != "position":
        raise ValueError("coupled_step expects the position basis")
    cfg = cfg or PiteConfig(variant="aapite", dtau=dtau)
    diag, sym, anti = _reaction_factors(model)
    kin = species_kinetic(model)
    probs = []

    def antisym():
        if np.any(anti.values):
            apply_single_qubit_gate(state, "Wdg", SPECIES_QUBIT)
            apply_diagonal_phase(state, anti, sign=dtau)
            apply_single_qubit_gate(state, "W", SPECIES_QUBIT)

    def symm():
        apply_single_qubit_gate(state, "H", SPECIES_QUBIT)
        pite_block(state, build_theta(cfg, sym, dtau), cfg.mode)
        probs.append(state.last_prob)
        apply_single_qubit_gate(state, "H", SPECIES_QUBIT)

    def diagonal():
        pite_block(state, build_theta(cfg, diag, dtau), cfg.mode)
        probs.append(state.last_prob)

    def kinetic():
        apply_shifted_qft(state, "inverse")
        pite_block(state, build_theta(cfg, kin, dtau), cfg.mode)
        probs.append(state.last_prob)
        apply_shifted_qft(state, "forward")

    order = [antisym, symm, diagonal, kinetic]
    for factor in (reversed(order) if reversed_order else order):
        factor()
    state.scale *= float(np.exp(dtau * (model.P0 + model.P1 / 2))) * block_gain(cfg) ** len(probs)
    return probs


def dense_coupled_hamiltonian(model: CoupledModel) -> np.ndarray:
    """``2 N^d`` square matrix of the linear two-species operator."""
    from .grid import check_dense_size, dense_fourier_matrix
    check_dense_size(model.spec, extra_qubits=1)
    F = dense_fourier_matrix(model.spec)
    blocks = [(F * kinetic_diagonal(model.spec, aj).values[None, :]) @ F.conj().T for aj in model.a]
    n = model.spec.size
    H = np.zeros((2 * n, 2 * n), dtype=complex)
    H[:n, :n] = blocks[0] + np.diag(model.p11)
    H[n:, n:] = blocks[1] + np.diag(model.p22)
    H[:n, n:] = np.diag(model.p12)
    H[n:, :n] = np.diag(model.p21)
    return H


def spectral_gradient(field: np.ndarray, spec: GridSpec, axis: int) -> np.ndarray:
    """Derivative along ``axis`` by multiplying the spectrum with ``i 2 pi k / L``."""
    arr = np.asarray(field).reshape(spec.shape)
    # fftfreq covers the same wavenumbers -N/2 .. N/2-1 as the shifted register
    kk = np.fft.fftfreq(spec.N, d=1.0 / spec.N)
    shape = [1] * spec.d
    shape[axis] = spec.N
    spectrum = np.fft.fft(arr, axis=axis) * (1j * 2 * np.pi / spec.L * kk).reshape(shape)
    return np.fft.ifft(spectrum, axis=axis).reshape(-1)


def unnormalized_fields(state: State) -> np.ndarray:
    """Grid values of both species, shape ``(2, N**d)``."""
    amp = np.exp(0.5 * state.log_success) * state.scale
    return np.stack([grid_values(b, state.spec, amp).reshape(-1)
                     for b in state.system.reshape(2, -1)])


def turing_reactions(u: np.ndarray, spec: GridSpec):
    u1 = u[0].real
    return u1 ** 2 - 0.6, 1.0, -1.5, 2.0


def burgers_reactions(u: np.ndarray, spec: GridSpec):
    u1, u2 = u[0].real, u[1].real
    return (spectral_gradient(u1, spec, 0).real, spectral_gradient(u1, spec, 1).real,
            spectral_gradient(u2, spec, 0).real, spectral_gradient(u2, spec, 1).real)


REACTIONS = {"turing": turing_reactions, "burgers": burgers_reactions}
DIFFUSION = {"turing": (0.005, 0.1), "burgers": (0.05, 0.05)}


@dataclass
class SystemTrajectory:
    times: np.ndarray
    log_success: np.ndarray
    scales: np.ndarray
    fields: dict

    @property
    def success_prob(self) -> float:
        return float(np.exp(self.log_success[-1]))


def nonlinear_run(initial: Sequence[CoeffVector], reactions: Callable, a: Sequence[float],
                  dtau: float, T: float, spec: GridSpec, snapshot_times=(),
                  cfg: Optional[PiteConfig] = None, reversed_order: bool = False) -> SystemTrajectory:
    """March the two-field system, rebuilding the reaction matrix every step.

    ``reactions(u, spec)`` receives the current ``(2, N**d)`` grid values and
    returns ``(p11, p12, p21, p22)`` as arrays or scalars.
    """
    K = int(round(T / dtau))
    if K < 1 or abs(K * dtau - T) > 1e-9 * max(1.0, T):
        raise ValueError("T must be a positive integer multiple of dtau")
    state = prepare_system_state(initial, spec)
    wanted = {int(round(t / dtau)) for t in snapshot_times} | {0, K}
    times = dtau * np.arange(K + 1)
    logs = np.zeros(K + 1)
    scales = np.full(K + 1, state.scale)
    fields = {0.0: unnormalized_fields(state)}
    for j in range(1, K + 1):
        u = unnormalized_fields(state)
        samples = reactions(u, spec)
        if not all(np.all(np.isfinite(p)) for p in samples):
            raise NumericalAbort(f"non-finite reaction sample at step {j}")
        model = make_model(spec, a, *samples)
        coupled_step(state, model, dtau, cfg, reversed_order)
        logs[j], scales[j] = state.log_success, state.scale
        if j in wanted:
            fields[float(times[j])] = unnormalized_fields(state)
    return SystemTrajectory(times, logs, scales, fields)


def radial_profile(field: np.ndarray, spec: GridSpec, center: Sequence[float], bins: int = 8):
    """Mean of ``field`` in rings around ``center`` (periodic distance)."""
    from .grid import grid_points
    pts = grid_points(spec)
    diff = np.abs(pts - np.asarray(center))
    diff = np.minimum(diff, spec.L - diff)
    r = np.sqrt((diff ** 2).sum(axis=1))
    edges = np.linspace(0, spec.L / 4, bins + 1)
    vals = np.asarray(field).reshape(-1)
    out = np.full(bins, np.nan)
    for b in range(bins):
        mask = (r >= edges[b]) & (r < edges[b + 1])
        if mask.any():
            out[b] = vals[mask].mean()
    return 0.5 * (edges[:-1] + edges[1:]), out
