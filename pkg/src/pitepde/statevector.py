"""Statevector simulator for the ancilla + species + grid register.

Qubit 0 is the most significant.  The layout is
``[ancillas][species][axis 0 ... axis d-1]`` and each axis register holds
``n`` qubits.  Between operations the ancilla sits in ``|0>``, so the live
part of the state is the leading block of ``amps``.
"""
from __future__ import annotations

import struct
from typing import Optional

import numpy as np

from .grid import GridSpec, SpectralDiagonal

VANISHED_PROBABILITY = 1e-300
# a kept block whose squared norm is at roundoff level is indistinguishable from zero
ROUNDOFF_PROBABILITY = (8 * np.finfo(float).eps) ** 2
DUMP_MAGIC = b"PSV1"
_HEADER = struct.Struct("<4sHHHHI")  # magic, n_anc, n_species, d, n, flags


class BasisError(ValueError):
    """An operator was applied in the wrong grid basis."""


class NumericalAbort(ArithmeticError):
    """A run cannot continue meaningfully."""


class VanishedProbability(NumericalAbort):
    pass


class State:
    """Normalized amplitudes plus classical bookkeeping.

    ``log_success`` accumulates the natural log of post-selection
    probabilities so that very small totals do not underflow.  ``scale``
    collects classical factors such as the initial norm and the energy
    shifts, so that ``sqrt(success_prob) * scale * system`` is the
    unnormalized vector being evolved.
    """

    def __init__(self, spec: GridSpec, n_species: int = 0, n_anc: int = 1):
        if n_anc not in (0, 1):
            raise ValueError("only 0 or 1 ancilla qubits are supported")
        if n_species not in (0, 1):
            raise ValueError("only 0 or 1 species qubits are supported")
        self.spec = spec
        self.n_anc = n_anc
        self.n_species = n_species
        self.amps = np.zeros(2 ** self.n_qubits, dtype=complex)
        self.amps[0] = 1.0
        self.basis = "position"
        self.log_success = 0.0
        self.scale = 1.0
        self.last_prob = 1.0

    @property
    def n_qubits(self) -> int:
        return self.n_anc + self.n_species + self.spec.d * self.spec.n

    @property
    def system_size(self) -> int:
        return 2 ** self.n_species * self.spec.size

    @property
    def system(self) -> np.ndarray:
        """View of the ancilla-``|0>`` block (species, grid flattened)."""
        return self.amps[: self.system_size]

    def blocks(self) -> np.ndarray:
        """View shaped ``(2**n_anc, 2**n_species, N**d)``."""
        return self.amps.reshape(2 ** self.n_anc, 2 ** self.n_species, self.spec.size)

    @property
    def success_prob(self) -> float:
        return float(np.exp(self.log_success))

    @property
    def log10_success(self) -> float:
        return self.log_success / np.log(10.0)

    def copy(self) -> "State":
        new = State.__new__(State)
        new.__dict__.update(self.__dict__)
        new.amps = self.amps.copy()
        return new


def set_statevector(state: State, amps) -> State:
    """Load amplitudes and normalize them, folding the norm into ``scale``.

    ``amps`` may cover the full register or only the system block (the
    ancilla is then put in ``|0>``).
    """
    vec = np.asarray(amps, dtype=complex).reshape(-1)
    if vec.size == state.system_size and state.n_anc:
        full = np.zeros_like(state.amps)
        full[: vec.size] = vec
        vec = full
    if vec.size != state.amps.size:
        raise ValueError(f"expected {state.amps.size} amplitudes, got {vec.size}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("amplitudes must be finite")
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValueError("cannot load the zero vector")
    state.amps = vec / norm
    state.scale = float(norm)
    state.log_success = 0.0
    state.last_prob = 1.0
    return state


def _expand(state: State, values: np.ndarray) -> np.ndarray:
    """Broadcast a grid-only or species-grid diagonal over the system block."""
    ns = 2 ** state.n_species
    if values.size == state.spec.size:
        return np.broadcast_to(values, (ns, state.spec.size))
    if values.size == ns * state.spec.size:
        return values.reshape(ns, state.spec.size)
    raise ValueError(f"diagonal length {values.size} does not match the register")


def _check_basis(state: State, diag: SpectralDiagonal):
    if diag.basis != state.basis:
        raise BasisError(f"diagonal is in the {diag.basis} basis, state is in {state.basis}")


def apply_diagonal_phase(state: State, theta: SpectralDiagonal, sign: int = 1,
                         ancilla: Optional[int] = None) -> State:
    """Multiply by ``exp(-i sign theta)``; ``ancilla`` restricts to one block."""
    _check_basis(state, theta)
    phase = np.exp(-1j * sign * _expand(state, theta.values))
    blocks = state.blocks()
    if ancilla is None:
        blocks *= phase[None]
    else:
        blocks[ancilla] *= phase
    return state


def apply_diagonal_real(state: State, diag: SpectralDiagonal) -> State:
    """Multiply the system block by a real diagonal (no renormalization)."""
    _check_basis(state, diag)
    state.blocks()[0] *= _expand(state, diag.values)
    return state


def _axis_signs(N: int) -> np.ndarray:
    return np.where(np.arange(N) % 2 == 0, 1.0, -1.0)


def apply_shifted_qft(state: State, direction: str = "forward", method: str = "fft") -> State:
    """Apply ``F_N`` on every axis (``forward``: Fourier to position) or its inverse.

    ``F_N = diag((-1)^l) * unitary inverse DFT``, so the fast path is an
    FFT with a sign flip; ``method="direct"`` multiplies by the dense matrix.
    """
    spec = state.spec
    if direction == "forward":
        if state.basis != "fourier":
            raise BasisError("forward transform needs the fourier basis")
    elif direction == "inverse":
        if state.basis != "position":
            raise BasisError("inverse transform needs the position basis")
    else:
        raise ValueError(f"unknown direction {direction!r}")
    lead = 2 ** (state.n_anc + state.n_species)
    arr = state.amps.reshape((lead,) + spec.shape)
    sign = _axis_signs(spec.N)
    if method == "direct":
        from .grid import shifted_dft_matrix
        F = shifted_dft_matrix(spec.N)
        op = F if direction == "forward" else F.conj().T
    for ax in range(1, spec.d + 1):
        shape = [1] * arr.ndim
        shape[ax] = spec.N
        s = sign.reshape(shape)
        if method == "direct":
            arr = np.moveaxis(np.tensordot(op, arr, axes=([1], [ax])), 0, ax)
        elif direction == "forward":
            arr = np.fft.ifft(arr, axis=ax, norm="ortho") * s
        else:
            arr = np.fft.fft(arr * s, axis=ax, norm="ortho")
    state.amps = np.ascontiguousarray(arr).reshape(-1)
    state.basis = "position" if direction == "forward" else "fourier"
    return state


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
W_GATE = np.array([[1, 1j], [1j, 1]], dtype=complex) / np.sqrt(2)
Q_GATE = np.diag([1 + 1j, -1 + 1j]) / np.sqrt(2)


def gate_matrix(gate: str, phi: float = 0.0) -> np.ndarray:
    if gate == "H":
        return HADAMARD
    if gate == "W":
        return W_GATE
    if gate == "Wdg":
        return W_GATE.conj().T
    if gate == "Q":
        return Q_GATE
    if gate == "Qdg":
        return Q_GATE.conj().T
    if gate == "Rx":
        return np.array([[np.cos(phi / 2), -1j * np.sin(phi / 2)],
                         [-1j * np.sin(phi / 2), np.cos(phi / 2)]])
    if gate == "Rz":
        return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])
    raise ValueError(f"unknown gate {gate!r}")


def apply_single_qubit_gate(state: State, gate, qubit: int, phi: float = 0.0) -> State:
    """Apply a named gate (or a 2x2 matrix) to ``qubit`` (0 = most significant)."""
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    U = gate_matrix(gate, phi) if isinstance(gate, str) else np.asarray(gate, dtype=complex)
    arr = state.amps.reshape(2 ** qubit, 2, -1)
    state.amps = np.einsum("ab,ibj->iaj", U, arr).reshape(-1)
    return state


def _postselect(state: State) -> State:
    blocks = state.blocks()
    kept = blocks[0].copy()
    prob = float(np.vdot(kept, kept).real)
    if not prob >= max(VANISHED_PROBABILITY, ROUNDOFF_PROBABILITY):
        raise VanishedProbability(f"vanished success probability ({prob:.3e})")
    state.amps[:] = 0
    state.blocks()[0] = kept / np.sqrt(prob)
    state.last_prob = prob
    state.log_success += np.log(prob)
    return state


def pite_block(state: State, theta, mode: str = "direct") -> State:
    """Apply the probabilistic ITE block for ``theta`` and keep ancilla ``|0>``.

    ``direct`` multiplies the system block by ``cos(theta)``.  ``circuit``
    runs the gate sequence ``H_anc``, ancilla-controlled
    ``exp(+i theta)``/``exp(-i theta)``, ``H_anc`` on the full register,
    which realizes ``[[cos, i sin], [i sin, cos]]``, and then measures.
    The step probability is left in ``state.last_prob``.
    """
    if state.n_anc != 1:
        raise ValueError("the PITE block needs one ancilla qubit")
    _check_basis(state, theta)
    if mode == "direct":
        state.blocks()[0] *= np.cos(_expand(state, theta.values))
    elif mode == "circuit":
        if np.any(state.blocks()[1] != 0):
            raise ValueError("ancilla must start in |0>")
        apply_single_qubit_gate(state, "H", 0)
        apply_diagonal_phase(state, theta, sign=-1, ancilla=0)
        apply_diagonal_phase(state, theta, sign=+1, ancilla=1)
        apply_single_qubit_gate(state, "H", 0)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _postselect(state)


# binary dumps -------------------------------------------------------------

def dump_statevector(state: State, path) -> None:
    """Write the register as ``PSV1`` header + interleaved little-endian float64."""
    flags = 1 if state.basis == "fourier" else 0
    header = _HEADER.pack(DUMP_MAGIC, state.n_anc, state.n_species,
                          state.spec.d, state.spec.n, flags)
    body = np.empty(2 * state.amps.size, dtype="<f8")
    body[0::2] = state.amps.real
    body[1::2] = state.amps.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body.tobytes())


def load_statevector(path, L: float = 1.0) -> State:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError("file too short for a statevector header")
    magic, n_anc, n_species, d, n, flags = _HEADER.unpack_from(raw)
    if magic != DUMP_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    state = State(GridSpec(d, n, L), n_species=n_species, n_anc=n_anc)
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != 2 * state.amps.size:
        raise ValueError("payload length does not match the header")
    state.amps = body[0::2] + 1j * body[1::2]
    state.basis = "fourier" if flags & 1 else "position"
    return state
