"""Trotterized PITE time stepping for the advection-diffusion-reaction equation.

One first-order step applies, right to left,

    F . exp(-i dtau D1) . cos(theta_kin) . F^dagger . cos(theta_pot)

where ``D1`` carries the advection eigenvalues.  The minus sign transports
the solution along ``+v``.  The rightmost factor acts first.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .grid import HamiltonianParams
from .statevector import State, apply_diagonal_phase, apply_shifted_qft, pite_block
from .variants import PiteConfig, block_gain, build_theta, vs_schedule, vs_steps_for_time


@dataclass(frozen=True)
class StepPlan:
    """Factors in application order, each with its time weight."""

    factors: tuple
    trotter_order: int
    scale_increment: float


def plan_step(params: HamiltonianParams, cfg: PiteConfig, dtau: float) -> StepPlan:
    if cfg.trotter_order == 1:
        factors = (("potential", dtau), ("inverse_qft", 0.0), ("kinetic", dtau),
                   ("advection", dtau), ("qft", 0.0))
    else:
        half = (("inverse_qft", 0.0), ("kinetic", dtau / 2),
                ("advection", dtau / 2), ("qft", 0.0))
        factors = half + (("potential", dtau),) + half
    return StepPlan(factors, cfg.trotter_order, float(np.exp(-params.V0 * dtau)))


def apply_plan(state: State, params: HamiltonianParams, cfg: PiteConfig, plan: StepPlan):
    """Run the factors of ``plan`` on ``state``.

    Returns the block probabilities and the number of blocks with angles
    above ``pi/2``.
    """
    probs = []
    over = 0
    pot_cfg = cfg.for_potential()
    for kind, weight in plan.factors:
        if kind == "qft":
            apply_shifted_qft(state, "forward")
            continue
        if kind == "inverse_qft":
            apply_shifted_qft(state, "inverse")
            continue
        if kind == "advection":
            if np.any(params.advection.values != 0):
                apply_diagonal_phase(state, params.advection, sign=weight)
            continue
        block_cfg = cfg if kind == "kinetic" else pot_cfg
        lam = params.kinetic if kind == "kinetic" else params.potential.shifted
        theta = build_theta(block_cfg, lam, weight)
        pite_block(state, theta, cfg.mode)
        state.scale *= block_gain(block_cfg)
        probs.append(state.last_prob)
        over += theta.over_range > 0
    state.scale *= plan.scale_increment
    return probs, over


def step(state: State, params: HamiltonianParams, cfg: PiteConfig,
         dtau: Optional[float] = None) -> State:
    """Advance ``state`` by one step of size ``dtau`` (default ``cfg.dtau``)."""
    if state.basis != "position":
        raise ValueError("step expects the grid register in the position basis")
    dt = cfg.dtau if dtau is None else dtau
    apply_plan(state, params, cfg, plan_step(params, cfg, dt))
    return state


def step_sizes(cfg: PiteConfig, T: float) -> np.ndarray:
    """Per-step ``dtau`` values whose sum is ``T``."""
    if T < 0:
        raise ValueError("T must be non-negative")
    if T == 0:
        return np.zeros(0)
    if cfg.variant == "vs_apite":
        lo, hi = cfg.vs_dtau
        sched = vs_schedule(lo, hi, vs_steps_for_time(lo, hi, T))
        # rescale so the schedule lands exactly on T
        return sched * (T / sched.sum())
    K = int(round(T / cfg.dtau))
    if K == 0 or abs(K * cfg.dtau - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"T={T} is not an integer multiple of dtau={cfg.dtau}")
    return np.full(K, T / K)


@dataclass
class Snapshot:
    t: float
    step: int
    amps: np.ndarray
    log_success: float
    scale: float

    @property
    def success_prob(self) -> float:
        return float(np.exp(self.log_success))

    def unnormalized(self) -> np.ndarray:
        """``sqrt(P) * scale * psi``: the evolved vector before normalization."""
        return np.exp(0.5 * self.log_success) * self.scale * self.amps


@dataclass
class RunResult:
    """Trajectory of one run.  Probabilities are also kept as natural logs."""

    times: np.ndarray
    step_probs: np.ndarray
    log_success: np.ndarray
    scales: np.ndarray
    snapshots: list
    config: PiteConfig
    reference: str = "none"
    over_range_steps: int = 0
    notes: list = field(default_factory=list)

    @property
    def success_prob(self) -> float:
        return float(np.exp(self.log_success[-1]))

    @property
    def log10_success(self) -> float:
        return float(self.log_success[-1] / np.log(10.0))

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    def snapshot_at(self, t: float) -> Snapshot:
        return min(self.snapshots, key=lambda s: abs(s.t - t))


def _snapshot_steps(times: np.ndarray, snapshot_times) -> dict:
    wanted = {}
    for t in snapshot_times:
        idx = int(np.argmin(np.abs(times - t)))
        if abs(times[idx] - t) > 1e-9 * max(1.0, abs(t)):
            warnings.warn(f"snapshot t={t} is off the step lattice; using t={times[idx]}",
                          stacklevel=3)
            t = times[idx]
        # keep the requested label so callers can look snapshots up by it
        wanted[idx] = float(t)
    return wanted


def run(initial: State, params: HamiltonianParams, cfg: PiteConfig, T: float,
        snapshot_times: Sequence[float] = ()) -> RunResult:
    """Evolve a copy of ``initial`` to time ``T``.

    The final time is always snapshotted.  Per-step probability is the
    product over the PITE blocks in that step.
    """
    state = initial.copy()
    dts = step_sizes(cfg, T)
    times = np.concatenate([[0.0], np.cumsum(dts)])
    wanted = _snapshot_steps(times, list(snapshot_times) + [T])
    step_probs = np.ones(len(times))
    logs = np.zeros(len(times))
    scales = np.zeros(len(times))
    logs[0], scales[0] = state.log_success, state.scale
    snaps = []
    over = 0

    def record(j):
        if j in wanted:
            snaps.append(Snapshot(wanted[j], j, state.system.copy(),
                                  state.log_success, state.scale))

    record(0)
    for j, dt in enumerate(dts, start=1):
        probs, flagged = apply_plan(state, params, cfg, plan_step(params, cfg, dt))
        over += flagged > 0
        step_probs[j] = float(np.prod(probs))
        logs[j], scales[j] = state.log_success, state.scale
        record(j)
    result = RunResult(times, step_probs, logs, scales, snaps, cfg, over_range_steps=over)
    if over:
        result.notes.append(f"{over} steps had rotation angles above pi/2")
    return result


def composed_step_matrix(params: HamiltonianParams, cfg: PiteConfig, dtau: float) -> np.ndarray:
    """Dense non-unitary map of one step (post-selected, unnormalized)."""
    from .grid import dense_fourier_matrix

    spec = params.spec
    F = dense_fourier_matrix(spec)
    pot_cfg = cfg.for_potential()

    def kin(weight):
        theta = build_theta(cfg, params.kinetic, weight).values
        diag = np.cos(theta) * np.exp(-1j * weight * params.advection.values)
        return (F * diag[None, :]) @ F.conj().T

    pot = np.diag(np.cos(build_theta(pot_cfg, params.potential.shifted, dtau).values))
    if cfg.trotter_order == 1:
        return kin(dtau) @ pot
    half = kin(dtau / 2)
    return half @ pot @ half
