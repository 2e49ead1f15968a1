"""Drivers that turn a RunConfig into runs, references and metrics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import RunConfig
from .evolve import RunResult, run
from .grid import GridSpec, HamiltonianParams, assemble_dense_hamiltonian, hamiltonian, make_potential
from .metrics import convergence_slope, l2_error, mse
from .postproc import (InitialCondition, fourier_coefficients, make_initial,
                       prepare_initial_state, reconstruct)
from .reference import (dense_ite, exact_pite_reference_run, fdm_solve, hhl_surrogate_run,
                        truncated_analytic_1d)
from .statevector import State
from .systems import DIFFUSION, REACTIONS, SystemTrajectory, nonlinear_run

ROUNDOFF_FLOOR = 1e-10
COMPARE_METHODS = ("aapite", "apite", "vs_apite", "hhl", "fdm", "analytic")


@dataclass
class Metric:
    kind: str
    value: float
    t: Optional[float] = None
    dtau: Optional[float] = None
    N: Optional[int] = None
    variant: str = ""
    reference: str = ""
    series: str = ""

    def __post_init__(self):
        if self.kind not in ("l2_normalized", "l2_raw", "mse", "slope"):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if not np.isfinite(self.value):
            raise ValueError(f"metric {self.kind} is not finite")
        if self.kind != "slope" and self.value < 0:
            raise ValueError("error metrics are non-negative")

    def row(self) -> dict:
        return {"series": self.series, "kind": self.kind, "value": repr(float(self.value)),
                "t": "" if self.t is None else repr(float(self.t)),
                "dtau": "" if self.dtau is None else repr(float(self.dtau)),
                "N": "" if self.N is None else self.N,
                "variant": self.variant, "reference": self.reference}


@dataclass
class Setup:
    spec: GridSpec
    params: HamiltonianParams
    initial: InitialCondition
    state: State
    cfg: RunConfig
    notes: list = field(default_factory=list)

    @property
    def snapshot_times(self) -> list:
        return sorted(set(self.cfg.time.get("snapshots") or []) | {self.cfg.time["T"]})


def _potential(cfg: RunConfig, spec: GridSpec):
    pot = cfg.equation.get("potential")
    if pot is None:
        return None
    if "table" in pot:
        return np.asarray(pot["table"], dtype=float)
    params = {k: v for k, v in pot.items() if k != "kind"}
    return make_potential(spec, pot["kind"], **params)


def build_setup(cfg: RunConfig, n: Optional[int] = None) -> Setup:
    eq = cfg.equation
    spec = GridSpec(eq["d"], eq["n"] if n is None else n, float(eq["L"]))
    params = hamiltonian(spec, eq["a"], eq["v"], _potential(cfg, spec))
    init_params = {k: v for k, v in eq["initial"].items() if k != "kind"}
    u0 = make_initial(eq["initial"]["kind"], spec, **init_params)
    state = prepare_initial_state(fourier_coefficients(u0, spec), spec)
    return Setup(spec, params, u0, state, cfg)


def run_setup(setup: Setup, **overrides) -> RunResult:
    pcfg = setup.cfg.pite_config(**overrides)
    return run(setup.state, setup.params, pcfg, setup.cfg.time["T"], setup.snapshot_times)


def fine_points(spec: GridSpec, N_f: int) -> np.ndarray:
    return spec.L / N_f * np.arange(N_f)


# references ---------------------------------------------------------------

def analytic_field(setup: Setup, t: float, N_f: int) -> np.ndarray:
    eq = setup.cfg.equation
    a = eq["a"][0] if isinstance(eq["a"], list) else eq["a"]
    return truncated_analytic_1d(eq["initial"]["kind"], setup.cfg.reference["n_trun"],
                                 fine_points(setup.spec, N_f), t, a, eq["v"][0], setup.spec.L)


def fdm_fields(setup: Setup, times, N_f: int) -> dict:
    """Backward or forward Euler on a ``2**fdm_n`` grid, sampled at ``N_f`` points.

    ``fdm_dtau = "t/1000"`` marches each time point separately with step
    ``t/1000``; a number uses one march with that step.
    """
    ref = setup.cfg.reference
    eq = setup.cfg.equation
    fspec = GridSpec(1, ref["fdm_n"], setup.spec.L)
    if fspec.N % N_f:
        raise ValueError(f"fdm grid {fspec.N} is not a multiple of N_f={N_f}")
    stride = fspec.N // N_f
    pts = fine_points(fspec, fspec.N)[:, None]
    u0 = setup.initial(pts).reshape(-1)
    pot = _potential(setup.cfg, fspec)
    V = None if pot is None else (pot(pts) if callable(pot) else np.interp(
        pts[:, 0], fine_points(setup.spec, setup.spec.N), pot))
    a = eq["a"][0] if isinstance(eq["a"], list) else eq["a"]
    out = {}
    if ref["fdm_dtau"] == "t/1000":
        for t in times:
            if t == 0:
                out[t] = u0[::stride].astype(complex)
                continue
            res = fdm_solve(fspec, a, eq["v"][0], u0, t / 1000, t, ref["scheme"], V)
            out[t] = res[t][::stride]
    else:
        res = fdm_solve(fspec, a, eq["v"][0], u0, ref["fdm_dtau"], max(times), ref["scheme"], V,
                        snapshot_times=times)
        out = {t: res[t][::stride] for t in times}
    return out


def reference_fields(setup: Setup, result: Optional[RunResult], N_f: int, kind: str = None) -> dict:
    """``{t: field on the N_f grid}`` for the configured reference kind."""
    kind = kind or setup.cfg.reference["kind"]
    times = [s.t for s in result.snapshots] if result else setup.snapshot_times
    if kind == "none":
        return {}
    if kind == "analytic":
        return {t: analytic_field(setup, t, N_f) for t in times}
    if kind == "fdm":
        return fdm_fields(setup, times, N_f)
    if kind == "exact_pite":
        ref = exact_pite_reference_run(setup.state, setup.params, result.config,
                                       setup.cfg.time["T"], times)
        return {t: reconstruct(ref.snapshot_at(t).unnormalized(), setup.spec, N_f) for t in times}
    if kind == "dense":
        H = assemble_dense_hamiltonian(setup.params)
        psi0 = setup.state.scale * setup.state.system
        return {t: reconstruct(dense_ite(H, t, psi0), setup.spec, N_f) for t in times}
    raise ValueError(f"unknown reference kind {kind!r}")


def solution_fields(setup: Setup, result: RunResult, N_f: int) -> dict:
    return {s.t: reconstruct(s.unnormalized(), setup.spec, N_f) for s in result.snapshots}


def error_metrics(setup: Setup, result: RunResult, N_f: int, kind: str = None,
                  series: str = "") -> list:
    """Raw, normalized and (optionally N-scaled) MSE errors at every snapshot."""
    refs = reference_fields(setup, result, N_f, kind)
    kind = kind or setup.cfg.reference["kind"]
    fields = solution_fields(setup, result, N_f)
    div = setup.spec.N if setup.cfg.output["divide_by_N"] else 1.0
    meta = dict(dtau=result.config.dtau, N=setup.spec.N, variant=result.config.variant,
                reference=kind, series=series)
    out = []
    for t, ref in refs.items():
        u = fields[t]
        out.append(Metric("l2_raw", l2_error(u, ref), t=t, **meta))
        if np.linalg.norm(u) > 0 and np.linalg.norm(ref) > 0:
            out.append(Metric("l2_normalized", l2_error(u, ref, normalized=True), t=t, **meta))
        out.append(Metric("mse", mse(u, ref, div), t=t, **meta))
    return out


# error decomposition ------------------------------------------------------

def error_decomposition(cfg: RunConfig, dtaus, ns=None, t: Optional[float] = None) -> dict:
    """Three error series at time ``t`` (default ``T``).

    ``discretization``: analytic solution against ``exp(-t H_N)`` applied
    without splitting, over the grid sizes ``ns``.
    ``trotter``: exact-angle split run against ``exp(-t H_N)``, over ``dtaus``.
    ``approximation``: configured run against the exact-angle split run,
    over ``dtaus``.  Errors are raw l2 norms on the ``N_f`` grid.  The two
    step-size series end with their fitted slope when they have three or
    more points above roundoff.
    """
    t = cfg.time["T"] if t is None else t
    N_f = cfg.output["N_f"]
    base = build_setup(cfg)
    out = {"discretization": [], "trotter": [], "approximation": []}

    if ns:
        eq = cfg.equation
        if not (eq["d"] == 1 and eq.get("potential") is None
                and eq["initial"]["kind"] in ("sine", "delta")):
            raise ValueError("the discretization series needs an analytic reference "
                             "(1D sine or delta data without a potential)")
        for n in ns:
            s = build_setup(cfg, n)
            H = assemble_dense_hamiltonian(s.params)
            u = reconstruct(dense_ite(H, t, s.state.scale * s.state.system), s.spec, N_f)
            err = l2_error(u, analytic_field(s, t, N_f))
            out["discretization"].append(Metric("l2_raw", err, t=t, N=s.spec.N, variant="exact",
                                                reference="analytic", series="discretization"))

    H = assemble_dense_hamiltonian(base.params)
    dense = reconstruct(dense_ite(H, t, base.state.scale * base.state.system), base.spec, N_f)
    for dt in dtaus:
        pcfg = cfg.pite_config(dtau=dt)
        ex = exact_pite_reference_run(base.state, base.params, pcfg, t)
        ex_field = reconstruct(ex.final.unnormalized(), base.spec, N_f)
        out["trotter"].append(Metric("l2_raw", l2_error(ex_field, dense), t=t, dtau=dt,
                                     N=base.spec.N, variant="exact", reference="dense",
                                     series="trotter"))
        approx = run(base.state, base.params, pcfg, t)
        ap_field = reconstruct(approx.final.unnormalized(), base.spec, N_f)
        out["approximation"].append(Metric("l2_raw", l2_error(ap_field, ex_field), t=t, dtau=dt,
                                           N=base.spec.N, variant=pcfg.variant,
                                           reference="exact_pite", series="approximation"))

    for name in ("trotter", "approximation"):
        series = out[name]
        xs = [m.dtau for m in series]
        ys = [m.value for m in series]
        # a series sitting at roundoff has no meaningful order
        if len(series) >= 3 and min(ys) > ROUNDOFF_FLOOR:
            series.append(Metric("slope", convergence_slope(xs, ys), t=t, series=name,
                                 reference=series[0].reference))
    return out


# method comparison --------------------------------------------------------

@dataclass
class ComparisonRow:
    method: str
    t: float
    success_prob: Optional[float]
    log10_success: Optional[float]
    l2_raw: Optional[float]
    mse: Optional[float]

    def row(self) -> dict:
        def fmt(x):
            return "" if x is None else repr(float(x))
        return {"method": self.method, "t": repr(float(self.t)),
                "success_prob": fmt(self.success_prob), "log10_success": fmt(self.log10_success),
                "l2_raw": fmt(self.l2_raw), "mse": fmt(self.mse)}


def _hhl_fields(setup: Setup, dtau: float, times, N_f: int) -> dict:
    H = assemble_dense_hamiltonian(setup.params)
    x = setup.state.scale * setup.state.system
    out, done = {}, 0
    for t in sorted(times):
        K = int(round(t / dtau))
        if abs(K * dtau - t) > 1e-9 * max(1.0, t):
            raise ValueError(f"hhl step {dtau} does not divide t={t}")
        if K > done:
            x, _ = hhl_surrogate_run(H, dtau, x, K - done)
            done = K
        out[t] = reconstruct(x, setup.spec, N_f)
    return out


def compare(cfg: RunConfig, methods=COMPARE_METHODS) -> list:
    """Run each method on the configured equation and score it against the reference.

    The reference is the analytic series when the configuration admits one
    and the finite-difference solution otherwise.  Probabilities are
    reported for the PITE variants only.
    """
    setup = build_setup(cfg)
    N_f = cfg.output["N_f"]
    times = setup.snapshot_times
    eq = cfg.equation
    analytic_ok = (eq["d"] == 1 and eq.get("potential") is None
                   and eq["initial"]["kind"] in ("sine", "delta"))
    ref_kind = "analytic" if analytic_ok else "fdm"
    if ref_kind == "fdm" and eq["d"] != 1:
        ref_kind = "dense"
    ref = reference_fields(setup, None, N_f, ref_kind)
    div = setup.spec.N if cfg.output["divide_by_N"] else 1.0
    cmp_cfg = cfg.compare
    rows = []

    def score(method, fields, result=None):
        for t in times:
            prob = logp = None
            if result is not None:
                snap = result.snapshot_at(t)
                logp = snap.log_success / np.log(10.0)
                prob = snap.success_prob
                u = reconstruct(snap.unnormalized(), setup.spec, N_f)
            else:
                u = fields.get(t)
            err = m = None
            if u is not None and t in ref:
                err, m = l2_error(u, ref[t]), mse(u, ref[t], div)
            rows.append(ComparisonRow(method, t, prob, logp, err, m))

    for method in methods:
        if method == "aapite":
            res = run_setup(setup, variant="aapite", m0=1.0)
            score(method, None, res)
        elif method == "apite":
            c = cmp_cfg["apite"]
            res = run_setup(setup, variant="apite", m0=c["m0"], dtau=c["dtau"],
                            potential_variant=None, order=1)
            score(method, None, res)
        elif method == "vs_apite":
            c = cmp_cfg["vs_apite"]
            res = run_setup(setup, variant="vs_apite", m0=c["m0"], vs_dtau=tuple(c["schedule"]),
                            potential_variant=None, order=1)
            score(method, None, res)
        elif method == "hhl":
            dt = cmp_cfg["hhl"].get("dtau") or cfg.time["dtau"]
            score(method, _hhl_fields(setup, dt, times, N_f))
        elif method == "fdm":
            if eq["d"] != 1:
                continue
            score(method, ref if ref_kind == "fdm" else fdm_fields(setup, times, N_f))
        elif method == "analytic":
            if analytic_ok:
                score(method, ref)
        else:
            raise ValueError(f"unknown method {method!r}")
    return rows


# coupled systems ----------------------------------------------------------

def system_initial(model: str, spec: GridSpec):
    if model == "turing":
        u = make_initial("gaussian_sum", spec)
        c = fourier_coefficients(u, spec)
        return [c, c]
    if model == "burgers":
        c1 = fourier_coefficients(make_initial("sin_mode", spec, wavenumber=[2, 0]), spec)
        c2 = fourier_coefficients(make_initial("constant", spec, value=0.5), spec)
        return [c1, c2]
    raise ValueError(f"unknown model {model!r}")


def run_system(cfg: RunConfig) -> SystemTrajectory:
    s = cfg.system
    if s is None:
        raise ValueError("config has no system block")
    spec = GridSpec(2, s["n"], float(s["L"]))
    pcfg = cfg.pite_config(variant=s["variant"], order=s["order"], dtau=s["dtau"],
                           potential_variant=None, trotter_order=1, m0=1.0)
    return nonlinear_run(system_initial(s["model"], spec), REACTIONS[s["model"]],
                         DIFFUSION[s["model"]], s["dtau"], s["T"], spec, s["snapshots"],
                         pcfg, s["reversed_order"])

