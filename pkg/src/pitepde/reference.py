"""Classical reference solutions and error bounds."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .grid import GridSpec, HamiltonianParams, check_dense_size
from .statevector import NumericalAbort
from .variants import PiteConfig

FE_BLOWUP = 1e6


class Instability(NumericalAbort):
    pass


# dense exponentials -------------------------------------------------------

def dense_ite(H: np.ndarray, t: float, psi: np.ndarray) -> np.ndarray:
    """``exp(-t H) psi`` via scaling-and-squaring Pade (scipy.linalg.expm)."""
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("H must be square")
    if not np.all(np.isfinite(H)):
        raise ValueError("H has non-finite entries")
    if t == 0:
        return np.array(psi, dtype=complex)
    return scipy.linalg.expm(-t * H) @ np.asarray(psi, dtype=complex)


def dense_matrix_function(H: np.ndarray, f) -> np.ndarray:
    """``f(H)`` for Hermitian ``H`` by eigendecomposition."""
    H = np.asarray(H)
    if not np.allclose(H, H.conj().T, atol=1e-12 * max(1.0, np.abs(H).max())):
        raise ValueError("matrix function route needs a Hermitian matrix")
    lam, U = np.linalg.eigh(H)
    return (U * f(lam)[None, :]) @ U.conj().T


def dense_ite_eigh(H: np.ndarray, t: float, psi: np.ndarray) -> np.ndarray:
    """Independent route for Hermitian ``H``: ``U exp(-t Lambda) U^dagger psi``."""
    return dense_matrix_function(H, lambda lam: np.exp(-t * lam)) @ np.asarray(psi, dtype=complex)


# error budgets ------------------------------------------------------------

@dataclass(frozen=True)
class ErrorBudget:
    N_delta: int
    C1: float
    lam_N_delta: float
    exact_norm: float
    unnormalized_bound: float
    bound: float
    prob_lower: float
    prob_upper: float


def _spectral_overlaps(H: np.ndarray, psi: np.ndarray):
    lam, U = np.linalg.eigh(H)
    if lam[0] < -1e-12 * max(1.0, abs(lam[-1])):
        raise ValueError("error bounds need a positive semidefinite H")
    psi = np.asarray(psi, dtype=complex)
    w = np.abs(U.conj().T @ psi) ** 2
    return np.maximum(lam, 0.0), w


def n_delta(weights: np.ndarray, delta: float) -> int:
    """Smallest count of leading eigencomponents whose weight reaches ``1 - delta``."""
    if not 0 <= delta < 1:
        raise ValueError("delta must lie in [0, 1)")
    cum = np.cumsum(weights)
    target = (1 - delta) * cum[-1]
    return int(np.searchsorted(cum, target - 1e-15 * cum[-1]) + 1)


def error_budget(H: np.ndarray, psi: np.ndarray, delta: float, T: float, dtau: float) -> ErrorBudget:
    """Normalized-error bound of the ``cos(sqrt(2 dtau H))`` scheme.

    ``psi`` must be normalized.  The unnormalized error is bounded by
    ``2 C1 T dtau / 3 + 2 sqrt(delta)``, the normalized one by
    ``(4 C1 T dtau / 3 + 4 sqrt(delta)) / |exp(-T H) psi|`` and the
    success probability is sandwiched by ``(|exp(-TH) psi| -+ err)^2``.
    """
    lam, w = _spectral_overlaps(H, psi)
    nd = n_delta(w, delta)
    C1 = float(np.sqrt(np.sum(lam[:nd] ** 4 * w[:nd])))
    exact = float(np.sqrt(np.sum(np.exp(-2 * T * lam) * w)))
    unnorm = 2 * C1 * T * dtau / 3 + 2 * np.sqrt(delta)
    bound = (4 * C1 * T * dtau / 3 + 4 * np.sqrt(delta)) / exact
    lower = max(exact - unnorm, 0.0) ** 2
    return ErrorBudget(nd, C1, float(lam[nd - 1]), exact, unnorm, bound, lower,
                       (exact + unnorm) ** 2)


@dataclass(frozen=True)
class ApiteBudget:
    N_delta: int
    C_m0: float
    numerator: float
    bound: float
    precise_bound: float
    vacuous: bool
    constraint_ok: bool


def apite_budget(H: np.ndarray, psi: np.ndarray, delta: float, T: float, dtau: float,
                 m0: float) -> ApiteBudget:
    """Normalized-error bound of the linear-angle scheme around ``arccos(m0)``.

    ``bound`` uses ``lambda_{N_delta}^2``; ``precise_bound`` uses
    ``C_m0 = C1 / (1 - m0^2)``.  Both are only valid when the angles of the
    retained components stay in ``[theta0, theta0 + pi/2]`` and the tail
    satisfies ``|cos(theta) / m0| <= 1`` (``constraint_ok``).
    """
    from .variants import apite_hidden_constraint, apite_slope
    lam, w = _spectral_overlaps(H, psi)
    nd = n_delta(w, delta)
    _, s0 = apite_slope(m0)
    C1 = float(np.sqrt(np.sum(lam[:nd] ** 4 * w[:nd])))
    C_m0 = C1 / (1 - m0 ** 2)
    exact = float(np.sqrt(np.sum(np.exp(-2 * T * lam) * w)))
    numer = lam[nd - 1] ** 2 * T * dtau / (1 - m0 ** 2) + 4 * np.sqrt(delta)
    precise = C_m0 * T * dtau + 4 * np.sqrt(delta)
    ok = (s0 * dtau * lam[nd - 1] <= np.pi / 2 + 1e-15) and (
        m0 >= 1 / np.sqrt(2)) and apite_hidden_constraint(m0, dtau * lam[nd:])
    denom = exact - numer
    vac = denom <= 0
    bound = np.inf if vac else numer / denom
    pden = exact - precise
    pbound = np.inf if pden <= 0 else precise / pden
    return ApiteBudget(nd, C_m0, float(numer), float(bound), float(pbound), bool(vac), bool(ok))


# analytic series ----------------------------------------------------------

def truncated_analytic_1d(case: str, n_trun: int, x, t: float, a: float, v: float,
                          L: float = 1.0, grid_truncation: bool = False) -> np.ndarray:
    """Fourier-series solution of ``u_t = a u_xx - v u_x`` for catalog data.

    ``grid_truncation=False`` sums the real cosine series for ``k = 1..n_trun``.
    ``grid_truncation=True`` keeps the complex modes ``k = -n_trun/2 .. n_trun/2 - 1``,
    the projection a grid with ``N = n_trun`` points can represent.
    """
    x = np.asarray(x, dtype=float)
    if n_trun < 1:
        raise ValueError("n_trun must be positive")
    xi = x - v * t
    if case == "sine":
        def ck(k):
            return -2 / (np.pi * (4 * k ** 2 - 1.0))
        u0 = 2 / np.pi
    elif case == "delta":
        def ck(k):
            return np.where(k % 2 == 0, 1.0, -1.0) / L
        u0 = 1 / L
    else:
        raise ValueError(f"unknown case {case!r}")
    if grid_truncation:
        if n_trun % 2:
            raise ValueError("grid truncation needs an even n_trun")
        out = np.zeros(x.shape, dtype=complex)
        for k in range(-n_trun // 2, n_trun // 2):
            decay = np.exp(-a * (2 * np.pi * k / L) ** 2 * t)
            out += ck(k) * decay * np.exp(2j * np.pi * k * xi / L)
        return out
    out = np.full(x.shape, u0, dtype=float)
    for k in range(1, n_trun + 1):
        decay = np.exp(-a * (2 * np.pi * k / L) ** 2 * t)
        out += 2 * ck(k) * decay * np.cos(2 * np.pi * k * xi / L)
    return out


# finite differences -------------------------------------------------------

def fdm_operator(spec: GridSpec, a: float, v: float, V=None, sparse: bool = False):
    """Central-difference matrix of ``-a u_xx + v u_x + V u`` (1D, periodic)."""
    if spec.d != 1:
        raise ValueError("the finite-difference baseline is one-dimensional")
    N, h = spec.N, spec.h
    i = np.arange(N)
    rows = np.concatenate([i, i, i])
    cols = np.concatenate([i, (i + 1) % N, (i - 1) % N])
    diag = np.full(N, 2 * a / h ** 2)
    if V is not None:
        diag = diag + np.asarray(V, dtype=float).reshape(-1)
    vals = np.concatenate([diag, np.full(N, -a / h ** 2 + v / (2 * h)),
                           np.full(N, -a / h ** 2 - v / (2 * h))])
    # coo sums duplicates, which matters for N = 2 where both neighbours coincide
    A = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(N, N)).tocsc()
    return A if sparse else A.toarray()


def fdm_solve(spec: GridSpec, a: float, v: float, u0: np.ndarray, dtau: float, T: float,
              scheme: str = "BE", V=None, snapshot_times=()) -> dict:
    """March grid values with backward or forward Euler.

    Returns ``{t: u}`` for the requested snapshot times and ``T``.  Backward
    Euler factors the sparse ``I + dtau A`` once.
    """
    if scheme not in ("BE", "FE"):
        raise ValueError(f"unknown scheme {scheme!r}")
    K = int(round(T / dtau))
    if K < 0 or abs(K * dtau - T) > 1e-9 * max(1.0, T):
        raise ValueError("T must be an integer multiple of dtau")
    A = fdm_operator(spec, a, v, V, sparse=True)
    u = np.array(u0, dtype=complex).reshape(-1)
    wanted = {int(round(s / dtau)): s for s in list(snapshot_times) + [T]}
    out = {}
    if 0 in wanted:
        out[wanted[0]] = u.copy()
    if scheme == "BE":
        lu = scipy.sparse.linalg.splu((scipy.sparse.identity(spec.N, format="csc")
                                       + dtau * A).astype(complex))
    for j in range(1, K + 1):
        if scheme == "BE":
            u = lu.solve(u)
        else:
            u = u - dtau * (A @ u)
            if np.linalg.norm(u) > FE_BLOWUP:
                raise Instability(f"forward Euler blew up at step {j}")
        if j in wanted:
            out[wanted[j]] = u.copy()
    return out


# HHL surrogate ------------------------------------------------------------

def hhl_surrogate_step(H: np.ndarray, dtau: float, v: np.ndarray) -> np.ndarray:
    """Solve ``(I + dtau H) x = v``."""
    M = np.eye(H.shape[0]) + dtau * np.asarray(H)
    try:
        lu = scipy.linalg.lu_factor(M, check_finite=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalAbort("singular implicit-Euler system") from exc
    if np.any(np.diag(lu[0]) == 0):
        raise NumericalAbort("singular implicit-Euler system")
    return scipy.linalg.lu_solve(lu, np.asarray(v, dtype=complex))


def hhl_surrogate_run(H: np.ndarray, dtau: float, psi0: np.ndarray, K: int):
    """``K`` implicit-Euler steps; returns the final vector and the norm ratio squared."""
    M = np.eye(H.shape[0]) + dtau * np.asarray(H)
    lu = scipy.linalg.lu_factor(M)
    x = np.asarray(psi0, dtype=complex)
    n0 = np.linalg.norm(x)
    for _ in range(K):
        x = scipy.linalg.lu_solve(lu, x)
    return x, float((np.linalg.norm(x) / n0) ** 2)


# exact-PITE intermediate --------------------------------------------------

def exact_pite_reference_run(initial, params: HamiltonianParams, cfg: PiteConfig, T: float,
                             snapshot_times=()):
    """Same splitting as ``cfg`` with every block replaced by the exact angle."""
    from .evolve import run
    exact = replace(cfg, variant="exact", potential_variant=None, m0=1.0, order=1,
                    vs_dtau=None)
    if cfg.variant == "vs_apite":
        raise ValueError("the exact reference needs a uniform step")
    result = run(initial, params, exact, T, snapshot_times)
    result.reference = "exact_pite"
    return result


def dense_reference(params: HamiltonianParams, psi0: np.ndarray, t: float) -> np.ndarray:
    """``exp(-t H_N) psi0`` with the dense Hamiltonian."""
    from .grid import assemble_dense_hamiltonian
    check_dense_size(params.spec)
    return dense_ite(assemble_dense_hamiltonian(params), t, psi0)
