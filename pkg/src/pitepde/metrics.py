import numpy as np


def l2_error(u, w, normalized: bool = False) -> float:
    u = np.asarray(u).reshape(-1)
    w = np.asarray(w).reshape(-1)
    if u.shape != w.shape:
        raise ValueError(f"length mismatch: {u.size} vs {w.size}")
    if normalized:
        nu, nw = np.linalg.norm(u), np.linalg.norm(w)
        if nu == 0 or nw == 0:
            raise ValueError("normalized error of a zero vector")
        return float(np.linalg.norm(u / nu - w / nw))
    return float(np.linalg.norm(u - w))


def mse(u, w, divide_by: float = 1.0) -> float:
    """Mean squared difference after dividing both fields by ``divide_by``."""
    u = np.asarray(u).reshape(-1) / divide_by
    w = np.asarray(w).reshape(-1) / divide_by
    if u.shape != w.shape:
        raise ValueError(f"length mismatch: {u.size} vs {w.size}")
    return float(np.mean(np.abs(u - w) ** 2))


def convergence_slope(steps, errors) -> float:
    """Least-squares slope of log(error) against log(step)."""
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if steps.size < 3 or steps.size != errors.size:
        raise ValueError("need at least three (step, error) pairs")
    if np.any(steps <= 0) or np.any(errors <= 0):
        raise ValueError("log-log fit needs positive steps and errors")
    return float(np.polyfit(np.log(steps), np.log(errors), 1)[0])


def pairwise_slopes(steps, errors) -> np.ndarray:
    steps = np.log(np.asarray(steps, dtype=float))
    errors = np.log(np.asarray(errors, dtype=float))
    return np.diff(errors) / np.diff(steps)
