"""Exact increment samplers and first-passage simulation of inverse subordinators."""
import numpy as np

from .exceptions import SamplerError

MAX_REJECTION_ROUNDS = 200
CHUNK_STEPS = 32


def positive_stable(rng, alpha, size):
    """Kanter's representation of ``S`` with ``E exp(-x S) = exp(-x**alpha)``."""
    u = rng.random(size) * np.pi
    e = rng.standard_exponential(size)
    a = np.sin(alpha * u) / np.sin(u) ** (1.0 / alpha)
    b = (np.sin((1.0 - alpha) * u) / e) ** ((1.0 - alpha) / alpha)
    return a * b


def increments(f, delta, rng, size):
    """``H(delta)`` draws for the stable and tempered-stable families.

    Tempered increments are stable increments accepted with probability
    ``exp(-beta x)``; the acceptance rate is ``exp(-delta beta**alpha)``.
    """
    alpha = f.params.get("alpha")
    scale = delta ** (1.0 / alpha) if alpha is not None else None
    if f.name == "stable":
        return scale * positive_stable(rng, alpha, size)
    if f.name == "tempered_stable":
        beta = f.params["beta"]
        n = int(np.prod(size))
        out = np.empty(n)
        todo = np.arange(n)
        for _ in range(MAX_REJECTION_ROUNDS):
            x = scale * positive_stable(rng, alpha, todo.size)
            ok = rng.random(todo.size) < np.exp(-beta * x)
            out[todo[ok]] = x[ok]
            todo = todo[~ok]
            if todo.size == 0:
                return out.reshape(size)
        raise SamplerError("tempered-stable rejection sampler exceeded its iteration guard")
    raise SamplerError(f"no exact increment sampler for the {f.name!r} family")


def first_passage(f, checkpoints, delta, rng, n_paths):
    """``Y(t_j) = delta * (min{k : H(k delta) > t_j} - U)`` for sorted checkpoints.

    Each row is one subordinator path shared by all checkpoints. The
    uniform jitter ``U`` is drawn once per path, so rows are nondecreasing
    even when several checkpoints are crossed in the same step.
    """
    cps = np.asarray(checkpoints, dtype=float)
    out = np.zeros((n_paths, cps.size))
    jitter = rng.random(n_paths)
    pending = np.zeros(n_paths, dtype=np.int64)       # next checkpoint index per path
    pending[:] = np.searchsorted(cps, 0.0, side="right")  # t = 0 gives Y = 0
    level = np.zeros(n_paths)
    steps = np.zeros(n_paths, dtype=np.int64)
    active = np.flatnonzero(pending < cps.size)
    while active.size:
        h = level[active, None] + np.cumsum(increments(f, delta, rng, (active.size, CHUNK_STEPS)), axis=1)
        for j in range(cps.size):
            sel = pending[active] == j
            if not np.any(sel):
                continue
            rows = np.flatnonzero(sel)
            over = h[rows] > cps[j]
            hit = over[:, -1]
            k = np.argmax(over[hit], axis=1) + 1
            idx = active[rows[hit]]
            out[idx, j] = delta * (steps[idx] + k - jitter[idx])
            pending[idx] += 1
        level[active] = h[:, -1]
        steps[active] += CHUNK_STEPS
        active = active[pending[active] < cps.size]
    return out
