"""Small argument checks shared by the public entry points."""
import numbers

import numpy as np

from .exceptions import DomainError


def check_scalar(x, name, lo=None, hi=None, lo_open=False, hi_open=False):
    """Return ``x`` as float after checking it is a finite real in the given range."""
    if isinstance(x, bool) or not isinstance(x, (numbers.Real, np.floating, np.integer)):
        raise DomainError(f"{name} must be a real number, got {x!r}")
    x = float(x)
    if not np.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x}")
    if lo is not None and (x < lo or (lo_open and x == lo)):
        raise DomainError(f"{name}={x} violates lower bound {'>' if lo_open else '>='} {lo}")
    if hi is not None and (x > hi or (hi_open and x == hi)):
        raise DomainError(f"{name}={x} violates upper bound {'<' if hi_open else '<='} {hi}")
    return x


def check_int(k, name, lo=None, hi=None):
    if isinstance(k, bool) or not isinstance(k, (numbers.Integral, np.integer)):
        if isinstance(k, (float, np.floating)) and float(k).is_integer():
            k = int(k)
        else:
            raise DomainError(f"{name} must be an integer, got {k!r}")
    k = int(k)
    if lo is not None and k < lo:
        raise DomainError(f"{name}={k} must be >= {lo}")
    if hi is not None and k > hi:
        raise DomainError(f"{name}={k} must be <= {hi}")
    return k


def check_array(x, name, lo=None, lo_open=False):
    """Convert to a float ndarray, rejecting non-finite values and lower-bound violations."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    if lo is not None:
        bad = arr <= lo if lo_open else arr < lo
        if np.any(bad):
            raise DomainError(f"{name} must be {'>' if lo_open else '>='} {lo}")
    return arr


def check_grid(t_grid, name="t_grid"):
    """Sorted, strictly positive, one-dimensional time grid."""
    arr = check_array(np.atleast_1d(t_grid), name, lo=0.0, lo_open=True)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional")
    return arr
