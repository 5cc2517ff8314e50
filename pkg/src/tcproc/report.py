"""Residual reports shared by the equation checks."""
from dataclasses import dataclass, field

import numpy as np

__all__ = ["ResidualReport"]


@dataclass
class ResidualReport:
    """Per-point residuals ``|lhs - rhs|`` of one governing equation.

    ``coords`` maps lattice coordinate names (``t``, ``x``, ``theta``, ...)
    to arrays of the same length as ``residual``.
    """
    equation: str
    coords: dict
    lhs: np.ndarray
    rhs: np.ndarray
    tolerance: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lhs = np.asarray(self.lhs, dtype=float).ravel()
        self.rhs = np.asarray(self.rhs, dtype=float).ravel()
        self.coords = {k: np.asarray(v).ravel() for k, v in self.coords.items()}
        for k, v in self.coords.items():
            if v.shape != self.lhs.shape:
                raise ValueError(f"coordinate {k!r} has {v.size} entries, expected {self.lhs.size}")

    @property
    def residual(self):
        return np.abs(self.lhs - self.rhs)

    @property
    def max_residual(self):
        r = self.residual
        return float(np.max(r)) if r.size else 0.0

    @property
    def passed(self):
        return bool(np.all(np.isfinite(self.residual))) and self.max_residual <= self.tolerance

    def merge(self, other):
        """Concatenate two reports of the same equation; the tolerance is the looser one."""
        keys = sorted(set(self.coords) | set(other.coords))
        n1, n2 = self.lhs.size, other.lhs.size
        coords = {k: np.concatenate([self.coords.get(k, np.full(n1, np.nan)),
                                     other.coords.get(k, np.full(n2, np.nan))]) for k in keys}
        return ResidualReport(self.equation, coords, np.concatenate([self.lhs, other.lhs]),
                              np.concatenate([self.rhs, other.rhs]),
                              max(self.tolerance, other.tolerance), {**self.meta, **other.meta})

    def rows(self):
        """Rows of ``coords..., lhs, rhs, residual`` for tabular output."""
        cols = list(self.coords)
        res = self.residual
        for i in range(self.lhs.size):
            yield {**{c: self.coords[c][i].item() for c in cols},
                   "lhs": self.lhs[i].item(), "rhs": self.rhs[i].item(), "residual": res[i].item()}

    def to_dict(self):
        return {"equation": self.equation, "tolerance": self.tolerance,
                "max_residual": self.max_residual, "passed": self.passed,
                "meta": self.meta, "rows": list(self.rows())}

    def __str__(self):
        flag = "PASS" if self.passed else "FAIL"
        return (f"{self.equation}: max residual {self.max_residual:.3e} "
                f"(tol {self.tolerance:.1e}, {self.lhs.size} points) {flag}")
