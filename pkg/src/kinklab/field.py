"""Uniform grids, phase-space states, energies, and discrete norms.

All quadrature is trapezoidal and all discrete derivatives are 2nd-order
centered differences (one-sided at the boundary), matching the order of
the time steppers so that invariant residuals scale uniformly like h^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "FieldState",
    "PerturbationState",
    "d1",
    "d2",
    "energy",
    "energy_density",
    "norm_E_alpha",
    "norm_W",
    "norm_Linf",
    "snapshot_to_csv",
]


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-L, L] with an odd number of nodes (x=0 is a node)."""

    L: float
    h: float
    x: np.ndarray = field(repr=False, compare=False, default=None)

    @staticmethod
    def make(L: float, h: float) -> "Grid":
        ratio = L / h
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(f"L/h = {ratio} must be an integer so that x=0 is a node")
        n_half = int(round(ratio))
        x = np.linspace(-L, L, 2 * n_half + 1)
        return Grid(L=float(L), h=float(h), x=x)

    @property
    def n(self) -> int:
        return self.x.size


def d1(y: np.ndarray, h: float) -> np.ndarray:
    """Centered first difference, 2nd-order one-sided at the ends."""
    return np.gradient(y, h, edge_order=2)


def d2(y: np.ndarray, h: float) -> np.ndarray:
    """Standard 3-point second difference, 2nd-order one-sided at the ends."""
    out = np.empty_like(y)
    out[1:-1] = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / (h * h)
    out[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / (h * h)
    out[-1] = (2.0 * y[-1] - 5.0 * y[-2] + 4.0 * y[-3] - y[-4]) / (h * h)
    return out


def _check_components(grid, psi, pi):
    if psi.shape != grid.x.shape or pi.shape != grid.x.shape:
        raise ValueError("component shape does not match the grid")
    if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(pi))):
        raise ValueError("state contains non-finite entries")


@dataclass
class FieldState:
    """Lab-frame phase-space point Y = (psi, pi) at time t."""

    grid: Grid
    psi: np.ndarray
    pi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=float)
        self.pi = np.asarray(self.pi, dtype=float)
        _check_components(self.grid, self.psi, self.pi)

    def copy(self) -> "FieldState":
        return FieldState(self.grid, self.psi.copy(), self.pi.copy(), self.t)


@dataclass
class PerturbationState:
    """Moving-frame transversal component X = (Psi, Pi) on the grid y = x - b."""

    grid: Grid
    psi: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=float)
        self.pi = np.asarray(self.pi, dtype=float)
        _check_components(self.grid, self.psi, self.pi)

    def copy(self) -> "PerturbationState":
        return PerturbationState(self.grid, self.psi.copy(), self.pi.copy())

    @staticmethod
    def zero(grid: Grid) -> "PerturbationState":
        return PerturbationState(grid, np.zeros(grid.n), np.zeros(grid.n))


# -- energies --------------------------------------------------------------


def energy_density(Y: FieldState, p) -> np.ndarray:
    """Pointwise density  e = pi^2/2 + psi'^2/2 + U(psi)."""
    dpsi = d1(Y.psi, Y.grid.h)
    return 0.5 * Y.pi**2 + 0.5 * dpsi**2 + p.u(Y.psi)


def energy(Y: FieldState, p) -> float:
    """Total energy by trapezoidal quadrature of the density."""
    return float(np.trapezoid(energy_density(Y, p), dx=Y.grid.h))


# -- norms -------------------------------------------------------------------


def _l2(y: np.ndarray, h: float) -> float:
    return float(np.sqrt(np.trapezoid(y * y, dx=h)))


def _l1(y: np.ndarray, h: float) -> float:
    return float(np.trapezoid(np.abs(y), dx=h))


def norm_E_alpha(X, alpha: float) -> float:
    """Weighted energy norm: H^1_alpha of the first component plus
    L^2_alpha of the second, with weight (1 + |x|)^alpha."""
    h = X.grid.h
    w = (1.0 + np.abs(X.grid.x)) ** alpha
    return _l2(w * X.psi, h) + _l2(w * d1(X.psi, h), h) + _l2(w * X.pi, h)


def norm_W(X) -> float:
    """L^1-based smoothness norm: W^{2,1} of the first component plus
    W^{1,1} of the second."""
    h = X.grid.h
    return (
        _l1(X.psi, h)
        + _l1(d1(X.psi, h), h)
        + _l1(d2(X.psi, h), h)
        + _l1(X.pi, h)
        + _l1(d1(X.pi, h), h)
    )


def norm_Linf(psi) -> float:
    """Sup norm of a sample array (or of the first component of a state)."""
    if hasattr(psi, "psi"):
        psi = psi.psi
    return float(np.max(np.abs(psi)))


def norm_L2_weighted(psi: np.ndarray, grid: Grid, alpha: float) -> float:
    """Plain weighted L^2 norm |(1+|x|)^alpha psi|_2 of one component."""
    w = (1.0 + np.abs(grid.x)) ** alpha
    return _l2(w * psi, grid.h)


# -- export ------------------------------------------------------------------


def snapshot_to_csv(Y, path):
    """Write x, psi, pi columns for a field or perturbation state."""
    data = np.column_stack([Y.grid.x, Y.psi, Y.pi])
    np.savetxt(path, data, delimiter=",", header="x,psi,pi", comments="")
