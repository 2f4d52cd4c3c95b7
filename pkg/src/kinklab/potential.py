"""Double-well potentials and their admissibility checks.

Two families are provided:

* ``quartic``: U(psi) = (psi^2 - a^2)^2 / (4 a^2), the classical
  Ginzburg-Landau well.  It serves as the reference example that fails
  the flatness and spectral admissibility conditions.
* ``flat_well``: exactly quadratic collars U = m^2 (psi -+ a)^2 / 2 of
  half-width delta around each well, joined by a smooth positive bridge.
  Inside the collars the quadratic remainder is identically zero, so the
  flatness requirement holds trivially, and the bridge is C^14 at the
  joints by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc, betaln

__all__ = [
    "Potential",
    "PotentialError",
    "ConditionReport",
    "make_quartic",
    "make_flat_well",
    "check_U1",
]

# Default smoothstep order: the bridge blend is flat to this derivative
# order at the collar joints, so the glued potential is C^14 there.
SMOOTH_ORDER = 14


class PotentialError(ValueError):
    """Invalid parameters or a failed well construction."""


def _power_product_derivs(A, B, max_order):
    """Derivatives of g(u) = u^A (1-u)^B as exact coefficient tables.

    Returns a list (one entry per order 0..max_order) of dicts
    {(i, j): c} meaning c * u^i * (1-u)^j.  Keeping the factored form
    avoids the catastrophic cancellation of a monomial expansion.
    """
    tables = [{(A, B): 1.0}]
    for _ in range(max_order):
        nxt: dict = {}
        for (i, j), c in tables[-1].items():
            if i > 0:
                nxt[(i - 1, j)] = nxt.get((i - 1, j), 0.0) + c * i
            if j > 0:
                nxt[(i, j - 1)] = nxt.get((i, j - 1), 0.0) - c * j
        tables.append(nxt)
    return tables


def _eval_table(table, u):
    out = np.zeros_like(u)
    for (i, j), c in table.items():
        out += c * u**i * (1.0 - u) ** j
    return out


class _Bridge:
    """Smooth positive bridge on [psi_l, psi_r] between the two collars.

    bridge(psi) = q_minus(psi) + jump(psi) * S(u) + bump_amp * P(u)
    with u = (psi - psi_l) / w, S = betainc(p, p, u), and
    jump(psi) = q_plus(psi) - q_minus(psi) = -2 a m^2 psi (linear).
    P is a plateau bump made of two mirrored smoothsteps, equal to 1 at
    u = 1/2, chosen wide so the bridge stays single-humped.  S is flat to
    order p-1 at u in {0, 1} and P vanishes to the same order there, so
    all derivatives through order p-1 match the collar quadratics.
    """

    def __init__(self, a, m, delta, barrier_height, smooth_order=SMOOTH_ORDER):
        self.a, self.m = a, m
        self.order = smooth_order
        self.p = smooth_order + 1
        self.psi_l = -a + delta
        self.psi_r = a - delta
        self.w = self.psi_r - self.psi_l
        self.inv_beta = math.exp(-betaln(self.p, self.p))  # 1 / B(p, p)
        # blend value at the midpoint is q(0) = m^2 a^2 / 2
        self.bump_amp = barrier_height - 0.5 * m * m * a * a
        self._sprime_tables = _power_product_derivs(self.p - 1, self.p - 1, smooth_order)

    def _S(self, u, order):
        """order-th derivative of the smoothstep S = betainc(p, p, u)."""
        if order == 0:
            return betainc(self.p, self.p, np.clip(u, 0.0, 1.0))
        return self.inv_beta * _eval_table(self._sprime_tables[order - 1], u)

    def _bump(self, u, order):
        """Plateau bump P(u) = S(2u) for u <= 1/2, S(2(1-u)) above."""
        lo = u <= 0.5
        out = np.empty_like(u)
        if order == 0:
            out[lo] = self._S(2.0 * u[lo], 0)
            out[~lo] = self._S(2.0 * (1.0 - u[~lo]), 0)
        else:
            fac = 2.0**order
            out[lo] = fac * self._S(2.0 * u[lo], order)
            out[~lo] = (-fac if order % 2 else fac) * self._S(2.0 * (1.0 - u[~lo]), order)
        return out

    def derivative(self, psi, order):
        a, m = self.a, self.m
        u = (psi - self.psi_l) / self.w
        wk = self.w ** (-order)
        # q_minus^(k)
        if order == 0:
            base = 0.5 * m * m * (psi + a) ** 2
        elif order == 1:
            base = m * m * (psi + a)
        elif order == 2:
            base = np.full_like(psi, m * m)
        else:
            base = np.zeros_like(psi)
        # d^k [S(u(psi)) * psi] = S^(k) w^-k psi + k S^(k-1) w^-(k-1)
        s_k = self._S(u, order) * wk
        if order >= 1:
            s_km1 = self._S(u, order - 1) * self.w ** (1 - order)
            blend = s_k * psi + order * s_km1
        else:
            blend = s_k * psi
        return base - 2.0 * a * m * m * blend + self.bump_amp * self._bump(u, order) * wk


@dataclass
class Potential:
    """Double-well potential U with wells at +-a and U''(+-a) = m^2."""

    kind: str
    a: float
    m: float
    delta: float = 0.0
    barrier_height: float = 0.0
    _bridge: _Bridge | None = field(default=None, repr=False, compare=False)

    # -- evaluation ----------------------------------------------------

    def derivative(self, psi, order=0):
        """order-th derivative of U at psi (vectorized, orders 0..15)."""
        psi = np.asarray(psi, dtype=float)
        scalar = psi.ndim == 0
        psi = np.atleast_1d(psi)
        if self.kind == "quartic":
            out = self._quartic_derivative(psi, order)
        else:
            out = self._flat_well_derivative(psi, order)
        return float(out[0]) if scalar else out

    def _quartic_derivative(self, psi, order):
        a2 = self.a * self.a
        if order == 0:
            return (psi * psi - a2) ** 2 / (4.0 * a2)
        if order == 1:
            return psi * (psi * psi - a2) / a2
        if order == 2:
            return (3.0 * psi * psi - a2) / a2
        if order == 3:
            return 6.0 * psi / a2
        if order == 4:
            return np.full_like(psi, 6.0 / a2)
        return np.zeros_like(psi)

    def _flat_well_derivative(self, psi, order):
        m = self.m
        right = psi >= self.a - self.delta
        left = psi <= -self.a + self.delta
        mid = ~(right | left)
        out = np.empty_like(psi)
        # collar branches are the literal quadratic formulas
        if order == 0:
            out[right] = 0.5 * m * m * (psi[right] - self.a) ** 2
            out[left] = 0.5 * m * m * (psi[left] + self.a) ** 2
        elif order == 1:
            out[right] = m * m * (psi[right] - self.a)
            out[left] = m * m * (psi[left] + self.a)
        elif order == 2:
            out[right] = m * m
            out[left] = m * m
        else:
            out[right] = 0.0
            out[left] = 0.0
        if np.any(mid):
            out[mid] = self._bridge.derivative(psi[mid], order)
        return out

    def u(self, psi):
        return self.derivative(psi, 0)

    def du(self, psi):
        return self.derivative(psi, 1)

    def d2u(self, psi):
        return self.derivative(psi, 2)

    def f(self, psi):
        """Force term F = -U'."""
        return -self.derivative(psi, 1)

    def f_prime(self, psi):
        return -self.derivative(psi, 2)

    # -- geometry ------------------------------------------------------

    def interior_argmax(self, n=20001):
        """Location of the barrier top on (-a, a); leftmost on ties."""
        psi = np.linspace(-self.a, self.a, n)[1:-1]
        vals = self.u(psi)
        return float(psi[int(np.argmax(vals))])

    # -- config round trip ----------------------------------------------

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "a": self.a, "m": self.m}
        if self.kind == "flat_well":
            cfg["delta"] = self.delta
            cfg["barrier_height"] = self.barrier_height
        return cfg

    @staticmethod
    def from_config(cfg: dict) -> "Potential":
        kind = cfg["kind"]
        if kind == "quartic":
            return make_quartic(cfg["a"])
        if kind == "flat_well":
            return make_flat_well(cfg["a"], cfg["m"], cfg["delta"], cfg["barrier_height"])
        raise PotentialError(f"unknown potential kind {kind!r}")


def make_quartic(a: float) -> Potential:
    """U(psi) = (psi^2 - a^2)^2 / (4 a^2); wells at +-a, m^2 = 2."""
    if not a > 0:
        raise PotentialError(f"well location a must be positive, got {a}")
    return Potential(kind="quartic", a=float(a), m=math.sqrt(2.0))


def make_flat_well(a, m, delta, barrier_height, validate=True, smooth_order=SMOOTH_ORDER) -> Potential:
    """Piecewise well: exact quadratic collars of half-width delta joined
    by a C^smooth_order positive bridge with its top near barrier_height.

    With validate=True (default) the constructor rejects bridges that dip
    to zero or below; validate=False builds the object anyway so that the
    admissibility report can exhibit the failure.
    """
    if not a > 0:
        raise PotentialError(f"well location a must be positive, got {a}")
    if not m > 0:
        raise PotentialError(f"mass m must be positive, got {m}")
    if not 0 < delta < a / 2:
        raise PotentialError(f"collar half-width delta must lie in (0, a/2), got {delta}")
    joint_value = 0.5 * m * m * delta * delta
    if validate and barrier_height <= joint_value:
        raise PotentialError(
            f"barrier_height {barrier_height} must exceed the collar value "
            f"{joint_value:.6g} at the joints"
        )
    p = Potential(
        kind="flat_well",
        a=float(a),
        m=float(m),
        delta=float(delta),
        barrier_height=float(barrier_height),
    )
    p._bridge = _Bridge(float(a), float(m), float(delta), float(barrier_height), smooth_order)
    if validate:
        psi = np.linspace(-a + delta, a - delta, 20001)[1:-1]
        vals = p.u(psi)
        i = int(np.argmin(vals))
        if vals[i] <= 0.0:
            raise PotentialError(
                f"bridge dips to U({psi[i]:.6g}) = {vals[i]:.6g} <= 0; "
                f"raise barrier_height (joints sit at {joint_value:.6g})"
            )
    return p


# -- admissibility report ------------------------------------------------


@dataclass
class Clause:
    name: str
    passed: bool
    detail: dict

    def as_dict(self):
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class ConditionReport:
    clauses: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses)

    def clause(self, name) -> Clause:
        for c in self.clauses:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self):
        return {"passed": self.passed, "clauses": [c.as_dict() for c in self.clauses]}

    def to_json(self, **kw):
        return json.dumps(self.as_dict(), **kw)


def _flatness_clause(p: Potential, tol: float) -> Clause:
    """Remainder U - m^2 (psi -+ a)^2 / 2 must vanish to high order at the wells.

    Passes either because the remainder is identically below tol on the fit
    window (exact collars) or because its log-log slope is >= 13.5.
    """
    half = p.delta if p.kind == "flat_well" else p.a / 4.0
    detail = {"window": [1e-3, half / 2.0]}
    passed = True
    for sign, label in ((1.0, "right"), (-1.0, "left")):
        dist = np.geomspace(1e-3, half / 2.0, 200)
        psi = sign * p.a - sign * dist
        rem = np.abs(p.u(psi) - 0.5 * p.m * p.m * (psi - sign * p.a) ** 2)
        if np.max(rem) <= tol:
            detail[label] = {"mode": "identically_zero", "max_remainder": float(np.max(rem))}
            continue
        good = rem > 1e-300
        slope = float(np.polyfit(np.log(dist[good]), np.log(rem[good]), 1)[0])
        detail[label] = {"mode": "slope_fit", "slope": slope}
        passed = passed and slope >= SMOOTH_ORDER - 0.5
    return Clause("flatness", bool(passed), detail)


def check_U1(p: Potential, tol: float) -> ConditionReport:
    """Admissibility report: well conditions, interior positivity,
    lower bound on [-3a, 3a], and flatness of the quadratic remainder."""
    a, m = p.a, p.m
    wells_detail = {
        "U(a)": float(p.u(a)),
        "U(-a)": float(p.u(-a)),
        "U'(a)": float(p.du(a)),
        "U'(-a)": float(p.du(-a)),
        "U''(a)": float(p.d2u(a)),
        "U''(-a)": float(p.d2u(-a)),
        "m_sq": m * m,
    }
    wells_ok = (
        abs(wells_detail["U(a)"]) <= tol
        and abs(wells_detail["U(-a)"]) <= tol
        and abs(wells_detail["U'(a)"]) <= tol
        and abs(wells_detail["U'(-a)"]) <= tol
        and abs(wells_detail["U''(a)"] - m * m) <= max(tol, 1e-9)
        and abs(wells_detail["U''(a)"] - wells_detail["U''(-a)"]) <= max(tol, 1e-9)
    )

    interior = np.linspace(-a, a, 10001)[1:-1]
    vals = p.u(interior)
    i_min = int(np.argmin(vals))
    interior_ok = vals[i_min] > 0.0

    wide = np.linspace(-3 * a, 3 * a, 10001)
    wide_min = float(np.min(p.u(wide)))
    bounded_ok = wide_min >= -tol

    return ConditionReport(
        clauses=[
            Clause("wells", bool(wells_ok), wells_detail),
            Clause(
                "interior_positive",
                bool(interior_ok),
                {"min": float(vals[i_min]), "argmin": float(interior[i_min])},
            ),
            Clause("bounded_below", bool(bounded_ok), {"min_on_3a": wide_min}),
            _flatness_clause(p, tol),
        ]
    )
