"""Inverse mean curvature flow of coordinate spheres and mass-bound checks.

Coordinate spheres move outward with normal speed 1/H.  In the warped
product the normal speed converts to the coordinate speed
dr/dt = sqrt(phi)/H = r/2, which is regular through the horizon, so flows
may start on the minimal boundary itself.  The Hawking mass along the flow
is monotone whenever the scalar curvature stays >= -6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import geometry
from .errors import DomainError, FlowError, HypothesesNotMet
from .geometry import ConformalInfinity, RadialPotential

__all__ = [
    "FlowState",
    "FlowTrajectory",
    "imcf_integrate",
    "geroch_rate",
    "bracket_check",
    "penrose_rhs",
    "hawking_lower_bound",
    "holder_bound",
    "jump_bound_check",
    "hawking_mass_from_integrals",
    "write_trajectory_csv",
    "TRAJECTORY_COLUMNS",
]

SIXTEEN_PI = 16.0 * math.pi

#: Violations below this relative size are attributed to discretization.
MONOTONE_TOL = 1e-8

#: Sub/supersolution bracketing is only asserted beyond this start radius.
BRACKET_MIN_RHO = 10.0

TRAJECTORY_COLUMNS = ("t", "r", "rho", "area", "H", "hawking_mass",
                      "geroch_rate", "scalar_curvature")


@dataclass(frozen=True)
class FlowState:
    """One sampled flow surface.

    Coordinate spheres are umbilic with constant mean curvature, so the
    trace-free second fundamental form vanishes identically and the Euler
    characteristic never jumps.
    """

    t: float
    r: float
    area: float
    mean_curvature: float
    hawking_mass: float
    geroch_rate: float
    traceless_a_norm: float
    euler_char: int


@dataclass(frozen=True)
class FlowTrajectory:
    states: tuple[FlowState, ...]
    start_radius: float
    monotone: bool
    max_violation: float

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.states])


def _speed(r: float) -> float:
    # (1/H) * sqrt(phi) for H = 2 sqrt(phi)/r; the cancellation is exact
    # and keeps the ODE regular at the horizon.
    return 0.5 * r


def imcf_integrate(inf: ConformalInfinity, p: RadialPotential, r0: float,
                   t_max: float, steps: int = 4096) -> FlowTrajectory:
    """Integrate the flow from radius r0 up to time t_max with fixed-step RK4.

    The generic ODE path is kept (the closed form r0*exp(t/2) is reserved
    for tests).  Requires phi(r0) >= 0 and phi > 0 strictly beyond r0 up to
    the final radius.
    """
    if inf.curvature_sign != p.k_hat:
        raise DomainError("infinity and potential disagree on curvature sign")
    if steps < 1:
        raise DomainError("need at least one step")
    if t_max <= 0.0:
        raise DomainError("t_max must be positive")
    if r0 <= 0.0 or r0 > p.domain_end:
        raise DomainError(f"start radius {r0} outside the potential's domain")
    if p.phi(r0) < -1e-12 * max(1.0, r0 * r0):
        raise FlowError(f"start radius {r0} lies inside the horizon")
    r_final = r0 * math.exp(0.5 * t_max)
    if r_final > p.domain_end:
        raise DomainError("flow leaves the tabulated domain")
    for r in np.geomspace(r0 * (1.0 + 1e-9), r_final, 257):
        if p.phi(r) <= 0.0:
            raise FlowError(f"horizon encountered at r = {r} ahead of the flow")

    dt = t_max / steps
    if dt <= 0.0 or r0 + _speed(r0) * dt == r0 and r0 > 0:
        raise FlowError("step size underflow")

    radii = np.empty(steps + 1)
    radii[0] = r0
    r = r0
    for i in range(steps):
        k1 = _speed(r)
        k2 = _speed(r + 0.5 * dt * k1)
        k3 = _speed(r + 0.5 * dt * k2)
        k4 = _speed(r + dt * k3)
        r = r + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        radii[i + 1] = r

    states = []
    for i, ri in enumerate(radii):
        ti = i * dt
        states.append(FlowState(
            t=ti,
            r=float(ri),
            area=inf.area * ri * ri,
            mean_curvature=geometry.mean_curvature_sphere(p, ri),
            hawking_mass=geometry.hawking_mass_sphere(inf, p, ri),
            geroch_rate=geroch_rate(inf, p, ri),
            traceless_a_norm=0.0,
            euler_char=inf.euler_char,
        ))

    masses = np.array([s.hawking_mass for s in states])
    # largest drawdown below the running maximum: total decrease, not the
    # per-step dip, so genuine violations are not diluted by small steps
    drawdown = np.maximum.accumulate(masses) - masses
    max_violation = float(drawdown.max()) if drawdown.size else 0.0
    tol = MONOTONE_TOL * max(1.0, float(np.max(np.abs(masses))))
    return FlowTrajectory(states=tuple(states), start_radius=float(r0),
                          monotone=max_violation <= tol,
                          max_violation=max_violation)


def geroch_rate(inf: ConformalInfinity, p: RadialPotential, r: float) -> float:
    """Time derivative of the Hawking mass on umbilic constant-H spheres.

    The monotonicity integrand reduces to (16 pi)^(-3/2) |Sigma|^(3/2) (R+6)
    once the trace-free and gradient terms vanish and the Euler
    characteristic matches the infinity.
    """
    if inf.curvature_sign != p.k_hat:
        raise DomainError("infinity and potential disagree on curvature sign")
    area = inf.area * r * r
    return SIXTEEN_PI ** -1.5 * area ** 1.5 * (geometry.scalar_curvature(p, r) + 6.0)


def bracket_check(traj: FlowTrajectory, sub_map) -> bool:
    """Check the flow against the sub/supersolution barriers.

    In the compactification coordinate the flow started at rho_0 must stay
    inside [(rho_0 - 1) e^(t/2) + 1, (rho_0 + 1) e^(t/2) - 1] for t > 0.
    The barrier argument only applies for large starts; starts below
    rho_0 = 10 are rejected as not applicable.
    """
    rho0 = sub_map.rho(traj.start_radius)
    if rho0 < BRACKET_MIN_RHO:
        raise DomainError(
            f"bracket check not applicable: start rho {rho0:.3f} < {BRACKET_MIN_RHO}")
    for s in traj.states[1:]:
        rho = sub_map.rho(s.r)
        grow = math.exp(0.5 * s.t)
        lower = (rho0 - 1.0) * grow + 1.0
        upper = (rho0 + 1.0) * grow - 1.0
        if not (lower - 1e-12 <= rho <= upper + 1e-12):
            return False
    return True


def penrose_rhs(genus: int, area: float) -> float:
    """Right-hand side of the mass bound for a boundary of the given area.

    (1/gamma) sqrt(A/16pi) (1 - genus + A/4pi), gamma = max(1, genus-1)^(3/2).
    """
    if genus < 0:
        raise DomainError("genus must be nonnegative")
    if area < 0.0:
        raise DomainError("area must be nonnegative")
    gamma = float(max(1, genus - 1)) ** 1.5
    return math.sqrt(area / SIXTEEN_PI) * (1.0 - genus + area / (4.0 * math.pi)) / gamma


def hawking_lower_bound(genus: int) -> tuple[float, float]:
    """Minimum of A -> sqrt(A/16pi)(1 - genus + A/4pi) over A >= 0.

    Returns (bound, minimizer_area) = (-((genus-1)/3)^(3/2), 4pi(genus-1)/3).
    """
    if genus < 1:
        raise DomainError("bound formula requires genus >= 1")
    g1 = genus - 1
    return -((g1 / 3.0) ** 1.5), 4.0 * math.pi * g1 / 3.0


def holder_bound(mu_samples: Sequence[float], inf: ConformalInfinity,
                 weights: Optional[Sequence[float]] = None) -> float:
    """Power-mean mass bound for a nonpositive mass aspect.

    Returns -(mean |mu|^(2/3))^(3/2) * (|Sigma_hat|/4pi)^(3/2) where the
    mean is weighted over the cross section.  Always <= sup(mu) * c^(3/2).
    """
    mu = np.asarray(mu_samples, dtype=float)
    if mu.size == 0:
        raise DomainError("need at least one sample")
    if np.any(mu > 0.0):
        raise DomainError("mass aspect samples must be nonpositive")
    if weights is None:
        w = np.full(mu.shape, 1.0)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != mu.shape or np.any(w <= 0.0) or w.sum() <= 0.0:
            raise DomainError("weights must be positive and match the samples")
    mean = float(np.sum(w * np.abs(mu) ** (2.0 / 3.0)) / np.sum(w))
    return -(mean ** 1.5) * (inf.area / (4.0 * math.pi)) ** 1.5


def hawking_mass_from_integrals(genus: int, area: float, h2_integral: float) -> float:
    """Hawking mass assembled from the area and the integral of H^2."""
    if area <= 0.0:
        raise DomainError("area must be positive")
    return math.sqrt(area / SIXTEEN_PI) * (
        1.0 - genus - (h2_integral - 4.0 * area) / SIXTEEN_PI)


def jump_bound_check(area_before: float, area_after: float,
                     h2_integral_before: float, h2_integral_after: float,
                     genus: int) -> bool:
    """Verify that a jump to an outward-minimizing surface cannot drop the mass.

    Hypotheses (violations raise HypothesesNotMet, never return False):
      * the area does not decrease and the H^2 integral does not increase;
      * genus <= 1: the pre-jump Hawking mass is nonnegative;
      * genus >= 2: the pre-jump mass is >= -((genus-1)/3)^(3/2) and the
        pre-jump area is >= (4pi/3)(genus-1), the floor satisfied by any
        stable minimal surface of that genus when R >= -6.

    Under these the mass inequality is a theorem, so the check doubles as a
    property test of the jump algebra.
    """
    if genus < 0:
        raise DomainError("genus must be nonnegative")
    failures = []
    if area_after < area_before:
        failures.append("area decreases across the jump")
    if h2_integral_after > h2_integral_before:
        failures.append("H^2 integral increases across the jump")
    m_before = hawking_mass_from_integrals(genus, area_before, h2_integral_before)
    if genus <= 1:
        if m_before < 0.0:
            failures.append("pre-jump Hawking mass is negative")
    else:
        floor = -(((genus - 1) / 3.0) ** 1.5)
        if m_before < floor:
            failures.append(f"pre-jump Hawking mass below {floor}")
        if area_before < 4.0 * math.pi * (genus - 1) / 3.0:
            failures.append("pre-jump area below the minimal-surface floor")
    if failures:
        raise HypothesesNotMet("hypotheses not met: " + "; ".join(failures))
    m_after = hawking_mass_from_integrals(genus, area_after, h2_integral_after)
    return m_after >= m_before - 1e-12 * max(1.0, abs(m_before))


def write_trajectory_csv(traj: FlowTrajectory, p: RadialPotential, sub_map,
                         path) -> None:
    """Write the fixed-column trajectory table with 17 significant digits."""
    lines = [",".join(TRAJECTORY_COLUMNS)]
    for s in traj.states:
        row = (s.t, s.r, sub_map.rho(s.r), s.area, s.mean_curvature,
               s.hawking_mass, s.geroch_rate, geometry.scalar_curvature(p, s.r))
        lines.append(",".join(format(v, ".17g") for v in row))
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
