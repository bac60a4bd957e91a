"""Comparison of static data against the equal-surface-gravity reference.

For a static potential V with W = |grad V|^2, the reference Kottler space
with the same surface gravity supplies a single-variable profile omega with
W_0 = omega(V).  The machinery here evaluates omega and its derivatives in
closed form, certifies the master ODE they satisfy, computes the zero-order
comparison coefficient, and assembles the inequality report (W <= W_0,
boundary curvature, mass aspect, horizon area radius, and the defining
cubic of the reference radius).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import asymptotics, geometry
from .errors import DomainError, HypothesesNotMet, NumericalError
from .geometry import (RadialPotential, _largest_cubic_root, conformal_infinity,
                       kottler_build)

__all__ = [
    "ReferencePotential",
    "ComparisonReport",
    "reference_potential",
    "kappa_to_mass",
    "mass_to_kappa",
    "omega_eval",
    "omega_derivatives",
    "alpha_coefficient",
    "omega_ode_residual",
    "potential_derivative_residual",
    "boundary_gauss_curvature",
    "compare_with_reference",
    "mean_curvature_evolution_residual",
]


def kappa_to_mass(k_hat: int, kappa: float):
    """Mass of the Kottler space with the given surface gravity.

    kappa = (3 r^2 + k_hat) / (2 r) inverts monotonically for
    k_hat in {-1, 0}.  For k_hat = +1 the relation is not injective
    (minimum sqrt(3) at r = 1/sqrt(3)); both masses are returned, sorted,
    with a warning.
    """
    geometry._check_k(k_hat)
    if kappa <= 0.0:
        raise DomainError("surface gravity must be positive")
    if k_hat == 1:
        disc = kappa * kappa - 3.0
        if disc < 0.0:
            raise DomainError(
                "no spherical horizon for surface gravity below sqrt(3)")
        warnings.warn("surface gravity does not determine the mass for "
                      "curvature sign +1; returning both branches")
        roots = sorted(((kappa - math.sqrt(disc)) / 3.0,
                        (kappa + math.sqrt(disc)) / 3.0))
        return tuple(0.5 * (r ** 3 + r) for r in roots)
    if k_hat == 0:
        r = 2.0 * kappa / 3.0
    else:
        r = (kappa + math.sqrt(kappa * kappa + 3.0)) / 3.0
    return 0.5 * (r ** 3 + k_hat * r)


def mass_to_kappa(k_hat: int, m: float) -> float:
    """Surface gravity of the Kottler space with the given mass."""
    space = kottler_build(k_hat, m)
    if space.horizon_radius <= 0.0:
        raise DomainError("no horizon: surface gravity undefined")
    return space.surface_gravity


class ReferencePotential:
    """Reference profile omega(V) = (r + m0/r^2)^2 with r the largest root
    of r^2 + k_hat - 2 m0/r = V^2."""

    def __init__(self, k_hat: int, m0: float):
        space = kottler_build(k_hat, m0)
        if space.horizon_radius <= 0.0:
            raise DomainError("reference requires a positive horizon radius")
        self.k_hat = k_hat
        self.m0 = float(m0)
        self.kappa = space.surface_gravity
        self.horizon_radius = space.horizon_radius

    def r_of_V(self, v: float) -> float:
        if v < 0.0:
            raise DomainError("V must be nonnegative")
        found = _largest_cubic_root(self.k_hat - v * v, 2.0 * self.m0)
        if found is None:
            raise NumericalError(f"no radius with potential value {v}")
        return found[0]

    def omega(self, v: float) -> float:
        r = self.r_of_V(v)
        return (r + self.m0 / (r * r)) ** 2


def reference_potential(k_hat: int, m0: float) -> ReferencePotential:
    return ReferencePotential(k_hat, m0)


def omega_eval(ref: ReferencePotential, v: float) -> float:
    """omega(V); equals kappa^2 at V = 0 and V^2 + 1 when m0 = 0, k_hat = -1."""
    return ref.omega(v)


def omega_derivatives(ref: ReferencePotential, v: float) -> tuple[float, float]:
    """Closed forms omega' = 2V (1 - 2 m0/r^3) and
    omega'' = omega'/V + 12 V^2 m0 / (sqrt(omega) r^4)."""
    if v <= 0.0:
        raise DomainError("V must be positive")
    r = ref.r_of_V(v)
    omega = (r + ref.m0 / (r * r)) ** 2
    d1 = 2.0 * v * (1.0 - 2.0 * ref.m0 / r ** 3)
    d2 = d1 / v + 12.0 * v * v * ref.m0 / (math.sqrt(omega) * r ** 4)
    return d1, d2


def alpha_coefficient(ref: ReferencePotential, v: float) -> float:
    """Zero-order coefficient omega'/V - omega'' = -12 V^2 m0/(sqrt(W0) r^4).

    Its sign is opposite to the reference mass, which is what feeds the
    maximum principle.  Both the difference form and the closed form are
    evaluated and must agree.
    """
    if v <= 0.0:
        raise DomainError("V must be positive")
    d1, d2 = omega_derivatives(ref, v)
    difference_form = d1 / v - d2
    r = ref.r_of_V(v)
    w0 = (r + ref.m0 / (r * r)) ** 2
    closed_form = -12.0 * v * v * ref.m0 / (math.sqrt(w0) * r ** 4)
    scale = max(1.0, abs(closed_form))
    if abs(difference_form - closed_form) > 1e-9 * scale:
        raise NumericalError(
            f"alpha forms disagree: {difference_form} vs {closed_form}")
    return closed_form


def omega_ode_residual(ref: ReferencePotential, v: float) -> float:
    """Defect of the master equation for omega,

        omega'' omega + 3 omega' V
            = (3/4) |omega'|^2 - 3 V omega' + 9 V^2 + (omega/V) omega'.

    This is the identity that certifies the whole comparison chain at the
    level where it is literally an ODE.
    """
    if v <= 0.0:
        raise DomainError("V must be positive")
    omega = ref.omega(v)
    d1, d2 = omega_derivatives(ref, v)
    lhs = d2 * omega + 3.0 * d1 * v
    rhs = 0.75 * d1 * d1 - 3.0 * v * d1 + 9.0 * v * v + omega * d1 / v
    return abs(lhs - rhs)


def potential_derivative_residual(ref: ReferencePotential, r: float) -> float:
    """Defect of dV/dr = sqrt(omega(V))/V along the reference profile."""
    if r <= ref.horizon_radius:
        raise DomainError("r must lie outside the horizon")
    phi = r * r + ref.k_hat - 2.0 * ref.m0 / r
    v = math.sqrt(phi)
    dv_dr = (r + ref.m0 / (r * r)) / v
    return abs(dv_dr - math.sqrt(ref.omega(v)) / v)


def boundary_gauss_curvature(ref: ReferencePotential) -> float:
    """Gauss curvature of the reference horizon from the profile alone.

    The profile expands as omega(V) = kappa^2 - 2 K V^2 + O(V^4) off the
    horizon (the quadratic Taylor coefficient is written without the
    customary 1/2, fixed so that K = k_hat / r_m^2 on every member), so K
    is read from a Richardson-refined second difference at V = 0.
    """
    if ref.kappa <= 0.0:
        raise DomainError("critical reference: no horizon expansion")
    omega0 = ref.kappa ** 2
    h0 = max(1e-3, 0.04 * min(ref.kappa, 1.0))
    estimates = []
    for k in range(4):
        h = h0 / 2.0 ** k
        estimates.append(2.0 * (ref.omega(h) - omega0) / (h * h))
    second, _ = asymptotics.richardson(estimates, ratio=2.0, first_order=2,
                                       levels=3)
    return -0.5 * second


@dataclass(frozen=True)
class ComparisonReport:
    """Inequality report against the equal-surface-gravity reference."""

    sup_w_minus_w0: float
    boundary_curvature: float
    reference_curvature: float
    mass_aspect: float
    reference_mass: float
    area_radius: float
    reference_area_radius: float
    cubic_residual: float
    verdicts: dict

    @property
    def all_pass(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "sup_w_minus_w0": self.sup_w_minus_w0,
            "boundary_curvature": self.boundary_curvature,
            "reference_curvature": self.reference_curvature,
            "mass_aspect": self.mass_aspect,
            "reference_mass": self.reference_mass,
            "area_radius": self.area_radius,
            "reference_area_radius": self.reference_area_radius,
            "cubic_residual": self.cubic_residual,
            "verdicts": dict(self.verdicts),
            "all_pass": self.all_pass,
        }


def compare_with_reference(p: RadialPotential, genus: int,
                           grid_points: int = 256, r_factor_max: float = 30.0,
                           static_tol: float = 1e-8, w_tol: float = 1e-9,
                           curvature_tol: float = 1e-8, mu_tol: float = 1e-3,
                           map_r_end: float = 1e6) -> ComparisonReport:
    """Build the full comparison report for a static radial data set.

    The data must be static to tolerance, have a horizon, curvature sign -1
    at infinity, genus >= 2, and surface gravity at most 1 (nonpositive
    reference mass); otherwise the hypotheses are reported as not met.
    """
    if p.k_hat != -1:
        raise DomainError("comparison requires curvature sign -1 at infinity")
    inf = conformal_infinity(genus)
    if inf.curvature_sign != p.k_hat:
        raise DomainError("genus must be at least 2")
    r_h = geometry.horizon_radius(p)
    if r_h is None or r_h <= 0.0:
        raise DomainError("data has no horizon")

    probe = np.geomspace(r_h * 1.02, r_h * 50.0, 48)
    worst = max(max(res.laplace_residual, res.ricci_residual)
                for res in (geometry.static_residual(p, r) for r in probe))
    if worst > static_tol:
        raise DomainError(
            f"input is not static: residual {worst:.3e} > {static_tol:.1e}")

    kappa = 0.5 * p.dphi(r_h)
    if kappa <= 0.0:
        raise DomainError("degenerate horizon: surface gravity is zero")
    if kappa > 1.0 + 1e-12:
        raise HypothesesNotMet(
            f"hypotheses not met: surface gravity {kappa:.6f} > 1 "
            "(positive reference mass)")

    m0 = kappa_to_mass(-1, kappa)
    ref = ReferencePotential(-1, m0)

    grid = np.geomspace(r_h * (1.0 + 1e-8), r_h * r_factor_max, grid_points)
    sup = -math.inf
    for r in grid:
        w = geometry.potential_gradient_squared(p, r)
        w0 = ref.omega(math.sqrt(p.phi(r)))
        sup = max(sup, w - w0)

    boundary_curv = p.k_hat / (r_h * r_h)
    reference_curv = boundary_gauss_curvature(ref)

    map_start = 2.0 * r_h
    map_end = max(map_r_end, map_start * 1.001e3)
    sub_map = asymptotics.build_substitution(p, map_start, map_end)
    mu = asymptotics.mass_aspect_extract(p, sub_map).mu

    area = inf.area * r_h * r_h
    frak_r = math.sqrt(area / (4.0 * math.pi * (genus - 1)))
    r0 = ref.horizon_radius
    cubic_residual = abs(2.0 * m0 + r0 - r0 ** 3)

    verdicts = {
        "w_le_w0": bool(sup <= w_tol),
        "boundary_curvature_ge_reference": bool(boundary_curv >= reference_curv - curvature_tol),
        "mass_aspect_le_reference": bool(mu <= m0 + mu_tol),
        "area_radius_ge_reference": bool(frak_r >= r0 - 1e-10),
        "cubic_root": bool(cubic_residual <= 1e-10),
    }
    return ComparisonReport(
        sup_w_minus_w0=float(sup),
        boundary_curvature=boundary_curv,
        reference_curvature=reference_curv,
        mass_aspect=mu,
        reference_mass=m0,
        area_radius=frak_r,
        reference_area_radius=r0,
        cubic_residual=cubic_residual,
        verdicts=verdicts,
    )


def mean_curvature_evolution_residual(p: RadialPotential, r: float,
                                      static_tol: float = 1e-8) -> float:
    """Defect of dH/dt = H nu(V) - |A|^2 V for the flow with normal speed V.

    The inner product reads the mean curvature vector as -H nu with nu
    outward.  The left side is differenced along the flow (dr/dt = phi);
    the right side is assembled pointwise, so the residual measures the
    discretization only and vanishes to high order on static profiles.
    """
    p.require_inside(r)
    phi = p.phi(r)
    if phi < -1e-12 * max(1.0, r * r):
        raise DomainError("r lies inside the horizon")
    if phi <= 0.0:
        return 0.0  # horizon: both sides vanish with phi
    res = geometry.static_residual(p, r)
    if max(res.laplace_residual, res.ricci_residual) > static_tol:
        raise DomainError("input is not static to tolerance")

    def h_of(radius):
        return geometry.mean_curvature_sphere(p, radius)

    h = r * 1e-4
    if p.domain_start > 0.0:
        h = min(h, 0.4 * (r - p.domain_start))
    if h <= 0.0:
        raise NumericalError("no room to difference the flow at this radius")
    estimates = []
    for k in range(2):
        step = h / 2.0 ** k
        estimates.append((h_of(r + step) - h_of(r - step)) / (2.0 * step))
    dh_dr, _ = asymptotics.richardson(estimates, ratio=2.0, first_order=2,
                                      levels=1)
    lhs = phi * dh_dr  # dH/dt along dr/dt = V sqrt(phi) = phi

    sqrt_phi = math.sqrt(phi)
    nu_v = 0.5 * p.dphi(r)          # nu(V) = sqrt(phi) V'(r)
    h_val = 2.0 * sqrt_phi / r
    a_sq = 0.5 * h_val * h_val      # umbilic: |A|^2 = H^2/2
    rhs = h_val * nu_v - a_sq * sqrt_phi
    return abs(lhs - rhs)
