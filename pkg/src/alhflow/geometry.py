"""Pointwise geometry of warped-product metrics g = phi(r)^-1 dr^2 + r^2 ghat.

The cross section (Sigma_hat, ghat) is a closed constant-curvature surface
with curvature sign k_hat in {-1, 0, +1} and normalized area (4*pi for
k_hat in {0, +1}, 4*pi*(genus-1) for k_hat = -1).  The radial profile
phi = V^2 determines every curvature quantity of the 3-metric through
first and second derivatives of phi.

The Kottler family phi = r^2 + k_hat - 2m/r is the exact reference: its
scalar curvature is -6 and it solves the static vacuum system with
cosmological constant -3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, NumericalError

__all__ = [
    "ConformalInfinity",
    "RadialPotential",
    "KottlerSpace",
    "StaticResidual",
    "conformal_infinity",
    "kottler_potential",
    "perturbed_kottler_potential",
    "tabulated_potential",
    "largest_zero",
    "kottler_build",
    "critical_mass",
    "critical_data",
    "admissible_mass_interval",
    "horizon_radius",
    "scalar_curvature",
    "ricci_components",
    "mean_curvature_sphere",
    "hawking_mass_sphere",
    "potential_gradient_squared",
    "static_residual",
]

FOUR_PI = 4.0 * math.pi

#: Critical mass below which no k_hat = -1 horizon exists.
CRITICAL_MASS_HYPERBOLIC = -1.0 / (3.0 * math.sqrt(3.0))


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class ConformalInfinity:
    """Topology and normalization of the surface at infinity."""

    genus: int
    curvature_sign: int
    area: float
    c: float
    euler_char: int

    def __post_init__(self):
        if self.genus < 0:
            raise DomainError(f"genus must be nonnegative, got {self.genus}")
        if self.curvature_sign not in (-1, 0, 1):
            raise DomainError(f"curvature sign must be -1, 0 or +1, got {self.curvature_sign}")
        k, g = self.curvature_sign, self.genus
        if k == 1 and g != 0:
            raise DomainError("curvature sign +1 requires genus 0")
        if k == 0 and g != 1:
            raise DomainError("curvature sign 0 requires genus 1")
        if k == -1 and g < 2:
            raise DomainError("curvature sign -1 requires genus >= 2")
        expected_c = float(max(1, g - 1))
        expected_area = FOUR_PI * expected_c if k == -1 else FOUR_PI
        if not math.isclose(self.c, expected_c, rel_tol=0, abs_tol=1e-12):
            raise DomainError(f"c must equal max(1, genus-1) = {expected_c}")
        if not math.isclose(self.area, expected_area, rel_tol=1e-12, abs_tol=0):
            raise DomainError(f"area must equal {expected_area} for this topology")
        if self.euler_char != 2 - 2 * g:
            raise DomainError("euler_char must equal 2 - 2*genus")
        # Normalization identity used by the Hawking mass closed form.
        assert 1 - g - self.c * k == 0

    @property
    def gamma(self) -> float:
        """Topological constant c^(3/2) entering the mass bound."""
        return self.c ** 1.5


def conformal_infinity(genus: int) -> ConformalInfinity:
    """Build the normalized conformal infinity of the given genus."""
    if genus < 0:
        raise DomainError(f"genus must be nonnegative, got {genus}")
    if genus == 0:
        k = 1
    elif genus == 1:
        k = 0
    else:
        k = -1
    c = float(max(1, genus - 1))
    area = FOUR_PI * c if k == -1 else FOUR_PI
    return ConformalInfinity(genus=genus, curvature_sign=k, area=area,
                             c=c, euler_char=2 - 2 * genus)


@dataclass(frozen=True)
class RadialPotential:
    """Radial profile phi(r) = V(r)^2 of a warped-product metric.

    `tail` evaluates phi(r) - r^2 - k_hat.  Analytic families supply it in
    closed form so that large-radius asymptotics are free of catastrophic
    cancellation; the default falls back to plain subtraction.
    """

    k_hat: int
    kind: str
    domain_start: float
    phi: Callable
    dphi: Callable
    d2phi: Callable
    tail: Callable
    domain_end: float = math.inf
    params: dict = field(default_factory=dict)

    def require_inside(self, r: float) -> None:
        """Accept radii in [domain_start, domain_end] with r > 0.

        The lower endpoint (the horizon, when present) belongs to the
        manifold; operations needing phi > 0 there check that separately.
        """
        if not (r > 0.0 and self.domain_start <= r <= self.domain_end):
            raise DomainError(
                f"r = {r} outside domain [{self.domain_start}, {self.domain_end}]")


@dataclass(frozen=True)
class KottlerSpace:
    """An exact Kottler solution together with its horizon data.

    `horizon_radius` is 0 and `surface_gravity` is stored as 0 for the
    horizonless boundary members (m = 0 with k_hat in {0, +1}).
    """

    k_hat: int
    mass: float
    horizon_radius: float
    surface_gravity: float
    potential: RadialPotential


@dataclass(frozen=True)
class StaticResidual:
    """Residuals of the static vacuum system at one radius."""

    laplace_residual: float
    ricci_residual: float


# ---------------------------------------------------------------------------
# root finding

_SCAN_PER_DECADE = 256
_BISECT_TOL = 1e-14


def _largest_cubic_root(a: float, b: float) -> Optional[tuple[float, bool]]:
    """Largest positive root of p(r) = r^3 + a*r - b, or None.

    Scans a descending log grid for the rightmost sign change, bisects,
    then Newton-polishes.  Returns (root, is_double).  A double root (the
    cubic touching zero from above) never produces a sign change, so it is
    recovered from the interior minimum of p when the scan fails.
    """

    def p(r):
        return r * r * r + a * r - b

    def dp(r):
        return 3.0 * r * r + a

    r_hi = 1.0 + max(abs(a), abs(b))  # Cauchy bound: all roots lie below
    scale = max(1.0, r_hi)

    bracket = None
    r_right = r_hi
    p_right = p(r_right)
    decades_scanned = 0
    while decades_scanned < 20 and bracket is None:
        r_left_edge = r_right / 10.0
        grid = np.geomspace(r_right, r_left_edge, _SCAN_PER_DECADE + 1)
        vals = p(grid)
        signs = np.sign(vals)
        flips = np.nonzero(signs[:-1] * signs[1:] <= 0)[0]
        if flips.size:
            i = flips[0]
            bracket = (grid[i + 1], grid[i])
            break
        r_right, p_right = r_left_edge, vals[-1]
        decades_scanned += 1

    if bracket is None:
        # Possible double root: p has an interior minimum only when a < 0.
        if a < 0.0:
            r_star = math.sqrt(-a / 3.0)
            if abs(p(r_star)) <= 1e-11 * max(1.0, abs(a) ** 1.5):
                return r_star, True
        return None

    lo, hi = bracket
    if p(hi) < 0.0:  # orient so p(hi) >= 0 (largest root approached from above)
        lo, hi = hi, lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= _BISECT_TOL * max(1.0, abs(mid)) or mid in (lo, hi):
            break
        if p(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    for _ in range(3):  # Newton polish
        slope = dp(root)
        if slope == 0.0:
            break
        step = p(root) / slope
        new = root - step
        if not (0.0 < new <= r_hi * 1.01):
            break
        root = new
        if abs(step) <= 1e-16 * max(1.0, abs(root)):
            break
    if abs(p(root)) > 1e-9 * scale ** 3:
        raise NumericalError(
            f"root polish failed on bracket [{lo}, {hi}]: residual {p(root):.3e}")
    is_double = abs(dp(root)) < 1e-8 * max(1.0, scale * scale)
    return root, is_double


def largest_zero(k_hat: int, m: float) -> Optional[float]:
    """Largest positive zero of V(r) = sqrt(r^2 + k_hat - 2m/r), or None.

    Zeros of V coincide with positive roots of r^3 + k_hat*r - 2m.
    """
    _check_k(k_hat)
    found = _largest_cubic_root(float(k_hat), 2.0 * m)
    return None if found is None else found[0]


def critical_mass(k_hat: int) -> float:
    _check_k(k_hat)
    return CRITICAL_MASS_HYPERBOLIC if k_hat == -1 else 0.0


def critical_data(k_hat: int) -> tuple[float, str]:
    """Critical mass for the given curvature sign, with a description."""
    _check_k(k_hat)
    if k_hat == -1:
        return (CRITICAL_MASS_HYPERBOLIC,
                "double horizon root at 1/sqrt(3); the inner end is "
                "asymptotic to a cylinder over the cross section")
    if k_hat == 0:
        return (0.0,
                "horizon radius shrinks to zero; the metric becomes an "
                "exponentially expanding product")
    return (0.0, "no horizon; the completion is hyperbolic space")


def admissible_mass_interval(k_hat: int) -> tuple[float, float]:
    """Closed-below interval of masses accepted by kottler_build."""
    _check_k(k_hat)
    return (critical_mass(k_hat), math.inf)


def _check_k(k_hat: int) -> None:
    if k_hat not in (-1, 0, 1):
        raise DomainError(f"curvature sign must be -1, 0 or +1, got {k_hat}")


# ---------------------------------------------------------------------------
# potential families


def kottler_potential(k_hat: int, m: float) -> RadialPotential:
    """phi = r^2 + k_hat - 2m/r with exact derivative and tail evaluators."""
    _check_k(k_hat)
    r_m = largest_zero(k_hat, m)
    start = r_m if r_m is not None else 0.0
    k = float(k_hat)
    return RadialPotential(
        k_hat=k_hat,
        kind="kottler",
        domain_start=start,
        phi=lambda r: r * r + k - 2.0 * m / r,
        dphi=lambda r: 2.0 * r + 2.0 * m / (r * r),
        d2phi=lambda r: 2.0 - 4.0 * m / (r * r * r),
        tail=lambda r: -2.0 * m / r,
        params={"m": float(m)},
    )


def perturbed_kottler_potential(k_hat: int, m: float, eps: float) -> RadialPotential:
    """phi = r^2 + k_hat - 2m/r + eps/r^2 (scalar curvature -6 + 2 eps/r^4)."""
    _check_k(k_hat)
    k = float(k_hat)

    def phi(r):
        return r * r + k - 2.0 * m / r + eps / (r * r)

    def dphi(r):
        return 2.0 * r + 2.0 * m / (r * r) - 2.0 * eps / (r * r * r)

    def d2phi(r):
        return 2.0 - 4.0 * m / (r * r * r) + 6.0 * eps / (r * r * r * r)

    p = RadialPotential(
        k_hat=k_hat, kind="perturbed-kottler", domain_start=0.0,
        phi=phi, dphi=dphi, d2phi=d2phi,
        tail=lambda r: -2.0 * m / r + eps / (r * r),
        params={"m": float(m), "eps": float(eps)},
    )
    start = horizon_radius(p)
    if start is None:
        return p
    return RadialPotential(
        k_hat=k_hat, kind="perturbed-kottler", domain_start=start,
        phi=phi, dphi=dphi, d2phi=d2phi, tail=p.tail, params=p.params)


def tabulated_potential(k_hat: int, r_samples, phi_samples) -> RadialPotential:
    """Monotone cubic interpolation of sampled phi values.

    Derivatives come from the interpolant; the tail falls back to plain
    subtraction, so asymptotic extraction from tabulated data degrades at
    very large radii.
    """
    _check_k(k_hat)
    r_arr = np.asarray(r_samples, dtype=float)
    phi_arr = np.asarray(phi_samples, dtype=float)
    if r_arr.ndim != 1 or r_arr.size < 4:
        raise DomainError("need at least 4 samples on a 1-d radius grid")
    if np.any(np.diff(r_arr) <= 0):
        raise DomainError("radius samples must be strictly increasing")
    interp = PchipInterpolator(r_arr, phi_arr, extrapolate=False)
    d1 = interp.derivative(1)
    d2 = interp.derivative(2)
    k = float(k_hat)

    def as_float(f):
        def call(r):
            out = f(r)
            if np.any(np.isnan(out)):
                raise DomainError("evaluation outside tabulated range")
            return float(out) if np.isscalar(r) else out
        return call

    phi_eval = as_float(interp)
    return RadialPotential(
        k_hat=k_hat, kind="tabulated",
        domain_start=float(r_arr[0]), domain_end=float(r_arr[-1]),
        phi=phi_eval, dphi=as_float(d1), d2phi=as_float(d2),
        tail=lambda r: phi_eval(r) - r * r - k,
    )


def kottler_build(k_hat: int, m: float) -> KottlerSpace:
    """Kottler space of the given mass, with horizon radius and surface gravity.

    The surface gravity is (3 r_m^2 + k_hat) / (2 r_m) = phi'(r_m)/2; it is
    exactly 0 for the critical k_hat = -1 member (double root).
    """
    _check_k(k_hat)
    lo, _ = admissible_mass_interval(k_hat)
    if m < lo - 1e-15:
        raise DomainError(
            f"mass {m} inadmissible for k_hat={k_hat}; require m >= {lo}")
    found = _largest_cubic_root(float(k_hat), 2.0 * m)
    if found is None:
        # boundary members m = 0 with k_hat in {0, +1}: no horizon
        r_m, kappa = 0.0, 0.0
    else:
        r_m, is_double = found
        kappa = 0.0 if is_double else (3.0 * r_m * r_m + k_hat) / (2.0 * r_m)
    return KottlerSpace(
        k_hat=k_hat, mass=float(m), horizon_radius=r_m,
        surface_gravity=kappa, potential=kottler_potential(k_hat, m))


def horizon_radius(p: RadialPotential) -> Optional[float]:
    """Largest zero of phi for a generic potential, by bracketed scan."""
    if p.kind == "kottler":
        return largest_zero(p.k_hat, p.params["m"])
    r_hi = min(p.domain_end, 10.0 * (1.0 + abs(p.tail(1.0)) + abs(p.k_hat)))
    if p.kind == "tabulated":
        r_hi = p.domain_end
    r_lo = max(p.domain_start, 1e-8) if p.kind == "tabulated" else 1e-8
    grid = np.geomspace(r_hi, max(r_lo, r_hi * 1e-10), 2048)
    vals = np.array([p.phi(r) for r in grid])
    if vals[0] <= 0:
        raise DomainError("potential not positive at the outer scan radius")
    flips = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if not flips.size:
        return None
    i = flips[0]
    hi, lo = grid[i], grid[i + 1]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * max(1.0, mid):
            break
        if p.phi(mid) <= 0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    for _ in range(3):
        slope = p.dphi(root)
        if slope == 0.0:
            break
        root -= p.phi(root) / slope
    return float(root)


# ---------------------------------------------------------------------------
# pointwise quantities


def scalar_curvature(p: RadialPotential, r: float):
    """Scalar curvature R = -2 phi'/r + 2 (k_hat - phi)/r^2."""
    p.require_inside(r)
    return -2.0 * p.dphi(r) / r + 2.0 * (p.k_hat - p.phi(r)) / (r * r)


def ricci_components(p: RadialPotential, r: float) -> tuple[float, float]:
    """Unit-frame Ricci eigenvalues (radial, tangential).

    radial = -phi'/r, tangential = -(phi'/(2r) + (phi - k_hat)/r^2);
    the radial one equals -2 - 2m/r^3 exactly on Kottler potentials.
    """
    p.require_inside(r)
    dphi = p.dphi(r)
    radial = -dphi / r
    tangential = -(dphi / (2.0 * r) + (p.phi(r) - p.k_hat) / (r * r))
    return radial, tangential


def mean_curvature_sphere(p: RadialPotential, r: float) -> float:
    """Outward mean curvature H = 2 sqrt(phi)/r of the sphere {r} x Sigma_hat."""
    p.require_inside(r)
    phi = p.phi(r)
    if phi < 0.0:
        if phi < -1e-12 * max(1.0, r * r):
            raise DomainError(f"phi({r}) = {phi} < 0: inside the horizon")
        phi = 0.0  # rounding noise at the horizon root
    return 2.0 * math.sqrt(phi) / r


def potential_gradient_squared(p: RadialPotential, r: float) -> float:
    """|grad V|^2 = (phi')^2 / 4 for V = sqrt(phi)."""
    p.require_inside(r)
    d = p.dphi(r)
    return 0.25 * d * d


def hawking_mass_sphere(inf: ConformalInfinity, p: RadialPotential, r: float) -> float:
    """Hawking mass of the coordinate sphere {r} x Sigma_hat.

    On these spheres the area is 4*pi*c*r^2 and H^2 = 4 phi/r^2, so the
    surface integral collapses to

        m_H = (sqrt(c)*r/2) * (1 - genus - c*(phi - r^2)).

    Since 1 - genus - c*k_hat = 0 for every normalized infinity, this is
    evaluated through the potential tail as -(c^(3/2) r / 2) * tail(r),
    which stays exact at large radii.
    """
    if inf.curvature_sign != p.k_hat:
        raise DomainError(
            f"infinity curvature {inf.curvature_sign} != potential k_hat {p.k_hat}")
    p.require_inside(r)
    if p.phi(r) < -1e-12 * max(1.0, r * r):
        raise DomainError(f"phi({r}) < 0: inside the horizon")
    return -(inf.c ** 1.5) * 0.5 * r * p.tail(r)


def static_residual(p: RadialPotential, r: float) -> StaticResidual:
    """Residuals of the static vacuum equations at radius r.

    For a radial potential V = sqrt(phi) the system reduces to two
    independent scalar equations; Kottler profiles solve both exactly:

        Laplace:     sqrt(phi) * (phi'/r + phi''/2 - 3) = 0
        Ricci (rad): 3 - phi'/r - phi''/2               = 0
        Ricci (tan): 3 - phi'/r + (k_hat - phi)/r^2     = 0
    """
    p.require_inside(r)
    phi = p.phi(r)
    if phi <= 0.0:
        raise DomainError(f"phi({r}) <= 0: V is not smooth here")
    dphi, d2phi = p.dphi(r), p.d2phi(r)
    lap = math.sqrt(phi) * (dphi / r + 0.5 * d2phi - 3.0)
    ric_rad = 3.0 - dphi / r - 0.5 * d2phi
    ric_tan = 3.0 - dphi / r + (p.k_hat - phi) / (r * r)
    return StaticResidual(laplace_residual=abs(lap),
                          ricci_residual=max(abs(ric_rad), abs(ric_tan)))
