"""Classical kicked-top map, its fixed point, and the control maps.

State convention: a phase point is a unit 3-vector ``r = (x, y, z)``,
stored as a numpy array of shape (3,) or broadcast as (..., 3).

One period of the dynamics precesses the top by pi/2 about y and then
applies the nonlinear z-axis kick, giving the stroboscopic map

    x' = z cos(k x) + y sin(k x)
    y' = -z sin(k x) + y cos(k x)
    z' = -x

which is area-preserving on the sphere. For k > 2 the map has a
nontrivial fixed point r0 = (x0, y0, -x0) with y0 = x0 cot(k x0 / 2) and
x0 the smallest positive root of

    x0^2 = sin^2(k x0 / 2) / (1 + sin^2(k x0 / 2)).

The fixed point turns unstable at k_c = sqrt(2) pi, where the stability
scalar h(k) = sin^2(k x0/2) - (k x0/2) cot(k x0/2) crosses 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "CRITICAL_KICK",
    "NoFixedPointError",
    "FixedPointData",
    "ControlParams",
    "kicked_top_step",
    "kicked_top_jacobian",
    "find_fixed_point",
    "fixed_point_x0",
    "stability_eigenvalues",
    "trivial_fixed_points",
    "control_step_spherical",
    "control_step_radial",
    "in_region",
    "critical_probability",
    "moment_threshold",
    "lyapunov_linearized",
    "contraction_from_angle",
    "angle_from_contraction",
    "tangent_basis",
    "x0_asymptotic_series",
]

CRITICAL_KICK = np.sqrt(2.0) * np.pi

_NORM_TOL = 1e-8


class NoFixedPointError(ValueError):
    """Raised when no nontrivial fixed point exists (k <= 2)."""


def _check_unit(r: np.ndarray) -> None:
    n2 = np.sum(np.asarray(r) ** 2, axis=-1)
    if np.any(np.abs(np.sqrt(n2) - 1.0) > _NORM_TOL):
        raise ValueError("phase point is not unit-norm within 1e-8")


def kicked_top_step(r: np.ndarray, k: float) -> np.ndarray:
    """Apply one period of the stroboscopic map to unit vector(s) r."""
    r = np.asarray(r, dtype=float)
    _check_unit(r)
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    c, s = np.cos(k * x), np.sin(k * x)
    return np.stack([z * c + y * s, -z * s + y * c, -x], axis=-1)


def kicked_top_jacobian(r: np.ndarray, k: float) -> np.ndarray:
    """3x3 derivative matrix of the map at r (rows: x', y', z')."""
    x, y, z = r
    c, s = np.cos(k * x), np.sin(k * x)
    return np.array(
        [
            [k * (y * c - z * s), s, c],
            [-k * (z * c + y * s), c, -s],
            [-1.0, 0.0, 0.0],
        ]
    )


def trivial_fixed_points() -> list[np.ndarray]:
    """The two fixed points (0, +-1, 0) present for every k."""
    return [np.array([0.0, 1.0, 0.0]), np.array([0.0, -1.0, 0.0])]


def _root_function(x: float, k: float) -> float:
    s = np.sin(0.5 * k * x)
    return x * x * (1.0 + s * s) - s * s


def fixed_point_x0(k: float) -> float:
    """Smallest positive root x0 of the fixed-point equation.

    The root lies below the first zero of sin(k x/2), i.e. in
    (0, 2 pi / k]; it crosses x = pi/k exactly at k = k_c. A sign-change
    scan of that interval brackets the smallest root, which brentq then
    polishes to machine precision.
    """
    if k <= 2.0:
        raise NoFixedPointError(
            f"k = {k} <= 2: only the trivial fixed points (0, +-1, 0) exist"
        )
    hi = 2.0 * np.pi / k
    xs = np.linspace(hi / 4096.0, hi, 4096)
    vals = _root_function(xs, k)
    sign_change = np.nonzero(vals[:-1] * vals[1:] <= 0.0)[0]
    if len(sign_change) == 0:
        raise NoFixedPointError(f"no root bracket found for k = {k}")
    i = sign_change[0]
    x0 = brentq(_root_function, xs[i], xs[i + 1], args=(k,), xtol=1e-15, rtol=8.9e-16)
    return float(x0)


def x0_asymptotic_series(k: float) -> float:
    """Large-k expansion of x0 through order k^-4."""
    return (
        2.0 * np.pi / k
        - 4.0 * np.pi / k**2
        + 8.0 * np.pi / k**3
        - 16.0 * np.pi * (1.0 + 2.0 * np.pi**2 / 3.0) / k**4
    )


@dataclass(frozen=True)
class FixedPointData:
    """Nontrivial fixed point of the map and its linear stability.

    ``lambda_plus`` and ``lambda_minus`` are the tangent-map eigenvalues,
    stored as complex numbers: real with |lambda_plus| > 1 in the
    unstable regime (k > k_c), a unit-modulus conjugate pair in the
    stable regime. Their product is 1 (area preservation).
    """

    k: float
    x0: float
    r0: np.ndarray
    h: float
    lambda_plus: complex
    lambda_minus: complex

    @property
    def abs_lambda(self) -> float:
        """Local instability rate |lambda(k)| (1 in the stable regime)."""
        return abs(self.lambda_plus)

    @property
    def theta0(self) -> float:
        return float(np.arccos(self.r0[2]))

    @property
    def phi0(self) -> float:
        return float(np.arctan2(self.r0[1], self.r0[0]))


def stability_eigenvalues(k: float, x0: float) -> tuple[float, complex, complex]:
    """Stability scalar h and tangent-map eigenvalues at the fixed point.

    lambda_pm = -(h +- sqrt(h^2 - 1)); for |h| < 1 the square root is
    imaginary and the pair has unit modulus (stable fixed point).
    """
    u = 0.5 * k * x0
    h = float(np.sin(u) ** 2 - u / np.tan(u))
    if abs(h) >= 1.0:
        disc = np.sqrt(h * h - 1.0)
        lam_p = complex(-(h + disc))
        lam_m = complex(-(h - disc))
        if abs(lam_m) > abs(lam_p):
            lam_p, lam_m = lam_m, lam_p
    else:
        disc = np.sqrt(1.0 - h * h)
        lam_p = complex(-h, -disc)
        lam_m = complex(-h, disc)
    return h, lam_p, lam_m


def find_fixed_point(k: float) -> FixedPointData:
    """Locate the smallest-x0 nontrivial fixed point and its stability.

    Raises NoFixedPointError for k <= 2. The mirror point -x0 solves the
    same equation; only the positive branch (which lies in the x > 0
    hemisphere) is returned.
    """
    x0 = fixed_point_x0(k)
    y0 = x0 / np.tan(0.5 * k * x0)
    r0 = np.array([x0, y0, -x0])
    h, lam_p, lam_m = stability_eigenvalues(k, x0)
    return FixedPointData(k=float(k), x0=x0, r0=r0, h=h, lambda_plus=lam_p, lambda_minus=lam_m)


# ---------------------------------------------------------------------------
# control maps
# ---------------------------------------------------------------------------

REGION_HEMISPHERE = "hemisphere_x_positive"
REGION_FULL = "full_sphere"

OUTSIDE_IDENTITY = "identity"
OUTSIDE_CHAOS = "chaos"


def contraction_from_angle(theta: float) -> float:
    """Control strength a = cos(theta/2) of the measurement channel."""
    return float(np.cos(0.5 * theta))


def angle_from_contraction(a: float) -> float:
    return float(2.0 * np.arccos(a))


@dataclass(frozen=True)
class ControlParams:
    """Contraction control toward a target point.

    a = 1 is the identity, a = 0 teleports onto the target. ``region``
    selects the domain where control may act. A control draw landing on
    a point outside the region falls through to the chaotic map by
    default (so nothing freezes at p = 1); the alternative "identity"
    convention, which preserves per-step Bernoulli semantics exactly,
    is available via ``outside_mode``. The critical point is the same
    under both.
    """

    a: float
    target: np.ndarray
    region: str = REGION_HEMISPHERE
    outside_mode: str = OUTSIDE_CHAOS
    theta0: float = field(init=False)
    phi0: float = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.a <= 1.0):
            raise ValueError(f"contraction a must be in (0, 1], got {self.a}")
        if self.region not in (REGION_HEMISPHERE, REGION_FULL):
            raise ValueError(f"unknown region {self.region!r}")
        if self.outside_mode not in (OUTSIDE_IDENTITY, OUTSIDE_CHAOS):
            raise ValueError(f"unknown outside_mode {self.outside_mode!r}")
        t = np.asarray(self.target, dtype=float)
        _check_unit(t)
        if not bool(np.all(in_region(t, self.region))):
            raise ValueError("control target must lie inside the control region")
        object.__setattr__(self, "target", t)
        object.__setattr__(self, "theta0", float(np.arccos(t[2])))
        object.__setattr__(self, "phi0", float(np.arctan2(t[1], t[0])))

    @classmethod
    def for_fixed_point(cls, fp: FixedPointData, a: float, **kw) -> "ControlParams":
        return cls(a=a, target=fp.r0, **kw)


def in_region(r: np.ndarray, region: str) -> np.ndarray:
    r = np.asarray(r)
    if region == REGION_FULL:
        return np.ones(r.shape[:-1], dtype=bool)
    return r[..., 0] > 0.0


def _wrap_angle(phi: np.ndarray) -> np.ndarray:
    """Wrap to (-pi, pi]."""
    out = np.mod(phi + np.pi, 2.0 * np.pi) - np.pi
    return np.where(out == -np.pi, np.pi, out)


def control_step_spherical(r: np.ndarray, ctrl: ControlParams) -> np.ndarray:
    """Contract the spherical angles linearly toward the target.

    theta' = a theta + (1-a) theta0; the azimuth is contracted along the
    wrapped branch nearest phi0 so the map is continuous around the
    target.
    """
    r = np.asarray(r, dtype=float)
    theta = np.arccos(np.clip(r[..., 2], -1.0, 1.0))
    phi = np.arctan2(r[..., 1], r[..., 0])
    theta_new = ctrl.a * theta + (1.0 - ctrl.a) * ctrl.theta0
    phi_new = ctrl.phi0 + ctrl.a * _wrap_angle(phi - ctrl.phi0)
    st = np.sin(theta_new)
    return np.stack([st * np.cos(phi_new), st * np.sin(phi_new), np.cos(theta_new)], axis=-1)


def control_step_radial(r: np.ndarray, ctrl: ControlParams) -> np.ndarray:
    """Pull straight toward the target and renormalize onto the sphere."""
    r = np.asarray(r, dtype=float)
    v = ctrl.a * r + (1.0 - ctrl.a) * ctrl.target
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# closed-form critical quantities
# ---------------------------------------------------------------------------

def critical_probability(k: float, a: float) -> float:
    """Critical control rate p_c = log|lambda| / (log|lambda| - log a).

    Zero whenever the fixed point is stable (|lambda| = 1, k <= k_c).
    """
    if not (0.0 < a < 1.0):
        raise ValueError(f"a must be in (0, 1), got {a}")
    log_lam = np.log(find_fixed_point(k).abs_lambda)
    if log_lam == 0.0:
        return 0.0
    return float(log_lam / (log_lam - np.log(a)))


def moment_threshold(k: float, a: float, n: float) -> float:
    """Control rate p*(n) above which the n-th displacement moment decays.

    p*(n) = (|lambda|^n - 1) / (|lambda|^n - a^n); tends to 1 as n grows.
    """
    if n < 0:
        raise ValueError("moment order must be >= 0")
    lam = find_fixed_point(k).abs_lambda
    num = lam**n - 1.0
    if num == 0.0:
        return 0.0
    return float(num / (lam**n - a**n))


def lyapunov_linearized(k: float, a: float, p: float) -> float:
    """Linear-stability Lyapunov exponent p log(a) + (1-p) log|lambda|."""
    lam = find_fixed_point(k).abs_lambda
    return float(p * np.log(a) + (1.0 - p) * np.log(lam))


def tangent_basis(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal tangent pair at unit vector n.

    Built by Gram-Schmidt from the coordinate axis least aligned with n,
    so the basis is a deterministic function of n.
    """
    n = np.asarray(n, dtype=float)
    e = np.zeros(3)
    e[int(np.argmin(np.abs(n)))] = 1.0
    t1 = e - np.dot(e, n) * n
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return t1, t2
