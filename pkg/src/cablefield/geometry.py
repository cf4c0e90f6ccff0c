"""
Cable geometry: center curves, adapted frames, lateral-surface charts.

Conventions
-----------
A cable is a tube of constant radius r around a center curve
alpha: [0,1] -> R^3 traversed at constant speed, |alpha'(eta)| = l (the
cable length).  Admissibility requires the curvature bound
|alpha''| < l^2 / r, which keeps the tube chart injective.

The frame (alpha'/l, kappa1, kappa2) is a right-handed orthonormal triple
at every sample; kappa1/kappa2 are propagated by the double-reflection
(rotation-minimizing) recurrence, so their derivatives are purely
tangential:  kappa' = -(kappa . alpha'') alpha' / l^2.

Lateral surface chart:

    Phi(eta, theta) = alpha(eta) + beta_eta(theta),
    beta_eta(theta) = r (kappa1(eta) sin(theta) + kappa2(eta) cos(theta)),

theta in (-pi, pi], sampled uniformly with periodic trapezoid weights.
The collar extension Phi_hat(eta, theta, s) = alpha(eta) + (1+s) beta
is inverted by psi_hat without a 3x3 Newton: eta is the stationary point
of (p - alpha(eta)) . alpha'(eta) (1D Newton), after which theta and s
follow from decomposing p - alpha(eta) in the frame.

The chart normal points out of the tube (into the field region); for a
straight cylinder along z it is (sin t, cos t, 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, GeometryError

_CURVATURE_SLACK = 1.0 - 1e-6   # strictness margin on the curvature bound
_ARCLEN_TOL = 1e-6              # relative tolerance on |alpha'| = l


# ---------------------------------------------------------------------------
# center curves
# ---------------------------------------------------------------------------

class CableCurve:
    """Base class: twice differentiable constant-speed curve with a radius.

    Subclasses implement alpha/d1/d2 for eta arrays, valid slightly
    beyond [0,1] so the collar maps extend past the cable ends.
    ``line`` names the transmission-line component this cable carries.
    """

    radius: float
    length: float
    line: int

    def alpha(self, eta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def d1(self, eta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def d2(self, eta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- shared helpers -----------------------------------------------------

    def nearest_parameter(self, p: np.ndarray, lo: float = -0.45, hi: float = 1.45,
                          coarse: int = 512, tol: float = 1e-12, max_iter: int = 50):
        """Stationary parameter of |p - alpha(eta)|^2 near its coarse argmin.

        Returns (eta, gap) where gap = p - alpha(eta).  Newton on
        g(eta) = (p - alpha) . alpha', clamped to a window around the
        coarse argmin; the curvature bound keeps g' negative for points
        within collar distance of the tube.
        """
        p = np.asarray(p, dtype=float)
        etas = np.linspace(lo, hi, coarse)
        pts = self.alpha(etas)
        j = int(np.argmin(((pts - p) ** 2).sum(axis=1)))
        eta = float(etas[j])
        step = (hi - lo) / (coarse - 1)
        win = (max(lo, eta - 2 * step), min(hi, eta + 2 * step))
        scale = max(1.0, self.length ** 2)
        for _ in range(max_iter):
            a = self.alpha(np.array([eta]))[0]
            t1 = self.d1(np.array([eta]))[0]
            t2 = self.d2(np.array([eta]))[0]
            w = p - a
            g = np.dot(w, t1)
            if abs(g) < tol * scale:
                return eta, w
            gp = -np.dot(t1, t1) + np.dot(w, t2)
            if gp >= -1e-12 * scale:
                break
            eta = float(np.clip(eta - g / gp, win[0], win[1]))
        raise GeometryError(f"nearest-parameter iteration failed for point {p.tolist()}")

    def nearest_parameter_batch(self, pts: np.ndarray, lo: float = -0.45, hi: float = 1.45,
                                coarse: int = 512, iters: int = 40, tol: float = 1e-12):
        """Vectorized nearest_parameter over a point cloud.

        Returns (eta, gap, converged); non-converged entries keep the best
        iterate so callers can decide whether the point matters.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        etas = np.linspace(lo, hi, coarse)
        curve_pts = self.alpha(etas)
        d2 = ((pts[:, None, :] - curve_pts[None, :, :]) ** 2).sum(axis=2)
        eta = etas[np.argmin(d2, axis=1)]
        step = (hi - lo) / (coarse - 1)
        lo_i = np.maximum(lo, eta - 2 * step)
        hi_i = np.minimum(hi, eta + 2 * step)
        scale = max(1.0, self.length ** 2)
        g = np.full(pts.shape[0], np.inf)
        w = pts - self.alpha(eta)
        for _ in range(iters):
            a = self.alpha(eta)
            t1 = self.d1(eta)
            t2 = self.d2(eta)
            w = pts - a
            g = (w * t1).sum(axis=1)
            gp = -(t1 * t1).sum(axis=1) + (w * t2).sum(axis=1)
            active = (np.abs(g) > tol * scale) & (gp < -1e-12 * scale)
            if not active.any():
                break
            eta = np.where(active, np.clip(eta - g / np.where(gp < 0, gp, -1.0), lo_i, hi_i), eta)
        return eta, pts - self.alpha(eta), np.abs(g) <= 1e-9 * scale


@dataclass
class StraightSegment(CableCurve):
    p0: np.ndarray
    direction: np.ndarray
    length: float
    radius: float
    line: int = 0

    def __post_init__(self):
        self.p0 = np.asarray(self.p0, dtype=float)
        d = np.asarray(self.direction, dtype=float)
        nrm = np.linalg.norm(d)
        if nrm < 1e-14:
            raise GeometryError("degenerate direction vector")
        self.direction = d / nrm

    def alpha(self, eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        return self.p0 + np.outer(eta * self.length, self.direction)

    def d1(self, eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        return np.broadcast_to(self.length * self.direction, (eta.size, 3)).copy()

    def d2(self, eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        return np.zeros((eta.size, 3))


@dataclass
class CircularArc(CableCurve):
    """Arc of a circle of radius rho: alpha = c + rho(cos(phi) u + sin(phi) v)."""

    center: np.ndarray
    u: np.ndarray
    v: np.ndarray
    rho: float
    phi0: float
    phi1: float
    radius: float
    line: int = 0

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        u = np.asarray(self.u, dtype=float)
        u = u / np.linalg.norm(u)
        v = np.asarray(self.v, dtype=float)
        v = v - np.dot(v, u) * u
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            raise GeometryError("arc plane vectors are collinear")
        self.u, self.v = u, v / nv
        self.length = self.rho * abs(self.phi1 - self.phi0)

    def _phi(self, eta):
        return self.phi0 + eta * (self.phi1 - self.phi0)

    def alpha(self, eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        ph = self._phi(eta)
        return self.center + self.rho * (np.outer(np.cos(ph), self.u) + np.outer(np.sin(ph), self.v))

    def d1(self, eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        ph = self._phi(eta)
        dphi = self.phi1 - self.phi0
        return self.rho * dphi * (np.outer(-np.sin(ph), self.u) + np.outer(np.cos(ph), self.v))

    def d2(self, eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        ph = self._phi(eta)
        dphi = self.phi1 - self.phi0
        return self.rho * dphi ** 2 * (np.outer(-np.cos(ph), self.u) + np.outer(-np.sin(ph), self.v))


@dataclass
class Helix(CableCurve):
    """Helix around an axis line: radius a, axial advance b per radian."""

    base: np.ndarray
    axis: np.ndarray
    a: float
    b: float
    turns: float
    radius: float
    phase: float = 0.0
    line: int = 0

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float)
        ax = np.asarray(self.axis, dtype=float)
        ax = ax / np.linalg.norm(ax)
        self.axis = ax
        ref = np.eye(3)[int(np.argmin(np.abs(ax)))]
        u = ref - np.dot(ref, ax) * ax
        self._u = u / np.linalg.norm(u)
        self._v = np.cross(ax, self._u)
        self._omega = 2.0 * np.pi * self.turns
        self.length = self._omega * np.hypot(self.a, self.b)

    def _ang(self, eta):
        return self.phase + self._omega * eta

    def alpha(self, eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        ph = self._ang(eta)
        radial = np.outer(np.cos(ph), self._u) + np.outer(np.sin(ph), self._v)
        return self.base + self.a * radial + np.outer(self.b * self._omega * eta, self.axis)

    def d1(self, eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        ph = self._ang(eta)
        tang = np.outer(-np.sin(ph), self._u) + np.outer(np.cos(ph), self._v)
        return self._omega * (self.a * tang + np.outer(np.ones(eta.size) * self.b, self.axis))

    def d2(self, eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        ph = self._ang(eta)
        radial = np.outer(np.cos(ph), self._u) + np.outer(np.sin(ph), self._v)
        return -self._omega ** 2 * self.a * radial


class SplineCurve(CableCurve):
    """C^2 cubic spline through control points, reparameterized to
    constant speed on a dense equal-arclength grid."""

    def __init__(self, points: np.ndarray, radius: float, line: int = 0,
                 n_resample: int = 2049):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 4:
            raise GeometryError("spline needs at least 4 control points of shape (m,3)")
        self.radius = float(radius)
        self.line = line
        # chord-length parameterization, then arclength inversion
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if seg.min() <= 1e-14:
            raise GeometryError("degenerate tangent: repeated control points")
        chord = np.r_[0.0, np.cumsum(seg)]
        raw = CubicSpline(chord / chord[-1], pts, axis=0)
        tt = np.linspace(0.0, 1.0, 16 * n_resample)
        speed = np.linalg.norm(raw(tt, 1), axis=1)
        if speed.min() < 1e-12 * chord[-1]:
            raise GeometryError("degenerate tangent along spline")
        s = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(tt))])
        self.length = float(s[-1])
        t_of_s = np.interp(np.linspace(0.0, self.length, n_resample), s, tt)
        # a couple of Newton sweeps sharpen the equal-arclength nodes
        targets = np.linspace(0.0, self.length, n_resample)
        for _ in range(3):
            cur = np.interp(t_of_s, tt, s)
            t_of_s = t_of_s - (cur - targets) / np.linalg.norm(raw(t_of_s, 1), axis=1)
            t_of_s = np.clip(t_of_s, 0.0, 1.0)
        self._spline = CubicSpline(np.linspace(0.0, 1.0, n_resample), raw(t_of_s),
                                   axis=0, extrapolate=True)

    def alpha(self, eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        return self._spline(eta)

    def d1(self, eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        return self._spline(eta, 1)

    def d2(self, eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        return self._spline(eta, 2)


def validate_curve(curve: CableCurve, n_samples: int = 512) -> dict:
    """Arclength-constancy and curvature-bound report for one cable."""
    eta = np.linspace(0.0, 1.0, n_samples)
    speed = np.linalg.norm(curve.d1(eta), axis=1)
    acc = np.linalg.norm(curve.d2(eta), axis=1)
    l = curve.length
    arc_err = float(np.abs(speed - l).max() / l)
    curv_bound = _CURVATURE_SLACK * l * l / curve.radius
    curv_margin = float((curv_bound - acc).min())
    closed = bool(np.linalg.norm(curve.alpha(np.array([0.0]))[0]
                                 - curve.alpha(np.array([1.0]))[0]) < 2 * curve.radius)
    return {
        "arclength_ok": arc_err <= _ARCLEN_TOL,
        "arclength_rel_err": arc_err,
        "curvature_ok": curv_margin > 0.0,
        "curvature_margin": curv_margin,
        "open_curve_ok": not closed,
    }


# ---------------------------------------------------------------------------
# adapted frames (rotation minimizing)
# ---------------------------------------------------------------------------

@dataclass
class AdaptedFrame:
    """Samples of the twist-free orthonormal frame along a cable curve."""

    curve: CableCurve
    eta: np.ndarray          # (m,) includes any collar extension
    kappa1: np.ndarray       # (m,3)
    kappa2: np.ndarray       # (m,3)

    def tangent(self, eta):
        d = self.curve.d1(np.atleast_1d(eta))
        return d / np.linalg.norm(d, axis=1, keepdims=True)

    def at(self, eta):
        """Frame (t, kappa1, kappa2) at query parameters.

        Linear interpolation of the stored samples followed by projection
        back onto the orthonormal constraint; exact at sample points.
        """
        eta_q = np.atleast_1d(np.asarray(eta, dtype=float))
        t = self.tangent(eta_q)
        k1 = np.empty((eta_q.size, 3))
        for c in range(3):
            k1[:, c] = np.interp(eta_q, self.eta, self.kappa1[:, c])
        k1 -= (k1 * t).sum(axis=1, keepdims=True) * t
        nrm = np.linalg.norm(k1, axis=1, keepdims=True)
        if nrm.min() < 1e-8:
            raise GeometryError("frame interpolation degenerated")
        k1 /= nrm
        k2 = np.cross(t, k1)
        return t, k1, k2

    def frame_derivatives(self, eta):
        """d/deta of kappa1, kappa2: purely tangential for an RMF."""
        eta_q = np.atleast_1d(np.asarray(eta, dtype=float))
        _, k1, k2 = self.at(eta_q)
        d1 = self.curve.d1(eta_q)
        d2 = self.curve.d2(eta_q)
        l2 = (d1 * d1).sum(axis=1, keepdims=True)
        dk1 = -((k1 * d2).sum(axis=1, keepdims=True)) * d1 / l2
        dk2 = -((k2 * d2).sum(axis=1, keepdims=True)) * d1 / l2
        return dk1, dk2


def _double_reflection(points, tangents, r0):
    m = points.shape[0]
    normals = np.empty((m, 3))
    normals[0] = r0
    for i in range(m - 1):
        v1 = points[i + 1] - points[i]
        c1 = np.dot(v1, v1)
        if c1 < 1e-30:
            normals[i + 1] = normals[i]
            continue
        rl = normals[i] - (2.0 / c1) * np.dot(v1, normals[i]) * v1
        tl = tangents[i] - (2.0 / c1) * np.dot(v1, tangents[i]) * v1
        v2 = tangents[i + 1] - tl
        c2 = np.dot(v2, v2)
        if c2 < 1e-30:
            normals[i + 1] = rl
        else:
            normals[i + 1] = rl - (2.0 / c2) * np.dot(v2, rl) * v2
    return normals


def build_frame(curve: CableCurve, n_eta=129, eta_pad: float = 0.45,
                max_step: float = 1.0 / 1024.0) -> AdaptedFrame:
    """Rotation-minimizing frame via the double-reflection recurrence.

    ``n_eta`` may be a sample count (uniform on [0,1]) or an explicit array
    of parameters; propagation runs on a refinement no coarser than
    ``max_step`` extended by ``eta_pad`` past both ends for the collar.
    """
    rep = validate_curve(curve)
    if not (rep["arclength_ok"] and rep["curvature_ok"]):
        raise GeometryError(f"curve fails admissibility: {rep}")
    if not rep["open_curve_ok"]:
        raise GeometryError("closed cables are not supported")

    if np.isscalar(n_eta):
        requested = np.linspace(0.0, 1.0, int(n_eta))
    else:
        requested = np.sort(np.asarray(n_eta, dtype=float))
    lo = min(-eta_pad, requested[0])
    hi = max(1.0 + eta_pad, requested[-1])
    n_fine = int(np.ceil((hi - lo) / max_step)) + 1
    grid = np.unique(np.concatenate([np.linspace(lo, hi, n_fine), requested]))

    pts = curve.alpha(grid)
    d1 = curve.d1(grid)
    speeds = np.linalg.norm(d1, axis=1)
    if speeds.min() < 1e-12 * curve.length:
        raise GeometryError("degenerate tangent along curve")
    tangents = d1 / speeds[:, None]

    # deterministic seed normal: coordinate axis most orthogonal to t(lo)
    t0 = tangents[0]
    axis = np.eye(3)[int(np.argmin(np.abs(t0)))]
    r0 = axis - np.dot(axis, t0) * t0
    r0 /= np.linalg.norm(r0)

    k1 = _double_reflection(pts, tangents, r0)
    k1 -= (k1 * tangents).sum(axis=1, keepdims=True) * tangents
    k1 /= np.linalg.norm(k1, axis=1, keepdims=True)
    k2 = np.cross(tangents, k1)
    return AdaptedFrame(curve=curve, eta=grid, kappa1=k1, kappa2=k2)


# ---------------------------------------------------------------------------
# lateral-surface chart with collar
# ---------------------------------------------------------------------------

def smooth_bump(s, eps: float):
    """C^2 cutoff in the collar coordinate: 1 for |s|<=eps/3, 0 for |s|>=2*eps/3."""
    s = np.abs(np.asarray(s, dtype=float))
    x = (s - eps / 3.0) / (eps / 3.0)
    x = np.clip(x, 0.0, 1.0)
    return 1.0 - (10.0 * x ** 3 - 15.0 * x ** 4 + 6.0 * x ** 5)


@dataclass
class TubeChart:
    """Sampled lateral-surface parameterization of one cable tube."""

    curve: CableCurve
    frame: AdaptedFrame
    eta: np.ndarray          # (n_eta,) cell-midpoint samples in (0,1)
    theta: np.ndarray        # (n_theta,) uniform in (-pi, pi]
    points: np.ndarray       # (n_eta, n_theta, 3)
    jac_eta: np.ndarray      # (n_eta, n_theta, 3)
    jac_theta: np.ndarray    # (n_eta, n_theta, 3)
    normal: np.ndarray       # (n_eta, n_theta, 3), outward from the tube
    weights: np.ndarray      # (n_eta, n_theta) surface quadrature
    collar_halfwidth: float = 0.3

    @property
    def n_eta(self):
        return self.eta.size

    @property
    def n_theta(self):
        return self.theta.size

    @property
    def n_quad(self):
        return self.eta.size * self.theta.size

    def quad_points(self):
        return self.points.reshape(-1, 3)

    def quad_weights(self):
        return self.weights.reshape(-1)

    # -- collar maps --------------------------------------------------------

    def phi_hat(self, eta, theta, s):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        s = np.atleast_1d(np.asarray(s, dtype=float))
        _, k1, k2 = self.frame.at(eta)
        beta = self.curve.radius * (k1 * np.sin(theta)[:, None] + k2 * np.cos(theta)[:, None])
        return self.curve.alpha(eta) + (1.0 + s)[:, None] * beta

    def psi_hat(self, p):
        """Collar coordinates (eta, theta, s) of points near the lateral surface."""
        p = np.atleast_2d(np.asarray(p, dtype=float))
        eta, w, converged = self.curve.nearest_parameter_batch(p)
        if not converged.all():
            bad = p[~converged][0]
            raise GeometryError(f"collar inversion failed for point {bad.tolist()}")
        _, k1, k2 = self.frame.at(eta)
        c1 = (w * k1).sum(axis=1)
        c2 = (w * k2).sum(axis=1)
        rad = np.hypot(c1, c2)
        out = np.column_stack([eta, np.arctan2(c1, c2), rad / self.curve.radius - 1.0])
        return out if out.shape[0] > 1 else out[0]

    def psi(self, p):
        """Surface inverse (eta, theta) for points on the lateral surface."""
        c = np.atleast_2d(self.psi_hat(p))
        return c[:, :2] if c.shape[0] > 1 else c[0, :2]

    def psi1(self, p):
        c = np.atleast_2d(self.psi_hat(p))
        return c[:, 0] if c.shape[0] > 1 else float(c[0, 0])

    def grad_eta(self, p):
        """Gradient of the collar eta-coordinate at points p: row 1 of
        (grad Phi_hat)^-1, used by the chain rule when lifting voltages."""
        p = np.atleast_2d(np.asarray(p, dtype=float))
        coords = np.atleast_2d(self.psi_hat(p))
        r = self.curve.radius
        eta, th, s = coords[:, 0], coords[:, 1], coords[:, 2]
        _, k1, k2 = self.frame.at(eta)
        dk1, dk2 = self.frame.frame_derivatives(eta)
        sin, cos = np.sin(th)[:, None], np.cos(th)[:, None]
        beta = r * (sin * k1 + cos * k2)
        dbeta = r * (sin * dk1 + cos * dk2)
        J = np.stack([
            self.curve.d1(eta) + (1.0 + s)[:, None] * dbeta,
            (1.0 + s)[:, None] * r * (cos * k1 - sin * k2),
            beta,
        ], axis=2)
        out = np.linalg.inv(J)[:, 0, :]
        return out if out.shape[0] > 1 else out[0]

    def chi(self, s, eta=None):
        """Collar cutoff: radial C^2 bump, tapered axially past the ends so
        the lift stays supported inside the extended chart domain."""
        out = smooth_bump(s, self.collar_halfwidth)
        if eta is not None:
            eta = np.asarray(eta, dtype=float)
            overshoot = np.maximum(0.0, np.maximum(eta - 1.0, -eta))
            out = out * smooth_bump(overshoot, self.collar_halfwidth)
        return out

    def in_collar(self, coords, eta_pad=None):
        """Mask: collar coordinates fall inside the extended chart domain."""
        coords = np.atleast_2d(coords)
        eps = self.collar_halfwidth
        pad = eps if eta_pad is None else eta_pad
        return (np.abs(coords[:, 2]) < eps) & (coords[:, 0] > -pad) & (coords[:, 0] < 1.0 + pad)


def build_chart(curve: CableCurve, frame: AdaptedFrame, n_eta: int, n_theta: int,
                collar_halfwidth: float = 0.3) -> TubeChart:
    """Sample the lateral surface on cell-midpoint eta and uniform theta."""
    if frame.curve is not curve:
        raise GeometryError("frame was built from a different curve")
    eta = (np.arange(n_eta) + 0.5) / n_eta
    theta = -np.pi + 2.0 * np.pi * np.arange(n_theta) / n_theta
    d_eta, d_theta = 1.0 / n_eta, 2.0 * np.pi / n_theta

    t, k1, k2 = frame.at(eta)
    dk1, dk2 = frame.frame_derivatives(eta)
    a = curve.alpha(eta)
    da = curve.d1(eta)
    r = curve.radius

    sin = np.sin(theta)[None, :, None]
    cos = np.cos(theta)[None, :, None]
    k1e = k1[:, None, :]
    k2e = k2[:, None, :]
    beta = r * (k1e * sin + k2e * cos)
    points = a[:, None, :] + beta
    jac_eta = da[:, None, :] + r * (dk1[:, None, :] * sin + dk2[:, None, :] * cos)
    jac_theta = r * (k1e * cos - k2e * sin)

    cross = np.cross(jac_eta, jac_theta)
    area = np.linalg.norm(cross, axis=2)
    if area.min() <= 0:
        raise GeometryError("degenerate surface Jacobian")
    normal = cross / area[:, :, None]
    # orient out of the tube
    flip = ((points - a[:, None, :]) * normal).sum(axis=2) < 0
    if flip.any():
        normal[flip] *= -1.0

    return TubeChart(
        curve=curve, frame=frame, eta=eta, theta=theta,
        points=points, jac_eta=jac_eta, jac_theta=jac_theta,
        normal=normal, weights=area * d_eta * d_theta,
        collar_halfwidth=collar_halfwidth,
    )


# ---------------------------------------------------------------------------
# full geometry: box + cables
# ---------------------------------------------------------------------------

@dataclass
class GeometrySpec:
    """Computational box with a list of cable tubes.

    Immutable after construction; charts for point classification are
    built lazily and cached.
    """

    box: np.ndarray                  # (3,2) axis-aligned bounds, meters
    cables: Sequence[CableCurve]
    collar_halfwidth: float = 0.3

    def __post_init__(self):
        self.box = np.asarray(self.box, dtype=float).reshape(3, 2)
        if not np.all(self.box[:, 1] > self.box[:, 0]):
            raise ConfigError("box bounds must satisfy lo < hi on every axis")
        if not (0.0 < self.collar_halfwidth < 1.0):
            raise ConfigError("collar_halfwidth must lie in (0, 1)")
        self._charts = {}

    def chart(self, i: int, n_eta: int = 64, n_theta: int = 32) -> TubeChart:
        key = (i, n_eta, n_theta)
        if key not in self._charts:
            curve = self.cables[i]
            frame = build_frame(curve, n_eta=(np.arange(n_eta) + 0.5) / n_eta)
            self._charts[key] = build_chart(curve, frame, n_eta, n_theta,
                                            collar_halfwidth=self.collar_halfwidth)
        return self._charts[key]


@dataclass
class GeometryReport:
    cables: list
    containment_ok: bool
    disjoint_ok: bool
    min_pair_clearance: float
    passed: bool


def validate_geometry(spec: GeometrySpec, n_samples: int = 512) -> GeometryReport:
    """Evaluate all admissibility conditions on a sampling grid."""
    if not isinstance(spec, GeometrySpec):
        raise ConfigError("validate_geometry expects a GeometrySpec")
    eta = np.linspace(0.0, 1.0, n_samples)
    eps = spec.collar_halfwidth
    # collar cutoff support reaches 2*eps/3 past the cable ends in eta
    eta_ext = np.linspace(-2.0 * eps / 3.0, 1.0 + 2.0 * eps / 3.0, n_samples)

    cable_reports = []
    contain_ok = True
    for c in spec.cables:
        rep = validate_curve(c, n_samples)
        if rep["arclength_ok"] and rep["curvature_ok"] and rep["open_curve_ok"]:
            # sample the outer collar shell itself (a disk bundle, not a
            # ball sweep, so cable ends need no radial end clearance)
            frame = build_frame(c, n_eta=eta_ext)
            theta = np.linspace(-np.pi, np.pi, 33)[:-1]
            _, k1, k2 = frame.at(eta_ext)
            shell = (c.alpha(eta_ext)[:, None, :]
                     + (1.0 + eps) * c.radius
                     * (k1[:, None, :] * np.sin(theta)[None, :, None]
                        + k2[:, None, :] * np.cos(theta)[None, :, None])).reshape(-1, 3)
            lo_gap = float((shell - spec.box[:, 0]).min())
            hi_gap = float((spec.box[:, 1] - shell).min())
            rep["containment_margin"] = min(lo_gap, hi_gap)
        else:
            rep["containment_margin"] = float("-inf")
        rep["containment_ok"] = rep["containment_margin"] > 0.0
        contain_ok = contain_ok and rep["containment_ok"]
        cable_reports.append(rep)

    disjoint_ok = True
    clearance = np.inf
    for i in range(len(spec.cables)):
        for j in range(i + 1, len(spec.cables)):
            ci, cj = spec.cables[i], spec.cables[j]
            d = np.linalg.norm(ci.alpha(eta)[:, None, :] - cj.alpha(eta)[None, :, :], axis=2)
            gap = float(d.min() - (1.0 + eps) * (ci.radius + cj.radius))
            clearance = min(clearance, gap)
            disjoint_ok = disjoint_ok and gap > 0.0

    per_cable_ok = all(r["arclength_ok"] and r["curvature_ok"] and r["open_curve_ok"]
                       and r["containment_ok"] for r in cable_reports)
    return GeometryReport(
        cables=cable_reports,
        containment_ok=contain_ok,
        disjoint_ok=disjoint_ok,
        min_pair_clearance=float(clearance),
        passed=per_cable_ok and disjoint_ok,
    )


def classify_point(spec: GeometrySpec, p) -> tuple:
    """Region tag of a point: ('exterior',), ('inside_tube', i),
    ('collar', i, (eta, theta, s)) or ('field',).

    Points with collar radius |s| < collar_halfwidth and eta inside the
    extended chart window are collar points; deeper points with
    eta in [0,1] belong to the tube interior.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p < spec.box[:, 0]) or np.any(p > spec.box[:, 1]):
        return ("exterior",)
    eps = spec.collar_halfwidth
    for i, c in enumerate(spec.cables):
        # cheap reject before running the local inversion
        probe = c.alpha(np.linspace(-0.1, 1.1, 64))
        if np.linalg.norm(probe - p, axis=1).min() > 4.0 * c.radius + c.length * 0.02:
            continue
        chart = spec.chart(i)
        eta, th, s = np.atleast_2d(chart.psi_hat(p))[0]
        if 0.0 <= eta <= 1.0 and s < 0.0:
            return ("inside_tube", i)
        if 0.0 <= s < eps and -eps <= eta <= 1.0 + eps:
            return ("collar", i, (float(eta), float(th), float(s)))
    return ("field",)


def is_inside_tube(spec: GeometrySpec, pts: np.ndarray, i: int) -> np.ndarray:
    """Vectorized tube-interior test used when building field masks."""
    c = spec.cables[i]
    pts = np.atleast_2d(pts)
    out = np.zeros(pts.shape[0], dtype=bool)
    probe_eta = np.linspace(-0.1, 1.1, 256)
    probe = c.alpha(probe_eta)
    d2 = ((pts[:, None, :] - probe[None, :, :]) ** 2).sum(axis=2)
    near = np.nonzero(d2.min(axis=1) < (2.5 * c.radius) ** 2)[0]
    if near.size == 0:
        return out
    eta, gap, _ = c.nearest_parameter_batch(pts[near])
    rad = np.linalg.norm(gap, axis=1)
    out[near] = (eta >= 0.0) & (eta <= 1.0) & (rad < c.radius)
    return out
