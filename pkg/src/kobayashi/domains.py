"""Domains D = {r < 0} ∩ B(c, R), the built-in registry and normal rays."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .core_complex import MixedPolynomial, as_points, laplacian

BOUNDARY_TOL = 1e-10


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    """A defining-function handle with a bounding ball.

    ``r`` maps points of shape (..., n) to reals; ``poly`` is the same
    function as a MixedPolynomial when one is available.  ``exact`` is an
    optional closed-form Kobayashi-Royden metric ``(z, X) -> float``.
    """

    name: str
    n: int
    r: Callable
    radius: float
    witness: np.ndarray
    center: np.ndarray | None = None
    poly: MixedPolynomial | None = None
    boundary_point: np.ndarray | None = None
    smoothness: int | float = np.inf
    exact: Callable | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.center is None:
            object.__setattr__(self, "center", np.zeros(self.n, dtype=complex))
        w = np.asarray(self.witness, dtype=complex)
        if not self.contains(w):
            raise DomainError(f"{self.name}: witness point {w} is not inside the domain")

    def contains(self, z) -> np.ndarray | bool:
        z = as_points(z, self.n)
        inside = (np.asarray(self.r(z)) < 0) & (np.linalg.norm(z - self.center, axis=-1) < self.radius)
        return bool(inside) if inside.ndim == 0 else inside

    @property
    def diameter_bound(self) -> float:
        return 2.0 * self.radius

    def real_gradient(self, P) -> np.ndarray:
        """Euclidean gradient of r at P, written as a vector of C^n."""
        from .taylor_model import holomorphic_gradient

        P = np.asarray(P, dtype=complex)
        g = self.poly.gradient(P) if self.poly is not None else holomorphic_gradient(self.r, P)
        return 2.0 * np.conj(g)

    def outward_normal(self, P) -> np.ndarray:
        grad = self.real_gradient(P)
        norm = np.linalg.norm(grad)
        if norm < 1e-12:
            raise DomainError("gradient of r vanishes at P")
        return grad / norm

    def in_frame(self, frame) -> Domain:
        """The same domain written in the coordinates w of a NormalFrame."""
        A, b = frame.affine()
        r0 = self.r

        def r_local(w):
            return r0(frame.to_global(w))

        poly = self.poly.compose_affine(A, b) if self.poly is not None else None
        exact = None
        if self.exact is not None:
            ex = self.exact

            def exact(w, Y):
                X = (np.asarray(Y, dtype=complex) @ np.conj(frame.U)) / frame.scale
                return ex(frame.to_global(w), X)

        return replace(
            self,
            name=f"{self.name}@frame",
            r=poly if poly is not None else r_local,
            poly=poly,
            radius=frame.scale * self.radius,
            center=frame.to_local(self.center),
            witness=frame.to_local(self.witness),
            boundary_point=np.zeros(self.n, dtype=complex),
            exact=exact,
        )


@dataclass(frozen=True)
class NormalRay:
    point: np.ndarray
    normal: np.ndarray
    deltas: np.ndarray

    def points(self) -> np.ndarray:
        return self.point[None, :] - self.deltas[:, None] * self.normal[None, :]


def contains(domain: Domain, z):
    return domain.contains(z)


def normal_ray(domain: Domain, P, deltas) -> NormalRay:
    """Sample points P - delta * n along the inward normal; all must lie in D."""
    P = np.asarray(P, dtype=complex)
    rP = float(domain.r(P))
    if abs(rP) > BOUNDARY_TOL:
        raise DomainError(f"P is not on the boundary: r(P) = {rP:.3e}")
    nhat = domain.outward_normal(P)
    deltas = np.asarray(deltas, dtype=float)
    if np.any(deltas <= 0) or np.any(np.diff(deltas) >= 0):
        raise DomainError("depths must be positive and strictly decreasing")
    ray = NormalRay(P, nhat, deltas)
    inside = np.atleast_1d(domain.contains(ray.points()))
    if not np.all(inside):
        first = deltas[np.argmin(inside)]
        raise DomainError(f"normal ray leaves the domain at delta = {first:g}")
    return ray


# -- polynomial helpers --------------------------------------------------------

def _abs2_power(n: int, i: int, m: int) -> MixedPolynomial:
    e = tuple(m * int(k == i) for k in range(n))
    return MixedPolynomial(n, {(e, e): 1.0}, real=True)


def _re_coord(n: int, i: int) -> MixedPolynomial:
    return MixedPolynomial.coordinate(n, i).real_part()


def kappa_ball_formula(z, X, center=None, rad: float = 1.0) -> float:
    """Kobayashi-Royden metric of the ball B(center, rad) in C^n."""
    z = np.asarray(z, dtype=complex)
    X = np.asarray(X, dtype=complex)
    if center is not None:
        z = z - np.asarray(center, dtype=complex)
    z = z / rad
    X = X / rad
    s = 1.0 - np.vdot(z, z).real
    if s <= 0:
        raise DomainError("point outside the ball")
    inner = np.vdot(z, X)
    return float(np.sqrt(s * np.vdot(X, X).real + abs(inner) ** 2) / s)


def ball(n: int = 2, R: float = 2.0) -> Domain:
    P = MixedPolynomial.constant(n, -1.0)
    for i in range(n):
        P = P + _abs2_power(n, i, 1)
    bp = np.zeros(n, dtype=complex)
    bp[-1] = 1.0
    return Domain(
        name=f"ball:{n}", n=n, r=P, poly=P, radius=R, witness=np.zeros(n, dtype=complex),
        boundary_point=bp, exact=kappa_ball_formula,
    )


def halfspace(n: int = 2, R: float = 2.0) -> Domain:
    P = _re_coord(n, n - 1)
    w = np.zeros(n, dtype=complex)
    w[-1] = -0.5
    return Domain(name=f"halfspace:{n}", n=n, r=P, poly=P, radius=R, witness=w,
                  boundary_point=np.zeros(n, dtype=complex))


def siegel(R: float = 2.0) -> Domain:
    P = _re_coord(2, 1) + _abs2_power(2, 0, 1)
    return Domain(name="siegel", n=2, r=P, poly=P, radius=R, witness=np.array([0, -0.5], dtype=complex),
                  boundary_point=np.zeros(2, dtype=complex))


def quadric(R: float = 2.0) -> Domain:
    """Re z2 + |z1|^2 + |z2|^2 < 0: the ball of radius 1/2 about (0, -1/2)."""
    P = _re_coord(2, 1) + _abs2_power(2, 0, 1) + _abs2_power(2, 1, 1)
    c = np.array([0, -0.5], dtype=complex)

    def exact(z, X):
        return kappa_ball_formula(z, X, center=c, rad=0.5)

    return Domain(name="quadric", n=2, r=P, poly=P, radius=R, witness=c,
                  boundary_point=np.zeros(2, dtype=complex), exact=exact)


def model_2m(ms=(2,), R: float = 2.0) -> Domain:
    """Re z_n + sum_j |z_j|^(2 m_j)."""
    n = len(ms) + 1
    P = _re_coord(n, n - 1)
    for j, m in enumerate(ms):
        P = P + _abs2_power(n, j, int(m))
    w = np.zeros(n, dtype=complex)
    w[-1] = -0.5
    label = ",".join(str(int(m)) for m in ms)
    return Domain(name=f"model-2m:{label}", n=n, r=P, poly=P, radius=R, witness=w,
                  boundary_point=np.zeros(n, dtype=complex))


# -- the oscillating subharmonic example -----------------------------------------

def oscillating_poly(m: int, l: int) -> MixedPolynomial:
    """``2m^2 z^(m+l) zbar^(m-l) + 4(m^2-l^2)|z|^(2m) + 2m^2 z^(m-l) zbar^(m+l)``.

    Subharmonic, yet its angular factor ``4m^2 cos(2 l theta) + 4(m^2 - l^2)``
    is negative for some theta.  Valid for m >= 1 and m/2 <= l < m.
    """
    if m < 1 or not (m <= 2 * l and l < m):
        raise ValueError(f"need m >= 1 and m/2 <= l < m, got m={m}, l={l}")
    terms = {
        ((m + l,), (m - l,)): 2.0 * m * m,
        ((m,), (m,)): 4.0 * (m * m - l * l),
        ((m - l,), (m + l,)): 2.0 * m * m,
    }
    return MixedPolynomial(1, terms, real=True)


def oscillating_closed_form(m: int, l: int, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    theta = np.angle(z)
    return np.abs(z) ** (2 * m) * (4 * m * m * np.cos(2 * l * theta) + 4 * (m * m - l * l))


def angular_factor(m: int, l: int, theta) -> np.ndarray:
    return 4 * m * m * np.cos(2 * l * np.asarray(theta)) + 4 * (m * m - l * l)


@dataclass(frozen=True)
class OscillationReport:
    m: int
    l: int
    min_laplacian: float
    scale: float
    min_angular_factor: float
    argmin_theta: float


def oscillation_checks(m: int, l: int, n_radii: int = 64, n_angles: int = 256) -> OscillationReport:
    """Numeric Laplacian of p over a polar grid on |z| <= 1, and the angular factor minimum."""
    p = oscillating_poly(m, l)
    radii = np.arange(1, n_radii + 1) / n_radii
    theta = 2 * np.pi * np.arange(n_angles) / n_angles
    grid = (radii[:, None] * np.exp(1j * theta[None, :])).reshape(-1, 1)
    lap = laplacian(p, grid)
    fac = angular_factor(m, l, theta)
    k = int(np.argmin(fac))
    return OscillationReport(
        m=m, l=l,
        min_laplacian=float(np.min(lap)),
        scale=float(np.max(np.abs(p(grid)))),
        min_angular_factor=float(fac[k]),
        argmin_theta=float(theta[k]),
    )


def oscillating_domain(m: int, l: int, R: float = 2.0) -> Domain:
    p = oscillating_poly(m, l)
    lifted = MixedPolynomial(2, {((a[0], 0), (b[0], 0)): c for (a, b), c in p.terms.items()}, real=True)
    P = _re_coord(2, 1) + lifted
    return Domain(name=f"remark5:{m},{l}", n=2, r=P, poly=P, radius=R,
                  witness=np.array([0, -0.5], dtype=complex),
                  boundary_point=np.zeros(2, dtype=complex), smoothness=np.inf)


# -- registry ------------------------------------------------------------------

def _ints(arg: str) -> list[int]:
    return [int(x) for x in arg.split(",") if x.strip()]


def get_domain(descriptor: str) -> Domain:
    """Resolve a registry name such as ``ball``, ``model-2m:2``, ``remark5:2,1``, ``fl:path.json``."""
    name, _, arg = descriptor.partition(":")
    name = name.strip().lower()
    if name == "ball":
        return ball(int(arg) if arg else 2)
    if name == "halfspace":
        return halfspace(int(arg) if arg else 2)
    if name == "siegel":
        return siegel()
    if name == "quadric":
        return quadric()
    if name == "model-2m":
        return model_2m(_ints(arg) if arg else (2,))
    if name in ("remark5", "oscillating"):
        m, l = _ints(arg) if arg else (2, 1)
        return oscillating_domain(m, l)
    if name == "fl":
        from .fornaess_lee import fl_domain_from_descriptor

        return fl_domain_from_descriptor(arg)
    raise DomainError(f"unknown domain {descriptor!r}")


REGISTRY_NAMES = ("ball", "halfspace", "siegel", "quadric", "model-2m", "remark5", "oscillating", "fl")
