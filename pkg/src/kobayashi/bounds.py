"""Lower and upper bounds for the Kobayashi-Royden metric.

Exact formulas cover the half-plane, the disc and the ball.  Upper bounds
come from explicit analytic discs whose boundary circle is sampled inside
the domain; for a plurisubharmonic defining function r, ``r o f`` is
subharmonic, so boundary samples control the whole disc.  Lower bounds along
the inward normal push any competing disc through the holomorphic part of
the Taylor model and compare with the sharp Schwarz bound for maps into a
half-plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .core_complex import MixedPolynomial, sample_ball
from .domains import Domain
from .taylor_model import TaylorModel, build_taylor_model

DEFAULT_DEGREE = 6
DEFAULT_SAMPLES = 256
MARGIN_REL = 1e-8
KAPPA_GEOM = 0.1
DELTA_MAX_FRACTION = 0.1


class BoundError(ValueError):
    pass


class HypothesisError(BoundError):
    pass


@dataclass(frozen=True)
class AnalyticDisc:
    """Polynomial disc ``f(lambda) = sum_j coeffs[j] lambda^j`` with ``alpha f'(0) = X``."""

    coeffs: np.ndarray
    alpha: float
    margin: float = 0.0
    n_samples: int = 0
    verified_samples: int = 0

    @property
    def n(self) -> int:
        return self.coeffs.shape[1]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def base(self) -> np.ndarray:
        return self.coeffs[0]

    @property
    def velocity(self) -> np.ndarray:
        return self.coeffs[1] if self.degree >= 1 else np.zeros(self.n, dtype=complex)

    def __call__(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=complex)
        powers = lam[..., None] ** np.arange(self.degree + 1)
        return powers @ self.coeffs

    def derivative(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=complex)
        k = np.arange(1, self.degree + 1)
        powers = k * lam[..., None] ** (k - 1)
        return powers @ self.coeffs[1:]

    def rescaled(self, s: float) -> AnalyticDisc:
        """The disc ``lambda -> f(s lambda)``."""
        c = self.coeffs * (s ** np.arange(self.degree + 1))[:, None]
        alpha = self.alpha / s if s > 0 else np.inf
        return AnalyticDisc(c, alpha, self.margin, self.n_samples, self.verified_samples)


@dataclass
class Bound:
    value: float
    kind: str
    provenance: dict = field(default_factory=dict)
    disc: AnalyticDisc | None = None

    def __post_init__(self):
        if self.kind not in ("lower", "upper", "exact"):
            raise ValueError(f"unknown bound kind {self.kind!r}")
        if not self.value >= 0:
            raise ValueError(f"bound value must be non-negative, got {self.value}")


# -- closed forms --------------------------------------------------------------

def kappa_halfplane(c: float, z: complex, X: complex) -> Bound:
    """Metric of ``{Re lambda < c}``: ``|X| / (2 (c - Re z))``."""
    gap = c - complex(z).real
    if not gap > 0:
        raise BoundError("point is not inside the half-plane")
    return Bound(abs(X) / (2.0 * gap), "exact", {"formula": "halfplane", "c": c})


def kappa_unit_disc(lam: complex, X: complex) -> Bound:
    s = 1.0 - abs(lam) ** 2
    if not s > 0:
        raise BoundError("point is not inside the unit disc")
    return Bound(abs(X) / s, "exact", {"formula": "unit_disc"})


def kappa_ball(n: int, X, z=None) -> Bound:
    """Metric of the unit ball of C^n; at the centre it is the Euclidean norm."""
    X = np.asarray(X, dtype=complex)
    if X.shape != (n,):
        raise BoundError(f"direction must have shape ({n},)")
    z = np.zeros(n, dtype=complex) if z is None else np.asarray(z, dtype=complex)
    s = 1.0 - np.vdot(z, z).real
    if not s > 0:
        raise BoundError("point is not inside the ball")
    val = np.sqrt(s * np.vdot(X, X).real + abs(np.vdot(z, X)) ** 2) / s
    return Bound(float(val), "exact", {"formula": "ball"})


def schwarz_halfplane_bound(c: float, g0: complex) -> float:
    """Largest ``|g'(0)|`` over holomorphic g from the disc into ``{Re < c}`` with ``g(0) = g0``."""
    gap = c - complex(g0).real
    if not gap > 0:
        raise BoundError("g0 is not inside the half-plane")
    return 2.0 * gap


def mobius_extremal(c: float, g0: complex):
    """The map attaining the half-plane Schwarz bound."""
    g0 = complex(g0)
    gap = c - g0.real

    def g(lam):
        lam = np.asarray(lam, dtype=complex)
        return c - gap * (1 + lam) / (1 - lam) + 1j * g0.imag

    return g


# -- upper bounds from explicit discs ------------------------------------------------

def _canonical_direction(X: np.ndarray) -> tuple[np.ndarray, complex]:
    """Unit vector u and phase p with ``X / |X| = p u``; u depends only on the complex line of X."""
    u = X / np.linalg.norm(X)
    k = int(np.argmax(np.abs(u) > 0.5 * np.max(np.abs(u))))
    phase = u[k] / abs(u[k])
    return u / phase, phase


def _circle(m: int, offset: float = 0.0) -> np.ndarray:
    return np.exp(2j * np.pi * (np.arange(m) + offset) / m)


def _disc_inside(domain: Domain, pts: np.ndarray, margin: float = 0.0) -> bool:
    r = np.asarray(domain.r(pts), dtype=float)
    d = np.linalg.norm(pts - domain.center, axis=-1)
    return bool(np.all(r < -margin) and np.all(d < domain.radius))


def _check_base(domain: Domain, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.shape != (domain.n,):
        raise BoundError(f"point must have shape ({domain.n},)")
    if not domain.contains(z):
        raise BoundError("base point is not inside the domain")
    return z


def _linear_radius(domain: Domain, z, u, m: int, rel_tol: float = 1e-12) -> float:
    circle = _circle(m)
    lo = 0.0
    hi = 2.0 * domain.radius + np.linalg.norm(z - domain.center)
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if _disc_inside(domain, z + mid * circle[:, None] * u[None, :]):
            lo = mid
        else:
            hi = mid
    return lo


def linear_disc_upper(domain: Domain, z, X, n_samples: int = DEFAULT_SAMPLES) -> Bound:
    """``|X| / rho`` for the largest straight disc ``z + rho lambda X/|X|`` found inside D."""
    z = _check_base(domain, z)
    X = np.asarray(X, dtype=complex)
    norm = float(np.linalg.norm(X))
    if norm == 0:
        disc = AnalyticDisc(z[None, :].copy(), 0.0)
        return Bound(0.0, "upper", {"disc": "constant"}, disc)
    u, phase = _canonical_direction(X)
    rho = _linear_radius(domain, z, u, n_samples)
    if rho <= 0:
        raise BoundError("no straight disc fits at this point")
    coeffs = np.stack([z, rho * phase * u])
    disc = AnalyticDisc(coeffs, norm / rho, 0.0, n_samples, n_samples)
    return Bound(norm / rho, "upper", {"disc": "linear", "radius": rho}, disc)


VERIFY_OVERSAMPLE = 16


def _circle_slack(values: np.ndarray) -> float:
    """Bound on how far a smooth periodic sample can exceed its samples between nodes.

    Between neighbours the overshoot is at most ``h^2 max|g''| / 8``; the second
    difference estimates ``h^2 g''``, and the factor 2 is a safety margin.
    """
    second = np.roll(values, -1) - 2 * values + np.roll(values, 1)
    return 0.25 * float(np.max(np.abs(second)))


def _verified_inside(domain: Domain, disc: AnalyticDisc, m: int, margin: float) -> bool:
    pts = disc(_circle(m))
    r = np.asarray(domain.r(pts), dtype=float)
    gap = domain.radius - np.linalg.norm(pts - domain.center, axis=-1)
    return bool(np.max(r) + _circle_slack(r) <= -margin and np.min(gap) - _circle_slack(gap) > 0)


def _repair(domain: Domain, disc: AnalyticDisc, m: int, margin: float) -> AnalyticDisc | None:
    """Shrink ``f(s lambda)`` until a circle ``VERIFY_OVERSAMPLE`` times denser passes with slack."""
    dense = VERIFY_OVERSAMPLE * m
    if _verified_inside(domain, disc, dense, margin):
        return AnalyticDisc(disc.coeffs, disc.alpha, margin, m, dense)
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _verified_inside(domain, disc.rescaled(mid), dense, margin):
            lo = mid
        else:
            hi = mid
    if lo <= 0:
        return None
    fixed = disc.rescaled(lo)
    return AnalyticDisc(fixed.coeffs, fixed.alpha, margin, m, dense)


def disc_search_upper(
    domain: Domain,
    z,
    X,
    degree: int = DEFAULT_DEGREE,
    n_samples: int = DEFAULT_SAMPLES,
    budget: int = 2000,
    restarts: int = 3,
    seed: int = 0,
    warm_start: AnalyticDisc | None = None,
) -> Bound:
    """Best polynomial disc found by constrained derivative-free search.

    Unknowns are the derivative length t and the higher coefficients; the
    objective maximizes t subject to ``r(f(lambda_i)) <= -margin`` and the
    bounding-ball constraint at the sampled roots of unity.  Every candidate
    is re-checked on a much denser circle with a curvature slack and shrunk if needed, so the
    returned value is always backed by a verified disc.
    """
    z = _check_base(domain, z)
    X = np.asarray(X, dtype=complex)
    norm = float(np.linalg.norm(X))
    lin = linear_disc_upper(domain, z, X, n_samples)
    if norm == 0:
        return Bound(0.0, "upper", {"disc": "constant"}, lin.disc)
    u, phase = _canonical_direction(X)
    rho0 = lin.provenance["radius"]
    n = domain.n
    scale = max(abs(float(domain.r(z))), 1e-300)
    margin = MARGIN_REL * scale
    lam = _circle(n_samples)
    powers = lam[None, :] ** np.arange(2, degree + 1)[:, None]

    def unpack(x):
        c = np.zeros((degree + 1, n), dtype=complex)
        c[0] = z
        c[1] = rho0 * x[0] * u
        k = (degree - 1) * n
        c[2:] = rho0 * (x[1:1 + k] + 1j * x[1 + k:]).reshape(degree - 1, n)
        return c

    def boundary(x):
        c = unpack(x)
        return z[None, :] + lam[:, None] * c[1][None, :] + powers.T @ c[2:]

    def constraints(x):
        pts = boundary(x)
        rv = np.asarray(domain.r(pts), dtype=float)
        ball = domain.radius - np.linalg.norm(pts - domain.center, axis=-1)
        return np.concatenate([(-rv - margin) / scale, ball])

    rng = np.random.default_rng(seed)
    nvar = 1 + 2 * (degree - 1) * n
    starts = []
    x0 = np.zeros(nvar)
    x0[0] = 1.0
    starts.append(x0)
    for _ in range(max(restarts - 1, 0)):
        x = np.zeros(nvar)
        x[0] = 0.9
        x[1:] = 0.05 * rng.standard_normal(nvar - 1)
        starts.append(x)

    candidates = [(lin.value, lin.disc, "linear")]
    if warm_start is not None:
        ws = _repair(domain, warm_start, n_samples, margin)
        if ws is not None and np.allclose(ws.base, z) and ws.alpha < np.inf:
            candidates.append((ws.alpha, ws, "warm_start"))
    evals = 0
    for x_start in starts:
        res = minimize(
            lambda x: -x[0],
            x_start,
            method="COBYLA",
            constraints=[{"type": "ineq", "fun": constraints}],
            options={"maxiter": budget, "rhobeg": 0.2, "tol": 1e-10},
        )
        evals += int(res.nfev)
        if not res.x[0] > 0:
            continue
        disc = AnalyticDisc(unpack(res.x), norm / (rho0 * res.x[0]), margin, n_samples)
        fixed = _repair(domain, disc, n_samples, margin)
        if fixed is not None:
            # rotate lambda so that alpha f'(0) equals X itself, not its canonical representative;
            # rotation keeps the value bit-identical across phases of X
            rot = (phase ** np.arange(degree + 1))[:, None]
            fixed = AnalyticDisc(fixed.coeffs * rot, fixed.alpha, margin, n_samples, fixed.verified_samples)
            candidates.append((fixed.alpha, fixed, "search"))

    value, disc, origin = min(candidates, key=lambda item: item[0])
    value = min(value, lin.value)
    return Bound(
        float(value), "upper",
        {"disc": origin, "degree": degree, "samples": n_samples, "evaluations": evals,
         "linear": lin.value, "margin": margin},
        disc,
    )


# -- certified lower bounds along the normal ---------------------------------------

@dataclass
class LowerBoundContext:
    """Taylor model at a boundary point plus the constants the lower-bound chain uses."""

    domain: Domain
    local: Domain
    model: TaylorModel
    psi: MixedPolynomial
    diam: float
    profile_radii: np.ndarray
    profile_level: np.ndarray
    kappa_geom: float = KAPPA_GEOM
    delta_max: float = 0.0

    @classmethod
    def build(cls, domain: Domain, P=None, k: int = 3, R_U: float | None = None,
              n_samples: int = 4096, seed: int = 0, kappa_geom: float = KAPPA_GEOM,
              delta_max: float | None = None) -> LowerBoundContext:
        P = domain.boundary_point if P is None else np.asarray(P, dtype=complex)
        model, local = build_taylor_model(domain, P, k, R_U=R_U, n_samples=n_samples, seed=seed)
        psi = model.psi()
        pts = sample_ball(local.n, local.radius, 4 * n_samples, seed=seed + 7, center=local.center)
        pts = pts[local.contains(pts)]
        radii = np.linalg.norm(pts, axis=1)
        order = np.argsort(radii)
        level = np.maximum.accumulate(psi(pts[order]).real) if len(pts) else np.zeros(0)
        return cls(
            domain=domain, local=local, model=model, psi=psi,
            diam=local.diameter_bound, profile_radii=radii[order],
            profile_level=1.5 * np.maximum(level, 0.0), kappa_geom=kappa_geom,
            delta_max=DELTA_MAX_FRACTION * model.R_U if delta_max is None else delta_max,
        )

    @property
    def frame(self):
        return self.model.frame

    def halfplane_level(self, rho: float) -> float:
        """c with ``Re Psi < c`` on ``D ∩ B(0, rho)`` in the normal frame."""
        R_U = self.model.R_U
        quartic = self.model.C3 * min(rho, R_U) ** 4
        if rho <= R_U:
            return quartic
        k = np.searchsorted(self.profile_radii, rho, side="right")
        sampled = self.profile_level[k - 1] if k > 0 else 0.0
        if k == len(self.profile_radii) and len(self.profile_level):
            sampled = self.profile_level[-1]
        return float(max(quartic, sampled))

    def local_query(self, delta: float, X) -> tuple[np.ndarray, np.ndarray, float]:
        s = self.frame.scale
        dl = s * delta
        p = np.zeros(self.local.n, dtype=complex)
        p[-1] = -dl
        return p, self.frame.vector_to_local(X), dl


def _chain_value(ctx: LowerBoundContext, p, Xl, r: float, rho: float) -> tuple[float, dict]:
    level = ctx.halfplane_level(rho)
    psi_p = complex(ctx.psi.evaluate(p))
    grad = ctx.psi.gradient(p)  # holomorphic, so the derivative along X is grad . X
    deriv = abs(np.dot(grad, Xl))
    schwarz = schwarz_halfplane_bound(level, psi_p)
    return r * deriv / schwarz, {"level": level, "rho": rho, "schwarz": schwarz, "psi_p": psi_p}


def normal_lower_bound(ctx: LowerBoundContext, delta: float, X, stage: int) -> Bound:
    """Certified lower bound for the metric at ``P - delta n`` in direction X.

    Stage 1 shrinks competing discs to radius ``delta^(1/4)`` and controls their
    image by the Lipschitz bound ``C4 |lambda|``; stage 2 uses radius
    ``delta^(1/8)`` with the second-order bound ``|f'(0)| |lambda| + C7 |lambda|^2``,
    where ``|f'(0)|`` is at most ``|X| / kappa_1`` by the stage-1 bound.
    """
    if stage not in (1, 2):
        raise ValueError("stage must be 1 or 2")
    p, Xl, dl = ctx.local_query(delta, X)
    if not 0 < dl < ctx.delta_max:
        raise BoundError(f"depth {dl:g} (normal frame) outside (0, {ctx.delta_max:g})")
    xn = abs(Xl[-1])
    if xn == 0 or np.linalg.norm(Xl) > ctx.kappa_geom * xn / dl:
        raise HypothesisError("direction is too far from the normal for this depth")
    C4 = C7 = C8 = 2.0 * ctx.diam
    r1 = dl ** 0.25
    k1, info1 = _chain_value(ctx, p, Xl, r1, dl + C4 * r1)
    prov = {"stage": 1, "r": r1, "C3": ctx.model.C3, "C4": C4, **info1}
    if stage == 1:
        return Bound(k1, "lower", prov)
    if k1 <= 0:
        return Bound(0.0, "lower", {**prov, "stage": 2})
    r2 = dl ** 0.125
    rho2 = dl + C8 * r2 * np.linalg.norm(Xl) / k1 + C7 * r2 * r2
    k2, info2 = _chain_value(ctx, p, Xl, r2, rho2)
    return Bound(k2, "lower", {"stage": 2, "r": r2, "C3": ctx.model.C3, "C7": C7, "C8": C8,
                               "stage1": k1, **info2})


def closed_form_bound(delta, Xn: float = 1.0, stage: int = 1, C: float = 1.0, X_norm: float | None = None):
    """The chain with every constant set to C: ``C r |X_n| / (delta + rho^4)``."""
    delta = np.asarray(delta, dtype=float)
    X_norm = abs(Xn) if X_norm is None else X_norm
    r1 = delta ** 0.25
    k1 = C * r1 * abs(Xn) / (delta + (delta + C * r1) ** 4)
    if stage == 1:
        return k1
    r2 = delta ** 0.125
    rho = delta + C * r2 * X_norm / k1 + C * r2 * r2
    return C * r2 * abs(Xn) / (delta + rho**4)


@dataclass
class ChainReport:
    degenerate: bool
    level: float
    sup_re_phi: float
    inclusion_holds: bool
    derivative: float
    schwarz: float
    schwarz_holds: bool
    implied: float
    alpha: float
    implied_holds: bool

    @property
    def passed(self) -> bool:
        return self.degenerate or (self.inclusion_holds and self.schwarz_holds and self.implied_holds)


def verify_chain(disc: AnalyticDisc, ctx: LowerBoundContext, delta: float, r_shrink: float,
                 n_samples: int = 512) -> ChainReport:
    """Evaluate each inequality of the lower-bound chain on a concrete disc."""
    base = ctx.frame.to_global(ctx.local_query(delta, np.zeros(ctx.local.n))[0])
    if not np.allclose(disc.base, base, atol=1e-12 * max(1.0, np.linalg.norm(base))):
        raise BoundError("disc is not centred at the queried point")
    p, _, _ = ctx.local_query(delta, np.zeros(ctx.local.n))
    if np.linalg.norm(disc.velocity) == 0:
        return ChainReport(True, 0.0, -np.inf, True, 0.0, np.inf, True, 0.0, disc.alpha, True)
    lam = _circle(n_samples)
    local_pts = ctx.frame.to_local(disc(r_shrink * lam))
    rho = float(np.max(np.linalg.norm(local_pts, axis=1)))
    level = ctx.halfplane_level(rho)
    sup_re = float(np.max(ctx.psi(local_pts).real))
    velocity_local = ctx.frame.vector_to_local(disc.velocity)
    grad = ctx.psi.gradient(p)
    deriv = r_shrink * abs(np.dot(grad, velocity_local))
    psi_p = complex(ctx.psi.evaluate(p))
    schwarz = schwarz_halfplane_bound(level, psi_p)
    # alpha f'(0) = X, so |phi'(0)| = r |Psi'(p) X| / alpha and alpha >= r |Psi'(p) X| / schwarz
    implied = deriv * disc.alpha / schwarz
    return ChainReport(
        degenerate=False, level=level, sup_re_phi=sup_re, inclusion_holds=sup_re < level,
        derivative=deriv, schwarz=schwarz, schwarz_holds=deriv <= schwarz * (1 + 1e-12),
        implied=implied, alpha=disc.alpha, implied_holds=implied <= disc.alpha * (1 + 1e-12),
    )
