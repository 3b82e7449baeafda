"""Boundary normal forms and Taylor decompositions of defining functions.

A defining function r is moved to a boundary point P by an affine unitary
change ``w = s * U @ (z - P)`` after which its linear part is exactly
``Re w_n``.  The homogeneous pieces Q_j of the Taylor expansion are then
split into the mixed part (terms with both z and zbar factors) and twice
the real part of the holomorphic piece H_j.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core_complex import (
    MixedPolynomial,
    as_points,
    homogeneous_basis,
    min_levi_eigenvalue,
    sample_ball,
)

log = logging.getLogger(__name__)

FRAME_TOL = 1e-10
SAFETY = 1.5
PSH_TOL = 1e-6


class DegenerateBoundaryError(ValueError):
    pass


class NotPlurisubharmonicError(ValueError):
    pass


class JetExtractionError(ArithmeticError):
    pass


@dataclass(frozen=True)
class NormalFrame:
    point: np.ndarray
    U: np.ndarray
    scale: float

    @property
    def n(self) -> int:
        return len(self.point)

    def to_local(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return self.scale * (z - self.point) @ self.U.T

    def to_global(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        return self.point + (w @ np.conj(self.U)) / self.scale

    def vector_to_local(self, X) -> np.ndarray:
        return self.scale * (np.asarray(X, dtype=complex) @ self.U.T)

    def affine(self) -> tuple[np.ndarray, np.ndarray]:
        """(A, b) with z = A w + b."""
        return np.conj(self.U).T / self.scale, np.asarray(self.point, dtype=complex)

    def is_identity(self, tol: float = FRAME_TOL) -> bool:
        return (
            np.allclose(self.U, np.eye(self.n), atol=tol)
            and abs(self.scale - 1.0) <= tol
            and np.allclose(self.point, 0.0, atol=tol)
        )


def holomorphic_gradient(r: Callable, P, h: float = 1e-5) -> np.ndarray:
    """Central-difference ``(dr/dz_1, ..., dr/dz_n)`` of a real function at P."""
    P = as_points(P)
    n = P.shape[-1]
    g = np.empty(n, dtype=complex)
    for i in range(n):
        e = np.zeros(n, dtype=complex)
        e[i] = h
        dx = (r(P + e) - r(P - e)) / (2 * h)
        dy = (r(P + 1j * e) - r(P - 1j * e)) / (2 * h)
        g[i] = 0.5 * (float(dx) - 1j * float(dy))
    return g


def _unitary_to_last_axis(v: np.ndarray) -> np.ndarray:
    """Unitary U with U v = e_n for a unit vector v (identity when v = e_n)."""
    n = len(v)
    e_n = np.zeros(n, dtype=complex)
    e_n[-1] = 1.0
    phase = np.exp(1j * np.angle(v[-1])) if abs(v[-1]) > 0 else 1.0
    w = v - phase * e_n
    if np.linalg.norm(w) < 1e-15:
        H = np.eye(n, dtype=complex)
    else:
        H = np.eye(n, dtype=complex) - 2.0 * np.outer(w, np.conj(w)) / np.vdot(w, w).real
    D = np.eye(n, dtype=complex)
    D[-1, -1] = np.conj(phase)
    return D @ H


def normalize_at_boundary(domain, P, tol: float = FRAME_TOL) -> NormalFrame:
    """Frame in which the defining function starts as ``Re w_n + O(|w|^2)``."""
    P = np.asarray(P, dtype=complex)
    rP = float(domain.r(P))
    if abs(rP) > tol:
        raise ValueError(f"P is not a boundary point: r(P) = {rP:.3e}")
    if domain.poly is not None:
        g = domain.poly.gradient(P)
    else:
        g = holomorphic_gradient(domain.r, P)
    norm = np.linalg.norm(g)
    if norm < 1e-12:
        raise DegenerateBoundaryError("gradient of r vanishes at P")
    normal = np.conj(g) / norm
    U = _unitary_to_last_axis(normal)
    return NormalFrame(point=P, U=U, scale=2.0 * norm)


@dataclass
class TaylorModel:
    """Normalized Taylor data of a defining function at a boundary point."""

    k: int
    Q: dict[int, MixedPolynomial]
    Qtilde: dict[int, MixedPolynomial]
    H: dict[int, MixedPolynomial]
    frame: NormalFrame | None = None
    C1: float | None = None
    C2: float | None = None
    C3: float | None = None
    R_U: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return next(iter(self.Q.values())).n

    def hat(self, j: int) -> MixedPolynomial:
        """The pure part 2 Re H_j of Q_j."""
        return (self.H[j] * 2.0).real_part()

    def polynomial(self, upto: int | None = None) -> MixedPolynomial:
        """Re z_n + sum of Q_j for j <= upto."""
        upto = self.k if upto is None else upto
        out = MixedPolynomial.coordinate(self.n, self.n - 1).real_part()
        for j in range(2, upto + 1):
            out = out + self.Q[j]
        return out

    def remainder(self, r: Callable, w) -> np.ndarray:
        return r(w) - self.polynomial()(w)

    def psi(self) -> MixedPolynomial:
        return make_psi(self)


def _split(Qj: MixedPolynomial):
    mixed = Qj.mixed_part()
    hol = Qj.holomorphic_part()
    return MixedPolynomial(Qj.n, mixed.terms, real=True), MixedPolynomial(Qj.n, hol.terms)


def decompose(r, k: int = 3, n: int | None = None, radius: float = 1e-2) -> TaylorModel:
    """Split a normalized defining function into Re z_n + sum Q_j + R_k.

    Polynomial input is re-indexed exactly. A black-box callable is fitted
    by least squares in the mixed monomial basis on a centrally symmetric
    point cloud at two radii, and the two coefficient sets are
    Richardson-combined.
    """
    if k < 3:
        raise ValueError("decomposition needs k >= 3")
    if isinstance(r, MixedPolynomial):
        P = r
        n = P.n
        exact = True
    else:
        if n is None:
            raise ValueError("dimension n required for black-box input")
        P = _fit_jet(r, n, k, radius)
        exact = False

    lin = P.homogeneous_part(1)
    expected = MixedPolynomial.coordinate(n, n - 1).real_part()
    const = P.homogeneous_part(0)
    tol = 1e-10 if exact else 1e-6
    if _max_coef(lin - expected) > tol or _max_coef(const) > tol:
        raise ValueError("input is not in normal form (linear part must be Re z_n, r(0) = 0)")

    Q, Qt, H = {}, {}, {}
    for j in range(2, k + 1):
        Qj = MixedPolynomial(n, P.homogeneous_part(j).terms, real=True)
        Q[j] = Qj
        Qt[j], H[j] = _split(Qj)
    return TaylorModel(k=k, Q=Q, Qtilde=Qt, H=H, diagnostics={"exact": exact})


def _max_coef(P: MixedPolynomial) -> float:
    return max((abs(c) for c in P.terms.values()), default=0.0)


def _real_basis(n: int, top: int):
    """Pairs (alpha, beta) with (alpha, beta) <= (beta, alpha); each gives Re and maybe Im columns."""
    out = []
    for j in range(top + 1):
        for a, b in homogeneous_basis(n, j):
            if (a, b) <= (b, a):
                out.append((a, b))
    return out


def _fit_once(r, n: int, top: int, radius: float, rng) -> dict:
    basis = _real_basis(n, top)
    ncols = sum(1 if a == b else 2 for a, b in basis)
    m = max(4 * ncols, 200)
    half = sample_ball(n, radius, m, seed=int(rng.integers(2**31)))
    pts = np.concatenate([half, -half])
    vals = np.asarray(r(pts), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise JetExtractionError("non-finite values near the expansion point")
    cols, labels = [], []
    for a, b in basis:
        mono = MixedPolynomial.monomial(n, a, b).evaluate(pts)
        if a == b:
            cols.append(mono.real)
            labels.append((a, b, "re"))
        else:
            # a z^a zbar^b + conj(a) z^b zbar^a = 2 Re(c) Re(m) - 2 Im(c) Im(m)
            cols.append(2 * mono.real)
            labels.append((a, b, "re"))
            cols.append(-2 * mono.imag)
            labels.append((a, b, "im"))
    A = np.stack(cols, axis=1)
    scale = np.array([radius ** (sum(a) + sum(b)) for a, b, _ in labels])
    coef, *_ = np.linalg.lstsq(A / scale, vals, rcond=None)
    coef = coef / scale
    out: dict = {}
    for (a, b, part), c in zip(labels, coef):
        out.setdefault((a, b), 0j)
        out[(a, b)] += c if part == "re" else 1j * c
    return out


def _fit_jet(r, n: int, k: int, radius: float) -> MixedPolynomial:
    top = k + 2
    rng = np.random.default_rng(12345)
    coarse = _fit_once(r, n, top, radius, rng)
    fine = _fit_once(r, n, top, radius / 2, rng)
    terms = {}
    for key in coarse:
        a, b = key
        j = sum(a) + sum(b)
        if j > k:
            continue
        p = top + 1 - j
        c = (2**p * fine[key] - coarse[key]) / (2**p - 1)
        terms[key] = c
        if a != b:
            terms[(b, a)] = np.conj(c)
    cleaned = {key: c for key, c in terms.items() if abs(c) > 1e-9}
    return MixedPolynomial(n, cleaned, real=True)


def make_psi(model: TaylorModel) -> MixedPolynomial:
    """Holomorphic polynomial z_n + 2 H_2 + 2 H_3."""
    if model.k < 3:
        raise ValueError("model degree must be at least 3")
    n = model.n
    return MixedPolynomial.coordinate(n, n - 1) + model.H[2] * 2.0 + model.H[3] * 2.0


def remainder_constants(
    domain,
    model: TaylorModel,
    R_U: float,
    n_samples: int = 4096,
    seed: int = 0,
    psh_tol: float = PSH_TOL,
) -> tuple[float, float, float]:
    """Sampled constants C1, C2, C3 on the ball of radius R_U (normal frame).

    ``domain`` must already be expressed in the frame of ``model``.
    C1 bounds -(Q~2 + 2 Q~3)/|z|^4, C2 bounds (Re z_n + Q2 + Q3 - r)/|z|^4,
    C3 bounds (Re z_n + 2 Re(H2 + H3))/|z|^4 over sampled points of D.
    Each sampled supremum is multiplied by a 1.5 safety factor.
    """
    n = model.n
    pts = sample_ball(n, R_U, n_samples, seed=seed)
    pts = pts[np.linalg.norm(pts, axis=1) > 1e-3 * R_U]
    check = pts[:: max(1, len(pts) // 1024)]
    lam = min_levi_eigenvalue(domain.r, check)
    if np.min(lam) < -psh_tol:
        bad = check[np.argmin(lam)]
        raise NotPlurisubharmonicError(
            f"Levi form has eigenvalue {np.min(lam):.3e} at {np.round(bad, 6)}"
        )
    norm4 = np.linalg.norm(pts, axis=1) ** 4
    rv = domain.r(pts)

    lev = model.Qtilde[2](pts) + 2.0 * model.Qtilde[3](pts)
    c1 = max(0.0, float(np.max(-lev / norm4)))

    quad = (
        pts[:, n - 1].real + model.Q[2](pts) + model.Q[3](pts)
    )
    c2 = max(0.0, float(np.max((quad - rv) / norm4)))

    inside = domain.contains(pts)
    psi = make_psi(model)
    g = psi(pts).real
    c3 = max(0.0, float(np.max(g[inside] / norm4[inside]))) if np.any(inside) else 0.0

    C = tuple(SAFETY * c for c in (c1, c2, c3))
    if not all(np.isfinite(C)):
        raise ArithmeticError("sampled constants are not finite")
    model.C1, model.C2, model.C3 = C
    model.R_U = R_U
    model.diagnostics.update(
        min_levi_eigenvalue=float(np.min(lam)), n_samples=int(len(pts)), n_inside=int(inside.sum())
    )
    return C


def build_taylor_model(
    domain,
    P,
    k: int = 3,
    R_U: float | None = None,
    n_samples: int = 4096,
    seed: int = 0,
):
    """Normalize, decompose and fit constants; returns (model, local_domain)."""
    frame = normalize_at_boundary(domain, P)
    local = domain.in_frame(frame)
    if local.poly is not None:
        model = decompose(local.poly, k)
    else:
        model = decompose(local.r, k, n=local.n)
    model.frame = frame
    R_U = 0.25 * domain.radius if R_U is None else R_U
    remainder_constants(local, model, R_U, n_samples=n_samples, seed=seed)
    return model, local


def remainder_ratios(r: Callable, model: TaylorModel, direction, radii) -> np.ndarray:
    """|R_k(t u)| / t^(k+1) along a fixed unit direction u for each radius t."""
    u = np.asarray(direction, dtype=complex)
    u = u / np.linalg.norm(u)
    out = []
    for t in radii:
        w = (t * u)[None, :]
        out.append(abs(float(model.remainder(r, w)[0])) / t ** (model.k + 1))
    return np.array(out)


__all__ = [
    "NormalFrame",
    "TaylorModel",
    "normalize_at_boundary",
    "decompose",
    "make_psi",
    "remainder_constants",
    "build_taylor_model",
    "remainder_ratios",
    "holomorphic_gradient",
    "DegenerateBoundaryError",
    "NotPlurisubharmonicError",
    "JetExtractionError",
]

