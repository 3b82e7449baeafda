"""Mixed polynomials in (z, z̄), Wirtinger calculus and Levi forms.

Points of C^n are numpy complex arrays whose last axis has length n; every
evaluator in this package accepts a batch of points of shape ``(..., n)``
and returns an array of shape ``(...)``.
"""

from __future__ import annotations

import itertools
from typing import Callable, Mapping

import numpy as np

REAL_TOL = 1e-12

# Lattice offsets of the 9-point Laplacian stencil in the lambda-plane.
_EDGES = (1.0, -1.0, 1j, -1j)
_CORNERS = (1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j)


class DimensionError(ValueError):
    pass


class NonFiniteError(ArithmeticError):
    pass


def as_points(z, n: int | None = None) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.ndim == 0:
        z = z.reshape(1)
    if n is not None and z.shape[-1] != n:
        raise DimensionError(f"expected points in C^{n}, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise NonFiniteError("point has non-finite coordinates")
    return z


def _key(alpha, beta):
    return tuple(int(a) for a in alpha), tuple(int(b) for b in beta)


class MixedPolynomial:
    """Finite sum of monomials ``a[alpha, beta] * z**alpha * conj(z)**beta``.

    Terms are stored sparsely in a dict keyed by ``(alpha, beta)``; zero
    coefficients are dropped. With ``real=True`` the constructor checks the
    conjugate symmetry ``a[alpha, beta] == conj(a[beta, alpha])`` and
    evaluation returns real arrays.
    """

    __slots__ = ("n", "terms", "real")

    def __init__(self, n: int, terms: Mapping | None = None, real: bool = False):
        self.n = int(n)
        collected: dict = {}
        for (alpha, beta), c in (terms or {}).items():
            key = _key(alpha, beta)
            if len(key[0]) != self.n or len(key[1]) != self.n:
                raise DimensionError(f"multi-index length differs from n={self.n}")
            if min(key[0] + key[1], default=0) < 0:
                raise ValueError("negative exponent")
            collected[key] = collected.get(key, 0j) + complex(c)
        self.terms = {k: collected[k] for k in sorted(collected) if collected[k] != 0}
        self.real = bool(real)
        if self.real and not self.is_conjugate_symmetric():
            raise ValueError("coefficients are not conjugate-symmetric")

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, n: int) -> MixedPolynomial:
        return cls(n, {}, real=True)

    @classmethod
    def constant(cls, n: int, c: complex) -> MixedPolynomial:
        zero = (0,) * n
        return cls(n, {(zero, zero): c}, real=np.imag(c) == 0)

    @classmethod
    def monomial(cls, n: int, alpha, beta, c: complex = 1.0) -> MixedPolynomial:
        return cls(n, {(tuple(alpha), tuple(beta)): c})

    @classmethod
    def coordinate(cls, n: int, i: int, conjugate: bool = False) -> MixedPolynomial:
        e = tuple(int(k == i) for k in range(n))
        zero = (0,) * n
        return cls(n, {(zero, e) if conjugate else (e, zero): 1.0})

    # -- structure ----------------------------------------------------------
    def __repr__(self) -> str:
        return f"MixedPolynomial(n={self.n}, terms={len(self.terms)}, real={self.real})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, MixedPolynomial):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def degrees(self) -> set[int]:
        return {sum(a) + sum(b) for a, b in self.terms}

    @property
    def degree(self) -> int:
        return max(self.degrees(), default=0)

    def is_homogeneous(self, j: int | None = None) -> bool:
        degs = self.degrees()
        if not degs:
            return True
        return len(degs) == 1 and (j is None or degs == {j})

    def homogeneous_part(self, j: int) -> MixedPolynomial:
        return self._filter(lambda a, b: sum(a) + sum(b) == j)

    def is_conjugate_symmetric(self, tol: float = REAL_TOL) -> bool:
        scale = max((abs(c) for c in self.terms.values()), default=0.0)
        for (a, b), c in self.terms.items():
            partner = self.terms.get((b, a), 0j)
            if abs(c - np.conj(partner)) > tol * max(scale, 1.0):
                return False
        return True

    def _filter(self, keep) -> MixedPolynomial:
        sub = {k: c for k, c in self.terms.items() if keep(*k)}
        return MixedPolynomial(self.n, sub, real=self.real and _symmetric_subset(sub))

    def mixed_part(self) -> MixedPolynomial:
        """Terms with both a holomorphic and an antiholomorphic factor."""
        return self._filter(lambda a, b: sum(a) > 0 and sum(b) > 0)

    def holomorphic_part(self) -> MixedPolynomial:
        """Terms with beta == 0 (no conjugate variables)."""
        return self._filter(lambda a, b: sum(b) == 0)

    def antiholomorphic_part(self) -> MixedPolynomial:
        return self._filter(lambda a, b: sum(a) == 0)

    # -- algebra ------------------------------------------------------------
    def _check(self, other: MixedPolynomial):
        if other.n != self.n:
            raise DimensionError(f"dimension mismatch: {self.n} vs {other.n}")

    def __add__(self, other):
        if not isinstance(other, MixedPolynomial):
            other = MixedPolynomial.constant(self.n, other)
        self._check(other)
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms.get(k, 0j) + c
        return MixedPolynomial(self.n, terms, real=self.real and other.real)

    __radd__ = __add__

    def __neg__(self):
        return MixedPolynomial(self.n, {k: -c for k, c in self.terms.items()}, real=self.real)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, MixedPolynomial):
            c = complex(other)
            return MixedPolynomial(
                self.n, {k: v * c for k, v in self.terms.items()}, real=self.real and c.imag == 0
            )
        self._check(other)
        terms: dict = {}
        for (a1, b1), c1 in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                key = (
                    tuple(x + y for x, y in zip(a1, a2)),
                    tuple(x + y for x, y in zip(b1, b2)),
                )
                terms[key] = terms.get(key, 0j) + c1 * c2
        return MixedPolynomial(self.n, terms, real=self.real and other.real)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / complex(c))

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = MixedPolynomial.constant(self.n, 1.0)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conj(self) -> MixedPolynomial:
        return MixedPolynomial(
            self.n, {(b, a): np.conj(c) for (a, b), c in self.terms.items()}, real=self.real
        )

    def real_part(self) -> MixedPolynomial:
        out = (self + self.conj()) * 0.5
        return MixedPolynomial(self.n, out.terms, real=True)

    def as_real(self) -> MixedPolynomial:
        """Same terms, flagged (and checked) as real-valued."""
        return MixedPolynomial(self.n, self.terms, real=True)

    # -- calculus -----------------------------------------------------------
    def d_z(self, i: int) -> MixedPolynomial:
        terms = {}
        for (a, b), c in self.terms.items():
            if a[i]:
                a2 = a[:i] + (a[i] - 1,) + a[i + 1 :]
                terms[(a2, b)] = c * a[i]
        return MixedPolynomial(self.n, terms)

    def d_zbar(self, j: int) -> MixedPolynomial:
        terms = {}
        for (a, b), c in self.terms.items():
            if b[j]:
                b2 = b[:j] + (b[j] - 1,) + b[j + 1 :]
                terms[(a, b2)] = c * b[j]
        return MixedPolynomial(self.n, terms)

    def gradient(self, z) -> np.ndarray:
        """Holomorphic gradient (dP/dz_1, ..., dP/dz_n) at z."""
        return np.stack([self.d_z(i)(z) for i in range(self.n)], axis=-1)

    def levi_matrix(self, z) -> np.ndarray:
        """Exact complex Hessian ``H[i, j] = d^2 P / dz_i dzbar_j`` at z."""
        z = as_points(z, self.n)
        out = np.empty(z.shape[:-1] + (self.n, self.n), dtype=complex)
        for i in range(self.n):
            di = self.d_z(i)
            for j in range(self.n):
                out[..., i, j] = di.d_zbar(j).evaluate(z)
        return out

    def levi_form(self, z, X) -> np.ndarray:
        H = self.levi_matrix(z)
        X = np.asarray(X, dtype=complex)
        return np.einsum("...i,...ij,...j->...", X, H, np.conj(X)).real

    def compose_affine(self, A, b) -> MixedPolynomial:
        """Return ``w -> P(A w + b)`` as a polynomial in w."""
        A = np.asarray(A, dtype=complex)
        b = np.asarray(b, dtype=complex)
        m = A.shape[1]
        if A.shape[0] != self.n or b.shape != (self.n,):
            raise DimensionError("affine map does not match polynomial dimension")
        zeta = [
            MixedPolynomial.constant(m, b[i])
            + sum(
                (MixedPolynomial.coordinate(m, k) * A[i, k] for k in range(m) if A[i, k] != 0),
                MixedPolynomial.zero(m),
            )
            for i in range(self.n)
        ]
        zeta_bar = [p.conj() for p in zeta]
        out = MixedPolynomial.zero(m)
        cache: dict = {}

        def power(seq, i, k):
            key = (id(seq), i, k)
            if key not in cache:
                cache[key] = seq[i] ** k
            return cache[key]

        for (a, bb), c in self.terms.items():
            term = MixedPolynomial.constant(m, c)
            for i in range(self.n):
                if a[i]:
                    term = term * power(zeta, i, a[i])
                if bb[i]:
                    term = term * power(zeta_bar, i, bb[i])
            out = out + term
        cleaned = {k: v for k, v in out.terms.items() if abs(v) > 1e-15 * _coef_scale(out)}
        return MixedPolynomial(m, cleaned, real=self.real)

    # -- evaluation ---------------------------------------------------------
    def evaluate(self, z) -> np.ndarray:
        z = as_points(z, self.n)
        out = np.zeros(z.shape[:-1], dtype=complex)
        if not self.terms:
            return out
        top = self.degree
        zc = np.conj(z)
        pows = [[np.ones(z.shape[:-1], dtype=complex)] for _ in range(self.n)]
        cpows = [[np.ones(z.shape[:-1], dtype=complex)] for _ in range(self.n)]
        for i in range(self.n):
            for _ in range(top):
                pows[i].append(pows[i][-1] * z[..., i])
                cpows[i].append(cpows[i][-1] * zc[..., i])
        for (a, b), c in self.terms.items():
            term = np.full(z.shape[:-1], c, dtype=complex)
            for i in range(self.n):
                if a[i]:
                    term = term * pows[i][a[i]]
                if b[i]:
                    term = term * cpows[i][b[i]]
            out += term
        return out

    def __call__(self, z) -> np.ndarray:
        val = self.evaluate(z)
        if self.real:
            return val.real
        return val


def _coef_scale(P: MixedPolynomial) -> float:
    return max((abs(c) for c in P.terms.values()), default=1.0)


def _symmetric_subset(terms: Mapping) -> bool:
    return all(np.isclose(c, np.conj(terms.get((b, a), 0j))) for (a, b), c in terms.items())


def eval_mixed_poly(P: MixedPolynomial, z) -> np.ndarray:
    """Evaluate P at one point or a batch; real-flagged polynomials return reals."""
    z = as_points(z)
    if z.shape[-1] != P.n:
        raise DimensionError(f"polynomial in C^{P.n} evaluated at point of C^{z.shape[-1]}")
    val = P.evaluate(z)
    if P.real:
        if np.any(np.abs(val.imag) > REAL_TOL * (1 + np.abs(val))):
            raise ArithmeticError("real-flagged polynomial produced an imaginary part")
        return val.real
    return val


def homogeneous_basis(n: int, j: int) -> list[tuple[tuple, tuple]]:
    """All (alpha, beta) with |alpha| + |beta| = j in dimension n."""
    out = []
    for exps in itertools.product(range(j + 1), repeat=2 * n):
        if sum(exps) == j:
            out.append((tuple(exps[:n]), tuple(exps[n:])))
    return out


def levi_radial(Q: MixedPolynomial) -> MixedPolynomial:
    """The polynomial ``z -> L Q(z)(z)`` of a homogeneous Q.

    Each monomial z^alpha zbar^beta is weighted by |alpha| * |beta| (Euler's
    identity applied in z and in zbar), so pure terms drop out.
    """
    if not Q.is_homogeneous():
        raise ValueError(f"levi_radial needs a homogeneous polynomial, got degrees {sorted(Q.degrees())}")
    terms = {(a, b): c * sum(a) * sum(b) for (a, b), c in Q.terms.items()}
    return MixedPolynomial(Q.n, terms, real=Q.real)


# -- numeric Levi forms -----------------------------------------------------

def default_step(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return 1e-3 * (1.0 + np.linalg.norm(z, axis=-1))


def _laplacian9(f, z, u, h):
    """Mehrstellen 9-point Laplacian of lambda -> f(z + lambda u) at 0."""
    hh = h[..., None]
    f0 = np.asarray(f(z), dtype=float)
    edge = sum(np.asarray(f(z + hh * s * u), dtype=float) for s in _EDGES)
    corner = sum(np.asarray(f(z + hh * s * u), dtype=float) for s in _CORNERS)
    vals = (4.0 * edge + corner - 20.0 * f0) / (6.0 * h**2)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteError("non-finite function values on the Levi stencil")
    return vals


def levi_form(
    f: Callable,
    z,
    X,
    h=None,
    richardson: bool = True,
) -> np.ndarray:
    """Finite-difference Levi form ``sum_ij f_{z_i zbar_j} X_i conj(X_j)``.

    The form equals a quarter of the Laplacian of ``lambda -> f(z + lambda X)``;
    that Laplacian is taken with the 9-point stencil at step h (default
    ``1e-3 * (1 + |z|)``) and, unless disabled, Richardson-extrapolated from
    steps h and h/2.
    """
    z = as_points(z)
    X = np.broadcast_to(np.asarray(X, dtype=complex), z.shape)
    norm = np.linalg.norm(X, axis=-1)
    safe = np.where(norm > 0, norm, 1.0)
    u = X / safe[..., None]
    h = default_step(z) if h is None else np.broadcast_to(np.asarray(h, dtype=float), z.shape[:-1])
    lap = _laplacian9(f, z, u, h)
    if richardson:
        lap_half = _laplacian9(f, z, u, h / 2)
        lap = (4.0 * lap_half - lap) / 3.0
    return np.where(norm > 0, 0.25 * lap * norm**2, 0.0)


def complex_hessian(f: Callable, z, h=None, richardson: bool = True) -> np.ndarray:
    """Numeric Hermitian matrix of second mixed Wirtinger derivatives.

    Diagonal entries are Levi forms along e_i; off-diagonal entries come from
    polarization along e_i + e_j and e_i + i e_j, so the result is Hermitian
    by construction.
    """
    z = as_points(z)
    n = z.shape[-1]
    eye = np.eye(n, dtype=complex)
    H = np.zeros(z.shape[:-1] + (n, n), dtype=complex)
    diag = [levi_form(f, z, eye[i], h, richardson) for i in range(n)]
    for i in range(n):
        H[..., i, i] = diag[i]
    for i in range(n):
        for j in range(i + 1, n):
            re = 0.5 * (levi_form(f, z, eye[i] + eye[j], h, richardson) - diag[i] - diag[j])
            im = 0.5 * (levi_form(f, z, eye[i] + 1j * eye[j], h, richardson) - diag[i] - diag[j])
            H[..., i, j] = re + 1j * im
            H[..., j, i] = re - 1j * im
    return H


def min_levi_eigenvalue(f: Callable, z, h=None, richardson: bool = True) -> np.ndarray:
    """Least eigenvalue of the numeric complex Hessian at each point."""
    H = complex_hessian(f, z, h, richardson)
    return np.linalg.eigvalsh(H)[..., 0]


def laplacian(f: Callable, z, h=None, richardson: bool = True) -> np.ndarray:
    """Numeric Laplacian of a function of one complex variable (z shape (..., 1))."""
    return 4.0 * levi_form(f, z, np.ones(1, dtype=complex), h, richardson)


def sample_ball(n: int, radius: float, count: int, seed: int = 0, center=None) -> np.ndarray:
    """Scrambled-Sobol points, uniformly distributed in a ball of C^n."""
    from scipy.stats import qmc

    sob = qmc.Sobol(d=2 * n + 1, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(max(count, 2))))
    u = sob.random_base2(m)[:count]
    g = _norm_ppf(np.clip(u[:, : 2 * n], 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = radius * u[:, 2 * n] ** (1.0 / (2 * n))
    pts = (g[:, :n] + 1j * g[:, n:]) * rad[:, None]
    if center is not None:
        pts = pts + np.asarray(center, dtype=complex)
    return pts


def _norm_ppf(u):
    from scipy.special import ndtri

    return ndtri(u)


def random_real_homogeneous(n: int, j: int, rng: np.random.Generator, density: float = 1.0) -> MixedPolynomial:
    """Random real-valued homogeneous polynomial of degree j (testing helper)."""
    terms = {}
    for a, b in homogeneous_basis(n, j):
        if (b, a) in terms or rng.random() > density:
            continue
        c = complex(rng.normal(), rng.normal())
        if a == b:
            c = complex(c.real, 0.0)
        terms[(a, b)] = c
        if a != b:
            terms[(b, a)] = np.conj(c)
    return MixedPolynomial(n, terms, real=True)

