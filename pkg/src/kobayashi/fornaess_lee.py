"""A smooth pseudoconvex domain in C^3 whose metric decays slowly along a normal.

The defining function is ``Re w + rho_tilde(s, t)`` where ``rho_tilde`` sums
rescaled one-variable subharmonic blocks lifted to the cusp ``s^2 = t^3``,
plus a plurisubharmonic corrector.  The parameters involved range over
hundreds of orders of magnitude, so every schedule quantity is stored as a
natural logarithm and only exponentiated where the result is representable.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, optimize

from .core_complex import as_points, laplacian, min_levi_eigenvalue, sample_ball
from .domains import Domain

BN_TOL = 1e-12
QUAD_TOL = 1e-8
DEFAULT_ORDER = (32, 64)
AMBIENT_RADIUS = 2.0
PSH_REL_TOL = 1e-8

# Integer exponents e with quantity = r_n ** e.
EXPONENTS = {"beta": 9, "d": 9, "c": 18, "C": -20, "K": -38}


class ScheduleError(ValueError):
    pass


class InequalityError(ValueError):
    pass


class NoRootError(ValueError):
    pass


class QuadratureError(ArithmeticError):
    pass


class ProjectionError(ValueError):
    pass


class TailBoundError(ValueError):
    pass


class PlurisubharmonicityError(ValueError):
    pass


def _exp(x):
    with np.errstate(over="ignore", under="ignore"):
        return np.exp(x)


# -- one-variable blocks ---------------------------------------------------------

def _bn_function(b, log_an):
    return 0.125 - b + np.log(b) / (4.0 * log_an)


def solve_bn(a_n: float | None = None, *, log_a: float | None = None) -> float:
    """Smallest root in (0, 1] of ``1/8 - b + log(b) / (4 log a_n)``.

    The function is concave in b with maximum at ``b* = 1/(4 log a_n)``, so a
    root below b* exists exactly when the maximum is positive.  Bisection runs
    on log b, which keeps the bracket well scaled for huge ``a_n``.
    """
    if log_a is None:
        if a_n is None or not a_n > 1:
            raise ScheduleError(f"need a_n > 1, got {a_n}")
        log_a = math.log(a_n)
    if not log_a > 0:
        raise ScheduleError(f"need log a_n > 0, got {log_a}")
    b_star = 1.0 / (4.0 * log_a)
    if b_star > 1 or _bn_function(b_star, log_a) <= 0:
        raise NoRootError(f"no root in (0, 1] for log a_n = {log_a:.4g}; a_n is too small")

    def g(x):
        return 0.125 - math.exp(x) + x / (4.0 * log_a)

    hi = math.log(b_star)
    lo = -0.5 * log_a - 11.0
    while g(lo) >= 0:
        lo -= 2.0 * abs(lo) + 1.0
    x = optimize.bisect(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000)
    if x < math.log(np.finfo(float).tiny):
        raise NoRootError(f"root exp({x:.4g}) underflows double precision for log a_n = {log_a:.4g}")
    b = math.exp(x)
    if abs(_bn_function(b, log_a)) > BN_TOL:
        raise NoRootError(f"bisection residual {_bn_function(b, log_a):.3e} above tolerance")
    return b


def _zero_radius(log_a: float) -> float:
    """Root of ``1/8 + rho + log(rho)/(4 log a_n)``; R_n vanishes on the disc of this radius."""
    return optimize.brentq(lambda r: 0.125 + r + math.log(r) / (4.0 * log_a), 1e-300, 1.0, xtol=1e-300, rtol=1e-15)


def bump(rho):
    """Radial bump ``exp(1/(rho^2 - 1))`` on rho < 1, zero outside."""
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    inside = rho < 1
    with np.errstate(divide="ignore", over="ignore"):
        out[inside] = np.exp(1.0 / (rho[inside] ** 2 - 1.0))
    return out


KERNEL_MASS = 2 * np.pi * integrate.quad(lambda r: r * bump(r), 0, 1, epsabs=1e-15, epsrel=1e-13)[0]
KERNEL_ABS_MOMENT = 2 * np.pi * integrate.quad(lambda r: r * r * bump(r), 0, 1, epsabs=1e-15, epsrel=1e-13)[0] / KERNEL_MASS


def _polar_nodes(order):
    n_r, n_t = order
    x, w = np.polynomial.legendre.leggauss(n_r)
    rho = 0.5 * (x + 1.0)
    wr = 0.5 * w * rho * bump(rho)
    theta = 2 * np.pi * (np.arange(n_t) + 0.5) / n_t
    offsets = (rho[:, None] * np.exp(1j * theta[None, :])).ravel()
    weights = np.repeat(wr, n_t) / n_t
    return offsets, weights / weights.sum()


class Mollifier:
    """``f_eps(z) = integral of f(z - eps w) against the normalized bump``.

    Polar product quadrature: Gauss-Legendre in the radius times the midpoint
    rule in the angle.  Positive weights keep subharmonicity exactly.
    """

    def __init__(self, f, eps: float, order=DEFAULT_ORDER, chunk: int = 2048):
        if not eps > 0:
            raise ValueError("eps must be positive")
        self.f = f
        self.eps = float(eps)
        self.order = tuple(int(k) for k in order)
        self.chunk = chunk
        self._offsets, self._weights = _polar_nodes(self.order)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        out = np.empty(flat.shape, dtype=float)
        for start in range(0, flat.size, self.chunk):
            block = flat[start:start + self.chunk]
            vals = np.asarray(self.f(block[:, None] - self.eps * self._offsets[None, :]), dtype=float)
            out[start:start + self.chunk] = vals @ self._weights
        return out.reshape(z.shape)

    def checked(self, z, tol: float = QUAD_TOL, max_doublings: int = 8) -> np.ndarray:
        """Evaluate, refining until successive results agree within tol.

        Each step doubles the angular order (a kink crossing the circle limits
        it to second order) and the radial order up to 128 nodes.
        """
        current = self(z)
        order = self.order
        for _ in range(max_doublings):
            order = (min(2 * order[0], max(128, order[0])), 2 * order[1])
            finer = Mollifier(self.f, self.eps, order, self.chunk)(z)
            if np.max(np.abs(finer - current), initial=0.0) <= tol:
                return finer
            current = finer
        raise QuadratureError(f"quadrature did not settle to {tol:g} by order {order}")


def mollify(f, eps: float, order=DEFAULT_ORDER, r_n: float | None = None) -> Mollifier:
    if r_n is not None and not 0 < eps < r_n / 2:
        raise ValueError(f"mollification radius must lie in (0, r_n/2), got {eps} with r_n={r_n}")
    return Mollifier(f, eps, order)


class Block:
    """The one-variable subharmonic block of index n and its rescaling.

    ``u(w) = 1/8 - Re w + log|w| / (4 log a_n)``; ``R`` clips u at zero on the
    half-plane ``Re w <= b_n``; ``R_tilde`` mollifies R at radius ``r_n/4``;
    ``rho(z) = R_tilde(a_n z / r_n)``.
    """

    def __init__(self, log_a: float, log_r: float, order=DEFAULT_ORDER):
        self.log_a = float(log_a)
        self.log_r = float(log_r)
        self.b = solve_bn(log_a=self.log_a)
        self.eps = math.exp(self.log_r) / 4.0
        self.zero_radius = _zero_radius(self.log_a)
        self.scale = math.exp(self.log_a - self.log_r)
        self.order = order
        self._moll = Mollifier(self.R, self.eps, order)

    def u(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        with np.errstate(divide="ignore"):
            return 0.125 - w.real + np.log(np.abs(w)) / (4.0 * self.log_a)

    def R(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        u = self.u(w)
        return np.where(w.real <= self.b, np.maximum(u, 0.0), u)

    def R_tilde(self, w, checked: bool = False) -> np.ndarray:
        """Mollified block.

        Far from the clipped set the block is harmonic, so the mean-value
        property gives ``u`` exactly; on the disc of radius ``zero_radius`` the
        block vanishes identically.  Quadrature runs only in between.
        """
        w = np.asarray(w, dtype=complex)
        absw = np.abs(w)
        out = self.u(w)
        out = np.where(absw + self.eps <= self.zero_radius, 0.0, out)
        band = (absw < self.b + self.eps) & (absw + self.eps > self.zero_radius)
        if np.any(band):
            out = np.array(out, dtype=float)
            out[band] = self._moll.checked(w[band]) if checked else self._moll(w[band])
        return out

    def rho(self, z, checked: bool = False) -> np.ndarray:
        return self.R_tilde(self.scale * np.asarray(z, dtype=complex), checked)


# -- schedules -----------------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    """Parameter sequences indexed by n = 1..N, stored as natural logs."""

    a: float
    mode: str
    param: float
    N: int
    log_a_n: np.ndarray
    log_r_n: np.ndarray
    log_delta_n: np.ndarray
    selected: tuple[int, ...]

    @property
    def indices(self) -> np.ndarray:
        return np.arange(1, self.N + 1)

    def _at(self, arr, n):
        if not 1 <= n <= self.N:
            raise IndexError(f"index {n} outside 1..{self.N}")
        return float(arr[n - 1])

    def log_value(self, name: str, n: int) -> float:
        """Natural log of a named quantity at index n."""
        if name == "a":
            return self._at(self.log_a_n, n)
        if name == "r":
            return self._at(self.log_r_n, n)
        if name == "delta":
            return self._at(self.log_delta_n, n)
        if name == "A":
            return float(self.log_A_n[n - 1])
        if name in EXPONENTS:
            return EXPONENTS[name] * self._at(self.log_r_n, n)
        raise KeyError(name)

    def value(self, name: str, n: int) -> float:
        return float(_exp(self.log_value(name, n)))

    def eps_n(self, n: int) -> float:
        return self.value("r", n) / 4.0

    @property
    def a_n(self) -> np.ndarray:
        return _exp(self.log_a_n)

    @property
    def r_n(self) -> np.ndarray:
        return _exp(self.log_r_n)

    @property
    def delta_n(self) -> np.ndarray:
        return _exp(self.log_delta_n)

    @cached_property
    def log_A_n(self) -> np.ndarray:
        """``log(1/2 + a_n/r_n + log(1/r_n) / (4 log a_n))``; nan where a_n <= 1."""
        out = np.full(self.N, np.nan)
        for k, (la, lr) in enumerate(zip(self.log_a_n, self.log_r_n)):
            if la > 0:
                out[k] = np.logaddexp(la - lr, math.log(0.5 + (-lr) / (4.0 * la)))
        return out

    @cached_property
    def log_b_n(self) -> np.ndarray:
        out = np.full(self.N, np.nan)
        for k, la in enumerate(self.log_a_n):
            try:
                out[k] = math.log(solve_bn(log_a=la))
            except (NoRootError, ScheduleError):
                pass
        return out

    def exponent_identity_holds(self) -> bool:
        """``-C_n + K_n c_n >= 0`` in exponent arithmetic."""
        return EXPONENTS["K"] + EXPONENTS["c"] == EXPONENTS["C"]

    def to_json(self) -> dict:
        key = "eps" if self.mode == "part1" else "alpha"
        return {"a": self.a, "mode": self.mode, key: self.param, "N": self.N, "S": list(self.selected)}


def _sequences(a: float, mode: str, param: float, n: np.ndarray):
    log_a = math.log(a)
    three_n = 3.0 ** n
    log_delta = -three_n * log_a
    if mode == "part1":
        log_an = param * three_n * log_a
    else:
        log_an = param * np.log(three_n * log_a)
    return log_an, -log_an, log_delta


def _check_params(a, mode, param, strict=True):
    if not a > 1:
        raise ScheduleError(f"need a > 1, got {a}")
    if mode == "part1":
        if not 0 < param < (1 / 3 if strict else 1):
            raise ScheduleError(f"part1 needs 0 < eps < 1/3, got {param}")
    elif mode == "part2":
        if not param > 0:
            raise ScheduleError(f"part2 needs alpha > 0, got {param}")
    else:
        raise ScheduleError(f"unknown mode {mode!r}")


def schedule(a: float, mode: str, N: int, param: float, selected=None, strict: bool = True) -> Schedule:
    """Build a schedule; ``param`` is eps for part1 and alpha for part2.

    ``strict=False`` admits part1 exponents up to 1 so that failing
    parameter choices can be diagnosed.
    """
    _check_params(a, mode, param, strict)
    if N < 1:
        raise ScheduleError("N must be at least 1")
    log_an, log_rn, log_dn = _sequences(a, mode, param, np.arange(1, N + 1))
    s = Schedule(float(a), mode, float(param), int(N), log_an, log_rn, log_dn, ())
    if selected is None:
        selected = tuple(range(1, N + 1)) if mode == "part1" else _greedy(s, N)
    object.__setattr__(s, "selected", tuple(int(k) for k in selected))
    return s


def _compatible(s: Schedule, last: int, cand: int, log_tol: float = 1e-9) -> bool:
    """``r_cand <= r_last^2 / a_last`` and ``delta_cand <= delta_last / (A_cand 2^cand)``."""
    lr = s.log_r_n
    la = s.log_a_n
    ld = s.log_delta_n
    scale = log_tol * max(1.0, abs(lr[cand - 1]))
    if lr[cand - 1] > 2 * lr[last - 1] - la[last - 1] + scale:
        return False
    lA = s.log_A_n[cand - 1]
    if not np.isfinite(lA):
        return False
    return ld[cand - 1] <= ld[last - 1] - lA - cand * math.log(2.0)


def _greedy(s: Schedule, N: int) -> tuple[int, ...]:
    kept = [1]
    for cand in range(2, N + 1):
        if _compatible(s, kept[-1], cand):
            kept.append(cand)
    return tuple(kept)


def subsequence_select(s: Schedule) -> tuple[int, ...]:
    """Indices kept by a greedy scan; all indices for part1 schedules."""
    if s.mode == "part1":
        for n in range(1, s.N):
            scale = 1e-9 * max(1.0, abs(s.log_r_n[n]))
            if s.log_r_n[n] > 2 * s.log_r_n[n - 1] - s.log_a_n[n - 1] + scale:
                raise ScheduleError(f"radius constraint fails between {n} and {n + 1}")
        return tuple(range(1, s.N + 1))
    kept = _greedy(s, s.N)
    if len(kept) < 2:
        raise ScheduleError(f"only {len(kept)} index selected up to N={s.N}; increase N")
    return kept


def check_An_inequality(s: Schedule, N: int | None = None) -> int:
    """Smallest n0 with ``delta_n <= delta_{n-1} / (A_n 2^n)`` for all n0 <= n <= N.

    ``delta_0`` follows the same closed form as the other terms.
    """
    N = s.N if N is None else N
    log_a = math.log(s.a)
    holds = []
    for n in range(1, N + 1):
        prev = -(3.0 ** (n - 1)) * log_a
        lA = s.log_A_n[n - 1]
        holds.append(bool(np.isfinite(lA) and s.log_delta_n[n - 1] <= prev - lA - n * math.log(2.0)))
    if not holds[-1]:
        raise InequalityError(f"inequality fails at n = {N}; parameters out of range")
    n0 = N
    while n0 > 1 and holds[n0 - 2]:
        n0 -= 1
    return n0


# -- lifting to the cusp --------------------------------------------------------

_CUBE_ROOTS_OF_UNITY = np.exp(2j * np.pi * np.arange(3) / 3)


def _principal_cbrt(s):
    s = np.asarray(s, dtype=complex)
    return np.cbrt(np.abs(s)) * np.exp(1j * np.angle(s) / 3.0)


def nearest_branch(p) -> tuple[np.ndarray, np.ndarray]:
    """Cube root zeta of s whose point (zeta^3, zeta^2) on V is nearest p, and that distance."""
    p = as_points(p, 2)
    s, t = p[..., 0], p[..., 1]
    cand = _principal_cbrt(s)[..., None] * _CUBE_ROOTS_OF_UNITY
    dist = np.abs(t[..., None] - cand**2)
    k = np.argmin(dist, axis=-1)
    zeta = np.take_along_axis(cand, k[..., None], -1)[..., 0]
    return zeta, np.take_along_axis(dist, k[..., None], -1)[..., 0]


@dataclass(frozen=True)
class Projection:
    point: np.ndarray
    zeta: complex
    distance: float


def project_to_V(p, beta: float, tube_width: float | None = None) -> Projection | None:
    """Project p onto V = {s^2 = t^3} along t.

    Raises inside the ball of radius ``3 beta / 4``.  With ``tube_width`` given,
    returns None when the squared distance is not below ``tube_width^2``.
    """
    p = np.asarray(p, dtype=complex)
    if np.linalg.norm(p) <= 0.75 * beta:
        raise ProjectionError("point lies in the inner ball where the projection is undefined")
    zeta, dist = nearest_branch(p)
    zeta = complex(zeta)
    dist = float(dist)
    if tube_width is not None and not dist**2 < tube_width**2:
        return None
    return Projection(np.array([p[0], zeta**2]), zeta, dist)


def smooth_cutoff(x) -> np.ndarray:
    """C-infinity, equal to 1 on [0, 1/2] and 0 on [1, inf)."""
    x = np.asarray(x, dtype=float)

    def phi(t):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)

    a = phi(1.0 - x)
    b = phi(x - 0.5)
    return a / (a + b)


def q_eval(p) -> np.ndarray:
    """``exp(|s|^2 + |t|^2) |s^2 - t^3|^2``."""
    p = as_points(p, 2)
    s, t = p[..., 0], p[..., 1]
    return np.exp(np.sum(np.abs(p) ** 2, axis=-1)) * np.abs(s**2 - t**3) ** 2


def q_levi_lower(p, X) -> np.ndarray:
    """Lower bound ``|s^2 - t^3|^2 |X|^2`` for the Levi form of q."""
    p = as_points(p, 2)
    X = np.asarray(X, dtype=complex)
    return np.abs(p[..., 0] ** 2 - p[..., 1] ** 3) ** 2 * np.sum(np.abs(X) ** 2, axis=-1)


def rho_n(s: Schedule, n: int, order=DEFAULT_ORDER) -> Block:
    return Block(s.log_value("a", n), s.log_value("r", n), order)


def p_n_from_tube(block: Block, d_n: float, zeta, dist2) -> np.ndarray:
    """Block value at zeta weighted by the shell cutoff of the squared distance."""
    dist2 = np.asarray(dist2, dtype=float)
    ratio = dist2 / d_n**2 if d_n > 0 else np.where(dist2 > 0, np.inf, 0.0)
    inside = ratio < 1
    out = np.zeros(np.shape(dist2))
    if np.any(inside):
        z = np.asarray(zeta, dtype=complex)[inside]
        out[inside] = block.rho(z) * smooth_cutoff(ratio[inside])
    return out


def p_n_eval(s: Schedule, n: int, p, block: Block | None = None) -> np.ndarray:
    """Lifted block of index n: zero on the ball of radius beta_n and off the tube."""
    block = rho_n(s, n) if block is None else block
    p = as_points(p, 2)
    beta = s.value("beta", n)
    d = s.value("d", n)
    zeta, dist = nearest_branch(p)
    outside_ball = np.linalg.norm(p, axis=-1) >= beta
    dist2 = np.where(outside_ball, dist**2, np.inf)
    return p_n_from_tube(block, d, zeta, dist2)


# -- the assembled domain --------------------------------------------------------

def _log_sup_block(log_a: float, log_r: float) -> float:
    """Log of an upper bound for |rho_n| on the part of V inside B(0, 2)."""
    # |zeta|^6 + |zeta|^4 <= 4 forces |zeta| <= sqrt(2); |u| <= 1 + 2|w| there.
    return math.log(2.0) + np.logaddexp(0.0, log_a - log_r + math.log(math.sqrt(2.0) + 1.0))


LOG_SUP_Q = 4.0 + 2 * math.log(12.0)


def _log_sup_g(log_a: float, log_r: float) -> float:
    return float(np.logaddexp(_log_sup_block(log_a, log_r), EXPONENTS["K"] * log_r + LOG_SUP_Q))


@dataclass
class FLDomain:
    schedule: Schedule
    N: int
    active: tuple[int, ...]
    dropped: dict
    blocks: dict
    log_tail_bound: float
    tau_tail: float
    sup_rho: float
    order: tuple = DEFAULT_ORDER
    diagnostics: dict = field(default_factory=dict)

    def p_n(self, n: int, p) -> np.ndarray:
        return p_n_eval(self.schedule, n, p, self.blocks[n])

    def g_n(self, n: int, p) -> np.ndarray:
        return self.p_n(n, p) + self.schedule.value("K", n) * q_eval(p)

    def term(self, n: int, p) -> np.ndarray:
        """``delta_n g_n`` with the huge and tiny factors combined in log space."""
        s = self.schedule
        coef_p = s.value("delta", n)
        coef_q = float(_exp(s.log_value("delta", n) + s.log_value("K", n)))
        return coef_p * self.p_n(n, p) + coef_q * q_eval(p)

    def rho_tilde(self, p) -> np.ndarray:
        p = as_points(p, 2)
        out = np.zeros(p.shape[:-1])
        for n in self.active:
            out = out + self.term(n, p)
        return out

    def defining_function(self, z) -> np.ndarray:
        z = as_points(z, 3)
        return z[..., 2].real + self.rho_tilde(z[..., :2])

    def tail_bound(self) -> float:
        return float(_exp(self.log_tail_bound))

    def descriptor(self) -> dict:
        d = self.schedule.to_json()
        d.update({"kind": "fornaess-lee", "N": self.N, "tau_tail": self.tau_tail,
                  "quad_order": list(self.order)})
        return d

    def domain(self) -> Domain:
        return Domain(
            name=f"fl:{json.dumps(self.descriptor(), sort_keys=True)}",
            n=3,
            r=self.defining_function,
            radius=AMBIENT_RADIUS,
            witness=np.array([0, 0, -0.5], dtype=complex),
            boundary_point=np.zeros(3, dtype=complex),
            smoothness=np.inf,
            meta={"fl": self},
        )

    def psh_report(self, n_points: int = 1000, seed: int = 0) -> dict:
        """Sampled least Levi eigenvalues of each term and of rho_tilde on B(0, 2)."""
        pts = sample_ball(2, AMBIENT_RADIUS, n_points, seed)
        report = {}
        funcs = {f"term{n}": (lambda p, n=n: self.term(n, p)) for n in self.active}
        funcs["rho_tilde"] = self.rho_tilde
        for name, f in funcs.items():
            lam = min_levi_eigenvalue(f, pts)
            vals = np.abs(f(pts))
            worst = float(np.min(lam + PSH_REL_TOL * (1.0 + vals)))
            report[name] = {
                "min_eigenvalue": float(np.min(lam)),
                "min_relative": float(np.min(lam / np.maximum(vals, np.finfo(float).tiny))),
                "margin": worst,
                "passed": worst >= 0,
            }
        return report

    def block_subharmonicity(self, n: int, n_points: int = 256, seed: int = 0) -> float:
        """Least sampled Laplacian of rho_n relative to its local size, near the clipped region."""
        block = self.blocks[n]
        rng = np.random.default_rng(seed)
        radius = 1.5 * (block.b + block.eps) / block.scale
        z = radius * np.sqrt(rng.random(n_points)) * np.exp(2j * np.pi * rng.random(n_points))
        h = 0.05 * block.eps / block.scale
        lap = laplacian(lambda w: block.rho(w[..., 0]), z[:, None], h=h)
        size = np.max(np.abs(block.rho(z))) / radius**2 + np.finfo(float).tiny
        return float(np.min(lap) / size)


def _tail_indices(s: Schedule, N: int, extra: int = 8) -> list[int]:
    """Indices beyond N that would be summed, continuing the same selection rule."""
    longer = schedule(s.a, s.mode, N + extra, s.param, selected=(), strict=False)
    if s.mode == "part1":
        return list(range(N + 1, N + extra + 1))
    kept = list(s.selected) or [1]
    out = []
    for cand in range(N + 1, N + extra + 1):
        if _compatible(longer, kept[-1], cand):
            kept.append(cand)
            out.append(cand)
    return out


def build_fl_domain(s: Schedule, N: int | None = None, tau_tail: float = 1e-12,
                    order=DEFAULT_ORDER, psh_points: int = 256, seed: int = 0) -> FLDomain:
    """Assemble rho_tilde from the selected indices up to N whose block is constructible.

    Indices whose ``b_n`` has no root (``a_n`` too small) are dropped and
    reported; any subsequence satisfying the selection constraints is admissible.
    """
    N = s.N if N is None else int(N)
    if N > s.N:
        raise ScheduleError(f"truncation {N} exceeds schedule length {s.N}")
    active, dropped, blocks = [], {}, {}
    for n in s.selected:
        if n > N:
            continue
        try:
            blocks[n] = rho_n(s, n, order)
            active.append(n)
        except NoRootError as exc:
            dropped[n] = str(exc)
    if not active:
        raise ScheduleError("no constructible block up to N; increase a or eps")

    longer = schedule(s.a, s.mode, N + 8, s.param, selected=(), strict=False)
    tail_terms = [
        longer.log_delta_n[m - 1] + _log_sup_g(longer.log_a_n[m - 1], longer.log_r_n[m - 1])
        for m in _tail_indices(s, N)
    ]
    log_tail = float(np.logaddexp.reduce(tail_terms)) if tail_terms else -np.inf

    fl = FLDomain(s, N, tuple(active), dropped, blocks, log_tail, tau_tail, 0.0, tuple(order))
    pts = sample_ball(2, AMBIENT_RADIUS, 4096, seed + 1)
    fl.sup_rho = float(np.max(np.abs(fl.rho_tilde(pts))))
    if fl.sup_rho > 0 and log_tail > math.log(tau_tail) + math.log(fl.sup_rho):
        raise TailBoundError(f"tail bound {fl.tail_bound():.3e} exceeds {tau_tail:g} * sup {fl.sup_rho:.3e}")
    if psh_points:
        report = fl.psh_report(psh_points, seed)
        fl.diagnostics["psh"] = report
        bad = [k for k, v in report.items() if not v["passed"]]
        if bad:
            raise PlurisubharmonicityError(f"sampled Levi form negative for {bad}")
    return fl


def _parse_base(text: str) -> float:
    """Parse ``2^30``, ``2**30``, ``e``, ``e^2`` or a plain number."""

    def number(t):
        return math.e if t.strip() == "e" else float(t)

    text = text.strip()
    for op in ("**", "^"):
        if op in text:
            base, exp = text.split(op, 1)
            return number(base) ** float(exp)
    return number(text)


def fl_domain_from_descriptor(arg) -> Domain:
    """Rebuild the 3-D domain from a JSON file, a JSON string, a dict or ``key=value`` pairs."""
    if isinstance(arg, dict):
        spec = dict(arg)
    else:
        text = str(arg).strip()
        if text.startswith("{"):
            spec = json.loads(text)
        elif os.path.exists(text):
            with open(text) as fh:
                spec = json.load(fh)
        else:
            spec = {}
            for part in text.split(","):
                if part.strip():
                    k, _, v = part.partition("=")
                    spec[k.strip()] = v.strip()
    a = _parse_base(str(spec.get("a", "2^30")))
    mode = str(spec.get("mode", "part1"))
    param = float(spec.get("eps", 0.02) if mode == "part1" else spec.get("alpha", 1.0))
    N = int(spec.get("N", 3))
    sched = schedule(a, mode, N, param, selected=spec.get("S"))
    order = tuple(spec.get("quad_order", DEFAULT_ORDER))
    fl = build_fl_domain(sched, N, float(spec.get("tau_tail", 1e-12)), order=order)
    return fl.domain()


# -- smoothness certificates -----------------------------------------------------

def m_k(k: int) -> int:
    return max(38, 9 * k + 2)


@dataclass(frozen=True)
class SmoothnessCertificate:
    k: int
    m_k: int
    converges: bool
    log_terms: np.ndarray
    log_ratios: np.ndarray
    partial_sums: np.ndarray
    one_dim_exponent: int
    one_dim_converges: bool


def smoothness_certificate(s: Schedule, k: int, n_terms: int = 8) -> SmoothnessCertificate:
    """Term-ratio test for ``sum delta_n / r_n^(m_k)`` with terms ``a^((m_k eps - 1) 3^n)``.

    The one-variable condition has terms ``delta_n a_n^(k+1) / r_n^(2k+1)``,
    which is ``a^(((3k+2) eps - 1) 3^n)`` when ``r_n = 1/a_n``.
    """
    if s.mode != "part1":
        raise ScheduleError("smoothness_certificate needs a part1 schedule; use part2_certificate")
    mk = m_k(k)
    n = np.arange(1, n_terms + 1, dtype=float)
    log_a = math.log(s.a)
    log_terms = (mk * s.param - 1.0) * 3.0**n * log_a
    log_ratios = np.diff(log_terms)
    with np.errstate(over="ignore"):
        partial = np.cumsum(np.exp(log_terms))
    one_dim = 3 * k + 2
    return SmoothnessCertificate(
        k=k, m_k=mk, converges=bool(mk * s.param < 1), log_terms=log_terms, log_ratios=log_ratios,
        partial_sums=partial, one_dim_exponent=one_dim, one_dim_converges=bool(one_dim * s.param < 1),
    )


def part2_certificate(s: Schedule, k_max: int, n_terms: int = 8) -> bool:
    """Ratio test on ``delta_n a_n^k = a^(-3^n) (3^n log a)^(alpha k)`` for every k <= k_max."""
    if s.mode != "part2":
        raise ScheduleError("part2_certificate needs a part2 schedule")
    n = np.arange(1, n_terms + 1, dtype=float)
    log_a = math.log(s.a)
    for k in range(0, k_max + 1):
        log_terms = -(3.0**n) * log_a + s.param * k * np.log(3.0**n * log_a)
        ratios = np.diff(log_terms)
        if not (ratios[-1] < 0 and np.all(np.diff(ratios[-3:]) < 0)):
            return False
    return True
