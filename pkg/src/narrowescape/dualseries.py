"""Dual series equations for the mixed Neumann-Dirichlet problem.

The problem is: find c_0, c_1, ... with

    c_0/2 + sum_n c_n/(1 + H_n) cos(n theta) = 0     on pi - eps < theta < pi
    sum_n n c_n cos(n theta)                 = rhs   on 0 < theta < pi - eps

For the annulus (window on the inner circle) rhs = (R2^2 - R1^2)/2 and
H_n = -2 beta^{2n}/(1 + beta^{2n}) with beta = R1/R2; the rectangle with a
corner window has the same H_n with beta = exp(-pi b/a) and rhs = ab/pi;
H = 0 is the disk.

Two independent solvers are provided. `solve_h1_neumann` goes through Abel
inversion to a Fredholm equation (I - K)h = z and keeps the first two terms
of its Neumann series; its kernel is first order in beta^2, so c_0 carries
an O(beta^4) error. `solve_collocation` treats H_n exactly: it represents
the window flux in a Chebyshev basis with the inverse square-root edge
weight and enforces the Dirichlet condition at points clustered towards the
window edges.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg, special

GL_NODES = 128
SQRT2 = math.sqrt(2.0)


class ConvergenceError(RuntimeError):
    """A solver did not converge; `norm` carries the measured quantity."""

    def __init__(self, msg, norm=None):
        super().__init__(msg)
        self.norm = norm


class ConditioningError(RuntimeError):
    """Least-squares system too ill-conditioned; `cond` is its condition number."""

    def __init__(self, msg, cond=None):
        super().__init__(msg)
        self.cond = cond


# ---------------------------------------------------------------------------
# Quadrature and special functions
# ---------------------------------------------------------------------------

@lru_cache(maxsize=16)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n, a, b):
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def legendre_table(nmax, x):
    """P_0(x) .. P_nmax(x) by the three-term recurrence; shape (nmax+1, len(x))."""
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = x
    for n in range(1, nmax):
        out[n + 1] = ((2 * n + 1) * x * out[n] - n * out[n - 1]) / (n + 1)
    return out


def _clausen_coeffs(nterms=40):
    n = np.arange(1, nterms + 1)
    # |B_2n| / (2n (2n+1)!) written through zeta(2n) to avoid huge factorials
    return special.zeta(2.0 * n) / (n * (2.0 * n + 1.0) * (2.0 * np.pi) ** (2 * n))


_CL2 = _clausen_coeffs()


def clausen2(x):
    """Clausen function Cl_2(x) = -int_0^x log|2 sin(t/2)| dt."""
    x = np.asarray(x, dtype=float)
    y = np.remainder(x + np.pi, 2.0 * np.pi) - np.pi
    ay = np.abs(y)
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = np.where(ay > 0, y - y * np.log(ay), 0.0)
    y2 = y * y
    tail = np.zeros_like(y)
    for c in _CL2[::-1]:
        tail = tail * y2 + c
    v = lead + y * y2 * tail
    return float(v) if v.ndim == 0 else v


def _log_sinc(u):
    # log(sin u / u), smooth and even for |u| < pi
    return np.log(np.sinc(np.asarray(u) / np.pi))


# ---------------------------------------------------------------------------
# Abel-type integrals
# ---------------------------------------------------------------------------

def _half_angles(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(t >= np.pi):
        raise ValueError("t must lie in the open interval (0, pi)")
    return t, np.sin(t / 2.0), np.cos(t / 2.0)


def _abel_nodes(t):
    """Quadrature in the variable tau for the integrals below.

    With s = sqrt((cos u - cos t)/2) and then s = C sinh(w), the integrals
    over u become integrals over w in [0, W], W = asinh(S/C), S = sin(t/2),
    C = cos(t/2). Setting w = W (1 - tau^2) removes the remaining square-root
    behaviour at w = W; S^2 - C^2 sinh^2 w = C^2 sinh(W - w) sinh(W + w).
    """
    t, S, C = _half_angles(t)
    W = np.arcsinh(S / C)
    tau, wt = gauss_legendre(GL_NODES, 0.0, 1.0)
    W_ = W[..., None]
    w = W_ * (1.0 - tau ** 2)
    root = C[..., None] * np.sqrt(np.sinh(W_ * tau ** 2) * np.sinh(W_ * (2.0 - tau ** 2)))
    jac = 2.0 * W_ * tau * wt
    return S, C, w, root, jac


def abel_potential(t):
    """F(t) = int_0^t u sin(u/2) / sqrt(cos u - cos t) du."""
    S, C, w, root, jac = _abel_nodes(t)
    # u = 2 asin(sqrt(S^2 - s^2)) and the integrand becomes 2 sqrt(2) asin(.) dw
    v = 2.0 * SQRT2 * np.sum(np.arcsin(np.minimum(root, 1.0)) * jac, axis=-1)
    return float(v) if np.ndim(v) == 0 else v


def abel_potential_derivative(t):
    """F'(t), obtained by differentiating the regularised integral of F."""
    S, C, w, root, jac = _abel_nodes(t)
    integrand = np.cosh(w) / root
    v = SQRT2 * S * np.sum(integrand * jac, axis=-1)
    return float(v) if np.ndim(v) == 0 else v


def abel_rhs(t, R1, R2):
    """Right-hand side z(t) = ((R2^2 - R1^2)/pi) F'(t) of the Fredholm equation."""
    if not 0 < R1 < R2:
        raise ValueError(f"need 0 < R1 < R2, got R1={R1}, R2={R2}")
    return (R2 ** 2 - R1 ** 2) / math.pi * abel_potential_derivative(t)


def abel_sine_integral(t):
    """int_0^t sin(u/2) sin(u) / sqrt(cos u - cos t) du.

    With s = sqrt((cos u - cos t)/2) this is 2 sqrt(2) int_0^S sqrt(S^2 - s^2) ds,
    evaluated with s = S sin(psi) by Gauss-Legendre.
    """
    t, S, C = _half_angles(t)
    psi, wt = gauss_legendre(GL_NODES, 0.0, np.pi / 2.0)
    v = 2.0 * SQRT2 * S ** 2 * np.sum(np.cos(psi) ** 2 * wt)
    return float(v) if np.ndim(v) == 0 else v


def kernel_tilde(t, s, beta):
    """O(beta^2) Fredholm kernel 2 beta^2 cos^2(s/2) sin(t); the O(beta^4)
    remainder is excluded."""
    if not 0 <= beta < 1:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    return 2.0 * beta ** 2 * np.cos(np.asarray(s) / 2.0) ** 2 * np.sin(np.asarray(t))


# ---------------------------------------------------------------------------
# Problem and solution records
# ---------------------------------------------------------------------------

def _annulus_H(beta):
    def H(n):
        n = np.asarray(n)
        q = beta ** (2.0 * n)
        return np.where(n == 0, 0.0, -2.0 * q / (1.0 + q))
    return H


def _rectangle_H(a, b):
    def H(n):
        n = np.asarray(n)
        # tanh(x) - 1 written as -2/(exp(2x) + 1) to keep small values exact
        x = np.pi * n * b / a
        return np.where(n == 0, 0.0, -2.0 / (np.exp(np.minimum(2.0 * x, 700.0)) + 1.0))
    return H


def _zero_H(n):
    return np.zeros(np.shape(n))


@dataclass(frozen=True)
class DualSeriesProblem:
    """H: callable n -> H_n (vectorised, H_0 = 0); rhs: constant on the
    reflecting arc; eps_ang: window half-angle; N: number of coefficients."""
    H: object
    rhs: float
    eps_ang: float
    N: int = 64
    label: str = "custom"

    def __post_init__(self):
        if not callable(self.H):
            raise ValueError("H must be callable")
        if not self.rhs > 0:
            raise ValueError(f"rhs must be positive, got {self.rhs}")
        if not 0 < self.eps_ang < np.pi:
            raise ValueError(f"eps_ang must lie in (0, pi), got {self.eps_ang}")
        if int(self.N) != self.N or self.N < 8:
            raise ValueError(f"N must be an integer >= 8, got {self.N}")
        if float(self.H(0)) != 0.0:
            raise ValueError("H_0 must vanish")
        rate = self.decay_rate()
        if not rate < 1.0:
            raise ValueError(f"H_n does not decay geometrically (fitted ratio {rate:.3g})")

    @classmethod
    def annulus(cls, R1, R2, eps_ang, N=64):
        if not 0 < R1 < R2:
            raise ValueError(f"need 0 < R1 < R2, got R1={R1}, R2={R2}")
        return cls(_annulus_H(R1 / R2), 0.5 * (R2 ** 2 - R1 ** 2), eps_ang, N, "annulus")

    @classmethod
    def rectangle(cls, a, b, eps_len, N=64):
        if not 0 < eps_len < a:
            raise ValueError(f"window length must lie in (0, a), got {eps_len}")
        return cls(_rectangle_H(a, b), a * b / np.pi, np.pi * eps_len / a, N, "rectangle")

    @classmethod
    def disk(cls, rhs, eps_ang, N=64):
        return cls(_zero_H, rhs, eps_ang, N, "disk")

    def decay_rate(self):
        """Fitted geometric ratio |H_{n+1}/H_n| over n = 1..min(N, 40)."""
        n = np.arange(1, min(self.N, 40) + 1)
        h = np.abs(np.asarray(self.H(n), dtype=float))
        keep = h > 1e-280
        if keep.sum() < 2:
            return 0.0
        slope = np.polyfit(n[keep], np.log(h[keep]), 1)[0]
        return float(np.exp(slope))

    @property
    def beta(self):
        """Geometry ratio recovered from H_1 = -2 beta^2/(1 + beta^2)."""
        h1 = float(self.H(1))
        return math.sqrt(max(-h1 / (2.0 + h1), 0.0))

    def H_terms(self, tol=1e-17, nmax=20000):
        """H_1..H_m with m the last index where |H_n| >= tol (at least N)."""
        n = np.arange(1, nmax + 1)
        h = np.asarray(self.H(n), dtype=float)
        big = np.nonzero(np.abs(h) >= tol)[0]
        m = max(self.N, int(big[-1]) + 1 if big.size else 0)
        return h[:m]


@dataclass
class SeriesSolution:
    """c[0..N], sampled h1 (Neumann path only), window flux profile and checks.

    flux_profile holds (theta, G(theta) - rhs) on the window, where G is the
    flux series sum n c_n cos(n theta); for the annulus the outward normal
    derivative of the MFPT is (G - rhs)/R1.
    """
    c: np.ndarray
    h1: tuple | None
    flux_profile: tuple
    compatibility_residual: float
    method: str
    residuals: dict = field(default_factory=dict)
    _coef: object = field(default=None, repr=False)

    @property
    def c0(self):
        return float(self.c[0])

    def coefficient(self, n):
        """c_n for arbitrary n >= 1 (beyond the stored truncation)."""
        return self._coef(np.asarray(n))

    def cosine_sum(self, r, phi, tol=1e-15, nmax=200000):
        """sum_{n>=1} c_n r^n cos(n phi) for 0 <= r <= 1 (arrays broadcast)."""
        r = np.asarray(r, dtype=float)
        phi = np.asarray(phi, dtype=float)
        rmax = float(np.max(r)) if r.size else 0.0
        if rmax < 1.0:
            m = int(min(nmax, max(self.c.size - 1, math.ceil(math.log(tol) / math.log(max(rmax, 1e-300))))))
        else:
            m = nmax
        n = np.arange(1, m + 1)
        cn = self.coefficient(n)
        rb, pb = np.broadcast_arrays(r, phi)
        out = np.empty(rb.shape)
        for idx in np.ndindex(rb.shape):
            out[idx] = np.sum(cn * rb[idx] ** n * np.cos(n * pb[idx]))
        return float(out) if out.ndim == 0 else out

    def to_dict(self):
        return {
            "c": [float(v) for v in self.c],
            "c0": self.c0,
            "compatibility_residual": float(self.compatibility_residual),
            "method": self.method,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    def flux_csv(self):
        lines = ["angle,flux"]
        for a, f in zip(*self.flux_profile):
            lines.append(f"{float(a)!r},{float(f)!r}")
        return "\n".join(lines) + "\n"


def annulus_mean_mfpt(c0, R1, R2, D=1.0):
    """Average MFPT over the annulus from the dual-series constant c0.

    The MFPT is w(r) + c0/2 + (terms with zero angular mean), where
    w = (R1^2 - r^2)/4 + (R2^2/2) log(r/R1) solves the inhomogeneous problem
    with w(R1) = 0 and no flux at R2, so the average is c0/2 + mean(w).
    """
    k = R2 ** 2 - R1 ** 2
    mean_w = -k / 8.0 - R2 ** 2 / 4.0 + R2 ** 4 * math.log(R2 / R1) / (2.0 * k)
    return (0.5 * c0 + mean_w) / D


def _chebyshev_window(eps, m):
    """Window angles pi + eps*y at Chebyshev points y in (-1, 0]."""
    y = -np.cos(np.pi * (np.arange(m) + 0.5) / (2 * m))
    return np.pi + eps * y, y


# ---------------------------------------------------------------------------
# Neumann-series solver
# ---------------------------------------------------------------------------

def _fredholm_grid(T):
    """Nodes/weights on (0, T) suited to integrands growing like tan(t/2) at T.

    [0, min(pi/2, T)] uses plain Gauss-Legendre; beyond pi/2 the variable
    lambda = -log cos(t/2) makes tan(t/2) dt = 2 d(lambda) uniform.
    """
    a = min(np.pi / 2.0, T)
    t1, w1 = gauss_legendre(GL_NODES, 0.0, a)
    if T <= np.pi / 2.0:
        return t1, w1
    l0, l1 = -math.log(math.cos(a / 2.0)), -math.log(math.cos(T / 2.0))
    lam, wl = gauss_legendre(GL_NODES, l0, l1)
    t2 = 2.0 * np.arccos(np.exp(-lam))
    w2 = wl * 2.0 / np.tan(t2 / 2.0)
    return np.concatenate([t1, t2]), np.concatenate([w1, w2])


def solve_h1_neumann(problem):
    """Solve the Fredholm equation (I - K)h = z by h = z + K z and build the
    dual-series coefficients from h.

    K(t, s) = 2 beta^2 cos^2(s/2) sin t with beta from problem.beta, and
    z(t) = (2 rhs/pi) F'(t). Raises ConvergenceError when the L2 norm of K on
    (0, pi - eps) is not below 1.
    """
    eps = problem.eps_ang
    T = np.pi - eps
    beta = problem.beta
    rhs = problem.rhs
    t, w = _fredholm_grid(T)

    # rank-one kernel: ||K|| = 2 beta^2 ||sin t|| ||cos^2(s/2)||
    norm = 2.0 * beta ** 2 * math.sqrt(np.sum(w * np.sin(t) ** 2) * np.sum(w * np.cos(t / 2.0) ** 4))
    if not norm < 1.0:
        raise ConvergenceError(f"Neumann series does not contract: ||K|| = {norm:.4g} >= 1", norm)

    z = 2.0 * rhs / np.pi * abel_potential_derivative(t)
    kappa = 2.0 * beta ** 2 * np.sum(w * np.cos(t / 2.0) ** 2 * z)
    Kz = kappa * np.sin(t)
    h = z + Kz
    c0 = SQRT2 * np.sum(w * h)
    first_order = float(np.sum(w * Kz))

    Hn_all = problem.H_terms()

    def coef(n):
        n = np.atleast_1d(np.asarray(n, dtype=int))
        nmax = int(n.max())
        P = legendre_table(nmax, np.cos(t))
        integ = (P[1:] + P[:-1]) @ (w * h)
        Hn = np.asarray(problem.H(np.arange(1, nmax + 1)), dtype=float)
        full = (1.0 + Hn) / SQRT2 * integ
        return full[n - 1]

    N = problem.N
    c = np.concatenate([[c0], coef(np.arange(1, N + 1))])

    # On the window, S(theta) = sum c_n sin(n theta) splits into the Abel part
    # cos(theta/2) int_0^T h/sqrt(cos t - cos theta) dt, closed form because h
    # lies in span{tan(t/2), sin t}, plus sum H_n/(1+H_n) c_n sin(n theta).
    A = SQRT2 * rhs  # z(t) = A tan(t/2)
    cT = math.sin(eps / 2.0)
    m = len(Hn_all)
    cm = coef(np.arange(1, m + 1))
    n_h = np.arange(1, m + 1)
    g_h = Hn_all / (1.0 + Hn_all) * cm

    def S(theta):
        a = np.cos(theta / 2.0)
        s = np.sin(theta / 2.0)
        r = np.sqrt(np.maximum(cT ** 2 - a ** 2, 0.0))
        P = SQRT2 * (np.arccos(a) - np.arccos(np.minimum(a / cT, 1.0)))
        Q = 2.0 * SQRT2 * a * (s - r)
        return A * P + kappa * Q + np.sin(np.multiply.outer(theta, n_h)) @ g_h

    def G(theta):
        a = np.cos(theta / 2.0)
        s = np.sin(theta / 2.0)
        r = np.sqrt(cT ** 2 - a ** 2)
        dP = 0.5 * SQRT2 * (1.0 - s / r)
        dQ = SQRT2 * (-s ** 2 + s * r + a ** 2 - a ** 2 * s / r)
        return A * dP + kappa * dQ + np.cos(np.multiply.outer(theta, n_h)) @ (n_h * g_h)

    theta, _ = _chebyshev_window(eps, 2 * N)
    flux = G(theta) - rhs
    compat = abs(float(S(np.array([T]))[0]) - rhs * T) / (np.pi * rhs)
    residuals = {"operator_norm": norm, "first_order": first_order, "kappa": kappa,
                 "tail_ratio": abs(c[-1]) / abs(c[1])}
    return SeriesSolution(c=c, h1=(t, h), flux_profile=(theta, flux), compatibility_residual=compat,
                          method="neumann-series", residuals=residuals, _coef=coef)


# ---------------------------------------------------------------------------
# Collocation oracle
# ---------------------------------------------------------------------------

def solve_collocation(problem, M=None, K=None, cond_max=1e12):
    """Least-squares solve of the dual series with an edge-singular window flux.

    The flux series G(theta) = sum n c_n cos(n theta) equals rhs on the
    reflecting arc; on the window, theta = pi + eps*x, it is represented as

        G = sum_{k=0}^{K} alpha_k T_{2k}(x) / sqrt(1 - x^2),

    which carries the inverse square-root singularity at the window edges.
    The constant Fourier mode of G must vanish, which fixes
    alpha_0 = -2 rhs (pi - eps)/(pi eps). The c_n then follow in closed form
    (Bessel functions J_{2k}(n eps)), and the Dirichlet condition
    c_0/2 + sum c_n/(1+H_n) cos(n theta) = 0 is imposed at M Chebyshev points
    of the window using the log-kernel identity
    sum cos(n theta) cos(n phi)/n = -1/2 log|2(cos theta - cos phi)|.
    Unknowns are c_0 and alpha_1..alpha_K.
    """
    eps = problem.eps_ang
    rhs = problem.rhs
    N = problem.N
    M = 2 * N if M is None else int(M)
    K = min(N // 2, 32) if K is None else int(K)
    if M < 2 * N:
        raise ValueError(f"need M >= 2N collocation points, got M={M}, N={N}")
    if M < K + 1:
        raise ValueError("more unknowns than collocation points")

    alpha0 = -2.0 * rhs * (np.pi - eps) / (np.pi * eps)
    k = np.arange(K + 1)
    sign_k = (-1.0) ** k

    # collocation points on the half window (the solution is even about pi)
    theta, y = _chebyshev_window(eps, M)

    # Gauss-Chebyshev nodes for the smooth part of the log kernel
    J = 2 * K + 64
    xj = np.cos(np.pi * (np.arange(J) + 0.5) / J)
    Tj = np.cos(np.multiply.outer(2 * k, np.arccos(xj)))            # (K+1, J)

    def window_kernel(yy):
        """Window part of sum_n c_n cos(n theta) per unit alpha_k, (len(yy), K+1).

        log|2(cos phi - cos theta)| at phi = pi + eps x, theta = pi + eps y is
        2 log(eps/2) + log 4 + log|x+y| + log|x-y| + sigma(eps(x+y)/2) + sigma(eps(x-y)/2)
        with sigma(u) = log(sin u/u); the log|x -+ y| parts integrate in closed
        form against the Chebyshev basis and the sigma parts by Gauss-Chebyshev.
        """
        Tyy = np.cos(np.multiply.outer(np.arccos(yy), 2 * k))
        sm = (_log_sinc(eps * np.add.outer(yy, xj) / 2.0)
              + _log_sinc(eps * np.subtract.outer(yy, xj) / 2.0))
        Q = (np.pi / J) * sm @ Tj.T
        sg = np.empty_like(Tyy)
        sg[:, 0] = -np.pi * math.log(2.0)
        sg[:, 1:] = -np.pi * Tyy[:, 1:] / (2 * k[1:])
        const = (2.0 * math.log(eps / 2.0) + 2.0 * math.log(2.0)) * np.pi * (k == 0)
        return -(eps / (2.0 * np.pi)) * (const + 2.0 * sg + Q), Tyy

    kern, Ty = window_kernel(y)
    # reflecting-arc contribution: -(rhs/pi)[Cl2(eps(1+y)) + Cl2(eps(1-y))]
    refl = -(rhs / np.pi) * (clausen2(eps * (1.0 + y)) + clausen2(eps * (1.0 - y)))

    # perturbation sum_n (1/(1+H_n) - 1) c_n cos(n theta)
    Hn = problem.H_terms()
    nH = np.arange(1, len(Hn) + 1)
    g = 1.0 / (1.0 + Hn) - 1.0
    keep = np.abs(g) > 1e-18
    nH, g = nH[keep], g[keep]
    if nH.size:
        jv = special.jv(2 * k[:, None], (nH * eps)[None, :])          # (K+1, m)
        cosy = np.cos(np.multiply.outer(y, nH * eps))                 # (M, m)
        pert_k = eps * (cosy * (g / nH)) @ jv.T * sign_k              # (M, K+1)
        pert_rhs = -(2.0 * rhs / np.pi) * (cosy * (g * np.sin(nH * eps) / nH ** 2)).sum(axis=1)
    else:
        pert_k = np.zeros_like(Ty)
        pert_rhs = np.zeros(M)

    coeff = kern + pert_k
    A = np.column_stack([np.full(M, 0.5), coeff[:, 1:]])
    b = -(refl + pert_rhs + coeff[:, 0] * alpha0)

    # column scaling before measuring conditioning
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    As = A / scale
    sv = linalg.svdvals(As)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if cond > cond_max:
        raise ConditioningError(f"collocation matrix condition number {cond:.3g} exceeds {cond_max:.1g}", cond)
    sol, *_ = linalg.lstsq(As, b)
    sol = sol / scale
    c0 = float(sol[0])
    alpha = np.concatenate([[alpha0], sol[1:]])

    def coef(n):
        n = np.atleast_1d(np.asarray(n, dtype=float))
        jvn = special.jv(2 * k[:, None], (n * eps)[None, :])
        win = 0.5 * eps * np.pi * (alpha * sign_k) @ jvn
        return (-1.0) ** n * (2.0 / (np.pi * n)) * (-rhs * np.sin(n * eps) / n + win)

    c = np.concatenate([[c0], coef(np.arange(1, N + 1))])

    def dirichlet(yy):
        th = np.pi + eps * yy
        kk, _ = window_kernel(yy)
        val = c0 / 2.0 + kk @ alpha - (rhs / np.pi) * (clausen2(eps * (1 + yy)) + clausen2(eps * (1 - yy)))
        if nH.size:
            cn = coef(nH)
            val = val + np.cos(np.multiply.outer(th, nH)) @ (g * cn)
        return val

    res_coll = dirichlet(y)
    ymid = -np.cos(np.pi * np.arange(1, M) / (2 * M))
    res_mid = dirichlet(ymid)

    # window flux G - rhs at the collocation points; the points are the half
    # of a 2M-point Gauss-Chebyshev rule lying in (-1, 0), so the integral of
    # G - rhs over the half window is exact for this basis
    flux = (Ty @ alpha) / np.sqrt(1.0 - y ** 2) - rhs
    total = eps * np.pi / (2 * M) * np.sum(Ty @ alpha) - rhs * eps
    compat = abs(total + np.pi * rhs) / (np.pi * rhs)

    residuals = {
        "dirichlet_rms": float(np.sqrt(np.mean(res_coll ** 2))),
        "dirichlet_max_midpoints": float(np.max(np.abs(res_mid))),
        "condition": cond,
        "tail_ratio": abs(c[-1]) / abs(c[1]),
        "basis_size": K,
        "points": M,
    }
    return SeriesSolution(c=c, h1=None, flux_profile=(theta, flux), compatibility_residual=float(compat),
                          method="collocation", residuals=residuals, _coef=coef)


# ---------------------------------------------------------------------------
# Identities
# ---------------------------------------------------------------------------

def log_integral_identity(n, s, eps, tol=1e-14, max_terms=10000):
    """int_{-eps}^{eps} (s')^n log (s - s')^2 ds' by its power series in s.

    Even n: 4 (eps^{n+1} log(eps)/(n+1) - eps^{n+1}/(n+1)^2)
            - 2 sum_{j>=1} s^{2j} eps^{n-2j+1} / (j (n-2j+1)).
    Odd n:  -4 sum_{j>=0} s^{2j+1} eps^{n-2j} / ((2j+1)(n-2j)).
    Summation stops once a term falls below tol times the running sum (and
    the term ratio is below 1).
    """
    n = int(n)
    if n < 0:
        raise ValueError("n must be a non-negative integer")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not abs(s) < eps:
        raise ValueError(f"series needs |s| < eps, got s={s}, eps={eps}")
    if n % 2 == 0:
        total = 4.0 * (eps ** (n + 1) * math.log(eps) / (n + 1) - eps ** (n + 1) / (n + 1) ** 2)
        j0 = 1
        # s^{2j} eps^{n-2j+1} written as eps^{n+1} q^{2j}, q = s/eps, to avoid overflow
        term_of = lambda j: -2.0 * eps ** (n + 1) * q ** (2 * j) / (j * (n - 2 * j + 1))
    else:
        total = 0.0
        j0 = 0
        term_of = lambda j: -4.0 * eps ** (n + 1) * q ** (2 * j + 1) / ((2 * j + 1) * (n - 2 * j))
    if s == 0:
        return total
    q = s / eps
    for j in range(j0, j0 + max_terms):
        term = term_of(j)
        total += term
        if j > n and abs(term) <= tol * max(abs(total), 1e-300):
            return total
    raise ConvergenceError("log-integral series did not converge")


def heaviside_identity_residual(theta, t, N, r=None):
    """|Abel-summed partial sum - closed form| for
    (1/sqrt 2) sum_n [P_n(cos t) + P_{n-1}(cos t)] sin(n theta)
      = cos(theta/2) H(theta - t) / sqrt(cos t - cos theta).

    The partial sum runs to N with weights r^n; r defaults to 1 - 8/N so
    that the neglected tail r^N is ~3e-4.
    """
    if not (0 < theta < np.pi and 0 < t < np.pi):
        raise ValueError("theta and t must lie in (0, pi)")
    if theta == t:
        raise ValueError("the identity is singular at theta = t")
    r = 1.0 - 8.0 / N if r is None else float(r)
    n = np.arange(1, N + 1)
    P = legendre_table(N, np.array([math.cos(t)]))[:, 0]
    series = np.sum(r ** n * (P[1:] + P[:-1]) * np.sin(n * theta)) / SQRT2
    exact = math.cos(theta / 2.0) / math.sqrt(math.cos(t) - math.cos(theta)) if theta > t else 0.0
    return abs(series - exact)
