"""Linearized geodesic flow: Poincare return maps and discrete Hessian spectra.

The geodesic flow is integrated on the ambient phase space, with the sphere
constraint enforced through a multiplier.  The Lagrangian is the metric
energy of the tangentially projected velocity plus a quadratic penalty term
in the normal velocity; on the constraint manifold this reproduces the
Finsler geodesics while keeping the velocity Hessian invertible, so a
single KKT solve yields the acceleration.

Return maps are taken on a transversal section in Darboux coordinates
(position and momentum components along a basis orthogonal to the orbit),
differentiated by central finite differences, and optionally polished to
an exactly symplectic matrix through the Cayley transform.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import jax
import jax.numpy as jnp
import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConvergenceError, PreconditionError, ResolutionError
from .loops import DiscreteLoop, loop_functions, loop_length
from .manifold import SpaceFormSpec
from .metrics import MetricSpec, metric_fn
from .search import _tangent_basis

FD_STEP = 1e-5
ODE_TOL = 1e-12


@lru_cache(maxsize=32)
def _flow_functions(metric_key: tuple, dim: int):
    """Jitted flow right-hand side, momentum map and velocity Hessian."""
    F = metric_fn(metric_key)

    def lagrangian(x, v):
        vt = v - jnp.dot(x, v) * x
        return 0.5 * F(x, vt) ** 2 + 0.5 * jnp.dot(x, v) ** 2

    L_x = jax.grad(lagrangian, argnums=0)
    L_v = jax.grad(lagrangian, argnums=1)
    L_vv = jax.jacfwd(L_v, argnums=1)
    L_vx = jax.jacfwd(L_v, argnums=0)

    def rhs(state):
        x, v = state[:dim], state[dim:]
        M = L_vv(x, v)
        f = L_x(x, v) - L_vx(x, v) @ v
        # KKT system: M a - mu x = f with the constraint x . a = -|v|^2
        K = jnp.block([[M, -x[:, None]], [x[None, :], jnp.zeros((1, 1))]])
        sol = jnp.linalg.solve(K, jnp.concatenate([f, -jnp.dot(v, v)[None]]))
        return jnp.concatenate([v, sol[:dim]])

    return jax.jit(rhs), jax.jit(L_v), jax.jit(L_vv)


def momentum(m: MetricSpec, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Conjugate momentum of a (not necessarily tangent) velocity."""
    _, L_v, _ = _flow_functions(m.key(), x.size)
    return np.asarray(L_v(jnp.asarray(x), jnp.asarray(v)))


def velocity_from_momentum(m: MetricSpec, x: np.ndarray, p: np.ndarray,
                           tol: float = 1e-13, max_iters: int = 50) -> np.ndarray:
    """Invert the Legendre transform by Newton iteration (exact start for
    the round metric, quadratic convergence for small winds)."""
    _, L_v, L_vv = _flow_functions(m.key(), x.size)
    xj = jnp.asarray(x)
    v = np.asarray(p, dtype=float).copy()
    for _ in range(max_iters):
        r = np.asarray(L_v(xj, jnp.asarray(v))) - p
        if np.linalg.norm(r) <= tol * max(1.0, np.linalg.norm(p)):
            return v
        M = np.asarray(L_vv(xj, jnp.asarray(v)))
        v = v - np.linalg.solve(M, r)
    raise ConvergenceError("Legendre inversion did not converge")


def integrate_geodesic(m: MetricSpec, x0: np.ndarray, v0: np.ndarray, T: float,
                       rtol: float = ODE_TOL, atol: float = ODE_TOL,
                       events=None, dense_output: bool = False):
    """Integrate the geodesic flow for time T from (x0, v0)."""
    rhs, _, _ = _flow_functions(m.key(), x0.size)

    def f(_t, y):
        return np.asarray(rhs(jnp.asarray(y)))

    y0 = np.concatenate([np.asarray(x0, float), np.asarray(v0, float)])
    sol = solve_ivp(f, (0.0, T), y0, method="DOP853", rtol=rtol, atol=atol,
                    events=events, dense_output=dense_output)
    if not sol.success:
        raise ConvergenceError("geodesic flow integration failed: %s" % sol.message)
    return sol


@dataclass(frozen=True)
class PoincareMap:
    """Linearized return map of a closed orbit in Darboux section coordinates."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    period: float
    closure_error: float
    symplectic_defect: float
    symplectic_defect_raw: float
    basis: np.ndarray
    x0: np.ndarray
    v0: np.ndarray


def _standard_J(k: int) -> np.ndarray:
    J = np.zeros((2 * k, 2 * k))
    J[:k, k:] = np.eye(k)
    J[k:, :k] = -np.eye(k)
    return J


def symplectic_defect(P: np.ndarray) -> float:
    k = P.shape[0] // 2
    J = _standard_J(k)
    return float(np.max(np.abs(P.T @ J @ P - J)))


def _cayley_polish(P: np.ndarray) -> np.ndarray:
    """Project to the symplectic group: symmetrize J V in the Cayley image."""
    k = P.shape[0] // 2
    I = np.eye(2 * k)
    J = _standard_J(k)
    if abs(np.linalg.det(P + I)) < 1e-12:
        return P
    V = (P - I) @ np.linalg.inv(P + I)
    W = 0.5 * (J @ V + (J @ V).T)
    V = -J @ W
    if abs(np.linalg.det(I - V)) < 1e-12:
        return P
    return (I + V) @ np.linalg.inv(I - V)


def _section_basis(x0, v0, p0) -> np.ndarray:
    """Orthonormal basis of the complement of span{x0, v0, p0}, shape (dim, dim-2)."""
    dim = x0.size
    span = np.stack([x0, v0, p0])
    q, r = np.linalg.qr(span.T)
    rank = int(np.sum(np.abs(np.diag(r)) > 1e-6 * np.max(np.abs(r))))
    if rank != 2:
        raise ResolutionError(
            "section basis needs momentum parallel to velocity at the base point"
        )
    M = np.eye(dim) - q[:, :2] @ q[:, :2].T
    u, s, _ = np.linalg.svd(M)
    return u[:, : dim - 2]


def poincare_map_from_initial(m: MetricSpec, sf: SpaceFormSpec, x0: np.ndarray, v0: np.ndarray,
                              class_power: int = 1, period_hint: float | None = None,
                              fd_step: float = FD_STEP, polish: bool = True) -> PoincareMap:
    """Linearized return map of the geodesic through (x0, v0) that closes up
    under the class_power-th deck transformation.

    The orbit is integrated at unit metric speed; the Jacobian of the return
    map on the section through (x0, p0) is formed by central differences of
    width fd_step and, when polish is set, replaced by the nearest Cayley
    symplectification.
    """
    F = metric_fn(m.key())
    x0 = np.asarray(x0, float)
    x0 = x0 / np.linalg.norm(x0)
    v0 = np.asarray(v0, float)
    v0 = v0 - np.dot(x0, v0) * x0
    speed = float(F(jnp.asarray(x0), jnp.asarray(v0)))
    if speed <= 0.0:
        raise PreconditionError("initial velocity must be nonzero")
    v0 = v0 / speed
    p0 = momentum(m, x0, v0)
    E = _section_basis(x0, v0, p0)
    dim = x0.size
    k = dim - 2

    Ainv = np.linalg.matrix_power(sf.action, sf.p - (class_power % sf.p)) \
        if sf.p > 1 else np.eye(dim)
    if class_power % sf.p == 0:
        Ainv = np.eye(dim)
    vhat = v0 / np.linalg.norm(v0)

    if period_hint is None:
        period_hint = 2.0 * np.pi

    def section_event(t, y):
        return float((Ainv @ y[:dim]) @ vhat)

    section_event.direction = 1.0
    section_event.terminal = False

    def return_state(xs, ps):
        vs = velocity_from_momentum(m, xs, ps)
        t_lo = 0.6 * period_hint
        sol = integrate_geodesic(m, xs, vs, 1.5 * period_hint, events=section_event)
        times = sol.t_events[0]
        times = times[times > t_lo]
        if times.size == 0:
            raise ConvergenceError("orbit did not return to the section")
        t_star = float(times[np.argmin(np.abs(times - period_hint))])
        sol2 = integrate_geodesic(m, xs, vs, t_star)
        y = sol2.y[:, -1]
        x_ret = Ainv @ y[:dim]
        v_ret = Ainv @ y[dim:]
        p_ret = momentum(m, x_ret, v_ret)
        return x_ret, p_ret, t_star

    x_star, p_star, period = return_state(x0, p0)
    closure = max(np.linalg.norm(x_star - x0), np.linalg.norm(p_star - p0))

    def coords(xs, ps):
        return np.concatenate([E.T @ (xs - x0), E.T @ (ps - p0)])

    def lift(xi):
        xs = x0 + E @ xi[:k]
        xs = xs / np.linalg.norm(xs)
        ps = p0 + E @ xi[k:]
        return xs, ps

    P = np.empty((2 * k, 2 * k))
    for j in range(2 * k):
        e = np.zeros(2 * k)
        e[j] = fd_step
        xp, pp, _ = return_state(*lift(e))
        xm, pm, _ = return_state(*lift(-e))
        P[:, j] = (coords(xp, pp) - coords(xm, pm)) / (2.0 * fd_step)

    raw_defect = symplectic_defect(P)
    if polish:
        P = _cayley_polish(P)
    return PoincareMap(
        matrix=P,
        eigenvalues=np.linalg.eigvals(P),
        period=period,
        closure_error=float(closure),
        symplectic_defect=symplectic_defect(P),
        symplectic_defect_raw=raw_defect,
        basis=E,
        x0=x0,
        v0=v0,
    )


def poincare_map(m: MetricSpec, g, fd_step: float = FD_STEP, polish: bool = True) -> PoincareMap:
    """Return map of a converged closed geodesic (GeodesicRecord or DiscreteLoop)."""
    loop = g.loop if hasattr(g, "loop") else g
    X = loop.samples
    x0 = X[0]
    d = 2.0 * np.arcsin(min(np.linalg.norm(X[1] - X[0]) / 2.0, 1.0))
    v0 = (X[1] - np.cos(d) * x0) / np.sin(d)
    L = loop_length(m, loop)
    return poincare_map_from_initial(m, loop.sf, x0, v0, class_power=loop.class_power,
                                     period_hint=L, fd_step=fd_step, polish=polish)


@dataclass(frozen=True)
class SpectralSummary:
    """Spectral classification of a return map: elliptic height e (unit-circle
    multiplicity), nullity dim ker(P - I), and the hyperbolicity flags."""

    eigenvalues: np.ndarray
    e: int
    nullity: int
    hyperbolic: bool
    nonhyperbolic: bool
    elliptic_angles: tuple


def spectral_summary(P, tol_unit: float = 1e-6) -> SpectralSummary:
    """Classify the spectrum of a PoincareMap or a raw symplectic matrix."""
    mat = P.matrix if isinstance(P, PoincareMap) else np.asarray(P, float)
    ev = np.linalg.eigvals(mat)
    on_circle = np.abs(np.abs(ev) - 1.0) <= tol_unit
    e = int(np.sum(on_circle))
    nullity = int(np.sum(np.linalg.svd(mat - np.eye(mat.shape[0]), compute_uv=False) <= 1e-6))
    angles = tuple(sorted(
        float(np.angle(z)) / (2.0 * np.pi)
        for z in ev[on_circle]
        if tol_unit < np.angle(z) <= np.pi + tol_unit
    ))
    return SpectralSummary(
        eigenvalues=ev,
        e=e,
        nullity=nullity,
        hyperbolic=(e == 0 and nullity == 0),
        nonhyperbolic=(e >= 2),
        elliptic_angles=angles,
    )


def hessian_spectrum(m: MetricSpec, loop: DiscreteLoop) -> np.ndarray:
    """Eigenvalues of the discrete energy Hessian restricted to the tangent
    space of the product of spheres (sphere curvature correction included)."""
    _, _, grad, hess = loop_functions(m, loop)
    X = loop.samples
    N, dim = X.shape
    g = np.asarray(grad(jnp.asarray(X.ravel()))).reshape(N, dim)
    H = np.asarray(hess(jnp.asarray(X.ravel())))
    B = _tangent_basis(X)
    T = np.zeros((N * dim, N * (dim - 1)))
    for i in range(N):
        T[i * dim:(i + 1) * dim, i * (dim - 1):(i + 1) * (dim - 1)] = B[i]
    Ht = T.T @ H @ T
    Ht -= np.diag(np.repeat(np.einsum("ij,ij->i", X, g), dim - 1))
    return np.linalg.eigvalsh(0.5 * (Ht + Ht.T))


def numerical_morse_index(m: MetricSpec, loop: DiscreteLoop,
                          zero_band: float = 1e-7) -> dict:
    """Morse index and nullity estimate from the discrete Hessian spectrum.

    The zero band is zero_band times the spectral radius; one zero mode (the
    phase-shift direction of the closed orbit) is discounted from the nullity.
    An ambiguity flag is raised when eigenvalues sit near the band edge.
    """
    eig = hessian_spectrum(m, loop)
    scale = max(float(np.max(np.abs(eig))), 1e-30)
    eps = zero_band * scale
    neg = int(np.sum(eig < -eps))
    zeros = int(np.sum(np.abs(eig) <= eps))
    outside = np.abs(eig)[np.abs(eig) > eps]
    ambiguous = bool(outside.size and float(np.min(outside)) < 10.0 * eps)
    return {
        "index": neg,
        "nullity_est": max(zeros - 1, 0),
        "zero_modes": zeros,
        "eigenvalues": eig,
        "ambiguous": ambiguous,
        "threshold": eps,
    }
