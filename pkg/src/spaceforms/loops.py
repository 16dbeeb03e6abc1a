"""Twisted discrete loops on the sphere and their Finsler energy.

A loop of homotopy class [h^k] is stored as its lift: N points on S^n with
the closing segment running from x_{N-1} to A^k x_0.  Segments are great
circle arcs; the energy (1/2) int F^2 dt and the length int F dt are
evaluated with a two-point Gauss rule along each arc, which is exact for the
round metric and O(1/N^4) accurate for the Randers family at critical
points.  Gradients come from automatic differentiation and are projected to
the product of tangent spaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import jax
import jax.numpy as jnp

from .errors import PreconditionError, ResolutionError
from .manifold import SpaceFormSpec
from .metrics import MetricSpec, metric_fn

MIN_SAMPLES = 16

# two-point Gauss-Legendre nodes on [0, 1]
_GAUSS_S = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))
_GAUSS_W = (0.5, 0.5)


@dataclass(frozen=True)
class DiscreteLoop:
    """N points on S^n closed through the deck action A^class_power."""

    samples: np.ndarray
    class_power: int
    sf: SpaceFormSpec

    def __post_init__(self):
        X = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", X)
        if X.ndim != 2 or X.shape[1] != self.sf.n + 1:
            raise PreconditionError("sample array must have shape (N, n+1)")
        if X.shape[0] < MIN_SAMPLES:
            raise ResolutionError(f"need at least {MIN_SAMPLES} samples")
        if np.max(np.abs(np.linalg.norm(X, axis=1) - 1.0)) > 1e-12:
            raise PreconditionError("samples must lie on the unit sphere")
        # class_power 0 is the untwisted case (plain loops on the sphere)
        if not 0 <= self.class_power < max(self.sf.p, 1):
            raise PreconditionError("class power must lie in {0, ..., p-1}")

    @property
    def N(self) -> int:
        return self.samples.shape[0]

    @property
    def closure(self) -> np.ndarray:
        """Deck matrix applied to x_0 to close the loop."""
        return self.sf.deck_power(self.class_power)

    def extended(self) -> np.ndarray:
        """Samples with the twisted closing point appended."""
        return np.vstack([self.samples, self.closure @ self.samples[0]])

    def point(self, t: float) -> np.ndarray:
        """Arc interpolation of the lift at parameter t in [0, 1)."""
        Xe = self.extended()
        s, i = np.modf((t % 1.0) * self.N)
        a, b = Xe[int(i)], Xe[int(i) + 1]
        d = _arc_angle(a, b)
        if d < 1e-14:
            q = (1 - s) * a + s * b
        else:
            q = (np.sin((1 - s) * d) * a + np.sin(s * d) * b) / np.sin(d)
        return q / np.linalg.norm(q)


def _arc_angle(a, b) -> float:
    return float(2.0 * np.arcsin(min(np.linalg.norm(np.asarray(b) - np.asarray(a)) / 2.0, 1.0)))


def _segment_geometry(Xe):
    """Arc angles, Gauss-node points and unit tangents for all segments (JAX)."""
    A, B = Xe[:-1], Xe[1:]
    chord = jnp.linalg.norm(B - A, axis=1)
    d = 2.0 * jnp.arcsin(jnp.clip(chord / 2.0, 0.0, 1.0))
    sd = jnp.sin(jnp.where(d > 1e-14, d, 1.0))
    pts, tans = [], []
    for s in _GAUSS_S:
        num_p = jnp.sin((1.0 - s) * d)[:, None] * A + jnp.sin(s * d)[:, None] * B
        num_t = -jnp.cos((1.0 - s) * d)[:, None] * A + jnp.cos(s * d)[:, None] * B
        safe = (d > 1e-14)[:, None]
        p = jnp.where(safe, num_p / sd[:, None], (1.0 - s) * A + s * B)
        t = jnp.where(safe, num_t / sd[:, None], B - A)
        pts.append(p)
        tans.append(t)
    return d, pts, tans


@lru_cache(maxsize=64)
def _loop_functions(metric_key: tuple, sf_key: bytes, shape: tuple, class_power: int):
    """Jitted energy, length, gradient and Hessian for fixed discretization."""
    N, dim = shape
    n = dim - 1
    F = metric_fn(metric_key)
    Fv = jax.vmap(F)
    sf_arr = np.frombuffer(sf_key, dtype=float).reshape(dim, dim)
    A_k = jnp.asarray(np.linalg.matrix_power(sf_arr, class_power))

    def energy(Xflat):
        X = Xflat.reshape(N, dim)
        Xe = jnp.vstack([X, (A_k @ X[0])[None, :]])
        d, pts, tans = _segment_geometry(Xe)
        f2 = sum(w * Fv(p, t) ** 2 for w, p, t in zip(_GAUSS_W, pts, tans))
        return 0.5 * N * jnp.sum(d * d * f2)

    def length(Xflat):
        X = Xflat.reshape(N, dim)
        Xe = jnp.vstack([X, (A_k @ X[0])[None, :]])
        d, pts, tans = _segment_geometry(Xe)
        f1 = sum(w * Fv(p, t) for w, p, t in zip(_GAUSS_W, pts, tans))
        return jnp.sum(d * f1)

    return (
        jax.jit(energy),
        jax.jit(length),
        jax.jit(jax.grad(energy)),
        jax.jit(jax.jacfwd(jax.grad(energy))),
    )


def loop_functions(m: MetricSpec, loop: DiscreteLoop):
    return _loop_functions(
        m.key(), loop.sf.action.tobytes(), loop.samples.shape, loop.class_power
    )


def loop_energy(m: MetricSpec, loop: DiscreteLoop) -> float:
    """Discrete (1/2) int F(c, c')^2 dt of the twisted loop."""
    energy, _, _, _ = loop_functions(m, loop)
    return float(energy(jnp.asarray(loop.samples.ravel())))


def loop_length(m: MetricSpec, loop: DiscreteLoop) -> float:
    """Discrete int F(c, c') dt of the twisted loop."""
    _, length, _, _ = loop_functions(m, loop)
    return float(length(jnp.asarray(loop.samples.ravel())))


def loop_energy_gradient(m: MetricSpec, loop: DiscreteLoop) -> np.ndarray:
    """Energy gradient projected tangent to the product of spheres, shape (N, n+1)."""
    _, _, grad, _ = loop_functions(m, loop)
    g = np.asarray(grad(jnp.asarray(loop.samples.ravel()))).reshape(loop.samples.shape)
    X = loop.samples
    return g - np.einsum("ij,ij->i", g, X)[:, None] * X


def loop_residual(m: MetricSpec, loop: DiscreteLoop) -> float:
    """Sup-norm of the discrete geodesic equation (per-node projected gradient)."""
    g = loop_energy_gradient(m, loop)
    return float(np.max(np.linalg.norm(g, axis=1)))


def iterate_loop(loop: DiscreteLoop, m: int, sf: SpaceFormSpec | None = None) -> DiscreteLoop:
    """The m-th iterate c^m: m deck-translated copies of the lift concatenated."""
    if m < 1:
        raise PreconditionError("iteration exponent must be >= 1")
    sf = sf or loop.sf
    if m == 1:
        return loop
    k = loop.class_power
    parts = [loop.samples @ np.linalg.matrix_power(sf.deck_power(k), j).T for j in range(m)]
    return DiscreteLoop(
        samples=np.vstack(parts),
        class_power=(k * m) % sf.p if sf.p > 1 else 0,
        sf=sf,
    )


def resample_loop(loop: DiscreteLoop, N_new: int) -> DiscreteLoop:
    """Arc re-interpolation of the loop onto a uniform N_new-point grid."""
    if N_new == loop.N:
        return loop
    X = np.stack([loop.point(i / N_new) for i in range(N_new)])
    return DiscreteLoop(samples=X, class_power=loop.class_power, sf=loop.sf)


def reverse_loop(loop: DiscreteLoop) -> DiscreteLoop:
    """Time reversal of a twisted loop; the class power flips to its inverse.

    Keeps the base point: y_0 = x_0 and y_i = A^{-k} x_{N-i}, so the closure
    y_N = A^{p-k} y_0 traverses the original curve backwards.
    """
    sf = loop.sf
    k = loop.class_power
    X = loop.samples
    Ainv = sf.deck_power((sf.p - k) % sf.p)
    Y = np.vstack([X[:1], (X[:0:-1] @ Ainv.T)])
    return DiscreteLoop(samples=Y, class_power=(sf.p - k) % sf.p, sf=sf)


def in_base_class(loop_class_power: int, m: int, p: int) -> bool:
    """Is the m-th iterate of a class [h^k] loop again of class [h]?"""
    return (loop_class_power * m) % p == 1 % p


def _arc_pair_crossings(P1, P2, Q1, Q2, ntol=1e-10, wedge_tol=1e-9):
    """Vectorized transversal crossing test for arc batches on S^2."""
    n1 = np.cross(P1, P2)
    n2 = np.cross(Q1, Q2)
    d = np.cross(n1, n2)
    dn = np.linalg.norm(d, axis=-1)
    transversal = dn > ntol
    u = np.where(transversal[..., None], d / np.where(transversal, dn, 1.0)[..., None], 0.0)

    def interior(u, A, B, n):
        nn = np.linalg.norm(n, axis=-1)
        nhat = n / np.where(nn > 0, nn, 1.0)[..., None]
        s1 = np.einsum("...i,...i->...", np.cross(A, u), nhat)
        s2 = np.einsum("...i,...i->...", np.cross(u, B), nhat)
        return (s1 > wedge_tol) & (s2 > wedge_tol)

    hits = np.zeros(u.shape[:-1], dtype=bool)
    for sign in (1.0, -1.0):
        w = sign * u
        hits |= transversal & interior(w, P1, P2, n1) & interior(w, Q1, Q2, n2)
    return hits


def detect_self_intersections(loop: DiscreteLoop, sf: SpaceFormSpec | None = None) -> dict:
    """Count transversal self-crossings of the image in the quotient.

    Arcs are compared against all deck translates of later arcs; pairs that
    share an endpoint in the quotient (adjacent segments, exact retracing by
    iteration) are excluded.  Exact great-arc intersection is used on S^2;
    higher dimensions fall back to a closest-approach coincidence test.
    """
    sf = sf or loop.sf
    Xe = loop.extended()
    N = loop.N
    A = Xe[:-1]
    B = Xe[1:]
    seg_len = np.linalg.norm(B - A, axis=1)
    warning = bool(np.max(seg_len) > 0.1)

    p = max(sf.p, 1)
    crossings = 0
    if sf.n == 2:
        for l in range(p):
            Al = sf.deck_power(l)
            QA, QB = A @ Al.T, B @ Al.T
            P1 = A[:, None, :]
            P2 = B[:, None, :]
            Q1 = QA[None, :, :]
            Q2 = QB[None, :, :]
            hits = _arc_pair_crossings(P1, P2, Q1, Q2)
            # endpoint sharing in the quotient excludes a pair (adjacency/retrace)
            share = np.zeros((N, N), dtype=bool)
            for lp in range(p):
                Bl = sf.deck_power(lp)
                for E1 in (A, B):
                    for E2 in (QA @ Bl.T, QB @ Bl.T):
                        dist = np.linalg.norm(E1[:, None, :] - E2[None, :, :], axis=-1)
                        share |= dist < 1e-7
            hits &= ~share
            iu, ju = np.nonzero(hits)
            if l == 0:
                crossings += int(np.count_nonzero(iu < ju))
            elif p % 2 == 0 and l == p // 2:
                crossings += int(np.count_nonzero(iu <= ju))
            elif l <= p - l:
                crossings += int(np.count_nonzero(hits))
    else:
        # closest-approach coincidence test between non-adjacent chords
        for l in range(p):
            Al = sf.deck_power(l)
            QA, QB = A @ Al.T, B @ Al.T
            mid1 = 0.5 * (A + B)
            mid2 = 0.5 * (QA + QB)
            dist = np.linalg.norm(mid1[:, None, :] - mid2[None, :, :], axis=-1)
            near = dist < 2.0 * np.max(seg_len)
            iu, ju = np.nonzero(near)
            for i, j in zip(iu, ju):
                if l == 0 and (i == j or abs(i - j) <= 1 or abs(i - j) == N - 1):
                    continue
                if l > 0 and l > p - l:
                    continue
                if l > 0 and l == p - l and i > j:
                    continue
                if _chord_distance(A[i], B[i], QA[j], QB[j]) < 1e-8:
                    crossings += 1
    return {"simple": crossings == 0, "crossings": crossings, "resolution_warning": warning}


def _chord_distance(p1, p2, q1, q2) -> float:
    """Minimum distance between segments [p1,p2] and [q1,q2] in ambient space."""
    u = p2 - p1
    v = q2 - q1
    w = p1 - q1
    a, b, c = u @ u, u @ v, v @ v
    d, e = u @ w, v @ w
    den = a * c - b * b
    if den > 1e-16:
        s = np.clip((b * e - c * d) / den, 0.0, 1.0)
    else:
        s = 0.0
    t = np.clip((b * s + e) / c if c > 1e-16 else 0.0, 0.0, 1.0)
    s = np.clip((b * t - d) / a if a > 1e-16 else 0.0, 0.0, 1.0)
    return float(np.linalg.norm(w + s * u - t * v))
