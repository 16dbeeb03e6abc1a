"""Finsler metric families on S^n: the round metric and a Randers family.

The Randers family is built by Zermelo navigation on the round sphere with
the Killing rotation wind scaled by alpha (the Katok construction):

    F(x, v) = (sqrt(sigma |v|^2 + <W,v>^2) - <W,v>) / sigma,
    sigma   = 1 - |W(x)|^2,  W(x) = alpha * K x,

with K the skew generator of a one-parameter rotation group commuting with
the deck action (multiplication by i on odd spheres, a single-plane rotation
on even spheres).  This family is deck-invariant, has reversibility
(1+alpha)/(1-alpha), constant flag curvature 1, and analytically known
non-contractible closed geodesics, which makes it the natural irreversible
test bed for every bound in the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import jax
import jax.numpy as jnp

from .errors import DegenerateMetricError, PreconditionError, ResolutionError
from .manifold import SpaceFormSpec, TangentSample, _rotation_generator

DEFAULT_GRID = 64
_MAX_SAMPLES = 1 << 18


def wind_generator(n: int) -> np.ndarray:
    """Skew matrix K of the unit rotation field used as Randers wind."""
    if n % 2 == 1:
        return _rotation_generator(n)
    m = n + 1
    K = np.zeros((m, m))
    K[0, 1] = -1.0
    K[1, 0] = 1.0
    return K


@dataclass(frozen=True)
class MetricSpec:
    """A metric evaluator: kind 'round' or 'randers' with drift strength alpha."""

    kind: str
    n: int
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("round", "randers"):
            raise PreconditionError(f"unknown metric kind {self.kind!r}")
        if self.kind == "randers" and not 0.0 <= self.alpha < 1.0:
            raise PreconditionError("randers drift strength must lie in [0, 1)")
        if self.kind == "round" and self.alpha != 0.0:
            raise PreconditionError("round metric takes no drift")

    @property
    def wind(self) -> np.ndarray:
        return self.alpha * wind_generator(self.n)

    def key(self) -> tuple:
        return (self.kind, self.n, float(self.alpha))

    @property
    def reversibility_exact(self) -> float:
        """Closed-form reversibility of the family (sampled estimate must agree)."""
        if self.kind == "round" or self.alpha == 0.0:
            return 1.0
        return (1.0 + self.alpha) / (1.0 - self.alpha)


def _F_round(x, v):
    return jnp.linalg.norm(v)

def _randers_F(x, v, K):
    W = x @ K.T
    sigma = 1.0 - W @ W
    w = W @ v
    return (jnp.sqrt(sigma * (v @ v) + w * w) - w) / sigma


@lru_cache(maxsize=32)
def metric_fn(key: tuple):
    """JAX-traceable F(x, v) for a metric key; x on sphere, v ambient tangent."""
    kind, n, alpha = key
    if kind == "round" or alpha == 0.0:
        return _F_round
    K = jnp.asarray(alpha * wind_generator(n))
    return lambda x, v: _randers_F(x, v, K)


def eval_metric(m: MetricSpec, s: TangentSample) -> float:
    """F(x, v); positively 1-homogeneous in v, positive for v != 0."""
    if np.linalg.norm(s.v) == 0.0:
        return 0.0
    if m.kind == "randers":
        W = m.wind @ s.x
        if W @ W >= 1.0:
            raise DegenerateMetricError("drift norm >= 1 at the sample point")
    return float(metric_fn(m.key())(jnp.asarray(s.x), jnp.asarray(s.v)))


def _sample_bundle(n: int, grid: int, seed: int = 20240) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic covering of the unit sphere bundle: points x, unit tangents v."""
    if grid < 8:
        raise ResolutionError("sampling grid below the documented minimum (8)")
    count = min(grid ** 3, _MAX_SAMPLES)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((count, n + 1))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    v = rng.standard_normal((count, n + 1))
    v -= np.einsum("ij,ij->i", v, x)[:, None] * x
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return x, v


def _F_batch(m: MetricSpec, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    if m.kind == "round" or m.alpha == 0.0:
        return np.linalg.norm(v, axis=1)
    W = x @ m.wind.T
    sigma = 1.0 - np.einsum("ij,ij->i", W, W)
    if np.any(sigma <= 0.0):
        raise DegenerateMetricError("drift norm >= 1 at a sample point")
    w = np.einsum("ij,ij->i", W, v)
    return (np.sqrt(sigma * np.einsum("ij,ij->i", v, v) + w * w) - w) / sigma


def _ascend(m: MetricSpec, objective, x0: np.ndarray, v0: np.ndarray, steps: int = 400) -> float:
    """Projected gradient ascent of objective(x, v) from a bundle sample."""
    fn = jax.jit(objective)
    grad = jax.jit(jax.grad(objective, argnums=(0, 1)))
    x, v = jnp.asarray(x0), jnp.asarray(v0)
    best = float(fn(x, v))
    eta = 0.05
    for _ in range(steps):
        gx, gv = grad(x, v)
        xn = x + eta * gx
        xn = xn / jnp.linalg.norm(xn)
        vn = v + eta * gv
        vn = vn - (xn @ vn) * xn
        nv = jnp.linalg.norm(vn)
        if float(nv) == 0.0:
            break
        vn = vn / nv
        val = float(fn(xn, vn))
        if val >= best:
            best, x, v = val, xn, vn
            eta = min(eta * 1.2, 0.5)
        else:
            eta *= 0.5
            if eta < 1e-14:
                break
    return best


def reversibility(m: MetricSpec, grid: int = DEFAULT_GRID) -> float:
    """max F(-X) over F(X) = 1: sampled maximization refined by local ascent."""
    if m.kind == "round" or m.alpha == 0.0:
        return 1.0
    x, v = _sample_bundle(m.n, grid)
    ratio = _F_batch(m, x, -v) / _F_batch(m, x, v)
    i = int(np.argmax(ratio))
    F = metric_fn(m.key())

    def objective(px, pv):
        return F(px, -pv) / F(px, pv)

    lam = max(float(ratio[i]), _ascend(m, objective, x[i], v[i]))
    return max(lam, 1.0)


def metric_pinch_check(m: MetricSpec, lam: float, grid: int = DEFAULT_GRID) -> dict:
    """Does F^2 < ((lam+1)/lam)^2 g_0 hold?  Returns sup, margin and the verdict."""
    if lam < 1.0:
        raise PreconditionError("reversibility must be >= 1")
    x, v = _sample_bundle(m.n, grid)
    if x.size == 0:
        raise ResolutionError("empty sample set")
    vals = _F_batch(m, x, v) ** 2  # v are g_0-unit, so this is F^2/g_0
    i = int(np.argmax(vals))
    F = metric_fn(m.key())

    def objective(px, pv):
        return F(px, pv) ** 2 / (pv @ pv)

    sup = max(float(vals[i]), _ascend(m, objective, x[i], v[i]))
    bound = ((lam + 1.0) / lam) ** 2
    return {"holds": sup < bound, "margin": bound - sup, "sup": sup, "bound": bound}


def is_deck_invariant(m: MetricSpec, sf: SpaceFormSpec, samples: int = 1000, seed: int = 7) -> float:
    """Max |F(Ax, Av) - F(x, v)| over random bundle samples."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((samples, m.n + 1))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    v = rng.standard_normal((samples, m.n + 1))
    v -= np.einsum("ij,ij->i", v, x)[:, None] * x
    A = sf.action
    return float(np.max(np.abs(_F_batch(m, x @ A.T, v @ A.T) - _F_batch(m, x, v))))
