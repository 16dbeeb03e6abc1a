"""Closed-geodesic search by twisted-loop energy minimization.

Each seed is a noisy great-circle path joining a random point to its deck
image.  Projected gradient descent with backtracking drives the energy down
until the geodesic-equation residual is small, then a damped Riemannian
Newton step on the discrete energy finishes to tol_geo.  Converged loops are
deduplicated two ways: first by the curve-distinctness criterion (phase
alignment of the oriented parameterized curves, including deck translates),
then congruent copies produced by a continuous isometry group of the metric
(e.g. the full rotation group of the round metric) are collapsed to one
representative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import jax.numpy as jnp

from .errors import PreconditionError
from .manifold import SpaceFormSpec
from .metrics import MetricSpec, metric_fn
from .loops import (
    DiscreteLoop,
    detect_self_intersections,
    loop_functions,
    loop_energy,
    loop_length,
    resample_loop,
    reverse_loop,
)

DEFAULT_N = 256
COARSE_N = 64
TOL_GEO = 1e-8
DEDUP_TOL = 1e-4
SWITCH_TOL = 1e-2


@dataclass
class GeodesicRecord:
    """A converged, classified closed geodesic."""

    loop: DiscreteLoop
    length: float
    energy: float
    residual: float
    simple: bool
    class_power: int
    metric_id: str
    index: int | None = None
    nullity: int | None = None
    eigenvalues: list | None = None

    def to_json_dict(self) -> dict:
        return {
            "length": self.length,
            "energy": self.energy,
            "index": self.index,
            "nullity": self.nullity,
            "residual": self.residual,
            "simple": self.simple,
            "class_power": self.class_power,
            "eigenvalues": self.eigenvalues,
        }


@dataclass
class SeedDiagnostic:
    seed_index: int
    converged: bool
    residual: float
    iterations: int
    message: str = ""


def _normalize_rows(X: np.ndarray) -> np.ndarray:
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def _tangent_project(g: np.ndarray, X: np.ndarray) -> np.ndarray:
    return g - np.einsum("ij,ij->i", g, X)[:, None] * X


def seed_loop(sf: SpaceFormSpec, k: int, N: int, rng: np.random.Generator, noise: float = 0.05) -> DiscreteLoop:
    """Noisy great-circle path from a random point to its deck image."""
    x0 = rng.standard_normal(sf.n + 1)
    x0 /= np.linalg.norm(x0)
    y = sf.deck_power(k) @ x0
    c = float(np.clip(x0 @ y, -1.0, 1.0))
    theta = np.arccos(c)
    u_raw = y - c * x0
    nu = np.linalg.norm(u_raw)
    if nu < 1e-8:
        # antipodal or identical endpoints: pick a random orthogonal direction
        u = rng.standard_normal(sf.n + 1)
        u -= (u @ x0) * x0
        u /= np.linalg.norm(u)
        theta = np.pi if c < 0 else 2.0 * np.pi
    else:
        u = u_raw / nu
    t = np.arange(N) / N
    path = np.cos(theta * t)[:, None] * x0 + np.sin(theta * t)[:, None] * u
    path = path + noise * rng.standard_normal(path.shape)
    return DiscreteLoop(samples=_normalize_rows(path), class_power=k, sf=sf)


def _descend(energy, grad, X: np.ndarray, max_iters: int, switch_tol: float):
    """Projected gradient descent with backtracking line search (monotone)."""
    N, dim = X.shape
    Xf = X.ravel()
    E = float(energy(Xf))
    g = _tangent_project(np.asarray(grad(Xf)).reshape(N, dim), X)
    res = float(np.max(np.linalg.norm(g, axis=1)))
    eta = 0.1 / max(res, 1.0)
    it = 0
    while res > switch_tol and it < max_iters:
        gn2 = float(np.sum(g * g))
        accepted = False
        for _ in range(40):
            Xn = _normalize_rows(X - eta * g)
            En = float(energy(Xn.ravel()))
            if En <= E - 1e-4 * eta * gn2:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            break
        X, E = Xn, En
        g = _tangent_project(np.asarray(grad(X.ravel())).reshape(N, dim), X)
        res = float(np.max(np.linalg.norm(g, axis=1)))
        eta = min(eta * 1.5, 10.0)
        it += 1
    return X, res, it


def _tangent_basis(X: np.ndarray) -> np.ndarray:
    """Per-node orthonormal basis of the tangent space, shape (N, n+1, n)."""
    N, dim = X.shape
    out = np.empty((N, dim, dim - 1))
    e1 = np.zeros(dim)
    e1[0] = 1.0
    for i in range(N):
        x = X[i]
        w = e1 - x if x[0] < 0.999999 else e1 + x
        w = w / np.linalg.norm(w)
        H = np.eye(dim) - 2.0 * np.outer(w, w)  # maps +-e1 to x; columns 1.. span x-perp
        out[i] = H[:, 1:]
    return out


def _newton(energy, grad, hess, X: np.ndarray, tol: float, max_iters: int = 60):
    """Damped Riemannian Newton on the product of spheres."""
    N, dim = X.shape
    mu = 1e-10

    def residual_of(Xc):
        g_amb = np.asarray(grad(Xc.ravel())).reshape(N, dim)
        g_t = _tangent_project(g_amb, Xc)
        return g_amb, g_t, float(np.max(np.linalg.norm(g_t, axis=1)))

    g_amb, g_t, res = residual_of(X)
    for it in range(max_iters):
        if res <= tol:
            break
        B = _tangent_basis(X)  # (N, dim, dim-1)
        T = np.zeros((N * dim, N * (dim - 1)))
        for i in range(N):
            T[i * dim:(i + 1) * dim, i * (dim - 1):(i + 1) * (dim - 1)] = B[i]
        H = np.asarray(hess(X.ravel()))
        Ht = T.T @ H @ T
        # curvature correction of the sphere constraint
        xg = np.einsum("ij,ij->i", X, g_amb)
        Ht -= np.diag(np.repeat(xg, dim - 1))
        gt = T.T @ g_t.ravel()
        lam, V = np.linalg.eigh(Ht)
        scale = max(float(np.max(np.abs(lam))), 1e-12)
        improved = False
        kernel = np.abs(lam) < 1e-6 * scale
        for _ in range(12):
            # keep eigenvalue signs so saddles stay reachable; suppress motion
            # along the near-kernel band (reparametrization and symmetry modes)
            denom = np.where(np.abs(lam) < mu * scale, np.sign(lam) * mu * scale + 0.0, lam)
            coeff = np.where(kernel, 0.0, (V.T @ gt) / denom)
            s = -V @ coeff
            Xn = _normalize_rows(X + (T @ s).reshape(N, dim))
            gn_amb, gn_t, rn = residual_of(Xn)
            if rn < res:
                X, g_amb, g_t, res = Xn, gn_amb, gn_t, rn
                mu = max(mu / 4.0, 1e-12)
                improved = True
                break
            mu *= 10.0
        if not improved:
            break
    return X, res


def refine_loop(m: MetricSpec, loop: DiscreteLoop, tol: float = TOL_GEO,
                max_iters: int = 5000) -> tuple[DiscreteLoop, float, int]:
    """Descent then Newton from an arbitrary twisted loop; returns (loop, residual, iters)."""
    energy, _, grad, hess = loop_functions(m, loop)
    X, res, it = _descend(energy, grad, loop.samples, max_iters, SWITCH_TOL)
    X, res = _newton(energy, grad, hess, X, tol)
    return DiscreteLoop(samples=X, class_power=loop.class_power, sf=loop.sf), res, it


def _shifted_samples(loop: DiscreteLoop, j: int) -> np.ndarray:
    """Integer phase shift of a twisted loop's sample list."""
    X = loop.samples
    if j == 0:
        return X
    D = loop.closure
    return np.vstack([X[j:], X[:j] @ D.T])


def _interp_shift(Xs: np.ndarray, s: float, closure: np.ndarray) -> np.ndarray:
    """Spherical interpolation of the sample polygon at fractional shift s in [0,1)."""
    Xe = np.vstack([Xs, (closure @ Xs[0])[None, :]])
    a, b = Xe[:-1], Xe[1:]
    d = 2.0 * np.arcsin(np.clip(np.linalg.norm(b - a, axis=1) / 2.0, 0.0, 1.0))
    sd = np.where(d > 1e-14, np.sin(d), 1.0)
    q = np.where(
        (d > 1e-14)[:, None],
        (np.sin((1 - s) * d)[:, None] * a + np.sin(s * d)[:, None] * b) / sd[:, None],
        (1 - s) * a + s * b,
    )
    return _normalize_rows(q)


def loop_align_distance(c: DiscreteLoop, d: DiscreteLoop) -> float:
    """Min over deck translates and (continuous) phase shifts of the sup distance."""
    if c.N != d.N:
        raise PreconditionError("loops must share the sample count")
    best = np.inf
    p = max(c.sf.p, 1)
    Xc = c.samples
    for l in range(p):
        Al = c.sf.deck_power(l)
        for j in range(c.N):
            Xs = _shifted_samples(d, j) @ Al.T
            clos = Al @ d.closure @ Al.T

            def dist(s):
                return float(np.max(np.linalg.norm(Xc - _interp_shift(Xs, s, clos), axis=1)))

            # golden-section refinement of the fractional shift
            lo, hi = -1.0, 1.0
            phi = (np.sqrt(5.0) - 1.0) / 2.0
            x1 = hi - phi * (hi - lo)
            x2 = lo + phi * (hi - lo)
            f1, f2 = dist(x1 % 1.0), dist(x2 % 1.0)
            for _ in range(40):
                if f1 < f2:
                    hi, x2, f2 = x2, x1, f1
                    x1 = hi - phi * (hi - lo)
                    f1 = dist(x1 % 1.0)
                else:
                    lo, x1, f1 = x1, x2, f2
                    x2 = lo + phi * (hi - lo)
                    f2 = dist(x2 % 1.0)
            best = min(best, f1, f2, dist(0.0))
            if best < 1e-12:
                return best
    return best


def _kabsch(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Orthogonal R minimizing ||P - Q R^T||_F (maps Q onto P)."""
    U, _, Vt = np.linalg.svd(P.T @ Q)
    return U @ Vt


def _is_metric_isometry(m: MetricSpec, sf: SpaceFormSpec, R: np.ndarray, tol: float = 1e-8) -> bool:
    if np.max(np.abs(R @ sf.action - sf.action @ R)) > 1e-6:
        return False
    rng = np.random.default_rng(11)
    x = rng.standard_normal((64, m.n + 1))
    x = _normalize_rows(x)
    v = rng.standard_normal((64, m.n + 1))
    v = _tangent_project(v, x)
    F = metric_fn(m.key())
    for xi, vi in zip(x, v):
        a = float(F(jnp.asarray(xi), jnp.asarray(vi)))
        b = float(F(jnp.asarray(R @ xi), jnp.asarray(R @ vi)))
        if abs(a - b) > tol * max(1.0, a):
            return False
    return True


def congruent_by_isometry(m: MetricSpec, c: DiscreteLoop, d: DiscreteLoop, tol: float = DEDUP_TOL) -> bool:
    """Is there a metric isometry (commuting with the deck) mapping d onto c?"""
    Xc = c.samples
    best = (np.inf, None, 0)
    for j in range(c.N):
        Xs = _shifted_samples(d, j)
        R = _kabsch(Xc, Xs)
        r = float(np.max(np.linalg.norm(Xc - Xs @ R.T, axis=1)))
        if r < best[0]:
            best = (r, R, j)
    r, R, j = best
    if R is None:
        return False
    if r > tol:
        # the two polygons may be misaligned by a fraction of one segment;
        # slide the phase continuously and refit the best rotation
        Xs = _shifted_samples(d, j)
        clos = d.closure

        def misfit(s):
            Xi = _interp_shift(Xs, s % 1.0, clos)
            Ri = _kabsch(Xc, Xi)
            return float(np.max(np.linalg.norm(Xc - Xi @ Ri.T, axis=1))), Ri

        lo, hi = -1.0, 1.0
        phi = (np.sqrt(5.0) - 1.0) / 2.0
        x1 = hi - phi * (hi - lo)
        x2 = lo + phi * (hi - lo)
        f1, R1 = misfit(x1)
        f2, R2 = misfit(x2)
        for _ in range(60):
            if f1 < f2:
                hi, x2, f2, R2 = x2, x1, f1, R1
                x1 = hi - phi * (hi - lo)
                f1, R1 = misfit(x1)
            else:
                lo, x1, f1, R1 = x1, x2, f2, R2
                x2 = lo + phi * (hi - lo)
                f2, R2 = misfit(x2)
        r, R = (f1, R1) if f1 < f2 else (f2, R2)
    if r > tol:
        return False
    return _is_metric_isometry(m, c.sf, R)


def dedup_records(m: MetricSpec, records: list[GeodesicRecord],
                  dedup_tol: float = DEDUP_TOL, collapse_congruent: bool = True) -> list[GeodesicRecord]:
    """Drop records repeating an earlier curve (phase/deck) or a congruent copy."""
    kept: list[GeodesicRecord] = []
    for rec in records:
        duplicate = False
        for prev in kept:
            if rec.class_power != prev.class_power:
                continue
            if abs(rec.length - prev.length) > max(100.0 * dedup_tol, 1e-6 * prev.length):
                continue
            if loop_align_distance(prev.loop, rec.loop) <= dedup_tol:
                duplicate = True
                break
            if collapse_congruent and congruent_by_isometry(m, prev.loop, rec.loop, dedup_tol):
                duplicate = True
                break
        if not duplicate:
            kept.append(rec)
    return kept


def find_geodesics(
    m: MetricSpec,
    sf: SpaceFormSpec,
    k: int,
    seeds: int = 20,
    rng_seed: int = 0,
    N: int = DEFAULT_N,
    tol_geo: float = TOL_GEO,
    max_iters: int = 5000,
    dedup_tol: float = DEDUP_TOL,
    collapse_congruent: bool = True,
    return_diagnostics: bool = False,
):
    """Search for class [h^k] closed geodesics from `seeds` random twisted loops.

    Returns energy-sorted deduplicated GeodesicRecords; deterministic for a
    fixed rng_seed.  Seeds that fail to reach tol_geo are reported in the
    diagnostics and excluded from the records.
    """
    if sf.p > 1 and not 1 <= k <= sf.p - 1:
        raise PreconditionError("class power must lie in {1, ..., p-1}")
    rng = np.random.default_rng(rng_seed)
    metric_id = f"{m.kind}(n={m.n},alpha={m.alpha})"
    # run the bulk of the optimization at a coarse resolution; unique coarse
    # solutions get re-interpolated and Newton-polished at the requested N
    N_coarse = min(N, COARSE_N)

    def record_of(loop, res):
        inter = detect_self_intersections(loop, sf)
        return GeodesicRecord(
            loop=loop,
            length=loop_length(m, loop),
            energy=loop_energy(m, loop),
            residual=res,
            simple=inter["simple"],
            class_power=k,
            metric_id=metric_id,
        )

    raw: list[GeodesicRecord] = []
    diagnostics: list[SeedDiagnostic] = []
    for s in range(seeds):
        seed = seed_loop(sf, k, N_coarse, rng)
        loop, res, iters = refine_loop(m, seed, tol=tol_geo, max_iters=max_iters)
        ok = res <= tol_geo
        diagnostics.append(SeedDiagnostic(s, ok, res, iters, "" if ok else "residual above tol_geo"))
        if ok:
            raw.append(record_of(loop, res))
    # a geodesic traversed backwards is critical for the reversed metric only,
    # so for irreversible metrics refine each reversal as an extra candidate
    # (it stays in the search class exactly when the class is self-inverse)
    if (sf.p - k) % sf.p == k % sf.p:
        for rec in list(raw):
            rev, res, _ = refine_loop(m, reverse_loop(rec.loop), tol=tol_geo, max_iters=max_iters)
            if res <= tol_geo:
                raw.append(record_of(rev, res))
    raw.sort(key=lambda r: r.energy)
    records = dedup_records(m, raw, dedup_tol, collapse_congruent)
    if N > N_coarse:
        fine: list[GeodesicRecord] = []
        for rec in records:
            loop, res, _ = refine_loop(m, resample_loop(rec.loop, N), tol=tol_geo,
                                       max_iters=max_iters)
            if res <= tol_geo:
                fine.append(record_of(loop, res))
        fine.sort(key=lambda r: r.energy)
        records = dedup_records(m, fine, dedup_tol, collapse_congruent)
    if return_diagnostics:
        return records, diagnostics
    return records
