"""Space forms S^n/Z_p as explicit deck actions on the round sphere.

Points live on S^n embedded in R^{n+1}; the quotient is handled through an
explicit orthogonal deck generator A with A^p = I and no fixed point on the
sphere.  For even n the only free action is the antipodal one (p = 2,
A = -I); for odd n the generator rotates every C-plane of
R^{n+1} = C^{(n+1)/2} by 2*pi/p (the lens space L(p; 1,...,1)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError

_ORTHO_TOL = 1e-12


def _rotation_generator(n: int) -> np.ndarray:
    """Matrix J with J^2 = -I acting on R^{n+1}, n odd (multiplication by i)."""
    if n % 2 == 0:
        raise PreconditionError("complex structure needs odd sphere dimension")
    m = n + 1
    J = np.zeros((m, m))
    for j in range(0, m, 2):
        J[j, j + 1] = -1.0
        J[j + 1, j] = 1.0
    return J


@dataclass(frozen=True)
class SpaceFormSpec:
    """The manifold S^n/Z_p with deck generator ``action``."""

    n: int
    p: int
    action: np.ndarray

    def __post_init__(self):
        if self.n < 2:
            raise PreconditionError("sphere dimension must be >= 2")
        if self.p < 1:
            raise PreconditionError("deck order must be >= 1")
        A = np.asarray(self.action, dtype=float)
        if A.shape != (self.n + 1, self.n + 1):
            raise PreconditionError("deck matrix has wrong shape")
        if np.max(np.abs(A.T @ A - np.eye(self.n + 1))) > 1e-10:
            raise PreconditionError("deck matrix is not orthogonal")
        object.__setattr__(self, "action", A)
        if self.p > 1:
            if self.n % 2 == 0 and (self.p != 2 or np.max(np.abs(A + np.eye(self.n + 1))) > _ORTHO_TOL):
                raise PreconditionError("even-dimensional sphere admits only the antipodal action")
            Ak = np.eye(self.n + 1)
            for k in range(1, self.p + 1):
                Ak = A @ Ak
                if k < self.p:
                    # free action: A^k may not fix any sphere point, i.e. no eigenvalue 1
                    if np.min(np.abs(np.linalg.eigvals(Ak) - 1.0)) < 1e-9:
                        raise PreconditionError(f"A^{k} has a fixed point on the sphere (action not free)")
            if np.max(np.abs(Ak - np.eye(self.n + 1))) > 1e-9:
                raise PreconditionError("deck matrix does not have order p")

    @staticmethod
    def projective(n: int) -> "SpaceFormSpec":
        """Real projective space RP^n = S^n/{+-1}."""
        return SpaceFormSpec(n=n, p=2, action=-np.eye(n + 1))

    @staticmethod
    def lens(n: int, p: int) -> "SpaceFormSpec":
        """Lens space S^n/Z_p (n odd): rotation by 2*pi/p in every C-plane."""
        if p == 2:
            return SpaceFormSpec.projective(n)
        if n % 2 == 0:
            raise PreconditionError("free Z_p action with p > 2 needs an odd sphere dimension")
        J = _rotation_generator(n)
        theta = 2.0 * np.pi / p
        A = np.cos(theta) * np.eye(n + 1) + np.sin(theta) * J
        return SpaceFormSpec(n=n, p=p, action=A)

    @staticmethod
    def sphere(n: int) -> "SpaceFormSpec":
        """The sphere itself (trivial deck group); used for untwisted loops."""
        return SpaceFormSpec(n=n, p=1, action=np.eye(n + 1))

    def deck_power(self, k: int) -> np.ndarray:
        """A^k (k may be any integer)."""
        return np.linalg.matrix_power(self.action, k % self.p if self.p > 1 else 0)


@dataclass(frozen=True)
class TangentSample:
    """A point x on S^n with a tangent vector v (x.v = 0)."""

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.v, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)
        if abs(np.linalg.norm(x) - 1.0) > _ORTHO_TOL:
            raise PreconditionError("base point is not on the unit sphere")
        if abs(float(x @ v)) > _ORTHO_TOL * max(1.0, float(np.linalg.norm(v))):
            raise PreconditionError("vector is not tangent to the sphere")


def deck_apply(sf: SpaceFormSpec, k: int, x: np.ndarray) -> np.ndarray:
    """Apply the k-th power of the deck generator to a point (or array of points)."""
    return np.asarray(x, dtype=float) @ sf.deck_power(k).T
