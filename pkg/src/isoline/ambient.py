"""Linear algebra of the standard symplectic space R^{2n} = C^n.

Coordinates are interleaved as (x1, y1, ..., xn, yn), so the complex
structure J0 is block-diagonal with 2x2 rotation blocks and acts as
(x_i, y_i) -> (-y_i, x_i).  The symplectic form is omega0(u, v) = <J0 u, v>.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial, pi

import numpy as np

ROTATION = np.array([[0.0, -1.0], [1.0, 0.0]])


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class AmbientSpace:
    n: int
    J0: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"half-dimension must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "J0", np.kron(np.eye(self.n), ROTATION))

    @property
    def dim(self) -> int:
        return 2 * self.n

    def check(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise DimensionError(f"expected trailing dimension {self.dim}, got shape {v.shape}")
        return v

    def apply_J0(self, v) -> np.ndarray:
        """Multiply by sqrt(-1).  Works on (..., 2n) stacks of vectors."""
        v = self.check(v)
        out = np.empty_like(v)
        out[..., 0::2] = -v[..., 1::2]
        out[..., 1::2] = v[..., 0::2]
        return out

    def omega(self, u, v) -> np.ndarray:
        return np.sum(self.apply_J0(u) * self.check(v), axis=-1)

    def sphere_volume(self) -> float:
        """Volume of the unit sphere S^{2n-1}."""
        return 2.0 * pi**self.n / factorial(self.n - 1)


@dataclass(frozen=True)
class UnitaryFrame:
    """Orthonormal frame (xi, J0 xi, e1, J0 e1, ..., e_{n-1}, J0 e_{n-1}) as columns."""

    columns: np.ndarray

    @property
    def xi(self) -> np.ndarray:
        return self.columns[:, 0]

    def sphere_tangent(self) -> np.ndarray:
        """Columns 2..2n: an oriented basis of the tangent space of S^{2n-1} at xi."""
        return self.columns[:, 1:]


def complete_unitary_frame(space: AmbientSpace, xi, tol: float = 1e-12,
                           pivot: float = 1e-6) -> UnitaryFrame:
    xi = space.check(xi)
    if abs(np.linalg.norm(xi) - 1.0) > tol:
        raise ValueError(f"xi must be a unit vector, |xi| = {np.linalg.norm(xi)!r}")
    cols = [xi, space.apply_J0(xi)]
    # canonical seeds in fixed order; the complement of span(xi, J0 xi) is J0-invariant
    for k in range(space.dim):
        if len(cols) == space.dim:
            break
        v = np.zeros(space.dim)
        v[k] = 1.0
        for _ in range(2):
            for c in cols:
                v = v - np.dot(c, v) * c
        norm = np.linalg.norm(v)
        if norm < pivot:
            continue
        e = v / norm
        cols.extend([e, space.apply_J0(e)])
    return UnitaryFrame(np.column_stack(cols))


def householder_complement(a: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of unit vectors a.

    a has shape (..., m); returns (..., m, m-1).  Smooth in a away from the
    sign switch of a[..., 0], which is all Newton projections need.
    """
    m = a.shape[-1]
    s = np.where(a[..., 0] >= 0, 1.0, -1.0)
    w = a.copy()
    w[..., 0] += s
    ww = np.sum(w * w, axis=-1)[..., None, None]
    H = np.eye(m) - 2.0 * w[..., :, None] * w[..., None, :] / ww
    return H[..., :, 1:]


def signed_complement_basis(a: np.ndarray) -> np.ndarray:
    """Like householder_complement but oriented so det[a | basis] = +1."""
    B = householder_complement(a)
    d = np.linalg.det(np.concatenate([a[..., :, None], B], axis=-1))
    B[..., :, 0] *= np.sign(d)[..., None]
    return B
