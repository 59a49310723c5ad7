"""Pair similarity kernels in log domain.

Every kernel returns an exponent e with similarity s = exp(e); keeping the
log form lets the loss stabilize its ratios with max-subtraction. Three kinds:

  sq-euclid      e = -||z - z'||^2
  cosine-temp    e = cos(g(z), g(z')) / tau, g a trainable linear projection
  affine-cosine  e = gamma * cos(z, z') + beta, gamma/beta trainable

Zero-norm vectors get cosine 0 with zero gradient, so an all-zero embedding
cannot poison training with NaNs.
"""

from dataclasses import dataclass, field

import numpy as np

KINDS = ("sq-euclid", "cosine-temp", "affine-cosine")
GAMMA_MIN = 1e-3


@dataclass
class KernelParams:
    kind: str = "sq-euclid"
    tau: float = 0.5
    gamma: float = 10.0
    beta: float = -5.0
    proj: np.ndarray = field(default=None, repr=False)  # (D, D_p), cosine-temp only

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.kind == "cosine-temp" and self.proj is None:
            raise ValueError("cosine-temp kernel needs a projection matrix")
        if self.kind != "cosine-temp":
            self.proj = None

    def clamp(self):
        self.gamma = max(self.gamma, GAMMA_MIN)


def identity_proj(d):
    return np.eye(d)


def _cos(z, zp):
    nz, nzp = np.linalg.norm(z), np.linalg.norm(zp)
    if nz == 0.0 or nzp == 0.0:
        return 0.0
    return float(np.dot(z, zp) / (nz * nzp))


def sqeuclid_exponent(z, zp):
    z, zp = np.asarray(z, float), np.asarray(zp, float)
    if z.shape != zp.shape:
        raise ValueError("dimension mismatch")
    diff = z - zp
    return -float(np.dot(diff, diff))


def cosine_temp_exponent(z, zp, params):
    if params.proj is None:
        raise ValueError("cosine-temp kernel needs a projection matrix")
    return _cos(np.asarray(z, float) @ params.proj, np.asarray(zp, float) @ params.proj) / params.tau


def affine_cosine_exponent(z, zp, params):
    return params.gamma * _cos(np.asarray(z, float), np.asarray(zp, float)) + params.beta


def scalar_exponent(z, zp, params):
    if params.kind == "sq-euclid":
        return sqeuclid_exponent(z, zp)
    if params.kind == "cosine-temp":
        return cosine_temp_exponent(z, zp, params)
    return affine_cosine_exponent(z, zp, params)


class ExponentMatrix:
    """All-pairs exponents for a batch, with a backward pass.

    ``backward(grad_e)`` maps a gradient on the exponent matrix to gradients
    on the batch embeddings and on the trainable kernel parameters.
    """

    def __init__(self, z, params):
        self.z = np.asarray(z, dtype=float)
        self.params = params
        kind = params.kind
        if kind == "sq-euclid":
            sq = np.sum(self.z**2, axis=1)
            self.e = -(sq[:, None] + sq[None, :] - 2.0 * self.z @ self.z.T)
            np.fill_diagonal(self.e, 0.0)
        else:
            self._u = self.z @ params.proj if kind == "cosine-temp" else self.z
            norms = np.linalg.norm(self._u, axis=1)
            self._norms = norms
            safe = np.where(norms == 0.0, 1.0, norms)
            self._v = self._u / safe[:, None]
            self._c = self._v @ self._v.T
            if kind == "cosine-temp":
                self.e = self._c / params.tau
            else:
                self.e = params.gamma * self._c + params.beta

    def backward(self, grad_e):
        """Returns (grad_z, grad_kernel dict with gamma/beta/proj where trainable)."""
        kind = self.params.kind
        grad_kernel = {}
        if kind == "sq-euclid":
            s = grad_e + grad_e.T
            grad_z = -2.0 * (s.sum(axis=1)[:, None] * self.z - s @ self.z)
            return grad_z, grad_kernel

        if kind == "cosine-temp":
            grad_c = grad_e / self.params.tau
        else:
            grad_c = self.params.gamma * grad_e
            grad_kernel["gamma"] = float(np.sum(grad_e * self._c))
            grad_kernel["beta"] = float(np.sum(grad_e))

        # c = v v^T with v = u / ||u||; radial components cancel on the diagonal.
        grad_v = (grad_c + grad_c.T) @ self._v
        radial = np.sum(grad_v * self._v, axis=1, keepdims=True)
        safe = np.where(self._norms == 0.0, 1.0, self._norms)
        grad_u = (grad_v - radial * self._v) / safe[:, None]
        grad_u[self._norms == 0.0] = 0.0

        if kind == "cosine-temp":
            grad_kernel["proj"] = self.z.T @ grad_u
            grad_z = grad_u @ self.params.proj.T
        else:
            grad_z = grad_u
        return grad_z, grad_kernel


def exponent_matrix(batch, params):
    """ExponentMatrix over all ordered entry pairs of a representation batch."""
    z = batch.z if hasattr(batch, "z") else np.asarray(batch, dtype=float)
    return ExponentMatrix(z, params)
