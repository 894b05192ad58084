"""
Gradient-Domain Reconstruction
==============================

Poisson reconstruction of grayscale intensity from gradient fields and directly from the two
diagonal SD channels.

Conventions (shared with the gradient oracle):
- ``gradients(I)`` uses forward differences; the last column of gx and last row of gy are 0.
- ``divergence(g)`` is the negative adjoint of ``gradients`` (backward differences), so
  ``divergence(gradients(I))`` is exactly the 5-point Laplacian with Neumann boundary.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .aop_model import AopFrame
from .error_handler import ConfigurationError, ConvergenceError

logger = logging.getLogger(__name__)

RELATIVE_RESIDUAL = 1e-8


@dataclass
class GradientField:
    gx: np.ndarray
    gy: np.ndarray

    def __post_init__(self):
        self.gx = np.asarray(self.gx, dtype=np.float64)
        self.gy = np.asarray(self.gy, dtype=np.float64)
        if self.gx.shape != self.gy.shape:
            raise ValueError("gx and gy must share dimensions")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.gx.shape


@dataclass
class ReconstructionResult:
    image: np.ndarray
    iterations: int
    residual: float


def gradients(image: np.ndarray) -> GradientField:
    """Forward-difference gradient field of ``image``."""
    image = np.asarray(image, dtype=np.float64)
    gx = np.zeros_like(image)
    gy = np.zeros_like(image)
    gx[:, :-1] = image[:, 1:] - image[:, :-1]
    gy[:-1, :] = image[1:, :] - image[:-1, :]
    return GradientField(gx, gy)


def _backward_x(gx: np.ndarray) -> np.ndarray:
    out = np.empty_like(gx)
    out[:, 0] = gx[:, 0]
    out[:, 1:-1] = gx[:, 1:-1] - gx[:, :-2]
    out[:, -1] = -gx[:, -2]
    return out


def divergence(g: GradientField) -> np.ndarray:
    """Backward-difference divergence, one-sided at the borders."""
    return _backward_x(g.gx) + _backward_x(g.gy.T).T


def neumann_laplacian(u: np.ndarray) -> np.ndarray:
    return divergence(gradients(u))


def preconditioned_cg(apply_a: Callable[[np.ndarray], np.ndarray], b: np.ndarray, diagonal: np.ndarray,
                      rtol: float = RELATIVE_RESIDUAL, max_iter: Optional[int] = None) -> ReconstructionResult:
    """
    Jacobi-preconditioned conjugate gradient over a matrix-free image operator.

    ``apply_a`` maps an image to an image; it is wrapped in a ``LinearOperator`` together with
    ``1 / diagonal`` as preconditioner and handed to ``scipy.sparse.linalg.cg``.

    Raises:
        ConvergenceError: the iteration cap was reached before ``‖r‖ ≤ rtol·‖b‖``
    """
    shape = b.shape
    n = b.size
    max_iter = max_iter or 10 * n
    b_flat = np.asarray(b, dtype=np.float64).ravel()
    b_norm = float(np.linalg.norm(b_flat))
    if b_norm == 0.0:
        return ReconstructionResult(np.zeros(shape), 0, 0.0)

    operator = LinearOperator((n, n), matvec=lambda v: apply_a(v.reshape(shape)).ravel(), dtype=np.float64)
    inverse_diagonal = 1.0 / np.asarray(diagonal, dtype=np.float64).ravel()
    preconditioner = LinearOperator((n, n), matvec=lambda v: inverse_diagonal * v.ravel(), dtype=np.float64)

    iterations = 0

    def count(_xk):
        nonlocal iterations
        iterations += 1

    x, info = cg(operator, b_flat, rtol=rtol, atol=0.0, maxiter=max_iter, M=preconditioner, callback=count)
    residual = float(np.linalg.norm(b_flat - operator.matvec(x))) / b_norm
    if info < 0:
        raise ConvergenceError("conjugate gradient broke down", residual, iterations)
    if info > 0 and residual > rtol:
        raise ConvergenceError("conjugate gradient hit its iteration cap", residual, iterations)
    return ReconstructionResult(x.reshape(shape), iterations, residual)


def _neighbour_count(shape: Tuple[int, int]) -> np.ndarray:
    h, w = shape
    count = np.full(shape, 4.0)
    count[0, :] -= 1
    count[-1, :] -= 1
    count[:, 0] -= 1
    count[:, -1] -= 1
    return count


def poisson_reconstruct(g: GradientField, anchor_mean: float = 0.5,
                        max_iter: Optional[int] = None) -> ReconstructionResult:
    """
    Solve ∇²u = div(g) with homogeneous Neumann boundary; the solution mean is ``anchor_mean``.
    """
    h, w = g.shape
    if h < 3 or w < 3:
        raise ConfigurationError("poisson_reconstruct needs at least a 3x3 field")
    b = -divergence(g)
    b -= b.mean()
    result = preconditioned_cg(lambda u: -neumann_laplacian(u), b, _neighbour_count(g.shape),
                               max_iter=max_iter or 10 * w * h)
    image = result.image - result.image.mean() + anchor_mean
    logger.debug(f"Poisson solve {w}x{h}: {result.iterations} iterations, residual {result.residual:.2e}")
    return ReconstructionResult(image, result.iterations, result.residual)


def _diagonal_difference(u: np.ndarray, offset: Tuple[int, int]) -> Tuple[np.ndarray, Tuple[slice, slice], Tuple[slice, slice]]:
    """``u(p) − u(p − d)`` on the pixels where both samples exist."""
    dx, dy = offset
    h, w = u.shape
    cur = (slice(max(dy, 0), h + min(dy, 0)), slice(max(dx, 0), w + min(dx, 0)))
    prev = (slice(max(-dy, 0), h + min(-dy, 0)), slice(max(-dx, 0), w + min(-dx, 0)))
    return u[cur] - u[prev], cur, prev


def _difference_adjoint(r: np.ndarray, shape: Tuple[int, int], cur, prev) -> np.ndarray:
    out = np.zeros(shape)
    out[cur] += r
    out[prev] -= r
    return out


def reconstruct_from_sd(frame: AopFrame, anchor_mean: float = 0.5, coupling: float = 1e-3,
                        max_iter: Optional[int] = None) -> ReconstructionResult:
    """
    Least-squares intensity from the two SD channels of one AOP frame.

    Minimises Σ_d ‖D_d u − sd_d‖² + coupling·‖∇u‖² over interior differences. The small
    forward-difference term links the two (x+y)-parity sub-lattices that diagonal differences
    leave disconnected.
    """
    h, w = frame.shape
    if h < 3 or w < 3:
        raise ConfigurationError("reconstruct_from_sd needs at least a 3x3 frame")
    if coupling <= 0:
        raise ConfigurationError("coupling must be > 0", "tasks.recon_coupling")
    shape = (h, w)
    channels = []
    for offset, plane in zip(frame.sd_directions, (frame.sd_a, frame.sd_b)):
        _, cur, prev = _diagonal_difference(np.zeros(shape), offset)
        channels.append((offset, cur, prev, plane[cur].astype(np.float64) * frame.quant_step))

    def apply_a(u: np.ndarray) -> np.ndarray:
        out = coupling * -neumann_laplacian(u)
        for offset, cur, prev, _ in channels:
            diff, _, _ = _diagonal_difference(u, offset)
            out += _difference_adjoint(diff, shape, cur, prev)
        return out

    b = np.zeros(shape)
    diagonal = coupling * _neighbour_count(shape)
    for offset, cur, prev, data in channels:
        b += _difference_adjoint(data, shape, cur, prev)
        diagonal[cur] += 1.0
        diagonal[prev] += 1.0
    b -= b.mean()

    result = preconditioned_cg(apply_a, b, diagonal, max_iter=max_iter or 10 * w * h)
    image = result.image - result.image.mean() + anchor_mean
    logger.debug(f"SD reconstruction {w}x{h}: {result.iterations} iterations, residual {result.residual:.2e}")
    return ReconstructionResult(image, result.iterations, result.residual)


def rmse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(np.mean((np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)) ** 2)))
