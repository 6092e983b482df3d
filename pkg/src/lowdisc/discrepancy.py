"""Closed-form L2 discrepancy evaluation and differentiation.

Six product-kernel families are supported; for each, the squared
discrepancy of a point set is

    D^2 = c0 - (2/N) sum_i b(X_i) + (1/N^2) sum_{ij} k(X_i, X_j)

with per-family one-dimensional pieces ``k(x, y)``, ``b(x) = int k(x,y) dy``
and ``c = int int k``.  An incremental evaluator yields the discrepancy of
every prefix of a sequence in O(d N^2) total, and the prefix-weighted
squared-discrepancy aggregate and its analytic gradient with respect to the
coordinates are computed in the same budget via a linear-coefficient
reformulation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

RADICAND_CLAMP = -1e-12


class NumericalError(ArithmeticError):
    """Raised when a squared discrepancy falls below the rounding clamp."""


# ---------------------------------------------------------------------------
# kernel families
#
# Subgradient conventions: d|u| at u=0 is 0 (np.sign), and d max(x,y)
# assigns 1/2 to each argument at ties.

def _dk_star(x, y):
    return np.where(x > y, -1.0, np.where(x == y, -0.5, 0.0))


def _dk_ext(x, y):
    return np.where(x < y, 1.0, np.where(x == y, 0.5, 0.0)) - y


@dataclass(frozen=True)
class KernelComponents:
    """One-dimensional pieces of a product kernel: the kernel, its
    coordinate integral b, the double integral c, and the derivatives used
    by the analytic gradient (``dk`` is the partial in the first slot,
    ``dkdiag`` is d/dx of k(x, x))."""

    c: float
    k: Callable
    b: Callable
    dk: Callable
    db: Callable
    kdiag: Callable
    dkdiag: Callable


KERNELS: dict[str, KernelComponents] = {
    "star": KernelComponents(
        c=1.0 / 3.0,
        k=lambda x, y: 1.0 - np.maximum(x, y),
        b=lambda x: 0.5 * (1.0 - x * x),
        dk=_dk_star,
        db=lambda x: -x,
        kdiag=lambda x: 1.0 - x,
        dkdiag=lambda x: np.full_like(x, -1.0),
    ),
    "ext": KernelComponents(
        c=1.0 / 12.0,
        k=lambda x, y: np.minimum(x, y) - x * y,
        b=lambda x: 0.5 * x * (1.0 - x),
        dk=_dk_ext,
        db=lambda x: 0.5 - x,
        kdiag=lambda x: x - x * x,
        dkdiag=lambda x: 1.0 - 2.0 * x,
    ),
    "per": KernelComponents(
        c=1.0 / 3.0,
        k=lambda x, y: 0.5 - np.abs(x - y) + (x - y) ** 2,
        b=lambda x: np.full_like(x, 1.0 / 3.0),
        dk=lambda x, y: -np.sign(x - y) + 2.0 * (x - y),
        db=lambda x: np.zeros_like(x),
        kdiag=lambda x: np.full_like(x, 0.5),
        dkdiag=lambda x: np.zeros_like(x),
    ),
    "ctr": KernelComponents(
        c=1.0 / 12.0,
        k=lambda x, y: 0.5 * (np.abs(x - 0.5) + np.abs(y - 0.5) - np.abs(x - y)),
        b=lambda x: 0.5 * (np.abs(x - 0.5) - (x - 0.5) ** 2),
        dk=lambda x, y: 0.5 * (np.sign(x - 0.5) - np.sign(x - y)),
        db=lambda x: 0.5 * (np.sign(x - 0.5) - 2.0 * (x - 0.5)),
        kdiag=lambda x: np.abs(x - 0.5),
        dkdiag=lambda x: np.sign(x - 0.5),
    ),
    "sym": KernelComponents(
        c=1.0 / 12.0,
        k=lambda x, y: 0.25 * (1.0 - 2.0 * np.abs(x - y)),
        b=lambda x: 0.5 * x * (1.0 - x),
        dk=lambda x, y: -0.5 * np.sign(x - y),
        db=lambda x: 0.5 - x,
        kdiag=lambda x: np.full_like(x, 0.25),
        dkdiag=lambda x: np.zeros_like(x),
    ),
    "asd": KernelComponents(
        c=1.0 / 3.0,
        k=lambda x, y: 0.5 * (1.0 - np.abs(x - y)),
        b=lambda x: 0.25 + 0.5 * x * (1.0 - x),
        dk=lambda x, y: -0.5 * np.sign(x - y),
        db=lambda x: 0.5 - x,
        kdiag=lambda x: np.full_like(x, 0.5),
        dkdiag=lambda x: np.zeros_like(x),
    ),
}

FAMILIES = tuple(KERNELS)


@dataclass(frozen=True)
class KernelSpec:
    """A discrepancy family plus optional per-coordinate product weights.

    With weights, every one-dimensional factor f becomes 1 + gamma_j * f,
    so the weighted constants are c0 = prod_j (1 + gamma_j c) and
    b-products prod_j (1 + gamma_j b(x_j)).
    """

    family: str
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.family not in KERNELS:
            raise ValueError(
                f"unknown kernel family {self.family!r}; expected one of {FAMILIES}"
            )
        if self.weights is not None:
            w = tuple(float(g) for g in self.weights)
            if any(g <= 0 for g in w):
                raise ValueError("kernel weights must all be positive")
            object.__setattr__(self, "weights", w)

    def _check_dim(self, d: int) -> None:
        if self.weights is not None and len(self.weights) != d:
            raise ValueError(
                f"kernel weights have length {len(self.weights)}, points have dimension {d}"
            )


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("points must be a nonempty (n, d) array")
    return pts


def kernel_constant(spec: KernelSpec, d: int) -> float:
    """The double integral of the d-dimensional (possibly weighted) kernel."""
    spec._check_dim(d)
    c = KERNELS[spec.family].c
    if spec.weights is None:
        return c**d
    return float(np.prod([1.0 + g * c for g in spec.weights]))


def _b_products(spec: KernelSpec, pts: np.ndarray) -> np.ndarray:
    fam = KERNELS[spec.family]
    vals = fam.b(pts)
    if spec.weights is not None:
        vals = 1.0 + np.asarray(spec.weights) * vals
    return vals.prod(axis=1)


def _kdiag_products(spec: KernelSpec, pts: np.ndarray) -> np.ndarray:
    fam = KERNELS[spec.family]
    vals = fam.kdiag(pts)
    if spec.weights is not None:
        vals = 1.0 + np.asarray(spec.weights) * vals
    return vals.prod(axis=1)


def _kernel_cross(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(len(a), len(b)) matrix of d-dimensional kernel values."""
    fam = KERNELS[spec.family]
    out = None
    for j in range(a.shape[1]):
        kj = fam.k(a[:, j, None], b[None, :, j])
        if spec.weights is not None:
            kj = 1.0 + spec.weights[j] * kj
        out = kj if out is None else out * kj
    return out


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """The d-dimensional product kernel at a single pair of points."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    spec._check_dim(x.size)
    return float(_kernel_cross(spec, x[None, :], y[None, :])[0, 0])


def _pair_chunk(n: int, d: int) -> int:
    # keep per-dim (chunk, n) temporaries around 4M elements
    return max(16, min(n, int(4_000_000 / max(n, 1)) or 16))


def _pair_rowsums(spec: KernelSpec, pts: np.ndarray) -> np.ndarray:
    """r[j] = sum_{i<j} k(X_j, X_i), computed in O(d N^2) chunked passes."""
    n, d = pts.shape
    r = np.zeros(n)
    chunk = _pair_chunk(n, d)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        if lo == 0 and hi == 1:
            continue
        block = _kernel_cross(spec, pts[lo:hi], pts[:hi])
        cols = np.arange(hi)
        mask = cols[None, :] < (lo + np.arange(hi - lo))[:, None]
        r[lo:hi] = np.where(mask, block, 0.0).sum(axis=1)
    return r


def _kahan_cumsum(values: np.ndarray) -> np.ndarray:
    """Compensated running sums; keeps O(N) prefix accumulations exact."""
    out = np.empty_like(values)
    total = 0.0
    comp = 0.0
    for t, v in enumerate(values):
        y = v - comp
        tmp = total + y
        comp = (tmp - total) - y
        total = tmp
        out[t] = total
    return out


def _sqrt_clamped(d2):
    d2 = np.asarray(d2, dtype=np.float64)
    if (d2 < RADICAND_CLAMP).any():
        raise NumericalError(
            f"squared discrepancy {d2.min():.3e} fell below the "
            f"{RADICAND_CLAMP:.0e} rounding clamp"
        )
    return np.sqrt(np.clip(d2, 0.0, None))


def discrepancy_single(spec: KernelSpec, points) -> float:
    """Kernel discrepancy of the full point set."""
    pts = _as_points(points)
    n, d = pts.shape
    spec._check_dim(d)
    c0 = kernel_constant(spec, d)
    b = _b_products(spec, pts)
    r = _pair_rowsums(spec, pts)
    kd = _kdiag_products(spec, pts)
    d2 = c0 - 2.0 * b.sum() / n + (2.0 * r.sum() + kd.sum()) / n**2
    return float(_sqrt_clamped(d2))


def discrepancy_all_prefixes(spec: KernelSpec, points) -> np.ndarray:
    """Discrepancy of every prefix, entry P-1 covering the first P points.

    Running sums over the pair terms make the whole curve cost O(d N^2),
    the same order as the final entry alone.
    """
    pts = _as_points(points)
    n, d = pts.shape
    spec._check_dim(d)
    c0 = kernel_constant(spec, d)
    b = _b_products(spec, pts)
    r = _pair_rowsums(spec, pts)
    kd = _kdiag_products(spec, pts)
    s1 = _kahan_cumsum(b)
    s2 = _kahan_cumsum(2.0 * r + kd)
    p = np.arange(1, n + 1, dtype=np.float64)
    d2 = c0 - 2.0 * s1 / p + s2 / p**2
    return _sqrt_clamped(d2)


# ---------------------------------------------------------------------------
# prefix-weighted loss

PREFIX_WEIGHT_SCHEMES = ("uniform", "length-proportional", "custom")


@dataclass(frozen=True)
class PrefixWeights:
    """Weights w_P over prefixes P = 2..N of the squared-discrepancy loss.

    ``uniform`` is w_P = 1/(N-2) (with the single-prefix case N=2 pinned to
    w_2 = 1); ``length-proportional`` is w_P = 2P/(N^2+N-2).  Custom values
    are taken as given, one per prefix, unnormalized.
    """

    scheme: str = "uniform"
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.scheme not in PREFIX_WEIGHT_SCHEMES:
            raise ValueError(
                f"unknown weight scheme {self.scheme!r}; expected one of {PREFIX_WEIGHT_SCHEMES}"
            )
        if (self.scheme == "custom") != (self.values is not None):
            raise ValueError("values are required for, and only for, the custom scheme")
        if self.values is not None:
            vals = tuple(float(v) for v in self.values)
            if any(v < 0 for v in vals):
                raise ValueError("custom prefix weights must be nonnegative")
            object.__setattr__(self, "values", vals)

    def resolve(self, n: int) -> np.ndarray:
        """The weight vector for prefixes P = 2..n."""
        if n < 2:
            raise ValueError("prefix weights need n >= 2")
        if self.scheme == "uniform":
            return np.full(n - 1, 1.0 / max(n - 2, 1))
        if self.scheme == "length-proportional":
            p = np.arange(2, n + 1, dtype=np.float64)
            return 2.0 * p / (n**2 + n - 2)
        if len(self.values) != n - 1:
            raise ValueError(
                f"custom weights have length {len(self.values)}, need {n - 1} for n={n}"
            )
        return np.asarray(self.values, dtype=np.float64)


def _loss_coefficients(weights: PrefixWeights, n: int):
    """Per-point linear coefficients of the prefix-weighted loss.

    alpha[i] multiplies b(X_i), beta[i] multiplies k(X_i, X_i), and the
    off-diagonal pair (i < j) enters with coefficient 2 beta[j]; both are
    suffix sums over the prefixes that contain the point (P >= max(i, 2),
    1-based).
    """
    w = weights.resolve(n)
    p = np.arange(2, n + 1, dtype=np.float64)
    beta = np.empty(n)
    alpha = np.empty(n)
    beta[1:] = np.cumsum((w / p**2)[::-1])[::-1]
    alpha[1:] = np.cumsum((-2.0 * w / p)[::-1])[::-1]
    beta[0] = beta[1]
    alpha[0] = alpha[1]
    return w, alpha, beta


def prefix_loss(spec: KernelSpec, weights: PrefixWeights, points) -> float:
    """sum_P w_P D^2(first P points), in one O(d N^2) pass.

    Expanding each D^2(P) and collecting the coefficient of every b_i,
    k_ii, and k_ij term avoids the O(N^3) sum of per-prefix double sums.
    """
    pts = _as_points(points)
    n, d = pts.shape
    if n < 2:
        raise ValueError("prefix loss needs at least 2 points")
    spec._check_dim(d)
    w, alpha, beta = _loss_coefficients(weights, n)
    c0 = kernel_constant(spec, d)
    b = _b_products(spec, pts)
    r = _pair_rowsums(spec, pts)
    kd = _kdiag_products(spec, pts)
    return float(
        w.sum() * c0 + alpha @ b + beta @ kd + 2.0 * (beta @ r)
    )


def _loo_products(factors: np.ndarray) -> np.ndarray:
    """Leave-one-out products along the last axis, without division."""
    d = factors.shape[-1]
    left = np.ones_like(factors)
    right = np.ones_like(factors)
    for t in range(1, d):
        left[..., t] = left[..., t - 1] * factors[..., t - 1]
    for t in range(d - 2, -1, -1):
        right[..., t] = right[..., t + 1] * factors[..., t + 1]
    return left * right


def prefix_loss_grad(
    spec: KernelSpec, weights: PrefixWeights, points
) -> np.ndarray:
    """Gradient of :func:`prefix_loss` with respect to every coordinate."""
    pts = _as_points(points)
    n, d = pts.shape
    if n < 2:
        raise ValueError("prefix loss needs at least 2 points")
    spec._check_dim(d)
    _, alpha, beta = _loss_coefficients(weights, n)
    fam = KERNELS[spec.family]
    gam = None if spec.weights is None else np.asarray(spec.weights)

    bfac = fam.b(pts)
    bder = fam.db(pts)
    kdfac = fam.kdiag(pts)
    kdder = fam.dkdiag(pts)
    if gam is not None:
        bfac = 1.0 + gam * bfac
        bder = gam * bder
        kdfac = 1.0 + gam * kdfac
        kdder = gam * kdder

    grad = alpha[:, None] * bder * _loo_products(bfac)
    grad += beta[:, None] * kdder * _loo_products(kdfac)

    # pair term: 2 sum_{j != m} beta[max(m, j)] * d/dx_m k(X_m, X_j)
    chunk = max(8, min(n, int(2_000_000 / max(n * d, 1)) or 8))
    all_idx = np.arange(n)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        xa = pts[lo:hi, None, :]  # (B, 1, d)
        xb = pts[None, :, :]  # (1, N, d)
        kfac = fam.k(xa, xb)  # (B, N, d)
        dfac = fam.dk(xa, xb)
        if gam is not None:
            kfac = 1.0 + gam * kfac
            dfac = gam * dfac
        coeff = beta[np.maximum(all_idx[lo:hi, None], all_idx[None, :])]
        coeff[all_idx[lo:hi, None] == all_idx[None, :]] = 0.0
        grad[lo:hi] += 2.0 * np.einsum(
            "mj,mjt->mt", coeff, dfac * _loo_products(kfac)
        )
    return grad
