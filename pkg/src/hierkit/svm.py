"""Exponential chi-squared kernel and a dual soft-margin SVM solver.

The solver works on a precomputed Gram matrix and runs pairwise updates on
the most violating pair of dual variables until the maximal KKT violation
drops under a tolerance. It is written to be checkable against a generic
convex-QP solution of the same dual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

DEFAULT_EPSILON = 1e-10
KKT_TOL = 1e-3
MAX_PAIR_UPDATES = 100_000


@dataclass(frozen=True)
class KernelConfig:
    gamma: float
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ContractViolation(f"gamma must be > 0, got {self.gamma}")
        if not self.epsilon > 0:
            raise ContractViolation(
                f"epsilon must be > 0, got {self.epsilon}"
            )


@dataclass
class SvmModel:
    alpha: np.ndarray      # dual coefficients, 0 <= alpha_i <= C
    labels: np.ndarray     # +-1 per training item
    bias: float
    C: float
    train_ids: list[str] | None = None

    @property
    def coef(self) -> np.ndarray:
        """Support coefficients alpha_i * y_i, full training length."""
        return self.alpha * self.labels


def _as_matrix(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ContractViolation(f"{name} must be non-empty 2-D")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} contains non-finite values")
    return arr


def chi2_distances(x, y=None, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Pairwise chi-squared distances sum_m (x_m-y_m)^2 / (x_m+y_m+eps).

    Components must be non-negative (l1-normalized histograms expected).
    Terms with a zero denominator are treated as zero, so epsilon=0 is
    usable on inputs without coincident zero bins.
    """
    a = _as_matrix(x, "X")
    b = a if y is None else _as_matrix(y, "Y")
    if a.shape[1] != b.shape[1]:
        raise ContractViolation(
            f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}"
        )
    if np.any(a < 0) or np.any(b < 0):
        raise ContractViolation("chi-squared inputs must be non-negative")
    if epsilon < 0:
        raise ContractViolation(f"epsilon must be >= 0, got {epsilon}")
    out = np.empty((a.shape[0], b.shape[0]), dtype=np.float64)
    for i in range(a.shape[0]):
        diff = a[i] - b
        denom = a[i] + b + epsilon
        nonzero = denom > 0.0
        terms = np.square(diff) / np.where(nonzero, denom, 1.0)
        out[i] = np.where(nonzero, terms, 0.0).sum(axis=1)
    return out


def chi2_kernel(x, y=None, config: KernelConfig | None = None,
                gamma: float | None = None,
                epsilon: float | None = None) -> np.ndarray:
    """K[i][j] = exp(-gamma * chi2(x_i, y_j)); 1.0 exactly on the diagonal."""
    if config is not None:
        gamma = config.gamma if gamma is None else gamma
        epsilon = config.epsilon if epsilon is None else epsilon
    if gamma is None:
        raise ContractViolation("gamma is required (pass a value or a config)")
    if epsilon is None:
        epsilon = DEFAULT_EPSILON
    if not gamma > 0:
        raise ContractViolation(f"gamma must be > 0, got {gamma}")
    return np.exp(-gamma * chi2_distances(x, y, epsilon=epsilon))


def mean_chi2_gamma(x, epsilon: float = DEFAULT_EPSILON) -> float:
    """Bandwidth heuristic: 1 / mean pairwise chi-squared distance.

    Falls back to 1.0 when all vectors coincide.
    """
    a = _as_matrix(x, "X")
    if a.shape[0] < 2:
        return 1.0
    dists = chi2_distances(a, epsilon=epsilon)
    total = float(np.triu(dists, k=1).sum())
    pairs = a.shape[0] * (a.shape[0] - 1) / 2
    mean = total / pairs
    return 1.0 / mean if mean > 0 else 1.0


def train_kernel_svm(gram, labels, C: float,
                     tol: float = KKT_TOL,
                     max_updates: int = MAX_PAIR_UPDATES,
                     train_ids: list[str] | None = None) -> SvmModel:
    """Solve the dual soft-margin problem on a precomputed Gram matrix.

    Repeatedly picks the maximally violating pair of dual variables and
    solves the two-variable subproblem analytically, stopping when the
    violation gap falls under ``tol`` (or after ``max_updates`` pair
    updates). The box constraint 0 <= alpha <= C holds by construction and
    sum(alpha_i y_i) stays at zero exactly.
    """
    K = _as_matrix(gram, "gram")
    n = K.shape[0]
    if K.shape[1] != n:
        raise ContractViolation(f"gram must be square, got {K.shape}")
    if not np.allclose(K, K.T, atol=1e-10):
        raise ContractViolation("gram matrix is not symmetric")
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != (n,):
        raise ContractViolation(
            f"labels length {y.shape} does not match gram size {n}"
        )
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ContractViolation("labels must be -1 or +1")
    if np.all(y == y[0]):
        raise ContractViolation("need at least one item of each label")
    if not C > 0:
        raise ContractViolation(f"C must be > 0, got {C}")

    alpha = np.zeros(n)
    # f0_i = sum_j alpha_j y_j K_ij, the bias-free decision value
    f0 = np.zeros(n)

    def up_mask():
        return ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))

    def down_mask():
        return ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))

    for _ in range(max_updates):
        neg_e = y - f0  # -E0_t = y_t - f0_t
        up = up_mask()
        down = down_mask()
        m_val = np.max(neg_e[up])
        big_m = np.min(neg_e[down])
        if m_val - big_m < tol:
            break
        i = int(np.flatnonzero(up)[np.argmax(neg_e[up])])
        j = int(np.flatnonzero(down)[np.argmin(neg_e[down])])

        # analytic two-variable step (Platt), biasless errors E0 = f0 - y
        if y[i] != y[j]:
            low = max(0.0, alpha[j] - alpha[i])
            high = min(C, C + alpha[j] - alpha[i])
        else:
            low = max(0.0, alpha[i] + alpha[j] - C)
            high = min(C, alpha[i] + alpha[j])
        if low >= high:
            break
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        eta = max(eta, 1e-12)
        aj_old, ai_old = alpha[j], alpha[i]
        aj = aj_old + y[j] * ((f0[i] - y[i]) - (f0[j] - y[j])) / eta
        aj = min(high, max(low, aj))
        ai = ai_old + y[i] * y[j] * (aj_old - aj)
        alpha[i], alpha[j] = ai, aj
        f0 += (ai - ai_old) * y[i] * K[i] + (aj - aj_old) * y[j] * K[j]

    neg_e = y - f0
    free = (alpha > 1e-8) & (alpha < C - 1e-8)
    if np.any(free):
        bias = float(np.mean(neg_e[free]))
    else:
        up = up_mask()
        down = down_mask()
        bias = float((np.max(neg_e[up]) + np.min(neg_e[down])) / 2.0)
    return SvmModel(alpha=alpha, labels=y, bias=bias, C=C, train_ids=train_ids)


def kkt_violation(model: SvmModel, gram) -> float:
    """Maximal violating-pair gap m - M; at most ``tol`` after training."""
    K = _as_matrix(gram, "gram")
    y = model.labels
    alpha = model.alpha
    f0 = K @ model.coef
    neg_e = y - f0
    up = ((y > 0) & (alpha < model.C)) | ((y < 0) & (alpha > 0))
    down = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < model.C))
    return float(np.max(neg_e[up]) - np.min(neg_e[down]))


def svm_score(model: SvmModel, gram_rows) -> np.ndarray:
    """Decision values: score_j = sum_i alpha_i y_i K(test_j, train_i) + b."""
    rows = _as_matrix(gram_rows, "gram_rows")
    if rows.shape[1] != model.alpha.shape[0]:
        raise ContractViolation(
            f"gram_rows has {rows.shape[1]} columns, model expects "
            f"{model.alpha.shape[0]}"
        )
    return rows @ model.coef + model.bias
