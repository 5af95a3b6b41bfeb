"""Closed-form machinery of focal-loss confidence calibration.

A classifier trained to minimize the focal loss converges (pointwise) to a
score vector that is a *distorted* version of the true class-posterior
probabilities.  The distortion is governed by a scalar weight curve

    w_g(v) = (1 - v)^g - g * (1 - v)^(g - 1) * v * log(v),      v in [0, 1],

and is undone in closed form: the map ``s_g(v) = v / w_g(v)`` is strictly
increasing, and normalizing ``s_g`` over the entries of a score vector
recovers the posterior.  This module implements the losses, the weight
curve, the score map, the recovery transform, the two-class shortcut, and
membership in the transform's fixed-point set (vectors that are uniform
over their support).

All functions are pure and stateless; they are safe to call concurrently.
Scores are validated as probability vectors (entries in [0, 1] summing to
one within ``SIMPLEX_TOL``) and are never renormalized here.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    DomainError,
    InvalidSimplexError,
    SingularityError,
)

SIMPLEX_TOL = 1e-9
CLAMP_EPS = 1e-12


class LossKind(enum.Enum):
    FOCAL = "focal"
    CROSS_ENTROPY = "cross_entropy"


@dataclass(frozen=True)
class LossSpec:
    """A loss choice for training/evaluation.

    ``FOCAL`` with ``gamma == 0`` evaluates identically to
    ``CROSS_ENTROPY``; the ``gamma`` field is ignored for cross-entropy.
    """

    kind: LossKind
    gamma: float = 0.0

    def __post_init__(self):
        require_gamma(self.gamma)

    @property
    def effective_gamma(self) -> float:
        return 0.0 if self.kind is LossKind.CROSS_ENTROPY else self.gamma


def require_gamma(gamma: float) -> float:
    """Validate the focusing parameter (must be finite and >= 0)."""
    g = float(gamma)
    if not np.isfinite(g) or g < 0.0:
        raise DomainError(f"gamma must be a finite value >= 0, got {gamma!r}")
    return g


def as_simplex(p, tol: float = SIMPLEX_TOL, line: int | None = None) -> np.ndarray:
    """Validate ``p`` as a probability vector and return it as float64.

    Entries must lie in [0, 1] and sum to one, both within ``tol``.
    Entries within ``tol`` of the boundary are clipped into [0, 1] so that
    downstream logs never see a negative operand; values are otherwise
    returned unchanged (no renormalization).
    """
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise DimensionError(
            f"expected a 1-D probability vector with >= 2 entries, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidSimplexError("non-finite entry in probability vector", line)
    if arr.min() < -tol or arr.max() > 1.0 + tol:
        raise InvalidSimplexError(
            f"entries outside [0, 1]: min={arr.min():.3e} max={arr.max():.3e}", line
        )
    total = float(arr.sum())
    if abs(total - 1.0) > tol:
        raise InvalidSimplexError(f"entries sum to {total!r}, not 1", line)
    return np.clip(arr, 0.0, 1.0)


def one_hot(y: int, k: int) -> np.ndarray:
    """One-hot vector for 1-based class ``y`` among ``k`` classes."""
    if k < 2:
        raise DimensionError(f"need k >= 2 classes, got {k}")
    if not 1 <= y <= k:
        raise DomainError(f"label {y} outside [1..{k}]")
    e = np.zeros(k)
    e[y - 1] = 1.0
    return e


def focal_loss(u, v, gamma: float, safe: bool = False) -> float:
    """Focal loss between prediction ``u`` and target ``v``.

        -sum_i v_i * (1 - u_i)^gamma * log(u_i)

    Returns ``+inf`` when some ``u_i`` is exactly 0 where ``v_i > 0``
    (a sentinel, not an error).  With ``safe=True`` predictions are
    clamped to ``[CLAMP_EPS, 1]`` before the log instead.
    """
    g = require_gamma(gamma)
    uu = as_simplex(u)
    vv = as_simplex(v)
    if uu.size != vv.size:
        raise DimensionError(f"class counts differ: {uu.size} vs {vv.size}")
    if g == 0.0:
        return cross_entropy(u, v, safe=safe)
    if safe:
        uu = np.clip(uu, CLAMP_EPS, 1.0)
    active = vv > 0.0
    if np.any(uu[active] == 0.0):
        return float("inf")
    ua = uu[active]
    return float(-(vv[active] * (1.0 - ua) ** g * np.log(ua)).sum())


def cross_entropy(u, v, safe: bool = False) -> float:
    """Cross-entropy ``-sum_i v_i log(u_i)``; the ``gamma == 0`` focal loss."""
    uu = as_simplex(u)
    vv = as_simplex(v)
    if uu.size != vv.size:
        raise DimensionError(f"class counts differ: {uu.size} vs {vv.size}")
    if safe:
        uu = np.clip(uu, CLAMP_EPS, 1.0)
    active = vv > 0.0
    if np.any(uu[active] == 0.0):
        return float("inf")
    return float(-(vv[active] * np.log(uu[active])).sum())


def _weight_interior(v: np.ndarray, g: float) -> np.ndarray:
    # v strictly inside (0, 1); factored to cost one pow and one log
    w = (1.0 - v) ** g
    return w * (1.0 - g * v * np.log(v) / (1.0 - v))


def confidence_weight(v, gamma: float):
    """Weight curve ``(1 - v)^g - g (1 - v)^(g-1) v log v`` on [0, 1].

    Endpoint limits: 1 at ``v == 0`` (``v log v -> 0``) and 0 at
    ``v == 1``.  Identically 1 when ``gamma == 0``.  Accepts a scalar or
    an array; returns the same shape.
    """
    g = require_gamma(gamma)
    arr = np.asarray(v, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise DomainError(f"score outside [0, 1]: {v!r}")
    if g == 0.0:
        out = np.ones_like(arr)
    else:
        out = np.empty_like(arr)
        interior = (arr > 0.0) & (arr < 1.0)
        out[interior] = _weight_interior(arr[interior], g)
        out[arr == 0.0] = 1.0
        out[arr == 1.0] = 0.0
    return float(out[0]) if scalar else out


def recovery_score(v, gamma: float):
    """Strictly increasing score map ``v / confidence_weight(v)`` on [0, 1).

    Maps 0 to 0 and diverges as ``v -> 1``; ``v == 1`` raises
    ``SingularityError`` (callers must special-case one-hot vectors).
    Identity when ``gamma == 0``.
    """
    g = require_gamma(gamma)
    arr = np.asarray(v, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise DomainError(f"score outside [0, 1]: {v!r}")
    if np.any(arr == 1.0):
        raise SingularityError("recovery_score is singular at v == 1")
    if g == 0.0:
        out = arr.copy()
    else:
        out = np.zeros_like(arr)
        interior = arr > 0.0
        vi = arr[interior]
        out[interior] = vi / _weight_interior(vi, g)
    return float(out[0]) if scalar else out


def is_uniform_on_support(p, tol: float) -> bool:
    """True when every entry is within ``tol`` of 0 or of ``max(p)``.

    Such vectors are uniform over their support (one-hot and uniform
    vectors included) and are exactly the fixed points of
    ``recover_posterior``.
    """
    if tol < 0.0:
        raise DomainError(f"tol must be >= 0, got {tol}")
    arr = as_simplex(p)
    mx = arr.max()
    return bool(np.all((arr <= tol) | (np.abs(arr - mx) <= tol)))


def recover_posterior(p, gamma: float) -> np.ndarray:
    """Recover class-posterior probabilities from a focal score vector.

    Computes ``recovery_score`` entrywise and normalizes:

        out_i = s_g(p_i) / sum_l s_g(p_l).

    Identity when ``gamma == 0``.  Vectors that are uniform over their
    support (detected at tolerance ``SIMPLEX_TOL``) are returned verbatim:
    they are fixed points, and the convention extends the transform to
    one-hot inputs where the score map itself is singular.  The argmax
    (lowest index on ties) is always preserved.
    """
    g = require_gamma(gamma)
    arr = as_simplex(p)
    if g == 0.0:
        return arr.copy()
    if is_uniform_on_support(arr, SIMPLEX_TOL):
        return arr.copy()
    scores = recovery_score(arr, g)
    return scores / scores.sum()


def recover_posterior_rows(rows, gamma: float, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Row-wise :func:`recover_posterior` for an ``(n, k)`` stack.

    Vectorized equivalent of transforming each row separately: rows that
    are uniform over their support pass through verbatim, the rest go
    through the normalized score map.
    """
    g = require_gamma(gamma)
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise DimensionError(f"expected an (n, k) matrix with k >= 2, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidSimplexError("non-finite entry in probability rows")
    if arr.size and (arr.min() < -tol or arr.max() > 1.0 + tol):
        raise InvalidSimplexError("entries outside [0, 1]")
    sums = arr.sum(axis=1)
    if arr.size and np.abs(sums - 1.0).max() > tol:
        bad = int(np.abs(sums - 1.0).argmax())
        raise InvalidSimplexError(f"row {bad} sums to {sums[bad]!r}, not 1")
    arr = np.clip(arr, 0.0, 1.0)
    out = arr.copy()
    if g == 0.0 or not arr.size:
        return out
    mx = arr.max(axis=1, keepdims=True)
    fixed = np.all((arr <= tol) | (np.abs(arr - mx) <= tol), axis=1)
    general = ~fixed
    if np.any(general):
        sub = arr[general]
        positive = sub > 0.0
        scores = np.zeros_like(sub)
        clipped = np.where(positive, sub, 0.5)
        scores[positive] = (clipped / _weight_interior(clipped, g))[positive]
        out[general] = scores / scores.sum(axis=1, keepdims=True)
    return out


def recover_binary(q, gamma: float) -> float:
    """Two-class posterior of the top class from its focal score ``q``.

    Closed form (independent of :func:`recover_posterior`):

        a = q^g / (1 - q) - g * q^(g - 1) * log(1 - q)
        b = (1 - q)^g / q - g * (1 - q)^(g - 1) * log(q)
        posterior = a / (a + b)

    Reduces to the identity at ``gamma == 0`` and exceeds ``q`` whenever
    ``q in (0.5, 1)`` with ``gamma > 0``.  ``q`` must lie strictly inside
    (0, 1).
    """
    g = require_gamma(gamma)
    qq = float(q)
    if not 0.0 < qq < 1.0:
        raise DomainError(f"binary score must lie strictly inside (0, 1), got {q!r}")
    a = qq**g / (1.0 - qq) - g * qq ** (g - 1.0) * np.log1p(-qq)
    b = (1.0 - qq) ** g / qq - g * (1.0 - qq) ** (g - 1.0) * np.log(qq)
    return float(a / (a + b))


def argmax_lowest(p) -> int:
    """Index of the largest entry, lowest index winning ties (0-based)."""
    return int(np.argmax(np.asarray(p)))
