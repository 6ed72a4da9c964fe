"""Closed-form and iterative fits of low-bit weight vectors.

Every routine here solves (exactly or locally) a problem of the form

    minimize  || s * q - w ||      over scale s >= 0 and codes q,

where the code alphabet is {+1,-1} (binary), {0,+1,-1} (ternary), or the
signed levels of a small codebook (m-bit).  The distance is either the l2 or
the l1 norm; the l2 fits reduce to means of magnitudes, the l1 fits to
medians, which is what makes them robust to outlying weights.

Conventions, fixed for cross-implementation determinism:

* binary codes use sign(0) = +1; ternary codes use sign(0) = 0
* even-count medians take the LOWER middle order statistic, not the average
* index sets of largest magnitudes break ties toward the lower index
* objective ties across support sizes resolve toward the smaller support
* an all-zero input yields scale 0.0 with canonical codes and is flagged
  via ``ProjectionResult.degenerate``
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "QuantizedVector",
    "ProjectionResult",
    "Codebook",
    "lower_median",
    "weighted_median",
    "project_binary_l2",
    "project_binary_l1",
    "project_ternary_l1",
    "project_ternary_l2",
    "assign_codes",
    "lloyd_mbit",
    "relax_projection",
]


@dataclass(frozen=True)
class QuantizedVector:
    """A quantized weight vector in factored form: dense = scale * codes.

    ``codes`` holds signed code values: {+1,-1} for binary, {0,+1,-1} for
    ternary, and signed codebook levels for m-bit fits.  ``bits`` is the
    alphabet width m (1 = binary, 2 = ternary, len(levels) for codebooks).
    """

    scale: float
    codes: np.ndarray
    bits: int

    def dense(self) -> np.ndarray:
        return self.scale * self.codes.astype(np.float64)


@dataclass(frozen=True)
class ProjectionResult:
    """Outcome of one projection: the fit, its attained error, and metadata.

    ``objective`` is the norm (not squared) of dense(quantized) - w in the
    norm named by ``norm``.  ``support_size`` is the number of components the
    fit keeps nonzero (D for binary fits, the chosen t for ternary fits).
    ``trace`` carries per-iteration objectives for iterative fits and is None
    for closed-form ones.  ``degenerate`` marks all-zero inputs and stalled
    iterative fits.
    """

    quantized: QuantizedVector
    objective: float
    support_size: int
    norm: str
    degenerate: bool = False
    trace: tuple[float, ...] | None = None


@dataclass(frozen=True)
class Codebook:
    """Positive quantization levels q_1 < ... < q_m; codes come from the
    signed levels, plus 0 when ``include_zero`` is set."""

    levels: tuple[float, ...]
    include_zero: bool = False

    def __post_init__(self):
        if len(self.levels) == 0:
            raise ValidationError("codebook needs at least one level")
        lv = [float(x) for x in self.levels]
        if any(not np.isfinite(x) or x <= 0 for x in lv):
            raise ValidationError(f"codebook levels must be finite and positive, got {lv}")
        if any(b <= a for a, b in zip(lv, lv[1:])):
            raise ValidationError(f"codebook levels must be strictly ascending, got {lv}")
        object.__setattr__(self, "levels", tuple(lv))

    @property
    def bits(self) -> int:
        return len(self.levels)

    def code_values(self) -> np.ndarray:
        """All admissible code values, ordered by |value| ascending with +
        before -; this order encodes the tie rule used by assignment."""
        vals = []
        if self.include_zero:
            vals.append(0.0)
        for q in self.levels:
            vals.extend((q, -q))
        return np.array(vals, dtype=np.float64)


def _as_vector(w, name: str = "w") -> np.ndarray:
    arr = np.asarray(w, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValidationError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def lower_median(values) -> float:
    """Lower median: the ceil(n/2)-th smallest value, exact order statistic.

    For odd n this is the usual middle element; for even n the lower of the
    two middle elements (never an average, so the result is always an input
    element and even-count behavior is deterministic across platforms).
    """
    v = _as_vector(values, "values")
    k = (v.size - 1) // 2
    return float(np.partition(v, k)[k])


def weighted_median(values, weights) -> float:
    """Weighted median: a minimizer of sum_i weights_i * |s - values_i|.

    Pairs are sorted ascending by value; the result is the first sorted value
    whose doubled cumulative weight strictly exceeds the total weight.  On a
    flat stretch of the objective this picks the stretch's upper endpoint.
    """
    v = _as_vector(values, "values")
    h = np.asarray(weights, dtype=np.float64).ravel()
    if h.shape != v.shape:
        raise ValidationError(f"values and weights disagree in length: {v.size} vs {h.size}")
    if not np.all(np.isfinite(h)) or np.any(h <= 0):
        raise ValidationError("weights must be finite and strictly positive")
    order = np.argsort(v, kind="stable")
    cum = np.cumsum(h[order])
    total = cum[-1]
    k = int(np.argmax(2.0 * cum > total))
    return float(v[order[k]])


def _degenerate_result(d: int, codes: np.ndarray, bits: int, norm: str,
                       support: int) -> ProjectionResult:
    qv = QuantizedVector(scale=0.0, codes=codes, bits=bits)
    return ProjectionResult(quantized=qv, objective=0.0, support_size=support,
                            norm=norm, degenerate=True)


def project_binary_l2(w) -> ProjectionResult:
    """Best binary fit in the l2 sense: scale = mean |w_j|, codes = sign(w).

    Args:
        w: array-like of weights; treated as a flat vector.

    Returns:
        ProjectionResult with the globally optimal scale/codes and the
        attained l2 distance.
    """
    w = _as_vector(w)
    codes = np.where(w >= 0, 1, -1).astype(np.int64)
    if not w.any():
        return _degenerate_result(w.size, codes, 1, "l2", w.size)
    scale = float(np.abs(w).mean())
    objective = float(np.linalg.norm(scale * codes - w))
    qv = QuantizedVector(scale=scale, codes=codes, bits=1)
    return ProjectionResult(qv, objective, w.size, "l2")


def project_binary_l1(w) -> ProjectionResult:
    """Best binary fit in the l1 sense: scale = median |w_j|, codes = sign(w).

    The median (lower median for even length) makes the scale insensitive to
    a few outlying weights, unlike the l2 fit's mean.
    """
    w = _as_vector(w)
    codes = np.where(w >= 0, 1, -1).astype(np.int64)
    if not w.any():
        return _degenerate_result(w.size, codes, 1, "l1", w.size)
    scale = lower_median(np.abs(w))
    objective = float(np.abs(scale * codes - w).sum())
    qv = QuantizedVector(scale=scale, codes=codes, bits=1)
    return ProjectionResult(qv, objective, w.size, "l1")


def _magnitude_order(w: np.ndarray) -> np.ndarray:
    # descending magnitude, ties toward the lower index (stable sort on -|w|)
    return np.argsort(-np.abs(w), kind="stable")


def project_ternary_l1(w) -> ProjectionResult:
    """Best ternary fit in the l1 sense, by exact scan over support sizes.

    For each support size t, the candidate keeps the t largest magnitudes and
    the optimal scale is their (lower) median; its objective splits into the
    l1 mass of the dropped entries plus the median's absolute deviations over
    the kept ones.  The scan returns the t minimizing that objective,
    preferring smaller t on ties.
    """
    w = _as_vector(w)
    d = w.size
    if not w.any():
        return _degenerate_result(d, np.zeros(d, dtype=np.int64), 2, "l1", 0)
    order = _magnitude_order(w)
    mags = np.abs(w)[order]                    # non-increasing
    tail = np.concatenate([np.cumsum(mags[::-1])[::-1][1:], [0.0]])
    best_t, best_obj, best_scale = 0, np.inf, 0.0
    for t in range(1, d + 1):
        kept = mags[:t]
        med = float(kept[t // 2])              # lower median of a descending slice
        obj = float(np.abs(kept - med).sum()) + float(tail[t - 1])
        if obj < best_obj:
            best_t, best_obj, best_scale = t, obj, med
    codes = np.zeros(d, dtype=np.int64)
    keep = order[:best_t]
    codes[keep] = np.sign(w[keep]).astype(np.int64)
    qv = QuantizedVector(scale=best_scale, codes=codes, bits=2)
    objective = float(np.abs(best_scale * codes - w).sum())
    return ProjectionResult(qv, objective, best_t, "l1")


def project_ternary_l2(w) -> ProjectionResult:
    """Best ternary fit in the l2 sense.

    The optimal support of size t is always the t largest magnitudes, with
    scale equal to their mean; maximizing (sum of kept magnitudes)^2 / t over
    t is equivalent to minimizing the l2 error.  Ties prefer smaller t.
    """
    w = _as_vector(w)
    d = w.size
    if not w.any():
        return _degenerate_result(d, np.zeros(d, dtype=np.int64), 2, "l2", 0)
    order = _magnitude_order(w)
    mags = np.abs(w)[order]
    prefix = np.cumsum(mags)
    scores = prefix ** 2 / np.arange(1, d + 1)
    best_t = int(np.argmax(scores)) + 1        # argmax takes the first maximum
    scale = float(prefix[best_t - 1] / best_t)
    codes = np.zeros(d, dtype=np.int64)
    keep = order[:best_t]
    codes[keep] = np.sign(w[keep]).astype(np.int64)
    qv = QuantizedVector(scale=scale, codes=codes, bits=2)
    objective = float(np.linalg.norm(scale * codes - w))
    return ProjectionResult(qv, objective, best_t, "l2")


def assign_codes(w, scale: float, codebook: Codebook) -> np.ndarray:
    """Nearest-code assignment at a fixed scale.

    Each component gets the admissible code value minimizing
    |scale * code - w_j|.  Ties resolve toward the smaller |code|, then
    toward the positive sign (encoded by the candidate ordering).
    """
    w = _as_vector(w)
    if not np.isfinite(scale) or scale < 0:
        raise ValidationError(f"scale must be finite and >= 0, got {scale}")
    cands = codebook.code_values()
    errs = np.abs(scale * cands[:, None] - w[None, :])
    return cands[np.argmin(errs, axis=0)]


def lloyd_mbit(w, codebook: Codebook, *, max_iters: int = 50, tol: float = 1e-10,
               init_scale: float | None = None) -> ProjectionResult:
    """Alternating l1 fit over a small codebook (Lloyd-style descent).

    Alternates a nearest-code assignment at the current scale with an exact
    scale update: the scale minimizing sum_j |s * code_j - w_j| over the
    nonzero codes is the weighted median of w_j / code_j with weights
    |code_j|.  Both half-steps are exact minimizers, so the recorded
    objective never increases.  Stops when the per-iteration decrease falls
    below ``tol`` or after ``max_iters`` iterations.

    Args:
        w: array-like of weights; treated as a flat vector.
        codebook: admissible positive levels, optionally including zero.
        max_iters: iteration cap, >= 1.
        tol: stopping threshold on the objective decrease, >= 0.
        init_scale: starting scale; defaults to median |w_j|.

    Returns:
        ProjectionResult with norm "l1" and the per-iteration objective
        trace.  A fit whose assignment zeroes every component is returned
        as-is with ``degenerate=True``.
    """
    w = _as_vector(w)
    if max_iters < 1:
        raise ValidationError(f"max_iters must be >= 1, got {max_iters}")
    if not np.isfinite(tol) or tol < 0:
        raise ValidationError(f"tol must be finite and >= 0, got {tol}")
    bits = codebook.bits
    if not w.any():
        codes = (np.zeros(w.size) if codebook.include_zero
                 else np.full(w.size, codebook.levels[0]))
        return ProjectionResult(QuantizedVector(0.0, codes, bits), 0.0,
                                int(np.count_nonzero(codes)), "l1",
                                degenerate=True, trace=())
    if init_scale is None:
        scale = lower_median(np.abs(w))
    else:
        if not np.isfinite(init_scale) or init_scale < 0:
            raise ValidationError(f"init_scale must be finite and >= 0, got {init_scale}")
        scale = float(init_scale)

    trace: list[float] = []
    prev = np.inf
    codes = np.zeros(w.size)
    for _ in range(max_iters):
        codes = assign_codes(w, scale, codebook)
        nz = codes != 0
        if not nz.any():
            # every component snapped to zero; nothing left to rescale
            obj = float(np.abs(w).sum())
            return ProjectionResult(QuantizedVector(scale, codes, bits), obj, 0,
                                    "l1", degenerate=True, trace=tuple(trace))
        # the unconstrained 1-d minimizer may be negative only in stalled
        # corner cases; clamping keeps the scale invariant s >= 0
        scale = max(0.0, weighted_median(w[nz] / codes[nz], np.abs(codes[nz])))
        obj = float(np.abs(scale * codes - w).sum())
        trace.append(obj)
        if prev - obj < tol:
            break
        prev = obj

    qv = QuantizedVector(scale, codes, bits)
    objective = float(np.abs(qv.dense() - w).sum())
    return ProjectionResult(qv, objective, int(np.count_nonzero(codes)), "l1",
                            trace=tuple(trace))


def relax_projection(w_f, lam: float, norm: str = "l2") -> np.ndarray:
    """Relaxed (soft) binary projection: a convex blend of w_f with its hard
    binary projection, (lam * dense(proj(w_f)) + w_f) / (lam + 1).

    lam = 0 returns w_f unchanged; lam -> inf approaches the hard projection.
    The returned array keeps the input's shape.
    """
    arr = np.asarray(w_f, dtype=np.float64)
    if not np.isfinite(lam) or lam < 0:
        raise ValidationError(f"lam must be finite and >= 0, got {lam}")
    if norm == "l2":
        res = project_binary_l2(arr.ravel())
    elif norm == "l1":
        res = project_binary_l1(arr.ravel())
    else:
        raise ValidationError(f"norm must be 'l1' or 'l2', got {norm!r}")
    dense = res.quantized.dense().reshape(arr.shape)
    return (lam * dense + arr) / (lam + 1.0)
