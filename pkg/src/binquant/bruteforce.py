"""Brute-force reference fits for cross-checking the closed-form projectors.

Everything here is deliberately naive: enumerate all code vectors where
feasible, scan the scale over an exhaustive candidate set (every breakpoint
of the 1-d objective plus a dense safety grid), and evaluate the true
objective at every candidate.  No order statistics, no cumulative-sum
shortcuts; independence from projections.py is the point.

Dimension caps keep the enumeration tractable; callers exceeding them get a
ValidationError (the CLI surfaces that as a validation failure).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ValidationError
from .projections import Codebook, ProjectionResult, QuantizedVector, _as_vector

__all__ = [
    "BINARY_DIM_CAP",
    "TERNARY_DIM_CAP",
    "MBIT_DIM_CAP",
    "MBIT_LEVEL_CAP",
    "oracle_binary",
    "oracle_ternary_l1",
    "oracle_mbit_l1",
]

BINARY_DIM_CAP = 12
TERNARY_DIM_CAP = 10
MBIT_DIM_CAP = 6
MBIT_LEVEL_CAP = 3
_GRID_POINTS = 2_000


def _check_dim(d: int, cap: int, what: str) -> None:
    if d > cap:
        raise ValidationError(f"{what} reference fit caps the dimension at {cap}, got {d}")


def _eval(scale: float, codes: np.ndarray, w: np.ndarray, norm: str) -> float:
    diff = scale * codes.astype(np.float64) - w
    if norm == "l1":
        return float(np.abs(diff).sum())
    return float(np.linalg.norm(diff))


def oracle_binary(w, norm: str) -> ProjectionResult:
    """Exhaustive-scan binary fit (codes by sign, scale by candidate scan).

    The scale scan covers every breakpoint of the 1-d objective ({|w_j|} for
    l1, the magnitude mean for l2) plus a 2000-point safety grid over
    [0, max |w_j|]; the breakpoint set alone already contains the global
    minimizer, so the returned objective is the global minimum.
    """
    if norm not in ("l1", "l2"):
        raise ValidationError(f"norm must be 'l1' or 'l2', got {norm!r}")
    w = _as_vector(w)
    _check_dim(w.size, BINARY_DIM_CAP, "binary")
    codes = np.where(w >= 0, 1, -1).astype(np.int64)
    mags = np.abs(w)
    exact = mags if norm == "l1" else np.array([mags.mean()])
    cands = np.concatenate([exact, np.linspace(0.0, mags.max(), _GRID_POINTS)])
    diffs = cands[:, None] * codes[None, :] - w[None, :]
    objs = (np.abs(diffs).sum(axis=1) if norm == "l1"
            else np.sqrt((diffs ** 2).sum(axis=1)))
    k = int(np.argmin(objs))
    scale = float(cands[k])
    qv = QuantizedVector(scale, codes, 1)
    return ProjectionResult(qv, float(objs[k]), w.size, norm,
                            degenerate=not w.any())


@lru_cache(maxsize=None)
def _ternary_codes(d: int) -> np.ndarray:
    # all of {-1, 0, +1}^d, one row per code vector
    grids = np.meshgrid(*([np.array([-1, 0, 1], dtype=np.int8)] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def oracle_ternary_l1(w) -> ProjectionResult:
    """Exhaustive ternary l1 fit: every code vector in {0,+1,-1}^D (the
    all-zero vector excluded unless w is zero), scale scanned over
    {0} union {|w_j|}.

    Restricting the scan to nonnegative breakpoints is exact: for a fixed
    code vector the objective is piecewise linear in s on s >= 0 with
    breakpoints only at nonnegative values of w_j * q_j, a subset of {|w_j|}.
    """
    w = _as_vector(w)
    d = w.size
    _check_dim(d, TERNARY_DIM_CAP, "ternary")
    if not w.any():
        # canonical zero-vector convention: scale 0, all-zero codes
        qv = QuantizedVector(0.0, np.zeros(d, dtype=np.int64), 2)
        return ProjectionResult(qv, 0.0, 0, "l1", degenerate=True)
    codes = _ternary_codes(d)
    codes = codes[np.any(codes != 0, axis=1)]
    cands = np.concatenate([[0.0], np.abs(w)])
    best = (np.inf, 0.0, 0)
    for s in cands:
        objs = np.abs(s * codes - w[None, :]).sum(axis=1)
        k = int(np.argmin(objs))
        if objs[k] < best[0]:
            best = (float(objs[k]), float(s), k)
    obj, scale, k = best
    row = codes[k].astype(np.int64)
    qv = QuantizedVector(scale, row, 2)
    return ProjectionResult(qv, obj, int(np.count_nonzero(row)), "l1",
                            degenerate=not w.any())


@lru_cache(maxsize=None)
def _assignments(values: tuple[float, ...], d: int) -> np.ndarray:
    vals = np.array(values, dtype=np.float64)
    grids = np.meshgrid(*([vals] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def oracle_mbit_l1(w, codebook: Codebook) -> ProjectionResult:
    """Exhaustive m-bit l1 fit: every assignment of signed codebook levels,
    scale scanned over {0} union {|w_j| / level}.

    Same breakpoint argument as the ternary fit: for fixed codes the
    objective's breakpoints on s >= 0 are the nonnegative w_j / code_j, all
    of which appear among {|w_j| / level}.
    """
    w = _as_vector(w)
    d = w.size
    _check_dim(d, MBIT_DIM_CAP, "m-bit")
    if codebook.bits > MBIT_LEVEL_CAP:
        raise ValidationError(
            f"m-bit reference fit caps the codebook at {MBIT_LEVEL_CAP} levels, got {codebook.bits}")
    codes = _assignments(tuple(codebook.code_values()), d)
    if codebook.include_zero and w.any():
        codes = codes[np.any(codes != 0, axis=1)]
    cands = [0.0]
    for q in codebook.levels:
        cands.extend(np.abs(w) / q)
    best = (np.inf, 0.0, 0)
    for s in cands:
        objs = np.abs(s * codes - w[None, :]).sum(axis=1)
        k = int(np.argmin(objs))
        if objs[k] < best[0]:
            best = (float(objs[k]), float(s), k)
    obj, scale, k = best
    row = codes[k]
    qv = QuantizedVector(scale, row, codebook.bits)
    return ProjectionResult(qv, obj, int(np.count_nonzero(row)), "l1",
                            degenerate=not w.any())
