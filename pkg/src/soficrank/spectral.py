"""Singular-value profiles, counting functions, and moment comparisons.

The dense path diagonalizes the Gram matrix of a represented group-ring
matrix and is the reference for everything downstream.  Moment comparisons
pit the finite-level traces (1/d) Tr(gram^k) against the exact ring-side
moments; at exact levels the two agree exactly whenever no support element
of (f* f)^k acts with fixed points, and the report carries that flag.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .groupring import GroupRingMatrix, trace_moment
from .groups import SoficLevel, sofic_permutation
from .soficrep import SoficMatrix, gram, represent

# Ties at a threshold count as inside the interval; thresholds sitting exactly
# on an eigenvalue are nudged by this amount.
TIE_EPS = 1e-12

_EXACT_FLOAT_LIMIT = 2.0 ** 53


@dataclass
class SpectralProfile:
    level_index: int
    degree: int
    block_shape: tuple[int, int]
    values: np.ndarray              # ascending singular values, length n * degree
    method: str = "dense-eigen"

    def max_value(self) -> float:
        return float(self.values[-1]) if self.values.size else 0.0


@dataclass
class CountingFunction:
    level_index: int
    degree: int
    etas: list[float]
    values: list[float]             # (1/degree) * #{singular values <= eta}


@dataclass
class MomentReport:
    level_index: int
    degree: int
    rows: list = field(default_factory=list)
    method: str = "certified-integer"


def singular_profile(a: SoficMatrix, method: str = "dense") -> SpectralProfile:
    """Singular values of the represented matrix, via its Gram matrix."""
    if method != "dense":
        raise ValueError("use count_below_iterative for the iterative path")
    g = gram(a)
    gd = g.to_dense().astype(float)
    eigs = scipy.linalg.eigvalsh(gd)
    if eigs.size and eigs[0] < -1e-10 * max(1.0, abs(eigs[-1])):
        raise ArithmeticError(f"gram matrix not PSD within tolerance: {eigs[0]}")
    eigs = np.clip(eigs, 0.0, None)
    return SpectralProfile(
        level_index=a.level_index,
        degree=a.degree,
        block_shape=a.block_shape,
        values=np.sort(np.sqrt(eigs)),
    )


def counting_function(profile: SpectralProfile, etas) -> CountingFunction:
    """Normalized counts of singular values at most eta (closed at the tie)."""
    etas = [float(e) for e in etas]
    if any(e < 0 for e in etas):
        raise ValueError("thresholds must be nonnegative")
    values = [
        float(np.count_nonzero(profile.values <= e + TIE_EPS)) / profile.degree
        for e in etas
    ]
    return CountingFunction(profile.level_index, profile.degree, etas, values)


def count_below_iterative(
    a: SoficMatrix, eta: float, k_start: int = 8, k_cap: int = 256
) -> dict:
    """Count singular values <= eta without a dense decomposition.

    Shift-inverted Lanczos around a small negative shift retrieves the
    smallest Gram eigenvalues; each Ritz pair is re-verified by its residual,
    and the count is returned as an interval [lower, upper] together with a
    completeness flag (the largest retrieved eigenvalue must clear eta^2).
    Clustered spectra can in principle hide eigenvalues from Lanczos; the
    dense path is the reference oracle.
    """
    g = gram(a).to_sparse().tocsc().astype(float)
    dim = g.shape[0]
    target = eta * eta
    scale = max(1.0, abs(g).sum(axis=1).max())
    shift = -1e-3 * scale
    k = min(k_start, dim - 1)
    while True:
        vals, vecs = scipy.sparse.linalg.eigsh(g, k=k, sigma=shift, which="LM")
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        residuals = np.linalg.norm(g @ vecs - vecs * vals, axis=0)
        complete = bool(vals[-1] > target + residuals[-1])
        if complete or k >= min(k_cap, dim - 1):
            lower = int(np.count_nonzero(vals + residuals <= target + TIE_EPS))
            upper = int(np.count_nonzero(vals - residuals <= target + TIE_EPS))
            if not complete:
                upper = dim
            return {
                "eta": eta,
                "lower": lower,
                "upper": upper,
                "complete": complete,
                "ritz_values": vals.tolist(),
                "method": "iterative-counting",
            }
        k = min(k * 2, dim - 1)


def level_exactness_flag(level: SoficLevel, support) -> bool:
    """True when every non-identity support element acts without fixed points,
    which makes finite-level traces agree exactly with ring-side traces."""
    for g in support:
        if g.is_identity():
            continue
        perm = sofic_permutation(level, g)
        if np.count_nonzero(perm == np.arange(level.degree)) > 0:
            return False
    return True


def _certified_power_traces(gd: np.ndarray, kmax: int) -> tuple[list, bool]:
    """Traces of gd^k for k <= kmax in float64, certified exact while every
    intermediate integer stays below 2^53."""
    dim = gd.shape[0]
    certified = True
    traces = []
    power = gd.copy()
    for k in range(1, kmax + 1):
        traces.append(float(np.trace(power)))
        if k == kmax:
            break
        bound = dim * float(np.abs(power).max()) * float(np.abs(gd).max())
        if bound >= _EXACT_FLOAT_LIMIT:
            certified = False
        power = power @ gd
    return traces, certified


def moment_check(level: SoficLevel, f: GroupRingMatrix, kmax: int) -> MomentReport:
    """Compare finite-level moments (1/d) Tr(gram^k) with the exact ring moments.

    The empirical side is computed in float64 but certified exact as long as
    every intermediate value stays below 2^53 (integer coefficients only).
    """
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    a = represent(level, f)
    g = gram(a)
    gd = g.to_dense_integer().astype(float) if g.is_integer() else g.to_dense()
    traces, certified = _certified_power_traces(gd, kmax)

    h = f.star() @ f
    report = MomentReport(level.index, level.degree)
    power = None
    for k in range(1, kmax + 1):
        power = h if power is None else power @ h
        exact = trace_moment(f, k)
        exact_level = level_exactness_flag(level, power.support_elements())
        empirical = traces[k - 1] / level.degree
        report.rows.append(
            {
                "k": k,
                "empirical": empirical,
                "exact": exact,
                "diff": abs(empirical - float(exact)),
                "exact_level": exact_level,
                "certified": certified,
            }
        )
    if not certified:
        report.method = "float"
    return report


def perturbation_moment_check(
    level: SoficLevel,
    f: GroupRingMatrix,
    noise_scale: float,
    kmax: int,
    seed: int = 0,
) -> MomentReport:
    """Moment drift after adding a perturbation of normalized HS size <= s.

    Reports, per k, the perturbed moment and its drift from the unperturbed
    one; for k = 1 the drift obeys n * 2 s (opnorm + s), which is included.
    """
    if noise_scale < 0:
        raise ValueError("noise scale must be >= 0")
    a = represent(level, f)
    m, n = a.block_shape
    d = a.degree
    base = moment_check(level, f, kmax)
    ad = a.to_dense().astype(float)
    if noise_scale > 0:
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal(ad.shape)
        hs = np.sqrt((noise ** 2).sum() / (n * d))
        noise *= noise_scale / hs
        ad = ad + noise
    sv2 = np.clip(scipy.linalg.eigvalsh(ad.T @ ad), 0.0, None)
    opnorm = float(np.sqrt(sv2.max(initial=0.0)))
    report = MomentReport(level.index, d, method="float")
    for k in range(1, kmax + 1):
        perturbed = float((sv2 ** k).sum()) / d
        row = {
            "k": k,
            "empirical": perturbed,
            "exact": base.rows[k - 1]["exact"],
            "drift": abs(perturbed - base.rows[k - 1]["empirical"]),
            "noise_scale": noise_scale,
        }
        if k == 1:
            clean_op = a.infinity_norm_bound()
            row["drift_bound"] = n * 2.0 * noise_scale * (clean_op + noise_scale)
            row["opnorm"] = opnorm
        report.rows.append(row)
    return report


def write_counting_csv(path, entries) -> None:
    """One row per (level, eta): level_index, degree, eta, value."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level_index", "degree", "eta", "count_fraction"])
        for cf in entries:
            for eta, val in zip(cf.etas, cf.values):
                w.writerow([cf.level_index, cf.degree, repr(eta), repr(val)])


def write_moment_csv(path, reports) -> None:
    """One row per (level, k)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level_index", "degree", "k", "empirical", "exact", "diff", "exact_level"])
        for rep in reports:
            for row in rep.rows:
                w.writerow(
                    [
                        rep.level_index,
                        rep.degree,
                        row["k"],
                        repr(row["empirical"]),
                        str(row["exact"]),
                        repr(row.get("diff", "")),
                        row.get("exact_level", ""),
                    ]
                )
