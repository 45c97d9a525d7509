"""Kernel-dimension estimators and their independent oracles.

The headline quantity is the normalized count of small singular values of a
represented group-ring matrix, tabulated over levels and thresholds and
collapsed through a (threshold, level) schedule.  Presented modules route
through the stacked relator matrix.  Two independent checks ship alongside:
an exact integer-rank path (orbit counting for relator families g - e, and
modular elimination for general integer matrices), and a Fourier-symbol
oracle for Z^d.  The covering-number sandwich converts counting values into
matching lower/upper covering exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .groupring import GroupRingMatrix, ModulePresentation
from .groups import GroupError, SoficLevel, orbit_count, sofic_permutation
from .soficrep import represent
from .spectral import SpectralProfile, counting_function, singular_profile

# Relative cutoff absorbing float noise when counting at threshold zero.
ZERO_THRESHOLD_RELATIVE = 1e-8


@dataclass
class EtaSchedule:
    """Thresholds eta_j = 2^-j paired with the level sequence; the estimate
    reads the final eta and averages the last `tail` levels."""

    etas: list[float]
    tail: int = 3

    @staticmethod
    def default(j_start: int = 1, j_stop: int = 8, tail: int = 3) -> "EtaSchedule":
        return EtaSchedule([2.0 ** -j for j in range(j_start, j_stop + 1)], tail)


@dataclass
class RankEstimate:
    target: str
    method: str
    etas: list[float]
    table: list = field(default_factory=list)   # rows: level_index, degree, eta, count
    estimate: float = 0.0
    envelope: tuple[float, float] = (0.0, 0.0)
    monotone_in_levels: bool = True
    extras: dict = field(default_factory=dict)

    def rows_at(self, eta: float) -> list:
        return [r for r in self.table if r["eta"] == eta]

    def final_eta(self) -> float:
        return self.etas[-1]


def _assemble(target, method, etas, table, degrees, tail) -> RankEstimate:
    final_eta = etas[-1]
    finals = [r["count"] for r in table if r["eta"] == final_eta]
    tail_n = min(tail, len(finals))
    window = max(-(len(finals) // -2), tail_n)       # ceil(L/2), at least the tail
    tail_vals = [float(v) for v in finals[-tail_n:]]
    env_vals = [float(v) for v in finals[-window:]]
    estimate = sum(tail_vals) / len(tail_vals)
    envelope = (min(env_vals), max(env_vals))
    monotone = all(
        float(finals[i + 1]) <= float(finals[i]) + 1e-12 for i in range(len(finals) - 1)
    )
    return RankEstimate(
        target=target,
        method=method,
        etas=list(etas),
        table=table,
        estimate=estimate,
        envelope=envelope,
        monotone_in_levels=monotone,
    )


def vnd_estimate(
    levels: list[SoficLevel],
    f: GroupRingMatrix,
    schedule: EtaSchedule | None = None,
    target: str = "kernel-fraction",
) -> RankEstimate:
    """Tabulate d_{eta, i} for sigma_i(f) over levels and collapse the schedule.

    Rows at threshold zero use the relative cutoff 1e-8 * (largest singular
    value) to absorb float noise in the dense path.
    """
    if len(levels) < 2:
        raise ValueError("need at least two levels")
    schedule = schedule or EtaSchedule.default()
    table = []
    for level in levels:
        prof = singular_profile(represent(level, f))
        for eta in schedule.etas:
            eff = eta if eta > 0 else ZERO_THRESHOLD_RELATIVE * prof.max_value()
            cf = counting_function(prof, [eff])
            table.append(
                {
                    "level_index": level.index,
                    "degree": level.degree,
                    "eta": eta,
                    "count": cf.values[0],
                }
            )
    table.sort(key=lambda r: (r["eta"], r["degree"]))
    return _assemble(
        target, "dense", schedule.etas, table, [lv.degree for lv in levels], schedule.tail
    )


def vr_estimate(
    levels: list[SoficLevel],
    pres: ModulePresentation,
    relator_cutoff: int | None = None,
    schedule: EtaSchedule | None = None,
    integer_rank: bool = False,
) -> RankEstimate:
    """Kernel fraction of the stacked relator matrix, per level and threshold.

    With no relators every level contributes exactly n.  The integer path
    replaces the spectral counts by exact rational kernel fractions (orbit
    counting where the relators all have the shape g - e, modular elimination
    otherwise) and tabulates them at eta = 0.
    """
    schedule = schedule or EtaSchedule.default()
    cutoff = len(pres.relators) if relator_cutoff is None else relator_cutoff
    stacked = pres.stacked_matrix(cutoff)
    target = f"module-rank(n={pres.n}, relators={cutoff})"

    if stacked.rows == 0:
        table = [
            {"level_index": lv.index, "degree": lv.degree, "eta": eta, "count": float(pres.n)}
            for eta in schedule.etas
            for lv in levels
        ]
        table.sort(key=lambda r: (r["eta"], r["degree"]))
        est = _assemble(target, "free-module", schedule.etas, table, [], schedule.tail)
        est.extras["exact"] = True
        return est

    if integer_rank:
        table = []
        fractions = []
        for lv in levels:
            frac, method = exact_kernel_fraction(lv, pres, cutoff)
            fractions.append((lv.index, lv.degree, str(frac), method))
            table.append(
                {
                    "level_index": lv.index,
                    "degree": lv.degree,
                    "eta": 0.0,
                    "count": float(frac),
                }
            )
        est = _assemble(target, "integer-rank", [0.0], table, [], schedule.tail)
        est.extras["exact_fractions"] = fractions
        return est

    est = vnd_estimate(levels, stacked, schedule, target=target)
    if cutoff > 1:
        # kernel fractions shrink (weakly) as relators accumulate
        final_level = levels[-1]
        final_eta = schedule.etas[-1]
        by_cutoff = []
        for k in range(1, cutoff + 1):
            prof = singular_profile(represent(final_level, pres.stacked_matrix(k)))
            eff = final_eta if final_eta > 0 else ZERO_THRESHOLD_RELATIVE * prof.max_value()
            by_cutoff.append(counting_function(prof, [eff]).values[0])
        est.extras["counts_by_cutoff"] = by_cutoff
        est.extras["monotone_in_cutoff"] = all(
            by_cutoff[i + 1] <= by_cutoff[i] + 1e-12 for i in range(len(by_cutoff) - 1)
        )
    return est


# ---------------------------------------------------------------------------
# Exact integer-rank verification paths
# ---------------------------------------------------------------------------

_MODP = 2147483647  # 2^31 - 1; products stay inside int64


def rank_mod_p(mat: np.ndarray, p: int = _MODP) -> int:
    """Rank of an integer matrix over GF(p); a lower bound for the rank over Q."""
    a = np.ascontiguousarray(mat, dtype=np.int64) % p
    rows, cols = a.shape
    rank = 0
    for col in range(cols):
        pivot = None
        for r in range(rank, rows):
            if a[r, col] % p:
                pivot = r
                break
        if pivot is None:
            continue
        if pivot != rank:
            a[[rank, pivot]] = a[[pivot, rank]]
        inv = pow(int(a[rank, col]), p - 2, p)
        a[rank] = (a[rank] * inv) % p
        mask = a[rank + 1 :, col] != 0
        if mask.any():
            factors = a[rank + 1 :, col][mask][:, None]
            a[rank + 1 :][mask] = (a[rank + 1 :][mask] - factors * a[rank][None, :]) % p
        rank += 1
        if rank == rows:
            break
    return rank


def _relator_shift_perms(level: SoficLevel, pres: ModulePresentation, cutoff: int):
    """Permutations sigma(g) when every relator is +-(g - e) in rank one."""
    if pres.n != 1:
        return None
    perms = []
    for rel in pres.relators[:cutoff]:
        ent = rel[0]
        items = dict(ent.items())
        if len(items) != 2:
            return None
        ident = level.spec.identity()
        if ident not in items:
            return None
        others = [g for g in items if g != ident]
        g = others[0]
        if not (
            (items[ident] == -1 and items[g] == 1)
            or (items[ident] == 1 and items[g] == -1)
        ):
            return None
        perms.append(sofic_permutation(level, g))
    return perms


def exact_kernel_fraction(
    level: SoficLevel, pres: ModulePresentation, cutoff: int | None = None
) -> tuple[Fraction, str]:
    """Exact rational kernel fraction of the stacked relator matrix at a level.

    Relator families of the shape g - e reduce to counting orbits of the
    assigned permutations (kernel vectors are exactly the orbit constants).
    The general integer path uses elimination modulo a large prime, which
    certifies the orbit answer when both are available and otherwise is
    exact for all primes outside a finite bad set.
    """
    cutoff = len(pres.relators) if cutoff is None else cutoff
    stacked = pres.stacked_matrix(cutoff)
    if stacked.rows == 0:
        return Fraction(pres.n), "free"
    d = level.degree
    shift_perms = _relator_shift_perms(level, pres, cutoff)
    if shift_perms is not None:
        orbits = orbit_count(shift_perms, d)
        if d <= 2048:
            a = represent(level, stacked).to_dense_integer()
            nullity = a.shape[1] - rank_mod_p(a)
            if nullity != orbits:
                raise ArithmeticError(
                    "orbit count and modular rank disagree; inconsistent level data"
                )
            return Fraction(orbits, d), "orbit+mod-p"
        return Fraction(orbits, d), "orbit"
    a = represent(level, stacked).to_dense_integer()
    if max(a.shape) > 4096:
        raise GroupError("integer-rank path is limited to degree <= 4096")
    nullity = a.shape[1] - rank_mod_p(a)
    return Fraction(nullity, d), "mod-p"


# ---------------------------------------------------------------------------
# Covering-number sandwich
# ---------------------------------------------------------------------------

@dataclass
class CoveringSandwich:
    eta: float
    level_index: int
    degree: int
    count_fraction: float
    rows: list = field(default_factory=list)    # eps, lower, upper


def sandwich_exponents(d_eta: float, eps: float) -> tuple[float, float]:
    """Normalized covering exponents for a subspace of normalized dimension
    d_eta: the ball of the subspace needs at least eps^(-D) and at most
    ((3+3 eps)/eps)^D points, D = degree * d_eta."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    lower = d_eta
    upper = d_eta * math.log((3 + 3 * eps) / eps) / math.log(1 / eps)
    return lower, upper


def sandwich_gap_rate(eps: float) -> float:
    """Exact relative gap of the sandwich: log(3+3 eps)/log(1/eps)."""
    return math.log(3 + 3 * eps) / math.log(1 / eps)


def covering_sandwich(
    d_eta: float, eps_list, eta: float = 0.0, level_index: int = -1, degree: int = 0
) -> CoveringSandwich:
    out = CoveringSandwich(eta, level_index, degree, d_eta)
    for eps in eps_list:
        lower, upper = sandwich_exponents(d_eta, float(eps))
        out.rows.append({"eps": float(eps), "lower": lower, "upper": upper})
    return out


# ---------------------------------------------------------------------------
# Fourier oracle for Z^d
# ---------------------------------------------------------------------------

def _symbol_values(f: GroupRingMatrix, grid: int) -> np.ndarray:
    """Symbol matrices of f on the uniform grid of the d-torus: (grid^d, m, n)."""
    spec = f.spec
    if spec.kind != "free_abelian":
        raise GroupError("the Fourier oracle needs a free abelian group")
    d = spec.rank
    npoints = grid ** d
    if npoints * max(1, f.rows) * f.cols > 4_000_000:
        raise MemoryError("Fourier grid too large")
    # midpoint grid: integer symbols never vanish exactly at sampled points
    coords = (np.indices((grid,) * d).reshape(d, -1).T + 0.5) / grid
    out = np.zeros((npoints, f.rows, f.cols), dtype=complex)
    for j in range(f.rows):
        for k in range(f.cols):
            for g, c in f.entries[j][k].items():
                phase = coords @ np.array(g.key, dtype=float)
                out[:, j, k] += complex(c) * np.exp(2j * np.pi * phase)
    return out


def fourier_oracle_vr(f: GroupRingMatrix, grid: int = 512, threshold: float = 1e-8) -> float:
    """Average nullity of the symbol matrix over a grid of the torus.

    Independent of any level data; estimates the kernel dimension of the
    matrix acting on the n free coordinates, a value in [0, n].
    """
    if f.rows == 0:
        return float(f.cols) if f.cols else 0.0
    sym = _symbol_values(f, grid)
    sv = np.linalg.svd(sym, compute_uv=False)
    small = (sv <= threshold).sum(axis=1)
    missing = f.cols - min(f.rows, f.cols)      # rank cannot exceed min(m, n)
    return float(small.mean() + missing)


def fourier_symbol_counting(f: GroupRingMatrix, eta: float, grid: int = 512) -> float:
    """Limit counting value: average number of symbol singular values <= eta."""
    if f.rows == 0:
        return float(f.cols)
    sym = _symbol_values(f, grid)
    sv = np.linalg.svd(sym, compute_uv=False)
    small = (sv <= eta).sum(axis=1)
    missing = f.cols - min(f.rows, f.cols)
    return float(small.mean() + missing)
