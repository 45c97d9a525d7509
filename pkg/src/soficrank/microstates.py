"""Finite model spaces for algebraic actions: near-kernel subspaces, torus
microstates, membership checks, and covering-growth estimates.

A near-kernel subspace collects the small-eigenvalue directions of the
summed relator Gram operator at one level; reducing a vector mod 1 and
shifting it along the level's permutations produces a torus microstate,
which is exactly equivariant when the level is an exact quotient.  Covering
numbers of these finite families, normalized by degree and log(1/eps),
estimate the growth rates that the rank estimators approach analytically,
and at tiny degrees a lattice brute force crosses-checks the analytic
sandwich.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .coverings import (
    DEFAULT_POINT_BUDGET,
    CoveringBounds,
    PseudometricSpec,
    covering_exponents,
    covering_number_bruteforce,
    pair_distances,
)
from .groupring import GroupRingMatrix, ModulePresentation, partial_adjoint
from .groups import FINITE_QUOTIENT, GroupElement, GroupError, SoficLevel, mul, sofic_permutation
from .rank import exact_kernel_fraction, sandwich_exponents, vr_estimate
from .soficrep import gram, represent
from .spectral import TIE_EPS


def _torus_dist0(values: np.ndarray) -> np.ndarray:
    frac = np.mod(values, 1.0)
    return np.minimum(frac, 1.0 - frac)


@dataclass
class NearKernelSubspace:
    level_index: int
    degree: int
    n: int
    delta: float
    threshold: float                 # the eigenvalue cutoff actually applied
    basis: np.ndarray                # (n * degree, dim), orthonormal columns
    constraints: dict = field(default_factory=dict)
    full_space_warning: bool = False

    @property
    def ambient(self) -> int:
        return self.n * self.degree

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def near_kernel(
    level: SoficLevel,
    pres: ModulePresentation,
    delta: float,
    m: int | None = None,
    relation_set: list[GroupElement] | None = None,
    power_bound: int = 1,
) -> NearKernelSubspace:
    """Small-eigenvalue subspace of the summed relator Gram operator.

    At exact quotient levels the relation-defect operators vanish, so the
    construction is a single spectral cutoff of sum_j sigma(b_j~)* sigma(b_j~)
    below delta.  Otherwise the defect operators for words from the relation
    set (lengths up to power_bound + 1) are added to the sum and the cutoff
    is tightened to delta / (number of constraint operators), which keeps the
    result inside every individual constraint's small-eigenvalue range.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    m = len(pres.relators) if m is None else m
    stacked = pres.stacked_matrix(m)
    n, d = pres.n, level.degree
    ambient = n * d
    if stacked.rows == 0:
        operator = np.zeros((ambient, ambient))
    else:
        operator = gram(represent(level, stacked)).to_dense().astype(float)
    n_constraints = 1
    if level.provenance != FINITE_QUOTIENT and relation_set:
        defects = _relation_defect_operator(level, relation_set, min(m, power_bound))
        if defects is not None:
            operator = operator + np.kron(np.eye(n), defects)
            n_constraints += 1
    threshold = delta / n_constraints
    eigvals, eigvecs = scipy.linalg.eigh(operator)
    keep = eigvals <= threshold + TIE_EPS
    basis = eigvecs[:, keep]
    return NearKernelSubspace(
        level_index=level.index,
        degree=d,
        n=n,
        delta=delta,
        threshold=threshold,
        basis=basis,
        constraints={
            "relators": m,
            "relation_words": 0 if relation_set is None else len(relation_set),
            "power_bound": power_bound,
        },
        full_space_warning=bool(keep.all() and stacked.rows > 0),
    )


def _relation_defect_operator(level, relation_set, power_bound) -> np.ndarray | None:
    """Sum over words of |P(g_1)...P(g_k+1) - P(g_1...g_k+1)|^2, dense d x d."""
    if power_bound < 1:
        return None
    d = level.degree
    total = np.zeros((d, d))
    base = list(relation_set)
    words: list[list[GroupElement]] = [[g] for g in base]
    for _length in range(power_bound):
        words = [w + [g] for w in words for g in base]
        for w in words:
            comp = np.arange(d, dtype=np.int64)
            prod = None
            for g in w:
                img = sofic_permutation(level, g)
                comp = comp[img]
                prod = g if prod is None else mul(prod, g)
            direct = sofic_permutation(level, prod)
            diff = np.zeros((d, d))
            cols = np.arange(d)
            diff[comp, cols] += 1.0
            diff[direct, cols] -= 1.0
            total += diff.T @ diff
    return total


@dataclass
class TorusMicrostate:
    """A point assignment {1..degree} -> torus-valued sequences, stored as a
    base vector plus the level's shift rule over a finite window."""

    level: SoficLevel
    n: int
    base: np.ndarray                 # (n, degree), coordinates in [0, 1)
    window: tuple[GroupElement, ...]

    def __post_init__(self):
        self.base = np.mod(np.asarray(self.base, dtype=float), 1.0)
        self._perm_cache: dict = {}

    @property
    def degree(self) -> int:
        return self.base.shape[1]

    def _inv_perm(self, g: GroupElement) -> np.ndarray:
        key = repr(g.key)
        if key not in self._perm_cache:
            self._perm_cache[key] = np.argsort(sofic_permutation(self.level, g))
        return self._perm_cache[key]

    def values(self, g: GroupElement) -> np.ndarray:
        """Window values at g: column x holds the base at sigma(g)^{-1} x."""
        if g not in self.window:
            raise GroupError("element outside the microstate window")
        return self.base[:, self._inv_perm(g)]

    def is_exact_mode(self) -> bool:
        return self.level.provenance == FINITE_QUOTIENT

    def as_points(self) -> np.ndarray:
        """Base vector as covering-ready points of shape (degree, n)."""
        return self.base.T.copy()


def microstate_from_vector(
    level: SoficLevel, xi: np.ndarray, window, n: int | None = None
) -> TorusMicrostate:
    """Reduce a near-kernel vector mod 1 and attach the level's shift rule."""
    arr = np.asarray(xi, dtype=float)
    if arr.ndim == 1:
        if n is None:
            if arr.size % level.degree:
                raise ValueError("flat vector length must be n * degree")
            n = arr.size // level.degree
        arr = arr.reshape(n, level.degree)
    wins = []
    seen = set()
    for g in list(window) + [level.spec.identity()]:
        if repr(g.key) not in seen:
            seen.add(repr(g.key))
            sofic_permutation(level, g)      # fail fast if not expressible
            wins.append(g)
    return TorusMicrostate(level=level, n=arr.shape[0], base=arr, window=tuple(wins))


@dataclass
class MembershipReport:
    level_index: int
    degree: int
    delta: float
    equivariance: list               # (g word-ish repr, rho_2 defect)
    relator_values: list             # (relator idx, mean-square torus value)
    member: bool


def map_membership(
    ms: TorusMicrostate,
    metric: PseudometricSpec,
    relation_set,
    delta: float,
    pres: ModulePresentation | None = None,
    m: int = 0,
) -> MembershipReport:
    """Almost-equivariance defects and relator smallness of one microstate.

    The defect at g is the normalized l2 mean of the per-point distances
    between the microstate composed with sigma(g) and the g-shift of the
    microstate; membership needs every defect below delta and, when a
    presentation is given, mean-square relator values below delta^2.
    """
    d = ms.degree
    window_keys = {repr(g.key) for g in ms.window}
    defects = []
    for g in relation_set:
        ginv = g.inverse()
        if repr(ginv.key) not in window_keys:
            raise GroupError("microstate window does not cover the inverse relation set")
        perm = sofic_permutation(ms.level, g)
        lhs = ms.base[:, perm]               # phi(sigma(g) j) at the identity
        rhs = ms.base[:, np.argsort(sofic_permutation(ms.level, ginv))]
        diff = _torus_dist0(lhs - rhs)
        if metric.kind == "linf":
            per_point = diff.max(axis=0)
        else:
            per_point = np.sqrt((diff ** 2).sum(axis=0))
        defects.append((_describe(g), float(np.sqrt((per_point ** 2).mean()))))
    relator_values = []
    if pres is not None and m > 0:
        for idx, rel in enumerate(pres.relators[:m]):
            row = represent(ms.level, partial_adjoint(rel))
            vals = row.apply(ms.base.reshape(-1))
            relator_values.append((idx, float((_torus_dist0(vals) ** 2).mean())))
    member = all(v < delta for _, v in defects) and all(
        v < delta ** 2 for _, v in relator_values
    )
    return MembershipReport(
        level_index=ms.level.index,
        degree=d,
        delta=delta,
        equivariance=defects,
        relator_values=relator_values,
        member=member,
    )


def _describe(g: GroupElement) -> str:
    if g.is_identity():
        return "e"
    if g.spec.kind == "free_abelian":
        return str(tuple(g.key))
    if g.spec.kind == "finite":
        return f"#{g.key}"
    return "".join(lab + ("" if s > 0 else "^-1") for lab, s in g.word())


# ---------------------------------------------------------------------------
# Lattice samples and covering exponents
# ---------------------------------------------------------------------------

def lattice_sample(basis: np.ndarray, mesh: int, budget: int = DEFAULT_POINT_BUDGET) -> np.ndarray:
    """Points (B c) mod 1 for c on the grid {0, 1/L, ..., (L-1)/L}^dim."""
    ambient, dim = basis.shape
    count = mesh ** dim
    if count > budget:
        raise ValueError(f"lattice of {count} points exceeds the budget {budget}")
    coeffs = np.indices((mesh,) * dim).reshape(dim, -1).T / mesh
    return np.mod(coeffs @ basis.T, 1.0)        # (count, ambient)


@dataclass
class MdimReport:
    n: int
    metric: PseudometricSpec
    delta: float
    table: list = field(default_factory=list)
    bruteforce: list = field(default_factory=list)
    interval: dict = field(default_factory=dict)    # final level, per eps


def mdim_estimate(
    levels: list[SoficLevel],
    pres: ModulePresentation,
    metric: PseudometricSpec | None = None,
    delta: float = 1e-4,
    eps_list=(2.0 ** -20,),
    m: int | None = None,
    bruteforce_eps=(0.125,),
    budget: int = DEFAULT_POINT_BUDGET,
) -> MdimReport:
    """Interval estimates of the covering growth rate of the microstate space.

    Per level: the lower exponent is the near-kernel dimension over the
    degree (a box of that dimension embeds in the microstate space); the
    upper exponent applies the covering sandwich to the counting value of
    the stacked relator matrix at the matched threshold sqrt(delta).  At
    tiny degrees (<= 12) with one generator, a lattice brute force inside
    the near-kernel cube section gives an independent covering exponent.
    """
    metric = metric or PseudometricSpec("l2", math.inf)
    report = MdimReport(n=pres.n, metric=metric, delta=delta, table=[])
    for level in levels:
        w = near_kernel(level, pres, delta, m=m)
        d = level.degree
        count = w.dim / d                     # equals the sqrt(delta) counting value
        for eps in eps_list:
            lower, upper = sandwich_exponents(count, float(eps))
            report.table.append(
                {
                    "level_index": level.index,
                    "degree": d,
                    "eps": float(eps),
                    "eta": math.sqrt(delta),
                    "count_fraction": count,
                    "lower": lower,
                    "upper": upper,
                }
            )
        if pres.n == 1 and d <= 12:
            for eps in bruteforce_eps:
                mesh = math.ceil(1.0 / eps)
                if mesh ** w.dim > budget:
                    report.bruteforce.append(
                        {"level_index": level.index, "eps": eps, "skipped": "budget"}
                    )
                    continue
                pts = lattice_sample(w.basis, mesh, budget)
                pts = pts.reshape(-1, pres.n, d).transpose(0, 2, 1)
                bounds = covering_number_bruteforce(pts, metric, float(eps), budget)
                lo_exp, up_exp = covering_exponents(bounds, d)
                report.bruteforce.append(
                    {
                        "level_index": level.index,
                        "degree": d,
                        "eps": float(eps),
                        "points": pts.shape[0],
                        "lower_count": bounds.lower,
                        "upper_count": bounds.upper,
                        "lower_exponent": lo_exp,
                        "upper_exponent": up_exp,
                    }
                )
    final = levels[-1]
    report.interval = {
        "level_index": final.index,
        "degree": final.degree,
        "per_eps": [
            {
                "eps": r["eps"],
                "lower": r["lower"],
                "upper": r["upper"],
                "width": r["upper"] - r["lower"],
            }
            for r in report.table
            if r["level_index"] == final.index
        ],
    }
    return report


def wdim_slope_surrogate(
    basis: np.ndarray,
    eps_list=(2.0 ** -3, 2.0 ** -4, 2.0 ** -5, 2.0 ** -6),
    budget: int = DEFAULT_POINT_BUDGET,
) -> dict:
    """Log-covering slope of a box inside the subspace against log(1/eps).

    Samples a full-dimensional box of the subspace (axis reach 1/|column|_inf
    so the box stays inside the unit cube scale-wise), covers it under the
    ambient sup norm at each eps, and fits the slope of log(upper count);
    for a subspace of dimension w the slope approaches w.
    """
    ambient, dim = basis.shape
    reaches = [1.0 / max(np.abs(basis[:, a]).max(), 1e-12) for a in range(dim)]
    metric = PseudometricSpec("linf", math.inf, torus=False)
    rows = []
    for eps in eps_list:
        mesh = math.ceil(1.0 / eps)
        axes = [np.arange(0, max(2, int(r * mesh) + 1)) / mesh for r in reaches]
        counts = [len(a) for a in axes]
        if int(np.prod(counts)) > budget:
            raise ValueError("surrogate lattice exceeds the budget")
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
        pts = grid @ basis.T                    # (P, ambient), plain vectors
        bounds = covering_number_bruteforce(
            pts[:, :, None], metric, float(eps), budget
        )
        rows.append({"eps": float(eps), "upper": bounds.upper, "lower": bounds.lower})
    xs = [math.log(1.0 / r["eps"]) for r in rows]
    ys = [math.log(r["upper"]) for r in rows]
    slope = float(np.polyfit(xs, ys, 1)[0])
    return {"slope": slope, "rows": rows, "dim": dim}


# ---------------------------------------------------------------------------
# Additivity-failure demonstration
# ---------------------------------------------------------------------------

def additivity_failure_demo(levels: list[SoficLevel]) -> dict:
    """Rank estimates for the three terms of the augmentation sequence over a
    free group: the free module of rank one (middle), its augmentation ideal
    (free of rank n, the submodule), and the quotient presented by the
    relators x_i - e.  Reports the per-level values and whether the middle
    estimate matches the sum of the other two.
    """
    spec = levels[0].spec
    if spec.kind != "free":
        raise GroupError("the demonstration runs over a free group")
    n = spec.rank
    if n < 2:
        raise GroupError("need free rank >= 2")
    from .groupring import GroupRingElement

    sub_value = float(n)                       # free of rank n: no relators
    one = GroupRingElement.one(spec)
    relators = tuple(
        (GroupRingElement.monomial(spec.generator(lab)) - one,)
        for lab in spec.generators
    )
    quotient_pres = ModulePresentation(spec, 1, relators)

    rows = []
    for lv in levels:
        frac, method = exact_kernel_fraction(lv, quotient_pres)
        rows.append(
            {
                "level_index": lv.index,
                "degree": lv.degree,
                "middle": 1.0,
                "submodule": sub_value,
                "quotient": float(frac),
                "quotient_exact": str(frac),
                "method": method,
            }
        )
    final = rows[-1]
    middle, sub, quo = final["middle"], final["submodule"], final["quotient"]
    return {
        "n": n,
        "table": rows,
        "middle": middle,
        "submodule": sub,
        "quotient": quo,
        "additivity_holds": bool(abs(middle - (sub + quo)) <= 0.5),
    }
