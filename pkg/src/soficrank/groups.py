"""Finitely generated groups, normal forms, and finite permutation models.

Supported group kinds: free abelian Z^d, free groups F_r, finite groups
given by a multiplication table, and direct products of these.  Each group
comes with a canonical normal form for its elements and with constructors
for finite permutation models ("levels"): exact finite quotients, Folner
boxes for Z^d, and explicit user-supplied permutation tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class GroupError(ValueError):
    """Invalid group data or mismatched group operands."""


def _default_labels(kind: str, rank: int) -> tuple[str, ...]:
    if kind == "free_abelian":
        return ("x",) if rank == 1 else tuple(f"x{j + 1}" for j in range(rank))
    letters = "abcdefghijklmnopqrstuvwxyz"
    if rank <= len(letters):
        return tuple(letters[:rank])
    return tuple(f"a{j + 1}" for j in range(rank))


@dataclass(frozen=True)
class GroupSpec:
    """A finitely generated group in one of the supported kinds.

    kind is one of "free_abelian", "free", "finite", "product".  The
    generator labels are the symbols used in element syntax and in level
    assignments.
    """

    kind: str
    rank: int = 0
    table: tuple = ()
    factors: tuple = ()
    generators: tuple[str, ...] = ()

    # -- constructors ----------------------------------------------------

    @staticmethod
    def free_abelian(rank: int, labels: Sequence[str] | None = None) -> "GroupSpec":
        if rank < 1:
            raise GroupError("free abelian rank must be >= 1")
        gens = tuple(labels) if labels else _default_labels("free_abelian", rank)
        if len(gens) != rank:
            raise GroupError("need one label per coordinate")
        return GroupSpec(kind="free_abelian", rank=rank, generators=gens)

    @staticmethod
    def free(rank: int, labels: Sequence[str] | None = None) -> "GroupSpec":
        if rank < 1:
            raise GroupError("free rank must be >= 1")
        gens = tuple(labels) if labels else _default_labels("free", rank)
        if len(gens) != rank:
            raise GroupError("need one label per generator")
        return GroupSpec(kind="free", rank=rank, generators=gens)

    @staticmethod
    def finite(table: Sequence[Sequence[int]], labels: Sequence[str] | None = None) -> "GroupSpec":
        tab = tuple(tuple(int(v) for v in row) for row in table)
        order = len(tab)
        if order == 0 or any(len(row) != order for row in tab):
            raise GroupError("multiplication table must be square")
        if any(v < 0 or v >= order for row in tab for v in row):
            raise GroupError("table entries must be element indices")
        ident = None
        for e in range(order):
            if all(tab[e][j] == j and tab[j][e] == j for j in range(order)):
                ident = e
                break
        if ident is None:
            raise GroupError("table has no identity element")
        for i in range(order):
            if not any(tab[i][j] == ident for j in range(order)):
                raise GroupError(f"element {i} has no inverse")
        if order <= 128:
            for i in range(order):
                for j in range(order):
                    for k in range(order):
                        if tab[tab[i][j]][k] != tab[i][tab[j][k]]:
                            raise GroupError("table is not associative")
        gens = tuple(labels) if labels else tuple(
            f"g{j}" for j in range(order) if j != ident
        )
        spec = GroupSpec(kind="finite", rank=order, table=tab, generators=gens)
        object.__setattr__(spec, "_identity_index", ident)
        return spec

    @staticmethod
    def product(factors: Sequence["GroupSpec"]) -> "GroupSpec":
        facs = tuple(factors)
        if len(facs) < 2:
            raise GroupError("product needs at least two factors")
        gens: list[str] = []
        for f in facs:
            for lab in f.generators:
                if lab in gens:
                    raise GroupError(f"duplicate generator label {lab!r} across factors")
                gens.append(lab)
        return GroupSpec(kind="product", factors=facs, generators=tuple(gens))

    # -- elements --------------------------------------------------------

    def identity(self) -> "GroupElement":
        if self.kind == "free_abelian":
            return GroupElement(self, (0,) * self.rank)
        if self.kind == "free":
            return GroupElement(self, ())
        if self.kind == "finite":
            return GroupElement(self, getattr(self, "_identity_index", self._find_identity()))
        return GroupElement(self, tuple(f.identity().key for f in self.factors))

    def _find_identity(self) -> int:
        order = len(self.table)
        for e in range(order):
            if all(self.table[e][j] == j for j in range(order)):
                return e
        raise GroupError("no identity in table")

    def generator(self, label: str) -> "GroupElement":
        if label not in self.generators:
            raise GroupError(f"unknown generator {label!r}")
        if self.kind == "free_abelian":
            j = self.generators.index(label)
            key = tuple(1 if i == j else 0 for i in range(self.rank))
            return GroupElement(self, key)
        if self.kind == "free":
            j = self.generators.index(label)
            return GroupElement(self, ((j, 1),))
        if self.kind == "finite":
            j = self.generators.index(label)
            indices = [i for i in range(len(self.table)) if i != self._find_identity()]
            return GroupElement(self, indices[j])
        # product: the generator of one factor, identity elsewhere
        keys = []
        for f in self.factors:
            if label in f.generators:
                keys.append(f.generator(label).key)
            else:
                keys.append(f.identity().key)
        return GroupElement(self, tuple(keys))

    def element_abelian(self, exponents: Sequence[int]) -> "GroupElement":
        if self.kind != "free_abelian" or len(exponents) != self.rank:
            raise GroupError("exponent vector does not match group")
        return GroupElement(self, tuple(int(c) for c in exponents))


def _reduce_word(word: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    out: list[tuple[int, int]] = []
    for gen, sign in word:
        if out and out[-1][0] == gen and out[-1][1] == -sign:
            out.pop()
        else:
            out.append((gen, sign))
    return tuple(out)


@dataclass(frozen=True)
class GroupElement:
    """A group element in normal form.

    The key is an exponent vector (free abelian), a freely reduced word of
    (generator index, +-1) letters (free), an element index (finite), or a
    tuple of factor keys (product).
    """

    spec: GroupSpec
    key: tuple | int

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return mul(self, other)

    def inverse(self) -> "GroupElement":
        s = self.spec
        if s.kind == "free_abelian":
            return GroupElement(s, tuple(-c for c in self.key))
        if s.kind == "free":
            return GroupElement(s, tuple((g, -sg) for g, sg in reversed(self.key)))
        if s.kind == "finite":
            ident = s._find_identity()
            for j in range(len(s.table)):
                if s.table[self.key][j] == ident:
                    return GroupElement(s, j)
            raise GroupError("no inverse in table")
        return GroupElement(
            s,
            tuple(
                GroupElement(f, k).inverse().key
                for f, k in zip(s.factors, self.key)
            ),
        )

    def is_identity(self) -> bool:
        return self == self.spec.identity()

    def word(self) -> tuple[tuple[str, int], ...]:
        """The element as a product of generator letters (label, +-1)."""
        s = self.spec
        if s.kind == "free_abelian":
            letters = []
            for j, c in enumerate(self.key):
                sign = 1 if c > 0 else -1
                letters.extend([(s.generators[j], sign)] * abs(c))
            return tuple(letters)
        if s.kind == "free":
            return tuple((s.generators[g], sg) for g, sg in self.key)
        if s.kind == "finite":
            raise GroupError("finite elements are addressed by index, not words")
        letters = []
        for f, k in zip(s.factors, self.key):
            letters.extend(GroupElement(f, k).word())
        return tuple(letters)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"GroupElement({self.key!r})"


def mul(g: GroupElement, h: GroupElement) -> GroupElement:
    """Product gh in normal form."""
    if g.spec != h.spec:
        raise GroupError("elements belong to different groups")
    s = g.spec
    if s.kind == "free_abelian":
        return GroupElement(s, tuple(a + b for a, b in zip(g.key, h.key)))
    if s.kind == "free":
        return GroupElement(s, _reduce_word(list(g.key) + list(h.key)))
    if s.kind == "finite":
        return GroupElement(s, s.table[g.key][h.key])
    return GroupElement(
        s,
        tuple(
            mul(GroupElement(f, a), GroupElement(f, b)).key
            for f, a, b in zip(s.factors, g.key, h.key)
        ),
    )


# ---------------------------------------------------------------------------
# Finite permutation models
# ---------------------------------------------------------------------------

FINITE_QUOTIENT = "finite_quotient"
FOLNER = "folner"
EXPLICIT = "explicit"


@dataclass(frozen=True)
class FolnerBox:
    """A box [0, N_1) x ... x [0, N_d) in Z^d, containing the origin."""

    spec: GroupSpec
    sides: tuple[int, ...]

    def __post_init__(self):
        if self.spec.kind != "free_abelian":
            raise GroupError("boxes are defined for free abelian groups only")
        if len(self.sides) != self.spec.rank or any(n < 1 for n in self.sides):
            raise GroupError("box needs one side >= 1 per coordinate")

    @property
    def size(self) -> int:
        return int(np.prod(self.sides))


@dataclass(frozen=True)
class SoficLevel:
    """One finite permutation model of the group.

    For finite_quotient provenance the permutation assignment is an exact
    homomorphism; folner levels carry the box and use translation plus an
    order-preserving completion; explicit levels carry a permutation per
    generator and extend to words.
    """

    index: int
    spec: GroupSpec
    degree: int
    provenance: str
    perms: dict = field(default_factory=dict, compare=False)
    modulus: tuple[int, ...] = ()
    box: FolnerBox | None = None

    def permutation(self, g: GroupElement) -> np.ndarray:
        return sofic_permutation(self, g)


def sofic_permutation(level: SoficLevel, g: GroupElement) -> np.ndarray:
    """Image array of the permutation assigned to g at this level."""
    if g.spec != level.spec:
        raise GroupError("element and level belong to different groups")
    s = level.spec
    if level.provenance == FOLNER:
        return _folner_permutation(level.box, g)
    if level.provenance == FINITE_QUOTIENT and s.kind == "free_abelian":
        return _congruence_permutation(level.modulus, g)
    if level.provenance == FINITE_QUOTIENT and s.kind == "finite":
        # left multiplication on the group itself
        order = level.degree
        return np.array([s.table[g.key][x] for x in range(order)], dtype=np.int64)
    if level.provenance == FINITE_QUOTIENT and s.kind == "product":
        sub = getattr(level, "_sublevels")
        imgs = [
            sofic_permutation(lv, GroupElement(f, k))
            for lv, f, k in zip(sub, s.factors, g.key)
        ]
        degrees = [lv.degree for lv in sub]
        out = np.zeros(level.degree, dtype=np.int64)
        grids = np.meshgrid(*[np.arange(n) for n in degrees], indexing="ij")
        mapped = [img[grid] for img, grid in zip(imgs, grids)]
        out = np.ravel_multi_index(mapped, degrees).reshape(-1)
        return out
    # explicit tables and free-group quotients: compose generator letters
    word = g.word()
    d = level.degree
    acc = np.arange(d, dtype=np.int64)
    inv_cache: dict[str, np.ndarray] = {}
    for label, sign in word:
        if label not in level.perms:
            raise GroupError(f"generator {label!r} not assigned at this level")
        img = level.perms[label]
        if sign < 0:
            if label not in inv_cache:
                inv_cache[label] = np.argsort(img).astype(np.int64)
            img = inv_cache[label]
        acc = acc[img]
    return acc


def _congruence_permutation(modulus: tuple[int, ...], g: GroupElement) -> np.ndarray:
    dims = modulus
    coords = np.indices(dims).reshape(len(dims), -1)
    shifted = [(coords[j] + g.key[j]) % dims[j] for j in range(len(dims))]
    return np.ravel_multi_index(shifted, dims).astype(np.int64)


def _folner_permutation(box: FolnerBox, g: GroupElement) -> np.ndarray:
    """Translation by g inside the box, order-preserving bijection elsewhere.

    The completion maps the lex-sorted points of F \\ (F - g) onto the
    lex-sorted points of F \\ (F + g).
    """
    dims = box.sides
    d = box.size
    coords = np.indices(dims).reshape(len(dims), -1)  # columns in lex order
    target = coords + np.array(g.key, dtype=np.int64).reshape(-1, 1)
    inside = np.all((target >= 0) & (target < np.array(dims).reshape(-1, 1)), axis=0)
    out = np.empty(d, dtype=np.int64)
    out[inside] = np.ravel_multi_index(
        [target[j][inside] for j in range(len(dims))], dims
    )
    # leftover codomain: points y in F with y - g outside F
    source = coords - np.array(g.key, dtype=np.int64).reshape(-1, 1)
    src_inside = np.all((source >= 0) & (source < np.array(dims).reshape(-1, 1)), axis=0)
    dom = np.flatnonzero(~inside)       # already lex sorted
    cod = np.flatnonzero(~src_inside)
    out[dom] = cod
    return out


@dataclass
class DefectReport:
    """Multiplicativity and separation statistics of a level."""

    level_index: int
    degree: int
    multiplicativity: list  # (g word, h word, fraction of k with s(g)s(h)k = s(gh)k)
    separation: list        # (g word, h word, fraction of k with s(g)k != s(h)k)


def defect_statistics(level: SoficLevel, pairs: Sequence[tuple[GroupElement, GroupElement]]) -> DefectReport:
    """Exactness statistics for the given element pairs at one level."""
    mult = []
    sep = []
    d = level.degree
    for g, h in pairs:
        pg = sofic_permutation(level, g)
        ph = sofic_permutation(level, h)
        pgh = sofic_permutation(level, mul(g, h))
        frac = float(np.count_nonzero(pg[ph] == pgh)) / d
        mult.append((_word_str(g), _word_str(h), frac))
        if g != h:
            sep.append((_word_str(g), _word_str(h), float(np.count_nonzero(pg != ph)) / d))
    return DefectReport(level.index, d, mult, sep)


def _word_str(g: GroupElement) -> str:
    if g.spec.kind == "free_abelian":
        return str(tuple(g.key))
    if g.spec.kind == "finite":
        return f"#{g.key}"
    if g.is_identity():
        return "e"
    return "".join(lab + ("" if sg > 0 else "^-1") for lab, sg in g.word())


# ---------------------------------------------------------------------------
# Level schedules
# ---------------------------------------------------------------------------

def quotient_chain(
    spec: GroupSpec,
    degrees: Sequence[int],
    catalog: str = "random_transitive",
    seed: int = 0,
    tables: Sequence[Sequence[Sequence[int]]] | None = None,
) -> list[SoficLevel]:
    """Exact (zero-defect) levels of strictly increasing degree.

    Free abelian groups use congruence quotients (Z/N)^d, so the level
    degree is N^d for each N in `degrees`.  Free groups accept explicit
    permutation tables (one sequence of images per generator, per level) or
    draw from a built-in catalog: "random_transitive" (seeded permutation
    tuples, redrawn until the action is transitive) or "cyclic_commuting"
    (every generator maps to a power of one N-cycle).  Finite groups yield
    their left regular representation.
    """
    if spec.kind == "free_abelian":
        levels = []
        last = 0
        for i, n in enumerate(degrees):
            if n < 2:
                raise GroupError("congruence modulus must be >= 2")
            deg = n ** spec.rank
            if deg <= last:
                raise GroupError("degrees must be strictly increasing")
            last = deg
            perms = {
                lab: _congruence_permutation((n,) * spec.rank, spec.generator(lab))
                for lab in spec.generators
            }
            levels.append(
                SoficLevel(
                    index=i,
                    spec=spec,
                    degree=deg,
                    provenance=FINITE_QUOTIENT,
                    perms=perms,
                    modulus=(n,) * spec.rank,
                )
            )
        return levels

    if spec.kind == "free":
        levels = []
        if tables is not None:
            for i, tabs in enumerate(tables):
                if len(tabs) != spec.rank:
                    raise GroupError("need one permutation per generator")
                deg = len(tabs[0])
                perms = {}
                for lab, img in zip(spec.generators, tabs):
                    arr = np.asarray(img, dtype=np.int64)
                    if sorted(arr.tolist()) != list(range(deg)):
                        raise GroupError(f"assignment for {lab!r} is not a permutation")
                    perms[lab] = arr
                levels.append(SoficLevel(i, spec, deg, FINITE_QUOTIENT, perms))
            return levels
        for i, deg in enumerate(degrees):
            perms = _free_catalog_perms(spec, deg, catalog, seed + i)
            levels.append(SoficLevel(i, spec, deg, FINITE_QUOTIENT, perms))
        return levels

    if spec.kind == "finite":
        order = len(spec.table)
        perms = {
            lab: sofic_permutation(
                SoficLevel(0, spec, order, FINITE_QUOTIENT), spec.generator(lab)
            )
            for lab in spec.generators
        }
        return [SoficLevel(0, spec, order, FINITE_QUOTIENT, perms)]

    if spec.kind == "product":
        chains = [
            quotient_chain(f, degrees, catalog=catalog, seed=seed) for f in spec.factors
        ]
        n_levels = min(len(c) for c in chains)
        levels = []
        for i in range(n_levels):
            subs = tuple(c[i] for c in chains)
            deg = int(np.prod([lv.degree for lv in subs]))
            level = SoficLevel(i, spec, deg, FINITE_QUOTIENT)
            object.__setattr__(level, "_sublevels", subs)
            for lab in spec.generators:
                level.perms[lab] = sofic_permutation(level, spec.generator(lab))
            levels.append(level)
        return levels

    raise GroupError(f"unsupported group kind {spec.kind!r}")


def _free_catalog_perms(spec: GroupSpec, degree: int, catalog: str, seed: int) -> dict:
    if catalog == "cyclic_commuting":
        cycle = np.roll(np.arange(degree, dtype=np.int64), -1)
        perms = {}
        img = cycle
        for lab in spec.generators:
            perms[lab] = img.copy()
            img = img[cycle]  # next generator is the next power of the cycle
        return perms
    if catalog != "random_transitive":
        raise GroupError(f"unknown free-group catalog {catalog!r}")
    rng = np.random.default_rng(seed)
    for _ in range(64):
        perms = {
            lab: rng.permutation(degree).astype(np.int64) for lab in spec.generators
        }
        if _is_transitive(list(perms.values()), degree):
            return perms
    raise GroupError("could not draw a transitive permutation tuple")


def _is_transitive(perms: list[np.ndarray], degree: int) -> bool:
    return orbit_count(perms, degree) == 1


def orbit_count(perms: Sequence[np.ndarray], degree: int) -> int:
    """Number of orbits of the group generated by the given permutations."""
    parent = np.arange(degree, dtype=np.int64)

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for img in perms:
        for x in range(degree):
            ra, rb = find(x), find(int(img[x]))
            if ra != rb:
                parent[ra] = rb
    return len({find(x) for x in range(degree)})


def folner_levels(spec: GroupSpec, side_schedule: Sequence[int]) -> list[SoficLevel]:
    """Folner-box levels of Z^d for the given box side lengths."""
    if spec.kind != "free_abelian":
        raise GroupError("Folner levels are implemented for Z^d only")
    levels = []
    for i, n in enumerate(side_schedule):
        box = FolnerBox(spec, (int(n),) * spec.rank)
        perms = {
            lab: _folner_permutation(box, spec.generator(lab)) for lab in spec.generators
        }
        levels.append(
            SoficLevel(i, spec, box.size, FOLNER, perms, box=box)
        )
    return levels


def folner_invariance_ratio(box: FolnerBox, g: GroupElement) -> float:
    """|gF symmetric-difference F| / |F| for a box F, reported with tilings."""
    dims = np.array(box.sides)
    shift = np.array(g.key, dtype=np.int64)
    overlap = np.prod(np.maximum(dims - np.abs(shift), 0))
    return float(2 * (box.size - overlap)) / box.size
