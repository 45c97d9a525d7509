"""Permutation-matrix models of group-ring matrices at a fixed level.

A group-ring matrix f is sent to the block matrix whose (j, k) block is the
sum of coeff * P(sigma(g)) over the support of the (j, k) entry, where P is
the permutation matrix of the level's image of g.  Blocks are kept symbolic
(lists of weighted permutations) so matrix-vector products cost O(nnz); the
Gram step composes permutations and the dense form is materialized only on
demand, behind a size guard.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .groupring import GroupRingMatrix, RingError
from .groups import SoficLevel, sofic_permutation


class BudgetError(RuntimeError):
    """A dense materialization would exceed the configured budget."""


def dense_budget_entries() -> int:
    """Largest dense square side allowed, from SOFICRANK_BUDGET_MB (default 512)."""
    mb = int(os.environ.get("SOFICRANK_BUDGET_MB", "512"))
    return int((mb * 1024 * 1024 / 8) ** 0.5)


@dataclass
class SoficMatrix:
    """sigma(f): a (m*degree) x (n*degree) matrix stored per block as
    weighted permutations [(coeff, image array), ...]."""

    level_index: int
    degree: int
    block_shape: tuple[int, int]        # (m, n): m block rows, n block cols
    terms: dict = field(default_factory=dict)   # (j, k) -> list of (coeff, perm)
    exact: bool = True
    normalization: str = "hs-over-columns"      # ||A||_2^2 = Tr(A*A)/(n*degree)

    @property
    def shape(self) -> tuple[int, int]:
        m, n = self.block_shape
        return (m * self.degree, n * self.degree)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Matrix-vector product without materializing the matrix."""
        m, n = self.block_shape
        d = self.degree
        v = np.asarray(vec, dtype=float).reshape(n, d)
        out = np.zeros((m, d))
        for (j, k), lst in self.terms.items():
            for coeff, perm in lst:
                out[j][perm] += float(coeff) * v[k]
        return out.reshape(m * d)

    def to_sparse(self) -> sp.csr_matrix:
        m, n = self.block_shape
        d = self.degree
        rows, cols, data = [], [], []
        base = np.arange(d, dtype=np.int64)
        for (j, k), lst in self.terms.items():
            for coeff, perm in lst:
                rows.append(j * d + perm)
                cols.append(k * d + base)
                data.append(np.full(d, float(coeff)))
        if not rows:
            return sp.csr_matrix((m * d, n * d))
        mat = sp.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(m * d, n * d),
        )
        return mat.tocsr()

    def to_dense(self) -> np.ndarray:
        side = max(self.shape)
        if side > dense_budget_entries():
            raise BudgetError(
                f"dense {self.shape} matrix exceeds SOFICRANK_BUDGET_MB; "
                "use the iterative path or raise the budget"
            )
        return self.to_sparse().toarray()

    def is_integer(self) -> bool:
        return all(
            isinstance(c, int) or (isinstance(c, Fraction) and c.denominator == 1)
            for lst in self.terms.values()
            for c, _ in lst
        )

    def to_dense_integer(self) -> np.ndarray:
        """Dense int64 form; requires integer coefficients."""
        if not self.is_integer():
            raise RingError("matrix has non-integer coefficients")
        m, n = self.block_shape
        d = self.degree
        out = np.zeros((m * d, n * d), dtype=np.int64)
        base = np.arange(d, dtype=np.int64)
        for (j, k), lst in self.terms.items():
            for coeff, perm in lst:
                np.add.at(out, (j * d + perm, k * d + base), int(coeff))
        return out

    def infinity_norm_bound(self) -> float:
        """Upper bound on the operator norm: max block-row sum of |coeff|."""
        m, n = self.block_shape
        rowsum = np.zeros(m)
        for (j, _k), lst in self.terms.items():
            rowsum[j] += sum(abs(float(c)) for c, _ in lst)
        return float(rowsum.max(initial=0.0))


def represent(level: SoficLevel, f: GroupRingMatrix) -> SoficMatrix:
    """Extend the level's permutation assignment to the matrix f blockwise."""
    terms: dict = {}
    exact = True
    for j in range(f.rows):
        for k in range(f.cols):
            ent = f.entries[j][k]
            lst = []
            for g, coeff in sorted(ent.items(), key=lambda it: repr(it[0].key)):
                if isinstance(coeff, float):
                    exact = False
                lst.append((coeff, sofic_permutation(level, g)))
            if lst:
                terms[(j, k)] = lst
    return SoficMatrix(
        level_index=level.index,
        degree=level.degree,
        block_shape=(f.rows, f.cols),
        terms=terms,
        exact=exact,
    )


def normalized_hs_norm(a: SoficMatrix) -> float:
    """Hilbert-Schmidt norm under the normalized trace, divided by the
    column block count: sqrt(sum of squared entries / (n * degree))."""
    _m, n = a.block_shape
    mat = a.to_sparse()
    total = float((mat.data ** 2).sum())
    return (total / (n * a.degree)) ** 0.5


def gram(a: SoficMatrix) -> SoficMatrix:
    """transpose(A) . A, kept as weighted permutations per block.

    Products of permutation terms are permutations again, so the Gram matrix
    keeps the symbolic structure; colliding permutations are coalesced.
    """
    m, n = a.block_shape
    d = a.degree
    if max(n * d, m * d) > dense_budget_entries():
        raise BudgetError("gram materialization exceeds the configured budget")
    out_terms: dict = {}
    cols: dict[int, dict[int, list]] = {}
    for (j, k), lst in a.terms.items():
        cols.setdefault(k, {})[j] = lst
    for k1, bk1 in cols.items():
        for k2, bk2 in cols.items():
            acc: dict[bytes, tuple] = {}
            for j in set(bk1) & set(bk2):
                for c1, p1 in bk1[j]:
                    inv1 = np.argsort(p1)
                    for c2, p2 in bk2[j]:
                        comp = inv1[p2]          # P(p1)^T P(p2) sends x to inv1[p2[x]]
                        key = comp.tobytes()
                        if key in acc:
                            acc[key] = (acc[key][0] + c1 * c2, acc[key][1])
                        else:
                            acc[key] = (c1 * c2, comp)
            lst = [(c, p) for c, p in acc.values() if c != 0]
            if lst:
                out_terms[(k1, k2)] = lst
    return SoficMatrix(
        level_index=a.level_index,
        degree=d,
        block_shape=(n, n),
        terms=out_terms,
        exact=a.exact,
    )


def export_triplets(a: SoficMatrix, path) -> None:
    """Write the matrix as 0-based "row col value" lines, sorted by (row, col)."""
    mat = a.to_sparse().tocoo()
    order = np.lexsort((mat.col, mat.row))
    with open(path, "w") as fh:
        for i in order:
            v = mat.data[i]
            sval = str(int(v)) if float(v).is_integer() else repr(float(v))
            fh.write(f"{mat.row[i]} {mat.col[i]} {sval}\n")
