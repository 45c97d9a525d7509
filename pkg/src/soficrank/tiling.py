"""Greedy quasi-tiling of boxes in Z^d and orbit-averaged covering estimates.

The packer places translates of the given box shapes, largest shape first,
scanning candidate centers in lexicographic order; a translate is accepted
when at least a (1 - eta) fraction of the shape lands on free cells inside
the ambient box.  The resulting tiles are pairwise disjoint, at least
(1 - eta)-full, and contained in the ambient box by construction; achieved
coverage is reported and flagged when it falls short of 1 - eta.

Orbit pseudometrics average a per-site metric over the sites of a box with
an l^p mean, turning configuration samples into covering-number tables
normalized by box size.
"""

from __future__ import annotations

import csv
import math
import string
from dataclasses import dataclass, field

import numpy as np

from .coverings import (
    DEFAULT_POINT_BUDGET,
    PseudometricSpec,
    covering_number_bruteforce,
)


@dataclass
class QuasiTiling:
    ambient_sides: tuple[int, ...]
    eta: float
    shapes: list[tuple[int, ...]]
    tiles: list = field(default_factory=list)   # {shape_index, center, cells}
    covered: int = 0
    coverage: float = 0.0
    under_coverage: bool = False
    invariance: dict = field(default_factory=dict)

    @property
    def ambient_size(self) -> int:
        return int(np.prod(self.ambient_sides))


def quasi_tile(ambient_sides, shapes, eta: float) -> QuasiTiling:
    """Greedy largest-first packing of shape translates into an ambient box."""
    if not shapes:
        raise ValueError("need at least one shape")
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    ambient = tuple(int(s) for s in ambient_sides)
    dim = len(ambient)
    shape_list = [tuple(int(s) for s in sh) for sh in shapes]
    if any(len(sh) != dim for sh in shape_list):
        raise ValueError("shapes must match the ambient dimension")
    order = sorted(range(len(shape_list)), key=lambda i: -int(np.prod(shape_list[i])))
    occupied = np.zeros(ambient, dtype=bool)
    tiles = []
    # fully free placements first, then (1 - eta)-full partial top-ups
    for shape_index in order:
        sh = shape_list[shape_index]
        size = int(np.prod(sh))
        for need in (float(size), max((1.0 - eta) * size, 1.0)):
            for center in np.ndindex(*ambient):
                slices = tuple(
                    slice(c, min(c + s, a)) for c, s, a in zip(center, sh, ambient)
                )
                region = occupied[slices]
                free = region.size - int(region.sum())
                if free >= need:
                    cells = np.argwhere(~region) + np.array(center)
                    region[~region] = True
                    tiles.append(
                        {
                            "shape_index": shape_index,
                            "center": tuple(int(c) for c in center),
                            "cells": [tuple(int(v) for v in cell) for cell in cells],
                        }
                    )
    covered = int(occupied.sum())
    total = int(np.prod(ambient))
    coverage = covered / total
    invariance = {
        "unit_translation_ratio": max(2.0 / a for a in ambient),
        "shape_over_ambient": max(
            max(s / a for s, a in zip(sh, ambient)) for sh in shape_list
        ),
    }
    return QuasiTiling(
        ambient_sides=ambient,
        eta=eta,
        shapes=shape_list,
        tiles=tiles,
        covered=covered,
        coverage=coverage,
        under_coverage=bool(coverage < 1.0 - eta),
        invariance=invariance,
    )


def verify_quasi_tiling(t: QuasiTiling) -> dict:
    """Check the four tiling inequalities by direct enumeration."""
    seen = set()
    disjoint = True
    inside = True
    fullness = True
    for tile in t.tiles:
        sh_size = int(np.prod(t.shapes[tile["shape_index"]]))
        if len(tile["cells"]) < (1.0 - t.eta) * sh_size:
            fullness = False
        for cell in tile["cells"]:
            if cell in seen:
                disjoint = False
            seen.add(cell)
            if any(not 0 <= c < a for c, a in zip(cell, t.ambient_sides)):
                inside = False
    coverage_ok = len(seen) >= (1.0 - t.eta) * t.ambient_size
    return {
        "disjoint": disjoint,
        "tiles_inside": inside,
        "tiles_full": fullness,
        "coverage": coverage_ok,
        "covered_cells": len(seen),
    }


def tiling_to_csv(t: QuasiTiling, path) -> None:
    """One row per tile: shape index and center coordinates."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["shape_index"] + [f"center_{i}" for i in range(len(t.ambient_sides))])
        for tile in t.tiles:
            w.writerow([tile["shape_index"], *tile["center"]])


def text_diagram(t: QuasiTiling) -> str:
    """ASCII rendering for one- and two-dimensional tilings."""
    if len(t.ambient_sides) > 2:
        raise ValueError("diagram rendering supports d <= 2")
    sides = t.ambient_sides if len(t.ambient_sides) == 2 else (1, t.ambient_sides[0])
    grid = np.full(sides, ".", dtype="<U1")
    glyphs = string.ascii_letters + string.digits
    for i, tile in enumerate(t.tiles):
        ch = glyphs[i % len(glyphs)]
        for cell in tile["cells"]:
            cell2 = cell if len(cell) == 2 else (0, cell[0])
            grid[cell2] = ch
    return "\n".join("".join(row) for row in grid)


# ---------------------------------------------------------------------------
# Orbit pseudometrics over boxes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrbitPseudometric:
    """Per-site metric averaged over the sites of a box with an l^p mean."""

    base: PseudometricSpec
    box_sides: tuple[int, ...]
    p: float = 2.0

    def site_metric(self) -> PseudometricSpec:
        return PseudometricSpec(self.base.kind, self.p, self.base.torus)


def box_site_indices(window_sides, box_sides) -> np.ndarray:
    """Flat indices of the sub-box [0, box) inside the window box [0, window)."""
    window = tuple(int(s) for s in window_sides)
    box = tuple(int(s) for s in box_sides)
    if any(b > w for b, w in zip(box, window)):
        raise ValueError("box does not fit inside the configuration window")
    coords = np.indices(box).reshape(len(box), -1)
    return np.ravel_multi_index(coords, window)


def orbit_covering_estimate(
    sample: np.ndarray,
    base_metric: PseudometricSpec,
    window_sides,
    box_schedule,
    p: float,
    eps_list,
    budget: int = DEFAULT_POINT_BUDGET,
) -> list[dict]:
    """Covering tables for configuration samples under orbit pseudometrics.

    `sample` has shape (P, window_size, n): configurations on the window box
    read in C order.  For each box in the schedule the sample is restricted
    to the box's sites and covered under the l^p site average; exponents are
    normalized by box size times log(1/eps).
    """
    sample = np.asarray(sample, dtype=float)
    rows = []
    for sides in box_schedule:
        idx = box_site_indices(window_sides, sides)
        restricted = sample[:, idx, :]
        metric = PseudometricSpec(base_metric.kind, p, base_metric.torus)
        box_size = len(idx)
        for eps in eps_list:
            bounds = covering_number_bruteforce(restricted, metric, float(eps), budget)
            denom = box_size * math.log(1.0 / float(eps))
            rows.append(
                {
                    "box": tuple(int(s) for s in sides),
                    "box_size": box_size,
                    "eps": float(eps),
                    "lower": bounds.lower,
                    "upper": bounds.upper,
                    "lower_exponent": math.log(bounds.lower) / denom,
                    "upper_exponent": math.log(bounds.upper) / denom,
                }
            )
    return rows
