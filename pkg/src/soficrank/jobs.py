"""Job files: a single YAML (or JSON) document describing one computation.

Schema (all estimator fields optional, with defaults):

    schema: "1"
    seed: 0
    group:
      kind: free_abelian | free | finite | product
      rank: 1                  # free_abelian / free
      labels: [x]              # optional generator labels
      table: [[0, 1], [1, 0]]  # finite: multiplication table
      factors: [ {kind: ...}, ... ]
    levels:
      kind: quotient_chain | folner
      degrees: [8, 16, 32]     # moduli N for Z^d, permutation degrees for free
      sides: [8, 16]           # folner box sides (Z^d only)
      catalog: random_transitive | cyclic_commuting
      tables: [ [ [..], [..] ], ... ]   # explicit permutations per level
    module:
      generators: 1
      relators: ["x - 1"]      # strings for n = 1, lists of n strings otherwise
    element: "x + x^-1"        # spectrum/moments input; or matrix: [["..."], ...]
    estimator:
      eta_start: 1             # eta_j = 2^-j for j in [eta_start, eta_stop]
      eta_stop: 8
      tail: 3
      eps: [9.5367431640625e-07]
      p: inf                   # 1, 2, ... or inf
      delta: 1.0e-4
      m: null                  # relator prefix length
      relator_cutoff: null
      kmax: 4
      noise_scale: 0.0
      integer_rank: false
      grid: 512                # Fourier oracle resolution
      export_matrix: false     # spectrum: also dump sigma(f) as triplets
    tiling:
      ambient: [101, 101]
      shapes: [[10, 10]]
      eta: 0.1
      diagram: false
    orbit:                     # optional, for `tile`: orbit covering table
      window: [8]
      boxes: [[4], [8]]
      sample_mesh: 8
      sample_size: 500
      eps: [0.25, 0.125]
    output:
      prefix: run
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from .groupring import ElementParseError, GroupRingElement, GroupRingMatrix, ModulePresentation, parse_element, parse_relator
from .groups import GroupError, GroupSpec, SoficLevel, folner_levels, quotient_chain
from .rank import EtaSchedule


class JobError(ValueError):
    """Invalid job document; the message names the offending field."""


@dataclass
class JobSpec:
    raw: dict
    seed: int
    group: GroupSpec
    levels: list[SoficLevel]
    presentation: ModulePresentation | None
    element_matrix: GroupRingMatrix | None
    estimator: dict
    tiling: dict | None
    orbit: dict | None
    prefix: str
    level_description: dict = field(default_factory=dict)

    def eta_schedule(self) -> EtaSchedule:
        est = self.estimator
        return EtaSchedule.default(
            est.get("eta_start", 1), est.get("eta_stop", 8), est.get("tail", 3)
        )


def _require(doc: dict, key: str, context: str):
    if key not in doc:
        raise JobError(f"missing field: {context}{key}")
    return doc[key]


def _build_group(doc: dict, context: str = "group.") -> GroupSpec:
    kind = _require(doc, "kind", context)
    labels = doc.get("labels")
    try:
        if kind == "free_abelian":
            return GroupSpec.free_abelian(int(_require(doc, "rank", context)), labels)
        if kind == "free":
            return GroupSpec.free(int(_require(doc, "rank", context)), labels)
        if kind == "finite":
            return GroupSpec.finite(_require(doc, "table", context), labels)
        if kind == "product":
            factors = [
                _build_group(f, f"{context}factors[{i}].")
                for i, f in enumerate(_require(doc, "factors", context))
            ]
            return GroupSpec.product(factors)
    except GroupError as exc:
        raise JobError(f"{context}kind: {exc}") from exc
    raise JobError(f"{context}kind: unsupported group kind {kind!r}")


def _build_levels(spec: GroupSpec, doc: dict, seed: int) -> list[SoficLevel]:
    kind = doc.get("kind", "quotient_chain")
    try:
        if kind == "quotient_chain":
            return quotient_chain(
                spec,
                degrees=doc.get("degrees", []),
                catalog=doc.get("catalog", "random_transitive"),
                seed=seed,
                tables=doc.get("tables"),
            )
        if kind == "folner":
            return folner_levels(spec, _require(doc, "sides", "levels."))
    except GroupError as exc:
        raise JobError(f"levels: {exc}") from exc
    raise JobError(f"levels.kind: unsupported level kind {kind!r}")


def _build_presentation(spec: GroupSpec, doc: dict | None) -> ModulePresentation | None:
    if doc is None:
        return None
    n = int(doc.get("generators", 1))
    relators = []
    for i, entry in enumerate(doc.get("relators", [])):
        try:
            relators.append(parse_relator(spec, n, entry))
        except (ElementParseError, ValueError) as exc:
            raise JobError(f"module.relators[{i}]: {exc}") from exc
    return ModulePresentation(spec, n, tuple(relators))


def _build_element_matrix(spec: GroupSpec, doc: dict) -> GroupRingMatrix | None:
    if "element" in doc:
        try:
            ent = parse_element(spec, doc["element"])
        except ElementParseError as exc:
            raise JobError(f"element: {exc}") from exc
        return GroupRingMatrix(spec, [[ent]])
    if "matrix" in doc:
        rows = []
        for i, row in enumerate(doc["matrix"]):
            out_row = []
            for j, cell in enumerate(row):
                try:
                    out_row.append(parse_element(spec, cell))
                except ElementParseError as exc:
                    raise JobError(f"matrix[{i}][{j}]: {exc}") from exc
            rows.append(out_row)
        return GroupRingMatrix(spec, rows)
    return None


_ESTIMATOR_DEFAULTS = {
    "eta_start": 1,
    "eta_stop": 8,
    "tail": 3,
    "eps": [2.0 ** -20],
    "p": "inf",
    "delta": 1e-4,
    "m": None,
    "relator_cutoff": None,
    "kmax": 4,
    "noise_scale": 0.0,
    "integer_rank": False,
    "grid": 512,
    "export_matrix": False,
    "bruteforce_eps": [0.125],
}


def parse_job(path) -> JobSpec:
    """Load and validate a job file; raises JobError naming bad fields."""
    with open(path) as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise JobError(f"unreadable job file: {exc}") from exc
    if not isinstance(doc, dict):
        raise JobError("job file must contain a mapping")
    seed = int(doc.get("seed", 0))
    group = _build_group(_require(doc, "group", ""))
    levels = _build_levels(group, _require(doc, "levels", ""), seed)
    if not levels:
        raise JobError("levels: empty level schedule")
    presentation = _build_presentation(group, doc.get("module"))
    element_matrix = _build_element_matrix(group, doc)
    estimator = dict(_ESTIMATOR_DEFAULTS)
    estimator.update(doc.get("estimator", {}) or {})
    _validate_estimator(estimator)
    output = doc.get("output", {}) or {}
    return JobSpec(
        raw=doc,
        seed=seed,
        group=group,
        levels=levels,
        presentation=presentation,
        element_matrix=element_matrix,
        estimator=estimator,
        tiling=doc.get("tiling"),
        orbit=doc.get("orbit"),
        prefix=str(output.get("prefix", "run")),
        level_description={
            "kind": doc.get("levels", {}).get("kind", "quotient_chain"),
            "degrees": [lv.degree for lv in levels],
        },
    )


def _validate_estimator(est: dict) -> None:
    if not (1 <= est["eta_start"] <= est["eta_stop"] <= 64):
        raise JobError("estimator.eta_start/eta_stop: need 1 <= start <= stop <= 64")
    for eps in est["eps"]:
        if not 0 < float(eps) < 1:
            raise JobError("estimator.eps: entries must lie in (0, 1)")
    if est["delta"] <= 0:
        raise JobError("estimator.delta: must be positive")
    if est["kmax"] < 1:
        raise JobError("estimator.kmax: must be >= 1")
    if est["noise_scale"] < 0:
        raise JobError("estimator.noise_scale: must be >= 0")
    p = est["p"]
    if isinstance(p, str):
        if p not in ("inf", "infinity"):
            raise JobError("estimator.p: must be a number >= 1 or 'inf'")
    elif not p >= 1:
        raise JobError("estimator.p: must be >= 1")


def estimator_p(est: dict) -> float:
    p = est["p"]
    return math.inf if isinstance(p, str) else float(p)
