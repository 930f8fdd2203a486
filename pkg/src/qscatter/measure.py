"""Coincidence measurements: ideal probabilities, Poisson counts, phase scans.

Exposure semantics: a cell with ideal probability p yields Poisson counts
with mean exposure * (p + dark_rate). exposure = inf is the noiseless
sentinel; sampling is bypassed and the table holds the exact probabilities.
Count tables remember the basis labels, the exposure and the seed so
downstream estimators and resamplers never guess.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Union

import numpy as np

from . import numerics, states
from .bases import BasisFamily
from .errors import (
    DimensionMismatchError,
    InvalidDimensionError,
    NormalizationError,
)
from .numerics import DEFAULT_TOLERANCES, ToleranceConfig

NOISELESS = math.inf

# Fixed sub-stream ids so parallel scans stay reproducible.
_STREAM_SCAN_S = 11
_STREAM_SCAN_E = 12
_STREAM_TABLE = 13

THETA_GRID = (0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi)


@dataclass(frozen=True, eq=False)
class CountTable:
    """One coincidence table.

    counts[a, b] pairs Alice outcome a with Bob outcome b. Integer-valued
    when sampled; exact probabilities in noiseless mode; rescaled floats
    after SLM row correction, in which case row_scale records the factor
    already multiplied into each row so resampling can recover raw counts.
    """

    counts: np.ndarray
    basis_label_a: str
    basis_label_b: str
    exposure: float
    seed: Optional[int] = None
    row_scale: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        c = np.asarray(self.counts, dtype=np.float64)
        if c.ndim != 2:
            raise InvalidDimensionError(f"counts must be 2-D, got shape {c.shape}")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise NormalizationError("counts must be finite and nonnegative")
        if not (self.exposure > 0):
            raise NormalizationError(f"exposure must be positive, got {self.exposure}")
        object.__setattr__(self, "counts", numerics.frozen(c))
        if self.row_scale is not None:
            rs = np.asarray(self.row_scale, dtype=np.float64)
            if rs.shape != (c.shape[0],) or np.any(rs <= 0):
                raise NormalizationError("row_scale must hold one positive factor per row")
            object.__setattr__(self, "row_scale", numerics.frozen(rs))

    @property
    def noiseless(self) -> bool:
        return math.isinf(self.exposure)

    def total(self) -> float:
        return float(np.sum(self.counts))

    def normalized(self) -> np.ndarray:
        t = self.total()
        if t <= 0:
            raise NormalizationError(
                f"table {self.basis_label_a}/{self.basis_label_b} has zero total counts")
        return self.counts / t


def coincidence_prob(state: states.BipartiteState, ket_a, ket_b) -> float:
    """|<a, b|psi>|^2 for one projector pair; kets may be unnormalized."""
    amp = states.project(state, ket_a, ket_b)
    return float(abs(amp) ** 2)


def probability_table(state: states.BipartiteState, kets_a, kets_b) -> np.ndarray:
    """All pairwise coincidence probabilities; kets given as matrix rows."""
    a = numerics.as_matrix(kets_a)
    b = numerics.as_matrix(kets_b)
    if a.shape[1] != state.dim or b.shape[1] != state.dim:
        raise DimensionMismatchError("projection kets do not match the state dimension")
    amp = np.conjugate(a) @ state.coeffs @ np.conjugate(b).T
    return np.abs(amp) ** 2


def sample_counts(probs, exposure: float, seed,
                  dark_rate: float = 0.0, *,
                  basis_label_a: str = "custom", basis_label_b: str = "custom",
                  record_seed: Optional[int] = None,
                  cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> CountTable:
    """Poisson-sample a probability table into a CountTable.

    exposure = inf returns the exact cell means (probabilities plus dark
    rate), bypassing the generator entirely. seed may be an integer or a
    Generator; record_seed overrides the integer stored in the table when
    the sampling stream was derived from a root seed elsewhere.
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim == 1:
        p = p[np.newaxis, :]
    if np.any(p < -cfg.prob_tol):
        raise NormalizationError("negative probability in table")
    if dark_rate < 0:
        raise NormalizationError("dark_rate must be nonnegative")
    p = np.clip(p, 0.0, None) + dark_rate
    if math.isinf(exposure):
        return CountTable(counts=p, basis_label_a=basis_label_a,
                          basis_label_b=basis_label_b, exposure=NOISELESS, seed=None)
    if seed is None:
        raise NormalizationError("sampled mode needs an explicit seed")
    rng = numerics.rng_from(seed)
    counts = rng.poisson(exposure * p).astype(np.float64)
    if record_seed is None and not isinstance(seed, np.random.Generator):
        record_seed = int(seed)
    return CountTable(counts=counts, basis_label_a=basis_label_a,
                      basis_label_b=basis_label_b, exposure=float(exposure),
                      seed=record_seed)


def measure_correlations(state: states.BipartiteState, family: BasisFamily,
                         exposure: float, seed: Optional[int] = None,
                         dark_rate: float = 0.0) -> CountTable:
    """Joint outcome table with Alice in `family` and Bob in its conjugate.

    The conjugated partner family makes maximally entangled correlations
    land on the diagonal for every family kind.
    """
    if family.dim != state.dim:
        raise DimensionMismatchError("family does not match the state dimension")
    probs = probability_table(state, family.matrix, np.conjugate(family.matrix))
    table = sample_counts(probs, exposure, seed, dark_rate,
                          basis_label_a=family.kind,
                          basis_label_b=family.kind + "*")
    return table


@dataclass(frozen=True, eq=False)
class PhaseStepRecord:
    """One phase step of a scan: step index k means theta = k * pi/2."""

    step: int
    theta: float
    table: CountTable

    def __post_init__(self) -> None:
        if not 0 <= self.step < 4:
            raise InvalidDimensionError(f"step must be in [0, 4), got {self.step}")
        if abs(self.theta - THETA_GRID[self.step]) > 1e-12:
            raise InvalidDimensionError("theta does not match the step index")


def _embed_pixels(vec: np.ndarray, dim_full: int) -> np.ndarray:
    out = np.zeros(dim_full, dtype=np.complex128)
    out[1:] = vec
    return out


def _scan_checks(state: states.BipartiteState, family: BasisFamily,
                 exposure: float, seed: Optional[int]) -> int:
    d = family.dim
    if state.dim != d + 1:
        raise DimensionMismatchError(
            f"scan needs a state on {d}+1 modes (reference first), got dim {state.dim}")
    if not math.isinf(exposure) and seed is None:
        raise NormalizationError("sampled scans need an explicit integer seed")
    return d


def phase_step_scan_s(state: states.BipartiteState, family: BasisFamily,
                      exposure: float, seed: Optional[int] = None,
                      dark_rate: float = 0.0) -> List[PhaseStepRecord]:
    """Interference scan for the signal matrix S.

    For each step theta Alice projects onto exp(i theta)|ref> + |w_m> and
    Bob onto |v_n>, where w_m is the conjugated m-th family vector and v_n
    the plain n-th one. That pairing makes the assembled matrix land in the
    family's rotated form (the tag convention used downstream); for the
    standard basis it reduces to the textbook reference-plus-pixel scan.
    """
    d = _scan_checks(state, family, exposure, seed)
    bob = np.array([_embed_pixels(family.matrix[n], d + 1) for n in range(d)])
    records = []
    for step, theta in enumerate(THETA_GRID):
        alice = np.zeros((d, d + 1), dtype=np.complex128)
        alice[:, 0] = np.exp(1j * theta)
        alice[:, 1:] = np.conjugate(family.matrix)
        probs = probability_table(state, alice, bob)
        step_seed = None if math.isinf(exposure) else numerics.substream(
            seed, _STREAM_SCAN_S, step)
        table = sample_counts(probs, exposure, step_seed, dark_rate,
                              basis_label_a=f"scan-s:{family.kind}:step{step}",
                              basis_label_b=family.kind,
                              record_seed=None if math.isinf(exposure) else int(seed))
        records.append(PhaseStepRecord(step=step, theta=theta, table=table))
    return records


def phase_step_scan_e(state: states.BipartiteState, family: BasisFamily,
                      exposure: float, seed: Optional[int] = None,
                      dark_rate: float = 0.0) -> List[PhaseStepRecord]:
    """Interference scan for the reference (E) diagonal.

    Alice projects onto the bare reference mode; Bob steps the phase of his
    reference against each family vector. Yields 1 x d tables.
    """
    d = _scan_checks(state, family, exposure, seed)
    alice = np.zeros((1, d + 1), dtype=np.complex128)
    alice[0, 0] = 1.0
    records = []
    for step, theta in enumerate(THETA_GRID):
        bob = np.zeros((d, d + 1), dtype=np.complex128)
        bob[:, 0] = np.exp(1j * theta)
        bob[:, 1:] = family.matrix
        probs = probability_table(state, alice, bob)
        step_seed = None if math.isinf(exposure) else numerics.substream(
            seed, _STREAM_SCAN_E, step)
        table = sample_counts(probs, exposure, step_seed, dark_rate,
                              basis_label_a=f"scan-e:{family.kind}:step{step}",
                              basis_label_b=family.kind,
                              record_seed=None if math.isinf(exposure) else int(seed))
        records.append(PhaseStepRecord(step=step, theta=theta, table=table))
    return records


def zeta_correct(table: CountTable, zeta) -> CountTable:
    """Undo the per-row SLM normalization: multiply row w by zeta_w^2.

    Idempotent: a table that already carries a row_scale is returned as is.
    """
    if table.row_scale is not None:
        return table
    z = np.asarray(zeta, dtype=np.float64)
    if z.shape != (table.counts.shape[0],):
        raise DimensionMismatchError("zeta must hold one factor per Alice row")
    if np.any(z <= 0):
        raise NormalizationError("zeta factors must be positive")
    scale = z * z
    return replace(table, counts=table.counts * scale[:, None], row_scale=scale)


# ---------------------------------------------------------------------------
# CountTable CSV format:
#   basisA,basisB,exposure,seed
#   <labelA>,<labelB>,<exposure|inf>,<seed|none>
#   [row_scale                      (optional section)
#    <s0>,<s1>,...]
#   a,b,count
#   <a>,<b>,<count>
# ---------------------------------------------------------------------------


def save_count_table(path: Union[str, os.PathLike], table: CountTable) -> None:
    exp = "inf" if table.noiseless else numerics._fmt(table.exposure)
    seed = "none" if table.seed is None else str(table.seed)
    for label in (table.basis_label_a, table.basis_label_b):
        if "," in label or "\n" in label:
            raise NormalizationError(f"basis label {label!r} not CSV-safe")
    lines = ["basisA,basisB,exposure,seed",
             f"{table.basis_label_a},{table.basis_label_b},{exp},{seed}"]
    if table.row_scale is not None:
        lines.append("row_scale")
        lines.append(",".join(numerics._fmt(s) for s in table.row_scale))
    lines.append("a,b,count")
    rows, cols = table.counts.shape
    for a in range(rows):
        for b in range(cols):
            lines.append(f"{a},{b},{numerics._fmt(table.counts[a, b])}")
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_count_table(path: Union[str, os.PathLike]) -> CountTable:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) < 4 or lines[0] != "basisA,basisB,exposure,seed":
        raise ValueError(f"{path}: not a count-table CSV")
    label_a, label_b, exp_s, seed_s = lines[1].split(",")
    exposure = math.inf if exp_s == "inf" else float(exp_s)
    seed = None if seed_s == "none" else int(seed_s)
    cursor = 2
    row_scale = None
    if lines[cursor] == "row_scale":
        row_scale = np.array([float(tok) for tok in lines[cursor + 1].split(",")])
        cursor += 2
    if lines[cursor] != "a,b,count":
        raise ValueError(f"{path}: malformed count-table CSV")
    entries = []
    max_a = max_b = -1
    for ln in lines[cursor + 1:]:
        sa, sb, sc = ln.split(",")
        a, b, c = int(sa), int(sb), float(sc)
        entries.append((a, b, c))
        max_a, max_b = max(max_a, a), max(max_b, b)
    counts = np.zeros((max_a + 1, max_b + 1))
    for a, b, c in entries:
        counts[a, b] = c
    return CountTable(counts=counts, basis_label_a=label_a, basis_label_b=label_b,
                      exposure=exposure, seed=seed, row_scale=row_scale)
