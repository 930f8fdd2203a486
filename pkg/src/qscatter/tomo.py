"""Transmission-matrix reconstruction from four-step phase scans.

The scans interfere each signal projection against a common reference, so
every recorded intensity has the form |exp(-i theta) ref + sig|^2. The
quarter combination

    X = ((R_0 - R_pi) + i (R_pi/2 - R_3pi/2)) / 4 = ref * conj(sig)

recovers the cross term exactly and cancels any uniform dark-count offset.
Dividing the signal table by the reference diagonal and undoing the
conjugations leaves the transmission matrix expressed in the scan family,
up to one global complex factor that the gauge convention removes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import numerics
from .bases import BasisFamily
from .channel import EffectiveT
from .errors import (
    DegenerateReferenceError,
    DimensionMismatchError,
    NormalizationError,
    TagConflictError,
)
from .measure import PhaseStepRecord
from .numerics import DEFAULT_TOLERANCES, ToleranceConfig


@dataclass(frozen=True, eq=False)
class SMatrix:
    """Interference cross terms S[m, n] = ref_n * conj(sig_nm)."""

    dim: int
    values: np.ndarray
    basis_label: str = "standard"

    def __post_init__(self) -> None:
        v = numerics.as_matrix(self.values)
        if v.shape != (self.dim, self.dim):
            raise DimensionMismatchError(
                f"S matrix shape {v.shape} does not match dim {self.dim}")
        object.__setattr__(self, "values", numerics.frozen(v))


@dataclass(frozen=True, eq=False)
class EMatrix:
    """Reference interference diagonal, one complex value per basis vector."""

    dim: int
    diag: np.ndarray
    basis_label: str = "standard"

    def __post_init__(self) -> None:
        v = np.asarray(self.diag, dtype=np.complex128)
        if v.shape != (self.dim,):
            raise DimensionMismatchError(
                f"E diagonal shape {v.shape} does not match dim {self.dim}")
        object.__setattr__(self, "diag", numerics.frozen(v))


def _quarter_combination(records: Sequence[PhaseStepRecord]) -> Tuple[np.ndarray, str]:
    if len(records) != 4:
        raise NormalizationError(f"need exactly 4 phase steps, got {len(records)}")
    by_step = {}
    for rec in records:
        if rec.step in by_step:
            raise NormalizationError(f"duplicate phase step {rec.step}")
        by_step[rec.step] = rec
    if sorted(by_step) != [0, 1, 2, 3]:
        raise NormalizationError("phase steps must cover 0..3")
    shape = by_step[0].table.counts.shape
    label = by_step[0].table.basis_label_b
    for rec in by_step.values():
        if rec.table.counts.shape != shape:
            raise DimensionMismatchError("phase-step tables differ in shape")
        if rec.table.basis_label_b != label:
            raise NormalizationError("phase-step tables differ in basis label")
    r = [by_step[k].table.counts for k in range(4)]
    return ((r[0] - r[2]) + 1j * (r[1] - r[3])) / 4.0, label


def extract_s(records: Sequence[PhaseStepRecord]) -> SMatrix:
    """Combine the four signal-scan tables into the S matrix."""
    values, label = _quarter_combination(records)
    if values.shape[0] != values.shape[1]:
        raise DimensionMismatchError(
            f"signal scan must be square, got shape {values.shape}")
    return SMatrix(dim=values.shape[0], values=values, basis_label=label)


def extract_e(records: Sequence[PhaseStepRecord],
              ref_floor: float = 1e-6) -> EMatrix:
    """Combine the four reference-scan tables into the E diagonal.

    Raises DegenerateReferenceError when any entry falls below ref_floor
    times the largest one: a vanishing entry means that basis direction
    never interferes with the reference and the division step would only
    amplify noise.
    """
    values, label = _quarter_combination(records)
    if values.shape[0] != 1:
        raise DimensionMismatchError(
            f"reference scan must yield 1 x d tables, got shape {values.shape}")
    diag = values[0]
    mags = np.abs(diag)
    top = float(np.max(mags))
    if top == 0.0:
        raise DegenerateReferenceError("reference scan recorded no interference")
    ratio = float(np.min(mags) / top)
    if ratio < ref_floor:
        raise DegenerateReferenceError(
            f"reference interference spans a {ratio:.2e} dynamic range; "
            f"below the {ref_floor:.2e} floor")
    return EMatrix(dim=diag.shape[0], diag=diag, basis_label=label)


def fix_gauge(matrix: np.ndarray, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """Remove the global complex factor: unit Frobenius norm, and the first
    entry of nonnegligible modulus (row-major order) made real positive."""
    m = numerics.as_matrix(matrix)
    norm = float(np.linalg.norm(m))
    if norm == 0.0:
        raise NormalizationError("cannot gauge-fix an all-zero matrix")
    m = m / norm
    flat = m.ravel()
    anchor = np.flatnonzero(np.abs(flat) > 1e-12)
    if anchor.size == 0:
        raise NormalizationError("cannot gauge-fix an all-zero matrix")
    a = flat[anchor[0]]
    return m * (np.conjugate(a) / abs(a))


def assemble_t(s: SMatrix, e: EMatrix,
               cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> EffectiveT:
    """Assemble the gauge-fixed transmission matrix from scan outputs.

    The result is expressed in the scan family (untagged here; see
    tag_basis) and normalized to unit Frobenius norm with a real-positive
    leading entry.
    """
    if s.dim != e.dim:
        raise DimensionMismatchError("S and E dimensions differ")
    if s.basis_label != e.basis_label:
        raise NormalizationError(
            f"S scanned in {s.basis_label!r} but E in {e.basis_label!r}")
    ratio = s.values / np.conjugate(e.diag)[np.newaxis, :]
    t_hat = fix_gauge(numerics.dag(ratio), cfg)
    return EffectiveT(dim=s.dim, matrix=t_hat, includes_reference=False)


def tag_basis(t: EffectiveT, family: BasisFamily) -> EffectiveT:
    """Record the scan family an assembled matrix is expressed in.

    Retagging with an equivalent family is a no-op; a different family
    raises TagConflictError since silently reinterpreting the matrix would
    corrupt everything downstream.
    """
    if family.dim != t.dim:
        raise DimensionMismatchError("family does not match the matrix dimension")
    if t.basis_tag is not None:
        same = (t.basis_tag.kind == family.kind
                and np.allclose(t.basis_tag.matrix, family.matrix))
        if not same:
            raise TagConflictError(
                f"matrix already tagged {t.basis_tag.kind!r}; refusing {family.kind!r}")
        return t
    return EffectiveT(dim=t.dim, matrix=t.matrix,
                      includes_reference=t.includes_reference, basis_tag=family)


@dataclass(frozen=True)
class Reconstruction:
    """Assembled matrix plus the conditioning facts a caller should log."""

    t: EffectiveT
    e_ratio: float
    condition_number: float


def reconstruct(s_records: Sequence[PhaseStepRecord],
                e_records: Sequence[PhaseStepRecord],
                family: Optional[BasisFamily] = None,
                ref_floor: float = 1e-6,
                cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Reconstruction:
    """Full pipeline: phase-step records to tagged transmission matrix."""
    s = extract_s(s_records)
    e = extract_e(e_records, ref_floor=ref_floor)
    t = assemble_t(s, e, cfg)
    if family is not None:
        t = tag_basis(t, family)
    mags = np.abs(e.diag)
    return Reconstruction(
        t=t,
        e_ratio=float(np.min(mags) / np.max(mags)),
        condition_number=numerics.condition_number(t.matrix),
    )
