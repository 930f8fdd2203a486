"""Mode-mixing media as linear optical channels.

A medium acting on N spatial modes is a single N x N unitary. The photon
carries information in d logical modes (macro-pixels) plus one phase
reference mode; every other mode is environment. Restricting the unitary to
the logical (or reference + logical) block gives the effective transmission
matrix T, the only object the rest of the pipeline ever needs: sending one
photon of an entangled pair through the medium and postselecting on the
monitored modes maps |Phi+> to the (sub-normalized) state with coefficient
matrix T^T / sqrt(dim).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources
from typing import List, Optional, Tuple, Union

import numpy as np

from . import numerics, states
from .bases import BasisFamily
from .errors import (
    DimensionMismatchError,
    InvalidDimensionError,
    NormalizationError,
)
from .numerics import ComplexMatrix, ToleranceConfig, DEFAULT_TOLERANCES


@dataclass(frozen=True, eq=False)
class ModeEmbedding:
    """Which of the N medium modes are logical, and which is the reference."""

    total_modes: int
    logical_indices: Tuple[int, ...]
    reference_index: int

    def __post_init__(self) -> None:
        n = self.total_modes
        logical = tuple(int(i) for i in self.logical_indices)
        ref = int(self.reference_index)
        if n < 2:
            raise InvalidDimensionError(f"total_modes must be >= 2, got {n}")
        if len(logical) < 2:
            raise InvalidDimensionError("need at least 2 logical modes")
        idx = (ref,) + logical
        if len(set(idx)) != len(idx):
            raise InvalidDimensionError("reference/logical indices must be distinct")
        if any(i < 0 or i >= n for i in idx):
            raise InvalidDimensionError(f"mode index out of range [0, {n})")
        object.__setattr__(self, "logical_indices", logical)
        object.__setattr__(self, "reference_index", ref)

    @property
    def dim(self) -> int:
        return len(self.logical_indices)


def default_embedding(d: int, total_modes: int) -> ModeEmbedding:
    """Reference on mode 0, logical modes 1..d."""
    if total_modes < d + 1:
        raise InvalidDimensionError(
            f"{total_modes} modes cannot host a reference plus {d} logical modes")
    return ModeEmbedding(total_modes=total_modes,
                         logical_indices=tuple(range(1, d + 1)),
                         reference_index=0)


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """A medium: full unitary plus the mode embedding."""

    unitary: ComplexMatrix
    embedding: ModeEmbedding

    def __post_init__(self) -> None:
        u = numerics.as_matrix(self.unitary)
        n = self.embedding.total_modes
        if u.shape != (n, n):
            raise DimensionMismatchError(
                f"unitary shape {u.shape} does not match {n} modes")
        if not numerics.is_unitary(u, DEFAULT_TOLERANCES.unitarity_tol):
            raise NormalizationError("channel matrix is not unitary within tolerance")
        object.__setattr__(self, "unitary", numerics.frozen(u))


def haar_channel(d: int, total_modes: int, seed) -> ChannelModel:
    """Random medium: Haar unitary on total_modes with the default embedding."""
    emb = default_embedding(d, total_modes)
    return ChannelModel(unitary=numerics.haar_unitary(total_modes, seed), embedding=emb)


@dataclass(frozen=True, eq=False)
class EffectiveT:
    """Effective transmission matrix on the monitored modes.

    matrix[k, i] couples input mode i to output mode k. When
    includes_reference is set, index 0 is the reference on both sides.
    basis_tag records the scan family a reconstructed matrix is expressed
    in (None means standard basis).
    """

    dim: int
    matrix: ComplexMatrix
    includes_reference: bool = False
    basis_tag: Optional[BasisFamily] = None

    def __post_init__(self) -> None:
        m = numerics.as_matrix(self.matrix)
        if m.shape != (self.dim, self.dim):
            raise DimensionMismatchError(
                f"matrix shape {m.shape} does not match dim {self.dim}")
        sv = np.linalg.svd(m, compute_uv=False)
        if sv.size and float(sv[0]) > 1.0 + 1e-9:
            raise NormalizationError(
                f"transmission matrix has singular value {float(sv[0])} > 1; "
                "sub-blocks of a unitary cannot amplify")
        object.__setattr__(self, "matrix", numerics.frozen(m))

    @property
    def logical_block(self) -> ComplexMatrix:
        """The d x d logical part, dropping the reference row/column if any."""
        if self.includes_reference:
            return self.matrix[1:, 1:]
        return self.matrix


def effective_t(channel: ChannelModel, include_reference: bool = False) -> EffectiveT:
    """Restrict the medium unitary to the monitored block.

    Output ordering matches input ordering; with the reference included the
    first row/column belong to the reference mode.
    """
    emb = channel.embedding
    if include_reference:
        idx = (emb.reference_index,) + emb.logical_indices
    else:
        idx = emb.logical_indices
    sub = channel.unitary[np.ix_(idx, idx)]
    return EffectiveT(dim=len(idx), matrix=sub, includes_reference=include_reference)


def choi_state(t: EffectiveT) -> states.BipartiteState:
    """State isomorphic to the channel: (I x T)|Phi+>, kept sub-normalized.

    Coefficients are T^T / sqrt(dim); norm_sq equals ||T||_F^2 / dim, the
    postselection success probability.
    """
    d = t.dim
    coeffs = t.matrix.T / np.sqrt(d)
    return states.make_state(coeffs, physical=True)


def transmitted_state(channel: ChannelModel, reference_amplitude: float = 0.0,
                      cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> states.BipartiteState:
    """Post-medium two-photon state on the monitored modes.

    With reference_amplitude == 0 the source is |Phi+> on the d logical
    modes. A positive amplitude adds the reference mode on both sides with
    the given relative weight (the tomography source), returning a
    (d+1)-dimensional state whose index 0 is the reference.
    """
    if reference_amplitude < 0:
        raise NormalizationError("reference amplitude must be nonnegative")
    if reference_amplitude == 0:
        t = effective_t(channel, include_reference=False)
        return choi_state(t)
    t = effective_t(channel, include_reference=True)
    weights = np.ones(t.dim)
    weights[0] = reference_amplitude
    source = states.weighted_source(weights)
    out = states.apply_one_sided(source, None, t.matrix)
    return states.make_state(out.coeffs, physical=True, cfg=cfg)


def drop_reference(state: states.BipartiteState) -> states.BipartiteState:
    """Postselect both photons onto the logical modes (drop index 0)."""
    if state.dim < 3:
        raise InvalidDimensionError("state too small to carry a reference mode")
    return states.make_state(state.coeffs[1:, 1:], physical=True)


def kraus_tp(channel: ChannelModel) -> List[ComplexMatrix]:
    """Trace-preserving Kraus form of the logical -> logical channel.

    First operator is the logical block of the unitary; each remaining
    operator is a 1 x d row mapping the logical subspace to one lost
    (environment or reference) output mode. Together they resolve the
    identity: sum_k A_k^dag A_k = I.
    """
    emb = channel.embedding
    logical = list(emb.logical_indices)
    lost = [i for i in range(emb.total_modes) if i not in logical]
    u = channel.unitary
    ops: List[ComplexMatrix] = [u[np.ix_(logical, logical)]]
    for m in lost:
        ops.append(u[np.ix_([m], logical)])
    return ops


def compose_two_channels(u_a: ComplexMatrix, u_b: ComplexMatrix) -> EffectiveT:
    """Effective matrix when each photon crosses its own d-mode unitary.

    (U_A x U_B)|Phi+> equals (I x T)|Phi+> with T = U_B U_A^T, so two
    lossless media acting on both photons are indistinguishable from one
    medium on Bob's photon alone.
    """
    a = numerics.as_matrix(u_a)
    b = numerics.as_matrix(u_b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError("need two square matrices of equal size")
    for name, u in (("A", a), ("B", b)):
        if not numerics.is_unitary(u, DEFAULT_TOLERANCES.unitarity_tol):
            raise NormalizationError(f"side-{name} matrix is not unitary")
    return EffectiveT(dim=a.shape[0], matrix=b @ a.T)


# ---------------------------------------------------------------------------
# Serialization and shipped fixtures
# ---------------------------------------------------------------------------


def save_channel(path_base: Union[str, os.PathLike], channel: ChannelModel) -> None:
    """Write <base>.csv (unitary) and <base>.json (embedding descriptor)."""
    base = os.fspath(path_base)
    numerics.save_matrix_csv(base + ".csv", channel.unitary)
    emb = channel.embedding
    with open(base + ".json", "w", encoding="ascii") as fh:
        json.dump({
            "total_modes": emb.total_modes,
            "logical_indices": list(emb.logical_indices),
            "reference_index": emb.reference_index,
        }, fh, sort_keys=True)
        fh.write("\n")


def load_channel(path_base: Union[str, os.PathLike]) -> ChannelModel:
    base = os.fspath(path_base)
    u = numerics.load_matrix_csv(base + ".csv")
    with open(base + ".json", "r", encoding="ascii") as fh:
        meta = json.load(fh)
    emb = ModeEmbedding(total_modes=int(meta["total_modes"]),
                        logical_indices=tuple(meta["logical_indices"]),
                        reference_index=int(meta["reference_index"]))
    return ChannelModel(unitary=u, embedding=emb)


def load_fixture_tm0(raw: bool = False):
    """Measured 7x7 transmission matrix shipped with the package.

    The values were obtained by scanning in the first unbiased family, so
    the matrix is basis-rotated and in arbitrary detector units. raw=True
    returns the verbatim matrix; otherwise an EffectiveT rescaled to unit
    Frobenius norm (pure gauge) and tagged with that family.
    """
    from . import bases as _bases

    ref = resources.files("qscatter.fixtures").joinpath("fixture_tm0.csv")
    with resources.as_file(ref) as path:
        m = numerics.load_matrix_csv(path)
    if raw:
        return m
    fam = _bases.mub(7, 0)
    return EffectiveT(dim=7, matrix=m / np.linalg.norm(m),
                      includes_reference=False, basis_tag=fam)


def load_fixture_lambda() -> np.ndarray:
    """Measured Schmidt weights shipped with the package, renormalized.

    The published values are rounded to four decimals; they are rescaled so
    sum(lambda^2) = 1 holds exactly (relative adjustment ~1e-5).
    """
    ref = resources.files("qscatter.fixtures").joinpath("fixture_lambda.json")
    with resources.as_file(ref) as path, open(path, "r", encoding="ascii") as fh:
        meta = json.load(fh)
    lam = np.asarray(meta["lambda"], dtype=np.float64)
    return lam / np.sqrt(float(np.sum(lam * lam)))
