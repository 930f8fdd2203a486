"""Two-photon states as coefficient matrices.

A pure bipartite state |psi> = sum_ij C[i,j] |i>_A |j>_B is stored as the
matrix C. With that convention a product operator (A x B) acts as
C -> A C B^T, projections conjugate the kets, and the maximally entangled
state is the scaled identity. States may be sub-normalized: postselecting
the transmitted modes keeps norm_sq = success probability.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import numerics
from .errors import DimensionMismatchError, InvalidDimensionError, NormalizationError
from .numerics import ComplexMatrix, ToleranceConfig, DEFAULT_TOLERANCES


@dataclass(frozen=True, eq=False)
class BipartiteState:
    """Pure (possibly sub-normalized) state of two qudits.

    coeffs[i, j] multiplies |i>_A |j>_B. norm_sq is cached at construction.
    """

    dim: int
    coeffs: ComplexMatrix
    norm_sq: float

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise InvalidDimensionError(f"dim must be >= 2, got {self.dim}")
        c = numerics.as_matrix(self.coeffs)
        if c.shape != (self.dim, self.dim):
            raise DimensionMismatchError(
                f"coeffs shape {c.shape} does not match dim {self.dim}"
            )
        object.__setattr__(self, "coeffs", numerics.frozen(c))
        n = float(np.real(np.vdot(c, c)))
        if abs(n - self.norm_sq) > 1e-9 * max(1.0, n):
            raise NormalizationError(
                f"cached norm_sq {self.norm_sq} disagrees with coefficients ({n})"
            )
        object.__setattr__(self, "norm_sq", n)


def make_state(coeffs, *, physical: bool = False,
               cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> BipartiteState:
    """Build a state from a coefficient matrix.

    physical=True enforces 0 < norm_sq <= 1 + prob_tol, which holds for
    every state produced by a source or a passive medium. Operator images
    (unscrambling with SLM row normalization in particular) may legitimately
    exceed unit norm and skip the check.
    """
    c = numerics.as_matrix(coeffs)
    if c.shape[0] != c.shape[1]:
        raise DimensionMismatchError(f"coefficient matrix must be square, got {c.shape}")
    n = float(np.real(np.vdot(c, c)))
    if n <= 0.0:
        raise NormalizationError("state has zero norm")
    if physical and n > 1.0 + cfg.prob_tol:
        raise NormalizationError(f"physical state has norm_sq {n} > 1")
    return BipartiteState(dim=c.shape[0], coeffs=c, norm_sq=n)


def max_entangled(d: int) -> BipartiteState:
    """|Phi+> = sum_i |ii> / sqrt(d)."""
    if d < 2:
        raise InvalidDimensionError(f"dim must be >= 2, got {d}")
    return make_state(np.eye(d, dtype=np.complex128) / np.sqrt(d), physical=True)


def weighted_source(weights) -> BipartiteState:
    """Schmidt-diagonal source sum_i w_i |ii>, normalized.

    Used for the tomography source where the phase reference mode may carry
    a different brightness than the signal modes.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size < 2:
        raise InvalidDimensionError("weights must be a vector of length >= 2")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise NormalizationError("weights must be finite and nonnegative")
    norm = np.linalg.norm(w)
    if norm == 0:
        raise NormalizationError("all weights are zero")
    return make_state(np.diag(w / norm).astype(np.complex128), physical=True)


def apply_one_sided(state: BipartiteState,
                    op_a: Optional[ComplexMatrix],
                    op_b: Optional[ComplexMatrix]) -> BipartiteState:
    """Apply (A x B) to the state; None stands for the identity.

    Coefficients transform as C -> A C B^T. The result is not required to
    stay sub-normalized (amplifying inverses are allowed on purpose).
    """
    c = state.coeffs
    if op_a is not None:
        a = numerics.as_matrix(op_a)
        if a.shape[1] != state.dim:
            raise DimensionMismatchError(
                f"A-side operator shape {a.shape} incompatible with dim {state.dim}")
        c = a @ c
    if op_b is not None:
        b = numerics.as_matrix(op_b)
        if b.shape[1] != state.dim:
            raise DimensionMismatchError(
                f"B-side operator shape {b.shape} incompatible with dim {state.dim}")
        c = c @ b.T
    return make_state(c)


def project(state: BipartiteState, ket_a, ket_b) -> complex:
    """Projection amplitude <a, b | psi>; kets need not be normalized."""
    a = np.asarray(ket_a, dtype=np.complex128)
    b = np.asarray(ket_b, dtype=np.complex128)
    if a.shape != (state.dim,) or b.shape != (state.dim,):
        raise DimensionMismatchError(
            f"kets must have shape ({state.dim},), got {a.shape} and {b.shape}")
    return complex(np.conjugate(a) @ state.coeffs @ np.conjugate(b))


@dataclass(frozen=True, eq=False)
class SchmidtSpectrum:
    """Schmidt data of a pure state: descending values and the local bases.

    Columns of basis_a / basis_b are the Schmidt vectors, phased so the
    largest-magnitude component of each A-side vector is real positive.
    """

    values: np.ndarray
    basis_a: ComplexMatrix
    basis_b: ComplexMatrix


def schmidt(state: BipartiteState) -> SchmidtSpectrum:
    u, s, vh = np.linalg.svd(state.coeffs)
    # Fix per-vector phase: anchor each left vector's largest entry to R+.
    v = np.conjugate(vh.T)
    for k in range(s.size):
        col = u[:, k]
        anchor = col[np.argmax(np.abs(col))]
        if anchor != 0:
            ph = anchor / abs(anchor)
            u[:, k] = col / ph
            v[:, k] = v[:, k] * np.conjugate(ph)
    # B-side Schmidt vectors: C = sum_k s_k u_k (v_k)^* means the physical
    # B vectors are conj(v_k); store them directly.
    return SchmidtSpectrum(values=numerics.frozen(s),
                           basis_a=numerics.frozen(u),
                           basis_b=numerics.frozen(np.conjugate(v)))


def save_state(path_base: Union[str, os.PathLike], state: BipartiteState) -> None:
    """Write <base>.csv (coefficients) and <base>.json (dim, norm_sq)."""
    base = os.fspath(path_base)
    numerics.save_matrix_csv(base + ".csv", state.coeffs)
    with open(base + ".json", "w", encoding="ascii") as fh:
        json.dump({"dim": state.dim, "norm_sq": state.norm_sq}, fh, sort_keys=True)
        fh.write("\n")


def load_state(path_base: Union[str, os.PathLike]) -> BipartiteState:
    base = os.fspath(path_base)
    coeffs = numerics.load_matrix_csv(base + ".csv")
    with open(base + ".json", "r", encoding="ascii") as fh:
        meta = json.load(fh)
    state = make_state(coeffs)
    if state.dim != int(meta["dim"]):
        raise DimensionMismatchError("sidecar dim disagrees with coefficient matrix")
    if abs(state.norm_sq - float(meta["norm_sq"])) > 1e-9:
        raise NormalizationError("sidecar norm_sq disagrees with coefficients")
    return state
