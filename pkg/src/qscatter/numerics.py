"""Dense complex linear algebra kernel.

Everything else in the package builds on the helpers here: tolerance policy,
Haar-random unitaries, pseudo-inversion, gauge-insensitive matrix distance
and the repo-wide complex matrix CSV format. All matrices are dense
complex128 numpy arrays, row-major, sized for dimensions up to a few
hundred.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from typing import Union

import numpy as np

from .errors import ConditioningError, DimensionMismatchError, InvalidDimensionError

ComplexMatrix = np.ndarray

SeedLike = Union[int, "np.random.Generator", "np.random.SeedSequence", list, tuple]


@dataclass(frozen=True)
class ToleranceConfig:
    """Central numeric tolerance policy.

    unitarity_tol bounds ||U^dag U - I||_max for matrices claimed unitary,
    pinv_rcond is the relative cutoff for pseudo-inversion and conditioning
    floors, prob_tol is the slack allowed on probability normalizations.
    """

    unitarity_tol: float = 1e-10
    pinv_rcond: float = 1e-12
    prob_tol: float = 1e-9

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not (0.0 < value < 1e-3):
                raise InvalidDimensionError(
                    f"tolerance {f.name}={value!r} outside (0, 1e-3)"
                )


DEFAULT_TOLERANCES = ToleranceConfig()


def rng_from(seed: SeedLike) -> np.random.Generator:
    """Return a Generator; integers and seed sequences map deterministically."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def substream(root_seed: int, *stream: int) -> np.random.Generator:
    """Named sub-stream of a root seed, stable across runs and call order."""
    return np.random.default_rng([int(root_seed), *[int(s) for s in stream]])


def as_matrix(values) -> ComplexMatrix:
    """Coerce to a 2-D complex128 array, rejecting NaN and infinities."""
    m = np.asarray(values, dtype=np.complex128)
    if m.ndim != 2:
        raise InvalidDimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise InvalidDimensionError("matrix contains NaN or infinite entries")
    return m


def frozen(array: np.ndarray) -> np.ndarray:
    """Copy an array and mark it read-only (our records are immutable)."""
    out = np.array(array)
    out.setflags(write=False)
    return out


def dag(m: ComplexMatrix) -> ComplexMatrix:
    """Conjugate transpose."""
    return np.conjugate(np.transpose(m))


def is_unitary(m: ComplexMatrix, tol: float = DEFAULT_TOLERANCES.unitarity_tol) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    gram = dag(m) @ m
    return float(np.max(np.abs(gram - np.eye(m.shape[0])))) <= tol


def haar_unitary(n: int, seed: SeedLike) -> ComplexMatrix:
    """Draw an n x n unitary from the Haar measure.

    Complex Ginibre draw followed by QR, with the R diagonal phases folded
    into Q so the factorization is unique and the distribution is exactly
    Haar (invariant under left/right multiplication by fixed unitaries).
    """
    if int(n) != n or n < 1:
        raise InvalidDimensionError(f"unitary size must be a positive integer, got {n}")
    n = int(n)
    rng = rng_from(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r).copy()
    diag[diag == 0] = 1.0
    return q * (diag / np.abs(diag))[np.newaxis, :]


def pinv(m: ComplexMatrix, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> ComplexMatrix:
    """Moore-Penrose pseudo-inverse with the shared rcond policy."""
    return np.linalg.pinv(as_matrix(m), rcond=cfg.pinv_rcond)


def solve_or_pinv(m: ComplexMatrix, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> ComplexMatrix:
    """Invert a square matrix, degrading to pinv when near-singular.

    Returns the inverse matrix; callers that care can inspect condition(m).
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"cannot invert non-square shape {m.shape}")
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] == 0:
        raise ConditioningError("matrix is exactly zero")
    if sv[-1] < cfg.pinv_rcond * sv[0]:
        return np.linalg.pinv(m, rcond=cfg.pinv_rcond)
    return np.linalg.inv(m)


def condition_number(m: ComplexMatrix) -> float:
    sv = np.linalg.svd(as_matrix(m), compute_uv=False)
    if sv[-1] == 0:
        return float("inf")
    return float(sv[0] / sv[-1])


def dist_up_to_scalar(a: ComplexMatrix, b: ComplexMatrix) -> float:
    """Frobenius distance between a and the best complex rescaling of b.

    min_c ||a - c b||_F / ||b||_F with the closed form c = <b, a> / <b, b>.
    Zero exactly when a and b agree up to one global complex factor, which is
    the gauge freedom of every reconstructed transmission matrix here.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch {a.shape} vs {b.shape}")
    bb = np.vdot(b, b)
    if bb == 0:
        raise ConditioningError("reference matrix is zero")
    c = np.vdot(b, a) / bb
    return float(np.linalg.norm(a - c * b) / np.sqrt(np.real(bb)))


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    k = 2
    while k * k <= n:
        if n % k == 0:
            return False
        k += 1
    return True


# ---------------------------------------------------------------------------
# Repo-wide complex matrix CSV format:
#   rows,cols
#   <rows>,<cols>
#   i,j,re,im
#   <i>,<j>,<re>,<im>      (one line per entry, 17 significant digits)
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_matrix_csv(path: Union[str, os.PathLike], m: ComplexMatrix) -> None:
    m = as_matrix(m)
    rows, cols = m.shape
    lines = ["rows,cols", f"{rows},{cols}", "i,j,re,im"]
    for i in range(rows):
        for j in range(cols):
            v = m[i, j]
            lines.append(f"{i},{j},{_fmt(v.real)},{_fmt(v.imag)}")
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_matrix_csv(path: Union[str, os.PathLike]) -> ComplexMatrix:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) < 3 or lines[0] != "rows,cols" or lines[2] != "i,j,re,im":
        raise ValueError(f"{path}: not a complex-matrix CSV")
    rows, cols = (int(tok) for tok in lines[1].split(","))
    if rows < 1 or cols < 1:
        raise InvalidDimensionError(f"{path}: bad dimensions {rows}x{cols}")
    m = np.zeros((rows, cols), dtype=np.complex128)
    seen = np.zeros((rows, cols), dtype=bool)
    for ln in lines[3:]:
        si, sj, sre, sim = ln.split(",")
        i, j = int(si), int(sj)
        m[i, j] = complex(float(sre), float(sim))
        seen[i, j] = True
    if not seen.all():
        raise ValueError(f"{path}: missing entries")
    return m
