"""Single-atom Hamiltonian on the restricted two-photon basis.

The operator couples every two-photon state ``|k1, k2>`` to ``|e1; k2>``
(photon 1 absorbed) and every ``|e1; k2>`` to the doubly excited atom.
Zero-point energies are dropped; they only contribute a global phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch
from .model import ModeGrid, SimConfig, basis_size, build_mode_grid


@dataclass(frozen=True, eq=False)
class SparseHermitianOperator:
    """Real diagonal plus strictly upper-triangular couplings.

    The lower triangle is never stored; it is the conjugate transpose of
    ``(rows, cols, values)``, so the operator is Hermitian by construction.
    """

    dimension: int
    diagonal: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        for name, dtype in (("diagonal", float), ("rows", np.int64),
                            ("cols", np.int64), ("values", complex)):
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.diagonal.shape != (self.dimension,):
            raise DimensionMismatch("diagonal length does not match dimension")
        if not (self.rows.shape == self.cols.shape == self.values.shape):
            raise DimensionMismatch("coupling lists differ in length")
        if np.any(self.rows >= self.cols):
            raise ValueError("couplings must lie strictly above the diagonal")

    @property
    def nnz_couplings(self) -> int:
        return len(self.values)

    @cached_property
    def _csr(self) -> sp.csr_matrix:
        upper = sp.coo_matrix((self.values, (self.rows, self.cols)),
                              shape=(self.dimension, self.dimension))
        full = upper + upper.conj().T + sp.diags(self.diagonal.astype(complex))
        return full.tocsr()

    def to_dense(self) -> np.ndarray:
        h = np.diag(self.diagonal.astype(complex))
        h[self.rows, self.cols] = self.values
        h[self.cols, self.rows] = np.conj(self.values)
        return h

    def spectral_bound(self) -> float:
        """Gershgorin bound on the largest eigenvalue magnitude."""
        radius = np.abs(self.diagonal).copy()
        mag = np.abs(self.values)
        np.add.at(radius, self.rows, mag)
        np.add.at(radius, self.cols, mag)
        return float(radius.max())


def apply(H: SparseHermitianOperator, v: np.ndarray) -> np.ndarray:
    """Matrix-vector product ``H v``."""
    v = np.asarray(v)
    if v.shape[0] != H.dimension:
        raise DimensionMismatch(f"vector length {v.shape[0]} != operator dimension {H.dimension}")
    return H._csr @ v


def hermiticity_check(H: SparseHermitianOperator) -> float:
    """Largest ``|H - H^dagger|`` entry of the dense reconstruction.

    Only sensible for small grids (the dense matrix has ``(n^2+n+1)^2``
    entries).
    """
    dense = H.to_dense()
    return float(np.max(np.abs(dense - dense.conj().T)))


def mode_coupling_scale(config: SimConfig, grid: ModeGrid) -> float:
    """Per-mode normalisation ``sqrt(quantization_length / L)``."""
    return math.sqrt(config.quantization_length / grid.period)


def frame_offset(config: SimConfig, frame: str) -> float:
    if frame == "rotating":
        return config.omega01 + config.omega02
    if frame == "lab":
        return 0.0
    raise ValueError(f"unknown frame {frame!r}; expected 'lab' or 'rotating'")


def build_hamiltonian(config: SimConfig, atom_x: float, frame: str = "rotating",
                      grids: tuple[ModeGrid, ModeGrid] | None = None) -> SparseHermitianOperator:
    """Assemble the operator for one atom at ``atom_x``.

    Matrix elements: ``<e1; k2|H|k1, k2> = M1 A1 exp(i k1 x)`` and
    ``<e2|H|e1; k2> = M2 A2 exp(i k2 x)``.  The rotating frame subtracts the
    constant ``omega01 + omega02`` from every diagonal entry, which is an
    exact change of frame (a global phase).
    """
    if grids is None:
        grids = (build_mode_grid(config, 1), build_mode_grid(config, 2))
    g1, g2 = grids
    n = g1.n
    offset = frame_offset(config, frame)

    w1 = config.omega(g1.k_values)
    w2 = config.omega(g2.k_values)
    if frame == "rotating":
        # subtract carrier frequencies before summing to keep small numbers small
        d1, d2 = w1 - config.omega01, w2 - config.omega02
        diag_two = (d1[:, None] + d2[None, :]).ravel()
        diag_e1 = (config.E1 - config.omega01) + d2
        diag_e2 = np.array([config.E2 - offset])
    else:
        diag_two = (w1[:, None] + w2[None, :]).ravel()
        diag_e1 = config.E1 + w2
        diag_e2 = np.array([config.E2])
    diagonal = np.concatenate([diag_two, diag_e1, diag_e2])

    m1 = config.M1 * mode_coupling_scale(config, g1) * np.exp(1j * g1.k_values * atom_x)
    m2 = config.M2 * mode_coupling_scale(config, g2) * np.exp(1j * g2.k_values * atom_x)

    k1_idx, k2_idx = np.divmod(np.arange(n * n), n)
    # upper triangle: rows are the lower-index states, values <row|H|col>
    rows_a = k1_idx * n + k2_idx
    cols_a = n * n + k2_idx
    vals_a = np.conj(m1[k1_idx])
    rows_b = n * n + np.arange(n)
    cols_b = np.full(n, n * n + n)
    vals_b = np.conj(m2)
    return SparseHermitianOperator(
        dimension=basis_size(n),
        diagonal=diagonal,
        rows=np.concatenate([rows_a, rows_b]),
        cols=np.concatenate([cols_a, cols_b]),
        values=np.concatenate([vals_a, vals_b]),
    )
