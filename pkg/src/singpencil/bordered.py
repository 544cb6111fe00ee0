"""Pencils, their rank-completing bordered regularization, the
shift-and-invert operator on the bordered system, and the semi-definite
inner products used by the Krylov iteration.

The bordered pencil of ``A x = lambda B x`` is

    [[A, W],      [[B, 0],
     [V*, 0]]  -    [0, 0]] * lambda

with V and W discovered by the rank-detecting LU of ``A - sigma B``.  All
internal formulas are written at shift zero: the factorization acts on the
pre-shifted matrix and eigenvalues are recovered as ``sigma + mu``.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import rank_lu
from .errors import DimensionMismatch, SingPencilError
from .sparse import SparseMatrix, add_scaled, adjoint, norm_estimate, spmv, spmv_adjoint


@dataclass(frozen=True)
class Pencil:
    """A (possibly singular or rectangular) matrix pencil ``A - lambda B``."""

    A: SparseMatrix
    B: SparseMatrix

    def __post_init__(self):
        if self.A.shape != self.B.shape:
            raise DimensionMismatch(f"pencil matrices differ in shape: {self.A.shape} vs {self.B.shape}")

    @property
    def nrows(self):
        return self.A.nrows

    @property
    def ncols(self):
        return self.A.ncols

    @property
    def is_square(self):
        return self.nrows == self.ncols


def assemble_bordered(M, V, W):
    """Square sparse block matrix ``[[M, W], [V*, 0]]``."""
    n, m = M.shape
    ell, w = V.ncols, W.ncols
    if V.nrows != m or W.nrows != n:
        raise DimensionMismatch("border blocks do not conform with the matrix")
    size = n + ell
    if size != m + w:
        raise DimensionMismatch("bordered matrix would not be square")
    rm, cm, vm = M.coo()
    rv, cv, vv = V.coo()   # V entry (r, c) -> bordered (n + c, r), conjugated
    rw, cw, vw = W.coo()   # W entry (r, c) -> bordered (r, m + c)
    rows = np.concatenate([rm, n + cv, rw])
    cols = np.concatenate([cm, rv, m + cw])
    vals = np.concatenate([vm, np.conj(vv), vw])
    return SparseMatrix.from_coo(size, size, rows, cols, vals)


def assemble_bordered_b(B, size):
    """Square sparse ``[[B, 0], [0, 0]]`` of the given bordered size."""
    if size < max(B.shape):
        raise DimensionMismatch("bordered size smaller than B")
    rows, cols, vals = B.coo()
    return SparseMatrix.from_coo(size, size, rows, cols, vals)


@dataclass(frozen=True)
class BorderedPencil:
    """A pencil together with its regularizing border and factorization.

    ``V`` has ``ncols - normal_rank`` columns and ``W`` has
    ``nrows - normal_rank`` columns; the bordered matrices are square of
    size ``lu.n_final``.  When the input was wide the adjoint was factored
    (``adjoint_factored``) and the borders are swapped back, so V and W
    always refer to the pencil as given.
    """

    base: Pencil
    V: SparseMatrix
    W: SparseMatrix
    normal_rank: int
    shift: complex
    lu: rank_lu.RankLU
    adjoint_factored: bool = field(default=False)

    @property
    def size(self):
        return self.lu.n_final

    @cached_property
    def shifted_matrix(self):
        """Bordered ``[[A - sigma B, W], [V*, 0]]`` (the factored matrix)."""
        shifted = add_scaled(self.base.A, -self.shift, self.base.B)
        return assemble_bordered(shifted, self.V, self.W)

    @cached_property
    def a_matrix(self):
        """Bordered ``[[A, W], [V*, 0]]``."""
        return assemble_bordered(self.base.A, self.V, self.W)

    @cached_property
    def b_matrix(self):
        """Bordered ``[[B, 0], [0, 0]]``."""
        return assemble_bordered_b(self.base.B, self.size)

    def solve_shifted(self, rhs):
        """Apply the inverse of the shifted bordered matrix."""
        if self.adjoint_factored:
            return rank_lu.solve_adjoint(self.lu, rhs)
        return rank_lu.solve(self.lu, rhs)

    def solve_shifted_adjoint(self, rhs):
        if self.adjoint_factored:
            return rank_lu.solve(self.lu, rhs)
        return rank_lu.solve_adjoint(self.lu, rhs)


def regularize(p, sigma, tau):
    """Factor ``A - sigma B`` with rank detection and build the bordered pencil.

    Wide pencils are handled by factoring the adjoint and swapping the
    borders back.  The detected rank is the numerical normal rank of the
    pencil provided ``sigma`` is not an eigenvalue.
    """
    sigma = complex(sigma)
    shifted = add_scaled(p.A, -sigma, p.B)
    if p.nrows >= p.ncols:
        lu = rank_lu.factor(shifted, tau)
        V, W = lu.V, lu.W
        adj = False
    else:
        lu = rank_lu.factor(adjoint(shifted), tau)
        V, W = lu.W, lu.V  # transposing the bordered system swaps the roles
        adj = True
    return BorderedPencil(base=p, V=V, W=W, normal_rank=lu.detected_rank,
                          shift=sigma, lu=lu, adjoint_factored=adj)


def make_square_rectangular(p, sigma, tau):
    """Regularize a rectangular pencil (identical pipeline; asserts shape)."""
    if p.is_square:
        raise DimensionMismatch("make_square_rectangular expects nrows != ncols")
    return regularize(p, sigma, tau)


class PMatrix:
    """Positive semi-definite inner product ``<x, y> = x* P y``.

    ``identity_block`` restricts the Euclidean product to the leading block
    (border coordinates are invisible); ``b_block`` uses ``diag(B, 0)`` and
    requires a Hermitian positive semi-definite B.
    """

    __slots__ = ("kind", "leading", "total", "B")

    def __init__(self, kind, leading, total, B=None):
        self.kind = kind
        self.leading = int(leading)
        self.total = int(total)
        self.B = B

    def _check(self, x):
        if x.shape[0] != self.total:
            raise DimensionMismatch("vector does not match bordered size")

    def inner(self, x, y):
        x = np.asarray(x, dtype=np.complex128)
        y = np.asarray(y, dtype=np.complex128)
        self._check(x)
        self._check(y)
        if self.kind == "identity_block":
            return complex(np.vdot(x[:self.leading], y[:self.leading]))
        return complex(np.vdot(x[:self.leading], spmv(self.B, y[:self.leading])))

    def inners(self, Vblock, w):
        """Vector of ``<v_j, w>`` over the columns of ``Vblock``."""
        if self.kind == "identity_block":
            return Vblock[:self.leading].conj().T @ w[:self.leading]
        return Vblock[:self.leading].conj().T @ spmv(self.B, w[:self.leading])

    def norm(self, x):
        val = self.inner(x, x).real
        return float(np.sqrt(max(val, 0.0)))


def p_matrix(bp, kind, adjoint_side=False):
    """Inner-product descriptor for Krylov runs on a bordered pencil.

    ``identity_block`` is ``diag(I, 0)`` over the leading (pencil) block;
    the leading size differs between the forward side (column space) and
    the adjoint side (row space) for rectangular pencils.  ``b_block``
    is ``diag(B, 0)`` and is rejected unless B is Hermitian positive
    semi-definite.
    """
    if kind not in ("identity_block", "b_block"):
        raise ValueError(f"unknown inner product kind {kind!r}")
    leading = bp.base.nrows if adjoint_side else bp.base.ncols
    if kind == "identity_block":
        return PMatrix("identity_block", leading, bp.size)
    B = bp.base.B
    if B.nrows != B.ncols:
        raise SingPencilError("b_block inner product needs a square B")
    scale = max(norm_estimate(B), 1.0) if B.nnz else 1.0
    herm_defect = 0.0
    diff = add_scaled(B, -1.0, adjoint(B))
    if diff.nnz:
        herm_defect = float(np.abs(diff.values).max())
    if herm_defect > 1e-12 * scale:
        raise SingPencilError("the inner product is not well defined: B is not Hermitian")
    rng = np.random.default_rng(0x5eed)
    for _ in range(20):
        x = rng.standard_normal(B.ncols) + 1j * rng.standard_normal(B.ncols)
        x /= np.linalg.norm(x)
        quad = np.vdot(x, spmv(B, x)).real
        if quad < -1e-12 * scale:
            raise SingPencilError("the inner product is not well defined: B is indefinite")
    return PMatrix("b_block", B.ncols, bp.size, B)


class ShiftInvertOperator:
    """Shift-and-invert operators on the bordered system, sharing one
    factorization.

    direction == "forward"
        ``S v = M^{-1} (B_hat v)`` with ``M`` the shifted bordered matrix.
    direction == "adjoint"
        The adjoint operator ``S* v = B_hat* (M^{-*} v)``; satisfies
        ``<S v, u> == <v, S* u>``.  Its range has identically zero border
        coordinates, so it is a consistency tool, not a left-eigenvector
        engine.
    direction == "transposed_pencil"
        ``M^{-*} (B_hat* v)``: the shift-and-invert operator of the
        conjugate-transposed bordered pencil.  Its eigenvectors are the
        left eigenvectors of the bordered pencil (with conjugated Ritz
        values), border components included; this is what the two-sided
        iteration and left purification run on.
    """

    __slots__ = ("bordered", "direction")

    def __init__(self, bordered, direction="forward"):
        if direction not in ("forward", "adjoint", "transposed_pencil"):
            raise ValueError(f"unknown direction {direction!r}")
        self.bordered = bordered
        self.direction = direction

    @property
    def size(self):
        return self.bordered.size

    def apply(self, v):
        v = np.asarray(v, dtype=np.complex128).ravel()
        if v.size != self.size:
            raise DimensionMismatch(f"operator size {self.size}, vector size {v.size}")
        bp = self.bordered
        if self.direction == "forward":
            return bp.solve_shifted(spmv(bp.b_matrix, v))
        if self.direction == "adjoint":
            return spmv_adjoint(bp.b_matrix, bp.solve_shifted_adjoint(v))
        return bp.solve_shifted_adjoint(spmv_adjoint(bp.b_matrix, v))

    def __call__(self, v):
        return self.apply(v)


def apply_shift_invert(S, v):
    """Functional form of :meth:`ShiftInvertOperator.apply`."""
    return S.apply(v)
