"""Deterministic generators for the built-in test problems, together with
dense brute-force oracles for cross-checking ranks and spectra.

Every generator records its analytically known true eigenvalues and normal
rank so automated tests can compare solver output against ground truth.
"""

from dataclasses import dataclass

import numpy as np

from .bordered import Pencil
from .dense import dense_rank
from .errors import DimensionMismatch
from .sparse import SparseMatrix, add_scaled


@dataclass(frozen=True)
class GeneratedProblem:
    pencil: Pencil
    true_eigenvalues: tuple
    normal_rank: int
    description: str


# -- small Kronecker-structured toy ------------------------------------------

def gen_kronecker_toy():
    """4x4 pencil with one finite eigenvalue 1, one right and one left
    minimal singular block, and normal rank 3."""
    A = np.array([
        [-1, 0, 0, 0],
        [0, 0, 1, 0],
        [0, 0, 0, 0],
        [0, 0, 0, 1],
    ], dtype=float)
    B = np.array([
        [-1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 0, 0],
    ], dtype=float)
    return GeneratedProblem(
        pencil=Pencil(SparseMatrix.from_dense(A), SparseMatrix.from_dense(B)),
        true_eigenvalues=(1.0 + 0.0j,),
        normal_rank=3,
        description="4x4 singular toy: eigenvalue 1 plus two minimal singular blocks",
    )


# -- order-10 tolerance study pencil ------------------------------------------

def _random_orthogonal(n, rng):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    # fix signs for determinism
    return q * np.sign(np.diag(r))[None, :]


def tolerance_pencil_blocks(perturbed=False):
    """The unmixed block-diagonal (A, B) of the order-10 tolerance pencil:
    a diag(1,2,3,4) regular block (spectrum on the diagonal) plus two
    copies of a rank-2 singular 3x3 block."""
    A = np.zeros((10, 10))
    B = np.zeros((10, 10))
    A[:4, :4] = np.diag([1.0, 2.0, 3.0, 4.0])
    B[:4, :4] = np.eye(4)
    if perturbed:
        A[2, 2] = 3e-10
        B[2, 2] = 1e-10
    a0 = np.array([[0, 1, 0], [0, 0, 0], [0, 0, 1]], dtype=float)
    b0 = np.array([[1, 0, 0], [0, 0, 1], [0, 0, 0]], dtype=float)
    for off in (4, 7):
        A[off:off + 3, off:off + 3] = a0
        B[off:off + 3, off:off + 3] = b0
    return A, B


def gen_tolerance_pencil(perturbed=False, seed=1):
    """Order-10 pencil: the blocks of :func:`tolerance_pencil_blocks`
    conjugated by seeded random orthogonal factors.

    The perturbed variant scales the third diagonal pencil entry by 1e-10
    (in both A and B), which replaces one order-one singular direction by a
    tiny one and exercises the pivot-tolerance behaviour.  True eigenvalues
    are {1, 2, 3, 4}; the numerical normal rank is 8.
    """
    rng = np.random.default_rng(seed)
    P = _random_orthogonal(10, rng)
    Q = _random_orthogonal(10, rng)
    A, B = tolerance_pencil_blocks(perturbed)
    A = P @ A @ Q
    B = P @ B @ Q
    kind = "perturbed" if perturbed else "clean"
    return GeneratedProblem(
        pencil=Pencil(SparseMatrix.from_dense(A), SparseMatrix.from_dense(B)),
        true_eigenvalues=(1.0 + 0j, 2.0 + 0j, 3.0 + 0j, 4.0 + 0j),
        normal_rank=8,
        description=f"order-10 tolerance pencil ({kind}), seed={seed}",
    )


# -- singular quadratic problem via companion linearization -------------------

def _quadratic_roots(beta0, beta1, beta2):
    if beta0 == 0 and beta1 == 0 and beta2 == 0:
        raise ValueError("all beta coefficients are zero")
    if beta2 == 0:
        if beta1 == 0:
            raise ValueError("beta configuration has no finite true eigenvalue")
        return (complex(-beta0 / beta1),)
    disc = np.sqrt(complex(beta1 * beta1 - 4.0 * beta2 * beta0))
    # stable quadratic formula
    q = -0.5 * (beta1 + disc) if (np.conj(beta1) * disc).real >= 0 else -0.5 * (beta1 - disc)
    r1 = q / beta2
    r2 = beta0 / q if q != 0 else complex(0.0)
    return (complex(r1), complex(r2))


def _ai_block(n, beta, rng):
    """Block [beta e1 | R | 0] with R an (n)x(n-2) seeded sparse Gaussian of
    density 5/n."""
    dens = 5.0 / n
    mask = rng.random((n, n - 2)) < dens
    vals = rng.standard_normal((n, n - 2))
    rows, cols = np.nonzero(mask)
    entries = vals[rows, cols]
    r_list = [rows]
    c_list = [cols + 1]
    v_list = [entries]
    if beta != 0:
        r_list.append(np.array([0]))
        c_list.append(np.array([0]))
        v_list.append(np.array([beta], dtype=float))
    # keep values real so sign flips cannot introduce -0.0 imaginary parts
    return (np.concatenate(r_list), np.concatenate(c_list),
            np.concatenate(v_list).astype(np.float64))


def gen_quadratic_companion(n=500, beta0=-1.0, beta1=1.0, beta2=0.0, seed=1):
    """Singular quadratic problem ``lambda^2 A2 + lambda A1 + A0`` with
    ``Ai = [beta_i e1 | R_i | 0]``, linearized to the 2n x 2n companion pencil

        A = [[A1, A0], [I, 0]],   B = [[-A2, 0], [0, I]].

    The only true eigenvalues are the roots of
    ``beta2 l^2 + beta1 l + beta0``; generically the normal rank is 2n - 1.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    roots = _quadratic_roots(beta0, beta1, beta2)
    rng = np.random.default_rng(seed)
    blocks = [_ai_block(n, b, rng) for b in (beta0, beta1, beta2)]
    (r0, c0, v0), (r1, c1, v1), (r2, c2, v2) = blocks

    idx = np.arange(n, dtype=np.int64)
    ones = np.ones(n, dtype=np.complex128)
    # A: A1 at (0,0), A0 at (0,1), I at (1,0)
    rows_a = np.concatenate([r1, r0, idx + n])
    cols_a = np.concatenate([c1, c0 + n, idx])
    vals_a = np.concatenate([v1, v0, ones])
    # B: -A2 at (0,0), I at (1,1)
    rows_b = np.concatenate([r2, idx + n])
    cols_b = np.concatenate([c2, idx + n])
    vals_b = np.concatenate([-v2, ones])
    A = SparseMatrix.from_coo(2 * n, 2 * n, rows_a, cols_a, vals_a)
    B = SparseMatrix.from_coo(2 * n, 2 * n, rows_b, cols_b, vals_b)
    return GeneratedProblem(
        pencil=Pencil(A, B),
        true_eigenvalues=tuple(roots),
        normal_rank=2 * n - 1,
        description=f"quadratic companion n={n}, betas=({beta0},{beta1},{beta2}), seed={seed}",
    )


# -- rectangular full-column-rank problem -------------------------------------

def _banded_cols(n, j, width=4):
    return np.arange(j, min(j + width, n), dtype=np.int64)


def gen_rectangular(n=10000, betaA=1.0, betaB=1.0):
    """Rectangular n x (n-2) pencil with a single true eigenvalue
    ``betaA / betaB``.

    ``A = P [betaA e1 | R_A]`` and ``B = P [betaB e1 | R_B]`` where R_A has
    0.1 on its first subdiagonal, R_B has 0.01 on its second subdiagonal,
    and P is banded (ones on the main diagonal and the three subdiagonals
    below it).  ``R_A - lambda R_B`` has full column rank for every lambda,
    so V is empty and the border is two W columns.
    """
    if n < 10:
        raise ValueError("n must be >= 10")
    if betaB == 0:
        raise ValueError("betaB must be nonzero (true eigenvalue would be at infinity)")
    m = n - 2
    rows_a, cols_a, vals_a = [], [], []
    rows_b, cols_b, vals_b = [], [], []
    r0 = _banded_cols(n, 0)
    rows_a.append(r0); cols_a.append(np.zeros_like(r0)); vals_a.append(np.full(r0.size, betaA))
    rows_b.append(r0); cols_b.append(np.zeros_like(r0)); vals_b.append(np.full(r0.size, betaB))
    for j in range(1, m):
        # column j of [ . | R_A] is 0.1 * P[:, j]; of [ . | R_B] is 0.01 * P[:, j+1]
        ra = _banded_cols(n, j)
        rows_a.append(ra); cols_a.append(np.full(ra.size, j, dtype=np.int64))
        vals_a.append(np.full(ra.size, 0.1))
        rb = _banded_cols(n, j + 1)
        rows_b.append(rb); cols_b.append(np.full(rb.size, j, dtype=np.int64))
        vals_b.append(np.full(rb.size, 0.01))
    A = SparseMatrix.from_coo(n, m, np.concatenate(rows_a), np.concatenate(cols_a),
                              np.concatenate(vals_a).astype(np.complex128))
    B = SparseMatrix.from_coo(n, m, np.concatenate(rows_b), np.concatenate(cols_b),
                              np.concatenate(vals_b).astype(np.complex128))
    return GeneratedProblem(
        pencil=Pencil(A, B),
        true_eigenvalues=(complex(betaA / betaB),),
        normal_rank=m,
        description=f"rectangular banded pencil n={n}, betaA={betaA}, betaB={betaB}",
    )


# -- dense oracles -------------------------------------------------------------

_DENSIFY_LIMIT = 200


def _pencil_value(p, lam):
    return add_scaled(p.A, -lam, p.B).to_dense()


def _smallest_pivot(dense_mat):
    """Magnitude of the smallest full pivot (0 if structurally singular)."""
    A = np.array(dense_mat, dtype=np.complex128, copy=True)
    piv = np.inf
    for step in range(min(A.shape)):
        sub = np.abs(A[step:, step:])
        pmax = sub.max()
        if pmax == 0.0:
            return 0.0
        piv = min(piv, pmax)
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        i += step; j += step
        if i != step:
            A[[step, i], :] = A[[i, step], :]
        if j != step:
            A[:, [step, j]] = A[:, [j, step]]
        mult = A[step + 1:, step] / A[step, step]
        A[step + 1:, step:] -= np.outer(mult, A[step, step:])
    return float(piv)


def _golden_min(f, a, b, iters=60):
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    return (a + b) / 2.0


def oracle_pencil_spectrum(p, grid, tol=1e-10):
    """Brute-force rank profile of ``A - lambda B`` over a grid.

    Returns ``(profile, candidates)`` where ``profile`` is a list of
    ``(lambda, rank)`` pairs and ``candidates`` are the grid points (plus
    golden-section refinements of real brackets around smallest-pivot dips)
    where the rank falls below the normal-rank estimate.  Only usable for
    densifiable problems.
    """
    if max(p.nrows, p.ncols) > _DENSIFY_LIMIT:
        raise DimensionMismatch(f"oracle limited to size {_DENSIFY_LIMIT}")
    grid = [complex(g) for g in grid]
    if not grid:
        raise ValueError("empty grid")
    rng = np.random.default_rng(0xABCDEF)
    mus = [complex(rng.standard_normal() + 1j * rng.standard_normal()) for _ in range(2)]
    nrank = max(dense_rank(_pencil_value(p, mu), tol) for mu in mus)
    profile = [(g, dense_rank(_pencil_value(p, g), tol)) for g in grid]
    nrank = max(nrank, max(r for _, r in profile))
    candidates = [g for g, r in profile if r < nrank]

    real_grid = sorted(g.real for g in grid if abs(g.imag) == 0.0)
    if len(real_grid) >= 2:
        objective = lambda x: _smallest_pivot(_pencil_value(p, x))
        for a, b in zip(real_grid[:-1], real_grid[1:]):
            x = _golden_min(objective, a, b)
            if dense_rank(_pencil_value(p, x), tol) < nrank:
                if not any(abs(x - c) <= 1e-8 * max(1.0, abs(x)) for c in candidates):
                    candidates.append(complex(x))
    return profile, candidates


def bordered_theta_spectrum(bp):
    """Dense spectrum of the inverted bordered operator.

    Eigenvalues ``theta`` of ``(A_sigma bordered)^{-1} B bordered``; pencil
    eigenvalues are ``sigma + 1/theta`` and infinite eigenvalues cluster at
    ``theta == 0``.  Densifiable sizes only.
    """
    if bp.size > 2 * _DENSIFY_LIMIT:
        raise DimensionMismatch("bordered pencil too large to densify")
    M = bp.shifted_matrix.to_dense()
    Bm = bp.b_matrix.to_dense()
    return np.linalg.eigvals(np.linalg.solve(M, Bm))


def infinite_multiplicity(bp, tol=1e-8):
    """Algebraic multiplicity of the infinite eigenvalue of the bordered
    pencil, counted as the theta-cluster at zero of the inverted operator."""
    theta = bordered_theta_spectrum(bp)
    return int(np.sum(np.abs(theta) <= tol))
