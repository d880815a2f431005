"""Dense exact linear algebra over rationals, plus a float mirror.

Matrices are lists of lists of ``gmpy2.mpq``. Sizes stay in the few-hundreds
range (per-cell moment systems, FE constraint blocks), where straightforward
partial-pivot elimination over rationals is fast enough, especially since
factorizations are cached per cell congruence class upstream.
"""

from __future__ import annotations

import numpy as np

from .scalars import ZERO, ONE, rat, to_float


def zeros(m: int, n: int):
    return [[ZERO] * n for _ in range(m)]


def identity(n: int):
    M = zeros(n, n)
    for i in range(n):
        M[i][i] = ONE
    return M


def mat_from_rows(rows):
    return [[rat(x) for x in row] for row in rows]


def matvec(A, x):
    return [sum((a * xi for a, xi in zip(row, x) if a), ZERO) for row in A]


def matmul(A, B):
    n = len(B)
    m = len(B[0]) if n else 0
    Bt = [[B[i][j] for i in range(n)] for j in range(m)]
    return [[sum((a * b for a, b in zip(row, col) if a), ZERO) for col in Bt] for row in A]


def transpose(A):
    return [list(col) for col in zip(*A)] if A else []


def to_numpy(A) -> np.ndarray:
    return np.array([[to_float(x) for x in row] for row in A], dtype=float)


def _best_pivot(M, rows, col):
    """Pick the structurally nicest nonzero pivot (small numerator/denominator)."""
    best, key = None, None
    for r in rows:
        v = M[r][col]
        if v:
            k = (abs(v.numerator).bit_length() + v.denominator.bit_length(), r)
            if key is None or k < key:
                best, key = r, k
    return best


def rref(A, rhs=None):
    """Reduced row echelon form; returns (R, pivots, rhs_reduced).

    ``rhs`` may be a matrix of the same row count; it is transformed in step.
    """
    M = [row[:] for row in A]
    T = [row[:] for row in rhs] if rhs is not None else None
    m = len(M)
    n = len(M[0]) if m else 0
    pivots = []
    r = 0
    for c in range(n):
        if r >= m:
            break
        p = _best_pivot(M, range(r, m), c)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        if T is not None:
            T[r], T[p] = T[p], T[r]
        piv = M[r][c]
        M[r] = [x / piv for x in M[r]]
        if T is not None:
            T[r] = [x / piv for x in T[r]]
        for i in range(m):
            if i != r and M[i][c]:
                f = M[i][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[r])]
                if T is not None:
                    T[i] = [x - f * y for x, y in zip(T[i], T[r])]
        pivots.append(c)
        r += 1
    return M, pivots, T


def rank(A) -> int:
    if not A:
        return 0
    _, pivots, _ = rref(A)
    return len(pivots)


def nullspace(A):
    """Columns spanning ker(A), exact."""
    if not A:
        return []
    R, pivots, _ = rref(A)
    n = len(A[0])
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [ZERO] * n
        v[fc] = ONE
        for r, pc in enumerate(pivots):
            v[pc] = -R[r][fc]
        basis.append(v)
    return basis


def solve(A, b):
    """Solve A x = b exactly (square, nonsingular)."""
    n = len(A)
    R, pivots, T = rref(A, [[x] for x in b])
    if len(pivots) != n:
        raise np.linalg.LinAlgError("singular exact system")
    return [T[r][0] for r in range(n)]


def solve_general(A, b):
    """One exact solution of a consistent (possibly rank-deficient) system.

    Raises ValueError when inconsistent. Free variables are set to zero, with
    deterministic pivot order, so the result is reproducible.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    R, pivots, T = rref(A, [[x] for x in b])
    for r in range(len(pivots), m):
        if T[r][0]:
            raise ValueError("inconsistent linear system")
    x = [ZERO] * n
    for r, c in enumerate(pivots):
        x[c] = T[r][0]
    return x


def inverse(A):
    n = len(A)
    R, pivots, T = rref(A, identity(n))
    if len(pivots) != n:
        raise np.linalg.LinAlgError("singular exact matrix")
    return T


def independent_rows(A, b=None):
    """Indices of a maximal independent row subset (consistency unchecked)."""
    At = transpose(A)
    if not At:
        return []
    _, pivots, _ = rref(At)
    return pivots


class ExactSolver:
    """Cached factorization-style exact solver: rref of [A | I] once, many rhs."""

    def __init__(self, A):
        self.n = len(A)
        self.inv = inverse(A)

    def __call__(self, b):
        return matvec(self.inv, b)


class MinNormSolver:
    """Minimum-G-norm solution of A x = b, exact or float.

    Minimizes x^T G x subject to A x = b with G symmetric positive definite.
    Rows of A may be linearly dependent; b must be consistent on the dropped
    rows (checked per call). The KKT system with the independent rows
    [[G, Ar^T], [Ar, 0]] is factored once and reused for every right-hand side.
    """

    def __init__(self, G, A, float_mode: bool = False, rank_tol: float = 1e-11):
        self.float_mode = float_mode
        self.ncols = len(A[0]) if len(A) else len(G)
        if float_mode:
            Gf = G if isinstance(G, np.ndarray) else to_numpy(G)
            Af = A if isinstance(A, np.ndarray) else to_numpy(A)
            self._init_float(Gf, Af, rank_tol)
        else:
            self._init_exact(G, A)

    def _init_exact(self, G, A):
        self.keep = independent_rows(A)
        Ar = [A[i] for i in self.keep]
        self.A = A
        n, k = len(G), len(Ar)
        KKT = zeros(n + k, n + k)
        for i in range(n):
            for j in range(n):
                KKT[i][j] = G[i][j]
        for i, row in enumerate(Ar):
            for j, v in enumerate(row):
                KKT[n + i][j] = v
                KKT[j][n + i] = v
        self.kkt = ExactSolver(KKT)
        self.n, self.k = n, k

    def _init_float(self, G, A, rank_tol):
        if A.size:
            q, r, piv = _qr_col_pivot(A.T)
            diag = np.abs(np.diag(r)) if r.size else np.array([])
            keep_n = int((diag > rank_tol * (diag[0] if diag.size else 1.0)).sum())
            self.keep = sorted(piv[:keep_n])
        else:
            self.keep = []
        Ar = A[self.keep] if len(self.keep) else np.zeros((0, A.shape[1] if A.size else len(G)))
        self.A = A
        n, k = len(G), len(Ar)
        KKT = np.zeros((n + k, n + k))
        KKT[:n, :n] = G
        KKT[n:, :n] = Ar
        KKT[:n, n:] = Ar.T
        self._lu = None
        import scipy.linalg as sla

        self._lu = sla.lu_factor(KKT)
        self.n, self.k = n, k
        self.rank_tol = rank_tol

    def solve(self, b):
        """Return (x, multipliers); verifies consistency of dropped rows."""
        if self.float_mode:
            import scipy.linalg as sla

            b = np.asarray(b, dtype=float)
            rhs = np.zeros(self.n + self.k)
            rhs[self.n:] = b[self.keep]
            sol = sla.lu_solve(self._lu, rhs)
            x, y = sol[: self.n], sol[self.n:]
            if self.A.size:
                res = self.A @ x - b
                scale = max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)
                if float(np.max(np.abs(res))) > 1e-8 * scale:
                    raise ValueError(f"inconsistent constraints, defect {np.max(np.abs(res)):.3e}")
            return x, y
        rhs = [ZERO] * self.n + [b[i] for i in self.keep]
        sol = self.kkt(rhs)
        x, y = sol[: self.n], sol[self.n:]
        for i, row in enumerate(self.A):
            if i in set(self.keep):
                continue
            if sum((a * xi for a, xi in zip(row, x) if a), ZERO) != b[i]:
                raise ValueError("inconsistent constraints in exact min-norm solve")
        return x, y


def _qr_col_pivot(M):
    import scipy.linalg as sla

    q, r, piv = sla.qr(M, pivoting=True, mode="economic")
    return q, r, piv
