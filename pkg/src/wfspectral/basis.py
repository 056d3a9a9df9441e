"""Multivariate Jacobi polynomials on the simplex and their recurrence matrices.

The basis member with index tuple n = (n_1, ..., n_{K-1}) factorizes in cube
coordinates as

    P_n(x) = prod_j R_{n_j}^{(theta_j, T_j + 2 N_j)}(xi_j) * (1 - xi_j)^{N_j}

where N_j = n_{j+1} + ... + n_{K-1} and T_j = theta_{j+1} + ... + theta_K are
suffix sums. The family is orthogonal under the Dirichlet kernel
prod x_i^(theta_i - 1) with squared norms C_n given by the product of the
univariate norms at the same shifted parameters.

Multiplication by a coordinate x_i maps P_n into a sparse combination of
neighbors: a G factor at slot i and one H/I/J factor per slot j < i, selected
by how the suffix degree changes (down/unchanged/up). recurrence_matrix
materializes this as a sparse matrix over a graded enumeration.
"""

import math

import mpmath
import numpy as np
import scipy.sparse

from . import jacobi
from .errors import ParameterError
from .indexing import BasisEnumeration, tail_sums
from .simplex import to_cube

# Entries smaller than this are dropped from sparse storage (exact zeros).
ENTRY_FLOOR = 1e-300


class MultiJacobiBasis:
    """Basis of multivariate Jacobi polynomials over a graded enumeration.

    Args:
        theta: K positive mutation weights. Floats normally; an object array
            of multiprecision scalars is accepted and propagates through the
            coefficient tables and norms.
        enumeration: BasisEnumeration with matching K.
    """

    def __init__(self, theta, enumeration):
        theta = np.asarray(theta)
        if theta.dtype != object:
            theta = theta.astype(float)
        if theta.ndim != 1 or len(theta) != enumeration.K:
            raise ParameterError(
                f"need {enumeration.K} mutation weights, got shape {theta.shape}")
        if not all(t > 0 for t in theta):
            raise ParameterError("mutation weights must be positive")
        self.theta = theta
        self.enumeration = enumeration
        self.K = enumeration.K
        self.D = enumeration.D
        # suffix sums theta[j+1] + ... + theta[K-1], one per axis
        self.theta_tail = [sum(theta[j + 1:]) for j in range(self.K - 1)]
        self._log_norms = None

    def axis_params(self, j, tail_degree):
        """Univariate weight exponents (a, b) at axis j given suffix degree."""
        return self.theta[j], self.theta_tail[j] + 2 * tail_degree

    # -- evaluation ---------------------------------------------------------

    def eval_P_cube(self, n, xi):
        """Evaluate P_n at cube coordinates xi (last axis has K-1 slots)."""
        xi = np.asarray(xi, dtype=float)
        tails = tail_sums(n)
        val = np.ones(xi.shape[:-1])
        for j in range(self.K - 1):
            a, b = self.axis_params(j, tails[j])
            val = val * jacobi.eval_R(n[j], a, b, xi[..., j])
            if tails[j]:
                val = val * (1.0 - xi[..., j]) ** tails[j]
        return val

    def eval_P(self, n, x):
        """Evaluate P_n at simplex points x."""
        return self.eval_P_cube(n, to_cube(x))

    def eval_prefix_cube(self, xi, count=None):
        """Evaluate the first `count` basis members at cube points.

        Shares the per-axis recurrence tables across indices, so the cost is
        one univariate table per (axis, suffix-degree) pair plus one product
        per basis member.

        Returns an array of shape (count,) + xi.shape[:-1].
        """
        xi = np.asarray(xi, dtype=float)
        enum = self.enumeration
        if count is None:
            count = len(enum)
        if count > len(enum):
            raise ParameterError(
                f"requested {count} basis members, enumeration holds {len(enum)}")
        pts = xi.shape[:-1]
        naxes = self.K - 1
        r_tables = [dict() for _ in range(naxes)]
        pow_tables = []
        for j in range(naxes):
            pows = np.ones((self.D + 1,) + pts)
            base = 1.0 - xi[..., j]
            for e in range(1, self.D + 1):
                pows[e] = pows[e - 1] * base
            pow_tables.append(pows)
        out = np.empty((count,) + pts)
        for pos in range(count):
            n = enum.indices[pos]
            tails = tail_sums(n)
            val = np.ones(pts)
            for j in range(naxes):
                tab = r_tables[j].get(tails[j])
                if tab is None:
                    a, b = self.axis_params(j, tails[j])
                    tab = jacobi.eval_R_all(self.D - tails[j], a, b, xi[..., j])
                    r_tables[j][tails[j]] = tab
                val = val * tab[n[j]]
                if tails[j]:
                    val = val * pow_tables[j][tails[j]]
            out[pos] = val
        return out

    # -- norms ---------------------------------------------------------------

    def log_norm_C(self, n):
        """Log of the squared norm C_n under the Dirichlet kernel."""
        tails = tail_sums(n)
        total = 0.0
        for j in range(self.K - 1):
            a, b = self.axis_params(j, tails[j])
            total = total + jacobi.log_norm_c(n[j], a, b)
        return total

    def norm_C(self, n):
        lg = self.log_norm_C(n)
        if isinstance(lg, float):
            return math.exp(lg)
        return mpmath.exp(lg)

    def log_norms_all(self):
        """Vector of log C_n over the whole enumeration (cached, float path)."""
        if self._log_norms is None:
            self._log_norms = np.array(
                [float(self.log_norm_C(n)) for n in self.enumeration.indices])
        return self._log_norms

    # -- coordinate-multiplication recurrence --------------------------------

    def recurrence_entry(self, n, m, i):
        """Coefficient of P_m in the expansion of x_i * P_n.

        Args:
            n, m: index tuples.
            i: coordinate label, 1-based in 1..K-1.

        Returns exact 0.0 when m is outside the admissible neighbor set of n.
        """
        piv = self._check_coord(i)
        if any(m[j] != n[j] for j in range(piv + 1, self.K - 1)):
            return 0.0
        if any(v < 0 for v in m):
            return 0.0
        tails_n = tail_sums(n)
        tails_m = tail_sums(m)
        a, b = self.axis_params(piv, tails_n[piv])
        val = jacobi.coeff_G(n[piv], m[piv], a, b)
        for j in range(piv - 1, -1, -1):
            if val == 0.0:
                return 0.0
            d = tails_n[j] - tails_m[j]
            a, b = self.axis_params(j, tails_n[j])
            if d == -1:
                val = val * jacobi.coeff_H(n[j], m[j], a, b)
            elif d == 0:
                val = val * jacobi.coeff_I(n[j], m[j], a, b)
            elif d == 1:
                val = val * jacobi.coeff_J(n[j], m[j], a, b)
            else:
                return 0.0
        return val

    def row_entries(self, n, i):
        """All (m, coefficient) pairs of the x_i * P_n expansion.

        Walks the admissible band at each slot: the pivot slot takes the
        three-point G band; each slot below takes the H/I/J band selected by
        the accumulated suffix-degree change d, which the bands keep in
        {-1, 0, +1} automatically.
        """
        piv = self._check_coord(i)
        tails = tail_sums(n)
        a, b = self.axis_params(piv, tails[piv])
        suffix = n[piv + 1:]
        results = []

        def walk(j, d, value, chosen):
            if j < 0:
                results.append((tuple(chosen) + suffix, value))
                return
            a_j, b_j = self.axis_params(j, tails[j])
            if d == -1:
                table, lo = jacobi.coeff_H, n[j] - 2
            elif d == 0:
                table, lo = jacobi.coeff_I, n[j] - 1
            else:
                table, lo = jacobi.coeff_J, n[j]
            for mj in range(max(lo, 0), lo + 3):
                f = table(n[j], mj, a_j, b_j)
                if f == 0.0:
                    continue
                walk(j - 1, d + n[j] - mj, value * f, [mj] + chosen)

        for mp in range(max(n[piv] - 1, 0), n[piv] + 2):
            g = jacobi.coeff_G(n[piv], mp, a, b)
            if g == 0.0:
                continue
            walk(piv - 1, n[piv] - mp, g, [mp])
        return results

    def recurrence_matrix(self, i, pad=0):
        """Sparse coordinate-multiplication matrix over the enumeration.

        Args:
            i: coordinate label in 1..K-1.
            pad: build over an enlarged enumeration at degree D + pad, so that
                products of up to `pad` such matrices are exact on the
                degree-D block.

        Returns a CSR matrix; rows/columns follow graded-lex positions of the
        (padded) enumeration. Entries with magnitude below 1e-300 are dropped.
        """
        self._check_coord(i)
        if pad < 0:
            raise ParameterError(f"pad must be >= 0, got {pad}")
        enum = self.enumeration if pad == 0 else BasisEnumeration(self.K, self.D + pad)
        rows, cols, vals = [], [], []
        for pos, n in enumerate(enum.indices):
            for m, v in self.row_entries(n, i):
                col = enum.position.get(m)
                if col is None:
                    continue  # neighbor beyond the padded block
                fv = float(v)
                if abs(fv) < ENTRY_FLOOR:
                    continue
                rows.append(pos)
                cols.append(col)
                vals.append(fv)
        U = len(enum)
        return scipy.sparse.csr_matrix(
            (vals, (rows, cols)), shape=(U, U), dtype=float)

    def _check_coord(self, i):
        if not 1 <= i <= self.K - 1:
            raise ParameterError(
                f"coordinate label must be in 1..{self.K - 1}, got {i}")
        return i - 1


def dump_matrix_csv(matrix, path):
    """Debug dump of a sparse recurrence matrix as (row, col, value) triplets."""
    coo = matrix.tocoo()
    with open(path, "w", newline="") as fh:
        fh.write("row,col,value\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r},{c},{v:.17g}\n")
