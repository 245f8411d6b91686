"""Small exact linear algebra kit over Fraction.

All matrices are tuples of row tuples, all vectors plain tuples. The
dimensions in this package never exceed a dozen, so plain Gaussian
elimination over exact rationals is both fast enough and free of any
rounding concerns.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd


def frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def vec(entries) -> tuple:
    return tuple(frac(x) for x in entries)


def mat(rows) -> tuple:
    return tuple(vec(r) for r in rows)


def zeros(n: int) -> tuple:
    return (Fraction(0),) * n


def identity(n: int) -> tuple:
    return tuple(tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n))


def vec_add(u, v):
    return tuple(a + b for a, b in zip(u, v))


def vec_sub(u, v):
    return tuple(a - b for a, b in zip(u, v))


def vec_scale(c, v):
    c = frac(c)
    return tuple(c * a for a in v)


def dot(u, v):
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def mat_vec(m, v):
    return tuple(dot(row, v) for row in m)


def mat_mul(a, b):
    bt = tuple(zip(*b))
    return tuple(tuple(dot(row, col) for col in bt) for row in a)


def transpose(m):
    return tuple(zip(*m))


def _eliminate(rows):
    """Row-reduce in place (list of lists); returns pivot column list."""
    pivots = []
    r = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return pivots


def rank(m) -> int:
    rows = [list(map(frac, row)) for row in m]
    if not rows:
        return 0
    return len(_eliminate(rows))


def solve(m, b):
    """One solution x of m @ x = b, or None if inconsistent.

    m may be rectangular; when the solution space is positive-dimensional
    the free variables are set to zero.
    """
    nrows = len(m)
    ncols = len(m[0]) if nrows else 0
    rows = [list(map(frac, m[i])) + [frac(b[i])] for i in range(nrows)]
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, nrows) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    for i in range(r, nrows):
        if rows[i][ncols] != 0:
            return None
    x = [Fraction(0)] * ncols
    for i, c in enumerate(pivots):
        x[c] = rows[i][ncols]
    return tuple(x)


def nullspace(m):
    """Basis of the right kernel of m, as a tuple of vectors."""
    nrows = len(m)
    ncols = len(m[0]) if nrows else 0
    if nrows == 0:
        return tuple(identity(ncols))
    rows = [list(map(frac, row)) for row in m]
    pivots = _eliminate(rows)
    pivot_set = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        v = [Fraction(0)] * ncols
        v[free] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -rows[i][free]
        basis.append(tuple(v))
    return tuple(basis)


def mat_inv(m):
    n = len(m)
    rows = [list(map(frac, m[i])) + [Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    pivots = _eliminate(rows)
    if len(pivots) != n:
        raise ZeroDivisionError("singular matrix")
    return tuple(tuple(rows[i][n:]) for i in range(n))


def det(m):
    n = len(m)
    rows = [list(map(frac, row)) for row in m]
    d = Fraction(1)
    for c in range(n):
        pivot = next((i for i in range(c, n) if rows[i][c] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            rows[c], rows[pivot] = rows[pivot], rows[c]
            d = -d
        d *= rows[c][c]
        inv = 1 / rows[c][c]
        for i in range(c + 1, n):
            if rows[i][c] != 0:
                f = rows[i][c] * inv
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[c])]
    return d


def frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    """Positive generator of the subgroup of Q generated by a and b."""
    a, b = abs(frac(a)), abs(frac(b))
    if a == 0:
        return b
    if b == 0:
        return a
    den = a.denominator * b.denominator // gcd(a.denominator, b.denominator)
    return Fraction(gcd(a.numerator * (den // a.denominator), b.numerator * (den // b.denominator)), den)


class Lattice:
    """Full-rank lattice in Q^n given by a basis; exact membership and index."""

    def __init__(self, basis):
        self.basis = mat(basis)
        self.n = len(self.basis)
        if self.n and rank(self.basis) != self.n:
            raise ValueError("lattice basis is not linearly independent")
        self._inv = mat_inv(transpose(self.basis)) if self.n else ()

    def coordinates(self, v):
        """Coefficients of v in the lattice basis (exact rationals)."""
        return mat_vec(self._inv, vec(v))

    def __contains__(self, v) -> bool:
        return all(c.denominator == 1 for c in self.coordinates(v))

    def index_of_sublattice(self, other: "Lattice") -> int:
        """[self : other] for other a finite-index sublattice of self."""
        coords = [self.coordinates(b) for b in other.basis]
        if any(c.denominator != 1 for row in coords for c in row):
            raise ValueError("not a sublattice")
        idx = abs(det(coords))
        if idx == 0 or idx.denominator != 1:
            raise ValueError("sublattice is not of finite index")
        return int(idx)


def lattice_from_generators(gens, n):
    """Full-rank lattice spanned by the given generators of Q^n.

    Hermite-style reduction over Q with denominators cleared; the input
    must span Q^n.
    """
    # Clear denominators to a common multiple, run integer row reduction,
    # then scale back.
    denom = 1
    for g in gens:
        for x in g:
            x = frac(x)
            denom = denom * x.denominator // gcd(denom, x.denominator)
    rows = [[int(frac(x) * denom) for x in g] for g in gens]
    basis = _hermite(rows, n)
    if len(basis) != n:
        raise ValueError("generators do not span the ambient space")
    return Lattice([[Fraction(x, denom) for x in row] for row in basis])


def _hermite(rows, n):
    """Integer row echelon basis of the row span (gcd pivots per column)."""
    rows = [list(r) for r in rows if any(r)]
    basis = []
    for col in range(n):
        pivot_rows = [r for r in rows if r[col] != 0]
        other_rows = [r for r in rows if r[col] == 0]
        while len(pivot_rows) > 1:
            pivot_rows.sort(key=lambda r: abs(r[col]))
            small = pivot_rows[0]
            kept = [small]
            for r in pivot_rows[1:]:
                q = r[col] // small[col]
                for j in range(n):
                    r[j] -= q * small[j]
                if r[col] != 0:
                    kept.append(r)
                elif any(r):
                    other_rows.append(r)
            pivot_rows = kept
        if pivot_rows:
            basis.append(pivot_rows[0])
        rows = other_rows
    return basis
