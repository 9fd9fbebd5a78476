"""Deterministic exact linear algebra over Q / Q(i).

Everything here is dense and small (fixture dimensions stay below ~128 per
degree).  The point is not speed but *canonicity*: row echelon uses the
leftmost-pivot rule, subspaces are stored in row-rref form, and complements
are picked by a fixed pivot rule, so every splitting made downstream is
reproducible bit for bit.
"""

from __future__ import annotations

from .scalar import Field


class LinAlgError(ValueError):
    pass


class Matrix:
    """Immutable dense matrix over an exact field."""

    __slots__ = ("field", "rows", "cols", "entries")

    def __init__(self, field: Field, entries, cols=None):
        entries = tuple(tuple(field.of(x) for x in row) for row in entries)
        rows = len(entries)
        if rows:
            cols_found = len(entries[0])
            if any(len(r) != cols_found for r in entries):
                raise LinAlgError("ragged rows")
            if cols is not None and cols != cols_found:
                raise LinAlgError("cols mismatch")
            cols = cols_found
        elif cols is None:
            cols = 0
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "entries", entries)

    def __setattr__(self, name, value):
        raise AttributeError("Matrix is immutable")

    @staticmethod
    def zero(field, rows, cols):
        z = field.zero
        return Matrix(field, [[z] * cols for _ in range(rows)], cols=cols)

    @staticmethod
    def identity(field, n):
        z, o = field.zero, field.one
        return Matrix(field, [[o if i == j else z for j in range(n)] for i in range(n)])

    @staticmethod
    def from_columns(field, columns, rows=None):
        columns = list(columns)
        if rows is None:
            if not columns:
                raise LinAlgError("cannot infer row count")
            rows = len(columns[0])
        if not columns:
            return Matrix.zero(field, rows, 0)
        return Matrix(field, [[col[i] for col in columns] for i in range(rows)])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other):
        return (
            isinstance(other, Matrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.entries == other.entries
        )

    def __hash__(self):
        return hash((self.rows, self.cols, self.entries))

    def row(self, i):
        return self.entries[i]

    def column(self, j):
        return tuple(self.entries[i][j] for i in range(self.rows))

    def columns(self):
        return [self.column(j) for j in range(self.cols)]

    def transpose(self):
        return Matrix(self.field, [self.column(j) for j in range(self.cols)], cols=self.rows)

    def __add__(self, other):
        if self.rows != other.rows or self.cols != other.cols:
            raise LinAlgError("shape mismatch in addition")
        return Matrix(
            self.field,
            [
                [self.entries[i][j] + other.entries[i][j] for j in range(self.cols)]
                for i in range(self.rows)
            ],
            cols=self.cols,
        )

    def __neg__(self):
        return Matrix(
            self.field,
            [[-x for x in row] for row in self.entries],
            cols=self.cols,
        )

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = self.field.of(c)
        return Matrix(
            self.field,
            [[c * x for x in row] for row in self.entries],
            cols=self.cols,
        )

    def __matmul__(self, other):
        if self.cols != other.rows:
            raise LinAlgError("shape mismatch in product")
        z = self.field.zero
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = z
                for k in range(self.cols):
                    a = self.entries[i][k]
                    if a:
                        acc = acc + a * other.entries[k][j]
                row.append(acc)
            out.append(row)
        return Matrix(self.field, out, cols=other.cols)

    def apply(self, vec):
        """Matrix times column vector (a sequence), returning a tuple."""
        if len(vec) != self.cols:
            raise LinAlgError("vector length mismatch")
        z = self.field.zero
        out = []
        for i in range(self.rows):
            acc = z
            row = self.entries[i]
            for k, a in enumerate(vec):
                if a:
                    acc = acc + row[k] * a
            out.append(acc)
        return tuple(out)

    def is_zero(self):
        return all(not x for row in self.entries for x in row)

    def __repr__(self):
        body = "; ".join(" ".join(str(x) for x in row) for row in self.entries)
        return f"Matrix({self.rows}x{self.cols}: {body})"


def rref(M: Matrix):
    """Reduced row echelon form with the leftmost-pivot rule.

    Returns (R, pivots) with strictly increasing pivot columns.
    """
    field = M.field
    rows = [list(r) for r in M.entries]
    nrows, ncols = M.rows, M.cols
    pivots = []
    r = 0
    for c in range(ncols):
        if r >= nrows:
            break
        sel = None
        for i in range(r, nrows):
            if rows[i][c]:
                sel = i
                break
        if sel is None:
            continue
        rows[r], rows[sel] = rows[sel], rows[r]
        inv = field.one / rows[r][c]
        rows[r] = [inv * x for x in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    return Matrix(field, rows, cols=ncols), tuple(pivots)


def rank(M: Matrix):
    return len(rref(M)[1])


def kernel_basis(M: Matrix):
    """Canonical basis of ker(M) as column vectors (one per free column)."""
    field = M.field
    R, pivots = rref(M)
    pivot_set = set(pivots)
    free = [c for c in range(M.cols) if c not in pivot_set]
    basis = []
    for fc in free:
        v = [field.zero] * M.cols
        v[fc] = field.one
        for r, pc in enumerate(pivots):
            v[pc] = -R.entries[r][fc]
        basis.append(tuple(v))
    return basis


def solve(M: Matrix, b):
    """One solution x of M x = b, or None; free coordinates are set to zero."""
    field = M.field
    aug = Matrix(field, [list(M.entries[i]) + [b[i]] for i in range(M.rows)],
                 cols=M.cols + 1) if M.rows else Matrix.zero(field, 0, M.cols + 1)
    R, pivots = rref(aug)
    if M.cols in pivots:
        return None
    x = [field.zero] * M.cols
    for r, pc in enumerate(pivots):
        x[pc] = R.entries[r][M.cols]
    return tuple(x)


def split_surjection(M: Matrix):
    """Canonical right inverse S of a full-row-rank M (M @ S == identity).

    S solves on the pivot columns of rref(M) and is zero elsewhere.
    """
    field = M.field
    R, pivots = rref(M)
    if len(pivots) != M.rows:
        raise LinAlgError("matrix is not surjective")
    sub = Matrix(field, [[M.entries[i][c] for c in pivots] for i in range(M.rows)],
                 cols=len(pivots))
    inv = invert(sub)
    S = [[field.zero] * M.rows for _ in range(M.cols)]
    for k, c in enumerate(pivots):
        for j in range(M.rows):
            S[c][j] = inv.entries[k][j]
    return Matrix(field, S, cols=M.rows)


def invert(M: Matrix):
    if M.rows != M.cols:
        raise LinAlgError("only square matrices invert")
    field = M.field
    n = M.rows
    aug = Matrix(field, [list(M.entries[i]) + [field.one if i == j else field.zero
                                               for j in range(n)]
                         for i in range(n)], cols=2 * n)
    R, pivots = rref(aug)
    if tuple(pivots) != tuple(range(n)):
        raise LinAlgError("matrix is singular")
    return Matrix(field, [row[n:] for row in R.entries], cols=n)


class Subspace:
    """A subspace of k^n in canonical form: rows of an rref matrix."""

    __slots__ = ("field", "ambient", "basis")

    def __init__(self, field, ambient, vectors=()):
        vectors = list(vectors)
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "ambient", ambient)
        if vectors:
            M = Matrix(field, vectors, cols=ambient)
            R, pivots = rref(M)
            rows = tuple(R.entries[i] for i in range(len(pivots)))
        else:
            rows = ()
        object.__setattr__(self, "basis", rows)

    def __setattr__(self, name, value):
        raise AttributeError("Subspace is immutable")

    @staticmethod
    def zero(field, ambient):
        return Subspace(field, ambient)

    @staticmethod
    def full(field, ambient):
        return Subspace(field, ambient, Matrix.identity(field, ambient).entries)

    @property
    def dim(self):
        return len(self.basis)

    def pivots(self):
        out = []
        for row in self.basis:
            for j, x in enumerate(row):
                if x:
                    out.append(j)
                    break
        return tuple(out)

    def __eq__(self, other):
        return (
            isinstance(other, Subspace)
            and self.ambient == other.ambient
            and self.basis == other.basis
        )

    def __hash__(self):
        return hash((self.ambient, self.basis))

    def contains_vector(self, v):
        v = list(v)
        if len(v) != self.ambient:
            raise LinAlgError("ambient mismatch")
        for row in self.basis:
            lead = next(j for j, x in enumerate(row) if x)
            c = v[lead]
            if c:
                v = [a - c * b for a, b in zip(v, row)]
        return all(not x for x in v)

    def reduce_vector(self, v):
        """Normal form of v modulo this subspace (eliminate pivot coords)."""
        v = list(v)
        for row in self.basis:
            lead = next(j for j, x in enumerate(row) if x)
            c = v[lead]
            if c:
                v = [a - c * b for a, b in zip(v, row)]
        return tuple(v)

    def contains(self, other):
        return all(self.contains_vector(row) for row in other.basis)

    def __add__(self, other):
        if self.ambient != other.ambient:
            raise LinAlgError("ambient mismatch")
        return Subspace(self.field, self.ambient, list(self.basis) + list(other.basis))

    def intersect(self, other):
        if self.ambient != other.ambient:
            raise LinAlgError("ambient mismatch")
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.field, self.ambient)
        # Kernel of [B1^T | B2^T] gives coefficients of vanishing combinations.
        cols = [list(row) for row in self.basis] + [list(row) for row in other.basis]
        M = Matrix.from_columns(self.field, cols, rows=self.ambient)
        vecs = []
        for k in kernel_basis(M):
            combo = [self.field.zero] * self.ambient
            for c, row in zip(k[: self.dim], self.basis):
                if c:
                    combo = [a + c * b for a, b in zip(combo, row)]
            vecs.append(combo)
        return Subspace(self.field, self.ambient, vecs)

    def __repr__(self):
        return f"Subspace(dim {self.dim} of k^{self.ambient})"


def span_columns(field, columns, ambient):
    return Subspace(field, ambient, [list(c) for c in columns])


def image(M: Matrix):
    return Subspace(M.field, M.rows, [list(M.column(j)) for j in range(M.cols)])


def kernel(M: Matrix):
    return Subspace(M.field, M.cols, [list(v) for v in kernel_basis(M)])


def preimage(M: Matrix, S: Subspace):
    """{x : M x in S} as a subspace of the domain."""
    if S.ambient != M.rows:
        raise LinAlgError("ambient mismatch")
    cols = [list(M.column(j)) for j in range(M.cols)]
    cols += [list(row) for row in S.basis]
    if not cols:
        return Subspace.full(M.field, M.cols)
    big = Matrix.from_columns(M.field, cols, rows=M.rows)
    vecs = []
    for k in kernel_basis(big):
        vecs.append(list(k[: M.cols]))
    return Subspace(M.field, M.cols, vecs)


def complement(S: Subspace, T: Subspace):
    """The canonical complement C of S inside T (S + C = T, S ∩ C = 0).

    C is spanned by the rref basis vectors of T whose pivot position is not
    a pivot position of S.  Requires S ⊆ T.
    """
    if S.ambient != T.ambient:
        raise LinAlgError("ambient mismatch")
    if not T.contains(S):
        raise LinAlgError("S is not contained in T")
    spiv = set(S.pivots())
    vecs = []
    for row in T.basis:
        lead = next(j for j, x in enumerate(row) if x)
        if lead not in spiv:
            vecs.append(row)
    return Subspace(S.field, S.ambient, vecs)


def coordinates_in(vectors, v, field=None):
    """Coefficients of v in the given spanning vectors, or None.

    The vectors need not be independent; free coefficients are zero.
    """
    if not vectors:
        return None if any(v) else ()
    fld = field if field is not None else _field_of(vectors)
    M = Matrix.from_columns(fld, [list(w) for w in vectors], rows=len(vectors[0]))
    return solve(M, list(v))


def _field_of(vectors):
    from .scalar import QQ, QI, GaussianRational

    for w in vectors:
        for x in w:
            if isinstance(x, GaussianRational):
                return QI
    return QQ
