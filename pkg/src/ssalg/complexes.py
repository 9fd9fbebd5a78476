"""Filtered cochain complexes and their spectral sequences.

A FilteredComplex is a finite basis, each element carrying a cohomological
degree and a filtration weight, together with a degree +1 differential.
The decreasing filtration F^p is spanned by the basis elements of weight
>= p, so F^p is always basis-aligned; constructions whose output is not
aligned (decalage) re-base explicitly.

The two transfer constructions live here as well: the classical homotopy
transfer onto cohomology (canonical splittings throughout), and the
filtered version landing on the first page of the spectral sequence with a
weight-raising differential, built by induction over decreasing weights.
"""

from __future__ import annotations

from . import linalg
from .linalg import Matrix, Subspace, complement
from .scalar import Field


class ComplexError(ValueError):
    pass


class InternalInvariantError(AssertionError):
    """A construction violated an identity it is supposed to guarantee."""


# ---------------------------------------------------------------------------
# sparse vectors over a global basis


def vec_add(u, v):
    out = dict(u)
    for k, x in v.items():
        y = out.get(k)
        if y is None:
            out[k] = x
        else:
            y = y + x
            if y:
                out[k] = y
            else:
                del out[k]
    return out


def vec_scale(c, v):
    if not c:
        return {}
    return {k: c * x for k, x in v.items()}


def vec_sub(u, v):
    out = dict(u)
    for k, x in v.items():
        y = out.get(k, None)
        y = -x if y is None else y - x
        if y:
            out[k] = y
        else:
            out.pop(k, None)
    return out


def vec_eq(u, v):
    return vec_sub(u, v) == {}


class FilteredComplex:
    """Finite filtered cochain complex with basis-aligned weights."""

    def __init__(self, field: Field, labels, degrees, weights, d, validate=True):
        self.field = field
        self.labels = tuple(labels)
        self.degrees = tuple(degrees)
        self.weights = tuple(weights)
        n = len(self.labels)
        if not (len(self.degrees) == len(self.weights) == n):
            raise ComplexError("basis data length mismatch")
        if len(set(self.labels)) != n:
            raise ComplexError("duplicate basis labels")
        self.d = {i: {j: c for j, c in col.items() if c} for i, col in d.items()}
        self.d = {i: col for i, col in self.d.items() if col}
        self._by_degree = {}
        for i, deg in enumerate(self.degrees):
            self._by_degree.setdefault(deg, []).append(i)
        self.label_index = {lab: i for i, lab in enumerate(self.labels)}
        if validate:
            self.validate()

    # -- basic structure ---------------------------------------------------

    @property
    def dim(self):
        return len(self.labels)

    def degrees_present(self):
        return sorted(self._by_degree)

    def indices_of_degree(self, n):
        return self._by_degree.get(n, [])

    def weight_range(self):
        if not self.labels:
            return (0, 0)
        return (min(self.weights), max(self.weights))

    def min_degree(self):
        return min(self.degrees) if self.labels else 0

    def max_degree(self):
        return max(self.degrees) if self.labels else 0

    def d_of(self, i):
        return self.d.get(i, {})

    def d_vec(self, v):
        out = {}
        for i, c in v.items():
            out = vec_add(out, vec_scale(c, self.d_of(i)))
        return out

    def validate(self):
        for i, col in self.d.items():
            for j, c in col.items():
                if self.degrees[j] != self.degrees[i] + 1:
                    raise ComplexError(
                        f"d({self.labels[i]}) hits {self.labels[j]} of wrong degree"
                    )
                if self.weights[j] < self.weights[i]:
                    raise ComplexError(
                        f"d({self.labels[i]}) drops filtration weight at {self.labels[j]}"
                    )
        for i in range(self.dim):
            if self.d_vec(self.d_of(i)):
                raise ComplexError(f"d*d != 0 on {self.labels[i]}")

    # -- degree-local dense coordinates --------------------------------------

    def to_dense(self, n, v):
        idx = self.indices_of_degree(n)
        pos = {i: k for k, i in enumerate(idx)}
        out = [self.field.zero] * len(idx)
        for i, c in v.items():
            if i not in pos:
                if c:
                    raise ComplexError("vector not concentrated in the degree")
            else:
                out[pos[i]] = c
        return tuple(out)

    def from_dense(self, n, dense):
        idx = self.indices_of_degree(n)
        return {i: c for i, c in zip(idx, dense) if c}

    def d_matrix(self, n):
        """Matrix of d from degree n to degree n+1 in degree-local coordinates."""
        src = self.indices_of_degree(n)
        tgt = self.indices_of_degree(n + 1)
        pos = {i: k for k, i in enumerate(tgt)}
        z = self.field.zero
        rows = [[z] * len(src) for _ in range(len(tgt))]
        for c_idx, i in enumerate(src):
            for j, coeff in self.d_of(i).items():
                rows[pos[j]][c_idx] = coeff
        return Matrix(self.field, rows, cols=len(src))

    def filtration_subspace(self, n, p):
        """F^p in degree n as a coordinate subspace (dense coords)."""
        idx = self.indices_of_degree(n)
        vecs = []
        for k, i in enumerate(idx):
            if self.weights[i] >= p:
                v = [self.field.zero] * len(idx)
                v[k] = self.field.one
                vecs.append(v)
        return Subspace(self.field, len(idx), vecs)

    def degree_of_vec(self, v):
        degs = {self.degrees[i] for i in v}
        if len(degs) > 1:
            raise ComplexError("vector not homogeneous")
        return degs.pop() if degs else None

    def weight_of_vec(self, v):
        """Largest p with v in F^p (min weight over the support); None for 0."""
        if not v:
            return None
        return min(self.weights[i] for i in v)

    # -- derived complexes ----------------------------------------------------

    def subcomplex_of_weight(self, p):
        keep = [i for i in range(self.dim) if self.weights[i] >= p]
        return self._restrict(keep)

    def graded_piece(self, p):
        """Gr^p = F^p / F^{p+1} on the weight == p basis, with projected d."""
        keep = [i for i in range(self.dim) if self.weights[i] == p]
        old_to_new = {i: k for k, i in enumerate(keep)}
        d = {}
        for k, i in enumerate(keep):
            col = {old_to_new[j]: c for j, c in self.d_of(i).items()
                   if self.weights[j] == p}
            if col:
                d[k] = col
        return FilteredComplex(
            self.field,
            [self.labels[i] for i in keep],
            [self.degrees[i] for i in keep],
            [self.weights[i] for i in keep],
            d,
        )

    def _restrict(self, keep):
        keep_set = set(keep)
        old_to_new = {i: k for k, i in enumerate(keep)}
        d = {}
        for k, i in enumerate(keep):
            col = {}
            for j, c in self.d_of(i).items():
                if j not in keep_set:
                    raise ComplexError("restriction is not a subcomplex")
                col[old_to_new[j]] = c
            if col:
                d[k] = col
        return FilteredComplex(
            self.field,
            [self.labels[i] for i in keep],
            [self.degrees[i] for i in keep],
            [self.weights[i] for i in keep],
            d,
        )

    def render_vec(self, v):
        if not v:
            return "0"
        out = []
        for i in sorted(v):
            c = v[i]
            s = self.field.render(c)
            lab = self.labels[i]
            if s == "1":
                term = lab
            elif s == "-1":
                term = f"-{lab}"
            elif ("+" in s[1:]) or ("-" in s[1:]):
                term = f"({s})*{lab}"
            else:
                term = f"{s}*{lab}"
            if out and not term.startswith("-"):
                out.append("+" + term)
            else:
                out.append(term)
        return "".join(out)


class GradedMap:
    """A degree-homogeneous linear map between complexes (sparse columns)."""

    def __init__(self, source: FilteredComplex, target: FilteredComplex, shift, cols):
        self.source = source
        self.target = target
        self.shift = shift
        cleaned = {}
        for i, col in cols.items():
            col = {j: c for j, c in col.items() if c}
            if col:
                cleaned[i] = col
        self.cols = cleaned

    @staticmethod
    def identity(C):
        return GradedMap(C, C, 0, {i: {i: C.field.one} for i in range(C.dim)})

    @staticmethod
    def zero(source, target, shift=0):
        return GradedMap(source, target, shift, {})

    def apply_index(self, i):
        return self.cols.get(i, {})

    def apply_vec(self, v):
        out = {}
        for i, c in v.items():
            col = self.cols.get(i)
            if col:
                out = vec_add(out, vec_scale(c, col))
        return out

    def compose(self, other):
        """self after other."""
        cols = {}
        for i, col in other.cols.items():
            out = {}
            for j, c in col.items():
                mine = self.cols.get(j)
                if mine:
                    out = vec_add(out, vec_scale(c, mine))
            if out:
                cols[i] = out
        return GradedMap(other.source, self.target, self.shift + other.shift, cols)

    def __add__(self, other):
        cols = {}
        for i in set(self.cols) | set(other.cols):
            v = vec_add(self.cols.get(i, {}), other.cols.get(i, {}))
            if v:
                cols[i] = v
        return GradedMap(self.source, self.target, self.shift, cols)

    def __neg__(self):
        return GradedMap(
            self.source, self.target, self.shift,
            {i: {j: -c for j, c in col.items()} for i, col in self.cols.items()},
        )

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return GradedMap(
            self.source, self.target, self.shift,
            {i: vec_scale(c, col) for i, col in self.cols.items()},
        )

    def is_zero(self):
        return not self.cols

    def __eq__(self, other):
        return (
            isinstance(other, GradedMap)
            and self.shift == other.shift
            and self.cols == other.cols
        )

    def validate_degrees(self):
        for i, col in self.cols.items():
            n = self.source.degrees[i]
            for j in col:
                if self.target.degrees[j] != n + self.shift:
                    raise ComplexError("map is not degree-homogeneous")

    def is_chain_map(self):
        """f d = d f (for degree-0 maps into a complex)."""
        for i in range(self.source.dim):
            lhs = self.apply_vec(self.source.d_of(i))
            rhs = self.target.d_vec(self.apply_index(i))
            if not vec_eq(lhs, rhs):
                return False
        return True

    def is_filtration_compatible(self):
        for i, col in self.cols.items():
            w = self.source.weights[i]
            for j in col:
                if self.target.weights[j] < w:
                    return False
        return True

    def matrix_between(self, n):
        src = self.source.indices_of_degree(n)
        tgt = self.target.indices_of_degree(n + self.shift)
        pos = {j: k for k, j in enumerate(tgt)}
        z = self.source.field.zero
        rows = [[z] * len(src) for _ in range(len(tgt))]
        for c_idx, i in enumerate(src):
            for j, coeff in self.apply_index(i).items():
                rows[pos[j]][c_idx] = coeff
        return Matrix(self.source.field, rows, cols=len(src))


class TransferDiagram:
    """Maps (f, g, h) with f, g chain maps and h d + d h = id - g f."""

    def __init__(self, source, target, f, g, h, filtered=True):
        self.source = source
        self.target = target
        self.f = f
        self.g = g
        self.h = h
        self.filtered = filtered

    def validate(self):
        src = self.source
        f, g, h = self.f, self.g, self.h
        f.validate_degrees()
        g.validate_degrees()
        h.validate_degrees()
        if f.shift != 0 or g.shift != 0 or h.shift != -1:
            raise ComplexError("transfer maps have wrong degrees")
        if not f.is_chain_map():
            raise InternalInvariantError("f is not a chain map")
        if not g.is_chain_map():
            raise InternalInvariantError("g is not a chain map")
        for i in range(src.dim):
            lhs = vec_add(h.apply_vec(src.d_of(i)), src.d_vec(h.apply_index(i)))
            rhs = vec_sub({i: src.field.one}, g.apply_vec(f.apply_index(i)))
            if not vec_eq(lhs, rhs):
                raise InternalInvariantError(f"h d + d h != id - g f on {src.labels[i]}")
        if self.filtered:
            for m, name in ((f, "f"), (g, "g"), (h, "h")):
                if not m.is_filtration_compatible():
                    raise InternalInvariantError(f"{name} is not filtration-compatible")
        return self


# ---------------------------------------------------------------------------
# classical homotopy transfer


def classical_transfer(C: FilteredComplex, block_of=None, label_prefix="h",
                       model_weight_from_reps=True):
    """Homotopy transfer diagram from C onto its cohomology with zero differential.

    Splittings are canonical: in each degree (and each block, when ``block_of``
    assigns a block key per basis index and d is block-homogeneous),
    A^n = B ⊕ H-lift ⊕ C with H-lift = complement(B, Z), C = complement(Z, A^n).
    f projects onto the H-lift, g includes it, h inverts d from C onto B.
    With rho = f, iota = g this satisfies rho iota = Id.
    """
    field = C.field
    degs = C.degrees_present()

    def block_key(i):
        return None if block_of is None else block_of(i)

    # per degree: {block: (B, H, C)} in dense degree coordinates
    dec = {}
    for n in degs:
        idx = C.indices_of_degree(n)
        amb = len(idx)
        blocks = {}
        for k, i in enumerate(idx):
            blocks.setdefault(block_key(i), []).append(k)
        dmat = C.d_matrix(n)
        # boundaries grouped by the block they land in
        bnd_by_block = {}
        pre_idx = C.indices_of_degree(n - 1)
        if pre_idx:
            dprev = C.d_matrix(n - 1)
            for c in range(dprev.cols):
                col = [dprev.entries[r][c] for r in range(dprev.rows)]
                if not any(col):
                    continue
                tgt_blocks = {block_key(idx[k]) for k, x in enumerate(col) if x}
                if len(tgt_blocks) > 1:
                    raise ComplexError("differential is not block-homogeneous")
                bnd_by_block.setdefault(tgt_blocks.pop(), []).append(col)
        dec_n = {}
        for key in sorted(blocks, key=lambda k: (str(type(k)), str(k))):
            coords = blocks[key]
            sub = Matrix(field, [[dmat.entries[r][c] for c in coords]
                                 for r in range(dmat.rows)], cols=len(coords))
            zvecs = []
            for v in linalg.kernel_basis(sub):
                full = [field.zero] * amb
                for c, coord in zip(v, coords):
                    full[coord] = c
                zvecs.append(full)
            Z = Subspace(field, amb, zvecs)
            B = Subspace(field, amb, bnd_by_block.get(key, []))
            if not Z.contains(B):
                raise InternalInvariantError("boundaries not contained in cocycles")
            H = complement(B, Z)
            full_block = Subspace(field, amb, [
                [field.one if t == coord else field.zero for t in range(amb)]
                for coord in coords
            ])
            Cpart = complement(Z, full_block)
            dec_n[key] = (B, H, Cpart)
        dec[n] = dec_n

    # model basis: one element per H-lift vector
    model_labels, model_degrees, model_weights = [], [], []
    rep_of_model = []
    model_index_of = {}
    for n in degs:
        for key, (B, H, Cp) in dec[n].items():
            for t, row in enumerate(H.basis):
                v = C.from_dense(n, row)
                w = C.weight_of_vec(v) if model_weight_from_reps else 0
                m = len(model_labels)
                model_labels.append(f"{label_prefix}{m}")
                model_degrees.append(n)
                model_weights.append(w if w is not None else 0)
                rep_of_model.append(v)
                model_index_of[(n, key, t)] = m
    model = FilteredComplex(field, model_labels, model_degrees, model_weights, {},
                            validate=False)
    g_cols = {m: dict(rep) for m, rep in enumerate(rep_of_model)}

    f_cols, h_cols = {}, {}
    for n in degs:
        idx = C.indices_of_degree(n)
        amb = len(idx)
        # full decomposition matrix: concatenate B|H|C over blocks
        columns, roles = [], []
        for key, (B, H, Cp) in dec[n].items():
            for t, row in enumerate(B.basis):
                columns.append(list(row))
                roles.append(("B", key, t, row))
            for t, row in enumerate(H.basis):
                columns.append(list(row))
                roles.append(("H", key, t, row))
            for t, row in enumerate(Cp.basis):
                columns.append(list(row))
                roles.append(("C", key, t, row))
        if not columns:
            continue
        P = Matrix.from_columns(field, columns, rows=amb)
        Pinv = linalg.invert(P)
        # preimages of all B-columns under d from the previous degree's C-part
        prev_c_cols, prev_c_vecs = [], []
        if C.indices_of_degree(n - 1):
            dm = C.d_matrix(n - 1)
            for key, (B, H, Cp) in dec.get(n - 1, {}).items():
                for row in Cp.basis:
                    prev_c_cols.append(list(dm.apply(list(row))))
                    prev_c_vecs.append(row)
        b_preimage = {}
        for r_idx, (role, key, t, row) in enumerate(roles):
            if role != "B":
                continue
            sol = linalg.coordinates_in(prev_c_cols, list(row), field)
            if sol is None:
                raise InternalInvariantError("cannot invert d on boundaries")
            pre = [field.zero] * len(C.indices_of_degree(n - 1))
            for c, cv in zip(sol, prev_c_vecs):
                if c:
                    pre = [a + c * b for a, b in zip(pre, cv)]
            b_preimage[r_idx] = C.from_dense(n - 1, pre)
        for k, i in enumerate(idx):
            e = [field.one if t == k else field.zero for t in range(amb)]
            coords = Pinv.apply(e)
            f_out, h_out = {}, {}
            for c, (role, key, t, row), r_idx in zip(coords, roles, range(len(roles))):
                if not c:
                    continue
                if role == "H":
                    f_out[model_index_of[(n, key, t)]] = c
                elif role == "B":
                    h_out = vec_add(h_out, vec_scale(c, b_preimage[r_idx]))
            if f_out:
                f_cols[i] = f_out
            if h_out:
                h_cols[i] = h_out

    f = GradedMap(C, model, 0, f_cols)
    g = GradedMap(model, C, 0, g_cols)
    h = GradedMap(C, C, -1, h_cols)
    diagram = TransferDiagram(C, model, f, g, h, filtered=False)
    for m in range(model.dim):
        if not vec_eq(f.apply_vec(g.apply_index(m)), {m: field.one}):
            raise InternalInvariantError("f g != id on the model")
    diagram.validate()
    return diagram


# ---------------------------------------------------------------------------
# spectral sequence


class PageCell:
    """E_r^{p,q}: canonical representative vectors plus the subquotient data."""

    def __init__(self, p, q, reps, numerator, denominator):
        self.p = p
        self.q = q
        self.reps = reps  # sparse vectors in the ambient complex
        self.numerator = numerator  # Subspace in dense degree coordinates
        self.denominator = denominator

    @property
    def dim(self):
        return len(self.reps)


class SpectralSequencePages:
    def __init__(self, complex, pages, differentials, degeneration_page, computed_to):
        self.complex = complex
        self.pages = pages  # r -> {(p,q): PageCell}
        self.differentials = differentials  # r -> {(p,q): Matrix}
        self.degeneration_page = degeneration_page
        self.computed_to = computed_to

    def cell(self, r, p, q):
        return self.pages[r].get((p, q))

    def dims(self, r):
        return {pq: cell.dim for pq, cell in self.pages[r].items() if cell.dim}

    def total_dim(self, r, n):
        return sum(c.dim for (p, q), c in self.pages[r].items() if p + q == n)

    def class_in(self, r, p, q, vector):
        """Coordinates of a vector's class in E_r^{p,q}; None if not in Z_r."""
        C = self.complex
        cell = self.cell(r, p, q)
        if cell is None:
            n = C.degree_of_vec(vector)
            if n is None:
                return ()
            # cell of dimension zero: the class must vanish
            dense = C.to_dense(n, vector)
            Z = _numerator(C, n, p, r)
            if not Z.contains_vector(dense):
                return None
            return ()
        return _cell_coords(C, cell, vector)


def _numerator(C, n, p, r):
    if r == 0:
        return C.filtration_subspace(n, p)
    return _z_subspace(C, n, p, r)


def _z_subspace(C, n, p, r):
    """Z_r in degree n at weight p: {x in F^p : d x in F^{p+r}} (dense coords)."""
    field = C.field
    idx = C.indices_of_degree(n)
    amb = len(idx)
    fp = [k for k, i in enumerate(idx) if C.weights[i] >= p]
    if not fp:
        return Subspace.zero(field, amb)
    tgt_idx = C.indices_of_degree(n + 1)
    low = [k for k, j in enumerate(tgt_idx) if C.weights[j] < p + r]
    dmat = C.d_matrix(n)
    if low:
        rows = [[dmat.entries[t][c] for c in fp] for t in low]
        kb = linalg.kernel_basis(Matrix(field, rows, cols=len(fp)))
    else:
        kb = [tuple(field.one if a == b else field.zero for a in range(len(fp)))
              for b in range(len(fp))]
    vecs = []
    for v in kb:
        full = [field.zero] * amb
        for c, k in zip(v, fp):
            full[k] = c
        vecs.append(full)
    return Subspace(field, amb, vecs)


def _denominator(C, n, p, r):
    field = C.field
    if r == 0:
        return C.filtration_subspace(n, p + 1)
    zn = _z_subspace(C, n, p + 1, r - 1)
    zb = _z_subspace(C, n - 1, p - r + 1, r - 1)
    dmat = C.d_matrix(n - 1)
    bvecs = [list(dmat.apply(list(row))) for row in zb.basis]
    return zn + Subspace(field, len(C.indices_of_degree(n)), bvecs)


def _cell_coords(C, cell, vector):
    n = cell.p + cell.q
    dense = C.to_dense(n, vector)
    if not cell.numerator.contains_vector(dense):
        return None
    den_rows = [list(r_) for r_ in cell.denominator.basis]
    rep_cols = [list(C.to_dense(n, rep)) for rep in cell.reps]
    if not den_rows and not rep_cols:
        return () if not any(dense) else None
    sol = linalg.coordinates_in(den_rows + rep_cols, list(dense), C.field)
    if sol is None:
        return None
    return tuple(sol[len(den_rows):])


def spectral_sequence(C: FilteredComplex, r_max=None):
    """Pages E_0 .. max(r_max, stabilization bound), with differentials,
    canonical representatives, and the exact degeneration page."""
    field = C.field
    if C.dim == 0:
        return SpectralSequencePages(C, {0: {}, 1: {}}, {0: {}, 1: {}}, 0, 1)
    wmin, wmax = C.weight_range()
    stab = wmax - wmin + 1  # d_r = 0 for r > stab automatically
    r_top = max(r_max if r_max is not None else 1, stab + 1)
    degs = C.degrees_present()
    pages, diffs = {}, {}
    for r in range(r_top + 1):
        cells = {}
        for n in degs:
            for p in range(wmin, wmax + 1):
                Z = _numerator(C, n, p, r)
                den = _denominator(C, n, p, r)
                if not Z.contains(den):
                    raise InternalInvariantError("page denominator escapes numerator")
                reps_sub = complement(den, Z)
                if reps_sub.dim:
                    reps = [C.from_dense(n, row) for row in reps_sub.basis]
                    cells[(p, n - p)] = PageCell(p, n - p, reps, Z, den)
        pages[r] = cells
        dr = {}
        for (p, q), cell in cells.items():
            tgt = cells.get((p + r, q - r + 1))
            cols = []
            for rep in cell.reps:
                dv = C.d_vec(rep)
                if tgt is None:
                    # target cell is zero; the class of d(rep) must vanish
                    if dv:
                        n2 = p + q + 1
                        dense = C.to_dense(n2, dv)
                        if not _denominator(C, n2, p + r, r).contains_vector(dense):
                            raise InternalInvariantError("d_r image misses zero cell")
                    cols.append(())
                else:
                    coords = _cell_coords(C, tgt, dv)
                    if coords is None:
                        raise InternalInvariantError("d_r image not in target Z_r")
                    cols.append(coords)
            if tgt is not None:
                dr[(p, q)] = Matrix.from_columns(
                    field, [list(c) for c in cols], rows=tgt.dim)
        diffs[r] = dr
    # H(E_r, d_r) must match E_{r+1} dimensionwise
    for r in range(r_top):
        keys = set(pages[r]) | set(pages[r + 1])
        for (p, q) in keys:
            cell = pages[r].get((p, q))
            dim_here = cell.dim if cell else 0
            mat_out = diffs[r].get((p, q))
            mat_in = diffs[r].get((p - r, q + r - 1))
            rk_out = linalg.rank(mat_out) if mat_out is not None else 0
            rk_in = linalg.rank(mat_in) if mat_in is not None else 0
            nxt = pages[r + 1].get((p, q))
            nxt_dim = nxt.dim if nxt else 0
            if dim_here - rk_out - rk_in != nxt_dim:
                raise InternalInvariantError(f"H(E_{r}) != E_{r + 1} at {(p, q)}")
    last_nonzero = -1
    for r in range(r_top + 1):
        if any(not m.is_zero() for m in diffs[r].values()):
            last_nonzero = r
    degeneration = last_nonzero + 1
    _check_e_infinity(C, pages[r_top])
    return SpectralSequencePages(C, pages, diffs, degeneration, r_top)


def _check_e_infinity(C, top_cells):
    """E_infinity dimensions must equal those of Gr_F of the cohomology."""
    field = C.field
    wmin, wmax = C.weight_range()
    for n in C.degrees_present():
        idx = C.indices_of_degree(n)
        amb = len(idx)
        Z = linalg.kernel(C.d_matrix(n))
        B = linalg.image(C.d_matrix(n - 1)) if C.indices_of_degree(n - 1) else \
            Subspace.zero(field, amb)
        fdims = {}
        for p in range(wmin, wmax + 2):
            ZF = Z.intersect(C.filtration_subspace(n, p))
            fdims[p] = (ZF + B).dim - B.dim
        for p in range(wmin, wmax + 1):
            gr = fdims[p] - fdims[p + 1]
            cell = top_cells.get((p, n - p))
            have = cell.dim if cell else 0
            if gr != have:
                raise InternalInvariantError(
                    f"E_infinity at ({p},{n - p}) has dim {have}, Gr H gives {gr}"
                )


def page_map(fmap: GradedMap, pages_src: SpectralSequencePages,
             pages_tgt: SpectralSequencePages, r):
    """Induced matrices E_r(f) per (p,q) for a filtered chain map f."""
    out = {}
    for (p, q), cell in pages_src.pages[r].items():
        tgt_cell = pages_tgt.pages[r].get((p, q))
        cols = []
        for rep in cell.reps:
            img = fmap.apply_vec(rep)
            coords = pages_tgt.class_in(r, p, q, img)
            if coords is None:
                raise InternalInvariantError("page map leaves Z_r")
            cols.append(coords)
        rows = tgt_cell.dim if tgt_cell else 0
        out[(p, q)] = Matrix.from_columns(fmap.source.field,
                                          [list(c) for c in cols], rows=rows)
    return out


# ---------------------------------------------------------------------------
# strict compatibility


def is_strictly_compatible(C: FilteredComplex):
    """d(F^p A) = F^p A ∩ d A for every p (checked per degree)."""
    field = C.field
    wmin, wmax = C.weight_range()
    for n in C.degrees_present():
        tgt = C.indices_of_degree(n + 1)
        if not tgt:
            continue
        amb = len(tgt)
        dmat = C.d_matrix(n)
        dA = linalg.image(dmat)
        for p in range(wmin, wmax + 1):
            img_vecs = [list(dmat.apply(list(row)))
                        for row in C.filtration_subspace(n, p).basis]
            dFp = Subspace(field, amb, img_vecs)
            if dFp != dA.intersect(C.filtration_subspace(n + 1, p)):
                return False
    return True


# ---------------------------------------------------------------------------
# decalage


class DecalageResult:
    def __init__(self, complex, to_old, from_old):
        self.complex = complex
        self.to_old = to_old      # GradedMap: new complex -> old complex
        self.from_old = from_old  # GradedMap: old complex -> new complex


def decalage(C: FilteredComplex):
    """Deligne's Dec F: weight p spanned by {x in F^{p+n} : d x in F^{p+n+1}}.

    Dec F is generally not aligned with the input basis, so each degree is
    re-based along canonical complements; the change of basis is returned.
    """
    field = C.field
    wmin, wmax = C.weight_range()
    new_labels, new_degrees, new_weights = [], [], []
    new_vectors = []  # (degree, dense row)
    for n in C.degrees_present():
        idx = C.indices_of_degree(n)
        amb = len(idx)
        p_hi = wmax - n + 1   # Dec F^{p_hi} = 0 in this degree
        p_lo = wmin - n - 1   # Dec F^{p_lo} is everything
        chain = {p_hi: Subspace.zero(field, amb)}
        for p in range(p_hi - 1, p_lo - 1, -1):
            S = _z_subspace(C, n, p + n, 1)
            if not S.contains(chain[p + 1]):
                raise InternalInvariantError("Dec filtration is not decreasing")
            chain[p] = S
        if chain[p_lo].dim != amb:
            raise InternalInvariantError("Dec filtration is not exhaustive")
        for p in range(p_hi - 1, p_lo - 1, -1):
            layer = complement(chain[p + 1], chain[p])
            for row in layer.basis:
                k = len(new_labels)
                new_labels.append(f"dec{k}")
                new_degrees.append(n)
                new_weights.append(p)
                new_vectors.append((n, row))
    to_old_cols = {k: C.from_dense(n, row) for k, (n, row) in enumerate(new_vectors)}
    # invert the change of basis per degree
    from_old_cols = {}
    ks_by_degree = {}
    for k, (n, row) in enumerate(new_vectors):
        ks_by_degree.setdefault(n, []).append(k)
    for n, ks in ks_by_degree.items():
        idx = C.indices_of_degree(n)
        amb = len(idx)
        U = Matrix.from_columns(field, [list(C.to_dense(n, to_old_cols[k]))
                                        for k in ks], rows=amb)
        Uinv = linalg.invert(U)
        for t, i in enumerate(idx):
            e = [field.one if s == t else field.zero for s in range(amb)]
            coords = Uinv.apply(e)
            col = {ks[s]: c for s, c in enumerate(coords) if c}
            if col:
                from_old_cols[i] = col
    new_d = {}
    for k, (n, row) in enumerate(new_vectors):
        dv = C.d_vec(to_old_cols[k])
        col = {}
        for i, c in dv.items():
            for k2, c2 in from_old_cols.get(i, {}).items():
                prev = col.get(k2, field.zero)
                col[k2] = prev + c * c2
        col = {k2: c for k2, c in col.items() if c}
        if col:
            new_d[k] = col
    newC = FilteredComplex(field, new_labels, new_degrees, new_weights, new_d)
    to_old = GradedMap(newC, C, 0, to_old_cols)
    from_old = GradedMap(C, newC, 0, from_old_cols)
    return DecalageResult(newC, to_old, from_old)


# ---------------------------------------------------------------------------
# mapping cones and filtered quasi-isomorphisms


def filtered_cone(fmap: GradedMap):
    """Filtered mapping cone C(f)^n = A^{n+1} ⊕ B^n, D(a,b) = (-da, -fa + db)."""
    A, B = fmap.source, fmap.target
    if fmap.shift != 0:
        raise ComplexError("cone needs a degree-0 map")
    if not fmap.is_chain_map():
        raise ComplexError("cone needs a chain map")
    if not fmap.is_filtration_compatible():
        raise ComplexError("cone needs a filtration-compatible map")
    field = A.field
    labels = [f"a:{lab}" for lab in A.labels] + [f"b:{lab}" for lab in B.labels]
    degrees = [n - 1 for n in A.degrees] + list(B.degrees)
    weights = list(A.weights) + list(B.weights)
    offs = A.dim
    d = {}
    for i in range(A.dim):
        col = {j: -c for j, c in A.d_of(i).items()}
        for j, c in fmap.apply_index(i).items():
            col[offs + j] = col.get(offs + j, field.zero) + (-c)
        col = {k: c for k, c in col.items() if c}
        if col:
            d[i] = col
    for i in range(B.dim):
        col = {offs + j: c for j, c in B.d_of(i).items()}
        if col:
            d[offs + i] = col
    return FilteredComplex(field, labels, degrees, weights, d)


def cohomology_dims(C: FilteredComplex):
    out = {}
    for n in C.degrees_present():
        z = linalg.kernel(C.d_matrix(n)).dim
        b = linalg.image(C.d_matrix(n - 1)).dim if C.indices_of_degree(n - 1) else 0
        if z - b:
            out[n] = z - b
    return out


def is_acyclic(C: FilteredComplex):
    return not cohomology_dims(C)


def _h_map_iso(fmap: GradedMap):
    """Does a chain map induce an isomorphism on all cohomologies?"""
    A, B = fmap.source, fmap.target
    field = A.field
    for n in sorted(set(A.degrees_present()) | set(B.degrees_present())):
        za = linalg.kernel(A.d_matrix(n))
        ba = linalg.image(A.d_matrix(n - 1)) if A.indices_of_degree(n - 1) else \
            Subspace.zero(field, len(A.indices_of_degree(n)))
        zb = linalg.kernel(B.d_matrix(n))
        bb = linalg.image(B.d_matrix(n - 1)) if B.indices_of_degree(n - 1) else \
            Subspace.zero(field, len(B.indices_of_degree(n)))
        if za.dim - ba.dim != zb.dim - bb.dim:
            return False
        if za.dim == ba.dim:
            continue
        ha = complement(ba, za)
        hb = complement(bb, zb)
        cols = []
        for row in ha.basis:
            img = fmap.apply_vec(A.from_dense(n, list(row)))
            dense = B.to_dense(n, img)
            den_rows = [list(r_) for r_ in bb.basis]
            rep_cols = [list(r_) for r_ in hb.basis]
            sol = linalg.coordinates_in(den_rows + rep_cols, list(dense), field)
            if sol is None:
                return False
            cols.append(sol[len(den_rows):])
        m = Matrix.from_columns(field, [list(c) for c in cols], rows=hb.dim)
        if linalg.rank(m) != ha.dim:
            return False
    return True


def is_filtered_quasi_iso(fmap: GradedMap, with_report=False):
    """Three equivalent tests, all evaluated; they must agree.

    (a) H(F^p f) iso for all p;  (b) the filtered cone is acyclic levelwise;
    (c) every Gr^p of the cone is acyclic.
    """
    A, B = fmap.source, fmap.target
    if fmap.shift != 0 or not fmap.is_chain_map():
        raise ComplexError("not a chain map")
    if not fmap.is_filtration_compatible():
        raise ComplexError("not filtration-compatible")
    lo = min(A.weight_range()[0], B.weight_range()[0])
    hi = max(A.weight_range()[1], B.weight_range()[1])
    verdict_a = True
    for p in range(lo, hi + 1):
        subA = A.subcomplex_of_weight(p)
        subB = B.subcomplex_of_weight(p)
        keepB = {j: t for t, j in enumerate(
            [j for j in range(B.dim) if B.weights[j] >= p])}
        cols = {}
        for t, i in enumerate([i for i in range(A.dim) if A.weights[i] >= p]):
            col = {keepB[j]: c for j, c in fmap.apply_index(i).items()}
            if col:
                cols[t] = col
        if not _h_map_iso(GradedMap(subA, subB, 0, cols)):
            verdict_a = False
            break
    cone = filtered_cone(fmap)
    verdict_b = all(is_acyclic(cone.subcomplex_of_weight(p))
                    for p in range(lo, hi + 1))
    verdict_c = all(is_acyclic(cone.graded_piece(p)) for p in range(lo, hi + 1))
    if not (verdict_a == verdict_b == verdict_c):
        raise InternalInvariantError(
            f"filtered quasi-iso tests disagree: {(verdict_a, verdict_b, verdict_c)}"
        )
    if with_report:
        return verdict_a, {"h_levelwise": verdict_a, "cone_acyclic": verdict_b,
                           "gr_cone_acyclic": verdict_c}
    return verdict_a


# ---------------------------------------------------------------------------
# filtered homotopy transfer (the weight-descending induction)


def filtered_transfer(C: FilteredComplex):
    """Filtered transfer diagram onto a model M with
    F^p M^n ≅ ⊕_{q>=p} E_1^{q,n-q}(C) and a weight-raising differential.

    Induction over weights p from the top down: the auxiliary complex
    Q_p = M_{p+1}[1] ⊕ F^p A with D(m, a) = (-dm, -g(m) + da) is transferred
    classically; its cohomology forms the weight-p layer V_p of the model,
    with d = pi_1 iota and g = pi_2 iota on it.  f and h extend over the
    weight-p basis via r(a) = (f tau a, a - h tau a), f~ = (rho - pi_1 k) r,
    h~ = pi_2 k r, where tau is the weight-raising part of d on Gr^p.
    """
    field = C.field
    if C.dim == 0:
        model = FilteredComplex(field, [], [], [], {})
        return model, TransferDiagram(
            C, model, GradedMap(C, model, 0, {}), GradedMap(model, C, 0, {}),
            GradedMap(C, C, -1, {}))
    wmin, wmax = C.weight_range()

    m_labels, m_degrees, m_weights = [], [], []
    m_d = {}       # model index -> sparse model vector
    g_cols = {}    # model index -> sparse A vector
    f_cols = {}    # A index -> sparse model vector
    h_cols = {}    # A index -> sparse A vector

    for p in range(wmax, wmin - 1, -1):
        fp_indices = [i for i in range(C.dim) if C.weights[i] >= p]
        old_model = len(m_labels)

        # Q_p = M_{p+1}[1] ⊕ F^p A
        q_labels = [f"m{m}" for m in range(old_model)] + \
            [f"a{i}" for i in fp_indices]
        q_degrees = [m_degrees[m] - 1 for m in range(old_model)] + \
            [C.degrees[i] for i in fp_indices]
        a_pos = {i: old_model + t for t, i in enumerate(fp_indices)}
        q_d = {}
        for m in range(old_model):
            col = {m2: -c for m2, c in m_d.get(m, {}).items()}
            for i, c in g_cols.get(m, {}).items():
                col[a_pos[i]] = col.get(a_pos[i], field.zero) + (-c)
            col = {k: c for k, c in col.items() if c}
            if col:
                q_d[m] = col
        for i in fp_indices:
            col = {a_pos[j]: c for j, c in C.d_of(i).items()}
            if col:
                q_d[a_pos[i]] = col
        Q = FilteredComplex(field, q_labels, q_degrees, [0] * len(q_labels), q_d)
        diagram = classical_transfer(Q, label_prefix=f"q{p}_",
                                     model_weight_from_reps=False)
        V = diagram.target
        rho, iota, kk = diagram.f, diagram.g, diagram.h

        new_index_of_v = {}
        for v in range(V.dim):
            mi = len(m_labels)
            new_index_of_v[v] = mi
            m_labels.append(f"e{p}.{V.degrees[v]}.{v}")
            m_degrees.append(V.degrees[v])
            m_weights.append(p)
            col_d, col_g = {}, {}
            for qi, c in iota.apply_index(v).items():
                if qi < old_model:
                    col_d[qi] = c
                else:
                    col_g[fp_indices[qi - old_model]] = c
            if col_d:
                m_d[mi] = col_d
            if col_g:
                g_cols[mi] = col_g

        for i in [i for i in range(C.dim) if C.weights[i] == p]:
            tau = {j: c for j, c in C.d_of(i).items() if C.weights[j] > p}
            f_tau, h_tau = {}, {}
            for j, c in tau.items():
                f_tau = vec_add(f_tau, vec_scale(c, f_cols.get(j, {})))
                h_tau = vec_add(h_tau, vec_scale(c, h_cols.get(j, {})))
            r_vec = dict(f_tau)  # model indices coincide with Q indices
            for j, c in vec_sub({i: field.one}, h_tau).items():
                r_vec[a_pos[j]] = r_vec.get(a_pos[j], field.zero) + c
            r_vec = {k: c for k, c in r_vec.items() if c}
            rho_r = rho.apply_vec(r_vec)
            k_r = kk.apply_vec(r_vec)
            f_new = {}
            for v, c in rho_r.items():
                f_new[new_index_of_v[v]] = c
            h_new = {}
            for qi, c in k_r.items():
                if qi < old_model:
                    f_new[qi] = f_new.get(qi, field.zero) - c
                else:
                    h_new[fp_indices[qi - old_model]] = c
            f_new = {k2: c for k2, c in f_new.items() if c}
            if f_new:
                f_cols[i] = f_new
            if h_new:
                h_cols[i] = h_new

    model = FilteredComplex(field, m_labels, m_degrees, m_weights, m_d)
    for m, col in model.d.items():
        for m2 in col:
            if model.weights[m2] <= model.weights[m]:
                raise InternalInvariantError("model differential does not raise weight")
    diagram = TransferDiagram(C, model,
                              GradedMap(C, model, 0, f_cols),
                              GradedMap(model, C, 0, g_cols),
                              GradedMap(C, C, -1, h_cols), filtered=True)
    diagram.validate()
    pages = spectral_sequence(C, 1)
    layer = {}
    for m in range(model.dim):
        key = (model.weights[m], model.degrees[m] - model.weights[m])
        layer[key] = layer.get(key, 0) + 1
    e1 = {pq: cell.dim for pq, cell in pages.pages[1].items()}
    if layer != e1:
        raise InternalInvariantError(f"model layers {layer} != E_1 dims {e1}")
    return model, diagram
