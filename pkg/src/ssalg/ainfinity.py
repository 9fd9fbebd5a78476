"""A-infinity structures: transfer kernels, bar-construction checkers,
filtered and E_r-minimal models.

Transferred operations follow the recursive kernel formulas

    p_s = sum_{k+l=s} (-1)^{k(l+1)} mu((h p_k) ⊗ (h p_l)),   h p_1 = id,
    q_s = -mu((h q_{s-1}) ⊗ id)
          + sum_{j<s} (-1)^{js+s-j^2} mu((gf)_j ⊗ (h q_{s-j})),   q_1 = id,

with (gf)_m = gf q_m + sum over compositions m = r_1+...+r_k (k >= 2) of
(-1)^{u(r)} (h q_k)((gf q_{r_1}) ⊗ ... ⊗ (gf q_{r_k})) and
u(r) = sum_{i<j} r_i (r_j + 1).  All signs are explicit; tensor products of
maps are evaluated without implicit Koszul signs (the convention the
published example values pin down).

Identity checking is independent of those formulas: a structure is encoded
as a coderivation on the reduced tensor coalgebra of the suspension, with
suspension and Koszul signs generated mechanically, and the coderivation is
required to square to zero arity by arity.
"""

from __future__ import annotations

from .complexes import (
    FilteredComplex,
    GradedMap,
    InternalInvariantError,
    TransferDiagram,
    vec_add,
    vec_scale,
    vec_sub,
)
from .multilinear import MultiMap, multi_compose, pair_compose
from .presentations import FilteredDGA


class AInfinityError(ValueError):
    pass


# ---------------------------------------------------------------------------
# structures and morphisms


class AInfinityStructure:
    """(basis, d, nu_s) with optional filtration/bigrading metadata.

    The underlying FilteredComplex carries the basis, the degrees, the
    filtration weights, and d = nu_1.  ``ops[s]`` for s >= 2 are MultiMaps
    of degree 2 - s.  ``bidegrees`` defaults to (weight, degree - weight).
    """

    def __init__(self, complex: FilteredComplex, ops, cap, bidegrees=None,
                 filtered=True, minimal_r=None):
        self.complex = complex
        self.ops = {s: m for s, m in ops.items() if m}
        self.cap = cap
        self.filtered = filtered
        self.minimal_r = minimal_r
        if bidegrees is None:
            bidegrees = [(complex.weights[i], complex.degrees[i] - complex.weights[i])
                         for i in range(complex.dim)]
        self.bidegrees = list(bidegrees)

    @property
    def field(self):
        return self.complex.field

    def op(self, s):
        if s == 1:
            from .multilinear import linear_multimap
            return linear_multimap(self.complex.d, degree=1)
        return self.ops.get(s, MultiMap(s, 2 - s))

    def nonzero_arities(self):
        out = [s for s, m in sorted(self.ops.items()) if m]
        if self.complex.d:
            out = [1] + out
        return out

    def describe_entry(self, s, t):
        labels = self.complex.labels
        return "(" + ",".join(labels[i] for i in t) + ")"


class AInfinityMorphism:
    """Components f_s: source^{⊗s} -> target of degree 1 - s."""

    def __init__(self, source: AInfinityStructure, target: AInfinityStructure,
                 components, cap):
        self.source = source
        self.target = target
        self.components = {s: m for s, m in components.items() if m}
        self.cap = cap

    def component(self, s):
        return self.components.get(s, MultiMap(s, 1 - s))


def dga_as_ainfinity(algebra: FilteredDGA, cap):
    """View an associative dg-algebra as an A-infinity structure (nu_{>=3} = 0)."""
    C = algebra.complex
    mu = MultiMap(2, 0)
    for (i, j), v in algebra.product.items():
        mu.add_entry((i, j), v)
    return AInfinityStructure(C, {2: mu}, cap)


# ---------------------------------------------------------------------------
# bar-construction identity checking


def _suspended_table(table: MultiMap, vdeg):
    """b_s = s ∘ nu_s ∘ (s^{-1})^{⊗s}: per-entry suspension sign
    (-1)^{sum_i (s-1-i) * vdeg(t_i)} (0-based positions)."""
    s = table.arity
    out = MultiMap(s, 1)
    for t, v in table.entries.items():
        e = sum((s - 1 - pos) * vdeg[i] for pos, i in enumerate(t))
        out.entries[t] = dict(v) if e % 2 == 0 else {k: -c for k, c in v.items()}
    return out


def _bar_tables(A: AInfinityStructure):
    vdeg = [n - 1 for n in A.complex.degrees]
    tables = {}
    d = A.complex.d
    if d:
        b1 = MultiMap(1, 1)
        for i, col in d.items():
            b1.entries[(i,)] = dict(col)
        tables[1] = b1
    for s, m in A.ops.items():
        if m:
            tables[s] = _suspended_table(m, vdeg)
    return tables, vdeg


def _slot_index(table: MultiMap, i):
    idx = {}
    for t, v in table.entries.items():
        idx.setdefault(t[i], []).append((t, v))
    return idx


def _splice(bout: MultiMap, bin_: MultiMap, i, vdeg):
    """bout ∘ (1^{⊗i} ⊗ bin ⊗ 1^{⊗k}) with the Koszul sign for moving the
    degree-1 map bin past the first i arguments."""
    n = bout.arity + bin_.arity - 1
    out = MultiMap(n, bout.degree + bin_.degree)
    idx = _slot_index(bout, i)
    for t, v in bin_.entries.items():
        for y, c in v.items():
            for (s_t, w) in idx.get(y, ()):
                pre = s_t[:i]
                e = sum(vdeg[x] for x in pre)
                coeff = c if e % 2 == 0 else -c
                out.add_entry(pre + t + s_t[i + 1:], vec_scale(coeff, w))
    return out


def check_stasheff(A: AInfinityStructure, cap=None, max_witnesses=5):
    """Encode (d, nu_s) as a coderivation on the reduced tensor coalgebra of
    the suspension and require it to square to zero up to the arity cap.

    Returns a report list; empty iff all identities hold.
    """
    cap = cap if cap is not None else A.cap
    tables, vdeg = _bar_tables(A)
    report = []
    for n in range(1, cap + 1):
        total = MultiMap(n, 2)
        for j in range(1, n + 1):
            bj = tables.get(j)
            if not bj:
                continue
            for i in range(0, n - j + 1):
                bout = tables.get(n - j + 1)
                if not bout:
                    continue
                total = total.plus(_splice(bout, bj, i, vdeg))
        if total:
            for t, v in sorted(total.entries.items()):
                report.append({
                    "arity": n,
                    "inputs": tuple(A.complex.labels[i] for i in t),
                    "defect": A.complex.render_vec(v),
                })
                if len(report) >= max_witnesses:
                    return report
    return report


def check_morphism(F: AInfinityMorphism, cap=None, max_witnesses=5):
    """Coalgebra-map commutation with the two codifferentials, arity by arity."""
    cap = cap if cap is not None else F.cap
    A, B = F.source, F.target
    a_tables, a_vdeg = _bar_tables(A)
    b_tables, b_vdeg = _bar_tables(B)
    # suspended morphism components have degree 0
    phi = {}
    for s in range(1, cap + 1):
        comp = F.component(s)
        if comp:
            phi[s] = _suspended_table(comp, a_vdeg)
    report = []
    for n in range(1, cap + 1):
        lhs = MultiMap(n, 1)
        for j in range(1, n + 1):
            bj = a_tables.get(j)
            if not bj:
                continue
            pout = phi.get(n - j + 1)
            if not pout:
                continue
            for i in range(0, n - j + 1):
                lhs = lhs.plus(_splice(pout, bj, i, a_vdeg))
        rhs = MultiMap(n, 1)
        for k in range(1, n + 1):
            bk = b_tables.get(k)
            if not bk:
                continue
            for comp in _compositions(n, k):
                parts = []
                ok = True
                for r in comp:
                    p = phi.get(r)
                    if not p:
                        ok = False
                        break
                    parts.append(p)
                if not ok:
                    continue
                rhs = rhs.plus(multi_compose(bk, parts))
        diff = lhs.plus(rhs.negated())
        if diff:
            for t, v in sorted(diff.entries.items()):
                report.append({
                    "arity": n,
                    "inputs": tuple(A.complex.labels[i] for i in t),
                    "defect": B.complex.render_vec(v),
                })
                if len(report) >= max_witnesses:
                    return report
    return report


def _compositions(n, k):
    """Ordered compositions of n into k positive parts."""
    if k == 1:
        yield (n,)
        return
    for first in range(1, n - k + 2):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def u_sign_exponent(parts):
    """u(r_1,...,r_k) = sum_{i<j} r_i (r_j + 1)."""
    e = 0
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            e += parts[i] * (parts[j] + 1)
    return e


# ---------------------------------------------------------------------------
# transfer kernels


class KernelCache:
    """Memoized p/q-kernels for a transfer diagram over a dg-algebra source.

    ``P[s]`` is p_s ∘ g^{⊗s} (a MultiMap over model tuples), ``K[s]`` is
    h ∘ P[s] with K[1] = g; ``Q[s]`` the q-kernels over the source, with
    HQ[s] = h ∘ Q[s] and the (gf)_m blocks memoized.
    """

    def __init__(self, diagram: TransferDiagram, algebra: FilteredDGA):
        if diagram.source is not algebra.complex:
            # allow equal-but-distinct complexes (same labels/degrees)
            if diagram.source.labels != algebra.complex.labels:
                raise AInfinityError("diagram source does not match the algebra")
        self.diagram = diagram
        self.algebra = algebra
        self.field = algebra.field
        self.mu = algebra.mul_basis
        self._P = {}
        self._K = {}
        self._Q = {}
        self._HQ = {}
        self._GF = {}
        self._gf_cols = None

    # ---- p-kernels --------------------------------------------------------

    def K(self, s):
        if s == 1:
            m = MultiMap(1, 0)
            for i, col in self.diagram.g.cols.items():
                m.entries[(i,)] = dict(col)
            return m
        if s not in self._K:
            self._K[s] = self.P(s).postcompose(self.diagram.h.cols, degree_shift=-1)
        return self._K[s]

    def P(self, s):
        """p_s ∘ g^{⊗s}; arity-s MultiMap from model tuples into the source."""
        if s < 2:
            raise AInfinityError("p-kernels start at arity 2")
        if s not in self._P:
            total = MultiMap(s, 2 - s)
            for k in range(1, s):
                l = s - k
                term = pair_compose(self.mu, self.K(k), self.K(l),
                                    degree=2 - s)
                if (k * (l + 1)) % 2:
                    term = term.negated()
                total = total.plus(term)
            self._P[s] = total
        return self._P[s]

    # ---- q-kernels ----------------------------------------------------------

    def Q(self, s):
        if s == 1:
            from .multilinear import identity_multimap
            return identity_multimap(self.algebra.complex.dim, self.field.one)
        if s not in self._Q:
            total = MultiMap(s, 1 - s)
            term = pair_compose(self.mu, self.HQ(s - 1), self.Q(1),
                                degree=1 - s).negated()
            total = total.plus(term)
            for j in range(1, s):
                term = pair_compose(self.mu, self.GF(j), self.HQ(s - j),
                                    degree=1 - s)
                if (j * s + s - j * j) % 2:
                    term = term.negated()
                total = total.plus(term)
            self._Q[s] = total
        return self._Q[s]

    def HQ(self, s):
        if s not in self._HQ:
            self._HQ[s] = self.Q(s).postcompose(self.diagram.h.cols,
                                                degree_shift=-1)
        return self._HQ[s]

    def gf_cols(self):
        if self._gf_cols is None:
            g, f = self.diagram.g, self.diagram.f
            cols = {}
            for i, col in f.cols.items():
                out = {}
                for m, c in col.items():
                    gc = g.cols.get(m)
                    if gc:
                        out = vec_add(out, vec_scale(c, gc))
                if out:
                    cols[i] = out
            self._gf_cols = cols
        return self._gf_cols

    def GF(self, m):
        """(gf)_m blocks of the q-kernel recursion."""
        if m not in self._GF:
            total = self.Q(m).postcompose(self.gf_cols())
            for k in range(2, m + 1):
                hk = self.HQ(k)
                if not hk:
                    continue
                for comp in _compositions(m, k):
                    parts = [self.GF(r) for r in comp]
                    if any(not p for p in parts):
                        continue
                    term = multi_compose(hk, parts)
                    if u_sign_exponent(comp) % 2:
                        term = term.negated()
                    total = total.plus(term)
            self._GF[m] = total
        return self._GF[m]


def transfer_ainfinity(diagram: TransferDiagram, algebra: FilteredDGA, cap,
                       check=True):
    """Transferred structure nu_s = f p_s g^{⊗s} on the diagram's target, with
    the infinity-morphisms F = (f, f q_s), G = (g, h p_s g^{⊗s}) and the
    homotopy blocks H_s = h q_s.

    Returns (B, F, G, H) with H a dict of MultiMaps (s >= 1).
    """
    cache = KernelCache(diagram, algebra)
    model = diagram.target
    f_cols = diagram.f.cols
    ops = {}
    for s in range(2, cap + 1):
        nu = cache.P(s).postcompose(f_cols)
        if nu:
            ops[s] = nu
    B = AInfinityStructure(model, ops, cap, filtered=diagram.filtered)
    A_inf = dga_as_ainfinity(algebra, cap)
    f_comp = {}
    g_comp = {}
    h_comp = {}
    for s in range(1, cap + 1):
        if s == 1:
            f_comp[1] = _cols_as_multimap(diagram.f.cols, 0)
            g_comp[1] = _cols_as_multimap(diagram.g.cols, 0)
            h_comp[1] = _cols_as_multimap(diagram.h.cols, -1)
        else:
            fc = cache.Q(s).postcompose(f_cols)
            if fc:
                f_comp[s] = fc
            gc = cache.K(s)
            if gc:
                g_comp[s] = gc
            hc = cache.HQ(s)
            if hc:
                h_comp[s] = hc
    F = AInfinityMorphism(A_inf, B, f_comp, cap)
    G = AInfinityMorphism(B, A_inf, g_comp, cap)
    if check:
        rep = check_stasheff(B)
        if rep:
            raise InternalInvariantError(f"transferred structure fails Stasheff: {rep[0]}")
        rep = check_morphism(F)
        if rep:
            raise InternalInvariantError(f"F fails the morphism identities: {rep[0]}")
        rep = check_morphism(G)
        if rep:
            raise InternalInvariantError(f"G fails the morphism identities: {rep[0]}")
        if diagram.filtered:
            rep = check_filtration_windows(B)
            if rep:
                raise InternalInvariantError(f"filtration window violated: {rep[0]}")
    return B, F, G, h_comp


def _cols_as_multimap(cols, degree):
    m = MultiMap(1, degree)
    for i, col in cols.items():
        m.entries[(i,)] = dict(col)
    return m


# ---------------------------------------------------------------------------
# window checks


def check_filtration_windows(A: AInfinityStructure, max_witnesses=5):
    """nu_s(F^{p_1} ⊗ ... ⊗ F^{p_s}) ⊆ F^{p_1+...+p_s}, checked entrywise."""
    C = A.complex
    report = []
    for s, m in A.ops.items():
        for t, v in m.entries.items():
            need = sum(C.weights[i] for i in t)
            for k in v:
                if C.weights[k] < need:
                    report.append({
                        "arity": s,
                        "inputs": tuple(C.labels[i] for i in t),
                        "weight": C.weights[k],
                        "needed": need,
                    })
                    if len(report) >= max_witnesses:
                        return report
    return report


def check_morphism_windows(F: AInfinityMorphism, er_r=None, max_witnesses=5):
    """Filtration windows for morphism components.

    Plain filtered variant (er_r None): f_s(F^{p_1}⊗...) ⊆ F^{sum p_i}.
    E_r-minimal variant: f_s lands in F^{sum p_i + (1-s) r}.
    """
    src = F.source
    tgtC = F.target.complex
    report = []
    for s, m in F.components.items():
        for t, v in m.entries.items():
            psum = sum(src.bidegrees[i][0] for i in t)
            need = psum if er_r is None else psum + (1 - s) * er_r
            for k in v:
                if tgtC.weights[k] < need:
                    report.append({
                        "arity": s,
                        "inputs": tuple(src.complex.labels[i] for i in t),
                        "weight": tgtC.weights[k],
                        "needed": need,
                    })
                    if len(report) >= max_witnesses:
                        return report
    return report


def check_er_windows(A: AInfinityStructure, r, max_witnesses=5):
    """Bidegree windows of an E_r-minimal structure.

    d(M^{p,q}) ⊆ ⊕_{k>=0} M^{p+r+k+1, q-r-k};
    nu_s(M^{p_1,q_1}⊗...) ⊆ ⊕_{k>=0} M^{P+(2-s)r+k, Q+(2-s)(1-r)-k}.
    """
    C = A.complex
    bid = A.bidegrees
    report = []
    for i, col in C.d.items():
        p, q = bid[i]
        for j in col:
            pj, qj = bid[j]
            k = pj - (p + r + 1)
            if k < 0 or qj != q - r - k:
                report.append({"arity": 1, "inputs": (C.labels[i],),
                               "target": (pj, qj)})
                if len(report) >= max_witnesses:
                    return report
    for s, m in A.ops.items():
        for t, v in m.entries.items():
            P = sum(bid[i][0] for i in t)
            Q = sum(bid[i][1] for i in t)
            base_p = P + (2 - s) * r
            base_q = Q + (2 - s) * (1 - r)
            for j in v:
                pj, qj = bid[j]
                k = pj - base_p
                if k < 0 or qj != base_q - k:
                    report.append({"arity": s,
                                   "inputs": tuple(C.labels[i] for i in t),
                                   "target": (pj, qj)})
                    if len(report) >= max_witnesses:
                        return report
    return report


# ---------------------------------------------------------------------------
# tree transfer for A-infinity sources


def tree_transfer(diagram: TransferDiagram, A: AInfinityStructure, cap,
                  check=True):
    """Transfer of an A-infinity structure along a transfer diagram.

    Realized as the planar-tree sum through the generalized kernel recursion
    p_s = sum over compositions s = r_1+...+r_k (k >= 2) of
    (-1)^{u(r)} nu_k((h p_{r_1}) ⊗ ... ⊗ (h p_{r_k})), h p_1 = id; the
    transferred operations are f ∘ p_s ∘ g^{⊗s}.  On dg-algebra sources this
    reduces exactly to the two-factor recursion.
    """
    rep = check_stasheff(A)
    if rep:
        raise AInfinityError(f"tree_transfer source fails Stasheff: {rep[0]}")
    K = {}

    def K_of(r):
        if r == 1:
            m = MultiMap(1, 0)
            for i, col in diagram.g.cols.items():
                m.entries[(i,)] = dict(col)
            return m
        return K[r]

    P = {}
    for s in range(2, cap + 1):
        total = MultiMap(s, 2 - s)
        for k in range(2, s + 1):
            nu_k = A.op(k)
            if not nu_k:
                continue
            for comp in _compositions(s, k):
                parts = [K_of(r) for r in comp]
                if any(not p for p in parts):
                    continue
                term = multi_compose(nu_k, parts)
                if u_sign_exponent(comp) % 2:
                    term = term.negated()
                total = total.plus(term)
        P[s] = total
        K[s] = total.postcompose(diagram.h.cols, degree_shift=-1)
    ops = {}
    for s in range(2, cap + 1):
        nu = P[s].postcompose(diagram.f.cols)
        if nu:
            ops[s] = nu
    out = AInfinityStructure(diagram.target, ops, cap, filtered=diagram.filtered)
    if check:
        rep = check_stasheff(out)
        if rep:
            raise InternalInvariantError(f"tree transfer fails Stasheff: {rep[0]}")
    return out
