"""Sparse multilinear maps on graded bases.

A MultiMap of arity s stores structure constants as a dict from s-tuples of
basis indices to sparse output vectors.  The fixtures are extremely sparse
(exterior monomial bases), so every kernel construction below composes
supports instead of iterating over full tensor powers.

Evaluation of a tensor product of maps on graded arguments carries no
implicit signs here; whatever signs a formula needs are supplied explicitly
by the caller via the ``sign`` hooks.  The bar-construction checker in
``ainfinity`` generates all suspension and Koszul signs mechanically.
"""

from __future__ import annotations

from .complexes import vec_add, vec_scale


class MultiMap:
    """Arity-s multilinear map given by sparse structure constants."""

    __slots__ = ("arity", "degree", "entries")

    def __init__(self, arity, degree, entries=None):
        self.arity = arity
        self.degree = degree
        self.entries = {}
        if entries:
            for t, v in entries.items():
                v = {k: c for k, c in v.items() if c}
                if v:
                    self.entries[t] = v

    def __bool__(self):
        return bool(self.entries)

    def value(self, t):
        return self.entries.get(tuple(t), {})

    def add_entry(self, t, vec):
        if not vec:
            return
        cur = self.entries.get(t)
        out = vec_add(cur, vec) if cur is not None else \
            {k: c for k, c in vec.items() if c}
        if out:
            self.entries[t] = out
        else:
            self.entries.pop(t, None)

    def plus(self, other):
        if self.arity != other.arity:
            raise ValueError("arity mismatch")
        out = MultiMap(self.arity, self.degree)
        for t, v in self.entries.items():
            out.add_entry(t, v)
        for t, v in other.entries.items():
            out.add_entry(t, v)
        return out

    def scaled(self, c):
        out = MultiMap(self.arity, self.degree)
        if not c:
            return out
        for t, v in self.entries.items():
            out.add_entry(t, vec_scale(c, v))
        return out

    def negated(self):
        out = MultiMap(self.arity, self.degree)
        for t, v in self.entries.items():
            out.entries[t] = {k: -c for k, c in v.items()}
        return out

    def postcompose(self, cols, degree_shift=0):
        """Apply a linear map (sparse columns index -> vec) to every output."""
        out = MultiMap(self.arity, self.degree + degree_shift)
        for t, v in self.entries.items():
            img = {}
            for k, c in v.items():
                col = cols.get(k)
                if col:
                    img = vec_add(img, vec_scale(c, col))
            out.add_entry(t, img)
        return out

    def apply(self, vectors):
        """Evaluate on a tuple of sparse vectors (full multilinear expansion)."""
        if len(vectors) != self.arity:
            raise ValueError("arity mismatch")
        out = {}

        def rec(i, prefix, coeff):
            nonlocal out
            if i == len(vectors):
                v = self.entries.get(prefix)
                if v:
                    out = vec_add(out, vec_scale(coeff, v)) if coeff is not None \
                        else vec_add(out, v)
                return
            for k, c in vectors[i].items():
                rec(i + 1, prefix + (k,), c if coeff is None else coeff * c)

        rec(0, (), None)
        return out


def linear_multimap(cols, degree=0):
    """Wrap sparse columns (index -> vec) as an arity-1 MultiMap."""
    m = MultiMap(1, degree)
    for i, v in cols.items():
        m.add_entry((i,), v)
    return m


def identity_multimap(dim, one):
    m = MultiMap(1, 0)
    for i in range(dim):
        m.entries[(i,)] = {i: one}
    return m


def pair_compose(mu, left: MultiMap, right: MultiMap, degree=None, sign=None):
    """mu((left)⊗(right)) as a MultiMap of arity left.arity + right.arity.

    ``mu`` maps basis index pairs (i, j) to sparse vectors.  ``sign``, when
    given, is called as sign(left_tuple, right_tuple) and returns +1/-1.
    """
    if degree is None:
        degree = left.degree + right.degree
    out = MultiMap(left.arity + right.arity, degree)
    for t1, v1 in left.entries.items():
        for t2, v2 in right.entries.items():
            acc = {}
            for y1, c1 in v1.items():
                for y2, c2 in v2.items():
                    base = mu(y1, y2)
                    if base:
                        acc = vec_add(acc, vec_scale(c1 * c2, base))
            if not acc:
                continue
            if sign is not None and sign(t1, t2) < 0:
                acc = {k: -c for k, c in acc.items()}
            out.add_entry(t1 + t2, acc)
    return out


def multi_compose(outer: MultiMap, parts, sign=None):
    """outer∘(parts[0] ⊗ ... ⊗ parts[k-1]) with an optional per-combination sign.

    ``sign``, when given, receives the tuple of input tuples and returns +1/-1.
    """
    if outer.arity != len(parts):
        raise ValueError("arity mismatch")
    total_arity = sum(p.arity for p in parts)
    total_degree = outer.degree + sum(p.degree for p in parts)
    out = MultiMap(total_arity, total_degree)
    part_entries = [list(p.entries.items()) for p in parts]
    if any(not pe for pe in part_entries):
        return out

    def rec(slot, keys, mids, coeff):
        if slot == len(parts):
            base = outer.entries.get(tuple(mids))
            if base is None:
                return
            c = coeff
            if sign is not None and sign(tuple(keys)) < 0:
                c = -c
            flat = tuple(x for t in keys for x in t)
            out.add_entry(flat, vec_scale(c, base))
            return
        for t, v in part_entries[slot]:
            for y, c in v.items():
                rec(slot + 1, keys + [t], mids + [y],
                    c if coeff is None else coeff * c)

    # seed coeff with the field's one lazily: use None then multiply
    def rec0(slot, keys, mids, coeff):
        rec(slot, keys, mids, coeff)

    # run with an explicit initial coefficient from the first entries' field
    first_scalar = next(iter(next(iter(part_entries[0]))[1].values()))
    one = first_scalar / first_scalar
    rec(0, [], [], one)
    return out
