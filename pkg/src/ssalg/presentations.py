"""Input language for free graded-commutative filtered dg-algebras on
odd-degree generators, and expansion to explicit basis/structure-constant data.

A presentation is a JSON document

    { "name": str, "field": "rational"|"gaussian_rational",
      "generators": [ {"name": str, "degree": int, "weight": int}, ... ],
      "differentials": { genname: expression, ... } }

with expressions following

    expr = ws term (("+"|"-") term)* ;
    term = ["-"] [coeff "*"] factor ("*" factor)* ;
    factor = genname | "(" expr ")" ;
    coeff = scalar-literal .

Odd generator degrees keep the expansion finite: the monomial basis is the
2^g square-free monomials in declaration order, with Koszul signs computed
from transposition counts.
"""

from __future__ import annotations

import json

from .complexes import FilteredComplex, vec_add, vec_scale
from .scalar import field_for, parse_scalar, ScalarError


class PresentationError(ValueError):
    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class Presentation:
    def __init__(self, name, field_tag, generators, differentials):
        self.name = name
        self.field_tag = field_tag
        self.generators = tuple((str(n), int(d), int(w)) for n, d, w in generators)
        self.differentials = dict(differentials)

    def __eq__(self, other):
        return (
            isinstance(other, Presentation)
            and self.name == other.name
            and self.field_tag == other.field_tag
            and self.generators == other.generators
            and self.differentials == other.differentials
        )

    def gen_names(self):
        return [g[0] for g in self.generators]


# ---------------------------------------------------------------------------
# expression parsing


class _ExprParser:
    def __init__(self, text, gen_index, field):
        self.text = text
        self.pos = 0
        self.gen_index = gen_index
        self.field = field

    def error(self, message):
        raise PresentationError(message, offset=self.pos)

    def ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self):
        value = self.expr()
        self.ws()
        if self.pos != len(self.text):
            self.error(f"unexpected input {self.text[self.pos:]!r}")
        return value

    def expr(self):
        self.ws()
        value = self.term()
        while True:
            self.ws()
            ch = self.peek()
            if ch == "+":
                self.pos += 1
                value = _combo_add(value, self.term())
            elif ch == "-":
                self.pos += 1
                value = _combo_add(value, _combo_scale(-self.field.one, self.term()))
            else:
                return value

    def term(self):
        self.ws()
        sign = self.field.one
        if self.peek() == "-":
            self.pos += 1
            sign = -self.field.one
            self.ws()
        coeff = self.field.one
        scalar = self.try_coefficient()
        if scalar is not None:
            coeff = scalar
        factors = [self.factor()]
        while True:
            self.ws()
            if self.peek() == "*":
                self.pos += 1
                factors.append(self.factor())
            else:
                break
        value = {(): sign * coeff}
        for f in factors:
            value = _combo_mul(value, f, self.gen_degrees)
        return value

    def try_coefficient(self):
        """A maximal scalar literal immediately followed by '*', else None."""
        self.ws()
        start = self.pos
        end = start
        best = None
        while end < len(self.text) and self.text[end] in "0123456789/+-i":
            end += 1
            chunk = self.text[start:end]
            try:
                parse_scalar(chunk, self.field.tag)
            except ScalarError:
                continue
            rest = end
            while rest < len(self.text) and self.text[rest].isspace():
                rest += 1
            if rest < len(self.text) and self.text[rest] == "*":
                best = (chunk, rest + 1)
        if best is None:
            return None
        chunk, new_pos = best
        self.pos = new_pos
        return parse_scalar(chunk, self.field.tag)

    def factor(self):
        self.ws()
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            value = self.expr()
            self.ws()
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return value
        start = self.pos
        if not (ch.isalpha() or ch == "_"):
            self.error("expected a generator or '('")
        while self.pos < len(self.text) and (
            self.text[self.pos].isalnum() or self.text[self.pos] == "_"
        ):
            self.pos += 1
        name = self.text[start:self.pos]
        if name not in self.gen_index:
            self.pos = start
            self.error(f"unknown generator {name!r}")
        return {(self.gen_index[name],): self.field.one}

    @property
    def gen_degrees(self):
        return self._gen_degrees

    @gen_degrees.setter
    def gen_degrees(self, value):
        self._gen_degrees = value


def _combo_add(a, b):
    out = dict(a)
    for m, c in b.items():
        x = out.get(m)
        x = c if x is None else x + c
        if x:
            out[m] = x
        else:
            out.pop(m, None)
    return out


def _combo_scale(c, a):
    if not c:
        return {}
    return {m: c * x for m, x in a.items()}


def merge_monomials(m1, m2):
    """Exterior product of two strictly increasing index tuples.

    Returns (sign, merged) with sign = parity of the shuffle, or (0, None)
    when an index repeats.  All generators have odd degree, so each
    transposition contributes one sign.
    """
    if not m1:
        return 1, m2
    if not m2:
        return 1, m1
    if set(m1) & set(m2):
        return 0, None
    merged = []
    i = j = 0
    inversions = 0
    while i < len(m1) and j < len(m2):
        if m1[i] < m2[j]:
            merged.append(m1[i])
            i += 1
        else:
            merged.append(m2[j])
            inversions += len(m1) - i
            j += 1
    merged.extend(m1[i:])
    merged.extend(m2[j:])
    return (-1) ** inversions, tuple(merged)


def _combo_mul(a, b, gen_degrees):
    out = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            sign, merged = merge_monomials(m1, m2)
            if sign == 0:
                continue
            c = c1 * c2
            if sign < 0:
                c = -c
            x = out.get(merged)
            x = c if x is None else x + c
            if x:
                out[merged] = x
            else:
                out.pop(merged, None)
    return out


def parse_expression(text, gen_index, field, gen_degrees=None):
    """Expression -> {monomial index tuple: coefficient}."""
    p = _ExprParser(text, gen_index, field)
    p.gen_degrees = gen_degrees or {}
    return p.parse()


# ---------------------------------------------------------------------------
# presentation documents


def parse_presentation(document):
    """Parse and validate a presentation from JSON bytes/str/dict."""
    if isinstance(document, (bytes, str)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as e:
            raise PresentationError(f"invalid JSON: {e.msg}", offset=e.pos)
    else:
        doc = document
    if not isinstance(doc, dict):
        raise PresentationError("document must be a JSON object")
    for key in ("name", "field", "generators"):
        if key not in doc:
            raise PresentationError(f"missing key {key!r}")
    name = doc["name"]
    field_tag = doc["field"]
    if field_tag not in ("rational", "gaussian_rational"):
        raise PresentationError(f"unknown field {field_tag!r}")
    field = field_for(field_tag)
    gens = []
    seen = set()
    for k, g in enumerate(doc["generators"]):
        if not isinstance(g, dict) or not {"name", "degree", "weight"} <= set(g):
            raise PresentationError(f"generator #{k} needs name/degree/weight")
        gname, gdeg, gw = g["name"], g["degree"], g["weight"]
        if not isinstance(gname, str) or not gname or gname == "i":
            raise PresentationError(f"bad generator name {gname!r}")
        if gname in seen:
            raise PresentationError(f"duplicate generator {gname!r}")
        seen.add(gname)
        if not isinstance(gdeg, int) or gdeg <= 0 or gdeg % 2 == 0:
            raise PresentationError(
                f"generator {gname!r} has degree {gdeg}; only odd positive degrees"
            )
        if not isinstance(gw, int):
            raise PresentationError(f"generator {gname!r} has non-integer weight")
        gens.append((gname, gdeg, gw))
    diffs = doc.get("differentials", {})
    if not isinstance(diffs, dict):
        raise PresentationError("differentials must be an object")
    gen_index = {g[0]: k for k, g in enumerate(gens)}
    for gname, expr in diffs.items():
        if gname not in gen_index:
            raise PresentationError(f"differential for unknown generator {gname!r}")
        if not isinstance(expr, str):
            raise PresentationError(f"differential of {gname!r} must be a string")
        parse_expression(expr, gen_index, field)  # syntax check with offsets
    pres = Presentation(name, field_tag, gens, diffs)
    return pres


def render_presentation(p: Presentation):
    doc = {
        "name": p.name,
        "field": p.field_tag,
        "generators": [
            {"name": n, "degree": d, "weight": w} for (n, d, w) in p.generators
        ],
        "differentials": dict(p.differentials),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# expansion to a filtered dg-algebra


class FilteredDGA:
    """A FilteredComplex plus an associative filtration-compatible product."""

    def __init__(self, complex: FilteredComplex, product, unit_index,
                 commutative=True, validate=True):
        self.complex = complex
        self.product = product  # (i, j) -> sparse vector; missing means zero
        self.unit_index = unit_index
        self.commutative = commutative
        if validate:
            self.validate()

    @property
    def field(self):
        return self.complex.field

    def mul_basis(self, i, j):
        return self.product.get((i, j), {})

    def mul_vec(self, u, v):
        out = {}
        for i, ci in u.items():
            for j, cj in v.items():
                entry = self.product.get((i, j))
                if entry:
                    out = vec_add(out, vec_scale(ci * cj, entry))
        return out

    def validate(self):
        C = self.complex
        field = self.field
        n = C.dim
        if C.degrees[self.unit_index] != 0:
            raise PresentationError("unit must have degree 0")
        for i in range(n):
            if not _vec_equal(self.mul_basis(self.unit_index, i), {i: field.one}):
                raise PresentationError(f"unit fails on the left at {C.labels[i]}")
            if not _vec_equal(self.mul_basis(i, self.unit_index), {i: field.one}):
                raise PresentationError(f"unit fails on the right at {C.labels[i]}")
        # degree/weight behaviour of the product
        for (i, j), vec in self.product.items():
            for k, c in vec.items():
                if C.degrees[k] != C.degrees[i] + C.degrees[j]:
                    raise PresentationError("product is not degree-additive")
                if C.weights[k] < C.weights[i] + C.weights[j]:
                    raise PresentationError(
                        f"product drops below F^{{p+q}} at "
                        f"{C.labels[i]}*{C.labels[j]}"
                    )
        # Leibniz
        for i in range(n):
            for j in range(n):
                lhs = C.d_vec(self.mul_basis(i, j))
                rhs = self.mul_vec(C.d_of(i), {j: field.one})
                sgn = -field.one if C.degrees[i] % 2 else field.one
                rhs = vec_add(rhs, vec_scale(sgn, self.mul_vec({i: field.one},
                                                               C.d_of(j))))
                if not _vec_equal(lhs, rhs):
                    raise PresentationError(
                        f"Leibniz fails on {C.labels[i]}*{C.labels[j]}"
                    )
        # associativity
        for i in range(n):
            for j in range(n):
                ij = self.mul_basis(i, j)
                for k in range(n):
                    lhs = self.mul_vec(ij, {k: field.one})
                    rhs = self.mul_vec({i: field.one}, self.mul_basis(j, k))
                    if not _vec_equal(lhs, rhs):
                        raise PresentationError(
                            f"associativity fails on "
                            f"{C.labels[i]},{C.labels[j]},{C.labels[k]}"
                        )
        if self.commutative:
            for i in range(n):
                for j in range(n):
                    lhs = self.mul_basis(i, j)
                    sgn = (-1) ** (C.degrees[i] * C.degrees[j])
                    rhs = self.mul_basis(j, i)
                    if sgn < 0:
                        rhs = vec_scale(-field.one, rhs)
                    if not _vec_equal(lhs, rhs):
                        raise PresentationError(
                            f"graded commutativity fails on "
                            f"{C.labels[i]},{C.labels[j]}"
                        )


def _vec_equal(u, v):
    if len(u) != len(v):
        return False
    for k, c in u.items():
        if v.get(k) != c:
            return False
    return True


def monomial_label(mono, gen_names):
    if not mono:
        return "1"
    return "*".join(gen_names[i] for i in mono)


def expand(p: Presentation):
    """All square-free monomials, Leibniz differential, Koszul-signed product."""
    field = field_for(p.field_tag)
    gens = p.generators
    g = len(gens)
    gen_names = [x[0] for x in gens]
    gen_index = {n: k for k, n in enumerate(gen_names)}
    # monomials ordered by (degree, index tuple)
    monos = []
    for mask in range(1 << g):
        mono = tuple(i for i in range(g) if mask & (1 << i))
        monos.append(mono)
    monos.sort(key=lambda m: (sum(gens[i][1] for i in m), m))
    index_of = {m: k for k, m in enumerate(monos)}
    labels = [monomial_label(m, gen_names) for m in monos]
    degrees = [sum(gens[i][1] for i in m) for m in monos]
    weights = [sum(gens[i][2] for i in m) for m in monos]

    # generator differentials as monomial combinations
    gen_d = {}
    for gname, expr in p.differentials.items():
        k = gen_index[gname]
        combo = parse_expression(expr, gen_index, field)
        for m, c in combo.items():
            mdeg = sum(gens[i][1] for i in m)
            if mdeg != gens[k][1] + 1:
                raise PresentationError(
                    f"d({gname}) has a term of degree {mdeg}, expected {gens[k][1] + 1}"
                )
            mw = sum(gens[i][2] for i in m)
            if mw < gens[k][2]:
                raise PresentationError(
                    f"d({gname}) has a term of weight {mw} below the generator's "
                    f"weight {gens[k][2]}"
                )
            if () in combo:
                raise PresentationError(f"d({gname}) contains a scalar term")
        gen_d[k] = combo

    def d_monomial(mono):
        """Leibniz extension; generators all have odd degree."""
        out = {}
        for pos, i in enumerate(mono):
            if i not in gen_d:
                continue
            rest = mono[:pos] + mono[pos + 1:]
            # moving d past the first `pos` odd generators
            sign = (-1) ** sum(gens[j][1] for j in mono[:pos])
            for m, c in gen_d[i].items():
                s2, merged = merge_monomials(m, rest)
                if s2 == 0:
                    continue
                coeff = c if sign * s2 > 0 else -c
                x = out.get(merged)
                x = coeff if x is None else x + coeff
                if x:
                    out[merged] = x
                else:
                    out.pop(merged, None)
        return out

    d = {}
    for k, m in enumerate(monos):
        combo = d_monomial(m)
        col = {index_of[mm]: c for mm, c in combo.items() if c}
        if col:
            d[k] = col
    try:
        complex = FilteredComplex(field, labels, degrees, weights, d)
    except Exception as e:
        # name a witness monomial for d^2 failures
        for k, m in enumerate(monos):
            dd = {}
            for mm, c in d_monomial(m).items():
                for mmm, c2 in d_monomial(mm).items():
                    x = dd.get(mmm)
                    x = c * c2 if x is None else x + c * c2
                    if x:
                        dd[mmm] = x
                    else:
                        dd.pop(mmm, None)
            if dd:
                raise PresentationError(
                    f"d*d != 0, witness monomial {labels[k]}"
                ) from e
        raise

    product = {}
    for k1, m1 in enumerate(monos):
        for k2, m2 in enumerate(monos):
            sign, merged = merge_monomials(m1, m2)
            if sign == 0:
                continue
            c = field.one if sign > 0 else -field.one
            product[(k1, k2)] = {index_of[merged]: c}
    return FilteredDGA(complex, product, index_of[()])
