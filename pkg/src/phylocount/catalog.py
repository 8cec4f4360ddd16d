"""Skeleton-term catalogs: parsing, evaluation, assembly, standard forms.

Catalogs are data files (one per reticulation count and stratum) holding
the individual skeleton contributions in prefix notation over the block
constructors of :mod:`phylocount.blocks`.  Keeping them as reviewable text
records is deliberate: each record carries the derivation note, the
transcribed prefactor, and, where the brute-force oracle contradicted the
transcription, an explicit adjudicated override with a justification
string.  Nothing in the evaluator knows about specific skeleton families.

Record grammar (one term)::

    term <id>
    prefactor <rational>
    [adjudicated <rational> "<justification>"]
    [multiplier <int>]              # leaf-symmetry catalogs only
    markers <name>:<cap> ...        # may be empty
    deriv <name> ...                # multiset; may be empty
    expr <prefix expression>
    [subtract
     prefactor <rational>
     deriv <name> ...
     expr <prefix expression>]*
    end

The value of a term is  prefactor * D[expr]  minus  sum of
prefactor_i * D_i[expr_i]  over its subtract blocks, where D[.] denotes
the mixed derivative in the listed markers, taken at all markers zero.
Subtract blocks inherit the term's marker declaration and may carry
negative prefactors (a subtracted subtraction).

Expression nodes::

    z^<int>                               monomial factor
    (S <name>...)                         marker sum (possibly empty)
    (M <sum>)                             unary-binary tree block
    (Mt <name> <sum>)                     root-shielded tree block
    (P <sum> <sum> <sum>)                 path block (y, ytilde, yhat)
    (Pstar <sum> <sum> <sum>)             nonempty path block
    (Qinv <int> <sum>)                    1/(1 - z M)^power
    (AF (wpoly <c0> <c1> ...) (wpoly ...) <halves>)
                                          closed form z*(a(z^2) -
                                          b(z^2)*s)/(1-2z^2)^(halves/2)
    (* <expr> <expr> ...)                 product
    (^ <expr> <int>)                      power
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

from . import blocks
from .algebra import AF_ONE, AF_S2, AlgFun, MarkerJet, Poly, SeriesZ

__all__ = [
    "Catalog",
    "CatalogError",
    "SkeletonTerm",
    "StandardForm",
    "assemble",
    "evaluate_term",
    "leaf_counts",
    "load_catalog",
    "normalize_to_standard_form",
    "vertex_count",
]

STRATA = ("no-mult", "mult")


class CatalogError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubTerm:
    prefactor: Fraction
    deriv: tuple
    expr: tuple


@dataclass(frozen=True)
class SkeletonTerm:
    id: str
    prefactor: Fraction
    markers: tuple  # ((name, cap), ...)
    deriv: tuple  # multiset of marker names
    expr: tuple
    subtract: tuple = ()
    adjudicated_weight: Fraction | None = None
    adjudication_note: str = ""
    multiplier: int = 1  # leaf-symmetry catalogs: 2 or 4
    note: str = ""

    @property
    def effective_prefactor(self) -> Fraction:
        return self.adjudicated_weight if self.adjudicated_weight is not None else self.prefactor


@dataclass(frozen=True)
class Catalog:
    k: int
    stratum: str
    normalizer: Fraction
    terms: tuple

    def term(self, term_id: str) -> SkeletonTerm:
        for t in self.terms:
            if t.id == term_id:
                return t
        raise KeyError(term_id)


@dataclass(frozen=True)
class StandardForm:
    """G = (a(z) - b(z) * s) / (1 - 2 z^2)^(2k - 1/2), verified on build."""

    k: int
    a: Poly
    b: Poly

    def to_algfun(self) -> AlgFun:
        # (a - b s)/D^(2k-1/2) = (-b D + a s)/D^(2k), using s^2 = D
        d = Poly([1, 0, -2])
        return AlgFun.make(-(self.b * d), self.a, d ** (2 * self.k))

    def tilde_polys(self):
        """(a~, b~) with a(z) = z * a~(z^2), the compressed convention."""
        az = self.a
        bz = self.b
        if az.coeffs and az.coeffs[0] != 0 or bz.coeffs and bz.coeffs[0] != 0:
            raise CatalogError("standard form does not have the odd z*f(z^2) shape")
        strip = lambda p: Poly(p.coeffs[1:]) if p.coeffs else p
        return strip(az).even_part_compressed(), strip(bz).even_part_compressed()


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _tokenize(text: str):
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _parse_sexpr(tokens, pos=0):
    tok = tokens[pos]
    if tok == "(":
        out = []
        pos += 1
        while tokens[pos] != ")":
            node, pos = _parse_sexpr(tokens, pos)
            out.append(node)
        return tuple(out), pos + 1
    if tok == ")":
        raise CatalogError("unbalanced parentheses")
    return tok, pos + 1


def parse_expression(text: str):
    tokens = _tokenize(text)
    node, pos = _parse_sexpr(tokens, 0)
    if pos != len(tokens):
        raise CatalogError(f"trailing tokens in expression: {text!r}")
    return node


def _validate_expr(node, declared: set, term_id: str):
    if isinstance(node, str):
        if node.startswith("z^"):
            int(node[2:])
            return
        raise CatalogError(f"{term_id}: bare token {node!r}")
    head = node[0]
    if head == "S":
        for name in node[1:]:
            if name not in declared:
                raise CatalogError(f"{term_id}: undeclared marker {name!r}")
    elif head == "M":
        _validate_expr(node[1], declared, term_id)
    elif head == "Mt":
        if node[1] not in declared:
            raise CatalogError(f"{term_id}: undeclared marker {node[1]!r}")
        _validate_expr(node[2], declared, term_id)
    elif head in ("P", "Pstar"):
        for sub in node[1:4]:
            _validate_expr(sub, declared, term_id)
    elif head == "Qinv":
        if int(node[1]) < 1:
            raise CatalogError(f"{term_id}: Qinv power must be positive")
        _validate_expr(node[2], declared, term_id)
    elif head == "AF":
        if node[1][0] != "wpoly" or node[2][0] != "wpoly":
            raise CatalogError(f"{term_id}: AF expects two wpoly nodes")
        int(node[3])
    elif head == "*":
        for sub in node[1:]:
            _validate_expr(sub, declared, term_id)
    elif head == "^":
        _validate_expr(node[1], declared, term_id)
        int(node[2])
    else:
        raise CatalogError(f"{term_id}: unknown constructor {head!r}")


def load_catalog_text(text: str, source="<string>") -> Catalog:
    header = None
    terms = []
    lines = text.splitlines()
    i = 0
    pending_note = []

    def fail(msg, ln):
        raise CatalogError(f"{source}:{ln + 1}: {msg}")

    while i < len(lines):
        line = lines[i].strip()
        if not line:
            i += 1
            continue
        if line.startswith("#"):
            pending_note.append(line.lstrip("# "))
            i += 1
            continue
        if line.startswith("catalog "):
            fields = dict(part.split("=", 1) for part in line[len("catalog "):].split())
            header = (int(fields["k"]), fields["stratum"], Fraction(fields["normalizer"]))
            i += 1
            continue
        if line.startswith("term "):
            if header is None:
                fail("term before catalog header", i)
            term_id = line[len("term "):].strip()
            fields = {"subtract": []}
            note = "\n".join(pending_note)
            pending_note = []
            i += 1
            current = fields
            while i < len(lines):
                ln = lines[i].strip()
                i += 1
                if not ln or ln.startswith("#"):
                    continue
                if ln == "end":
                    break
                if ln == "subtract":
                    current = {}
                    fields["subtract"].append(current)
                    continue
                key, _, rest = ln.partition(" ")
                if key == "prefactor":
                    current["prefactor"] = Fraction(rest.strip())
                elif key == "adjudicated":
                    weight, _, justification = rest.strip().partition(" ")
                    current["adjudicated"] = Fraction(weight)
                    current["adjudication_note"] = justification.strip().strip('"')
                elif key == "multiplier":
                    current["multiplier"] = int(rest)
                elif key == "markers":
                    pairs = []
                    for item in rest.split():
                        name, _, cap = item.partition(":")
                        pairs.append((name, int(cap)))
                    current["markers"] = tuple(pairs)
                elif key == "deriv":
                    current["deriv"] = tuple(rest.split())
                elif key == "expr":
                    current["expr"] = parse_expression(rest)
                else:
                    fail(f"unknown field {key!r} in term {term_id}", i - 1)
            else:
                fail(f"term {term_id} not closed with 'end'", i - 1)
            markers = fields.get("markers", ())
            declared = {n for n, _ in markers}
            caps = dict(markers)
            subs = []
            for sub in fields["subtract"]:
                subs.append(
                    SubTerm(
                        prefactor=sub.get("prefactor", Fraction(1)),
                        deriv=tuple(sub.get("deriv", ())),
                        expr=sub["expr"],
                    )
                )
            term = SkeletonTerm(
                id=term_id,
                prefactor=fields.get("prefactor", Fraction(1)),
                markers=markers,
                deriv=tuple(fields.get("deriv", ())),
                expr=fields["expr"],
                subtract=tuple(subs),
                adjudicated_weight=fields.get("adjudicated"),
                adjudication_note=fields.get("adjudication_note", ""),
                multiplier=fields.get("multiplier", 1),
                note=note,
            )
            _validate_term(term, declared, caps)
            terms.append(term)
            continue
        fail(f"unexpected line {line!r}", i)
    if header is None:
        raise CatalogError(f"{source}: missing catalog header")
    ids = [t.id for t in terms]
    if len(ids) != len(set(ids)):
        raise CatalogError(f"{source}: duplicate term ids")
    return Catalog(k=header[0], stratum=header[1], normalizer=header[2], terms=tuple(terms))


def _validate_term(term: SkeletonTerm, declared: set, caps: dict):
    from collections import Counter

    for deriv in (term.deriv, *(s.deriv for s in term.subtract)):
        counts = Counter(deriv)
        for name, mult in counts.items():
            if name not in declared:
                raise CatalogError(f"{term.id}: derivative in undeclared marker {name!r}")
            if mult > caps[name]:
                raise CatalogError(f"{term.id}: derivative order {mult} exceeds cap of {name!r}")
    _validate_expr(term.expr, declared, term.id)
    for sub in term.subtract:
        _validate_expr(sub.expr, declared, term.id)
    if term.multiplier not in (1, 2, 4):
        raise CatalogError(f"{term.id}: symmetry multiplier must be 1, 2 or 4")


# ---------------------------------------------------------------------------
# Catalog file location
# ---------------------------------------------------------------------------

_FILES = {
    (1, "no-mult"): "k1_nomult.cat",
    (1, "mult"): "k1_mult.cat",
    (2, "no-mult"): "k2_nomult.cat",
    (2, "mult"): "k2_mult.cat",
    (3, "no-mult"): "k3_nomult.cat",
    (3, "mult"): "k3_mult.cat",
    (2, "ddot-no-mult"): "k2_leafsym_nomult.cat",
    (3, "ddot-no-mult"): "k3_leafsym_nomult.cat",
    (3, "ddot-mult"): "k3_leafsym_mult.cat",
}

ENV_CATALOG_DIR = "PHYLOCOUNT_CATALOG_DIR"
_CATALOG_CACHE: dict = {}


def load_catalog(k: int, stratum: str) -> Catalog:
    key = (k, stratum)
    if key in _CATALOG_CACHE:
        return _CATALOG_CACHE[key]
    if key not in _FILES:
        raise CatalogError(f"no catalog for k={k}, stratum={stratum!r}")
    name = _FILES[key]
    override = os.environ.get(ENV_CATALOG_DIR)
    if override:
        path = os.path.join(override, name)
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        cat = load_catalog_text(text, source=path)
    else:
        text = resources.files(__package__).joinpath("catalogs", name).read_text("utf-8")
        cat = load_catalog_text(text, source=name)
    if (cat.k, cat.stratum) != key:
        raise CatalogError(f"{name}: header says {(cat.k, cat.stratum)}, expected {key}")
    _CATALOG_CACHE[key] = cat
    return cat


def has_leafsym_catalog(k: int, stratum: str) -> bool:
    return (k, f"ddot-{stratum.replace('-', '')}".replace("nomult", "no-mult")) in _FILES


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _sum_names(node):
    if node[0] != "S":
        raise CatalogError(f"expected marker sum, got {node!r}")
    return list(node[1:])


def _eval_expr(node, space) -> MarkerJet:
    if isinstance(node, str):
        if node.startswith("z^"):
            return MarkerJet.constant(space, AlgFun.z_power(int(node[2:])))
        raise CatalogError(f"bare token {node!r}")
    head = node[0]
    if head == "M":
        return blocks.motzkin_M(space, _sum_names(node[1]))
    if head == "Mt":
        return blocks.motzkin_Mtilde(space, node[1], _sum_names(node[2]))
    if head == "P":
        return blocks.path_P(space, *(_sum_names(s) for s in node[1:4]))
    if head == "Pstar":
        return blocks.path_Pstar(space, *(_sum_names(s) for s in node[1:4]))
    if head == "Qinv":
        return blocks.quasi_inverse(space, int(node[1]), _sum_names(node[2]))
    if head == "AF":
        return MarkerJet.constant(space, _closed_form(node))
    if head == "*":
        out = MarkerJet.constant(space, AF_ONE)
        for sub in node[1:]:
            out = out * _eval_expr(sub, space)
        return out
    if head == "^":
        return _eval_expr(node[1], space) ** int(node[2])
    raise CatalogError(f"unknown constructor {head!r}")


def _closed_form(node) -> AlgFun:
    a_w = Poly([Fraction(c) for c in node[1][1:]])
    b_w = Poly([Fraction(c) for c in node[2][1:]])
    halves = int(node[3])
    if halves % 2 == 0 or halves < 1:
        raise CatalogError("AF exponent must be an odd number of halves")
    # z (a(z^2) - b(z^2) s) / (1-2z^2)^(halves/2); the half power is s/(1-2z^2)
    d = Poly([1, 0, -2])
    zpoly = Poly([0, 1])
    power = (halves + 1) // 2
    num_p = -(b_w.expand_w_to_z2() * zpoly) * d
    num_q = a_w.expand_w_to_z2() * zpoly
    return AlgFun.make(num_p, num_q, d ** power)


def evaluate_term(term: SkeletonTerm) -> AlgFun:
    """Exact contribution of one skeleton term."""
    space = term.markers
    jet = _eval_expr(term.expr, space)
    value = jet.extract_names(term.deriv).scale(term.effective_prefactor)
    for sub in term.subtract:
        sub_jet = _eval_expr(sub.expr, space)
        value = value - sub_jet.extract_names(sub.deriv).scale(sub.prefactor)
    return value


_ASSEMBLE_CACHE: dict = {}


def assemble(k: int, stratum: str) -> AlgFun:
    """Weighted catalog sum for G_k restricted to a stratum ('all' sums both)."""
    if stratum == "all":
        return assemble(k, "no-mult") + assemble(k, "mult")
    key = (k, stratum)
    if key in _ASSEMBLE_CACHE:
        return _ASSEMBLE_CACHE[key]
    cat = load_catalog(k, stratum)
    total = AlgFun.from_frac(0)
    for term in cat.terms:
        total = total + evaluate_term(term)
    total = total.scale(cat.normalizer)
    _ASSEMBLE_CACHE[key] = total
    return total


def vertex_count(k: int, n: int, stratum: str = "all") -> int:
    """n! [z^n] of the assembled generating function."""
    if n < 0:
        raise ValueError("negative n")
    coeff = assemble(k, stratum).series(n)[n]
    count = coeff * math.factorial(n)
    if count.denominator != 1:
        raise CatalogError(f"non-integer count at k={k}, n={n}, {stratum}")
    return int(count)


# ---------------------------------------------------------------------------
# Standard form
# ---------------------------------------------------------------------------

def normalize_to_standard_form(g: AlgFun, k: int) -> StandardForm:
    """Recover (a, b) with g = (a - b s)/(1-2z^2)^(2k-1/2), exactly.

    Writing the half power via s/(1-2z^2), the rational part of g must be
    -b/(1-2z^2)^(2k-1) and the radical part a/(1-2z^2)^(2k); both
    divisions must come out exact or the input's denominator was not the
    expected power of 1-2z^2 (a catalog bug, reported as such).
    """
    d = Poly([1, 0, -2])
    try:
        b = -(g.p * d ** (2 * k - 1)).exact_div(g.r)
        a = (g.q * d ** (2 * k)).exact_div(g.r)
    except ValueError as exc:
        raise CatalogError(f"non-conforming denominator: {exc}") from exc
    form = StandardForm(k=k, a=a, b=b)
    if form.to_algfun() != g:
        raise CatalogError("standard form failed to round-trip")
    return form


# ---------------------------------------------------------------------------
# Leaf-labeled counts from the dot/ddot decomposition
# ---------------------------------------------------------------------------

def _leafsym_parts(k: int, stratum: str):
    """[(multiplier, AlgFun)] for the symmetric families of a stratum."""
    key = (k, f"ddot-{stratum}")
    if key not in _FILES:
        return []
    cat = load_catalog(k, f"ddot-{stratum}")
    by_mult: dict[int, AlgFun] = {}
    for term in cat.terms:
        val = evaluate_term(term)
        if term.multiplier in by_mult:
            by_mult[term.multiplier] = by_mult[term.multiplier] + val
        else:
            by_mult[term.multiplier] = val
    return sorted(by_mult.items())


def leaf_count(k: int, l: int, stratum: str = "all") -> Fraction:
    """Leaf-labeled count via the vertex series and the symmetry split.

    For the symmetric families, each leaf-labeled network yields every
    corresponding vertex-labeled network ``multiplier`` times, so the
    naive l!/n! transfer is corrected family by family:
    count = (l!/n!) (G_dot + sum_j m_j G_ddot_j)  at  n = 2l + 2k - 1.
    """
    if stratum == "all":
        return leaf_count(k, l, "no-mult") + leaf_count(k, l, "mult")
    n = 2 * l + 2 * k - 1
    total = assemble(k, stratum)
    parts = _leafsym_parts(k, stratum)
    dot = total
    for _, gf in parts:
        dot = dot - gf
    acc = dot.series(n)[n]
    for mult, gf in parts:
        acc += Fraction(mult) * gf.series(n)[n]
    return acc * math.factorial(n) * Fraction(math.factorial(l), math.factorial(n))


def leaf_counts(k: int, l_max: int, stratum: str = "all"):
    """CountTable-ready list of exact leaf-labeled counts for l = 1..l_max."""
    out = []
    for l in range(1, l_max + 1):
        val = leaf_count(k, l, stratum)
        if val.denominator != 1:
            raise CatalogError(f"non-integer leaf count at k={k}, l={l}, {stratum}")
        out.append((l, int(val)))
    return out
