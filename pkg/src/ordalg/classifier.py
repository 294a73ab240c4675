"""Rule-based classification of structure expressions.

Expressions combine declared bases by finite products, finite disjoint
unions, and infinite disjoint unions.  ``classify`` assigns the number of
countable models of the complete theory — zero (a finite model exists), one
(omega-categorical), continuum, or unknown for trusted-but-undetermined
declarations — and returns a derivation trace citing every rule applied.
When no rule covers an expression the classifier refuses with
``NoApplicableTheoremError``; it never guesses.

Rule inventory (citations spell the statements out; each final conclusion
cites exactly one rule):

  R0  a theory with a finite model is assigned count zero by convention
  R1  count dichotomy for finite unions of finite products over one
      certified base class (linear orders / initially finite trees with the
      sharp dichotomy / rooted trees with a finite monomorphic
      decomposition)
  R2  dichotomy for an infinite disjoint union of linear orders
  R3  omega-categoricity criterion for infinite unions of connected parts
  R4  a finite union with a finite-diameter component of continuum count
      has continuum count
  R5  a finite lexicographical sum or union of omega-categorical parts is
      omega-categorical
  R6  a rooted tree is omega-categorical iff its root-deleted tree is
  R7  sharp dichotomy for finite monomorphic decompositions: a non-
      omega-categorical one has continuum count

This module also houses ``fmd_decompose``, the minimal monomorphic
decomposition of a finite poset, verified against its definition.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

from .errors import (
    BudgetError,
    InputError,
    InternalInvariantError,
    NoApplicableTheoremError,
    ValidationError,
)
from .iso import canonical_form
from .ordertypes import (
    OTTerm,
    denotes_finite_chain,
    finite_chain_length,
    normalize,
    term_from_dict,
    term_has_min,
    term_to_dict,
)
from .structures import (
    FinStruct,
    Partition,
    _bits,
    components,
    diameter,
    induced,
    is_antichain,
    is_linear,
    is_poset,
    is_tree,
    root,
    struct_from_dict,
    struct_to_dict,
)

__all__ = [
    "OMEGA",
    "VCClass",
    "PartDecl",
    "BaseDecl",
    "Base",
    "Product",
    "UnionFin",
    "UnionOmega",
    "StructExpr",
    "TraceStep",
    "Annotated",
    "CLASS_LINEAR",
    "CLASS_IFT",
    "CLASS_FMD",
    "SCHEMA_ALL_FINITE_CHAINS",
    "validate",
    "classify",
    "finitely_axiomatizable",
    "closure_enumerate",
    "fmd_decompose",
    "is_monomorphic_partition",
    "expr_to_dict",
    "expr_from_dict",
    "trace_to_list",
]

OMEGA = "omega"
SCHEMA_ALL_FINITE_CHAINS = "all_finite_chains"

CLASS_LINEAR = "linear_orders"
CLASS_IFT = "initially_finite_trees"
CLASS_FMD = "rooted_fmd_trees"

KIND_LINEAR_CLASSC = "linear_classC"
KIND_LINEAR_DECLARED = "linear_declared"
KIND_ROOTED_FMD_TREE = "rooted_fmd_tree"
KIND_IFT_DECLARED = "initially_finite_tree_declared"
KIND_FINITE = "finite"

_KINDS = (
    KIND_LINEAR_CLASSC,
    KIND_LINEAR_DECLARED,
    KIND_ROOTED_FMD_TREE,
    KIND_IFT_DECLARED,
    KIND_FINITE,
)


class VCClass(enum.Enum):
    ZERO = "zero"
    ONE = "one"
    CONTINUUM = "continuum"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class PartDecl:
    """Shape of one part: a chain (finite or an order-type term) or an antichain.

    Antichain size is a positive int or ``OMEGA``.
    """

    shape: str
    size: int | str | None = None
    term: OTTerm | None = None

    def __post_init__(self) -> None:
        if self.shape not in ("chain", "antichain"):
            raise InputError(f"unknown part shape {self.shape!r}")
        if self.shape == "chain":
            if (self.term is None) == (self.size is None):
                raise InputError("a chain part needs a size or a term, not both")
            if self.size is not None and (not isinstance(self.size, int) or self.size < 1):
                raise InputError("finite chain part size must be a positive int")
        else:
            if self.term is not None:
                raise InputError("an antichain part is given by size only")
            if self.size != OMEGA and (not isinstance(self.size, int) or self.size < 1):
                raise InputError('antichain part size must be a positive int or "omega"')

    def is_finite(self) -> bool:
        if self.size == OMEGA:
            return False
        if self.term is not None:
            return denotes_finite_chain(self.term)
        return True

    def has_min(self) -> bool:
        if self.term is not None:
            return term_has_min(self.term)
        return True


@dataclass(frozen=True)
class BaseDecl:
    """A declared base structure.

    ``declared_count`` is required for the ``*_declared`` kinds and optional
    for ``rooted_fmd_tree`` (an override for trees whose parts cannot be
    expressed; the sharp dichotomy R7 then justifies any continuum claim).
    ``connected`` / ``finite_diameter`` default to what the kind forces.
    """

    name: str
    kind: str
    term: OTTerm | None = None
    index: FinStruct | None = None
    parts: tuple[PartDecl, ...] | None = None
    struct: FinStruct | None = None
    declared_count: VCClass | None = None
    connected: bool | None = None
    finite_diameter: bool | None = None
    justification: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise InputError(f"unknown base kind {self.kind!r}")


@dataclass(frozen=True)
class Base:
    decl: BaseDecl


@dataclass(frozen=True)
class Product:
    factors: tuple["StructExpr", ...]

    def __post_init__(self) -> None:
        if not self.factors:
            raise InputError("a product needs at least one factor")


@dataclass(frozen=True)
class UnionFin:
    members: tuple["StructExpr", ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise InputError("a finite union needs at least one member")


@dataclass(frozen=True)
class UnionOmega:
    """An infinite disjoint union: explicit components with multiplicities
    (total multiplicity must be infinite) or a built-in schema."""

    components: tuple[tuple["StructExpr", int | str], ...] = ()
    schema: str | None = None


StructExpr = Base | Product | UnionFin | UnionOmega


@dataclass(frozen=True)
class TraceStep:
    rule: str
    citation: str
    conclusion: str


@dataclass(frozen=True)
class Annotated:
    """An expression with computed facts attached, as returned by ``validate``."""

    expr: StructExpr
    count: VCClass
    connected: bool | None
    finite_diameter: bool | None
    linear: bool
    finite: bool
    classes: frozenset[str]
    children: tuple["Annotated", ...] = ()
    steps: tuple[TraceStep, ...] = ()


_CITE = {
    "R0": "a complete theory with a finite model is assigned count zero by convention",
    "R1": "for finite disjoint unions of finite products over one certified class, "
          "the count is at most one when every factor's count is, and continuum "
          "when some factor's count is continuum",
    "R2": "an infinite disjoint union of linear orders has count one or continuum; "
          "it is omega-categorical iff every component is omega-categorical or "
          "finite and the components realize finitely many order types",
    "R3": "an infinite disjoint union of connected structures is omega-categorical "
          "iff every component is and finitely many isomorphism types occur",
    "R4": "a disjoint union containing a finite-diameter component whose theory "
          "has continuum many countable models itself has continuum many",
    "R5": "a finite lexicographical sum (hence any finite disjoint union) of "
          "omega-categorical structures is omega-categorical",
    "R6": "a rooted tree is omega-categorical iff the tree obtained by deleting "
          "its root is omega-categorical",
    "R7": "the sharp dichotomy holds for structures with a finite monomorphic "
          "decomposition, so a non-omega-categorical one has continuum count",
    "decl": "declared count trusted as stated",
    "base": "membership in the generating type class implies omega-categoricity "
            "(Rosenstein's characterization of countable omega-categorical "
            "linear orders)",
}


def _step(steps: list[TraceStep], rule: str, conclusion: str,
          citation: str | None = None) -> None:
    steps.append(TraceStep(rule, citation or _CITE[rule], conclusion))


# ---------------------------------------------------------------------------
# validation / annotation


def validate(e: StructExpr) -> Annotated:
    """Check every declaration invariant and annotate the expression.

    Raises ``ValidationError`` naming the violated clause.
    """
    if isinstance(e, Base):
        return _annotate_base(e)
    if isinstance(e, Product):
        children = tuple(validate(f) for f in e.factors)
        return Annotated(
            expr=e,
            count=VCClass.UNKNOWN,
            connected=_all3(c.connected for c in children),
            finite_diameter=_all3(c.finite_diameter for c in children),
            linear=False,
            finite=all(c.finite for c in children),
            classes=frozenset.intersection(*(c.classes for c in children)),
            children=children,
        )
    if isinstance(e, UnionFin):
        children = tuple(validate(m) for m in e.members)
        nonempty = [c for c in children if not _is_empty_base(c)]
        if len(nonempty) == 1:
            connected: bool | None = nonempty[0].connected
            fin_diam: bool | None = nonempty[0].finite_diameter
        else:
            connected = False
            fin_diam = False
        return Annotated(
            expr=e,
            count=VCClass.UNKNOWN,
            connected=connected,
            finite_diameter=fin_diam,
            linear=False,
            finite=all(c.finite for c in children),
            classes=frozenset.intersection(*(c.classes for c in children)),
            children=children,
        )
    if isinstance(e, UnionOmega):
        if (e.schema is None) == (not e.components):
            raise ValidationError(
                "an infinite union needs either explicit components or a schema")
        if e.schema is not None and e.schema != SCHEMA_ALL_FINITE_CHAINS:
            raise ValidationError(f"unknown infinite-union schema {e.schema!r}")
        children = []
        if e.components:
            total_infinite = False
            for expr, mult in e.components:
                if mult == OMEGA:
                    total_infinite = True
                elif not isinstance(mult, int) or mult < 1:
                    raise ValidationError(
                        'component multiplicity must be a positive int or "omega"')
                children.append(validate(expr))
            if not total_infinite:
                raise ValidationError(
                    "total multiplicity of an infinite union must be infinite")
        return Annotated(
            expr=e,
            count=VCClass.UNKNOWN,
            connected=False,
            finite_diameter=False,
            linear=False,
            finite=False,
            classes=frozenset(),
            children=tuple(children),
        )
    raise InputError(f"not a structure expression: {e!r}")


def _all3(values) -> bool | None:
    """Three-valued conjunction over True/False/None."""
    out: bool | None = True
    for v in values:
        if v is False:
            return False
        if v is None:
            out = None
    return out


def _is_empty_base(c: Annotated) -> bool:
    e = c.expr
    return isinstance(e, Base) and e.decl.kind == KIND_FINITE and \
        e.decl.struct is not None and e.decl.struct.size == 0


def _annotate_base(e: Base) -> Annotated:
    d = e.decl
    steps: list[TraceStep] = []
    if d.kind == KIND_FINITE:
        if d.struct is None:
            raise ValidationError(f"finite base {d.name!r} needs a structure")
        s = d.struct
        part, _ = components(s)
        conn = len(part.blocks) == 1
        return Annotated(
            e, VCClass.ZERO, conn, diameter(s) is not None, is_linear(s), True,
            _finite_classes(s), steps=tuple(steps))
    if d.kind == KIND_LINEAR_CLASSC:
        if d.term is None:
            raise ValidationError(f"class-membership base {d.name!r} needs a term")
        term = normalize(d.term)
        finite = denotes_finite_chain(term)
        count = VCClass.ZERO if finite else VCClass.ONE
        classes = {CLASS_LINEAR}
        if term_has_min(term):
            # a linear order with a minimum is a rooted tree with one
            # root-deleted component, and trivially monomorphically decomposed
            classes |= {CLASS_IFT, CLASS_FMD}
        if not finite:
            _step(steps, "base", f"{d.name}: omega-categorical linear order type")
        # every linear order has diameter <= 1: any two points are comparable
        return Annotated(e, count, True, True, True, finite,
                         frozenset(classes), steps=tuple(steps))
    if d.kind == KIND_LINEAR_DECLARED:
        if d.declared_count is None:
            raise ValidationError(
                f"declared linear base {d.name!r} needs declared_count")
        _step(steps, "decl",
              f"{d.name}: declared count {d.declared_count.value}",
              d.justification or _CITE["decl"])
        return Annotated(
            e, d.declared_count,
            True if d.connected is None else d.connected,
            True if d.finite_diameter is None else d.finite_diameter,
            True, d.declared_count is VCClass.ZERO,
            frozenset({CLASS_LINEAR}), steps=tuple(steps))
    if d.kind == KIND_IFT_DECLARED:
        if d.declared_count is None:
            raise ValidationError(
                f"declared initially-finite-tree base {d.name!r} needs declared_count")
        _step(steps, "decl",
              f"{d.name}: declared count {d.declared_count.value}",
              d.justification or _CITE["decl"])
        return Annotated(
            e, d.declared_count,
            True if d.connected is None else d.connected,
            True if d.finite_diameter is None else d.finite_diameter,
            False, d.declared_count is VCClass.ZERO,
            frozenset({CLASS_IFT}), steps=tuple(steps))
    # rooted FMD tree
    return _annotate_fmd_tree(e, steps)


def _finite_classes(s: FinStruct) -> frozenset[str]:
    classes = set()
    if is_linear(s):
        classes.add(CLASS_LINEAR)
    if s.size > 0 and is_tree(s) and root(s) is not None:
        # a finite rooted tree is initially finite and admits a finite
        # monomorphic decomposition outright
        classes |= {CLASS_IFT, CLASS_FMD}
    return frozenset(classes)


def _annotate_fmd_tree(e: Base, steps: list[TraceStep]) -> Annotated:
    d = e.decl
    if d.index is None or d.parts is None:
        raise ValidationError(
            f"monomorphic tree base {d.name!r} needs an index tree and parts")
    idx = d.index
    if idx.size == 0:
        raise ValidationError("the index tree of a rooted tree must be nonempty")
    if not is_tree(idx):
        raise ValidationError(
            "the index structure of a monomorphic tree declaration must be a "
            "finite tree")
    if len(d.parts) != idx.size:
        raise ValidationError("one part is needed per index point")
    r = root(idx)
    if r is None:
        raise ValidationError("the index tree of a rooted tree must have a root")
    maximal = [i for i in range(idx.size)
               if all(not idx.has(i, j) for j in range(idx.size) if j != i)]
    maximal_set = set(maximal)
    for i, part in enumerate(d.parts):
        if part.shape == "antichain" and i not in maximal_set:
            raise ValidationError(
                "antichain part at a non-maximal index point: inner parts of a "
                "monomorphic tree must be chains")
    rp = d.parts[r]
    root_ok = (rp.shape == "chain" and rp.has_min()) or \
              (rp.shape == "antichain" and rp.size == 1)
    if not root_ok:
        raise ValidationError(
            "the root part must be a linear order having a minimum")
    finite = all(p.is_finite() for p in d.parts)
    if d.declared_count is not None:
        count = d.declared_count
        _step(steps, "decl", f"{d.name}: declared count {count.value}",
              d.justification or _CITE["decl"])
    else:
        # all expressible parts are omega-categorical (chains from the type
        # class, antichains of size <= omega)
        count = VCClass.ZERO if finite else VCClass.ONE
    return Annotated(e, count, True, True, False, finite,
                     frozenset({CLASS_FMD}) | (
                         frozenset({CLASS_IFT}) if _fmd_initially_finite(d)
                         else frozenset()),
                     steps=tuple(steps))


def _fmd_initially_finite(d: BaseDecl) -> bool:
    """Does the root-deleted tree have finitely many components?

    With the root removed, an antichain of size omega sitting at a level-1
    point of a singleton-root tree contributes infinitely many components;
    everything else stays finite.
    """
    idx, parts = d.index, d.parts
    r = root(idx)
    rp = parts[r]
    root_len = 1 if rp.shape == "antichain" else (
        finite_chain_length(rp.term) if rp.term is not None else rp.size)
    if root_len is None or root_len > 1:
        return True  # root part keeps a linear backbone: one component
    level1 = [i for i in range(idx.size) if i != r and idx.has(r, i)
              and all(not idx.has(j, i) for j in range(idx.size) if j not in (r, i))]
    for i in level1:
        if parts[i].shape == "antichain" and parts[i].size == OMEGA:
            return False
    return True


# ---------------------------------------------------------------------------
# classification


def classify(e: StructExpr) -> tuple[VCClass, list[TraceStep]]:
    """Classify an expression, returning the count and the derivation trace."""
    ann = validate(e)
    steps: list[TraceStep] = []
    cls = _classify(ann, steps)
    if not steps:
        raise InternalInvariantError("classification produced an empty trace")
    return cls, steps


def _classify(ann: Annotated, steps: list[TraceStep]) -> VCClass:
    e = ann.expr
    if isinstance(e, Base):
        return _classify_base(ann, steps)
    if isinstance(e, (Product, UnionFin)) and ann.finite:
        _step(steps, "R0", "count zero: the expression denotes a finite structure")
        return VCClass.ZERO
    if isinstance(e, UnionOmega):
        return _classify_union_omega(ann, steps)
    if isinstance(e, UnionFin):
        return _classify_union_fin(ann, steps)
    if isinstance(e, Product):
        flat = _flatten_closure(ann)
        if flat is None:
            raise NoApplicableTheoremError(
                "no applicable theorem: a product may only combine bases and "
                "finite unions")
        return _apply_r1(ann, flat, steps)
    raise InputError(f"not a structure expression: {e!r}")


def _classify_base(ann: Annotated, steps: list[TraceStep]) -> VCClass:
    d = ann.expr.decl
    steps.extend(ann.steps)
    if ann.count is VCClass.ZERO:
        _step(steps, "R0", f"{d.name}: count zero")
        return VCClass.ZERO
    if d.kind == KIND_ROOTED_FMD_TREE:
        if ann.count is VCClass.CONTINUUM:
            _step(steps, "R7", f"{d.name}: count continuum")
            return VCClass.CONTINUUM
        if ann.count is VCClass.ONE:
            _step(steps, "R5",
                  f"{d.name}: root-deleted tree is a finite sum of "
                  "omega-categorical parts, hence omega-categorical")
            _step(steps, "R6", f"{d.name}: count one")
            return VCClass.ONE
        _step(steps, "R7", f"{d.name}: count {ann.count.value}")
        return ann.count
    # linear / initially-finite-tree bases: the degenerate one-product,
    # one-union closure expression over their own class
    _step(steps, "R1", f"{d.name}: count {ann.count.value}")
    return ann.count


def _flatten_closure(ann: Annotated) -> list[list[Annotated]] | None:
    """Rewrite a product/union tree over bases as a union of base products.

    Returns None when the tree contains an infinite union.
    """
    e = ann.expr
    if isinstance(e, Base):
        return [[ann]]
    if isinstance(e, Product):
        out: list[list[Annotated]] = [[]]
        for child in ann.children:
            sub = _flatten_closure(child)
            if sub is None:
                return None
            out = [p + q for p in out for q in sub]
        return out
    if isinstance(e, UnionFin):
        out = []
        for child in ann.children:
            sub = _flatten_closure(child)
            if sub is None:
                return None
            out.extend(sub)
        return out
    return None


def _apply_r1(ann: Annotated, flat: list[list[Annotated]],
              steps: list[TraceStep]) -> VCClass:
    bases = [b for product in flat for b in product]
    common = frozenset.intersection(*(b.classes for b in bases))
    if not common:
        raise NoApplicableTheoremError(
            "no applicable theorem: the closure dichotomy needs every base in "
            "one certified class (linear orders, initially finite trees, or "
            "rooted trees with a finite monomorphic decomposition); these "
            "bases share none")
    chosen = sorted(common)[0]
    for b in bases:
        steps.extend(b.steps)
    counts = {b.count for b in bases}
    if VCClass.CONTINUUM in counts:
        _step(steps, "R1",
              f"count continuum over class {chosen}: some factor has "
              "continuum count")
        return VCClass.CONTINUUM
    if VCClass.UNKNOWN in counts:
        _step(steps, "R1", f"count unknown over class {chosen}: an "
              "undetermined declared factor blocks the dichotomy")
        return VCClass.UNKNOWN
    _step(steps, "R1",
          f"count one over class {chosen}: every factor's count is at most one")
    return VCClass.ONE


def _classify_union_fin(ann: Annotated, steps: list[TraceStep]) -> VCClass:
    # classify each member on its own; a member outside every rule domain
    # only blocks the rules that need member counts
    member_counts: list[VCClass | None] = []
    member_steps: list[list[TraceStep]] = []
    for child in ann.children:
        sub: list[TraceStep] = []
        try:
            member_counts.append(_classify(child, sub))
        except NoApplicableTheoremError:
            member_counts.append(None)
        member_steps.append(sub)
    # R4 first: a connected continuum member of finite diameter wins
    # outright, regardless of what classes the other members come from
    if all(c.connected is True for c in ann.children):
        for child, count, sub in zip(ann.children, member_counts, member_steps):
            if count is VCClass.CONTINUUM and child.finite_diameter is True:
                steps.extend(sub)
                _step(steps, "R4",
                      "count continuum: a connected finite-diameter member "
                      "has continuum count")
                return VCClass.CONTINUUM
    flat = _flatten_closure(ann)
    if flat is not None:
        try:
            return _apply_r1(ann, flat, steps)
        except NoApplicableTheoremError:
            pass
    if all(c in (VCClass.ZERO, VCClass.ONE) for c in member_counts):
        for sub in member_steps:
            steps.extend(sub)
        _step(steps, "R5",
              "count one: a finite union of omega-categorical members")
        return VCClass.ONE
    if None not in member_counts and VCClass.CONTINUUM not in member_counts:
        for sub in member_steps:
            steps.extend(sub)
        _step(steps, "R5", "count unknown: an undetermined declared member "
              "blocks the omega-categoricity criterion")
        return VCClass.UNKNOWN
    raise NoApplicableTheoremError(
        "no applicable theorem: a finite union with a continuum member is only "
        "classified when that member is connected of finite diameter or all "
        "bases share a certified class")


def _classify_union_omega(ann: Annotated, steps: list[TraceStep]) -> VCClass:
    e = ann.expr
    if e.schema == SCHEMA_ALL_FINITE_CHAINS:
        _step(steps, "R2",
              "count continuum: one finite chain of every length occurs, so "
              "the components realize infinitely many order types")
        return VCClass.CONTINUUM
    member_counts = [_classify(child, steps) for child in ann.children]
    if all(c.linear for c in ann.children):
        if any(c is VCClass.CONTINUUM for c in member_counts):
            _step(steps, "R2",
                  "count continuum: a linear component has continuum count")
            return VCClass.CONTINUUM
        if all(c in (VCClass.ZERO, VCClass.ONE) for c in member_counts):
            _step(steps, "R2",
                  "count one: every component is omega-categorical or finite "
                  "and the explicit component list realizes finitely many "
                  "order types")
            return VCClass.ONE
        _step(steps, "R2", "count unknown: an undetermined declared component "
              "blocks the omega-categoricity test in the dichotomy")
        return VCClass.UNKNOWN
    if all(c.connected is True for c in ann.children):
        if all(c in (VCClass.ZERO, VCClass.ONE) for c in member_counts):
            _step(steps, "R3",
                  "count one: every connected component is omega-categorical "
                  "and finitely many isomorphism types occur")
            return VCClass.ONE
        raise NoApplicableTheoremError(
            "no applicable theorem: for infinite unions of non-linear "
            "connected structures only the omega-categoricity criterion is "
            "available, and its hypotheses fail here")
    raise NoApplicableTheoremError(
        "no applicable theorem: infinite unions are classified only for "
        "linear or connected components")


def finitely_axiomatizable(e: StructExpr) -> bool | None:
    """Tri-state finite axiomatizability for unions of linear orders.

    True for a finite union of linear orders whose theory has a model count
    of zero or one, False for a genuinely infinite such union, None (not
    applicable) otherwise.
    """
    ann = validate(e)
    try:
        cls, _ = classify(e)
    except NoApplicableTheoremError:
        return None
    if isinstance(e, UnionOmega):
        if e.schema == SCHEMA_ALL_FINITE_CHAINS:
            return None if cls not in (VCClass.ZERO, VCClass.ONE) else False
        if not all(c.linear for c in ann.children):
            return None
        return False if cls in (VCClass.ZERO, VCClass.ONE) else None
    if isinstance(e, (Base, UnionFin)):
        members = ann.children if isinstance(e, UnionFin) else (ann,)
        if not all(c.linear for c in members):
            return None
        return True if cls in (VCClass.ZERO, VCClass.ONE) else None
    return None


# ---------------------------------------------------------------------------
# closure enumeration


def closure_enumerate(basis, depth: int, depth_budget: int = 3):
    """Stream the product/union closure of the basis up to ``depth`` steps.

    Yields ``(expression, count, trace)`` for every normal-form expression
    (a finite union of finite products) reachable with at most ``depth``
    binary operations, deduplicated syntactically.
    """
    if depth < 0:
        raise InputError("depth must be nonnegative")
    if depth > depth_budget:
        raise BudgetError(f"closure enumeration limited to depth {depth_budget}")
    level: list[StructExpr] = [_normalize_expr(Base(b)) for b in basis]
    seen: set[str] = set()
    out: list[StructExpr] = []
    for x in level:
        key = _expr_key(x)
        if key not in seen:
            seen.add(key)
            out.append(x)
    frontier = list(out)
    for _ in range(depth):
        nxt: list[StructExpr] = []
        for a in frontier:
            for b in frontier:
                for combined in (Product((a, b)), UnionFin((a, b))):
                    norm = _normalize_expr(combined)
                    key = _expr_key(norm)
                    if key not in seen:
                        seen.add(key)
                        nxt.append(norm)
        out.extend(nxt)
        frontier = out[:]
    for x in out:
        cls, trace = classify(x)
        yield x, cls, trace


def _normalize_expr(e: StructExpr) -> StructExpr:
    """Flatten to a union of products (a normal form for the closure)."""
    flat = _flatten_exprs(e)
    if flat is None:
        return e
    products = []
    for factors in flat:
        products.append(factors[0] if len(factors) == 1 else Product(tuple(factors)))
    return products[0] if len(products) == 1 else UnionFin(tuple(products))


def _flatten_exprs(e: StructExpr) -> list[list[StructExpr]] | None:
    if isinstance(e, Base):
        return [[e]]
    if isinstance(e, Product):
        out: list[list[StructExpr]] = [[]]
        for f in e.factors:
            sub = _flatten_exprs(f)
            if sub is None:
                return None
            out = [p + q for p in out for q in sub]
        return out
    if isinstance(e, UnionFin):
        out = []
        for m in e.members:
            sub = _flatten_exprs(m)
            if sub is None:
                return None
            out.extend(sub)
        return out
    return None


def _expr_key(e: StructExpr) -> str:
    import json

    return json.dumps(expr_to_dict(e), sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# minimal monomorphic decomposition of a finite poset

FMD_SIZE_BUDGET = 8


def _subset_canons(a: FinStruct) -> list[bytes]:
    """Canonical form of every induced substructure, indexed by subset mask."""
    return [canonical_form(induced(a, list(_bits(sub))))
            for sub in range(1 << a.size)]


def _is_mono(a: FinStruct, blocks, canon: list[bytes]) -> bool:
    masks = [sum(1 << i for i in b) for b in blocks]
    by_trace: dict[tuple[int, ...], bytes] = {}
    for sub in range(1 << a.size):
        trace = tuple((sub & m).bit_count() for m in masks)
        prev = by_trace.get(trace)
        if prev is None:
            by_trace[trace] = canon[sub]
        elif prev != canon[sub]:
            return False
    return True


def is_monomorphic_partition(a: FinStruct, blocks) -> bool:
    """Definition check: equal per-block trace cardinalities force isomorphy.

    Any two induced substructures whose intersections with every block have
    equal sizes must be isomorphic; verified over all pairs of subsets via
    canonical forms.
    """
    return _is_mono(a, [tuple(b) for b in blocks], _subset_canons(a))


def _set_partitions(items: list[int]):
    """All partitions of ``items``, deterministically."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def _twin_candidate(a: FinStruct) -> list[list[int]]:
    """Group elements with identical external neighbourhoods (twin closure)."""
    cols = a.columns()
    groups: list[list[int]] = []
    for x in range(a.size):
        placed = False
        for g in groups:
            y = g[0]
            m = ~((1 << x) | (1 << y))
            if (a.rows[x] & m) == (a.rows[y] & m) and (cols[x] & m) == (cols[y] & m):
                g.append(x)
                placed = True
                break
        if not placed:
            groups.append([x])
    return groups


def fmd_decompose(a: FinStruct,
                  size_budget: int = FMD_SIZE_BUDGET
                  ) -> tuple[Partition, FinStruct, tuple[PartDecl, ...]]:
    """Minimal (coarsest) monomorphic decomposition of a finite poset.

    Returns the partition, the quotient structure on block representatives,
    and each block's shape.  A twin-grouping candidate is verified against
    the definition and coarsened while any single block merge still
    satisfies it; if the candidate fails, all partitions are searched in
    order of block count.  Since refining a monomorphic partition keeps it
    monomorphic, a partition none of whose single merges passes is coarsest.
    """
    if not is_poset(a):
        raise InputError("monomorphic decomposition requires a partial order")
    if a.size > size_budget:
        raise BudgetError(f"monomorphic decomposition limited to {size_budget} elements")
    if a.size == 0:
        return Partition(0, ()), FinStruct(0, ()), ()

    canon = _subset_canons(a)
    blocks = [sorted(g) for g in _twin_candidate(a)]
    if not _is_mono(a, blocks, canon):
        blocks = None
        for sized in sorted(
                (sorted((sorted(b) for b in part), key=lambda b: b[0])
                 for part in _set_partitions(list(range(a.size)))),
                key=lambda p: (len(p), p)):
            if _is_mono(a, sized, canon):
                blocks = sized
                break
        if blocks is None:
            raise InternalInvariantError(
                "the singleton partition is always monomorphic")
    # coarsen while any single merge still passes the definition
    improved = True
    while improved and len(blocks) > 1:
        improved = False
        for i, j in itertools.combinations(range(len(blocks)), 2):
            merged = [b for k, b in enumerate(blocks) if k not in (i, j)]
            merged.append(sorted(blocks[i] + blocks[j]))
            merged.sort(key=lambda b: b[0])
            if _is_mono(a, merged, canon):
                blocks = merged
                improved = True
                break
    blocks.sort(key=lambda b: b[0])
    part = Partition(a.size, tuple(tuple(b) for b in blocks))

    # cross-block relations must be uniform for a passing partition
    reps = [b[0] for b in blocks]
    for bi, bj in itertools.permutations(range(len(blocks)), 2):
        expected = a.has(reps[bi], reps[bj])
        for x in blocks[bi]:
            for y in blocks[bj]:
                if a.has(x, y) != expected:
                    raise InternalInvariantError(
                        "monomorphic blocks must relate uniformly")
    quotient = induced(a, reps)
    shapes = []
    for b in blocks:
        sub = induced(a, b)
        if len(b) == 1 or is_linear(sub):
            shapes.append(PartDecl(shape="chain", size=len(b)))
        elif is_antichain(sub):
            shapes.append(PartDecl(shape="antichain", size=len(b)))
        else:
            raise InternalInvariantError("monomorphic blocks are chains or antichains")
    return part, quotient, tuple(shapes)


# ---------------------------------------------------------------------------
# JSON interchange


def _count_from_str(s) -> VCClass:
    try:
        return VCClass(s)
    except ValueError:
        raise InputError(f"unknown count value {s!r}") from None


def _part_to_dict(p: PartDecl) -> dict:
    d: dict = {"shape": p.shape}
    if p.term is not None:
        d["term"] = term_to_dict(p.term)
    if p.size is not None:
        d["size"] = p.size
    return d


def _part_from_dict(d: dict) -> PartDecl:
    if not isinstance(d, dict) or "shape" not in d:
        raise InputError('part JSON needs a "shape"')
    term = term_from_dict(d["term"]) if "term" in d else None
    return PartDecl(shape=d["shape"], size=d.get("size"), term=term)


def _base_to_dict(b: BaseDecl) -> dict:
    d: dict = {"name": b.name, "kind": b.kind}
    if b.term is not None:
        d["term"] = term_to_dict(b.term)
    if b.index is not None:
        d["index"] = struct_to_dict(b.index)
    if b.parts is not None:
        d["parts"] = [_part_to_dict(p) for p in b.parts]
    if b.struct is not None:
        d["struct"] = struct_to_dict(b.struct)
    if b.declared_count is not None:
        d["count"] = b.declared_count.value
    if b.connected is not None:
        d["connected"] = b.connected
    if b.finite_diameter is not None:
        d["finite_diameter"] = b.finite_diameter
    if b.justification is not None:
        d["justification"] = b.justification
    return d


def _base_from_dict(d: dict) -> BaseDecl:
    if not isinstance(d, dict) or "kind" not in d:
        raise InputError('base JSON needs a "kind"')
    parts = None
    if "parts" in d:
        parts = tuple(_part_from_dict(p) for p in d["parts"])
    return BaseDecl(
        name=d.get("name", "base"),
        kind=d["kind"],
        term=term_from_dict(d["term"]) if "term" in d else None,
        index=struct_from_dict(d["index"]) if "index" in d else None,
        parts=parts,
        struct=struct_from_dict(d["struct"]) if "struct" in d else None,
        declared_count=_count_from_str(d["count"]) if "count" in d else None,
        connected=d.get("connected"),
        finite_diameter=d.get("finite_diameter"),
        justification=d.get("justification"),
    )


def expr_to_dict(e: StructExpr) -> dict:
    if isinstance(e, Base):
        return {"node": "base", "decl": _base_to_dict(e.decl)}
    if isinstance(e, Product):
        return {"node": "product", "args": [expr_to_dict(f) for f in e.factors]}
    if isinstance(e, UnionFin):
        return {"node": "union_fin", "args": [expr_to_dict(m) for m in e.members]}
    if isinstance(e, UnionOmega):
        d: dict = {"node": "union_omega"}
        if e.schema is not None:
            d["schema"] = e.schema
        if e.components:
            d["components"] = [
                {"expr": expr_to_dict(x), "mult": m} for x, m in e.components]
        return d
    raise InputError(f"not a structure expression: {e!r}")


def expr_from_dict(d: dict) -> StructExpr:
    if not isinstance(d, dict) or "node" not in d:
        raise InputError('expression JSON needs a "node"')
    node = d["node"]
    if node == "base":
        return Base(_base_from_dict(d.get("decl", {})))
    if node == "product":
        return Product(tuple(expr_from_dict(x) for x in d.get("args", [])))
    if node == "union_fin":
        return UnionFin(tuple(expr_from_dict(x) for x in d.get("args", [])))
    if node == "union_omega":
        comps = []
        for c in d.get("components", []):
            if not isinstance(c, dict) or "expr" not in c or "mult" not in c:
                raise InputError('infinite-union components need "expr" and "mult"')
            comps.append((expr_from_dict(c["expr"]), c["mult"]))
        return UnionOmega(components=tuple(comps), schema=d.get("schema"))
    raise InputError(f"unknown expression node {node!r}")


def trace_to_list(trace) -> list[dict]:
    return [{"rule": s.rule, "citation": s.citation, "conclusion": s.conclusion}
            for s in trace]
