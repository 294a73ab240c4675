"""Terms for the countable omega-categorical linear order types.

Following Rosenstein's characterization, the type class is generated from
the one-point order by binary sums and by shuffles of finite nonempty type
sets.  Terms are normalized by sum-flattening and shuffle-set deduplication
only; distinct normalized terms may still denote the same type, so term
enumeration is an upper bound on type counts (deciding type isomorphism is
out of scope).

``rank`` is the least construction level of the (normalized) term: a sum of
several summands may be bracketed freely, so the rank of a sum is computed
over all bracketings.  ``pred`` collects the summand/member terms of the
rank-witnessing decompositions, inductively.

``realize`` draws a finite suborder sample from the denoted order with
explicit seeded randomness; shuffle slots are filled round-robin over a
seeded shuffle of slot positions, so every member appears once the budget
reaches the member count.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache

from .errors import BudgetError, InputError
from .structures import FinStruct, chain

__all__ = [
    "DEFAULT_RANK_BUDGET",
    "OTTerm",
    "One",
    "Sum",
    "Shuffle",
    "ONE",
    "sum_terms",
    "normalize",
    "summands",
    "term_sort_key",
    "rank",
    "pred",
    "enum_terms",
    "denotes_finite_chain",
    "finite_chain_length",
    "term_has_min",
    "term_has_max",
    "RealizedSample",
    "realize",
    "jump_sizes",
    "has_jump",
    "term_to_dict",
    "term_from_dict",
]

DEFAULT_RANK_BUDGET = 3


@dataclass(frozen=True)
class One:
    """The one-point order."""


@dataclass(frozen=True)
class Sum:
    """Concatenation: every point of ``left`` below every point of ``right``."""

    left: "OTTerm"
    right: "OTTerm"


@dataclass(frozen=True)
class Shuffle:
    """Dense interleaving of a finite nonempty set of types.

    Each member replaces the points of a dense subset in a partition of the
    rational line; the result is independent of those choices.
    """

    members: frozenset

    def __post_init__(self) -> None:
        if not isinstance(self.members, frozenset) or not self.members:
            raise InputError("shuffle needs a nonempty frozenset of terms")


OTTerm = One | Sum | Shuffle

ONE = One()


def summands(t: OTTerm) -> tuple[OTTerm, ...]:
    """Flattened summand sequence (non-sum terms are their own summand)."""
    if isinstance(t, Sum):
        return summands(t.left) + summands(t.right)
    return (t,)


def sum_terms(parts) -> OTTerm:
    """Right-nested sum of a nonempty summand sequence."""
    parts = list(parts)
    if not parts:
        raise InputError("a sum needs at least one summand")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Sum(p, out)
    return out


def normalize(t: OTTerm) -> OTTerm:
    """Sum-flatten (right-nest) and deduplicate shuffle member sets."""
    if isinstance(t, One):
        return ONE
    if isinstance(t, Sum):
        return sum_terms([normalize(s) for s in summands(t)])
    if isinstance(t, Shuffle):
        return Shuffle(frozenset(normalize(m) for m in t.members))
    raise InputError(f"not an order-type term: {t!r}")


def term_sort_key(t: OTTerm) -> tuple:
    """A deterministic total order on terms (used for canonical listings)."""
    if isinstance(t, One):
        return (0,)
    if isinstance(t, Sum):
        ss = summands(t)
        return (1, len(ss)) + tuple(term_sort_key(s) for s in ss)
    return (2, len(t.members)) + tuple(sorted(term_sort_key(m) for m in t.members))


@lru_cache(maxsize=None)
def _seq_rank(seq: tuple) -> int:
    """Least construction level of a sum with the given summand sequence."""
    if len(seq) == 1:
        t = seq[0]
        if isinstance(t, One):
            return 0
        # a shuffle needs one level above its deepest member
        return 1 + max(_seq_rank(summands(m)) for m in t.members)
    best = None
    for cut in range(1, len(seq)):
        r = 1 + max(_seq_rank(seq[:cut]), _seq_rank(seq[cut:]))
        if best is None or r < best:
            best = r
    return best


def rank(t: OTTerm) -> int:
    """Least n such that the normalized term lies in the n-th level."""
    return _seq_rank(summands(normalize(t)))


def pred(t: OTTerm) -> frozenset:
    """Inductively collected predecessor terms.

    For a sum, every two-part split whose parts stay below the term's rank
    contributes both parts and their predecessors; for a shuffle, the
    members and their predecessors.  Every predecessor has strictly smaller
    rank and its own predecessors are included.
    """
    t = normalize(t)
    out: set = set()
    _pred_into(summands(t), out)
    return frozenset(out)


def _pred_into(seq: tuple, out: set) -> None:
    n = _seq_rank(seq)
    if len(seq) == 1:
        t = seq[0]
        if isinstance(t, One):
            return
        for m in t.members:
            out.add(m)
            _pred_into(summands(m), out)
        return
    for cut in range(1, len(seq)):
        left, right = seq[:cut], seq[cut:]
        if _seq_rank(left) <= n - 1 and _seq_rank(right) <= n - 1:
            for part in (left, right):
                out.add(sum_terms(part))
                _pred_into(part, out)


def enum_terms(n: int, rank_budget: int = DEFAULT_RANK_BUDGET) -> tuple[OTTerm, ...]:
    """All normalized terms of construction level <= n, sorted canonically.

    Levels are cumulative: level 0 holds the point; level n+1 adds sums of
    pairs and shuffles of nonempty subsets of level n.
    """
    if n < 0:
        raise InputError("level must be nonnegative")
    if n > rank_budget:
        raise BudgetError(f"term enumeration limited to level {rank_budget}")
    level: set = {ONE}
    for _ in range(n):
        prev = sorted(level, key=term_sort_key)
        nxt = set(level)
        for a in prev:
            for b in prev:
                nxt.add(normalize(Sum(a, b)))
        for mask in range(1, 1 << len(prev)):
            members = frozenset(prev[i] for i in range(len(prev)) if mask >> i & 1)
            nxt.add(Shuffle(members))
        level = nxt
    return tuple(sorted(level, key=term_sort_key))


def denotes_finite_chain(t: OTTerm) -> bool:
    """True iff the term contains no shuffle (its order is a finite chain)."""
    if isinstance(t, One):
        return True
    if isinstance(t, Sum):
        return denotes_finite_chain(t.left) and denotes_finite_chain(t.right)
    return False


def finite_chain_length(t: OTTerm) -> int | None:
    """Number of points when the denoted order is finite, else None."""
    if isinstance(t, One):
        return 1
    if isinstance(t, Sum):
        a = finite_chain_length(t.left)
        b = finite_chain_length(t.right)
        return None if a is None or b is None else a + b
    return None


def term_has_min(t: OTTerm) -> bool:
    """Does the denoted order have a minimum element?"""
    if isinstance(t, One):
        return True
    if isinstance(t, Sum):
        return term_has_min(t.left)
    return False


def term_has_max(t: OTTerm) -> bool:
    if isinstance(t, One):
        return True
    if isinstance(t, Sum):
        return term_has_max(t.right)
    return False


# ---------------------------------------------------------------------------
# finite samples


@dataclass(frozen=True)
class RealizedSample:
    """A finite suborder sampled from the denoted (possibly infinite) order.

    ``adjacency[i]`` is True iff sampled points i and i+1 are adjacent
    (immediate neighbours) in the denoted order.  The boundary flags say
    whether the first sampled point has an immediate predecessor and the
    last an immediate successor there; ``first_is_minimum`` /
    ``last_is_maximum`` record whether the endpoints are the true extremes
    of the denoted order.
    """

    order: FinStruct
    adjacency: tuple[bool, ...]
    has_immediate_predecessor: bool
    has_immediate_successor: bool
    first_is_minimum: bool
    last_is_maximum: bool


def realize(t: OTTerm, budget: int, seed: int) -> RealizedSample:
    """Sample a finite suborder of the denoted order, deterministically.

    Finite terms are realized in full.  A shuffle contributes ``budget``
    slots at dense positions: members are assigned to slots round-robin
    over a seeded shuffle of the slot order, each slot holding a recursive
    realization; consecutive slots are never adjacent.  The sample size
    depends only on (term, budget), never on the seed.
    """
    if budget < 1:
        raise InputError("sample budget must be at least 1")
    size, adj, pred0, succ0, ismin, ismax = _realize(normalize(t), budget,
                                                     random.Random(seed))
    return RealizedSample(chain(size), tuple(adj), pred0, succ0, ismin, ismax)


def _realize(t: OTTerm, budget: int, rng: random.Random):
    if isinstance(t, One):
        return 1, [], False, False, True, True
    if isinstance(t, Sum):
        ls, la, lp, lsc, lmin, lmax = _realize(t.left, budget, rng)
        rs, ra, rp, rsc, rmin, rmax = _realize(t.right, budget, rng)
        seam = lmax and rmin
        return ls + rs, la + [seam] + ra, lp, rsc, lmin, rmax
    # shuffle: budget slots, round-robin assignment over shuffled slot order
    members = sorted(t.members, key=term_sort_key)
    slot_order = list(range(budget))
    rng.shuffle(slot_order)
    assignment: list[OTTerm | None] = [None] * budget
    for i, slot in enumerate(slot_order):
        assignment[slot] = members[i % len(members)]
    size = 0
    adj: list[bool] = []
    first_pred = False
    last_succ = False
    for i, member in enumerate(assignment):
        ms, ma, mp, msc, _, _ = _realize(member, budget, rng)
        if i == 0:
            first_pred = mp
        else:
            adj.append(False)  # dense gap between slots
        adj.extend(ma)
        size += ms
        last_succ = msc
    return size, adj, first_pred, last_succ, False, False


# ---------------------------------------------------------------------------
# jumps: maximal finite blocks of consecutive elements

# Block summaries: ("chain", m) for an order that is one finite block with
# both endpoints, or ("open", init, interior, final) where init/final are
# the sizes of the initial/final blocks when a minimum/maximum exists
# (None otherwise) and interior is a frozenset of settled block sizes.


def _summary(t: OTTerm):
    if isinstance(t, One):
        return ("chain", 1)
    if isinstance(t, Sum):
        return _join(_summary(t.left), _summary(t.right))
    sizes: set[int] = set()
    for m in t.members:
        sizes |= _all_blocks(_summary(m))
    return ("open", None, frozenset(sizes), None)


def _join(a, b):
    if a[0] == "chain" and b[0] == "chain":
        return ("chain", a[1] + b[1])
    if a[0] == "chain":
        _, init, interior, final = b
        if init is not None:
            return ("open", a[1] + init, interior, final)
        return ("open", a[1], interior, final)
    if b[0] == "chain":
        _, init, interior, final = a
        if final is not None:
            return ("open", init, interior, final + b[1])
        return ("open", init, interior, b[1])
    _, i1, in1, f1 = a
    _, i2, in2, f2 = b
    interior = set(in1 | in2)
    if f1 is not None and i2 is not None:
        interior.add(f1 + i2)  # seam merges the two boundary blocks
    else:
        if f1 is not None:
            interior.add(f1)
        if i2 is not None:
            interior.add(i2)
    return ("open", i1, frozenset(interior), f2)


def _all_blocks(s) -> set[int]:
    if s[0] == "chain":
        return {s[1]}
    _, init, interior, final = s
    out = set(interior)
    if init is not None:
        out.add(init)
    if final is not None:
        out.add(final)
    return out


def jump_sizes(t: OTTerm) -> frozenset[int]:
    """Sizes (element counts) of the maximal finite blocks of the denoted order."""
    return frozenset(_all_blocks(_summary(normalize(t))))


def has_jump(t: OTTerm, k: int) -> bool:
    """Is there a maximal block of exactly k+1 consecutive elements?

    A maximal block of m consecutive elements is an (m-1)-jump: its first
    element has no immediate predecessor and its last no immediate
    successor.
    """
    if k < 0:
        raise InputError("jump size must be nonnegative")
    return (k + 1) in jump_sizes(t)


# ---------------------------------------------------------------------------
# JSON interchange: {"op": "one"} | {"op": "sum", "args": [...]}
#                   | {"op": "shuffle", "args": [...]}


def term_to_dict(t: OTTerm) -> dict:
    t = normalize(t)
    if isinstance(t, One):
        return {"op": "one"}
    if isinstance(t, Sum):
        return {"op": "sum", "args": [term_to_dict(s) for s in summands(t)]}
    members = sorted(t.members, key=term_sort_key)
    return {"op": "shuffle", "args": [term_to_dict(m) for m in members]}


def term_from_dict(d: dict) -> OTTerm:
    if not isinstance(d, dict) or "op" not in d:
        raise InputError('term JSON needs an "op" field')
    op = d["op"]
    if op == "one":
        return ONE
    args = d.get("args")
    if not isinstance(args, list) or not args:
        raise InputError(f'term JSON "{op}" needs a nonempty "args" list')
    parts = [term_from_dict(x) for x in args]
    if op == "sum":
        if len(parts) < 2:
            raise InputError("a sum needs at least two summands")
        return sum_terms(parts)
    if op == "shuffle":
        return Shuffle(frozenset(parts))
    raise InputError(f"unknown term operator {op!r}")
