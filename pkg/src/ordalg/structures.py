"""Finite binary relational structures and their order algebra.

A structure is a finite domain ``0..size-1`` carrying one binary relation,
stored as per-row bitmasks: bit ``y`` of ``rows[x]`` is set iff ``x`` is
related to ``y``.  The stored relation is taken literally — predicates such
as :func:`is_poset` interpret it but never mutate it.  All values are
immutable and every operation is a pure function of its inputs, so
concurrent use is safe.

Conventions: posets are stored reflexively (generators emit reflexive
encodings); the direct product flattens pair indices row-major
(``index(x, y) = x * b.size + y``); disjoint union keeps the left operand's
indices and shifts the right operand.  The empty structure is admitted
everywhere: it is a unit for disjoint union and an annihilator for the
product.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InputError

__all__ = [
    "FinStruct",
    "Partition",
    "make_struct",
    "direct_product",
    "disjoint_union",
    "disjoint_union_all",
    "lex_sum",
    "rs_closure",
    "rst_closure",
    "components",
    "diameter",
    "is_poset",
    "is_linear",
    "is_antichain",
    "is_tree",
    "comparability",
    "compatibility",
    "root",
    "strip_root",
    "chain",
    "antichain",
    "fence",
    "binary_fan",
    "induced",
    "relabel",
    "struct_to_dict",
    "struct_from_dict",
]


def _bits(mask: int):
    """Yield set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class FinStruct:
    """A finite structure with one binary relation.

    ``name`` is a label only and does not take part in equality.
    """

    size: int
    rows: tuple[int, ...]
    name: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.size < 0 or len(self.rows) != self.size:
            raise InputError("relation matrix does not match the domain size")
        full = (1 << self.size) - 1
        if any(r & ~full for r in self.rows):
            raise InputError("relation refers to indices outside the domain")

    def has(self, x: int, y: int) -> bool:
        return bool(self.rows[x] >> y & 1)

    def pairs(self) -> list[tuple[int, int]]:
        """All related pairs, in lexicographic order."""
        return [(x, y) for x in range(self.size) for y in _bits(self.rows[x])]

    def columns(self) -> tuple[int, ...]:
        """Transpose rows: bit ``x`` of ``columns()[y]`` is set iff x rel y."""
        cols = [0] * self.size
        for x, row in enumerate(self.rows):
            for y in _bits(row):
                cols[y] |= 1 << x
        return tuple(cols)

    def __repr__(self) -> str:  # compact, deterministic
        label = f" {self.name!r}" if self.name else ""
        return f"FinStruct(size={self.size}{label}, pairs={self.pairs()})"


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty index blocks covering ``0..size-1``.

    When produced by :func:`components`, block ``i`` is also the index map of
    the ``i``-th component back into the parent structure: position ``p`` of
    the component corresponds to parent index ``blocks[i][p]``.
    """

    size: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        seen = 0
        for block in self.blocks:
            if not block:
                raise InputError("partition blocks must be nonempty")
            m = 0
            for i in block:
                if not 0 <= i < self.size:
                    raise InputError("partition block index out of range")
                m |= 1 << i
            if m & seen:
                raise InputError("partition blocks must be disjoint")
            seen |= m
        if seen != (1 << self.size) - 1:
            raise InputError("partition blocks must cover the domain")


def make_struct(size: int, pairs, name: str | None = None) -> FinStruct:
    """Build a structure from a pair list; duplicates are ignored."""
    if size < 0:
        raise InputError("size must be nonnegative")
    rows = [0] * size
    for x, y in pairs:
        if not (0 <= x < size and 0 <= y < size):
            raise InputError(f"pair ({x}, {y}) out of range for size {size}")
        rows[x] |= 1 << y
    return FinStruct(size, tuple(rows), name)


def direct_product(a: FinStruct, b: FinStruct) -> FinStruct:
    """Componentwise product; pair (x, y) is flattened to x*b.size + y."""
    nb = b.size
    rows = []
    for x in range(a.size):
        arow = a.rows[x]
        for y in range(b.size):
            brow = b.rows[y]
            row = 0
            for x2 in _bits(arow):
                row |= brow << (x2 * nb)
            rows.append(row)
    return FinStruct(a.size * nb, tuple(rows))


def disjoint_union(a: FinStruct, b: FinStruct) -> FinStruct:
    """Block-diagonal union; ``b``'s indices are shifted by ``a.size``."""
    rows = a.rows + tuple(r << a.size for r in b.rows)
    return FinStruct(a.size + b.size, rows)


def disjoint_union_all(parts) -> FinStruct:
    """Left fold of :func:`disjoint_union` over ``parts``."""
    out = FinStruct(0, ())
    for p in parts:
        out = disjoint_union(out, p)
    return out


def lex_sum(index: FinStruct, parts) -> FinStruct:
    """Lexicographical sum of ``parts`` over ``index``.

    Within-part pairs are copied; a cross pair from part ``i`` into part
    ``j`` (``i != j``) is present iff ``index`` relates ``i`` to ``j``.  The
    diagonal of the index relation is ignored, so an empty index relation
    (or a reflexive antichain) yields exactly the iterated disjoint union.
    """
    parts = list(parts)
    if len(parts) != index.size:
        raise InputError(
            f"lex_sum needs one part per index point: got {len(parts)} parts "
            f"for index of size {index.size}"
        )
    offsets = []
    total = 0
    for p in parts:
        offsets.append(total)
        total += p.size
    rows = []
    for i, p in enumerate(parts):
        cross = 0
        for j in _bits(index.rows[i]):
            if j != i:
                cross |= ((1 << parts[j].size) - 1) << offsets[j]
        for x in range(p.size):
            rows.append((p.rows[x] << offsets[i]) | cross)
    return FinStruct(total, tuple(rows))


def rs_closure(a: FinStruct) -> FinStruct:
    """Reflexive-symmetric closure: diagonal plus the relation and its converse."""
    cols = a.columns()
    rows = tuple(a.rows[x] | cols[x] | (1 << x) for x in range(a.size))
    return FinStruct(a.size, rows)


def rst_closure(a: FinStruct) -> FinStruct:
    """Least equivalence relation containing the relation.

    Transitive closure of :func:`rs_closure`; its classes are the connected
    components.
    """
    rows = list(rs_closure(a).rows)
    n = a.size
    for k in range(n):
        rk = rows[k]
        bit = 1 << k
        for x in range(n):
            if rows[x] & bit:
                rows[x] |= rk
    return FinStruct(n, tuple(rows))


def components(a: FinStruct) -> tuple[Partition, list[FinStruct]]:
    """Connected components: the partition and the induced substructures.

    Blocks are ordered by their least element; each block doubles as the
    index map from the component back into ``a``.
    """
    eq = rst_closure(a)
    blocks: list[tuple[int, ...]] = []
    seen = 0
    for x in range(a.size):
        if not seen >> x & 1:
            cls = eq.rows[x]
            seen |= cls
            blocks.append(tuple(_bits(cls)))
    part = Partition(a.size, tuple(blocks))
    return part, [induced(a, block) for block in blocks]


def diameter(a: FinStruct) -> int | None:
    """Largest shortest-path distance in the symmetrized relation.

    ``None`` when the structure is empty or disconnected.
    """
    if a.size == 0:
        return None
    adj = rs_closure(a).rows
    full = (1 << a.size) - 1
    best = 0
    for s in range(a.size):
        reached = 1 << s
        dist = 0
        while reached != full:
            grown = reached
            for x in _bits(reached):
                grown |= adj[x]
            if grown == reached:
                return None  # disconnected
            reached = grown
            dist += 1
        best = max(best, dist)
    return best


def is_poset(a: FinStruct) -> bool:
    """Reflexive, antisymmetric and transitive (interpreted literally)."""
    n = a.size
    rows = a.rows
    for x in range(n):
        if not rows[x] >> x & 1:
            return False
    for x in range(n):
        for y in _bits(rows[x]):
            if y != x and rows[y] >> x & 1:
                return False
            if rows[y] & ~rows[x]:
                return False
    return True


def is_linear(a: FinStruct) -> bool:
    if not is_poset(a):
        return False
    cols = a.columns()
    full = (1 << a.size) - 1
    return all(a.rows[x] | cols[x] == full for x in range(a.size))


def is_antichain(a: FinStruct) -> bool:
    if not is_poset(a):
        return False
    return all(a.rows[x] == 1 << x for x in range(a.size))


def is_tree(a: FinStruct) -> bool:
    """A poset whose principal down-sets are all chains."""
    if not is_poset(a):
        return False
    cols = a.columns()
    for x in range(a.size):
        down = cols[x]
        for z in _bits(down):
            # every other element of the down-set must be comparable to z
            if down & ~(a.rows[z] | cols[z]):
                return False
    return True


def comparability(a: FinStruct) -> FinStruct:
    """Pairs (x, y) with x <= y or y <= x.  Requires a poset."""
    if not is_poset(a):
        raise InputError("comparability requires a partial order")
    cols = a.columns()
    return FinStruct(a.size, tuple(a.rows[x] | cols[x] for x in range(a.size)))


def compatibility(a: FinStruct) -> FinStruct:
    """Pairs (x, y) with some z below both.  Requires a poset."""
    if not is_poset(a):
        raise InputError("compatibility requires a partial order")
    cols = a.columns()
    rows = []
    for x in range(a.size):
        below_x = cols[x]
        row = 0
        for y in range(a.size):
            if below_x & cols[y]:
                row |= 1 << y
        rows.append(row)
    return FinStruct(a.size, tuple(rows))


def root(a: FinStruct) -> int | None:
    """The unique global minimum of a poset, if one exists."""
    if not is_poset(a):
        raise InputError("root requires a partial order")
    full = (1 << a.size) - 1
    for r in range(a.size):
        if a.rows[r] == full:
            return r
    return None


def strip_root(a: FinStruct) -> FinStruct:
    """The induced substructure with the global minimum removed."""
    r = root(a)
    if r is None:
        raise InputError("strip_root requires a structure with a global minimum")
    return induced(a, [x for x in range(a.size) if x != r])


def induced(a: FinStruct, indices) -> FinStruct:
    """Induced substructure on ``indices`` (kept in the given order)."""
    idx = list(indices)
    pos = {v: i for i, v in enumerate(idx)}
    if len(pos) != len(idx):
        raise InputError("induced substructure indices must be distinct")
    rows = []
    for v in idx:
        row = 0
        for y in _bits(a.rows[v]):
            j = pos.get(y)
            if j is not None:
                row |= 1 << j
        rows.append(row)
    return FinStruct(len(idx), tuple(rows))


def relabel(a: FinStruct, perm) -> FinStruct:
    """Apply a permutation: new index ``perm[x]`` plays old ``x``'s role."""
    perm = list(perm)
    if sorted(perm) != list(range(a.size)):
        raise InputError("relabel needs a permutation of the domain")
    rows = [0] * a.size
    for x in range(a.size):
        row = 0
        for y in _bits(a.rows[x]):
            row |= 1 << perm[y]
        rows[perm[x]] = row
    return FinStruct(a.size, tuple(rows), a.name)


# ---------------------------------------------------------------------------
# generators


def chain(n: int, name: str | None = None) -> FinStruct:
    """The reflexive n-element chain 0 <= 1 <= ... <= n-1."""
    if n < 0:
        raise InputError("chain length must be nonnegative")
    full = (1 << n) - 1
    rows = tuple((full >> x) << x for x in range(n))
    return FinStruct(n, rows, name or f"C{n}")


def antichain(n: int, name: str | None = None) -> FinStruct:
    """n reflexive, pairwise unrelated points."""
    if n < 0:
        raise InputError("antichain size must be nonnegative")
    return FinStruct(n, tuple(1 << x for x in range(n)), name or f"A{n}")


def fence(n: int, name: str | None = None) -> FinStruct:
    """Zigzag poset: every odd index lies below its even neighbours.

    ``fence(5)`` is the fixture 1<0, 1<2, 3<2, 3<4 (reflexive).
    """
    if n < 0:
        raise InputError("fence size must be nonnegative")
    pairs = [(x, x) for x in range(n)]
    for x in range(1, n, 2):
        pairs.append((x, x - 1))
        if x + 1 < n:
            pairs.append((x, x + 1))
    return make_struct(n, pairs, name or f"F{n}")


def binary_fan(width: int = 2, name: str | None = None) -> FinStruct:
    """A root below ``width`` pairwise-incomparable points (reflexive).

    Finite truncation of the rooted infinite fan (the tree of sequences of
    length < 2); ``binary_fan()`` is the V poset.
    """
    if width < 0:
        raise InputError("fan width must be nonnegative")
    pairs = [(x, x) for x in range(width + 1)]
    pairs += [(0, x) for x in range(1, width + 1)]
    return make_struct(width + 1, pairs, name or f"fan{width}")


# ---------------------------------------------------------------------------
# JSON interchange: {"name": str?, "size": N, "pairs": [[i, j], ...]}


def struct_to_dict(a: FinStruct) -> dict:
    d: dict = {"size": a.size, "pairs": [[x, y] for x, y in a.pairs()]}
    if a.name is not None:
        d["name"] = a.name
    return d


def struct_from_dict(d: dict) -> FinStruct:
    if not isinstance(d, dict) or "size" not in d or "pairs" not in d:
        raise InputError('structure JSON needs "size" and "pairs"')
    size = d["size"]
    pairs = d["pairs"]
    if not isinstance(size, int) or not isinstance(pairs, list):
        raise InputError("malformed structure JSON")
    name = d.get("name")
    if name is not None and not isinstance(name, str):
        raise InputError("structure name must be a string")
    checked = []
    for p in pairs:
        if not (isinstance(p, (list, tuple)) and len(p) == 2
                and all(isinstance(c, int) for c in p)):
            raise InputError("structure pairs must be two-element integer lists")
        checked.append((p[0], p[1]))
    return make_struct(size, checked, name)
