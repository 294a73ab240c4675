"""Isomorphism testing, automorphisms, orbit profiles, and cancellation.

Searches are exact backtracking pruned by an iterated neighbourhood
colouring; budgets keep accidental blowups out (``BudgetError``).  Every
witness returned anywhere in this module validates pointwise in both
directions before it leaves.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass

from .errors import BudgetError, InputError, InternalInvariantError
from .structures import (
    FinStruct,
    _bits,
    chain,
    components,
    direct_product,
    disjoint_union_all,
    induced,
    is_poset,
    root,
)

__all__ = [
    "DEFAULT_ISO_BUDGET",
    "DEFAULT_TUPLE_BUDGET",
    "IsoWitness",
    "OrbitProfile",
    "validate_witness",
    "find_iso",
    "automorphisms",
    "orbit_profile",
    "match_components",
    "residual_bijection",
    "cancel_union",
    "extract_linear_downset_part",
    "chain_product_factors",
    "canonical_form",
]

DEFAULT_ISO_BUDGET = 64
DEFAULT_TUPLE_BUDGET = 4096


@dataclass(frozen=True)
class IsoWitness:
    """A bijection as an index array: domain index x maps to ``mapping[x]``."""

    mapping: tuple[int, ...]

    def inverse(self) -> "IsoWitness":
        inv = [0] * len(self.mapping)
        for x, y in enumerate(self.mapping):
            inv[y] = x
        return IsoWitness(tuple(inv))


@dataclass(frozen=True)
class OrbitProfile:
    """``counts[k-1]`` = number of automorphism orbits of k-tuples."""

    counts: tuple[int, ...]


def validate_witness(a: FinStruct, b: FinStruct, w: IsoWitness) -> bool:
    """Pointwise check that ``w`` is an isomorphism from ``a`` onto ``b``."""
    m = w.mapping
    if a.size != b.size or len(m) != a.size:
        return False
    if sorted(m) != list(range(a.size)):
        return False
    for x in range(a.size):
        for y in range(a.size):
            if (a.rows[x] >> y & 1) != (b.rows[m[x]] >> m[y] & 1):
                return False
    return True


def _stable_coloring(a: FinStruct) -> list[int]:
    """Iterated neighbourhood refinement with canonical colour ids.

    Ids are assigned by sorted signature each round, so isomorphic
    structures receive identical colourings.
    """
    n = a.size
    cols = a.columns()
    keys = [
        (a.rows[v] >> v & 1, a.rows[v].bit_count(), cols[v].bit_count())
        for v in range(n)
    ]
    order = {k: i for i, k in enumerate(sorted(set(keys)))}
    colors = [order[k] for k in keys]
    for _ in range(n):
        keys2 = [
            (
                colors[v],
                tuple(sorted(colors[u] for u in _bits(a.rows[v]))),
                tuple(sorted(colors[u] for u in _bits(cols[v]))),
            )
            for v in range(n)
        ]
        order2 = {k: i for i, k in enumerate(sorted(set(keys2)))}
        colors2 = [order2[k] for k in keys2]
        if colors2 == colors:
            break
        colors = colors2
    return colors


def find_iso(a: FinStruct, b: FinStruct,
             budget: int = DEFAULT_ISO_BUDGET) -> IsoWitness | None:
    """Search for an isomorphism from ``a`` to ``b``.

    Returns a validated witness or ``None``; deterministic across runs.
    """
    if max(a.size, b.size) > budget:
        raise BudgetError(f"isomorphism search limited to {budget} elements")
    if a.size != b.size:
        return None
    n = a.size
    if n == 0:
        return IsoWitness(())
    ca = _stable_coloring(a)
    cb = _stable_coloring(b)
    if sorted(ca) != sorted(cb):
        return None
    cand: dict[int, list[int]] = defaultdict(list)
    for w in range(n):
        cand[cb[w]].append(w)
    order = sorted(range(n), key=lambda v: (len(cand[ca[v]]), ca[v], v))
    arows, brows = a.rows, b.rows
    mapping = [-1] * n
    used = [False] * n
    placed: list[int] = []

    def dfs(i: int) -> bool:
        if i == n:
            return True
        v = order[i]
        rv = arows[v]
        loop = rv >> v & 1
        for w in cand[ca[v]]:
            if used[w]:
                continue
            if (brows[w] >> w & 1) != loop:
                continue
            rw = brows[w]
            ok = True
            for u in placed:
                t = mapping[u]
                if (rv >> u & 1) != (rw >> t & 1) or \
                   (arows[u] >> v & 1) != (brows[t] >> w & 1):
                    ok = False
                    break
            if not ok:
                continue
            mapping[v] = w
            used[w] = True
            placed.append(v)
            if dfs(i + 1):
                return True
            placed.pop()
            used[w] = False
            mapping[v] = -1
        return False

    if not dfs(0):
        return None
    wit = IsoWitness(tuple(mapping))
    if not validate_witness(a, b, wit):
        raise InternalInvariantError("isomorphism search produced an invalid witness")
    return wit


def automorphisms(a: FinStruct, budget: int = DEFAULT_ISO_BUDGET) -> list[IsoWitness]:
    """The full automorphism group as explicit maps, identity first."""
    if a.size > budget:
        raise BudgetError(f"automorphism search limited to {budget} elements")
    n = a.size
    colors = _stable_coloring(a)
    cand: dict[int, list[int]] = defaultdict(list)
    for w in range(n):
        cand[colors[w]].append(w)
    rows = a.rows
    mapping = [-1] * n
    used = [False] * n
    found: list[tuple[int, ...]] = []

    def dfs(v: int) -> None:
        if v == n:
            found.append(tuple(mapping))
            return
        rv = rows[v]
        for w in cand[colors[v]]:
            if used[w]:
                continue
            rw = rows[w]
            ok = True
            for u in range(v):
                t = mapping[u]
                if (rv >> u & 1) != (rw >> t & 1) or \
                   (rows[u] >> v & 1) != (rows[t] >> w & 1):
                    ok = False
                    break
            if ok and (rv >> v & 1) == (rw >> w & 1):
                mapping[v] = w
                used[w] = True
                dfs(v + 1)
                used[w] = False
                mapping[v] = -1
        return

    dfs(0)
    found.sort()
    return [IsoWitness(m) for m in found]


def orbit_profile(a: FinStruct, max_k: int,
                  tuple_budget: int = DEFAULT_TUPLE_BUDGET) -> OrbitProfile:
    """Orbit counts of k-tuples (with repetition) for k = 1..max_k."""
    if max_k < 1:
        raise InputError("orbit profile needs max_k >= 1")
    if a.size ** max_k > tuple_budget:
        raise BudgetError(
            f"orbit profile limited to size**max_k <= {tuple_budget}")
    auts = [w.mapping for w in automorphisms(a)]
    counts = []
    for k in range(1, max_k + 1):
        seen: set[tuple[int, ...]] = set()
        orbits = 0
        for t in itertools.product(range(a.size), repeat=k):
            if t in seen:
                continue
            orbits += 1
            for f in auts:
                seen.add(tuple(f[i] for i in t))
        counts.append(orbits)
    return OrbitProfile(tuple(counts))


def match_components(f: IsoWitness, a: FinStruct, b: FinStruct) -> dict[int, int]:
    """The bijection on component indices induced by an isomorphism.

    Any isomorphism maps the component partition onto the component
    partition; the returned dict sends each component index of ``a`` to the
    matching component index of ``b``.
    """
    if not validate_witness(a, b, f):
        raise InputError("match_components requires a valid isomorphism witness")
    part_a, _ = components(a)
    part_b, _ = components(b)
    block_of_b: dict[int, int] = {}
    for j, block in enumerate(part_b.blocks):
        for y in block:
            block_of_b[y] = j
    out: dict[int, int] = {}
    for i, block in enumerate(part_a.blocks):
        images = {block_of_b[f.mapping[x]] for x in block}
        if len(images) != 1:
            raise InternalInvariantError("isomorphism split a connected component")
        j = images.pop()
        if len(part_b.blocks[j]) != len(block):
            raise InternalInvariantError("component image has the wrong size")
        out[i] = j
    return out


def residual_bijection(I, J, K, f: dict, rho: dict) -> dict:
    """Extract a bijection J -> K lying inside ``rho`` from one on I∪J -> I∪K.

    ``f`` must be a bijection from I∪J onto I∪K with ``f`` contained in the
    equivalence ``rho`` (given as an element -> class-label map on I∪J∪K).
    The construction takes the least equivalence relation containing ``f``
    and matches J-points to K-points inside each class in ascending order,
    so the output is deterministic.  With ``I`` finite the classes always
    balance; the returned map is contained in ``rho``.
    """
    I, J, K = set(I), set(J), set(K)
    if I & J or I & K or J & K:
        raise InputError("index sets I, J, K must be pairwise disjoint")
    universe = I | J | K
    if set(f) != I | J or set(f.values()) != I | K or len(set(f.values())) != len(f):
        raise InputError("f must be a bijection from I∪J onto I∪K")
    missing = universe - set(rho)
    if missing:
        raise InputError("rho must label every element of I∪J∪K")
    for s, t in f.items():
        if rho[s] != rho[t]:
            raise InputError(f"f is not contained in rho: {s!r} -> {t!r}")

    # union-find over the pairs of f
    parent: dict = {x: x for x in universe}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s, t in f.items():
        rs, rt = find(s), find(t)
        if rs != rt:
            parent[rs] = rt

    classes: dict = defaultdict(lambda: ([], []))
    for j in J:
        classes[find(j)][0].append(j)
    for k in K:
        classes[find(k)][1].append(k)
    pi: dict = {}
    for js, ks in classes.values():
        if len(js) != len(ks):
            raise InternalInvariantError(
                "closure classes of a finite-I bijection must balance J and K")
        for j, k in zip(sorted(js), sorted(ks)):
            pi[j] = k
    for j, k in pi.items():
        if rho[j] != rho[k]:
            raise InternalInvariantError("extracted bijection escaped rho")
    return pi


def canonical_form(a: FinStruct, budget: int = DEFAULT_ISO_BUDGET) -> bytes:
    """A complete isomorphism invariant: equal bytes iff isomorphic.

    Minimum relation-matrix encoding over the colour-respecting vertex
    orders, found by branch-and-bound on an incremental shell encoding.
    Deterministic across runs; worst case exponential, fine at desk scale.
    """
    if a.size > budget:
        raise BudgetError(f"canonical form limited to {budget} elements")
    n = a.size
    if n == 0:
        return b"0||"
    colors = _stable_coloring(a)
    by_color: dict[int, list[int]] = defaultdict(list)
    for v in range(n):
        by_color[colors[v]].append(v)
    color_seq: list[int] = []
    hist: list[int] = []
    for c in sorted(by_color):
        hist.append(len(by_color[c]))
        color_seq.extend([c] * len(by_color[c]))
    rows = a.rows
    best: list[int | None] = [None] * n
    perm: list[int] = []
    used = [False] * n

    def chunk(v: int) -> int:
        # relation bits between v and the already-placed vertices, then loop
        c = 0
        for u in perm:
            c = c << 2 | (rows[v] >> u & 1) << 1 | (rows[u] >> v & 1)
        return c << 1 | (rows[v] >> v & 1)

    def dfs(p: int) -> None:
        if p == n:
            return
        for v in by_color[color_seq[p]]:
            if used[v]:
                continue
            c = chunk(v)
            cur = best[p]
            if cur is not None and c > cur:
                continue
            if cur is None or c < cur:
                best[p] = c
                for q in range(p + 1, n):
                    best[q] = None
            used[v] = True
            perm.append(v)
            dfs(p + 1)
            perm.pop()
            used[v] = False

    dfs(0)
    body = ",".join(str(c) for c in best)
    return f"{n}|{','.join(map(str, hist))}|{body}".encode()


def cancel_union(a_parts, y: FinStruct, z: FinStruct, f: IsoWitness,
                 budget: int = DEFAULT_ISO_BUDGET) -> IsoWitness:
    """Cancel a finite family of connected summands from a union isomorphism.

    Given connected ``a_parts`` and an isomorphism ``f`` from
    ``(⊍ a_parts) ⊍ y`` onto ``(⊍ a_parts) ⊍ z`` (built with the documented
    renumbering), produce a validated isomorphism from ``y`` onto ``z``.

    The construction follows the finite cancellation argument: decompose
    both unions into components, relate component indices by "same
    isomorphism class" (realized as canonical-form equality), extract the
    residual bijection between y- and z-component indices, then realize it
    component by component.
    """
    a_parts = list(a_parts)
    for i, p in enumerate(a_parts):
        part, _ = components(p)
        if len(part.blocks) != 1:
            raise InputError(f"summand {i} is not connected")
    u1 = disjoint_union_all([*a_parts, y])
    u2 = disjoint_union_all([*a_parts, z])
    if not validate_witness(u1, u2, f):
        raise InputError("f is not an isomorphism between the two unions")

    part_y, comps_y = components(y)
    part_z, comps_z = components(z)
    na = len(a_parts)
    part_u1, _ = components(u1)
    part_u2, _ = components(u2)
    if len(part_u1.blocks) != na + len(comps_y) or \
            len(part_u2.blocks) != na + len(comps_z):
        raise InternalInvariantError("component counts disagree with construction")

    def tag(idx: int, n_parts: int, side: str):
        return ("a", idx) if idx < n_parts else (side, idx - n_parts)

    comp_map = match_components(f, u1, u2)
    g = {tag(i, na, "y"): tag(j, na, "z") for i, j in comp_map.items()}

    structs: dict = {}
    for i, p in enumerate(a_parts):
        structs[("a", i)] = p
    for j, c in enumerate(comps_y):
        structs[("y", j)] = c
    for k, c in enumerate(comps_z):
        structs[("z", k)] = c
    rho = {s: canonical_form(t, budget) for s, t in structs.items()}

    I = [("a", i) for i in range(na)]
    Jt = [("y", j) for j in range(len(comps_y))]
    Kt = [("z", k) for k in range(len(comps_z))]
    pi = residual_bijection(I, Jt, Kt, g, rho)

    mapping = [-1] * y.size
    for j, comp in enumerate(comps_y):
        k = pi[("y", j)][1]
        w = find_iso(comp, comps_z[k], budget)
        if w is None:
            raise InternalInvariantError(
                "residual bijection promised isomorphic components")
        yblock = part_y.blocks[j]
        zblock = part_z.blocks[k]
        for p, parent in enumerate(yblock):
            mapping[parent] = zblock[w.mapping[p]]
    wit = IsoWitness(tuple(mapping))
    if not validate_witness(y, z, wit):
        raise InternalInvariantError("assembled cancellation witness is invalid")
    return wit


def extract_linear_downset_part(p: FinStruct) -> FinStruct:
    """Points whose down-set is a chain, minus the global minimum.

    For a product of rooted trees this is isomorphic to the disjoint union
    of the root-deleted factors.
    """
    if not is_poset(p):
        raise InputError("extract_linear_downset_part requires a partial order")
    r = root(p)
    if r is None:
        raise InputError("extract_linear_downset_part requires a global minimum")
    cols = p.columns()
    keep = []
    for x in range(p.size):
        down = cols[x]
        linear = True
        for z in _bits(down):
            if down & ~(p.rows[z] | cols[z]):
                linear = False
                break
        if linear and x != r:
            keep.append(x)
    return induced(p, keep)


def _factorizations(m: int, cap: int):
    """Non-increasing factor lists (each factor >= 2) with product m."""
    if m == 1:
        yield []
        return
    for d in range(min(m, cap), 1, -1):
        if m % d == 0:
            for rest in _factorizations(m // d, d):
                yield [d] + rest


def chain_product_factors(p: FinStruct,
                          budget: int = DEFAULT_ISO_BUDGET) -> tuple[int, ...] | None:
    """Chain lengths whose grid product is isomorphic to ``p``, if any.

    Trivial length-1 factors are excluded; the empty tuple means ``p`` is a
    single point.  The multiset is unique when it exists.
    """
    if p.size > budget:
        raise BudgetError(f"chain factorization limited to {budget} elements")
    if p.size == 0:
        return None
    for factors in _factorizations(p.size, p.size):
        grid = chain(factors[0]) if factors else chain(1)
        for n in factors[1:]:
            grid = direct_product(grid, chain(n))
        if not factors:
            grid = chain(1)
        if find_iso(p, grid, budget) is not None:
            return tuple(sorted(factors))
    return None
