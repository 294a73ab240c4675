"""Bounded-quantifier-rank elementary equivalence via pebble games.

``ef_equiv(a, b, n)`` decides the n-round back-and-forth game by exhaustive
minimax: the round-0 condition is that the played position (plus equality
pattern) is a partial isomorphism, and memoization is keyed on the position
as ordered pairs together with the remaining round count.  Memo tables are
call-local, so concurrent use is safe.
"""

from __future__ import annotations

from .errors import BudgetError, InputError
from .structures import FinStruct

__all__ = [
    "DEFAULT_EF_SIZE_BUDGET",
    "DEFAULT_EF_ROUNDS_BUDGET",
    "ef_equiv",
    "ef_rank_distinguish",
]

DEFAULT_EF_SIZE_BUDGET = 12
DEFAULT_EF_ROUNDS_BUDGET = 4


def _extends(rows_a, rows_b, pos, x, y) -> bool:
    """Can the pair (x, y) extend ``pos`` to a partial isomorphism?"""
    if (rows_a[x] >> x & 1) != (rows_b[y] >> y & 1):
        return False
    for u, v in pos:
        if (u == x) != (v == y):
            return False
        if (rows_a[x] >> u & 1) != (rows_b[y] >> v & 1):
            return False
        if (rows_a[u] >> x & 1) != (rows_b[v] >> y & 1):
            return False
    return True


def ef_equiv(a: FinStruct, b: FinStruct, rounds: int,
             size_budget: int = DEFAULT_EF_SIZE_BUDGET,
             rounds_budget: int = DEFAULT_EF_ROUNDS_BUDGET) -> bool:
    """True iff the structures agree on all sentences of quantifier rank <= rounds."""
    if rounds < 0:
        raise InputError("round count must be nonnegative")
    if max(a.size, b.size) > size_budget:
        raise BudgetError(f"game solving limited to {size_budget} elements")
    if rounds > rounds_budget:
        raise BudgetError(f"game solving limited to {rounds_budget} rounds")
    rows_a, rows_b = a.rows, b.rows
    na, nb = a.size, b.size
    memo: dict[tuple, bool] = {}

    def duplicator_wins(pos: tuple, r: int) -> bool:
        if r == 0:
            return True
        key = (pos, r)
        hit = memo.get(key)
        if hit is not None:
            return hit
        xs_played = {u for u, _ in pos}
        ys_played = {v for _, v in pos}
        win = True
        # Spoiler plays in a
        for x in range(na):
            if x in xs_played:
                continue  # duplicator replays the partner: dominated move
            for y in range(nb):
                if y in ys_played:
                    continue
                if _extends(rows_a, rows_b, pos, x, y) and \
                        duplicator_wins(tuple(sorted(pos + ((x, y),))), r - 1):
                    break
            else:
                win = False
            if not win:
                break
        if win:
            # Spoiler plays in b
            for y in range(nb):
                if y in ys_played:
                    continue
                for x in range(na):
                    if x in xs_played:
                        continue
                    if _extends(rows_a, rows_b, pos, x, y) and \
                            duplicator_wins(tuple(sorted(pos + ((x, y),))), r - 1):
                        break
                else:
                    win = False
                if not win:
                    break
        memo[key] = win
        return win

    return duplicator_wins((), rounds)


def ef_rank_distinguish(a: FinStruct, b: FinStruct, max_rounds: int,
                        size_budget: int = DEFAULT_EF_SIZE_BUDGET,
                        rounds_budget: int = DEFAULT_EF_ROUNDS_BUDGET) -> int | None:
    """Least n <= max_rounds with the structures not n-equivalent, else None."""
    for n in range(max_rounds + 1):
        if not ef_equiv(a, b, n, size_budget, rounds_budget):
            return n
    return None
