"""Sign bookkeeping for wedge monomials stored as strictly increasing tuples."""
from __future__ import annotations

from typing import Optional, Sequence, Tuple

Key = Tuple[int, ...]


def sort_sign(seq: Sequence[int]) -> Tuple[int, Optional[Key]]:
    """Sort ``seq`` into increasing order; return (sign, sorted) or (0, None) on repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0, None
    sign = 1
    # insertion sort, counting transpositions
    for i in range(1, len(seq)):
        j = i
        while j > 0 and seq[j - 1] > seq[j]:
            seq[j - 1], seq[j] = seq[j], seq[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(seq)


def wedge(a: Key, b: Key) -> Tuple[int, Optional[Key]]:
    """``e_a ^ e_b = sign * e_out``."""
    if not a:
        return 1, b
    if not b:
        return 1, a
    if set(a) & set(b):
        return 0, None
    # count inversions between the two sorted blocks
    inv = 0
    j = 0
    for x in a:
        while j < len(b) and b[j] < x:
            j += 1
        inv += j
    return (-1 if inv & 1 else 1), tuple(sorted(a + b))


def interior(i: int, a: Key) -> Tuple[int, Optional[Key]]:
    """Left contraction removing index ``i``: sign ``(-1)^position``."""
    try:
        pos = a.index(i)
    except ValueError:
        return 0, None
    return (-1 if pos & 1 else 1), a[:pos] + a[pos + 1:]


def perm_sign(perm: Sequence[int]) -> int:
    sign, _ = sort_sign(perm)
    return sign
