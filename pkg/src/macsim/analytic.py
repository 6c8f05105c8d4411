"""Single-round collision probability for slotted random backoff.

Each of ``n`` contenders picks one of ``w`` slots uniformly and independently.
The earliest occupied slot wins the medium; the round collides when that
slot was picked by two or more contenders.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class ContentionRound:
    n: int
    w: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one contender, got n={self.n}")
        if self.w < 1:
            raise ValueError(f"need at least one slot, got w={self.w}")


def success_outcomes(n: int, w: int) -> int:
    """Number of the ``w**n`` equally likely outcomes whose minimum slot is unique.

    With the unique winner at slot ``s`` (n ways to pick who), the other
    ``n-1`` contenders must land strictly later: ``(w-1-s)**(n-1)`` ways.
    """
    return n * sum(k ** (n - 1) for k in range(w))


def collision_probability(rnd: ContentionRound, exact: bool = False):
    p = 1 - Fraction(success_outcomes(rnd.n, rnd.w), rnd.w**rnd.n)
    return p if exact else float(p)


def probability_curve(w: int, n_max: int) -> list[tuple[int, float]]:
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    return [(n, collision_probability(ContentionRound(n, w))) for n in range(1, n_max + 1)]
