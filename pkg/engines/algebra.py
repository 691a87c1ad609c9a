"""
Algebra tags, root data and the site-state dictionary.
- A2 = U_q(gl_3) on V = span(v1, v2, v3); C2 = U_q(sp_4) on V = span(v1, v2, v4, v3)
- Site codes: 0 empty, 1 type-1 particle, 2 type-2 particle, 3 doubly occupied (C2 only, shown as T)
- Type 1 is the higher-weight occupied state of each algebra
"""
from __future__ import annotations

import itertools
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from utils.errors import DomainError

Configuration = Tuple[int, ...]

TOP = 3
_CODE_CHARS = "012T"


class Algebra(str, Enum):
    A2 = "A2"
    C2 = "C2"

    @property
    def site_dim(self) -> int:
        return 3 if self is Algebra.A2 else 4

    @property
    def simple_roots(self) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        return _SIMPLE_ROOTS[self]

    def root_product(self, i: int, j: int) -> int:
        """(alpha_i, alpha_j), i and j 1-based."""
        a, b = self.simple_roots[i - 1], self.simple_roots[j - 1]
        return sum(x * y for x, y in zip(a, b))

    def q_exponent(self, i: int) -> int:
        """d_i with q_i = q^(d_i)."""
        return self.root_product(i, i) // 2

    def cartan(self, i: int, j: int) -> int:
        return 2 * self.root_product(i, j) // self.root_product(i, i)

    @property
    def vectors(self) -> Tuple[str, ...]:
        """Basis vector name for each site code."""
        return _VECTORS[self]

    @property
    def weights(self) -> Tuple[Tuple[int, ...], ...]:
        """Weight (epsilon coordinates) of each site code."""
        return tuple(_WEIGHT_OF_VECTOR[self][v] for v in self.vectors)

    def code(self, vector: str) -> int:
        try:
            return self.vectors.index(vector)
        except ValueError:
            raise DomainError(f"{vector!r} is not a basis vector of {self.value}") from None


_SIMPLE_ROOTS = {
    Algebra.A2: ((1, -1, 0), (0, 1, -1)),
    Algebra.C2: ((1, -1), (0, 2)),
}

_VECTORS = {
    Algebra.A2: ("v3", "v1", "v2"),
    Algebra.C2: ("v3", "v2", "v4", "v1"),
}

_WEIGHT_OF_VECTOR: Dict[Algebra, Dict[str, Tuple[int, ...]]] = {
    Algebra.A2: {"v1": (1, 0, 0), "v2": (0, 1, 0), "v3": (0, 0, 1)},
    Algebra.C2: {"v1": (1, 0), "v2": (0, 1), "v4": (0, -1), "v3": (-1, 0)},
}


def as_algebra(alg) -> Algebra:
    try:
        return Algebra(alg)
    except ValueError:
        raise DomainError(f"unknown algebra {alg!r}; expected A2 or C2") from None


def encode(alg: Algebra, vectors: Sequence[str]) -> Configuration:
    """('v4', 'v3') -> site codes."""
    return tuple(alg.code(v) for v in vectors)


def config_index(config: Sequence[int], base: int) -> int:
    """Row-major index, site 1 most significant."""
    idx = 0
    for s in config:
        idx = idx * base + s
    return idx


def config_from_index(idx: int, base: int, L: int) -> Configuration:
    out = [0] * L
    for pos in range(L - 1, -1, -1):
        idx, out[pos] = divmod(idx, base)
    return tuple(out)


def all_configs(L: int, base: int = 3) -> Iterator[Configuration]:
    return itertools.product(range(base), repeat=L)


def physical_configs(L: int) -> List[Configuration]:
    """{0,1,2}^L in index order."""
    return list(all_configs(L, 3))


def config_to_str(config: Sequence[int]) -> str:
    return "".join(_CODE_CHARS[s] for s in config)


def parse_config(text: str) -> Configuration:
    try:
        return tuple(_CODE_CHARS.index(ch) for ch in text.strip().upper())
    except ValueError:
        raise DomainError(f"bad configuration {text!r}; use characters 0, 1, 2, T") from None


def occupation(config: Sequence[int]) -> Configuration:
    return tuple(1 if s else 0 for s in config)


def content(config: Sequence[int]) -> Tuple[int, int]:
    """(number of type-1, number of type-2) particles."""
    return sum(1 for s in config if s == 1), sum(1 for s in config if s == 2)


def check_physical(config: Sequence[int], L: Optional[int] = None) -> Configuration:
    config = tuple(config)
    if L is not None and len(config) != L:
        raise DomainError(f"configuration {config_to_str(config)} has length {len(config)}, expected {L}")
    if any(s not in (0, 1, 2) for s in config):
        raise DomainError(f"configuration {config} must lie in {{0,1,2}}^L")
    return config
