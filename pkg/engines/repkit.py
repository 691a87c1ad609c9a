"""
Fundamental representations of U_q(gl_3) and U_q(sp_4) and their tensor powers.
- TensorOperator: sparse exact matrix on V^{(x)L}, rows/cols indexed by site-code tuples
- fundamental_rep / coproduct / lfold build generator images, words act right to left
- verify_relations checks the defining relations as exact matrix identities
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from engines.algebra import Algebra, as_algebra, config_from_index, config_index
from engines.reports import CheckResult, RelationReport, Witness
from utils.qpoly import ONE, ZERO, LaurentPoly, add_product_into, q_binomial, q_pow

logger = logging.getLogger(__name__)

Rows = Dict[int, Dict[int, LaurentPoly]]
# generator symbols: "e1", "f2", "k1", "k1^-1", or ("k", weight) for k_weight
Symbol = Union[str, Tuple[str, Tuple[int, ...]]]
Word = Sequence[Symbol]


class TensorOperator:
    """Sparse matrix over Q[q, q^-1]; entry (i, j) maps basis j to basis i."""

    __slots__ = ("site_dim", "L", "basis", "_rows")
    ring = "exact"

    def __init__(self, rows: Mapping[int, Mapping[int, LaurentPoly]], site_dim: int, L: int, basis: Optional[str] = None) -> None:
        clean: Rows = {}
        for i, row in rows.items():
            r = {j: v for j, v in row.items() if v}
            if r:
                clean[i] = r
        self._rows = clean
        self.site_dim = site_dim
        self.L = L
        self.basis = basis

    @classmethod
    def _wrap(cls, rows: Rows, like: "TensorOperator") -> "TensorOperator":
        obj = cls.__new__(cls)
        obj._rows = rows
        obj.site_dim, obj.L, obj.basis = like.site_dim, like.L, like.basis
        return obj

    @classmethod
    def identity(cls, site_dim: int, L: int, basis: Optional[str] = None) -> "TensorOperator":
        return cls({i: {i: ONE} for i in range(site_dim ** L)}, site_dim, L, basis)

    @classmethod
    def zero(cls, site_dim: int, L: int, basis: Optional[str] = None) -> "TensorOperator":
        return cls({}, site_dim, L, basis)

    @classmethod
    def diagonal(cls, values: Mapping[int, LaurentPoly], site_dim: int, L: int, basis: Optional[str] = None) -> "TensorOperator":
        return cls({i: {i: v} for i, v in values.items()}, site_dim, L, basis)

    @classmethod
    def from_entries(cls, entries: Iterable[Tuple[int, int, LaurentPoly]], site_dim: int, L: int, basis: Optional[str] = None) -> "TensorOperator":
        rows: Dict[int, Dict[int, LaurentPoly]] = {}
        for i, j, v in entries:
            row = rows.setdefault(i, {})
            row[j] = row.get(j, ZERO) + v
        return cls(rows, site_dim, L, basis)

    # --- access
    @property
    def dim(self) -> int:
        return self.site_dim ** self.L

    def get(self, i: int, j: int) -> LaurentPoly:
        return self._rows.get(i, {}).get(j, ZERO)

    def row(self, i: int) -> Dict[int, LaurentPoly]:
        return dict(self._rows.get(i, {}))

    def entries(self) -> Iterator[Tuple[int, int, LaurentPoly]]:
        for i in sorted(self._rows):
            row = self._rows[i]
            for j in sorted(row):
                yield i, j, row[j]

    @property
    def nnz(self) -> int:
        return sum(len(r) for r in self._rows.values())

    def is_zero(self) -> bool:
        return not self._rows

    def _check_shape(self, other: "TensorOperator") -> None:
        if (self.site_dim, self.L) != (other.site_dim, other.L):
            raise ValueError(f"shape mismatch: {self.site_dim}^{self.L} vs {other.site_dim}^{other.L}")

    # --- arithmetic
    def _combine(self, other: "TensorOperator", sign: int) -> "TensorOperator":
        self._check_shape(other)
        rows: Rows = {i: dict(r) for i, r in self._rows.items()}
        for i, orow in other._rows.items():
            row = rows.setdefault(i, {})
            for j, v in orow.items():
                s = row.get(j, ZERO) + v if sign > 0 else row.get(j, ZERO) - v
                if s:
                    row[j] = s
                else:
                    row.pop(j, None)
            if not row:
                rows.pop(i)
        return TensorOperator._wrap(rows, self)

    def __add__(self, other: "TensorOperator") -> "TensorOperator":
        return self._combine(other, 1)

    def __sub__(self, other: "TensorOperator") -> "TensorOperator":
        return self._combine(other, -1)

    def __neg__(self) -> "TensorOperator":
        return self.scale(LaurentPoly.const(-1))

    def scale(self, c: Union[LaurentPoly, int, Fraction]) -> "TensorOperator":
        c = LaurentPoly.coerce(c)
        if not c:
            return TensorOperator.zero(self.site_dim, self.L, self.basis)
        return TensorOperator._wrap({i: {j: v * c for j, v in r.items()} for i, r in self._rows.items()}, self)

    def exact_div_scalar(self, c: Union[LaurentPoly, int, Fraction]) -> "TensorOperator":
        return TensorOperator._wrap({i: {j: v.exact_div(c) for j, v in r.items()} for i, r in self._rows.items()}, self)

    def map_entries(self, fn) -> "TensorOperator":
        return TensorOperator({i: {j: fn(i, j, v) for j, v in r.items()} for i, r in self._rows.items()},
                              self.site_dim, self.L, self.basis)

    def __matmul__(self, other: "TensorOperator") -> "TensorOperator":
        self._check_shape(other)
        rows: Rows = {}
        orows = other._rows
        for i, row in self._rows.items():
            acc: Dict[int, Dict[int, Fraction]] = {}
            for k, a in row.items():
                brow = orows.get(k)
                if not brow:
                    continue
                for j, b in brow.items():
                    add_product_into(acc.setdefault(j, {}), a, b)
            out = {j: LaurentPoly._wrap(t) for j, t in acc.items() if t}
            if out:
                rows[i] = out
        return TensorOperator._wrap(rows, self)

    def power(self, n: int) -> "TensorOperator":
        out = TensorOperator.identity(self.site_dim, self.L, self.basis)
        for _ in range(n):
            out = out @ self
        return out

    def commutator(self, other: "TensorOperator") -> "TensorOperator":
        return self @ other - other @ self

    def transpose(self) -> "TensorOperator":
        rows: Rows = {}
        for i, r in self._rows.items():
            for j, v in r.items():
                rows.setdefault(j, {})[i] = v
        return TensorOperator._wrap(rows, self)

    def is_symmetric(self) -> bool:
        return self == self.transpose()

    def kron(self, other: "TensorOperator") -> "TensorOperator":
        if self.site_dim != other.site_dim:
            raise ValueError("kron needs equal site dimensions")
        d = other.dim
        rows: Rows = {}
        for i, ra in self._rows.items():
            for k, rb in other._rows.items():
                rows[i * d + k] = {j * d + l: a * b for j, a in ra.items() for l, b in rb.items()}
        return TensorOperator(rows, self.site_dim, self.L + other.L, self.basis)

    def apply(self, vec: Mapping[int, LaurentPoly]) -> Dict[int, LaurentPoly]:
        """Matrix times column vector, both sparse."""
        acc: Dict[int, Dict[int, Fraction]] = {}
        for i, row in self._rows.items():
            for j, a in row.items():
                b = vec.get(j)
                if b:
                    add_product_into(acc.setdefault(i, {}), a, b)
        return {i: LaurentPoly._wrap(t) for i, t in acc.items() if t}

    def __eq__(self, other) -> bool:
        if not isinstance(other, TensorOperator):
            return NotImplemented
        return (self.site_dim, self.L) == (other.site_dim, other.L) and self._rows == other._rows

    __hash__ = None

    def first_difference(self, other: "TensorOperator") -> Optional[Witness]:
        """First entry (row-major) where self and other differ, as a witness of self - other."""
        diff = self - other
        for i, j, v in diff.entries():
            return Witness(row=i, col=j, value=v.to_text())
        return None

    def first_nonzero(self) -> Optional[Witness]:
        for i, j, v in self.entries():
            return Witness(row=i, col=j, value=v.to_text())
        return None

    def to_float(self, q_value: float) -> sparse.csr_matrix:
        n = self.dim
        data, ri, ci = [], [], []
        for i, j, v in self.entries():
            ri.append(i)
            ci.append(j)
            data.append(v.evaluate(q_value))
        return sparse.csr_matrix((np.asarray(data, dtype=float), (ri, ci)), shape=(n, n))

    def __repr__(self) -> str:
        return f"TensorOperator(basis={self.basis}, L={self.L}, dim={self.dim}, nnz={self.nnz})"


# single-site actions: generator -> {source code: target code}
_ACTIONS: Dict[Algebra, Dict[str, Dict[int, int]]] = {
    # codes 0=v3, 1=v1, 2=v2
    Algebra.A2: {
        "e1": {2: 1},
        "e2": {0: 2},
        "f1": {1: 2},
        "f2": {2: 0},
    },
    # codes 0=v3, 1=v2, 2=v4, 3=v1
    Algebra.C2: {
        "e1": {1: 3, 0: 2},
        "e2": {2: 1},
        "f1": {3: 1, 2: 0},
        "f2": {1: 2},
    },
}


@dataclass(frozen=True)
class SiteRep:
    """Single-site matrices of e_i, f_i and the weight table defining k_weight."""

    algebra: Algebra
    gens: Mapping[str, TensorOperator]
    weights: Tuple[Tuple[int, ...], ...]

    @property
    def site_dim(self) -> int:
        return self.algebra.site_dim

    def k_exponent(self, lam: Sequence[int], code: int) -> int:
        return sum(a * b for a, b in zip(lam, self.weights[code]))

    def k(self, lam: Sequence[int]) -> TensorOperator:
        return TensorOperator.diagonal({c: q_pow(self.k_exponent(lam, c)) for c in range(self.site_dim)},
                                       self.site_dim, 1, self.algebra.value)

    def action(self, gen: str) -> Dict[int, int]:
        return _ACTIONS[self.algebra][gen]


@lru_cache(maxsize=None)
def fundamental_rep(alg) -> SiteRep:
    alg = as_algebra(alg)
    d = alg.site_dim
    gens = {
        g: TensorOperator({t: {s: ONE} for s, t in act.items()}, d, 1, alg.value)
        for g, act in _ACTIONS[alg].items()
    }
    return SiteRep(algebra=alg, gens=gens, weights=alg.weights)


def _parse_symbol(alg: Algebra, sym: Symbol) -> Tuple[str, Optional[Tuple[int, ...]], int]:
    """-> (kind, weight, sign) with kind in {e, f, k}; sign flips k to k^-1."""
    if isinstance(sym, tuple):
        tag, lam = sym
        if tag != "k":
            raise ValueError(f"unknown generator symbol {sym!r}")
        return "k", tuple(lam), 1
    if sym in ("e1", "e2", "f1", "f2"):
        return sym, None, 1
    if sym in ("k1", "k2", "k1^-1", "k2^-1"):
        i = int(sym[1])
        return "k", alg.simple_roots[i - 1], -1 if sym.endswith("^-1") else 1
    raise ValueError(f"unknown generator symbol {sym!r}")


def _state_exponents(rep: SiteRep, lam: Sequence[int]) -> List[int]:
    return [rep.k_exponent(lam, c) for c in range(rep.site_dim)]


@lru_cache(maxsize=None)
def _lfold_cached(alg: Algebra, sym: Symbol, L: int) -> TensorOperator:
    rep = fundamental_rep(alg)
    d = rep.site_dim
    kind, lam, sign = _parse_symbol(alg, sym)
    rows: Rows = {}
    if kind == "k":
        ex = _state_exponents(rep, lam)
        for idx in range(d ** L):
            s = config_from_index(idx, d, L)
            rows[idx] = {idx: q_pow(sign * sum(ex[c] for c in s))}
        return TensorOperator(rows, d, L, alg.value)
    i = int(kind[1])
    ex = _state_exponents(rep, alg.simple_roots[i - 1])
    act = rep.action(kind)
    is_e = kind[0] == "e"
    for idx in range(d ** L):
        s = config_from_index(idx, d, L)
        for j, c in enumerate(s):
            t = act.get(c)
            if t is None:
                continue
            # e: k^{(x)j-1} on the left sites; f: k^-1 on the right sites
            e = sum(ex[x] for x in s[:j]) if is_e else -sum(ex[x] for x in s[j + 1:])
            target = idx + (t - c) * d ** (L - 1 - j)
            row = rows.setdefault(target, {})
            row[idx] = row.get(idx, ZERO) + q_pow(e)
    return TensorOperator(rows, d, L, alg.value)


def lfold(rep: SiteRep, gen: Symbol, L: int) -> TensorOperator:
    """L-fold coproduct image: sum_j k^{(x)j-1} (x) e (x) 1 for e, sum_j 1 (x) f (x) k^-1 for f, k^{(x)L} for k."""
    if L < 1:
        raise ValueError(f"L must be at least 1, got {L}")
    if isinstance(gen, list):
        gen = tuple(gen)
    if isinstance(gen, tuple) and gen and gen[0] == "k":
        gen = ("k", tuple(gen[1]))
    return _lfold_cached(rep.algebra, gen, L)


def coproduct(rep: SiteRep, gen: Symbol) -> TensorOperator:
    return lfold(rep, gen, 2)


def site_term(rep: SiteRep, gen: str, j: int, L: int) -> TensorOperator:
    """The j-th summand (1-based) of lfold(rep, gen, L)."""
    if not 1 <= j <= L:
        raise ValueError(f"site {j} outside 1..{L}")
    alg = rep.algebra
    d = rep.site_dim
    i = int(gen[1])
    ex = _state_exponents(rep, alg.simple_roots[i - 1])
    act = rep.action(gen)
    rows: Rows = {}
    for idx in range(d ** L):
        s = config_from_index(idx, d, L)
        c = s[j - 1]
        t = act.get(c)
        if t is None:
            continue
        e = sum(ex[x] for x in s[: j - 1]) if gen[0] == "e" else -sum(ex[x] for x in s[j:])
        rows.setdefault(idx + (t - c) * d ** (L - j), {})[idx] = q_pow(e)
    return TensorOperator(rows, d, L, alg.value)


def word_operator(rep: SiteRep, word: Word, L: int) -> TensorOperator:
    """Image of a word; the rightmost letter acts first."""
    out = TensorOperator.identity(rep.site_dim, L, rep.algebra.value)
    for sym in word:
        out = out @ lfold(rep, sym, L)
    return out


def embed_two_site(op2: TensorOperator, L: int) -> TensorOperator:
    """sum over bonds of 1^{(x)i-1} (x) op2 (x) 1^{(x)L-i-1}."""
    if op2.L != 2:
        raise ValueError("embed_two_site needs a two-site operator")
    d = op2.site_dim
    rows: Dict[int, Dict[int, LaurentPoly]] = {}
    if L < 2:
        return TensorOperator({}, d, L, op2.basis)
    for idx in range(d ** L):
        s = config_from_index(idx, d, L)
        row = rows.setdefault(idx, {})
        for b in range(L - 1):
            pair = s[b] * d + s[b + 1]
            place = d ** (L - 2 - b)
            for j2, v in op2._rows.get(pair, {}).items():
                a2, b2 = divmod(j2, d)
                target = idx + ((a2 - s[b]) * d + (b2 - s[b + 1])) * place
                row[target] = row.get(target, ZERO) + v
    return TensorOperator(rows, d, L, op2.basis)


def basis_vector(alg: Algebra, config: Sequence[int]) -> Dict[int, LaurentPoly]:
    return {config_index(config, alg.site_dim): ONE}


# --- relations

def _serre(rep: SiteRep, x: str, y: str, i: int, j: int, L: int) -> TensorOperator:
    """sum_r (-1)^r [n choose r]_{q_i} x_i^{n-r} x_j x_i^r with n = 1 - a_ij."""
    alg = rep.algebra
    n = 1 - alg.cartan(i, j)
    d = alg.q_exponent(i)
    xi, xj = lfold(rep, f"{x}{i}", L), lfold(rep, f"{y}{j}", L)
    total = TensorOperator.zero(rep.site_dim, L, alg.value)
    for r in range(n + 1):
        coef = q_binomial(n, r).dilate(d) * (-1) ** r
        total = total + (xi.power(n - r) @ xj @ xi.power(r)).scale(coef)
    return total


def verify_relations(rep: SiteRep, L: int) -> RelationReport:
    if L not in (1, 2, 3):
        raise ValueError(f"verify_relations supports L in 1..3, got {L}")
    alg = rep.algebra
    checks: List[CheckResult] = []

    def add(name: str, lhs: TensorOperator, rhs: TensorOperator, informational: bool = False) -> None:
        checks.append(CheckResult.from_witness(name, lhs.first_difference(rhs), informational))

    e = {i: lfold(rep, f"e{i}", L) for i in (1, 2)}
    f = {i: lfold(rep, f"f{i}", L) for i in (1, 2)}
    k = {i: lfold(rep, f"k{i}", L) for i in (1, 2)}
    kinv = {i: lfold(rep, f"k{i}^-1", L) for i in (1, 2)}
    ident = TensorOperator.identity(rep.site_dim, L, alg.value)
    for i in (1, 2):
        add(f"k{i} k{i}^-1 = 1", k[i] @ kinv[i], ident)
        for j in (1, 2):
            a = alg.root_product(i, j)
            add(f"k{i} e{j} = q^{a} e{j} k{i}", k[i] @ e[j], (e[j] @ k[i]).scale(q_pow(a)))
            add(f"k{i} f{j} = q^{-a} f{j} k{i}", k[i] @ f[j], (f[j] @ k[i]).scale(q_pow(-a)))
            if i == j:
                di = alg.q_exponent(i)
                lhs = e[i].commutator(f[i]).scale(q_pow(di) - q_pow(-di))
                add(f"(q_{i} - q_{i}^-1)[e{i},f{i}] = k{i} - k{i}^-1", lhs, k[i] - kinv[i])
            else:
                zero = TensorOperator.zero(rep.site_dim, L, alg.value)
                add(f"[e{i},f{j}] = 0", e[i].commutator(f[j]), zero)
                add(f"serre e{i} e{j}", _serre(rep, "e", "e", i, j, L), zero)
                add(f"serre f{i} f{j}", _serre(rep, "f", "f", i, j, L), zero)
    add("[k1,k2] = 0", k[1] @ k[2], k[2] @ k[1])
    zero = TensorOperator.zero(rep.site_dim, L, alg.value)
    add("[e1,e2] = 0 (printed line, superseded by serre)", e[1].commutator(e[2]), zero, informational=True)
    report = RelationReport(algebra=alg.value, L=L, checks=checks)
    logger.info("relations %s L=%d: %d checks, passed=%s", alg.value, L, len(checks), report.passed)
    return report
