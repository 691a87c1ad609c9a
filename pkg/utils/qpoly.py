"""
Exact arithmetic in Q[q, q^-1].
- LaurentPoly: immutable Laurent polynomial with Fraction coefficients
- LaurentRatio: num/den pair compared by cross-multiplication (no reduction)
- balanced q-integers, q-binomials and brace factorials {n}_r!
"""
from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational
from typing import Dict, Iterable, Iterator, Mapping, Optional, Tuple, Union

from utils.errors import InexactDivisionError

Scalar = Union[int, Fraction]

_TERM = re.compile(r"^(?:(?P<coef>-?\d+(?:/\d+)?)\*)?q(?:\^(?P<exp>-?\d+))?$")
_CONST = re.compile(r"^-?\d+(?:/\d+)?$")


def _accumulate(acc: Dict[int, Fraction], terms: Mapping[int, Fraction], scale: Fraction = Fraction(1), shift: int = 0) -> None:
    for e, c in terms.items():
        k = e + shift
        v = acc.get(k, 0) + c * scale
        if v:
            acc[k] = v
        else:
            acc.pop(k, None)


def add_product_into(acc: Dict[int, Fraction], a: "LaurentPoly", b: "LaurentPoly") -> None:
    """acc += a*b, in place on a raw exponent -> coefficient dict."""
    for ea, ca in a._terms.items():
        for eb, cb in b._terms.items():
            k = ea + eb
            v = acc.get(k, 0) + ca * cb
            if v:
                acc[k] = v
            else:
                acc.pop(k, None)


class LaurentPoly:
    """Finite sum of c_e q^e with rational c_e; zero coefficients are never stored."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Optional[Mapping[int, Scalar]] = None) -> None:
        clean: Dict[int, Fraction] = {}
        for e, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                clean[int(e)] = c
        self._terms = clean
        self._hash: Optional[int] = None

    @classmethod
    def _wrap(cls, clean: Dict[int, Fraction]) -> "LaurentPoly":
        obj = cls.__new__(cls)
        obj._terms = clean
        obj._hash = None
        return obj

    @classmethod
    def monomial(cls, exp: int = 1, coef: Scalar = 1) -> "LaurentPoly":
        return cls({exp: coef})

    @classmethod
    def const(cls, c: Scalar) -> "LaurentPoly":
        return cls({0: c})

    @classmethod
    def coerce(cls, x: Union["LaurentPoly", Scalar]) -> "LaurentPoly":
        if isinstance(x, LaurentPoly):
            return x
        if isinstance(x, (int, Rational)):
            return cls({0: x})
        raise TypeError(f"cannot coerce {type(x).__name__} to LaurentPoly")

    # --- inspection
    def terms(self) -> Dict[int, Fraction]:
        return dict(self._terms)

    def items(self) -> Iterator[Tuple[int, Fraction]]:
        return iter(sorted(self._terms.items()))

    def coeff(self, exp: int) -> Fraction:
        return self._terms.get(exp, Fraction(0))

    @property
    def min_exp(self) -> int:
        return min(self._terms) if self._terms else 0

    @property
    def max_exp(self) -> int:
        return max(self._terms) if self._terms else 0

    def is_zero(self) -> bool:
        return not self._terms

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def is_pure_power(self) -> bool:
        return self.is_monomial() and next(iter(self._terms.values())) == 1

    def is_constant(self) -> bool:
        return not self._terms or set(self._terms) == {0}

    def __bool__(self) -> bool:
        return bool(self._terms)

    # --- ring operations
    def __add__(self, other):
        try:
            other = LaurentPoly.coerce(other)
        except TypeError:
            return NotImplemented
        acc = dict(self._terms)
        _accumulate(acc, other._terms)
        return LaurentPoly._wrap(acc)

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly._wrap({e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        try:
            other = LaurentPoly.coerce(other)
        except TypeError:
            return NotImplemented
        acc = dict(self._terms)
        _accumulate(acc, other._terms, Fraction(-1))
        return LaurentPoly._wrap(acc)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            other = LaurentPoly.coerce(other)
        except TypeError:
            return NotImplemented
        acc: Dict[int, Fraction] = {}
        add_product_into(acc, self, other)
        return LaurentPoly._wrap(acc)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "LaurentPoly":
        if n < 0:
            if not self.is_monomial():
                raise InexactDivisionError(f"negative power of non-monomial {self.to_text()}")
            (e, c), = self._terms.items()
            return LaurentPoly({e * n: c ** n})
        out = ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def shift(self, k: int) -> "LaurentPoly":
        """Multiply by q^k."""
        return LaurentPoly._wrap({e + k: c for e, c in self._terms.items()})

    def dilate(self, d: int) -> "LaurentPoly":
        """Substitute q -> q^d."""
        if d <= 0:
            raise ValueError(f"dilation must be positive, got {d}")
        return LaurentPoly._wrap({e * d: c for e, c in self._terms.items()})

    def __eq__(self, other) -> bool:
        if isinstance(other, LaurentPoly):
            return self._terms == other._terms
        if isinstance(other, (int, Rational)):
            return self._terms == LaurentPoly.const(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            if not self._terms or set(self._terms) == {0}:
                # equal constants hash alike across LaurentPoly, int and Fraction
                self._hash = hash(self._terms.get(0, Fraction(0)))
            else:
                self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # --- division
    def exact_div(self, other: Union["LaurentPoly", Scalar]) -> "LaurentPoly":
        """Quotient self/other; raises InexactDivisionError on a nonzero remainder."""
        other = LaurentPoly.coerce(other)
        if not other:
            raise ZeroDivisionError("division by the zero Laurent polynomial")
        if not self:
            return ZERO
        if other.is_monomial():
            (e, c), = other._terms.items()
            return LaurentPoly._wrap({k - e: v / c for k, v in self._terms.items()})
        # long division on the normalized polynomials a(q), b(q) with b(0) != 0
        amin, bmin = self.min_exp, other.min_exp
        rem = {e - amin: c for e, c in self._terms.items()}
        b = {e - bmin: c for e, c in other._terms.items()}
        db = max(b)
        lead = b[db]
        quot: Dict[int, Fraction] = {}
        while rem and max(rem) >= db:
            top = max(rem)
            c = rem[top] / lead
            quot[top - db] = c
            _accumulate(rem, b, -c, top - db)
        if rem:
            raise InexactDivisionError(f"({self.to_text()}) / ({other.to_text()}) leaves a remainder")
        return LaurentPoly._wrap({e + amin - bmin: c for e, c in quot.items()})

    # --- evaluation
    def evaluate(self, q_value: float) -> float:
        if q_value <= 0:
            raise ValueError(f"q_value must be positive, got {q_value}")
        return float(sum(float(c) * q_value ** e for e, c in self._terms.items()))

    def evaluate_exact(self, q_value: Fraction) -> Fraction:
        q_value = Fraction(q_value)
        if q_value <= 0:
            raise ValueError(f"q_value must be positive, got {q_value}")
        return sum((c * q_value ** e for e, c in self._terms.items()), Fraction(0))

    # --- text / json
    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for e, c in sorted(self._terms.items()):
            if e == 0:
                parts.append(str(c))
            else:
                mono = "q" if e == 1 else f"q^{e}"
                parts.append(mono if c == 1 else f"{c}*{mono}")
        return " + ".join(parts)

    @classmethod
    def from_text(cls, text: str) -> "LaurentPoly":
        text = text.strip()
        if text == "0":
            return ZERO
        acc: Dict[int, Fraction] = {}
        for raw in text.split(" + "):
            term = raw.strip()
            if _CONST.match(term):
                _accumulate(acc, {0: Fraction(term)})
                continue
            m = _TERM.match(term)
            if not m:
                raise ValueError(f"malformed Laurent term: {raw!r}")
            coef = Fraction(m.group("coef")) if m.group("coef") else Fraction(1)
            exp = int(m.group("exp")) if m.group("exp") else 1
            _accumulate(acc, {exp: coef})
        return cls._wrap(acc)

    def to_json(self) -> Dict[str, str]:
        return {str(e): str(c) for e, c in sorted(self._terms.items())}

    @classmethod
    def from_json(cls, data: Mapping[str, str]) -> "LaurentPoly":
        return cls({int(e): Fraction(c) for e, c in data.items()})

    def __repr__(self) -> str:
        return f"LaurentPoly({self.to_text()})"

    def __str__(self) -> str:
        return self.to_text()


ZERO = LaurentPoly()
ONE = LaurentPoly.const(1)
Q = LaurentPoly.monomial(1)


def q_pow(e: int) -> LaurentPoly:
    return LaurentPoly.monomial(e)


def lp_sum(items: Iterable[LaurentPoly]) -> LaurentPoly:
    acc: Dict[int, Fraction] = {}
    for p in items:
        _accumulate(acc, p._terms)
    return LaurentPoly._wrap(acc)


def lp_arith(a: LaurentPoly, b: LaurentPoly, op: str) -> LaurentPoly:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}; expected add, sub or mul")


def lp_eval(p: LaurentPoly, q_value: float) -> float:
    return p.evaluate(q_value)


class LaurentRatio:
    """num/den with den != 0; equality by cross-multiplication."""

    __slots__ = ("num", "den")

    def __init__(self, num: Union[LaurentPoly, Scalar], den: Union[LaurentPoly, Scalar] = 1) -> None:
        self.num = LaurentPoly.coerce(num)
        self.den = LaurentPoly.coerce(den)
        if not self.den:
            raise ZeroDivisionError("LaurentRatio with zero denominator")

    @classmethod
    def coerce(cls, x) -> "LaurentRatio":
        return x if isinstance(x, LaurentRatio) else cls(x)

    def __eq__(self, other) -> bool:
        try:
            other = LaurentRatio.coerce(other)
        except TypeError:
            return NotImplemented
        return self.num * other.den == other.num * self.den

    __hash__ = None  # no canonical form

    def __mul__(self, other) -> "LaurentRatio":
        other = LaurentRatio.coerce(other)
        return LaurentRatio(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LaurentRatio":
        other = LaurentRatio.coerce(other)
        return LaurentRatio(self.num * other.den, self.den * other.num)

    def __add__(self, other) -> "LaurentRatio":
        other = LaurentRatio.coerce(other)
        if self.den == other.den:
            return LaurentRatio(self.num + other.num, self.den)
        return LaurentRatio(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> "LaurentRatio":
        return LaurentRatio(-self.num, self.den)

    def __sub__(self, other) -> "LaurentRatio":
        return self + (-LaurentRatio.coerce(other))

    def is_zero(self) -> bool:
        return not self.num

    def evaluate(self, q_value: float) -> float:
        return self.num.evaluate(q_value) / self.den.evaluate(q_value)

    def to_laurent(self) -> LaurentPoly:
        return self.num.exact_div(self.den)

    def to_text(self) -> str:
        if self.den == ONE:
            return self.num.to_text()
        return f"({self.num.to_text()}) / ({self.den.to_text()})"

    def __repr__(self) -> str:
        return f"LaurentRatio({self.to_text()})"


def q_int_symmetric(n: int) -> LaurentPoly:
    """(n)_q = (q^n - q^-n)/(q - q^-1), built term by term."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    return LaurentPoly({n - 1 - 2 * k: 1 for k in range(n)})


def q_factorial_symmetric(n: int) -> LaurentPoly:
    out = ONE
    for k in range(2, n + 1):
        out = out * q_int_symmetric(k)
    return out


def q_binomial(n: int, m: int) -> LaurentPoly:
    if n < 0 or m < 0:
        raise ValueError(f"q_binomial needs n, m >= 0, got ({n}, {m})")
    if m > n:
        raise ValueError(f"q_binomial needs m <= n, got ({n}, {m})")
    m = min(m, n - m)
    num = ONE
    den = ONE
    for i in range(m):
        num = num * q_int_symmetric(n - i)
        den = den * q_int_symmetric(i + 1)
    return num.exact_div(den)


def q_brace(k: int, r: LaurentPoly) -> LaurentPoly:
    """{k}_r = 1 + r + ... + r^(k-1)."""
    if not r.is_pure_power():
        raise ValueError(f"r must be a pure power of q, got {r.to_text()}")
    (d, _), = r._terms.items()
    return LaurentPoly({d * j: 1 for j in range(k)})


def q_brace_factorial(n: int, r: LaurentPoly) -> LaurentPoly:
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if not r.is_pure_power():
        raise ValueError(f"r must be a pure power of q, got {r.to_text()}")
    out = ONE
    for k in range(2, n + 1):
        out = out * q_brace(k, r)
    return out
