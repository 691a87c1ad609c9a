"""
Duality functions of the two-species processes and their verification.
- A2_self: self-duality of type A2 ASEP, built from S = exp_{q^2}(e1) exp_{q^2}(e2)
- C2_self: self-duality of type C2 ASEP from S = exp_{q^4}(e2)
- C2_to_ASEP: duality between type C2 ASEP and ASEP of type-2 particles, S = exp_{q^4}(e2) exp_{q^2}(e1)
D(eta, xi) is nonzero only if eta dominates xi site by site in the order 0 < 2 < 1.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from engines.algebra import (Algebra, Configuration, check_physical, config_from_index, config_index, config_to_str,
                             content, physical_configs)
from engines.central import lattice_hamiltonian
from engines.groundstate import closed_form_G, counting_stats, exp_base, q_exp_operator
from engines.markov import GeneratorMatrix, constructed_generator, float_generator, restrict_physical
from engines.reports import DualityFailure, DualityReport, ProportionalityReport
from engines.repkit import TensorOperator, fundamental_rep, lfold
from utils.errors import DomainError
from utils.qpoly import ONE, ZERO, LaurentPoly, LaurentRatio, q_pow

logger = logging.getLogger(__name__)

MAX_REPORTED_FAILURES = 20


class Variant(str, Enum):
    A2_SELF = "A2_self"
    C2_SELF = "C2_self"
    C2_TO_ASEP = "C2_to_ASEP"

    @property
    def algebra(self) -> Algebra:
        return Algebra.A2 if self is Variant.A2_SELF else Algebra.C2

    @property
    def recipe(self) -> Tuple[str, ...]:
        """Exponentiated generators, leftmost applied last."""
        return _RECIPES[self]


_RECIPES = {
    Variant.A2_SELF: ("e1", "e2"),
    Variant.C2_SELF: ("e2",),
    Variant.C2_TO_ASEP: ("e2", "e1"),
}


def as_variant(variant) -> Variant:
    try:
        return Variant(variant)
    except ValueError:
        names = ", ".join(v.value for v in Variant)
        raise DomainError(f"unknown duality variant {variant!r}; expected one of {names}") from None


def dual_domain(variant, L: int) -> List[Configuration]:
    variant = as_variant(variant)
    if variant is Variant.C2_TO_ASEP:
        return [c for c in physical_configs(L) if 1 not in c]
    return physical_configs(L)


def _check_pair(variant: Variant, eta: Sequence[int], xi: Sequence[int]) -> Tuple[Configuration, Configuration]:
    eta = check_physical(eta)
    xi = check_physical(xi, len(eta))
    if variant is Variant.C2_TO_ASEP and 1 in xi:
        raise DomainError(f"C2_to_ASEP dual configurations hold type-2 particles only, got {config_to_str(xi)}")
    return eta, xi


def duality_value(variant, eta: Sequence[int], xi: Sequence[int]) -> LaurentPoly:
    variant = as_variant(variant)
    eta, xi = _check_pair(variant, eta, xi)
    exp = 0
    for n, (e, x) in enumerate(zip(eta, xi), start=1):
        if x == 0:
            if variant is Variant.C2_SELF and e != 0:
                return ZERO
            continue
        nl, tl, nr, tr = counting_stats(eta, n)
        if variant is Variant.C2_SELF:
            xl, xtl, _, _ = counting_stats(xi, n)
            if x == 2 and e == 2:
                exp += 2 * (n - 1)
            elif x == 1 and e == 1:
                exp += 2 * (n - 1 + nl + xl)
            elif x == 2 and e == 1:
                exp += 2 * (n - 1 + nl + 2 * xtl - xl)
            else:
                return ZERO
        elif x == 1:
            if e != 1:
                return ZERO
            exp += 2 * tr + 2 * n
        else:
            if e == 0:
                return ZERO
            exp += 2 * nr + 2 * n
    return q_pow(exp)


@dataclass(frozen=True)
class DualityFunction:
    variant: Variant

    def __call__(self, eta: Sequence[int], xi: Sequence[int]) -> LaurentPoly:
        return duality_value(self.variant, eta, xi)

    def domain(self, L: int) -> List[Configuration]:
        return dual_domain(self.variant, L)

    def evaluate(self, eta: Sequence[int], xi: Sequence[int], q_value: float) -> float:
        return self(eta, xi).evaluate(q_value)

    def table(self, L: int) -> TensorOperator:
        return duality_table(self.variant, L)


@lru_cache(maxsize=None)
def _duality_table(variant: Variant, L: int) -> TensorOperator:
    rows: Dict[int, Dict[int, LaurentPoly]] = {}
    dom = dual_domain(variant, L)
    for eta in physical_configs(L):
        row = {config_index(xi, 3): duality_value(variant, eta, xi) for xi in dom}
        rows[config_index(eta, 3)] = row
    return TensorOperator(rows, 3, L, variant.value)


def duality_table(variant, L: int) -> TensorOperator:
    """D over {0,1,2}^L x domain, base-3 indices; columns outside the domain are zero."""
    return _duality_table(as_variant(variant), L)


@dataclass(frozen=True)
class SymmetryOperator:
    variant: Variant
    L: int
    matrix: TensorOperator

    @property
    def recipe(self) -> str:
        return "_".join(f"exp_{g}" for g in self.variant.recipe)

    def commutes_with_hamiltonian(self) -> bool:
        h = lattice_hamiltonian(self.variant.algebra, self.L).matrix
        return (self.matrix @ h) == (h @ self.matrix)

    def column(self, xi: Sequence[int]) -> Dict[int, LaurentPoly]:
        j = config_index(xi, self.matrix.site_dim)
        return {i: row[j] for i, row in self.matrix._rows.items() if j in row}


@lru_cache(maxsize=None)
def _symmetry(variant: Variant, L: int) -> TensorOperator:
    alg = variant.algebra
    rep = fundamental_rep(alg)
    out = TensorOperator.identity(rep.site_dim, L, alg.value)
    for g in variant.recipe:
        out = out @ q_exp_operator(lfold(rep, g, L), exp_base(alg, g))
    return out


def symmetry_matrix(variant, L: int) -> SymmetryOperator:
    variant = as_variant(variant)
    if not 1 <= L <= 6:
        raise ValueError(f"symmetry matrices are built for L in 1..6, got {L}")
    return SymmetryOperator(variant, L, _symmetry(variant, L))


def c2_self_symmetry_entry(eta: Sequence[int], xi: Sequence[int]) -> LaurentPoly:
    """Closed form of exp_{q^4}(e2) on {0,1,2}^L: type 2 of xi promoted to type 1 in eta."""
    exp = 0
    a1 = a2 = 0
    for e, x in zip(eta, xi):
        if e == x:
            pass
        elif x == 2 and e == 1:
            exp += 2 * (a1 - a2)
        else:
            return ZERO
        a1 += x == 1
        a2 += x == 2
    return q_pow(exp)


@lru_cache(maxsize=None)
def _constructed_duality(variant: Variant, L: int) -> TensorOperator:
    s = restrict_physical(_symmetry(variant, L))
    g = {config_index(c, 3): closed_form_G(variant.algebra, c) for c in physical_configs(L)}
    dom = {config_index(c, 3) for c in dual_domain(variant, L)}
    rows: Dict[int, Dict[int, LaurentPoly]] = {}
    for i, j, v in s.entries():
        if j in dom:
            rows.setdefault(i, {})[j] = v.exact_div(g[i] * g[j])
    return TensorOperator(rows, 3, L, variant.value)


def constructed_duality(variant, L: int) -> TensorOperator:
    """G^-1 S G^-1 on {0,1,2}^L x domain."""
    return _constructed_duality(as_variant(variant), L)


def expected_constant(variant, eta_content: Tuple[int, int], xi_content: Tuple[int, int]) -> LaurentPoly:
    """Closed-form D divided by G^-1 S G^-1 on one (eta-content, xi-content) block."""
    variant = as_variant(variant)
    r, rp = xi_content
    if variant is Variant.A2_SELF:
        size = eta_content[0] + eta_content[1]
        return q_pow(2 * (r + rp) + rp * (rp - 1) - r * (size - r - rp))
    if variant is Variant.C2_TO_ASEP:
        return q_pow(rp * (rp + 1))
    return ONE


def _sector_key(eta: Configuration, xi: Configuration) -> str:
    return f"eta{content(eta)}|xi{content(xi)}"


def duality_from_symmetry(variant, L: int) -> ProportionalityReport:
    """Proportionality of G^-1 S G^-1 to the closed form, one constant per content block."""
    variant = as_variant(variant)
    if not 1 <= L <= 4:
        raise ValueError(f"exact proportionality check supports L in 1..4, got {L}")
    built = constructed_duality(variant, L)
    closed = duality_table(variant, L)
    constants: Dict[str, LaurentRatio] = {}
    first_break: Optional[DualityFailure] = None
    for eta in physical_configs(L):
        i = config_index(eta, 3)
        for xi in dual_domain(variant, L):
            j = config_index(xi, 3)
            a, b = built.get(i, j), closed.get(i, j)
            if not a and not b:
                continue
            key = _sector_key(eta, xi)
            ok = bool(a) and bool(b)
            if ok:
                ratio = LaurentRatio(b, a)
                known = constants.setdefault(key, ratio)
                ok = known == ratio and ratio == LaurentRatio(expected_constant(variant, content(eta), content(xi)))
            if not ok and first_break is None:
                first_break = DualityFailure(z=config_to_str(eta), y=config_to_str(xi), lhs=a.to_text(),
                                             rhs=b.to_text())
    report = ProportionalityReport(variant=variant.value, L=L,
                                   constants={k: v.to_text() for k, v in sorted(constants.items())},
                                   first_break=first_break)
    logger.info("proportionality %s L=%d: %d blocks, passed=%s", variant.value, L, len(constants), report.passed)
    return report


def verify_duality_exact(variant, L: int, generator: Optional[GeneratorMatrix] = None) -> DualityReport:
    """Checks L D = D L^T entrywise on {0,1,2}^L x domain."""
    variant = as_variant(variant)
    if not 1 <= L <= 4:
        raise ValueError(f"exact duality check supports L in 1..4, got {L}")
    gen = generator or constructed_generator(variant.algebra, L)
    dtab = duality_table(variant, L)
    num = gen.numerator
    lhs = num @ dtab
    rhs = dtab @ num.transpose()
    dom = dual_domain(variant, L)
    failures: List[DualityFailure] = []
    nfail = 0
    for z in physical_configs(L):
        i = config_index(z, 3)
        for y in dom:
            j = config_index(y, 3)
            a, b = lhs.get(i, j), rhs.get(i, j)
            if a != b:
                nfail += 1
                if len(failures) < MAX_REPORTED_FAILURES:
                    failures.append(DualityFailure(z=config_to_str(z), y=config_to_str(y), lhs=a.to_text(),
                                                   rhs=b.to_text()))
    pairs = 3 ** L * len(dom)
    logger.info("duality %s L=%d exact: %d pairs, %d failures", variant.value, L, pairs, nfail)
    return DualityReport(variant=variant.value, L=L, ring="exact", pairs_checked=pairs, failures=failures)


def duality_array(variant, L: int, q_value: float) -> np.ndarray:
    """Dense float D over base-3 indices."""
    tab = duality_table(variant, L)
    out = np.zeros((3 ** L, 3 ** L))
    for i, j, v in tab.entries():
        out[i, j] = v.evaluate(q_value)
    return out


def verify_duality_float(variant, L: int, q_value: float = 0.5, tol: float = 1e-10) -> DualityReport:
    variant = as_variant(variant)
    if not 2 <= L <= 6:
        raise ValueError(f"float duality check supports L in 2..6, got {L}")
    gen = float_generator(variant.algebra, L, q_value)
    d = duality_array(variant, L, q_value)
    lhs = gen @ d
    rhs = (gen @ d.T).T
    scale = float(np.max(np.abs(d))) or 1.0
    resid = np.abs(lhs - rhs) / scale
    worst = float(resid.max())
    failures: List[DualityFailure] = []
    if worst > tol:
        i, j = np.unravel_index(int(resid.argmax()), resid.shape)
        failures.append(DualityFailure(z=config_to_str(config_from_index(int(i), 3, L)),
                                       y=config_to_str(config_from_index(int(j), 3, L)),
                                       lhs=repr(float(lhs[i, j])), rhs=repr(float(rhs[i, j]))))
    pairs = 3 ** L * len(dual_domain(variant, L))
    logger.info("duality %s L=%d float q=%s: max residual %.3e", variant.value, L, q_value, worst)
    return DualityReport(variant=variant.value, L=L, ring="float", pairs_checked=pairs, failures=failures,
                         max_residual=worst)
