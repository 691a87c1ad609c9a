"""
q-exponentials of lattice raising operators and the ground-state vectors.
- q_exp_operator: sum_n X^n / {n}_r! with exact division, n from 0
- ground_state: A2 uses exp_{q^2}(e1) exp_{q^2}(e2) on the vacuum; C2 uses exp_{q^4}(e2) exp_{q^2}(e1)
  plus eps times the sum of words e1^i e2^j e1^k (1 <= i <= j <= k <= L) on the vacuum
- closed_form_G: the product formula for the weights on {0,1,2}^L
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

from engines.algebra import (Algebra, Configuration, as_algebra, check_physical, config_from_index, config_index,
                             config_to_str, physical_configs)
from engines.central import lattice_hamiltonian
from engines.reports import CheckResult, ValidationReport
from engines.repkit import SiteRep, TensorOperator, fundamental_rep, lfold, site_term
from utils.errors import NilpotencyError
from utils.qpoly import ONE, ZERO, LaurentPoly, q_brace_factorial, q_pow

logger = logging.getLogger(__name__)

Vector = Dict[int, LaurentPoly]


def exp_base(alg: Algebra, gen: str) -> LaurentPoly:
    """r = q^{(alpha_i, alpha_i)} for the generator's simple root."""
    i = int(gen[1])
    return q_pow(alg.root_product(i, i))


def q_exp_operator(X: TensorOperator, r: LaurentPoly) -> TensorOperator:
    total = TensorOperator.identity(X.site_dim, X.L, X.basis)
    power = TensorOperator.identity(X.site_dim, X.L, X.basis)
    for n in range(1, X.dim + 2):
        power = power @ X
        if power.is_zero():
            return total
        total = total + power.exact_div_scalar(q_brace_factorial(n, r))
    raise NilpotencyError(f"operator on dimension {X.dim} is not nilpotent")


def q_exp_apply(X: TensorOperator, r: LaurentPoly, vec: Mapping[int, LaurentPoly]) -> Vector:
    """exp_r(X) applied to a vector without forming the operator."""
    total: Vector = dict(vec)
    cur: Vector = dict(vec)
    for n in range(1, X.dim + 2):
        cur = X.apply(cur)
        if not cur:
            return {i: v for i, v in total.items() if v}
        fact = q_brace_factorial(n, r)
        for i, v in cur.items():
            total[i] = total.get(i, ZERO) + v.exact_div(fact)
    raise NilpotencyError(f"operator on dimension {X.dim} is not nilpotent")


def pseudofactorized(rep: SiteRep, gen: str, L: int) -> TensorOperator:
    """Ordered product of exp_r over the single-site summands; reversed order for f."""
    r = exp_base(rep.algebra, gen)
    sites = range(1, L + 1) if gen[0] == "e" else range(L, 0, -1)
    out = TensorOperator.identity(rep.site_dim, L, rep.algebra.value)
    for j in sites:
        out = out @ q_exp_operator(site_term(rep, gen, j, L), r)
    return out


def verify_pseudofactorization(alg, gen: str, L: int) -> bool:
    alg = as_algebra(alg)
    if not 1 <= L <= 4:
        raise ValueError(f"pseudo-factorization check supports L in 1..4, got {L}")
    if gen not in ("e1", "e2", "f1", "f2"):
        raise ValueError(f"gen must be one of e1, e2, f1, f2, got {gen!r}")
    rep = fundamental_rep(alg)
    series = q_exp_operator(lfold(rep, gen, L), exp_base(alg, gen))
    ok = series == pseudofactorized(rep, gen, L)
    logger.debug("pseudo-factorization %s %s L=%d: %s", alg.value, gen, L, ok)
    return ok


@dataclass(frozen=True)
class GroundState:
    """g_eps = g0 + eps * g1 over site-code tuples (base site_dim indices)."""

    algebra: Algebra
    L: int
    eps: Fraction
    g0: Mapping[int, LaurentPoly]
    g1: Mapping[int, LaurentPoly] = field(default_factory=dict)

    @property
    def site_dim(self) -> int:
        return self.algebra.site_dim

    def parts(self, config: Sequence[int]) -> Tuple[LaurentPoly, LaurentPoly]:
        i = config_index(config, self.site_dim)
        return self.g0.get(i, ZERO), self.g1.get(i, ZERO)

    def coefficient(self, config: Sequence[int]) -> LaurentPoly:
        a, b = self.parts(config)
        return a + b * self.eps

    def vector(self) -> Vector:
        out: Vector = dict(self.g0)
        if self.eps:
            for i, v in self.g1.items():
                out[i] = out.get(i, ZERO) + v * self.eps
        return {i: v for i, v in out.items() if v}

    def support(self) -> List[Configuration]:
        idx = set(self.g0) | (set(self.g1) if self.eps else set())
        return [config_from_index(i, self.site_dim, self.L) for i in sorted(idx)]

    def to_records(self) -> List[Dict[str, str]]:
        out = []
        for i in sorted(set(self.g0) | set(self.g1)):
            text = self.g0.get(i, ZERO).to_text()
            if i in self.g1:
                text += f" + eps*({self.g1[i].to_text()})"
            out.append({"state": config_to_str(config_from_index(i, self.site_dim, self.L)), "weight": text})
        return out


def _vacuum() -> Vector:
    return {0: ONE}


def _epsilon_part(rep: SiteRep, L: int) -> Vector:
    e1 = lfold(rep, "e1", L)
    e2 = lfold(rep, "e2", L)
    total: Vector = {}
    w = _vacuum()
    for k in range(1, L + 1):
        w = e1.apply(w)
        if not w:
            break
        u = w
        for j in range(1, k + 1):
            u = e2.apply(u)
            if not u:
                break
            v = u
            for _ in range(1, j + 1):
                v = e1.apply(v)
                if not v:
                    break
                for idx, c in v.items():
                    total[idx] = total.get(idx, ZERO) + c
    return {i: c for i, c in total.items() if c}


@lru_cache(maxsize=None)
def _ground_parts(alg: Algebra, L: int) -> Tuple[Vector, Vector]:
    rep = fundamental_rep(alg)
    if alg is Algebra.A2:
        v = q_exp_apply(lfold(rep, "e2", L), exp_base(alg, "e2"), _vacuum())
        return q_exp_apply(lfold(rep, "e1", L), exp_base(alg, "e1"), v), {}
    v = q_exp_apply(lfold(rep, "e1", L), exp_base(alg, "e1"), _vacuum())
    g0 = q_exp_apply(lfold(rep, "e2", L), exp_base(alg, "e2"), v)
    return g0, _epsilon_part(rep, L)


def ground_state(alg, L: int, eps=0) -> GroundState:
    alg = as_algebra(alg)
    if L < 1:
        raise ValueError(f"L must be at least 1, got {L}")
    eps = Fraction(eps)
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    if alg is Algebra.A2 and eps:
        raise ValueError("A2 ground state has no eps correction")
    g0, g1 = _ground_parts(alg, L)
    logger.info("ground state %s L=%d: |supp g0|=%d, |supp g1|=%d", alg.value, L, len(g0), len(g1))
    return GroundState(alg, L, eps, dict(g0), dict(g1))


def counting_stats(config: Sequence[int], i: int) -> Tuple[int, int, int, int]:
    """(N^L, type-1 N^L, N^R, type-1 N^R) at 1-based site i."""
    if not 1 <= i <= len(config):
        raise ValueError(f"site {i} outside 1..{len(config)}")
    left, right = config[: i - 1], config[i:]
    return (sum(1 for s in left if s), sum(1 for s in left if s == 1),
            sum(1 for s in right if s), sum(1 for s in right if s == 1))


def closed_form_G(alg, config: Sequence[int]) -> LaurentPoly:
    alg = as_algebra(alg)
    config = check_physical(config)
    w = -1 if alg is Algebra.A2 else -2
    exp = 0
    seen = 0
    for i, s in enumerate(config, start=1):
        if s:
            exp += 1 - i
            if s == 1:
                exp += w * seen
            seen += 1
    return q_pow(exp)


def g_transform(alg, L: int) -> Dict[Configuration, LaurentPoly]:
    """Closed-form G on every physical configuration."""
    alg = as_algebra(alg)
    return {c: closed_form_G(alg, c) for c in physical_configs(L)}


def annihilated(alg, vec: Mapping[int, LaurentPoly], L: int) -> bool:
    return not lattice_hamiltonian(alg, L).matrix.apply(vec)


def check_ground_state(gs: GroundState, q_samples: Iterable[float] = (0.3, 0.5, 0.9)) -> ValidationReport:
    """A^(L) annihilation of both parts, closed-form agreement and positivity at the samples."""
    alg, L = gs.algebra, gs.L
    q_samples = list(q_samples)
    checks: List[CheckResult] = [
        CheckResult(check_name="A g0 = 0", status="pass" if annihilated(alg, gs.g0, L) else "fail"),
        CheckResult(check_name="A g1 = 0", status="pass" if annihilated(alg, gs.g1, L) else "fail"),
    ]
    mismatch = None
    for c in physical_configs(L):
        got = gs.parts(c)[0]
        want = closed_form_G(alg, c)
        if got != want:
            mismatch = f"{config_to_str(c)}: {got.to_text()} != {want.to_text()}"
            break
    checks.append(CheckResult(check_name="g0 = closed-form G on B1", status="pass" if mismatch is None else "fail",
                              detail=mismatch))
    d = gs.site_dim
    b2 = [config_from_index(i, d, L) for i in gs.g0 if 3 in config_from_index(i, d, L)]
    checks.append(CheckResult(check_name="g0 vanishes on B2", status="pass" if not b2 else "fail",
                              detail=", ".join(config_to_str(c) for c in b2[:3]) or None))
    if alg is Algebra.C2 and gs.eps:
        full = gs.vector()
        missing = [i for i in range(d ** L) if i not in full]
        bad = None
        if missing:
            bad = f"zero at {config_to_str(config_from_index(missing[0], d, L))}"
        else:
            for qv in q_samples:
                low = min(v.evaluate(qv) for v in full.values())
                if low <= 0:
                    bad = f"min {low:.3e} at q={qv}"
                    break
        checks.append(CheckResult(check_name="g_eps > 0 on B", status="pass" if bad is None else "fail", detail=bad))
    return ValidationReport(algebra=alg.value, L=L, checks=checks, q_samples=q_samples)
