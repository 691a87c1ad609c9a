"""
Central elements, the normalized two-site operator A and the lattice Hamiltonian.
- C2: the expanded sp4 Casimir; A = (q - q^-1)^-2 Delta(C - c) with c = q^-8 + q^-2 + q^2 + q^8
- A2: the gl3 element with its Laurent part stored; A = Delta(inner) / (q^2 (q - q^-1)^2)
- The scalar prefactors that are not Laurent polynomials are kept on the side as LaurentRatio
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from engines.algebra import (Algebra, Configuration, all_configs, as_algebra, config_from_index, config_index,
                             config_to_str)
from engines.reports import CheckResult, KernelReport, RelationReport
from engines.repkit import Symbol, TensorOperator, embed_two_site, fundamental_rep, lfold, word_operator
from utils.qpoly import ONE, ZERO, LaurentPoly, LaurentRatio, q_pow

logger = logging.getLogger(__name__)

Term = Tuple[LaurentPoly, Tuple[Symbol, ...]]

# (q - q^-1)^2 and q^2 + q^-2
D = (q_pow(1) - q_pow(-1)) ** 2
S = q_pow(2) + q_pow(-2)
C2_SHIFT = q_pow(-8) + q_pow(-2) + q_pow(2) + q_pow(8)
C2_ON_V = q_pow(-6) + q_pow(-2) + q_pow(2) + q_pow(6)

GENERATORS: Tuple[str, ...] = ("e1", "e2", "f1", "f2", "k1", "k2")


def _k(*lam: int) -> Symbol:
    return ("k", tuple(lam))


def _lin(*pairs) -> List[Term]:
    return [(LaurentPoly.coerce(c), tuple(w)) for c, w in pairs]


def _mul(*factors: List[Term]) -> List[Term]:
    out: List[Term] = [(ONE, ())]
    for fac in factors:
        out = [(c1 * c2, w1 + w2) for c1, w1 in out for c2, w2 in fac]
    return out


def _scaled(c, terms: List[Term]) -> List[Term]:
    c = LaurentPoly.coerce(c)
    return [(c * t, w) for t, w in terms]


@dataclass(frozen=True)
class CentralElement:
    """Linear combination of words; words act right to left."""

    algebra: Algebra
    terms: Tuple[Term, ...]
    prefactor: LaurentRatio

    def image(self, L: int) -> TensorOperator:
        rep = fundamental_rep(self.algebra)
        total = TensorOperator.zero(rep.site_dim, L, self.algebra.value)
        cache: Dict[Tuple[Symbol, ...], TensorOperator] = {}
        for coef, word in self.terms:
            op = cache.get(word)
            if op is None:
                op = cache[word] = word_operator(rep, word, L)
            total = total + op.scale(coef)
        return total


def _c2_element() -> CentralElement:
    q = q_pow
    serre_f = _lin((1, ("f1", "f1", "f2")), (-S, ("f1", "f2", "f1")), (1, ("f2", "f1", "f1")))
    serre_e = _lin((1, ("e1", "e1", "e2")), (-S, ("e1", "e2", "e1")), (1, ("e2", "e1", "e1")))
    terms = _lin(
        (q(-4), [_k(-2, 0)]),
        (q(-2), [_k(0, -2)]),
        (q(4), [_k(2, 0)]),
        (q(2), [_k(0, 2)]),
        (D * q(-3), ["f1", _k(-1, -1), "e1"]),
        (D * q(3), ["f1", _k(1, 1), "e1"]),
        ((q(2) - q(-2)) ** 2, ["f2", "e2"]),
    )
    terms += _scaled(D * q(-1), _mul(
        _lin((q(1), ["f1", "f2"]), (-q(-1), ["f2", "f1"])),
        _lin((1, [_k(-1, 1)])),
        _lin((q(1), ["e2", "e1"]), (-q(-1), ["e1", "e2"])),
    ))
    terms += _scaled(D * q(1), _mul(
        _lin((q(1), ["f2", "f1"]), (-q(-1), ["f1", "f2"])),
        _lin((1, [_k(1, -1)])),
        _lin((q(1), ["e1", "e2"]), (-q(-1), ["e2", "e1"])),
    ))
    terms += _scaled(D, _mul(serre_f, serre_e))
    return CentralElement(Algebra.C2, tuple(terms), LaurentRatio(1))


def _a2_element() -> CentralElement:
    q = q_pow
    terms = _lin(
        (-(q(-2) + 1 + q(6)), []),
        (q(-2), [_k(2, 0, 0)]),
        (1, [_k(0, 2, 0)]),
        (q(2), [_k(0, 0, 2)]),
        (D * q(-1), [_k(1, 1, 0), "e1", "f1"]),
        (D * q(1), [_k(0, 1, 1), "e2", "f2"]),
    )
    terms += _scaled(D * q(1), _mul(
        _lin((1, [_k(1, 0, 1)])),
        _lin((1, ["e1", "e2"]), (-q(-1), ["e2", "e1"])),
        _lin((1, ["f2", "f1"]), (-q(-1), ["f1", "f2"])),
    ))
    return CentralElement(Algebra.A2, tuple(terms), LaurentRatio(1, q(2) * D))


def central_element(alg) -> CentralElement:
    alg = as_algebra(alg)
    return _c2_element() if alg is Algebra.C2 else _a2_element()


def _check_small_L(L: int) -> None:
    if L not in (1, 2, 3):
        raise ValueError(f"exact central checks support L in 1..3, got {L}")


@lru_cache(maxsize=None)
def _central_image(alg: Algebra, L: int) -> TensorOperator:
    op = central_element(alg).image(L)
    logger.info("central %s L=%d: nnz=%d", alg.value, L, op.nnz)
    return op


def build_central(alg, L: int) -> TensorOperator:
    """Image of the central element on V^{(x)L} (A2: the Laurent inner sum, prefactor dropped)."""
    _check_small_L(L)
    return _central_image(as_algebra(alg), L)


@lru_cache(maxsize=None)
def _normalized_A(alg: Algebra) -> TensorOperator:
    c = _central_image(alg, 2)
    if alg is Algebra.C2:
        ident = TensorOperator.identity(4, 2, alg.value)
        return (c - ident.scale(C2_SHIFT)).exact_div_scalar(D)
    return c.exact_div_scalar(q_pow(2) * D)


def normalized_A(alg) -> TensorOperator:
    return _normalized_A(as_algebra(alg))


def a_prefactor(alg) -> LaurentRatio:
    """Scalar omitted from the stored A; for C2 it is q^-2 (q^2 + q^-2)^-2."""
    alg = as_algebra(alg)
    if alg is Algebra.C2:
        return LaurentRatio(q_pow(-2), S * S)
    return LaurentRatio(1)


@dataclass(frozen=True)
class LatticeHamiltonian:
    algebra: Algebra
    L: int
    two_site: TensorOperator
    matrix: TensorOperator

    @property
    def dim(self) -> int:
        return self.matrix.dim


@lru_cache(maxsize=None)
def _lattice_hamiltonian(alg: Algebra, L: int) -> LatticeHamiltonian:
    a = _normalized_A(alg)
    return LatticeHamiltonian(alg, L, a, embed_two_site(a, L))


def lattice_hamiltonian(alg, L: int) -> LatticeHamiltonian:
    if L < 1:
        raise ValueError(f"L must be at least 1, got {L}")
    return _lattice_hamiltonian(as_algebra(alg), L)


def weight_blocks(alg) -> Dict[Tuple[int, ...], List[Configuration]]:
    """Two-site configurations grouped by total weight, in index order."""
    alg = as_algebra(alg)
    wts = alg.weights
    blocks: Dict[Tuple[int, ...], List[Configuration]] = {}
    for cfg in all_configs(2, alg.site_dim):
        w = tuple(a + b for a, b in zip(wts[cfg[0]], wts[cfg[1]]))
        blocks.setdefault(w, []).append(cfg)
    return blocks


def block_matrix(op: TensorOperator, states: Sequence[Configuration]) -> List[List[LaurentPoly]]:
    idx = [config_index(s, op.site_dim) for s in states]
    return [[op.get(i, j) for j in idx] for i in idx]


def row_ratio(op: TensorOperator, first: Configuration, second: Configuration,
              columns: Sequence[Configuration]) -> Optional[LaurentRatio]:
    """c with row(second) = c * row(first) over columns, or None if not proportional."""
    r1 = [op.get(config_index(first, op.site_dim), config_index(c, op.site_dim)) for c in columns]
    r2 = [op.get(config_index(second, op.site_dim), config_index(c, op.site_dim)) for c in columns]
    pivot = next((k for k, v in enumerate(r1) if v), None)
    if pivot is None:
        return None
    ratio = LaurentRatio(r2[pivot], r1[pivot])
    if all(LaurentRatio(b) == ratio * a for a, b in zip(r1, r2)):
        return ratio
    return None


def _preserves_weights(op: TensorOperator, alg: Algebra) -> Optional[str]:
    block_of = {}
    for w, states in weight_blocks(alg).items():
        for s in states:
            block_of[config_index(s, alg.site_dim)] = w
    for i, j, v in op.entries():
        if block_of[i] != block_of[j]:
            return f"({i},{j}) = {v.to_text()}"
    return None


def verify_centrality(alg, L: int) -> RelationReport:
    alg = as_algebra(alg)
    _check_small_L(L)
    rep = fundamental_rep(alg)
    c = build_central(alg, L)
    checks: List[CheckResult] = []
    ops = [("Delta(C)", c)]
    if L >= 2:
        ops.append(("A^(L)", lattice_hamiltonian(alg, L).matrix))
    for name, op in ops:
        for g in GENERATORS:
            x = lfold(rep, g, L)
            checks.append(CheckResult.from_witness(f"[{name}, {g}] = 0", (op @ x).first_difference(x @ op)))
    if L == 1 and alg is Algebra.C2:
        ident = TensorOperator.identity(rep.site_dim, 1, alg.value)
        checks.append(CheckResult.from_witness("C acts as scalar on V", c.first_difference(ident.scale(C2_ON_V))))
    if L == 2:
        a = normalized_A(alg)
        checks.append(CheckResult.from_witness("A symmetric", a.first_difference(a.transpose())))
        bad = _preserves_weights(a, alg)
        checks.append(CheckResult(check_name="A preserves weight blocks", status="pass" if bad is None else "fail",
                                  detail=bad))
    report = RelationReport(algebra=alg.value, L=L, checks=checks)
    logger.info("centrality %s L=%d: passed=%s", alg.value, L, report.passed)
    return report


def float_hamiltonian(alg, L: int, q_value: float) -> sparse.csr_matrix:
    """A^(L) at a numeric q, assembled bond by bond with Kronecker products."""
    alg = as_algebra(alg)
    if L < 1:
        raise ValueError(f"L must be at least 1, got {L}")
    d = alg.site_dim
    a2 = normalized_A(alg).to_float(q_value)
    h = sparse.csr_matrix((d ** L, d ** L))
    for b in range(L - 1):
        left = sparse.identity(d ** b, format="csr")
        right = sparse.identity(d ** (L - b - 2), format="csr")
        h = h + sparse.kron(sparse.kron(left, a2), right, format="csr")
    return h.tocsr()


def verify_centrality_float(alg, L: int, q_value: float = 0.7, tol: float = 1e-10) -> RelationReport:
    """[A^(L), Delta^(L)(g)] at a numeric q, for lattice sizes where exact products get slow."""
    alg = as_algebra(alg)
    rep = fundamental_rep(alg)
    h = float_hamiltonian(alg, L, q_value)
    checks: List[CheckResult] = []
    for g in GENERATORS:
        x = lfold(rep, g, L).to_float(q_value)
        comm = (h @ x - x @ h).tocoo()
        worst = float(np.max(np.abs(comm.data))) if comm.nnz else 0.0
        checks.append(CheckResult(check_name=f"[A^(L), {g}] ~ 0", status="pass" if worst <= tol else "fail",
                                  detail=f"max |entry| = {worst:.3e}"))
    return RelationReport(algebra=alg.value, L=L, checks=checks)


# words applied to the two-site vacuum; the 0-eigenspace of A contains their span
KERNEL_WORDS: Tuple[Tuple[str, ...], ...] = (
    (),
    ("e1",),
    ("e1", "e1"),
    ("e2", "e1"),
    ("e2", "e1", "e1"),
    ("e1", "e2", "e1"),
    ("e1", "e1", "e2", "e1"),
    ("e2", "e1", "e2", "e1"),
    ("e1", "e2", "e1", "e2", "e1"),
    ("e1", "e1", "e2", "e1", "e2", "e1"),
)

RANK_Q = Fraction(3, 7)


def exact_rank(rows: List[List[Fraction]]) -> int:
    m = [list(r) for r in rows]
    rank = 0
    ncols = len(m[0]) if m else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        p = m[rank][col]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col] / p
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank


def kernel_vectors(alg=Algebra.C2) -> List[Dict[int, LaurentPoly]]:
    alg = as_algebra(alg)
    rep = fundamental_rep(alg)
    vac = {0: ONE}
    return [word_operator(rep, w, 2).apply(vac) for w in KERNEL_WORDS]


def kernel_probe(alg=Algebra.C2) -> KernelReport:
    alg = as_algebra(alg)
    if alg is not Algebra.C2:
        raise ValueError("kernel_probe is defined for C2 only")
    a = normalized_A(alg)
    vecs = kernel_vectors(alg)
    checks: List[CheckResult] = []
    for word, v in zip(KERNEL_WORDS, vecs):
        name = "".join(word) or "vacuum"
        out = a.apply(v)
        wit = None
        if out:
            i = min(out)
            wit = {"row": i, "col": 0, "value": out[i].to_text()}
        checks.append(CheckResult(check_name=f"A {name}(v3 v3) = 0", status="pass" if not out else "fail",
                                  first_failure=wit))
        if not v:
            checks.append(CheckResult(check_name=f"{name}(v3 v3) nonzero", status="fail"))
    dim = a.dim
    rows = [[v.get(i, ZERO).evaluate_exact(RANK_Q) for i in range(dim)] for v in vecs]
    rank = exact_rank(rows)
    checks.append(CheckResult(check_name="kernel vectors independent", status="pass" if rank == len(vecs) else "fail",
                              detail=f"rank {rank} of {len(vecs)}"))
    return KernelReport(algebra=alg.value, L=2, checks=checks, vectors=len(vecs), rank=rank)


def describe_vector(alg, vec: Dict[int, LaurentPoly], L: int) -> Dict[str, str]:
    alg = as_algebra(alg)
    return {config_to_str(config_from_index(i, alg.site_dim, L)): v.to_text() for i, v in sorted(vec.items())}
