"""
Markov generators of the two-species ASEP on {0,1,2}^L with closed boundaries.
- RateTable: the six free jump rates, exact (LaurentRatio) or evaluated (FloatRates)
- reference_generator: sum over bonds of the local rate matrix
- constructed_generator: G^-1 A^(L) G restricted to {0,1,2}^L, normalized by the (0,1)->(1,0) entry
- lumping onto occupation numbers and the single-species ASEP generator
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, fields, replace
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from engines.algebra import (Algebra, Configuration, as_algebra, config_from_index, config_index, config_to_str,
                             content, occupation, physical_configs)
from engines.central import float_hamiltonian, lattice_hamiltonian
from engines.groundstate import closed_form_G, ground_state
from engines.reports import CheckResult, GeneratorReport, ValidationReport, Witness
from engines.repkit import TensorOperator
from utils.errors import ConfigError
from utils.qpoly import ONE, ZERO, LaurentPoly, LaurentRatio, q_pow

logger = logging.getLogger(__name__)

RATE_NAMES: Tuple[str, ...] = ("L10", "R10", "L20", "R20", "L12", "R12")
DEFAULT_Q_SAMPLES: Tuple[float, ...] = (0.3, 0.5, 0.9)


@dataclass(frozen=True)
class FloatRates:
    L10: float
    R10: float
    L20: float
    R20: float
    L12: float
    R12: float

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v) or v < 0:
                raise ConfigError(f"rate {f.name} must be a finite nonnegative number, got {v}")

    def as_dict(self) -> Dict[str, float]:
        return {n: getattr(self, n) for n in RATE_NAMES}


@dataclass(frozen=True)
class RateTable:
    """L(p,0), R(p,0) for p = 1, 2 and the swap rates L(1,2), R(1,2); the other six rates are zero."""

    L10: LaurentRatio
    R10: LaurentRatio
    L20: LaurentRatio
    R20: LaurentRatio
    L12: LaurentRatio
    R12: LaurentRatio

    def get(self, name: str) -> LaurentRatio:
        if name not in RATE_NAMES:
            raise ConfigError(f"unknown rate {name!r}; expected one of {', '.join(RATE_NAMES)}")
        return getattr(self, name)

    def at(self, q_value: float) -> FloatRates:
        return FloatRates(**{n: self.get(n).evaluate(q_value) for n in RATE_NAMES})

    def with_overrides(self, overrides: Mapping[str, object]) -> "RateTable":
        if not overrides:
            return self
        for name in overrides:
            self.get(name)
        return replace(self, **{n: LaurentRatio.coerce(v) for n, v in overrides.items()})

    def as_text(self) -> Dict[str, str]:
        return {n: self.get(n).to_text() for n in RATE_NAMES}


def c2_swap_rate() -> LaurentRatio:
    """a with (q^-4 + q^6) a = q^2 (q^2 + q^-2)^2."""
    s = q_pow(2) + q_pow(-2)
    return LaurentRatio(q_pow(2) * s * s, q_pow(-4) + q_pow(6))


def reference_rates(alg) -> RateTable:
    alg = as_algebra(alg)
    one = LaurentRatio(1)
    right = LaurentRatio(q_pow(-2))
    if alg is Algebra.A2:
        return RateTable(one, right, one, right, one, right)
    a = c2_swap_rate()
    return RateTable(one, right, one, right, a, a * q_pow(-4))


def local_moves(a: int, b: int) -> List[Tuple[Tuple[int, int], str]]:
    """Allowed bond transitions from (a, b) with their rate names."""
    if a == 0 and b in (1, 2):
        return [((b, 0), f"L{b}0")]
    if b == 0 and a in (1, 2):
        return [((0, a), f"R{a}0")]
    if (a, b) == (2, 1):
        return [((1, 2), "L12")]
    if (a, b) == (1, 2):
        return [((2, 1), "R12")]
    return []


@dataclass(frozen=True)
class GeneratorMatrix:
    """numerator / denominator; entry (x, y) is the rate of x -> y, diagonal makes rows sum to zero."""

    L: int
    numerator: TensorOperator
    denominator: LaurentPoly = ONE
    label: str = ""

    @property
    def site_dim(self) -> int:
        return self.numerator.site_dim

    @property
    def dim(self) -> int:
        return self.numerator.dim

    def rate(self, x: Sequence[int], y: Sequence[int]) -> LaurentRatio:
        d = self.site_dim
        return LaurentRatio(self.numerator.get(config_index(x, d), config_index(y, d)), self.denominator)

    def to_float(self, q_value: float) -> sparse.csr_matrix:
        return self.numerator.to_float(q_value) / self.denominator.evaluate(q_value)

    def configs(self) -> List[Configuration]:
        return [config_from_index(i, self.site_dim, self.L) for i in range(self.dim)]


def _common_denominator(rates: RateTable) -> LaurentPoly:
    dens: List[LaurentPoly] = []
    for n in RATE_NAMES:
        d = rates.get(n).den
        if d != ONE and d not in dens:
            dens.append(d)
    out = ONE
    for d in dens:
        out = out * d
    return out


def reference_generator(rates: RateTable, L: int) -> GeneratorMatrix:
    if L < 2:
        raise ValueError(f"reference generator needs L >= 2, got {L}")
    den = _common_denominator(rates)
    nums = {n: rates.get(n).num * den.exact_div(rates.get(n).den) for n in RATE_NAMES}
    rows: Dict[int, Dict[int, LaurentPoly]] = {}
    for idx in range(3 ** L):
        x = config_from_index(idx, 3, L)
        row: Dict[int, LaurentPoly] = {}
        out = ZERO
        for b in range(L - 1):
            for (na, nb), name in local_moves(x[b], x[b + 1]):
                y = x[:b] + (na, nb) + x[b + 2:]
                row[config_index(y, 3)] = nums[name]
                out = out + nums[name]
        row[idx] = -out
        rows[idx] = row
    return GeneratorMatrix(L, TensorOperator(rows, 3, L, "rates"), den, "reference")


def float_reference_generator(rates: FloatRates, L: int) -> sparse.csr_matrix:
    """Float generator for lattices where exact construction is not needed."""
    if L < 2:
        raise ValueError(f"reference generator needs L >= 2, got {L}")
    n = 3 ** L
    r = rates.as_dict()
    ri: List[int] = []
    ci: List[int] = []
    data: List[float] = []
    for idx in range(n):
        x = config_from_index(idx, 3, L)
        out = 0.0
        for b in range(L - 1):
            for (na, nb), name in local_moves(x[b], x[b + 1]):
                y = x[:b] + (na, nb) + x[b + 2:]
                ri.append(idx)
                ci.append(config_index(y, 3))
                data.append(r[name])
                out += r[name]
        ri.append(idx)
        ci.append(idx)
        data.append(-out)
    return sparse.csr_matrix((np.asarray(data), (ri, ci)), shape=(n, n))


def restrict_physical(op: TensorOperator) -> TensorOperator:
    """Rows and columns on {0,1,2}^L, re-indexed in base 3."""
    if op.site_dim == 3:
        return op
    rows: Dict[int, Dict[int, LaurentPoly]] = {}
    for i, j, v in op.entries():
        x = config_from_index(i, op.site_dim, op.L)
        y = config_from_index(j, op.site_dim, op.L)
        if max(x) > 2 or max(y) > 2:
            continue
        rows.setdefault(config_index(x, 3), {})[config_index(y, 3)] = v
    return TensorOperator(rows, 3, op.L, op.basis)


def _normalization_pair(L: int) -> Tuple[Configuration, Configuration]:
    return (0, 1) + (0,) * (L - 2), (1, 0) + (0,) * (L - 2)


@dataclass(frozen=True)
class Construction:
    generator: GeneratorMatrix
    leaks: Tuple[str, ...]


@lru_cache(maxsize=None)
def _construct(alg: Algebra, L: int) -> Construction:
    h = lattice_hamiltonian(alg, L).matrix
    d = alg.site_dim
    if alg is Algebra.A2:
        weight = {i: closed_form_G(alg, config_from_index(i, d, L)) for i in range(d ** L)}
    else:
        weight = dict(ground_state(alg, L).g0)
    leaks: List[str] = []
    rows: Dict[int, Dict[int, LaurentPoly]] = {}
    for i, j, v in h.entries():
        x = config_from_index(i, d, L)
        y = config_from_index(j, d, L)
        if max(x) > 2:
            continue
        gx = weight[i]
        if max(y) > 2:
            # limit of A(x,y) g_eps(y) / g_eps(x) at eps = 0
            if weight.get(j):
                leaks.append(f"{config_to_str(x)}->{config_to_str(y)}: {v.to_text()}")
            continue
        gy = weight.get(j, ZERO)
        if not gy:
            continue
        rows.setdefault(config_index(x, 3), {})[config_index(y, 3)] = (v * gy).exact_div(gx)
    num = TensorOperator(rows, 3, L, alg.value)
    x0, y0 = _normalization_pair(L)
    den = num.get(config_index(x0, 3), config_index(y0, 3))
    logger.info("constructed generator %s L=%d: nnz=%d, normalization %s", alg.value, L, num.nnz, den.to_text())
    return Construction(GeneratorMatrix(L, num, den, f"constructed {alg.value}"), tuple(leaks))


def constructed_generator(alg, L: int) -> GeneratorMatrix:
    alg = as_algebra(alg)
    if L < 2:
        raise ValueError(f"constructed generator needs L >= 2, got {L}")
    return _construct(alg, L).generator


def construction_leaks(alg, L: int) -> Tuple[str, ...]:
    """B1 -> B2 entries that survive eps -> 0."""
    return _construct(as_algebra(alg), L).leaks


def rates_from_generator(gm: GeneratorMatrix) -> RateTable:
    """Read the six bond rates off the first bond."""
    pad = (0,) * (gm.L - 2)
    vals = {}
    for a in range(3):
        for b in range(3):
            for (na, nb), name in local_moves(a, b):
                vals[name] = gm.rate((a, b) + pad, (na, nb) + pad)
    return RateTable(**vals)


def float_generator(alg, L: int, q_value: float) -> sparse.csr_matrix:
    """G^-1 A^(L) G restricted to {0,1,2}^L at a numeric q, normalized like the exact construction."""
    alg = as_algebra(alg)
    if L < 2:
        raise ValueError(f"constructed generator needs L >= 2, got {L}")
    configs = physical_configs(L)
    keep = np.array([config_index(c, alg.site_dim) for c in configs])
    g = np.array([closed_form_G(alg, c).evaluate(q_value) for c in configs])
    h = float_hamiltonian(alg, L, q_value)[keep][:, keep]
    gen = (sparse.diags(1.0 / g) @ h @ sparse.diags(g)).tocsr()
    x0, y0 = _normalization_pair(L)
    norm = gen[config_index(x0, 3), config_index(y0, 3)]
    logger.debug("float generator %s L=%d q=%g: normalization %.6g", alg.value, L, q_value, norm)
    return (gen / norm).tocsr()


def _is_local_move(x: Configuration, y: Configuration) -> bool:
    diff = [k for k in range(len(x)) if x[k] != y[k]]
    if len(diff) != 2 or diff[1] != diff[0] + 1:
        return False
    b = diff[0]
    return (x[b], x[b + 1]) == (y[b + 1], y[b])


def validate_generator(gm: GeneratorMatrix, q_samples: Iterable[float] = DEFAULT_Q_SAMPLES) -> ValidationReport:
    q_samples = list(q_samples)
    num = gm.numerator
    d = gm.site_dim
    row_fail = None
    neg_fail = None
    local_fail = None
    cons_fail = None
    den_vals = [gm.denominator.evaluate(qv) for qv in q_samples]
    for idx in range(gm.dim):
        row = num.row(idx)
        total = ZERO
        for v in row.values():
            total = total + v
        if total and row_fail is None:
            row_fail = Witness(row=idx, col=-1, value=total.to_text())
        x = config_from_index(idx, d, gm.L)
        for j, v in row.items():
            if j == idx:
                continue
            y = config_from_index(j, d, gm.L)
            if local_fail is None and not _is_local_move(x, y):
                local_fail = Witness(row=idx, col=j, value=v.to_text())
            if cons_fail is None and content(x) != content(y):
                cons_fail = Witness(row=idx, col=j, value=v.to_text())
            if neg_fail is None:
                for qv, dv in zip(q_samples, den_vals):
                    if v.evaluate(qv) / dv < 0:
                        neg_fail = Witness(row=idx, col=j, value=f"{v.to_text()} at q={qv}")
                        break
    checks = [
        CheckResult.from_witness("row sums vanish", row_fail),
        CheckResult.from_witness("off-diagonal nonnegative", neg_fail),
        CheckResult.from_witness("single-bond moves only", local_fail),
        CheckResult.from_witness("particle types conserved", cons_fail),
    ]
    report = ValidationReport(algebra=gm.label, L=gm.L, checks=checks, q_samples=q_samples)
    logger.debug("validate %s L=%d: passed=%s", gm.label, gm.L, report.passed)
    return report


def compare_generators(constructed: GeneratorMatrix, reference: GeneratorMatrix) -> Optional[Witness]:
    """First entry where num_c / den_c != num_r / den_r."""
    if (constructed.L, constructed.site_dim) != (reference.L, reference.site_dim):
        raise ValueError("generators live on different state spaces")
    lhs = constructed.numerator.scale(reference.denominator)
    rhs = reference.numerator.scale(constructed.denominator)
    return lhs.first_difference(rhs)


def generator_report(alg, L: int, rates: Optional[RateTable] = None,
                     q_samples: Iterable[float] = DEFAULT_Q_SAMPLES) -> GeneratorReport:
    """Constructed generator against the reference built from rates (default: reference_rates)."""
    alg = as_algebra(alg)
    rates = rates or reference_rates(alg)
    built = constructed_generator(alg, L)
    ref = reference_generator(rates, L)
    checks: List[CheckResult] = list(validate_generator(built, q_samples).checks)
    checks.append(CheckResult.from_witness("reference rates nonnegative",
                                           validate_generator(ref, q_samples).checks[1].first_failure))
    checks.append(CheckResult.from_witness("constructed = reference", compare_generators(built, ref)))
    leaks = list(construction_leaks(alg, L))
    checks.append(CheckResult(check_name="B1 -> B2 entries vanish at eps=0", status="pass" if not leaks else "fail",
                              detail="; ".join(leaks[:3]) or None))
    lump = lump_generator(built)
    checks.append(CheckResult.from_witness(
        "occupation lumping = single-species ASEP",
        lump[1] if lump[0] is None else compare_generators(lump[0], asep_generator(L))))
    return GeneratorReport(algebra=alg.value, L=L, checks=checks,
                           normalization_constant=built.denominator.to_text(), leaks=leaks)


def lump_generator(gm: GeneratorMatrix) -> Tuple[Optional[GeneratorMatrix], Optional[Witness]]:
    """Aggregate rates over occupation patterns; fails with a witness if rows of one pattern disagree."""
    d = gm.site_dim
    lumped: Dict[int, Dict[int, LaurentPoly]] = {}
    for idx in range(gm.dim):
        x = config_from_index(idx, d, gm.L)
        ox = config_index(occupation(x), 2)
        agg: Dict[int, LaurentPoly] = {}
        for j, v in gm.numerator.row(idx).items():
            oy = config_index(occupation(config_from_index(j, d, gm.L)), 2)
            agg[oy] = agg.get(oy, ZERO) + v
        agg = {k: v for k, v in agg.items() if v}
        if ox in lumped:
            if lumped[ox] != agg:
                return None, Witness(row=idx, col=ox, value="rows of one occupation pattern differ")
        else:
            lumped[ox] = agg
    return GeneratorMatrix(gm.L, TensorOperator(lumped, 2, gm.L, "occupation"), gm.denominator, "lumped"), None


def asep_generator(L: int, left: LaurentPoly = ONE, right: Optional[LaurentPoly] = None) -> GeneratorMatrix:
    """Single-species ASEP on {0,1}^L: jump left at rate left, right at rate right (default q^-2)."""
    right = q_pow(-2) if right is None else right
    rows: Dict[int, Dict[int, LaurentPoly]] = {}
    for idx in range(2 ** L):
        x = config_from_index(idx, 2, L)
        row: Dict[int, LaurentPoly] = {}
        out = ZERO
        for b in range(L - 1):
            if (x[b], x[b + 1]) == (0, 1):
                rate = left
            elif (x[b], x[b + 1]) == (1, 0):
                rate = right
            else:
                continue
            y = x[:b] + (x[b + 1], x[b]) + x[b + 2:]
            row[config_index(y, 2)] = rate
            out = out + rate
        row[idx] = -out
        rows[idx] = row
    return GeneratorMatrix(L, TensorOperator(rows, 2, L, "occupation"), ONE, "asep")


def epsilon_sweep(L: int, q_value: float, eps_values: Sequence[float] = (1e-1, 1e-2, 1e-3, 1e-4)) -> List[Tuple[float, float]]:
    """C2 only: max |L_eps - L_0| over B1 x B (normalized), per eps."""
    alg = Algebra.C2
    h = lattice_hamiltonian(alg, L).matrix
    gs = ground_state(alg, L)
    d = alg.site_dim
    g0 = {i: v.evaluate(q_value) for i, v in gs.g0.items()}
    g1 = {i: v.evaluate(q_value) for i, v in gs.g1.items()}
    limit = constructed_generator(alg, L)
    norm = limit.denominator.evaluate(q_value)
    base = limit.to_float(q_value).toarray()
    out: List[Tuple[float, float]] = []
    for eps in eps_values:
        worst = 0.0
        for i, j, v in h.entries():
            x = config_from_index(i, d, L)
            if max(x) > 2:
                continue
            y = config_from_index(j, d, L)
            gx = g0.get(i, 0.0) + eps * g1.get(i, 0.0)
            gy = g0.get(j, 0.0) + eps * g1.get(j, 0.0)
            val = v.evaluate(q_value) * gy / gx / norm
            ref = base[config_index(x, 3), config_index(y, 3)] if max(y) <= 2 else 0.0
            worst = max(worst, abs(val - ref))
        out.append((eps, worst))
        logger.debug("eps sweep L=%d q=%s eps=%g: %.3e", L, q_value, eps, worst)
    return out
