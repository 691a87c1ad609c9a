"""
Continuous-time simulation of the two-species ASEP and exact semigroup action.
- simulate: event-driven (Gillespie) dynamics with closed boundaries, one numpy Generator per trajectory
- run_ensemble: SeedSequence(seed).spawn(n) streams, optional process pool, results in trajectory order
- expm_action: e^{tQ^T} v by uniformization
- mc_duality_check / current_moment_demo: both sides of E_x[D(X_t, y)] = E_y[D(x, Y_t)]
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse, stats

from engines.algebra import Configuration, check_physical, config_index, config_to_str, physical_configs
from engines.duality import Variant, as_variant, duality_value, dual_domain
from engines.markov import (FloatRates, constructed_generator, float_reference_generator, local_moves,
                            rates_from_generator)
from engines.reports import DualityEstimate, MomentReport
from utils.errors import ConfigError, ConvergenceError, DomainError

logger = logging.getLogger(__name__)

Event = Tuple[float, int, int, int]

POISSON_TAIL = 1e-14
MAX_UNIFORM_TERMS = 100_000
# lambda * t per uniformization step, keeps exp(-lambda t) away from underflow
STEP_LOAD = 50.0
EXACT_MAX_L = 6


@dataclass(frozen=True)
class SimConfig:
    L: int
    rates: FloatRates
    initial: Configuration
    t: float
    seed: int = 0
    traj: int = 1

    def __post_init__(self) -> None:
        if self.L < 1:
            raise ConfigError(f"L must be at least 1, got {self.L}")
        try:
            check_physical(self.initial, self.L)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        if not (self.t >= 0 and math.isfinite(self.t)):
            raise ConfigError(f"t must be a finite nonnegative time, got {self.t}")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.traj < 1:
            raise ConfigError(f"traj must be positive, got {self.traj}")


def enabled_moves(config: Sequence[int], rates: FloatRates) -> List[Tuple[int, int, int, float]]:
    """(bond, new left state, new right state, rate) for every move with positive rate."""
    r = rates.as_dict()
    out = []
    for b in range(len(config) - 1):
        for (na, nb), name in local_moves(config[b], config[b + 1]):
            if r[name] > 0:
                out.append((b, na, nb, r[name]))
    return out


def simulate(cfg: SimConfig, rng: Optional[np.random.Generator] = None,
             record: bool = False, max_events: Optional[int] = None) -> Tuple[Configuration, List[Event]]:
    """One trajectory up to time cfg.t; returns the final state and, if record, the site changes."""
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    state = list(cfg.initial)
    events: List[Event] = []
    now = 0.0
    count = 0
    while True:
        moves = enabled_moves(state, cfg.rates)
        if not moves:
            break
        weights = np.fromiter((m[3] for m in moves), dtype=float, count=len(moves))
        total = float(weights.sum())
        now += rng.exponential(1.0 / total)
        if now > cfg.t:
            break
        k = int(np.searchsorted(np.cumsum(weights), rng.random() * total, side="right"))
        b, na, nb, _ = moves[min(k, len(moves) - 1)]
        if record:
            events.append((now, b + 1, state[b], na))
            events.append((now, b + 2, state[b + 1], nb))
        state[b], state[b + 1] = na, nb
        count += 1
        if max_events is not None and count >= max_events:
            break
    return tuple(state), events


def trajectory_seeds(seed: int, n: int) -> List[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n)


def _run_chunk(args: Tuple[SimConfig, List[np.random.SeedSequence]]) -> List[Configuration]:
    cfg, seeds = args
    return [simulate(cfg, np.random.default_rng(s))[0] for s in seeds]


def run_ensemble(cfg: SimConfig, jobs: int = 1,
                 seeds: Optional[List[np.random.SeedSequence]] = None) -> List[Configuration]:
    """Final states of cfg.traj independent trajectories, in trajectory order."""
    seeds = seeds if seeds is not None else trajectory_seeds(cfg.seed, cfg.traj)
    if jobs <= 1 or len(seeds) < 2 * jobs:
        return _run_chunk((cfg, seeds))
    size = math.ceil(len(seeds) / jobs)
    chunks = [(cfg, seeds[k:k + size]) for k in range(0, len(seeds), size)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_run_chunk, chunks))
    return [s for part in parts for s in part]


def mean_stderr(values: Sequence[float]) -> Tuple[float, float]:
    n = len(values)
    if n == 0:
        raise ValueError("no samples")
    if min(values) == max(values):
        return float(values[0]), 0.0
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def expm_action(Q: sparse.spmatrix, v: np.ndarray, t: float, transpose: bool = True) -> np.ndarray:
    """e^{tQ^T} v (or e^{tQ} v) for a generator Q, via uniformization."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    v = np.asarray(v, dtype=float)
    if t == 0:
        return v.copy()
    Q = sparse.csr_matrix(Q)
    lam = float(np.max(-Q.diagonal())) if Q.shape[0] else 0.0
    if lam <= 0:
        return v.copy()
    P = sparse.identity(Q.shape[0], format="csr") + Q / lam
    if transpose:
        P = P.T.tocsr()
    steps = max(1, math.ceil(lam * t / STEP_LOAD))
    mu = lam * t / steps
    out = v
    for _ in range(steps):
        out = _poisson_series(P, out, mu)
    return out


def _poisson_series(P: sparse.csr_matrix, v: np.ndarray, mu: float) -> np.ndarray:
    weight = math.exp(-mu)
    acc = weight * v
    term = v
    mass = weight
    for k in range(1, MAX_UNIFORM_TERMS):
        term = P @ term
        weight *= mu / k
        acc = acc + weight * term
        mass += weight
        if 1.0 - mass < POISSON_TAIL and k > mu:
            return acc
    raise ConvergenceError(f"uniformization did not reach tail {POISSON_TAIL} in {MAX_UNIFORM_TERMS} terms")


def algebra_rates(alg, q_value: float) -> FloatRates:
    """Float rates of the constructed process of an algebra, read off its two-site generator."""
    return rates_from_generator(constructed_generator(alg, 2)).at(q_value)


def process_rates(variant, q_value: float) -> FloatRates:
    """Float rates of the constructed process of the variant's algebra."""
    return algebra_rates(as_variant(variant).algebra, q_value)


def _duality_cache(variant: Variant, q_value: float) -> Callable[[Configuration, Configuration], float]:
    cache: Dict[Tuple[Configuration, Configuration], float] = {}

    def value(eta: Configuration, xi: Configuration) -> float:
        key = (eta, xi)
        if key not in cache:
            cache[key] = duality_value(variant, eta, xi).evaluate(q_value)
        return cache[key]

    return value


def exact_duality_sides(variant, x: Configuration, y: Configuration, t: float, q_value: float) -> Tuple[float, float]:
    """Semigroup values of both sides for small lattices."""
    variant = as_variant(variant)
    L = len(x)
    if L > EXACT_MAX_L:
        raise ValueError(f"exact semigroup values need L <= {EXACT_MAX_L}, got {L}")
    Q = float_reference_generator(process_rates(variant, q_value), L)
    n = 3 ** L
    configs = physical_configs(L)
    D = _duality_cache(variant, q_value)
    ex = np.zeros(n)
    ex[config_index(x, 3)] = 1.0
    ey = np.zeros(n)
    ey[config_index(y, 3)] = 1.0
    px = expm_action(Q, ex, t)
    py = expm_action(Q, ey, t)
    lhs = math.fsum(px[config_index(z, 3)] * D(z, y) for z in configs)
    dom = set(dual_domain(variant, L))
    rhs = math.fsum(py[config_index(w, 3)] * D(x, w) for w in configs if w in dom)
    return lhs, rhs


def mc_duality_check(variant, x: Sequence[int], y: Sequence[int], t: float, n: int, seed: int,
                     q_value: float = 0.5, jobs: int = 1, exact: Optional[bool] = None) -> DualityEstimate:
    variant = as_variant(variant)
    x = check_physical(x)
    y = check_physical(y, len(x))
    if y not in set(dual_domain(variant, len(y))):
        raise DomainError(f"{config_to_str(y)} is outside the dual domain of {variant.value}")
    rates = process_rates(variant, q_value)
    D = _duality_cache(variant, q_value)
    left, right = np.random.SeedSequence(seed).spawn(2)
    start = time.perf_counter()
    fx = run_ensemble(SimConfig(len(x), rates, x, t, seed, n), jobs, left.spawn(n))
    fy = run_ensemble(SimConfig(len(y), rates, y, t, seed, n), jobs, right.spawn(n))
    lm, ls = mean_stderr([D(z, y) for z in fx])
    rm, rs = mean_stderr([D(x, w) for w in fy])
    exact = len(x) <= EXACT_MAX_L if exact is None else exact
    el = er = None
    if exact:
        el, er = exact_duality_sides(variant, x, y, t, q_value)
    logger.info("mc duality %s x=%s y=%s t=%s n=%d: %.6g +- %.2g vs %.6g +- %.2g (%.1fs)", variant.value,
                config_to_str(x), config_to_str(y), t, n, lm, ls, rm, rs, time.perf_counter() - start)
    return DualityEstimate(variant=variant.value, x=config_to_str(x), y=config_to_str(y), t=t, q=q_value,
                           lhs_mean=lm, lhs_stderr=ls, rhs_mean=rm, rhs_stderr=rs, n_lhs=n, n_rhs=n,
                           exact_lhs=el, exact_rhs=er)


def dual_configuration(L: int, sites: Sequence[int], types: Optional[Sequence[int]] = None) -> Configuration:
    """Configuration with particles at the given 1-based sites (type 2 unless types say otherwise)."""
    types = list(types) if types is not None else [2] * len(sites)
    if len(types) != len(sites):
        raise ConfigError("sites and types differ in length")
    if len(set(sites)) != len(sites):
        raise ConfigError(f"sites must be distinct, got {list(sites)}")
    out = [0] * L
    for s, k in zip(sites, types):
        if not 1 <= s <= L:
            raise ConfigError(f"site {s} outside 1..{L}")
        if k not in (1, 2):
            raise ConfigError(f"particle type must be 1 or 2, got {k}")
        out[s - 1] = k
    return tuple(out)


def current_moment_demo(variant, eta0: Sequence[int], sites: Sequence[int], t: float, q_value: float, n: int,
                        seed: int, types: Optional[Sequence[int]] = None, jobs: int = 1) -> MomentReport:
    """E_eta0[D(eta(t), xi)] from the full process and from the r-particle dual."""
    variant = as_variant(variant)
    eta0 = check_physical(eta0)
    if variant is Variant.C2_SELF and not sites:
        # D(eta, empty) vanishes for every nonempty eta
        raise ConfigError("C2_self moment demo needs at least one dual particle")
    xi = dual_configuration(len(eta0), sites, types)
    est = mc_duality_check(variant, eta0, xi, t, n, seed, q_value, jobs)
    return MomentReport(algebra=variant.algebra.value, variant=variant.value, eta0=config_to_str(eta0),
                        xi=config_to_str(xi), r=len(sites), estimate=est, agreement=est.agrees())


def first_event_times(cfg: SimConfig, n: int) -> np.ndarray:
    """Simulated waiting time to the first event from cfg.initial, n independent streams."""
    if not enabled_moves(cfg.initial, cfg.rates):
        raise DomainError(f"no move is enabled from {config_to_str(cfg.initial)}")
    out = np.empty(n)
    for k, s in enumerate(trajectory_seeds(cfg.seed, n)):
        _, events = simulate(cfg, np.random.default_rng(s), record=True, max_events=1)
        if not events:
            raise ConvergenceError(f"no event before t={cfg.t}; use a longer horizon")
        out[k] = events[0][0]
    return out


def waiting_time_ks(cfg: SimConfig, n: int = 2000) -> float:
    """KS p-value of first-event times against Exp(total enabled rate)."""
    total = sum(m[3] for m in enabled_moves(cfg.initial, cfg.rates))
    times = first_event_times(cfg, n)
    return float(stats.kstest(times, "expon", args=(0.0, 1.0 / total)).pvalue)
