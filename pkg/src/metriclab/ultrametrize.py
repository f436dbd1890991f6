"""Compatible ultrametrics from nested chains, with bi-Holder certificates.

Given a nested chain with trivial head {X} and a separating terminal level,
rho(x, y) = delta of the deepest level whose partition still joins x and y.
The certificate carries the constant K = min{a^(R+eps),
gamma(alpha_m) * delta(alpha_0)^(-p(R+eps))} and checks

    K * rho^(p(R+eps)) <= d <= rho

on every pair. Verification runs in log space so it survives distances far
below float underflow in exact-mode spaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._util import DEFAULT_TOL, as_float, flog
from .errors import (
    CertificateRefused,
    CertificateViolated,
    DistortionBoundsViolated,
    NotSeparating,
)
from .logratio import profile
from .partitions import (
    Partition,
    PartitionChain,
    classify_chain,
    dendrogram_chain,
)
from .spaces import FiniteMetricSpace, is_ultrametric

LOG_SLACK = 1e-9  # tolerance for inequality checks on the log scale


def _safe_exp(x: float) -> float:
    if x < -745:
        return 0.0
    if x > 709:
        return math.inf
    return math.exp(x)


def ensure_trivial_head(space: FiniteMetricSpace, chain: PartitionChain) -> PartitionChain:
    """Prepend {X} when the chain starts with a proper partition."""
    if chain.levels[0].cardinality == 1:
        return chain
    head = Partition.trivial(space.n)
    first_id = int(chain.level_ids[0])
    return PartitionChain.from_partitions(
        space,
        (head,) + chain.levels,
        (None,) + chain.thresholds,
        (first_id - 1,) + chain.level_ids,
    )


def ultrametric_from_chain(space: FiniteMetricSpace, chain: PartitionChain) -> np.ndarray:
    """rho matrix of the chain ultrametric; requires a separating terminal level."""
    chain = ensure_trivial_head(space, chain)
    last = chain.levels[-1]
    for b in last.blocks:
        if len(b) > 1:
            raise NotSeparating((int(b[0]), int(b[1])))
    n = space.n
    rho = np.zeros((n, n), dtype=object if space.exact else float)
    if space.exact:
        rho[:] = Fraction(0)
    prev = chain.levels[0].block_of
    for level in range(1, len(chain.levels)):
        cur = chain.levels[level].block_of
        value = chain.stats[level - 1].delta
        for i in range(n):
            for j in range(i + 1, n):
                if prev[i] == prev[j] and cur[i] != cur[j]:
                    rho[i, j] = rho[j, i] = value
        prev = cur
    rho.setflags(write=False)
    return rho


def ultrametric_space_from_chain(space: FiniteMetricSpace, chain: PartitionChain) -> FiniteMetricSpace:
    rho = ultrametric_from_chain(space, chain)
    return FiniteMetricSpace(space.labels, rho, exact=space.exact, _trusted=True)


def subdominant_ultrametric(space: FiniteMetricSpace) -> FiniteMetricSpace:
    """Single-linkage merge heights: the largest ultrametric below d."""
    chain = dendrogram_chain(space)
    n = space.n
    rho = np.zeros((n, n), dtype=object if space.exact else float)
    if space.exact:
        rho[:] = Fraction(0)
    prev = chain.levels[0].block_of
    for level in range(1, len(chain.levels)):
        cur = chain.levels[level].block_of
        value = chain.thresholds[level]
        for i in range(n):
            for j in range(i + 1, n):
                if prev[i] == prev[j] and cur[i] != cur[j]:
                    rho[i, j] = rho[j, i] = value
        prev = cur
    return FiniteMetricSpace(space.labels, rho, exact=space.exact, _trusted=True)


@dataclass(frozen=True)
class HolderFit:
    """Tightest c1 d1^t <= d2 <= c2 d1^s over all pairs, with s <= t.

    Exponents are the extremal slopes of log d2 against log d1 over pairs
    where both logs are nonzero; pairs touching distance 1 only shape the
    constants.
    """

    s: float
    t: float
    c1: float
    c2: float

    def to_report(self) -> dict:
        return {"s": self.s, "t": self.t, "c1": self.c1, "c2": self.c2}


def _offdiag_pairs(n):
    for i in range(n):
        for j in range(i + 1, n):
            yield i, j


def fit_holder_exponents(d1, d2) -> HolderFit:
    d1 = np.asarray(d1)
    d2 = np.asarray(d2)
    n = d1.shape[0]
    slopes = []
    for i, j in _offdiag_pairs(n):
        u = flog(d1[i, j])
        v = flog(d2[i, j])
        if u < 0 and v < 0:
            slopes.append(v / u)
    if slopes:
        s = min(slopes)
        t = max(slopes)
    else:
        s = t = 1.0
    log_c2 = -math.inf
    log_c1 = math.inf
    for i, j in _offdiag_pairs(n):
        u = flog(d1[i, j])
        v = flog(d2[i, j])
        log_c2 = max(log_c2, v - s * u)
        log_c1 = min(log_c1, v - t * u)
    return HolderFit(s, t, math.exp(log_c1), math.exp(log_c2))


def verify_holder_fit(d1, d2, fit: HolderFit, tol: float = DEFAULT_TOL) -> None:
    """Raise DistortionBoundsViolated unless c1 d1^t <= d2 <= c2 d1^s pairwise."""
    d1 = np.asarray(d1)
    d2 = np.asarray(d2)
    for i, j in _offdiag_pairs(d1.shape[0]):
        u = flog(d1[i, j])
        v = flog(d2[i, j])
        if v > math.log(fit.c2) + fit.s * u + LOG_SLACK:
            raise DistortionBoundsViolated((i, j), "upper bound")
        if v < math.log(fit.c1) + fit.t * u - LOG_SLACK:
            raise DistortionBoundsViolated((i, j), "lower bound")


@dataclass(frozen=True)
class UltrametricCertificate:
    rho: np.ndarray
    p: float
    epsilon: float
    R_est: float
    m_index: int          # chain position of the window start
    m_level_id: int       # external id of that level
    a: float              # decay witness of the chain
    K: float
    log_K: float
    exponent: float       # p * (R_est + epsilon)
    lower_residual: float  # min over pairs of d / rho^exponent; >= K when valid
    upper_residual: float  # max over pairs of d / rho; <= 1 when valid
    lower_sandwich_skipped: bool
    worst_lower_pair: tuple[int, int]
    worst_upper_pair: tuple[int, int]

    def to_report(self) -> dict:
        return {
            "p": self.p,
            "epsilon": self.epsilon,
            "R_est": self.R_est,
            "m_index": self.m_index,
            "m_level_id": self.m_level_id,
            "a": self.a,
            "K": self.K,
            "log_K": self.log_K,
            "exponent": self.exponent,
            "lower_residual": self.lower_residual,
            "upper_residual": self.upper_residual,
            "lower_sandwich_skipped": self.lower_sandwich_skipped,
            "worst_lower_pair": list(self.worst_lower_pair),
            "worst_upper_pair": list(self.worst_upper_pair),
        }


def certificate(space: FiniteMetricSpace, chain: PartitionChain, p: float,
                epsilon: float, tol: float = DEFAULT_TOL) -> UltrametricCertificate:
    """Build rho from the chain and verify both certificate inequalities.

    The window start m is the earliest proper level from which
    delta^(R+eps) < gamma < delta^(R-eps) holds on every later computed
    level; without such a level the certificate is refused rather than
    emitted with invalid constants. For R_est <= eps the upper half of the
    sandwich is vacuous and only the lower half is enforced (flagged).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    chain = ensure_trivial_head(space, chain)
    positive = [st for st in chain.stats if st.delta > 0]
    if len(positive) >= 2:
        report = classify_chain(chain, p, tol=tol)
        witness = report.p_witness
        log_witness = report.log_p_witness
    else:
        # a fully resolved sample with a single scale carries no decay
        # constraint; the witness is vacuous and K uses its second term
        witness = math.inf
        log_witness = math.inf
    if math.isnan(log_witness) or log_witness == -math.inf:
        raise CertificateRefused("chain has no positive decay witness a")
    prof = profile(chain)
    r_est = prof.estimate
    if not math.isfinite(r_est):
        raise CertificateRefused("R estimate is infinite; no finite exponent exists")
    proper = chain.proper_indices()
    skip_lower = r_est <= epsilon
    m_pos = None
    for start_at, idx in enumerate(proper):
        ok = True
        for later in proper[start_at:]:
            log_d = flog(chain.stats[later].delta)
            log_g = flog(chain.stats[later].gamma)
            if not log_g > (r_est + epsilon) * log_d:
                ok = False
                break
            if not skip_lower and not log_g < (r_est - epsilon) * log_d:
                ok = False
                break
        if ok:
            m_pos = idx
            break
    if m_pos is None and not proper:
        with_blocks = [i for i, st in enumerate(chain.stats) if st.cardinality >= 2]
        if not with_blocks:
            raise CertificateRefused("space has a single point; nothing to certify")
        m_pos = with_blocks[-1]
    if m_pos is None:
        raise CertificateRefused(
            "no level index supports delta^(R+eps) < gamma < delta^(R-eps) "
            f"on the computed tail (R_est={r_est}, eps={epsilon})"
        )
    exponent = p * (r_est + epsilon)
    log_delta0 = flog(chain.stats[0].delta)
    log_gamma_m = flog(chain.stats[m_pos].gamma)
    first_term = (r_est + epsilon) * log_witness if math.isfinite(log_witness) else math.inf
    log_k = min(first_term, log_gamma_m - exponent * log_delta0)
    rho = ultrametric_from_chain(space, chain)
    check = is_ultrametric(
        FiniteMetricSpace(space.labels, rho, exact=space.exact, _trusted=True), tol)
    if not check.ok:
        raise CertificateViolated(check.witness, "strong triangle", as_float(check.violation))
    d = space.dist
    worst_low = (math.inf, (0, 0))
    worst_up = (-math.inf, (0, 0))
    for i, j in _offdiag_pairs(space.n):
        if d[i, j] > rho[i, j]:
            raise CertificateViolated((i, j), "d <= rho", as_float(d[i, j] - rho[i, j]))
        log_d = flog(d[i, j])
        log_r = flog(rho[i, j])
        up = log_d - log_r
        if up > worst_up[0]:
            worst_up = (up, (i, j))
        low = log_d - exponent * log_r
        if low < worst_low[0]:
            worst_low = (low, (i, j))
        if low < log_k - LOG_SLACK:
            raise CertificateViolated((i, j), "K rho^exp <= d", low - log_k)
    return UltrametricCertificate(
        rho=rho,
        p=p,
        epsilon=epsilon,
        R_est=r_est,
        m_index=m_pos,
        m_level_id=int(chain.level_ids[m_pos]),
        a=witness,
        K=_safe_exp(log_k),
        log_K=log_k,
        exponent=exponent,
        lower_residual=_safe_exp(worst_low[0]),
        upper_residual=_safe_exp(worst_up[0]),
        lower_sandwich_skipped=skip_lower,
        worst_lower_pair=worst_low[1],
        worst_upper_pair=worst_up[1],
    )
