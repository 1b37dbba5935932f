"""Comparison machinery behind the blowup argument.

Psi(s) = int_0^s (int u v - int u ln u) dt + (F0 + ell) s is accumulated
along a run. Its derivative is bounded below by ell while the energy stays
below F0, and a superlinear integral inequality then forces Psi above the
explicit supersolution

    Phi' = k (1 + s)^(-1/theta) Phi^(1/theta),  Phi(1) = ell,
    k = C^(-1/theta) (m + A + 1)^(-2/theta),

which reaches infinity at a finite time T(m, A). C and theta are not
explicit, so every evaluator here takes user-supplied values and the
integral inequality is reported as a ratio, never asserted.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Union

from scipy.optimize import brentq

from ..exceptions import ConstraintViolated, DomainError
from ..models.records import EnergyRecord
from ..models.state import DEFAULT_U_FLOOR, ModelParams, SolutionState
from .functionals import cross_term, entropy_integral

logger = logging.getLogger(__name__)

CHAIN_SLACK = 1e-6
FD_STEP = 1e-5


class Diverged:
    """Result of a closed form evaluated at or beyond its blowup time."""

    _instance: Optional["Diverged"] = None

    def __new__(cls) -> "Diverged":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "inf"

    __str__ = __repr__

    def __float__(self) -> float:
        return math.inf

    def __reduce__(self) -> str:
        return "DIVERGED"


DIVERGED = Diverged()

MaybeDiverged = Union[float, Diverged]


def is_diverged(value: object) -> bool:
    return value is DIVERGED


@dataclass(frozen=True)
class InequalityMonitorConfig:
    """
    User stand-ins for the non-explicit constants of the integral inequality.

    Attributes:
        theta: Exponent in (0, 1); see ``default_theta``
        C_user: Positive constant C
        m_tilde: Mass bound of the admissible set
        A: Regularity bound of the admissible set
    """
    theta: float
    C_user: float = 1.0
    m_tilde: float = 1.0
    A: float = 1.0

    def __post_init__(self) -> None:
        _check_constants(self.C_user, self.theta, self.m_tilde, self.A)

    @property
    def M(self) -> float:
        return self.m_tilde + self.A + 1.0


def _check_constants(C: float, theta: float, m_tilde: float, A: float) -> None:
    if not 0.0 < theta < 1.0:
        raise DomainError("theta must lie in (0, 1)", details={"theta": theta})
    if not (C > 0 and m_tilde > 0 and A > 0):
        raise DomainError(
            "C, m_tilde and A must be positive",
            details={"C": C, "m_tilde": m_tilde, "A": A}
        )


def default_theta(dim: int, kappa: float) -> float:
    """max{(n+3)/(n+4), 1 - 1/(2 kappa - n)}, the second entry only when 2 kappa - n > 1."""
    theta = (dim + 3.0) / (dim + 4.0)
    spread = 2.0 * kappa - dim
    if spread > 1.0:
        theta = max(theta, 1.0 - 1.0 / spread)
    return theta


def ell_threshold(C: float, theta: float, m_tilde: float, A: float) -> float:
    """Lower bound 2 C^(1/(1-theta)) (m + A + 1)^(2/(1-theta)) + 1 that ell must exceed."""
    _check_constants(C, theta, m_tilde, A)
    M = m_tilde + A + 1.0
    return 2.0 * C ** (1.0 / (1.0 - theta)) * M ** (2.0 / (1.0 - theta)) + 1.0


def energy_threshold(ell: float, volume: float) -> float:
    """K = ell + |Omega| / e; initial energies below -K start the blowup argument."""
    return ell + volume / math.e


def _rate(C: float, theta: float, m_tilde: float, A: float) -> float:
    M = m_tilde + A + 1.0
    return C ** (-1.0 / theta) * M ** (-2.0 / theta)


def phi_bracket(s: float, ell: float, C: float, theta: float, m_tilde: float, A: float) -> float:
    """
    Normalised bracket 1 + k ell^(-p) ((1+s)^p - 2^p), p = (theta-1)/theta.

    Phi(s) = ell * bracket^(1/p); the bracket is 1 at s = 1, decreases in s
    and its root is the blowup time T(m, A).
    """
    _check_constants(C, theta, m_tilde, A)
    p = (theta - 1.0) / theta
    k = _rate(C, theta, m_tilde, A)
    return 1.0 + k * ell ** (-p) * ((1.0 + s) ** p - 2.0 ** p)


def phi_closed_form(s: float, ell: float, C: float, theta: float,
                    m_tilde: float, A: float) -> MaybeDiverged:
    """
    Closed-form solution Phi(s) of the comparison ODE with Phi(1) = ell.

    Returns ``DIVERGED`` once the bracket is no longer positive.

    Raises:
        DomainError: s < 1 or invalid constants
    """
    if s < 1.0:
        raise DomainError("Phi is defined for s >= 1", details={"s": s})
    if not ell > 0:
        raise DomainError("ell must be positive", details={"ell": ell})
    bracket = phi_bracket(s, ell, C, theta, m_tilde, A)
    if bracket <= 0.0:
        return DIVERGED
    p = (theta - 1.0) / theta
    return ell * bracket ** (1.0 / p)


def phi_ode_rhs(s: float, phi: float, C: float, theta: float, m_tilde: float, A: float) -> float:
    """k (1 + s)^(-1/theta) Phi^(1/theta)."""
    return _rate(C, theta, m_tilde, A) * (1.0 + s) ** (-1.0 / theta) * phi ** (1.0 / theta)


def blowup_time_bound(ell: float, C: float, theta: float, m_tilde: float, A: float) -> float:
    """
    T(m, A) = (2^p - C^(1/theta) (m+A+1)^(2/theta) ell^p)^(1/p) - 1, p = (theta-1)/theta.

    Raises:
        ConstraintViolated: ell does not exceed ``ell_threshold``
    """
    threshold = ell_threshold(C, theta, m_tilde, A)
    if not ell > threshold:
        raise ConstraintViolated(
            "ell must exceed 2 C^(1/(1-theta)) (m_tilde+A+1)^(2/(1-theta)) + 1",
            details={"ell": ell, "threshold": threshold}
        )
    p = (theta - 1.0) / theta
    M = m_tilde + A + 1.0
    gap = 2.0 ** p - C ** (1.0 / theta) * M ** (2.0 / theta) * ell ** p
    return gap ** (1.0 / p) - 1.0


def phi_bracket_root(ell: float, C: float, theta: float, m_tilde: float, A: float) -> float:
    """Root of ``phi_bracket`` located numerically (independent of ``blowup_time_bound``)."""
    if phi_bracket(1.0, ell, C, theta, m_tilde, A) <= 0.0:
        raise DomainError("Bracket is not positive at s = 1", details={"ell": ell})
    upper = 2.0
    while phi_bracket(upper, ell, C, theta, m_tilde, A) > 0.0:
        upper *= 2.0
        if math.isinf(upper):
            raise ConstraintViolated(
                "Bracket has no root; Phi stays finite",
                details={"ell": ell, "C": C, "theta": theta}
            )
    return float(brentq(phi_bracket, 1.0, upper, args=(ell, C, theta, m_tilde, A),
                        xtol=1e-300, rtol=1e-15, maxiter=500))


@dataclass(frozen=True)
class PhiTableRow:
    s: float
    phi: MaybeDiverged
    ode_rhs: MaybeDiverged
    fd_derivative: MaybeDiverged
    rel_residual: Optional[float]


def phi_table(ell: float, C: float, theta: float, m_tilde: float, A: float,
              samples: int = 100, delta: float = FD_STEP) -> List[PhiTableRow]:
    """
    Phi, the ODE right-hand side and a finite-difference derivative on
    ``samples`` points of [1, T); the last row sits at s = T.
    """
    T = blowup_time_bound(ell, C, theta, m_tilde, A)
    rows: List[PhiTableRow] = []
    for index in range(samples):
        s = 1.0 + (T - 1.0) * index / samples
        phi = phi_closed_form(s, ell, C, theta, m_tilde, A)
        if is_diverged(phi):
            rows.append(PhiTableRow(s, DIVERGED, DIVERGED, DIVERGED, None))
            continue
        assert isinstance(phi, float)
        rhs = phi_ode_rhs(s, phi, C, theta, m_tilde, A)
        lo = max(1.0, s - delta)
        hi = s + delta
        phi_lo = phi_closed_form(lo, ell, C, theta, m_tilde, A)
        phi_hi = phi_closed_form(hi, ell, C, theta, m_tilde, A)
        if is_diverged(phi_lo) or is_diverged(phi_hi):
            rows.append(PhiTableRow(s, phi, rhs, DIVERGED, None))
            continue
        fd = (float(phi_hi) - float(phi_lo)) / (hi - lo)
        rows.append(PhiTableRow(s, phi, rhs, fd, abs(fd - rhs) / abs(rhs)))
    rows.append(PhiTableRow(T, DIVERGED, DIVERGED, DIVERGED, None))
    return rows


@dataclass(frozen=True)
class PsiAccumulator:
    """
    Running Psi(s).

    ``last_integrand`` is int u v - int u ln u + F0 + ell at ``last_t``;
    each update adds the trapezoid of the integrand over the step.
    """
    value: float
    F0: float
    ell: float
    last_t: float
    last_integrand: float
    u_floor: float = DEFAULT_U_FLOOR

    @classmethod
    def start(cls, params: ModelParams, state: SolutionState, F0: float,
              ell: float) -> "PsiAccumulator":
        if not ell > 1.0:
            raise DomainError("ell must exceed 1", details={"ell": ell})
        integrand = _integrand(state, F0, ell, params.u_floor)
        return cls(value=0.0, F0=F0, ell=ell, last_t=state.t,
                   last_integrand=integrand, u_floor=params.u_floor)


def _integrand(state: SolutionState, F0: float, ell: float, u_floor: float) -> float:
    return cross_term(state) - entropy_integral(state, u_floor) + F0 + ell


def psi_update(acc: PsiAccumulator, state: SolutionState, dt: float) -> PsiAccumulator:
    """Advance Psi by one step of length dt ending at ``state``."""
    if not dt > 0:
        raise DomainError("psi_update requires dt > 0", details={"dt": dt})
    integrand = _integrand(state, acc.F0, acc.ell, acc.u_floor)
    return replace(
        acc,
        value=acc.value + 0.5 * dt * (acc.last_integrand + integrand),
        last_t=acc.last_t + dt,
        last_integrand=integrand,
    )


@dataclass(frozen=True)
class PsiChainReport:
    """Psi' >= F0 - F + ell >= ell at one time."""
    t: float
    psi_prime: float
    middle: float
    ell: float
    violated: bool


def _chain(t: float, cross: float, ent: float, F0: float, F: float, ell: float) -> PsiChainReport:
    psi_prime = cross - ent + F0 + ell
    violated = psi_prime < ell - CHAIN_SLACK * (1.0 + abs(ell))
    return PsiChainReport(t=t, psi_prime=psi_prime, middle=F0 - F + ell, ell=ell, violated=violated)


def psi_lower_bound_check(acc: PsiAccumulator, state: SolutionState,
                          F_current: float) -> PsiChainReport:
    """Evaluate the chain for ``state``; violations are logged, never raised."""
    report = _chain(state.t, cross_term(state), entropy_integral(state, acc.u_floor),
                    acc.F0, F_current, acc.ell)
    if report.violated:
        logger.warning(
            "Psi' fell below ell",
            extra={"t": report.t, "psi_prime": report.psi_prime, "ell": report.ell}
        )
    return report


def psi_chain_series(records: Sequence[EnergyRecord], ell: float) -> List[PsiChainReport]:
    """Chain check on every record; the first record supplies F0."""
    if not records:
        return []
    F0 = records[0].F
    reports = [_chain(r.t, r.cross_uv, r.entropy, F0, r.F, ell) for r in records]
    violations = sum(1 for report in reports if report.violated)
    if violations:
        logger.warning("Psi' chain violated", extra={"violations": violations, "records": len(reports)})
    return reports


@dataclass(frozen=True)
class InequalityPoint:
    t: float
    lhs: float
    rhs: float
    ratio: MaybeDiverged


def inequality_ratio(records: Sequence[EnergyRecord],
                     cfg: InequalityMonitorConfig) -> List[InequalityPoint]:
    """
    LHS(s) = int_0^s int u v against
    RHS(s) = C (m + A + 1)^2 (1 + s) max(F0 + int u v - int u ln u + 1, 0)^theta.

    The time integral is the trapezoid rule over the record times.
    """
    points: List[InequalityPoint] = []
    if not records:
        return points
    F0 = records[0].F
    scale = cfg.C_user * cfg.M ** 2
    lhs = 0.0
    previous: Optional[EnergyRecord] = None
    for record in records:
        if previous is not None:
            lhs += 0.5 * (record.t - previous.t) * (record.cross_uv + previous.cross_uv)
        base = max(F0 + record.cross_uv - record.entropy + 1.0, 0.0)
        rhs = scale * (1.0 + record.t) * base ** cfg.theta
        if rhs > 0.0:
            ratio: MaybeDiverged = lhs / rhs
        else:
            ratio = 0.0 if lhs == 0.0 else DIVERGED
        points.append(InequalityPoint(t=record.t, lhs=lhs, rhs=rhs, ratio=ratio))
        previous = record
    return points
