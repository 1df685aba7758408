"""Entropy-inequality checks on random or hand-built multipartite states.

Three checks live here: strong subadditivity on tripartite states, the
average-pairwise-correlation bound it implies for N >= 3 subsystems, and
the nonnegative relative-entropy identity obeyed by any evolution that
starts from a Gibbs state (possibly with a Hamiltonian quench).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DimensionMismatch, NonpositiveBeta, TooFewFactors
from .qmath import dagger, kron, partial_trace
from .states import (
    DensityOperator,
    HamiltonianSpec,
    _entropy_psd,
    gibbs_state,
    relative_entropy,
    von_neumann_entropy,
)

# identity checks and inequality slacks tolerate double-precision
# eigensolver noise at the dimensions used here (d <= 64)
SLACK_TOL = 1e-9
IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class SlackReport:
    """Outcome of one inequality check: passes iff slack = rhs - lhs >= -tol."""

    lhs: float
    rhs: float
    slack: float
    passed: bool
    tol: float

    @classmethod
    def compare(cls, lhs: float, rhs: float, tol: float = SLACK_TOL) -> "SlackReport":
        slack = rhs - lhs
        return cls(lhs=lhs, rhs=rhs, slack=slack, passed=slack >= -tol, tol=tol)


@dataclass(frozen=True)
class GibbsEvolutionReport:
    """Both sides of the Gibbs-evolution identity.

    The relative entropy of the final state with respect to the initial
    Gibbs state equals beta*dU - dS - beta*tr(rho_f dH); identity_gap is
    the absolute difference of the two evaluations and nonneg_slack the
    (guaranteed nonnegative) right-hand side.
    """

    relative_entropy_lhs: float
    beta_du: float
    ds: float
    beta_tr_rhof_dh: float
    rhs: float
    identity_gap: float
    nonneg_slack: float


@dataclass(frozen=True)
class AncillaChannel:
    """Unitary on system (x) ancilla followed by discarding the ancilla."""

    unitary: np.ndarray
    ancilla: DensityOperator

    @classmethod
    def identity(cls, d: int) -> "AncillaChannel":
        """The do-nothing channel (trivial one-dimensional ancilla)."""
        return cls(np.eye(d, dtype=complex), DensityOperator(np.eye(1, dtype=complex), (1,)))

    def apply(self, rho: DensityOperator) -> DensityOperator:
        d_sys = rho.dim
        d_anc = self.ancilla.dim
        u = np.asarray(self.unitary, dtype=complex)
        if u.shape != (d_sys * d_anc, d_sys * d_anc):
            raise DimensionMismatch(
                f"unitary shape {u.shape} != system*ancilla dim {d_sys * d_anc}"
            )
        joint = u @ kron(rho.matrix, self.ancilla.matrix) @ dagger(u)
        return DensityOperator(partial_trace(joint, (d_sys, d_anc), [0]), rho.dims)


def check_ssa(rho: DensityOperator, i: int, j: int, k: int) -> SlackReport:
    """Strong subadditivity on a tripartite state: S_i + S_j <= S_ik + S_jk."""
    if len(rho.dims) != 3:
        raise DimensionMismatch(f"need exactly 3 factors, got dims {rho.dims}")
    if sorted((i, j, k)) != [0, 1, 2]:
        raise DimensionMismatch(f"(i, j, k) must be a permutation of (0, 1, 2), got {(i, j, k)}")
    s_i = _entropy_psd(partial_trace(rho.matrix, rho.dims, [i]))
    s_j = _entropy_psd(partial_trace(rho.matrix, rho.dims, [j]))
    s_ik = _entropy_psd(partial_trace(rho.matrix, rho.dims, [i, k]))
    s_jk = _entropy_psd(partial_trace(rho.matrix, rho.dims, [j, k]))
    return SlackReport.compare(lhs=s_i + s_j, rhs=s_ik + s_jk)


def average_correlation_bound(rho: DensityOperator) -> SlackReport:
    """Mean pairwise mutual information <= mean single-party entropy.

    Aggregates the strong-subadditivity inequalities over all pairs of an
    N-party state (N >= 3): low average entropy forces low average two-body
    correlation.
    """
    n = len(rho.dims)
    if n < 3:
        raise TooFewFactors(f"bound needs >= 3 factors, got {n}")
    singles = [_entropy_psd(partial_trace(rho.matrix, rho.dims, [i])) for i in range(n)]
    pair_mi = []
    for i, j in combinations(range(n), 2):
        s_ij = _entropy_psd(partial_trace(rho.matrix, rho.dims, [i, j]))
        pair_mi.append(singles[i] + singles[j] - s_ij)
    lhs = float(np.mean(pair_mi))
    rhs = float(np.mean(singles))
    return SlackReport.compare(lhs=lhs, rhs=rhs)


def gibbs_evolution_identity(
    h_i: HamiltonianSpec,
    beta: float,
    channel: AncillaChannel,
    h_f: HamiltonianSpec,
) -> GibbsEvolutionReport:
    """Evaluate both sides of the identity for a Gibbs-launched evolution.

    The system starts in exp(-beta H_i)/Z, evolves through ``channel``
    (unitary with an ancilla, ancilla discarded -- trace preserving by
    construction), and is finally metered against H_f.  The report carries
    S(rho_f || rho_i) next to beta*dU - dS - beta*tr(rho_f dH); the two are
    equal for any channel and any quench, and both are nonnegative.
    """
    if not beta > 0:
        raise NonpositiveBeta(f"beta must be positive, got {beta!r}")
    if h_f.dim != h_i.dim:
        raise DimensionMismatch(
            f"final Hamiltonian dim {h_f.dim} != initial dim {h_i.dim}"
        )
    rho_i = gibbs_state(h_i, beta)
    rho_f = channel.apply(rho_i)

    mat_i = h_i.matrix()
    mat_f = h_f.matrix()
    u_i = float(np.trace(rho_i.matrix @ mat_i).real)
    u_f = float(np.trace(rho_f.matrix @ mat_f).real)
    ds = von_neumann_entropy(rho_f) - von_neumann_entropy(rho_i)
    beta_du = beta * (u_f - u_i)
    beta_tr_rhof_dh = beta * float(np.trace(rho_f.matrix @ (mat_f - mat_i)).real)
    rhs = beta_du - ds - beta_tr_rhof_dh

    lhs = relative_entropy(rho_f, rho_i)
    return GibbsEvolutionReport(
        relative_entropy_lhs=lhs,
        beta_du=beta_du,
        ds=ds,
        beta_tr_rhof_dh=beta_tr_rhof_dh,
        rhs=rhs,
        identity_gap=abs(lhs - rhs),
        nonneg_slack=rhs,
    )
