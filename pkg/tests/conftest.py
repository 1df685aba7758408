import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "src"))

import numpy as np

from entroflow import (
    CaseSpec,
    DensityOperator,
    EntangledThermalSpec,
    PureJointState,
    degenerate_pairs,
    givens_unitary,
    joint_energies,
)


def ghz_state() -> DensityOperator:
    """Three-qubit (|000> + |111>)/sqrt(2)."""
    v = np.zeros(8, dtype=complex)
    v[0] = v[7] = 2.0**-0.5
    return PureJointState(v, (2, 2, 2)).density()


def bell_state() -> DensityOperator:
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 2.0**-0.5
    return PureJointState(v, (2, 2)).density()


def random_pure(dims, rng) -> PureJointState:
    d = int(np.prod(dims))
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureJointState(v / np.linalg.norm(v), tuple(dims))


def random_entangled_spec(rng, max_dim: int = 6) -> EntangledThermalSpec:
    """Random spec whose two local spectra share many exact joint-energy
    degeneracies (integer level patterns, dyadic scale ratios)."""
    d = int(rng.integers(2, max_dim + 1))
    steps = rng.integers(1, 3, size=d - 1)
    eps = np.concatenate([[0.0], np.cumsum(steps).astype(float)])
    eps *= rng.uniform(0.5, 2.0)
    mu_a = rng.uniform(0.5, 2.0)
    mu_b = mu_a * float(rng.choice([0.5, 1.0, 2.0]))
    return EntangledThermalSpec(eps, gamma=rng.uniform(0.5, 2.0), mu_a=mu_a, mu_b=mu_b)


def random_conserving_unitary(case: CaseSpec, rng) -> np.ndarray:
    """Random unitary commuting with the bare total Hamiltonian: rotations
    by random angles inside randomly chosen disjoint degenerate planes."""
    h_a, h_b = case.hamiltonians()
    pairs = degenerate_pairs(h_a, h_b, tol=1e-9)
    order = rng.permutation(len(pairs))
    used: set[int] = set()
    rotations = []
    for idx in order:
        (i, j), (i2, j2) = pairs[idx]
        fu, fv = i * h_b.dim + j, i2 * h_b.dim + j2
        if fu in used or fv in used:
            continue
        used.update((fu, fv))
        rotations.append(((i, j), (i2, j2), float(rng.uniform(0.0, 2.0 * np.pi))))
    return givens_unitary((h_a.dim, h_b.dim), rotations, joint_energies(h_a, h_b))
