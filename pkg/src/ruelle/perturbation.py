"""The perturbation program: uniform conditions, operator convergence,
pressure and invariant-measure limits, and the exact eigenvector identity.

The family of potentials steered by 1/epsilon pushes weight off the hole
while clamping large dips, so the perturbed closed operators converge to the
open one in the sup norm.  Along a decreasing epsilon schedule the perturbed
radii decrease to the open radius and the perturbed invariant cylinder
masses converge on every finite cylinder algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import PreconditionError
from .opensystem import HoleSpec
from .potentials import (
    Potential,
    cylinder_sup,
    perturbed_potential,
    seminorm_bracket,
    summability_certificate,
)
from .shifts import admissible_words
from .spectral import component_decomposition
from .transfer import RpfTriplet, build_transfer_matrix, rpf_triplet


@dataclass(frozen=True)
class PerturbationConditionsReport:
    epsilons: tuple
    seminorm_by_eps: tuple  # [phi_eps]_{k+1}, exact
    seminorm_uniform: float
    seminorm_reference: float  # [phi]_{k+1}
    uniform_sum: float
    summability_total: float
    distance_tables: dict  # symbol -> tuple of sup |e^{phi_eps} - psi| per epsilon
    distance_bound: dict  # symbol -> tuple of 2 e^{sup phi} e^{-1/eps}
    failures: tuple


def _psi_value(phi: Potential, hole: HoleSpec, word) -> float:
    """exp(potential) off the hole, zero on it."""
    if hole.open_.allows(word[0], word[1]):
        return math.exp(phi.value(word))
    return 0.0


def verify_perturbation_conditions(
    phi: Potential,
    hole: HoleSpec,
    epsilons: Sequence[float],
    k: int = 1,
    theta: float = 0.5,
) -> PerturbationConditionsReport:
    """Check the uniform conditions the perturbation family must satisfy.

    (1) the seminorm at index k+1 is bounded uniformly in epsilon, (2) the
    symbol sums of the uniform cylinder sups stay below the summability
    total, (3) the per-symbol sup distance to the hole-killed weight function
    vanishes as epsilon does.  Violations come back as named failures.
    """
    A = hole.closed
    eps = tuple(sorted(epsilons, reverse=True))
    failures = []

    semis = []
    for e in eps:
        pe = perturbed_potential(phi, A, hole.open_, e)
        enum_depth = max(pe.depth, k + 1)
        semis.append(seminorm_bracket(pe, A, k + 1, enum_depth, theta=theta).upper)
    uniform_semi = max(semis)
    ref = seminorm_bracket(phi, A, k + 1, max(phi.depth, k + 1), theta=theta).upper
    if not math.isfinite(uniform_semi):
        failures.append("seminorm: unbounded over the epsilon schedule")

    sup_by_symbol = {}
    for e in eps:
        pe = perturbed_potential(phi, A, hole.open_, e)
        for s in A.alphabet.symbols:
            if not A.has_nonempty_cylinder((s,)):
                continue
            v = cylinder_sup(pe, A, (s,))
            sup_by_symbol[s] = max(sup_by_symbol.get(s, -math.inf), v)
    uniform_sum = sum(math.exp(v) for v in sup_by_symbol.values())
    cert = summability_certificate(phi, A)
    if uniform_sum > cert.total_upper + 1e-9 * max(1.0, cert.total_upper):
        failures.append("summability: uniform symbol sum exceeds the certificate")

    depth = max(phi.depth, 2)
    tables = {}
    bounds = {}
    for s in A.alphabet.symbols:
        if not A.has_nonempty_cylinder((s,)):
            continue
        sup_s = cylinder_sup(phi, A, (s,))
        per_eps = []
        per_bound = []
        for e in eps:
            pe = perturbed_potential(phi, A, hole.open_, e)
            worst = 0.0
            for w in admissible_words(A, depth):
                if w[0] != s or not A.has_nonempty_cylinder(w):
                    continue
                worst = max(worst, abs(math.exp(pe.value(w)) - _psi_value(phi, hole, w)))
            per_eps.append(worst)
            per_bound.append(2.0 * math.exp(sup_s) * math.exp(-1.0 / e))
        tables[s] = tuple(per_eps)
        bounds[s] = tuple(per_bound)
        for a, b in zip(per_eps, per_bound):
            if a > b + 1e-12:
                failures.append(f"weight distance: above the exponential bound at symbol {s!r}")
                break
        if any(x > y + 1e-12 for x, y in zip(per_eps[1:], per_eps[:-1])):
            failures.append(f"weight distance: not decreasing along the schedule at symbol {s!r}")

    return PerturbationConditionsReport(
        epsilons=eps,
        seminorm_by_eps=tuple(semis),
        seminorm_uniform=uniform_semi,
        seminorm_reference=ref,
        uniform_sum=uniform_sum,
        summability_total=cert.total_upper,
        distance_tables=tables,
        distance_bound=bounds,
        failures=tuple(failures),
    )


def operator_distance(phi: Potential, hole: HoleSpec, epsilon: float) -> float:
    """Sup-norm distance between the perturbed closed and open operators.

    Exact for locally constant potentials: the sup over cylinder contexts of
    the summed absolute weight differences across prepended symbols.
    """
    A = hole.closed
    pe = perturbed_potential(phi, A, hole.open_, epsilon)
    depth = pe.depth
    ctx_len = depth - 1
    worst = 0.0
    for ctx in admissible_words(A, ctx_len):
        if not A.has_nonempty_cylinder(ctx):
            continue
        total = 0.0
        for a in A.alphabet.symbols:
            if not A.allows(a, ctx[0]):
                continue
            w = (a,) + ctx
            total += abs(math.exp(pe.value(w)) - _psi_value(phi, hole, w))
        worst = max(worst, total)
    return worst


@dataclass(frozen=True)
class PerturbationTrace:
    epsilons: tuple
    lams: tuple
    operator_distances: tuple
    lam_limit: float
    lam_bracket: tuple
    monotone: bool
    mass_distances: Optional[tuple] = None
    test_cylinders: Optional[tuple] = None
    limit_masses: Optional[dict] = None


def pressure_convergence_trace(
    phi: Potential,
    hole: HoleSpec,
    epsilons: Sequence[float],
    depth: Optional[int] = None,
    tol: float = 1e-12,
) -> PerturbationTrace:
    """Perturbed radii along a decreasing schedule, with the open-system limit.

    The radii are nonincreasing and bounded below by the open radius, so the
    final bracket [open radius, last radius] always contains the limit.
    """
    A = hole.closed
    eps = tuple(sorted(epsilons, reverse=True))
    lams = []
    dists = []
    for e in eps:
        pe = perturbed_potential(phi, A, hole.open_, e)
        tm = build_transfer_matrix(A, pe, depth=depth)
        lams.append(rpf_triplet(tm, tol=tol).lam)
        dists.append(operator_distance(phi, hole, e))
    tm_open = build_transfer_matrix(hole.open_, phi, depth=depth)
    lam_open = rpf_triplet(tm_open, tol=tol).lam
    monotone = all(b <= a + 1e-10 * max(1.0, a) for a, b in zip(lams, lams[1:]))
    pad = 100.0 * tol * max(1.0, lam_open)
    return PerturbationTrace(
        epsilons=eps,
        lams=tuple(lams),
        operator_distances=tuple(dists),
        lam_limit=lam_open,
        lam_bracket=(lam_open - pad, lams[-1] + pad),
        monotone=monotone,
    )


def _measure_masses(triplet: RpfTriplet, cylinders) -> dict:
    return {w: triplet.mu_mass(w) for w in cylinders}


def limit_invariant_masses(
    phi: Potential,
    hole: HoleSpec,
    cylinders,
    depth: Optional[int] = None,
    tol: float = 1e-12,
) -> dict:
    """Cylinder masses of the open system's invariant measure h nu.

    For an irreducible subsystem this is the plain eigendata measure; a
    reducible subsystem routes through the component decomposition, which
    requires a unique dominant component.
    """
    from .shifts import scc_quotient

    sub = hole.open_
    dag = scc_quotient(sub)
    live = [c for c in dag.components if c.has_periodic_point]
    if len(dag.components) == 1 and live:
        tm = build_transfer_matrix(sub, phi, depth=depth)
        trip = rpf_triplet(tm, tol=tol)
        return _measure_masses(trip, cylinders)
    dec = component_decomposition(sub, phi, depth=depth, tol=tol)
    h0 = dec.peripherals[0].h.real
    nu0 = dec.peripherals[0].nu.real
    tm = build_transfer_matrix(sub, phi, depth=depth)
    index = tm.word_index
    m = tm.depth
    out = {}
    for w in cylinders:
        w = tuple(w)
        if len(w) <= m:
            out[w] = float(
                sum(h0[i] * nu0[i] for i, v in enumerate(tm.words) if v[: len(w)] == w)
            )
            continue
        if not sub.has_nonempty_cylinder(w):
            out[w] = 0.0
            continue
        scale = 1.0
        ww = w
        while len(ww) > m:
            scale *= math.exp(phi.value(ww[: phi.depth])) / dec.lam
            ww = ww[1:]
        out[w] = float(h0[index[w[:m]]] * scale * nu0[index[ww]])
    return out


def gibbs_convergence_trace(
    phi: Potential,
    hole: HoleSpec,
    epsilons: Sequence[float],
    test_cylinders,
    depth: Optional[int] = None,
    tol: float = 1e-12,
) -> PerturbationTrace:
    """Perturbed invariant cylinder masses against the open-system limit."""
    A = hole.closed
    eps = tuple(sorted(epsilons, reverse=True))
    cylinders = tuple(tuple(w) for w in test_cylinders)
    limit = limit_invariant_masses(phi, hole, cylinders, depth=depth, tol=tol)
    lams = []
    dists = []
    mass_dists = []
    for e in eps:
        pe = perturbed_potential(phi, A, hole.open_, e)
        tm = build_transfer_matrix(A, pe, depth=depth)
        trip = rpf_triplet(tm, tol=tol)
        lams.append(trip.lam)
        dists.append(operator_distance(phi, hole, e))
        masses = _measure_masses(trip, cylinders)
        mass_dists.append(max(abs(masses[w] - limit[w]) for w in cylinders))
    tm_open = build_transfer_matrix(hole.open_, phi, depth=depth)
    lam_open = rpf_triplet(tm_open, tol=tol).lam
    monotone = all(b <= a + 1e-10 * max(1.0, a) for a, b in zip(lams, lams[1:]))
    pad = 100.0 * tol * max(1.0, lam_open)
    return PerturbationTrace(
        epsilons=eps,
        lams=tuple(lams),
        operator_distances=tuple(dists),
        lam_limit=lam_open,
        lam_bracket=(lam_open - pad, lams[-1] + pad),
        monotone=monotone,
        mass_distances=tuple(mass_dists),
        test_cylinders=cylinders,
        limit_masses=limit,
    )


# -- eigenvector identity -----------------------------------------------------------


@dataclass(frozen=True)
class IdentityCheckRow:
    vector: int
    lhs: complex
    rhs: complex
    residual: float


def eigenvector_identity_check(
    base_matrix: np.ndarray,
    perturbed_matrix: np.ndarray,
    triplet,
    perturbed_left: np.ndarray,
    test_vectors: Sequence[np.ndarray],
) -> tuple:
    """Exact resolvent identity for the normalized perturbed eigenvector.

    With kappa(f) = nu_eps(f) / nu_eps(h), E = L - lam h (x) nu and
    Ltilde = L_eps - L, the identity

        kappa(f) = nu(f) + kappa(Ltilde (h kappa(.) - I) (E - lam I)^{-1} f)

    must hold for every vector f.  Requires (E - lam I) invertible, which is
    the simplicity of the leading eigenvalue on the reduction; a singular
    solve reports the failing gap.
    """
    L = np.asarray(base_matrix, dtype=float)
    Le = np.asarray(perturbed_matrix, dtype=float)
    h = triplet.h
    nu = triplet.nu
    lam = triplet.lam
    n = L.shape[0]
    E = L - lam * np.outer(h, nu)
    A = E - lam * np.eye(n)
    eigs = np.linalg.eigvals(L)
    gap = min(
        (abs(e - lam) for e in eigs if abs(e - lam) > 1e-8 * max(lam, 1.0)),
        default=0.0,
    )
    cond_probe = np.abs(np.linalg.eigvals(A)).min(initial=np.inf)
    if cond_probe < 1e-12 * max(lam, 1.0):
        raise PreconditionError(
            f"(E - lam I) is singular: leading eigenvalue not simple (gap {gap:.3e})"
        )
    nue = np.asarray(perturbed_left, dtype=float)
    nue_h = float(nue @ h)
    if abs(nue_h) < 1e-300:
        raise PreconditionError("perturbed left vector annihilates the eigenfunction")

    def kappa(f):
        return (nue @ f) / nue_h

    Lt = Le - L
    rows = []
    for i, f in enumerate(test_vectors):
        f = np.asarray(f, dtype=float)
        y = np.linalg.solve(A, f)
        inner = h * kappa(y) - y
        rhs = float(nu @ f) + kappa(Lt @ inner)
        lhs = kappa(f)
        rows.append(
            IdentityCheckRow(vector=i, lhs=lhs, rhs=rhs, residual=abs(lhs - rhs))
        )
    return tuple(rows)
