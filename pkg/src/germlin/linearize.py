"""Order-by-order vertical and full linearization of commuting deck
systems, with conjugacy-residual verification and majorant-series
certificates.

The deck transformations are ``tau_i = tauhat_i + tau*_i`` with diagonal
linear part and perturbation of v-order >= 2.  Conjugating by
``Phi = Id + phi`` reduces, degree by degree in v, to the cohomological
equations of :mod:`germlin.divisors`: at degree m the right-hand side is
assembled from the parts of phi already found at degrees < m, so the
whole iteration is a sequence of exact divisions in exact mode.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

from . import scalars
from .scalars import EXACT, QC
from .series import FormalSeries, GridSpec, grid_sup_norm, series_to_dict, substitute_shift
from .divisors import (
    CochainSystem, DiophantineReport, DivisorError, ResonanceError,
    solve_family,
)
from .toroidal import DeckLinearData

Vec = tuple[FormalSeries, ...]


class LinearizeError(ValueError):
    pass


# ----------------------------------------------------------------------
# series-vector helpers


def vec_zero(n_h, n_v, ncomp, trunc_h, trunc_v, mode) -> Vec:
    return tuple(FormalSeries.zero(n_h, n_v, trunc_h, trunc_v, mode)
                 for _ in range(ncomp))


def vec_add(a: Vec, b: Vec) -> Vec:
    return tuple(x.add(y) for x, y in zip(a, b))


def vec_sub(a: Vec, b: Vec) -> Vec:
    return tuple(x.sub(y) for x, y in zip(a, b))


def vec_scale_each(vec: Vec, factors) -> Vec:
    return tuple(x.scale(f) for x, f in zip(vec, factors))


def vec_homog(vec: Vec, m: int) -> Vec:
    return tuple(x.homogeneous_part(m) for x in vec)


def vec_max_abs(vec: Vec) -> float:
    return max((x.max_abs() for x in vec), default=0.0)


def vec_substitute(vec: Vec, phi_h, phi_v, n_v: int, n_h: int) -> Vec:
    return tuple(substitute_shift(x, phi_h, phi_v, n_v, n_h) for x in vec)


def vec_compose_linear(vec: Vec, h_factors, v_factors) -> Vec:
    return tuple(x.compose_linear(h_factors, v_factors) for x in vec)


def _ones(mode, count):
    return tuple(scalars.one(mode) for _ in range(count))


def _inv(values, mode):
    one = scalars.one(mode)
    return tuple(one / x for x in values)


# ----------------------------------------------------------------------
# deck perturbations


@dataclass
class DeckPerturbation:
    """Linear deck data plus the order->=2 perturbations, forward and
    (computed on demand) inverse."""

    decks: DeckLinearData
    tau_h: tuple[Vec, ...]      # per deck: n_h components
    tau_v: tuple[Vec, ...]      # per deck: d components
    n_v: int
    n_h_budget: int
    _inverse: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        q, n_h, d = self.decks.q, self.decks.n_h, self.decks.d
        self.tau_h = tuple(tuple(v) for v in self.tau_h)
        self.tau_v = tuple(tuple(v) for v in self.tau_v)
        if len(self.tau_h) != q or len(self.tau_v) != q:
            raise LinearizeError("need one perturbation per deck")
        for vec, width in ((self.tau_h, n_h), (self.tau_v, d)):
            for comps in vec:
                if len(comps) != width:
                    raise LinearizeError("perturbation has wrong component count")
                for s in comps:
                    if (s.n_h, s.n_v) != (n_h, d) or s.mode != self.decks.mode:
                        raise LinearizeError("perturbation series incompatible with decks")
                    if not s.is_zero() and s.v_order() < 2:
                        raise LinearizeError("perturbations must have v-order >= 2")

    @property
    def mode(self):
        return self.decks.mode

    def stacked(self, i: int) -> Vec:
        return self.tau_h[i] + self.tau_v[i]

    def inverse_parts(self, i: int) -> tuple[Vec, Vec]:
        """Perturbation of tau_i^{-1} relative to tauhat_i^{-1}."""
        if i not in self._inverse:
            sigma = _invert_deck(self, i)
            self._inverse[i] = (sigma[:self.decks.n_h], sigma[self.decks.n_h:])
        return self._inverse[i]

    def parts(self, i: int, direction: str) -> tuple[Vec, Vec]:
        if direction == "forward":
            return self.tau_h[i], self.tau_v[i]
        if direction == "inverse":
            return self.inverse_parts(i)
        raise LinearizeError(f"unknown direction {direction!r}")

    def linear_factors(self, i: int, direction: str):
        lam, mu = self.decks.lam[i], self.decks.mu[i]
        if direction == "forward":
            return lam, mu
        return _inv(lam, self.mode), _inv(mu, self.mode)


def _invert_deck(pert: DeckPerturbation, i: int) -> Vec:
    """Fixed-point computation of tau_i^{-1} - tauhat_i^{-1} at truncation.

    With sigma = tauhat^{-1} + sigma*, the identity tau o sigma = Id reads
    tauhat sigma* = -tau* o sigma, and tau* o sigma is the linear pullback
    of tau* shifted by (T sigma*_h, M sigma*_v).
    """
    decks, n_v, n_h = pert.decks, pert.n_v, pert.n_h_budget
    lam, mu = decks.lam[i], decks.mu[i]
    lam_inv, mu_inv = _inv(lam, pert.mode), _inv(mu, pert.mode)
    width = decks.n_h + decks.d
    star = pert.stacked(i)
    star_pulled = vec_compose_linear(star, lam_inv, mu_inv)
    sigma = vec_zero(decks.n_h, decks.d, width, n_h, n_v, pert.mode)
    for _ in range(max(1, n_v - 1)):
        shift_h = vec_scale_each(sigma[:decks.n_h], lam)
        shift_v = vec_scale_each(sigma[decks.n_h:], mu)
        comp = vec_substitute(star_pulled, shift_h, shift_v, n_v, n_h)
        new_h = vec_scale_each(tuple(c.neg() for c in comp[:decks.n_h]), lam_inv)
        new_v = vec_scale_each(tuple(c.neg() for c in comp[decks.n_h:]), mu_inv)
        new = new_h + new_v
        if all(a == b for a, b in zip(new, sigma)):
            break
        sigma = new
    return sigma


def compose_decks(pert: DeckPerturbation, i: int, j: int) -> Vec:
    """Perturbation of tau_i o tau_j relative to tauhat_i tauhat_j."""
    decks, n_v, n_h = pert.decks, pert.n_v, pert.n_h_budget
    lam_i, mu_i = decks.lam[i], decks.mu[i]
    lam_j_inv = _inv(decks.lam[j], pert.mode)
    mu_j_inv = _inv(decks.mu[j], pert.mode)
    star_i, star_j = pert.stacked(i), pert.stacked(j)
    # tauhat_i applied to tau*_j
    lin_part = (vec_scale_each(star_j[:decks.n_h], lam_i)
                + vec_scale_each(star_j[decks.n_h:], mu_i))
    # tau*_i o tau_j = (tau*_i o tauhat_j) shifted by tauhat_j^{-1} tau*_j
    pulled = vec_compose_linear(star_i, decks.lam[j], decks.mu[j])
    shift_h = vec_scale_each(star_j[:decks.n_h], lam_j_inv)
    shift_v = vec_scale_each(star_j[decks.n_h:], mu_j_inv)
    comp = vec_substitute(pulled, shift_h, shift_v, n_v, n_h)
    return vec_add(lin_part, comp)


def check_commutation(pert: DeckPerturbation) -> float:
    """Max coefficient modulus of tau_i tau_j - tau_j tau_i at truncation."""
    worst = 0.0
    for i in range(pert.decks.q):
        for j in range(i + 1, pert.decks.q):
            diff = vec_sub(compose_decks(pert, i, j), compose_decks(pert, j, i))
            worst = max(worst, vec_max_abs(diff))
    return worst


# ----------------------------------------------------------------------
# fixture generation


PYTHAGOREAN_UNITS = ((3, 4, 5), (5, 12, 13), (8, 15, 17), (20, 21, 29),
                     (7, 24, 25), (9, 40, 41), (12, 35, 37), (11, 60, 61))
MU_BASES = (Fraction(1, 2), Fraction(1, 3), Fraction(1, 5), Fraction(1, 7))


class GeneratedDecks(NamedTuple):
    pert: DeckPerturbation
    phi0_h: Vec | None
    phi0_v: Vec | None


def default_linear_decks(n_h: int, d: int, q: int) -> DeckLinearData:
    """Unit-modulus Gaussian-rational lambdas and prime-reciprocal mus.

    The mu entries are multiplicatively independent, so no divisor with
    |Q| >= 2 can vanish: |lam^P mu^Q| is a product of at least two prime
    reciprocals and never equals a single |mu_j| (or 1 = |lam_i|).
    """
    if d > len(MU_BASES):
        raise LinearizeError("vertical dimension too large for the fixture pool")
    units = []
    for a, b, c in PYTHAGOREAN_UNITS:
        units.append(QC(Fraction(a, c), Fraction(b, c)))
    if q * n_h > len(units):
        raise LinearizeError("not enough distinct unit eigenvalues")
    lam = [[units[l * n_h + i] for i in range(n_h)] for l in range(q)]
    mu = [[QC(MU_BASES[j]) for j in range(d)] for _ in range(q)]
    return DeckLinearData(lam, mu)


def _random_perturbation(rng: random.Random, n_h, d, ncomp, n_v, trunc_h,
                         scale: Fraction, mode=EXACT, horizontal_only=False,
                         vertical_only=False) -> Vec:
    out = []
    for k in range(ncomp):
        terms = {}
        if (horizontal_only and k >= n_h) or (vertical_only and k < n_h):
            out.append(FormalSeries.zero(n_h, d, trunc_h, n_v, mode))
            continue
        for _ in range(rng.randint(1, 3)):
            p = tuple(rng.randint(-1, 1) for _ in range(n_h))
            total = rng.randint(2, max(2, min(3, n_v)))
            q_exp = [0] * d
            for _ in range(total):
                q_exp[rng.randrange(d)] += 1
            coeff = QC(Fraction(rng.randint(-2, 2), rng.randint(6, 16)),
                       Fraction(rng.randint(-2, 2), rng.randint(6, 16))) * scale
            if coeff:
                terms[(p, tuple(q_exp))] = terms.get((p, tuple(q_exp)), QC(0)) + coeff
        live = {k2: (v if mode == EXACT else v.to_complex())
                for k2, v in terms.items() if v}
        out.append(FormalSeries(n_h, d, live, trunc_h, n_v, mode))
    return tuple(out)


def invert_near_identity(phi_h: Vec, phi_v: Vec, n_v: int, n_h: int) -> tuple[Vec, Vec]:
    """Truncated compositional inverse of Id + phi: psi = -phi o (Id + psi)."""
    psi_h = tuple(s.like() for s in phi_h)
    psi_v = tuple(s.like() for s in phi_v)
    for _ in range(max(1, n_v - 1)):
        comp_h = vec_substitute(phi_h, psi_h, psi_v, n_v, n_h)
        comp_v = vec_substitute(phi_v, psi_h, psi_v, n_v, n_h)
        new_h = tuple(c.neg() for c in comp_h)
        new_v = tuple(c.neg() for c in comp_v)
        if all(a == b for a, b in zip(new_h + new_v, psi_h + psi_v)):
            break
        psi_h, psi_v = new_h, new_v
    return psi_h, psi_v


def conjugate_linear_decks(decks: DeckLinearData, phi0_h: Vec, phi0_v: Vec,
                           n_v: int, n_h_budget: int) -> DeckPerturbation:
    """Decks Phi0 o tauhat_i o Phi0^{-1}, truncated; they commute pairwise
    at truncation by construction."""
    psi_h, psi_v = invert_near_identity(phi0_h, phi0_v, n_v, n_h_budget)
    tau_h, tau_v = [], []
    for i in range(decks.q):
        lam, mu = decks.lam[i], decks.mu[i]
        w_h = vec_scale_each(psi_h, lam)
        w_v = vec_scale_each(psi_v, mu)
        rho_h = vec_compose_linear(phi0_h, lam, mu)
        rho_v = vec_compose_linear(phi0_v, lam, mu)
        outer_h = vec_substitute(rho_h, psi_h, psi_v, n_v, n_h_budget)
        outer_v = vec_substitute(rho_v, psi_h, psi_v, n_v, n_h_budget)
        tau_h.append(vec_add(w_h, outer_h))
        tau_v.append(vec_add(w_v, outer_v))
    return DeckPerturbation(decks, tuple(tau_h), tuple(tau_v), n_v, n_h_budget)


def generate_commuting_decks(seed: int, dims: tuple[int, int, int], n_v: int,
                             profile: str = "coboundary",
                             decks: DeckLinearData | None = None,
                             scale: Fraction = Fraction(1, 1),
                             horizontal_only=False, vertical_only=False) -> GeneratedDecks:
    """Deck fixtures that commute exactly at truncation.

    ``coboundary`` conjugates the linear decks by a random Phi0 = Id + phi0
    and returns phi0 as hidden ground truth; ``generic`` uses the same
    construction (the one systematic way to guarantee commutation at this
    scale) but withholds it.
    """
    n_h, d, q = dims
    if decks is None:
        decks = default_linear_decks(n_h, d, q)
    rng = random.Random(seed)
    max_p = 1
    n_h_budget = (n_v + 1) * (max_p + 1) + max_p
    ncomp = n_h + d
    phi0 = _random_perturbation(rng, n_h, d, ncomp, n_v, n_h_budget, scale,
                                decks.mode, horizontal_only, vertical_only)
    phi0_h, phi0_v = phi0[:n_h], phi0[n_h:]
    if n_v < 2:
        raise LinearizeError("truncation too small to express the perturbation")
    pert = conjugate_linear_decks(decks, phi0_h, phi0_v, n_v, n_h_budget)
    if profile == "coboundary":
        return GeneratedDecks(pert, phi0_h, phi0_v)
    if profile == "generic":
        return GeneratedDecks(pert, None, None)
    raise LinearizeError(f"unknown profile {profile!r}")


# ----------------------------------------------------------------------
# linearization iterations


@dataclass
class LinearizationResult:
    mode: str                    # vertical | full
    n_v: int
    phi_h: Vec                   # empty tuple in vertical mode
    phi_v: Vec
    residual_per_degree: list[float]
    direction: str = "forward"

    @property
    def max_residual(self) -> float:
        return max(self.residual_per_degree, default=0.0)

    def to_json_dict(self) -> dict:
        return {"mode": self.mode, "N_v": self.n_v,
                "direction": self.direction,
                "residual_per_degree": list(self.residual_per_degree),
                "phi_h": [series_to_dict(s) for s in self.phi_h],
                "phi_v": [series_to_dict(s) for s in self.phi_v]}


def _check_report(pert: DeckPerturbation, report: DiophantineReport | None,
                  wanted_mode: str):
    if report is None:
        return
    if report.has_resonance:
        raise ResonanceError("scan report carries resonance witnesses")
    if wanted_mode == "full" and report.mode != "full":
        raise DivisorError("full linearization needs a full-mode scan")


def _vertical_rhs(pert: DeckPerturbation, phi_v: Vec, i: int, direction: str) -> Vec:
    """(I) - (II) of the vertical conjugacy equation at the current phi."""
    n_v, n_h = pert.n_v, pert.n_h_budget
    tau_h, tau_v = pert.parts(i, direction)
    lam_f, mu_f = pert.linear_factors(i, direction)
    term_i = vec_substitute(tau_v, None, phi_v, n_v, n_h)
    shift = vec_substitute(tau_h, None, phi_v, n_v, n_h)
    psi = vec_compose_linear(phi_v, lam_f, mu_f)
    inv_lam = _inv(lam_f, pert.mode)
    shift_scaled = vec_scale_each(shift, inv_lam)
    term_ii = vec_sub(vec_substitute(psi, shift_scaled, None, n_v, n_h), psi)
    return vec_sub(term_i, term_ii)


def vertical_linearize(pert: DeckPerturbation, n_v: int,
                       report: DiophantineReport | None = None,
                       direction: str = "forward") -> LinearizationResult:
    """Solve for phi = (0, phi_v) conjugating the decks to maps with linear
    vertical part, degree by degree.

    At each degree the right-hand side family must satisfy the pairwise
    compatibility identity; failure signals non-commuting input decks.
    """
    _check_report(pert, report, "vertical")
    decks = pert.decks
    n_v = min(n_v, pert.n_v)
    phi_v = vec_zero(decks.n_h, decks.d, decks.d, pert.n_h_budget, n_v, pert.mode)
    for m in range(2, n_v + 1):
        rhs = tuple(vec_homog(_vertical_rhs(pert, phi_v, i, direction), m)
                    for i in range(decks.q))
        sys = CochainSystem(decks, rhs, "vertical", direction)
        step = solve_family(sys, report)
        phi_v = vec_add(phi_v, step)
    residuals = conjugacy_residual(phi_v, pert, n_v, "vertical",
                                   direction=direction)
    return LinearizationResult("vertical", n_v, (), phi_v, residuals, direction)


def full_linearize(pert: DeckPerturbation, n_v: int,
                   report: DiophantineReport | None = None,
                   direction: str = "forward") -> LinearizationResult:
    """Solve for phi = (phi_h, phi_v) conjugating the decks to their linear
    parts, degree by degree."""
    _check_report(pert, report, "full")
    decks = pert.decks
    n_v = min(n_v, pert.n_v)
    width = decks.n_h + decks.d
    phi = vec_zero(decks.n_h, decks.d, width, pert.n_h_budget, n_v, pert.mode)
    for m in range(2, n_v + 1):
        rhs = []
        for i in range(decks.q):
            tau_h, tau_v = pert.parts(i, direction)
            composed = vec_substitute(tau_h + tau_v, phi[:decks.n_h],
                                      phi[decks.n_h:], n_v, pert.n_h_budget)
            rhs.append(vec_homog(composed, m))
        sys = CochainSystem(decks, tuple(rhs), "full", direction)
        step = solve_family(sys, report)
        phi = vec_add(phi, step)
    phi_h, phi_v = phi[:decks.n_h], phi[decks.n_h:]
    residuals = conjugacy_residual(phi_v, pert, n_v, "full", phi_h=phi_h,
                                   direction=direction)
    return LinearizationResult("full", n_v, phi_h, phi_v, residuals, direction)


def conjugacy_residual(phi_v: Vec, pert: DeckPerturbation, n_v: int,
                       mode: str, phi_h: Vec = (),
                       direction: str = "forward") -> list[float]:
    """Recompute the conjugacy defect per degree via substitution only.

    Full mode checks Phi o tauhat_i - tau_i o Phi componentwise; vertical
    mode checks the vertical component against the target whose horizontal
    part is the deck's own composed through Phi.
    """
    decks = pert.decks
    n_h_budget = pert.n_h_budget
    per_degree = [0.0] * (n_v + 1)

    def absorb(vec: Vec):
        for comp in vec:
            for key, c in comp.terms.items():
                k = key.q_size
                if k <= n_v:
                    per_degree[k] = max(per_degree[k], scalars.magnitude(c))

    for i in range(decks.q):
        tau_h, tau_v = pert.parts(i, direction)
        lam_f, mu_f = pert.linear_factors(i, direction)
        if mode == "full":
            full_phi = tuple(phi_h) + tuple(phi_v)
            composed = vec_compose_linear(full_phi, lam_f, mu_f)
            lin = (vec_scale_each(full_phi[:decks.n_h], lam_f)
                   + vec_scale_each(full_phi[decks.n_h:], mu_f))
            target = vec_substitute(tau_h + tau_v, phi_h, phi_v, n_v, n_h_budget)
            absorb(vec_sub(vec_sub(composed, lin), target))
        elif mode == "vertical":
            shift = vec_substitute(tau_h, None, phi_v, n_v, n_h_budget)
            psi = vec_compose_linear(phi_v, lam_f, mu_f)
            shift_scaled = vec_scale_each(shift, _inv(lam_f, pert.mode))
            moved = vec_substitute(psi, shift_scaled, None, n_v, n_h_budget)
            lin = vec_scale_each(phi_v, mu_f)
            target = vec_substitute(tau_v, None, phi_v, n_v, n_h_budget)
            absorb(vec_sub(vec_sub(moved, lin), target))
        else:
            raise LinearizeError(f"unknown mode {mode!r}")
    return per_degree


# ----------------------------------------------------------------------
# majorant sequences


class EtaSequence(NamedTuple):
    values: list[float]       # index by degree, [0] unused
    log_values: list[float]
    d_growth: float


def eta_sequence(c1: float, eta_margin: float, tau: float, nu: float,
                 m_max: int) -> EtaSequence:
    """The comparison weights eta_1 = 1,
    eta_m = (C1/eta^{tau+nu}) 2^{m(tau+nu)} max over partitions
    m_1+...+m_p+s = m (1 <= m_i <= m-1, s >= 0) of eta_{m_1}...eta_{m_p};
    computed in the log domain with a dynamic program over part sums.
    """
    if min(c1, eta_margin, tau, nu) <= 0:
        raise LinearizeError("majorant constants must be positive")
    if m_max < 2:
        raise LinearizeError("need m_max >= 2")
    s_expo = tau + nu
    base = math.log(c1) - s_expo * math.log(eta_margin)
    log2 = math.log(2.0)
    log_eta = [0.0] * (m_max + 1)
    log_eta[0] = float("-inf")
    for m in range(2, m_max + 1):
        # best log-product over exact part sums t <= m with parts <= m-1
        w = [0.0] + [float("-inf")] * m
        for t in range(1, m + 1):
            for k in range(1, min(t, m - 1) + 1):
                cand = log_eta[k] + w[t - k]
                if cand > w[t]:
                    w[t] = cand
        best = max(w)
        log_eta[m] = base + m * s_expo * log2 + best
    values = [_safe_exp(x) for x in log_eta]
    values[0] = 0.0
    d_growth = _safe_exp(max(log_eta[m] / m for m in range(1, m_max + 1)))
    return EtaSequence(values, log_eta, d_growth)


def _safe_exp(x: float) -> float:
    if x == float("-inf"):
        return 0.0
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


# ----------------------------------------------------------------------
# majorant functional systems


def _poly_mul(a: list[float], b: list[float], cap: int) -> list[float]:
    out = [0.0] * (cap + 1)
    for i, x in enumerate(a):
        if x == 0.0 or i > cap:
            continue
        for j, y in enumerate(b):
            if i + j > cap:
                break
            if y:
                out[i + j] += x * y
    return out


def _poly_add(a, b, cap):
    out = [0.0] * (cap + 1)
    for i in range(cap + 1):
        if i < len(a):
            out[i] += a[i]
        if i < len(b):
            out[i] += b[i]
    return out


def _count_multi(k: int, dim: int) -> int:
    return math.comb(k + dim - 1, dim - 1)


def _sum_weighted_powers(base: list[float], weight, k_min: int, cap: int) -> list[float]:
    """sum_{k >= k_min} weight(k) base^k truncated at cap; base(0) = 0."""
    out = [0.0] * (cap + 1)
    power = [0.0] * (cap + 1)
    power[0] = 1.0
    for k in range(1, cap + 1):
        power = _poly_mul(power, base, cap)
        if all(x == 0.0 for x in power):
            break
        if k >= k_min:
            wk = weight(k)
            if wk:
                for idx, val in enumerate(power):
                    out[idx] += wk * val
    return out


def _geom_inv_pow(x: list[float], n: int, cap: int) -> list[float]:
    """(1 - x)^{-n} - 1 truncated at cap; x(0) = 0."""
    return _sum_weighted_powers(x, lambda k: math.comb(n + k - 1, k), 1, cap)


def _g_of(t_plus_u: list[float], r_prime: float, d: int, cap: int) -> list[float]:
    return _sum_weighted_powers(t_plus_u,
                                lambda k: _count_multi(k, d) * r_prime ** k,
                                2, cap)


@dataclass
class MajorantCert:
    mode: str
    eta: list[float]
    log_eta: list[float]
    d_growth: float
    a_seq: list[float]
    b_seq: dict[str, list[float]]
    constants: dict

    def bound(self, m: int) -> float:
        return self.a_seq[m] * self.eta[m]

    def b_bound(self, label: str, m: int) -> float:
        return self.b_seq[label][m] * self.eta[m]

    def to_json_dict(self) -> dict:
        return {"mode": self.mode, "eta": list(self.eta),
                "D_growth": self.d_growth, "A": list(self.a_seq),
                "B": {k: list(v) for k, v in self.b_seq.items()},
                "constants": dict(self.constants)}


def majorant_functional_solve(mode: str, constants: dict, m_max: int) -> MajorantCert:
    """Solve the majorant fixed-point system degree by degree.

    Vertical mode couples A with the translate family B (all B^{+-e_i}
    satisfy the same equation, hence coincide; the family sum is 2q B).
    Full mode solves A = g h with g the weighted powers of (t + A) at
    radius R' and h the same at the interior-distance denominator M; its
    first nonzero coefficient appears at degree 4.  Every computed
    coefficient must be nonnegative; a negative one fails hard.
    """
    need = {"r_prime", "c1", "eta_margin", "tau", "nu", "n_h", "d", "q"}
    if mode == "vertical":
        need |= {"c", "c_prime", "c_dprime"}
    elif mode == "full":
        need |= {"m_denom"}
    else:
        raise LinearizeError(f"unknown majorant mode {mode!r}")
    missing = need - set(constants)
    if missing:
        raise LinearizeError(f"missing majorant constants: {sorted(missing)}")
    for key in need:
        if not constants[key] > 0:
            raise LinearizeError(f"constant {key} must be positive")

    eta = eta_sequence(constants["c1"], constants["eta_margin"],
                       constants["tau"], constants["nu"], m_max)
    n_h, d, q = int(constants["n_h"]), int(constants["d"]), int(constants["q"])
    r_prime = constants["r_prime"]
    cap = m_max
    t_poly = [0.0, 1.0] + [0.0] * (cap - 1)

    a = [0.0] * (cap + 1)
    if mode == "vertical":
        b = [0.0] * (cap + 1)
        c_over = constants["c"] / constants["c_dprime"] ** constants["nu"]
        ratio = constants["c_prime"] / constants["c_dprime"]
        for m in range(2, cap + 1):
            g_a = _g_of(_poly_add(t_poly, a, cap), r_prime, d, cap)
            g_b = _g_of(_poly_add(t_poly, b, cap), r_prime, d, cap)
            coupling = _poly_add(a, [2 * q * x for x in b], cap)
            brk_a = _geom_inv_pow([ratio * x for x in g_a], n_h, cap)
            brk_b = _geom_inv_pow([ratio * x for x in g_b], n_h, cap)
            rhs_a = _poly_add(g_a, [c_over * x for x in _poly_mul(coupling, brk_a, cap)], cap)
            rhs_b = _poly_add(g_b, [c_over * x for x in _poly_mul(coupling, brk_b, cap)], cap)
            a[m], b[m] = rhs_a[m], rhs_b[m]
            if a[m] < 0 or b[m] < 0:
                raise LinearizeError(f"negative majorant coefficient at degree {m}")
        b_seq = {}
        for i in range(1, q + 1):
            b_seq[f"+e{i}"] = list(b)
            b_seq[f"-e{i}"] = list(b)
    else:
        m_denom = constants["m_denom"]
        for m in range(2, cap + 1):
            base = _poly_add(t_poly, a, cap)
            g = _g_of(base, r_prime, d, cap)
            h = _sum_weighted_powers(base,
                                     lambda k: _count_multi(k, n_h) * m_denom ** -k,
                                     2, cap)
            rhs = _poly_mul(g, h, cap)
            a[m] = rhs[m]
            if a[m] < 0:
                raise LinearizeError(f"negative majorant coefficient at degree {m}")
        b_seq = {}
    return MajorantCert(mode, eta.values, eta.log_values, eta.d_growth,
                        a, b_seq, dict(constants))


# ----------------------------------------------------------------------
# domination certificates


def grid_ladder(base: GridSpec, m_max: int, eta_over_kappa: float = 0.25) -> list[GridSpec]:
    """Shrinking grids: r_m = r_1 e^{-sum 2^{-k}}, slab scale
    eps_m/eps_1 = 1 - eta_over_kappa sum 2^{-k}; indices 0..m_max with the
    first two entries copies of the base."""
    if not 0 < eta_over_kappa < 0.5:
        raise LinearizeError("eta/kappa ratio must sit in (0, 1/2)")
    grids = [base, base]
    acc = 0.0
    for m in range(2, m_max + 1):
        acc += 2.0 ** -(m - 1)
        v_factor = math.exp(-acc)
        eps_scale = 1.0 - eta_over_kappa * acc
        # log-radial shrink towards the unit torus mirrors the slab shrink
        rows = tuple(tuple(r ** eps_scale for r in row) for row in base.h_radii)
        grids.append(GridSpec(rows, base.v_radius * v_factor, base.angles))
    return grids


class DominationReport(NamedTuple):
    passed: bool
    first_fail: int | None
    rows: list   # (degree, sup, bound) plus B rows in vertical mode


def certify_domination(result: LinearizationResult, cert: MajorantCert,
                       grids: Sequence[GridSpec],
                       decks: DeckLinearData | None = None) -> DominationReport:
    """Check sup |[phi]_m| <= A_m eta_m on the m-th ladder grid for each
    degree (and the B bounds on deck-translated grids in vertical mode)."""
    rows = []
    first_fail = None
    comps = tuple(result.phi_h) + tuple(result.phi_v)
    m_top = min(result.n_v, len(cert.a_seq) - 1, len(grids) - 1)
    for m in range(2, m_top + 1):
        sup = max((grid_sup_norm(c.homogeneous_part(m), grids[m]) for c in comps),
                  default=0.0)
        bound = cert.bound(m)
        ok = sup <= bound
        rows.append((m, sup, bound, "A"))
        if not ok and first_fail is None:
            first_fail = m
        if cert.mode == "vertical" and decks is not None and cert.b_seq:
            for i in range(decks.q):
                for sign, label in ((1, f"+e{i+1}"), (-1, f"-e{i+1}")):
                    factors = [abs(scalars.as_complex(x)) ** sign
                               for x in decks.lam[i]]
                    shifted = grids[m].scaled(factors)
                    sup_b = max((grid_sup_norm(c.homogeneous_part(m), shifted)
                                 for c in comps), default=0.0)
                    bound_b = cert.b_bound(label, m)
                    rows.append((m, sup_b, bound_b, label))
                    if sup_b > bound_b and first_fail is None:
                        first_fail = m
    return DominationReport(first_fail is None, first_fail, rows)


# ----------------------------------------------------------------------
# constant fitting


def fit_majorant_constants(pert: DeckPerturbation, report: DiophantineReport,
                           base_grid: GridSpec, mode: str = "vertical",
                           kappa: float = 1.0, safety: float = 2.0) -> dict:
    """Empirical constants for the majorant system, fitted on the data.

    R' comes from the per-slice sup norms of the perturbations (the
    smallest geometric envelope over |Q|); C1 from the measured ratio of a
    degree-2 solve to its data; the remaining constants are unit-scale
    with the stated safety factor.  Constants are inputs to an independent
    check, never a correctness claim.
    """
    if report.tau is None:
        raise LinearizeError("need a resonance-free scan to fit constants")
    decks = pert.decks
    nu = decks.n_h + decks.d + 1
    r_prime = 1e-9
    for i in range(decks.q):
        for comp in pert.stacked(i):
            by_q: dict[tuple[int, ...], FormalSeries] = {}
            for key, c in comp.terms.items():
                slice_map = by_q.setdefault(key.Q, {})
                slice_map[(key.P, (0,) * comp.n_v)] = c
            for q_exp, slice_terms in by_q.items():
                size = sum(q_exp)
                if size < 2:
                    continue
                slice_series = comp.like(slice_terms)
                sup = grid_sup_norm(slice_series, base_grid)
                if sup > 0:
                    r_prime = max(r_prime, sup ** (1.0 / size))
    # degree-2 family ratio for C1
    rhs2 = tuple(vec_homog(pert.stacked(i), 2) for i in range(decks.q))
    kind = "full" if mode == "full" else "vertical"
    if kind == "vertical":
        rhs2 = tuple(vec[decks.n_h:] for vec in rhs2)
    sys2 = CochainSystem(decks, rhs2, kind)
    g2 = solve_family(sys2)
    sup_g = max((grid_sup_norm(c, base_grid) for c in g2), default=0.0)
    sup_f = max((grid_sup_norm(c, base_grid) for vec in rhs2 for c in vec),
                default=0.0)
    delta = rho = 0.5
    expo = report.tau + nu
    geom = delta ** -expo + rho ** -expo
    c1 = safety * sup_g / (sup_f * geom) if sup_f > 0 else safety
    c1 = max(c1, 1e-6)
    constants = {"r_prime": max(r_prime * safety, 1e-9), "c1": c1,
                 "eta_margin": kappa / 4.0, "tau": float(report.tau),
                 "nu": float(nu), "n_h": decks.n_h, "d": decks.d,
                 "q": decks.q}
    if mode == "vertical":
        constants.update({"c": 1.0, "c_prime": 1.0, "c_dprime": 1.0})
    else:
        constants.update({"m_denom": 1.0})
    return constants
