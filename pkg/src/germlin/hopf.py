"""Hopf-manifold toolkit: eigenvalue-group membership, genericity
classification, cohomology-vanishing criteria, nested Stein coverings with
their transition graphs, Shilov-boundary constants, and the over-diagonal
deformation.

A Hopf manifold here is the quotient of C^n minus the origin by a linear
contraction with eigenvalues alpha (moduli in (0,1), nondecreasing), plus
optional torsion data (a finite extra generator) for the non-primary
variants.  Flat line bundles are encoded by the character value beta of
the contraction generator.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .scalars import QC, as_complex
from .divisors import signed_vectors

EQ_TOL = 1e-12


class HopfError(ValueError):
    pass


def _approx_eq(x, y, tol: float = EQ_TOL) -> bool:
    """Equality after normalizing by the larger modulus; exact when both
    operands are exact."""
    if isinstance(x, QC) and isinstance(y, QC):
        return x == y
    xc, yc = as_complex(x), as_complex(y)
    scale = max(abs(xc), abs(yc), 1e-300)
    return abs(xc - yc) <= tol * scale


def _exact_sqrt(frac: Fraction) -> Fraction | None:
    num, den = frac.numerator, frac.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None


def _modulus(x):
    """|x| as an exact Fraction when possible, else float."""
    if isinstance(x, QC):
        root = _exact_sqrt(x.abs2())
        if root is not None:
            return root
        return abs(x)
    return abs(x)


@dataclass(frozen=True)
class HopfSpec:
    """Contraction eigenvalues, Jordan flags, optional torsion generator."""

    alpha: tuple
    jordan_overdiag: tuple[bool, ...] = ()
    torsion: tuple[int, object] | None = None   # (order m, root of unity a)

    def __post_init__(self):
        alpha = tuple(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if len(alpha) < 2:
            raise HopfError("need dimension >= 2")
        mods = [float(_modulus(a)) for a in alpha]
        if any(not 0 < m < 1 for m in mods):
            raise HopfError("eigenvalue moduli must lie in (0, 1)")
        if any(m2 < m1 - EQ_TOL for m1, m2 in zip(mods, mods[1:])):
            raise HopfError("eigenvalues must be ordered by modulus")
        flags = tuple(bool(b) for b in self.jordan_overdiag)
        if flags and len(flags) not in (len(alpha) - 1, len(alpha)):
            raise HopfError("jordan flag vector has wrong length")
        object.__setattr__(self, "jordan_overdiag", flags)
        if self.torsion is not None:
            m, a = self.torsion
            if m < 1:
                raise HopfError("torsion order must be >= 1")
            if abs(as_complex(a) ** m - 1) > EQ_TOL:
                raise HopfError("torsion generator is not a root of unity")

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def is_diagonal(self) -> bool:
        return not any(self.jordan_overdiag)

    def alpha_complex(self) -> tuple[complex, ...]:
        return tuple(as_complex(a) for a in self.alpha)

    def to_json_dict(self) -> dict:
        def enc(x):
            z = as_complex(x)
            return {"re": repr(z.real), "im": repr(z.imag)}

        data = {"alpha": [enc(a) for a in self.alpha],
                "jordan_overdiag": list(self.jordan_overdiag)}
        if self.torsion:
            data["torsion"] = {"m": self.torsion[0], "a": enc(self.torsion[1])}
        return data

    @classmethod
    def from_json_dict(cls, data: dict) -> "HopfSpec":
        def dec(e):
            return QC(Fraction(e["re"]), Fraction(e["im"]))

        torsion = None
        if data.get("torsion"):
            torsion = (int(data["torsion"]["m"]), dec(data["torsion"]["a"]))
        return cls(tuple(dec(e) for e in data["alpha"]),
                   tuple(data.get("jordan_overdiag", ())), torsion)


@dataclass(frozen=True)
class FlatBundle:
    """Character data of a flat line bundle: beta on the contraction, the
    optional d_char on the torsion generator."""

    beta: object
    d_char: object | None = None

    def __post_init__(self):
        if not as_complex(self.beta):
            raise HopfError("beta must be nonzero")

    def to_json_dict(self) -> dict:
        z = as_complex(self.beta)
        out = {"beta": {"re": repr(z.real), "im": repr(z.imag)}}
        if self.d_char is not None:
            w = as_complex(self.d_char)
            out["d_char"] = {"re": repr(w.real), "im": repr(w.imag)}
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> "FlatBundle":
        def dec(e):
            return QC(Fraction(e["re"]), Fraction(e["im"]))

        d_char = dec(data["d_char"]) if data.get("d_char") else None
        return cls(dec(data["beta"]), d_char)


# ----------------------------------------------------------------------
# eigenvalue-group arithmetic


def _power_product(values: Sequence, exponents: Sequence[int]):
    exact = all(isinstance(v, QC) for v in values)
    out = QC(1) if exact else 1 + 0j
    for v, e in zip(values, exponents):
        if e:
            base = v if exact else as_complex(v)
            out = out * base ** e
    return out


class MembershipResult(NamedTuple):
    member: bool
    witness: tuple[int, ...] | None
    bound: int


def delta_membership(beta, spec: HopfSpec, m_power: int = 1,
                     exp_bound: int = 12) -> MembershipResult:
    """Decide beta^{m_power} = prod alpha_i^{v_i} for some v in Z^n with
    |v|_1 <= exp_bound; returns the first witness in norm-then-lex order
    or certified non-membership up to the bound."""
    if exp_bound < 1 or m_power < 1:
        raise HopfError("bounds must be >= 1")
    target = _power_product([beta], [m_power])
    alpha = spec.alpha
    target_c = as_complex(target)
    log_mods = [math.log(abs(as_complex(a))) for a in alpha]
    log_target = math.log(abs(target_c)) if target_c else None
    for norm in range(0, exp_bound + 1):
        for v in sorted(signed_vectors(norm, spec.n)):
            if log_target is not None:
                approx = sum(l * e for l, e in zip(log_mods, v))
                if abs(approx - log_target) > 64 * EQ_TOL * (1 + abs(approx)) + 1e-9:
                    continue
            if _approx_eq(_power_product(alpha, v), target):
                return MembershipResult(True, v, exp_bound)
    return MembershipResult(False, None, exp_bound)


def delta_membership_bruteforce(beta, spec: HopfSpec, m_power: int = 1,
                                exp_bound: int = 12) -> MembershipResult:
    """Plain full enumeration without the modulus prefilter (test oracle)."""
    target = _power_product([beta], [m_power])
    for norm in range(0, exp_bound + 1):
        for v in sorted(signed_vectors(norm, spec.n)):
            if _approx_eq(_power_product(spec.alpha, v), target):
                return MembershipResult(True, v, exp_bound)
    return MembershipResult(False, None, exp_bound)


class ClassifyResult(NamedTuple):
    kind: str                       # classical | generic | diagonal | undetermined
    witness: tuple | None           # (positive side, negative side) exponents
    bound: int
    reason: str


def classify_hopf(spec: HopfSpec, exp_bound: int = 8) -> ClassifyResult:
    """Classical means a scalar contraction; generic means strictly ordered
    moduli and no monomial relation prod alpha^{r_i} (A side) =
    prod alpha^{r_j} (complement side) with nonnegative exponents summing
    to <= exp_bound per side.  Diagonalizable specs failing genericity
    report the witness relation."""
    if exp_bound < 1:
        raise HopfError("exponent bound must be >= 1")
    alpha = spec.alpha
    if all(_approx_eq(a, alpha[0]) for a in alpha):
        if spec.is_diagonal:
            return ClassifyResult("classical", None, exp_bound, "all eigenvalues equal")
        return ClassifyResult("undetermined", None, exp_bound,
                              "scalar diagonal with Jordan blocks")
    if not spec.is_diagonal:
        return ClassifyResult("undetermined", None, exp_bound,
                              "Jordan flags present; eigenvalue criteria need the diagonal deformation")
    mods = [float(_modulus(a)) for a in alpha]
    if any(m2 <= m1 + EQ_TOL for m1, m2 in zip(mods, mods[1:])):
        return ClassifyResult("diagonal", None, exp_bound,
                              "moduli not strictly ordered")
    one = QC(1) if all(isinstance(a, QC) for a in alpha) else 1 + 0j
    for total in range(1, 2 * exp_bound + 1):
        for s in sorted(signed_vectors(total, spec.n)):
            pos = sum(e for e in s if e > 0)
            neg = sum(-e for e in s if e < 0)
            if pos > exp_bound or neg > exp_bound:
                continue
            if _approx_eq(_power_product(alpha, s), one):
                witness = (tuple(max(e, 0) for e in s),
                           tuple(max(-e, 0) for e in s))
                return ClassifyResult("diagonal", witness, exp_bound,
                                      "monomial relation found")
    return ClassifyResult("generic", None, exp_bound, "no relation up to bound")


# ----------------------------------------------------------------------
# vanishing criteria


class VanishingReport(NamedTuple):
    variant: str
    criterion_holds: bool
    h0_vanishes: bool | None
    h1_vanishes: bool | None
    witness: tuple | None
    bound: int
    reason: str


def vanishing_predicate(bundle: FlatBundle, spec: HopfSpec, variant: str,
                        exp_bound: int = 12) -> VanishingReport:
    """Evaluate the arithmetic vanishing criterion of the chosen variant.

    When the criterion holds up to the bound, both H^0 and H^1 of the flat
    bundle vanish (the supported variants all assert the pair); when a
    witness turns up the predicate makes no vanishing claim.
    """
    if variant == "mall_generic":
        cls = classify_hopf(spec, exp_bound)
        if cls.kind != "generic":
            raise HopfError(f"variant mall_generic needs a generic spec, got {cls.kind}")
        res = delta_membership(bundle.beta, spec, 1, exp_bound)
        holds = not res.member
        return VanishingReport(variant, holds, holds or None, holds or None,
                               res.witness, exp_bound,
                               "beta outside the eigenvalue group up to bound"
                               if holds else "beta is a witnessed member")
    if variant == "classical":
        alpha = spec.alpha
        if not all(_approx_eq(a, alpha[0]) for a in alpha):
            raise HopfError("variant classical needs equal eigenvalues")
        witness = None
        for k in range(-exp_bound, exp_bound + 1):
            if _approx_eq(_power_product([alpha[0]], [k]), bundle.beta):
                witness = (k,)
                break
        holds = witness is None
        return VanishingReport(variant, holds, holds or None, holds or None,
                               witness, exp_bound,
                               "beta outside the cyclic group up to bound"
                               if holds else "beta is a power of alpha")
    if variant in ("zhou1", "zhou2"):
        if spec.torsion is None or bundle.d_char is None:
            raise HopfError("zhou variants need torsion data and d_char")
        m_order, a_root = spec.torsion
        c, d = bundle.beta, bundle.d_char
        if variant == "zhou1":
            alpha = spec.alpha
            if not all(_approx_eq(x, alpha[0]) for x in alpha):
                raise HopfError("variant zhou1 needs a scalar contraction")
            witness = None
            for r in range(0, exp_bound + 1):
                if (_approx_eq(_power_product([alpha[0]], [r]), c)
                        and _approx_eq(_power_product([a_root], [r]), d)):
                    witness = (r,)
                    break
            holds = witness is None
            return VanishingReport(variant, holds, holds or None, holds or None,
                                   witness, exp_bound,
                                   "no exponent r with c = mu^r, d = a^r"
                                   if holds else "witnessed exponent")
        witness = None
        for total in range(0, exp_bound + 1):
            if witness:
                break
            for v in itertools.product(range(total + 1), repeat=spec.n):
                if sum(v) != total:
                    continue
                cone_a = all(x >= 1 for x in v)
                cone_b = all(x >= 0 for x in v) and any(x == 0 for x in v)
                if not (cone_a or cone_b):
                    continue
                if (_approx_eq(_power_product(spec.alpha, v), c)
                        and _approx_eq(_power_product([a_root], [sum(v)]), d)):
                    witness = tuple(v)
                    break
        holds = witness is None
        return VanishingReport(variant, holds, holds or None, holds or None,
                               witness, exp_bound,
                               "no admissible exponent vector" if holds
                               else "witnessed exponent vector")
    raise HopfError(f"unknown vanishing variant {variant!r}")


class CheckItem(NamedTuple):
    name: str
    index: int
    power: int
    passed: bool
    witness: tuple | None


class PrecheckReport(NamedTuple):
    passed: bool
    items: list
    bound: int

    def to_json_dict(self) -> dict:
        return {"passed": self.passed, "bound": self.bound,
                "items": [{"condition": it.name, "i": it.index, "m": it.power,
                           "verdict": "pass" if it.passed else "fail",
                           "witness": list(it.witness) if it.witness else None}
                          for it in self.items]}


def hopf_precheck(bundle: FlatBundle, spec: HopfSpec, n_v: int = 6,
                  exp_bound: int = 12) -> PrecheckReport:
    """Check every membership condition that full linearization of the
    hypersurface embedding needs: beta alpha_i^{+-1} and beta^{-m} alpha_i
    (m = 1..n_v) must all avoid the eigenvalue group up to the bound.

    All conditions passing certifies, up to the scanned bound, both the
    tangent splitting and the vanishing of the obstruction cohomology at
    every twist."""
    cls = classify_hopf(spec, min(exp_bound, 8))
    if cls.kind != "generic":
        raise HopfError(f"precheck needs a generic spec, got {cls.kind}: {cls.reason}")
    alpha = spec.alpha
    items = []

    def probe(name, target, index, power):
        res = delta_membership(target, spec, 1, exp_bound)
        items.append(CheckItem(name, index, power, not res.member, res.witness))

    for i, a in enumerate(alpha):
        beta = bundle.beta
        probe("beta*alpha", _mul(beta, a), i, 1)
        probe("beta/alpha", _div(beta, a), i, 1)
    for m in range(1, n_v + 1):
        for i, a in enumerate(alpha):
            target = _mul(_power_product([bundle.beta], [-m]), a)
            probe("beta^-m*alpha", target, i, m)
    return PrecheckReport(all(it.passed for it in items), items, exp_bound)


def _mul(x, y):
    if isinstance(x, QC) and isinstance(y, QC):
        return x * y
    return as_complex(x) * as_complex(y)


def _div(x, y):
    if isinstance(x, QC) and isinstance(y, QC):
        return x / y
    return as_complex(x) / as_complex(y)


class H0Report(NamedTuple):
    count: int
    witnesses: list
    bound: int


def h0_monomial_oracle(bundle: FlatBundle, spec: HopfSpec,
                       exp_bound: int = 12) -> H0Report:
    """Count monomial sections z^v (v in N^n, |v| <= bound) with
    alpha^v = beta; a positive count certifies nonvanishing sections while
    zero is consistent withemptiness up to the bound."""
    if not spec.is_diagonal:
        raise HopfError("monomial sections need a diagonal spec")
    witnesses = []
    for total in range(0, exp_bound + 1):
        for v in itertools.product(range(total + 1), repeat=spec.n):
            if sum(v) != total:
                continue
            if _approx_eq(_power_product(spec.alpha, v), bundle.beta):
                witnesses.append(tuple(v))
    return H0Report(len(witnesses), witnesses, exp_bound)


# ----------------------------------------------------------------------
# nested coverings


@dataclass(frozen=True)
class NestedCoveringSpec:
    """Radii r_1 < r_2 < r_3 < r_4 = r_1/|alpha_j| per coordinate, margin
    delta, and the per-coordinate expansion factor."""

    radii: tuple        # radii[i][j], i = 0..3
    delta: object       # Fraction or float, > 0
    expansion: tuple    # 1/|alpha_j| per coordinate

    @property
    def n(self) -> int:
        return len(self.radii[0])

    def annulus(self, i: int, j: int) -> tuple[float, float]:
        r = float(self.radii[i][j])
        d = float(self.delta)
        return (r - d, r + d)

    def box_bound(self, j: int) -> float:
        return float(self.radii[3][j]) + float(self.delta) / 2

    def contains(self, i: int, j: int, z: Sequence[complex]) -> bool:
        lo, hi = self.annulus(i, j)
        if not lo < abs(z[j]) < hi:
            return False
        bound = self.box_bound(j)
        return all(abs(z[k]) < bound for k in range(self.n) if k != j)

    def to_json_dict(self) -> dict:
        return {"delta": str(self.delta),
                "radii": [[str(x) for x in row] for row in self.radii],
                "expansion": [str(x) for x in self.expansion]}


def build_covering(spec: HopfSpec, delta, r1: Sequence) -> NestedCoveringSpec:
    """Radii for the three-band covering of each coordinate direction.

    r4 = r1/|alpha_j| spans one fundamental annulus of the contraction and
    r2, r3 interpolate geometrically.  Validates, per coordinate: the
    deck map cannot identify two points of one band (delta small enough),
    consecutive bands plus the wrap of the first cover the annulus (delta
    large enough), and no three bands meet even through deck shifts.
    """
    if float(delta) <= 0:
        raise HopfError("delta must be positive")
    alpha_mods = [_modulus(a) for a in spec.alpha]
    r1 = list(r1)
    if len(r1) != spec.n:
        raise HopfError("need one base radius per coordinate")
    rows = [[], [], [], []]
    for j, (base, mod) in enumerate(zip(r1, alpha_mods)):
        if isinstance(base, Fraction) and isinstance(mod, Fraction):
            r4 = base / mod
        else:
            r4 = float(base) / float(mod)
        ratio = (float(r4) / float(base)) ** (1.0 / 3.0)
        rows[0].append(base)
        rows[1].append(float(base) * ratio)
        rows[2].append(float(base) * ratio ** 2)
        rows[3].append(r4)
    cov = NestedCoveringSpec(tuple(tuple(r) for r in rows), delta,
                             tuple(1 / m if isinstance(m, Fraction) else 1.0 / float(m)
                                   for m in alpha_mods))
    _validate_covering(cov, [float(m) for m in alpha_mods])
    return cov


def _validate_covering(cov: NestedCoveringSpec, mods: list[float]):
    d = float(cov.delta)
    for j, mod in enumerate(mods):
        rs = [float(cov.radii[i][j]) for i in range(4)]
        if any(r <= d for r in rs):
            raise HopfError(f"delta too large: radii of coordinate {j} must exceed it")
        for i in range(3):
            if mod * (rs[i] + d) >= rs[i] - d:
                raise HopfError(
                    f"delta too large (or |alpha_{j}| too close to 1): band {i+1} "
                    "meets its own deck image")
        # consecutive bands and the wrap of band 1 must chain up
        if rs[1] - d >= rs[0] + d or rs[2] - d >= rs[1] + d:
            raise HopfError(f"delta too small: gap between bands of coordinate {j}")
        if rs[3] - d / mod >= rs[2] + d:
            raise HopfError(f"delta too small: wrap gap of coordinate {j}")
        # no modulus lies in all three bands even through deck shifts; bands
        # 1 and 3 may (and must) meet across the wrap, but not directly
        bands = [(rs[i] - d, rs[i] + d) for i in range(3)]
        for k1, k3 in itertools.product(range(-2, 3), repeat=2):
            lo = max(bands[1][0], bands[0][0] * mod ** -k1, bands[2][0] * mod ** -k3)
            hi = min(bands[1][1], bands[0][1] * mod ** -k1, bands[2][1] * mod ** -k3)
            if lo < hi:
                raise HopfError(
                    f"delta too large: triple band overlap in coordinate {j}")
        if bands[2][0] < bands[0][1]:
            raise HopfError(
                f"delta too large: bands 1 and 3 of coordinate {j} overlap directly")


def orbit_hits(cov: NestedCoveringSpec, spec: HopfSpec, z: Sequence[complex],
               k_range=range(-40, 41)) -> set[tuple[int, int, int]]:
    """All (band i, coordinate j, deck power k) with alpha^k z in the piece."""
    alpha = spec.alpha_complex()
    hits = set()
    for k in k_range:
        w = [a ** k * zz for a, zz in zip(alpha, z)]
        if any(abs(x) > 10 * cov.box_bound(jj) for jj, x in enumerate(w)):
            continue
        for j in range(cov.n):
            for i in range(3):
                if cov.contains(i, j, w):
                    hits.add((i + 1, j, k))
    return hits


# ----------------------------------------------------------------------
# transition graphs and chains


class TransitionGraph:
    """Finite graph of covering pieces with constant transition values;
    reverse edges are completed automatically as inverses."""

    def __init__(self, nodes: Sequence, edges: dict):
        self.nodes = tuple(nodes)
        self.edges: dict[tuple, complex] = {}
        for (a, b), l in edges.items():
            l = as_complex(l)
            if not l:
                raise HopfError("transition values must be nonzero")
            self.edges[(a, b)] = l
            back = self.edges.get((b, a))
            if back is None:
                self.edges[(b, a)] = 1 / l
            elif abs(back * l - 1) > 1e-9 * max(1.0, abs(back * l)):
                raise HopfError(f"inconsistent inverse transitions on {(a, b)}")

    def neighbors(self, a):
        for (x, y), l in self.edges.items():
            if x == a:
                yield y, l


def transition_chain_search(graph: TransitionGraph,
                            tol: float = 1e-12) -> dict:
    """Shortest chain from each start node through |l| <= 1 edges ending at
    an edge with |l| < 1, or None when no such chain exists."""
    out = {}
    for start in graph.nodes:
        parent = {start: None}
        queue = deque([start])
        found = None
        while queue and found is None:
            node = queue.popleft()
            for nxt, l in graph.neighbors(node):
                mag = abs(l)
                if mag < 1 - tol:
                    found = _path(parent, node) + [nxt]
                    break
                if mag <= 1 + tol and nxt not in parent:
                    parent[nxt] = node
                    queue.append(nxt)
        out[start] = found
    return out


def _path(parent, node):
    chain = [node]
    while parent[node] is not None:
        node = parent[node]
        chain.append(node)
    return chain[::-1]


def reachable_with_contraction(graph: TransitionGraph, tol: float = 1e-12) -> dict:
    """Independent verdict per start node via transitive closure over the
    |l| <= 1 subgraph (oracle for the chain search)."""
    nodes = list(graph.nodes)
    idx = {n: i for i, n in enumerate(nodes)}
    size = len(nodes)
    closure = np.eye(size, dtype=bool)
    for (a, b), l in graph.edges.items():
        if abs(l) <= 1 + tol:
            closure[idx[a], idx[b]] = True
    for _ in range(size):
        closure = closure | (closure @ closure)
    has_small = np.zeros(size, dtype=bool)
    for (a, b), l in graph.edges.items():
        if abs(l) < 1 - tol:
            has_small[idx[a]] = True
    return {n: bool(np.any(closure[idx[n]] & has_small)) for n in nodes}


def hopf_transition_graph(cov: NestedCoveringSpec, spec: HopfSpec,
                          bundle: FlatBundle) -> TransitionGraph:
    """Nerve of the covering with the flat-bundle transition values.

    Pieces are (band, coordinate); two pieces are joined when their moduli
    boxes intersect after a deck shift k in {-1, 0, 1}, and the edge value
    is beta^{-k} so the wrap from band 1 up to band 3 carries beta.
    """
    mods = [float(_modulus(a)) for a in spec.alpha]
    beta = as_complex(bundle.beta)
    nodes = [(i, j) for j in range(cov.n) for i in (1, 2, 3)]
    edges = {}

    def interval(node, k):
        """Per-coordinate modulus intervals of the piece shifted by alpha^k."""
        i, j = node
        lo, hi = cov.annulus(i - 1, j)
        bound = cov.box_bound(j)
        rows = []
        for c in range(cov.n):
            base = (lo, hi) if c == j else (0.0, bound)
            s = mods[c] ** k
            rows.append((base[0] * s, base[1] * s))
        return rows

    for a, b in itertools.combinations(nodes, 2):
        for k in (0, -1, 1):
            ia, ib = interval(a, 0), interval(b, k)
            if all(max(x[0], y[0]) < min(x[1], y[1]) for x, y in zip(ia, ib)):
                if (a, b) not in edges:
                    edges[(a, b)] = beta ** (-k)
                break
    return TransitionGraph(nodes, edges)


# ----------------------------------------------------------------------
# Shilov constants and the over-diagonal deformation


@dataclass(frozen=True)
class ShilovPiece:
    """Annulus times polydisc: the distinguished torus has |z_j| at either
    annulus radius and every other |z_k| at the polydisc radius."""

    n: int
    annulus_coord: int
    annulus: tuple[float, float]
    disc_radius: float

    def __post_init__(self):
        lo, hi = self.annulus
        if lo <= 0 or hi <= lo or self.disc_radius <= 0:
            raise HopfError("Shilov radii must be positive (no disc through 0)")
        if not 0 <= self.annulus_coord < self.n:
            raise HopfError("annulus coordinate out of range")

    def min_modulus(self, i: int) -> float:
        return self.annulus[0] if i == self.annulus_coord else self.disc_radius


def covering_piece(cov: NestedCoveringSpec, i: int, j: int) -> ShilovPiece:
    return ShilovPiece(cov.n, j, cov.annulus(i - 1, j), cov.box_bound(j))


def shilov_constant(piece: ShilovPiece, fields) -> float:
    """Sup over the distinguished torus of the inf-norm of the inverse
    coefficient matrix of the tangent fields.

    Diagonal fields z_i d/dz_i give diag(z)^{-1}; the Jordan family
    alpha z_i d/dz_i + z_{i+1} d/dz_{i+1} is upper bidiagonal with inverse
    entries (-1)^{j-i} / (alpha^{j-i+1} z_i), so row sums depend only on
    |z_i| and the sup is exact on the torus strata.
    """
    if fields == "diagonal" or fields == ("diagonal",):
        return max(1.0 / piece.min_modulus(i) for i in range(piece.n))
    if isinstance(fields, tuple) and fields and fields[0] == "jordan":
        alpha_mod = abs(as_complex(fields[1]))
        if not 0 < alpha_mod:
            raise HopfError("jordan fields need a nonzero alpha")
        best = 0.0
        for i in range(piece.n):
            tail = piece.n - i
            row = sum(alpha_mod ** -(t + 1) for t in range(tail))
            best = max(best, row / piece.min_modulus(i))
        return best
    raise HopfError(f"unknown field family {fields!r}")


def jordan_field_matrix(alpha: complex, z: Sequence[complex]) -> np.ndarray:
    """Coefficient matrix g with Z_i = sum_j g_ij d/dz_j for the Jordan
    family (dense-inversion oracle helper)."""
    n = len(z)
    g = np.zeros((n, n), dtype=complex)
    for i in range(n):
        g[i, i] = alpha * z[i]
        if i + 1 < n:
            g[i, i + 1] = z[i + 1]
    return g


def jordan_deform(linear: np.ndarray, t: complex) -> np.ndarray:
    """Conjugate by diag(t^{n-1}, ..., t, 1): entry (i, j) scales by
    t^{j-i}.  At t = 0 the over-diagonal part dies and the diagonal
    remains; lower-triangular entries make that limit undefined."""
    g = np.asarray(linear, dtype=complex)
    n = g.shape[0]
    if g.shape != (n, n):
        raise HopfError("need a square matrix")
    out = np.zeros_like(g)
    for i in range(n):
        for j in range(n):
            if not g[i, j]:
                continue
            if t == 0:
                if j < i:
                    raise HopfError("t = 0 limit undefined for lower entries")
                if j == i:
                    out[i, j] = g[i, j]
                continue
            out[i, j] = g[i, j] * t ** (j - i)
    return out
