"""Sparse formal series, Laurent in the horizontal block and Taylor in the
vertical block.

A series lives on ``(C*)^{n_h} x C^{n_v}``: exponent keys pair an integer
vector ``P`` (Laurent, horizontal) with a nonnegative vector ``Q`` (Taylor,
vertical).  Coefficients are exact Gaussian rationals or floats, see
:mod:`germlin.scalars`.  Every series carries explicit truncation caps:
``trunc_v`` grades the iteration and overflow in ``|Q|`` is dropped
silently, while the Laurent spread ``|P|`` is a budget the caller must set
large enough -- nonzero overflow there raises.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from . import scalars
from .scalars import EXACT, FLOAT, QC


class SeriesError(ValueError):
    pass


class TruncationOverflow(SeriesError):
    """A nonzero coefficient landed beyond the Laurent budget."""


class ExponentKey(NamedTuple):
    """Mixed exponent: P indexes horizontal Laurent powers, Q vertical."""

    P: tuple[int, ...]
    Q: tuple[int, ...]

    @property
    def p_size(self) -> int:
        return sum(abs(p) for p in self.P)

    @property
    def q_size(self) -> int:
        return sum(self.Q)


def _key(p: Sequence[int], q: Sequence[int]) -> ExponentKey:
    q = tuple(int(x) for x in q)
    if any(x < 0 for x in q):
        raise SeriesError("vertical exponents must be nonnegative")
    return ExponentKey(tuple(int(x) for x in p), q)


class GridSpec:
    """Sampling grid on a Reinhardt product domain.

    ``h_radii[i]`` is the tuple of sampled radii for horizontal coordinate
    ``i``; every vertical coordinate is sampled on the circle of radius
    ``v_radius``.  ``angles`` points per angular direction (>= 4); doubling
    it refines the sample set.
    """

    __slots__ = ("h_radii", "v_radius", "angles")

    def __init__(self, h_radii: Sequence[Sequence[float]], v_radius: float,
                 angles: int = 16):
        self.h_radii = tuple(tuple(float(r) for r in row) for row in h_radii)
        self.v_radius = float(v_radius)
        self.angles = int(angles)
        if self.angles < 4:
            raise SeriesError("need at least 4 angular samples")
        if self.v_radius <= 0:
            raise SeriesError("vertical radius must be positive")
        for row in self.h_radii:
            if not row or any(r <= 0 for r in row):
                raise SeriesError("horizontal radii must be positive and nonempty")

    def scaled(self, h_factors: Sequence[float] | None = None,
               v_factor: float = 1.0) -> "GridSpec":
        """New grid with radii multiplied coordinatewise."""
        if h_factors is None:
            h_factors = [1.0] * len(self.h_radii)
        rows = tuple(tuple(r * f for r in row)
                     for row, f in zip(self.h_radii, h_factors))
        return GridSpec(rows, self.v_radius * v_factor, self.angles)


class FormalSeries:
    """Finite map from exponent keys to nonzero coefficients."""

    __slots__ = ("n_h", "n_v", "trunc_h", "trunc_v", "mode", "terms")

    def __init__(self, n_h: int, n_v: int, terms: Mapping | None = None,
                 trunc_h: int = 0, trunc_v: int = 0, mode: str = EXACT):
        if mode not in (EXACT, FLOAT):
            raise SeriesError(f"unknown coefficient mode {mode!r}")
        self.n_h = int(n_h)
        self.n_v = int(n_v)
        self.trunc_h = int(trunc_h)
        self.trunc_v = int(trunc_v)
        self.mode = mode
        self.terms = {}
        if terms:
            for raw_key, coeff in terms.items():
                key = _key(*raw_key)
                if len(key.P) != self.n_h or len(key.Q) != self.n_v:
                    raise SeriesError("exponent key has wrong arity")
                if key.q_size > self.trunc_v:
                    raise SeriesError("key beyond vertical truncation")
                if key.p_size > self.trunc_h:
                    raise SeriesError("key beyond Laurent budget")
                self.terms[key] = coeff
            self._cleanup()

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def zero(cls, n_h, n_v, trunc_h, trunc_v, mode=EXACT):
        return cls(n_h, n_v, None, trunc_h, trunc_v, mode)

    @classmethod
    def monomial(cls, n_h, n_v, p, q, coeff, trunc_h, trunc_v, mode=EXACT):
        return cls(n_h, n_v, {(tuple(p), tuple(q)): coeff}, trunc_h, trunc_v, mode)

    @classmethod
    def constant(cls, n_h, n_v, coeff, trunc_h, trunc_v, mode=EXACT):
        return cls.monomial(n_h, n_v, (0,) * n_h, (0,) * n_v, coeff,
                            trunc_h, trunc_v, mode)

    def like(self, terms=None) -> "FormalSeries":
        out = FormalSeries(self.n_h, self.n_v, None, self.trunc_h,
                           self.trunc_v, self.mode)
        if terms:
            for raw_key, coeff in terms.items():
                out.terms[_key(*raw_key)] = coeff
            out._cleanup()
        return out

    # ------------------------------------------------------------------
    # maintenance

    def _cleanup(self):
        if self.mode == EXACT:
            dead = [k for k, c in self.terms.items() if not c]
        else:
            if not self.terms:
                return
            peak = max(abs(c) for c in self.terms.values())
            floor = scalars.FLOAT_CLEAN_REL * peak
            dead = [k for k, c in self.terms.items() if abs(c) <= floor]
        for k in dead:
            del self.terms[k]

    def _zero_coeff(self):
        return scalars.zero(self.mode)

    def copy(self) -> "FormalSeries":
        return self.like(dict(self.terms))

    # ------------------------------------------------------------------
    # inspection

    def is_zero(self) -> bool:
        return not self.terms

    def v_order(self):
        """Minimal |Q| over stored terms, or None for the zero series."""
        if not self.terms:
            return None
        return min(k.q_size for k in self.terms)

    def max_p_size(self) -> int:
        return max((k.p_size for k in self.terms), default=0)

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def coeff(self, p, q):
        return self.terms.get(_key(p, q), self._zero_coeff())

    def __eq__(self, other):
        if not isinstance(other, FormalSeries):
            return NotImplemented
        return (self.n_h, self.n_v, self.mode) == (other.n_h, other.n_v, other.mode) \
            and self.terms == other.terms

    def __hash__(self):
        return hash((self.n_h, self.n_v, frozenset(self.terms.items())))

    def __repr__(self):
        return (f"FormalSeries(n_h={self.n_h}, n_v={self.n_v}, "
                f"terms={len(self.terms)}, trunc=({self.trunc_h},{self.trunc_v}), "
                f"mode={self.mode!r})")

    # ------------------------------------------------------------------
    # ring operations

    def _check_compat(self, other: "FormalSeries"):
        if (self.n_h, self.n_v) != (other.n_h, other.n_v):
            raise SeriesError("dimension mismatch")
        if self.mode != other.mode:
            raise SeriesError("coefficient mode mismatch")

    def _result_caps(self, other: "FormalSeries") -> tuple[int, int]:
        return min(self.trunc_h, other.trunc_h), min(self.trunc_v, other.trunc_v)

    def add(self, other: "FormalSeries") -> "FormalSeries":
        self._check_compat(other)
        cap_h, cap_v = self._result_caps(other)
        out = FormalSeries(self.n_h, self.n_v, None, cap_h, cap_v, self.mode)
        acc = dict(self.terms)
        for k, c in other.terms.items():
            if k in acc:
                acc[k] = acc[k] + c
            else:
                acc[k] = c
        out.terms = _filter_caps(acc, cap_h, cap_v, self.mode)
        out._cleanup()
        return out

    def neg(self) -> "FormalSeries":
        return self.like({k: -c for k, c in self.terms.items()})

    def sub(self, other: "FormalSeries") -> "FormalSeries":
        return self.add(other.neg())

    def scale(self, factor) -> "FormalSeries":
        if self.mode == EXACT and not isinstance(factor, (int, Fraction, QC)):
            raise SeriesError("exact series scaled by inexact factor")
        return self.like({k: c * factor for k, c in self.terms.items()})

    def mul(self, other: "FormalSeries") -> "FormalSeries":
        self._check_compat(other)
        cap_h, cap_v = self._result_caps(other)
        if cap_v == 0 and (any(k.q_size for k in self.terms)
                           or any(k.q_size for k in other.terms)):
            raise SeriesError("truncation bound of zero in mul")
        acc: dict[ExponentKey, object] = {}
        for (p1, q1), c1 in self.terms.items():
            for (p2, q2), c2 in other.terms.items():
                q = tuple(a + b for a, b in zip(q1, q2))
                if sum(q) > cap_v:
                    continue
                p = tuple(a + b for a, b in zip(p1, p2))
                key = ExponentKey(p, q)
                prod = c1 * c2
                if key in acc:
                    acc[key] = acc[key] + prod
                else:
                    acc[key] = prod
        out = FormalSeries(self.n_h, self.n_v, None, cap_h, cap_v, self.mode)
        out.terms = _filter_caps(acc, cap_h, cap_v, self.mode)
        out._cleanup()
        return out

    __add__ = add
    __sub__ = sub
    __mul__ = mul
    __neg__ = neg

    # ------------------------------------------------------------------
    # structured operations

    def homogeneous_part(self, k: int) -> "FormalSeries":
        """Terms with |Q| exactly k."""
        return self.like({key: c for key, c in self.terms.items()
                          if key.q_size == k})

    def truncate_v(self, n_v_cap: int) -> "FormalSeries":
        out = FormalSeries(self.n_h, self.n_v, None, self.trunc_h,
                           min(self.trunc_v, n_v_cap), self.mode)
        out.terms = {k: c for k, c in self.terms.items()
                     if k.q_size <= n_v_cap}
        return out

    def with_caps(self, trunc_h: int, trunc_v: int) -> "FormalSeries":
        """Re-cap; raises if an existing nonzero key does not fit."""
        out = FormalSeries(self.n_h, self.n_v, None, trunc_h, trunc_v, self.mode)
        out.terms = _filter_caps(self.terms, trunc_h, trunc_v, self.mode)
        return out

    def compose_linear(self, h_factors: Sequence, v_factors: Sequence) -> "FormalSeries":
        """Substitute ``h_i -> a_i h_i``, ``v_j -> b_j v_j``.

        Coefficient at (P, Q) picks up ``prod a_i^{P_i} * prod b_j^{Q_j}``;
        negative Laurent powers divide.
        """
        if len(h_factors) != self.n_h or len(v_factors) != self.n_v:
            raise SeriesError("factor arity mismatch")
        out_terms = {}
        cache: dict[tuple[int, int], object] = {}

        def fpow(slot, base, expo):
            tag = (slot, expo)
            if tag not in cache:
                cache[tag] = base ** expo
            return cache[tag]

        for key, c in self.terms.items():
            for i, p in enumerate(key.P):
                if p:
                    c = c * fpow(i, h_factors[i], p)
            for j, q in enumerate(key.Q):
                if q:
                    c = c * fpow(self.n_h + j, v_factors[j], q)
            out_terms[key] = c
        return self.like(out_terms)

    def reflect_conj(self) -> "FormalSeries":
        """Coefficientwise conjugate with Laurent signs flipped.

        On unit-radius horizontal tori this matches pointwise complex
        conjugation of the Q = 0 part.
        """
        out_terms = {}
        for key, c in self.terms.items():
            flipped = ExponentKey(tuple(-p for p in key.P), key.Q)
            out_terms[flipped] = c.conjugate()
        return self.like(out_terms)


def _filter_caps(acc: Mapping, cap_h: int, cap_v: int, mode: str) -> dict:
    out = {}
    for key, c in acc.items():
        if key.q_size > cap_v:
            continue
        if key.p_size > cap_h:
            if (mode == EXACT and c) or (mode == FLOAT and abs(c) > 1e-13):
                raise TruncationOverflow(
                    f"nonzero coefficient at |P|={key.p_size} exceeds Laurent "
                    f"budget {cap_h}")
            continue
        out[key] = c
    return out


def ring_ops(f: FormalSeries, g: FormalSeries | None, kind: str, scalar=None) -> FormalSeries:
    """Dispatch add/mul/scale through one entry point."""
    if kind == "add":
        return f.add(g)
    if kind == "mul":
        return f.mul(g)
    if kind == "scale":
        return f.scale(scalar)
    raise SeriesError(f"unknown ring op {kind!r}")


def homogeneous_part(f: FormalSeries, k: int) -> FormalSeries:
    return f.homogeneous_part(k)


# ----------------------------------------------------------------------
# substitution


def _binom(p: int, k: int) -> int:
    """Generalized binomial coefficient for integer upper index."""
    if k < 0:
        raise ValueError("negative lower index")
    if p >= 0:
        return math.comb(p, k) if k <= p else 0
    return (-1) ** k * math.comb(-p + k - 1, k)


class _PowerCache:
    """Memoized nonnegative powers of one series under a v-cap."""

    def __init__(self, base: FormalSeries, one: FormalSeries):
        self.base = base
        self.cache = {0: one}

    def get(self, k: int) -> FormalSeries:
        if k not in self.cache:
            self.cache[k] = self.get(k - 1).mul(self.base)
        return self.cache[k]


def substitute_shift(f: FormalSeries, phi_h: Sequence[FormalSeries] | None,
                     phi_v: Sequence[FormalSeries] | None, n_v: int,
                     n_h: int | None = None) -> FormalSeries:
    """Evaluate ``f(h + phi_h, v + phi_v)`` truncated at v-degree ``n_v``.

    Every nonzero shift component must have v-order >= 2; this is what
    terminates the binomial expansion of negative Laurent powers
    ``(h_i + phi_i)^{P_i} = sum_k C(P_i, k) h_i^{P_i - k} phi_i^k``.
    ``n_h`` is the Laurent budget of the result; the default allows the
    worst-case spread of the expansion.
    """
    phi_h = list(phi_h) if phi_h else [None] * f.n_h
    phi_v = list(phi_v) if phi_v else [None] * f.n_v
    if len(phi_h) != f.n_h or len(phi_v) != f.n_v:
        raise SeriesError("shift arity mismatch")

    shifts = [p for p in phi_h + phi_v if p is not None and not p.is_zero()]
    for p in shifts:
        if (p.n_h, p.n_v) != (f.n_h, f.n_v) or p.mode != f.mode:
            raise SeriesError("shift series incompatible with target")
        if p.v_order() is not None and p.v_order() < 2:
            raise SeriesError("shift components must have v-order >= 2")

    spread = max((p.max_p_size() for p in shifts), default=0)
    worst = f.max_p_size() + (n_v // 2 + 1) * (spread + 1)
    if n_h is None:
        n_h = worst
    # intermediate binomial factors overshoot the Laurent budget even when
    # the final result fits, so work wide and re-cap at the end
    work_h = max(n_h, worst) + f.max_p_size() + 1

    one = FormalSeries.constant(f.n_h, f.n_v, scalars.one(f.mode), work_h, n_v, f.mode)
    out = FormalSeries.zero(f.n_h, f.n_v, work_h, n_v, f.mode)

    pcache: dict[int, _PowerCache] = {}
    for slot, p in enumerate(phi_h + phi_v):
        if p is not None and not p.is_zero():
            pcache[slot] = _PowerCache(p.with_caps(work_h, n_v), one)

    # per (slot, exponent) expansion of one substituted factor
    fcache: dict[tuple[int, int], FormalSeries] = {}

    def factor(slot: int, expo: int) -> FormalSeries:
        tag = (slot, expo)
        if tag in fcache:
            return fcache[tag]
        horizontal = slot < f.n_h

        def mono(e: int, coeff) -> FormalSeries:
            mp = [0] * f.n_h
            mq = [0] * f.n_v
            if horizontal:
                mp[slot] = e
            else:
                mq[slot - f.n_h] = e
            return FormalSeries.monomial(f.n_h, f.n_v, mp, mq, coeff,
                                         work_h, n_v, f.mode)

        if slot not in pcache:
            res = mono(expo, scalars.one(f.mode))
        else:
            cache = pcache[slot]
            vord = max(2, cache.base.v_order() or 2)
            k_max = n_v // vord
            if expo >= 0:
                k_max = min(k_max, expo)
            res = FormalSeries.zero(f.n_h, f.n_v, work_h, n_v, f.mode)
            for k in range(k_max + 1):
                coeff = _binom(expo, k)
                if coeff == 0:
                    continue
                res = res.add(mono(expo - k, scalars.one(f.mode) * coeff)
                              .mul(cache.get(k)))
        fcache[tag] = res
        return res

    for key, c in f.terms.items():
        term = FormalSeries.constant(f.n_h, f.n_v, c, work_h, n_v, f.mode)
        for i, p in enumerate(key.P):
            if p:
                term = term.mul(factor(i, p))
        for j, q in enumerate(key.Q):
            if q:
                term = term.mul(factor(f.n_h + j, q))
        out = out.add(term)
    return out.with_caps(n_h, n_v)


# ----------------------------------------------------------------------
# grid norms


def _grid_points(f_n_h: int, f_n_v: int, grid: GridSpec) -> list[np.ndarray]:
    if len(grid.h_radii) != f_n_h:
        raise SeriesError("grid dimension mismatch")
    thetas = np.exp(2j * np.pi * np.arange(grid.angles) / grid.angles)
    axes = []
    for row in grid.h_radii:
        axes.append(np.concatenate([r * thetas for r in row]))
    for _ in range(f_n_v):
        axes.append(grid.v_radius * thetas)
    if not axes:
        return []
    mesh = np.meshgrid(*axes, indexing="ij")
    return [m.reshape(-1) for m in mesh]


def _evaluate(f: FormalSeries, coords: list[np.ndarray]) -> np.ndarray:
    if not coords:
        c0 = f.coeff((0,) * f.n_h, (0,) * f.n_v)
        return np.array([scalars.as_complex(c0)])
    total = coords[0].shape[0]
    acc = np.zeros(total, dtype=complex)
    powcache: dict[tuple[int, int], np.ndarray] = {}

    def cpow(idx: int, e: int) -> np.ndarray:
        tag = (idx, e)
        if tag not in powcache:
            powcache[tag] = coords[idx] ** e
        return powcache[tag]

    for key, c in f.terms.items():
        vals = np.full(total, scalars.as_complex(c))
        for i, p in enumerate(key.P):
            if p:
                vals = vals * cpow(i, p)
        for j, q in enumerate(key.Q):
            if q:
                vals = vals * cpow(f.n_h + j, q)
        acc += vals
    return acc


def grid_sup_norm(f: FormalSeries, grid: GridSpec) -> float:
    """Max of |f| over the sampled torus products (a lower bound of the sup)."""
    if f.is_zero():
        return 0.0
    coords = _grid_points(f.n_h, f.n_v, grid)
    return float(np.max(np.abs(_evaluate(f, coords))))


class CauchyReport(NamedTuple):
    passed: bool
    worst_ratio: float
    slices: dict
    slack: float


def cauchy_bound_check(f: FormalSeries, grid: GridSpec,
                       slack: float = 1e-9) -> CauchyReport:
    """Check the coefficient-slice estimate sup|f_Q| <= sup|f| / r^{|Q|}.

    Slices are grouped by the full vertical exponent Q; the right-hand
    side uses the sampled sup of f over the grid, so ``slack`` absorbs the
    sampling gap.  Report-valued: never raises on failure.
    """
    if f.is_zero():
        return CauchyReport(True, 0.0, {}, slack)
    sup_f = grid_sup_norm(f, grid)
    h_only_coords = _grid_points(f.n_h, 0, GridSpec(grid.h_radii, grid.v_radius,
                                                    grid.angles))
    by_q: dict[tuple[int, ...], dict] = {}
    for key, c in f.terms.items():
        by_q.setdefault(key.Q, {})[ExponentKey(key.P, ())] = c

    slices = {}
    worst = 0.0
    passed = True
    for q, terms in sorted(by_q.items()):
        slice_series = FormalSeries(f.n_h, 0, None, f.trunc_h, 0, f.mode)
        slice_series.terms = terms
        sup_slice = float(np.max(np.abs(_evaluate(slice_series, h_only_coords))))
        bound = sup_f / grid.v_radius ** sum(q)
        ratio = sup_slice / bound if bound > 0 else math.inf
        slices[q] = ratio
        worst = max(worst, ratio)
        if ratio > 1.0 + slack:
            passed = False
    return CauchyReport(passed, worst, slices, slack)


# ----------------------------------------------------------------------
# interchange format


def series_to_dict(f: FormalSeries) -> dict:
    records = []
    for key in sorted(f.terms):
        re, im = scalars.coeff_to_strings(f.terms[key])
        records.append({"P": list(key.P), "Q": list(key.Q), "re": re, "im": im})
    return {
        "n_h": f.n_h, "n_v": f.n_v,
        "N_h": f.trunc_h, "N_v": f.trunc_v,
        "mode": f.mode,
        "records": records,
    }


def series_from_dict(data: Mapping) -> FormalSeries:
    mode = data["mode"]
    terms = {}
    for rec in data["records"]:
        key = _key(rec["P"], rec["Q"])
        terms[key] = scalars.coeff_from_strings(rec["re"], rec["im"], mode)
    return FormalSeries(data["n_h"], data["n_v"], terms,
                        data["N_h"], data["N_v"], mode)
