"""Certified real algebraic numbers and exact number-field arithmetic.

An AlgebraicNumber is an irreducible primitive integer polynomial together
with an isolating rational interval; every numeric question about it is
answered by refining that interval, and every symbolic question by exact
reduction modulo the minimal polynomial.  FieldElement gives arithmetic in
Q(alpha) with an exact zero test, which is what makes atom coincidence
detection and entropy values exact rather than floating-point guesses.

certified_roots wraps the two root engines: Sturm bisection for real
roots, and complex enclosures obtained by running a numeric root finder
and then certifying each approximation with the exact nearest-root bound
deg(f) * |f(z)/f'(z)| evaluated in Gaussian rationals.  Disjointness plus
a counting argument upgrades the numeric output to a proof.

Mahler measures are computed as certified rational intervals.  Roots on
the unit circle are counted exactly by splitting off gcd(f, f*) and
transforming the self-reciprocal part through w = x + 1/x, which turns
unit-circle pairs into real roots of an integer polynomial in (-2, 2)
that a Sturm sequence can count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import mpmath as mp

from .errors import InvalidInput, PrecisionError, UndecidedError
from .polynomial import (
    Coeffs,
    IntPolynomial,
    _divmod_q,
    _exact_div,
    _gcd_primitive,
    _neg,
    _primitive,
    _sign_at,
    _trim,
    cauchy_root_bound,
    factor_squarefree,
    isolate_real_roots,
    rational_roots,
    refine_root,
    squarefree_factorization,
    squarefree_part,
    sturm_chain,
    sturm_count,
)

# ---------------------------------------------------------------------------
# rational interval arithmetic
# ---------------------------------------------------------------------------

Interval = tuple[Fraction, Fraction]


def iv_point(x) -> Interval:
    f = Fraction(x)
    return (f, f)


def iv_add(a: Interval, b: Interval) -> Interval:
    return (a[0] + b[0], a[1] + b[1])


def iv_neg(a: Interval) -> Interval:
    return (-a[1], -a[0])


def iv_scale(a: Interval, c: Fraction) -> Interval:
    if c >= 0:
        return (a[0] * c, a[1] * c)
    return (a[1] * c, a[0] * c)


def iv_mul(a: Interval, b: Interval) -> Interval:
    vals = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return (min(vals), max(vals))


def iv_width(a: Interval) -> Fraction:
    return a[1] - a[0]


def iv_sign(a: Interval) -> Optional[int]:
    """Sign if determined, else None."""
    if a[0] > 0:
        return 1
    if a[1] < 0:
        return -1
    if a[0] == a[1] == 0:
        return 0
    return None


def iv_abs(a: Interval) -> Interval:
    if a[0] >= 0:
        return a
    if a[1] <= 0:
        return (-a[1], -a[0])
    return (Fraction(0), max(-a[0], a[1]))


def iv_sqr(a: Interval) -> Interval:
    b = iv_abs(a)
    return (b[0] * b[0], b[1] * b[1])


def sqrt_bounds(x: Fraction, bits: int = 64) -> Interval:
    """Certified [lo, hi] around sqrt(x) with hi - lo <= 2^-bits * (1 + ...),
    by integer square root of a scaled numerator.  Requires x >= 0."""
    if x < 0:
        raise InvalidInput("sqrt of a negative rational")
    if x == 0:
        return (Fraction(0), Fraction(0))
    num, den = x.numerator, x.denominator
    scaled = num * den << (2 * bits)
    t = math.isqrt(scaled)
    denom = den << bits
    lo = Fraction(t, denom)
    hi = Fraction(t + 1, denom)
    return (lo, hi)


def mpf_to_fraction(x) -> Fraction:
    """Exact rational value of an mpmath float (mpf values are dyadic)."""
    sign, man, exp, _ = x._mpf_
    if man == 0:
        if x == 0:
            return Fraction(0)
        raise InvalidInput("cannot convert a non-finite value exactly")
    v = Fraction(man << exp) if exp >= 0 else Fraction(man, 1 << -exp)
    return -v if sign else v


def fraction_to_mpf(x: Fraction):
    """Round a rational to the current mpmath precision."""
    return mp.mpf(x.numerator) / mp.mpf(x.denominator)


def log2_bounds(lo: Fraction, hi: Fraction, bits: int = 60) -> Interval:
    """Certified enclosure of [log2 lo, log2 hi] for 0 < lo <= hi; the
    mpmath evaluations are inflated by a few ulps to absorb rounding."""
    if lo <= 0:
        raise InvalidInput("log2 needs positive bounds")
    with mp.workprec(bits + 40):
        a = mp.log(fraction_to_mpf(lo), 2)
        b = mp.log(fraction_to_mpf(hi), 2)
        pad = mp.mpf(2) ** (-(bits + 20))
        return (mpf_to_fraction(a - pad), mpf_to_fraction(b + pad))


def dyadic_floor(x: Fraction, bits: int) -> Fraction:
    return Fraction(math.floor(x * (1 << bits)), 1 << bits)


def dyadic_ceil(x: Fraction, bits: int) -> Fraction:
    return Fraction(math.ceil(x * (1 << bits)), 1 << bits)


# ---------------------------------------------------------------------------
# algebraic numbers
# ---------------------------------------------------------------------------

_REFINE_CAP_BITS = 1 << 14  # hard stop for undecidable sign refinements


class AlgebraicNumber:
    """A real algebraic number, represented exactly.

    Attributes
    ----------
    min_poly : IntPolynomial
        Primitive with positive leading coefficient; irreducible when
        ``irreducibility == "proved"``, a squarefree candidate otherwise.
    irreducibility : str
        ``"proved"`` or ``"assumed"``.  Assumed only happens past the
        degrees the factorization tactics cover; every consumer that
        relies on minimality carries the flag forward.
    """

    __slots__ = ("min_poly", "irreducibility", "_lo", "_hi",
                 "_reduce_table", "_power_coords", "_power_intervals",
                 "_power_prec")

    def __init__(self, min_poly: IntPolynomial, lo: Fraction, hi: Fraction,
                 irreducibility: str = "proved"):
        cs = _primitive(min_poly.coeffs)
        if cs[-1] < 0:
            cs = _neg(cs)
        mp_ = IntPolynomial(cs)
        if mp_.degree >= 2:
            if _sign_at(cs, lo) == 0 or _sign_at(cs, hi) == 0:
                raise InvalidInput("isolating interval endpoints must not be roots")
            if _sign_at(cs, lo) == _sign_at(cs, hi):
                raise InvalidInput("interval does not isolate a root (no sign change)")
        self.min_poly = mp_
        self.irreducibility = irreducibility
        if mp_.degree == 1:
            r = Fraction(-mp_.coeffs[0], mp_.coeffs[1])
            self._lo = self._hi = r
        else:
            self._lo, self._hi = Fraction(lo), Fraction(hi)
        self._reduce_table = None
        self._power_coords = None
        self._power_intervals = None
        self._power_prec = -1

    # -- constructors ---------------------------------------------------

    @staticmethod
    def from_rational(q) -> "AlgebraicNumber":
        q = Fraction(q)
        poly = IntPolynomial((-q.numerator, q.denominator))
        return AlgebraicNumber(poly, q, q)

    @staticmethod
    def from_poly_root(p: IntPolynomial, root_index: Optional[int] = None,
                       interval: Optional[tuple] = None,
                       inverse: bool = False) -> "AlgebraicNumber":
        """Select a real root of p, prove (or assume) its minimal
        polynomial, and return it; with ``inverse=True`` return the
        reciprocal of the selected root instead.

        Exactly one of root_index (0-based, roots ascending) and interval
        (a closed rational interval containing exactly one real root)
        must be given.
        """
        if (root_index is None) == (interval is None):
            raise InvalidInput("give exactly one of root_index and interval")
        f = squarefree_part(p)
        if f.degree == 0:
            raise InvalidInput("polynomial has no roots")
        ivs = isolate_real_roots(f)
        if not ivs:
            raise InvalidInput("polynomial has no real roots")
        if root_index is not None:
            if not 0 <= root_index < len(ivs):
                raise InvalidInput(
                    f"root_index {root_index} out of range: "
                    f"{len(ivs)} real roots")
            sel = ivs[root_index]
        else:
            a, b = Fraction(interval[0]), Fraction(interval[1])
            if not a <= b:
                raise InvalidInput("empty selection interval")
            hits = []
            for (lo, hi) in ivs:
                if lo == hi:
                    if a <= lo <= b:
                        hits.append((lo, hi))
                    continue
                # refine until the isolating interval commits to one side
                while not (a <= lo and hi <= b) and not (hi < a or b < lo):
                    width = (hi - lo) / 4
                    if width == 0:  # pragma: no cover
                        break
                    lo, hi = refine_root(f, lo, hi, width)
                if a <= lo and hi <= b:
                    hits.append((lo, hi))
            if len(hits) != 1:
                raise InvalidInput(
                    f"selection interval contains {len(hits)} real roots, need 1")
            sel = hits[0]
        return AlgebraicNumber._from_squarefree_and_interval(f, sel, inverse)

    @staticmethod
    def _from_squarefree_and_interval(f: IntPolynomial, sel: Interval,
                                      inverse: bool) -> "AlgebraicNumber":
        lo, hi = sel
        if lo == hi:
            val = lo
            if inverse:
                if val == 0:
                    raise InvalidInput("cannot invert the root 0")
                val = 1 / val
            return AlgebraicNumber.from_rational(val)

        factors = factor_squarefree(f)
        irreducibility = "proved"
        if factors is None:
            # strip at least the certain linear factors and carry the flag
            work = _primitive(f.coeffs)
            for r in rational_roots(f):
                lin = _primitive((-r.numerator, r.denominator))
                work = _exact_div(work, lin)
            g = IntPolynomial(work)
            if _sign_at(g.coeffs, lo) == _sign_at(g.coeffs, hi):
                raise InvalidInput("could not attribute the selected root")
            irreducibility = "assumed"
            minp = g
        else:
            minp = None
            for cand in factors:
                if cand.degree == 0:
                    continue
                if cand.degree == 1:
                    r = Fraction(-cand.coeffs[0], cand.coeffs[1])
                    if lo < r < hi:
                        # the isolating interval held an irrational root, so
                        # a rational root inside is impossible
                        raise InvalidInput("inconsistent isolation")  # pragma: no cover
                    continue
                chain = sturm_chain(cand)
                if _sign_at(cand.coeffs, lo) != 0 and _sign_at(cand.coeffs, hi) != 0 \
                        and sturm_count(chain, lo, hi) == 1:
                    minp = cand
                    break
            if minp is None:  # pragma: no cover - counting says this cannot happen
                raise InvalidInput("no factor owns the selected root")
        a = AlgebraicNumber(minp, lo, hi, irreducibility)
        if inverse:
            return a.reciprocal()
        return a

    def reciprocal(self) -> "AlgebraicNumber":
        """1/alpha, with the interval transported exactly."""
        if self.degree == 1:
            v = self.as_fraction()
            if v == 0:
                raise InvalidInput("cannot invert 0")
            return AlgebraicNumber.from_rational(1 / v)
        # refine until the sign is fixed, so the interval inverts monotonically
        while self._lo <= 0 <= self._hi:
            self._bisect_once()
        rec = self.min_poly.reciprocal()
        lo, hi = 1 / self._hi, 1 / self._lo
        return AlgebraicNumber(rec, lo, hi, self.irreducibility)

    # -- numeric access ---------------------------------------------------

    @property
    def degree(self) -> int:
        return self.min_poly.degree

    @property
    def is_rational(self) -> bool:
        return self.degree == 1

    def as_fraction(self) -> Fraction:
        if not self.is_rational:
            raise InvalidInput("not a rational number")
        return self._lo

    def interval(self) -> Interval:
        return (self._lo, self._hi)

    def _bisect_once(self) -> None:
        if self.is_rational:
            return
        cs = self.min_poly.coeffs
        lo, hi = self._lo, self._hi
        mid = (lo + hi) / 2
        sm = _sign_at(cs, mid)
        # mid is rational, the root is not (degree >= 2, squarefree factor
        # with no rational roots), so sm != 0
        if sm == _sign_at(cs, lo):
            self._lo = mid
        else:
            self._hi = mid
        self._power_intervals = None

    def refine_bits(self, bits: int) -> Interval:
        """Shrink the isolating interval to width <= 2^-bits."""
        target = Fraction(1, 1 << bits)
        while self._hi - self._lo > target:
            self._bisect_once()
        return (self._lo, self._hi)

    def float_value(self) -> float:
        self.refine_bits(64)
        return float((self._lo + self._hi) / 2)

    def __float__(self) -> float:
        return self.float_value()

    def mpf_value(self, dps: int):
        """An mpf within 2^-(3.3 dps) of the true value at working precision."""
        bits = int(dps * 3.33) + 16
        self.refine_bits(bits)
        with mp.workprec(bits + 16):
            return fraction_to_mpf((self._lo + self._hi) / 2)

    # -- exact sign machinery ---------------------------------------------

    def sign_of_poly(self, coeffs: Sequence[Fraction]) -> int:
        """Exact sign of P(alpha) for a rational-coefficient P given in
        ascending order.  Reduction modulo the minimal polynomial settles
        zero; an interval refinement loop settles the rest."""
        red = self.reduce_coeffs(coeffs)
        if all(c == 0 for c in red):
            return 0
        return self._sign_of_reduced(red)

    def _sign_of_reduced(self, red: Sequence[Fraction]) -> int:
        bits = 64
        while True:
            iv = self.eval_coords_interval(red, bits)
            s = iv_sign(iv)
            if s is not None:
                return s
            bits *= 2
            if bits > _REFINE_CAP_BITS:
                if self.irreducibility == "assumed":
                    raise UndecidedError(
                        "sign refinement exhausted; the minimal polynomial is "
                        "only assumed irreducible, so this value may be 0")
                raise PrecisionError("sign refinement exhausted")  # pragma: no cover

    def compare_fraction(self, q) -> int:
        """Sign of alpha - q, exactly."""
        q = Fraction(q)
        if self.is_rational:
            v = self._lo
            return (v > q) - (v < q)
        return self._sign_of_reduced((-q, Fraction(1)))

    def __lt__(self, other):
        return self.compare_fraction(other) < 0

    def __gt__(self, other):
        return self.compare_fraction(other) > 0

    def eq_root(self, other: "AlgebraicNumber") -> bool:
        if self.min_poly != other.min_poly:
            return False
        if self.is_rational:
            return self._lo == other._lo
        # both intervals contain their root; alpha inside other's isolating
        # interval forces equality
        return (self.compare_fraction(other._lo) > 0
                and self.compare_fraction(other._hi) < 0)

    # -- power basis, reduction, field arithmetic --------------------------

    def _reduction_table(self) -> list[tuple[Fraction, ...]]:
        """coords of x^k modulo min_poly for k = 0 .. 2d-2."""
        if self._reduce_table is not None:
            return self._reduce_table
        d = self.degree
        cs = self.min_poly.coeffs
        lead = Fraction(cs[-1])
        # x^d = -(c_0 + ... + c_{d-1} x^{d-1}) / c_d
        top = tuple(Fraction(-c) / lead for c in cs[:-1])
        table: list[tuple[Fraction, ...]] = []
        for k in range(d):
            table.append(tuple(Fraction(1) if i == k else Fraction(0)
                               for i in range(d)))
        for _ in range(d, 2 * d - 1):
            prev = table[-1]
            shifted = (Fraction(0),) + prev[:-1]
            carry = prev[-1]
            if carry:
                shifted = tuple(s + carry * t for s, t in zip(shifted, top))
            table.append(shifted)
        self._reduce_table = table
        return table

    def reduce_coeffs(self, coeffs: Sequence) -> tuple[Fraction, ...]:
        """Reduce an arbitrary-degree rational polynomial in alpha to
        power-basis coordinates of length d."""
        d = self.degree
        work = [Fraction(c) for c in coeffs]
        if len(work) > 2 * d - 1:
            return self._reduce_generic(work)
        table = self._reduction_table()
        out = [Fraction(0)] * d
        for k, c in enumerate(work):
            if c == 0:
                continue
            row = table[k]
            for i in range(d):
                if row[i]:
                    out[i] += c * row[i]
        return tuple(out)

    def _reduce_generic(self, work: list) -> tuple[Fraction, ...]:
        """Degree-agnostic reduction by repeated top-term elimination."""
        d = self.degree
        cs = self.min_poly.coeffs
        lead = Fraction(cs[-1])
        work = [Fraction(c) for c in work]
        while len(work) > d:
            top = work.pop()
            if top == 0:
                continue
            k = len(work) - d  # top was coefficient of x^(d+k)
            f = top / lead
            for i in range(d):
                work[k + i] -= f * cs[i]
        while len(work) < d:
            work.append(Fraction(0))
        return tuple(work)

    def power_coords(self, j: int) -> tuple[Fraction, ...]:
        """Coordinates of alpha^j in the power basis, cached."""
        if j < 0:
            raise InvalidInput("negative power")
        d = self.degree
        if d == 1:
            return (self.as_fraction() ** j,)
        if self._power_coords is None:
            self._power_coords = [tuple(Fraction(1) if i == 0 else Fraction(0)
                                        for i in range(d))]
        cache = self._power_coords
        table = self._reduction_table()
        top = table[d]  # coords of alpha^d
        while len(cache) <= j:
            prev = cache[-1]
            shifted = (Fraction(0),) + prev[:-1]
            carry = prev[-1]
            if carry:
                shifted = tuple(s + carry * t for s, t in zip(shifted, top))
            cache.append(shifted)
        return cache[j]

    def _power_interval_list(self, bits: int) -> list[Interval]:
        """Enclosures of alpha^i for i < degree at >= bits of refinement."""
        if self._power_intervals is not None and self._power_prec >= bits:
            return self._power_intervals
        self.refine_bits(bits)
        base = (self._lo, self._hi)
        out = [iv_point(1)]
        for _ in range(1, self.degree):
            out.append(iv_mul(out[-1], base))
        self._power_intervals = out
        self._power_prec = bits
        return out

    def eval_coords_interval(self, coords: Sequence[Fraction],
                             bits: int = 64) -> Interval:
        powers = self._power_interval_list(bits)
        acc = iv_point(0)
        for c, pw in zip(coords, powers):
            if c:
                acc = iv_add(acc, iv_scale(pw, Fraction(c)))
        return acc

    def __repr__(self) -> str:
        self.refine_bits(40)
        mid = float((self._lo + self._hi) / 2)
        return f"AlgebraicNumber({self.min_poly}, ~{mid:.12g})"


class FieldElement:
    """An element of Q(alpha) in power-basis coordinates; exact arithmetic
    and an exact zero test (coordinates all zero)."""

    __slots__ = ("field", "coords")

    def __init__(self, field: AlgebraicNumber, coords: Sequence):
        d = field.degree
        cs = tuple(Fraction(c) for c in coords)
        if len(cs) != d:
            raise InvalidInput(f"need {d} coordinates, got {len(cs)}")
        self.field = field
        self.coords = cs

    @staticmethod
    def from_rational(field: AlgebraicNumber, q) -> "FieldElement":
        d = field.degree
        return FieldElement(field, (Fraction(q),) + (Fraction(0),) * (d - 1))

    @staticmethod
    def generator(field: AlgebraicNumber) -> "FieldElement":
        d = field.degree
        if d == 1:
            return FieldElement(field, (field.as_fraction(),))
        return FieldElement(field, (Fraction(0), Fraction(1)) + (Fraction(0),) * (d - 2))

    def __add__(self, other: "FieldElement") -> "FieldElement":
        return FieldElement(self.field,
                            tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "FieldElement") -> "FieldElement":
        return FieldElement(self.field,
                            tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "FieldElement":
        return FieldElement(self.field, tuple(-a for a in self.coords))

    def scale(self, q) -> "FieldElement":
        q = Fraction(q)
        return FieldElement(self.field, tuple(a * q for a in self.coords))

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        d = self.field.degree
        if d == 1:
            # the single coordinate is the value itself
            return FieldElement(self.field, (self.coords[0] * other.coords[0],))
        prod = [Fraction(0)] * (2 * d - 1)
        for i, a in enumerate(self.coords):
            if a == 0:
                continue
            for j, b in enumerate(other.coords):
                if b:
                    prod[i + j] += a * b
        table = self.field._reduction_table()
        out = [Fraction(0)] * d
        for k, c in enumerate(prod):
            if c == 0:
                continue
            row = table[k]
            for i in range(d):
                if row[i]:
                    out[i] += c * row[i]
        return FieldElement(self.field, out)

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def sign(self) -> int:
        if self.is_zero:
            return 0
        if self.field.degree == 1:
            # coords are (value,) with alpha itself rational
            return (self.coords[0] > 0) - (self.coords[0] < 0)
        return self.field._sign_of_reduced(self.coords)

    def interval(self, bits: int = 64) -> Interval:
        if self.field.degree == 1:
            v = self.coords[0]
            return (v, v)
        target = Fraction(1, 1 << bits)
        b = bits
        while True:
            iv = self.field.eval_coords_interval(self.coords, b)
            if iv_width(iv) <= target:
                return iv
            b *= 2
            if b > _REFINE_CAP_BITS:  # pragma: no cover - coords are modest
                raise PrecisionError("field element enclosure did not converge")

    def __eq__(self, other) -> bool:
        return (isinstance(other, FieldElement)
                and self.coords == other.coords
                and self.field is other.field)

    def __hash__(self) -> int:
        return hash(self.coords)

    def __repr__(self) -> str:
        return f"FieldElement{self.coords}"


# ---------------------------------------------------------------------------
# certified root enclosures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RootEnclosure:
    """One distinct root of a polynomial, certified.

    Real roots carry an exact rational interval [lo, hi] (degenerate for
    rational roots).  Complex roots carry a square box: both |Re z - re|
    and |Im z - im| are at most radius.  ``achieved`` records whether the
    requested radius was met; partial results keep the best bound found.
    """
    is_real: bool
    multiplicity: int
    re: Fraction
    im: Fraction
    radius: Fraction
    lo: Optional[Fraction] = None
    hi: Optional[Fraction] = None
    achieved: bool = True

    def modulus_interval(self) -> Interval:
        if self.is_real:
            return iv_abs((self.lo, self.hi))
        re_iv = (self.re - self.radius, self.re + self.radius)
        im_iv = (self.im - self.radius, self.im + self.radius)
        m2 = iv_add(iv_sqr(re_iv), iv_sqr(im_iv))
        lo = sqrt_bounds(m2[0], 80)[0]
        hi = sqrt_bounds(m2[1], 80)[1]
        return (lo, hi)


def _eval_gaussian(cs: Coeffs, re: Fraction, im: Fraction) -> tuple[Fraction, Fraction]:
    """Exact value of the polynomial at re + i*im, as a Gaussian rational."""
    ar, ai = Fraction(0), Fraction(0)
    for c in reversed(cs):
        ar, ai = ar * re - ai * im + c, ar * im + ai * re
    return ar, ai


def _certify_squarefree(g: IntPolynomial, bits: int,
                        rounds: int = 8) -> tuple[list[RootEnclosure], bool]:
    """Enclosures for every distinct root of squarefree g; second return
    value reports whether all complex radii met 2^-bits."""
    target = Fraction(1, 1 << bits)
    D = g.degree
    ivs = isolate_real_roots(g)
    reals = []
    for (lo, hi) in ivs:
        if lo != hi:
            lo, hi = refine_root(g, lo, hi, target * 2)
        mid = (lo + hi) / 2
        reals.append(RootEnclosure(True, 1, mid, Fraction(0), (hi - lo) / 2,
                                   lo=lo, hi=hi))
    R = len(reals)
    C = D - R
    if C == 0:
        return reals, True
    gp = g.derivative()
    cs, dcs = g.coeffs, gp.coeffs
    dps = max(30, int(bits * 0.31) + 15)
    best: Optional[list[RootEnclosure]] = None
    for _ in range(rounds):
        with mp.workdps(dps):
            approx = mp.polyroots([mp.mpf(c) for c in reversed(cs)],
                                  maxsteps=200, extraprec=60)
        disks = []
        degenerate = False
        for z in approx:
            # .real/.imag are exact mpf values; converting them through
            # mp.mpf() here would re-round to the ambient precision
            zre = mpf_to_fraction(z.real)
            zim = mpf_to_fraction(z.imag)
            fr, fi = _eval_gaussian(cs, zre, zim)
            dr, di = _eval_gaussian(dcs, zre, zim)
            df2 = dr * dr + di * di
            if df2 == 0:
                degenerate = True
                break
            r2 = Fraction(D * D) * (fr * fr + fi * fi) / df2
            radius = sqrt_bounds(r2, bits + 8)[1]
            disks.append((zre, zim, radius))
        if not degenerate:
            ok, encl = _validate_disks(g, disks, reals, target)
            if ok:
                complexes = [e for e in encl if not e.is_real]
                if all(e.radius <= target for e in complexes):
                    return encl, True
                best = encl
        dps *= 2
    if best is not None:
        out = []
        for e in best:
            if e.is_real or e.radius <= target:
                out.append(e)
            else:
                out.append(RootEnclosure(False, 1, e.re, e.im, e.radius,
                                         achieved=False))
        return out, False
    raise PrecisionError(
        f"could not certify the complex roots of {g} at 2^-{bits}")


def _validate_disks(g, disks, reals, target):
    """Turn approximate disks into certified enclosures by counting.

    Every disk contains at least one root (the nearest-root bound), so
    pairwise disjoint disks contain exactly one root each.  A disk
    disjoint from the real axis therefore holds a genuinely complex root;
    and since the real roots, whose exact count R comes from Sturm, can
    only live in axis-straddling disks, #axis == R pins everything down:
    axis disks hold exactly the real roots, off-axis disks exactly the
    complex ones."""
    R = len(reals)
    off = []
    axis_count = 0
    for (zre, zim, rad) in disks:
        if zim - rad > 0 or zim + rad < 0:
            off.append((zre, zim, rad))
        else:
            axis_count += 1
    if axis_count != R:
        return False, None
    n = len(disks)
    for i in range(n):
        for j in range(i + 1, n):
            dx = disks[i][0] - disks[j][0]
            dy = disks[i][1] - disks[j][1]
            rr = disks[i][2] + disks[j][2]
            if dx * dx + dy * dy <= rr * rr:
                return False, None
    out = list(reals)
    for (zre, zim, rad) in off:
        out.append(RootEnclosure(False, 1, zre, zim, rad))
    return True, out


def certified_roots(p: IntPolynomial, bits: int = 60) -> list[RootEnclosure]:
    """Certified enclosures of every distinct root of p with
    multiplicities, real roots first (ascending), then complex roots
    sorted by (re, im).  Real enclosures are exact rational intervals of
    width <= 2^-bits (width 0 for rational roots); complex enclosures are
    boxes of half-width <= 2^-bits unless the refinement budget ran out,
    which is recorded per enclosure in ``achieved``.
    """
    out: list[RootEnclosure] = []
    for (f, mult) in squarefree_factorization(p):
        encl, _ = _certify_squarefree(f, bits)
        for e in encl:
            if mult == 1:
                out.append(e)
            else:
                out.append(RootEnclosure(e.is_real, mult, e.re, e.im,
                                         e.radius, lo=e.lo, hi=e.hi,
                                         achieved=e.achieved))
    out.sort(key=lambda e: (not e.is_real, e.re, e.im))
    return out


# ---------------------------------------------------------------------------
# unit-circle root counting and Mahler measure
# ---------------------------------------------------------------------------


def _strip_pm_one(cs: Coeffs) -> tuple[Coeffs, int, int]:
    """Divide out roots at +1 and -1 (squarefree input: at most once each)."""
    plus = minus = 0
    if _sign_at(cs, Fraction(1)) == 0:
        cs = _exact_div(cs, (-1, 1))
        plus = 1
    if _sign_at(cs, Fraction(-1)) == 0:
        cs = _exact_div(cs, (1, 1))
        minus = 1
    return cs, plus, minus


def _chebyshev_like_transform(g: Coeffs) -> Coeffs:
    """For palindromic g of even degree 2k, the integer polynomial Q with
    g(z) = z^k Q(z + 1/z).  Unit-circle root pairs of g correspond to real
    roots of Q in (-2, 2)."""
    n = len(g) - 1
    if n % 2 != 0:
        raise InvalidInput("transform needs even degree")
    k = n // 2
    if tuple(reversed(g)) != tuple(g):
        raise InvalidInput("transform needs a palindromic polynomial")
    # V_j(w) = z^j + z^-j on z + 1/z = w:  V_0 = 2, V_1 = w, V_j = w V_{j-1} - V_{j-2}
    V_prev: Coeffs = (2,)
    V_cur: Coeffs = (0, 1)
    out = [0] * (k + 1)
    out[0] += g[k]
    for j in range(1, k + 1):
        c = g[k + j]
        if c:
            for i, v in enumerate(V_cur):
                out[i] += c * v
        if j < k:
            nxt = [0] * (len(V_cur) + 1)
            for i, v in enumerate(V_cur):
                nxt[i + 1] += v
            for i, v in enumerate(V_prev):
                nxt[i] -= v
            V_prev, V_cur = V_cur, tuple(nxt)
    return _trim(out)


def _unit_split(f: Coeffs) -> tuple[Coeffs, Coeffs, int, int]:
    """Split a squarefree f with f(0) != 0 as (h, g0, n_plus, n_minus):
    g0 collects the reciprocal-pair structure (gcd with the reciprocal,
    after removing roots at +-1), h has no unit-circle roots at all."""
    f = _primitive(f)
    stripped, n_plus, n_minus = _strip_pm_one(f)
    if len(stripped) == 1:
        return (), (), n_plus, n_minus
    rec = tuple(reversed(stripped))
    g0 = _gcd_primitive(stripped, rec)
    if len(g0) == 1:
        return stripped, (), n_plus, n_minus
    h = _exact_div(stripped, g0)
    return (h if len(h) > 1 else ()), g0, n_plus, n_minus


def _on_circle_pairs(g0: Coeffs) -> int:
    """Number of conjugate unit-circle root pairs of palindromic g0 (no
    roots at +-1), counted exactly."""
    if not g0 or len(g0) == 1:
        return 0
    Q = _chebyshev_like_transform(g0)
    if len(Q) == 1:
        return 0
    chain = sturm_chain(Q)
    # Q(+-2) != 0 because g0(+-1) != 0
    return sturm_count(chain, Fraction(-2), Fraction(2))


def unit_circle_root_count(p: IntPolynomial) -> int:
    """Exact number of roots of p on |z| = 1, with multiplicity."""
    total = 0
    for (f, mult) in squarefree_factorization(p):
        cs = _primitive(f.coeffs)
        k = 0
        while cs[k] == 0:
            k += 1
        cs = cs[k:]
        if len(cs) == 1:
            continue
        _, g0, n_plus, n_minus = _unit_split(cs)
        total += mult * (2 * _on_circle_pairs(g0) + n_plus + n_minus)
    return total


def _resolve_circle_sides(f: Coeffs, expected_on: int,
                          bits0: int = 64) -> tuple[list[tuple[Interval, int]], int, int]:
    """Certified moduli of the off-circle roots of squarefree f (f(0) != 0,
    no roots at +-1 assumed removed by the caller when expected_on counts
    them).  Returns ([|z|-interval, side] with side +1 outside / -1 inside),
    and the counts (inside, outside).  Refines until the number of
    unresolved enclosures equals expected_on."""
    bits = bits0
    while True:
        encl, _ = _certify_squarefree(IntPolynomial(f), bits)
        sides: list[tuple[Interval, int]] = []
        unresolved = 0
        for e in encl:
            miv = e.modulus_interval()
            if miv[0] > 1:
                sides.append((miv, 1))
            elif miv[1] < 1:
                sides.append((miv, -1))
            else:
                unresolved += 1
        if unresolved == expected_on:
            inside = sum(1 for _, s in sides if s < 0)
            outside = sum(1 for _, s in sides if s > 0)
            return sides, inside, outside
        bits *= 2
        if bits > _REFINE_CAP_BITS:
            raise UndecidedError(
                "could not separate root moduli from the unit circle")


@dataclass(frozen=True)
class MahlerMeasure:
    """Certified Mahler measure: |lead| times the product of the root
    moduli outside the unit circle.  lower == upper exactly when no root
    modulus needed numeric refinement."""
    lower: Fraction
    upper: Fraction
    n_inside: int
    n_on_circle: int
    n_outside: int

    @property
    def value(self) -> float:
        return float((self.lower + self.upper) / 2)

    @property
    def is_exact(self) -> bool:
        return self.lower == self.upper

    def log2_interval(self, bits: int = 60) -> Interval:
        return log2_bounds(self.lower, self.upper, bits)


def mahler_measure(p: IntPolynomial, bits: int = 48) -> MahlerMeasure:
    """Mahler measure of p as a certified interval of relative width about
    2^-bits (exact when all roots are resolved symbolically, e.g. 2x - 1
    gives exactly 2)."""
    total: Interval = iv_point(abs(p.leading))
    n_in = n_on = n_out = 0
    # roots at 0 count as inside
    for (f, mult) in squarefree_factorization(p):
        cs = _primitive(f.coeffs)
        k = 0
        while cs[k] == 0:
            k += 1
        if k:
            n_in += mult
            cs = cs[k:]
        if len(cs) == 1:
            continue
        h, g0, n_plus, n_minus = _unit_split(cs)
        n_on += mult * (n_plus + n_minus)
        for part, expected_on in ((h, 0), (g0, 2 * _on_circle_pairs(g0) if g0 else 0)):
            if not part or len(part) == 1:
                continue
            sides, inside, outside = _resolve_circle_sides(
                part, expected_on, bits0=max(64, bits + 16))
            n_in += mult * inside
            n_on += mult * expected_on
            n_out += mult * outside
            for (miv, side) in sides:
                if side > 0:
                    for _ in range(mult):
                        total = iv_mul(total, miv)
    if n_in == 0 and n_on == 0 and p.degree > 0:
        # every root is strictly outside, so the measure collapses to the
        # absolute constant term by the product of the roots
        exact = Fraction(abs(p.constant))
        total = (exact, exact)
    return MahlerMeasure(total[0], total[1], n_in, n_on, n_out)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassificationReport:
    """Arithmetic profile of a contraction ratio lambda in (0, 1) and its
    reciprocal xi = 1/lambda > 1."""
    lambda_min_poly: IntPolynomial
    xi_min_poly: IntPolynomial
    degree: int
    xi_is_algebraic_integer: bool
    mahler: MahlerMeasure
    m_unit_circle: int
    n_inside: int
    n_outside: int
    is_pisot: bool
    is_salem: bool
    is_garsia: bool
    irreducibility: str
    lambda_float: float
    xi_float: float

    @property
    def mahler_float(self) -> float:
        return self.mahler.value


def classify(a: AlgebraicNumber) -> ClassificationReport:
    """Classify lambda (or xi, whichever side of 1 the input sits on).

    Pisot: xi an algebraic integer whose conjugates all lie strictly
    inside the unit circle.  Salem: algebraic integer of degree >= 4 with
    one conjugate inside, the rest on the circle.  Garsia: algebraic
    integer with Mahler measure exactly 2, decided symbolically (all
    conjugates off the circle and |constant term| == 2); a Mahler interval
    that keeps straddling 2 in any other configuration raises
    UndecidedError rather than guessing.
    """
    side = a.compare_fraction(1)
    if side == 0:
        raise InvalidInput("cannot classify 1")
    if a.compare_fraction(0) <= 0:
        raise InvalidInput("classification needs a positive number")
    xi = a if side > 0 else a.reciprocal()
    lam = a if side < 0 else a.reciprocal()
    poly = xi.min_poly
    d = poly.degree
    monic = poly.is_monic
    mm = mahler_measure(poly)
    m_on = mm.n_on_circle
    # xi > 1 is itself one of the outside roots
    is_pisot = bool(monic and mm.n_outside == 1 and m_on == 0)
    is_salem = bool(monic and d >= 4 and poly.is_self_reciprocal()
                    and mm.n_outside == 1 and mm.n_inside == 1
                    and m_on == d - 2)
    if monic and mm.n_inside == 0 and m_on == 0:
        is_garsia = abs(poly.constant) == 2
    elif not monic:
        is_garsia = False
    elif mm.upper < 2 or mm.lower > 2:
        is_garsia = False
    else:
        # an interval straddling 2 with roots inside or on the circle:
        # tighten once, then refuse to guess
        mm2 = mahler_measure(poly, bits=96)
        if mm2.upper < 2 or mm2.lower > 2:
            is_garsia = False
            mm = mm2
        else:
            raise UndecidedError(
                "Mahler measure interval straddles 2; cannot decide the "
                "Garsia property for this configuration")
    return ClassificationReport(
        lambda_min_poly=lam.min_poly,
        xi_min_poly=poly,
        degree=d,
        xi_is_algebraic_integer=monic,
        mahler=mm,
        m_unit_circle=m_on,
        n_inside=mm.n_inside,
        n_outside=mm.n_outside,
        is_pisot=is_pisot,
        is_salem=is_salem,
        is_garsia=is_garsia,
        irreducibility=a.irreducibility,
        lambda_float=lam.float_value(),
        xi_float=xi.float_value(),
    )


# ---------------------------------------------------------------------------
# proximity of powers to integers, and the separation model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerProximity:
    j: int
    power: float
    nearest_integer: int
    distance: float
    error_bound: float


def pisot_proximity(xi: AlgebraicNumber, j_max: int) -> list[PowerProximity]:
    """Distances from xi^j to the nearest integer for j = 1..j_max, with
    certified error bounds.  For a Pisot xi these decay geometrically,
    which is the signature the Fourier non-decay scan keys on."""
    if xi.compare_fraction(1) <= 0:
        raise InvalidInput("proximity scan expects xi > 1")
    out = []
    if xi.is_rational:
        v = xi.as_fraction()
        for j in range(1, j_max + 1):
            pj = v ** j
            fl = pj.numerator // pj.denominator
            frac = pj - fl
            nearest = fl if frac <= Fraction(1, 2) else fl + 1
            dist = abs(pj - nearest)
            out.append(PowerProximity(j, float(pj), int(nearest),
                                      float(dist), 0.0))
        return out
    # refine enough that every power's interval is far narrower than its
    # distance resolution
    hi0 = xi.interval()[1]
    bits = 64 + int(j_max * max(1.0, math.log2(float(hi0) + 1)))
    for j in range(1, j_max + 1):
        coords = xi.power_coords(j)
        iv = xi.eval_coords_interval(coords, bits)
        attempts = 0
        while iv_width(iv) > Fraction(1, 1 << 48):
            bits *= 2
            iv = xi.eval_coords_interval(coords, bits)
            attempts += 1
            if attempts > 10:  # pragma: no cover
                raise PrecisionError("power enclosure did not converge")
        mid = (iv[0] + iv[1]) / 2
        nearest = int(mid + Fraction(1, 2)) if mid >= 0 else -int(-mid + Fraction(1, 2))
        dist_iv = iv_abs((iv[0] - nearest, iv[1] - nearest))
        err = float(iv_width(iv))
        out.append(PowerProximity(j, float(mid), nearest,
                                  float((dist_iv[0] + dist_iv[1]) / 2), err))
    return out


@dataclass(frozen=True)
class SeparationModel:
    """Heuristic lower-bound model for |P(lambda)| over height-one
    polynomials P of degree <= d: value = M^-d * d^-m with an implied
    constant of 1; exponents are reported so callers can plot the model
    against measured minima."""
    d: int
    mahler: float
    m_unit_circle: int
    log2_value: float
    value: float


def separation_model(a: AlgebraicNumber, d: int) -> SeparationModel:
    if d < 1:
        raise InvalidInput("degree must be >= 1")
    rep = classify(a)
    m = rep.m_unit_circle
    Mlo, Mhi = rep.mahler.lower, rep.mahler.upper
    l2 = log2_bounds(Mlo, Mhi)
    log2_mid = float((l2[0] + l2[1]) / 2)
    log2_value = -d * log2_mid - m * math.log2(d)
    return SeparationModel(
        d=d,
        mahler=rep.mahler.value,
        m_unit_circle=m,
        log2_value=log2_value,
        value=2.0 ** log2_value,
    )
