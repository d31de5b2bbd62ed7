"""Exact integer polynomial arithmetic.

Polynomials are dense tuples of Python ints in ascending degree order, so
all algebra below is exact.  The module supplies the text/JSON parsing
front end, Euclidean algebra over Q with primitive-part normalization,
sign-faithful Sturm sequences built from integer pseudo-remainders,
certified real root isolation, and enough factorization machinery
(rational roots, distinct-degree sieves modulo small primes, a bounded
Kronecker interpolation search) to prove irreducibility at the degrees
this package works at.

Conventions: the zero polynomial is the empty tuple at the raw-tuple
level and is rejected by the IntPolynomial wrapper; leading coefficients
of primitive parts keep their sign.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import InvalidInput, PolynomialSyntaxError

Coeffs = tuple[int, ...]

# ---------------------------------------------------------------------------
# raw coefficient-tuple helpers (zero polynomial == empty tuple)
# ---------------------------------------------------------------------------


def _trim(cs: Sequence[int]) -> Coeffs:
    n = len(cs)
    while n > 0 and cs[n - 1] == 0:
        n -= 1
    return tuple(cs[:n])


def _neg(a: Coeffs) -> Coeffs:
    return tuple(-c for c in a)


def _add(a: Coeffs, b: Coeffs) -> Coeffs:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] += c
    return _trim(out)


def _sub(a: Coeffs, b: Coeffs) -> Coeffs:
    return _add(a, _neg(b))


def _mul(a: Coeffs, b: Coeffs) -> Coeffs:
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca == 0:
            continue
        for j, cb in enumerate(b):
            out[i + j] += ca * cb
    return _trim(out)


def _scale(a: Coeffs, k: int) -> Coeffs:
    if k == 0:
        return ()
    return tuple(c * k for c in a)


def _derivative(a: Coeffs) -> Coeffs:
    return _trim([i * c for i, c in enumerate(a)][1:])


def _content(a: Coeffs) -> int:
    g = 0
    for c in a:
        g = math.gcd(g, c)
        if g == 1:
            break
    return g


def _primitive(a: Coeffs) -> Coeffs:
    """Divide out the (positive) content; the sign of the leading
    coefficient is preserved."""
    if not a:
        return ()
    g = _content(a)
    if g <= 1:
        return tuple(a)
    return tuple(c // g for c in a)


def _eval_fraction(a: Coeffs, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * x + c
    return acc


def _sign_at(a: Coeffs, x: Fraction) -> int:
    """Exact sign of the polynomial at a rational point, using an
    integer Horner scheme (no Fraction churn)."""
    if not a:
        return 0
    num, den = x.numerator, x.denominator
    acc = a[-1]
    dpow = 1
    for c in reversed(a[:-1]):
        dpow *= den
        acc = acc * num + c * dpow
    return (acc > 0) - (acc < 0)


def _divmod_q(a: Coeffs, b: Coeffs) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """Quotient and remainder over Q."""
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    r = [Fraction(c) for c in a]
    db = len(b) - 1
    lead = Fraction(b[-1])
    q = [Fraction(0)] * max(len(a) - db, 0)
    while len(r) - 1 >= db and any(r):
        while r and r[-1] == 0:
            r.pop()
        if len(r) - 1 < db:
            break
        k = len(r) - 1 - db
        coef = r[-1] / lead
        q[k] = coef
        for i, bc in enumerate(b):
            r[k + i] -= coef * bc
        r.pop()
    while r and r[-1] == 0:
        r.pop()
    return tuple(q), tuple(r)


def _exact_div(a: Coeffs, b: Coeffs) -> Coeffs:
    """Divide a by b, which must divide exactly over Q; result is returned
    with integer coefficients after clearing the (necessarily unit) content
    scale.  Raises on inexact division."""
    q, r = _divmod_q(a, b)
    if any(r):
        raise ArithmeticError("inexact polynomial division")
    out = []
    den = 1
    for c in q:
        den = den * c.denominator // math.gcd(den, c.denominator)
    if den != 1:
        # a = b*q with a,b integral does not force q integral unless b is
        # primitive; callers pass primitive divisors, so this is a bug trap.
        raise ArithmeticError("non-integral exact quotient")
    for c in q:
        out.append(int(c))
    return _trim(out)


def _gcd_primitive(a: Coeffs, b: Coeffs) -> Coeffs:
    """Primitive gcd over Z (positive leading coefficient), computed by a
    Euclidean descent over Q with primitive-part normalization at each step
    to keep coefficient growth in check."""
    a, b = _primitive(a), _primitive(b)
    while b:
        _, r = _divmod_q(a, b)
        if not any(r):
            a, b = b, ()
            break
        den = 1
        for c in r:
            den = den * c.denominator // math.gcd(den, c.denominator)
        ri = _primitive(_trim([int(c * den) for c in r]))
        a, b = b, ri
    if not a:
        return ()
    if a[-1] < 0:
        a = _neg(a)
    return a


# ---------------------------------------------------------------------------
# the public wrapper
# ---------------------------------------------------------------------------

_SUPERSCRIPT = {}


class IntPolynomial:
    """A nonzero polynomial with integer coefficients.

    Immutable; coefficients ascend in degree with no trailing zeros.
    Arithmetic stays in Z.  Division helpers that leave Z live at module
    level on raw tuples.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[int]):
        cs = _trim([int(c) for c in coeffs])
        if not cs:
            raise InvalidInput("the zero polynomial is not a valid input")
        object.__setattr__(self, "coeffs", cs)

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("IntPolynomial is immutable")

    # -- basic queries ------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> int:
        return self.coeffs[-1]

    @property
    def constant(self) -> int:
        return self.coeffs[0]

    @property
    def is_monic(self) -> bool:
        return self.coeffs[-1] == 1

    def __call__(self, x):
        if isinstance(x, Fraction) or isinstance(x, int):
            acc = Fraction(0) if isinstance(x, Fraction) else 0
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        raise TypeError("exact evaluation needs an int or Fraction")

    def sign_at(self, x: Fraction) -> int:
        return _sign_at(self.coeffs, Fraction(x))

    # -- algebra -------------------------------------------------------

    def __neg__(self) -> "IntPolynomial":
        return IntPolynomial(_neg(self.coeffs))

    def __add__(self, other: "IntPolynomial") -> "IntPolynomial":
        return IntPolynomial(_add(self.coeffs, other.coeffs))

    def __sub__(self, other: "IntPolynomial") -> "IntPolynomial":
        return IntPolynomial(_sub(self.coeffs, other.coeffs))

    def __mul__(self, other) -> "IntPolynomial":
        if isinstance(other, int):
            return IntPolynomial(_scale(self.coeffs, other))
        return IntPolynomial(_mul(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def derivative(self) -> "IntPolynomial":
        d = _derivative(self.coeffs)
        if not d:
            raise InvalidInput("derivative of a constant is zero")
        return IntPolynomial(d)

    def primitive(self) -> "IntPolynomial":
        return IntPolynomial(_primitive(self.coeffs))

    def reciprocal(self) -> "IntPolynomial":
        """x^deg * p(1/x): the coefficient sequence reversed.  Requires a
        nonzero constant term so the degree is preserved."""
        if self.coeffs[0] == 0:
            raise InvalidInput("reciprocal needs a nonzero constant term")
        return IntPolynomial(tuple(reversed(self.coeffs)))

    def compose_neg(self) -> "IntPolynomial":
        """p(-x)."""
        return IntPolynomial(tuple(c if i % 2 == 0 else -c
                                   for i, c in enumerate(self.coeffs)))

    def is_self_reciprocal(self) -> bool:
        cs = self.coeffs
        return cs[0] != 0 and cs == tuple(reversed(cs))

    # -- plumbing -------------------------------------------------------

    def __eq__(self, other) -> bool:
        return isinstance(other, IntPolynomial) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"IntPolynomial({list(self.coeffs)})"

    def __str__(self) -> str:
        terms = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if i == 0:
                body = str(mag)
            elif i == 1:
                body = "x" if mag == 1 else f"{mag}x"
            else:
                body = f"x^{i}" if mag == 1 else f"{mag}x^{i}"
            terms.append((sign, body))
        first_sign, first_body = terms[0]
        out = ("-" if first_sign == "-" else "") + first_body
        for sign, body in terms[1:]:
            out += f" {sign} {body}"
        return out


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TERM_RE = re.compile(
    r"""^([+-]?)          # sign
         (\d+)?           # optional integer coefficient
         \*?              # optional explicit multiplication
         (x)?             # optional variable
         (?:(?:\^|\*\*)(\d+))?   # optional exponent
         $""",
    re.VERBOSE,
)


def parse_coefficient_list(values: Sequence) -> IntPolynomial:
    """Build a polynomial from ascending-order coefficients; every entry
    must be an exact integer."""
    cs = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, int):
            raise PolynomialSyntaxError(
                f"coefficient {v!r} is not an integer")
        cs.append(v)
    if not any(cs):
        raise PolynomialSyntaxError("all coefficients are zero")
    return IntPolynomial(cs)


def parse_polynomial(text: str) -> IntPolynomial:
    """Parse polynomial text like ``x^2 - x - 1`` or ``2x-1``, or a JSON
    array of ascending integer coefficients like ``[-1, -1, 1]``.

    Terms follow ``[sign][coeff][x[^exp]]``; coefficients must be integers
    (``0.5`` and ``1/2`` are rejected, not rounded).
    """
    s = text.strip()
    if not s:
        raise PolynomialSyntaxError("empty polynomial text")
    if s.startswith("["):
        try:
            data = json.loads(s)
        except json.JSONDecodeError as e:
            raise PolynomialSyntaxError(f"bad coefficient array: {e}") from None
        if not isinstance(data, list):
            raise PolynomialSyntaxError("coefficient input must be an array")
        return parse_coefficient_list(data)

    compact = s.replace(" ", "")
    if not compact:
        raise PolynomialSyntaxError("empty polynomial text")
    tokens = re.findall(r"[+-]?[^+-]+", compact)
    if "".join(tokens) != compact:
        raise PolynomialSyntaxError(f"could not tokenize {text!r}")
    acc: dict[int, int] = {}
    for tok in tokens:
        m = _TERM_RE.match(tok)
        if not m:
            if "." in tok or "/" in tok:
                raise PolynomialSyntaxError(
                    f"non-integer coefficient in term {tok!r}")
            raise PolynomialSyntaxError(f"bad term {tok!r}")
        sign_s, coeff_s, var_s, exp_s = m.groups()
        if coeff_s is None and var_s is None:
            raise PolynomialSyntaxError(f"bad term {tok!r}")
        if exp_s is not None and var_s is None:
            raise PolynomialSyntaxError(f"exponent without variable in {tok!r}")
        coeff = int(coeff_s) if coeff_s is not None else 1
        if sign_s == "-":
            coeff = -coeff
        exp = 0
        if var_s:
            exp = int(exp_s) if exp_s is not None else 1
        acc[exp] = acc.get(exp, 0) + coeff
    if not acc or not any(acc.values()):
        raise PolynomialSyntaxError("polynomial is identically zero")
    deg = max(e for e, c in acc.items() if c != 0)
    return IntPolynomial([acc.get(i, 0) for i in range(deg + 1)])


# ---------------------------------------------------------------------------
# squarefree structure
# ---------------------------------------------------------------------------


def squarefree_part(p: IntPolynomial) -> IntPolynomial:
    """p divided by gcd(p, p'), primitive.  Equals p (up to content) when p
    is already squarefree; constant inputs come back unchanged."""
    if p.degree == 0:
        return p.primitive()
    g = _gcd_primitive(p.coeffs, _derivative(p.coeffs))
    if len(g) == 1:
        return p.primitive()
    q = _exact_div(_primitive(p.coeffs), g)
    return IntPolynomial(q)


def squarefree_factorization(p: IntPolynomial) -> list[tuple[IntPolynomial, int]]:
    """Yun's algorithm: returns [(g_i, i)] with p = content * prod g_i^i,
    each g_i squarefree and primitive, pairwise coprime."""
    a = _primitive(p.coeffs)
    if len(a) == 1:
        return []
    if a[-1] < 0:
        a = _neg(a)
    d = _derivative(a)
    g = _gcd_primitive(a, d)
    if len(g) == 1:
        return [(IntPolynomial(a), 1)]
    out = []
    c = _exact_div(a, g)
    w = _sub(_exact_div(d, g), _derivative(c))
    i = 1
    while len(c) > 1:
        y = _gcd_primitive(c, w)
        if len(y) > 1:
            out.append((IntPolynomial(y), i))
        c_next = _exact_div(c, y) if len(y) > 1 else c
        w = _sub(_exact_div(w, y) if len(y) > 1 else w, _derivative(c_next))
        c = c_next
        i += 1
    return out


# ---------------------------------------------------------------------------
# Sturm sequences
# ---------------------------------------------------------------------------


def _pseudo_rem_signed(a: Coeffs, b: Coeffs) -> Coeffs:
    """A positive rational multiple of rem(a, b), computed without leaving
    Z.  Each reduction step scales by the leading coefficient of b; an odd
    number of negative scalings is compensated at the end so the sign
    matches the true remainder."""
    db = len(b) - 1
    c = b[-1]
    r = list(a)
    steps = 0
    while len(r) - 1 >= db:
        lead = r[-1]
        shift = len(r) - 1 - db
        r = [c * x for x in r]
        for i, bc in enumerate(b):
            r[shift + i] -= lead * bc
        steps += 1
        while r and r[-1] == 0:
            r.pop()
        if not r:
            break
    if c < 0 and steps % 2 == 1:
        r = [-x for x in r]
    return tuple(r)


def sturm_chain(p: IntPolynomial | Coeffs) -> list[Coeffs]:
    """Sturm chain of the primitive part, each member primitive with the
    sign of the underlying rational chain preserved."""
    cs = p.coeffs if isinstance(p, IntPolynomial) else _trim(p)
    f = _primitive(cs)
    if len(f) <= 1:
        return [f]
    chain = [f, _primitive(_derivative(f))]
    while len(chain[-1]) > 1:
        r = _pseudo_rem_signed(chain[-2], chain[-1])
        if not r:
            break
        chain.append(_primitive(_neg(r)))
    return chain


def sign_variations(chain: Sequence[Coeffs], x: Fraction) -> int:
    signs = []
    for cs in chain:
        s = _sign_at(cs, x)
        if s != 0:
            signs.append(s)
    flips = 0
    for a, b in zip(signs, signs[1:]):
        if a != b:
            flips += 1
    return flips


def sturm_count(chain: Sequence[Coeffs], a: Fraction, b: Fraction) -> int:
    """Distinct real roots of the chain's head in (a, b]; endpoints must
    not be roots of the head for the classical statement, which all
    callers here guarantee."""
    if not a < b:
        raise InvalidInput("need a < b for a Sturm count")
    return sign_variations(chain, a) - sign_variations(chain, b)


def cauchy_root_bound(p: IntPolynomial | Coeffs) -> Fraction:
    """A power of two strictly exceeding the modulus of every root."""
    cs = p.coeffs if isinstance(p, IntPolynomial) else _trim(p)
    lead = abs(cs[-1])
    m = max(abs(c) for c in cs[:-1]) if len(cs) > 1 else 0
    bound = 1 + Fraction(m, lead)
    B = Fraction(2)
    while B <= bound:
        B *= 2
    return B


# ---------------------------------------------------------------------------
# rational roots
# ---------------------------------------------------------------------------


def _divisors(n: int) -> list[int]:
    """Positive divisors of |n| (n != 0), by trial division."""
    n = abs(n)
    small = {}
    d = 2
    while d * d <= n and d < 1_000_000:
        while n % d == 0:
            small[d] = small.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        small[n] = small.get(n, 0) + 1
    divs = [1]
    for prime, mult in small.items():
        divs = [dd * prime**k for dd in divs for k in range(mult + 1)]
    return sorted(divs)


def rational_roots(p: IntPolynomial) -> list[Fraction]:
    """All rational roots (without multiplicity), sorted ascending."""
    cs = _primitive(p.coeffs)
    roots = []
    k = 0
    while cs[k] == 0:
        k += 1
    if k > 0:
        roots.append(Fraction(0))
        cs = cs[k:]
    if len(cs) > 1:
        for num in _divisors(cs[0]):
            for den in _divisors(cs[-1]):
                if math.gcd(num, den) != 1:
                    continue
                for cand in (Fraction(num, den), Fraction(-num, den)):
                    if _sign_at(cs, cand) == 0:
                        roots.append(cand)
    return sorted(set(roots))


# ---------------------------------------------------------------------------
# real root isolation
# ---------------------------------------------------------------------------


class _HitRoot(Exception):
    def __init__(self, r: Fraction):
        self.r = r


def _bisect_isolate(g: Coeffs) -> list[tuple[Fraction, Fraction]]:
    """Isolating open intervals for a squarefree g with g(x) != 0 at every
    dyadic point we probe; raises _HitRoot when a probe lands on a root."""
    chain = sturm_chain(g)
    B = cauchy_root_bound(g)
    lo, hi = -B, B
    for e in (lo, hi):
        if _sign_at(g, e) == 0:  # pragma: no cover - bound is strict
            raise _HitRoot(e)
    out: list[tuple[Fraction, Fraction]] = []
    stack = [(lo, hi, sign_variations(chain, lo), sign_variations(chain, hi))]
    while stack:
        a, b, va, vb = stack.pop()
        n = va - vb
        if n == 0:
            continue
        if n == 1:
            out.append((a, b))
            continue
        mid = (a + b) / 2
        if _sign_at(g, mid) == 0:
            raise _HitRoot(mid)
        vm = sign_variations(chain, mid)
        stack.append((a, mid, va, vm))
        stack.append((mid, b, vm, vb))
    return out


def isolate_real_roots(p: IntPolynomial) -> list[tuple[Fraction, Fraction]]:
    """Disjoint isolating intervals for the distinct real roots of p,
    sorted ascending.  Exact rational roots come back as degenerate
    intervals [r, r]; all other intervals (lo, hi) satisfy
    sign(p(lo)) != sign(p(hi)) with neither endpoint a root.
    """
    f = squarefree_part(p)
    if f.degree == 0:
        return []
    work = f.coeffs
    points: list[Fraction] = []
    while True:
        try:
            intervals = _bisect_isolate(work) if len(work) > 1 else []
            break
        except _HitRoot as h:
            points.append(h.r)
            den = h.r.denominator
            lin = (-h.r.numerator, den)
            work = _exact_div(_primitive(work), _primitive(lin))
    # shrink intervals so no recorded exact root sits inside one
    fixed = []
    for (a, b) in intervals:
        for r in points:
            if a < r < b:
                # the interval's root is not r (r was divided out), so one
                # side of r keeps the sign change and r becomes an endpoint
                if _sign_at(work, a) != _sign_at(work, r):
                    b = r
                else:
                    a = r
        fixed.append((a, b))
    out = [(r, r) for r in points] + fixed
    out.sort(key=lambda iv: (iv[0] + iv[1]) / 2)
    return out


def refine_root(p: IntPolynomial | Coeffs, lo: Fraction, hi: Fraction,
                width: Fraction) -> tuple[Fraction, Fraction]:
    """Shrink an isolating interval with a sign change at its endpoints
    until hi - lo <= width, by dyadic bisection.  The interval must not
    contain a rational point where p vanishes other than its single root
    (guaranteed for irreducible p of degree >= 2, and for isolation output
    on squarefree rational-root-free parts)."""
    cs = p.coeffs if isinstance(p, IntPolynomial) else p
    if lo == hi:
        return lo, hi
    slo = _sign_at(cs, lo)
    shi = _sign_at(cs, hi)
    if slo == 0 or shi == 0 or slo == shi:
        raise InvalidInput("refine_root needs a sign change on the interval")
    while hi - lo > width:
        mid = (lo + hi) / 2
        sm = _sign_at(cs, mid)
        if sm == 0:
            return mid, mid
        if sm == slo:
            lo = mid
        else:
            hi = mid
    return lo, hi


# ---------------------------------------------------------------------------
# arithmetic modulo small primes, and irreducibility
# ---------------------------------------------------------------------------


def _mod_trim(cs: Sequence[int], p: int) -> tuple[int, ...]:
    out = [c % p for c in cs]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def _mod_monic(cs: Sequence[int], p: int) -> tuple[int, ...]:
    inv = pow(cs[-1], -1, p)
    return tuple(c * inv % p for c in cs)


def _mod_mul(a, b, p):
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                out[i + j] = (out[i + j] + ca * cb) % p
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def _mod_rem(a, b, p):
    b = _mod_monic(b, p)
    r = list(a)
    db = len(b) - 1
    while len(r) - 1 >= db:
        lead = r[-1]
        if lead:
            shift = len(r) - 1 - db
            for i, bc in enumerate(b):
                r[shift + i] = (r[shift + i] - lead * bc) % p
        r.pop()
        while r and r[-1] == 0:
            r.pop()
    return tuple(r)


def _mod_gcd(a, b, p):
    while b:
        a, b = b, _mod_rem(a, b, p)
    return _mod_monic(a, p) if a else ()


def _factor_degrees_mod_p(cs: Coeffs, p: int) -> list[int] | None:
    """Degrees (with multiplicity) of the irreducible factors of cs mod p,
    or None when cs is not squarefree mod p or drops degree."""
    f = _mod_trim(cs, p)
    if len(f) != len(cs):
        return None
    f = _mod_monic(f, p)
    d = _mod_trim([i * c for i, c in enumerate(f)][1:], p)
    if not d or len(_mod_gcd(f, d, p)) != 1:
        return None
    degrees = []
    v = f
    h = _mod_rem((0, 1), v, p)
    dd = 0
    while len(v) - 1 >= 2 * (dd + 1):
        dd += 1
        # h is x^(p^(dd-1)) mod v; one more Frobenius step gives x^(p^dd)
        h = _mod_pow_frobenius(h, v, p)
        g = _mod_gcd(_mod_sub(h, (0, 1), p), v, p)
        if len(g) > 1:
            degrees.extend([dd] * ((len(g) - 1) // dd))
            v = _mod_exact_div(v, g, p)
            h = _mod_rem(h, v, p)
    if len(v) > 1:
        degrees.append(len(v) - 1)
    return degrees


def _mod_sub(a, b, p):
    n = max(len(a), len(b))
    out = [0] * n
    for i, c in enumerate(a):
        out[i] = c
    for i, c in enumerate(b):
        out[i] = (out[i] - c) % p
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def _mod_pow_frobenius(h, f, p):
    """h^p mod (f, p)."""
    result = (1,)
    base = h
    e = p
    while e:
        if e & 1:
            result = _mod_rem(_mod_mul(result, base, p), f, p)
        base = _mod_rem(_mod_mul(base, base, p), f, p)
        e >>= 1
    return result


def _mod_exact_div(a, b, p):
    b = _mod_monic(b, p)
    r = list(a)
    q = [0] * (len(a) - len(b) + 1)
    db = len(b) - 1
    while len(r) - 1 >= db:
        lead = r[-1]
        shift = len(r) - 1 - db
        q[shift] = lead
        if lead:
            for i, bc in enumerate(b):
                r[shift + i] = (r[shift + i] - lead * bc) % p
        r.pop()
        while r and r[-1] == 0:
            r.pop()
    return tuple(q)


_SIEVE_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)


def _possible_factor_degrees(cs: Coeffs, primes=_SIEVE_PRIMES) -> set[int]:
    """Intersection over good primes of the subset-sums of mod-p factor
    degrees: every degree of a true rational factor must be in the result.
    Starts as {0..deg} and only shrinks."""
    n = len(cs) - 1
    possible = set(range(n + 1))
    for p in primes:
        degs = _factor_degrees_mod_p(cs, p)
        if degs is None:
            continue
        mask = 1
        for d in degs:
            mask |= mask << d
        sums = {i for i in range(n + 1) if (mask >> i) & 1}
        possible &= sums
        if possible <= {0, n}:
            break
    return possible


def _lagrange_interpolate(xs: Sequence[int], ys: Sequence[Fraction]) -> tuple[Fraction, ...]:
    m = len(xs) - 1
    coeffs = [Fraction(0)] * (m + 1)
    for i, (xi, yi) in enumerate(zip(xs, ys)):
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j, xj in enumerate(xs):
            if j == i:
                continue
            new = [Fraction(0)] * (len(basis) + 1)
            for k, c in enumerate(basis):
                new[k] -= c * xj
                new[k + 1] += c
            basis = new
            denom *= xi - xj
        w = yi / denom
        for k, c in enumerate(basis):
            coeffs[k] += w * c
    return tuple(coeffs)


def _kronecker_search(cs: Coeffs, max_factor_degree: int,
                      allowed_degrees: set[int],
                      budget: int = 400_000) -> Coeffs | None | bool:
    """Exhaustive interpolation search for a nontrivial factor of degree
    <= max_factor_degree.  Returns a factor, False when provably none
    exists in the searched range, or None when the budget ran out."""
    n = len(cs) - 1
    xs_pool = [0, 1, -1, 2, -2, 3, -3, 4, -4, 5, -5, 6, -6]
    spent = 0
    for m in range(1, max_factor_degree + 1):
        if m not in allowed_degrees:
            continue
        xs = xs_pool[: m + 1]
        vals = []
        for x in xs:
            v = 0
            for c in reversed(cs):
                v = v * x + c
            if v == 0:
                # rational root missed upstream; treat as unknown
                return None
            vals.append(v)
        choice_lists = []
        combos = 1
        for v in vals:
            ds = _divisors(v)
            signed = [d for d in ds] + [-d for d in ds]
            choice_lists.append(signed)
            combos *= len(signed)
        if spent + combos > budget:
            return None
        spent += combos
        for combo in itertools.product(*choice_lists):
            g = _lagrange_interpolate(xs, [Fraction(c) for c in combo])
            ig = []
            ok = True
            for c in g:
                if c.denominator != 1:
                    ok = False
                    break
                ig.append(int(c))
            if not ok:
                continue
            gt = _trim(ig)
            if len(gt) - 1 != m:
                continue
            q, r = _divmod_q(cs, gt)
            if any(r):
                continue
            return _primitive(gt)
    return False


def is_irreducible(p: IntPolynomial) -> bool | None:
    """Decide irreducibility over Q of a primitive polynomial of degree
    >= 1.  Returns True/False when proved, None when every tactic ran out
    (callers then mark results 'irreducibility assumed').

    Tactics, in order: rational roots; distinct-degree sieves modulo small
    primes; a budgeted Kronecker interpolation search for low-degree
    factors.
    """
    cs = _primitive(p.coeffs)
    n = len(cs) - 1
    if n <= 0:
        return False
    if n == 1:
        return True
    k = 0
    while cs[k] == 0:
        k += 1
    if k > 0:
        return False  # divisible by x
    if rational_roots(IntPolynomial(cs)):
        return False
    if n in (2, 3):
        return True  # no rational root and degree < 4
    allowed = _possible_factor_degrees(cs)
    nontrivial = {d for d in allowed if 0 < d < n}
    if not nontrivial:
        return True
    res = _kronecker_search(cs, n // 2, nontrivial)
    if res is False:
        return True
    if res is None:
        return None
    return False


def factor_squarefree(p: IntPolynomial) -> list[IntPolynomial] | None:
    """Complete factorization into irreducibles of a primitive squarefree
    polynomial, or None when a factor's irreducibility could not be
    settled within budget."""
    cs = _primitive(p.coeffs)
    work: list[Coeffs] = [cs]
    out: list[IntPolynomial] = []
    while work:
        f = work.pop()
        n = len(f) - 1
        if n == 0:
            continue
        if n == 1:
            out.append(IntPolynomial(f))
            continue
        k = 0
        while f[k] == 0:
            k += 1
        if k > 0:
            out.append(IntPolynomial((0, 1)))
            work.append(f[k:])
            continue
        rr = rational_roots(IntPolynomial(f))
        if rr:
            r = rr[0]
            lin = _primitive((-r.numerator, r.denominator))
            out.append(IntPolynomial(lin))
            work.append(_exact_div(f, lin))
            continue
        verdict = is_irreducible(IntPolynomial(f))
        if verdict is True:
            out.append(IntPolynomial(f))
            continue
        if verdict is None:
            return None
        allowed = _possible_factor_degrees(f)
        g = _kronecker_search(f, n // 2, {d for d in allowed if 0 < d < n})
        if g is None or g is False:
            return None  # inconsistent budgets; give up honestly
        work.append(g)
        work.append(_exact_div(f, g))
    out.sort(key=lambda q: (q.degree, q.coeffs))
    return out
