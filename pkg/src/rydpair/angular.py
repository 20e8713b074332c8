"""Exact angular-momentum algebra.

Wigner 3j and 6j symbols, the Wigner (lowercase) d-matrix, the Wigner-Eckart
theorem in the fine-structure basis, and the reduced matrix elements of
spherical harmonics and momentum operators.

All angular momenta are half-integers and are handled exactly: the
:class:`HalfInteger` type stores twice the value as a Python integer, and the
3j/6j symbols are evaluated with Racah's finite sums in exact rational
arithmetic (arbitrary-precision integers under a single square root), rounded
to floating point once at the very end. Selection rules therefore come out as
exact zeros of the algebra, never as approximate cancellations.

Conventions: the Condon-Shortley phase is included in the spherical
harmonics, and the d-matrix follows d^j_{m m'}(theta) =
<j m| exp(-i theta J_y) |j m'> so that d^1_{0,0}(theta) = cos(theta) and the
j=1/2 matrix is [[cos(theta/2), -sin(theta/2)], [sin(theta/2), cos(theta/2)]]
in the (+1/2, -1/2) ordering. Spherical vector components follow
F_pm = mp(1/sqrt(2))(F_x pm i F_y), F_0 = F_z.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Union

JLike = Union[int, float, Fraction, "HalfInteger"]

__all__ = [
    "HalfInteger",
    "half",
    "wigner_3j",
    "wigner_6j",
    "wigner_d",
    "reduced_Y",
    "reduced_J",
    "wigner_eckart",
    "reduced_l_tensor",
    "reduced_s_tensor",
    "multipole_angular_element",
    "momentum_angular_element",
    "SPIN_HALF",
]


class HalfInteger:
    """An exact half-integer, stored as twice its value.

    Supports arithmetic with other half-integers and with plain integers,
    hashing, ordering, and conversion to float. Construction from a float
    requires the value to be an exact multiple of 1/2.
    """

    __slots__ = ("twice",)

    def __init__(self, value: JLike):
        if isinstance(value, HalfInteger):
            self.twice = value.twice
        elif isinstance(value, int):
            self.twice = 2 * value
        elif isinstance(value, Fraction):
            doubled = 2 * value
            if doubled.denominator != 1:
                raise ValueError(f"{value} is not a half-integer")
            self.twice = int(doubled)
        elif isinstance(value, float):
            doubled = 2.0 * value
            if doubled != round(doubled):
                raise ValueError(f"{value} is not a half-integer")
            self.twice = int(round(doubled))
        else:
            raise TypeError(f"cannot interpret {value!r} as a half-integer")

    @classmethod
    def from_twice(cls, twice: int) -> "HalfInteger":
        obj = cls.__new__(cls)
        obj.twice = int(twice)
        return obj

    @property
    def is_integer(self) -> bool:
        return self.twice % 2 == 0

    def __float__(self) -> float:
        return self.twice / 2.0

    def __int__(self) -> int:
        if self.twice % 2:
            raise ValueError(f"{self} is not an integer")
        return self.twice // 2

    def __add__(self, other: JLike) -> "HalfInteger":
        return HalfInteger.from_twice(self.twice + HalfInteger(other).twice)

    __radd__ = __add__

    def __sub__(self, other: JLike) -> "HalfInteger":
        return HalfInteger.from_twice(self.twice - HalfInteger(other).twice)

    def __rsub__(self, other: JLike) -> "HalfInteger":
        return HalfInteger.from_twice(HalfInteger(other).twice - self.twice)

    def __neg__(self) -> "HalfInteger":
        return HalfInteger.from_twice(-self.twice)

    def __abs__(self) -> "HalfInteger":
        return HalfInteger.from_twice(abs(self.twice))

    def __eq__(self, other: object) -> bool:
        try:
            return self.twice == HalfInteger(other).twice  # type: ignore[arg-type]
        except (TypeError, ValueError):
            return NotImplemented

    def __lt__(self, other: JLike) -> bool:
        return self.twice < HalfInteger(other).twice

    def __le__(self, other: JLike) -> bool:
        return self.twice <= HalfInteger(other).twice

    def __gt__(self, other: JLike) -> bool:
        return self.twice > HalfInteger(other).twice

    def __ge__(self, other: JLike) -> bool:
        return self.twice >= HalfInteger(other).twice

    def __hash__(self) -> int:
        return hash(self.twice / 2.0)

    def __repr__(self) -> str:
        if self.twice % 2 == 0:
            return str(self.twice // 2)
        return f"{self.twice}/2"


def half(numerator: int) -> HalfInteger:
    """The half-integer numerator/2, so half(1) is 1/2 and half(3) is 3/2."""
    return HalfInteger.from_twice(numerator)


SPIN_HALF = HalfInteger.from_twice(1)


def _twice(value: JLike) -> int:
    """Twice the given half-integer, as an exact int."""
    return HalfInteger(value).twice


def _phase_from_twice(twice_exponent: int) -> int:
    """(-1)**k for k = twice_exponent / 2; the exponent must be integer."""
    if twice_exponent % 2:
        raise ValueError("phase exponent is not an integer")
    return -1 if (twice_exponent // 2) % 2 else 1


def _sqrt_fraction(value: Fraction) -> float:
    """Square root of an exact non-negative rational, as a float."""
    if value < 0:
        raise ValueError("negative value under square root")
    # Fraction -> float conversion is correctly rounded even for big ints.
    return math.sqrt(float(value))


def _triangle_coefficient(tj1: int, tj2: int, tj3: int) -> Fraction | None:
    """Exact triangle coefficient Delta(j1 j2 j3), or None if violated.

    Delta = (j1+j2-j3)! (j1-j2+j3)! (-j1+j2+j3)! / (j1+j2+j3+1)!
    """
    a = tj1 + tj2 - tj3
    b = tj1 - tj2 + tj3
    c = -tj1 + tj2 + tj3
    if a < 0 or b < 0 or c < 0 or a % 2 or b % 2 or c % 2:
        return None
    s = (tj1 + tj2 + tj3) // 2 + 1
    return Fraction(
        math.factorial(a // 2) * math.factorial(b // 2) * math.factorial(c // 2),
        math.factorial(s),
    )


@lru_cache(maxsize=None)
def _wigner_3j_twice(tj1: int, tj2: int, tj3: int, tm1: int, tm2: int, tm3: int) -> float:
    if tm1 + tm2 + tm3 != 0:
        return 0.0
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        if tj < 0 or abs(tm) > tj or (tj + tm) % 2:
            return 0.0
    delta = _triangle_coefficient(tj1, tj2, tj3)
    if delta is None:
        return 0.0

    # Racah's sum over t in exact rational arithmetic.
    t_min = max(0, (tj2 - tj3 - tm1) // 2, (tj1 - tj3 + tm2) // 2)
    t_max = min(
        (tj1 + tj2 - tj3) // 2,
        (tj1 - tm1) // 2,
        (tj2 + tm2) // 2,
    )
    if t_max < t_min:
        return 0.0
    total = Fraction(0)
    for t in range(t_min, t_max + 1):
        denom = (
            math.factorial(t)
            * math.factorial((tj1 + tj2 - tj3) // 2 - t)
            * math.factorial((tj1 - tm1) // 2 - t)
            * math.factorial((tj2 + tm2) // 2 - t)
            * math.factorial((tj3 - tj2 + tm1) // 2 + t)
            * math.factorial((tj3 - tj1 - tm2) // 2 + t)
        )
        term = Fraction(1, denom)
        total += -term if t % 2 else term
    if total == 0:
        return 0.0

    norm = delta
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        norm *= math.factorial((tj + tm) // 2) * math.factorial((tj - tm) // 2)
    sign = _phase_from_twice(tj1 - tj2 - tm3)
    return sign * float(total) * _sqrt_fraction(norm)


def wigner_3j(j1: JLike, j2: JLike, j3: JLike, m1: JLike, m2: JLike, m3: JLike) -> float:
    """Wigner 3j symbol (j1 j2 j3; m1 m2 m3).

    Returns an exact 0.0 whenever a triangle or projection rule is violated;
    no exceptions are raised for unphysical argument combinations.
    """
    return _wigner_3j_twice(_twice(j1), _twice(j2), _twice(j3), _twice(m1), _twice(m2), _twice(m3))


@lru_cache(maxsize=None)
def _wigner_6j_twice(tj1: int, tj2: int, tj3: int, tj4: int, tj5: int, tj6: int) -> float:
    triads = (
        _triangle_coefficient(tj1, tj2, tj3),
        _triangle_coefficient(tj1, tj5, tj6),
        _triangle_coefficient(tj4, tj2, tj6),
        _triangle_coefficient(tj4, tj5, tj3),
    )
    if any(t is None for t in triads):
        return 0.0

    t1 = (tj1 + tj2 + tj3) // 2
    t2 = (tj1 + tj5 + tj6) // 2
    t3 = (tj4 + tj2 + tj6) // 2
    t4 = (tj4 + tj5 + tj3) // 2
    p1 = (tj1 + tj2 + tj4 + tj5) // 2
    p2 = (tj2 + tj3 + tj5 + tj6) // 2
    p3 = (tj3 + tj1 + tj6 + tj4) // 2

    total = Fraction(0)
    for t in range(max(t1, t2, t3, t4), min(p1, p2, p3) + 1):
        num = math.factorial(t + 1)
        denom = (
            math.factorial(t - t1)
            * math.factorial(t - t2)
            * math.factorial(t - t3)
            * math.factorial(t - t4)
            * math.factorial(p1 - t)
            * math.factorial(p2 - t)
            * math.factorial(p3 - t)
        )
        term = Fraction(num, denom)
        total += -term if t % 2 else term
    if total == 0:
        return 0.0

    norm = Fraction(1)
    for t in triads:
        norm *= t  # type: ignore[operator]
    return float(total) * _sqrt_fraction(norm)


def wigner_6j(j1: JLike, j2: JLike, j3: JLike, j4: JLike, j5: JLike, j6: JLike) -> float:
    """Wigner 6j symbol {j1 j2 j3; j4 j5 j6}; exact 0.0 for violated triads."""
    return _wigner_6j_twice(_twice(j1), _twice(j2), _twice(j3), _twice(j4), _twice(j5), _twice(j6))


@lru_cache(maxsize=None)
def _wigner_d_twice(tj: int, tm1: int, tm2: int, theta: float) -> float:
    if abs(tm1) > tj or abs(tm2) > tj or (tj + tm1) % 2 or (tj + tm2) % 2:
        raise ValueError("invalid projection quantum numbers for wigner_d")
    prefactor = _sqrt_fraction(
        Fraction(
            math.factorial((tj + tm2) // 2)
            * math.factorial((tj - tm2) // 2)
            * math.factorial((tj + tm1) // 2)
            * math.factorial((tj - tm1) // 2)
        )
    )
    cos_half = math.cos(theta / 2.0)
    sin_half = math.sin(theta / 2.0)
    k_min = max(0, (tm2 - tm1) // 2)
    k_max = min((tj + tm2) // 2, (tj - tm1) // 2)
    total = 0.0
    for k in range(k_min, k_max + 1):
        denom = (
            math.factorial((tj + tm2) // 2 - k)
            * math.factorial(k)
            * math.factorial((tj - tm1) // 2 - k)
            * math.factorial(k - (tm2 - tm1) // 2)
        )
        # exponents: cos^(2j - 2k + m2 - m1), sin^(2k - m2 + m1)
        e_cos = tj - 2 * k + (tm2 - tm1) // 2
        e_sin = 2 * k - (tm2 - tm1) // 2
        sign = -1 if (k - (tm2 - tm1) // 2) % 2 else 1
        total += sign * cos_half**e_cos * sin_half**e_sin / denom
    return prefactor * total


def wigner_d(j: JLike, mj: JLike, mjp: JLike, theta: float) -> float:
    """Wigner d-matrix element d^j_{mj mj'}(theta).

    Defined as <j mj| exp(-i theta J_y) |j mj'>; real for all arguments.
    """
    return _wigner_d_twice(_twice(j), _twice(mj), _twice(mjp), float(theta))


def reduced_Y(l: int, kappa: int, lp: int) -> float:
    """Reduced matrix element (l || Y_kappa0 || l') of a spherical harmonic.

    (-1)^l sqrt((2l+1)(2kappa+1)(2l'+1)/(4 pi)) (l kappa l'; 0 0 0).
    """
    three_j = wigner_3j(l, kappa, lp, 0, 0, 0)
    if three_j == 0.0:
        return 0.0
    sign = -1 if l % 2 else 1
    return sign * math.sqrt((2 * l + 1) * (2 * kappa + 1) * (2 * lp + 1) / (4.0 * math.pi)) * three_j


def reduced_J(j: JLike) -> float:
    """Reduced matrix element (J || J_10 || J) = sqrt(J(J+1)(2J+1)), in units of hbar."""
    tj = _twice(j)
    jf = tj / 2.0
    return math.sqrt(jf * (jf + 1.0) * (tj + 1.0))


def wigner_eckart(j: JLike, mj: JLike, kappa: JLike, q: JLike, jp: JLike, mjp: JLike,
                  reduced: float) -> float:
    """Matrix element <j mj| T_kappa_q |j' mj'> from its reduced element.

    (-1)^(j - mj) (j||T_kappa0||j') (j kappa j'; -mj q mj').
    """
    three_j = wigner_3j(j, kappa, jp, -HalfInteger(mj), q, mjp)
    if three_j == 0.0:
        return 0.0
    sign = _phase_from_twice(_twice(j) - _twice(mj))
    return sign * reduced * three_j


def reduced_l_tensor(l: int, j: JLike, kappa: int, lp: int, jp: JLike,
                     reduced_orbital: float, s: JLike = SPIN_HALF) -> float:
    """Reduced element (l s j || T_kappa0 || l' s j') for a spin-commuting tensor.

    (-1)^(l+s+j'+kappa) (l||T_kappa0||l') sqrt((2j+1)(2j'+1)) {l j s; j' l' kappa}.
    """
    six_j = wigner_6j(l, j, s, jp, lp, kappa)
    if six_j == 0.0 or reduced_orbital == 0.0:
        return 0.0
    tj, tjp = _twice(j), _twice(jp)
    sign = _phase_from_twice(2 * l + _twice(s) + tjp + 2 * kappa)
    return sign * reduced_orbital * math.sqrt((tj + 1.0) * (tjp + 1.0)) * six_j


def reduced_s_tensor(l: int, j: JLike, kappa: int, jp: JLike,
                     reduced_spin: float, s: JLike = SPIN_HALF) -> float:
    """Reduced element (l s j || T_kappa0 || l s j') for an l-commuting tensor.

    (-1)^(l+s'+j+kappa) (s||T_kappa0||s') sqrt((2j+1)(2j'+1)) {s j l; j' s' kappa}.
    """
    six_j = wigner_6j(s, j, l, jp, s, kappa)
    if six_j == 0.0 or reduced_spin == 0.0:
        return 0.0
    tj, tjp = _twice(j), _twice(jp)
    sign = _phase_from_twice(2 * l + _twice(s) + tj + 2 * kappa)
    return sign * reduced_spin * math.sqrt((tj + 1.0) * (tjp + 1.0)) * six_j


def multipole_angular_element(l: int, j: JLike, mj: JLike, kappa: int, q: JLike,
                              lp: int, jp: JLike, mjp: JLike) -> float:
    """Angular part <l s j mj| sqrt(4 pi/(2 kappa+1)) Y_kappa_q |l' s j' mj'>.

    This is the multipole operator with the radial factor e r^kappa divided
    out; dimensionless, spin s = 1/2 implicit.
    """
    reduced = reduced_l_tensor(l, j, kappa, lp, jp, reduced_Y(l, kappa, lp))
    if reduced == 0.0:
        return 0.0
    scale = math.sqrt(4.0 * math.pi / (2 * kappa + 1))
    return wigner_eckart(j, mj, kappa, q, jp, mjp, scale * reduced)


def momentum_angular_element(operator: str, l: int, j: JLike, mj: JLike, q: JLike,
                             jp: JLike, mjp: JLike) -> float:
    """Matrix element <l s j mj| l_1q or s_1q |l s j' mj'>, in units of hbar.

    ``operator`` selects the orbital ("l") or spin ("s") angular momentum
    component; both are diagonal in l (and in s).
    """
    if operator == "l":
        reduced = reduced_l_tensor(l, j, 1, l, jp, reduced_J(l))
    elif operator == "s":
        reduced = reduced_s_tensor(l, j, 1, jp, reduced_J(SPIN_HALF))
    else:
        raise ValueError(f"unknown momentum operator {operator!r}; use 'l' or 's'")
    if reduced == 0.0:
        return 0.0
    return wigner_eckart(j, mj, 1, q, jp, mjp, reduced)
