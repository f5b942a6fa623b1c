"""
exact_arithmetic.py
Exact Arithmetic
Elements of Z[1/m], 2x2 matrices over Z[1/m] and over Z/rZ, and the Euclidean
structure of Z[1/m] used by the decomposition service
"""

from fractions import Fraction
from math import gcd
from typing import Dict, List, Optional, Tuple, Union
import logging

import pyparsing as pp

logger = logging.getLogger(__name__)


class MatrixSyntaxError(ValueError):
    """Malformed matrix text"""

    def __init__(self, message: str, column: Optional[int] = None):
        self.column = column
        where = f" (column {column})" if column is not None else ""
        super().__init__(f"{message}{where}")


class NotUnimodularError(ValueError):
    """Matrix does not have determinant 1"""


def _check_m(m: int) -> int:
    if not isinstance(m, int) or m < 1:
        raise ValueError(f"ambient m must be a positive integer, got {m!r}")
    return m


def split_m_part(n: int, m: int) -> Tuple[int, int]:
    """
    Split a nonzero integer n as n = core * g where core > 0 shares no factor
    with m and g is +/- a product of primes dividing m.

    Uses repeated gcd stripping, so m is never factored.
    """
    if n == 0:
        raise ValueError("cannot split zero")
    core = abs(n)
    g = gcd(core, m)
    while g > 1:
        core //= g
        g = gcd(core, m)
    return core, n // core


class MFraction:
    """An element numerator / m**exponent of Z[1/m] in canonical form"""

    __slots__ = ("numerator", "exponent", "m")

    def __init__(self, numerator: int, exponent: int = 0, m: int = 1):
        _check_m(m)
        if exponent < 0:
            raise ValueError(f"exponent must be non-negative, got {exponent}")
        if numerator == 0 or m == 1:
            exponent = 0
        else:
            while exponent > 0 and numerator % m == 0:
                numerator //= m
                exponent -= 1
        self.numerator = numerator
        self.exponent = exponent
        self.m = m

    # Construction helpers

    @classmethod
    def from_int(cls, value: int, m: int) -> "MFraction":
        return cls(value, 0, m)

    @classmethod
    def from_fraction(cls, value: Fraction, m: int) -> "MFraction":
        """Convert a rational number whose denominator divides some power of m"""
        _check_m(m)
        den = value.denominator
        k = 0
        power = 1
        while power % den != 0:
            if m == 1 or k > den.bit_length():
                raise ValueError(f"denominator {den} does not divide any power of m={m}")
            power *= m
            k += 1
        return cls(value.numerator * (power // den), k, m)

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.m ** self.exponent)

    # Ring structure

    def _coerce(self, other) -> "MFraction":
        if isinstance(other, MFraction):
            if other.m != self.m:
                raise ValueError(f"ambient mismatch: m={self.m} vs m={other.m}")
            return other
        if isinstance(other, int):
            return MFraction(other, 0, self.m)
        return NotImplemented

    def __add__(self, other) -> "MFraction":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        k = max(self.exponent, other.exponent)
        num = (self.numerator * self.m ** (k - self.exponent)
               + other.numerator * self.m ** (k - other.exponent))
        return MFraction(num, k, self.m)

    __radd__ = __add__

    def __neg__(self) -> "MFraction":
        return MFraction(-self.numerator, self.exponent, self.m)

    def __sub__(self, other) -> "MFraction":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "MFraction":
        return (-self) + other

    def __mul__(self, other) -> "MFraction":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return MFraction(self.numerator * other.numerator,
                         self.exponent + other.exponent, self.m)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            return self.exponent == 0 and self.numerator == other
        if not isinstance(other, MFraction):
            return NotImplemented
        return (self.m == other.m and self.numerator == other.numerator
                and self.exponent == other.exponent)

    def __hash__(self) -> int:
        if self.exponent == 0:
            return hash(self.numerator)
        return hash((self.numerator, self.exponent, self.m))

    def __bool__(self) -> bool:
        return self.numerator != 0

    def is_unit(self) -> bool:
        return self.numerator != 0 and euclidean_norm(self) == 1

    def inverse_unit(self) -> "MFraction":
        """Inverse of a unit of Z[1/m]"""
        if not self.is_unit():
            raise ValueError(f"{self} is not a unit of Z[1/{self.m}]")
        n = abs(self.numerator)
        sign = 1 if self.numerator > 0 else -1
        j = 0
        power = 1
        while power % n != 0:
            power *= self.m
            j += 1
        return MFraction(sign * (self.m ** self.exponent) * (power // n), j, self.m)

    def __str__(self) -> str:
        if self.exponent == 0:
            return str(self.numerator)
        return f"{self.numerator}/{self.m ** self.exponent}"

    def __repr__(self) -> str:
        return f"MFraction({self.numerator}, {self.exponent}, m={self.m})"


Scalar = Union[MFraction, int]


def mf_canonicalize(numerator: int, exponent: int, m: int) -> MFraction:
    """Canonical form of numerator / m**exponent"""
    return MFraction(numerator, exponent, m)


def euclidean_norm(x: MFraction) -> int:
    """|numerator| with every factor shared with m stripped"""
    if x.numerator == 0:
        raise ValueError("the Euclidean norm is undefined at zero")
    return split_m_part(x.numerator, x.m)[0]


def euclidean_divmod(alpha: MFraction, beta: MFraction) -> Tuple[MFraction, MFraction]:
    """
    Division with remainder in Z[1/m]

    Returns (q, rho) with alpha = q*beta + rho and rho == 0 or
    euclidean_norm(rho) < euclidean_norm(beta).
    """
    if beta.m != alpha.m:
        raise ValueError(f"ambient mismatch: m={alpha.m} vs m={beta.m}")
    if beta.numerator == 0:
        raise ZeroDivisionError("euclidean_divmod by zero")
    m = alpha.m
    if alpha.numerator == 0:
        zero = MFraction(0, 0, m)
        return zero, zero

    # Scale both to integers over a common power of m
    k = max(alpha.exponent, beta.exponent)
    a = alpha.numerator * m ** (k - alpha.exponent)
    b = beta.numerator * m ** (k - beta.exponent)

    core, unit_part = split_m_part(b, m)
    q0, r0 = divmod(a, core)

    unit_inverse = MFraction(unit_part, 0, m).inverse_unit()
    q = MFraction(q0, 0, m) * unit_inverse
    rho = MFraction(r0, k, m)
    return q, rho


class Mat2M:
    """2x2 matrix (a, b; c, d) over Z[1/m]"""

    __slots__ = ("a", "b", "c", "d", "m")

    def __init__(self, a: Scalar, b: Scalar, c: Scalar, d: Scalar, m: int):
        _check_m(m)
        entries = []
        for value in (a, b, c, d):
            if isinstance(value, int):
                value = MFraction(value, 0, m)
            elif value.m != m:
                raise ValueError(f"entry {value!r} does not live in Z[1/{m}]")
            entries.append(value)
        self.a, self.b, self.c, self.d = entries
        self.m = m

    @classmethod
    def identity(cls, m: int) -> "Mat2M":
        return cls(1, 0, 0, 1, m)

    def entries(self) -> Tuple[MFraction, MFraction, MFraction, MFraction]:
        return self.a, self.b, self.c, self.d

    def det(self) -> MFraction:
        return self.a * self.d - self.b * self.c

    def trace(self) -> MFraction:
        return self.a + self.d

    def is_unimodular(self) -> bool:
        return self.det() == 1

    def is_identity(self) -> bool:
        return self.a == 1 and self.b == 0 and self.c == 0 and self.d == 1

    def __mul__(self, other: "Mat2M") -> "Mat2M":
        if not isinstance(other, Mat2M):
            return NotImplemented
        if other.m != self.m:
            raise ValueError(f"ambient mismatch: m={self.m} vs m={other.m}")
        return Mat2M(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
            self.m,
        )

    def inverse(self) -> "Mat2M":
        if not self.is_unimodular():
            raise NotUnimodularError(f"determinant of {self} is {self.det()}, not 1")
        return Mat2M(self.d, -self.b, -self.c, self.a, self.m)

    def __pow__(self, e: int) -> "Mat2M":
        base = self if e >= 0 else self.inverse()
        e = abs(e)
        result = Mat2M.identity(self.m)
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def order_if_finite(self, limit: int = 12) -> Optional[int]:
        """Smallest n <= limit with M**n = I, or None"""
        power = self
        for n in range(1, limit + 1):
            if power.is_identity():
                return n
            power = power * self
        return None

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mat2M):
            return NotImplemented
        return self.m == other.m and self.entries() == other.entries()

    def __hash__(self) -> int:
        return hash((self.entries(), self.m))

    def __str__(self) -> str:
        return format_matrix(self)

    def __repr__(self) -> str:
        return f"Mat2M({format_matrix(self)}, m={self.m})"


def mat2_mul(left: Mat2M, right: Mat2M) -> Mat2M:
    return left * right


def mat2_inv(matrix: Mat2M) -> Mat2M:
    return matrix.inverse()


def mat2_pow(matrix: Mat2M, e: int) -> Mat2M:
    return matrix ** e


# Named matrices of SL_2(Z[1/m])

def matrix_a(m: int) -> Mat2M:
    """A = (1, 0; 1, 1), the image of x"""
    return Mat2M(1, 0, 1, 1, m)


def matrix_q(m: int) -> Mat2M:
    """Q_m = (1, -1/m; 0, 1), the image of y"""
    return Mat2M(1, MFraction(-1, 1, m), 0, 1, m)


def matrix_b(m: int) -> Mat2M:
    """B = (0, 1; -1, 0)"""
    return Mat2M(0, 1, -1, 0, m)


def matrix_u(m: int) -> Mat2M:
    """U_m = (m, 0; 0, 1/m)"""
    return Mat2M(m, 0, 0, MFraction(1, 1, m), m)


def elementary_lower(t: MFraction) -> Mat2M:
    """E21(t) = (1, 0; t, 1)"""
    return Mat2M(1, 0, t, 1, t.m)


def elementary_upper(t: MFraction) -> Mat2M:
    """E12(t) = (1, t; 0, 1)"""
    return Mat2M(1, t, 0, 1, t.m)


class ResidueMat2:
    """2x2 matrix over Z/rZ with entries reduced to [0, r)"""

    __slots__ = ("a", "b", "c", "d", "r")

    def __init__(self, a: int, b: int, c: int, d: int, r: int):
        if r < 2:
            raise ValueError(f"modulus must be at least 2, got {r}")
        self.a, self.b, self.c, self.d = a % r, b % r, c % r, d % r
        self.r = r

    @classmethod
    def identity(cls, r: int) -> "ResidueMat2":
        return cls(1, 0, 0, 1, r)

    def entries(self) -> Tuple[int, int, int, int]:
        return self.a, self.b, self.c, self.d

    def det(self) -> int:
        return (self.a * self.d - self.b * self.c) % self.r

    def is_identity(self) -> bool:
        return self.entries() == (1, 0, 0, 1)

    def __mul__(self, other: "ResidueMat2") -> "ResidueMat2":
        if not isinstance(other, ResidueMat2):
            return NotImplemented
        if other.r != self.r:
            raise ValueError(f"modulus mismatch: r={self.r} vs r={other.r}")
        return ResidueMat2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
            self.r,
        )

    def inverse(self) -> "ResidueMat2":
        det = self.det()
        if gcd(det, self.r) != 1:
            raise NotUnimodularError(f"{self} is not invertible mod {self.r}")
        inv = pow(det, -1, self.r)
        return ResidueMat2(inv * self.d, -inv * self.b, -inv * self.c, inv * self.a, self.r)

    def __pow__(self, e: int) -> "ResidueMat2":
        base = self if e >= 0 else self.inverse()
        e = abs(e)
        result = ResidueMat2.identity(self.r)
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def encode(self) -> int:
        r = self.r
        return ((self.a * r + self.b) * r + self.c) * r + self.d

    @classmethod
    def decode(cls, code: int, r: int) -> "ResidueMat2":
        code, d = divmod(code, r)
        code, c = divmod(code, r)
        a, b = divmod(code, r)
        return cls(a, b, c, d, r)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ResidueMat2):
            return NotImplemented
        return self.r == other.r and self.entries() == other.entries()

    def __hash__(self) -> int:
        return hash((self.entries(), self.r))

    def __repr__(self) -> str:
        return f"ResidueMat2([[{self.a}, {self.b}], [{self.c}, {self.d}]], r={self.r})"


def reduce_mod_r(matrix: Mat2M, r: int) -> ResidueMat2:
    """Image of a matrix over Z[1/m] in the quotient ring Z/rZ"""
    if r < 2:
        raise ValueError(f"modulus must be at least 2, got {r}")
    m = matrix.m
    if gcd(r, m) != 1:
        raise ValueError(f"m={m} is not invertible mod r={r}")
    m_inverse = pow(m, -1, r)

    def reduce(x: MFraction) -> int:
        return x.numerator * pow(m_inverse, x.exponent, r)

    return ResidueMat2(*(reduce(x) for x in matrix.entries()), r)


# ============================================================================
# MATRIX TEXT FORMAT
# ============================================================================

_integer = pp.Regex(r"[+-]?\d+")
_entry = pp.Combine(_integer + pp.Optional("/" + pp.Regex(r"\d+")))
_row = pp.Suppress("[") + _entry + pp.Suppress(",") + _entry + pp.Suppress("]")
_matrix = (pp.Suppress("[") + pp.Group(_row) + pp.Suppress(",") + pp.Group(_row)
           + pp.Suppress("]") + pp.StringEnd())


def parse_entry(text: str, m: int) -> MFraction:
    """Parse an `int` or `int/int` entry, checking the denominator divides a power of m"""
    text = text.strip()
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise MatrixSyntaxError(f"malformed entry {text!r}: {e}")
    try:
        return MFraction.from_fraction(value, m)
    except ValueError as e:
        raise MatrixSyntaxError(f"entry {text!r} is not in Z[1/{m}]: {e}")


def parse_matrix(text: str, m: int) -> Mat2M:
    """Parse `[[p, q], [r, s]]` into a matrix over Z[1/m]"""
    _check_m(m)
    try:
        parsed = _matrix.parse_string(text)
    except pp.ParseException as e:
        raise MatrixSyntaxError(f"malformed matrix {text!r}", column=e.col)
    (p, q), (r, s) = parsed
    return Mat2M(*(parse_entry(x, m) for x in (p, q, r, s)), m)


def format_matrix(matrix: Mat2M) -> str:
    a, b, c, d = (str(x) for x in matrix.entries())
    return f"[[{a}, {b}], [{c}, {d}]]"


def matrix_to_json(matrix: Mat2M) -> Dict:
    """JSON form with string-encoded big integers"""
    a, b, c, d = (str(x) for x in matrix.entries())
    return {"m": str(matrix.m), "rows": [[a, b], [c, d]]}


def matrix_from_json(data: Dict) -> Mat2M:
    try:
        m = int(data["m"])
        rows: List[List[str]] = data["rows"]
        (a, b), (c, d) = rows
    except (KeyError, TypeError, ValueError) as e:
        raise MatrixSyntaxError(f"malformed matrix JSON: {e}")
    return Mat2M(*(parse_entry(str(x), m) for x in (a, b, c, d)), m)
