import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy

from apps.common.errors import PreconditionError
from apps.substitutions.core import Substitution

logger = logging.getLogger(__name__)

t = sympy.Symbol("t")

PISOT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PisotReport:
    char_poly: tuple[int, ...]
    irreducible: bool
    eigenvalue: float
    conjugates: tuple[float, ...]
    borderline: bool

    @property
    def pisot(self) -> bool:
        return self.eigenvalue > 1 and all(modulus < 1 - PISOT_TOLERANCE for modulus in self.conjugates)

    @property
    def irreducible_pisot(self) -> bool:
        return self.irreducible and self.pisot

    def as_dict(self) -> dict:
        return {
            "char_poly": list(self.char_poly),
            "irreducible": self.irreducible,
            "pisot": self.pisot,
            "irreducible_pisot": self.irreducible_pisot,
            "eigenvalue": self.eigenvalue,
            "conjugates": list(self.conjugates),
            "borderline": self.borderline,
        }


def pisot_check(substitution: Substitution) -> PisotReport:
    """Factors the characteristic polynomial over Q and locates its roots."""
    poly = substitution.incidence.charpoly(t)
    coefficients = tuple(int(coefficient) for coefficient in poly.all_coeffs())
    _, factors = sympy.factor_list(poly.as_expr(), t)
    irreducible = len(factors) == 1 and factors[0][1] == 1

    roots = np.roots(np.array(coefficients, dtype=float))
    moduli = sorted((abs(root) for root in roots), reverse=True)
    dominant = max(roots, key=lambda root: (root.real, -abs(root.imag)))
    conjugates = tuple(float(modulus) for modulus in moduli[1:])
    borderline = any(abs(modulus - 1) <= PISOT_TOLERANCE for modulus in conjugates)

    report = PisotReport(coefficients, irreducible, float(dominant.real), conjugates, borderline)
    logger.debug(f"Characteristic polynomial {poly.as_expr()}: irreducible Pisot {report.irreducible_pisot}")
    return report


def require_pisot(substitution: Substitution) -> PisotReport:
    report = pisot_check(substitution)
    if report.borderline:
        raise PreconditionError("A conjugate of the dominant eigenvalue lies on the unit circle within tolerance")
    if not report.irreducible_pisot:
        raise PreconditionError("The substitution is not irreducible Pisot")
    return report


@dataclass(frozen=True)
class NumberField:
    """Q(λ), with λ the root of `modulus` closest to `value`."""

    modulus: sympy.Poly
    value: float

    def element(self, expression) -> "ExactScalar":
        poly = sympy.Poly(expression, t, domain=sympy.QQ)
        return ExactScalar(self, poly.rem(self.modulus))


@dataclass(frozen=True)
class ExactScalar:
    """A polynomial in λ of degree below the field degree."""

    number_field: NumberField = field(repr=False)
    poly: sympy.Poly

    def _lift(self, other) -> "ExactScalar":
        return other if isinstance(other, ExactScalar) else self.number_field.element(other)

    def __add__(self, other) -> "ExactScalar":
        return ExactScalar(self.number_field, self.poly + self._lift(other).poly)

    __radd__ = __add__

    def __sub__(self, other) -> "ExactScalar":
        return ExactScalar(self.number_field, self.poly - self._lift(other).poly)

    def __rsub__(self, other) -> "ExactScalar":
        return self._lift(other) - self

    def __neg__(self) -> "ExactScalar":
        return ExactScalar(self.number_field, -self.poly)

    def __mul__(self, other) -> "ExactScalar":
        return ExactScalar(self.number_field, (self.poly * self._lift(other).poly).rem(self.number_field.modulus))

    __rmul__ = __mul__

    def inverse(self) -> "ExactScalar":
        if self.is_zero:
            raise ZeroDivisionError("Inverse of zero in Q(λ)")
        return ExactScalar(self.number_field, self.poly.invert(self.number_field.modulus))

    def __truediv__(self, other) -> "ExactScalar":
        return self * self._lift(other).inverse()

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExactScalar):
            other = self.number_field.element(other)
        return (self.poly - other.poly).is_zero

    def __hash__(self) -> int:
        return hash(tuple(self.poly.all_coeffs()))

    @property
    def is_zero(self) -> bool:
        return self.poly.is_zero

    def __float__(self) -> float:
        value = self.number_field.value
        return float(sum(float(coefficient) * value**power for (power,), coefficient in self.poly.terms()))

    def __str__(self) -> str:
        return str(self.poly.as_expr().subs(t, sympy.Symbol("λ")))


RationalVector = tuple[sympy.Rational, ...]


def rational_vector(values) -> RationalVector:
    return tuple(sympy.Rational(value) for value in values)


class EigenData:
    """
    The splitting R^A = R u ⊕ E_c of an irreducible Pisot incidence matrix.

    u and v are columns and rows of the adjugate of M − λ Id, so they are exact over Q(λ); the float basis of E_c
    comes from π_c(e_2), ..., π_c(e_d).
    """

    def __init__(self, substitution: Substitution):
        self.substitution = substitution
        self.report = require_pisot(substitution)
        self.matrix: sympy.Matrix = substitution.incidence
        self.size = substitution.size
        modulus = sympy.Poly(self.matrix.charpoly(t).as_expr(), t, domain=sympy.QQ)
        self.number_field = NumberField(modulus, self.report.eigenvalue)
        adjugate = (self.matrix - t * sympy.eye(self.size)).adjugate()
        self.u = self._exact_line([adjugate[row, column] for row in range(self.size)] for column in range(self.size))
        self.v = self._exact_line([adjugate[row, column] for column in range(self.size)] for row in range(self.size))
        self._pairing = self.dot(self.v, self.u)
        self._periodic_inverses: dict[int, sympy.Matrix] = {}

    def dot(self, left, right) -> ExactScalar:
        return sum((first * second for first, second in zip(left, right, strict=True)), self.number_field.element(0))

    def _exact_line(self, candidates) -> tuple[ExactScalar, ...]:
        for entries in candidates:
            line = tuple(self.number_field.element(sympy.expand(entry)) for entry in entries)
            if not all(entry.is_zero for entry in line):
                if float(line[0]) < 0:
                    line = tuple(-entry for entry in line)
                return line
        raise PreconditionError("The adjugate vanishes at the dominant eigenvalue")

    @cached_property
    def u_float(self) -> np.ndarray:
        return np.array([float(entry) for entry in self.u])

    @cached_property
    def v_float(self) -> np.ndarray:
        return np.array([float(entry) for entry in self.v])

    def project(self, vector: RationalVector) -> tuple[ExactScalar, ...]:
        """π_c(x) = x − (v·x)/(v·u) u over Q(λ)."""
        coefficient = self.dot(self.v, vector) / self._pairing
        return tuple(
            self.number_field.element(value) - coefficient * entry for value, entry in zip(vector, self.u, strict=True)
        )

    def project_float(self, vector) -> np.ndarray:
        vector = np.array([float(value) for value in vector])
        return vector - (self.v_float @ vector) / (self.v_float @ self.u_float) * self.u_float

    @cached_property
    def basis(self) -> np.ndarray:
        """Orthonormal columns spanning E_c."""
        columns = np.column_stack([self.project_float(np.eye(self.size)[index]) for index in range(1, self.size)])
        basis, _ = np.linalg.qr(columns)
        return basis

    @cached_property
    def plane(self) -> np.ndarray:
        """
        A 2 × d map onto the plane, vanishing on u, with a fixed orientation.

        With three letters its rows come from the left eigenvector of the conjugate with positive imaginary part, so M
        acts as a direct similarity; two real conjugates give one row each, larger root first. Otherwise the rows are
        the orthonormal basis composed with π_c.
        """
        if self.size != 3:
            projection = np.eye(self.size) - np.outer(self.u_float, self.v_float) / (self.v_float @ self.u_float)
            return self.basis.T @ projection
        values, vectors = np.linalg.eig(np.array(self.matrix.tolist(), dtype=float).T)
        dominant = int(np.argmin(abs(values - self.report.eigenvalue)))
        others = [index for index in range(3) if index != dominant]
        if all(abs(values[index].imag) > PISOT_TOLERANCE for index in others):
            index = next(index for index in others if values[index].imag > 0)
            row = vectors[:, index] / np.linalg.norm(vectors[:, index])
            return np.vstack([row.real, row.imag])
        rows = []
        for index in sorted(others, key=lambda index: -values[index].real):
            row = vectors[:, index].real
            row = row / row[np.argmax(abs(row))]
            rows.append(row / np.linalg.norm(row))
        return np.vstack(rows)

    def coordinates(self, vector) -> np.ndarray:
        return self.plane @ np.array([float(value) for value in vector])

    def periodic_inverse(self, period: int) -> sympy.Matrix:
        """(Id − M^n)^-1, cached per period."""
        if period not in self._periodic_inverses:
            self._periodic_inverses[period] = (sympy.eye(self.size) - self.matrix**period).inv()
        return self._periodic_inverses[period]


def eigen_data(substitution: Substitution) -> EigenData:
    return EigenData(substitution)
