"""Homogeneous barycentric-monomial polynomials on a single simplex"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Dict, Iterator, Sequence, Tuple, Union

import numpy as np

from src.errors import DegreeMismatch, SimplexMismatch

Exponent = Tuple[int, ...]
Scalar = Union[int, float, Fraction]


@lru_cache(maxsize=None)
def exponents(n_vars: int, degree: int) -> Tuple[Exponent, ...]:
    """Exponent tuples of total degree ``degree`` in descending lexicographic order"""
    if degree < 0:
        return ()
    if n_vars == 1:
        return ((degree,),)
    out = []
    for first in range(degree, -1, -1):
        for rest in exponents(n_vars - 1, degree - first):
            out.append((first,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def exponent_index(n_vars: int, degree: int) -> Dict[Exponent, int]:
    return {alpha: i for i, alpha in enumerate(exponents(n_vars, degree))}


@lru_cache(maxsize=None)
def exponent_array(n_vars: int, degree: int) -> np.ndarray:
    return np.array(exponents(n_vars, degree), dtype=int).reshape(-1, n_vars)


@lru_cache(maxsize=None)
def _elevation_map(n_vars: int, degree: int) -> np.ndarray:
    """Index of alpha + e_j among degree+1 exponents, shape (N, n_vars)"""
    target = exponent_index(n_vars, degree + 1)
    table = np.empty((len(exponents(n_vars, degree)), n_vars), dtype=int)
    for a, alpha in enumerate(exponents(n_vars, degree)):
        for j in range(n_vars):
            bumped = list(alpha)
            bumped[j] += 1
            table[a, j] = target[tuple(bumped)]
    return table


@lru_cache(maxsize=None)
def _product_map(n_vars: int, deg_a: int, deg_b: int) -> np.ndarray:
    """Index of alpha + beta among deg_a+deg_b exponents, shape (Na, Nb)"""
    target = exponent_index(n_vars, deg_a + deg_b)
    ea, eb = exponents(n_vars, deg_a), exponents(n_vars, deg_b)
    return np.array(
        [[target[tuple(x + y for x, y in zip(a, b))] for b in eb] for a in ea], dtype=int
    ).reshape(len(ea), len(eb))


@lru_cache(maxsize=None)
def _derivative_map(n_vars: int, degree: int) -> Tuple[Tuple[np.ndarray, np.ndarray, np.ndarray], ...]:
    """Per variable j: (source rows, target rows, factors alpha_j) of d/d(lambda_j)"""
    target = exponent_index(n_vars, degree - 1)
    maps = []
    for j in range(n_vars):
        src, dst, fac = [], [], []
        for a, alpha in enumerate(exponents(n_vars, degree)):
            if alpha[j] > 0:
                lowered = list(alpha)
                lowered[j] -= 1
                src.append(a)
                dst.append(target[tuple(lowered)])
                fac.append(alpha[j])
        maps.append((np.array(src, dtype=int), np.array(dst, dtype=int), np.array(fac, dtype=int)))
    return tuple(maps)


@lru_cache(maxsize=None)
def _integral_weights(n_vars: int, degree: int, exact: bool) -> np.ndarray:
    """Mean of lambda^alpha over a simplex: d! alpha! / (|alpha| + d)!"""
    d = n_vars - 1
    values = []
    for alpha in exponents(n_vars, degree):
        numerator = factorial(d)
        for a in alpha:
            numerator *= factorial(a)
        values.append(Fraction(numerator, factorial(degree + d)))
    if exact:
        return np.array(values, dtype=object)
    return np.array([float(v) for v in values])


def monomial_values(n_vars: int, degree: int, points: np.ndarray) -> np.ndarray:
    """Values of all degree-``degree`` monomials at barycentric points, shape (npts, N)"""
    points = np.asarray(points, dtype=float).reshape(-1, n_vars)
    powers = exponent_array(n_vars, degree)
    if powers.shape[0] == 0:
        return np.zeros((points.shape[0], 0))
    return np.prod(points[:, None, :] ** powers[None, :, :], axis=2)


def monomial_derivative_values(n_vars: int, degree: int, points: np.ndarray) -> np.ndarray:
    """d(lambda^alpha)/d(lambda_j) at points, shape (n_vars, npts, N)"""
    points = np.asarray(points, dtype=float).reshape(-1, n_vars)
    n_terms = len(exponents(n_vars, degree))
    out = np.zeros((n_vars, points.shape[0], n_terms))
    if degree == 0:
        return out
    lower = monomial_values(n_vars, degree - 1, points)
    for j, (src, dst, fac) in enumerate(_derivative_map(n_vars, degree)):
        out[j][:, src] = lower[:, dst] * fac
    return out


def to_exact(values: Union[np.ndarray, Sequence, Scalar]) -> np.ndarray:
    """Object array of Fractions holding the exact binary value of every entry"""
    array = np.asarray(values)
    if array.dtype == object:
        return np.vectorize(Fraction, otypes=[object])(array) if array.size else array
    flat = [Fraction(float(x)) if not isinstance(x, (int, np.integer)) else Fraction(int(x)) for x in array.ravel()]
    return np.array(flat, dtype=object).reshape(array.shape)


def is_exact(array: np.ndarray) -> bool:
    return np.asarray(array).dtype == object


def _zeros(shape: Tuple[int, ...], exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape)


@dataclass(eq=False)
class BaryPoly:
    """
    Polynomial on one simplex as homogeneous barycentric monomials

    ``coeffs[a, c]`` is the coefficient of ``exponents(n_vars, degree)[a]`` in
    component c. Float arrays give double precision; object arrays of
    Fractions give exact arithmetic.
    """

    n_vars: int
    degree: int
    coeffs: np.ndarray

    # numpy scalars on the left defer to __rmul__
    __array_ufunc__ = None

    def __post_init__(self):
        expected = len(exponents(self.n_vars, self.degree))
        if self.coeffs.ndim == 1:
            self.coeffs = self.coeffs.reshape(-1, 1)
        if self.coeffs.shape[0] != expected:
            raise DegreeMismatch(
                f"{self.coeffs.shape[0]} coefficients given for degree {self.degree}, "
                f"expected {expected}"
            )

    @property
    def ncomp(self) -> int:
        return int(self.coeffs.shape[1])

    @property
    def exact(self) -> bool:
        return self.coeffs.dtype == object

    @classmethod
    def zeros(cls, n_vars: int, degree: int, ncomp: int = 1, exact: bool = False) -> "BaryPoly":
        return cls(n_vars, degree, _zeros((len(exponents(n_vars, degree)), ncomp), exact))

    @classmethod
    def constant(cls, n_vars: int, value, exact: bool = False) -> "BaryPoly":
        row = np.atleast_1d(np.asarray(value, dtype=object if exact else float))
        if exact:
            row = to_exact(row)
        return cls(n_vars, 0, row.reshape(1, -1))

    @classmethod
    def monomial(cls, n_vars: int, alpha: Exponent, coeff=1.0, exact: bool = False) -> "BaryPoly":
        degree = sum(alpha)
        row = np.atleast_1d(np.asarray(coeff, dtype=object if exact else float))
        if exact:
            row = to_exact(row)
        poly = cls.zeros(n_vars, degree, row.shape[0], exact)
        poly.coeffs[exponent_index(n_vars, degree)[tuple(alpha)]] = row
        return poly

    @classmethod
    def coordinate(cls, n_vars: int, j: int, exact: bool = False) -> "BaryPoly":
        alpha = tuple(1 if i == j else 0 for i in range(n_vars))
        return cls.monomial(n_vars, alpha, 1, exact)

    def copy(self) -> "BaryPoly":
        return BaryPoly(self.n_vars, self.degree, self.coeffs.copy())

    def coefficient(self, alpha: Exponent) -> np.ndarray:
        return self.coeffs[exponent_index(self.n_vars, self.degree)[tuple(alpha)]]

    def terms(self) -> Iterator[Tuple[Exponent, np.ndarray]]:
        """Nonzero (exponent, coefficient row) pairs"""
        for alpha, row in zip(exponents(self.n_vars, self.degree), self.coeffs):
            if any(x != 0 for x in row):
                yield alpha, row

    def to_exact(self) -> "BaryPoly":
        return self if self.exact else BaryPoly(self.n_vars, self.degree, to_exact(self.coeffs))

    def to_float(self) -> "BaryPoly":
        if not self.exact:
            return self
        return BaryPoly(self.n_vars, self.degree, self.coeffs.astype(float))

    def max_abs(self) -> float:
        if self.coeffs.size == 0:
            return 0.0
        return float(np.max(np.abs(self.coeffs.astype(float))))

    def elevate(self, degree: int) -> "BaryPoly":
        """Same polynomial written with degree ``degree`` (multiplied by powers of sum lambda)"""
        if degree < self.degree:
            raise DegreeMismatch(f"cannot lower degree {self.degree} to {degree}")
        coeffs, current = self.coeffs, self.degree
        while current < degree:
            table = _elevation_map(self.n_vars, current)
            out = _zeros((len(exponents(self.n_vars, current + 1)), coeffs.shape[1]), self.exact)
            for j in range(self.n_vars):
                np.add.at(out, table[:, j], coeffs)
            coeffs, current = out, current + 1
        return BaryPoly(self.n_vars, degree, coeffs)

    def _align(self, other: "BaryPoly") -> Tuple["BaryPoly", "BaryPoly"]:
        if other.n_vars != self.n_vars:
            raise SimplexMismatch(f"{self.n_vars} vs {other.n_vars} barycentric variables")
        degree = max(self.degree, other.degree)
        return self.elevate(degree), other.elevate(degree)

    def __add__(self, other: "BaryPoly") -> "BaryPoly":
        a, b = self._align(other)
        if a.ncomp != b.ncomp:
            raise DegreeMismatch(f"component mismatch {a.ncomp} vs {b.ncomp}")
        return BaryPoly(a.n_vars, a.degree, a.coeffs + b.coeffs)

    def __sub__(self, other: "BaryPoly") -> "BaryPoly":
        return self + (-other)

    def __neg__(self) -> "BaryPoly":
        return BaryPoly(self.n_vars, self.degree, -self.coeffs)

    def __mul__(self, other) -> "BaryPoly":
        if isinstance(other, BaryPoly):
            return self.mul(other)
        return BaryPoly(self.n_vars, self.degree, self.coeffs * other)

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "BaryPoly":
        result = BaryPoly.constant(self.n_vars, np.ones(self.ncomp), self.exact)
        for _ in range(power):
            result = result.mul(self)
        return result

    def mul(self, other: "BaryPoly") -> "BaryPoly":
        """
        Product of two polynomials on the same simplex

        A scalar factor broadcasts over the components of the other factor;
        otherwise the product is componentwise.
        """
        if other.n_vars != self.n_vars:
            raise SimplexMismatch(f"{self.n_vars} vs {other.n_vars} barycentric variables")
        ca, cb = self.ncomp, other.ncomp
        if ca != cb and ca != 1 and cb != 1:
            raise DegreeMismatch(f"cannot multiply {ca} by {cb} components")
        ncomp = max(ca, cb)
        degree = self.degree + other.degree
        table = _product_map(self.n_vars, self.degree, other.degree)
        products = self.coeffs[:, None, :] * other.coeffs[None, :, :]
        out = _zeros((len(exponents(self.n_vars, degree)), ncomp), self.exact or other.exact)
        np.add.at(out, table.ravel(), products.reshape(-1, ncomp))
        return BaryPoly(self.n_vars, degree, out)

    def outer(self, vector) -> "BaryPoly":
        """Scalar polynomial times a constant vector"""
        vec = np.asarray(vector, dtype=object if self.exact else float).reshape(1, -1)
        return BaryPoly(self.n_vars, self.degree, self.coeffs[:, :1] * vec)

    def dot(self, vector) -> "BaryPoly":
        """Contract the components with a constant vector"""
        vec = np.asarray(vector, dtype=object if self.exact else float).reshape(-1, 1)
        return BaryPoly(self.n_vars, self.degree, self.coeffs.dot(vec))

    def component(self, c: int) -> "BaryPoly":
        return BaryPoly(self.n_vars, self.degree, self.coeffs[:, c : c + 1].copy())

    @staticmethod
    def stack(polys: Sequence["BaryPoly"]) -> "BaryPoly":
        """Concatenate components after bringing all parts to a common degree"""
        degree = max(p.degree for p in polys)
        lifted = [p.elevate(degree) for p in polys]
        return BaryPoly(polys[0].n_vars, degree, np.hstack([p.coeffs for p in lifted]))

    def derivative(self, j: int) -> "BaryPoly":
        """Partial derivative with respect to lambda_j (variables treated as independent)"""
        if self.degree == 0:
            return BaryPoly.zeros(self.n_vars, 0, self.ncomp, self.exact)
        src, dst, fac = _derivative_map(self.n_vars, self.degree)[j]
        out = _zeros((len(exponents(self.n_vars, self.degree - 1)), self.ncomp), self.exact)
        if src.size:
            out[dst] = self.coeffs[src] * fac.reshape(-1, 1)
        return BaryPoly(self.n_vars, self.degree - 1, out)

    def gradient(self, grads: np.ndarray) -> "BaryPoly":
        """
        Cartesian gradient sum_j d/d(lambda_j) p * grad(lambda_j)

        Args:
            grads: Gradients of the barycentric coordinates, shape (n_vars, dim)

        Returns:
            Polynomial with ncomp * dim components ordered component-major
        """
        dim = grads.shape[1]
        degree = max(self.degree - 1, 0)
        out = _zeros((len(exponents(self.n_vars, degree)), self.ncomp, dim), self.exact or is_exact(grads))
        for j in range(self.n_vars):
            part = self.derivative(j).coeffs
            out = out + part[:, :, None] * grads[j][None, None, :]
        return BaryPoly(self.n_vars, degree, out.reshape(out.shape[0], self.ncomp * dim))

    def divergence(self, grads: np.ndarray) -> "BaryPoly":
        """Divergence of a field with ncomp == dim"""
        dim = grads.shape[1]
        if self.ncomp != dim:
            raise DegreeMismatch(f"divergence needs {dim} components, got {self.ncomp}")
        degree = max(self.degree - 1, 0)
        out = _zeros((len(exponents(self.n_vars, degree)), 1), self.exact or is_exact(grads))
        for j in range(self.n_vars):
            out = out + self.derivative(j).coeffs.dot(grads[j].reshape(-1, 1))
        return BaryPoly(self.n_vars, degree, out)

    def compose(self, forms: np.ndarray) -> "BaryPoly":
        """
        Substitute lambda_j = sum_i forms[j, i] nu_i

        Args:
            forms: Linear forms, shape (n_vars, n_new)

        Returns:
            The same function in the variables nu (same degree)
        """
        n_new = forms.shape[1]
        exact = self.exact or is_exact(forms)
        linear = []
        for j in range(self.n_vars):
            row = forms[j]
            linear.append(BaryPoly(n_new, 1, (to_exact(row) if exact else np.asarray(row, dtype=float)).reshape(-1, 1)))
        one = BaryPoly.constant(n_new, 1, exact)
        powers = [[one] for _ in range(self.n_vars)]
        for j in range(self.n_vars):
            for _ in range(self.degree):
                powers[j].append(powers[j][-1].mul(linear[j]))

        out = _zeros((len(exponents(n_new, self.degree)), self.ncomp), exact)
        partial: Dict[Exponent, BaryPoly] = {(): one}
        for alpha, row in self.terms():
            for length in range(1, self.n_vars + 1):
                prefix = alpha[:length]
                if prefix not in partial:
                    partial[prefix] = partial[prefix[:-1]].mul(powers[length - 1][prefix[-1]])
            monomial = partial[alpha]
            out = out + monomial.coeffs[:, :1] * np.asarray(row).reshape(1, -1)
        return BaryPoly(n_new, self.degree, out)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values at barycentric points (npts, n_vars), shape (npts, ncomp)"""
        table = monomial_values(self.n_vars, self.degree, points)
        return table @ self.coeffs.astype(float)

    def integrate(self, volume: Scalar) -> np.ndarray:
        """Integral over a simplex of the given volume, per component"""
        weights = _integral_weights(self.n_vars, self.degree, self.exact)
        return volume * weights.dot(self.coeffs)
