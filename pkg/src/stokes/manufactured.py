"""Manufactured Stokes solutions built symbolically with sympy"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Sequence, Tuple

import numpy as np
import sympy
import structlog

from src.errors import DimensionMismatch, UnsupportedKind

logger = structlog.get_logger()

CASE_NAMES = ("zero", "stream", "stream-shifted")


def _vectorize(function: Callable, shape: Tuple[int, ...]) -> Callable[[np.ndarray], np.ndarray]:
    """Wrap a lambdified expression so constant entries broadcast over the point axis"""

    def evaluate(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = points.shape[0]
        raw = function(*points.T)
        out = np.empty((n,) + shape)
        for index in np.ndindex(*shape):
            value = raw
            for i in index:
                value = value[i]
            out[(slice(None),) + index] = np.broadcast_to(np.asarray(value, dtype=float), (n,))
        return out

    return evaluate


@dataclass
class ManufacturedCase:
    """
    Exact divergence-free velocity and zero-mean pressure on [0, 1]^d (up to translation)

    The forcing is f = -Laplace(u) + grad(p).
    """

    name: str
    d: int
    symbols: Tuple[sympy.Symbol, ...]
    velocity_expr: sympy.Matrix
    pressure_expr: sympy.Expr
    origin: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not self.origin:
            self.origin = (0.0,) * self.d
        if self.velocity_expr.shape != (self.d, 1):
            raise DimensionMismatch(f"velocity of case {self.name} must have {self.d} components")

    @property
    def forcing_expr(self) -> sympy.Matrix:
        x = self.symbols
        laplace = sympy.Matrix(
            [sum(sympy.diff(self.velocity_expr[c], xi, 2) for xi in x) for c in range(self.d)]
        )
        grad_p = sympy.Matrix([sympy.diff(self.pressure_expr, xi) for xi in x])
        return (-laplace + grad_p).applyfunc(sympy.expand)

    @property
    def gradient_expr(self) -> sympy.Matrix:
        """Jacobian with rows = components, columns = derivative directions"""
        return self.velocity_expr.jacobian(sympy.Matrix(self.symbols))

    @property
    def divergence_expr(self) -> sympy.Expr:
        return sympy.expand(sum(sympy.diff(self.velocity_expr[c], self.symbols[c]) for c in range(self.d)))

    @cached_property
    def _functions(self) -> Dict[str, Callable[[np.ndarray], np.ndarray]]:
        x = self.symbols
        return {
            "velocity": _vectorize(sympy.lambdify(x, list(self.velocity_expr), "numpy"), (self.d,)),
            "gradient": _vectorize(sympy.lambdify(x, self.gradient_expr.tolist(), "numpy"), (self.d, self.d)),
            "pressure": _vectorize(sympy.lambdify(x, self.pressure_expr, "numpy"), ()),
            "forcing": _vectorize(sympy.lambdify(x, list(self.forcing_expr), "numpy"), (self.d,)),
        }

    def velocity(self, points: np.ndarray) -> np.ndarray:
        return self._functions["velocity"](points)

    def velocity_gradient(self, points: np.ndarray) -> np.ndarray:
        return self._functions["gradient"](points)

    def pressure(self, points: np.ndarray) -> np.ndarray:
        return self._functions["pressure"](points)

    def forcing(self, points: np.ndarray) -> np.ndarray:
        return self._functions["forcing"](points)

    def translated(self, shift: Sequence[float]) -> "ManufacturedCase":
        """The same case on the domain moved by ``shift``"""
        shift = [sympy.nsimplify(s) for s in shift]
        if len(shift) != self.d:
            raise DimensionMismatch(f"shift has {len(shift)} entries, case is {self.d}-dimensional")
        substitution = {xi: xi - s for xi, s in zip(self.symbols, shift)}
        return ManufacturedCase(
            name=self.name,
            d=self.d,
            symbols=self.symbols,
            velocity_expr=self.velocity_expr.subs(substitution),
            pressure_expr=self.pressure_expr.subs(substitution),
            origin=tuple(float(o + s) for o, s in zip(self.origin, shift)),
        )

    def with_pressure_shift(self, amount: float) -> "ManufacturedCase":
        """Add ``amount * (x - origin_x - 1/2)`` to the pressure (still zero mean)"""
        x0 = self.symbols[0]
        extra = sympy.nsimplify(amount) * (x0 - sympy.nsimplify(self.origin[0]) - sympy.Rational(1, 2))
        return ManufacturedCase(
            name=f"{self.name}+dp",
            d=self.d,
            symbols=self.symbols,
            velocity_expr=self.velocity_expr,
            pressure_expr=self.pressure_expr + extra,
            origin=self.origin,
        )

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "d": self.d,
            "velocity": [str(e) for e in self.velocity_expr],
            "pressure": str(self.pressure_expr),
        }


def _symbols(d: int) -> Tuple[sympy.Symbol, ...]:
    return sympy.symbols(" ".join(["x", "y", "z"][:d]) if d <= 3 else f"x0:{d}", real=True)


def stream_case(d: int) -> ManufacturedCase:
    """
    u = curl of a bubble potential with double roots on the boundary of the unit box,
    p = x - 1/2
    """
    if d not in (2, 3):
        raise DimensionMismatch(f"stream case exists for d = 2, 3, got {d}")
    x = _symbols(d)
    psi = sympy.Integer(1)
    for xi in x:
        psi *= xi**2 * (1 - xi) ** 2
    # u = (dpsi/dy, -dpsi/dx, 0) is the curl of (0, 0, psi) in 3D
    components = [sympy.diff(psi, x[1]), -sympy.diff(psi, x[0])] + [sympy.Integer(0)] * (d - 2)
    return ManufacturedCase(
        name="stream",
        d=d,
        symbols=x,
        velocity_expr=sympy.Matrix(components),
        pressure_expr=x[0] - sympy.Rational(1, 2),
    )


def zero_case(d: int) -> ManufacturedCase:
    x = _symbols(d)
    return ManufacturedCase("zero", d, x, sympy.zeros(d, 1), sympy.Integer(0))


def manufactured_case(name: str, d: int, pressure_shift: float = 0.0) -> ManufacturedCase:
    """
    Case by name

    ``stream-shifted`` is the stream case with pressure p + 1000 (x - 1/2).
    """
    if name == "zero":
        case = zero_case(d)
    elif name == "stream":
        case = stream_case(d)
    elif name == "stream-shifted":
        case = stream_case(d).with_pressure_shift(1000.0)
    else:
        raise UnsupportedKind(f"unknown manufactured case: {name}")
    if pressure_shift:
        case = case.with_pressure_shift(pressure_shift)
    logger.debug("manufactured_case_built", case=case.name, d=d)
    return case
