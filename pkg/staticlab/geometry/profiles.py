"""Profiles: named smooth functions of one coordinate with derivatives on demand.

A profile is bound into symbolic metric components or potentials as an undefined
sympy function ``P(s)``. Before lambdification every ``Derivative(P(s), (s, k))``
is frozen into a plain symbol ``P__dk`` whose value the profile supplies at
evaluation time, so closed-form warps and numerically integrated ones flow
through the same code.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import sympy as sp
from loguru import logger
from scipy.integrate import solve_ivp

from ..errors import OutOfDomainError

__all__ = [
    "Profile",
    "ExpressionProfile",
    "OdeSystem",
    "Trajectory",
    "TrajectoryProfile",
    "profile_symbol",
    "freeze_profiles",
]


def profile_symbol(name: str, order: int) -> sp.Symbol:
    """Placeholder symbol for the ``order``-th derivative of profile ``name``."""
    return sp.Symbol(f"{name}__d{order}", real=True)


def freeze_profiles(
    entries: Sequence[sp.Expr], names: Iterable[str]
) -> tuple[list[sp.Expr], dict[str, int]]:
    """Replace applied profile functions and their derivatives by placeholder symbols.

    Returns the rewritten entries and, per profile, the highest derivative order
    that occurs (``-1`` when the profile does not occur at all).
    """
    names = set(names)
    max_order = dict.fromkeys(names, -1)
    replacements: dict[sp.Basic, sp.Symbol] = {}
    for entry in entries:
        for node in sp.sympify(entry).atoms(sp.Derivative):
            fname = getattr(node.expr.func, "__name__", None)
            if fname in names:
                order = int(node.derivative_count)
                replacements[node] = profile_symbol(fname, order)
                max_order[fname] = max(max_order[fname], order)
    frozen = [sp.sympify(e).xreplace(replacements) for e in entries]
    applied: dict[sp.Basic, sp.Symbol] = {}
    for entry in frozen:
        for node in entry.atoms(sp.core.function.AppliedUndef):
            fname = node.func.__name__
            if fname in names:
                applied[node] = profile_symbol(fname, 0)
                max_order[fname] = max(max_order[fname], 0)
    if applied:
        frozen = [e.xreplace(applied) for e in frozen]
    return frozen, max_order


class Profile(ABC):
    """A smooth scalar function of one coordinate."""

    def __init__(self, name: str, period: float | None = None) -> None:
        if not name.isidentifier():
            raise ValueError(f"Profile name must be an identifier, got '{name}'")
        self.name = name
        self.period = period

    @abstractmethod
    def derivative(self, s: float, order: int = 0) -> float:
        """Value of the ``order``-th derivative at ``s``."""

    def __call__(self, s: float) -> float:
        return self.derivative(s, 0)

    def derivatives(self, s: float, max_order: int) -> list[float]:
        return [self.derivative(s, k) for k in range(max_order + 1)]

    def sample(self, points: np.ndarray, order: int = 0) -> np.ndarray:
        return np.array([self.derivative(float(s), order) for s in points])


class ExpressionProfile(Profile):
    """Closed-form profile given as a sympy expression in one variable."""

    variable = sp.Symbol("s", real=True)

    def __init__(self, name: str, expr: sp.Expr | str | float, period: float | None = None):
        super().__init__(name, period)
        if isinstance(expr, str):
            expr = sp.sympify(expr, locals={"s": self.variable})
        self.expr = sp.sympify(expr)
        stray = self.expr.free_symbols - {self.variable}
        if stray:
            raise ValueError(
                f"Profile '{name}' may only depend on s, found {sorted(map(str, stray))}"
            )
        self._compiled: dict[int, Callable[[float], Any]] = {}

    def derivative(self, s: float, order: int = 0) -> float:
        fn = self._compiled.get(order)
        if fn is None:
            fn = sp.lambdify(self.variable, sp.diff(self.expr, self.variable, order), "numpy")
            self._compiled[order] = fn
        return float(fn(s))

    def __repr__(self) -> str:
        return f"ExpressionProfile({self.name}={self.expr})"


class OdeSystem:
    """A first-order system ``y' = F(s, y)`` with closed-form driver profiles.

    ``rhs`` entries are sympy expressions in the state symbols and in applied
    driver functions ``D(s)`` (and their derivatives). Higher derivatives of the
    state are produced as total derivatives along the flow, so a trajectory
    supplies derivatives of every order without differencing its dense output.
    """

    variable = sp.Symbol("s", real=True)

    def __init__(
        self,
        states: Sequence[str],
        rhs: Sequence[sp.Expr],
        drivers: Mapping[str, Profile] | None = None,
        name: str = "ode",
    ) -> None:
        if len(states) != len(rhs):
            raise ValueError("One right-hand side per state is required")
        self.name = name
        self.states = tuple(states)
        self.drivers = dict(drivers or {})
        self.state_symbols = tuple(sp.Symbol(n, real=True) for n in self.states)
        self._state_funcs = tuple(sp.Function(n)(self.variable) for n in self.states)
        to_funcs = dict(zip(self.state_symbols, self._state_funcs, strict=True))
        self._rhs_funcs = [sp.sympify(e).xreplace(to_funcs) for e in rhs]
        self._derivative_exprs: dict[tuple[int, int], sp.Expr] = {}
        self._compiled: dict[tuple[int, int], tuple[Callable[..., Any], dict[str, int]]] = {}
        self._rhs_numeric = self._compile_rhs()

    def _total_derivative(self, component: int, order: int) -> sp.Expr:
        """d^order y_component / ds^order expressed through state functions."""
        key = (component, order)
        if key in self._derivative_exprs:
            return self._derivative_exprs[key]
        if order == 0:
            expr = self._state_funcs[component]
        elif order == 1:
            expr = self._rhs_funcs[component]
        else:
            previous = self._total_derivative(component, order - 1)
            flow = {
                sp.Derivative(func, self.variable): rhs
                for func, rhs in zip(self._state_funcs, self._rhs_funcs, strict=True)
            }
            expr = sp.diff(previous, self.variable).subs(flow)
        self._derivative_exprs[key] = expr
        return expr

    def _freeze(self, expr: sp.Expr) -> tuple[sp.Expr, dict[str, int]]:
        frozen, orders = freeze_profiles([expr], self.drivers)
        back = dict(zip(self._state_funcs, self.state_symbols, strict=True))
        return frozen[0].xreplace(back), {k: v for k, v in orders.items() if v >= 0}

    def _compile(self, component: int, order: int) -> tuple[Callable[..., Any], dict[str, int]]:
        key = (component, order)
        if key not in self._compiled:
            expr, orders = self._freeze(self._total_derivative(component, order))
            args = [self.variable, *self.state_symbols]
            for driver, top in sorted(orders.items()):
                args.extend(profile_symbol(driver, k) for k in range(top + 1))
            self._compiled[key] = (sp.lambdify(args, expr, "numpy"), orders)
        return self._compiled[key]

    def _driver_values(self, s: float, orders: Mapping[str, int]) -> list[float]:
        values: list[float] = []
        for driver, top in sorted(orders.items()):
            values.extend(self.drivers[driver].derivatives(s, top))
        return values

    def _compile_rhs(self) -> Callable[[float, np.ndarray], np.ndarray]:
        compiled = [self._compile(i, 1) for i in range(len(self.states))]

        def rhs(s: float, y: np.ndarray) -> np.ndarray:
            return np.array(
                [fn(s, *y, *self._driver_values(s, orders)) for fn, orders in compiled],
                dtype=float,
            )

        return rhs

    def rhs(self, s: float, y: np.ndarray) -> np.ndarray:
        return self._rhs_numeric(s, np.asarray(y, dtype=float))

    def evaluate(self, component: int, order: int, s: float, y: np.ndarray) -> float:
        """``order``-th derivative of state ``component`` given the state at ``s``."""
        if order == 0:
            return float(y[component])
        fn, orders = self._compile(component, order)
        return float(fn(s, *y, *self._driver_values(s, orders)))

    def solve(
        self,
        s0: float,
        y0: Sequence[float],
        span: tuple[float, float],
        rtol: float = 1e-10,
        atol: float = 1e-12,
        events: Sequence[Callable[[float, np.ndarray], float]] = (),
        period: float | None = None,
    ) -> Trajectory:
        """Integrate forward and backward from ``s0`` to cover ``span``.

        Terminal events shorten the covered span; the trajectory records why.
        """
        lo, hi = span
        if not lo <= s0 <= hi:
            raise ValueError(f"Initial point {s0} outside requested span {span}")
        y0 = np.asarray(y0, dtype=float)
        pieces: dict[str, Any] = {}
        covered = [s0, s0]
        reasons: list[str] = []
        for label, end in (("forward", hi), ("backward", lo)):
            if end == s0:
                continue
            result = solve_ivp(
                self._rhs_numeric,
                (s0, end),
                y0,
                method="DOP853",
                rtol=rtol,
                atol=atol,
                dense_output=True,
                events=list(events) or None,
            )
            if result.status == -1:
                raise RuntimeError(f"Integration of {self.name} failed: {result.message}")
            pieces[label] = result.sol
            reached = float(result.t[-1])
            if label == "forward":
                covered[1] = reached
            else:
                covered[0] = reached
            if result.status == 1:
                reasons.append(f"{label} integration stopped by event at s={reached:.6g}")
        if reasons:
            logger.warning(f"{self.name}: " + "; ".join(reasons))
        logger.info(
            f"Integrated {self.name} over [{covered[0]:.6g}, {covered[1]:.6g}] "
            f"(rtol={rtol:g}, atol={atol:g})"
        )
        return Trajectory(
            system=self,
            s0=float(s0),
            forward=pieces.get("forward"),
            backward=pieces.get("backward"),
            span=(covered[0], covered[1]),
            period=period,
            termination="; ".join(reasons) or None,
            initial_state=y0,
        )


@dataclass
class Trajectory:
    """Dense-output solution of an OdeSystem over a covered span."""

    system: OdeSystem
    s0: float
    forward: Any
    backward: Any
    span: tuple[float, float]
    period: float | None = None
    termination: str | None = None
    initial_state: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def _resolve(self, s: float) -> float:
        lo, hi = self.span
        if lo <= s <= hi:
            return s
        if self.period is not None:
            wrapped = self.s0 + math.fmod(s - self.s0, self.period)
            if wrapped < self.s0:
                wrapped += self.period
            if lo <= wrapped <= hi:
                return wrapped
        raise OutOfDomainError(
            f"s={s} outside the integrated span [{lo:.6g}, {hi:.6g}] of {self.system.name}"
        )

    def state(self, s: float) -> np.ndarray:
        s = self._resolve(float(s))
        if s >= self.s0:
            if self.forward is None:
                return np.array(self.initial_state, dtype=float)
            return np.asarray(self.forward(s), dtype=float)
        return np.asarray(self.backward(s), dtype=float)

    def derivative(self, component: int, s: float, order: int = 0) -> float:
        s = self._resolve(float(s))
        return self.system.evaluate(component, order, s, self.state(s))

    def profile(self, component: str, name: str | None = None) -> TrajectoryProfile:
        return TrajectoryProfile(self, self.system.states.index(component), name or component)

    def sample(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        grid = np.linspace(self.span[0], self.span[1], count)
        return grid, np.array([self.state(s) for s in grid])


class TrajectoryProfile(Profile):
    """One state component of a Trajectory, seen as a profile."""

    def __init__(self, trajectory: Trajectory, component: int, name: str) -> None:
        super().__init__(name, trajectory.period)
        self.trajectory = trajectory
        self.component = component

    @property
    def span(self) -> tuple[float, float]:
        return self.trajectory.span

    def derivative(self, s: float, order: int = 0) -> float:
        return self.trajectory.derivative(self.component, s, order)

    def __repr__(self) -> str:
        return (
            f"TrajectoryProfile({self.name} of {self.trajectory.system.name}, "
            f"span={self.span})"
        )
