"""Deterministic model families with known closed-form attribution behavior.

A predictive model is anything with an integer ``arity`` and a deterministic
``score(row) -> float`` that is total on R^d: it must return a value even for
inputs far off the data manifold, which is exactly what the interventional
value functions exploit and what the out-of-distribution diagnostics probe.
"""

from __future__ import annotations

from typing import Callable, Protocol, Sequence, runtime_checkable

import numpy as np

from .data import TabularDataset
from .games import Attribution


@runtime_checkable
class PredictiveModel(Protocol):
    arity: int

    def score(self, row) -> float: ...


class LinearModel:
    """f(x) = intercept + coefficients . x"""

    def __init__(self, intercept: float, coefficients: Sequence[float]):
        self.intercept = float(intercept)
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.arity = len(self.coefficients)

    def score(self, row) -> float:
        return float(self.intercept + np.dot(self.coefficients, row))


class MultiplicativeModel:
    """f(x) = product of all coordinates."""

    def __init__(self, arity: int):
        self.arity = int(arity)

    def score(self, row) -> float:
        out = 1.0
        for v in row:
            out *= float(v)
        return out


class QuadraticRecourseModel:
    """Univariate f(x) = 2 - (x - 1)^2: the sign of an attribution says
    nothing about which direction of change would raise the score."""

    arity = 1

    def score(self, row) -> float:
        x = float(row[0])
        return 2.0 - (x - 1.0) ** 2


class CallableModel:
    """Wrap an arbitrary deterministic function as a predictive model."""

    def __init__(self, arity: int, fn: Callable[[Sequence[float]], float]):
        self.arity = int(arity)
        self._fn = fn

    def score(self, row) -> float:
        return float(self._fn(row))


class ScaffoldedModel:
    """Behaves like ``biased`` on exact training rows and like ``innocuous``
    everywhere else — the construction that games interventional explainers."""

    def __init__(self, biased, innocuous, membership: TabularDataset):
        if biased.arity != innocuous.arity:
            raise ValueError(
                f"arity mismatch: biased={biased.arity}, innocuous={innocuous.arity}"
            )
        if membership.n_features != biased.arity:
            raise ValueError("membership dataset arity does not match the models")
        self.biased = biased
        self.innocuous = innocuous
        self.membership = membership
        self.arity = biased.arity
        self._rows = membership.row_set()

    def score(self, row) -> float:
        key = tuple(float(v) for v in row)
        if key in self._rows:
            return float(self.biased.score(row))
        return float(self.innocuous.score(row))


def scaffold(biased, innocuous, data: TabularDataset) -> ScaffoldedModel:
    """Mask ``biased`` behind ``innocuous`` off the exact rows of ``data``."""
    return ScaffoldedModel(biased, innocuous, data)


def linear_closed_form(model: LinearModel, x, means) -> Attribution:
    """Closed-form attribution for a linear model under any expectation-style
    value function: each coordinate earns coefficient * (value - mean)."""
    x = np.asarray(x, dtype=float)
    means = np.asarray(means, dtype=float)
    if x.shape != (model.arity,) or means.shape != (model.arity,):
        raise ValueError(
            f"expected {model.arity} coordinates, got x{ x.shape } and means{means.shape}"
        )
    values = model.coefficients * (x - means)
    return Attribution(
        base_value=model.score(means),
        values=tuple(float(v) for v in values),
        method="closed-form",
        diagnostics={"family": "linear"},
    )


def multiplicative_closed_form(model: MultiplicativeModel, x) -> Attribution:
    """Closed-form attribution for a product model over independent,
    zero-centered features: every coordinate gets f(x)/d, regardless of its
    own magnitude."""
    fx = model.score(x)
    share = fx / model.arity
    return Attribution(
        base_value=0.0,
        values=tuple(share for _ in range(model.arity)),
        method="closed-form",
        diagnostics={"family": "multiplicative"},
    )
