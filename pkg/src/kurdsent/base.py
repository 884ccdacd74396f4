"""Estimator plumbing shared across the toolkit.

Models follow the familiar fit/transform/predict convention: constructor
arguments are hyperparameters, ``fit`` returns ``self``, and attributes
learned from data carry a trailing underscore. ``get_params``/``set_params``
are provided so estimators compose with pipeline-style tooling.
"""

from __future__ import annotations

import inspect
from typing import Any


class DataError(ValueError):
    """Raised for malformed input data, schema violations, or shortfalls."""


class ClientError(RuntimeError):
    """Raised when a translator or teacher client fails."""


class NotFittedError(RuntimeError):
    """Raised when a model is used before ``fit``."""


class Estimator:
    """Minimal base class providing parameter introspection.

    Subclasses must accept all hyperparameters as keyword arguments in
    ``__init__`` and store each under the same attribute name.
    """

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [
            name
            for name, p in sig.parameters.items()
            if name != "self" and p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
        ]

    def get_params(self, deep: bool = True) -> dict[str, Any]:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params: Any) -> "Estimator":
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"unknown parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


def clone(estimator: Estimator) -> Estimator:
    """Fresh unfitted copy with identical hyperparameters."""
    return type(estimator)(**estimator.get_params())


def check_is_fitted(estimator: Any, *attributes: str) -> None:
    for attr in attributes:
        if getattr(estimator, attr, None) is None:
            raise NotFittedError(
                f"{type(estimator).__name__} is not fitted (missing {attr!r}); call fit() first"
            )
