"""Numeric helpers: exact-friendly logarithms, size caps, report serialization."""

from __future__ import annotations

import math
import os
from fractions import Fraction

import numpy as np

DEFAULT_TOL = 1e-12
LN2 = math.log(2.0)


def max_points(default: int = 6000) -> int:
    """Matrix-size cap; METRICLAB_MAX_POINTS overrides the default."""
    raw = os.environ.get("METRICLAB_MAX_POINTS")
    if raw is None:
        return default
    value = int(raw)
    if value < 1:
        raise ValueError("METRICLAB_MAX_POINTS must be positive")
    return value


def flog(x) -> float:
    """Natural log that survives exact rationals far below float underflow.

    Fractions are split into log(num) - log(den); Python takes logs of
    arbitrarily large ints exactly enough for our ratio arithmetic.
    """
    if isinstance(x, Fraction):
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(x)


def as_float(x) -> float:
    """float(x), with silent underflow to 0.0 for out-of-range Fractions."""
    if isinstance(x, Fraction):
        try:
            return x.numerator / x.denominator
        except OverflowError:
            return 0.0
    return float(x)


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON with floats at 17 significant digits.

    Non-finite floats become the strings "inf", "-inf", "nan" so reports stay
    parseable by strict JSON readers. Dict insertion order is preserved.
    """
    out: list[str] = []
    _emit(obj, out, indent, 0)
    return "".join(out)


def _emit(obj, out: list[str], indent: int, depth: int) -> None:
    pad = " " * (indent * depth)
    pad_in = " " * (indent * (depth + 1))
    if isinstance(obj, np.generic):
        obj = obj.item()
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_fmt_float(obj))
    elif isinstance(obj, Fraction):
        out.append(_fmt_float(as_float(obj)))
    elif isinstance(obj, str):
        out.append('"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"')
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for i, item in enumerate(obj):
            out.append(pad_in)
            _emit(item, out, indent, depth + 1)
            out.append(",\n" if i + 1 < len(obj) else "\n")
        out.append(pad + "]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (key, value) in enumerate(items):
            out.append(pad_in + '"' + str(key) + '": ')
            _emit(value, out, indent, depth + 1)
            out.append(",\n" if i + 1 < len(items) else "\n")
        out.append(pad + "}")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} in a report")
