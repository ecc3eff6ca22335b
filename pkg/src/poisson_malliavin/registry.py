"""Named constructors wired to the run configuration.

Functionals select as "count:A", "count_squared:A", "product_counts:A,B",
"exp_count:A,0.5", "one", or "hawkes_HT"; kernels as "ind:A",
"tensor_ind:A[,order]", "poly:degree", "gauss:sigma".  Window letters
refer to the config's window table.
"""

from __future__ import annotations

import math

import numpy as np

from .configuration import Window
from .errors import ConfigError
from .integrals import (
    Kernel,
    gauss_time_kernel,
    indicator_kernel,
    poly_time_kernel,
    tensor_power,
    validate_kernel,
)
from .malliavin import (
    Functional,
    constant_functional,
    count_functional,
    count_squared_functional,
    exp_count_functional,
    product_counts_functional,
)
from .measure import ProductIntensity, density_marks, discrete_marks, uniform_marks
from .processes import (
    ConstantExcitation,
    ExponentialExcitation,
    HawkesModel,
    ground_intensity,
    hawkes_functional,
)

__all__ = [
    "default_config",
    "build_rho",
    "build_windows",
    "build_hawkes",
    "build_functional",
    "build_kernel",
    "DEFAULT_FUNCTIONALS",
    "DEFAULT_KERNELS",
]

DEFAULT_FUNCTIONALS = ("count:A", "count_squared:A", "product_counts:A,B", "exp_count:A,0.5")
DEFAULT_KERNELS = ("ind:A", "ind:B", "tensor_ind:A")


def default_config() -> dict:
    """Baseline setup: rho(X) = 5 on [0,1] x [0,1], two overlapping windows."""
    return {
        "T": 1.0,
        "marks": {"kind": "interval", "M": 1.0, "density": "uniform", "mass": 5.0},
        "windows": {
            "A": {"t": [0.0, 1.0], "x": [0.0, 0.5]},
            "B": {"t": [0.0, 1.0], "x": [0.3, 0.8]},
        },
        "hawkes": {
            "mu": 1.0,
            "kernel": {"type": "exp", "alpha": 0.5, "beta": 1.0},
            "T": 10.0,
            "theta_cap": 20.0,
        },
    }


def _density_expression(expr: str):
    allowed = {name: getattr(np, name) for name in
               ("exp", "sin", "cos", "sqrt", "log", "abs", "tanh", "minimum", "maximum")}
    allowed["pi"] = math.pi

    def density(x):
        return eval(expr, {"__builtins__": {}}, {**allowed, "x": x})  # noqa: S307

    return density


def build_rho(config: dict) -> ProductIntensity:
    spec = config.get("marks", default_config()["marks"])
    T = float(config.get("T", 1.0))
    kind = spec.get("kind", "interval")
    if kind == "interval":
        M = float(spec["M"])
        density = spec.get("density", "uniform")
        mass = spec.get("mass")
        if density == "uniform":
            marks = uniform_marks(M, mass=float(mass) if mass is not None else None)
        else:
            marks = density_marks(M, _density_expression(density),
                                  total_mass=float(mass) if mass is not None else None)
    elif kind == "discrete":
        marks = discrete_marks(spec["points"], spec["weights"])
    else:
        raise ConfigError(f"unknown mark space kind {kind!r}")
    return ProductIntensity(T=T, marks=marks)


def build_windows(config: dict, rho: ProductIntensity) -> dict[str, Window]:
    table = config.get("windows", default_config()["windows"])
    out = {}
    for name, spec in table.items():
        t = spec.get("t", [0.0, rho.T])
        if "values" in spec:
            out[name] = Window(float(t[0]), float(t[1]),
                               x_values=frozenset(float(v) for v in spec["values"]))
        else:
            x = spec.get("x", [-math.inf, math.inf])
            out[name] = Window(float(t[0]), float(t[1]), float(x[0]), float(x[1]))
    return out


def build_hawkes(config: dict) -> HawkesModel:
    spec = config.get("hawkes", default_config()["hawkes"])
    kspec = spec.get("kernel", {"type": "exp", "alpha": 0.5, "beta": 1.0})
    if kspec.get("type", "exp") == "exp":
        excitation = ExponentialExcitation(float(kspec["alpha"]), float(kspec["beta"]))
    elif kspec["type"] == "const":
        excitation = ConstantExcitation(float(kspec["height"]), float(kspec["width"]))
    else:
        raise ConfigError(f"unknown excitation type {kspec.get('type')!r}")
    return HawkesModel(mu=float(spec["mu"]), excitation=excitation,
                       T=float(spec["T"]), theta_cap=float(spec["theta_cap"]))


def _window_for(name: str, windows: dict[str, Window]) -> Window:
    if name not in windows:
        raise ConfigError(f"unknown window {name!r}; declared: {sorted(windows)}")
    return windows[name]


def build_functional(spec: str, windows: dict[str, Window], rho: ProductIntensity,
                     config: dict | None = None):
    """Returns (functional, rho_override).  The Hawkes functional evaluates
    ground configurations, so it carries its own intensity."""
    head, _, args = spec.partition(":")
    if head == "one":
        return constant_functional(), None
    if head == "count":
        return count_functional(_window_for(args, windows), rho, name=spec), None
    if head == "count_squared":
        return count_squared_functional(_window_for(args, windows), rho, name=spec), None
    if head == "product_counts":
        try:
            a, b = (s.strip() for s in args.split(","))
        except ValueError as exc:
            raise ConfigError(f"product_counts needs two windows, got {args!r}") from exc
        return product_counts_functional(_window_for(a, windows), _window_for(b, windows),
                                         rho, name=spec), None
    if head == "exp_count":
        parts = [s.strip() for s in args.split(",")]
        if len(parts) != 2:
            raise ConfigError(f"exp_count needs 'window,beta', got {args!r}")
        return exp_count_functional(_window_for(parts[0], windows), float(parts[1]),
                                    rho, name=spec), None
    if head == "hawkes_HT":
        model = build_hawkes(config or {})
        return hawkes_functional(model), ground_intensity(model)
    raise ConfigError(f"unknown functional {spec!r}")


def build_kernel(spec: str, windows: dict[str, Window], rho: ProductIntensity,
                 validate: bool = True) -> Kernel:
    head, _, args = spec.partition(":")
    if head == "ind":
        kernel = indicator_kernel(_window_for(args, windows), name=spec)
    elif head == "tensor_ind":
        parts = [s.strip() for s in args.split(",")]
        order = int(parts[1]) if len(parts) > 1 else 2
        kernel = tensor_power(indicator_kernel(_window_for(parts[0], windows)), order, name=spec)
    elif head == "poly":
        kernel = poly_time_kernel(int(args), name=spec)
    elif head == "gauss":
        kernel = gauss_time_kernel(float(args), name=spec)
    else:
        raise ConfigError(f"unknown kernel {spec!r}")
    if validate:
        validate_kernel(kernel, rho)
    return kernel
