import numpy as np

from plugins import scenario
from utils.exceptions import ConfigError
from utils.geometry.ambient import FlatComplex, RoundSphere
from utils.geometry.curvature import convergence_study, verify_transport_curvature, verify_ricci_identity
from utils.geometry.dec import periods
from utils.geometry.lagmesh import build_loop, build_torus_grid, induced_volume
from utils.geometry.surfaces import circle, legendre_torus, potential_torus_model, sphere_latitude
from utils.models.scenario_model import ScenarioConfig
from utils.report_writer import ScenarioResult
from utils.scenario_support import announce

ORDER_RANGE = (1.7, 2.3)


def _flat_circle(cfg):
    model = FlatComplex(1)
    return (
        lambda n: build_loop(model, circle(), n),
        {
            "transport_residual": lambda mesh: verify_transport_curvature(mesh).transport_residual,
            "length_error": lambda mesh: abs(induced_volume(mesh)[0] - 2.0 * np.pi),
        },
        [64, 128, 256, 512],
    )


def _sphere_latitude(cfg):
    model = RoundSphere(1.0)
    theta = cfg.theta or np.pi / 3
    exact = 2.0 * np.pi * np.cos(theta)
    return (
        lambda n: build_loop(model, sphere_latitude(model, theta), n),
        {
            "transport_residual": lambda mesh: verify_transport_curvature(mesh).transport_residual,
            "alpha_period_error": lambda mesh: abs(periods(verify_transport_curvature(mesh).alpha)[0] - exact),
        },
        [64, 128, 256, 512],
    )


def _potential_torus(cfg):
    model = potential_torus_model(0.05 if cfg.epsilon is None else cfg.epsilon)
    param = legendre_torus(model, 0.3 if cfg.delta is None else cfg.delta)
    return (
        lambda n: build_torus_grid(model, param, n, n),
        {
            "transport_residual": lambda mesh: verify_transport_curvature(mesh).transport_residual,
            "ricci_residual": lambda mesh: verify_ricci_identity(mesh).residual,
        },
        [24, 32, 48, 64],
    )


TARGETS = {"flat-circle": _flat_circle, "sphere-latitude": _sphere_latitude, "potential-torus": _potential_torus}


@scenario("convergence", "Refinement ladder for the mean curvature / transport residual: observed orders near 2")
def convergence(cfg: ScenarioConfig) -> ScenarioResult:
    result = ScenarioResult(cfg.scenario)
    target = cfg.target or "flat-circle"
    if target not in TARGETS:
        raise ConfigError(f"unknown convergence target {target!r}; choose from {sorted(TARGETS)}")
    builder, quantities, ladder = TARGETS[target](cfg)
    table = convergence_study(builder, cfg.ladder or ladder, quantities)

    orders = table.orders
    low, high = cfg.tolerance("order_min", ORDER_RANGE[0]), cfg.tolerance("order_max", ORDER_RANGE[1])
    last = orders["transport_residual"][-1]
    announce(result, f"{target}_transport_order", low <= last <= high, f"{np.round(orders['transport_residual'], 3).tolist()}")
    decreasing = all(b < a for a, b in zip(table.residuals["transport_residual"], table.residuals["transport_residual"][1:]))
    announce(result, f"{target}_transport_decreasing", decreasing)

    result.documents["convergence"] = table.to_document()
    result.documents["target"] = target
    result.tables["ladder"] = [
        {"resolution": n, **{name: values[k] for name, values in table.residuals.items()}}
        for k, n in enumerate(table.resolutions)
    ]
    result.chart(
        "ladder",
        f"Residuals under refinement ({target})",
        {name: (table.resolutions, values) for name, values in table.residuals.items()},
        x_label="resolution",
        y_label="residual",
        log_x=True,
        log_y=True,
    )
    return result
