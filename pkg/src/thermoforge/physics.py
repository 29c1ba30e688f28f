"""Physics-informed regression of peak temperature.

The network sees ``(RR, TS, DMFR)`` min-max scaled to ``[0, 1]`` using the
training data.  Two of those inputs act as PDE coordinates: by default
rotational rate is the position ``x`` and travel speed is the time ``t``.
DMFR is an ordinary input that no residual constrains.  The target is the
z-scored peak temperature; metrics are reported back in degrees Celsius.

Residuals (all in scaled coordinates)::

    transport     c u_t + u_x
    wave          c^2 u_tt - u_xx        (u_tt - c^2 u_xx with textbook_wave)
    heat          u_t - k u_xx
    schrodinger   H psi - i hbar psi_t,  H psi = -(hbar^2 / 2m) psi_xx

For the Schrödinger model the network has two outputs ``(Re psi, Im psi)``
and temperature is read from ``Re psi``.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import data as D
from .autodiff import Jet, Var
from .errors import DataError, InvalidParameterError, TrainingDivergenceError
from .mlp import AdamState, MlpNetwork, adam_step, init_weights

log = logging.getLogger(__name__)

EQUATIONS = ("transport", "wave", "heat", "schrodinger")


@dataclass(frozen=True)
class PhysicsSpec:
    equation: str = "transport"
    c: float = 1.0
    k: float = 1.0
    hbar: float = 1.0
    mass: float = 1.0
    t_feature: str = D.TS
    x_feature: str = D.RR
    collocation: str = "training"  # or "grid"
    grid_size: int = 16
    textbook_wave: bool = False

    def validate(self):
        if self.equation not in EQUATIONS:
            raise InvalidParameterError(f"unknown equation {self.equation!r}")
        if self.equation in ("transport", "wave") and self.c == 0:
            raise InvalidParameterError("c must be non-zero")
        if not (self.k > 0 and self.hbar > 0 and self.mass > 0):
            raise InvalidParameterError("k, hbar and mass must be > 0")
        if self.t_feature == self.x_feature:
            raise InvalidParameterError("t and x must map to different features")
        if self.collocation not in ("training", "grid"):
            raise InvalidParameterError(f"unknown collocation mode {self.collocation!r}")
        if self.collocation == "grid" and self.grid_size < 2:
            raise InvalidParameterError("grid_size must be >= 2")

    @property
    def output_width(self):
        return 2 if self.equation == "schrodinger" else 1


class FunctionField:
    """A closed-form field evaluated through the same jet machinery as a
    network.  ``fn`` maps an input :class:`Jet` to an output jet."""

    def __init__(self, fn, n_inputs, output_width=1):
        self.fn = fn
        self.n_inputs = n_inputs
        self.output_width = output_width

    def jet(self, X, wrt, params=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.fn(Jet.inputs(X, wrt))


def _residual_channels(field, X, spec: PhysicsSpec, t: int, x: int, params=None, h=None):
    if h is None:
        h = field.jet(X, (t, x), params) if params is not None else field.jet(X, (t, x))
    eq = spec.equation
    if eq == "schrodinger":
        if h.value.shape[1] != 2:
            raise InvalidParameterError("the Schrödinger model needs two output channels")
        re, im = h.column(0), h.column(1)
        kin = spec.hbar**2 / (2.0 * spec.mass)
        r_re = -kin * re.second(x) + spec.hbar * im.first(t)
        r_im = -kin * im.second(x) - spec.hbar * re.first(t)
        return [r_re, r_im]
    if h.value.shape[1] != 1:
        raise InvalidParameterError(f"the {eq} model needs a single output channel")
    if eq == "transport":
        return [spec.c * h.first(t) + h.first(x)]
    if eq == "wave":
        if spec.textbook_wave:
            return [h.second(t) - spec.c**2 * h.second(x)]
        return [spec.c**2 * h.second(t) - h.second(x)]
    return [h.first(t) - spec.k * h.second(x)]


def _values(channels):
    out = np.column_stack([c.value[:, 0] for c in channels])
    if not np.all(np.isfinite(out)):
        raise TrainingDivergenceError("non-finite PDE residual")
    return out[:, 0] if out.shape[1] == 1 else out


def _coords(spec, t, x):
    if t is None or x is None:
        return 1, 0  # raw field inputs: column 0 is x, column 1 is t
    return t, x


def transport_residual(field, points, spec=PhysicsSpec("transport"), t=None, x=None):
    """``c u_t + u_x`` at each point."""
    t, x = _coords(spec, t, x)
    return _values(_residual_channels(field, points, spec, t, x))


def wave_residual(field, points, spec=PhysicsSpec("wave"), t=None, x=None):
    t, x = _coords(spec, t, x)
    return _values(_residual_channels(field, points, spec, t, x))


def heat_residual(field, points, spec=PhysicsSpec("heat"), t=None, x=None):
    t, x = _coords(spec, t, x)
    return _values(_residual_channels(field, points, spec, t, x))


def schrodinger_residual(field, points, spec=PhysicsSpec("schrodinger"), t=None, x=None):
    """``(Re, Im)`` of ``H psi - i hbar psi_t`` per point, shape ``(n, 2)``."""
    t, x = _coords(spec, t, x)
    return _values(_residual_channels(field, points, spec, t, x))


RESIDUALS = {
    "transport": transport_residual,
    "wave": wave_residual,
    "heat": heat_residual,
    "schrodinger": schrodinger_residual,
}


def physics_term(channels) -> Var:
    """Mean over points of the squared residual (squared modulus if complex)."""
    sq = channels[0] * channels[0]
    for ch in channels[1:]:
        sq = sq + ch * ch
    return sq.mean()


def data_term(u: Var, y) -> Var:
    """Mean squared error of the first output channel."""
    y = np.asarray(y, dtype=float).reshape(-1, 1)
    err = u[:, 0:1] - y
    return (err * err).mean()


def data_loss(field, X, y) -> float:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return float(data_term(field.jet(X, ()).value, y).value)


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    physics: float
    data: float


def _loss_vars(field, X, y, spec, weight, t, x, collocation=None, params=None):
    kw = {} if params is None else {"params": params}
    if weight == 0:
        u = field.jet(X, (), **kw).value
        d = data_term(u, y)
        return d, Var(0.0), d
    if collocation is None:
        h = field.jet(X, (t, x), **kw)
        phys = physics_term(_residual_channels(field, X, spec, t, x, h=h))
        d = data_term(h.value, y)
    else:
        phys = physics_term(_residual_channels(field, collocation, spec, t, x, **kw))
        d = data_term(field.jet(X, (), **kw).value, y)
    return weight * phys + d, phys, d


def total_loss(field, X, y, spec: PhysicsSpec, weight=1.0, t=1, x=0, collocation=None) -> LossBreakdown:
    """``weight * physics + data``; collocation defaults to the data points."""
    if weight < 0:
        raise InvalidParameterError("physics weight must be >= 0")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    total, phys, d = _loss_vars(field, X, y, spec, weight, t, x, collocation)
    return LossBreakdown(float(total.value), float(phys.value), float(d.value))


@dataclass(frozen=True)
class PinnTrainConfig:
    epochs: int = 2000
    learning_rate: float = 1e-3
    physics_weight: float = 1.0
    seed: int = 0
    hidden: tuple = (32, 32)
    features: tuple = D.REGRESSION_FEATURES

    def validate(self):
        if self.epochs < 1:
            raise InvalidParameterError("epochs must be >= 1")
        if self.physics_weight < 0:
            raise InvalidParameterError("physics_weight must be >= 0")
        if not self.learning_rate > 0:
            raise InvalidParameterError("learning_rate must be > 0")


@dataclass
class PinnModel:
    """Trained network plus the input box and target scaling it expects."""

    net: MlpNetwork
    spec: PhysicsSpec
    features: tuple
    lower: np.ndarray
    upper: np.ndarray
    target_mean: float
    target_std: float
    median_inputs: np.ndarray = field(default=None)

    @property
    def t_index(self):
        return self.features.index(self.spec.t_feature)

    @property
    def x_index(self):
        return self.features.index(self.spec.x_feature)

    def normalise(self, X):
        span = self.upper - self.lower
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (np.asarray(X, dtype=float) - self.lower) / safe, 0.0)

    def predict_scaled(self, Z):
        return self.net.forward(Z)[:, 0]

    def predict(self, X):
        """Peak temperature in degrees Celsius for raw feature rows."""
        return self.predict_scaled(self.normalise(X)) * self.target_std + self.target_mean

    def to_dict(self):
        return {
            "kind": "pinn",
            "spec": asdict(self.spec),
            "features": list(self.features),
            "input_lower": self.lower.tolist(),
            "input_upper": self.upper.tolist(),
            "target_mean": self.target_mean,
            "target_std": self.target_std,
            "median_inputs": None if self.median_inputs is None else self.median_inputs.tolist(),
            "network": self.net.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        med = d.get("median_inputs")
        return cls(MlpNetwork.from_dict(d["network"]), PhysicsSpec(**d["spec"]), tuple(d["features"]),
                   np.asarray(d["input_lower"]), np.asarray(d["input_upper"]), d["target_mean"], d["target_std"],
                   None if med is None else np.asarray(med))


@dataclass
class PinnResult:
    model: PinnModel
    history: list  # (epoch, physics, data, total) before each update
    final: LossBreakdown
    test_rmse: float
    test_mae: float
    seconds: float

    @property
    def initial_total(self):
        return self.history[0][3]


def _grid_collocation(spec, t, x, n_inputs, base):
    m = spec.grid_size
    g = np.linspace(0.0, 1.0, m)
    T, Xg = np.meshgrid(g, g, indexing="ij")
    pts = np.tile(base, (m * m, 1))
    pts[:, t] = T.ravel()
    pts[:, x] = Xg.ravel()
    return pts


def train_pinn(train: D.Dataset, test: D.Dataset, spec: PhysicsSpec, cfg: PinnTrainConfig = PinnTrainConfig()):
    """Full-batch Adam on ``physics_weight * physics + data``."""
    spec.validate()
    cfg.validate()
    if train.target_temperature is None or test.target_temperature is None:
        raise DataError("physics models need the peak temperature target")
    features = tuple(cfg.features)
    for name in (spec.t_feature, spec.x_feature):
        if name not in features:
            raise InvalidParameterError(f"coordinate feature {name!r} is not a network input")
    Xtr = train.select(features).X
    Xte = test.select(features).X
    lower, upper = Xtr.min(axis=0), Xtr.max(axis=0)
    y = train.target_temperature
    mu, sd = float(np.mean(y)), float(np.std(y))
    sd = sd if sd > 0 else 1.0
    model = PinnModel(init_weights((len(features),) + tuple(cfg.hidden) + (spec.output_width,), cfg.seed),
                      spec, features, lower, upper, mu, sd)
    Z = model.normalise(Xtr)
    model.median_inputs = np.median(Z, axis=0)
    ys = (y - mu) / sd
    t, x = model.t_index, model.x_index
    colloc = _grid_collocation(spec, t, x, len(features), model.median_inputs) if spec.collocation == "grid" else None

    net = model.net
    params = net.parameters()
    state = AdamState.for_parameters(params, learning_rate=cfg.learning_rate)
    history = []
    start = time.perf_counter()
    for epoch in range(cfg.epochs + 1):
        pv = [Var(p) for p in params]
        total, phys, d = _loss_vars(net, Z, ys, spec, cfg.physics_weight, t, x, colloc, params=pv)
        if not math.isfinite(float(total.value)):
            raise TrainingDivergenceError(f"non-finite loss at epoch {epoch}", epoch=epoch)
        if epoch == cfg.epochs:
            final = LossBreakdown(float(total.value), float(phys.value), float(d.value))
            break
        history.append((epoch, float(phys.value), float(d.value), float(total.value)))
        total.backward()
        grads = [v.grad if v.grad is not None else np.zeros(v.shape) for v in pv]
        params, state = adam_step(state, params, grads)
        net = net.with_parameters(params)
    seconds = time.perf_counter() - start
    net.step = state.step
    model.net = net
    pred = model.predict(Xte)
    err = pred - test.target_temperature
    rmse = float(np.sqrt(np.mean(err**2)))
    mae = float(np.mean(np.abs(err)))
    log.info("%s PINN: loss %.4g -> %.4g, test RMSE %.4g", spec.equation, history[0][3], final.total, rmse)
    return PinnResult(model, history, final, rmse, mae, seconds)


@dataclass(frozen=True)
class ResponseSurface:
    x_values: np.ndarray  # raw units of the x feature (rows)
    t_values: np.ndarray  # raw units of the t feature (columns)
    grid: np.ndarray      # predictions, degrees Celsius, shape (m, m)
    roughness: float      # mean |second difference| over both axes


def response_surface(model: PinnModel, m: int = 25) -> ResponseSurface:
    """Predictions over an ``m x m`` grid of the scaled (x, t) box, other
    inputs held at their training medians."""
    if m < 2:
        raise InvalidParameterError("grid size must be >= 2")
    g = np.linspace(0.0, 1.0, m)
    base = model.median_inputs if model.median_inputs is not None else np.full(len(model.features), 0.5)
    Xg, Tg = np.meshgrid(g, g, indexing="ij")
    pts = np.tile(base, (m * m, 1))
    pts[:, model.x_index] = Xg.ravel()
    pts[:, model.t_index] = Tg.ravel()
    grid = (model.predict_scaled(pts) * model.target_std + model.target_mean).reshape(m, m)
    rough = []
    if m >= 3:
        rough.append(np.abs(np.diff(grid, n=2, axis=0)).ravel())
        rough.append(np.abs(np.diff(grid, n=2, axis=1)).ravel())
    roughness = float(np.mean(np.concatenate(rough))) if rough else 0.0
    xi, ti = model.x_index, model.t_index
    xs = model.lower[xi] + g * (model.upper[xi] - model.lower[xi])
    ts = model.lower[ti] + g * (model.upper[ti] - model.lower[ti])
    return ResponseSurface(xs, ts, grid, roughness)
