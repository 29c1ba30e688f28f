import numpy as np
import pytest

from conftest import FIXTURES
from oracles import tanh_mlp_longdouble
from thermoforge import data as D
from thermoforge.autodiff import Jet
from thermoforge.errors import InvalidParameterError, TrainingDivergenceError
from thermoforge.mlp import init_weights
from thermoforge.physics import (FunctionField, PhysicsSpec, PinnModel, PinnTrainConfig, data_loss,
                                 heat_residual, response_surface, schrodinger_residual, total_loss, train_pinn,
                                 transport_residual, wave_residual)

C, K, Q = 1.7, 0.6, 2.3


@pytest.fixture
def points():
    return np.random.default_rng(50).uniform(-2.0, 2.0, size=(50, 2))


def field(fn, width=1):
    # column 0 is x, column 1 is t
    return FunctionField(lambda h: fn(h.column(0), h.column(1)), 2, width)


def constant_field(value, width=1):
    return FunctionField(lambda h: Jet.concat([h.column(0) * 0.0 + value] * width), 2, width)


def test_transport_exact_and_plug_in(points):
    spec = PhysicsSpec("transport", c=C)
    assert np.max(np.abs(transport_residual(field(lambda x, t: x - t * (1 / C)), points, spec))) < 1e-6
    assert np.allclose(transport_residual(field(lambda x, t: t), points, spec), C, atol=1e-12)
    assert np.allclose(transport_residual(field(lambda x, t: x), points, spec), 1.0, atol=1e-12)


def test_wave_exact_and_plug_in(points):
    spec = PhysicsSpec("wave", c=C)
    assert np.max(np.abs(wave_residual(field(lambda x, t: 3.0 * t + 2.0 * x), points, spec))) < 1e-6
    unit = PhysicsSpec("wave", c=1.0)
    assert np.max(np.abs(wave_residual(field(lambda x, t: x.sin() * t.sin()), points, unit))) < 1e-6
    assert np.allclose(wave_residual(field(lambda x, t: t * t), points, spec), 2 * C**2, atol=1e-12)


def test_textbook_wave_form(points):
    spec = PhysicsSpec("wave", c=C, textbook_wave=True)
    # u = sin(x - c t) solves u_tt = c^2 u_xx
    assert np.max(np.abs(wave_residual(field(lambda x, t: (x - t * C).sin()), points, spec))) < 1e-6
    assert np.allclose(wave_residual(field(lambda x, t: t * t), points, spec), 2.0, atol=1e-12)


def test_heat_exact_and_plug_in(points):
    spec = PhysicsSpec("heat", k=K)
    exact = field(lambda x, t: (t * -K).exp() * x.sin())
    assert np.max(np.abs(heat_residual(exact, points, spec))) < 1e-6
    assert np.allclose(heat_residual(field(lambda x, t: x * x), points, spec), -2 * K, atol=1e-12)
    assert np.allclose(heat_residual(field(lambda x, t: t), points, spec), 1.0, atol=1e-12)


def test_schrodinger_cases(points):
    spec = PhysicsSpec("schrodinger", hbar=0.8, mass=1.3)
    assert np.all(schrodinger_residual(constant_field(2.0, 2), points, spec) == 0.0)
    omega = spec.hbar * Q**2 / (2 * spec.mass)
    phase = lambda x, t: x * Q - t * omega
    plane = field(lambda x, t: Jet.concat([phase(x, t).cos(), phase(x, t).sin()]), 2)
    r = schrodinger_residual(plane, points, spec)
    assert r.shape == (50, 2) and np.max(np.abs(r)) < 1e-6
    still = field(lambda x, t: Jet.concat([(x * Q).cos(), (x * Q).sin()]), 2)
    modulus = np.hypot(*schrodinger_residual(still, points, spec).T)
    assert np.allclose(modulus, spec.hbar**2 * Q**2 / (2 * spec.mass), rtol=1e-12)


def test_channel_count_checked(points):
    with pytest.raises(InvalidParameterError):
        schrodinger_residual(constant_field(1.0), points)
    with pytest.raises(InvalidParameterError):
        heat_residual(constant_field(1.0, 2), points)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_residual_raises():
    blowup = field(lambda x, t: (x * 1e3).exp())
    with pytest.raises(TrainingDivergenceError):
        transport_residual(blowup, np.array([[1.0, 0.0]]))


def test_invalid_spec():
    for bad in (PhysicsSpec("transport", c=0.0), PhysicsSpec("heat", k=0.0), PhysicsSpec("gravity"),
                PhysicsSpec(t_feature=D.RR, x_feature=D.RR)):
        with pytest.raises(InvalidParameterError):
            bad.validate()


@pytest.mark.parametrize("eq", ["transport", "wave", "heat"])
def test_residuals_match_finite_differences(eq):
    net = init_weights((2, 12, 12, 1), seed=17)
    rng = np.random.default_rng(17)
    net = net.with_parameters([p + rng.normal(scale=0.4, size=p.shape) for p in net.parameters()])
    P = rng.uniform(-1, 1, size=(20, 2))
    spec = PhysicsSpec(eq, c=C, k=K)
    got = {"transport": transport_residual, "wave": wave_residual, "heat": heat_residual}[eq](net, P, spec)
    h = np.longdouble(1e-4)

    def u(dx=0, dt=0):
        Z = P.astype(np.longdouble) + np.array([dx, dt], dtype=np.longdouble) * h
        return tanh_mlp_longdouble(net.weights, net.biases, Z)[:, 0]

    u0 = u()
    ux, ut = (u(1) - u(-1)) / (2 * h), (u(0, 1) - u(0, -1)) / (2 * h)
    uxx, utt = (u(1) - 2 * u0 + u(-1)) / h**2, (u(0, 1) - 2 * u0 + u(0, -1)) / h**2
    want = {"transport": C * ut + ux, "wave": C**2 * utt - uxx, "heat": ut - K * uxx}[eq].astype(float)
    assert np.all(np.abs(got - want) <= 1e-4 * np.maximum(np.abs(want), 1.0))


def test_data_loss_values():
    ident = FunctionField(lambda h: h.column(0), 1)
    assert data_loss(ident, [[3.0], [5.0]], [1.0, 1.0]) == 10.0
    assert data_loss(ident, [[3.0], [5.0]], [3.0, 5.0]) == 0.0
    assert data_loss(ident, [[5.0], [9.0]], [1.0, 1.0]) == 40.0


def test_total_loss_decomposition(points):
    net = init_weights((2, 8, 1), seed=2)
    y = np.sin(points[:, 0])
    for w in (0.0, 0.5, 3.0):
        lb = total_loss(net, points, y, PhysicsSpec("heat"), weight=w)
        assert abs(lb.total - (w * lb.physics + lb.data)) <= 1e-12 * max(1.0, lb.total)
    assert total_loss(net, points, y, PhysicsSpec("heat"), weight=0.0).total == data_loss(net, points, y)
    exact = field(lambda x, t: x - t)
    assert total_loss(exact, points, points[:, 0] - points[:, 1], PhysicsSpec("transport")).total < 1e-20


def _advection():
    return D.load_csv(FIXTURES / "advection.csv")


SMALL = PinnTrainConfig(epochs=150, learning_rate=5e-3, hidden=(12, 12))


@pytest.mark.parametrize("eq", ["transport", "wave", "heat", "schrodinger"])
def test_training_reduces_loss(eq):
    ds = _advection()
    res = train_pinn(ds, ds, PhysicsSpec(eq), SMALL)
    assert len(res.history) == SMALL.epochs
    assert res.final.total < res.initial_total
    assert res.test_rmse >= 0 and res.test_mae >= 0
    totals = np.array([h[3] for h in res.history] + [res.final.total])
    assert np.mean(totals[-10:]) < totals[0]


def test_pure_data_training_and_determinism():
    ds = _advection()
    cfg = PinnTrainConfig(epochs=60, learning_rate=5e-3, hidden=(8,), physics_weight=0.0, seed=3)
    a = train_pinn(ds, ds, PhysicsSpec("transport"), cfg)
    b = train_pinn(ds, ds, PhysicsSpec("transport"), cfg)
    assert a.history == b.history
    assert all(h[1] == 0.0 for h in a.history)
    assert a.final.data < a.history[0][2]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_names_epoch():
    ds = _advection()
    cfg = PinnTrainConfig(epochs=50, learning_rate=1e300, hidden=(4,))
    with pytest.raises(TrainingDivergenceError) as info:
        train_pinn(ds, ds, PhysicsSpec("wave"), cfg)
    assert info.value.epoch >= 1


def test_grid_collocation_runs():
    ds = _advection()
    res = train_pinn(ds, ds, PhysicsSpec("heat", collocation="grid", grid_size=5),
                     PinnTrainConfig(epochs=20, hidden=(6,)))
    assert res.final.physics >= 0


def test_response_surface_and_roundtrip():
    ds = _advection()
    res = train_pinn(ds, ds, PhysicsSpec("transport"), PinnTrainConfig(epochs=20, hidden=(6,)))
    surf = response_surface(res.model, m=7)
    assert surf.grid.shape == (7, 7) and surf.roughness >= 0
    assert surf.x_values[0] == pytest.approx(200.0) and surf.t_values[-1] == pytest.approx(240.0)
    again = PinnModel.from_dict(res.model.to_dict())
    X = ds.select(res.model.features).X
    assert np.array_equal(again.predict(X), res.model.predict(X))
    with pytest.raises(InvalidParameterError):
        response_surface(res.model, m=1)


def test_constant_network_gives_constant_surface():
    ds = _advection()
    res = train_pinn(ds, ds, PhysicsSpec("transport"), PinnTrainConfig(epochs=1, hidden=(4,)))
    model = res.model
    model.net = model.net.with_parameters([np.zeros_like(p) for p in model.net.parameters()])
    surf = response_surface(model, m=4)
    assert np.all(surf.grid == model.target_mean) and surf.roughness == 0.0
