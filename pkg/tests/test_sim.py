import numpy as np
import pytest

from cablefield.assembly import SystemNode, build_closed_loop, hodge_extremes
from cablefield.certify import build_colocated_output
from cablefield.errors import ConfigError, DomainError
from cablefield.maxwell import FieldMaterials
from cablefield.sim import (
    InputSignal,
    MidpointStepper,
    SimConfig,
    energy_ledger,
    lifted_state,
    random_state,
    reverse_run,
    run,
    smooth_state,
    step_midpoint,
    wp_bound_series,
    write_trajectory_csv,
    zero_state,
)
from cablefield.tline import LineMaterials

from test_assembly import make_setup


@pytest.fixture(scope="module")
def lossless():
    return make_setup(n=(6, 6, 10), n_line=12)


@pytest.fixture(scope="module")
def lossy():
    return make_setup(n=(6, 6, 10), n_line=12,
                      line_mats=LineMaterials(k=1, R=0.4, G=0.2),
                      field_mats=FieldMaterials(sigma=0.3))


def skew_node(k):
    W_B = np.hstack([np.eye(2 * k), np.zeros((2 * k, 2 * k))])
    W_C = np.hstack([np.zeros((2 * k, 2 * k)), np.eye(2 * k)])
    return SystemNode(W_B_inp=W_B, W_B_0=np.zeros((0, 4 * k)), W_C_out=W_C[:2 * k], k=k), W_C


def strict_node(k):
    W_B = np.hstack([np.eye(2 * k), np.eye(2 * k)])
    W_C = build_colocated_output(W_B)
    return SystemNode(W_B_inp=W_B, W_B_0=np.zeros((0, 4 * k)), W_C_out=W_C, k=k), W_C


def test_zero_input_zero_state(lossless):
    _, _, _, _, _, bundle, _ = lossless
    node, W_C = strict_node(bundle.k)
    loop = build_closed_loop(bundle, node)
    cfg = SimConfig(dt=1e-2, T=0.1, input=InputSignal(m=node.m))
    traj = run(loop, cfg, W_C_full=W_C)
    assert np.abs(traj.energy).max() == 0.0
    assert np.abs(traj.y).max() == 0.0
    assert traj.ledger["max_residual"] == 0.0


def test_energy_conserved_skew_lossless(lossless):
    _, _, _, _, _, bundle, _ = lossless
    node, _ = skew_node(bundle.k)
    loop = build_closed_loop(bundle, node)
    x0 = random_state(bundle, seed=1)
    cfg = SimConfig(dt=5e-3, T=5.0, input=InputSignal(m=node.m))
    traj = run(loop, cfg, x0=x0)
    drift = np.abs(traj.energy - traj.energy[0]).max() / traj.energy[0]
    assert drift <= 1e-10


def test_energy_monotone_lossy(lossy):
    _, _, _, _, _, bundle, _ = lossy
    node, _ = strict_node(bundle.k)
    loop = build_closed_loop(bundle, node)
    x0 = random_state(bundle, seed=2)
    cfg = SimConfig(dt=2e-2, T=2.0, input=InputSignal(m=node.m))
    traj = run(loop, cfg, x0=x0)
    assert np.all(np.diff(traj.energy) <= 1e-12 * traj.energy[0])
    assert traj.energy[-1] < traj.energy[0]


def test_reversibility(lossless):
    _, _, _, _, _, bundle, _ = lossless
    node, _ = skew_node(bundle.k)
    loop = build_closed_loop(bundle, node)
    x0 = random_state(bundle, seed=3)
    cfg = SimConfig(dt=1e-2, T=1.0, input=InputSignal(m=node.m))
    traj = run(loop, cfg, x0=x0)
    back = reverse_run(loop, traj.x_final, cfg.dt, int(round(cfg.T / cfg.dt)))
    err = np.linalg.norm(back - x0) / np.linalg.norm(x0)
    assert err <= 1e-8


def test_flow_linearity(lossless):
    _, _, _, _, _, bundle, _ = lossless
    node, W_C = strict_node(bundle.k)
    loop = build_closed_loop(bundle, node)
    cfg = SimConfig(dt=1e-2, T=0.2,
                    input=InputSignal(m=node.m, kind="sine", freq=2.0))
    xa = random_state(bundle, seed=4)
    xb = random_state(bundle, seed=5)
    fa = run(loop, cfg, x0=xa).x_final
    fb = run(loop, cfg, x0=xb).x_final
    fab = run(loop, cfg, x0=xa + xb).x_final
    # affine in x0 for fixed u: f(a) + f(b) - f(0) = f(a + b)
    f0 = run(loop, cfg, x0=zero_state(bundle)).x_final
    assert np.linalg.norm(fab - (fa + fb - f0)) <= 1e-9 * np.linalg.norm(fab)


def test_ledger_exact_at_midpoints_and_second_order_in_records(lossy):
    # the recorded-trapezoid ledger residual decreases at order 2 in dt;
    # smooth initial data keeps the quadrature constant small
    _, _, _, _, _, bundle, _ = lossy
    node, W_C = strict_node(bundle.k)
    loop = build_closed_loop(bundle, node)
    x0 = smooth_state(bundle, scale=1.0)
    res = []
    for dt in (2e-3, 1e-3, 5e-4):
        cfg = SimConfig(dt=dt, T=0.4,
                        input=InputSignal(m=node.m, kind="sine", freq=1.5,
                                          amplitude=0.5 * np.ones(node.m)))
        traj = run(loop, cfg, x0=x0, W_C_full=W_C)
        res.append(traj.ledger["max_residual"] / traj.ledger["peak_energy"])
    rates = np.log2(res[0] / res[1]), np.log2(res[1] / res[2])
    assert 1.5 < min(rates) and max(rates) < 2.5
    assert res[-1] <= 1e-5


def test_ledger_partial_without_completion(lossy):
    _, _, _, _, _, bundle, _ = lossy
    node, _ = strict_node(bundle.k)
    loop = build_closed_loop(bundle, node)
    cfg = SimConfig(dt=1e-2, T=0.1, input=InputSignal(m=node.m, kind="step"))
    traj = run(loop, cfg)
    assert traj.ledger["partial"]
    assert np.isnan(traj.ledger["max_residual"])


def test_wp_bound_series(lossy):
    _, _, _, _, _, bundle, _ = lossy
    node, W_C = strict_node(bundle.k)
    loop = build_closed_loop(bundle, node)
    from cablefield.certify import BoundaryConditionSpec, wellposedness_constants
    lo, hi = hodge_extremes(bundle)
    spec = BoundaryConditionSpec(W_B_inp=node.W_B_inp, W_B_0=node.W_B_0,
                                 W_C_out=node.W_C_out, k=bundle.k)
    cert = wellposedness_constants(spec, lo, hi)
    cfg = SimConfig(dt=5e-3, T=0.5,
                    input=InputSignal(m=node.m, kind="sine", freq=1.0))
    traj = run(loop, cfg, x0=random_state(bundle, seed=7), W_C_full=W_C)
    chk = wp_bound_series(traj, cert.c_t)
    assert chk["satisfied"]


def test_stepper_oneshot_matches_class(lossless):
    _, _, _, _, _, bundle, _ = lossless
    node, _ = strict_node(bundle.k)
    loop = build_closed_loop(bundle, node)
    x0 = random_state(bundle, seed=8)
    u = np.ones(node.m)
    a = step_midpoint(loop, x0, u, 1e-2)
    b, _ = MidpointStepper(loop, 1e-2).step(x0, u)
    assert np.allclose(a, b)


def test_run_rejects_bad_initial_shape(lossless):
    _, _, _, _, _, bundle, _ = lossless
    node, _ = strict_node(bundle.k)
    loop = build_closed_loop(bundle, node)
    cfg = SimConfig(dt=1e-2, T=0.1, input=InputSignal(m=node.m))
    with pytest.raises(DomainError):
        run(loop, cfg, x0=np.zeros(3))


def test_input_signals():
    sig = InputSignal(m=2, kind="sine", amplitude=[1.0, 2.0], freq=0.5)
    assert np.allclose(sig(0.0), [0.0, 0.0])
    assert np.allclose(sig(0.5), [1.0, 2.0])
    step = InputSignal(m=1, kind="step", t_on=0.1, ramp=0.2)
    assert step(0.05)[0] == 0.0
    assert step(0.31)[0] == 1.0
    assert 0.0 < step(0.2)[0] < 1.0
    with pytest.raises(ConfigError):
        InputSignal(m=1, kind="wiggle")
    tab = InputSignal(m=1, kind="table", table_t=[0.0, 1.0], table_u=[[0.0], [2.0]])
    assert abs(tab(0.5)[0] - 1.0) < 1e-14


def test_lifted_initial_state():
    import numpy as np
    from cablefield.geometry import GeometrySpec, StraightSegment
    from cablefield.maxwell import assemble_curls, build_grid, surface_trace
    from cablefield.coupling import assemble_P_el
    from cablefield.assembly import assemble_system
    from cablefield.tline import assemble_line, build_line_grid

    spec = GeometrySpec(
        box=np.array([[0, 1], [0, 1], [0, 1]], dtype=float),
        cables=[StraightSegment(p0=(0.5, 0.5, 0.15), direction=(0, 0, 1),
                                length=0.7, radius=0.18, line=0)],
        collar_halfwidth=0.5,
    )
    grid = build_grid(spec, (24, 24, 24))
    lg = build_line_grid(12, 1)
    chart = spec.chart(0, n_eta=12, n_theta=16)
    bundle = assemble_system(
        assemble_line(LineMaterials(k=1), lg),
        assemble_curls(grid, FieldMaterials()),
        coupling=assemble_P_el([chart], lg),
        traces=surface_trace(grid, [chart]),
    )
    V0 = np.sin(np.pi * lg.nodes)
    x0 = lifted_state(bundle, grid, chart, lg, V0)
    lay = bundle.layout
    assert np.abs(x0[lay.sl_V] - V0).max() <= 1e-12     # unit C
    assert np.abs(x0[lay.sl_E]).max() > 0
    assert bundle.energy(x0) > 0


def test_csv_writer(tmp_path, lossy):
    _, _, _, _, _, bundle, _ = lossy
    node, W_C = strict_node(bundle.k)
    loop = build_closed_loop(bundle, node)
    cfg = SimConfig(dt=1e-2, T=0.1,
                    input=InputSignal(m=node.m, kind="sine"))
    traj = run(loop, cfg, x0=random_state(bundle, seed=9), W_C_full=W_C)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(traj, str(path))
    header = path.read_text().splitlines()[0].split(",")
    assert header[:6] == ["t", "energy", "supplied", "dissipated",
                          "boundary_term", "residual"]
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape[0] == len(traj.times)
