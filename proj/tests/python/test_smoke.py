import math

import pytest

import fblin


def test_dynamics_kinematics():
    prm = fblin.VehicleParams()
    s = fblin.VehicleState(psi=0.3, r=0.5, beta=0.1)
    d = fblin.dynamics(s, fblin.ModelInput(v=1.0, u_delta=0.2), prm)
    assert d.psi == pytest.approx(0.5)
    assert d.delta == pytest.approx(0.2)
    assert math.hypot(d.x_G, d.y_G) == pytest.approx(1.0)


def test_speed_floor_raises():
    prm = fblin.VehicleParams()
    with pytest.raises(fblin.SpeedBelowFloorError):
        fblin.dynamics(fblin.VehicleState(), fblin.ModelInput(v=0.0), prm)


def test_exact_linearisation():
    prm = fblin.VehicleParams()
    cfg = fblin.LinearisationConfig()
    s = fblin.VehicleState(psi=0.4, r=0.8, beta=0.1, delta=0.2)
    cmd = fblin.PointVelocityCommand(v_Px=0.7, v_Py=-0.3)
    u = fblin.linearising_law_nominal(s, cmd, cfg)
    v = fblin.point_p_velocity(s, fblin.ModelInput(v=u.v, u_delta=u.u_delta), cfg, prm)
    assert v.x == pytest.approx(cmd.v_Px, abs=1e-12)
    assert v.y == pytest.approx(cmd.v_Py, abs=1e-12)


def test_closed_loop_is_stable_nominally():
    prm = fblin.VehicleParams()
    cfg = fblin.LinearisationConfig()
    eq = fblin.EquilibriumSpec()
    eq.v_bar = 1.0
    eigs = fblin.closed_loop_eigenvalues(eq, 0.0, prm, cfg)
    assert len(eigs) == 4
    assert max(l.real for l in eigs) < 0


def test_sweep_and_hopf():
    prm = fblin.VehicleParams()
    cfg = fblin.LinearisationConfig()
    cfg.law = fblin.Law.VelocityDirection
    res = fblin.hopf_bisect(0.1, 0.0, 5e-4, prm, cfg)
    assert res.is_hopf
    assert res.dl_star == pytest.approx(1.36e-4, rel=0.2)

    m = fblin.stability_sweep([1.0], -0.01, 0.01, 0.01, prm, cfg)
    assert all(c.verdict == fblin.Verdict.Stable for c in m.cells)


def test_circle_tracking_runs():
    prm = fblin.VehicleParams()
    cfg = fblin.LinearisationConfig()
    opt = fblin.TrackingOptions()
    opt.T = 20.0
    s0 = fblin.VehicleState(psi=math.pi / 2, x_G=1.3, y_G=-(prm.l_f + cfg.p))
    log = fblin.run_circle_tracking(
        fblin.CircleReference(), fblin.TrackingGains(), fblin.DropoutModel(),
        s0, prm, cfg, opt)
    assert len(log.rows) == 2001
    last = log.rows[-1]
    # settled onto the (lagged) circle
    assert math.hypot(last.point_p.x, last.point_p.y) == pytest.approx(0.9, abs=0.1)


def test_config_hash_is_canonical():
    a = fblin.config_hash('{"seed": 5, "vehicle": {"m": 2.0}}')
    b = fblin.config_hash('{"vehicle": {"m": 2.0}, "seed": 5}')
    assert a == b and len(a) == 16
