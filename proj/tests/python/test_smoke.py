import math
import pathlib
import subprocess

import pytest

import nsr

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_vehicle_validity_numbers():
    t, s = nsr.builtin_system("vehicle5d"), nsr.builtin_system("vehicle3d")
    r = nsr.check_validity(t, s, L_V=23.0, L_K=8.32e-5, eta=0.3, gamma=0.016,
                           e_state=0.002, e_input=0.0005)
    assert abs(r["11"]["lhs"] - 0.00222501) <= 1e-8
    assert abs(r["12"]["lhs"] - 0.025875) <= 1e-9
    assert abs(r["13"]["lhs"] - 0.023) <= 1e-12
    assert all(r[k]["pass"] for k in ("11", "12", "13"))


def test_precheck_inverts_13():
    p = nsr.builtin_system("pendulum")
    r = nsr.precheck(p, p, L_V_max=10.0, L_K_max=0.0, eta=0.1, gamma=0.02, e_input=0.01)
    assert r["e_max_13"] == pytest.approx(0.02)


def test_joint_count_and_cover():
    t, s = nsr.builtin_system("vehicle5d"), nsr.builtin_system("vehicle3d")
    unfiltered, filtered = nsr.joint_count(t, s, eps=0.02, e_state=0.002, e_input=0.0005)
    assert unfiltered > 5e7 and filtered <= unfiltered
    c = nsr.nearest_center([0.0], [1.0], 0.25, [0.3])
    assert c == [0.375]


def test_system_step_and_errors():
    p = nsr.builtin_system("pendulum")
    assert len(p.step([0.0, 0.0], [0.0])) == 2
    with pytest.raises(nsr.NsrError):
        nsr.builtin_system("no_such_system")


def test_mlp_bound_holds():
    net = nsr.make_mlp([3, 8, 1], "relu", seed=4)
    L = net.lipschitz_upper_bound()
    a, b = [0.1, -0.2, 0.3], [0.12, -0.25, 0.31]
    lhs = abs(net(a)[0] - net(b)[0])
    assert lhs <= L * max(abs(x - y) for x, y in zip(a, b)) + 1e-15
    assert math.isfinite(L)


def test_certify_matches_cli(tmp_path):
    nsr_cli = ROOT / "build" / "tools" / "nsr"
    if not nsr_cli.exists():
        pytest.skip("command-line tool not built")
    cfg = ROOT / "tests" / "cli" / "scalar.cfg"
    subprocess.run([str(nsr_cli), "train", "--config", str(cfg), "--out", str(tmp_path), "--quiet"],
                   check=True)
    text = nsr.certify(str(cfg), str(tmp_path / "V.ckpt"), str(tmp_path / "K.ckpt"))
    assert "verdict = pass" in text
    assert nsr.config_hash(str(cfg)) in (tmp_path / "V.ckpt").read_text()
