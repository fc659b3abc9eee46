"""Twin-backend equivalence on the same presampled randomness.

Both backends consume identical pre-drawn noise, so they follow the same
trajectory and any drift is pure rounding: numpy reduces dot products and
exp vectorized (pairwise/SIMD) while the compiled loops accumulate
sequentially through libm, which moves the last ulp.  The checks below
therefore demand exact integer bookkeeping and float agreement far below
anything an algorithmic difference could produce, rather than bitwise
equality."""

import os
import subprocess
import sys

import numpy as np
import pytest

from acbench import _kernels, oracle
from acbench._kernels import backend_name, get_backend
from acbench.critic import StepSchedule
from acbench.features import RbfFeatureMap

try:
    get_backend("compiled")
    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False

needs_compiled = pytest.mark.skipif(not HAVE_COMPILED,
                                    reason="compiled extension not built")

SCHEDULES = {
    "td0": StepSchedule.td_finite(omega=0.1, gamma=0.9),
    "gtd": StepSchedule.gtd(c_alpha=20.0),
    "agtd": StepSchedule.agtd(c_alpha=100.0),
}
METHOD_ID = {"td0": 0, "gtd": 1, "agtd": 2}


def _desk_chunk_inputs(method, n=2000, seed=0):
    m = oracle.desk_mdp()
    pol = oracle.uniform_policy(m)
    feats = oracle.desk_features_onehot()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    pairs, nxt = oracle.presample_tuples(m, pol, n, rng)
    xi_star = oracle.td_fixed_point(m, pol, feats)
    cks = np.array([10, 100, 1000, n], dtype=np.int64)
    ak, aa, ab, bexp = SCHEDULES[method].kernel_coding()
    p = feats.dim
    return dict(mid=METHOD_ID[method], pairs=pairs, nxt=nxt,
                phi=feats.matrix, r=m.R.ravel(), gamma=m.gamma,
                coding=(ak, aa, ab, bexp), reg=SCHEDULES[method].reg,
                cks=cks, xi_star=xi_star, p=p)


def _run_chunk(impl, inp):
    p = inp["p"]
    xi = np.zeros(p)
    z = np.zeros(p if inp["mid"] == 2 else 1)
    y = np.zeros(1)
    err = np.zeros(len(inp["cks"]))
    ak, aa, ab, bexp = inp["coding"]
    t = impl.critic_chunk(inp["mid"], xi, z, y, 0, inp["pairs"], inp["nxt"],
                          inp["phi"], inp["r"], inp["gamma"], 20.0,
                          ak, aa, ab, bexp, inp["reg"], inp["cks"],
                          inp["xi_star"], err)
    return t, xi, z, y, err


@needs_compiled
@pytest.mark.parametrize("method", ["td0", "gtd", "agtd"])
def test_critic_chunk_backends_agree(method):
    inp = _desk_chunk_inputs(method)
    t_py, xi_py, z_py, y_py, err_py = _run_chunk(get_backend("python"), inp)
    t_c, xi_c, z_c, y_c, err_c = _run_chunk(get_backend("compiled"), inp)
    assert t_py == t_c == 2000
    # measured drift is a few ulps (projection norms accumulate in a
    # different order); a formula-level bug would sit many decades higher
    assert np.allclose(xi_py, xi_c, rtol=1e-10, atol=1e-12)
    assert np.allclose(z_py, z_c, rtol=1e-10, atol=1e-12)
    assert np.allclose(y_py, y_c, rtol=1e-10, atol=1e-12)
    assert np.allclose(err_py, err_c, rtol=1e-10, atol=1e-12)
    assert np.all(err_py > 0)


def test_critic_chunk_resumes_the_step_counter():
    impl = get_backend("python")
    inp = _desk_chunk_inputs("gtd", n=100)
    # one 100-step pass equals two 50-step passes chained through t
    t1, xi1, z1, y1, _ = _run_chunk(impl, inp)
    xi = np.zeros(inp["p"]); z = np.zeros(1); y = np.zeros(1)
    ak, aa, ab, bexp = inp["coding"]
    err = np.zeros(len(inp["cks"]))
    t = impl.critic_chunk(inp["mid"], xi, z, y, 0, inp["pairs"][:50],
                          inp["nxt"][:50], inp["phi"], inp["r"], inp["gamma"],
                          20.0, ak, aa, ab, bexp, inp["reg"], inp["cks"],
                          inp["xi_star"], err)
    t = impl.critic_chunk(inp["mid"], xi, z, y, t, inp["pairs"][50:],
                          inp["nxt"][50:], inp["phi"], inp["r"], inp["gamma"],
                          20.0, ak, aa, ab, bexp, inp["reg"], inp["cks"],
                          inp["xi_star"], err)
    assert t == t1 == 100
    assert np.array_equal(xi, xi1)


def _nav_inputs(seed=0, nroll=3, length=50):
    feats = RbfFeatureMap.default_grid()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    critic_noise = rng.standard_normal((nroll, length + 1, 2))
    actor_noise = rng.standard_normal((length, 2))
    eval_noise = rng.standard_normal((4, length, 2))
    return feats, critic_noise, actor_noise, eval_noise


_GEOM = dict(start=(2.0, 2.0), tgt=(-2.0, -2.0), inner=0.5, outer=4.0,
             step=0.5, tol=0.5, r_out=-11.0, r_goal=-0.1, r_step=-1.0)


def _run_nav(impl, method, feats, critic_noise, actor_noise, iters=3):
    g = _GEOM
    p = feats.dim
    theta = np.zeros((p, 2))
    xi = np.zeros(p)
    ak, aa, ab, bexp = SCHEDULES[method].kernel_coding()
    t, frozen = 0, 0
    eta_scale = 1e-4 / (0.1 * 0.5)
    for _ in range(iters):
        t, frozen = impl.nav_iteration(
            METHOD_ID[method], theta, xi, t, frozen, feats.centers, 0.5,
            g["start"][0], g["start"][1], g["tgt"][0], g["tgt"][1],
            g["inner"], g["outer"], g["step"], g["tol"],
            g["r_out"], g["r_goal"], g["r_step"], 0.9, 0.5, eta_scale,
            100.0, 20.0, ak, aa, ab, bexp, SCHEDULES[method].reg,
            critic_noise, actor_noise)
    return theta, xi, t, frozen


@needs_compiled
@pytest.mark.parametrize("method", ["td0", "gtd", "agtd"])
def test_nav_iteration_backends_agree(method):
    feats, critic_noise, actor_noise, _ = _nav_inputs()
    th_py, xi_py, t_py, fr_py = _run_nav(get_backend("python"), method,
                                         feats, critic_noise, actor_noise)
    th_c, xi_c, t_c, fr_c = _run_nav(get_backend("compiled"), method,
                                     feats, critic_noise, actor_noise)
    assert (t_py, fr_py) == (t_c, fr_c)
    assert t_py == 3 * critic_noise.shape[0] * actor_noise.shape[0]
    # identical pre-drawn noise keeps both backends on the same trajectory;
    # the residual is matvec/exp rounding, measured around 1e-13 here
    assert np.allclose(th_py, th_c, rtol=1e-9, atol=1e-9)
    assert np.allclose(xi_py, xi_c, rtol=1e-9, atol=1e-9)
    assert np.linalg.norm(th_py) > 0 and np.linalg.norm(xi_py) > 0


@needs_compiled
def test_nav_eval_backends_agree():
    feats, critic_noise, actor_noise, eval_noise = _nav_inputs()
    g = _GEOM
    theta, _, _, _ = _run_nav(get_backend("python"), "gtd", feats,
                              critic_noise, actor_noise)
    outs = []
    for name in ("python", "compiled"):
        impl = get_backend(name)
        outs.append(impl.nav_eval(
            theta, feats.centers, 0.5,
            g["start"][0], g["start"][1], g["tgt"][0], g["tgt"][1],
            g["inner"], g["outer"], g["step"], g["tol"],
            g["r_out"], g["r_goal"], g["r_step"], 0.5, eval_noise))
    assert all(abs(a - b) <= 1e-9 for a, b in zip(outs[0], outs[1]))
    mean_ret, dir_gap, score_stat = outs[0]
    assert -11.0 * eval_noise.shape[1] <= mean_ret <= 0.0
    assert 0.0 <= dir_gap <= 2.0
    assert score_stat > 0.0


@needs_compiled
def test_rbf_batch_backends_agree_including_underflow(rng):
    feats = RbfFeatureMap.default_grid()
    pts = np.vstack([rng.uniform(-6, 6, size=(40, 2)),
                     [[1e3, 1e3], [-500.0, 0.0]]])
    py = np.asarray(get_backend("python").rbf_batch(pts, feats.centers, 0.5, True))
    cc = np.asarray(get_backend("compiled").rbf_batch(pts, feats.centers, 0.5, True))
    # vectorized exp vs libm exp differ in the last ulp on some inputs
    assert np.allclose(py, cc, rtol=0.0, atol=1e-13)
    assert np.all(np.isfinite(py))
    # the underflow guard is exact on both sides: zero vector, not 0/0
    assert np.all(py[-2:] == 0.0)
    assert np.all(cc[-2:] == 0.0)


def test_rbf_batch_matches_the_feature_map(rng):
    feats = RbfFeatureMap.default_grid()
    pts = rng.uniform(-5, 5, size=(10, 2))
    inv2s2 = 1.0 / (2.0 * feats.bandwidth ** 2)
    got = _kernels.rbf_batch(pts, feats.centers, inv2s2, True)
    assert np.allclose(got, feats.batch(pts), atol=1e-12)


def test_backend_selection_api():
    assert backend_name() in ("python", "compiled")
    assert backend_name() == _kernels.BACKEND
    assert get_backend("pure") is get_backend("python")
    with pytest.raises(ValueError):
        get_backend("fortran")


def test_backend_env_var_forces_the_fallback():
    env = dict(os.environ, ACBENCH_BACKEND="python")
    out = subprocess.run(
        [sys.executable, "-c",
         "import acbench; print(acbench.BACKEND)"],
        capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"
    env["ACBENCH_BACKEND"] = "bogus"
    out = subprocess.run(
        [sys.executable, "-c", "import acbench"],
        capture_output=True, text=True, env=env)
    assert out.returncode != 0
