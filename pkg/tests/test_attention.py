import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alanet import tensor as T
from alanet.attention import ALCM, LASB, LCAM, LSCA, LSCT, MFDM, MfdmConfig, lsct_forward
from alanet.errors import ConfigurationError, DimensionError
from alanet.gradcheck import grad_check
from alanet.tensor import Parameter, Tensor


def _zero(module):
    for p in module.parameters():
        p.data[...] = 0.0


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


# ---------------------------------------------------------------- LCAM

def test_lcam_no_language_is_channel_path(rng):
    lcam = LCAM(4, rng)
    f = Tensor(rng.standard_normal((4, 3, 3)))
    out, state = lcam(f, None)
    a = T.sigmoid(lcam.chan_mlp(T.pool(f, "spatial-average"))).data
    assert np.array_equal(out.data, f.data * a.reshape(4, 1, 1) + f.data)
    assert state.M_L is None and state.sigma_S is None


def test_lcam_zero_weights_hand_case():
    lcam = LCAM(2, np.random.default_rng(0))
    _zero(lcam)
    f = Tensor(np.array([1.0, -2.0]).reshape(2, 1, 1))
    out, state = lcam(f, Tensor([[0.3, 0.7]]))
    assert state.sigma_S.data.tolist() == [[0.5, 0.5]]
    assert state.a_lang.data.tolist() == [[0.5, 0.5]]
    assert state.a_chan.data.tolist() == [[0.5, 0.5]]
    assert np.array_equal(out.data, 1.5 * f.data)


def test_lcam_similarity_is_outer_product(rng):
    lcam = LCAM(3, rng)
    f, l = Tensor(rng.random((3, 4, 4))), Tensor(rng.standard_normal((1, 3)))
    _, state = lcam(f, l)
    u = lcam.proj_lang(l).data
    v = lcam.proj_img(T.pool(f, "spatial-average")).data
    assert np.allclose(state.M_L.data, u.T @ v, atol=1e-15)
    assert np.allclose(state.S_L.data, state.M_L.data.mean(axis=0, keepdims=True), atol=1e-15)


def test_lcam_language_only_ablation(rng):
    lcam = LCAM(2, rng, use_channel=False)
    f = Tensor(rng.random((2, 2, 2)))
    out, state = lcam(f, None)
    assert out is f and state.a_chan is None
    out, state = lcam(f, Tensor([[1.0, 0.0]]))
    gate = (state.sigma_S.data * state.a_lang.data).reshape(2, 1, 1)
    assert np.allclose(out.data, f.data * gate + f.data, atol=1e-15)


def test_lcam_rejects_wrong_language_width(rng):
    with pytest.raises(DimensionError):
        LCAM(2, rng)(Tensor(np.ones((2, 2, 2))), Tensor(np.ones((1, 3))))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), c=st.integers(1, 6), hw=st.integers(1, 4))
def test_lcam_competition_weights_complement(seed, c, hw):
    rng = np.random.default_rng(seed)
    lcam = LCAM(c, rng)
    _, state = lcam(Tensor(rng.standard_normal((c, hw, hw)) * 3), Tensor(rng.standard_normal((1, c)) * 3))
    s = state.sigma_S.data
    assert np.all((s > 0) & (s < 1))
    assert np.all(s + T.complement(state.sigma_S).data == 1.0)


# ---------------------------------------------------------------- ALCM

@pytest.mark.parametrize("bias,target", [(60.0, "p_l"), (-60.0, "p_i")])
def test_alcm_gate_saturation(rng, bias, target):
    alcm = ALCM(3, rng)
    alcm.gate.weight.data[...] = 0.0
    alcm.gate.bias.data[...] = bias
    cal, state = alcm(Tensor(rng.random((3, 4, 4))), Tensor(rng.standard_normal((1, 3))))
    assert np.allclose(cal.data, getattr(state, target).data, rtol=0, atol=1e-15)


def _cos(a, b):
    a, b = a.ravel(), b.ravel()
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def test_alcm_pulls_language_toward_image():
    rng = np.random.default_rng(3)
    for _ in range(30):
        alcm = ALCM(4, rng)
        cal, s = alcm(Tensor(rng.random((4, 3, 3))), Tensor(rng.standard_normal((1, 4))))
        assert np.all(s.sigma_c.data < 1)
        assert _cos(cal.data, s.p_i.data) >= _cos(s.p_l.data, s.p_i.data) - 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_alcm_gate_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    _, s = ALCM(3, rng)(Tensor(rng.standard_normal((3, 2, 2)) * 5), Tensor(rng.standard_normal((1, 3)) * 5))
    assert np.all((s.sigma_c.data > 0) & (s.sigma_c.data < 1))


# ---------------------------------------------------------------- LSCA / LSCT

def test_lsca_no_language_identity(rng):
    f = Tensor(rng.standard_normal((2, 3, 3)))
    out, state = LSCA(2, rng)(f, None)
    assert np.array_equal(out.data, f.data) and state is None


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), c=st.integers(1, 5), h=st.integers(1, 4), w=st.integers(1, 4))
def test_lsca_rows_stochastic(seed, c, h, w):
    rng = np.random.default_rng(seed)
    lsca = LSCA(c, rng)
    _, s = lsca(Tensor(rng.standard_normal((c, h, w)) * 4), Tensor(rng.standard_normal((1, c)) * 4))
    assert s.M_SL.shape == (c, c) and s.M_LC.shape == (h * w, c) and s.M_LCSL.shape == (h * w, c)
    for m in (s.M_SL_soft, s.M_LC_soft, s.M_LCSL):
        assert np.allclose(m.data.sum(axis=-1), 1.0, rtol=0, atol=1e-9)


def test_lsca_2x2_product_row_sums():
    rng = np.random.default_rng(7)
    lsca = LSCA(2, rng)
    _, s = lsca(Tensor(rng.standard_normal((2, 1, 1))), Tensor(rng.standard_normal((1, 2))))
    a, b = s.M_LC_soft.data, s.M_SL_soft.data
    hand = [[a[0, 0] * b[0, 0] + a[0, 1] * b[1, 0], a[0, 0] * b[0, 1] + a[0, 1] * b[1, 1]]]
    assert np.allclose(s.M_LCSL.data, hand, atol=1e-15)
    assert abs(sum(hand[0]) - 1.0) <= 1e-12


def test_lsca_modulation_formula(rng):
    lsca = LSCA(3, rng)
    f, l = Tensor(rng.random((3, 2, 4))), Tensor(rng.standard_normal((1, 3)))
    out, s = lsca(f, l)
    mod = s.M_LCSL.data.T.reshape(3, 2, 4)
    assert np.allclose(out.data, f.data + f.data * mod, atol=1e-15)


def test_lsct_fresh_block_without_language_is_identity(rng):
    f = Tensor(rng.standard_normal((3, 4, 4)))
    assert np.array_equal(lsct_forward(f, None, LSCT(3, rng)).data, f.data)


@pytest.mark.parametrize("shape", [(2, 4, 4), (4, 2, 6), (1, 1, 1)])
def test_lsct_shape(rng, shape):
    out = LSCT(shape[0], rng)(Tensor(rng.standard_normal(shape)), Tensor(rng.standard_normal((1, shape[0]))))
    assert out.shape == shape


def test_lsct_gradcheck(rng):
    lsct = LSCT(2, rng)
    for p in lsct.parameters():  # move off the zero init so every path carries gradient
        p.data[...] = rng.standard_normal(p.shape) * 0.5
    f, l = Parameter(rng.random((2, 4, 4))), Parameter(rng.standard_normal((1, 2)))
    r = grad_check(lambda *_: T.sum_(lsct(f, l)), [f, l] + lsct.parameters(), tol=1e-4, h=1e-4)
    assert r.passed, r.line()


# ---------------------------------------------------------------- MFDM

def test_mfdm_groups_split():
    assert MfdmConfig().groups(8) == [(0, 2), (2, 4), (4, 6), (6, 8)]
    assert MfdmConfig().groups(10) == [(0, 4), (4, 6), (6, 8), (8, 10)]
    assert MfdmConfig((5, 3)).groups(5) == [(0, 2), (2, 5)]
    with pytest.raises(ConfigurationError):
        MfdmConfig().groups(3)
    with pytest.raises(ConfigurationError):
        MfdmConfig((2, 3)).groups(4)


def test_mfdm_zero_kernels_is_identity(rng):
    m = MFDM(8, rng)
    _zero(m)
    f_t, f_r = Tensor(rng.standard_normal((8, 4, 4))), Tensor(rng.standard_normal((8, 4, 4)))
    o_t, o_r = m(f_t, f_r)
    assert np.array_equal(o_t.data, f_t.data) and np.array_equal(o_r.data, f_r.data)


def test_mfdm_single_group_identity_kernel(rng):
    m = MFDM(2, rng, MfdmConfig((1,)))
    m.t_convs[0].weight.data[...] = np.eye(2).reshape(2, 2, 1, 1)
    f_t = Tensor(rng.standard_normal((2, 3, 3)))
    o_t, _ = m(f_t, Tensor(np.ones((2, 3, 3))))
    ref = T.conv2d(f_t, m.t_fuse.weight, m.t_fuse.bias).data + f_t.data
    assert np.allclose(o_t.data, ref, atol=1e-15)


@pytest.mark.parametrize("c", [8, 16])
def test_mfdm_shapes(rng, c):
    o_t, o_r = MFDM(c, rng)(Tensor(rng.random((c, 4, 4))), Tensor(rng.random((c, 4, 4))))
    assert o_t.shape == o_r.shape == (c, 4, 4)


def test_mfdm_rejects_mismatched_streams(rng):
    with pytest.raises(DimensionError):
        MFDM(4, rng)(Tensor(np.ones((4, 2, 2))), Tensor(np.ones((4, 4, 4))))


# ---------------------------------------------------------------- LASB

def test_lasb_without_language_composes_bypasses(rng):
    lasb = LASB(4, rng)
    f_t, f_r = Tensor(rng.random((4, 4, 4))), Tensor(rng.random((4, 4, 4)))
    o_t, o_r = lasb(f_t, f_r)
    r_t, r_r = lasb.mfdm(lasb.lcam_t(f_t, None)[0], lasb.lcam_r(f_r, None)[0])
    assert np.array_equal(o_t.data, r_t.data) and np.array_equal(o_r.data, r_r.data)


def test_lasb_partial_language(rng):
    lasb = LASB(4, rng)
    f_t, f_r = Tensor(rng.random((4, 4, 4))), Tensor(rng.random((4, 4, 4)))
    l_t = Tensor(rng.standard_normal((1, 4)))
    o_t, o_r = lasb(f_t, f_r, l_t, None)
    g_t, st_t = lasb.lcam_t(f_t, l_t)
    g_r, st_r = lasb.lcam_r(f_r, None)
    assert st_t.M_L is not None and st_r.M_L is None
    r_t, r_r = lasb.mfdm(g_t, g_r)
    assert np.array_equal(o_t.data, r_t.data) and np.array_equal(o_r.data, r_r.data)
    # the reflection gate is the one it had with no caption at all
    assert np.array_equal(g_r.data, lasb.lcam_r(f_r, None)[0].data)
