import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from retinex_unroll.degradation import DegradeSpec, degrade, synthetic_scene
from retinex_unroll.enhancement import (
    EnhanceSpec,
    brighten_luma,
    denoise_reflectance,
    enhance_illuminance,
    recompose,
    solve_gamma,
)
from retinex_unroll.imaging import delta_kernel
from retinex_unroll.pipeline import restore
from retinex_unroll.priors import DataOperator, OperatorSlots
from retinex_unroll.solver import HyperParams

illum_maps = arrays(np.float64, (8, 8), elements=st.floats(0.01, 1.0))


class TestEnhanceIlluminance:
    def test_unit_gamma_is_identity(self, rng):
        l = rng.uniform(0.01, 1.0, (16, 16))
        np.testing.assert_array_equal(enhance_illuminance(l, EnhanceSpec(mode="gamma", gamma=1.0)), l)

    def test_square_root(self):
        l = np.full((4, 4), 0.25)
        np.testing.assert_allclose(enhance_illuminance(l, EnhanceSpec(mode="gamma", gamma=0.5)), 0.5)

    @pytest.mark.parametrize("target", [0.3, 0.5, 0.7])
    def test_target_mean(self, rng, target):
        l = rng.uniform(0.02, 0.2, (32, 32))
        out = enhance_illuminance(l, EnhanceSpec(target=target))
        assert abs(out.mean() - target) <= 1e-4

    def test_solve_gamma_darkening(self, rng):
        l = rng.uniform(0.6, 0.9, (16, 16))
        g = solve_gamma(l, 0.3)
        assert g > 1
        assert abs(np.mean(l**g) - 0.3) <= 1e-4

    @settings(max_examples=50, deadline=None)
    @given(illum_maps, illum_maps, st.floats(0.1, 1.0))
    def test_monotone_in_gamma_mode(self, a, b, gamma):
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        spec = EnhanceSpec(mode="gamma", gamma=gamma)
        assert np.all(enhance_illuminance(lo, spec) <= enhance_illuminance(hi, spec))

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            enhance_illuminance(np.zeros((4, 4)), EnhanceSpec())

    def test_result_in_unit_range(self, rng):
        l = rng.uniform(-0.5, 1.5, (8, 8))
        out = enhance_illuminance(l, EnhanceSpec(mode="gamma", gamma=0.4))
        assert out.min() > 0 and out.max() <= 1

    @pytest.mark.parametrize("kw", [{"gamma": 0.0}, {"gamma": 1.5}, {"target": 1.0}, {"mode": "histogram"}])
    def test_spec_validation(self, kw):
        with pytest.raises(ValueError):
            EnhanceSpec(**kw)

    def test_spec_round_trip(self):
        spec = EnhanceSpec(mode="gamma", gamma=0.6, denoise=DataOperator.tv(0.02))
        assert EnhanceSpec.from_dict(spec.to_dict()) == spec


class TestDenoise:
    def test_variance_decreases_on_flat_patch(self, rng):
        r = 0.5 + rng.normal(0, 0.05, (32, 32, 3))
        out = denoise_reflectance(r, EnhanceSpec())
        assert out.var() < r.var()

    def test_identity_operator(self, rng):
        r = rng.random((8, 8, 3))
        spec = EnhanceSpec(denoise=DataOperator.identity())
        np.testing.assert_array_equal(denoise_reflectance(r, spec), r)

    def test_residual_and_direct_agree(self, rng):
        r = rng.random((16, 16, 3))
        a = denoise_reflectance(r, EnhanceSpec(residual=True))
        b = denoise_reflectance(r, EnhanceSpec(residual=False))
        np.testing.assert_allclose(a, b, atol=1e-15)


class TestRecompose:
    def test_unit_illuminance(self, rng):
        r = rng.random((8, 8, 3))
        np.testing.assert_array_equal(recompose(r, np.ones((8, 8))), r)

    def test_zero_illuminance(self, rng):
        assert not recompose(rng.random((8, 8, 3)), np.zeros((8, 8))).any()

    def test_broadcast(self):
        r = np.ones((2, 2, 3))
        l = np.array([[0.1, 0.2], [0.3, 0.4]])
        np.testing.assert_allclose(recompose(r, l)[:, :, 2], l)

    def test_not_clamped(self):
        assert recompose(np.full((2, 2, 1), 2.0), np.ones((2, 2))).max() == 2.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            recompose(np.ones((4, 4, 3)), np.ones((4, 5)))


class TestBaseline:
    def test_reaches_target_luma(self, rng):
        x = rng.uniform(0.01, 0.2, (32, 32, 3))
        from retinex_unroll.imaging import luma

        assert abs(luma(brighten_luma(x, 0.5)).mean() - 0.5) <= 1e-3

    def test_preserves_chromaticity(self, rng):
        x = rng.uniform(0.01, 0.2, (8, 8, 3))
        out = brighten_luma(x)
        np.testing.assert_allclose(out[:, :, 0] / out[:, :, 1], x[:, :, 0] / x[:, :, 1])


class TestPipeline:
    def test_identity_configuration(self):
        gt = synthetic_scene(64, seed=3)
        x, k, _ = degrade(gt, DegradeSpec("delta", kernel_size=3, illum_scale=1.0, noise_sigma=0.0))
        out = restore(
            x,
            k,
            HyperParams(),
            OperatorSlots.identity(),
            EnhanceSpec(mode="gamma", gamma=1.0, denoise=DataOperator.identity()),
        )
        assert np.max(np.abs(out.image - gt)) <= 0.02

    def test_brightens_low_light(self):
        gt = synthetic_scene(64, seed=4)
        x, k, _ = degrade(gt, DegradeSpec("gaussian", illum_scale=0.2, noise_sigma=0.005, seed=4))
        out = restore(x, k)
        assert out.image.mean() > 2 * x.mean()
        assert out.illuminance.shape == (64, 64)
        assert len(out.state.trace) == 5
