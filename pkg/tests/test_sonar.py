import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.sonar.broadcast import Window, make_broadcast, welch_window
from src.sonar.echo_model import (
    directivity_gain,
    echo_transfer,
    glint_ranges,
    iso9613_absorption,
    round_trip_delay,
)
from src.sonar.geometry import angle_between, boresight
from src.sonar.scene import (
    Target,
    TimeSeries,
    echo_delay,
    echo_support,
    record_length,
    simulate_from_spec,
    simulate_scene,
    synthesize_echo,
)
from src.utils.errors import ParameterError

BESSEL_J1_FIRST_ZERO = 3.8317059702075123


class TestGeometry:
    def test_boresight_pitch(self):
        axis = boresight(5.0)
        assert np.linalg.norm(axis) == pytest.approx(1.0)
        assert angle_between(axis, [0.0, 1.0, 0.0]) == pytest.approx(np.deg2rad(5.0))

    def test_ear_axes_are_mirrored(self, geom):
        _, left = geom.ear("left")
        _, right = geom.ear("right")
        assert left[0] == pytest.approx(-right[0])
        assert left[1:] == pytest.approx(right[1:])

    def test_unknown_ear(self, geom):
        with pytest.raises(ParameterError):
            geom.ear("middle")


class TestBroadcast:
    def test_sample_count(self):
        assert make_broadcast(3e-3).n_samples == 3000
        assert make_broadcast(0.5e-3).n_samples == 500

    @pytest.mark.parametrize("duration", [0.4e-3, 10.5e-3])
    def test_duration_out_of_range(self, duration):
        with pytest.raises(ParameterError):
            make_broadcast(duration)

    def test_welch_window_shape(self):
        w = welch_window(101)
        assert w[0] == pytest.approx(0.0)
        assert w[-1] == pytest.approx(0.0)
        assert w[50] == pytest.approx(1.0)

    def test_rect_window_keeps_full_amplitude(self):
        b = make_broadcast(1e-3, Window.RECT)
        assert np.abs(b.samples).max() > 0.95

    def test_instantaneous_frequency(self):
        b = make_broadcast(1e-3)
        assert b.instantaneous_frequency(0.0) == pytest.approx(100e3)
        assert b.instantaneous_frequency(0.5e-3) == pytest.approx(60e3)
        assert b.instantaneous_frequency(1e-3) == pytest.approx(20e3)

    def test_downsweep(self, broadcast_3ms):
        freqs = np.fft.rfftfreq(500, d=1e-6)
        head = np.abs(np.fft.rfft(broadcast_3ms.samples[:500]))
        tail = np.abs(np.fft.rfft(broadcast_3ms.samples[-500:]))
        assert freqs[np.argmax(head)] > 80e3
        assert freqs[np.argmax(tail)] < 40e3


class TestEchoModel:
    def test_directivity_on_axis(self):
        assert directivity_gain(0.0, 0.005, 60e3) == pytest.approx(1.0)

    def test_directivity_first_null(self):
        f = 50e3
        ka = 2 * np.pi * f / 343.0 * 0.005
        beta = np.arcsin(BESSEL_J1_FIRST_ZERO / ka)
        assert abs(directivity_gain(beta, 0.005, f)) < 1e-6

    def test_directivity_is_even(self):
        for beta in (0.1, 0.4, 0.9):
            assert directivity_gain(beta, 0.005, 80e3) == pytest.approx(directivity_gain(-beta, 0.005, 80e3))

    def test_mouth_angle_to_straight_ahead_glint(self, geom):
        _, beta_m, _, _ = glint_ranges([0.0, 1.0, 0.0], geom)
        assert beta_m == pytest.approx(np.deg2rad(5.0), abs=1e-4)

    def test_round_trip_delay(self, geom, consts):
        delay = round_trip_delay([0.0, 1.0, 0.0], geom, consts)
        assert delay == pytest.approx(5.83e-3, abs=0.05e-3)

    def test_spherical_spreading(self, geom, consts_no_absorption):
        near = geom.mouth_axis * 1.0
        far = geom.mouth_axis * 2.0
        f = 1e3
        ratio = abs(echo_transfer(f, near, geom, consts_no_absorption)) / abs(
            echo_transfer(f, far, geom, consts_no_absorption))
        r_m1, _, r_e1, _ = glint_ranges(near, geom)
        r_m2, _, r_e2, _ = glint_ranges(far, geom)
        assert ratio == pytest.approx(4.0, rel=1e-2)
        assert ratio == pytest.approx((r_m2 * r_e2) / (r_m1 * r_e1), rel=1e-3)

    def test_absorption_grows_with_frequency(self):
        alpha = iso9613_absorption(np.array([20e3, 60e3, 100e3]))
        assert np.all(np.diff(alpha) > 0)
        assert 0.1 < alpha[0] < 1.5
        assert 1.5 < alpha[2] < 6.0


class TestTarget:
    def test_validation(self):
        with pytest.raises(ParameterError):
            Target((0.0, 0.08))
        with pytest.raises(ParameterError):
            Target((0.01, 0.02))
        with pytest.raises(ParameterError):
            Target((0.0, 0.01, 0.02, 0.03, 0.04))
        with pytest.raises(ParameterError):
            Target((0.0, 0.02, 0.01))

    def test_spacings(self):
        assert_allclose(Target((0.0, 0.0111, 0.0481)).spacings(), [0.0111, 0.037])


class TestScene:
    def test_superposition(self, broadcast_3ms, geom, consts):
        pair = Target((0.0, 0.02))
        n = record_length(broadcast_3ms, pair, geom, consts)
        both = synthesize_echo(broadcast_3ms, pair, geom, consts, n)
        first = synthesize_echo(broadcast_3ms, Target((0.0,)), geom, consts, n)
        second = synthesize_echo(broadcast_3ms, Target((0.0,), base_position=(0.0, 1.02, 0.0)),
                                 geom, consts, n)
        assert_allclose(both, first + second, atol=1e-9)

    def test_record_starts_with_broadcast(self, noiseless_echo, broadcast_3ms):
        # nothing reaches the ear within the first few ms
        assert_allclose(noiseless_echo.samples[:3000], broadcast_3ms.samples, atol=1e-6)

    def test_echo_delay_matches_geometry(self, noiseless_echo, broadcast_3ms, geom, consts):
        expected = round_trip_delay([0.0, 1.0, 0.0], geom, consts)
        assert echo_delay(noiseless_echo, broadcast_3ms) == pytest.approx(expected, abs=3e-6)

    def test_echo_delay_with_noise(self, broadcast_3ms, geom, consts):
        ts = simulate_scene(broadcast_3ms, Target((0.0,)), geom, consts, snr_db=20.0, seed=3)
        expected = round_trip_delay([0.0, 1.0, 0.0], geom, consts)
        assert echo_delay(ts, broadcast_3ms) == pytest.approx(expected, abs=3e-6)

    def test_snr(self, broadcast_3ms, geom, consts, noiseless_echo):
        noisy = simulate_scene(broadcast_3ms, Target((0.0,)), geom, consts, snr_db=20.0, seed=11)
        noise = noisy.samples - noiseless_echo.samples
        echo = noiseless_echo.samples.copy()
        echo[:broadcast_3ms.n_samples] -= broadcast_3ms.samples
        support = echo_support(echo)
        snr = 20 * np.log10(np.sqrt(np.mean(echo[support] ** 2)) / np.sqrt(np.mean(noise ** 2)))
        assert snr == pytest.approx(20.0, abs=0.5)

    def test_seeded_noise_is_reproducible(self):
        a = simulate_from_spec((0.0, 0.01), 1e-3, seed=5)
        b = simulate_from_spec((0.0, 0.01), 1e-3, seed=5)
        c = simulate_from_spec((0.0, 0.01), 1e-3, seed=6)
        assert_array_equal(a.samples, b.samples)
        assert not np.array_equal(a.samples, c.samples)

    def test_metadata(self, noiseless_echo):
        assert noiseless_echo.metadata["broadcast_samples"] == 3000
        assert noiseless_echo.metadata["target"]["glint_y_offsets"] == [0.0]
        assert noiseless_echo.metadata["snr_db"] is None

    def test_save_and_load(self, tmp_path, noiseless_echo):
        path = noiseless_echo.save(tmp_path / "echo.f32")
        loaded = TimeSeries.load(path)
        assert_array_equal(loaded.samples, noiseless_echo.samples.astype(np.float32))
        assert loaded.sample_rate == noiseless_echo.sample_rate
        assert loaded.metadata["broadcast_samples"] == 3000
