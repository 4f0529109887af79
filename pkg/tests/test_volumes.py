import numpy as np
import pytest

from voxsynth import volumes
from voxsynth.errors import (
    DomainError,
    ParseError,
    TruncationError,
    ValidationError,
)
from voxsynth.volumes import (
    HEADER_SIZE,
    LabelVolume,
    Modality,
    ScalarVolume,
    denormalize,
    label_volume,
    normalize,
    read_volume,
    resample_axial,
    scalar_volume,
    write_volume,
)


def make_label(shape=(2, 4, 4), subject_id="s1", seed=0):
    rng = np.random.default_rng(seed)
    return label_volume(
        rng.integers(0, 5, size=shape).astype(np.uint8), (1.0, 1.0, 5.0), subject_id
    )


def make_scalar(shape=(2, 4, 4), seed=0, modality=Modality.CT_HU, value_range=(-1024, 3000)):
    rng = np.random.default_rng(seed)
    data = rng.uniform(value_range[0], value_range[1], size=shape)
    return scalar_volume(data, (1.0, 1.0, 5.0), modality, value_range)


class TestInvariants:
    def test_dims_must_be_positive(self):
        with pytest.raises(ValidationError):
            LabelVolume((0, 4, 4), (1, 1, 1), np.zeros((4, 4, 0), np.uint8))

    def test_spacing_must_be_positive(self):
        with pytest.raises(ValidationError):
            label_volume(np.zeros((1, 4, 4), np.uint8), (1.0, -1.0, 1.0))

    def test_payload_length_checked(self):
        with pytest.raises(ValidationError):
            LabelVolume((4, 4, 2), (1, 1, 1), np.zeros((2, 4, 3), np.uint8))

    def test_scalar_rejects_nan(self):
        data = np.zeros((1, 4, 4), np.float32)
        data[0, 0, 0] = np.nan
        with pytest.raises(ValidationError):
            ScalarVolume((4, 4, 1), (1, 1, 1), data, Modality.CT_HU, (-1024, 3000))

    def test_scalar_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            scalar_volume(np.full((1, 4, 4), 5000.0), (1, 1, 1), Modality.CT_HU, (-1024, 3000))

    def test_normalized_requires_unit_range(self):
        with pytest.raises(ValidationError):
            scalar_volume(np.zeros((1, 4, 4)), (1, 1, 1), Modality.NORMALIZED, (0, 1))

    def test_volumes_are_immutable(self):
        v = make_label()
        with pytest.raises(ValueError):
            v.data[0, 0, 0] = 3


class TestFileRoundTrip:
    def test_label_round_trip_exact(self, tmp_path):
        v = make_label(subject_id="subject-abc")
        p = tmp_path / "v.svol"
        write_volume(p, v)
        assert read_volume(p) == v

    def test_scalar_round_trip_exact(self, tmp_path):
        for modality, rng_ in [
            (Modality.CT_HU, (-1024, 3000)),
            (Modality.MR_SIGNAL, (0, 255)),
        ]:
            v = make_scalar(modality=modality, value_range=rng_)
            p = tmp_path / "v.svol"
            write_volume(p, v)
            assert read_volume(p) == v

    def test_normalized_round_trip(self, tmp_path):
        v = make_scalar(modality=Modality.NORMALIZED, value_range=(-1, 1))
        p = tmp_path / "v.svol"
        write_volume(p, v)
        assert read_volume(p) == v

    def test_payload_bitwise(self, tmp_path):
        v = make_scalar()
        p = tmp_path / "v.svol"
        write_volume(p, v)
        assert read_volume(p).data.tobytes() == v.data.tobytes()

    def test_file_size_is_header_plus_payload(self, tmp_path):
        # 2x2x1 f32 volume: 64-byte header + 16 payload bytes
        v = scalar_volume(
            np.array([[[0.0, 0.5], [-0.5, 1.0]]], np.float32),
            (1, 1, 1),
            Modality.MR_SIGNAL,
            (-1, 1.5),
        )
        p = tmp_path / "v.svol"
        n = write_volume(p, v)
        assert n == HEADER_SIZE + 16
        assert p.stat().st_size == HEADER_SIZE + 16

    def test_round_trip_many_random(self, tmp_path):
        rng = np.random.default_rng(42)
        for i in range(25):
            shape = tuple(int(d) for d in rng.integers(1, 7, size=3))
            if rng.random() < 0.5:
                v = label_volume(
                    rng.integers(0, 300, size=shape).astype(np.uint16),
                    rng.uniform(0.5, 3.0, size=3),
                    subject_id=f"s{i}",
                )
            else:
                lo, hi = sorted(rng.uniform(-100, 100, size=2))
                v = scalar_volume(
                    rng.uniform(lo, hi or lo + 1, size=shape),
                    rng.uniform(0.5, 3.0, size=3),
                    Modality.MR_SIGNAL,
                    (lo, hi + 1e-3),
                )
            p = tmp_path / f"v{i}.svol"
            write_volume(p, v)
            assert read_volume(p) == v

    def test_subject_id_too_long_rejected(self, tmp_path):
        v = make_label(subject_id="x" * 25)
        with pytest.raises(ValidationError):
            write_volume(tmp_path / "v.svol", v)

    def test_header_round_trips_byte_identically(self, tmp_path):
        # write -> read -> write reproduces the exact header (and file) bytes
        for v in (make_label(subject_id="abc"), make_scalar()):
            p1, p2 = tmp_path / "a.svol", tmp_path / "b.svol"
            write_volume(p1, v)
            write_volume(p2, read_volume(p1))
            assert p1.read_bytes()[:HEADER_SIZE] == p2.read_bytes()[:HEADER_SIZE]
            assert p1.read_bytes() == p2.read_bytes()


class TestParseErrors:
    def test_bad_magic_offset_zero(self, tmp_path):
        p = tmp_path / "bad.svol"
        v = make_label()
        write_volume(p, v)
        raw = bytearray(p.read_bytes())
        raw[:4] = b"NOPE"
        p.write_bytes(bytes(raw))
        with pytest.raises(ParseError) as ei:
            read_volume(p)
        assert ei.value.offset == 0

    def test_bad_version_offset(self, tmp_path):
        p = tmp_path / "bad.svol"
        write_volume(p, make_label())
        raw = bytearray(p.read_bytes())
        raw[4:6] = (99).to_bytes(2, "little")
        p.write_bytes(bytes(raw))
        with pytest.raises(ParseError) as ei:
            read_volume(p)
        assert ei.value.offset == 4

    def test_bad_dtype_code(self, tmp_path):
        p = tmp_path / "bad.svol"
        write_volume(p, make_label())
        raw = bytearray(p.read_bytes())
        raw[6] = 77
        p.write_bytes(bytes(raw))
        with pytest.raises(ParseError) as ei:
            read_volume(p)
        assert ei.value.offset == 6

    def test_truncated_payload(self, tmp_path):
        # header says 2x2x1 (4 voxels) but payload holds 3
        p = tmp_path / "bad.svol"
        v = label_volume(np.zeros((1, 2, 2), np.uint8), (1, 1, 1))
        write_volume(p, v)
        p.write_bytes(p.read_bytes()[:-1])
        with pytest.raises(TruncationError):
            read_volume(p)

    def test_overlong_payload(self, tmp_path):
        p = tmp_path / "bad.svol"
        write_volume(p, make_label())
        p.write_bytes(p.read_bytes() + b"\x00")
        with pytest.raises(TruncationError):
            read_volume(p)

    def test_nan_payload_rejected(self, tmp_path):
        p = tmp_path / "bad.svol"
        v = scalar_volume(np.zeros((1, 2, 2)), (1, 1, 1), Modality.MR_SIGNAL, (0, 1))
        write_volume(p, v)
        raw = bytearray(p.read_bytes())
        raw[HEADER_SIZE : HEADER_SIZE + 4] = np.float32(np.nan).tobytes()
        p.write_bytes(bytes(raw))
        with pytest.raises(ValidationError):
            read_volume(p)

    def test_short_file(self, tmp_path):
        p = tmp_path / "tiny.svol"
        p.write_bytes(b"SGMV")
        with pytest.raises(ParseError):
            read_volume(p)


class TestResample:
    def test_noop_identity(self):
        v = make_scalar()
        out = resample_axial(v, (1.0, 1.0))
        assert out.dims == v.dims
        assert np.array_equal(out.data, v.data)

    def test_constant_label_downsample(self):
        data = np.full((1, 4, 4), 7, np.uint8)
        v = label_volume(data, (0.5, 0.5, 1.0))
        out = resample_axial(v, (1.0, 1.0))
        assert out.dims == (2, 2, 1)
        assert np.all(out.data == 7)

    def test_bilinear_midpoint(self):
        # two-sample row (0, 1) at 1mm; at 0.5mm the midpoint sample reads 0.5
        v = scalar_volume(
            np.array([[[0.0, 1.0]]], np.float32), (1.0, 1.0, 1.0), Modality.MR_SIGNAL, (0, 1)
        )
        out = resample_axial(v, (0.5, 0.5))
        assert out.dims[0] == 3
        assert out.data[0, 0, 1] == pytest.approx(0.5, abs=1e-12)
        assert out.data[0, 0, 0] == 0.0
        assert out.data[0, 0, 2] == 1.0

    def test_constant_scalar_resample_stays_constant(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            c = float(rng.uniform(-50, 50))
            v = scalar_volume(
                np.full((2, 5, 7), c), rng.uniform(0.4, 2.5, 3), Modality.MR_SIGNAL, (-60, 60)
            )
            out = resample_axial(v, tuple(rng.uniform(0.4, 2.5, 2)))
            assert np.allclose(out.data, c, atol=1e-5)

    def test_labels_never_invent_classes(self):
        rng = np.random.default_rng(4)
        v = make_label(shape=(1, 9, 11), seed=5)
        for _ in range(5):
            out = resample_axial(v, tuple(rng.uniform(0.3, 2.7, 2)))
            assert set(np.unique(out.data)) <= set(np.unique(v.data))

    def test_z_untouched(self):
        v = make_scalar(shape=(3, 8, 8))
        out = resample_axial(v, (2.0, 2.0))
        assert out.dims[2] == 3
        assert out.spacing[2] == v.spacing[2]

    def test_bad_spacing(self):
        with pytest.raises(DomainError):
            resample_axial(make_scalar(), (0.0, 1.0))


class TestNormalize:
    def test_endpoints(self):
        v = scalar_volume(
            np.array([[[-1024.0, 1600.0]]]), (1, 1, 1), Modality.CT_HU, (-1024, 1600)
        )
        out = normalize(v, (-1024, 1600))
        assert out.data[0, 0, 0] == -1.0
        assert out.data[0, 0, 1] == 1.0
        assert out.modality == Modality.NORMALIZED

    def test_ct_window_midpoint(self):
        # midpoint of (-1024, 1600) is 288 -> 0.0
        v = scalar_volume(np.full((1, 2, 2), 288.0), (1, 1, 1), Modality.CT_HU, (-1024, 1600))
        out = normalize(v, (-1024, 1600))
        assert np.all(out.data == 0.0)

    def test_clamping_above(self):
        v = scalar_volume(np.full((1, 2, 2), 1700.0), (1, 1, 1), Modality.CT_HU, (-1024, 3000))
        out = normalize(v, (-1024, 1600))
        assert np.all(out.data == 1.0)

    def test_denormalize_is_windowed_clamp(self):
        rng = np.random.default_rng(9)
        window = (-200.0, 600.0)
        v = scalar_volume(
            rng.uniform(-500, 900, (2, 6, 6)), (1, 1, 1), Modality.CT_HU, (-1024, 3000)
        )
        back = denormalize(normalize(v, window), window)
        expected = np.clip(v.data.astype(np.float64), *window)
        assert np.allclose(back.data, expected, atol=1e-3)

    def test_monotone(self):
        rng = np.random.default_rng(11)
        xs = np.sort(rng.uniform(-2000, 2000, 100))
        v = scalar_volume(xs.reshape(1, 10, 10), (1, 1, 1), Modality.CT_HU, (-2000, 2000))
        out = normalize(v, (-1024, 1600)).data.ravel()
        assert np.all(np.diff(out) >= 0)

    def test_bad_window(self):
        with pytest.raises(DomainError):
            normalize(make_scalar(), (10, 10))
