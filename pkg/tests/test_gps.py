import struct
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from parsinggait.gps import (BadMagicError, CRCMismatchError, DatasetManifest, InvalidFrameError,
                             LabelHistogram, MalformedStreamError, ManifestEntry, ManifestError,
                             ParsingFrame, GaitParsingSequence, Split, TruncatedStreamError,
                             binarize, binarize_sequence, dataset_stats, decode_gps, encode_gps,
                             entropy_bits, label_histogram, one_hot, read_gps, render,
                             resize_mask, scalar_encode, to_ppm_bytes, write_gps)
from parsinggait.gps.ops import nearest_indices

from helpers import random_sequence

label_maps = arrays(np.uint8, st.tuples(st.integers(1, 9), st.integers(1, 9)),
                    elements=st.integers(0, 11))


class TestParsingFrame:
    def test_rejects_label_at_k(self):
        with pytest.raises(InvalidFrameError):
            ParsingFrame(np.array([[12]]))

    def test_rejects_empty(self):
        with pytest.raises(InvalidFrameError):
            ParsingFrame(np.zeros((0, 3)))

    def test_read_only(self):
        f = ParsingFrame(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            f.labels[0, 0] = 1

    def test_sequence_shape_mismatch(self):
        with pytest.raises(InvalidFrameError):
            GaitParsingSequence((ParsingFrame(np.zeros((2, 2))), ParsingFrame(np.zeros((2, 3)))))

    def test_sequence_needs_frames(self):
        with pytest.raises(InvalidFrameError):
            GaitParsingSequence(())


class TestCodec:
    def test_single_run_layout(self):
        seq = GaitParsingSequence((ParsingFrame(np.zeros((2, 2))),))
        data = encode_gps(seq)
        body = b"GPSQ" + struct.pack("<BBHHI", 1, 12, 2, 2, 1) + struct.pack("<I", 1) \
            + struct.pack("<BI", 0, 4)
        assert data == body + struct.pack("<I", zlib.crc32(body[4:]))

    def test_round_trip_random(self, rng):
        for i in range(100):
            seq = random_sequence(rng, subject_id=f"p{i}", sequence_id=f"s{i}", camera_id="c")
            back = decode_gps(encode_gps(seq), subject_id=f"p{i}", sequence_id=f"s{i}",
                              camera_id="c")
            assert back == seq

    @settings(max_examples=60, deadline=None)
    @given(st.lists(label_maps, min_size=1, max_size=3))
    def test_round_trip_property(self, maps):
        shape = maps[0].shape
        frames = [m if m.shape == shape else np.zeros(shape, np.uint8) for m in maps]
        seq = GaitParsingSequence.from_array(np.stack(frames))
        assert decode_gps(encode_gps(seq)) == seq

    def test_histogram_preserved(self, rng):
        from parsinggait.synth import Viewpoint, generate_identity, render_walk_sequence
        seq = render_walk_sequence(generate_identity(0, 1), Viewpoint(), 30)
        back = decode_gps(encode_gps(seq))
        np.testing.assert_array_equal(label_histogram(back).counts, label_histogram(seq).counts)

    def _stream(self):
        return encode_gps(GaitParsingSequence((ParsingFrame(np.array([[0, 1], [1, 2]])),)))

    def test_bad_magic(self):
        with pytest.raises(BadMagicError):
            decode_gps(b"XXXX" + self._stream()[4:])

    def test_crc_mismatch(self):
        data = bytearray(self._stream())
        data[-1] ^= 0xFF
        with pytest.raises(CRCMismatchError):
            decode_gps(bytes(data))

    def test_truncated(self):
        with pytest.raises(TruncatedStreamError):
            decode_gps(self._stream()[:-7])

    def test_run_sum_short(self):
        body = struct.pack("<BBHHI", 1, 12, 2, 2, 1) + struct.pack("<I", 1) + struct.pack("<BI", 0, 3)
        data = b"GPSQ" + body + struct.pack("<I", zlib.crc32(body))
        with pytest.raises(MalformedStreamError):
            decode_gps(data)

    def test_file_round_trip(self, tmp_path, rng):
        seq = random_sequence(rng, sequence_id="a")
        write_gps(tmp_path / "a.gpsq", seq)
        assert read_gps(tmp_path / "a.gpsq", sequence_id="a") == seq


class TestEntropy:
    def test_uniform_sixteen_is_four_bits(self):
        assert entropy_bits(LabelHistogram(np.full(16, 7))) == 4.0

    def test_binary_uniform_is_one_bit(self):
        assert entropy_bits(LabelHistogram([5, 5])) == 1.0

    def test_single_label(self):
        assert entropy_bits(LabelHistogram([0, 9, 0])) == 0.0

    def test_empty(self):
        with pytest.raises(ValueError):
            entropy_bits(LabelHistogram([0, 0]))

    @settings(max_examples=200)
    @given(st.lists(st.integers(0, 1000), min_size=1, max_size=20).filter(lambda c: sum(c) > 0))
    def test_bounds(self, counts):
        h = entropy_bits(LabelHistogram(counts))
        support = sum(1 for c in counts if c)
        assert 0.0 <= h <= np.log2(support) + 1e-12
        if support == 1:
            assert h == 0.0

    @given(st.lists(st.integers(1, 50), min_size=2, max_size=12), st.randoms())
    def test_permutation_invariant(self, counts, r):
        perm = list(counts)
        r.shuffle(perm)
        assert entropy_bits(LabelHistogram(perm)) == pytest.approx(entropy_bits(LabelHistogram(counts)),
                                                                   abs=1e-12)

    @given(st.integers(1, 12), st.integers(1, 40))
    def test_uniform_attains_log(self, k, c):
        assert entropy_bits(LabelHistogram([c] * k)) == pytest.approx(np.log2(k), abs=1e-12)


class TestHistogram:
    def test_direct_count(self):
        h = label_histogram(ParsingFrame(np.array([[0, 0], [1, 2]])))
        assert h.as_dict() == {0: 2, 1: 1, 2: 1}
        assert h.total == 4

    def test_background(self):
        assert label_histogram(ParsingFrame(np.zeros((3, 5)))).as_dict() == {0: 15}

    def test_additivity(self, rng):
        seq = random_sequence(rng, n=5)
        parts = [label_histogram(f) for f in seq.frames]
        total = parts[0]
        for p in parts[1:]:
            total = total + p
        np.testing.assert_array_equal(total.counts, label_histogram(seq).counts)

    def test_probabilities(self):
        p = LabelHistogram([1, 3]).probabilities()
        np.testing.assert_allclose(p, [0.25, 0.75])
        assert p.sum() == 1.0


class TestResize:
    def test_identity(self, rng):
        f = ParsingFrame(rng.integers(0, 12, (7, 5)))
        assert resize_mask(f, 7, 5) == f

    def test_constant(self):
        assert resize_mask(ParsingFrame(np.full((4, 4), 7)), 2, 2) == ParsingFrame(np.full((2, 2), 7))

    def test_zero_size(self):
        with pytest.raises(ValueError):
            resize_mask(ParsingFrame(np.zeros((4, 4))), 0, 2)

    def test_nearest_oracle(self, rng):
        f = ParsingFrame(rng.integers(0, 12, (64, 44)))
        out = resize_mask(f, 16, 11)
        for i in range(16):
            for j in range(11):
                # pixel-centre mapping: (i + 0.5) * 64 / 16 - 0.5 rounded down
                si = int(np.floor((i + 0.5) * 64 / 16))
                sj = int(np.floor((j + 0.5) * 44 / 11))
                assert out.labels[i, j] == f.labels[si, sj]

    @given(label_maps, st.integers(1, 12), st.integers(1, 12))
    def test_no_new_labels(self, m, h, w):
        out = resize_mask(ParsingFrame(m), h, w)
        assert set(np.unique(out.labels)) <= set(np.unique(m))

    @given(st.integers(1, 100), st.integers(1, 100))
    def test_indices_in_range(self, n_in, n_out):
        idx = nearest_indices(n_in, n_out)
        assert idx.min() >= 0 and idx.max() < n_in
        assert np.all(np.diff(idx) >= 0)


class TestBinarize:
    def test_labels(self):
        out = binarize(ParsingFrame(np.array([[0, 1], [5, 11]])))
        np.testing.assert_array_equal(out.labels, [[0, 1], [1, 1]])

    def test_background_unchanged(self):
        f = ParsingFrame(np.zeros((3, 3)))
        assert binarize(f) == f

    @given(label_maps)
    def test_idempotent_and_entropy_bound(self, m):
        b = binarize(ParsingFrame(m))
        assert binarize(b) == b
        assert entropy_bits(label_histogram(b)) <= 1.0

    def test_sequence(self, rng):
        seq = random_sequence(rng, n=3, subject_id="x")
        b = binarize_sequence(seq)
        assert b.subject_id == "x"
        np.testing.assert_array_equal(b.to_array(), seq.to_array() > 0)


class TestEncoding:
    def test_single_pixel(self):
        np.testing.assert_array_equal(one_hot(ParsingFrame(np.array([[2]]), 4), 4)[:, 0, 0],
                                      [0, 0, 1, 0])

    @given(label_maps)
    def test_partition_of_unity(self, m):
        oh = one_hot(ParsingFrame(m))
        assert oh.shape == (12,) + m.shape
        assert np.all(oh.sum(axis=0) == 1)

    @given(label_maps)
    def test_foreground_channels_are_binarize(self, m):
        oh = one_hot(ParsingFrame(m))
        np.testing.assert_array_equal(oh[1:].sum(axis=0), binarize(ParsingFrame(m)).labels)

    def test_label_too_large(self):
        with pytest.raises(InvalidFrameError):
            one_hot(ParsingFrame(np.array([[5]])), 4)

    def test_scalar(self):
        s = scalar_encode(ParsingFrame(np.array([[0, 11]])))
        np.testing.assert_allclose(s, [[[0.0, 1.0]]])


class TestManifest:
    def _entries(self):
        return [ManifestEntry("a", "p1", "c", "a.gpsq", 1), ManifestEntry("b", "p2", "c", "b.gpsq", 1)]

    def test_unique_ids(self):
        e = self._entries()
        with pytest.raises(ManifestError):
            DatasetManifest(e + [e[0]])

    def test_query_must_be_test(self):
        with pytest.raises(ManifestError):
            DatasetManifest(self._entries(), Split(["p1"], ["p2"], ["a"]))

    def test_save_load(self, tmp_path):
        m = DatasetManifest(self._entries(), Split(["p1"], ["p2"], ["b"]), tmp_path)
        m.save(tmp_path / "manifest.jsonl", tmp_path / "split.json")
        back = DatasetManifest.from_files(tmp_path / "manifest.jsonl")
        assert back.entries == m.entries and back.split == m.split

    def test_load_error_names_sequence(self, tmp_path):
        m = DatasetManifest(self._entries(), Split(), tmp_path)
        with pytest.raises(ManifestError, match="'a'"):
            m.load("a")


class TestStats:
    def _manifest(self, tmp_path, seqs):
        entries = []
        for i, s in enumerate(seqs):
            write_gps(tmp_path / f"{i}.gpsq", s)
            entries.append(ManifestEntry(f"q{i}", f"p{i}", "c", f"{i}.gpsq", len(s)))
        return DatasetManifest(entries, Split(), tmp_path)

    def test_head_torso_only(self, tmp_path):
        frame = np.array([[1, 2], [0, 2]])
        m = self._manifest(tmp_path, [GaitParsingSequence.from_array(np.stack([frame] * 4))])
        st_ = dataset_stats(m)
        assert st_.mean_sequence_proportion["head"] == 100.0
        assert st_.mean_sequence_proportion["torso"] == 100.0
        assert all(v == 0.0 for k, v in st_.mean_sequence_proportion.items()
                   if k not in ("head", "torso"))
        assert st_.distinct_part_histogram[2] == 4

    def test_partition(self, small_dataset):
        st_ = dataset_stats(small_dataset)
        assert sum(st_.distinct_part_histogram) == st_.num_frames
        assert all(0.0 <= v <= 100.0 for v in st_.mean_sequence_proportion.values())

    def test_mirrored_pairs_are_symmetric(self, tmp_path):
        from parsinggait.synth import Viewpoint, generate_identity, render_walk_sequence
        seqs = []
        for i in range(4):
            p = generate_identity(9, i, dress_prob=0.5)
            for mirror in (False, True):
                seqs.append(render_walk_sequence(p, Viewpoint(mirror=mirror), 15, start_phase=0.3 * i))
        counts = dataset_stats(self._manifest(tmp_path, seqs)).part_frame_counts
        for side in ("leg", "arm", "hand", "foot"):
            assert counts[f"left-{side}"] == counts[f"right-{side}"]

    def test_threads_match(self, small_dataset):
        assert dataset_stats(small_dataset, threads=3).to_dict() == \
            dataset_stats(small_dataset).to_dict()


class TestRender:
    def test_black(self):
        data = to_ppm_bytes(ParsingFrame(np.zeros((2, 3))), {0: (0, 0, 0)})
        assert data == b"P6\n3 2\n255\n" + bytes(18)

    def test_two_colours(self):
        data = to_ppm_bytes(ParsingFrame(np.array([[0, 1], [1, 0]])), {0: (1, 2, 3), 1: (9, 8, 7)})
        assert data.split(b"\n", 3)[3] == bytes([1, 2, 3, 9, 8, 7, 9, 8, 7, 1, 2, 3])

    def test_missing_colour(self):
        with pytest.raises(KeyError):
            to_ppm_bytes(ParsingFrame(np.array([[3]])), {0: (0, 0, 0)})

    def test_deterministic(self, small_dataset, tmp_path):
        f = small_dataset.load(small_dataset.entries[0]).frames[0]
        a = render(f, None or {k: (k, k, k) for k in range(12)}, tmp_path / "a.ppm").read_bytes()
        b = render(f, {k: (k, k, k) for k in range(12)}, tmp_path / "b.ppm").read_bytes()
        assert a == b
