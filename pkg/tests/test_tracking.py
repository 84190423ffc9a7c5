import numpy as np
import pytest

from vcanomaly.errors import ValidationError
from vcanomaly.tracking import (
    EXPRESSIONS,
    FaceObservation,
    IdentityMatcher,
    Track,
    Tracker,
    associate_frame,
    default_matcher,
)

from conftest import box, obs, track


def grid_boxes(n, jitter=0.0):
    return [box(100 * i + jitter, 0 + jitter, 100 * i + 80 + jitter, 80 + jitter) for i in range(n)]


def identity_embeddings(n, rng=None, noise=0.0):
    """Well-separated identities: scaled one-hot directions in 128-d."""
    rng = rng or np.random.default_rng(0)
    out = []
    for i in range(n):
        base = np.zeros(128)
        base[i] = 10.0
        out.append(tuple(float(v) for v in base + rng.normal(0, noise, 128)))
    return out


class CountingMatcher(IdentityMatcher):
    def __init__(self, inner=None):
        self.calls = 0
        self.inner = inner

    def match(self, query, candidates):
        self.calls += 1
        return self.inner.match(query, candidates) if self.inner else None


class TestFaceObservation:
    def test_rejects_bad_embedding_length(self):
        with pytest.raises(ValidationError):
            obs(0, embedding=(1.0,) * 64)

    def test_rejects_expression_not_summing_to_one(self):
        with pytest.raises(ValidationError):
            obs(0, expression=(0.5, 0, 0, 0, 0, 0, 0.6))

    def test_rejects_negative_expression(self):
        with pytest.raises(ValidationError):
            obs(0, expression=(-0.1, 0.2, 0.2, 0.2, 0.2, 0.2, 0.1))

    def test_accepts_posterior_within_tolerance(self):
        obs(0, expression=(0.3, 0.1, 0.1, 0.1, 0.1, 0.1, 0.2 + 5e-7))


class TestTrack:
    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            Track(0, [])

    def test_rejects_non_increasing_frames(self):
        with pytest.raises(ValidationError):
            track(0, [obs(3), obs(3)])

    def test_append_enforces_order(self):
        t = track(0, [obs(0)])
        with pytest.raises(ValidationError):
            t.append(obs(0))


class TestAssociateFrame:
    def test_stable_grid_extends_without_matcher(self):
        boxes0 = grid_boxes(4)
        tracks = [track(i, [obs(0, b)]) for i, b in enumerate(boxes0)]
        matcher = CountingMatcher()
        faces = [obs(1, b) for b in grid_boxes(4, jitter=1.5)]
        updated, next_id = associate_frame(tracks, faces, 0.5, matcher)
        assert len(updated) == 4
        assert next_id == 4
        assert matcher.calls == 0
        assert all(len(t.observations) == 2 for t in updated)
        # each track keeps its own grid slot
        for t in updated:
            assert t.observations[1].box.x_min == pytest.approx(
                t.observations[0].box.x_min, abs=2.0
            )

    def test_empty_faces_is_noop(self):
        tracks = [track(0, [obs(0)])]
        updated, next_id = associate_frame(tracks, [], 0.5, None)
        assert updated == tracks
        assert next_id == 1

    def test_mixed_frame_indices_rejected(self):
        with pytest.raises(ValidationError):
            associate_frame([], [obs(1), obs(2, box(20, 0, 30, 10))], 0.5, None)

    def test_frame_not_after_tracks_rejected(self):
        tracks = [track(0, [obs(5)])]
        with pytest.raises(ValidationError):
            associate_frame(tracks, [obs(5, box(0, 0, 5, 5))], 0.5, None)

    def test_reshuffle_reattaches_by_embedding(self):
        identities = identity_embeddings(4)
        tracks = [
            track(i, [obs(0, b, embedding=identities[i])])
            for i, b in enumerate(grid_boxes(4))
        ]
        # the grid rearranges: new slot geometry overlaps nothing above 0.5
        new_slots = [box(100 * i + 60, 30, 100 * i + 140, 110) for i in range(4)]
        order = [2, 0, 3, 1]
        faces = [
            obs(1, new_slots[slot], embedding=identities[identity])
            for slot, identity in enumerate(order)
        ]
        updated, next_id = associate_frame(tracks, faces, 0.5, default_matcher(1.0))
        assert next_id == 4  # nobody became a new participant
        for slot, identity in enumerate(order):
            t = next(t for t in updated if t.track_id == identity)
            assert t.observations[-1] is faces[slot]
            # brute-force nearest neighbor agrees
            q = np.asarray(faces[slot].embedding)
            dists = [np.linalg.norm(q - np.asarray(e)) for e in identities]
            assert int(np.argmin(dists)) == identity

    def test_new_participant_gets_fresh_id(self):
        identities = identity_embeddings(3)
        tracks = [
            track(i, [obs(0, b, embedding=identities[i])])
            for i, b in enumerate(grid_boxes(2))
        ]
        faces = [
            obs(1, b, embedding=identities[i]) for i, b in enumerate(grid_boxes(3))
        ]
        updated, next_id = associate_frame(tracks, faces, 0.5, default_matcher(1.0))
        assert len(updated) == 3
        assert next_id == 3
        assert sorted(t.track_id for t in updated) == [0, 1, 2]

    def test_count_mismatch_without_matcher_opens_new_tracks(self):
        tracks = [track(i, [obs(0, b)]) for i, b in enumerate(grid_boxes(2))]
        faces = [obs(1, b) for b in grid_boxes(3)]
        updated, next_id = associate_frame(tracks, faces, 0.5, None)
        assert len(updated) == 5  # the old two plus three new
        assert next_id == 5

    def test_matcher_never_merges_two_tracks(self):
        # two faces matching the same track: only the first claims it
        identity = identity_embeddings(1)[0]
        tracks = [track(0, [obs(0, box(0, 0, 5, 5), embedding=identity)])]
        faces = [
            obs(1, box(50, 50, 60, 60), embedding=identity),
            obs(1, box(70, 70, 80, 80), embedding=identity),
        ]
        updated, _ = associate_frame(tracks, faces, 0.5, default_matcher(1.0))
        assert len(updated) == 2
        assert len(updated[0].observations) == 2


class TestDefaultMatcher:
    def test_exact_match_wins(self):
        identities = identity_embeddings(3)
        tracks = [track(i, [obs(0, embedding=identities[i])]) for i in range(3)]
        query = obs(1, embedding=identities[1])
        assert default_matcher(0.5).match(query, tracks) == 1

    def test_all_above_threshold_is_no_match(self):
        identities = identity_embeddings(2)
        tracks = [track(0, [obs(0, embedding=identities[0])])]
        query = obs(1, embedding=identities[1])
        assert default_matcher(1.0).match(query, tracks) is None

    def test_nearer_track_wins(self):
        base = np.zeros(128)
        t0 = track(0, [obs(0, embedding=tuple(base + 0.3 / np.sqrt(128)))])
        t1 = track(1, [obs(0, embedding=tuple(base + 0.5 / np.sqrt(128)))])
        query = obs(1, embedding=tuple(base))
        # brute force distances: 0.3 and 0.5, both under the 0.6 threshold
        assert default_matcher(0.6).match(query, [t0, t1]) == 0
        assert default_matcher(0.6).match(query, [t1, t0]) == 0

    def test_query_without_embedding_is_no_match(self):
        tracks = [track(0, [obs(0, embedding=identity_embeddings(1)[0])])]
        assert default_matcher(0.6).match(obs(1), tracks) is None

    def test_rejects_non_positive_threshold(self):
        with pytest.raises(ValidationError):
            default_matcher(0.0)


class TestTracker:
    def test_ids_stable_over_run(self):
        rng = np.random.default_rng(3)
        tracker = Tracker(matcher=default_matcher(1.0))
        # alternate between two disjoint slot layouts so every rearrangement
        # breaks the IOU condition and exercises the matcher path
        layout_a = grid_boxes(4)
        layout_b = [box(100 * i + 60, 30, 100 * i + 140, 110) for i in range(4)]
        steps = [
            (layout_a, [0, 1, 2, 3]),
            (layout_a, [0, 1, 2, 3]),
            (layout_b, [2, 0, 3, 1]),
            (layout_b, [2, 0, 3, 1]),
            (layout_a, [1, 3, 0, 2]),
        ]
        for frame, (slots, perm) in enumerate(steps):
            noisy = identity_embeddings(4, rng, noise=0.002)
            faces = [
                obs(frame, slots[slot], embedding=noisy[identity])
                for slot, identity in enumerate(perm)
            ]
            tracker.update(frame, faces)
        assert len(tracker.tracks) == 4
        # every track sticks to one identity: its embeddings stay mutually close
        for t in tracker.tracks:
            embs = np.asarray([o.embedding for o in t.observations])
            assert len(embs) == len(steps)
            assert np.linalg.norm(embs - embs[0], axis=1).max() < 1.0

    def test_participant_count_monotone(self):
        tracker = Tracker(matcher=None)
        counts = []
        for frame in range(6):
            n_faces = [2, 2, 3, 3, 2, 3][frame]
            tracker.update(frame, [obs(frame, b) for b in grid_boxes(n_faces)])
            counts.append(len(tracker.tracks))
        assert counts == sorted(counts)

    def test_stale_tracks_leave_active_set(self):
        identities = identity_embeddings(2)
        tracker = Tracker(matcher=default_matcher(1.0), staleness_horizon=5)
        tracker.update(
            0, [obs(0, b, embedding=identities[i]) for i, b in enumerate(grid_boxes(2))]
        )
        # participant 1 leaves; participant 0 keeps matching by embedding
        for frame in range(1, 8):
            tracker.update(frame, [obs(frame, grid_boxes(1)[0], embedding=identities[0])])
        assert len(tracker.tracks) == 2
        assert len(tracker.active) == 1
        assert tracker.active[0].track_id == 0

    def test_frames_must_advance(self):
        tracker = Tracker()
        tracker.update(3, [])
        with pytest.raises(ValidationError):
            tracker.update(3, [])

    def test_face_frame_mismatch_rejected(self):
        tracker = Tracker()
        with pytest.raises(ValidationError):
            tracker.update(1, [obs(2)])
