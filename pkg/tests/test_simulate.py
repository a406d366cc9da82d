import numpy as np
import pytest

from gazelabel.errors import PlacementError, ValidationError
from gazelabel.kde import GridSpec
from gazelabel.session import SlideGeometry, project_trace, serialize_session
from gazelabel.simulate import (
    Ellipse,
    SimParams,
    generate_scene,
    render_mask,
    scene_from_dict,
    scene_to_dict,
    simulate_trace,
)

GEO = SlideGeometry(40000, 40000)
SMALL = SlideGeometry(8000, 8000)


def test_zero_rois():
    scene = generate_scene(0, (200, 600), SMALL, seed=1)
    assert scene.gt_mask.count() == 0 and scene.gt_boxes == ()


def test_scene_deterministic():
    a = generate_scene(5, (200, 600), GEO, seed=42)
    b = generate_scene(5, (200, 600), GEO, seed=42)
    assert a.rois == b.rois and a.gt_mask == b.gt_mask and a.gt_boxes == b.gt_boxes
    assert generate_scene(5, (200, 600), GEO, seed=43).rois != a.rois


@pytest.mark.parametrize("seed", range(30))
def test_scene_rois_disjoint_and_in_bounds(seed):
    scene = generate_scene(5, (200, 600), GEO, seed=seed)
    assert len(scene.rois) == 5
    boxes = scene.gt_boxes
    for i, a in enumerate(boxes):
        assert 0 <= a.x_min and a.x_max <= GEO.slide_width and 0 <= a.y_min and a.y_max <= GEO.slide_height
        for b in boxes[i + 1 :]:
            assert a.intersection(b) is None
    for e in scene.rois:
        assert 200 <= e.ax <= 600 and 200 <= e.ay <= 600


def test_placement_error_when_crowded():
    with pytest.raises(PlacementError):
        generate_scene(50, (900, 1000), SlideGeometry(4000, 4000), seed=0, max_attempts=500)


def test_render_mask_cell_centres():
    spec = GridSpec(10, 10, 10)
    m = render_mask([Ellipse(50, 50, 20, 10)], spec)
    rows, cols = np.nonzero(m.bits)
    # centres 35..65 in x (|dx| <= 20), 45,55 in y (|dy| <= 10)
    assert cols.min() == 3 and cols.max() == 6
    assert rows.min() == 4 and rows.max() == 5


def test_zero_noise_samples_on_centroids_or_saccade_lines():
    scene = generate_scene(3, (200, 400), SMALL, seed=5)
    p = SimParams(fixation_jitter=0.0, distractor_fixations=0, seed=9)
    pts = project_trace(simulate_trace(scene, p)).points()
    centroids = np.array([(e.cx, e.cy) for e in scene.rois])

    def on_segment(pt, a, b):
        ab, ap = b - a, pt - a
        cross = ab[0] * ap[1] - ab[1] * ap[0]
        t = np.dot(ap, ab) / np.dot(ab, ab)
        return abs(cross) <= 1e-6 * np.dot(ab, ab) and -1e-12 <= t <= 1 + 1e-12

    for pt in pts:
        if np.any(np.all(np.isclose(centroids, pt, atol=1e-9), axis=1)):
            continue
        assert any(on_segment(pt, centroids[i], centroids[j]) for i in range(3) for j in range(3) if i != j)


def test_one_roi_one_second_sixty_samples():
    scene = generate_scene(1, (200, 400), SMALL, seed=2)
    p = SimParams(dwell_range_s=(1.0, 1.0), saccade_samples_per_transition=0, distractor_fixations=0, seed=1)
    session = simulate_trace(scene, p)
    assert len(session.samples) == 60
    t = np.array([s.t_ms for s in session.samples])
    assert np.allclose(np.diff(t), 1000 / 60)


def test_session_files_byte_identical():
    scene = generate_scene(5, (200, 600), GEO, seed=3)
    a = serialize_session(simulate_trace(scene, SimParams(seed=11)))
    b = serialize_session(simulate_trace(scene, SimParams(seed=11)))
    assert a == b
    assert a != serialize_session(simulate_trace(scene, SimParams(seed=12)))


def test_default_session_has_single_identity_viewport():
    scene = generate_scene(2, (200, 600), GEO, seed=3)
    s = simulate_trace(scene, SimParams(seed=1))
    assert len(s.viewport_events) == 1
    vp = s.viewport_events[0]
    assert (vp.t_ms, vp.offset_x, vp.offset_y, vp.scale) == (0, 0, 0, 1)


def test_panzoom_mode_projects_back_to_identity_trace():
    scene = generate_scene(4, (200, 600), GEO, seed=8)
    ident = project_trace(simulate_trace(scene, SimParams(seed=4)))
    pz_session = simulate_trace(scene, SimParams(seed=4, viewport_mode="panzoom"))
    assert len(pz_session.viewport_events) > 1
    pz = project_trace(pz_session)
    assert len(pz) == len(ident)
    np.testing.assert_allclose(pz.points(), ident.points(), rtol=0, atol=1e-6)


@pytest.mark.parametrize("seed", range(10))
def test_signal_dominates_distractors(seed):
    scene = generate_scene(5, (200, 600), GEO, seed=seed)
    pts = project_trace(simulate_trace(scene, SimParams(seed=seed))).points()
    inside = np.zeros(len(pts), dtype=bool)
    for e in scene.rois:
        dilated = Ellipse(e.cx, e.cy, 2 * e.ax, 2 * e.ay)
        inside |= dilated.contains(pts[:, 0], pts[:, 1])
    p = SimParams()
    distractor_fraction = p.distractor_fixations * p.distractor_dwell_s * p.sample_rate_hz / len(pts)
    assert inside.mean() > distractor_fraction


def test_params_validation():
    with pytest.raises(ValidationError):
        SimParams(sample_rate_hz=0)
    with pytest.raises(ValidationError):
        SimParams(dwell_range_s=(2.0, 1.0))
    with pytest.raises(ValidationError):
        SimParams(fixation_jitter=-0.1)


def test_scene_dict_round_trip():
    scene = generate_scene(3, (200, 600), GEO, seed=21)
    back = scene_from_dict(scene_to_dict(scene))
    assert back.rois == scene.rois and back.gt_boxes == scene.gt_boxes and back.gt_mask == scene.gt_mask
