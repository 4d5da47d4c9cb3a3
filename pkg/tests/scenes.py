"""Synthetic scene generators shared by the unit and acceptance tests.

Scenes are built so their ground truth is known analytically: object
positions sit at equal eccentricity from the image center (the center-bias
weighting then treats them nearly equally), contrasts descend with a gap
large enough that the post-processing exponent preserves the ordering,
and pairwise separations exceed the widest inhibition disk.
"""

import numpy as np

#: working-frame canvas used by the default pipeline configuration
SCENE_H, SCENE_W = 128, 171

BACKGROUND = 0.25
CONTRASTS = (1.0, 0.92, 0.85, 0.78)
OBJECT_RADIUS = 8


def blank_canvas(h=SCENE_H, w=SCENE_W, background=BACKGROUND):
    return np.full((h, w, 3), background, dtype=np.float64)


def draw_disk(image, center, radius, value):
    """Paint a filled disk; center is (x, y)."""
    h, w = image.shape[:2]
    yy, xx = np.ogrid[0:h, 0:w]
    mask = (xx - center[0]) ** 2 + (yy - center[1]) ** 2 <= radius**2
    image[mask] = value
    return mask


def draw_square(image, center, half_side, value):
    h, w = image.shape[:2]
    x0 = max(0, center[0] - half_side)
    y0 = max(0, center[1] - half_side)
    x1 = min(w, center[0] + half_side + 1)
    y1 = min(h, center[1] + half_side + 1)
    image[y0:y1, x0:x1] = value
    return x0, y0, x1, y1


def saliency_scene(rng, n_objects=None):
    """A scene of 1-4 disks/squares with strictly descending contrast.

    Returns (image, centers) with centers ordered from most to least
    salient. All objects sit at (roughly) equal eccentricity so the
    center-bias weighting cannot flip the contrast ordering, and the
    minimum pairwise distance stays above the largest inhibition disk.
    """
    if n_objects is None:
        n_objects = int(rng.integers(1, 5))
    image = blank_canvas()
    cx, cy = SCENE_W // 2, SCENE_H // 2
    corners = [(-19, -19), (19, -19), (-19, 19), (19, 19)]
    order = rng.permutation(4)[:n_objects]
    centers = []
    for rank in range(n_objects):
        dx, dy = corners[order[rank]]
        jx, jy = rng.integers(-3, 4, size=2)
        center = (cx + dx + int(jx), cy + dy + int(jy))
        value = BACKGROUND + CONTRASTS[rank] * (1.0 - BACKGROUND)
        if rng.random() < 0.5:
            draw_disk(image, center, OBJECT_RADIUS, value)
        else:
            draw_square(image, center, OBJECT_RADIUS - 1, value)
        centers.append(center)
    return image, centers


def extent_scene(rng, radius, h=160, w=200):
    """One centered disk of the given radius, with small position jitter."""
    image = blank_canvas(h, w)
    jx, jy = rng.integers(-2, 3, size=2)
    center = (w // 2 + int(jx), h // 2 + int(jy))
    draw_disk(image, center, radius, 1.0)
    return image, center


# ---------------------------------------------------------------------------
# guided-search environment: two object classes with disjoint feature support
# ---------------------------------------------------------------------------

SEARCH_SIZE = 128
N_FEATURE_MAPS = 6
TARGET_CONTRAST = 0.7
FEATURE_SIGMA = 6.0


def _gaussian_bump(h, w, center, sigma):
    yy, xx = np.mgrid[0:h, 0:w]
    return np.exp(-((xx - center[0]) ** 2 + (yy - center[1]) ** 2) / (2 * sigma**2))


def _place_objects(rng, n, margin=20, min_dist=27):
    """Non-overlapping positions on the search canvas.

    Rejection sampling with whole-set restarts: a partial layout can wall
    off the remaining points, so after too many consecutive misses the
    set is discarded rather than retried forever.
    """
    points = []
    misses = 0
    while len(points) < n:
        x = int(rng.integers(margin, SEARCH_SIZE - margin))
        y = int(rng.integers(margin, SEARCH_SIZE - margin))
        if all((x - px) ** 2 + (y - py) ** 2 >= min_dist**2 for px, py in points):
            points.append((x, y))
            misses = 0
        else:
            misses += 1
            if misses > 200:
                points.clear()
                misses = 0
    return points


def feature_stack_for(class_a_points, class_b_points, rng):
    """Six feature maps: 0-1 respond to class a, 2-3 to class b, 4-5 noise."""
    maps = np.zeros((N_FEATURE_MAPS, SEARCH_SIZE, SEARCH_SIZE))
    for pt in class_a_points:
        bump = _gaussian_bump(SEARCH_SIZE, SEARCH_SIZE, pt, FEATURE_SIGMA)
        maps[0] += bump
        maps[1] += 0.8 * bump
    for pt in class_b_points:
        bump = _gaussian_bump(SEARCH_SIZE, SEARCH_SIZE, pt, FEATURE_SIGMA)
        maps[2] += bump
        maps[3] += 0.8 * bump
    for n in (4, 5):
        noise = rng.random((SEARCH_SIZE // 8, SEARCH_SIZE // 8))
        maps[n] = np.kron(noise, np.ones((8, 8))) * 0.3
    return maps


def training_scene(rng):
    """A labeled scene holding one object of each class.

    Returns (feature_maps, box_a, box_b) where the boxes bound the class
    a / class b objects in grid coordinates (spatial scale 1).
    """
    pa, pb = _place_objects(rng, 2, min_dist=40)
    maps = feature_stack_for([pa], [pb], rng)
    r = OBJECT_RADIUS + 2
    box_a = (pa[0] - r, pa[1] - r, pa[0] + r + 1, pa[1] + r + 1)
    box_b = (pb[0] - r, pb[1] - r, pb[0] + r + 1, pb[1] + r + 1)
    return maps, box_a, box_b


def search_scene(rng, n_distractors=8):
    """A dim class-a target among bright class-b distractors.

    Returns (image, feature_maps, target_box). Bottom-up saliency ranks
    every distractor above the target (their contrasts are drawn from
    [0.85, 1.0] against the target's 0.7), while the class-a feature maps
    respond only at the target.
    """
    points = _place_objects(rng, n_distractors + 1)
    target, distractors = points[0], points[1:]
    image = blank_canvas(SEARCH_SIZE, SEARCH_SIZE)
    draw_disk(image, target, OBJECT_RADIUS, BACKGROUND + TARGET_CONTRAST * 0.75)
    for pt in distractors:
        contrast = rng.uniform(0.85, 1.0)
        draw_disk(image, pt, OBJECT_RADIUS, BACKGROUND + contrast * 0.75)
    maps = feature_stack_for([target], distractors, rng)
    r = OBJECT_RADIUS
    target_box = (target[0] - r, target[1] - r, target[0] + r + 1, target[1] + r + 1)
    return image, maps, target_box
