"""Shape-color scenario suite for probing how each order q responds to
class count, imbalance, similarity composition, feature correlation and
intra-class variance.

Panels
------
A  balanced classes with pairwise-distinct tokens, K = 2..8
B  imbalanced classes: counts (20,), (20, 20), (20, 20, 1), (20, 20, 1, 1)
C  one dominant isolated class plus three small classes sharing attributes;
   the partial-match weight sweeps 0.5 -> 0 (the kernel is
   w (S_shape + S_color) + (1 - 2w) S_token, positive semidefinite for
   w <= 0.5 only)
D  four shapes x four colors with shape/color correlation rho sweeping 1 -> 0
E  four balanced classes whose members get one attribute perturbed with
   increasing probability
"""

from dataclasses import dataclass

import numpy as np

from .kernels import DEFAULT_COLORS, DEFAULT_SHAPES, Kernel, ShapeColor
from .scores import as_order, format_order, score_profile

BALANCED_COUNT = 5
IMBALANCED_COUNTS = (20, 20, 1, 1)
PANELS = ("A", "B", "C", "D", "E")


@dataclass(frozen=True)
class ScenarioSpec:
    classes: tuple  # of (shape, color, count)
    partial_match_weight: float = 0.5
    intra_class_noise: float = 0.0

    def __post_init__(self):
        if len(self.classes) == 0:
            raise ValueError("scenario needs at least one class")
        for shape, color, count in self.classes:
            if count < 1:
                raise ValueError(f"class ({shape}, {color}) has count {count} < 1")
        if not 0.0 <= self.partial_match_weight <= 1.0:
            raise ValueError("partial_match_weight must lie in [0, 1]")
        if not 0.0 <= self.intra_class_noise <= 1.0:
            raise ValueError("intra_class_noise must lie in [0, 1]")

    @property
    def kernel(self):
        return Kernel("shape-color", partial_match_weight=self.partial_match_weight)


def distinct_classes(counts) -> tuple:
    """Classes whose tokens share neither shape nor color."""
    if len(counts) > min(len(DEFAULT_SHAPES), len(DEFAULT_COLORS)):
        raise ValueError("not enough distinct shapes/colors")
    return tuple((DEFAULT_SHAPES[i], DEFAULT_COLORS[i], int(n)) for i, n in enumerate(counts))


def generate_scenario(spec: ScenarioSpec, seed: int = 0) -> list:
    """Expand a spec into a list of tokens.

    With ``intra_class_noise > 0`` each item independently has, with that
    probability, its shape or color (chosen at random) replaced by a value no
    class uses. Uniform draws are made for every item regardless of the noise
    level, so for a fixed seed the perturbed sets are nested across levels.
    """
    rng = np.random.default_rng(seed)
    used_shapes = {s for s, _, _ in spec.classes}
    used_colors = {c for _, c, _ in spec.classes}
    spare_shapes = [s for s in DEFAULT_SHAPES if s not in used_shapes]
    spare_colors = [c for c in DEFAULT_COLORS if c not in used_colors]
    items = []
    for shape, color, count in spec.classes:
        u = rng.random(count)
        which = rng.random(count) < 0.5
        pick = rng.random(count)
        for j in range(count):
            if u[j] < spec.intra_class_noise:
                pool = spare_shapes if which[j] else spare_colors
                if not pool:
                    raise ValueError("no spare attribute values left for perturbation")
                new = pool[int(pick[j] * len(pool))]
                items.append(ShapeColor(new, color) if which[j] else ShapeColor(shape, new))
            else:
                items.append(ShapeColor(shape, color))
    return items


def _panel_a():
    return [(f"K={k}", k, ScenarioSpec(distinct_classes([BALANCED_COUNT] * k)))
            for k in range(2, 9)]


def _panel_b():
    rows = []
    for n in range(1, len(IMBALANCED_COUNTS) + 1):
        counts = IMBALANCED_COUNTS[:n]
        rows.append((f"counts={'/'.join(map(str, counts))}", n,
                     ScenarioSpec(distinct_classes(counts))))
    return rows


def _panel_c():
    s, c = DEFAULT_SHAPES, DEFAULT_COLORS
    classes = ((s[0], c[0], 20), (s[1], c[1], 3), (s[1], c[2], 3), (s[2], c[1], 3))
    return [(f"weight={w}", w, ScenarioSpec(classes, partial_match_weight=w))
            for w in (0.5, 0.375, 0.25, 0.125, 0.0)]


def correlated_classes(rho, per_shape=12, n=4) -> tuple:
    """n shapes x n colors; a fraction 1 - rho of each shape group gets its
    colors cycled through all n colors, the rest keep the matching color."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    counts = {}
    for si in range(n):
        k = int(round((1.0 - rho) * per_shape))
        colors = [si] * (per_shape - k) + [(si + 1 + j) % n for j in range(k)]
        for ci in colors:
            counts[(si, ci)] = counts.get((si, ci), 0) + 1
    return tuple((DEFAULT_SHAPES[si], DEFAULT_COLORS[ci], m)
                 for (si, ci), m in sorted(counts.items()))


def _panel_d():
    return [(f"rho={r}", r, ScenarioSpec(correlated_classes(r)))
            for r in (1.0, 0.75, 0.5, 0.25, 0.0)]


def _panel_e():
    classes = distinct_classes([10] * 4)
    return [(f"noise={v}", v, ScenarioSpec(classes, intra_class_noise=v))
            for v in (0.0, 0.2, 0.4, 0.6)]


_BUILDERS = {"A": _panel_a, "B": _panel_b, "C": _panel_c, "D": _panel_d, "E": _panel_e}


def panel_settings(panel: str):
    """(label, parameter, spec) triples for one panel."""
    try:
        return _BUILDERS[panel.upper()]()
    except KeyError:
        raise ValueError(f"unknown panel {panel!r}; expected one of {PANELS}") from None


def evaluate_panel(panel: str, qs, seed: int = 0) -> list:
    """Rows of {"panel", "setting", "param", q label: score} for one panel."""
    qs = [as_order(q) for q in qs]
    if not qs:
        raise ValueError("need at least one order")
    rows = []
    for label, param, spec in panel_settings(panel):
        items = generate_scenario(spec, seed)
        reports = score_profile(items, spec.kernel, qs)
        row = {"panel": panel.upper(), "setting": label, "param": param}
        row.update({format_order(r.q): r.score for r in reports})
        rows.append(row)
    return rows


def evaluate_panels(qs, seed: int = 0, panels=PANELS) -> dict:
    return {p: evaluate_panel(p, qs, seed) for p in panels}


def missing_mode_sensitivity(full, reduced, kernel: Kernel, qs) -> dict:
    """Percent drop 100 (VS_q(full) - VS_q(reduced)) / VS_q(full) per order."""
    qs = [as_order(q) for q in qs]
    a = score_profile(full, kernel, qs)
    b = score_profile(reduced, kernel, qs)
    return {q: 100.0 * (ra.score - rb.score) / ra.score for q, ra, rb in zip(qs, a, b)}
