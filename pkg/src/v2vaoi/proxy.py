"""Perception-quality proxy: average precision as a function of delay.

A GPU perception stack is out of scope, so scene quality is estimated from
bundled measurement samples of a LiDAR object detector degrading under
three delay regimes: constant per-vehicle computation delay ("backbone"),
a constant transmission delay applied to every collaborator, and a delay
spread growing linearly with distance.  Queries interpolate linearly
between samples; every output is labeled a proxy estimate.

Curve files are plain text: optional '# comments', an optional
"type <name>" line, then one "delay ap30 ap50 ap70" row per sample.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SceneParseError


@dataclass(frozen=True)
class DegradationCurve:
    """AP@0.3/0.5/0.7 sampled at increasing delay values.

    samples is a (k, 4) array of rows (delay, ap30, ap50, ap70).  Validation
    enforces what any usable curve must satisfy: strictly increasing delays,
    AP values in [0, 1] that never increase with delay, and looser IoU never
    scoring lower (ap30 >= ap50 >= ap70 at every sample).
    """

    delay_type: str
    samples: np.ndarray

    def __post_init__(self):
        s = np.array(self.samples, dtype=np.float64, order="C")
        if s.ndim != 2 or s.shape[1] != 4 or s.shape[0] < 1:
            raise DomainError(
                f"curve needs a (k, 4) sample array, got shape {s.shape}"
            )
        delays = s[:, 0]
        aps = s[:, 1:]
        if np.any(delays < 0):
            raise DomainError("sample delays must be nonnegative")
        if np.any(np.diff(delays) <= 0):
            raise DomainError("sample delays must be strictly increasing")
        if np.any(aps < 0) or np.any(aps > 1):
            raise DomainError("AP values must lie in [0, 1]")
        if np.any(np.diff(aps[:, 0]) > 0) or np.any(np.diff(aps[:, 1]) > 0) or np.any(
            np.diff(aps[:, 2]) > 0
        ):
            raise DomainError("AP values must be non-increasing in delay")
        if np.any(s[:, 1] < s[:, 2]) or np.any(s[:, 2] < s[:, 3]):
            raise DomainError("each sample must satisfy ap30 >= ap50 >= ap70")
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)


BACKBONE_CURVE = DegradationCurve(
    "backbone",
    np.array(
        [
            [0.0, 0.864, 0.859, 0.805],
            [0.1, 0.855, 0.709, 0.148],
            [0.2, 0.618, 0.183, 0.036],
            [0.3, 0.258, 0.071, 0.021],
            [0.4, 0.124, 0.045, 0.018],
            [0.5, 0.081, 0.033, 0.017],
            [1.0, 0.039, 0.024, 0.015],
        ]
    ),
)

CONSTANT_TRANSMISSION_CURVE = DegradationCurve(
    "constant_transmission",
    np.array(
        [
            [0.0, 0.864, 0.859, 0.805],
            [0.1, 0.860, 0.810, 0.435],
            [0.2, 0.750, 0.481, 0.227],
            [0.3, 0.500, 0.332, 0.196],
        ]
    ),
)

LINEAR_COEFFICIENT_CURVE = DegradationCurve(
    "linear_coefficient",
    np.array(
        [
            [0.0, 0.864, 0.859, 0.805],
            [0.1, 0.863, 0.836, 0.735],
            [0.5, 0.643, 0.440, 0.253],
            [1.0, 0.395, 0.314, 0.211],
        ]
    ),
)

DEFAULT_CURVES = {
    c.delay_type: c
    for c in (BACKBONE_CURVE, CONSTANT_TRANSMISSION_CURVE, LINEAR_COEFFICIENT_CURVE)
}


def estimate_ap(curve: DegradationCurve, delay_value: float) -> tuple:
    """AP triple at a delay, interpolated linearly between samples.

    Queries at a sample return that row exactly; queries past the last
    sample clamp to it.
    """
    if delay_value < 0:
        raise DomainError(f"delay must be nonnegative, got {delay_value}")
    s = curve.samples
    delays = s[:, 0]
    x = float(delay_value)
    if x <= delays[0]:
        row = s[0]
        return (row[1], row[2], row[3])
    if x >= delays[-1]:
        row = s[-1]
        return (row[1], row[2], row[3])
    hi = int(np.searchsorted(delays, x))
    if delays[hi] == x:  # exact sample: return it untouched
        row = s[hi]
        return (row[1], row[2], row[3])
    lo = hi - 1
    t = (x - delays[lo]) / (delays[hi] - delays[lo])
    row = s[lo, 1:] + t * (s[hi, 1:] - s[lo, 1:])
    return (float(row[0]), float(row[1]), float(row[2]))


@dataclass(frozen=True)
class SceneApEstimate:
    """Proxy AP estimate for one scene's age records.

    The constant part of the ages (their mean) is scored on the constant
    transmission curve and the asynchrony (max minus min age) on the linear
    coefficient curve; the combined triple is the entrywise minimum of the
    two, since either effect alone can cost the detections it dominates.
    The combination rule is a modeling choice of this package, hence the
    explicit proxy label.
    """

    ap30: float
    ap50: float
    ap70: float
    mean_age_s: float
    age_spread_s: float
    constant_component: tuple
    spread_component: tuple
    label: str = "proxy estimate (not a measured perception result)"


def estimate_scene_ap(
    records,
    constant_curve: DegradationCurve = CONSTANT_TRANSMISSION_CURVE,
    spread_curve: DegradationCurve = LINEAR_COEFFICIENT_CURVE,
) -> SceneApEstimate:
    """Score a scene's snapped ages; deterministic in the records."""
    if not records:
        raise DomainError("cannot estimate AP for an empty record list")
    ages = np.array([r.snapped_age_s for r in records])
    mean_age = float(ages.mean())
    spread = float(ages.max() - ages.min())
    constant = estimate_ap(constant_curve, mean_age)
    spread_est = estimate_ap(spread_curve, spread)
    combined = tuple(min(c, p) for c, p in zip(constant, spread_est))
    return SceneApEstimate(
        ap30=combined[0],
        ap50=combined[1],
        ap70=combined[2],
        mean_age_s=mean_age,
        age_spread_s=spread,
        constant_component=constant,
        spread_component=spread_est,
    )


def load_curve(path, delay_type: str | None = None) -> DegradationCurve:
    """Read a degradation curve from a text file (format in module docstring)."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise SceneParseError(f"cannot read curve file {path}: {exc}") from exc
    rows = []
    name = delay_type
    for line in raw.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("type"):
            parts = line.split(None, 1)
            if len(parts) == 2 and name is None:
                name = parts[1].strip()
            continue
        toks = line.replace(",", " ").split()
        if len(toks) != 4:
            raise SceneParseError(f"{path}: expected 'delay ap30 ap50 ap70', got {line!r}")
        try:
            rows.append([float(t) for t in toks])
        except ValueError as exc:
            raise SceneParseError(f"{path}: bad numeric token in {line!r}") from exc
    if not rows:
        raise SceneParseError(f"{path}: no sample rows")
    return DegradationCurve(name or "custom", np.array(rows))


def save_curve(curve: DegradationCurve, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"type {curve.delay_type}\n")
        for row in curve.samples:
            fh.write(" ".join("%.17g" % v for v in row) + "\n")
