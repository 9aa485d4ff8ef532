"""Synthetic heteroscedastic series with planted variance changes, and brute-force oracles.

The oracles here deliberately avoid the kernels, prefix sums and erfc calls
of the main code path so they can check it.

Config file schema (INI, section ``[synth]``)::

    [synth]
    n = 300
    x_lo = 0
    x_hi = 250
    mean = logistic            # constant | linear | logistic
    mean_params = 0.8, 120, 20 # c | a, b | top, midpoint, scale
    boundaries = 60, 150       # planted change positions in meters
    sigmas = 0.02, 0.1, 0.05   # one per segment
    seed = 7
"""

import configparser
import csv
import io
import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .data_model import DistanceSeries
from .errors import PcdError

MEAN_DEFAULTS = {
    "constant": (0.5,),
    "linear": (0.9, -0.003),
    "logistic": (0.8, 120.0, 20.0),
}


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a synthetic distance series.

    Parameters
    ----------
    n : int
        Number of points, spread uniformly over ``x_range``.
    x_range : tuple of float
    mean_kind : {'constant', 'linear', 'logistic'}
    mean_params : tuple of float
        ``(c,)``, ``(a, b)`` for ``a + b x``, or ``(top, midpoint, scale)`` for
        ``top / (1 + exp((x - midpoint) / scale))``. Empty means defaults.
    boundaries : tuple of float
        Planted change positions in meters; a point at exactly a boundary
        belongs to the segment on its left.
    segment_sigmas : tuple of float
        Noise standard deviation per segment (``len(boundaries) + 1``).
    seed : int
    """

    n: int = 300
    x_range: tuple = (0.0, 250.0)
    mean_kind: str = "logistic"
    mean_params: tuple = ()
    boundaries: tuple = ()
    segment_sigmas: tuple = (0.05,)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "x_range", tuple(float(v) for v in self.x_range))
        object.__setattr__(self, "boundaries", tuple(float(v) for v in self.boundaries))
        object.__setattr__(self, "segment_sigmas", tuple(float(v) for v in self.segment_sigmas))
        object.__setattr__(self, "mean_params", tuple(float(v) for v in self.mean_params))
        if int(self.n) != self.n or self.n < 2:
            raise PcdError(f"n must be an integer >= 2, got {self.n!r}")
        lo, hi = self.x_range
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo < 0 or hi <= lo:
            raise PcdError(f"x_range must satisfy 0 <= lo < hi, got {self.x_range}")
        if self.mean_kind not in MEAN_DEFAULTS:
            raise PcdError(f"unknown mean_kind {self.mean_kind!r}")
        if self.mean_params and len(self.mean_params) != len(MEAN_DEFAULTS[self.mean_kind]):
            raise PcdError(
                f"{self.mean_kind} mean takes {len(MEAN_DEFAULTS[self.mean_kind])} parameters"
            )
        b = self.boundaries
        if any(not lo < v < hi for v in b) or any(q <= p for p, q in zip(b, b[1:])):
            raise PcdError("boundaries must be strictly increasing and inside x_range")
        if len(self.segment_sigmas) != len(b) + 1:
            raise PcdError(f"{len(b) + 1} segments need as many sigmas")
        if any(not math.isfinite(s) or s < 0 for s in self.segment_sigmas):
            raise PcdError("segment sigmas must be finite and >= 0")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise PcdError("seed must be an integer in [0, 2**64)")

    def mean(self, x):
        params = self.mean_params or MEAN_DEFAULTS[self.mean_kind]
        x = np.asarray(x, dtype=float)
        if self.mean_kind == "constant":
            return np.full_like(x, params[0])
        if self.mean_kind == "linear":
            return params[0] + params[1] * x
        top, mid, scale = params
        return top / (1.0 + np.exp((x - mid) / scale))


@dataclass(frozen=True)
class GroundTruth:
    """What was planted: 1-based change indices, their positions and sigmas."""

    change_indices: tuple
    boundaries: tuple
    segment_sigmas: tuple
    mean: np.ndarray


def generate(spec: SynthSpec):
    """Draw a series; each segment's noise comes from its own seed stream.

    Returns
    -------
    series : DistanceSeries
    truth : GroundTruth
    """
    lo, hi = spec.x_range
    x = np.linspace(lo, hi, spec.n)
    mean = spec.mean(x)
    seg = np.searchsorted(np.asarray(spec.boundaries), x, side="left")
    noise = np.zeros(spec.n)
    for m, sigma in enumerate(spec.segment_sigmas):
        idx = np.flatnonzero(seg == m)
        rng = np.random.default_rng(np.random.SeedSequence(int(spec.seed), spawn_key=(m,)))
        noise[idx] = sigma * rng.standard_normal(idx.size)
    y = np.clip(mean + noise, 0.0, 1.0)
    changes = tuple(int(np.count_nonzero(seg <= m)) for m in range(len(spec.boundaries)))
    truth = GroundTruth(changes, spec.boundaries, spec.segment_sigmas, mean)
    return DistanceSeries(x, y), truth


def planted_index_spec(n, change_indices, sigmas, seed, mean_kind="constant", mean_params=(0.5,)):
    """Spec whose changes fall right after the given 1-based indices, with x = 0..n-1 meters."""
    bounds = tuple(t - 0.5 for t in change_indices)
    return SynthSpec(n=n, x_range=(0.0, float(n - 1)), mean_kind=mean_kind,
                     mean_params=mean_params, boundaries=bounds,
                     segment_sigmas=tuple(sigmas), seed=seed)


def _floats(text):
    text = text.strip()
    return tuple(float(v) for v in text.split(",")) if text else ()


def load_spec(path_or_text):
    """Read a ``[synth]`` INI file (path or text) into a SynthSpec."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if "\n" in str(path_or_text) or "[synth]" in str(path_or_text):
        parser.read_string(str(path_or_text))
    else:
        with open(path_or_text, encoding="utf-8") as fh:
            parser.read_file(fh)
    if "synth" not in parser:
        raise PcdError("synth config needs a [synth] section")
    sec = parser["synth"]
    known = {"n", "x_lo", "x_hi", "mean", "mean_params", "boundaries", "sigmas", "seed"}
    unknown = set(sec) - known
    if unknown:
        raise PcdError(f"unknown synth config keys: {sorted(unknown)}")
    defaults = SynthSpec()
    try:
        return SynthSpec(
            n=sec.getint("n", defaults.n),
            x_range=(sec.getfloat("x_lo", defaults.x_range[0]),
                     sec.getfloat("x_hi", defaults.x_range[1])),
            mean_kind=sec.get("mean", defaults.mean_kind).strip(),
            mean_params=_floats(sec.get("mean_params", "")),
            boundaries=_floats(sec.get("boundaries", "")),
            segment_sigmas=_floats(sec.get("sigmas", "")) or defaults.segment_sigmas,
            seed=sec.getint("seed", defaults.seed),
        )
    except ValueError as exc:
        if isinstance(exc, PcdError):
            raise
        raise PcdError(f"bad synth config value: {exc}") from None


def series_to_csv(series, prefix="s"):
    """Precomputed-schema CSV with ``iou = y`` and ``confidence = 1``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["frame_id", "distance_m", "iou", "confidence"])
    for i, (x, y) in enumerate(zip(series.x, series.y)):
        w.writerow([f"{prefix}{i:06d}", repr(float(x)), repr(float(y)), "1.0"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# brute-force oracles

def brute_force_pcd(model, y_t, p_t):
    """Literal scan: the largest ``x_i`` with ``P(y_i > y_t) > p_t``, else None."""
    n = model.series.n
    edges = list(model.boundaries)
    best = None
    for i in range(1, n + 1):
        seg = 0
        while seg < len(edges) and i > edges[seg]:
            seg += 1
        sigma = float(model.sigmas[seg])
        mu = float(model.mu[i - 1])
        if sigma > 0:
            prob = 1.0 - NormalDist(mu, sigma).cdf(y_t)
        else:
            prob = 1.0 if mu > y_t else 0.0
        if prob > p_t:
            x = float(model.series.x[i - 1])
            if best is None or x > best:
                best = x
    return best


def brute_force_sic_scan(residuals, min_segment):
    """``(T_n, tau)`` recomputing every split's sums from scratch."""
    r = np.asarray(residuals, dtype=float)
    n = r.size

    def loglik(part):
        var = float(np.mean(part ** 2))
        return part.size * math.log(var if var >= 1e-12 else 1e-12)

    l0 = loglik(r)
    best, best_tau = math.inf, None
    for tau in range(min_segment, n - min_segment + 1):
        value = loglik(r[:tau]) + loglik(r[tau:]) - l0
        if value < best:
            best, best_tau = value, tau
    return math.log(n) - best, best_tau
