"""Chronology-preserving reduction of an hourly year to representative hours.

The reduction is agglomerative and merges only temporally adjacent clusters,
so every representative stands for one contiguous window of the input series
and ramp structure survives in the reduced profile. An optional pre-pass
deduplicates near-identical days before clustering.
"""

from __future__ import annotations

import hashlib
import heapq
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

HOURS_PER_DAY = 24
DIMS = ("load_factor", "wind_factor", "pv_factor")


@dataclass(frozen=True)
class RepresentativeHour:
    """One representative operating condition and its footprint in the year."""

    index: int            # ordinal position in chronological order, 1-based
    load_factor: float
    wind_factor: float
    pv_factor: float
    weight: float         # fraction of the year represented, sums to 1
    span_hours: int       # count of original hours represented

    def factors(self) -> np.ndarray:
        return np.array([self.load_factor, self.wind_factor, self.pv_factor])


@dataclass(frozen=True)
class RepresentativeSet:
    hours: tuple[RepresentativeHour, ...]
    source_hash: str = ""

    @property
    def n_hours(self) -> int:
        return len(self.hours)

    def weights(self) -> np.ndarray:
        return np.array([h.weight for h in self.hours])

    def factor_matrix(self) -> np.ndarray:
        """(k, 3) array of (load, wind, pv) factors in chronological order."""
        return np.array([[h.load_factor, h.wind_factor, h.pv_factor] for h in self.hours])


def _as_matrix(series) -> np.ndarray:
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("series must be an (N, 3) array of hourly factor triples")
    return arr


def series_hash(series) -> str:
    arr = np.ascontiguousarray(_as_matrix(series))
    return hashlib.sha256(arr.tobytes()).hexdigest()


def _minmax_normalize(arr: np.ndarray) -> np.ndarray:
    lo = arr.min(axis=0)
    span = arr.max(axis=0) - lo
    span = np.where(span > 0, span, 1.0)
    return (arr - lo) / span


def dedupe_days(series, threshold: float = 0.0):
    """Collapse near-identical days ahead of clustering.

    Days are compared as 72-dimensional vectors (24 hours x 3 factors) after
    per-dimension min-max normalization; the distance is the root mean square
    difference, so it lives in [0, 1]. A day joins the earliest prior survivor
    closer than ``threshold`` (equal days always merge). Returns the surviving
    days as an (n_days * 24, 3) hourly series in first-occurrence order plus
    the per-day multiplicities.
    """
    arr = _as_matrix(series)
    if arr.shape[0] % HOURS_PER_DAY != 0:
        raise ValueError("series length must be a whole number of days")
    n_days = arr.shape[0] // HOURS_PER_DAY
    norm = _minmax_normalize(arr)
    days = norm.reshape(n_days, HOURS_PER_DAY * 3)

    leaders: list[int] = []          # day index of each survivor
    multiplicity: list[int] = []
    for d in range(n_days):
        merged = False
        for k, lead in enumerate(leaders):
            dist = float(np.sqrt(np.mean((days[d] - days[lead]) ** 2)))
            if dist <= threshold:
                multiplicity[k] += 1
                merged = True
                break
        if not merged:
            leaders.append(d)
            multiplicity.append(1)

    keep = np.concatenate(
        [arr[d * HOURS_PER_DAY:(d + 1) * HOURS_PER_DAY] for d in leaders]
    )
    return keep, np.array(multiplicity, dtype=int)


def cluster_chronological(series, k: int, multiplicity=None) -> RepresentativeSet:
    """Reduce an hourly series to ``k`` representatives by adjacent merging.

    Starts from one cluster per hour and repeatedly merges the adjacent pair
    with the smallest size-weighted squared centroid distance (Ward's merge
    cost restricted to neighbors in time), ties going to the leftmost pair.
    Distances are taken in min-max normalized factor space; representatives
    are member-weighted centroids of the raw factors, so cluster totals are
    preserved. ``multiplicity`` optionally gives a per-hour occurrence count
    (used when the series went through :func:`dedupe_days`).
    """
    arr = _as_matrix(series)
    n = arr.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if multiplicity is None:
        mult = np.ones(n)
    else:
        mult = np.asarray(multiplicity, dtype=float)
        if mult.shape != (n,) or np.any(mult < 1):
            raise ValueError("multiplicity must give a positive count per hour")

    norm = _minmax_normalize(arr)

    # Doubly linked list of live clusters; centroids tracked in normalized
    # space for merge costs and in raw space for the representatives.
    size = mult.copy()
    cen_n = norm * 1.0
    cen_r = arr * 1.0
    left = np.arange(n) - 1
    right = np.arange(n) + 1
    right[-1] = -1
    alive = np.ones(n, dtype=bool)
    start = np.arange(n)             # first original hour of each cluster

    def merge_cost(a: int, b: int) -> float:
        d = cen_n[a] - cen_n[b]
        return size[a] * size[b] / (size[a] + size[b]) * float(d @ d)

    # Lazy-deletion heap over adjacent pairs, keyed by the left cluster. An
    # entry is stale once its cluster's version moved (merge on either side).
    heap: list[tuple[float, int, int, int]] = []
    version = np.zeros(n, dtype=int)
    for a in range(n - 1):
        heapq.heappush(heap, (merge_cost(a, a + 1), start[a], a, 0))

    n_clusters = n
    while n_clusters > k:
        cost, _, a, ver = heapq.heappop(heap)
        if not alive[a] or version[a] != ver or right[a] == -1:
            continue
        b = right[a]
        tot = size[a] + size[b]
        cen_n[a] = (size[a] * cen_n[a] + size[b] * cen_n[b]) / tot
        cen_r[a] = (size[a] * cen_r[a] + size[b] * cen_r[b]) / tot
        size[a] = tot
        alive[b] = False
        version[b] += 1
        right[a] = right[b]
        if right[b] != -1:
            left[right[b]] = a
        n_clusters -= 1
        version[a] += 1
        if right[a] != -1:
            heapq.heappush(heap, (merge_cost(a, right[a]), start[a], a, version[a]))
        la = left[a]
        if la != -1:
            version[la] += 1
            heapq.heappush(heap, (merge_cost(la, a), start[la], la, version[la]))

    total = float(mult.sum())
    reps = []
    order = [a for a in range(n) if alive[a]]
    weights = np.array([size[a] / total for a in order])
    weights = weights / weights.sum()      # exact unit sum after rounding
    for pos, a in enumerate(order):
        reps.append(RepresentativeHour(
            index=pos + 1,
            load_factor=float(cen_r[a][0]),
            wind_factor=float(cen_r[a][1]),
            pv_factor=float(cen_r[a][2]),
            weight=float(weights[pos]),
            span_hours=int(round(size[a])),
        ))
    return RepresentativeSet(hours=tuple(reps), source_hash=series_hash(arr))


def _expand(rep: RepresentativeSet) -> np.ndarray:
    """Reconstruct an hourly series by repeating each representative over its span."""
    return np.repeat(rep.factor_matrix(), [h.span_hours for h in rep.hours], axis=0)


def evaluate_representatives(rep: RepresentativeSet, series) -> dict:
    """Fidelity metrics of a representative set against the original series.

    Reports, per dimension, the duration-curve RMSE (sorted original vs the
    span-expanded representative profile) and the mean absolute error of
    hour-to-hour ramps, each both raw and normalized by the dimension's
    original range.
    """
    arr = _as_matrix(series)
    exp = _expand(rep)
    if exp.shape[0] != arr.shape[0]:
        raise ValueError("representative spans do not cover the series length")
    rng = arr.max(axis=0) - arr.min(axis=0)
    safe = np.where(rng > 0, rng, 1.0)

    dc_orig = -np.sort(-arr, axis=0)
    dc_rep = -np.sort(-exp, axis=0)
    dc_rmse = np.sqrt(np.mean((dc_orig - dc_rep) ** 2, axis=0))

    ramp_orig = np.diff(arr, axis=0)
    ramp_rep = np.diff(exp, axis=0)
    ramp_mae = np.mean(np.abs(ramp_orig - ramp_rep), axis=0)

    out = {}
    for d, name in enumerate(DIMS):
        out[name] = {
            "duration_rmse": float(dc_rmse[d]),
            "duration_rmse_norm": float(dc_rmse[d] / safe[d]),
            "ramp_mae": float(ramp_mae[d]),
            "ramp_mae_norm": float(ramp_mae[d] / safe[d]),
        }
    return out


def write_representative_set(rep: RepresentativeSet, path) -> None:
    doc = {
        "schema_version": 1,
        "source_hash": rep.source_hash,
        "hours": [
            {
                "index": h.index,
                "load_factor": h.load_factor,
                "wind_factor": h.wind_factor,
                "pv_factor": h.pv_factor,
                "weight": h.weight,
                "span_hours": h.span_hours,
            }
            for h in rep.hours
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_representative_set(source) -> RepresentativeSet:
    """Read representatives from a JSON path, a document, or a bare hour list.

    Hour indices default to 1-based position when omitted.
    """
    if isinstance(source, (str, Path)):
        doc = json.loads(Path(source).read_text())
    else:
        doc = source
    if isinstance(doc, list):
        doc = {"hours": doc}
    hours = tuple(
        RepresentativeHour(
            index=int(h.get("index", pos)),
            load_factor=float(h["load_factor"]),
            wind_factor=float(h["wind_factor"]),
            pv_factor=float(h["pv_factor"]),
            weight=float(h["weight"]),
            span_hours=int(h.get("span_hours", 0)),
        )
        for pos, h in enumerate(doc["hours"], start=1)
    )
    return RepresentativeSet(hours=hours, source_hash=doc.get("source_hash", ""))
