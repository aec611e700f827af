"""Run diagnostics: entropy history and consistency of rho w with the density."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..ek_solver import RunResult, apply_boundary
from ..model import BC_PERIODIC, ConservedState, FluidModel


@dataclass
class DiagnosticsSeries:
    times: np.ndarray
    total_entropy: np.ndarray
    relative_entropy: np.ndarray
    mass: np.ndarray
    momentum: np.ndarray
    consistency_error_max: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


def consistency_error(model: FluidModel, state: ConservedState):
    """|(hw)_j - sqrt(kappa)(h_{j+1}^{3/2} - h_{j-1}^{3/2})/(3 dx)| / ||hw||_2.

    Returns ``(err, degenerate)``; ``degenerate`` is True when ``||hw|| = 0`` and
    the errors are reported as zeros.
    """
    kappa = model.constant_kappa()
    if kappa is None:
        raise ValueError("consistency error is defined for constant capillarity")
    hw = state.srw
    norm = math.sqrt(float(np.sum(hw**2)) * state.dx)
    if norm == 0.0:
        return np.zeros_like(hw), True
    if state.bc == BC_PERIODIC:
        hp = apply_boundary(state.as_array(), state.bc)[0] ** 1.5
        ref = math.sqrt(kappa) * (hp[3:-1] - hp[1:-3]) / (3 * state.dx)
    else:
        ref = (2.0 / 3.0) * math.sqrt(kappa) * np.gradient(state.rho**1.5, state.dx, edge_order=2)
    return np.abs(hw - ref) / norm, False


def relative_entropy_series(run: RunResult, model: FluidModel | None = None) -> DiagnosticsSeries:
    """Total entropy normalised by its initial value, with mass and momentum.

    When ``model`` is given, the maximum consistency error of every snapshot is
    attached at the snapshot times (NaN elsewhere).
    """
    rows = run.diagnostics
    times = np.array([r.t for r in rows])
    keep = np.concatenate([[True], np.diff(times) > 0])
    ent = np.array([r.total_entropy for r in rows])[keep]
    cons = np.full(ent.shape, np.nan)
    times = times[keep]
    if model is not None and model.constant_kappa() is not None:
        for t, snap in run.snapshots.items():
            k = int(np.argmin(np.abs(times - t)))
            err, _ = consistency_error(model, snap)
            cons[k] = float(np.max(err))
    return DiagnosticsSeries(
        times=times,
        total_entropy=ent,
        relative_entropy=ent / ent[0],
        mass=np.array([r.mass for r in rows])[keep],
        momentum=np.array([r.momentum for r in rows])[keep],
        consistency_error_max=cons,
    )


@dataclass
class WaveTrainMetrics:
    wavelength: float
    amplitude: float
    periodicity_distance: float
    maxima_per_wavelength: float
    n_periods: int


def dominant_wavelength(h, dx):
    """Wavelength of the largest non-mean Fourier mode of ``h``."""
    dev = np.asarray(h, dtype=float) - np.mean(h)
    power = np.abs(np.fft.rfft(dev * np.hanning(dev.size))) ** 2
    k = int(np.argmax(power[1:])) + 1
    # refine the coarse Fourier estimate by the autocorrelation maximum nearby
    guess = dev.size / k
    lo, hi = max(int(guess * 0.7), 1), min(int(guess * 1.4) + 1, dev.size // 2)
    if hi <= lo:
        return guess * dx
    lags = np.arange(lo, hi + 1)
    corr = [np.dot(dev[:-m], dev[m:]) / (dev.size - m) for m in lags]
    return float(lags[int(np.argmax(corr))] * dx)


def wave_train_metrics(h, dx, start_frac=0.5, rel_tol=1e-3):
    """Periodicity and ripple content of the profile downstream of ``start_frac``.

    ``periodicity_distance`` is the mean L2 distance between consecutive
    wavelength-long windows divided by the L2 norm of the deviation from the
    mean.  ``maxima_per_wavelength`` counts local maxima that stand out by more
    than ``rel_tol`` of the amplitude, averaged over whole wavelengths.
    """
    h = np.asarray(h, dtype=float)
    tail = h[int(start_frac * h.size):]
    lam = dominant_wavelength(tail, dx)
    width = max(int(round(lam / dx)), 2)
    n_per = tail.size // width
    amp = float(np.max(tail) - np.min(tail))
    if n_per < 2 or amp == 0.0:
        return WaveTrainMetrics(lam, amp, math.inf, 0.0, n_per)
    windows = tail[: n_per * width].reshape(n_per, width)
    dev = windows - np.mean(tail)
    dist = np.sqrt(np.sum(np.diff(windows, axis=0) ** 2, axis=1))
    norm = np.sqrt(np.sum(dev[1:] ** 2, axis=1))
    seg = tail[: n_per * width]
    d = np.diff(seg)
    peaks = np.flatnonzero((d[:-1] > 0) & (d[1:] <= 0)) + 1
    # a maximum counts if it rises above both neighbouring minima by rel_tol * amp
    count = 0
    for p in peaks:
        left = seg[max(p - width // 2, 0):p].min(initial=seg[p])
        right = seg[p + 1:p + width // 2 + 1].min(initial=seg[p])
        if seg[p] - max(left, right) > rel_tol * amp:
            count += 1
    return WaveTrainMetrics(lam, amp, float(np.mean(dist / norm)), count / n_per, n_per)
