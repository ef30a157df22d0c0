"""Link metrics from impulse responses: delay spread, OOK powers, noise, SINR, BER, rate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .channel import ImpulseResponse

ELECTRON_CHARGE = 1.602176634e-19

# geometric search grid for the maximum bit rate: 1 Mbit/s upwards in 1 % steps
RATE_GRID = 1e6 * 1.01 ** np.arange(1400)


@dataclass(frozen=True)
class NoiseParams:
    preamp_density: float = 4.5e-12
    background_current: float = 10e-6

    def __post_init__(self):
        if self.preamp_density < 0 or self.background_current < 0:
            raise ValueError("noise parameters must be non-negative")


@dataclass(frozen=True)
class OokPowers:
    ps1: float
    ps0: float = 0.0
    interferers: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.ps1 < 0 or self.ps0 < 0:
            raise ValueError("received powers must be non-negative")
        if self.ps0 > self.ps1:
            raise ValueError("logic-0 power exceeds logic-1 power")
        for pi1, pi0 in self.interferers:
            if pi1 < 0 or pi0 < 0:
                raise ValueError("interferer powers must be non-negative")


@dataclass(frozen=True)
class NoiseBreakdown:
    preamp: float
    background: float
    signal: float
    bandwidth: float = float("nan")
    background_current: float = float("nan")

    @property
    def total(self) -> float:
        return math.sqrt(self.preamp ** 2 + self.background ** 2 + self.signal ** 2)


@dataclass(frozen=True)
class LinkReport:
    seat: str
    receiver: str
    branch_sinr: tuple[float, ...]
    sinr_sc: float
    sinr_mrc: float
    delay_spread: float
    ber_sc: float
    ber_mrc: float
    bit_rate: float
    serving: tuple[str, int]
    max_rate_sc: float | None = None
    max_rate_mrc: float | None = None


def _weights(power, weighting):
    if weighting == "power_squared":
        return power * power
    if weighting == "power":
        return power
    raise ValueError(f"unknown delay-spread weighting {weighting!r}")


def delay_spread(ir: ImpulseResponse, weighting: str = "power_squared") -> float:
    """RMS delay spread, seconds; taps weighted by squared power unless ``weighting='power'``."""
    p = np.asarray(ir.bins, dtype=np.float64)
    w = _weights(p, weighting)
    wsum = w.sum()
    if not np.sum(p) > 0 or not wsum > 0:
        raise ValueError("delay spread of a zero-power response")
    t = ir.times
    mu = np.dot(t, w) / wsum
    return float(math.sqrt(max(np.dot((t - mu) ** 2, w) / wsum, 0.0)))


def _first_bin(bins) -> int:
    nz = np.flatnonzero(bins)
    if not len(nz):
        raise ValueError("OOK partition of a zero-power response")
    return int(nz[0])


def ook_partition(ir: ImpulseResponse, bit_rate: float) -> tuple[float, float]:
    """Split received power into the bit window after first arrival and the ISI tail.

    A bin starting exactly one bit period after the first arrival counts as ISI.
    """
    if not bit_rate > 0:
        raise ValueError("bit rate must be positive")
    bins = np.asarray(ir.bins, dtype=np.float64)
    k0 = _first_bin(bins)
    tb = 1.0 / bit_rate
    offsets = np.arange(len(bins) - k0) * ir.bin_width
    k1 = k0 + int(np.count_nonzero(offsets < tb))
    total = float(np.sum(bins))
    ps1 = float(np.sum(bins[:k1]))
    return _exact_split(total, ps1)


def _exact_split(total: float, part: float) -> tuple[float, float]:
    """Nudge ``(part, total - part)`` by a few ulps so the pair adds to ``total`` exactly.

    Round-half-even can make the naive complement unreachable, hence the
    second coordinate.
    """
    for dp in (0, 1, -1, 2, -2):
        p = part
        for _ in range(abs(dp)):
            p = math.nextafter(p, math.inf if dp > 0 else -math.inf)
        if p < 0 or p > total:
            continue
        rest = max(total - p, 0.0)
        for _ in range(4):
            s = p + rest
            if s == total:
                return p, rest
            rest = max(math.nextafter(rest, math.inf if s < total else -math.inf), 0.0)
    raise ArithmeticError("could not split power exactly")


def noise_sigma(ps1: float, background_current: float, bandwidth: float, responsivity: float,
                preamp_density: float) -> NoiseBreakdown:
    """Shot noise of signal and background plus preamplifier noise, all in amperes."""
    if min(ps1, background_current, responsivity, preamp_density) < 0:
        raise ValueError("noise inputs must be non-negative")
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    return NoiseBreakdown(
        preamp=preamp_density * math.sqrt(bandwidth),
        background=math.sqrt(2 * ELECTRON_CHARGE * background_current * bandwidth),
        signal=math.sqrt(2 * ELECTRON_CHARGE * responsivity * ps1 * bandwidth),
        bandwidth=bandwidth,
        background_current=background_current,
    )


def sinr(powers: OokPowers, noise: NoiseBreakdown, responsivity: float) -> float:
    r2 = responsivity * responsivity
    interference = sum(r2 * (p1 - p0) ** 2 for p1, p0 in powers.interferers)
    denom = noise.total ** 2 + interference
    if denom == 0:
        raise ValueError("SINR undefined without noise or interference")
    return r2 * (powers.ps1 - powers.ps0) ** 2 / denom


def combine_sc(per_branch) -> float:
    values = list(per_branch)
    if not values:
        raise ValueError("nothing to combine")
    return float(max(values))


def combine_mrc(per_branch) -> float:
    values = list(per_branch)
    if not values:
        raise ValueError("nothing to combine")
    return float(math.fsum(values))


COMBINERS = {"sc": combine_sc, "mrc": combine_mrc}


def q_function(x):
    x = np.asarray(x, dtype=np.float64)
    out = 0.5 * erfc(x / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def q_asymptotic(x):
    """Large-argument approximation exp(-x^2/2) / (x sqrt(2 pi))."""
    x = np.asarray(x, dtype=np.float64)
    out = np.exp(-x * x / 2) / (x * math.sqrt(2 * math.pi))
    return float(out) if out.ndim == 0 else out


def ber(sinr_value):
    s = np.asarray(sinr_value, dtype=np.float64)
    if np.any(s < 0):
        raise ValueError("SINR must be non-negative")
    return q_function(np.sqrt(s))


# ---------------------------------------------------------------------------
# vectorised link budget over detectors and candidate bit rates


def _window_powers(bins: np.ndarray, dt: float, rates: np.ndarray) -> np.ndarray:
    """Ps1 for each detector row of ``bins`` (J, nb) at each rate; zero rows give zero."""
    nj, nb = bins.shape
    out = np.zeros((nj, len(rates)))
    tb = 1.0 / rates
    for j in range(nj):
        nz = np.flatnonzero(bins[j])
        if not len(nz):
            continue
        k0 = nz[0]
        csum = np.concatenate(([0.0], np.cumsum(bins[j, k0:])))
        offsets = np.arange(nb - k0) * dt
        k1 = np.searchsorted(offsets, tb, side="left")
        out[j] = csum[k1]
    return out


def detector_sinr(signal: np.ndarray, interference: np.ndarray, dt: float, rates,
                  responsivity: float, noise: NoiseParams) -> np.ndarray:
    """Per-detector SINR ``(J, len(rates))`` with bandwidth equal to the bit rate.

    ``signal`` is the serving branch histogram (J, nb); ``interference`` holds
    the total power from every other branch at each detector (I, J). Interferers
    are counted at full power against a logic 0 from the serving branch.
    """
    rates = np.atleast_1d(np.asarray(rates, dtype=np.float64))
    total = signal.sum(axis=1)
    ps1 = _window_powers(signal, dt, rates)
    ps0 = np.maximum(total[:, None] - ps1, 0.0)
    r2 = responsivity * responsivity
    var = (noise.preamp_density ** 2 + 2 * ELECTRON_CHARGE * noise.background_current
           + 2 * ELECTRON_CHARGE * responsivity * ps1) * rates
    interf = r2 * np.sum(interference ** 2, axis=0)
    return r2 * (ps1 - ps0) ** 2 / (var + interf[:, None])


def _combined(sinr_matrix: np.ndarray, combiner: str) -> np.ndarray:
    if combiner == "sc":
        return sinr_matrix.max(axis=0)
    if combiner == "mrc":
        return sinr_matrix.sum(axis=0)
    raise ValueError(f"unknown combiner {combiner!r}")


def _largest_passing(ber_values: np.ndarray, target: float) -> float:
    ok = np.flatnonzero(ber_values <= target)
    return float(RATE_GRID[ok[-1]]) if len(ok) else 0.0


def max_data_rate(ir: ImpulseResponse, interferer_irs=(), noise: NoiseParams = NoiseParams(),
                  responsivity: float = 0.4, target_ber: float = 1e-9) -> float:
    """Largest grid bit rate whose OOK BER stays within ``target_ber`` on one detector."""
    if not np.sum(ir.bins) > 0:
        raise ValueError("maximum rate of a zero-power response")
    interference = np.array([[float(np.sum(i.bins))] for i in interferer_irs]).reshape(-1, 1)
    s = detector_sinr(np.asarray(ir.bins)[None, :], interference, ir.bin_width, RATE_GRID, responsivity, noise)
    return _largest_passing(ber(s[0]), target_ber)


def evaluate_link(hist: np.ndarray, dt: float, labels, seat: str, receiver: str, responsivity: float,
                  noise: NoiseParams, bit_rate: float, weighting: str = "power_squared",
                  find_max_rate: bool = False, target_ber: float = 1e-9) -> LinkReport:
    """Link report for one seat from the (branch, detector, bin) histogram of its receiver.

    The serving branch is the one delivering the most total power across the
    receiver's outputs; all other branches interfere.
    """
    totals = hist.sum(axis=2)
    serving = int(np.argmax(totals.sum(axis=1)))
    signal = hist[serving]
    interference = np.delete(totals, serving, axis=0)

    if find_max_rate:
        grid = detector_sinr(signal, interference, dt, RATE_GRID, responsivity, noise)
        rate_sc = _largest_passing(ber(_combined(grid, "sc")), target_ber)
        rate_mrc = _largest_passing(ber(_combined(grid, "mrc")), target_ber)
    else:
        rate_sc = rate_mrc = None

    per = detector_sinr(signal, interference, dt, [bit_rate], responsivity, noise)[:, 0]
    sc, mrc = combine_sc(per), combine_mrc(per)

    best = int(np.argmax(signal.sum(axis=1)))
    if signal[best].sum() > 0:
        ds = delay_spread(ImpulseResponse(dt, signal[best]), weighting)
    else:
        ds = float("nan")
    return LinkReport(seat, receiver, tuple(float(v) for v in per), sc, mrc, ds, ber(sc), ber(mrc), bit_rate,
                      tuple(labels[serving]), rate_sc, rate_mrc)
