"""Deterministic multipath tracing: LOS, first- and second-order diffuse reflections.

Every (branch, element, detector) contribution is accumulated into a
time-binned histogram per (branch, detector) pair. Branches are
independent, so the work is split over branch chunks; each chunk owns its
histogram rows and results do not depend on the split.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .scene import ElementSet, Scene, segment_blocked, visible_from

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(eq=False)
class ImpulseResponse:
    bin_width: float
    bins: np.ndarray
    start: float = 0.0
    unit: str = ""
    branch: int = 0
    detector: int = 0

    @property
    def times(self) -> np.ndarray:
        return self.start + np.arange(len(self.bins)) * self.bin_width

    def total_power(self) -> float:
        return total_power(self)


def total_power(ir: ImpulseResponse) -> float:
    return float(np.sum(ir.bins))


@dataclass(eq=False)
class TraceRequest:
    scene: Scene
    units: list
    receiver: object
    elements_first: ElementSet | None = None
    elements_second: ElementSet | None = None
    max_order: int = 2
    time_bin: float = 5e-11
    threads: int = 1

    def __post_init__(self):
        if self.max_order not in (0, 1, 2):
            raise ValueError("max_order must be 0, 1 or 2")
        if self.max_order >= 1 and self.elements_first is None:
            raise ValueError("first-order tracing needs elements_first")
        if self.max_order == 2 and self.elements_second is None:
            raise ValueError("second-order tracing needs elements_second")


@njit(cache=True, nogil=True)
def _lambert_transfer(src_pos, src_axis, src_order, dst_pos, dst_nrm, dst_area,
                      boxes, starts, items, x0, cell, ztop):
    """gain[i, j]: fraction of source i's power incident on patch j, with distances."""
    ns = src_pos.shape[0]
    nd = dst_pos.shape[0]
    gain = np.zeros((ns, nd))
    dist = np.zeros((ns, nd))
    v = np.empty(3)
    for i in range(ns):
        for j in range(nd):
            d2 = 0.0
            for a in range(3):
                v[a] = dst_pos[j, a] - src_pos[i, a]
                d2 += v[a] * v[a]
            if d2 == 0.0:
                continue
            d = math.sqrt(d2)
            dist[i, j] = d
            cos_phi = (src_axis[i, 0] * v[0] + src_axis[i, 1] * v[1] + src_axis[i, 2] * v[2]) / d
            if cos_phi <= 0.0:
                continue
            cos_theta = -(dst_nrm[j, 0] * v[0] + dst_nrm[j, 1] * v[1] + dst_nrm[j, 2] * v[2]) / d
            if cos_theta <= 0.0:
                continue
            n = src_order[i]
            g = (n + 1.0) * cos_phi ** n / (2.0 * math.pi * d2) * cos_theta * dst_area[j]
            if g == 0.0:
                continue
            if segment_blocked(src_pos[i], dst_pos[j], boxes, starts, items, x0, cell, ztop):
                continue
            gain[i, j] = g
    return gain, dist


@njit(cache=True, nogil=True)
def _accumulate_first(p_inc, d1, rows, d2, g, dt, hist, b0, b1):
    nj = g.shape[1]
    for b in range(b0, b1):
        for k in range(rows.shape[0]):
            e = rows[k]
            p = p_inc[b, e]
            if p == 0.0:
                continue
            t = (d1[b, e] + d2[k]) / 299792458.0
            m = int(math.floor(t / dt))
            for j in range(nj):
                if g[k, j] > 0.0:
                    hist[b, j, m] += p * g[k, j]


@njit(cache=True, nogil=True)
def _accumulate_second(p_inc, d1, coupling, d12, d3, g, dt, hist, b0, b1):
    ns, ne = coupling.shape
    nj = g.shape[1]
    for b in range(b0, b1):
        for s in range(ns):
            for q in range(ne):
                p = p_inc[b, q]
                if p == 0.0:
                    continue
                w = p * coupling[s, q]
                if w == 0.0:
                    continue
                t = (d1[b, q] + d12[s, q] + d3[s]) / 299792458.0
                m = int(math.floor(t / dt))
                for j in range(nj):
                    if g[s, j] > 0.0:
                        hist[b, j, m] += w * g[s, j]


@dataclass(eq=False)
class _Arrays:
    pos: np.ndarray
    nrm: np.ndarray
    area: np.ndarray
    rho: np.ndarray


def _elements(es: ElementSet, idx=None) -> _Arrays:
    if idx is None:
        idx = np.arange(len(es))
    return _Arrays(np.ascontiguousarray(es.centers[idx]), np.ascontiguousarray(es.normals[idx]),
                   np.ascontiguousarray(es.areas[idx]), np.ascontiguousarray(es.reflectivity[idx]))


@dataclass(eq=False)
class Tracer:
    """Receiver-independent tracing state for one scene and transmitter set.

    The branch-to-element illumination is computed once; ``histograms`` then
    traces any number of receivers against it.
    """

    scene: Scene
    units: list
    elements_first: ElementSet | None = None
    elements_second: ElementSet | None = None
    max_order: int = 2
    time_bin: float = 5e-11
    threads: int = 1
    labels: list = field(init=False)

    def __post_init__(self):
        if self.max_order not in (0, 1, 2):
            raise ValueError("max_order must be 0, 1 or 2")
        branches = [(u, k, br) for u in self.units for k, br in enumerate(u.branches)]
        if not branches:
            raise ValueError("no transmitter branches to trace")
        self.labels = [(u.name, k) for u, k, _ in branches]
        self.b_pos = np.array([br.position for _, _, br in branches], dtype=np.float64)
        self.b_axis = np.array([br.direction for _, _, br in branches], dtype=np.float64)
        self.b_order = np.array([br.emission_order for _, _, br in branches], dtype=np.float64)
        self.b_power = np.array([br.power for _, _, br in branches], dtype=np.float64)
        self._grid = self.scene._grid.args()
        if self.max_order >= 1:
            es = self.elements_first
            gain, dist = _lambert_transfer(self.b_pos, self.b_axis, self.b_order, es.centers, es.normals,
                                           es.areas, *self._grid)
            p_inc = self.b_power[:, None] * gain
            active = np.nonzero((p_inc > 0).any(axis=0) & (es.reflectivity > 0))[0]
            self.e1 = _elements(es, active)
            self.p_inc = np.ascontiguousarray(p_inc[:, active])
            self.d1 = np.ascontiguousarray(dist[:, active])

    @property
    def n_branches(self) -> int:
        return len(self.b_power)

    def _chunks(self):
        n = self.n_branches
        k = max(1, min(int(self.threads), n))
        edges = np.linspace(0, n, k + 1).astype(int)
        return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]

    def _run(self, kernel, args, hist):
        chunks = self._chunks()
        if len(chunks) == 1:
            kernel(*args, hist, *chunks[0])
            return
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            for f in [pool.submit(kernel, *args, hist, b0, b1) for b0, b1 in chunks]:
                f.result()

    def _receiver_gains(self, receiver, arr: _Arrays):
        g, d = receiver.gain_matrix(arr.pos, arr.nrm, 1.0)
        g = g * arr.rho[:, None]
        rows = np.nonzero((g > 0).any(axis=1))[0]
        if len(rows):
            vis = visible_from(receiver.position, arr.pos[rows], self.scene)
            rows = rows[vis]
        return rows, np.ascontiguousarray(g[rows]), np.ascontiguousarray(d[rows])

    def histograms(self, receiver) -> np.ndarray:
        """Received power per (branch, detector, time bin), watts."""
        dt = self.time_bin
        nj = receiver.n_outputs
        tmax = 0.0

        g0, d0 = receiver.gain_matrix(self.b_pos, self.b_axis, self.b_order)
        vis0 = visible_from(receiver.position, self.b_pos, self.scene)
        g0 = g0 * vis0[:, None]
        if len(d0):
            tmax = max(tmax, float(d0.max()))

        first = second = None
        if self.max_order >= 1 and len(self.e1.area):
            rows, g1, d2 = self._receiver_gains(receiver, self.e1)
            if len(rows):
                first = (rows.astype(np.int64), d2, g1)
                tmax = max(tmax, float(self.d1[:, rows].max() + d2.max()))
        if self.max_order == 2 and len(self.e1.area):
            e2 = _elements(self.elements_second)
            rows2, g2, d3 = self._receiver_gains(receiver, e2)
            if len(rows2):
                gain12, d12 = _lambert_transfer(self.e1.pos, self.e1.nrm, np.ones(len(self.e1.area)),
                                                e2.pos[rows2], e2.nrm[rows2], e2.area[rows2], *self._grid)
                coupling = np.ascontiguousarray((gain12 * self.e1.rho[:, None]).T)
                d12 = np.ascontiguousarray(d12.T)
                second = (coupling, d12, d3, g2)
                tmax = max(tmax, float(self.d1.max() + d12.max() + d3.max()))

        nbins = int(math.floor(tmax / SPEED_OF_LIGHT / dt)) + 2
        hist = np.zeros((self.n_branches, nj, nbins))

        for b in range(self.n_branches):
            if d0[b] == 0.0:
                continue
            m = int(math.floor((d0[b] / SPEED_OF_LIGHT) / dt))
            for j in range(nj):
                if g0[b, j] > 0.0:
                    hist[b, j, m] += self.b_power[b] * g0[b, j]
        if first is not None:
            rows, d2, g1 = first
            self._run(_accumulate_first, (self.p_inc, self.d1, rows, d2, g1, dt), hist)
        if second is not None:
            coupling, d12, d3, g2 = second
            self._run(_accumulate_second, (self.p_inc, self.d1, coupling, d12, d3, g2, dt), hist)
        return hist

    def trace(self, receiver) -> list[ImpulseResponse]:
        hist = self.histograms(receiver)
        return [ImpulseResponse(self.time_bin, hist[b, j], 0.0, self.labels[b][0], self.labels[b][1], j)
                for b in range(hist.shape[0]) for j in range(hist.shape[1])]


def trace(request: TraceRequest) -> list[ImpulseResponse]:
    """Impulse responses for every (branch, detector-or-pixel) pair, branch-major."""
    tracer = Tracer(request.scene, request.units, request.elements_first, request.elements_second,
                    request.max_order, request.time_bin, request.threads)
    return tracer.trace(request.receiver)
