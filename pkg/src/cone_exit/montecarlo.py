"""Monte Carlo estimates of non-exit probabilities.

Paths are simulated in chunks. Chunk ``i`` draws from its own Philox
stream keyed by the seed with counter block ``i``, so the result does not
depend on how chunks are scheduled across threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DomainError
from .geometry import HalfLine, Wedge, WeylChamber, quarter_plane

# a crossing probability below e^-40 is not worth a uniform draw
_SKIP_EXPONENT = 40.0


@dataclass(frozen=True)
class McConfig:
    paths: int = 100_000
    dt: float = 1e-3
    seed: int = 0
    bridge_correction: bool = True
    chunk: int = 2**14

    def __post_init__(self):
        if int(self.paths) != self.paths or self.paths < 1:
            raise DomainError(f"paths must be a positive integer, got {self.paths!r}")
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise DomainError(f"dt must be positive, got {self.dt!r}")
        if int(self.chunk) != self.chunk or self.chunk < 1:
            raise DomainError(f"chunk must be a positive integer, got {self.chunk!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


@dataclass(frozen=True)
class McEstimate:
    p_hat: float
    std_err: float
    paths: int
    dt: float
    seed: int
    survivors: int = 0
    steps: int = 0
    bridge_correction: bool = True


@dataclass(frozen=True)
class _Faces:
    normals: np.ndarray  # (F, d) inward unit normals of the bounding lines
    union: bool  # True for reflex wedges: inside iff any face is positive
    edges: np.ndarray  # (2, d) edge directions, used only in union mode


def domain_faces(domain):
    """Face description for a domain object or a name.

    Names: ``"halfline"``, ``"quarter"``, ``"weyl:<d>"``, ``"wedge:<beta>"``.
    """
    domain = resolve_domain(domain)
    if isinstance(domain, Wedge):
        normals = np.array(domain.inward_normals())
        edges = np.array(domain.edge_directions())
        return _Faces(normals, domain.beta > math.pi, edges)
    normals = np.array(domain.inward_normals(), dtype=float).reshape(-1, domain.dim)
    return _Faces(normals, False, np.zeros((2, domain.dim)))


def resolve_domain(domain):
    if isinstance(domain, (Wedge, HalfLine, WeylChamber)):
        return domain
    if isinstance(domain, str):
        name, _, arg = domain.partition(":")
        name = name.strip().lower()
        if name in ("halfline", "half-line"):
            return HalfLine()
        if name == "quarter":
            return quarter_plane()
        if name == "weyl":
            return WeylChamber(int(arg) if arg else 2)
        if name == "wedge" and arg:
            return Wedge(float(arg))
    raise DomainError(f"unknown domain {domain!r}")


@numba.njit(nogil=True, cache=True)
def _ray_distance(y0, y1, ex, ey):
    s = y0 * ex + y1 * ey
    if s <= 0.0:
        return math.sqrt(y0 * y0 + y1 * y1)
    return abs(y1 * ex - y0 * ey)


@numba.njit(nogil=True, cache=True)
def _boundary_distance(pos, normals, union, edges, dist):
    """Fill per-face signed distances; return (inside, distance to boundary)."""
    n_faces, d = normals.shape
    for f in range(n_faces):
        s = 0.0
        for k in range(d):
            s += normals[f, k] * pos[k]
        dist[f] = s
    if union:
        if dist[0] <= 0.0 and dist[1] <= 0.0:
            return False, 0.0
        r0 = _ray_distance(pos[0], pos[1], edges[0, 0], edges[0, 1])
        r1 = _ray_distance(pos[0], pos[1], edges[1, 0], edges[1, 1])
        return True, min(r0, r1)
    for f in range(n_faces):
        if dist[f] <= 0.0:
            return False, 0.0
    return True, 0.0


@numba.njit(nogil=True, cache=True)
def _simulate_chunk(gen, n_paths, x0, drift, normals, union, edges, n_steps, dt, bridge):
    d = x0.shape[0]
    n_faces = normals.shape[0]
    sd = math.sqrt(dt)
    pos = np.empty(d)
    prev = np.empty(n_faces)
    cur = np.empty(n_faces)
    survivors = 0
    for _ in range(n_paths):
        for k in range(d):
            pos[k] = x0[k]
        _, prev_ray = _boundary_distance(pos, normals, union, edges, prev)
        alive = True
        for _s in range(n_steps):
            for k in range(d):
                pos[k] += drift[k] * dt + sd * gen.standard_normal()
            inside, ray = _boundary_distance(pos, normals, union, edges, cur)
            if not inside:
                alive = False
                break
            if bridge:
                if union:
                    lam = 2.0 * prev_ray * ray / dt
                    if lam < _SKIP_EXPONENT and gen.random() < math.exp(-lam):
                        alive = False
                        break
                else:
                    for f in range(n_faces):
                        lam = 2.0 * prev[f] * cur[f] / dt
                        if lam < _SKIP_EXPONENT and gen.random() < math.exp(-lam):
                            alive = False
                            break
                    if not alive:
                        break
            for f in range(n_faces):
                prev[f] = cur[f]
            prev_ray = ray
        if alive:
            survivors += 1
    return survivors


def chunk_generator(seed, index):
    """Independent generator for chunk ``index`` (counter-block substream)."""
    return np.random.Generator(np.random.Philox(key=seed, counter=index << 192))


def thread_count():
    env = os.environ.get("CONE_EXIT_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise DomainError(f"CONE_EXIT_THREADS must be an integer, got {env!r}")
        if n < 1:
            raise DomainError(f"CONE_EXIT_THREADS must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


def mc_survival(domain, a, x, t, cfg=McConfig(), threads=None):
    """Estimate ``P_x[tau > t]`` by simulating drifted Brownian paths.

    The horizon is split into ``ceil(t/dt)`` equal steps, so the step
    actually used can be slightly below ``cfg.dt``.
    """
    dom = resolve_domain(domain)
    faces = domain_faces(dom)
    dim = faces.normals.shape[1]
    a = np.asarray(a, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    if a.shape != (dim,) or x.shape != (dim,):
        raise DomainError(f"drift and start point must be {dim}-dimensional")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(x))):
        raise DomainError("drift and start point must be finite")
    t = float(t)
    if not t > 0.0:
        raise DomainError(f"horizon must be positive, got {t!r}")
    if cfg.dt > t:
        raise DomainError(f"dt={cfg.dt} exceeds the horizon t={t}")
    if not dom.contains(x):
        raise DomainError(f"start point {x.tolist()} must be interior")

    n_steps = max(1, math.ceil(t / cfg.dt - 1e-12))
    step = t / n_steps
    n_chunks = -(-cfg.paths // cfg.chunk)
    sizes = [min(cfg.chunk, cfg.paths - i * cfg.chunk) for i in range(n_chunks)]

    def run(i):
        return _simulate_chunk(
            chunk_generator(cfg.seed, i),
            sizes[i],
            x,
            a,
            faces.normals,
            faces.union,
            faces.edges,
            n_steps,
            step,
            cfg.bridge_correction,
        )

    n_threads = min(threads or thread_count(), n_chunks)
    if n_threads == 1:
        counts = [run(i) for i in range(n_chunks)]
    else:
        with ThreadPoolExecutor(n_threads) as pool:
            counts = list(pool.map(run, range(n_chunks)))
    survivors = int(sum(counts))
    p = survivors / cfg.paths
    return McEstimate(
        p_hat=p,
        std_err=math.sqrt(p * (1.0 - p) / cfg.paths),
        paths=cfg.paths,
        dt=cfg.dt,
        seed=cfg.seed,
        survivors=survivors,
        steps=n_steps,
        bridge_correction=cfg.bridge_correction,
    )


@dataclass(frozen=True)
class ProbeRow:
    dt: float
    corrected: McEstimate
    uncorrected: McEstimate


def mc_convergence_probe(domain, a, x, t, cfg, dt_ladder, threads=None):
    """Run :func:`mc_survival` at each step size, with and without bridge correction."""
    ladder = [float(h) for h in dt_ladder]
    if not ladder:
        raise DomainError("dt ladder is empty")
    if any(b >= c for c, b in zip(ladder, ladder[1:])):
        raise DomainError(f"dt ladder must be strictly decreasing, got {ladder}")
    rows = []
    for h in ladder:
        on = McConfig(cfg.paths, h, cfg.seed, True, cfg.chunk)
        off = McConfig(cfg.paths, h, cfg.seed, False, cfg.chunk)
        rows.append(
            ProbeRow(
                h,
                mc_survival(domain, a, x, t, on, threads),
                mc_survival(domain, a, x, t, off, threads),
            )
        )
    return rows
