"""The two decreasing-step EM iterations, the exact 1-D OU reference, ensembles.

Single-chain step operations are the reference semantics; run_ensemble
executes many chains with the same per-chain random streams but draws and
transforms innovations in blocks for speed.  Chain i of an ensemble always
consumes stream (master_seed, i) in a fixed scheme-defined order, so output
is bit-reproducible for a fixed configuration regardless of worker count.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .drift import DriftModel, builtin_ou
from .sampling import (
    NoiseConstants,
    StableSpec,
    noise_constants,
    sample_pareto_vec,
    sample_stable_vec,
)
from .schedule import StepSchedule

STABLE_EM = "stable-em"
PARETO_EM = "pareto-em"
EXACT_OU = "exact-ou"
SCHEMES = (STABLE_EM, PARETO_EM, EXACT_OU)

# Fixed internals of the block engine; never depend on worker count.
_STEP_CHUNK = 8192
_BLOCK_DOUBLES = 1 << 25  # ~256 MiB of innovation doubles per block

#: Fraction of chains allowed to hit non-finite positions before the run fails.
ABORT_BUDGET = 1e-3


@dataclass(frozen=True)
class ChainState:
    x: np.ndarray  # d-vector
    n: int
    t: float


@dataclass(frozen=True)
class EnsembleRun:
    scheme: str
    spec: StableSpec
    drift: DriftModel
    schedule: StepSchedule
    m_chains: int
    x0: np.ndarray
    checkpoints: tuple[int, ...]
    master_seed: int
    stream_offset: int = 0  # reserved offsets pick reference ensembles

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.m_chains < 1:
            raise ValueError("m_chains must be >= 1")
        cps = tuple(int(c) for c in self.checkpoints)
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ValueError("checkpoints must be strictly increasing")
        if any(c < 0 for c in cps):
            raise ValueError("checkpoints must be nonnegative")
        x0 = np.broadcast_to(np.asarray(self.x0, dtype=float).ravel(), (self.spec.dim,)).copy()
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "checkpoints", cps)
        if self.scheme == EXACT_OU:
            if self.spec.dim != 1:
                raise ValueError("exact-ou is 1-D only")
            if self.drift.name != "ou":
                raise ValueError("exact-ou requires the ou drift")
            if not np.allclose(self.spec.matrix_a, np.eye(1)):
                raise ValueError("exact-ou requires A = 1")


@dataclass
class Snapshot:
    n: int
    t: float
    gamma_n: float
    samples: np.ndarray  # (m, d); aborted chains are NaN rows


@dataclass
class EnsembleResult:
    snapshots: list[Snapshot]
    abort_count: int
    m_chains: int


# ---------------------------------------------------------------------------
# Single-chain reference steps.
# ---------------------------------------------------------------------------


def step_stable(
    state: ChainState,
    drift: DriftModel,
    spec: StableSpec,
    schedule: StepSchedule,
    rng: np.random.Generator,
    innovation=None,
) -> ChainState:
    """x' = x + gamma b(x) + gamma^{1/alpha} A zeta, gamma = gamma_{n+1}."""
    gamma = schedule.gamma_at(state.n + 1)
    zeta = sample_stable_vec(spec, rng) if innovation is None else np.asarray(innovation, float)
    x = np.asarray(state.x, dtype=float).ravel()
    xp = x + gamma * drift(x[None, :])[0] + gamma ** (1.0 / spec.alpha) * spec.matrix_a @ zeta
    return ChainState(x=xp, n=state.n + 1, t=state.t + gamma)


def step_pareto(
    state: ChainState,
    drift: DriftModel,
    spec: StableSpec,
    schedule: StepSchedule,
    constants: NoiseConstants,
    rng: np.random.Generator,
    innovation=None,
) -> ChainState:
    """x' = x + gamma b(x) + (gamma^{1/alpha}/beta) A Ztilde."""
    gamma = schedule.gamma_at(state.n + 1)
    if innovation is None:
        z = sample_pareto_vec(spec.alpha, spec.dim, rng)
    else:
        z = np.asarray(innovation, dtype=float)
    x = np.asarray(state.x, dtype=float).ravel()
    scale = gamma ** (1.0 / spec.alpha) / constants.beta
    xp = x + gamma * drift(x[None, :])[0] + scale * spec.matrix_a @ z
    return ChainState(x=xp, n=state.n + 1, t=state.t + gamma)


def exact_ou_sigma(alpha: float, gamma: float) -> float:
    """Innovation scale of the exact OU transition: ((1-e^{-alpha g})/alpha)^{1/alpha}."""
    return ((1.0 - math.exp(-alpha * gamma)) / alpha) ** (1.0 / alpha)


def step_exact_ou(
    state: ChainState,
    alpha: float,
    schedule: StepSchedule,
    rng: np.random.Generator,
    innovation=None,
) -> ChainState:
    """Exact transition of dX = -X dt + dZ over one step: x' = e^{-g} x + sigma(g) zeta."""
    x = np.asarray(state.x, dtype=float).ravel()
    if x.size != 1:
        raise ValueError("exact OU stepping is 1-D only")
    gamma = schedule.gamma_at(state.n + 1)
    if innovation is None:
        from .sampling import sample_stable_1d

        zeta = sample_stable_1d(alpha, rng)
    else:
        zeta = float(np.asarray(innovation).ravel()[0])
    xp = math.exp(-gamma) * x + exact_ou_sigma(alpha, gamma) * zeta
    return ChainState(x=xp, n=state.n + 1, t=state.t + gamma)


# ---------------------------------------------------------------------------
# Block engine.
# ---------------------------------------------------------------------------


def _draw_block_innovations(scheme, alpha, d, seeds, n0, n1):
    """Innovations for steps n0..n1-1 of a block of chains; shape (B, C, d).

    Per chain and step chunk the draw order is fixed by the scheme:
    stable/exact-ou draw a uniform block then an exponential block (plus a
    normal block for d > 1); pareto draws a radius-uniform block then a
    sign-uniform (d = 1) or normal (d > 1) block.
    """
    B, C = len(seeds), n1 - n0
    if scheme in (STABLE_EM, EXACT_OU) and d == 1:
        u = np.empty((B, C))
        w = np.empty((B, C))
        for i, gen in enumerate(seeds):
            u[i] = gen.random(C)
            w[i] = gen.standard_exponential(C)
        u = np.pi * (u - 0.5)
        z = (np.sin(alpha * u) / np.cos(u) ** (1.0 / alpha)) * (
            np.cos(u - alpha * u) / w
        ) ** ((1.0 - alpha) / alpha)
        return z[:, :, None]
    if scheme == STABLE_EM:
        rho = alpha / 2.0
        th = np.empty((B, C))
        w = np.empty((B, C))
        g = np.empty((B, C, d))
        for i, gen in enumerate(seeds):
            th[i] = gen.random(C)
            w[i] = gen.standard_exponential(C)
            g[i] = gen.standard_normal((C, d))
        th *= np.pi
        s = (
            np.sin(rho * th)
            * np.sin((1.0 - rho) * th) ** ((1.0 - rho) / rho)
            / np.sin(th) ** (1.0 / rho)
        ) * w ** (-(1.0 - rho) / rho)
        return np.sqrt(2.0 * s)[:, :, None] * g
    # pareto
    v = np.empty((B, C))
    if d == 1:
        su = np.empty((B, C))
        for i, gen in enumerate(seeds):
            v[i] = gen.random(C)
            su[i] = gen.random(C)
        r = v ** (-1.0 / alpha)
        return (np.where(su < 0.5, -r, r))[:, :, None]
    g = np.empty((B, C, d))
    for i, gen in enumerate(seeds):
        v[i] = gen.random(C)
        g[i] = gen.standard_normal((C, d))
    g /= np.linalg.norm(g, axis=2, keepdims=True)
    return (v ** (-1.0 / alpha))[:, :, None] * g


def _run_block(cfg: EnsembleRun, lo: int, hi: int, g, cp_set):
    alpha, d = cfg.spec.alpha, cfg.spec.dim
    a_mat = cfg.spec.matrix_a
    identity_a = np.allclose(a_mat, np.eye(d))
    n_max = cfg.checkpoints[-1] if cfg.checkpoints else 0
    beta = noise_constants(cfg.spec).beta if cfg.scheme == PARETO_EM else None

    if cfg.scheme == STABLE_EM:
        scale = g ** (1.0 / alpha)
    elif cfg.scheme == PARETO_EM:
        scale = g ** (1.0 / alpha) / beta
    else:
        scale = ((1.0 - np.exp(-alpha * g)) / alpha) ** (1.0 / alpha)
        decay = np.exp(-g)

    B = hi - lo
    x = np.tile(cfg.x0, (B, 1))
    out = np.empty((B, len(cfg.checkpoints), d))
    cp_index = {n: i for i, n in enumerate(cfg.checkpoints)}
    if 0 in cp_set:
        out[:, cp_index[0], :] = x

    gens = [
        rngmod.derive_stream(cfg.master_seed, cfg.stream_offset + i) for i in range(lo, hi)
    ]
    n = 0
    while n < n_max:
        n1 = min(n + _STEP_CHUNK, n_max)
        innov = _draw_block_innovations(cfg.scheme, alpha, d, gens, n, n1)
        for s in range(n1 - n):
            step = n + s  # advancing from step index `step` to `step + 1`
            zeta = innov[:, s, :]
            if not identity_a:
                zeta = zeta @ a_mat.T
            if cfg.scheme == EXACT_OU:
                x = decay[step] * x + scale[step] * zeta
            else:
                x = x + g[step] * cfg.drift(x) + scale[step] * zeta
            if (step + 1) in cp_set:
                out[:, cp_index[step + 1], :] = x
        n = n1
    aborted = ~np.all(np.isfinite(x), axis=1)
    # A chain that overflowed mid-way stays non-finite forever, so marking
    # NaN rows checkpoint-wise after the fact is equivalent to an abort.
    for j in range(len(cfg.checkpoints)):
        bad = ~np.all(np.isfinite(out[:, j, :]), axis=1)
        out[bad, j, :] = np.nan
        aborted |= bad
    return out, aborted


def run_ensemble(cfg: EnsembleRun, workers: int = 1) -> EnsembleResult:
    """Advance m_chains independent chains, recording checkpoint snapshots.

    Chains shard into fixed-size blocks; each block's result lands at its
    fixed row range, so any worker count produces identical output.  A
    chain aborts on a non-finite position (NaN rows in snapshots); the run
    fails if more than ABORT_BUDGET of the chains abort.
    """
    d = cfg.spec.dim
    cp_set = frozenset(cfg.checkpoints)
    n_max = cfg.checkpoints[-1] if cfg.checkpoints else 0
    g = cfg.schedule.gammas(n_max) if n_max else np.empty(0)
    t = cfg.schedule.t_grid(n_max)

    block = max(1, _BLOCK_DOUBLES // (max(1, min(n_max, _STEP_CHUNK)) * max(d, 2)))
    ranges = [(lo, min(lo + block, cfg.m_chains)) for lo in range(0, cfg.m_chains, block)]

    samples = np.empty((cfg.m_chains, len(cfg.checkpoints), d))
    aborted = np.zeros(cfg.m_chains, dtype=bool)

    def work(rg):
        lo, hi = rg
        return lo, hi, _run_block(cfg, lo, hi, g, cp_set)

    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, ranges))
    else:
        results = [work(rg) for rg in ranges]
    for lo, hi, (blk, ab) in results:
        samples[lo:hi] = blk
        aborted[lo:hi] = ab

    abort_count = int(aborted.sum())
    if abort_count > ABORT_BUDGET * cfg.m_chains:
        raise RuntimeError(
            f"{abort_count}/{cfg.m_chains} chains hit non-finite positions "
            f"(budget {ABORT_BUDGET:.1%})"
        )
    snaps = [
        Snapshot(n=n, t=float(t[n]), gamma_n=float(g[n - 1]) if n >= 1 else float("nan"),
                 samples=samples[:, j, :])
        for j, n in enumerate(cfg.checkpoints)
    ]
    return EnsembleResult(snapshots=snaps, abort_count=abort_count, m_chains=cfg.m_chains)


def empirical_moment(snap: Snapshot, kappa: float, alpha: float) -> float:
    """(1/m) sum_i |x_i|^kappa; refuses kappa >= alpha (infinite moment)."""
    if kappa >= alpha:
        raise ValueError(
            f"kappa={kappa} >= alpha={alpha}: stable laws have no finite alpha-moment, "
            "the empirical average would not converge"
        )
    if kappa < 1.0:
        raise ValueError("kappa must be >= 1")
    norms = np.linalg.norm(snap.samples, axis=1)
    return float(np.nanmean(norms**kappa))


# ---------------------------------------------------------------------------
# Snapshot serialization: CSV of positions plus a JSON sidecar.
# ---------------------------------------------------------------------------


def save_snapshot(snap: Snapshot, prefix: str, meta: dict) -> None:
    d = snap.samples.shape[1]
    with open(f"{prefix}.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["chain_index"] + [f"x{j}" for j in range(d)])
        for i, row in enumerate(snap.samples):
            writer.writerow([i] + [repr(float(v)) for v in row])
    sidecar = dict(meta)
    sidecar.update({"n": snap.n, "t": snap.t, "gamma_n": snap.gamma_n,
                    "generator": rngmod.GENERATOR_NAME})
    with open(f"{prefix}.json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def make_exact_ou_run(
    alpha: float,
    schedule: StepSchedule,
    m_chains: int,
    x0: float,
    checkpoints,
    master_seed: int,
    stream_offset: int = 0,
) -> EnsembleRun:
    """Convenience constructor for the exact 1-D OU reference ensemble."""
    return EnsembleRun(
        scheme=EXACT_OU,
        spec=StableSpec.isotropic(alpha, 1),
        drift=builtin_ou(1),
        schedule=schedule,
        m_chains=m_chains,
        x0=np.array([x0]),
        checkpoints=tuple(checkpoints),
        master_seed=master_seed,
        stream_offset=stream_offset,
    )
