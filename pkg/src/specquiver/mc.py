"""Haar Monte Carlo over representation spaces: partition function and Wilson loops.

Haar measure on each unitary factor has total mass one, so with f = 0 the
partition estimate is exactly the number of networks. Any hbar in front of
the action is absorbed into the coefficients of f.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dirac import ActionPolynomial, spectral_action, wilson_loop
from .errors import ValidationError
from .nct import BratteliNetwork, PrespectralProfile, enumerate_networks
from .quiver import Path, Quiver
from .repcat import random_representation

CHUNK = 256


@dataclass(frozen=True)
class McConfig:
    samples: int
    seed: int = 0
    f: ActionPolynomial = field(default_factory=lambda: ActionPolynomial((0.0,)))
    networks: tuple[BratteliNetwork, ...] | None = None  # None: every network for N
    anchor: dict[int, PrespectralProfile] | None = None
    threads: int = 1
    weighted: bool = False  # Wilson loops only: reweight by exp(-Tr f(D/Lambda))

    def __post_init__(self):
        if self.samples < 1:
            raise ValidationError("samples must be at least 1")
        if self.threads < 1:
            raise ValidationError("threads must be at least 1")


@dataclass
class McEstimate:
    mean: float
    std_error: float
    samples_used: int
    per_network: dict[int, tuple[float, float]] = field(default_factory=dict)
    note: str = ""
    mean_imag: float = 0.0

    def to_json(self) -> dict:
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "samples": self.samples_used,
            "per_network": {str(k): {"mean": m, "std_error": s} for k, (m, s) in self.per_network.items()},
            "mean_imag": self.mean_imag,
            "note": self.note,
        }


@dataclass
class Welford:
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def push_many(self, xs: np.ndarray) -> "Welford":
        for x in xs:
            self.n += 1
            dx = x - self.mean
            self.mean += dx / self.n
            self.m2 += dx * (x - self.mean)
        return self

    def merge(self, other: "Welford") -> "Welford":
        if other.n == 0:
            return self
        if self.n == 0:
            return Welford(other.n, other.mean, other.m2)
        n = self.n + other.n
        delta = other.mean - self.mean
        return Welford(n, self.mean + delta * other.n / n, self.m2 + other.m2 + delta * delta * self.n * other.n / n)

    @property
    def std_error(self) -> float:
        if self.n < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.n - 1) / self.n)


def chunk_rng(seed: int, net_index: int, chunk: int) -> np.random.Generator:
    """Independent stream per (network, chunk); the layout never depends on the thread count."""
    ss = np.random.SeedSequence(seed, spawn_key=(net_index, chunk))
    return np.random.Generator(np.random.Philox(ss))


def _chunks(samples: int):
    return [(c, min(CHUNK, samples - c * CHUNK)) for c in range((samples + CHUNK - 1) // CHUNK)]


def _run(jobs, work, threads: int):
    if threads == 1:
        return [work(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, jobs))


def _networks(q: Quiver, N: int, cfg: McConfig) -> tuple[BratteliNetwork, ...]:
    if cfg.networks is not None:
        for net in cfg.networks:
            net.validate(q)
        return tuple(cfg.networks)
    return tuple(enumerate_networks(q, N, anchor=cfg.anchor))


def _action_values(q, net, f, rng, n):
    return np.array([spectral_action(random_representation(q, net, rng), f) for _ in range(n)])


def estimate_partition(q: Quiver, N: int, cfg: McConfig) -> McEstimate:
    """Z = sum over networks of the Haar average of exp(-Tr f(D/Lambda))."""
    nets = _networks(q, N, cfg)
    if not nets:
        return McEstimate(0.0, 0.0, 0, {}, note=f"no Bratteli networks for N={N}")

    def work(job):
        i, c, n = job
        vals = np.exp(-_action_values(q, nets[i], cfg.f, chunk_rng(cfg.seed, i, c), n))
        return i, Welford().push_many(vals)

    jobs = [(i, c, n) for i in range(len(nets)) for c, n in _chunks(cfg.samples)]
    acc = [Welford() for _ in nets]
    for i, w in _run(jobs, work, cfg.threads):
        acc[i] = acc[i].merge(w)
    per = {i: (w.mean, w.std_error) for i, w in enumerate(acc)}
    mean = sum(w.mean for w in acc)
    se = math.sqrt(sum(w.std_error**2 for w in acc))
    return McEstimate(mean, se, sum(w.n for w in acc), per)


def wilson_expectation(q: Quiver, N: int, loop: Path, cfg: McConfig) -> McEstimate:
    """Haar mean of the Wilson loop, network by network and pooled over networks.

    With ``cfg.weighted`` every sample is weighted by exp(-Tr f(D/Lambda)) and
    the ratio estimator is reported with a delta-method error.
    """
    nets = _networks(q, N, cfg)
    if not nets:
        return McEstimate(0.0, 0.0, 0, {}, note=f"no Bratteli networks for N={N}")

    def work(job):
        i, c, n = job
        rng = chunk_rng(cfg.seed, i, c)
        w_re, w_im, wt = [], [], []
        for _ in range(n):
            rep = random_representation(q, nets[i], rng)
            w = wilson_loop(rep, loop)
            w_re.append(w.real)
            w_im.append(w.imag)
            wt.append(math.exp(-spectral_action(rep, cfg.f)) if cfg.weighted else 1.0)
        return i, np.array(w_re), np.array(w_im), np.array(wt)

    jobs = [(i, c, n) for i in range(len(nets)) for c, n in _chunks(cfg.samples)]
    parts: dict[int, list] = {i: [] for i in range(len(nets))}
    for i, re, im, wt in _run(jobs, work, cfg.threads):
        parts[i].append((re, im, wt))
    per = {}
    all_re, all_im, all_wt = [], [], []
    for i in range(len(nets)):
        re = np.concatenate([p[0] for p in parts[i]])
        im = np.concatenate([p[1] for p in parts[i]])
        wt = np.concatenate([p[2] for p in parts[i]])
        per[i] = _estimate(re, wt, cfg.weighted)
        all_re.append(re)
        all_im.append(im)
        all_wt.append(wt)
    re, im, wt = np.concatenate(all_re), np.concatenate(all_im), np.concatenate(all_wt)
    mean, se = _estimate(re, wt, cfg.weighted)
    mean_im, _ = _estimate(im, wt, cfg.weighted)
    return McEstimate(mean, se, len(re), per, mean_imag=mean_im)


def _estimate(x: np.ndarray, w: np.ndarray, weighted: bool) -> tuple[float, float]:
    if not weighted:
        acc = Welford().push_many(x)
        return acc.mean, acc.std_error
    n = len(x)
    sw = w.sum()
    if sw == 0.0:
        raise ValidationError("all action weights underflowed to zero")
    r = float((w * x).sum() / sw)
    if n < 2:
        return r, 0.0
    # delta method for a ratio of means
    z = w * (x - r)
    se = math.sqrt(np.var(z, ddof=1) / n) / (sw / n)
    return r, float(se)
