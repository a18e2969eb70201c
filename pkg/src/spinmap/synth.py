"""Synthetic ground-truth clusters, noisy coupling tables, and telegraph
traces.  Everything is deterministic under its seed.

The noisy coupling generator defaults to a Gaussian noise model truncated
at 3 sigma, matching the reading of the placement tolerance window as a
3-sigma bound; unbounded Gaussian and uniform models are available for
worst-case studies.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .lattice import SiteTable
from .placement import CouplingMeasurement, _sedor_between, find_anchor_site


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "gaussian"  # gaussian | uniform | none
    amplitude: float = 0.2  # Hz (sigma for gaussian, half-width for uniform)
    truncate_sigmas: float = 3.0  # gaussian only; None disables truncation

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform", "none"):
            raise InputError(f"unknown noise kind {self.kind!r}")
        if self.amplitude < 0:
            raise InputError("noise amplitude must be >= 0")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "none" or self.amplitude == 0.0:
            return np.zeros(n)
        if self.kind == "uniform":
            return rng.uniform(-self.amplitude, self.amplitude, n)
        x = rng.normal(0.0, self.amplitude, n)
        if self.truncate_sigmas is not None:
            cap = self.truncate_sigmas * self.amplitude
            while True:
                bad = np.abs(x) > cap
                if not bad.any():
                    break
                x[bad] = rng.normal(0.0, self.amplitude, int(bad.sum()))
        return x

    @property
    def sigma(self) -> float:
        if self.kind == "uniform":
            return self.amplitude / math.sqrt(3.0)
        return max(self.amplitude, 1e-6)


@dataclass(frozen=True)
class ClusterStructure:
    kind: str = "clustered"  # clustered | random
    n_clusters: int = 4
    size_min: int = 5
    size_max: int = 7
    seed_min_sep: float = 6.5  # A between sub-cluster seed sites
    seed_max_link: float = 8.5  # A, each new seed within reach of another

    def __post_init__(self):
        if self.kind not in ("clustered", "random"):
            raise InputError(f"unknown structure kind {self.kind!r}")
        if self.kind == "clustered" and not (1 <= self.size_min <= self.size_max):
            raise InputError("cluster sizes must satisfy 1 <= size_min <= size_max")
        if self.seed_min_sep > self.seed_max_link:
            raise InputError("seed_min_sep must not exceed seed_max_link")


def _seed_tuple(seed):
    """Flatten a seed (int or nested ints) for numpy's Generator."""
    if isinstance(seed, (tuple, list)):
        out = []
        for s in seed:
            out.extend(_seed_tuple(s))
        return tuple(out)
    return (int(seed),)


@dataclass(frozen=True)
class SyntheticCluster:
    """Ground-truth assignment of labels to lattice sites."""

    truth: dict  # label -> LatticeSite
    noise_model: NoiseModel
    seed: tuple
    cluster_of: dict = field(default_factory=dict)  # label -> cluster id

    @property
    def labels(self):
        return list(self.truth.keys())

    def positions(self):
        return {lab: site.position for lab, site in self.truth.items()}


def _pick_cluster_seeds(table, rng, anchor_idx, n_clusters, r_min=4.0, r_max=11.0,
                        min_sep=6.5, max_link=8.5, attempts=400):
    """Deterministically sample cluster seed sites around the anchor.

    Seeds are mutually separated by at least min_sep and each new seed lies
    within max_link of an existing one so inter-cluster couplings stay
    measurable.
    """
    pos = table.positions
    r = np.linalg.norm(pos, axis=1)
    pool = np.flatnonzero((r >= r_min) & (r <= r_max))
    seeds = [anchor_idx]
    for _ in range(attempts):
        if len(seeds) == n_clusters:
            break
        cand = int(rng.choice(pool))
        d = np.linalg.norm(pos[seeds] - pos[cand], axis=1)
        if d.min() >= min_sep and d.min() <= max_link:
            seeds.append(cand)
    if len(seeds) < n_clusters:
        raise InputError(
            f"could not find {n_clusters} cluster seeds on this lattice"
        )
    return seeds


def generate_cluster(
    lattice,
    n_si: int,
    n_c: int,
    structure: ClusterStructure = ClusterStructure(),
    seed: int = 0,
    noise: NoiseModel = NoiseModel(),
) -> SyntheticCluster:
    """Choose ground-truth sites for n_si silicon and n_c carbon spins.

    The anchor label Si1 always sits on the on-axis reference site.  In
    clustered mode, spins grow as compact neighborhoods around n_clusters
    seed sites (first seed = anchor); sizes are balanced within
    [size_min, size_max].
    """
    table = lattice if isinstance(lattice, SiteTable) else SiteTable(lattice)
    if n_si < 1:
        raise InputError("need at least the Si1 anchor (n_si >= 1)")
    rng = np.random.default_rng(_seed_tuple(seed))
    anchor_idx = find_anchor_site(table)
    n_total = n_si + n_c
    si_idx_all = table.by_species["Si"]
    c_idx_all = table.by_species["C"]
    if n_si > si_idx_all.size or n_c > c_idx_all.size:
        raise InputError("requested more spins than lattice sites available")

    chosen_si, chosen_c = [anchor_idx], []
    cluster_of_site = {anchor_idx: 0}

    if structure.kind == "random":
        pos = table.positions
        r = np.linalg.norm(pos, axis=1)
        ball = 12.0
        si_pool = [i for i in si_idx_all if r[i] <= ball and i != anchor_idx]
        c_pool = [i for i in c_idx_all if r[i] <= ball]
        chosen_si += [int(i) for i in rng.choice(si_pool, size=n_si - 1, replace=False)]
        chosen_c += [int(i) for i in rng.choice(c_pool, size=n_c, replace=False)]
        cluster_of_site.update({i: 0 for i in chosen_si + chosen_c})
    else:
        k = structure.n_clusters
        if not (k * structure.size_min <= n_total <= k * structure.size_max):
            raise InputError(
                f"{n_total} spins cannot split into {k} clusters of "
                f"{structure.size_min}-{structure.size_max}"
            )
        sizes = [structure.size_min] * k
        i = 0
        while sum(sizes) < n_total:
            sizes[i % k] += 1
            i += 1
        # distribute carbons (at most one per cluster until exhausted)
        c_in_cluster = [0] * k
        for i in range(n_c):
            c_in_cluster[int(rng.integers(0, k))] += 1
        seeds = _pick_cluster_seeds(
            table, rng, anchor_idx, k,
            min_sep=structure.seed_min_sep, max_link=structure.seed_max_link,
        )
        taken = {anchor_idx}
        pos = table.positions
        for ci, (seed_idx, size) in enumerate(zip(seeds, sizes)):
            n_c_here = c_in_cluster[ci]
            n_si_here = size - n_c_here
            if ci == 0:
                n_si_here -= 1  # anchor already counted
            d_si = np.linalg.norm(pos[si_idx_all] - pos[seed_idx], axis=1)
            for j in np.argsort(d_si, kind="stable"):
                if n_si_here == 0:
                    break
                cand = int(si_idx_all[j])
                if cand in taken:
                    continue
                taken.add(cand)
                chosen_si.append(cand)
                cluster_of_site[cand] = ci
                n_si_here -= 1
            d_c = np.linalg.norm(pos[c_idx_all] - pos[seed_idx], axis=1)
            for j in np.argsort(d_c, kind="stable"):
                if n_c_here == 0:
                    break
                cand = int(c_idx_all[j])
                if cand in taken:
                    continue
                taken.add(cand)
                chosen_c.append(cand)
                cluster_of_site[cand] = ci
                n_c_here -= 1
        if len(chosen_si) != n_si or len(chosen_c) != n_c:
            raise InputError("lattice too small for the requested cluster layout")

    truth = {}
    cluster_of = {}
    for n, idx in enumerate(chosen_si, start=1):
        truth[f"Si{n}"] = table.sites[idx]
        cluster_of[f"Si{n}"] = cluster_of_site[idx]
    for n, idx in enumerate(chosen_c, start=1):
        truth[f"C{n}"] = table.sites[idx]
        cluster_of[f"C{n}"] = cluster_of_site[idx]
    return SyntheticCluster(truth, noise, _seed_tuple(seed), cluster_of)


def generate_spread_cluster(lattice, n_target: int = 24, seed: int = 0,
                            noise: NoiseModel = NoiseModel(), min_separation: float = 4.2,
                            ball_radius: float = 12.5, min_degree: int = 4,
                            min_detectable: float = 3.0, min_core: int = 10,
                            max_tries: int = 40) -> SyntheticCluster:
    """Loosely packed all-silicon cluster for refinement studies.

    Samples up to n_target Si sites with pairwise separation above
    min_separation inside ball_radius, then prunes spins until every
    remaining spin has at least min_degree noiseless couplings >=
    min_detectable.  The surviving core (>= min_core spins, anchor always
    kept) carries mostly weak couplings, so refined positions respond to
    noise on the angstrom scale.  Retries deterministically when the prune
    cascades below min_core.
    """
    table = lattice if isinstance(lattice, SiteTable) else SiteTable(lattice)
    anchor_idx = find_anchor_site(table)
    pos = table.positions
    r = np.linalg.norm(pos, axis=1)
    pool = [int(i) for i in table.by_species["Si"] if r[i] <= ball_radius]

    def degrees(nodes):
        deg = {i: 0 for i in nodes}
        for x, a in enumerate(nodes):
            for b in nodes[x + 1:]:
                if _sedor_between(table, a, b) >= min_detectable:
                    deg[a] += 1
                    deg[b] += 1
        return deg

    for attempt in range(max_tries):
        rng = np.random.default_rng(_seed_tuple(seed) + (attempt, 0x5B12EAD))
        chosen = [anchor_idx]
        for _ in range(8000):
            if len(chosen) >= n_target:
                break
            cand = int(rng.choice(pool))
            if np.linalg.norm(pos[chosen] - pos[cand], axis=1).min() >= min_separation:
                chosen.append(cand)
        nodes = chosen[:]
        while True:
            deg = degrees(nodes)
            weak = sorted(
                (i for i in nodes if deg[i] < min_degree and i != anchor_idx),
                key=lambda i: (deg[i], nodes.index(i)),
            )
            if not weak:
                break
            nodes.remove(weak[0])
        if len(nodes) >= min_core and degrees(nodes)[anchor_idx] >= 1:
            truth = {f"Si{n}": table.sites[i] for n, i in enumerate(nodes, start=1)}
            return SyntheticCluster(truth, noise, _seed_tuple(seed), {lab: 0 for lab in truth})
    raise InputError(
        f"no spread cluster with >= {min_core} spins found in {max_tries} "
        f"attempts for seed {seed}"
    )


def emit_couplings(cluster: SyntheticCluster, lattice, min_detectable: float = 3.0,
                   noise: NoiseModel = None, seed: int = None):
    """Noisy SEDOR table for all pairs whose measured frequency is at or
    above min_detectable.  Format-identical to the placement input."""
    table = lattice if isinstance(lattice, SiteTable) else SiteTable(lattice)
    noise = cluster.noise_model if noise is None else noise
    seed = cluster.seed if seed is None else seed
    rng = np.random.default_rng(_seed_tuple(seed) + (0xC0FFEE,))
    labels = sorted(cluster.truth.keys())
    pairs = [(a, b) for i, a in enumerate(labels) for b in labels[i + 1:]]
    idx_of = {lab: table.index_of_site(site) for lab, site in cluster.truth.items()}
    f_true = np.array([_sedor_between(table, idx_of[a], idx_of[b]) for a, b in pairs])
    f_meas = f_true + noise.draw(rng, len(pairs))
    out = []
    for (a, b), f in zip(pairs, f_meas):
        if f >= min_detectable:
            out.append(CouplingMeasurement(a, b, float(f), noise.sigma, "averaged"))
    return out


def truth_graph_connected(cluster: SyntheticCluster, lattice, min_detectable: float = 3.0) -> bool:
    """True when the noiseless coupling graph connects every spin to Si1."""
    table = lattice if isinstance(lattice, SiteTable) else SiteTable(lattice)
    labels = sorted(cluster.truth.keys())
    idx_of = {lab: table.index_of_site(site) for lab, site in cluster.truth.items()}
    adj = {lab: set() for lab in labels}
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            if _sedor_between(table, idx_of[a], idx_of[b]) >= min_detectable:
                adj[a].add(b)
                adj[b].add(a)
    seen = {"Si1"}
    stack = ["Si1"]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(labels)


def generate_connected_cluster(lattice, n_si, n_c, structure=ClusterStructure(),
                               seed=0, noise=NoiseModel(), min_detectable=3.0,
                               max_tries=40):
    """generate_cluster, retried deterministically until the noiseless
    coupling graph is connected from the anchor."""
    for t in range(max_tries):
        cluster = generate_cluster(lattice, n_si, n_c, structure, (seed, t), noise)
        if truth_graph_connected(cluster, lattice, min_detectable):
            return cluster
    raise InputError(
        f"no connected cluster found in {max_tries} attempts for seed {seed}"
    )


def emit_telegraph(rates, bright_cps: float = 3000.0, dark_cps: float = 600.0,
                   shot_noise: bool = True, duration: float = 200.0,
                   dt: float = 0.005, seed: int = 0):
    """Markov telegraph photon trace sampled on a uniform dt grid.

    rates = (bright_to_dark, dark_to_bright) in Hz; per-bin counts are
    Poisson at the current state's count rate (or exact when shot_noise is
    off).  Returns a telegraph.TimeTrace.
    """
    from .telegraph import TimeTrace

    gamma_bd, gamma_db = rates
    if gamma_bd <= 0 or gamma_db <= 0:
        raise InputError("rates must be positive")
    if dt >= 0.1 / max(gamma_bd, gamma_db):
        raise InputError("dt must be below min(1/rates)/10")
    rng = np.random.default_rng(_seed_tuple(seed) + (0x7E1E,))
    n = int(round(duration / dt))
    p_bright = gamma_db / (gamma_bd + gamma_db)
    state = bool(rng.random() < p_bright)
    states = np.empty(n, dtype=bool)
    i = 0
    t_next = rng.exponential(1.0 / (gamma_bd if state else gamma_db))
    t = 0.0
    while i < n:
        # fill bins until the next switch
        n_fill = min(n - i, max(1, int((t_next - t) / dt)))
        if t + n_fill * dt > t_next and n_fill > 1:
            n_fill = max(1, int((t_next - t) / dt))
        states[i:i + n_fill] = state
        i += n_fill
        t += n_fill * dt
        if t >= t_next:
            state = not state
            t_next = t + rng.exponential(1.0 / (gamma_bd if state else gamma_db))
    cps = np.where(states, bright_cps, dark_cps)
    if shot_noise:
        counts = rng.poisson(cps * dt) / dt
    else:
        counts = cps.astype(float)
    times = np.arange(n) * dt
    return TimeTrace(times, counts)
