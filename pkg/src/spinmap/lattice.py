"""4H-SiC crystal lattice generation around a silicon-vacancy origin.

The lattice is hexagonal (a, a, c; gamma = 120 deg) with one Si-C bilayer
per stacking letter.  Stacking "ABCB" gives the 4H polytype: 8 basis atoms
(4 Si + 4 C) per unit cell.  The coordinate origin sits on a quasi-cubic
(k) silicon site, which is removed from every generated site list (the
vacancy).  z runs along the crystal c-axis; all distances in angstrom.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, InputError

# Lateral offsets of the three close-packing positions, in fractional
# coordinates of the hexagonal in-plane lattice vectors.
_STACK_XY = {"A": (0.0, 0.0), "B": (1.0 / 3.0, 2.0 / 3.0), "C": (2.0 / 3.0, 1.0 / 3.0)}

# Fraction of one bilayer spacing separating the C atom from the Si atom
# below it (ideal tetrahedral value).
_BOND_FRACTION = 0.75

SPECIES_SI = "Si"
SPECIES_C = "C"

# Ideal 4H c/a ratio: four bilayers, each sqrt(2/3) a tall.
IDEAL_C_OVER_A_4H = 4.0 * math.sqrt(2.0 / 3.0)


@dataclass(frozen=True)
class LatticeParams:
    """Hexagonal cell constants plus the bilayer stacking sequence.

    k_variant selects which of the inequivalent quasi-cubic Si layers hosts
    the vacancy (the experiment does not distinguish them).
    """

    a: float = 3.073
    c: float = 10.053
    stacking: str = "ABCB"
    k_variant: int = 0
    max_sites: int = 500_000

    def __post_init__(self):
        if self.a <= 0 or self.c <= 0:
            raise InputError(f"lattice constants must be positive, got a={self.a}, c={self.c}")
        if len(self.stacking) < 2 or any(ch not in _STACK_XY for ch in self.stacking):
            raise InputError(f"stacking must use letters A/B/C, got {self.stacking!r}")
        n = len(self.stacking)
        for i in range(n):
            if self.stacking[i] == self.stacking[(i + 1) % n]:
                raise InputError(f"adjacent stacking layers must differ: {self.stacking!r}")
        ideal = n * math.sqrt(2.0 / 3.0)  # ideal close-packed bilayer height
        ratio = self.c / self.a
        if abs(ratio - ideal) > 0.05 * ideal:
            raise InputError(
                f"c/a = {ratio:.4f} deviates more than 5% from ideal {ideal:.4f} "
                f"for {n}-layer stacking"
            )
        if not self.k_layers():
            raise InputError(f"stacking {self.stacking!r} has no quasi-cubic layer")
        if self.k_variant not in range(len(self.k_layers())):
            raise InputError(f"k_variant must index into {self.k_layers()}")

    def k_layers(self):
        """Indices of quasi-cubic bilayers (letters above and below differ)."""
        s = self.stacking
        n = len(s)
        return tuple(i for i in range(n) if s[(i - 1) % n] != s[(i + 1) % n])

    @property
    def n_layers(self) -> int:
        return len(self.stacking)

    @property
    def origin_layer(self) -> int:
        return self.k_layers()[self.k_variant]

    def cell_vectors(self) -> np.ndarray:
        """Rows are the lattice vectors a1, a2, a3 in cartesian angstrom."""
        return np.array(
            [
                [self.a, 0.0, 0.0],
                [-0.5 * self.a, 0.5 * math.sqrt(3.0) * self.a, 0.0],
                [0.0, 0.0, self.c],
            ]
        )

    def basis(self):
        """(species, frac_x, frac_y, frac_z) for the atoms of one unit cell.

        Basis index 0..n-1 are the Si atoms (one per bilayer, bottom up),
        n..2n-1 the C atoms in the same order.
        """
        n = self.n_layers
        rows = []
        for i, letter in enumerate(self.stacking):
            fx, fy = _STACK_XY[letter]
            rows.append((SPECIES_SI, fx, fy, i / n))
        for i, letter in enumerate(self.stacking):
            fx, fy = _STACK_XY[letter]
            rows.append((SPECIES_C, fx, fy, i / n + _BOND_FRACTION / n))
        return rows

    def origin_fractional(self):
        """Fractional coordinates of the vacancy (a k-site Si atom)."""
        layer = self.origin_layer
        fx, fy = _STACK_XY[self.stacking[layer]]
        return (fx, fy, layer / self.n_layers)


@dataclass(frozen=True)
class LatticeSite:
    """One crystallographic site, positioned relative to the vacancy."""

    species: str
    cell: tuple  # (i, j, k) integer cell index
    basis: int
    position: np.ndarray = field(compare=False)

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))

    @property
    def r(self) -> float:
        return float(np.linalg.norm(self.position))

    def key(self):
        return (*self.cell, self.basis)


def site_position(params: LatticeParams, cell, basis: int) -> np.ndarray:
    """Cartesian position of (cell, basis) relative to the vacancy origin.

    Deterministic: identical inputs give bit-identical floats.
    """
    rows = params.basis()
    _, fx, fy, fz = rows[basis]
    ox, oy, oz = params.origin_fractional()
    df = np.array([cell[0] + (fx - ox), cell[1] + (fy - oy), cell[2] + (fz - oz)])
    return df @ params.cell_vectors()


def make_site(params: LatticeParams, cell, basis: int) -> LatticeSite:
    species = params.basis()[basis][0]
    return LatticeSite(species, tuple(int(x) for x in cell), basis, site_position(params, cell, basis))


def build_lattice(params: LatticeParams, radius: float):
    """All Si and C sites with |position| <= radius, vacancy excluded.

    Sorted by distance to origin, then lexicographic (cell, basis).
    """
    if radius <= 0:
        raise InputError(f"radius must be positive, got {radius}")
    # Conservative index bounds: in-plane row spacing a*sin(60), one cell padding.
    ni = int(math.ceil(radius / (params.a * math.sin(math.pi / 3.0)))) + 2
    nk = int(math.ceil(radius / params.c)) + 2
    est = (2 * ni + 1) ** 2 * (2 * nk + 1) * 2 * params.n_layers
    if est > 40 * params.max_sites:
        raise CapacityError(
            f"radius {radius} A implies ~{est} candidate sites (cap {params.max_sites})"
        )
    basis_rows = params.basis()
    origin = np.array(params.origin_fractional())
    vecs = params.cell_vectors()
    sites = []
    for i in range(-ni, ni + 1):
        for j in range(-ni, ni + 1):
            for k in range(-nk, nk + 1):
                for b, (species, fx, fy, fz) in enumerate(basis_rows):
                    df = np.array([i + (fx - origin[0]), j + (fy - origin[1]), k + (fz - origin[2])])
                    pos = df @ vecs
                    d = math.sqrt(pos[0] ** 2 + pos[1] ** 2 + pos[2] ** 2)
                    if d <= radius:
                        if d < 1e-9:
                            continue  # the vacancy itself
                        sites.append(LatticeSite(species, (i, j, k), b, pos))
    if len(sites) > params.max_sites:
        raise CapacityError(f"{len(sites)} sites exceed configured cap {params.max_sites}")
    sites.sort(key=lambda s: (s.r, s.cell, s.basis))
    return sites


def nearest_neighbor_distance(params: LatticeParams, species: str) -> float:
    """Minimum distance between two sites of the same species."""
    if species not in (SPECIES_SI, SPECIES_C):
        raise InputError(f"unknown species {species!r}")
    probe = max(2.5 * params.a, 0.8 * params.c)
    sites = [s for s in build_lattice(params, probe) if s.species == species]
    pos = np.array([s.position for s in sites])
    d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    d[d < 1e-9] = np.inf
    return float(d.min())


def reference_site_si1(params: LatticeParams) -> LatticeSite:
    """The on-axis Si site at (0, 0, c/2) above the vacancy."""
    n = params.n_layers
    layer = params.origin_layer + n // 2
    cell = (0, 0, layer // n)
    site = make_site(params, cell, layer % n)
    if abs(site.position[0]) > 1e-9 or abs(site.position[1]) > 1e-9:
        raise InputError(
            f"stacking {params.stacking!r} has no on-axis Si at c/2 above the vacancy"
        )
    return site


def axial_symmetry_ops(params: LatticeParams, probe_radius: float = 7.5):
    """Point-group operations about the vacancy's c-axis that map the
    lattice onto itself (rotations about z and vertical mirror planes).

    Determined empirically on a probe ball so the result reflects the
    configured stacking and k_variant.
    """
    sites = build_lattice(params, probe_radius)
    ref = {(s.species, round(s.position[0], 6), round(s.position[1], 6), round(s.position[2], 6))
           for s in sites}
    ops = []
    candidates = []
    for k in range(6):
        t = k * math.pi / 3.0
        candidates.append(np.array([
            [math.cos(t), -math.sin(t), 0.0],
            [math.sin(t), math.cos(t), 0.0],
            [0.0, 0.0, 1.0],
        ]))
    for k in range(6):
        t = k * math.pi / 6.0  # mirror across vertical plane at angle t
        candidates.append(np.array([
            [math.cos(2 * t), math.sin(2 * t), 0.0],
            [math.sin(2 * t), -math.cos(2 * t), 0.0],
            [0.0, 0.0, 1.0],
        ]))
    for op in candidates:
        mapped = {
            (s.species,
             round(op[0] @ s.position, 6),
             round(op[1] @ s.position, 6),
             round(op[2] @ s.position, 6))
            for s in sites
        }
        if mapped == ref:
            ops.append(op)
    return ops


class SiteTable:
    """Array view of a site list with fast position lookup."""

    def __init__(self, sites):
        self.sites = list(sites)
        self.positions = np.array([s.position for s in self.sites]).reshape(-1, 3)
        self.species = np.array([s.species for s in self.sites])
        self._index = {
            self._pos_key(s.position): i for i, s in enumerate(self.sites)
        }
        self.by_species = {
            sp: np.flatnonzero(self.species == sp) for sp in (SPECIES_SI, SPECIES_C)
        }

    @staticmethod
    def _pos_key(pos):
        return (round(pos[0], 5), round(pos[1], 5), round(pos[2], 5))

    def __len__(self):
        return len(self.sites)

    def index_of_position(self, pos):
        """Site index at a cartesian position, or None."""
        return self._index.get(self._pos_key(pos))

    def index_of_site(self, site: LatticeSite):
        return self.index_of_position(site.position)
