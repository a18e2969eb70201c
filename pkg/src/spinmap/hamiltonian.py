"""Electron(3/2) + two-nucleus Hamiltonian: exact diagonalization oracle
and closed-form second-order corrections to the SEDOR frequency.

The 16-dimensional Hamiltonian contains the zero-field splitting D Sz^2,
full electron and nuclear Zeeman terms, the measured hyperfine row
completed symmetrically (A_xz = A_zx, A_yz = A_zy; unknown xx/xy/yy block
zero), and the full 3x3 internuclear tensor.  At zeroth order the SEDOR
frequency equals |C_zz|/2; the exact spectrum quantifies every deviation
from that and is used to derive per-pair placement tolerances.
"""

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError, LabelingError, SingularityError
from .spinphys import DipolarTensor, FieldConfig, HyperfineTensor, dipolar_tensor

_E_INDEX = {1.5: 0, 0.5: 1, -0.5: 2, -1.5: 3}
_N_INDEX = {0.5: 0, -0.5: 1}


def spin_matrices(s: float):
    """(Sx, Sy, Sz) for spin s in the descending-m basis."""
    dim = int(round(2 * s + 1))
    m = s - np.arange(dim)
    sz = np.diag(m).astype(complex)
    ladder = np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1))
    sp = np.zeros((dim, dim), dtype=complex)
    sp[np.arange(dim - 1), np.arange(1, dim)] = ladder
    sm = sp.conj().T
    sx = 0.5 * (sp + sm)
    sy = -0.5j * (sp - sm)
    return sx, sy, sz


@dataclass(frozen=True)
class EigenstateLabel:
    m_s: float
    m_i1: float
    m_i2: float

    def __post_init__(self):
        if self.m_s not in _E_INDEX or self.m_i1 not in _N_INDEX or self.m_i2 not in _N_INDEX:
            raise InputError(f"invalid label ({self.m_s}, {self.m_i1}, {self.m_i2})")

    @property
    def basis_index(self) -> int:
        return _E_INDEX[self.m_s] * 4 + _N_INDEX[self.m_i1] * 2 + _N_INDEX[self.m_i2]


def all_labels():
    return [
        EigenstateLabel(ms, m1, m2)
        for ms in (1.5, 0.5, -0.5, -1.5)
        for m1 in (0.5, -0.5)
        for m2 in (0.5, -0.5)
    ]


@dataclass(frozen=True)
class SpinSystemSpec:
    """Full description of the electron + two-nucleus system.

    d: zero-field splitting (Hz, as D Sz^2); pair_tensor: 3x3 internuclear
    coupling in Hz.
    """

    d: float
    field: FieldConfig
    nuclei: tuple  # ((SpinSpecies, HyperfineTensor), (SpinSpecies, HyperfineTensor))
    pair_tensor: np.ndarray

    def __post_init__(self):
        if len(self.nuclei) != 2:
            raise InputError("exactly two nuclei are supported")
        t = np.asarray(self.pair_tensor, dtype=float)
        if t.shape != (3, 3) or not np.isfinite(t).all():
            raise InputError("pair_tensor must be a finite 3x3 array")
        object.__setattr__(self, "pair_tensor", t)

    @classmethod
    def from_geometry(cls, d, field, nucleus1, nucleus2):
        """nucleus: (SpinSpecies, HyperfineTensor, position (A))."""
        sp1, hf1, p1 = nucleus1
        sp2, hf2, p2 = nucleus2
        return cls(d, field, ((sp1, hf1), (sp2, hf2)), dipolar_tensor(p1, p2, sp1, sp2))

    @property
    def pair_coupling(self) -> DipolarTensor:
        return DipolarTensor.from_full(self.pair_tensor)

    @property
    def c_zz(self) -> float:
        return float(self.pair_tensor[2, 2])


def build_hamiltonian(spec: SpinSystemSpec) -> np.ndarray:
    """Dense 16x16 Hamiltonian in Hz (Hermitian)."""
    sx, sy, sz = spin_matrices(1.5)
    ix, iy, iz = spin_matrices(0.5)
    one_e = np.eye(4, dtype=complex)
    one_n = np.eye(2, dtype=complex)

    def kron3(a, b, c):
        return np.kron(a, np.kron(b, c))

    bx, by, bz = spec.field.b_vec_tesla
    ge = spec.field.electron_gamma
    h = spec.d * kron3(sz @ sz, one_n, one_n)
    h += ge * (bx * kron3(sx, one_n, one_n) + by * kron3(sy, one_n, one_n) + bz * kron3(sz, one_n, one_n))
    nuc_ops = [
        (kron3(one_e, ix, one_n), kron3(one_e, iy, one_n), kron3(one_e, iz, one_n)),
        (kron3(one_e, one_n, ix), kron3(one_e, one_n, iy), kron3(one_e, one_n, iz)),
    ]
    e_ops = (kron3(sx, one_n, one_n), kron3(sy, one_n, one_n), kron3(sz, one_n, one_n))
    for (species, hf), (jx, jy, jz) in zip(spec.nuclei, nuc_ops):
        gn = species.gyromagnetic_ratio
        h += gn * (bx * jx + by * jy + bz * jz)
        # measured z-row plus its symmetric transpose
        h += hf.a_zz * e_ops[2] @ jz
        h += hf.a_zx * (e_ops[2] @ jx + e_ops[0] @ jz)
        h += hf.a_zy * (e_ops[2] @ jy + e_ops[1] @ jz)
    ops1 = nuc_ops[0]
    ops2 = nuc_ops[1]
    for a in range(3):
        for b in range(3):
            cab = spec.pair_tensor[a, b]
            if cab != 0.0:
                h += cab * ops1[a] @ ops2[b]
    return h


def eigenenergy_zeroth(spec: SpinSystemSpec, label: EigenstateLabel) -> float:
    """Closed-form secular eigenenergy of |m_s, m_I1, m_I2> in Hz."""
    bz = spec.field.b_z_tesla
    ge = spec.field.electron_gamma
    (sp1, hf1), (sp2, hf2) = spec.nuclei
    ms, m1, m2 = label.m_s, label.m_i1, label.m_i2
    return (
        ms * ms * spec.d
        + ge * bz * ms
        + sp1.gyromagnetic_ratio * bz * m1
        + sp2.gyromagnetic_ratio * bz * m2
        + ms * m1 * hf1.a_zz
        + ms * m2 * hf2.a_zz
        + m1 * m2 * spec.c_zz
    )


def label_eigenstates(spec: SpinSystemSpec, overlap_threshold: float = 0.6):
    """Diagonalize and match eigenstates to secular basis labels.

    Returns (energies_by_basis_index, eigenvalues, eigenvectors).  Fails
    loudly when the best overlap drops below the threshold or the match is
    not one-to-one (near level crossings).
    """
    h = build_hamiltonian(spec)
    evals, evecs = np.linalg.eigh(h)
    overlap = np.abs(evecs) ** 2  # overlap[basis, eig]
    assignment = np.argmax(overlap, axis=1)
    best = overlap[np.arange(16), assignment]
    if len(set(assignment.tolist())) != 16:
        raise LabelingError("eigenstate-to-label assignment is not one-to-one")
    if best.min() < overlap_threshold:
        idx = int(np.argmin(best))
        raise LabelingError(
            f"basis state {idx} has max overlap {best.min():.3f} < {overlap_threshold}"
        )
    energies = np.real(evals[assignment])
    return energies, evals, evecs


def _sedor_lambda(spec: SpinSystemSpec, m_s: float, energies) -> float:
    def e(m1, m2):
        return energies[EigenstateLabel(m_s, m1, m2).basis_index]

    return e(0.5, 0.5) + e(-0.5, -0.5) - e(-0.5, 0.5) - e(0.5, -0.5)


def sedor_frequency_exact(spec: SpinSystemSpec, m_s: float, overlap_threshold: float = 0.6) -> float:
    """SEDOR frequency from exact eigenenergies in manifold m_s, Hz."""
    energies, _, _ = label_eigenstates(spec, overlap_threshold)
    return 0.5 * abs(_sedor_lambda(spec, m_s, energies))


def subspace_averaged_sedor(spec: SpinSystemSpec, overlap_threshold: float = 0.6) -> float:
    """Mean exact SEDOR frequency over the m_s = +-3/2 manifolds."""
    energies, _, _ = label_eigenstates(spec, overlap_threshold)
    return 0.5 * (
        0.5 * abs(_sedor_lambda(spec, 1.5, energies))
        + 0.5 * abs(_sedor_lambda(spec, -1.5, energies))
    )


@dataclass(frozen=True)
class SecondOrderCorrection:
    """Additive corrections (Hz) to the signed combination 2 f_SEDOR.

    Components follow the standard expansion in the transverse couplings:
    delta1 is the electron-mediated term, delta2_* come from hyperfine x
    internuclear cross terms, delta3_* from transverse-field x internuclear
    cross terms.  delta2_0 and delta3_1 carry the m_s prefactor and are odd
    under m_s -> -m_s.  `total` resums the nuclear-flip denominators
    exactly (valid even when |m_s A_zz| is comparable to the nuclear
    Zeeman splitting); `total_expanded` is the plain component sum.
    """

    delta1: float
    delta2_0: float
    delta2_1: float
    delta3_0: float
    delta3_1: float
    total: float

    @property
    def total_expanded(self) -> float:
        return self.delta1 + self.delta2_0 + self.delta2_1 + self.delta3_0 + self.delta3_1


def sedor_correction_second_order(spec: SpinSystemSpec, m_s: float) -> SecondOrderCorrection:
    """Closed-form second-order SEDOR corrections for m_s = +-3/2."""
    if m_s not in (1.5, -1.5):
        raise InputError("second-order corrections are derived for m_s = +-3/2")
    bx_t, by_t, bz_t = spec.field.b_vec_tesla
    ge = spec.field.electron_gamma
    (sp1, hf1), (sp2, hf2) = spec.nuclei
    t = spec.pair_tensor
    czz = t[2, 2]
    # coupling-tensor entries seen by each flipping nucleus:
    # nucleus 1 flips against the z-column, nucleus 2 against the z-row
    c_vec = [np.array([t[0, 2], t[1, 2]]), np.array([t[2, 0], t[2, 1]])]
    a_vec = [np.array([hf1.a_zx, hf1.a_zy]), np.array([hf2.a_zx, hf2.a_zy])]
    a_zz = [hf1.a_zz, hf2.a_zz]
    gammas = [sp1.gyromagnetic_ratio, sp2.gyromagnetic_ratio]
    b_perp = np.array([bx_t, by_t])

    den_e = m_s * ge * bz_t + 3.0 * spec.d
    if abs(den_e) < 1.0:
        raise SingularityError("electron denominator m_s*gamma_e*B_z + 3D vanishes (delta1)")
    delta1 = 2.25 * float(a_vec[0] @ a_vec[1]) / den_e

    delta2_0 = delta2_1 = delta3_0 = delta3_1 = 0.0
    total_nuclear = 0.0
    for j in range(2):
        gb = gammas[j] * bz_t
        if abs(gb) < 1.0:
            raise SingularityError(f"nuclear Zeeman denominator vanishes for nucleus {j + 1}")
        ac = float(a_vec[j] @ c_vec[j])
        bc = float(b_perp @ c_vec[j])
        delta2_0 += m_s * ac / gb
        delta2_1 += -(m_s * m_s) * a_zz[j] * ac / gb**2
        delta3_0 += bc / bz_t
        delta3_1 += -m_s * a_zz[j] * bc / (gammas[j] * bz_t**2)
        # resummed nuclear-flip contribution with exact denominators
        for sign, m_other in ((1.0, 0.5), (-1.0, -0.5)):
            den = gb + m_s * a_zz[j] + m_other * czz
            if abs(den) < 1.0:
                raise SingularityError(
                    f"nuclear-flip denominator vanishes for nucleus {j + 1} (m'={m_other})"
                )
            w = m_s * a_vec[j] + m_other * c_vec[j] + gammas[j] * b_perp
            total_nuclear += sign * float(w @ w) / (2.0 * den)

    return SecondOrderCorrection(
        delta1=delta1,
        delta2_0=delta2_0,
        delta2_1=delta2_1,
        delta3_0=delta3_0,
        delta3_1=delta3_1,
        total=delta1 + total_nuclear,
    )


@dataclass(frozen=True)
class SweepRecord:
    phi1: float
    phi2: float
    mode: str  # ms_plus_3_2 | ms_minus_3_2 | averaged
    deviation: float  # |f - |C_zz|/2| in Hz


@dataclass(frozen=True)
class SweepResult:
    records: tuple
    max_single: float
    max_averaged: float

    def max_for_mode(self, mode: str) -> float:
        vals = [r.deviation for r in self.records if r.mode == mode]
        if not vals:
            raise InputError(f"no records for mode {mode!r}")
        return max(vals)


def deviation_sweep(
    spec_template: SpinSystemSpec,
    phi_grid,
    transverse_field: float = 2.3,
    overlap_threshold: float = 0.6,
) -> SweepResult:
    """Sweep both nuclei's transverse hyperfine phases (A_zx = cos(phi) A_perp)
    at fixed transverse field (G, applied along x) and record the worst-case
    deviation of the exact SEDOR frequency from |C_zz|/2 per averaging mode.
    """
    phis = list(phi_grid)
    if not phis:
        raise InputError("phi_grid must be non-empty")
    field = replace(spec_template.field, b_x=transverse_field, b_y=0.0)
    (sp1, hf1), (sp2, hf2) = spec_template.nuclei
    f0 = 0.5 * abs(spec_template.c_zz)
    records = []
    for phi1, phi2 in itertools.product(phis, phis):
        nuclei = (
            (sp1, HyperfineTensor.from_perp(hf1.a_zz, hf1.a_perp, phi1)),
            (sp2, HyperfineTensor.from_perp(hf2.a_zz, hf2.a_perp, phi2)),
        )
        spec = SpinSystemSpec(spec_template.d, field, nuclei, spec_template.pair_tensor)
        energies, _, _ = label_eigenstates(spec, overlap_threshold)
        f_plus = 0.5 * abs(_sedor_lambda(spec, 1.5, energies))
        f_minus = 0.5 * abs(_sedor_lambda(spec, -1.5, energies))
        records.append(SweepRecord(phi1, phi2, "ms_plus_3_2", abs(f_plus - f0)))
        records.append(SweepRecord(phi1, phi2, "ms_minus_3_2", abs(f_minus - f0)))
        records.append(SweepRecord(phi1, phi2, "averaged", abs(0.5 * (f_plus + f_minus) - f0)))
    records = tuple(records)
    max_single = max(
        r.deviation for r in records if r.mode in ("ms_plus_3_2", "ms_minus_3_2")
    )
    max_averaged = max(r.deviation for r in records if r.mode == "averaged")
    return SweepResult(records, max_single, max_averaged)
