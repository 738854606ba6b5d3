"""Elastic material data and the double-well phase energy.

A rank-4 stiffness tensor maps symmetric strain matrices to stress.  For the
radial reduction to be exact the tensor and the misfit strain have to satisfy
six structural conditions; ``check_tensor_assumptions`` tests all of them
entrywise and reports per-condition pass/fail instead of raising.  When the
conditions hold, three scalars fully describe the coupling:

* ``mu``      -- the common diagonal value of C_il = D_ij^jl,
* ``lam``     -- the common diagonal value of E_kl = sum_ij D_ij^kl eps_ij,
* ``e``       -- the quadratic form of the tensor on the misfit strain.

Entries are stored positionally as ``entries[i, j, k, l]`` where (i, j) are
the contraction indices against a strain and (k, l) index the output stress.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

ASSUMPTION_TOL = 1e-12

CONDITION_NAMES = (
    "full_symmetry",
    "zero_unless_k_equals_j",
    "reduced_block_diagonal",
    "shear_scalar_constant",
    "misfit_coupling_offdiagonal_zero",
    "misfit_coupling_isotropic",
)

# Conditions that make the scalar extraction well defined.  full_symmetry is
# reported but does not gate extraction: the canonical diagonal family fails
# it while still having unambiguous (mu, lam, e).
SCALAR_GATE = CONDITION_NAMES[1:]


class AssumptionViolated(ValueError):
    """Raised when scalar extraction is requested for an unsuitable tensor."""

    def __init__(self, report: "AssumptionReport"):
        self.report = report
        failed = [c.name for c in report.conditions if not c.passed and c.name in SCALAR_GATE]
        super().__init__(f"tensor assumptions violated: {', '.join(failed)}")


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    # index tuple of the first offending entry; 4 indices into the stiffness
    # tensor, or 2 indices into the misfit-coupling matrix E (all 0-based)
    first_violation: Optional[tuple] = None


@dataclass(frozen=True)
class AssumptionReport:
    conditions: tuple[ConditionResult, ...]

    def __getitem__(self, name: str) -> ConditionResult:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def scalars_defined(self) -> bool:
        return all(self[name].passed for name in SCALAR_GATE)

    def summary(self) -> str:
        lines = []
        for c in self.conditions:
            status = "pass" if c.passed else f"FAIL at {c.first_violation}"
            lines.append(f"{c.name:34s} {status}")
        return "\n".join(lines)


@dataclass(frozen=True)
class ElasticityTensor:
    """Rank-4 stiffness, entries[i, j, k, l] with units of stress."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        if arr.shape != (3, 3, 3, 3):
            raise ValueError(f"stiffness tensor must be 3x3x3x3, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("stiffness tensor entries must be finite")
        object.__setattr__(self, "entries", arr)

    @classmethod
    def zeros(cls) -> "ElasticityTensor":
        return cls(np.zeros((3, 3, 3, 3)))

    @classmethod
    def diagonal_family(cls, mu0: float) -> "ElasticityTensor":
        """entries[i, j, k, l] = mu0 when k == j and i == l, else 0."""
        d = np.zeros((3, 3, 3, 3))
        for i in range(3):
            for j in range(3):
                d[i, j, j, i] = mu0
        return cls(d)

    @classmethod
    def isotropic(cls, lam_l: float, mu_l: float) -> "ElasticityTensor":
        """Standard Lame form: lam*delta_ij*delta_kl + mu*(delta_ik*delta_jl + delta_il*delta_jk)."""
        eye = np.eye(3)
        d = (
            lam_l * np.einsum("ij,kl->ijkl", eye, eye)
            + mu_l * np.einsum("ik,jl->ijkl", eye, eye)
            + mu_l * np.einsum("il,jk->ijkl", eye, eye)
        )
        return cls(d)

    def apply(self, eps: np.ndarray) -> np.ndarray:
        """Map a symmetric 3x3 strain to the 3x3 stress sum_ij entries[i,j,k,l]*eps[i,j]."""
        return np.einsum("ijkl,ij->kl", self.entries, np.asarray(eps, dtype=float))

    def quadratic_form(self, eps: np.ndarray) -> float:
        eps = np.asarray(eps, dtype=float)
        return float(np.einsum("ijkl,ij,kl->", self.entries, eps, eps))

    def is_positive_definite(self, tol: float = 0.0) -> bool:
        """Positive definiteness as a map on symmetric matrices (Mandel basis)."""
        basis = []
        s = 1.0 / np.sqrt(2.0)
        for k in range(3):
            m = np.zeros((3, 3))
            m[k, k] = 1.0
            basis.append(m)
        for (p, q) in ((0, 1), (0, 2), (1, 2)):
            m = np.zeros((3, 3))
            m[p, q] = m[q, p] = s
            basis.append(m)
        gram = np.empty((6, 6))
        for p in range(6):
            dp = self.apply(basis[p])
            for q in range(6):
                gram[p, q] = np.sum(dp * basis[q])
        gram = 0.5 * (gram + gram.T)
        return bool(np.linalg.eigvalsh(gram).min() > tol)


@dataclass(frozen=True)
class MisfitStrain:
    """Symmetric 3x3 transformation strain (dimensionless)."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        if arr.shape != (3, 3):
            raise ValueError(f"misfit strain must be 3x3, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("misfit strain entries must be finite")
        if np.max(np.abs(arr - arr.T)) > ASSUMPTION_TOL:
            raise ValueError("misfit strain must be symmetric")
        object.__setattr__(self, "entries", 0.5 * (arr + arr.T))

    @classmethod
    def zeros(cls) -> "MisfitStrain":
        return cls(np.zeros((3, 3)))

    @classmethod
    def spherical(cls, beta: float) -> "MisfitStrain":
        return cls(beta * np.eye(3))


def check_tensor_assumptions(tensor: ElasticityTensor, misfit: MisfitStrain) -> AssumptionReport:
    """Test the six structural conditions to absolute tolerance 1e-12.

    A failing condition is a report entry, never an exception.  The recorded
    violation is the first offending index tuple in lexicographic order.
    """
    d = tensor.entries
    tol = ASSUMPTION_TOL
    results = []

    def first_bad(mask) -> Optional[tuple]:
        idx = np.argwhere(mask)
        if idx.size == 0:
            return None
        return tuple(int(v) for v in idx[0])

    # pair exchange plus both minor symmetries, entrywise
    sym_bad = (
        (np.abs(d - d.transpose(2, 3, 0, 1)) > tol)
        | (np.abs(d - d.transpose(1, 0, 2, 3)) > tol)
        | (np.abs(d - d.transpose(0, 1, 3, 2)) > tol)
    )
    results.append(ConditionResult("full_symmetry", not sym_bad.any(), first_bad(sym_bad)))

    # entries with first output index different from second input index vanish
    k_ne_j = np.ones((3, 3, 3, 3), dtype=bool)
    for j in range(3):
        k_ne_j[:, j, j, :] = False
    zero_bad = k_ne_j & (np.abs(d) > tol)
    results.append(ConditionResult("zero_unless_k_equals_j", not zero_bad.any(), first_bad(zero_bad)))

    # the contracted block d[i, j, j, l]: off-diagonal in (i, l) vanishes and
    # the diagonal block is the same for every j
    block = np.stack([d[:, j, j, :] for j in range(3)])  # (j, i, l)
    off = ~np.eye(3, dtype=bool)
    block_bad = None
    ok = True
    for j in range(3):
        viol = off & (np.abs(block[j]) > tol)
        if viol.any():
            ok = False
            i, l = first_bad(viol)
            block_bad = (i, j, j, l)
            break
    if ok:
        for j in range(1, 3):
            viol = np.abs(block[j] - block[0]) > tol
            if viol.any():
                ok = False
                i, l = first_bad(viol)
                block_bad = (i, j, j, l)
                break
    results.append(ConditionResult("reduced_block_diagonal", ok, block_bad))

    # C_il taken from the j = 0 representative; its diagonal must be constant
    c_mat = block[0]
    diag = np.diag(c_mat)
    shear_bad = np.abs(diag - diag[0]) > tol
    viol = np.argwhere(shear_bad)
    results.append(
        ConditionResult(
            "shear_scalar_constant",
            not shear_bad.any(),
            (int(viol[0][0]), 0, 0, int(viol[0][0])) if viol.size else None,
        )
    )

    e_mat = np.einsum("ijkl,ij->kl", d, misfit.entries)
    e_off_bad = off & (np.abs(e_mat) > tol)
    results.append(
        ConditionResult("misfit_coupling_offdiagonal_zero", not e_off_bad.any(), first_bad(e_off_bad))
    )

    e_diag = np.diag(e_mat)
    e_diag_bad = np.abs(e_diag - e_diag[0]) > tol
    viol = np.argwhere(e_diag_bad)
    results.append(
        ConditionResult(
            "misfit_coupling_isotropic",
            not e_diag_bad.any(),
            (int(viol[0][0]), int(viol[0][0])) if viol.size else None,
        )
    )

    return AssumptionReport(tuple(results))


def scalar_coefficients(tensor: ElasticityTensor, misfit: MisfitStrain) -> tuple[float, float, float]:
    """Extract (mu, lam, e) from a tensor pair satisfying the structural conditions.

    Raises:
        AssumptionViolated: any condition needed for a well-defined extraction
            fails; the exception carries the full report.
    """
    report = check_tensor_assumptions(tensor, misfit)
    if not report.scalars_defined:
        raise AssumptionViolated(report)
    d = tensor.entries
    mu = float(d[0, 0, 0, 0])  # C_00 via the j = 0 representative
    e_mat = np.einsum("ijkl,ij->kl", d, misfit.entries)
    lam = float(e_mat[0, 0])
    e = float(np.einsum("ijkl,ij,kl->", d, misfit.entries, misfit.entries))
    return mu, lam, e


def double_well(s, well_weight: float = 1.0):
    """Quartic double well W*s^2*(1-s)^2 with minima at 0 and 1.

    Returns (value, derivative); accepts scalars or arrays.
    """
    s = np.asarray(s, dtype=float)
    value = well_weight * s**2 * (1.0 - s) ** 2
    deriv = 2.0 * well_weight * s * (1.0 - s) * (1.0 - 2.0 * s)
    if value.ndim == 0:
        return float(value), float(deriv)
    return value, deriv


def free_energy(
    eps: np.ndarray,
    s: float,
    tensor: ElasticityTensor,
    misfit: MisfitStrain,
    well_weight: float = 1.0,
) -> float:
    """0.5 * D(eps - misfit*s) . (eps - misfit*s) + well(s)."""
    eps = np.asarray(eps, dtype=float)
    if np.max(np.abs(eps - eps.T)) > ASSUMPTION_TOL:
        raise ValueError("strain must be symmetric")
    elastic = eps - misfit.entries * s
    value, _ = double_well(s, well_weight)
    return 0.5 * tensor.quadratic_form(elastic) + value


@dataclass(frozen=True)
class TensorSpec:
    """Declarative stiffness/misfit selection, as read from a config file."""

    family: str  # diagonal | isotropic | entries
    mu0: float = 0.0
    lambda_l: float = 0.0
    mu_l: float = 0.0
    entries: Optional[tuple] = None
    misfit: Optional[tuple] = None  # 9 entries, row major
    misfit_iso: Optional[float] = None

    def build(self) -> tuple[ElasticityTensor, MisfitStrain]:
        if self.family == "diagonal":
            tensor = ElasticityTensor.diagonal_family(self.mu0)
        elif self.family == "isotropic":
            tensor = ElasticityTensor.isotropic(self.lambda_l, self.mu_l)
        elif self.family == "entries":
            if self.entries is None or len(self.entries) != 81:
                raise ValueError("entries family requires exactly 81 values")
            tensor = ElasticityTensor(np.asarray(self.entries, dtype=float).reshape(3, 3, 3, 3))
        else:
            raise ValueError(f"unknown tensor family {self.family!r}")
        if self.misfit is not None:
            strain = MisfitStrain(np.asarray(self.misfit, dtype=float).reshape(3, 3))
        elif self.misfit_iso is not None:
            strain = MisfitStrain.spherical(self.misfit_iso)
        else:
            raise ValueError("tensor spec requires a misfit strain")
        return tensor, strain


@dataclass(frozen=True)
class MaterialParams:
    """Scalar coefficients of the radial model.

    c is the kinetic constant, nu the interface coefficient, mu and lam the
    stiffness and coupling scalars, e the misfit quadratic form, well_weight
    the double-well amplitude.
    """

    c: float
    nu: float
    mu: float
    lam: float
    e: float
    well_weight: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.well_weight > 0:
            raise ValueError(f"well_weight must be positive, got {self.well_weight}")
        if self.e < 0:
            raise ValueError(f"e must be nonnegative, got {self.e}")

    @classmethod
    def from_tensors(
        cls,
        tensor: ElasticityTensor,
        misfit: MisfitStrain,
        c: float,
        nu: float,
        well_weight: float,
    ) -> "MaterialParams":
        mu, lam, e = scalar_coefficients(tensor, misfit)
        return cls(c=c, nu=nu, mu=mu, lam=lam, e=e, well_weight=well_weight)
