"""Equivariant topological invariants of MPS parameter families.

Compute discrete Berry data, higher Berry curvature, DDKS numbers, SPT
invariants, Thouless pumps and their fixed-point relations for families of
injective matrix product states on symmetry-compatible sphere triangulations.
"""

from .equivariant import (
    EquivariantData,
    GroupData,
    build_equivariant,
    cocycle_residuals,
    ddks_mod4_z2z2,
    ddks_mod_n_pump,
    ddks_parity_berry,
    ddks_parity_t,
    ddks_parity_z2z2,
    gamma2_fixed_point,
    mu_kb,
    mu_rp,
    mu_t,
    pump_eta,
    pump_fixed_point,
    transform_mps,
    xi_s3,
    xi_s3_cochains,
)
from .gcomplex import (
    Chain,
    Cochain,
    GComplex,
    attach_action,
    build_sphere_complex,
    build_torus_complex,
)
from .mps import (
    EdgeOverlap,
    MPSFamily,
    MPSTensor,
    chern_from_a01,
    ddks,
    edge_overlap,
    gamma1,
    gamma2,
    injectivity_check,
    right_canonicalize,
    soliton_charge,
)
from .purestate import PureStateFamily, berry_connection, berry_phase, chern, xi_s2

__version__ = "0.1.0"

__all__ = [
    "Chain", "Cochain", "GComplex", "GroupData", "EquivariantData",
    "EdgeOverlap", "MPSFamily", "MPSTensor", "PureStateFamily",
    "attach_action", "berry_connection", "berry_phase", "build_equivariant",
    "build_sphere_complex", "build_torus_complex", "chern", "chern_from_a01",
    "cocycle_residuals", "ddks", "ddks_mod4_z2z2", "ddks_mod_n_pump",
    "ddks_parity_berry", "ddks_parity_t", "ddks_parity_z2z2", "edge_overlap",
    "gamma1", "gamma2", "gamma2_fixed_point", "injectivity_check",
    "mu_kb", "mu_rp", "mu_t", "pump_eta", "pump_fixed_point",
    "right_canonicalize", "soliton_charge", "transform_mps", "xi_s2",
    "xi_s3", "xi_s3_cochains",
]
