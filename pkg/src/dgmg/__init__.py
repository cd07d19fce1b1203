"""Polynomial multigrid with overlapping Schwarz smoothing for Cartesian
interior penalty DG discretizations of the periodic 3D Poisson equation."""

from dgmg.basis import Basis1D, make_basis, interp_matrix, node_distance_to_face
from dgmg.operator import (
    Grid,
    DirectionalOperator,
    penalty_min,
    assemble_directional,
    build_operators,
    apply_A,
    assemble_rhs,
    residual,
)
from dgmg.schwarz import (
    OverlapSpec,
    SubdomainSolver,
    SchwarzSmoother,
    resolve_overlap,
    hat_weight,
    build_subdomain_solver,
    subdomain_solve,
    smooth,
)
from dgmg.multigrid import (
    CycleSchedule,
    LevelHierarchy,
    build_hierarchy,
    v_cycle,
    coarse_solve,
    transfer_up,
    transfer_down,
)
from dgmg.krylov import mgcg_solve, fpcg, cg_projected

__version__ = "0.1.0"
