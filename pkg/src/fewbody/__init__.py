"""Few-body scattering equation solvers with high-energy asymptotic
diagnostics: exact coupled equations, their single-collision forms, and
the unitarity / error measures that compare the two."""

from .asym import (
    FaddeevSolution,
    HeitlerSolution,
    KernelDiagnostics,
    asym_error_sweep,
    finite_sum_T,
    kernel_diagnostics,
    kmatrix_impulse,
    pair_operators,
    solve_asym_faddeev,
    solve_faddeev_system,
    solve_heitler_exact,
    solve_ls_exact,
    truncation_bound,
)
from .errors import (
    ConfigError,
    DimensionError,
    FewBodyError,
    ModelError,
    QuadratureError,
    SolveError,
)
from .model import (
    ComplexEnergy,
    FewBodyOperator,
    ModelSpec,
    build_h0,
    build_v,
    embed_pair_potential,
    embed_two_body_solution,
    green_functions,
    make_pair_potential,
    make_reference_model,
    pair_spectral_radius,
)
from .operators import (
    Role,
    hermitian_split,
    operator_norm,
    solve_resolvent_system,
    unitarity_defect,
)
from .report import SweepReport, emit_report, read_report_csv
from .twobody import (
    OnShellPoint,
    PotentialModel,
    TwoBodyChannel,
    build_channel,
    gaussian_potential,
    heitler_compose,
    klein_zemach_ratio,
    solve_kmatrix_onshell,
    solve_ls_onshell,
    yamaguchi_bound_state,
    yamaguchi_oracle,
    yamaguchi_potential,
)

__version__ = "0.1.0"
