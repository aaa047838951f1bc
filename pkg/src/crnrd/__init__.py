"""Complex balanced reaction networks: equilibria, spectral gaps and
close-to-equilibrium reaction-diffusion runs."""

from .equilibria import (
    EquilibriumCertificate,
    birch_project,
    certify_equilibrium,
    check_complex_balance,
    check_detailed_balance,
    is_equilibrium,
    reference_equilibrium,
)
from .harness import (
    admissible_mu,
    critical_p0,
    fit_decay_rate,
    perturbation_exponent_delta,
    run_verification,
)
from .network import (
    ReactionNetwork,
    Species,
    growth_constant,
    mass_action_rates,
    nonlinearity_order,
    reaction_rhs,
    rhs_jacobian,
)
from .parser import load_network, parse_network, render_network
from .solver import Field, Grid, Mode, SimConfig, SimResult, build_grid, imex_step, simulate
from .spectral import (
    Domain,
    LinearizedOperator,
    SpectralCertificate,
    gap_certificate,
    linearize,
    moment_balance_residuals,
    poincare_constant,
    quadratic_identity_residual,
    reaction_gap_beta,
)
from .stoich import (
    StoichData,
    analyze_stoichiometry,
    complex_graph,
    conservation_basis,
    deficiency,
    mass_vector,
    wegscheider_matrix,
)

__version__ = "0.1.0"
