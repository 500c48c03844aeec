"""Joint diagonalization of matrix sets: orthogonal (Jacobi), non-orthogonal
(QRJ1D), low-rank and asymmetric, with first-order perturbation bounds."""
from .asymmetric import AsymResult, asym_solve, embed, pair_components, recover_factors
from .core import (
    GroundTruth,
    MatrixSet,
    apply_givens,
    apply_shear,
    diag_mass,
    off_norm,
    off_objective,
    stationarity_residual,
)
from .errors import (
    AlignmentError,
    IllConditionedError,
    OptionError,
    PairingError,
    RankError,
    ShapeError,
    SimDiagError,
    UnidentifiablePairError,
)
from .fileio import ProblemFile, ProblemFileError
from .jacobi import JointDiagResult, SolverOptions, jacobi_solve, optimal_givens_angle
from .metrics import AlignmentReport, align_factors
from .perturbation import (
    PerturbationReport,
    afsari_E,
    afsari_simple_bound,
    cardoso_E,
    empirical_bound_check,
    modulus_of_uniqueness,
)
from .qrj1d import optimal_shear, qrj1d_solve, reconstruct
from .synthesis import (
    make_problem,
    random_asymmetric_problem,
    random_nonorthogonal_problem,
    random_orthogonal_problem,
)

__version__ = "0.1.0"
