"""First-order optimization of convex smooth matrix losses over the set of
rank-k projection matrices and its convex hull.

Four solvers (a QR-based factored gradient method, projected gradient over
the projection set, projected gradient over the convex hull with an optional
rank budget, and Frank-Wolfe with line search), exact spectral projections
and linear oracles, robust Huber subspace-recovery losses, optimality
certificates, and reproducible synthetic data generators.
"""

from .certificates import (
    AlignmentError,
    DualCertificate,
    GapReport,
    GrowthReport,
    NoCertificateError,
    build_dual_certificate,
    eigen_gap,
    kkt_residual,
    quadratic_growth_probe,
)
from .datagen import (
    Instance,
    ModelConfig,
    gen_corrupted,
    gen_spiked,
    generate_instance,
    pca_projection,
    random_fantope,
    random_projection,
    recovery_error,
)
from .fantope import (
    ProjectionMatrix,
    WaterfillResult,
    fantope_lmo,
    fantope_project,
    pnk_project,
    projection_rank_at_most,
    waterfill_threshold,
)
from .objectives import (
    CorruptedHuberLoss,
    HuberParams,
    ObjectiveMetadata,
    QuadraticLoss,
    SampleSet,
    SpikedHuberLoss,
    corrupted_loss,
    empirical_lambda,
    estimate_metadata,
    huber,
    huber_deriv,
    quadratic_loss,
    spiked_loss,
)
from .solvers import (
    SolveTrace,
    StepPolicy,
    StopRule,
    duality_gap,
    solve_frank_wolfe,
    solve_goi,
    solve_pgd_convex,
    solve_pgd_nonconvex,
)
from .spectral import (
    DegenerateFrameError,
    SpectralDecomp,
    orthogonal_iteration,
    qr_orthonormalize,
    sym_eig,
    symmetrize,
)

__version__ = "0.1.0"
