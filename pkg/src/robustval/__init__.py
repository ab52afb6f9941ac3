"""Runtime input validation for neural networks via certified local
robustness radii."""

from .attacks import AttackResult, falsify, fgsm, min_pgd, min_random, pgd
from .data import Dataset, gen_synthetic, load_dataset, save_csv
from .errors import (
    DataError,
    DegenerateSampleError,
    FormatError,
    InsufficientSampleError,
    RobustvalError,
    ShapeError,
    TrainingError,
)
from .evaluation import (
    Category,
    EvaluationReport,
    categorize,
    evaluate,
    mean_report,
    rejection_table,
    roc_curve,
    survival_curve,
    write_report,
)
from .network import (
    Activation,
    Conv2D,
    Dense,
    MaxPool2D,
    Network,
    build_mlp,
    load_network,
    save_network,
)
from .radius import ProbeCache, RadiusResult, SearchParams, approximate_radius, batch_radii
from .train import train_sgd
from .validators import (
    Decision,
    Reason,
    ThresholdPolicy,
    WindowState,
    bootstrap_window,
    dagostino_pearson_pvalue,
    threshold_validate,
    window_step,
)
from .zonotope import (
    Interval,
    Verdict,
    Zonotope,
    affine_transform,
    dominance_lower_bound,
    input_region,
    is_robust,
    maxpool_transform,
    propagate_interval,
    propagate_zonotope,
    relu_transform,
    sshape_transform,
)

__version__ = "0.1.0"
