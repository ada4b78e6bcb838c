"""Graph-based label propagation for household speaker identification."""

from .data_model import (
    Catalog,
    EmbeddingMatrix,
    HouseholdDataset,
    Role,
    SplitEntry,
    SplitFile,
    Utterance,
    datasets_from_split,
    l2_normalize,
    load_dataset,
    read_split,
    write_dataset,
    write_split,
)
from .errors import (
    ConfigError,
    DatasetError,
    InsufficientDataError,
    IsolatedNodeError,
    ManifestError,
    PropagationError,
    ScoringError,
    SpeakerLpError,
)
from .evaluation import (
    SierResult,
    SweepSpec,
    compute_sier,
    emit_report,
    render_csv,
    render_json,
    render_plot_series,
    run_sweep,
)
from .graph import AffinityGraph, build_affinity, normalized_operator, symmetric_laplacian
from .propagation import (
    LpConfig,
    PropagationResult,
    init_label_matrix,
    propagate,
    solve_closed_form,
)
from .scoring import METHOD_NAMES, SCORERS, Prediction, ScorerInput
from .simulation import (
    ALL,
    SimulationConfig,
    SynthConfig,
    build_households,
    generate_synthetic,
    split_file_from,
)

__version__ = "0.1.0"
