"""Criticality metrics for urban traffic recordings.

A library plus a batch CLI. The core score folds four traffic-quality layers
into one value per (scene, ego) and optionally scales it by a distance
penalty; seven surrogate-safety baselines, label-based evaluation, synthetic
fixtures, and brute-force reference oracles sit alongside it.
"""

__version__ = "0.1.0"

from .errors import (
    DuplicateLabel,
    EmptyCounts,
    EmptyRecording,
    EmptyScene,
    FileError,
    FormatError,
    InvalidSpec,
    MissingAgent,
    MissingPrediction,
    SceneCritError,
    UnsupportedMetric,
)
from .evaluation import (
    ConfusionCounts,
    StatsReport,
    TableReport,
    confusion,
    statistics,
    table_report,
    table_report_from_counts,
)
from .model import (
    AgentState,
    KinematicHistory,
    ScenarioTrackset,
    Scene,
    agents_within_braking_distance,
    braking_distance,
    center_distance,
    gap_distance,
    history,
    min_gap_to_any,
)
from .quality import (
    IutqBreakdown,
    IutqConfig,
    penalty_factor,
    score_all,
    score_scene,
    tq_combined,
    tq_macroscopic,
    tq_mesoscopic,
    tq_metascopic,
    tq_microscopic,
)
from .surrogates import (
    BASELINE_METRICS,
    PairMetricValue,
    SceneMetricValue,
    SurrogateConfig,
    conflict_regions,
    dist_metric,
    et,
    gt,
    pair_metric_values,
    pet,
    pttc,
    score_all_surrogates,
    ttc,
    wttc,
)
from .synth import (
    SceneSpec,
    build_crossing_scenario,
    build_random_recording,
    build_scene,
    brute_force_reference,
)
from .tracks import (
    IngestReport,
    LabelTable,
    ScoreRow,
    load_labels,
    load_trackfile,
    read_scores,
    write_labels,
    write_scores,
    write_trackfile,
)
