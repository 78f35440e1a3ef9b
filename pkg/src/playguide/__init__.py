"""playguide: joint-attention fusion and contextual phrase-card guidance."""

from .analytics import (
    AccuracyResult,
    GroundTruthFocus,
    SessionStats,
    compute_stats,
    export_report,
    minute_accuracy,
)
from .board import (
    BoardChange,
    CardBoard,
    CardSlot,
    ProgressState,
    ReplacementPolicy,
    allocate,
    reconcile,
    record_hit,
    tick,
)
from .catalog import (
    CatalogError,
    LemmaDictionary,
    ObjectCatalog,
    ObjectEntry,
    PhraseBank,
    PhraseCandidate,
    lemmatize,
    load_catalog,
    load_lemma_dictionary,
    load_phrase_bank,
    tokenize,
)
from .cues import (
    Box,
    CueDebouncer,
    CueLogError,
    GazeEvent,
    SceneLayout,
    TargetWordHit,
    Utterance,
    extract_spoken_cues,
    gaze_to_cue,
    load_layout,
    read_cue_log,
    write_cue_log,
)
from .fusion import (
    AttentionCue,
    AttentionDistribution,
    FusionParams,
    apply_cue,
    apply_cues,
    init_distribution,
    ranked_objects,
)
from .session import (
    SessionConfig,
    SessionEngine,
    SessionResources,
    Snapshot,
    config_from_file,
    replay_snapshots,
    run_inputs,
)
from .sessionlog import SessionLog, read_session_log

__version__ = "0.1.0"
