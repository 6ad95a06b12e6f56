"""Temporal-dynamic-context token compression for long videos."""

from .compressor import (
    BudgetReport,
    Provenance,
    TDCStream,
    Window,
    WindowPlan,
    assemble_tdc,
    build_queries,
    compress_frame,
    make_windows,
    read_stream,
    token_budget,
    write_stream,
)
from .lvcot import (
    CompressionContext,
    EchoAnswerer,
    LVCoTConfig,
    LVCoTTrace,
    MockAnswerer,
    mock_script,
    run_lvcot,
    split_spans,
)
from .qformer import (
    GradCheckReport,
    GradientBundle,
    QFormerConfig,
    QFormerParams,
    TrainBatch,
    backward,
    forward,
    grad_check,
    init_params,
    load_params,
    make_train_batch,
    save_params,
    small_config,
    train_step,
)
from .segmenter import ScenePartition, SegmenterConfig, frame_similarities, segment_scenes
from .timeline import (
    InstructionTokens,
    SynthSpec,
    VideoTimeline,
    read_tdcf,
    synth_generate,
    tokenize_text,
    write_tdcf,
)

__version__ = "0.1.0"
