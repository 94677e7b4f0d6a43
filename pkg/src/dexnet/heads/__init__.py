from .classifier import (
    HEAD_KINDS,
    RECURRENT_KINDS,
    HeadConfig,
    HeadTrainConfig,
    TaskResult,
    TrainedHead,
    evaluate_task,
    feature_array,
    init_head,
    load_head,
    predict,
    predict_batch,
    save_head,
    train_head,
)

__all__ = [
    "HEAD_KINDS",
    "RECURRENT_KINDS",
    "HeadConfig",
    "HeadTrainConfig",
    "TaskResult",
    "TrainedHead",
    "evaluate_task",
    "feature_array",
    "init_head",
    "load_head",
    "predict",
    "predict_batch",
    "save_head",
    "train_head",
]
