from .config import (
    ExperimentConfig,
    GeneratorSpec,
    JudgeSpec,
    LanguageSpec,
    RerankerSpec,
    RetrieverSpec,
    config_from_dict,
    load_config,
    validate_config,
)
from .datasets import QAExample, example_from_record, file_checksum, from_kilt, from_mkqa, from_nq_open, load_dataset, write_dataset
from .pipeline import (
    ExperimentResult,
    StageRun,
    evaluate_stage,
    generate_stage,
    index_stage,
    load_generations,
    load_ranked,
    load_report,
    rerank_stage,
    retrieve_stage,
    run_experiment,
)
from .runstore import RunStore, compute_run_id
from .tables import ReportTable, build_table, report

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "GeneratorSpec",
    "JudgeSpec",
    "LanguageSpec",
    "QAExample",
    "ReportTable",
    "RerankerSpec",
    "RetrieverSpec",
    "RunStore",
    "StageRun",
    "build_table",
    "compute_run_id",
    "config_from_dict",
    "evaluate_stage",
    "example_from_record",
    "file_checksum",
    "from_kilt",
    "from_mkqa",
    "from_nq_open",
    "generate_stage",
    "index_stage",
    "load_config",
    "load_dataset",
    "load_generations",
    "load_ranked",
    "load_report",
    "report",
    "rerank_stage",
    "retrieve_stage",
    "run_experiment",
    "validate_config",
    "write_dataset",
]
