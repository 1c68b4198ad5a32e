from .correlation import correlate_datasets, correlate_metrics, kendall_tau
from .judge import LLMEVAL_TEMPLATE, JudgeEndpoint, JudgeVerdict, llmeval, llmeval_batch, llmeval_prompt, parse_verdict
from .langid import TrigramDetector, correct_language_rate, default_detector
from .metrics import char3_recall, exact_match, match, normalize, rouge_l, rouge_n, token_prf
from .report import METRIC_IDS, MetricReport, MetricScore, evaluate_records, expand_metrics

match_metric = match

__all__ = [
    "LLMEVAL_TEMPLATE",
    "METRIC_IDS",
    "JudgeEndpoint",
    "JudgeVerdict",
    "MetricReport",
    "MetricScore",
    "TrigramDetector",
    "char3_recall",
    "correct_language_rate",
    "correlate_datasets",
    "correlate_metrics",
    "default_detector",
    "evaluate_records",
    "exact_match",
    "expand_metrics",
    "kendall_tau",
    "llmeval",
    "llmeval_batch",
    "llmeval_prompt",
    "match",
    "match_metric",
    "normalize",
    "parse_verdict",
    "rouge_l",
    "rouge_n",
    "token_prf",
]
