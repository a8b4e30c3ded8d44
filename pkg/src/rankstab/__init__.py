"""Train temporally-partitioned binary classifiers and quantify how
consistent their permutation-importance interpretations are — across
retrainings (internal), across similar-performing models (external), and
across time under four model-update strategies.
"""

__version__ = "0.1.0"

from .metrics import (  # noqa: F401
    AgreementLabel,
    agreement_label,
    auc,
    kendalls_tau,
    kendalls_w,
    mse,
    top_k_overlap,
)
from .stats import (  # noqa: F401
    EffectSize,
    Magnitude,
    TestResult,
    bonferroni,
    cliffs_delta,
    kruskal_wallis,
    magnitude_label,
    wilcoxon_rank_sum,
)
from .breaks import (  # noqa: F401
    BreaksResult,
    elbow_scan,
    jenks_breaks,
    rank_clusters_by_performance,
    wss,
)
