"""Group evolution and topic dynamics in temporal blog interaction networks."""
__version__ = "0.1.0"

from .corpus import Interaction, Message, parse_corpus, resolve_interactions  # noqa: E402
from .cpm import CliquePercolation, Community, detect, enumerate_k_cliques, percolate  # noqa: E402
from .graph import Snapshot, build_snapshot  # noqa: E402
from .lda import GibbsLDA  # noqa: E402
from .metrics import (MigrationTable, event_type_averages, migration_between,  # noqa: E402
                      significant_topics, topic_divergence)
from .sgci import SGCITracker, TransitionEvent  # noqa: E402
from .slots import SlotConfig, build_slots  # noqa: E402
from .text import TextAnalyzer, TfidfKeywords  # noqa: E402

__all__ = [
    "CliquePercolation", "Community", "GibbsLDA", "Interaction", "Message", "MigrationTable",
    "SGCITracker", "SlotConfig", "Snapshot", "TextAnalyzer", "TfidfKeywords", "TransitionEvent",
    "build_slots", "build_snapshot", "detect", "enumerate_k_cliques", "event_type_averages",
    "migration_between", "parse_corpus", "percolate", "resolve_interactions",
    "significant_topics", "topic_divergence",
]
