"""Text-image consistency metrics from paired embeddings.

Core pieces: EMB1 embedding files and paired-dataset manifests
(``embstore``), conditional Gaussian statistics (``gaussian``), the SSD
metric family plus CS / CFID / R-precision (``metrics``), hard-negative
caption construction (``hnsc``) and conflict-free gradient projection
(``sproj``). The ``semdist`` CLI fronts all of it.
"""

from .embstore import (EmbeddingMatrix, PairedDataset, Record, Role,
                       load_manifest, normalize_rows, read_emb, subsample,
                       write_emb, write_manifest)
from .errors import (ConfigError, DataError, EmbFormatError, LexiconError,
                     SemdistError)
from .gaussian import (ConditionalSummary, GaussianSummary,
                       conditional_covariance, conditional_mean_offsets,
                       cross_covariance, matrix_sqrt_psd, solve_spd,
                       summarize, summarize_conditionals)
from .hnsc import (PosLexicon, TokenizedCaption, construct_hard_negative,
                   corrupt_line, load_lexicon, tokenize)
from .metrics import (MetricConfig, MetricReport, StabilityCurve, cfid,
                      clip_score, dsv_term, evaluate, r_precision, ss_term,
                      ssd, ssd_t, stability_sweep, trsv_term)
from .sproj import GradientPair, ProjectionResult, batched_project, project, \
    project_qp

__version__ = "0.1.0"
