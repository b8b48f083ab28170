"""Input-space precision-recall estimation via output-distribution sampling."""

from .space import InputSpace, canonical_hash
from .models import (Direction, EnergyModel, SumEnergy, NGramModel,
                     OracleAnnotator, ModuloAnnotator, ThresholdAnnotator)
from .histogram import (BinGrid, EdgePolicy, NormalizationState,
                        OutputDistribution, OutOfRangeError,
                        GridMismatchError)
from .reservoir import BinReservoir, ReservoirItem
from .samplers import (ChainState, KernelKind, ProposalKernel, PTConfig,
                       PTHistograms, ReweightingGapError, WLConfig,
                       metropolis_step, pt_run, reweight, shared_beta_propose,
                       wang_landau_run)
from .evaluator import (MissingPrecisionError, PRCurve, PRPoint,
                        PrecisionPerBin, UndefinedPrecisionError, Window,
                        aupr, dominant_bin_precision, included_bins,
                        pr_curve, precision_at, recall_at, roc_unnormalized)
from .comparison import (ModelOverlap, OverlapReport, ZeroOverlapError,
                         build_overlap_report, normalized_scales,
                         overlap_count, overlay_pr)
from .validation import (EnumerationBudgetError, entropy_divergence,
                         exact_output_distribution, exact_precision_per_bin,
                         stationarity_test, sum_energy_counts)
from .annotation import (AnnotationRecord, AnnotationStore, AnnotationTask,
                         BinAnnotationSummary, UnknownTaskError)

__version__ = "0.1.0"
