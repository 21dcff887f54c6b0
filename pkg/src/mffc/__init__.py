"""M-fold filter convolution (M-FFC) face descriptors.

Condensed Gabor, PCA and ICA filter ensembles are diversified by multi-fold
cross-convolution, applied to images, binarized into integer feature images
and summarized as block histograms, then pooled, normalized and compressed
with whitening PCA.
"""

from .config import PRESETS, PipelineConfig
from .descriptor import BlockSpec, assemble, binarize_encode, block_histograms, convolve_stack
from .diversify import OffspringSet, central_crop, conv2_full, dedup_commutative, make_offspring, mffc
from .errors import (ContractError, ConvergenceWarning, FormatError, InputError, LearningError,
                     MffcError, ParameterError)
from .evaluation import (EvalReport, VerifyPair, cosine, flip_score, kfold_verify, rank1_identify,
                         verify_roc)
from .gabor import ComplexFilter, FilterBank, GaborParams, condensed_ensemble, gabor_filter, standard_ensemble
from .learning import (PatchMatrix, bank_from_rows, fast_ica, learn_ica_filters, learn_pca_filters,
                       sample_patches, whiten)
from .pipeline import Extractor, build_extractor
from .pooling import PoolSpec, normalize, pool
from .wpca import WpcaModel, fit_wpca, project

__version__ = "0.1.0"
