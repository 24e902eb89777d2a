"""Factored sparse coding.

One generic filter is warped through sampled affine transforms (scale,
rotation, translation) to materialize an overcomplete dictionary.  Codes
are inferred under a Cauchy sparseness penalty, the filter is learned by
gradient descent through the warp adjoints, and compression efficiency
is measured against a conventional per-atom sparse coding baseline.
"""

from .data import (
    GaborSpec,
    SynthSceneConfig,
    WhitenedPatch,
    Whitener,
    generate_scenes,
    load_cifar10,
    parse_synth_spec,
    render_gabor,
    synth_gabor_scene,
    synth_spec_from_string,
    to_grayscale,
    whiten_dataset,
)
from .dictionary import (
    BaselineDictionary,
    FactoredDictionary,
    GenericFilter,
    TransformPrior,
    build_factored_dictionary,
    filter_gradient,
    materialize,
    refresh,
    sample_supports,
)
from .errors import (
    DimensionMismatch,
    FormatError,
    MissingData,
    NonFiniteObjective,
    ZeroBasisVector,
)
from .evaluation import (
    RmseCurve,
    data_efficiency_sweep,
    read_rmse_csv,
    reconstruct,
    rmse_curve,
    write_rmse_csv,
)
from .inference import InferenceConfig, SparseCode, infer, objective, top_k
from .learning import TrainConfig, train_baseline, train_factored
from .storage import (
    load_dictionary,
    save_dictionary,
    tile_grid,
    write_pgm,
    write_pgm_grid,
)
from .transforms import TransformParams, compose_matrix, warp, warp_adjoint

__version__ = "0.1.0"

__all__ = [
    "BaselineDictionary",
    "DimensionMismatch",
    "FactoredDictionary",
    "FormatError",
    "GaborSpec",
    "GenericFilter",
    "InferenceConfig",
    "MissingData",
    "NonFiniteObjective",
    "RmseCurve",
    "SparseCode",
    "SynthSceneConfig",
    "TrainConfig",
    "TransformParams",
    "TransformPrior",
    "WhitenedPatch",
    "Whitener",
    "ZeroBasisVector",
    "build_factored_dictionary",
    "compose_matrix",
    "data_efficiency_sweep",
    "filter_gradient",
    "generate_scenes",
    "infer",
    "load_cifar10",
    "load_dictionary",
    "materialize",
    "objective",
    "parse_synth_spec",
    "read_rmse_csv",
    "reconstruct",
    "refresh",
    "render_gabor",
    "rmse_curve",
    "sample_supports",
    "save_dictionary",
    "synth_gabor_scene",
    "synth_spec_from_string",
    "tile_grid",
    "to_grayscale",
    "top_k",
    "train_baseline",
    "train_factored",
    "warp",
    "warp_adjoint",
    "whiten_dataset",
    "write_pgm",
    "write_pgm_grid",
    "write_rmse_csv",
]
