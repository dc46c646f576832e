"""Dictionary learning with OMP/MOD, split-and-merge training, and denoising."""

__version__ = "0.1.0"

from .exceptions import FormatError, InvalidInputError, SparsedictError
from .sparse_coding import (
    OmpDiagnostics,
    SparseCodeMatrix,
    SparseVector,
    check_dictionary,
    omp_batch,
    omp_error_bound,
    omp_fixed_sparsity,
)
from .dictionary_update import (
    ReplacementReport,
    UpdateDiagnostics,
    mod_update,
    normalize_columns,
    replace_degenerate_atoms,
)
from .trainer import (
    TrainConfig,
    TrainReport,
    merge_dictionaries,
    split_dataset,
    split_indices,
    train_local,
    train_split_merge,
    train_standard,
)
from .synthesis import (
    SyntheticSpec,
    composition_bound_check,
    gen_dictionary,
    gen_signals,
    sparse_model_check,
)
from .denoising import (
    DenoiseConfig,
    GrayImage,
    add_gaussian_noise,
    denoise_image,
    extract_patches,
    load_pgm,
    overcomplete_dct,
    reconstruct_from_patches,
    save_pgm,
)
from .storage import (
    load_dataset,
    load_dictionary,
    save_dataset,
    save_dictionary,
    write_manifest,
)
from .metrics import (
    BenchReport,
    CostParams,
    atom_recovery,
    bench_compare,
    mse_db,
    predict_costs,
    psnr,
)

__all__ = [
    "TrainConfig",
    "TrainReport",
    "merge_dictionaries",
    "split_dataset",
    "split_indices",
    "train_local",
    "train_split_merge",
    "train_standard",
    "SyntheticSpec",
    "composition_bound_check",
    "gen_dictionary",
    "gen_signals",
    "sparse_model_check",
    "DenoiseConfig",
    "GrayImage",
    "add_gaussian_noise",
    "denoise_image",
    "extract_patches",
    "load_pgm",
    "overcomplete_dct",
    "reconstruct_from_patches",
    "save_pgm",
    "BenchReport",
    "CostParams",
    "atom_recovery",
    "bench_compare",
    "mse_db",
    "predict_costs",
    "psnr",
    "load_dataset",
    "load_dictionary",
    "save_dataset",
    "save_dictionary",
    "write_manifest",
    "FormatError",
    "InvalidInputError",
    "SparsedictError",
    "OmpDiagnostics",
    "SparseCodeMatrix",
    "SparseVector",
    "check_dictionary",
    "omp_batch",
    "omp_error_bound",
    "omp_fixed_sparsity",
    "ReplacementReport",
    "UpdateDiagnostics",
    "mod_update",
    "normalize_columns",
    "replace_degenerate_atoms",
]
