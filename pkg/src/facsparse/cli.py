"""Command-line front end: train, eval, encode, export-pgm.

Datasets are named by URI: ``cifar:DIR_OR_FILE`` for the binary CIFAR-10
batches (grayscaled and whitened on load) and ``synth:...`` for generated
Gabor scenes, where ``...`` is either inline ``key=value`` pairs separated
by commas or a path to a scene spec file.

Every run writes its fully resolved parameter set to ``config.txt`` in the
output directory; ``--config path`` reads such a file back as defaults, with
explicit command-line flags taking precedence.  Exit codes: 0 success,
1 numerical failure, 2 input or usage error.
"""

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .data import (
    generate_scenes,
    load_cifar10,
    parse_synth_spec,
    synth_spec_from_string,
    to_grayscale,
    whiten_dataset,
)
from .dictionary import FactoredDictionary, TransformPrior
from .errors import FormatError, MissingData, NonFiniteObjective
from .evaluation import data_efficiency_sweep, rmse_curve, write_rmse_csv
from .inference import InferenceConfig, infer, top_k
from .learning import TrainConfig, train_baseline, train_factored
from .storage import load_dictionary, save_dictionary, write_pgm, write_pgm_grid


def _range_type(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two reals, got {text!r}")


def _int_list(text: str):
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _load_uri(uri: str, count, split: str, whiten_count: int):
    """Resolve a dataset URI into a list of patch objects."""
    if uri.startswith("cifar:"):
        path = uri[len("cifar:"):]
        images = load_cifar10(path, count=count, split=split)
        gray = [to_grayscale(im) for im in images]
        if split == "train":
            patches, _ = whiten_dataset(gray, source="cifar-train")
        else:
            # held-out data reuses the training whitening statistics
            fit = [to_grayscale(im) for im in
                   load_cifar10(path, count=whiten_count, split="train")]
            _, whitener = whiten_dataset(fit, source="cifar-train")
            patches, _ = whiten_dataset(gray, source=f"cifar-{split}",
                                        whitener=whitener)
        return patches
    if uri.startswith("synth:"):
        spec = uri[len("synth:"):]
        if spec and "=" not in spec:
            cfg = parse_synth_spec(spec)
        else:
            cfg = synth_spec_from_string(spec)
        if count is not None:
            cfg = replace(cfg, count=count)
        patches, _ = generate_scenes(cfg, source=f"synth-{split}")
        return patches
    raise FormatError(f"unknown data URI {uri!r}; expected cifar:... or synth:...")


def _patch_side(patches) -> int:
    return np.asarray(getattr(patches[0], "patch", patches[0])).shape[0]


def _inference_config(args) -> InferenceConfig:
    return InferenceConfig(noise_scale=args.noise_scale,
                           sparsity_weight=args.sparsity_weight,
                           cauchy_scale=args.cauchy_scale,
                           max_evals=args.max_evals,
                           grad_tol=args.grad_tol)


def _train_config(args) -> TrainConfig:
    return TrainConfig(minibatch_size=args.minibatch,
                       learning_rate=args.lr,
                       baseline_learning_rate=args.baseline_lr,
                       epochs=args.epochs,
                       seed=args.seed,
                       inference=_inference_config(args))


def _prior(args) -> TransformPrior:
    if args.prior_seed is None:
        args.prior_seed = args.seed
    return TransformPrior(alpha_range=args.alpha, beta_range=args.beta,
                          theta_range=args.theta, delta_range=args.delta,
                          eta_range=args.eta, seed=args.prior_seed)


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_config(args) -> None:
    lines = [f"command = {args.command}"]
    for key in args.config_keys:
        value = getattr(args, key)
        if value is None or key == "config":
            continue
        lines.append(f"{key.replace('_', '-')} = {_format_value(value)}")
    with open(os.path.join(args.out, "config.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _splice_config(argv):
    """Insert tokens from a --config file right after the subcommand.

    Later flags win in argparse, so everything the user typed overrides the
    file.  The file's ``command`` line must match the invoked subcommand.
    """
    if not argv or argv[0].startswith("-") or "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return argv
    path = argv[idx + 1]
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw_lines = fh.read().splitlines()
    except OSError as err:
        raise MissingData(f"cannot read config file {path}: {err}")
    tokens = []
    for lineno, line in enumerate(raw_lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise FormatError(f"{path}:{lineno}: expected 'key = value'")
        key, value = key.strip(), value.strip()
        if key == "command":
            if value != argv[0]:
                raise FormatError(f"{path} is a config for '{value}', "
                                  f"not '{argv[0]}'")
            continue
        # the equals form keeps argparse from reading values like
        # "-0.4,0.5" as option names
        tokens.append(f"--{key}={value}")
    return [argv[0]] + tokens + argv[1:]


def _basis_tiles(basis):
    side = int(round(np.sqrt(basis.shape[1])))
    return [row.reshape(side, side) for row in basis]


def cmd_train(args) -> int:
    patches = _load_uri(args.data, args.count, "train", args.whiten_count)
    cfg = _train_config(args)
    os.makedirs(args.out, exist_ok=True)
    log_path = os.path.join(args.out, "train_log.csv")
    if args.model == "factored":
        d = train_factored(patches, _prior(args), args.m, cfg,
                           filter_side=args.filter_side, log_path=log_path,
                           threads=args.threads)
        write_pgm(os.path.join(args.out, "filter.pgm"), d.filter.patch)
    else:
        d = train_baseline(patches, args.m, cfg, log_path=log_path,
                           threads=args.threads)
    save_dictionary(os.path.join(args.out, "dict.fsc"), d)
    write_pgm_grid(os.path.join(args.out, "basis.pgm"), _basis_tiles(d.basis))
    _write_config(args)
    return 0


def _default_ks(m: int):
    ks = []
    k = 1
    while k < m:
        ks.append(k)
        k *= 2
    ks.append(m)
    return ks


def _write_galleries(args, dictionary, patches, ks, icfg) -> None:
    n = min(args.gallery_count, len(patches))
    if n == 0:
        return
    shown = patches[:n]
    side = _patch_side(shown)
    write_pgm_grid(os.path.join(args.out, "originals.pgm"), shown)
    basis = dictionary.basis
    codes = [infer(np.asarray(getattr(p, "patch", p)).ravel(), basis, icfg)
             for p in shown]
    for K in ks:
        tiles = [(basis.T @ top_k(code, K).coeffs).reshape(side, side)
                 for code in codes]
        write_pgm_grid(os.path.join(args.out, f"recon_k{K}.pgm"), tiles)


def cmd_eval(args) -> int:
    icfg = _inference_config(args)
    os.makedirs(args.out, exist_ok=True)
    if args.sweep_train_sizes:
        if args.dict:
            print("facsparse: --sweep-train-sizes trains its own dictionaries; "
                  "drop --dict", file=sys.stderr)
            return 2
        if args.m is None or args.test_data is None:
            print("facsparse: sweep mode needs --m and --test-data",
                  file=sys.stderr)
            return 2
        train_patches = _load_uri(args.data, args.count, "train",
                                  args.whiten_count)
        test_patches = _load_uri(args.test_data, args.test_count, "test",
                                 args.whiten_count)
        curves = data_efficiency_sweep(train_patches, test_patches,
                                       args.sweep_train_sizes, args.m,
                                       _prior(args), _train_config(args),
                                       inference_cfg=icfg, Ks=args.ks,
                                       filter_side=args.filter_side,
                                       threads=args.threads)
    else:
        if not args.dict:
            print("facsparse: --dict is required unless --sweep-train-sizes "
                  "is given", file=sys.stderr)
            return 2
        dictionary = load_dictionary(args.dict)
        test_patches = _load_uri(args.data, args.test_count, "test",
                                 args.whiten_count)
        ks = args.ks if args.ks else _default_ks(dictionary.m)
        curves = [rmse_curve(dictionary, test_patches, ks, icfg,
                             threads=args.threads)]
        _write_galleries(args, dictionary, test_patches, ks, icfg)
    write_rmse_csv(os.path.join(args.out, "rmse.csv"), curves,
                   n_patches=len(test_patches), seed=args.seed)
    _write_config(args)
    return 0


def cmd_encode(args) -> int:
    dictionary = load_dictionary(args.dict)
    if not 1 <= args.k <= dictionary.m:
        print(f"facsparse: --k must be in [1, {dictionary.m}], got {args.k}",
              file=sys.stderr)
        return 2
    patches = _load_uri(args.data, args.count, "test", args.whiten_count)
    icfg = _inference_config(args)
    os.makedirs(args.out, exist_ok=True)
    basis = dictionary.basis
    out_path = os.path.join(args.out, "codes.csv")
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        fh.write("patch,rank,index,coefficient\n")
        for patch_idx, p in enumerate(patches):
            z = np.asarray(getattr(p, "patch", p), dtype=float).ravel()
            coeffs = infer(z, basis, icfg).coeffs
            order = np.argsort(-np.abs(coeffs), kind="stable")[:args.k]
            for rank, atom in enumerate(order):
                fh.write(f"{patch_idx},{rank},{int(atom)},"
                         f"{coeffs[atom]:.17g}\n")
    _write_config(args)
    return 0


def cmd_export_pgm(args) -> int:
    dictionary = load_dictionary(args.dict)
    os.makedirs(args.out, exist_ok=True)
    if isinstance(dictionary, FactoredDictionary):
        write_pgm(os.path.join(args.out, "filter.pgm"),
                  dictionary.filter.patch)
    write_pgm_grid(os.path.join(args.out, "basis.pgm"),
                   _basis_tiles(dictionary.basis))
    _write_config(args)
    return 0


_INFERENCE_KEYS = ["noise_scale", "sparsity_weight", "cauchy_scale",
                   "max_evals", "grad_tol"]
_PRIOR_KEYS = ["alpha", "beta", "theta", "delta", "eta", "prior_seed"]
_TRAIN_HYPER_KEYS = ["epochs", "minibatch", "lr", "baseline_lr", "filter_side"]
_COMMON_KEYS = ["out", "seed", "threads"]

_CONFIG_KEYS = {
    "train": (["model", "data", "count", "m", "whiten_count"]
              + _TRAIN_HYPER_KEYS + _PRIOR_KEYS + _INFERENCE_KEYS
              + _COMMON_KEYS),
    "eval": (["dict", "data", "test_data", "count", "test_count", "ks",
              "gallery_count", "sweep_train_sizes", "m", "whiten_count"]
             + _TRAIN_HYPER_KEYS + _PRIOR_KEYS + _INFERENCE_KEYS
             + _COMMON_KEYS),
    "encode": (["dict", "data", "count", "k", "whiten_count"]
               + _INFERENCE_KEYS + _COMMON_KEYS),
    "export-pgm": ["dict"] + _COMMON_KEYS,
}


def _add_common(p):
    p.add_argument("--config", help="read flag defaults from a resolved config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)


def _add_inference(p):
    icfg = InferenceConfig()
    p.add_argument("--noise-scale", type=float, default=icfg.noise_scale)
    p.add_argument("--sparsity-weight", type=float, default=icfg.sparsity_weight)
    p.add_argument("--cauchy-scale", type=float, default=icfg.cauchy_scale)
    p.add_argument("--max-evals", type=int, default=icfg.max_evals)
    p.add_argument("--grad-tol", type=float, default=icfg.grad_tol)


def _add_prior(p):
    prior = TransformPrior()
    p.add_argument("--alpha", type=_range_type, default=prior.alpha_range,
                   help="log vertical scale range 'lo,hi'")
    p.add_argument("--beta", type=_range_type, default=prior.beta_range,
                   help="log horizontal scale range 'lo,hi'")
    p.add_argument("--theta", type=_range_type, default=prior.theta_range,
                   help="rotation range in radians 'lo,hi'")
    p.add_argument("--delta", type=_range_type, default=prior.delta_range,
                   help="vertical shift range in pixels 'lo,hi'")
    p.add_argument("--eta", type=_range_type, default=prior.eta_range,
                   help="horizontal shift range in pixels 'lo,hi'")
    p.add_argument("--prior-seed", type=int, default=None,
                   help="support sampling seed (defaults to --seed)")


def _add_train_hyper(p):
    cfg = TrainConfig()
    p.add_argument("--epochs", type=int, default=cfg.epochs)
    p.add_argument("--minibatch", type=int, default=cfg.minibatch_size)
    p.add_argument("--lr", type=float, default=cfg.learning_rate)
    p.add_argument("--baseline-lr", type=float, default=cfg.baseline_learning_rate)
    p.add_argument("--filter-side", type=int, default=None,
                   help="native filter resolution (defaults to the patch side)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facsparse",
        description="Factored sparse coding: train, evaluate, encode, export.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="learn a dictionary from data")
    p.add_argument("--model", choices=("factored", "baseline"), required=True)
    p.add_argument("--data", required=True, help="cifar:PATH or synth:SPEC")
    p.add_argument("--count", type=int, default=None,
                   help="cap on training patches")
    p.add_argument("--m", type=int, required=True, help="dictionary size")
    p.add_argument("--whiten-count", type=int, default=5000)
    _add_train_hyper(p)
    _add_prior(p)
    _add_inference(p)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="top-K RMSE curves for a dictionary")
    p.add_argument("--dict", help="dictionary container file")
    p.add_argument("--data", required=True,
                   help="evaluation data (training data in sweep mode)")
    p.add_argument("--test-data", help="held-out data for sweep mode")
    p.add_argument("--count", type=int, default=None,
                   help="training patch cap (sweep mode)")
    p.add_argument("--test-count", type=int, default=None)
    p.add_argument("--ks", type=_int_list, default=None,
                   help="comma-separated truncation levels")
    p.add_argument("--gallery-count", type=int, default=8,
                   help="patches shown in reconstruction galleries")
    p.add_argument("--sweep-train-sizes", type=_int_list, default=None,
                   help="train fresh dictionaries at these sizes instead of "
                        "reading --dict")
    p.add_argument("--m", type=int, default=None, help="dictionary size (sweep)")
    p.add_argument("--whiten-count", type=int, default=5000)
    _add_train_hyper(p)
    _add_prior(p)
    _add_inference(p)
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("encode", help="write top-K (index, coefficient) pairs")
    p.add_argument("--dict", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--whiten-count", type=int, default=5000)
    _add_inference(p)
    _add_common(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("export-pgm", help="dump filter and basis as images")
    p.add_argument("--dict", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_export_pgm)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _splice_config(argv)
    except (FormatError, MissingData) as err:
        print(f"facsparse: {err}", file=sys.stderr)
        return 2
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    args.config_keys = _CONFIG_KEYS[args.command]
    try:
        return args.func(args)
    except NonFiniteObjective as err:
        print(f"facsparse: numerical failure: {err}", file=sys.stderr)
        return 1
    except (FormatError, MissingData) as err:
        print(f"facsparse: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"facsparse: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"facsparse: {err}", file=sys.stderr)
        return 2
    except FloatingPointError as err:
        print(f"facsparse: numerical failure: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
