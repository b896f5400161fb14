"""Command-line front end.

Every command is deterministic given its flags; all seeds default to
``DEFAULT_SEED``.  Exit codes: 0 success, 1 usage error, 2 data error,
3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import decision_grid, write_grid
from .classifiers import CLASSIFIERS
from .dataset import DataError, Dataset, save_csv
from .datasets import resolve
from .evaluation import EvalReport, TuningGrid, cv_score_grid, format_table, run_experiment, tune_gamma
from .sampling import SAMPLER_NAMES, SamplerConfig, Strategy, resample
from .theory import DISTRIBUTIONS, SphereModel, make_distribution, proposition_table

DEFAULT_SEED = 0
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("gammaknn")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; this tool reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


@dataclass
class ExperimentSpec:
    data: list[str]
    classifiers: list[str]
    sampler: SamplerConfig | None
    k: int = 3
    runs: int = 5
    seed: int = DEFAULT_SEED
    out: Path = Path("results")
    grid: TuningGrid = field(default_factory=TuningGrid)
    folds: int = 10
    test_fraction: float = 0.2
    sequential: bool = False
    label_column: str = "-1"
    positive_label: str | None = None

    def __post_init__(self):
        # missing dataset paths are reported per dataset by cmd_bench so the
        # other datasets still run
        if self.k < 1 or self.runs < 1:
            raise UsageError("k and runs must be >= 1")
        if not self.data or not self.classifiers:
            raise UsageError("need at least one dataset and one classifier")


# ---------------------------------------------------------------------------
# Shared option groups


def _add_data(p, multiple=False):
    help_ = ("dataset: a CSV/KEEL path, fixture:<ir1|ir5|ir20> or public:<name>"
             + ("; repeatable" if multiple else ""))
    p.add_argument("--data", required=True, action="append" if multiple else "store",
                   help=help_)
    p.add_argument("--label-column", default="-1",
                   help="label column index or header name (default: last)")
    p.add_argument("--positive-label", default=None,
                   help="raw label value of the minority class (default: 1, or 'positive' for .dat)")


def _add_sampler(p, required=False):
    choices = SAMPLER_NAMES[1:] if required else SAMPLER_NAMES
    p.add_argument("--sampler", choices=choices, required=required,
                   default=None if required else "none", help="oversampling strategy")
    p.add_argument("--ratio", type=float, default=None,
                   help="target m+/m- after sampling; fixes the ratio instead of tuning it")
    p.add_argument("--k-neighbors", type=_positive_int, default=5,
                   help="neighbors used by the sampler (default 5)")
    p.add_argument("--borderline-include-noise", action="store_true",
                   help="Borderline-SMOTE: also seed from positives whose k neighbors are all negative")


def _add_tuning(p):
    p.add_argument("--k", type=_positive_int, default=3, help="neighbors voted on (default 3)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"base seed (default {DEFAULT_SEED})")
    p.add_argument("--folds", type=_positive_int, default=10, help="CV folds for tuning (default 10)")
    p.add_argument("--gamma", type=float, default=None,
                   help="fix gamma_real to this value instead of tuning it")
    p.add_argument("--gamma-synth", type=float, default=None,
                   help="fix gamma_synth to this value instead of tuning it")
    p.add_argument("--gamma-real-grid", type=_floats, default=None,
                   help="comma-separated gamma_real grid (default 0.1,...,1.0)")
    p.add_argument("--gamma-synth-grid", type=_floats, default=None,
                   help="comma-separated gamma_synth grid (default 0.1,...,2.0)")
    p.add_argument("--ratio-grid", type=_floats, default=None,
                   help="comma-separated sampling-ratio grid (default 0.1,...,1.0)")
    p.add_argument("--sequential-tuning", action="store_true",
                   help="choose the sampling ratio first, then the gammas")


def _grid(args) -> TuningGrid:
    base = TuningGrid()
    real = (args.gamma,) if args.gamma is not None else args.gamma_real_grid or base.gamma_real_values
    synth = ((args.gamma_synth,) if args.gamma_synth is not None
             else args.gamma_synth_grid or base.gamma_synth_values)
    ratios = (args.ratio,) if getattr(args, "ratio", None) is not None \
        else args.ratio_grid or base.ratio_values
    return TuningGrid(real, synth, ratios)


def _sampler(args, seed: int = DEFAULT_SEED) -> SamplerConfig | None:
    if args.sampler in (None, "none"):
        if args.ratio is not None:
            raise UsageError("--ratio needs --sampler")
        return None
    return SamplerConfig(Strategy(args.sampler), args.ratio if args.ratio is not None else 1.0,
                         k_neighbors=args.k_neighbors, seed=seed,
                         include_noise=args.borderline_include_noise)


def _load(spec: str, args) -> Dataset:
    return resolve(spec, positive_label=args.positive_label, label_column=args.label_column)


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


# ---------------------------------------------------------------------------
# Commands


def cmd_bench(spec: ExperimentSpec) -> int:
    """Run every (dataset, classifier) pair; one JSON per pair plus table.txt.

    A failing dataset does not stop the others; its error is reported and the
    exit code is nonzero, but the reports already written are kept.
    """
    out = _out_dir(spec.out)
    reports, status = [], EXIT_OK
    for d in spec.data:
        try:
            data = resolve(d, positive_label=spec.positive_label, label_column=spec.label_column)
            for clf in spec.classifiers:
                sampler = spec.sampler if clf in ("knn", "gammaknn") else None
                if spec.sampler is not None and sampler is None:
                    log.warning("%s does not combine with oversampling; running it without", clf)
                rep = run_experiment(data, clf, sampler, spec.k, spec.runs, spec.seed, spec.grid,
                                     spec.folds, spec.test_fraction, spec.sequential)
                rep.save(out / f"{_slug(data.name)}__{_slug(rep.method)}.json")
                reports.append(rep)
                print(f"{data.name:20s} {rep.method:20s} F1 {rep.mean_f1:.3f} ({rep.std_f1:.3f})",
                      flush=True)
        except (DataError, FileNotFoundError) as exc:
            print(f"error: {d}: {exc}", file=sys.stderr)
            status = max(status, EXIT_DATA)
        except Exception as exc:  # keep going, report at the end
            log.exception("%s failed", d)
            print(f"error: {d}: {exc}", file=sys.stderr)
            status = EXIT_INTERNAL
        if reports:
            (out / "table.txt").write_text(format_table(reports))
    if reports:
        print(format_table(reports), end="")
    return status


def _slug(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-_.+" else "_" for c in text)


def _bench(args) -> int:
    spec = ExperimentSpec(
        data=args.data, classifiers=args.classifier or ["knn", "gammaknn"],
        sampler=_sampler(args, args.seed), k=args.k, runs=args.runs, seed=args.seed,
        out=Path(args.out), grid=_grid(args), folds=args.folds,
        test_fraction=args.test_fraction, sequential=args.sequential_tuning,
        label_column=args.label_column, positive_label=args.positive_label)
    return cmd_bench(spec)


def _tune(args) -> int:
    data = _load(args.data, args)
    tuned = tune_gamma(data, args.k, _grid(args), _sampler(args, args.seed), args.folds,
                       args.seed, args.sequential_tuning)
    text = json.dumps({"dataset": data.name, **tuned._asdict()}, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_boundary(train: Dataset, gamma: float, k: int, grid_resolution: int, out,
                 margin: float = 0.1, gamma_synth: float | None = None) -> Path:
    grid = decision_grid(train, gamma, k, grid_resolution, margin, gamma_synth)
    write_grid(grid, out)
    return Path(out)


def _boundary(args) -> int:
    data = _load(args.data, args)
    path = cmd_boundary(data, args.gamma, args.k, args.resolution, args.out, args.margin,
                        args.gamma_synth)
    print(f"wrote {args.resolution}x{args.resolution} grid to {path}")
    return EXIT_OK


def cmd_heatmap(train: Dataset, sampler: SamplerConfig, k: int, grid: TuningGrid, out,
                folds: int = 10, seed: int = DEFAULT_SEED):
    """CV F1 over (gamma_real, gamma_synth) at the best sampling ratio.

    Returns the ``Tuned`` argmax, which equals ``tune_gamma`` with the same
    arguments.
    """
    if sampler is None:
        raise UsageError("heatmap needs an active sampler")
    scores = cv_score_grid(train, k, grid, sampler, folds, seed)
    best = scores.best()
    ri = scores.ratios.index(best.ratio)
    synth = [best.gamma_real if g is None else g for g in scores.gamma_synth]
    with Path(out).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["gamma_real\\gamma_synth", *[repr(g) for g in synth]])
        for gi, gr in enumerate(scores.gamma_real):
            w.writerow([repr(gr), *[repr(float(v)) for v in scores.scores[ri, gi]]])
    return best


def _heatmap(args) -> int:
    data = _load(args.data, args)
    best = cmd_heatmap(data, _sampler(args, args.seed), args.k, _grid(args), args.out,
                       args.folds, args.seed)
    print(json.dumps(best._asdict()))
    return EXIT_OK


def _sample(args) -> int:
    data = _load(args.data, args)
    if args.ratio is None:
        raise UsageError("sample needs --ratio")
    config = _sampler(args, args.sampler_seed)
    out, trace = resample(data, config, return_trace=True)
    save_csv(out, args.out, provenance=True)
    if args.trace:
        with Path(args.trace).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["seed_row", "neighbor_row", "t"])
            for row in zip(trace.seeds, trace.neighbors, trace.t):
                w.writerow([int(row[0]), int(row[1]), repr(float(row[2]))])
    print(f"{data.name}: m+ {data.n_pos} -> {out.n_pos}, m- {data.n_neg} -> {out.n_neg}, "
          f"{out.n_synthetic} synthetic; wrote {args.out}")
    return EXIT_OK


def cmd_theory(model: SphereModel, query, epsilon: float, gammas, out=None) -> list:
    rows = proposition_table(model, query, epsilon, gammas)
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["gamma", "fn", "fp", "fn_se", "fp_se"])
        for r in rows:
            w.writerow([repr(v) for v in asdict(r).values()])
    finally:
        if out:
            fh.close()
    return rows


def _theory(args) -> int:
    pos = make_distribution(args.distribution, args.dim)
    neg = make_distribution(args.negative_distribution or args.distribution, args.dim)
    model = SphereModel(pos, neg, args.m_plus, args.m_minus, args.trials, args.seed)
    query = np.asarray(args.query) if args.query else pos.center
    if len(query) != args.dim:
        raise UsageError(f"--query has {len(query)} coordinates, expected {args.dim}")
    cmd_theory(model, query, args.epsilon, args.gammas, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gammaknn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="repeated split / tune / test runs with a summary table")
    _add_data(p, multiple=True)
    p.add_argument("--classifier", action="append", choices=CLASSIFIERS,
                   help="repeatable (default: knn and gammaknn)")
    _add_sampler(p)
    _add_tuning(p)
    p.add_argument("--runs", type=_positive_int, default=5, help="independent runs (default 5)")
    p.add_argument("--test-fraction", type=float, default=0.2, help="held-out share (default 0.2)")
    p.add_argument("--out", default="results", help="output directory (default ./results)")
    p.set_defaults(func=_bench)

    p = sub.add_parser("tune", help="cross-validated choice of gamma_real, gamma_synth and ratio")
    _add_data(p)
    _add_sampler(p)
    _add_tuning(p)
    p.add_argument("--out", default=None, help="optional JSON output file")
    p.set_defaults(func=_tune)

    p = sub.add_parser("boundary", help="predicted labels on a raster over a 2-D dataset")
    _add_data(p)
    p.add_argument("--gamma", type=float, default=1.0, help="gamma_real (default 1)")
    p.add_argument("--gamma-synth", type=float, default=None, help="default: gamma_real")
    p.add_argument("--k", type=_positive_int, default=3, help="neighbors voted on (default 3)")
    p.add_argument("--resolution", type=_positive_int, default=200, help="cells per axis (default 200)")
    p.add_argument("--margin", type=float, default=0.1, help="bounding-box margin (default 0.1)")
    p.add_argument("--out", default="boundary.csv", help="CSV file with x,y,label")
    p.set_defaults(func=_boundary)

    p = sub.add_parser("heatmap", help="CV F1 matrix over (gamma_real, gamma_synth)")
    _add_data(p)
    _add_sampler(p, required=True)
    _add_tuning(p)
    p.add_argument("--out", default="heatmap.csv", help="CSV matrix file")
    p.set_defaults(func=_heatmap)

    p = sub.add_parser("sample", help="oversample a dataset and export it with provenance")
    _add_data(p)
    _add_sampler(p, required=True)
    p.add_argument("--sampler-seed", type=int, default=DEFAULT_SEED,
                   help=f"sampler seed (default {DEFAULT_SEED})")
    p.add_argument("--out", default="sampled.csv", help="CSV output with a provenance column")
    p.add_argument("--trace", default=None, help="optional CSV of (seed_row, neighbor_row, t)")
    p.set_defaults(func=_sample)

    p = sub.add_parser("theory", help="closed-form FN/FP probabilities of gamma-1NN")
    p.add_argument("--distribution", choices=DISTRIBUTIONS, default="gaussian",
                   help="generator of the positives (and negatives unless overridden)")
    p.add_argument("--negative-distribution", choices=DISTRIBUTIONS, default=None)
    p.add_argument("--dim", type=_positive_int, default=2)
    p.add_argument("--m-plus", type=_positive_int, default=10)
    p.add_argument("--m-minus", type=_positive_int, default=100)
    p.add_argument("--epsilon", type=float, default=0.5, help="distance to the nearest neighbor")
    p.add_argument("--gammas", type=_floats, default=tuple(TuningGrid().gamma_real_values))
    p.add_argument("--query", type=_floats, default=None, help="default: the generator's center")
    p.add_argument("--trials", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=None, help="CSV file (default: stdout)")
    p.set_defaults(func=_theory)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"invalid arguments: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
