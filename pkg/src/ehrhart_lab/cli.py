"""``ehrhart-lab``: dataset generation and the learning experiments.

Every ``cmd_*`` function returns an :class:`ExperimentReport` and writes its
plot data as CSV files into the output directory.  Reports contain no
timings, so reruns with the same seed are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import datagen, ehrhart, ml, toric
from .counting import ehrhart_vector
from .geometry import as_point, convex_hull

DEFAULT_C_GRID = (0.001, 0.01, 0.1, 1, 20, 340, 1000, 50000)
LEARNING_FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


@dataclass
class ExperimentReport:
    experiment: str
    params: dict
    metrics: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> str:
        return json.dumps(
            {
                "experiment": self.experiment,
                "params": self.params,
                "metrics": self.metrics,
                "checks": self.checks,
                "files": self.files,
            },
            indent=2,
            sort_keys=True,
            default=_jsonable,
        )

    def write(self, out: Path) -> Path:
        path = Path(out) / f"{self.experiment}_report.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        return path


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _write_csv(out: Path, name: str, header, rows) -> str:
    out.mkdir(parents=True, exist_ok=True)
    with (out / name).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return name


def _predictions(out, name, idx, truth, preds):
    return _write_csv(out, name, ["index", "true", "predicted"], zip(idx, truth, preds))


def _confusion_rows(conf: ml.Confusion):
    for c, row in zip(conf.classes, conf.matrix):
        yield [c] + [float(v) for v in row]


# ---------------------------------------------------------------------------
# datasets


def load_or_generate(path, **params) -> datagen.Dataset:
    if path:
        return datagen.read_dataset(path)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", datagen.UnderfilledWarning)
        return datagen.build_dataset(datagen.GenerationParams(**params))


def cmd_generate(params: datagen.GenerationParams, out: Path) -> tuple[datagen.Dataset, Path]:
    ds = datagen.build_dataset(params)
    path = Path(out) / f"{params.kind}.csv"
    datagen.write_dataset(ds, path)
    return ds, path


def class_histogram(ds: datagen.Dataset) -> dict:
    hist = Counter(p.class_label() for p in ds.points)
    return {str(c): n for c, n in sorted(hist.items())}


# ---------------------------------------------------------------------------
# dimension


def _clf_variant(X, y, tr, te, n_components, grid, seed):
    def make(C):
        return ml.ClassifierPipeline(C=C, n_components=n_components, seed=seed)

    best, scores = ml.tune(make, X[tr], y[tr], grid, ml.accuracy, seed=seed)
    model = make(best).fit(X[tr], y[tr])
    preds = model.predict(X[te])
    return model, preds, best, scores


def cmd_dimension(ds: datagen.Dataset, out: Path, grid=DEFAULT_C_GRID, seed: int = 0) -> ExperimentReport:
    """Predict the dimension from the Ehrhart vector, for several feature maps."""
    out = Path(out)
    y = ds.dims()
    tr, te = ml.split(y, 0.5, "stratified", seed)
    variants = {
        "log_pca2": ("log", 2),
        "raw_pca2": ("raw", 2),
        "raw_pca30": ("raw", 30),
        "raw_full": ("raw", None),
    }
    rep = ExperimentReport("dimension", {"n": len(ds), "T": ds.T, "grid": list(grid), "seed": seed})
    acc = {}
    for name, (feat, nc) in variants.items():
        X = ds.features(feat)
        model, preds, best, scores = _clf_variant(X, y, tr, te, nc, grid, seed)
        acc[name] = ml.accuracy(preds, y[te])
        rep.metrics[name] = {
            "accuracy": acc[name],
            "C": best,
            "cv_scores": {str(k): v for k, v in scores.items()},
            "converged": bool(np.all(model.model.converged)),
        }
        rep.files[f"{name}_predictions"] = _predictions(out, f"dimension_{name}_predictions.csv", te, y[te], preds)
        if name.endswith("pca2"):
            Z = model.pca.transform(X)
            rep.files[f"{name}_scatter"] = _write_csv(
                out, f"dimension_{name}_scatter.csv", ["index", "dim", "pc1", "pc2"],
                ([i, int(y[i]), float(Z[i, 0]), float(Z[i, 1])] for i in range(len(y))),
            )
            L = model.pca.components
            rep.files[f"{name}_loadings"] = _write_csv(
                out, f"dimension_{name}_loadings.csv", ["m", "pc1", "pc2"],
                ([m, float(L[0, m]), float(L[1, m])] for m in range(L.shape[1])),
            )
    rep.checks = {
        "log_pca2_at_least_0.95": acc["log_pca2"] >= 0.95,
        "raw_full_ge_raw_pca30": acc["raw_full"] >= acc["raw_pca30"],
        "raw_pca30_gt_raw_pca2": acc["raw_pca30"] > acc["raw_pca2"],
        "raw_pca2_20_points_below_log_pca2": acc["raw_pca2"] <= acc["log_pca2"] - 0.20,
    }
    return rep


# ---------------------------------------------------------------------------
# volume


def cmd_volume(ds, out, grid=DEFAULT_C_GRID, volume_cap: float | None = 10_000, epsilon: float = 0.0, seed: int = 0):
    """Linear SVR from Ehrhart vectors to the normalised volume."""
    out = Path(out)
    vols = ds.volumes()
    if volume_cap is not None:
        ds = ds.subset(vols < volume_cap)
        vols = ds.volumes()
    strata = ml.quantile_bins(vols, 10)
    tr, te = ml.split(strata, 0.5, "stratified", seed)
    rep = ExperimentReport(
        "volume",
        {"n": len(ds), "T": ds.T, "grid": list(grid), "volume_cap": volume_cap, "epsilon": epsilon, "seed": seed},
    )
    scores = {}
    for feat in ("raw", "log"):
        X = ds.features(feat)

        def make(C):
            return ml.RegressorPipeline(C=C, epsilon=epsilon, seed=seed)

        best, cv = ml.tune(make, X[tr], vols[tr], grid, ml.r2, seed=seed, strata=strata[tr])
        model = make(best).fit(X[tr], vols[tr])
        preds = model.predict(X[te])
        scores[feat] = ml.r2(preds, vols[te])
        rep.metrics[feat] = {
            "r2": scores[feat],
            "C": best,
            "cv_scores": {str(k): v for k, v in cv.items()},
            "converged": bool(model.model.converged),
        }
        rep.files[f"{feat}_predictions"] = _write_csv(
            out, f"volume_{feat}_predictions.csv", ["index", "true", "predicted"],
            ([int(i), float(vols[i]), float(p)] for i, p in zip(te, preds)),
        )
    rep.checks = {"raw_r2_at_least_0.99": scores["raw"] >= 0.99, "log_r2_at_most_0.8": scores["log"] <= 0.8}
    return rep


# ---------------------------------------------------------------------------
# quasi-period


def cmd_quasiperiod(ds, out, grid=DEFAULT_C_GRID, features=("raw", "log"), seed: int = 0):
    """Per-dimension classification of the quasi-period."""
    out = Path(out)
    rep = ExperimentReport("quasiperiod", {"n": len(ds), "T": ds.T, "grid": list(grid), "seed": seed})
    all_dims = ds.dims()
    for d in sorted(set(all_dims.tolist())):
        sub = ds.subset(all_dims == d)
        y = sub.periods()
        tr, te = ml.split(y, 0.5, "stratified", seed)
        classes = sorted(set(y.tolist()))
        block = {"chance": 1 / len(classes), "class_prior": ml.class_prior_baseline(y[te])}
        for feat in features:
            X = sub.features(feat)
            model, preds, best, scores = _clf_variant(X, y, tr, te, "rank", grid, seed)
            acc = ml.accuracy(preds, y[te])
            tag = f"d{d}_{feat}"
            conf = ml.confusion(preds, y[te], row_normalised=True, classes=classes)
            curve = ml.learning_curve(
                lambda: ml.ClassifierPipeline(C=best, n_components="rank", seed=seed),
                X[tr], y[tr], X[te], y[te], LEARNING_FRACTIONS, seed,
            )
            block[feat] = {
                "accuracy": acc,
                "C": best,
                "cv_scores": {str(k): v for k, v in scores.items()},
                "confusion": conf.matrix,
                "classes": classes,
            }
            rep.files[f"{tag}_predictions"] = _predictions(out, f"quasiperiod_{tag}_predictions.csv", te, y[te], preds)
            rep.files[f"{tag}_confusion"] = _write_csv(
                out, f"quasiperiod_{tag}_confusion.csv", ["true"] + [f"pred_{c}" for c in classes], _confusion_rows(conf)
            )
            rep.files[f"{tag}_learning_curve"] = _write_csv(
                out, f"quasiperiod_{tag}_learning_curve.csv",
                ["fraction", "n_train", "train_accuracy", "validation_accuracy"], curve,
            )
            if feat == "raw":
                rep.checks[f"d{d}_raw_at_least_0.60"] = acc >= 0.60
        rep.metrics[f"d{d}"] = block
    return rep


# ---------------------------------------------------------------------------
# Gorenstein index


def fano_dataset(n: int, T: int, seed: int, box: int = 5, d: int = 2):
    """``(features, labels)`` for ``n`` random Fano polytopes: polar Ehrhart
    vectors with T+1 terms and Gorenstein indices."""
    feats, labels = [], []
    for i in range(n):
        P = datagen.gen_fano_polytope(d, datagen.point_rng(seed, "fano", d, i), box)
        dual = toric.polar(P)
        feats.append(ehrhart_vector(dual, T).counts)
        labels.append(dual.denominator_k)
    return feats, labels


def markov_subset(bound: int, T: int):
    feats, labels = [], []
    for t in toric.markov_triples(bound):
        dual = toric.polar(toric.markov_polygon(t))
        feats.append(ehrhart_vector(dual, T).counts)
        labels.append(dual.denominator_k)
    return feats, labels


def feature_collisions(feats, labels) -> int:
    """Number of pairs with identical features and different labels."""
    by_feat = defaultdict(Counter)
    for f, g in zip(feats, labels):
        by_feat[tuple(f)][g] += 1
    total = 0
    for c in by_feat.values():
        n = sum(c.values())
        total += (n * n - sum(v * v for v in c.values())) // 2
    return total


def cmd_gorenstein(out, n: int = 1000, T: int = 100, min_class: int = 10, markov_bound: int = 433,
                   grid=DEFAULT_C_GRID, seed: int = 0) -> ExperimentReport:
    """Try to learn the Gorenstein index of a Fano polygon from the Ehrhart
    vector of its polar, then evaluate on Markov triangles, whose polar
    vectors all coincide while their indices differ."""
    out = Path(out)
    feats, labels = fano_dataset(n, T, seed)
    mfeats, mlabels = markov_subset(markov_bound, T)
    freq = Counter(labels)
    keep = [i for i, g in enumerate(labels) if freq[g] >= min_class]
    X = np.log(np.array([[float(v) for v in feats[i]] for i in keep]))
    y = np.array([labels[i] for i in keep])
    if len(set(y.tolist())) < 2:
        raise ValueError(f"fewer than two Gorenstein indices occur {min_class} times; raise --n or lower --min-class")
    tr, te = ml.split(y, 0.5, "stratified", seed)
    model, preds, best, scores = _clf_variant(X, y, tr, te, "rank", grid, seed)
    Xm = np.log(np.array([[float(v) for v in f] for f in mfeats]))
    mpreds = model.predict(Xm)
    macc = ml.accuracy(mpreds, mlabels)
    mbase = ml.class_prior_baseline(mlabels)
    collisions = feature_collisions(feats + mfeats, labels + mlabels)
    rep = ExperimentReport(
        "gorenstein",
        {"n": n, "T": T, "min_class": min_class, "markov_bound": markov_bound, "grid": list(grid), "seed": seed},
    )
    rep.metrics = {
        "classes": sorted(set(y.tolist())),
        "n_used": len(y),
        "accuracy": ml.accuracy(preds, y[te]),
        "class_prior": ml.class_prior_baseline(y[te]),
        "C": best,
        "cv_scores": {str(k): v for k, v in scores.items()},
        "markov": {"n": len(mlabels), "labels": mlabels, "accuracy": macc, "class_prior": mbase},
        "collision_pairs": collisions,
    }
    rep.files["predictions"] = _predictions(out, "gorenstein_predictions.csv", te, y[te], preds)
    rep.files["markov_predictions"] = _predictions(
        out, "gorenstein_markov_predictions.csv", range(len(mlabels)), mlabels, mpreds
    )
    rep.checks = {"markov_no_signal": macc <= mbase + 0.05, "collisions_found": collisions >= 1}
    return rep


# ---------------------------------------------------------------------------
# Markov triangles


def cmd_markov(bound: int = 433, terms: int = 20, certify: bool = True) -> ExperimentReport:
    """Gorenstein indices and polar Ehrhart vectors of the Markov triangles.

    With ``certify`` the quasi-period is proved from ``6k`` counted terms,
    which dominates the cost for large triples.
    """
    reference = None
    rows = []
    for t in toric.markov_triples(bound):
        dual = toric.polar(toric.markov_polygon(t))
        k = dual.denominator_k
        y = ehrhart_vector(dual, max(terms - 1, ehrhart.required_terms(2, k) - 1 if certify else 1))
        rho = ehrhart.quasi_period(y, 2, k) if certify else None
        head = y.counts[:terms]
        if reference is None:
            reference = head
        rows.append({"triple": t.astuple(), "gorenstein_index": k, "counts": head, "quasi_period": rho})
    rep = ExperimentReport("markov", {"bound": bound, "terms": terms, "certify": certify})
    rep.metrics = {"triples": rows}
    rep.checks = {
        "index_is_abc": all(r["gorenstein_index"] == np.prod(r["triple"]) for r in rows),
        "polar_vectors_equal": all(r["counts"] == reference for r in rows),
    }
    if certify:
        rep.checks["quasi_period_one"] = all(r["quasi_period"] == 1 for r in rows)
    return rep


# ---------------------------------------------------------------------------
# single polytope


def read_vertices(path):
    verts = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            verts.append(as_point(line.split()))
    if not verts:
        raise ValueError(f"{path}: no vertices")
    return verts


def cmd_ehrhart(path, terms: int = 20) -> dict:
    verts = read_vertices(path)
    P = convex_hull(verts, len(verts[0]))
    prof = datagen.ehrhart_profile(P, terms)
    return {
        "dimension": P.ambient_dim,
        "denominator": P.denominator_k,
        "counts": prof.features.counts,
        "delta": prof.delta.deltas,
        "quasi_period": prof.quasi_period,
        "volume": prof.volume,
    }


# ---------------------------------------------------------------------------
# argument handling


def _ints(text):
    return tuple(int(v) for v in str(text).replace(" ", "").split(",") if v)


def _floats(text):
    return tuple(float(v) for v in str(text).replace(" ", "").split(",") if v)


def _optional_float(text):
    return None if str(text).lower() in ("none", "") else float(text)


def read_config(path) -> dict:
    """``key = value`` lines; keys use the long flag names (dashes or underscores)."""
    cfg = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key.replace("-", "_")] = value
    return cfg


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--terms", type=int, default=100, help="T: the feature vectors hold y_0..y_T")
    common.add_argument("--out", default="results")
    common.add_argument("--config", help="file of key=value defaults")
    common.add_argument("--check", action="store_true", help="exit 2 when a threshold is missed")

    gen = argparse.ArgumentParser(add_help=False)
    gen.add_argument("--dataset", help="read this dataset instead of generating one")
    gen.add_argument("--dims", type=_ints)
    gen.add_argument("--per-class", type=int)
    gen.add_argument("--box", type=int, default=5)
    gen.add_argument("--r-range", type=_ints, default=(2, 6))
    gen.add_argument("--periods", type=_ints, default=(2, 3, 4, 5, 6))
    gen.add_argument("--workers", type=int, default=1)

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--c-grid", type=_floats, default=DEFAULT_C_GRID)

    parser = argparse.ArgumentParser(prog="ehrhart-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}
    p = subs["generate"] = sub.add_parser("generate", parents=[common, gen], help="write a dataset CSV")
    p.add_argument("--kind", choices=("lattice", "rational"), default="lattice")
    subs["dimension"] = sub.add_parser("dimension", parents=[common, gen, grid], help="predict the dimension")
    p = subs["volume"] = sub.add_parser("volume", parents=[common, gen, grid], help="regress the volume")
    p.add_argument("--volume-cap", type=_optional_float, default=10_000.0)
    p.add_argument("--epsilon", type=float, default=0.0)
    subs["quasiperiod"] = sub.add_parser("quasiperiod", parents=[common, gen, grid], help="classify the quasi-period")
    p = subs["gorenstein"] = sub.add_parser("gorenstein", parents=[common, grid], help="Gorenstein index experiment")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--min-class", type=int, default=10)
    p.add_argument("--markov-bound", type=int, default=433)
    p = subs["markov"] = sub.add_parser("markov", parents=[common], help="Markov triangle collapse")
    p.add_argument("--bound", type=int, default=433)
    p.add_argument("--no-certify", action="store_true")
    p = subs["ehrhart"] = sub.add_parser("ehrhart", parents=[common], help="profile one polytope")
    p.add_argument("vertices", help="one vertex per line, coordinates as p/q separated by spaces")
    return parser, subs


def parse_args(argv=None):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        target = subs[args.command]
        known = {a.dest for a in target._actions}
        unknown = set(cfg) - known
        if unknown:
            parser.error(f"unknown config keys: {', '.join(sorted(unknown))}")
        # string defaults go through each option's type converter
        target.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _gen_params(args, kind):
    dims = args.dims or ((2, 3, 4) if kind == "lattice" else (2, 3))
    per_class = args.per_class or (200 if kind == "lattice" else 300)
    return dict(
        kind=kind, dims=dims, per_class=per_class, T=args.terms, box=args.box,
        r_range=args.r_range, periods=args.periods, seed=args.seed, workers=args.workers,
    )


def _finish(rep: ExperimentReport, args) -> int:
    path = rep.write(Path(args.out))
    for name, ok in rep.checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    print(f"report: {path}")
    return 2 if args.check and not rep.passed else 0


def _run(args) -> int:
    out = Path(args.out)
    cmd = args.command
    if cmd == "generate":
        params = datagen.GenerationParams(**_gen_params(args, args.kind))
        ds, path = cmd_generate(params, out)
        print(f"wrote {len(ds)} rows to {path}")
        for c, n in class_histogram(ds).items():
            print(f"  {c}: {n}")
        if ds.underfilled:
            print(f"underfilled classes: {list(ds.underfilled)}", file=sys.stderr)
        return 2 if args.check and ds.underfilled else 0
    if cmd == "ehrhart":
        info = cmd_ehrhart(args.vertices, args.terms)
        print(f"dimension     {info['dimension']}")
        print(f"denominator   {info['denominator']}")
        print(f"quasi-period  {info['quasi_period']}")
        print(f"volume        {info['volume']}")
        print("delta         " + " ".join(map(str, info["delta"])))
        print("counts        " + " ".join(map(str, info["counts"])))
        return 0
    if cmd == "markov":
        rep = cmd_markov(args.bound, args.terms, not args.no_certify)
        for r in rep.metrics["triples"]:
            print(f"{r['triple']}  index {r['gorenstein_index']}  rho {r['quasi_period']}  "
                  + " ".join(map(str, r["counts"][:8])) + " ...")
        return _finish(rep, args)
    if cmd == "gorenstein":
        rep = cmd_gorenstein(out, args.n, args.terms, args.min_class, args.markov_bound, args.c_grid, args.seed)
        m = rep.metrics
        print(f"accuracy {m['accuracy']:.3f} (class prior {m['class_prior']:.3f}); "
              f"markov accuracy {m['markov']['accuracy']:.3f}; collisions {m['collision_pairs']}")
        return _finish(rep, args)

    kind = "rational" if cmd == "quasiperiod" else "lattice"
    ds = load_or_generate(args.dataset, **_gen_params(args, kind))
    if cmd == "dimension":
        rep = cmd_dimension(ds, out, args.c_grid, args.seed)
        summary = {k: v["accuracy"] for k, v in rep.metrics.items()}
    elif cmd == "volume":
        rep = cmd_volume(ds, out, args.c_grid, args.volume_cap, args.epsilon, args.seed)
        summary = {k: v["r2"] for k, v in rep.metrics.items()}
    else:
        rep = cmd_quasiperiod(ds, out, args.c_grid, seed=args.seed)
        summary = {f"{d}_{f}": rep.metrics[d][f]["accuracy"] for d in rep.metrics for f in ("raw", "log")}
    for k, v in summary.items():
        print(f"{k:14s} {v:.4f}")
    return _finish(rep, args)


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ml.ConvergenceWarning)
            return _run(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
