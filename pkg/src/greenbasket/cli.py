"""Command-line interface.

Subcommands:
  build-dataset   ingest raw CSVs or generate the synthetic catalog + corpus
  optimize        recommend baskets for one intended basket, optionally to CSV
  evaluate        run the dominance / ratio / impact / timing suites
  serve           start the HTTP service
  report          render figures and a long-format CSV from evaluate outputs

Every source of randomness is controlled by --seed; rerunning a command with
the same inputs and seed reproduces its outputs byte for byte (timing aside).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import dataset as ds
from .domain import AnchorContext, N_OBJECTIVES
from .experiments import (
    METHODS,
    compare_dominance,
    counterfactual_simulate,
    evaluation_baskets,
    filter_recommendations,
    ratio_report,
    run_method,
    run_methods,
    timing_report,
)
from .gateway import GatewayConfig, create_app
from .pareto import acceptability_filter


def _fmt(value: float) -> str:
    return format(float(value), ".12g")


def _parse_weights(text: str | None) -> np.ndarray | None:
    if text is None:
        return None
    parts = [float(p) for p in text.split(",")]
    if len(parts) != N_OBJECTIVES:
        raise ValueError(f"expected {N_OBJECTIVES} weights, got {len(parts)}")
    if any(w <= 0 for w in parts):
        raise ValueError("weights must be positive")
    return np.asarray(parts)


def _parse_methods(text: str) -> list[str]:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r} (choose from {', '.join(METHODS)})")
    return methods


def _budgets(args) -> dict[str, int]:
    budgets = {}
    for method in METHODS:
        value = getattr(args, f"budget_{method}", None)
        if value is not None:
            budgets[method] = value
    if getattr(args, "budget", None) is not None:
        for method in METHODS:
            budgets.setdefault(method, args.budget)
    return budgets


def cmd_build_dataset(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.synth:
        config = ds.SynthConfig(
            seed=args.seed,
            n_households=args.households,
            n_weeks=args.weeks,
            n_products=args.products,
        )
        catalog, corpus, stats = ds.synth_generate(config)
        ds.write_catalog_csv(catalog, out_dir / "catalog.csv")
        ds.write_corpus_csv(corpus, out_dir / "transactions.csv")
        ds.write_report_json(stats, out_dir / "report.json")
        print(
            f"wrote synthetic catalog ({catalog.size} products) and corpus "
            f"({stats['n_baskets']} baskets) to {out_dir}"
        )
        return 0

    if not (args.transactions and args.env and args.nutrition):
        raise ValueError("ingestion needs --transactions, --env and --nutrition")
    transactions = pd.read_csv(args.transactions)
    env = pd.read_csv(args.env)
    nutrition = pd.read_csv(args.nutrition)
    catalog, report = ds.build_catalog(
        transactions, env, nutrition, estimator=args.estimator
    )
    corpus = ds.corpus_from_transactions(transactions, catalog)
    ds.write_catalog_csv(catalog, out_dir / "catalog.csv")
    ds.write_corpus_csv(corpus, out_dir / "transactions.csv")
    ds.write_report_json(report, out_dir / "report.json")
    dropped = len(report["dropped"])
    print(
        f"ingested {report['n_transactions']} transactions into "
        f"{report['n_products']} products ({dropped} labels dropped); see {out_dir}"
    )
    return 0


def _load_basket(path, catalog, household=None, week=None):
    corpus = ds.read_corpus_csv(path)
    baskets = ds.baskets_from_corpus(corpus, catalog)
    if household is not None and week is not None:
        key = (household, week)
        if key not in baskets:
            raise ValueError(f"basket {key} not found in {path}")
        return key, baskets[key]
    key = sorted(baskets)[0]
    return key, baskets[key]


def recommendations_frame(catalog, ctx, recs, method: str) -> pd.DataFrame:
    rows = []
    for i, rec in enumerate(recs):
        entry = {
            "method": method,
            "rec_index": i,
            "cosine_similarity": _fmt(rec.cosine),
            "passed_filter": bool(acceptability_filter([rec])),
        }
        for j in range(N_OBJECTIVES):
            entry[f"loss_{j + 1}"] = _fmt(rec.losses[j])
        entry["basket"] = ";".join(
            f"{catalog.product_ids[k]}:{int(q)}"
            for k, q in enumerate(rec.basket)
            if q > 0
        )
        rows.append(entry)
    return pd.DataFrame(rows)


def cmd_optimize(args) -> int:
    catalog = ds.read_catalog_csv(args.catalog)
    key, x_star = _load_basket(args.basket, catalog, args.household, args.week)
    weights = _parse_weights(args.weights)
    recs = run_method(args.method, catalog, x_star, args.seed, args.budget, weights)
    ctx = AnchorContext.build(catalog, x_star)

    frame = recommendations_frame(catalog, ctx, recs, args.method)
    print(f"intended basket {key}: {int(x_star.sum())} units of {int((x_star > 0).sum())} products")
    for _, row in frame.iterrows():
        flag = "accepted" if row["passed_filter"] else "filtered-out"
        print(
            f"  [{row['rec_index']}] cosine={float(row['cosine_similarity']):.3f} "
            f"cost-ratio={float(row['loss_2']):.3f} ({flag}) {row['basket']}"
        )
    if args.out:
        frame.to_csv(args.out, index=False)
        print(f"wrote {len(frame)} recommendations to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    catalog = ds.read_catalog_csv(args.catalog)
    corpus = ds.read_corpus_csv(args.transactions)
    methods = _parse_methods(args.methods)
    baskets = evaluation_baskets(catalog, corpus, args.households, args.weeks)
    if not baskets:
        raise ValueError("no intended baskets selected")
    budgets = _budgets(args)

    suites = (
        ["dominance", "ratios", "impact", "timing"]
        if args.suite == "all"
        else [args.suite]
    )
    summary: dict = {
        "methods": methods,
        "n_baskets": len(baskets),
        "seed": args.seed,
        "suites": suites,
    }

    results = None
    if {"dominance", "ratios", "impact"} & set(suites):
        results = run_methods(catalog, baskets, methods, args.seed, budgets)

    if "dominance" in suites:
        dom_summary, per_basket = compare_dominance(results, seed=args.seed)
        dom_summary.to_csv(out_dir / "dominance_summary.csv", index=False)
        per_basket.to_csv(out_dir / "dominance_per_basket.csv", index=False)
        summary["dominance"] = dom_summary.to_dict(orient="records")
        print(dom_summary.to_string(index=False))

    filtered = filter_recommendations(results) if results is not None else None

    if "ratios" in suites:
        ratios = ratio_report(catalog, baskets, filtered)
        ratios.to_csv(out_dir / "ratio_report.csv", index=False)
        summary["ratios"] = ratios.to_dict(orient="records")
        print(ratios.to_string(index=False))

    if "impact" in suites:
        impacts = {}
        for method in methods:
            report = counterfactual_simulate(
                catalog,
                baskets,
                filtered[method],
                args.acceptance_rate,
                args.trajectories,
                args.seed,
            )
            frame = report.to_frame()
            frame.to_csv(out_dir / f"impact_{method}.csv", index=False)
            impacts[method] = {
                "mean_replaced": report.mean_replaced,
                "mean_added_units": report.mean_added_units,
                "mean_removed_units": report.mean_removed_units,
            }
        pooled = {
            key: [r for method in methods for r in filtered[method].get(key, [])]
            for key in baskets
        }
        pooled_report = counterfactual_simulate(
            catalog, baskets, pooled, args.acceptance_rate, args.trajectories, args.seed
        )
        pooled_report.to_frame().to_csv(out_dir / "impact_pooled.csv", index=False)
        summary["impact"] = impacts
        print(f"impact tables written for {', '.join(methods)} and pooled")

    if "timing" in suites:
        timing = timing_report(catalog, baskets, methods, args.seed, budgets)
        timing.to_csv(out_dir / "timing.csv", index=False)
        summary["timing"] = timing.to_dict(orient="records")
        print(timing.to_string(index=False))

    ds.write_report_json(summary, out_dir / "summary.json")
    return 0


def cmd_serve(args) -> int:
    config = (
        GatewayConfig.from_file(args.config) if args.config else GatewayConfig()
    )
    if args.catalog:
        config.catalog_path = args.catalog
    if args.port:
        config.port = args.port
    config.apply_env_overrides()
    if not config.catalog_path:
        raise ValueError("no catalog configured (flag, config file, or env var)")
    catalog = ds.read_catalog_csv(config.catalog_path)
    app = create_app(catalog, config)

    import uvicorn

    uvicorn.run(app, host="0.0.0.0", port=config.port)
    return 0


def cmd_report(args) -> int:
    from . import plotting

    in_dir = Path(args.in_dir)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    long_rows = []

    dominance_path = in_dir / "dominance_summary.csv"
    if dominance_path.exists():
        dom = pd.read_csv(dominance_path)
        plotting.plot_dominance(dom, out_dir / "dominance.png")
        for _, row in dom.iterrows():
            long_rows.append(
                {
                    "table": "dominance",
                    "method": row["method"],
                    "metric": "mean_ratio",
                    "value": row["mean"],
                }
            )

    ratio_path = in_dir / "ratio_report.csv"
    if ratio_path.exists():
        ratios = pd.read_csv(ratio_path)
        plotting.plot_ratio_report(ratios, out_dir / "ratios.png")
        for _, row in ratios.iterrows():
            for col in ratios.columns:
                if col.startswith("ratio_") or col == "cosine_similarity":
                    long_rows.append(
                        {
                            "table": "ratios",
                            "method": row["method"],
                            "metric": col,
                            "value": row[col],
                        }
                    )

    impacts = {}
    for path in sorted(in_dir.glob("impact_*.csv")):
        method = path.stem.replace("impact_", "")
        frame = pd.read_csv(path)
        impacts[method] = frame
        for _, row in frame.iterrows():
            long_rows.append(
                {
                    "table": "impact",
                    "method": method,
                    "metric": f"reduction_{row['feature']}",
                    "value": row["mean_reduction"],
                }
            )
    if impacts:
        plotting.plot_impact(impacts, out_dir / "impact.png")

    if not long_rows:
        raise ValueError(f"no evaluate outputs found in {in_dir}")
    pd.DataFrame(long_rows).to_csv(out_dir / "figures_long.csv", index=False)
    print(f"wrote figures and figures_long.csv to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="greenbasket",
        description="Sustainable basket recommendations via multi-objective optimization",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-dataset", help="ingest CSVs or generate synthetic data")
    p.add_argument("--synth", action="store_true", help="generate synthetic data")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--households", type=int, default=50)
    p.add_argument("--weeks", type=int, default=10)
    p.add_argument("--products", type=int, default=132)
    p.add_argument("--transactions", help="raw transactions CSV (ingestion mode)")
    p.add_argument("--env", help="environmental impact table CSV")
    p.add_argument("--nutrition", help="nutrition table CSV")
    p.add_argument("--estimator", choices=("mean", "median"), default="mean")
    p.add_argument("--out-dir", default="data")
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("optimize", help="recommend baskets for one intended basket")
    p.add_argument("--catalog", required=True)
    p.add_argument("--basket", required=True, help="basket CSV (household_id,week,product_id,quantity)")
    p.add_argument("--method", choices=METHODS, default="rnsga2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, help="generation override")
    p.add_argument("--weights", help="11 comma-separated positive weights")
    p.add_argument("--household", help="household id inside the basket file")
    p.add_argument("--week", type=int, help="week inside the basket file")
    p.add_argument("--out", help="write recommendations CSV here")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("evaluate", help="run the evaluation suites")
    p.add_argument("--catalog", required=True)
    p.add_argument("--transactions", required=True)
    p.add_argument(
        "--suite",
        choices=("dominance", "ratios", "impact", "timing", "all"),
        default="all",
    )
    p.add_argument("--methods", default="g3a,mones,rnsga2")
    p.add_argument("--households", type=int, default=3, help="top emitters to evaluate")
    p.add_argument("--weeks", type=int, default=None, help="limit to the first weeks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, help="generation override for all methods")
    for method in METHODS:
        p.add_argument(f"--budget-{method}", type=int, dest=f"budget_{method}")
    p.add_argument("--acceptance-rate", type=float, default=0.25)
    p.add_argument("--trajectories", type=int, default=5000)
    p.add_argument("--out-dir", default="results")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--catalog")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("report", help="render figures from evaluate outputs")
    p.add_argument("--in-dir", default="results")
    p.add_argument("--out-dir", default="figures")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
