"""Single-query latency scaling of the three predictors.

Gaussian mixture regression and the via-point-conditioned model answer queries
against a fixed, small conditioning set, so their latency is flat in the
demonstration count N. A full GP conditioned on all N demonstration points
pays for N at every query. The figure reproduces that contrast at desk scale;
absolute milliseconds depend on the machine, the shape does not.

Run:  python3 demos/query_cost_benchmark.py       (about a minute)
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from gmrgp.bench import BenchConfig, run_bench, reports_to_csv

OUT_DIR = pathlib.Path(__file__).parent / "output"


def main():
    config = BenchConfig(
        n_grid=(100, 300, 1000, 3000), v_grid=(3,),
        methods=("gmr", "mogp", "gmrgp"), output_dim=2, components=3,
    )
    reports = run_bench(config)
    OUT_DIR.mkdir(exist_ok=True)
    (OUT_DIR / "query_cost.csv").write_text(reports_to_csv(reports))

    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    labels = {
        "gmr": "mixture regression",
        "mogp": "GP on all N points",
        "gmrgp": "via-point model (V=3)",
    }
    for method in config.methods:
        cells = [r for r in reports if r.method == method and r.error is None]
        ax.errorbar(
            [r.n for r in cells],
            [r.mean_ms for r in cells],
            yerr=[r.std_ms for r in cells],
            marker="o", capsize=3, label=labels[method],
        )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("demonstration points N")
    ax.set_ylabel("per-query latency [ms]")
    ax.set_title("query cost: flat for regression and via-point model")
    ax.legend()
    fig.savefig(OUT_DIR / "query_cost_benchmark.png", dpi=130, bbox_inches="tight")
    print(f"results in {OUT_DIR / 'query_cost.csv'} and query_cost_benchmark.png")


if __name__ == "__main__":
    main()
