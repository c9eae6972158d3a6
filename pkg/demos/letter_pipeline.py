"""End-to-end letter-writing pipeline.

Fits a joint GMM to noisy handwriting-style demonstrations, overlays the
mixture regression envelope on the data, then rebuilds the trajectory as a
GMR-based GP and bends it through two via-points. The figure shows how the
posterior honors the via-points where it must and falls back to the
demonstrated motion everywhere else.

Run:  python3 demos/letter_pipeline.py
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from gmrgp import ViaPoint, adapt, build, fit_gmm, predict_trajectory
from gmrgp.datasets import generate_synthetic
from gmrgp.gmm import EmConfig
from gmrgp.gmr import gmr_predict_batch

OUT_DIR = pathlib.Path(__file__).parent / "output"


def main():
    demos = generate_synthetic("letter", {"n_demos": 5, "samples_per_demo": 120}, seed=0)
    gmm = fit_gmm(demos, 6, EmConfig(seed=0))
    print(f"EM finished after {len(gmm.log_likelihoods)} iterations, "
          f"final log-likelihood {gmm.log_likelihoods[-1]:.1f}")

    grid = np.linspace(0.0, 2.0, 300)[:, None]
    gmr = gmr_predict_batch(gmm, grid)

    model = build(gmm, lengthscales=0.15, noise=1e-4)
    vias = [ViaPoint([0.5], [-2.0, 9.0]), ViaPoint([1.6], [8.0, -3.0])]
    adapted = adapt(model, vias)
    bent = predict_trajectory(adapted, grid)

    fig, axes = plt.subplots(1, 2, figsize=(11, 5), sharex=True, sharey=True)
    for ax in axes:
        for i in range(demos.num_demos):
            _, ys = demos.demo(i)
            ax.plot(ys[:, 0], ys[:, 1], color="0.8", lw=0.8)
        ax.set_aspect("equal")

    mean = np.array([p.mean for p in gmr])
    axes[0].plot(mean[:, 0], mean[:, 1], "C0", lw=2, label="regression mean")
    for comp in gmm.components:
        axes[0].plot(*comp.mean[1:], "C3o", ms=4)
    axes[0].set_title("demonstrations and mixture regression")
    axes[0].legend()

    bent_mean = np.array([p.mean for p in bent])
    axes[1].plot(bent_mean[:, 0], bent_mean[:, 1], "C2", lw=2, label="via-point posterior")
    for vp in vias:
        axes[1].plot(*vp.output, "k*", ms=14)
    axes[1].set_title("adapted through two via-points")
    axes[1].legend()

    OUT_DIR.mkdir(exist_ok=True)
    fig.savefig(OUT_DIR / "letter_pipeline.png", dpi=130, bbox_inches="tight")
    print(f"figure written to {OUT_DIR / 'letter_pipeline.png'}")


if __name__ == "__main__":
    main()
