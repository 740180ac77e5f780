"""Figure rendering for the experiment subcommands.

Each helper writes one PNG next to the delimited output and returns the
path.  Everything runs on the Agg backend; no display is ever required.
"""

from __future__ import annotations

from typing import Dict, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .stats import (EmpiricalDistribution, dl_reference_cdf,
                    dl_reference_density)  # noqa: E402


def _finish(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def levy_figure(path: str, series_list: Sequence[Sequence[Tuple[int, float]]],
                reference: Optional[float] = None,
                title: str = "growth-rate estimate") -> str:
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    for series in series_list:
        ls = np.array([l for l, _ in series])
        vs = np.array([v for _, v in series])
        ax.plot(ls, vs, lw=0.7, alpha=0.6)
    if reference is not None:
        ax.axhline(reference, color="k", ls="--", lw=1.0,
                   label=f"limit {reference:.6f}")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("index l")
    ax.set_ylabel("estimate")
    ax.set_title(title, fontsize=10)
    return _finish(fig, path)


def histogram_figure(path: str, emp: EmpiricalDistribution, bins: int = 60,
                     with_dl_reference: bool = False,
                     title: str = "empirical distribution") -> str:
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    ax.hist(emp.samples, bins=bins, density=True, alpha=0.65,
            color="tab:blue", label="samples")
    if with_dl_reference:
        zs = np.linspace(1e-4, 1.0, 400)
        ax.plot(zs, [dl_reference_density(z) for z in zs], "k--", lw=1.2,
                label="reference density")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("value")
    ax.set_ylabel("density")
    ax.set_title(title, fontsize=10)
    return _finish(fig, path)


def cdf_figure(path: str, emp: EmpiricalDistribution,
               title: str = "empirical CDF vs reference") -> str:
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    xs = emp.samples
    ax.step(xs, np.arange(1, len(xs) + 1) / len(xs), where="post",
            lw=1.0, label="empirical")
    zs = np.linspace(0.0, 1.05 * float(xs[-1]), 400)
    ax.plot(zs, [dl_reference_cdf(z) for z in zs], "k--", lw=1.0,
            label="reference")
    ax.set_xlabel("z")
    ax.set_ylabel("F(z)")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(title, fontsize=10)
    return _finish(fig, path)


def frequency_figure(path: str, freqs: Dict, expected: Optional[float] = None,
                     title: str = "class frequencies") -> str:
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    labels = [str(k) for k in freqs]
    vals = list(freqs.values())
    ax.bar(range(len(vals)), vals, color="tab:green", alpha=0.8)
    ax.set_xticks(range(len(vals)))
    ax.set_xticklabels(labels, rotation=45, fontsize=7)
    if expected is not None:
        ax.axhline(expected, color="k", ls="--", lw=1.0)
    ax.set_ylabel("frequency")
    ax.set_title(title, fontsize=10)
    return _finish(fig, path)


def scatter_figure(path: str, values: Sequence[float],
                   reference: Optional[float] = None,
                   title: str = "per-sample estimates") -> str:
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    ax.plot(range(len(values)), values, "o", ms=4, alpha=0.8)
    if reference is not None:
        ax.axhline(reference, color="k", ls="--", lw=1.0)
    ax.set_xlabel("sample")
    ax.set_ylabel("estimate")
    ax.set_title(title, fontsize=10)
    return _finish(fig, path)
