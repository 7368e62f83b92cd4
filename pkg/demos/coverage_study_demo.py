"""Small Monte Carlo coverage study across interval methods.

Reproduces the shape of the package's simulation reports: for one
design (distribution, tau, n) it runs a few hundred replications per
method and prints the coverage / length / interval-score summary CSV.
Full-size studies live behind the `snqesa simulate` CLI.
"""

from __future__ import annotations

from snqesa import report_csv, run_study
from snqesa._simlab import DGP


def main() -> None:
    dgp = DGP.parse("lognormal(0,1)")
    rows = run_study(
        dgp,
        tau=0.9,
        n=80,
        alpha=0.05,
        n_rep=400,
        methods=["snqesa", "snqesa_min", "exact", "pctboot", "hd", "mj"],
        seed=42,
        threads=4,
    )
    print(f"design: {dgp}, tau=0.9, n=80, alpha=0.05, R=400")
    print(report_csv(rows), end="")


if __name__ == "__main__":
    main()
