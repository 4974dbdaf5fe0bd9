#!/usr/bin/env python3
"""
Example usage of the wacc library.

Small, fast versions of the experiments that the command line runs at full
size: power iteration on a fixed matrix and on GUE matrices, the exceptional
set truncation on a heavy-tailed sample, and Renegar's condition number of a
Gaussian matrix with respect to an orthant.
"""

import sys
import math
import logging
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from src.wacc import (
    BiconicProblem,
    Orthant,
    FullSpace,
    RngStream,
    classify_feasibility,
    gue_weak_experiment,
    power_iterate,
    weak_expectation,
)
from src.wacc.renegar import keybound
from src.wacc.sampling import gaussian_matrix, pareto


def power_iteration_demo():
    """Iteration counts of diag(2, 1) from the start (1, 1)/sqrt(2)"""
    A = [[2.0, 0.0], [0.0, 1.0]]
    x0 = [1.0 / math.sqrt(2), 1.0 / math.sqrt(2)]
    for alpha in (math.pi / 4, math.pi / 8, math.pi / 16):
        result = power_iterate(A, x0, alpha, max_iter=100)
        print(
            f"alpha={alpha:.4f}: {result.iterations} iterations "
            f"(Kostlan bounds {result.lower_bound:.4f} .. {result.upper_bound:.4f})"
        )


def weak_expectation_demo():
    """Raw and truncated means of a sample with P{X > s} = 1/s"""
    samples = pareto(RngStream(1), 1.0, size=100_000)
    for epsilon in (0.0, 0.001, 0.01, 0.1):
        report = weak_expectation(samples, epsilon)
        print(
            f"epsilon={epsilon:<6} removed={report.exceptional_count:<6} "
            f"mean={report.conditional_mean:.4f} (raw {report.raw_mean:.2f})"
        )


def gue_demo():
    """Weak average of power iteration counts on 10 x 10 GUE matrices"""
    report = gue_weak_experiment(10, math.pi / 8, 0.05, 200, 100_000, RngStream(2), starts=16)
    print(f"threshold x0 = {report.threshold:.3f}")
    print(f"conditional mean = {report.conditional_mean_rho:.3f} +- {report.conditional_se:.3f}")
    print(f"raw mean = {report.raw_mean:.3f}, top 5% share = {report.top_share:.3f}")


def renegar_demo():
    """Feasibility and condition of a Gaussian 30 x 10 matrix with C = orthant, D = R^30"""
    A = gaussian_matrix(RngStream(3), 30, 10)
    verdict = classify_feasibility(BiconicProblem(A, Orthant(10), FullSpace(30)), stream=RngStream(4))
    print(f"verdict: {verdict.tag.value}")
    print(f"sigma_primal = {verdict.sres_primal:.6f}, sigma_dual = {verdict.sres_dual:.6f}")
    print(f"Renegar condition = {verdict.condition:.4f}")
    params = keybound(Orthant(10), FullSpace(30), trials=20_000, stream=RngStream(5))
    print(f"keybound: epsilon = {params.epsilon:.3e}, right-hand side = {params.rhs:.4f}")


def main():
    """Main function to demonstrate wacc library usage"""
    logging.basicConfig(level=logging.INFO)

    print("wacc Example Usage")
    print("==================")
    print("\n1. Power Iteration on diag(2, 1)")
    print("2. Weak Expectation of a Pareto Sample")
    print("3. GUE Power Iteration Experiment")
    print("4. Renegar Condition of a Gaussian Matrix")
    print("q. Quit")

    choice = input("\nEnter your choice: ")

    if choice == "1":
        power_iteration_demo()
    elif choice == "2":
        weak_expectation_demo()
    elif choice == "3":
        gue_demo()
    elif choice == "4":
        renegar_demo()
    elif choice.lower() == "q":
        print("Exiting...")
    else:
        print("Invalid choice!")


if __name__ == "__main__":
    main()
