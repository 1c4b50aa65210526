import argparse
import glob
import os

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def visualize_scaling(results_folder: str = "results/scaling", save_folder: str = "plots_scaling", show: bool = False):
    """
    Plots record size against bag size for every saved stats CSV, and solve time
    against the number of variables.

    Args:
        results_folder (str): Folder written by bench_scaling.py (or any folder of stats CSVs).
        save_folder (str): The folder where the plot image will be saved.
        show (bool): Open the figure window after saving.
    """
    stats_files = sorted(glob.glob(os.path.join(results_folder, "stats_*.csv")))
    if not stats_files:
        print(f"No stats files found. Ensure '{results_folder}/stats_*.csv' exists.")
        return

    try:
        sizes = np.load(f"{results_folder}/sizes.npy")
        times = np.load(f"{results_folder}/times.npy")
    except FileNotFoundError:
        print(f"Timing files not found. Ensure '{results_folder}/sizes.npy' and 'times.npy' exist.")
        return

    plt.figure(figsize=(12, 5))

    # Record size vs bag size
    plt.subplot(1, 2, 1)
    for path in stats_files:
        frame = pd.read_csv(path)
        label = os.path.splitext(os.path.basename(path))[0].replace("stats_", "")
        plt.scatter(frame["bag_size"], frame["record_size"], s=8, alpha=0.5, label=label)
    plt.yscale("log")
    plt.xlabel("Bag size")
    plt.ylabel("Record size")
    plt.title("Record Size per Node")
    plt.legend()

    # Time vs number of variables
    plt.subplot(1, 2, 2)
    plt.plot(sizes, times, marker="o", color="blue", label="solve time")
    plt.plot(sizes, times[0] * sizes / sizes[0], linestyle="--", color="gray", label="linear from first point")
    plt.xlabel("Variables")
    plt.ylabel("Seconds")
    plt.title("Solve Time at Fixed Width")
    plt.legend()

    plt.tight_layout()

    os.makedirs(save_folder, exist_ok=True)
    save_path = os.path.join(save_folder, "scaling.png")
    plt.savefig(save_path)
    print(f"Plot saved to {save_path}")

    if show:
        plt.show()


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Plot solver statistics and scaling results")
    parser.add_argument("--results_folder", type=str, default="results/scaling", help="Folder with saved results")
    parser.add_argument("--save_folder", type=str, default="plots_scaling", help="Folder for the plot image")
    parser.add_argument("--show", action="store_true", help="Show the figure after saving")
    args = parser.parse_args()

    visualize_scaling(results_folder=args.results_folder, save_folder=args.save_folder, show=args.show)
