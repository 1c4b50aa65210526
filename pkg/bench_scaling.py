import argparse
import os

import numpy as np

from dp_solver import DEFAULT_CONFIG, CertificateSolver
from utils import ktree_instance

print("Script has started executing.")


def run_scaling(
    calculus: str = "ia",
    sizes: tuple = (1000, 2000, 4000, 8000),
    w: int = 2,
    wide_w: int = 4,
    wide_n: int = 1000,
    seed: int = 0,
    config_path: str = DEFAULT_CONFIG,
    save_folder: str = "results/scaling",
    parallel: bool = False,
):
    """
    Times the solver on planted w-tree instances of growing size, then at a wider
    width for a fixed size.

    Args:
        calculus (str): Calculus of the generated instances.
        sizes (tuple): Numbers of variables for the fixed-width runs.
        w (int): Width of the fixed-width family.
        wide_w (int): Width of the comparison run.
        wide_n (int): Number of variables of the comparison run.
        seed (int): Seed for numpy's default_rng.
        config_path (str): Solver configuration.
        save_folder (str): Where times, sizes and per-node stats are saved.
        parallel (bool): Use the solver's parallel mode.
    """
    rng = np.random.default_rng(seed)
    solver = CertificateSolver(config_path, witness=False, parallel=True if parallel else None)
    os.makedirs(save_folder, exist_ok=True)

    times = []
    for n in sizes:
        instance = ktree_instance(calculus, n, w, rng)
        nice = solver.decompose(instance)
        result = solver.solve(instance, nice)
        times.append(result.wall_time)
        result.write_stats(f"{save_folder}/stats_n{n}_w{w}.csv")
        print(f"n={n}, w={result.width}, verdict={result.verdict}, time={result.wall_time:.2f}s, "
              f"peak record={result.peak_record}, time per variable={1e3 * result.wall_time / n:.3f}ms")

    per_variable = np.array(times) / np.array(sizes)
    slack = per_variable.max() / per_variable[0]
    print(f"Largest time-per-variable ratio against n={sizes[0]}: {slack:.2f} (linear within 1.5x: {slack <= 1.5})")

    wide = ktree_instance(calculus, wide_n, wide_w, rng)
    wide_result = solver.solve(wide, solver.decompose(wide))
    wide_result.write_stats(f"{save_folder}/stats_n{wide_n}_w{wide_w}.csv")
    base_index = list(sizes).index(wide_n) if wide_n in sizes else 0
    print(f"w={wide_result.width} at n={wide_n}: time={wide_result.wall_time:.2f}s, "
          f"factor over w={w}: {wide_result.wall_time / times[base_index]:.1f}, peak record={wide_result.peak_record}")

    np.save(f"{save_folder}/sizes.npy", np.array(sizes))
    np.save(f"{save_folder}/times.npy", np.array(times))
    np.save(f"{save_folder}/wide.npy", np.array([wide_n, wide_w, wide_result.wall_time]))
    print("Scaling results saved!")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Measure solver time against instance size at fixed treewidth")
    parser.add_argument("--calculus", type=str, default="ia", help="Calculus of the generated instances")
    parser.add_argument("--sizes", type=int, nargs="+", default=[1000, 2000, 4000, 8000], help="Numbers of variables")
    parser.add_argument("-w", type=int, default=2, help="Treewidth of the scaling family")
    parser.add_argument("--wide-w", type=int, default=4, help="Treewidth of the comparison run")
    parser.add_argument("--wide-n", type=int, default=1000, help="Size of the comparison run")
    parser.add_argument("--seed", type=int, default=0, help="Random seed")
    parser.add_argument("--config", type=str, default=DEFAULT_CONFIG, help="Solver configuration YAML file")
    parser.add_argument("--save_folder", type=str, default="results/scaling", help="Folder for saved results")
    parser.add_argument("--parallel", action="store_true", help="Evaluate independent subtrees in parallel")
    args = parser.parse_args()

    run_scaling(
        calculus=args.calculus,
        sizes=tuple(args.sizes),
        w=args.w,
        wide_w=args.wide_w,
        wide_n=args.wide_n,
        seed=args.seed,
        config_path=args.config,
        save_folder=args.save_folder,
        parallel=args.parallel,
    )
