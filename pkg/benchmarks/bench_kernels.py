"""Compare the compiled and numpy Monte Carlo kernels.

Runs the same configurations through both backends, reports wall time,
time per step and the speed-up, and checks that the two estimates agree.

    python3 benchmarks/bench_kernels.py [--paths N] [--threads T]
"""
import argparse
import math
import time

from narrowescape.geometry import Annulus, DecapitatedSphere, Disk, Rectangle, Window, corner_window
from narrowescape.montecarlo import McConfig, Start, available_backends, simulate


CASES = [
    ("disk, whole boundary absorbing", Disk(1.0), "all", Start.point(0.0, 0.0)),
    ("annulus, inner window eps=0.1", Annulus(1.0, 2.0), Window("inner", math.pi, 0.1), Start.uniform()),
    ("rectangle, corner window 0.1", Rectangle(1.0, 1.0), corner_window(Rectangle(1.0, 1.0), 0.1), Start.uniform()),
    ("sphere, absorbing rim delta=0.3", DecapitatedSphere(1.0, 0.3), None, Start.point(math.pi, 0.0)),
]


def run(domain, window, start, backend, paths, threads):
    cfg = McConfig(dt=1e-5, n_paths=paths, seed=7, start=start, threads=threads)
    t0 = time.perf_counter()
    est = simulate(domain, window, cfg, backend=backend)
    return est, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--paths", type=int, default=400)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    if "compiled" not in available_backends():
        raise SystemExit("compiled kernel not built; reinstall with a C compiler")
    print(f"{'case':34s} {'backend':9s} {'mean':>9s} {'stderr':>8s} {'time s':>8s} {'ns/step':>8s}")
    for label, domain, window, start in CASES:
        times = {}
        for backend in ("compiled", "numpy"):
            est, dt = run(domain, window, start, backend, args.paths, args.threads)
            steps = est.mean_steps * est.n_paths
            times[backend] = dt
            print(f"{label:34s} {backend:9s} {est.mean:9.5f} {est.stderr:8.5f} {dt:8.3f} {1e9 * dt / steps:8.1f}")
        print(f"{'':34s} speed-up {times['numpy'] / times['compiled']:.1f}x")


if __name__ == "__main__":
    main()
