"""Benchmark the arm kernels: numba-compiled vs pure-NumPy fallback.

The fallback is selected by the BINPICK_PURE_NUMPY=1 environment flag at
import time, so each path runs in its own subprocess. Usage:

    python3 benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys
import textwrap

WORKLOAD = textwrap.dedent(
    """
    import json, time
    import numpy as np
    from binpick import kernels
    from binpick.robot import load_robot_model

    arm = load_robot_model().arms["right"]
    rng = np.random.default_rng(7)
    qs = rng.uniform(arm.lower, arm.upper, size=(2000, 7))
    targets = np.array([kernels.fk_point(arm.axes, arm.offsets, arm.tip, q) for q in qs])

    # warm-up triggers JIT compilation on the numba path
    kernels.solve_ik_dls(arm.axes, arm.offsets, arm.tip, arm.home_joints,
                         targets[0], arm.lower, arm.upper, 0.05, 100, 1e-6, 0.1)

    t0 = time.perf_counter()
    for q in qs:
        kernels.fk_point(arm.axes, arm.offsets, arm.tip, q)
    fk_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    for q in qs:
        kernels.fk_with_jacobian(arm.axes, arm.offsets, arm.tip, q)
    jac_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    solved = 0
    for tgt in targets[:500]:
        _, err = kernels.solve_ik_dls(arm.axes, arm.offsets, arm.tip, arm.home_joints,
                                      tgt, arm.lower, arm.upper, 0.05, 100, 1e-6, 0.1)
        solved += err < 1e-3
    ik_s = time.perf_counter() - t0

    print(json.dumps({
        "numba": kernels.NUMBA_ENABLED,
        "fk_us": fk_s / len(qs) * 1e6,
        "fk_jacobian_us": jac_s / len(qs) * 1e6,
        "ik_solve_us": ik_s / 500 * 1e6,
        "ik_solved": int(solved),
    }))
    """
)


def run(pure: bool) -> dict:
    env = dict(os.environ)
    env["BINPICK_PURE_NUMPY"] = "1" if pure else "0"
    out = subprocess.run([sys.executable, "-c", WORKLOAD], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    numba = run(pure=False)
    pure = run(pure=True)
    assert numba["numba"] and not pure["numba"]
    print(f"{'kernel':<18}{'numba':>12}{'pure numpy':>14}{'speedup':>10}")
    for key, label in (("fk_us", "fk_point"), ("fk_jacobian_us", "fk_with_jacobian"),
                       ("ik_solve_us", "solve_ik_dls")):
        ratio = pure[key] / numba[key]
        print(f"{label:<18}{numba[key]:>10.1f}us{pure[key]:>12.1f}us{ratio:>9.1f}x")
    print(f"ik solved: numba {numba['ik_solved']}/500, pure {pure['ik_solved']}/500")


if __name__ == "__main__":
    main()
