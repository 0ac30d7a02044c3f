"""Smoke test for the compiled `athena` extension module.

Build first:
    cargo build --release -p athena-python --features extension-module
then run:
    python3 python/smoke_test.py
"""

import json
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    for profile in ("release", "debug"):
        for name in ("libathena.so", "libathena.dylib", "athena.dll"):
            lib = ROOT / "target" / profile / name
            if lib.exists():
                dest = pathlib.Path(tempfile.mkdtemp()) / ("athena.pyd" if name.endswith(".dll") else "athena.so")
                shutil.copy(lib, dest)
                sys.path.insert(0, str(dest.parent))
                import athena

                return athena
    sys.exit("athena extension not built; run: cargo build --release -p athena-python --features extension-module")


def main():
    athena = load()

    f = athena.Formula("G[0,20](Speed<120)")
    assert f.robustness({"Speed": [100.0] * 201}, 0.1) == 20.0
    print("robustness of constant 100 mph:", f.robustness({"Speed": [100.0] * 201}, 0.1))

    xs = athena.interpolate([0.0, 5.0, 10.0], [0.0, 1.0, 0.5], "pchip", 10.0, 0.5)
    assert max(xs) <= 1.0 and min(xs) >= 0.0

    n = 5001
    trace = athena.simulate("at_lite", {"Throttle": [100.0] * n, "Brake": [0.0] * n}, 0.01)
    print("AT full throttle, speed at 20 s:", round(trace["Speed"][2000], 3))

    result = athena.falsify("AT1", mode="athena", seed=1)
    print(result)
    if result.failure_found:
        assert result.best_robustness < 0

    u, p, exact = athena.rank_sum([1, 2, 3], [4, 5, 6])
    assert u == 0.0 and abs(p - 0.1) < 1e-12 and exact

    report = json.loads(
        athena.run_experiment(json.dumps({"problem": {"catalog": "CC1"}, "mode": "athena", "repetitions": 3}))
    )
    print("CC1 athena, 3 runs:", report["percentage"], "% failure-revealing")
    print("ok")


if __name__ == "__main__":
    main()
