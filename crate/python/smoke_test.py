#!/usr/bin/env python3
"""Smoke test for the fdhomog_py extension module.

Builds nothing itself: it locates the compiled cdylib under target/
(release preferred), copies it next to a temp dir as an importable
module, and exercises the main types and operations end to end.

    cargo build -p fdhomog-py --release
    python3 python/smoke_test.py
"""

import json
import os
import shutil
import sys
import tempfile

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def locate_extension():
    candidates = [
        os.path.join(REPO_ROOT, "target", "release", "libfdhomog_py.so"),
        os.path.join(REPO_ROOT, "target", "debug", "libfdhomog_py.so"),
        os.path.join(REPO_ROOT, "target", "release", "libfdhomog_py.dylib"),
        os.path.join(REPO_ROOT, "target", "debug", "libfdhomog_py.dylib"),
    ]
    for path in candidates:
        if os.path.exists(path):
            return path
    sys.exit(
        "compiled extension not found; run `cargo build -p fdhomog-py --release` first"
    )


def import_module():
    src = locate_extension()
    stage = tempfile.mkdtemp(prefix="fdhomog_py_")
    shutil.copy(src, os.path.join(stage, "fdhomog_py.so"))
    sys.path.insert(0, stage)
    import fdhomog_py

    return fdhomog_py


def main():
    fd = import_module()
    print(f"loaded fdhomog_py {fd.__version__}")

    # simulation is deterministic and shaped as requested
    a = fd.simulate_model(0, n=40, grid_size=30, seed=1)
    a2 = fd.simulate_model(0, n=40, grid_size=30, seed=1)
    b = fd.simulate_model(1, n=40, grid_size=30, seed=2)
    assert len(a) == 40
    assert len(a.grid) == 30
    assert a.values == a2.values, "simulation must be reproducible"

    # depths live in their documented ranges
    for method in ("fm", "rp", "fd2"):
        depths = fd.depth(a, a, method=method, seed=3)
        assert len(depths) == 40
        assert all(0.0 <= d <= 1.0 for d in depths), method
        if method == "fm":
            assert all(d >= 0.5 for d in depths)

    # exact halfspace depth on a hand-checkable configuration
    diamond = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
    assert fd.halfspace_depth_2d((0.0, 0.0), diamond) == 0.5

    # DD-plot of a sample against itself sits on the diagonal
    dd = fd.build_ddplot(a, a, method="fm")
    assert len(dd) == 80
    assert all(x == y for x, y in dd)

    # the bootstrap test separates a mean shift and is reproducible
    res = fd.bootstrap_test(a, b, method="fd2", num_boot=200, seed=4)
    res2 = fd.bootstrap_test(a, b, method="fd2", num_boot=200, seed=4)
    assert res.reject, f"model 0 vs model 1 should reject, p={res.p_adjusted}"
    assert res.p_adjusted == res2.p_adjusted
    assert res.null_scheme == "relabel"
    parsed = json.loads(res.to_json())
    assert parsed["method"] == "fd2"
    assert 0.0 <= parsed["p_adjusted"] <= 1.0

    # identical samples short-circuit to certainty of homogeneity
    same = fd.bootstrap_test(a, a, method="fm", num_boot=100, seed=5)
    assert not same.reject and same.p_adjusted == 1.0

    # baseline statistics vanish on identical samples
    p1, p2, p3, p4 = fd.flores_statistics(a, a)
    assert p2 == 0.0 and p4 == 0.0
    baseline = fd.flores_test(a, b, num_boot=200, seed=6)
    assert baseline.reject, f"baseline should reject the mean shift, p={baseline.p0}"
    assert baseline.t1 is None and baseline.p1 is None

    # CSV round trip, with labels, through a temp file
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "curves.csv")
        labeled = fd.FunctionalSample(
            [0.0, 0.5, 1.0],
            [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]],
            labels=["x", "y", "y"],
        )
        labeled.to_csv(path)
        back = fd.FunctionalSample.from_csv(path)
        assert back.values == labeled.values
        assert back.labels == ["x", "y", "y"]
        hit, rest = back.split_by_label("y")
        assert len(hit) == 2 and len(rest) == 1

    # SVG rendering produces a standalone document
    svg = fd.ddplot_svg(a, b, method="fm", label_a="m0", label_b="m1")
    assert svg.startswith("<svg") and "diagonal" in svg

    print("smoke test passed")


if __name__ == "__main__":
    main()
