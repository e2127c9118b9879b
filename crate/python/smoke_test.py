"""Smoke test for the `barygap` Python extension.

Builds the extension with cargo when no compiled module is importable, loads
it from the build directory, and exercises every exposed type once.
Run from anywhere: `python3 python/smoke_test.py`.
"""

import importlib.machinery
import importlib.util
import math
import pathlib
import subprocess
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_extension():
    try:
        import barygap  # noqa: F401  (an installed wheel wins)

        return barygap
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "--quiet", "-p", "barygap-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    suffix = {"darwin": "libbarygap.dylib", "win32": "barygap.dll"}.get(sys.platform, "libbarygap.so")
    path = ROOT / "target" / "debug" / suffix
    loader = importlib.machinery.ExtensionFileLoader("barygap", str(path))
    spec = importlib.util.spec_from_file_location("barygap", path, loader=loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def main():
    bg = load_extension()
    print("barygap", bg.__version__)

    k4 = bg.Graph.complete(4)
    c5 = bg.Graph.cycle(5)
    assert k4.degree == 3 and c5.degree == 2
    assert k4.has_k_clique(3) and not c5.has_k_clique(3)
    assert bg.Graph.from_json(c5.to_json()).edges() == c5.edges()

    cfg = bg.embed_graph(k4, 3, 2.0, 2.0)
    assert (cfg.k, cfg.n, cfg.d) == (3, 4, 48)
    res = bg.solve_chub(cfg)
    assert abs(res["value"] - 10.0) < 1e-9, res

    psi = bg.embed_graph(k4, 4, 1.0, 1.0)
    sol = bg.fpq([psi.dense(i, i) for i in range(4)], 1.0, 1.0, tol=1e-6)
    assert abs(sol["value"] - 456.0) < 1e-4 * 456.0, sol

    xi = bg.embed_graph(c5, 3, 1.0, math.inf)
    res = bg.solve_chub(xi, tol=1e-7, graph=c5)
    assert res["lower_bound"] >= 2.0 - 1e-6, res

    report = bg.reduce(bg.Graph.petersen(), 3, 2.0, 1.5, solver="mot")
    assert report["agrees"] and not report["decision"]["has_clique"], report

    inst = bg.BaryInstance([([[0.0], [0.5]], [0.5, 0.5]), ([[1.0]], [1.0])], 2.0, 2.0)
    out = bg.bary_value(inst)
    approx = bg.borgwardt(inst)
    assert 1.0 - 1e-9 <= approx["value"] / out["value"] <= 2.0 + 1e-9
    uni = inst.uniformize(0.5)
    assert all(len(set(masses)) == 1 for _, masses in uni.measures())

    ver = bg.verify_lemma("q1-witness")
    assert ver["passed"], ver
    try:
        bg.verify_lemma("no-such-lemma")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown lemma id accepted")
    try:
        bg.solve_chub(bg.embed_graph(bg.Graph.cycle(6), 4, 2.0, 2.0), cap=10)
    except bg.ResourceCapError:
        pass
    else:
        raise AssertionError("cap not enforced")
    print("smoke test passed")


if __name__ == "__main__":
    main()
