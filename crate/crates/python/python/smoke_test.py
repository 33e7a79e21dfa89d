"""Smoke test for the pimgnn_py extension.

Build with `cargo build -p pimgnn-py`, then run
`python3 crates/python/python/smoke_test.py target/debug`.
"""

import os
import shutil
import sys
import tempfile


def import_module(build_dir):
    tmp = tempfile.mkdtemp()
    for name in ("libpimgnn_py.so", "libpimgnn_py.dylib", "pimgnn_py.dll"):
        src = os.path.join(build_dir, name)
        if os.path.exists(src):
            ext = ".pyd" if name.endswith(".dll") else ".so"
            shutil.copy(src, os.path.join(tmp, "pimgnn_py" + ext))
            break
    else:
        sys.exit(f"no built extension in {build_dir}")
    sys.path.insert(0, tmp)
    import pimgnn_py

    return pimgnn_py


def main():
    build_dir = sys.argv[1] if len(sys.argv) > 1 else "target/debug"
    pg = import_module(build_dir)

    assert pg.pim_init_devices(32, 2).clusters == 64
    assert pg.pim_init_devices(4, 4, cores_per_device=16).clusters == 16
    try:
        pg.pim_init_devices(0, 1)
        raise AssertionError("zero devices accepted")
    except ValueError:
        pass

    # 6-cycle plus chords
    n = 6
    edges = [(i, (i + 1) % n) for i in range(n)] + [(0, 3), (1, 4)]
    rows = [u for u, v in edges] + [v for u, v in edges]
    cols = [v for u, v in edges] + [u for u, v in edges]
    graph = pg.Graph(n, n, rows, cols, [1.0] * len(rows))
    assert graph.nnz == 16

    session = pg.pim_init_devices(2, 1, cores_per_device=4, threads=4)
    hidden = 4
    cfg = pg.tune(graph, hidden, session)
    assert cfg.dp <= hidden
    assert pg.tune(graph, 1, session).dp == 1
    try:
        pg.tune(graph, hidden, session, format="dense")
        raise AssertionError("bad format accepted")
    except ValueError:
        pass

    session = pg.pim_init_devices(2, cfg.grp, cores_per_device=4, threads=4)
    handle = pg.load_graph_pim(graph, cfg, session, hidden)
    feats = [float((r * 3 + c) % 7 - 3) for r in range(n) for c in range(hidden)]
    dense = pg.Dense(n, hidden, feats)
    out = pg.pim_run_aggr(handle, pg.col_split(dense, cfg.dp))
    expected = [0.0] * (n * hidden)
    for r, c in zip(rows, cols):
        for j in range(hidden):
            expected[r * hidden + j] += feats[c * hidden + j]
    assert out.values() == expected, (out.values(), expected)
    assert '"t_total"' in handle.last_report()

    try:
        pg.pim_run_aggr(handle, [dense] * (cfg.dp + 1))
        raise AssertionError("wrong tile count accepted")
    except ValueError:
        pass

    eye = pg.Graph(n, n, list(range(n)), list(range(n)), [1.0] * n)
    one = pg.pim_init_devices(2, 1, cores_per_device=4, threads=4)
    h2 = pg.load_graph_pim(eye, pg.Config(2, 1), one, hidden)
    assert pg.pim_run_aggr(h2, [dense]) == dense

    handle.release()
    assert handle.released
    try:
        pg.pim_run_aggr(handle, pg.col_split(dense, cfg.dp))
        raise AssertionError("released handle accepted")
    except RuntimeError:
        pass
    print("smoke test passed")


if __name__ == "__main__":
    main()
