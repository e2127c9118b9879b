use pyo3::prelude::*;
use pyo3::types::PyDict;

/// Runs `code` with the module bound to `bg`; assertions raise on failure.
fn run(code: &str) {
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(barygap::barygap)(py);
        let globals = PyDict::new(py);
        globals.set_item("bg", module).unwrap();
        globals.set_item("math", py.import("math").unwrap()).unwrap();
        let code = std::ffi::CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            panic!("python error: {e}");
        }
    });
}

#[test]
fn graphs_and_embeddings() {
    run(r#"
g = bg.Graph(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
assert g.degree == 2 and g.n == 4
assert not g.has_k_clique(3)
assert g.max_multiset_edges(2) == 1
assert g.induced_edge_count([0, 1, 2]) == 2
cfg = bg.embed_graph(g, 3, 2.0, 2.0)
assert cfg.d == 3 * 16 and cfg.regime == "Q22"
back = bg.PointConfig.from_json(cfg.to_json())
assert back.point(1, 2) == cfg.point(1, 2)
xi = bg.embed_graph(bg.Graph.complete(4), 3, 1.0, math.inf)
assert xi.q == math.inf and xi.regime == "QINF"
"#);
}

#[test]
fn solvers_and_reduction() {
    run(r#"
sol = bg.fpq([[0.0, 0.0], [2.0, 0.0]], 2.0, 2.0)
assert abs(sol["value"] - 2.0) < 1e-12 and sol["minimizer"] == [1.0, 0.0]
cert = bg.gap_certificate(4, 3, 3, 2.0, 2.0)
assert cert["gamma"] == 10.0
res = bg.solve_chub(bg.embed_graph(bg.Graph.complete(4), 3, 2.0, 2.0))
assert abs(res["value"] - cert["gamma"]) < 1e-9
for solver in ("chub", "mot"):
    rep = bg.reduce(bg.Graph.complete(5), 4, 1.0, math.inf, solver=solver)
    assert rep["decision"]["has_clique"] and rep["agrees"]
try:
    bg.reduce(bg.Graph.complete(5), 4, 1.0, 2.0, solver="lp")
    raise AssertionError("bad solver accepted")
except ValueError:
    pass
"#);
}

#[test]
fn barycenters_and_verification() {
    run(r#"
inst = bg.BaryInstance([([[0.0]], [1.0]), ([[2.0]], [1.0])], 2.0, 2.0)
out = bg.bary_value(inst)
assert abs(out["value"] - 1.0) < 1e-12 and out["barycenter"]["atoms"] == [[1.0]]
assert abs(bg.borgwardt(inst)["value"] / out["value"] - 2.0) < 1e-12
assert bg.BaryInstance.from_json(inst.to_json()).weights == [0.5, 0.5]
try:
    inst.uniformize(0.1)
    raise AssertionError("atom outside the ball accepted")
except ValueError:
    pass
rep = bg.verify_lemma("helper", seed=3, budget=2)
assert rep["passed"] and rep["seed"] == 3 and len(rep["results"]) == 2
assert "unif" in bg.LEMMA_IDS
assert bg.l1_distance([(0, 1), (3, -1)], [(3, 1)]) == 3
"#);
}
