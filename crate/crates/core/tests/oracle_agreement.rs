use perclab_core::estimators::tail_curve;
use perclab_core::graphs::{EdgeId, GraphFamilySpec, GraphHandle};
use perclab_core::oracle::{self, exact_event, exact_surgery, ExactEvent, FiniteGraph};
use perclab_core::percolation::{ghost_two_arm_weight, two_cluster_outcome, verify_surgery_chain, EventStatus, SampleCtx};
use perclab_core::stats::MCEstimate;

const TRIALS: u64 = 100_000;

fn setup(spec: GraphFamilySpec) -> (GraphHandle, FiniteGraph) {
    let h = GraphHandle::new(spec).unwrap();
    let fg = FiniteGraph::from_handle(&h).unwrap();
    (h, fg)
}

fn edge(fg: &FiniteGraph, i: usize) -> EdgeId {
    let c = fg.coords.as_ref().unwrap();
    let (a, b) = fg.edges[i];
    EdgeId::new(c[a as usize].clone(), c[b as usize].clone())
}

#[test]
fn shipped_golden_suite_passes() {
    let recs = oracle::golden::parse_golden(oracle::DEFAULT_GOLDEN).unwrap();
    let report = oracle::run_golden(&recs).unwrap();
    let failed: Vec<_> = report.outcomes.iter().filter(|o| !o.passed).collect();
    assert!(failed.is_empty(), "{failed:?}");
}

#[test]
fn two_arm_and_ghost_events_match_enumeration() {
    for spec in [GraphFamilySpec::Cycle { n: 6 }, GraphFamilySpec::Complete { n: 4 }, GraphFamilySpec::Torus { lengths: vec![4, 2] }] {
        let (h, fg) = setup(spec);
        let e = edge(&fg, 0);
        let p = 0.5;
        let exact_s = exact_event(&fg, &ExactEvent::S { edge: 0, n: 3 }, p).unwrap().value;
        let exact_t = exact_event(&fg, &ExactEvent::T { edge: 0, h: 0.3 }, p).unwrap().value;
        let mut k = 0;
        let mut w = Vec::with_capacity(TRIALS as usize);
        for t in 0..TRIALS {
            let o = two_cluster_outcome(&h, &e, &SampleCtx::new(11, p, 0.3, t), 3, 1000).unwrap();
            if o.s_status(3) == EventStatus::Occurred {
                k += 1;
            }
            w.push(ghost_two_arm_weight(&o, 0.3).unwrap());
        }
        let s = MCEstimate::binomial(k, TRIALS);
        assert!(s.within_sigmas(exact_s, 3.0), "{} S: {} vs {exact_s}", h.spec().label(), s.estimate);
        let g = MCEstimate::mean(&w);
        assert!(g.within_sigmas(exact_t, 3.0), "{} T: {} vs {exact_t}", h.spec().label(), g.estimate);
    }
}

#[test]
fn tail_matches_enumeration() {
    let (h, fg) = setup(GraphFamilySpec::Torus { lengths: vec![3, 3] });
    let c = tail_curve(&h, 0.4, &[4, 6, 9], TRIALS, 100, 5).unwrap();
    for (n, est) in [4u32, 6, 9].iter().zip(&c.points) {
        let exact = exact_event(&fg, &ExactEvent::Tail { n: *n }, 0.4).unwrap().value;
        assert!(est.within_sigmas(exact, 3.0), "n={n}: {} vs {exact}", est.estimate);
    }
}

#[test]
fn surgery_event_a_matches_enumeration() {
    let (h, fg) = setup(GraphFamilySpec::Cycle { n: 8 });
    let coords = fg.coords.clone().unwrap();
    let exact = exact_surgery(&fg, 0, 4, 2, 0.5).unwrap();
    let mut k = 0;
    for t in 0..TRIALS {
        let o = verify_surgery_chain(&h, &coords[0], &coords[4], &SampleCtx::new(3, 0.5, 0.0, t), 2, 100).unwrap();
        assert!(!o.a_occurred || o.b_union_occurred);
        if o.a_occurred {
            k += 1;
        }
    }
    let a = MCEstimate::binomial(k, TRIALS);
    assert!(a.within_sigmas(exact.p_a, 3.0), "{} vs {}", a.estimate, exact.p_a);
}
