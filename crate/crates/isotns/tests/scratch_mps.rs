use isotns::circuit::{sequential_program, Basis, StatePrep};
use isotns::holographic::{holo_outcome_probability, holo_sample, Mode};
use isotns::lattice::build_lattice;
use isotns::statevector::run;

#[test]
fn registers_vs_statevector_33() {
    let lattice = build_lattice(3, 3).unwrap();
    let n = lattice.n_edges();
    let bases = vec![Basis::Z; n];
    let program = sequential_program(&lattice, 0.5_f64, StatePrep::Zeros, false).unwrap();
    let state = run(&program).unwrap();
    for seed in [77u64, 5, 9] {
        let batch = holo_sample(&lattice, 0.5, &StatePrep::Zeros, &bases, 1, seed, Mode::ExactDense, &[]).unwrap();
        let mut outcome = vec![false; n];
        for (row, edges) in batch.shots[0].rows.iter().zip(batch.row_edges.iter()) {
            for (&b, &e) in row.iter().zip(edges.iter()) {
                outcome[e] = b;
            }
        }
        let idx: usize = (0..n).map(|e| (outcome[e] as usize) << e).sum();
        let p_sv = state.amplitude(idx).norm_sqr();
        let pd = holo_outcome_probability(&lattice, 0.5, &StatePrep::Zeros, &bases, &outcome, Mode::ExactDense, &[]).unwrap();
        let pm = holo_outcome_probability(&lattice, 0.5, &StatePrep::Zeros, &bases, &outcome, Mode::Mps { chi: 64 }, &[]).unwrap();
        println!("seed {seed}: sv={p_sv:.12e} dense={pd:.12e} mps={pm:.12e}");
    }
}
