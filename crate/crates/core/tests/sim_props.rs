use cosma_lab::par::{fit_ranks, predicted_io, Dims, Machine, ProcessorGrid};
use cosma_lab::sim::{decompose_data, run_cosma, run_on_grid, CommStats, ExecMode, Matrix};
use proptest::prelude::*;

fn tolerance(a: &Matrix, b: &Matrix) -> f64 {
    1e-9 * a.cols() as f64 * a.max_abs() * b.max_abs()
}

fn machine_for(m: usize, n: usize, k: usize, p: usize, extra: usize) -> Machine {
    let dims = Dims::new(m, n, k).unwrap();
    Machine::new(p, (dims.footprint() as usize).div_ceil(p).max(4) + extra)
}

/// Words each used rank must receive: its whole A block when A is shared
/// along n, its whole B block when B is shared along m.
fn expected_inputs(grid: &ProcessorGrid, block: (usize, usize, usize)) -> u64 {
    let (am, an, ak) = block;
    let a = if grid.pn > 1 { am * ak } else { 0 };
    let b = if grid.pm > 1 { an * ak } else { 0 };
    (a + b) as u64
}

fn check_run(m: usize, n: usize, k: usize, machine: &Machine, seed: u64) -> Result<CommStats, TestCaseError> {
    let a = Matrix::random(m, k, seed);
    let b = Matrix::random(k, n, seed + 1);
    let (c, stats) = run_cosma(&a, &b, machine, ExecMode::Sequential).unwrap();
    let reference = a.multiply(&b).unwrap();
    prop_assert!(c.max_abs_diff(&reference) <= tolerance(&a, &b));
    prop_assert!(stats.is_conserved());
    prop_assert_eq!(stats.rounds, stats.domain.steps);
    prop_assert_eq!(stats.ranks.len(), machine.p);

    let layout = decompose_data(&Dims::new(m, n, k).unwrap(), &stats.grid);
    let inputs = expected_inputs(&stats.grid, layout.block);
    let (am, an, _) = layout.block;
    for (r, blocks) in stats.ranks.iter().zip(&layout.ranks) {
        prop_assert_eq!(r.rounds, stats.rounds);
        prop_assert_eq!(r.input_words, inputs);
        let reduce = if blocks.coords.2 > 0 { (am * an) as u64 } else { 0 };
        prop_assert_eq!(r.reduce_words, reduce);
    }
    for r in &stats.ranks[stats.grid.used..] {
        prop_assert_eq!(r.communication() + r.words_sent + r.words_received, 0);
    }
    let (mp, np, kp) = layout.padded();
    if (mp, np, kp) == (m, n, k) {
        prop_assert_eq!(stats.summary.padded_words, 0);
    }
    Ok(stats)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn runs_are_correct_and_conserve_words(
        m in 1usize..24, n in 1usize..24, k in 1usize..24, p in 1usize..30, extra in 0usize..200, seed in 0u64..1000,
    ) {
        check_run(m, n, k, &machine_for(m, n, k, p, extra), seed)?;
    }

    #[test]
    fn runs_are_deterministic(
        m in 1usize..16, n in 1usize..16, k in 1usize..16, p in 1usize..20, extra in 0usize..100, seed in 0u64..1000,
    ) {
        let machine = machine_for(m, n, k, p, extra);
        let a = Matrix::random(m, k, seed);
        let b = Matrix::random(k, n, seed ^ 0xabc);
        let (c0, s0) = run_cosma(&a, &b, &machine, ExecMode::Sequential).unwrap();
        let (c1, s1) = run_cosma(&a, &b, &machine, ExecMode::Sequential).unwrap();
        let (c2, s2) = run_cosma(&a, &b, &machine, ExecMode::Parallel).unwrap();
        prop_assert_eq!(&s0, &s1);
        prop_assert_eq!(&s0, &s2);
        prop_assert!(c0.data().iter().zip(c1.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert!(c0.data().iter().zip(c2.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn owned_slices_lie_in_the_rank_block(
        m in 1usize..40, n in 1usize..40, k in 1usize..40, p in 1usize..64,
    ) {
        let dims = Dims::new(m, n, k).unwrap();
        let (grid, _) = fit_ranks(&dims, &machine_for(m, n, k, p, 0));
        let layout = decompose_data(&dims, &grid);
        let (am, an, ak) = layout.block;
        for r in &layout.ranks {
            let (x, y, z) = r.coords;
            prop_assert!(r.a_rows.start >= x * am && r.a_rows.end <= (x + 1) * am);
            prop_assert!(r.a_cols.start >= z * ak && r.a_cols.end <= (z + 1) * ak);
            prop_assert!(r.b_rows.start >= z * ak && r.b_rows.end <= (z + 1) * ak);
            prop_assert!(r.b_cols.start >= y * an && r.b_cols.end <= (y + 1) * an);
        }
    }
}

#[test]
fn explicit_grids_on_ragged_shapes() {
    for (m, n, k, (pm, pn, pk), s) in [
        (7, 9, 5, (2, 3, 1), 40),
        (5, 5, 11, (1, 1, 4), 30),
        (13, 3, 6, (3, 1, 2), 50),
        (10, 10, 10, (2, 2, 3), 60),
    ] {
        let a = Matrix::random(m, k, 7);
        let b = Matrix::random(k, n, 8);
        let grid = ProcessorGrid::new(pm, pn, pk, pm * pn * pk + 1);
        let (c, stats) = run_on_grid(&a, &b, &grid, s, grid.used + 1, ExecMode::Parallel).unwrap();
        assert!(c.max_abs_diff(&a.multiply(&b).unwrap()) <= tolerance(&a, &b));
        assert!(stats.is_conserved());
        assert_eq!(stats.ranks.last().unwrap().communication(), 0);
    }
}

#[test]
fn ragged_cube_stays_close_to_the_model() {
    let machine = Machine::new(8, 200);
    let a = Matrix::random(17, 17, 3);
    let b = Matrix::random(17, 17, 4);
    let (_, stats) = run_cosma(&a, &b, &machine, ExecMode::Sequential).unwrap();
    assert!(stats.summary.padded_words > 0);
    let ratio = stats.summary.max_words as f64 / predicted_io(&Dims::square(17), &machine).unwrap();
    assert!(ratio <= 1.5, "{ratio}");
}

#[test]
fn stats_export() {
    let a = Matrix::random(6, 6, 1);
    let b = Matrix::random(6, 6, 2);
    let (_, stats) = run_cosma(&a, &b, &Machine::new(5, 40), ExecMode::Sequential).unwrap();
    let mut buf = Vec::new();
    stats.write_csv(&mut buf).unwrap();
    let mut rdr = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(rdr.headers().unwrap().iter().next(), Some("rank"));
    assert_eq!(rdr.records().count(), 5);
    let json = serde_json::to_value(&stats).unwrap();
    assert_eq!(json["ranks"].as_array().unwrap().len(), 5);
    assert_eq!(json["summary"]["total_sent"], json["summary"]["total_received"]);
}
