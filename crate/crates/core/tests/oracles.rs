use covset_core::coversim::{
    box_dim_estimate, generation_rasterize, limsup_proxy_explicit, replica_stream, ShapeFamily,
    SimWindow,
};
use covset_core::geometry::{circle_dist, wrap, GeneratingShape, SnowflakeExponents};
use covset_core::grid::{OccupancyGrid, DEFAULT_GRID_CAP_BITS};
use covset_core::percolation::{percolate, PercParams};
use covset_core::radii::{buckets, RadiusSequence};
use covset_core::sampler::{uniform_point, RngStream};
use covset_core::stats::least_squares;
use covset_core::targets::TargetSet;

/// Does the closed interval `[c - r, c + r]` on the circle meet the closed
/// cell `[lo, lo + w]`?
fn interval_meets_cell(c: f64, r: f64, lo: f64, w: f64) -> bool {
    let mid = lo + w / 2.0;
    circle_dist(c, mid) <= r + w / 2.0
}

#[test]
fn hand_placed_proxy_matches_cell_by_cell_check() {
    let depth = 6;
    let gens: Vec<Vec<(f64, f64)>> = vec![
        // k = 2: radii in [1/8, 1/4)
        vec![(0.0, 0.125), (-0.4, 0.2), (0.31, 0.15)],
        // k = 3: radii in [1/16, 1/8)
        vec![(0.05, 0.0625), (-0.45, 0.1), (0.3, 0.07)],
        // k = 4: radii in [1/32, 1/16)
        vec![(0.1, 0.05), (-0.49, 0.04), (0.25, 0.03125)],
    ];
    let placed: Vec<Vec<(GeneratingShape, _)>> = gens
        .iter()
        .map(|g| {
            g.iter()
                .map(|&(c, r)| (GeneratingShape::ball(1, r).unwrap(), wrap(&[c])))
                .collect()
        })
        .collect();
    let proxy = limsup_proxy_explicit(1, depth, &placed).unwrap();

    let w = 1.0 / 64.0;
    for j in 0..64u64 {
        let lo = -0.5 + j as f64 * w;
        let expected = gens
            .iter()
            .all(|g| g.iter().any(|&(c, r)| interval_meets_cell(c, r, lo, w)));
        assert_eq!(proxy.get(&[j]), expected, "cell {j}");
    }
    assert!(proxy.count() > 0);
}

/// Walks `n = 1, 2, ...` and bins every radius.
fn enumerate(seq: &RadiusSequence, kmax: u32) -> Vec<u64> {
    let mut counts = vec![0u64; kmax as usize + 1];
    let floor = 0.5f64.powi(kmax as i32 + 1);
    let mut n = 1;
    while let Some(r) = seq.radius(n) {
        if r < floor {
            break;
        }
        let mut k = 0;
        while r < 0.5f64.powi(k + 1) {
            k += 1;
        }
        if r < 1.0 {
            counts[k as usize] += 1;
        }
        n += 1;
    }
    counts
}

#[test]
fn bucket_tables_match_enumeration() {
    let seqs = [
        RadiusSequence::power_law(1.0, 1.0).unwrap(),
        RadiusSequence::power_law(0.5, 0.7).unwrap(),
        RadiusSequence::power_law(0.9, 1.2).unwrap(),
        RadiusSequence::power_law(1.0, 0.3).unwrap(),
        RadiusSequence::geometric(0.9).unwrap(),
        RadiusSequence::geometric(0.3).unwrap(),
    ];
    for seq in &seqs {
        let table = buckets(seq, 20).unwrap();
        assert_eq!(table.counts, enumerate(seq, 20), "{seq:?}");
        for (k, range) in table.ranges.iter().enumerate() {
            for n in range.clone() {
                let r = seq.radius(n).unwrap();
                assert!(0.5f64.powi(k as i32 + 1) <= r && r < 0.5f64.powi(k as i32));
            }
        }
    }
}

#[test]
fn single_ball_occupies_its_measure() {
    let m = 12;
    let r = 0.1;
    let shape = GeneratingShape::ball(1, r).unwrap();
    let mut s = RngStream::root(2);
    let draws = 1000;
    let mut total = 0.0;
    for _ in 0..draws {
        let x = uniform_point(&mut s, 1);
        let mut g = OccupancyGrid::isotropic(1, m, DEFAULT_GRID_CAP_BITS).unwrap();
        g.rasterize_shape(&shape, &x);
        total += g.count() as f64 / 4096.0;
    }
    assert!((total / draws as f64 - 2.0 * r).abs() < 0.01);
}

#[test]
fn generations_are_reproducible() {
    let seq = RadiusSequence::power_law(1.0, 0.9).unwrap();
    let w = SimWindow::new(1, 4, 8, 12, ShapeFamily::Ball, seq).unwrap();
    let a = generation_rasterize(&w, 6, &replica_stream(3, 1)).unwrap();
    let b = generation_rasterize(&w, 6, &replica_stream(3, 1)).unwrap();
    let c = generation_rasterize(&w, 6, &replica_stream(3, 2)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn middle_third_cover_has_the_right_growth() {
    let c = TargetSet::middle_third();
    for m in 12..=20 {
        let n = c.rasterize(m, DEFAULT_GRID_CAP_BITS).unwrap().count() as f64;
        let rate = n.log2() / m as f64;
        assert!((0.55..=0.72).contains(&rate), "m = {m}: {rate}");
    }
    let g = c.rasterize(20, DEFAULT_GRID_CAP_BITS).unwrap();
    let est = box_dim_estimate(&g, 10, 20).unwrap();
    assert!((est.slope - 2f64.ln() / 3f64.ln()).abs() < 0.05, "{}", est.slope);
}

#[test]
fn dyadic_cantor_rates() {
    let sets = [
        TargetSet::digit_cantor(4, vec![vec![0, 3]]).unwrap(),
        TargetSet::digit_cantor(4, vec![vec![1, 2, 3]]).unwrap(),
        TargetSet::digit_cantor(2, vec![vec![1]]).unwrap(),
        TargetSet::digit_cantor(4, vec![vec![0, 2]]).unwrap(),
    ];
    for c in &sets {
        let dim = c.dims().0;
        for m in 12..=20 {
            let n = c.rasterize(m, DEFAULT_GRID_CAP_BITS).unwrap().count() as f64;
            assert!((n.log2() / m as f64 - dim).abs() <= 0.08, "{c:?} m = {m}");
        }
    }
}

#[test]
fn target_coarsening_is_exact() {
    let sets = [
        TargetSet::digit_cantor(4, vec![vec![0, 3], vec![1, 2]]).unwrap(),
        TargetSet::affine_slice(2, vec![(1, 0.37)]).unwrap(),
        TargetSet::affine_slice(2, vec![(0, 0.25)]).unwrap(),
    ];
    for c in &sets {
        for m in 3..10 {
            let fine = c.rasterize(m + 1, DEFAULT_GRID_CAP_BITS).unwrap();
            let coarse = c.rasterize(m, DEFAULT_GRID_CAP_BITS).unwrap();
            assert_eq!(fine.coarsen_to(&[m, m]).unwrap(), coarse, "{c:?} m = {m}");
        }
    }
    // The hull cover of other bases is a superset after coarsening.
    let c = TargetSet::middle_third();
    for m in 6..16 {
        let fine = c.rasterize(m + 1, DEFAULT_GRID_CAP_BITS).unwrap();
        let coarse = c.rasterize(m, DEFAULT_GRID_CAP_BITS).unwrap();
        assert!(fine.coarsen_to(&[m]).unwrap().is_subset_of(&coarse).unwrap());
    }
}

#[test]
fn snowflake_dimension_by_kappa_box_counting() {
    let h = SnowflakeExponents::new(vec![1.0, 0.5]).unwrap();
    let c = TargetSet::digit_cantor(4, vec![vec![0, 3], vec![0, 3]]).unwrap();
    let counts = c.kappa_box_counts(&h, 8, 16).unwrap();
    let pts: Vec<(f64, f64)> = counts.iter().map(|&(j, n)| (j as f64, (n as f64).log2())).collect();
    let slope = least_squares(&pts).unwrap().slope;
    assert!((slope - 1.5).abs() <= 0.1, "{slope}");
    assert!((c.dims_snowflake(&h).unwrap().0 - 1.5).abs() < 1e-12);
    // Product counts agree with direct anisotropic rasterization where
    // the grid fits in memory.
    for j in 4..=10u32 {
        let g = c.rasterize_with_depths(&[j, 2 * j], DEFAULT_GRID_CAP_BITS).unwrap();
        let from_product = counts_at(&c, &h, j);
        assert_eq!(g.count(), from_product);
    }
}

fn counts_at(c: &TargetSet, h: &SnowflakeExponents, j: u32) -> u64 {
    c.kappa_box_counts(h, j, j).unwrap()[0].1
}

/// Pearson chi-square for homogeneity of two binned samples.
fn two_sample_chi2(a: &[f64], b: &[f64]) -> f64 {
    let na: f64 = a.iter().sum();
    let nb: f64 = b.iter().sum();
    a.iter()
        .zip(b)
        .filter(|(x, y)| **x + **y > 0.0)
        .map(|(x, y)| {
            let tot = x + y;
            let ea = tot * na / (na + nb);
            let eb = tot * nb / (na + nb);
            (x - ea).powi(2) / ea + (y - eb).powi(2) / eb
        })
        .sum()
}

fn bin(count: u64) -> usize {
    match count {
        0 => 0,
        1 => 1,
        2 => 2,
        3..=4 => 3,
        5..=8 => 4,
        9..=16 => 5,
        _ => 6,
    }
}

#[test]
fn percolation_subtrees_are_self_similar() {
    // Chi-square upper 1% point with 6 degrees of freedom.
    const CHI2_6_1PCT: f64 = 16.812;
    let m = 8;
    let whole = PercParams::with_p(1, 0.7, m).unwrap();
    let shorter = PercParams::with_p(1, 0.7, m - 1).unwrap();
    let mut below = [0f64; 7];
    let mut fresh = [0f64; 7];
    let mut taken = 0;
    let mut i = 0u64;
    while taken < 4000 {
        let out = percolate(&whole, &replica_stream(1, i), DEFAULT_GRID_CAP_BITS).unwrap();
        i += 1;
        // The left depth-1 cell is alive iff its stream's first uniform is
        // below p; its subtree holds the left half of the depth-m grid.
        let mut alive = replica_stream(1, i - 1).derive(0);
        if alive.next_f64() >= 0.7 {
            continue;
        }
        let left = (0..1u64 << (m - 1)).filter(|&j| out.grid.get(&[j])).count() as u64;
        below[bin(left)] += 1.0;
        taken += 1;
    }
    for r in 0..4000u64 {
        let out = percolate(&shorter, &replica_stream(2, r), DEFAULT_GRID_CAP_BITS).unwrap();
        fresh[bin(out.grid.count())] += 1.0;
    }
    let chi2 = two_sample_chi2(&below, &fresh);
    assert!(chi2 < CHI2_6_1PCT, "chi2 = {chi2}, {below:?} vs {fresh:?}");
}
