//! Derived quantities checked against independently coded references.

use std::collections::HashMap;
use std::f64::consts::PI;

use sccrfmq::baselines::kernel_bandwidth;
use sccrfmq::games::{boat_reset, boat_state_index, BoatState, BOAT_STATE_COUNT};
use sccrfmq::harness::{cumulative_average, run_experiment, write_outputs, ConfigBuilder};
use sccrfmq::RandomSource;

#[test]
fn cumulative_average_matches_exact_prefix_sums() {
    // Rewards on a 1/1024 lattice, so integer prefix sums are exact.
    let mut rng = RandomSource::new(1, "cumavg");
    let ticks: Vec<i64> = (0..1_000_000)
        .map(|_| rng.index(44 * 1024 + 1) as i64 - 30 * 1024)
        .collect();
    let rewards: Vec<f64> = ticks.iter().map(|&t| t as f64 / 1024.0).collect();
    let got = cumulative_average(&rewards).unwrap();
    let mut sum: i64 = 0;
    for (k, &t) in ticks.iter().enumerate() {
        sum += t;
        let exact = sum as f64 / 1024.0 / (k + 1) as f64;
        assert!(
            (got[k] - exact).abs() <= 1e-9,
            "k={k}: {} vs {exact}",
            got[k]
        );
    }
}

/// Cell coordinates by linear scan over explicit bin edges.
fn oracle_cell(s: &BoatState) -> [u32; 5] {
    fn scan(value: f64, lo: f64, hi: f64, bins: u32) -> u32 {
        let width = (hi - lo) / f64::from(bins);
        (0..bins)
            .rev()
            .find(|&b| value >= lo + f64::from(b) * width)
            .unwrap_or(0)
    }
    [
        scan(s.x, 0.0, 50.0, 50),
        scan(s.y, 0.0, 100.0, 100),
        scan(s.theta, -PI / 3.0, PI / 3.0, 10),
        scan(s.v, 2.0, 5.0, 10),
        scan(s.omega, -1.0, 1.0, 10),
    ]
}

fn oracle_id(c: [u32; 5]) -> u32 {
    c[0] * 100_000 + c[1] * 1000 + c[2] * 100 + c[3] * 10 + c[4]
}

#[test]
fn state_index_matches_scan_oracle_and_is_injective() {
    let mut rng = RandomSource::new(2, "boat-index");
    let mut seen: HashMap<u32, [u32; 5]> = HashMap::new();
    for _ in 0..10_000 {
        let s = BoatState {
            x: 50.0 * rng.uniform(),
            y: 100.0 * rng.uniform(),
            theta: -PI / 3.0 + 2.0 * PI / 3.0 * rng.uniform(),
            v: 2.0 + 3.0 * rng.uniform(),
            omega: -1.0 + 2.0 * rng.uniform(),
            steps: 0,
        };
        let cell = oracle_cell(&s);
        let id = boat_state_index(&s).0;
        assert_eq!(id, oracle_id(cell), "{s:?}");
        assert!(id < BOAT_STATE_COUNT);
        if let Some(prev) = seen.insert(id, cell) {
            assert_eq!(prev, cell, "id {id} shared by two cells");
        }
    }
}

#[test]
fn reset_and_corner_ids() {
    // θ = 0 and ω = 0 sit on the lower edge of bin 5; v = 2 is bin 0.
    assert_eq!(oracle_cell(&boat_reset()), [0, 50, 5, 0, 5]);
    assert_eq!(boat_state_index(&boat_reset()).0, 50_505);
    let top = BoatState {
        x: 50.0,
        y: 100.0,
        theta: PI / 3.0,
        v: 5.0,
        omega: 1.0,
        steps: 0,
    };
    assert_eq!(boat_state_index(&top).0, 4_999_999);
    let bottom = BoatState {
        x: 0.0,
        y: 0.0,
        theta: -PI / 3.0,
        v: 2.0,
        omega: -1.0,
        steps: 0,
    };
    assert_eq!(boat_state_index(&bottom).0, 0);
}

#[test]
fn bandwidth_matches_direct_formula() {
    let mut rng = RandomSource::new(3, "bandwidth");
    for n in [2usize, 5, 25, 100] {
        let actions: Vec<f64> = (0..2 * n).map(|_| rng.uniform()).collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        for d in 0..2 {
            let xs: Vec<f64> = (0..n).map(|i| actions[2 * i + d]).collect();
            let m = xs.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>();
            let second = xs.iter().zip(&w).map(|(x, w)| x * x * w).sum::<f64>();
            let sd = (second - m * m).max(0.0).sqrt();
            let expect = (sd * (4.0 / (3.0 * n as f64)).powf(0.2)).max(0.01);
            let got = kernel_bandwidth(&actions, 2, &w, d, 0.01);
            assert!(
                (got - expect).abs() < 1e-12,
                "n={n} d={d}: {got} vs {expect}"
            );
        }
    }
    // A single point mass falls back to the floor.
    assert_eq!(kernel_bandwidth(&[0.3, 0.3], 1, &[0.5, 0.5], 0, 0.01), 0.01);
}

#[test]
fn aggregate_recomputes_from_run_files() {
    let mut b = ConfigBuilder::new();
    for p in ["game=pscg", "episodes=2000", "runs=5", "seed=3"] {
        b.assign(p).unwrap();
    }
    let cfg = b.build().unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), &cfg, &run_experiment(&cfg).unwrap()).unwrap();

    let mut cumavgs: Vec<Vec<f64>> = Vec::new();
    for r in 0..5 {
        let text = std::fs::read_to_string(dir.path().join(format!("run_{r}.csv"))).unwrap();
        let mut sum = 0.0;
        let rows: Vec<f64> = text
            .lines()
            .skip(1)
            .enumerate()
            .map(|(k, line)| {
                let f: Vec<&str> = line.split(',').collect();
                assert_eq!(f[0], r.to_string());
                assert_eq!(f[1], (k + 1).to_string());
                sum += f[2].parse::<f64>().unwrap();
                sum / (k + 1) as f64
            })
            .collect();
        cumavgs.push(rows);
    }
    let agg = std::fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    let mut lines = agg.lines();
    assert_eq!(lines.next(), Some("episode,mean_cumavg,stderr"));
    for (k, line) in lines.enumerate() {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let vals: Vec<f64> = cumavgs.iter().map(|c| c[k]).collect();
        let m = vals.iter().sum::<f64>() / 5.0;
        let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 4.0).sqrt();
        assert_eq!(f[0] as usize, k + 1);
        assert!((f[1] - m).abs() <= 1e-9);
        assert!((f[2] - sd / 5f64.sqrt()).abs() <= 1e-9);
    }
}
