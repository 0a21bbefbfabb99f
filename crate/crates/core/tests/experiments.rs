use fogsched::engine::run;
use fogsched::experiments::{
    cell_inputs, completed_at, run_cell, run_throughput, sweep, Axis, SweepSpec, ThroughputSpec, DEFAULT_BASE_LOAD,
};
use fogsched::model::{Preset, DEFAULT_SEED};
use fogsched::schedulers::Algorithm;
use fogsched::workload::{bundled_jobs, LOAD_GRID};

fn spec(axis: Axis) -> SweepSpec {
    SweepSpec::new(axis, bundled_jobs(), DEFAULT_SEED)
}

#[test]
fn job_load_grid_has_six_points() {
    let s = spec(Axis::JobLoad);
    assert_eq!(s.grid, LOAD_GRID.to_vec());
    let r = sweep(&s).unwrap();
    assert_eq!(r.rows.len(), 6 * 4 * 4);
}

#[test]
fn cloud_only_never_beats_four_tier_efsa() {
    let r = sweep(&spec(Axis::JobLoad)).unwrap();
    for &m in &LOAD_GRID {
        let cdc = r.find(Preset::FourTier, Algorithm::CdcOnly, m).unwrap().tct;
        let efsa = r.find(Preset::FourTier, Algorithm::Efsa, m).unwrap().tct;
        assert!(cdc >= efsa, "load {m}: cdc-only {cdc} < efsa {efsa}");
    }
}

#[test]
fn cells_match_independent_reruns() {
    for axis in Axis::ALL {
        let s = spec(axis);
        let r = sweep(&s).unwrap();
        for row in r.rows.iter().step_by(7) {
            let scenario: Preset = row.scenario.parse().unwrap();
            let algo: Algorithm = row.algorithm.parse().unwrap();
            let (h, jobs) = cell_inputs(&s, scenario, row.axis_value).unwrap();
            let m = run(&algo.schedule(&jobs, &h), &h, &jobs).unwrap();
            assert_eq!(row.tct, m.total_completion_time);
            assert_eq!(row.network_usage, m.network_usage);
            assert_eq!(row.cost, m.cost.total);
        }
    }
}

#[test]
fn sweeps_are_reproducible() {
    let s = spec(Axis::Delay);
    let mut a = Vec::new();
    let mut b = Vec::new();
    sweep(&s).unwrap().write_table(&mut a).unwrap();
    sweep(&s).unwrap().write_table(&mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn zero_delay_offset_is_the_load_baseline() {
    let delay = sweep(&spec(Axis::Delay)).unwrap();
    let mut load = spec(Axis::JobLoad);
    load.grid = vec![DEFAULT_BASE_LOAD];
    let load = sweep(&load).unwrap();
    for p in Preset::ALL {
        for a in Algorithm::ALL {
            let x = delay.find(p, a, 0.0).unwrap();
            let y = load.find(p, a, DEFAULT_BASE_LOAD).unwrap();
            assert_eq!((x.tct, x.network_usage, x.cost), (y.tct, y.network_usage, y.cost));
        }
    }
}

#[test]
fn delay_offset_delays_every_job() {
    let s = spec(Axis::Delay);
    for p in Preset::ALL {
        for a in Algorithm::ALL {
            let (h0, jobs) = cell_inputs(&s, p, 0.0).unwrap();
            let (h5, _) = cell_inputs(&s, p, 5.0).unwrap();
            let schedule = a.schedule(&jobs, &h0);
            let before = run(&schedule, &h0, &jobs).unwrap();
            let after = run(&schedule, &h5, &jobs).unwrap();
            for (x, y) in before.per_job.iter().zip(&after.per_job) {
                assert!(y.ct >= x.ct, "{} {} {}", p.name(), a.name(), x.job);
            }
        }
    }
}

#[test]
fn cloud_only_ignores_delay_and_speed() {
    for axis in [Axis::Delay, Axis::Mips] {
        let s = spec(axis);
        let r = sweep(&s).unwrap();
        for p in Preset::ALL {
            let first = r.find(p, Algorithm::CdcOnly, s.grid[0]).unwrap();
            for &g in &s.grid {
                let row = r.find(p, Algorithm::CdcOnly, g).unwrap();
                assert_eq!(row.tct.to_bits(), first.tct.to_bits());
                assert_eq!(row.network_usage.to_bits(), first.network_usage.to_bits());
            }
        }
    }
}

#[test]
fn mips_grid_ends_at_3500_on_tier_one() {
    let s = spec(Axis::Mips);
    let (h, _) = cell_inputs(&s, Preset::FourTier, *s.grid.last().unwrap()).unwrap();
    assert_eq!(h.tiers[0].devices[0].capacity, 3500.0);
    assert_eq!(h.tiers[3].devices[0].capacity, 8500.0 + 1500.0);
    assert_eq!(h.cloud.capacity, 57980.0);
}

#[test]
fn removing_devices_does_not_help() {
    let s = spec(Axis::DeviceCount);
    for a in Algorithm::ALL {
        let full = run_cell(&s, Preset::FourTier, 0.0, a).unwrap();
        let fewer = run_cell(&s, Preset::FourTier, 1.0, a).unwrap();
        assert!(
            fewer.total_completion_time >= full.total_completion_time,
            "{}: case b {} < case a {}",
            a.name(),
            fewer.total_completion_time,
            full.total_completion_time
        );
    }
}

#[test]
fn device_case_labels() {
    let r = sweep(&spec(Axis::DeviceCount)).unwrap();
    let labels: Vec<&str> = r
        .rows
        .iter()
        .filter(|x| x.scenario == "flat" && x.algorithm == "efsa")
        .map(|x| x.case)
        .collect();
    assert_eq!(labels, ["a", "b", "c", "d"]);
}

#[test]
fn throughput_curves() {
    let s = ThroughputSpec::new(bundled_jobs(), DEFAULT_SEED);
    let rows = run_throughput(&s).unwrap();
    for &n in &s.job_counts {
        for a in Algorithm::ALL {
            let curve: Vec<(f64, usize)> = rows
                .iter()
                .filter(|r| r.job_count == n && r.algorithm == a.name())
                .map(|r| (r.bucket_end, r.completed))
                .collect();
            assert_eq!(curve.last().unwrap().1, n);
            assert!(curve.windows(2).all(|w| w[0].1 <= w[1].1 && w[0].0 < w[1].0));
        }
    }
    let curve = |a: Algorithm| -> Vec<(f64, usize)> {
        rows.iter()
            .filter(|r| r.job_count == 5 && r.algorithm == a.name())
            .map(|r| (r.bucket_end, r.completed))
            .collect()
    };
    let (efsa, cdc) = (curve(Algorithm::Efsa), curve(Algorithm::CdcOnly));
    for &(t, _) in efsa.iter().chain(&cdc) {
        assert!(completed_at(&efsa, t) >= completed_at(&cdc, t), "bucket {t}");
    }
}
