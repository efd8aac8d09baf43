//! Temporary tuning probe; not part of the shipped test suite.

use ipsim_core::geometry::Vec2;
use ipsim_core::metrics::crystal_score;
use ipsim_core::micro_engine::{max_displacement, step_agents, EquilibriumDetector, ExternalDrive};
use ipsim_core::runner::place_agents;
use ipsim_core::scenarios::build;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn run_cluster(name: &str, seed: u64) -> (f64, f64, Option<usize>, f64, f64) {
    let scenario = build(name).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agents = place_agents(&scenario, &mut rng).unwrap();
    let sensing = scenario.populations[0].sensing;
    let dt = scenario.schedule.dt;
    let mut detector = EquilibriumDetector::for_body_size(sensing.body_size);
    let mut settled = None;
    let mut last_disp = f64::NAN;
    for step in 0..scenario.schedule.n_steps {
        let next = step_agents(&agents, &sensing, ExternalDrive::Constant(Vec2::zero()), dt)
            .unwrap();
        last_disp = max_displacement(&agents, &next);
        agents = next;
        if detector.observe(last_disp) {
            settled = Some(step);
            break;
        }
    }
    let score = crystal_score(&agents).unwrap();
    let pts = agents.positions();
    let n = pts.len();
    let mut nn_sum = 0.0;
    for i in 0..n {
        let mut best = f64::INFINITY;
        for j in 0..n {
            if i != j {
                best = best.min((pts[i] - pts[j]).norm_sq());
            }
        }
        nn_sum += best.sqrt();
    }
    (
        score.interior_fraction,
        score.nn_distance_cv,
        settled,
        nn_sum / n as f64,
        last_disp,
    )
}

#[test]
fn line_probe() {
    use ipsim_core::geometry::Rect;
    use ipsim_core::metrics::collinearity;
    use ipsim_core::scenarios::{Drive, Placement};
    for (f_c, r_c_max) in [(0.1f64, 0.5f64), (0.1, 0.8), (0.06, 1.0)] {
        println!("--- f_c {f_c} r_c_max {r_c_max} square 10x10 seed ---");
        for (label, p) in [("line", 7.0f64), ("ctl ", 100.0)] {
        for seed in 0..5u64 {
            let mut scenario = build("line_formation").unwrap();
            scenario.populations[0].sensing.p = p;
            scenario.populations[0].sensing.f_c = f_c;
            scenario.populations[0].sensing.r_c_max = r_c_max;
            scenario.populations[0].placement = Placement::Lattice {
                region: Rect::from_corners(3.0, 23.2, 6.6, 26.8).unwrap(),
                nx: 10,
                ny: 10,
                jitter: 0.1,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut agents = place_agents(&scenario, &mut rng).unwrap();
            let sensing = scenario.populations[0].sensing;
            let v = match &scenario.populations[0].drive {
                Drive::Uniform { v } => *v,
                _ => unreachable!(),
            };
            let dt = scenario.schedule.dt;
            let mut failed = None;
            for step in 0..scenario.schedule.n_steps {
                match step_agents(&agents, &sensing, ExternalDrive::Constant(v), dt) {
                    Ok(next) => agents = next,
                    Err(e) => {
                        failed = Some((step, e));
                        break;
                    }
                }
            }
            let shape = collinearity(&agents);
            let pts = agents.positions();
            let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in pts {
                xmin = xmin.min(p.x);
                xmax = xmax.max(p.x);
                ymin = ymin.min(p.y);
                ymax = ymax.max(p.y);
            }
            println!(
                "{label} seed {seed}: ratio {:.4} bearing {:.1} deg x [{xmin:.1},{xmax:.1}] y [{ymin:.1},{ymax:.1}] err {failed:?}",
                shape.ratio,
                shape.bearing.to_degrees()
            );
        }
        }
    }
}

#[test]
fn final_cluster_verification() {
    let t0 = std::time::Instant::now();
    let mut fracs = Vec::new();
    let mut cvs = Vec::new();
    let mut ctl_cvs = Vec::new();
    let mut settled_count = 0;
    for seed in 0..20u64 {
        let (frac, cv, settled, nn, disp) = run_cluster("crystal_topological", seed);
        if settled.is_some() {
            settled_count += 1;
        }
        println!(
            "crystal seed {seed:2}: settled {settled:?} frac {frac:.3} cv {cv:.4} nn {nn:.4} disp {disp:.2e}"
        );
        fracs.push(frac);
        cvs.push(cv);
        let (cfrac, ccv, csettled, cnn, _) = run_cluster("globular_metric", seed);
        println!(
            "control seed {seed:2}: settled {csettled:?} frac {cfrac:.3} cv {ccv:.4} nn {cnn:.4}"
        );
        ctl_cvs.push(ccv);
    }
    fracs.sort_by(f64::total_cmp);
    let med_frac = 0.5 * (fracs[9] + fracs[10]);
    let ratio_min = cvs
        .iter()
        .zip(&ctl_cvs)
        .map(|(a, b)| b / a)
        .fold(f64::INFINITY, f64::min);
    println!(
        "median frac {med_frac:.3}; settled {settled_count}/20; worst ctl/crystal cv ratio {ratio_min:.2}; elapsed {:?}",
        t0.elapsed()
    );
}
