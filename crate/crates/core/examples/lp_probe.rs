use flybelt_core::modal::{identify_modes, ModalSet};
use flybelt_core::multibody::{find_equilibrium, perturbed_release, simulate, PlantParams, SimOutput};
use flybelt_core::motion::{shaped_profile, step_profile, MotionProfile, Strategy};
use flybelt_core::optim::{design_shaper, DesignRequest};
use std::f64::consts::PI;

fn hold(ts: f64, seconds: f64) -> MotionProfile {
    let n = (seconds / ts).ceil() as usize + 1;
    MotionProfile { ts, alpha: vec![0.0; n], strategy: Strategy::Step }
}

// brute-force linear two-mode plant: unit residues, unity DC gain per mode
fn surrogate_response(m: &ModalSet, u: &[f64], ts: f64) -> Vec<f64> {
    let modes = [(m.omega1, m.xi1), (m.omega2, m.xi2)];
    let mut states = [[0.0f64; 2]; 2];
    let sub = 40;
    let dt = ts / sub as f64;
    let mut y = Vec::with_capacity(u.len());
    for &uk in u {
        let mut sum = 0.0;
        for (s, &(w, xi)) in states.iter_mut().zip(&modes) {
            for _ in 0..sub {
                // RK4 on x'' = -2 xi w x' - w^2 (x - u)
                let f = |x: f64, v: f64| (v, -2.0 * xi * w * v - w * w * (x - uk));
                let (k1x, k1v) = f(s[0], s[1]);
                let (k2x, k2v) = f(s[0] + 0.5 * dt * k1x, s[1] + 0.5 * dt * k1v);
                let (k3x, k3v) = f(s[0] + 0.5 * dt * k2x, s[1] + 0.5 * dt * k2v);
                let (k4x, k4v) = f(s[0] + dt * k3x, s[1] + dt * k3v);
                s[0] += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
                s[1] += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            }
            sum += s[0] - uk;
        }
        y.push(sum); // deviation from command, both modes superposed
    }
    y
}

fn post_settle_pkpk(sim: &SimOutput, settle_t: f64) -> f64 {
    let k0 = sim.time.iter().position(|&t| t >= settle_t).unwrap();
    let e: Vec<f64> = sim.eps2[k0..].iter().zip(&sim.alpha[k0..]).map(|(x, a)| (x - a).to_degrees()).collect();
    e.iter().fold(f64::MIN, |m, &v| m.max(v)) - e.iter().fold(f64::MAX, |m, &v| m.min(v))
}

fn main() {
    let p = PlantParams::reference();
    let eq = find_equilibrium(&p, 0.0).unwrap();
    let (dt, ts) = (1e-3, 0.01);

    let released = perturbed_release(&eq, &p, 0.25, 0.03).unwrap();
    let free = simulate(&hold(ts, 60.0), &released, &p, dt, false).unwrap();
    let m_id = identify_modes(&free).unwrap();

    // t-opt impulse cluster structure
    let sh0 = design_shaper(&DesignRequest { modal: m_id, ts, smoothing: 0.0 }).unwrap();
    println!("t-opt n = {}, clusters (idx, t, A) with A > 1e-6:", sh0.len());
    for (i, &a) in sh0.h.iter().enumerate() {
        if a > 1e-6 {
            println!("  {:4}  t = {:5.2} s  A = {:.4}", i, i as f64 * ts, a);
        }
    }

    // linear-surrogate residual for the same shaped step (sanity: must vanish)
    let raw = step_profile(0.0, PI, ts, 2, Strategy::TOptShaped);
    let shaped0 = shaped_profile(&raw, &sh0).unwrap();
    let mut cmd = shaped0.alpha.clone();
    cmd.extend(std::iter::repeat(PI).take(400));
    let dev = surrogate_response(&m_id, &cmd, ts);
    let n_settle = shaped0.alpha.len();
    let resid = dev[n_settle + 10..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let transit = dev[..n_settle].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("surrogate: transit max |dev| = {:.1} deg, post-settle = {:.2e} deg", transit.to_degrees(), resid.to_degrees());

    // smoothing sweep on the nonlinear plant
    println!("\nsf     n     transit_pk  post-settle pkpk");
    for sf in [0.0, 0.15, 0.25, 0.5, 0.75, 1.0] {
        let sh = design_shaper(&DesignRequest { modal: m_id, ts, smoothing: sf }).unwrap();
        let prof = shaped_profile(&step_profile(0.0, PI, ts, 2, Strategy::H2OptShaped), &sh).unwrap();
        let sim = simulate(&prof.extend_hold(14.0), &eq, &p, dt, false).unwrap();
        let k_end = sim.time.iter().position(|&t| t >= prof.duration() + 0.2).unwrap();
        let transit = sim.eps2[..k_end].iter().zip(&sim.alpha[..k_end])
            .map(|(x, a)| (x - a).abs()).fold(0.0, f64::max);
        println!("{sf:4.2}  {:4}  {:9.2}  {:10.4}", sh.len(), transit.to_degrees(),
            post_settle_pkpk(&sim, prof.duration() + 0.2));
    }
}
