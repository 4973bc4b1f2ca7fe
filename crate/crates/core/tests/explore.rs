use dpa_core::*;
use statrs::distribution::{ContinuousCDF, Normal};
use std::time::Instant;

fn analytic_gaussian_delta(sigma: f64, eps: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    n.cdf(1.0 / (2.0 * sigma) - eps * sigma) - eps.exp() * n.cdf(-1.0 / (2.0 * sigma) - eps * sigma)
}

#[test]
fn explore_bracket_widths() {
    let spec = MechanismSpec::gaussian(1.0, 1.0).unwrap();
    let pol = DiscretizationPolicy::default();
    let t0 = Instant::now();
    let pess = mechanism::mechanism_pld(&spec, &pol).unwrap();
    let opt = mechanism::mechanism_pld(&spec, &pol.optimistic()).unwrap();
    println!("pld build: {:?}, len {} inf {:e}", t0.elapsed(), pess.len(), pess.infinity_mass);
    for eps in [0.0, 0.5, 1.0, 2.0] {
        let dp = hockey_stick(&pess, eps);
        let doo = hockey_stick(&opt, eps);
        let truth = analytic_gaussian_delta(1.0, eps);
        println!("eps {eps}: opt {doo:.9e} truth {truth:.9e} pess {dp:.9e}  width {:.3e}  brackets={}",
            dp - doo, doo <= truth && truth <= dp);
    }
}

#[test]
fn explore_cactus() {
    let cost = CostSpec::new(CostFunction::Quadratic, 0.25).unwrap();
    for spacing in [0.02, 0.01] {
        let t0 = Instant::now();
        let sol = solve_cactus(1.0, &cost, 6.0, spacing, 1e-3).unwrap();
        println!(
            "spacing {spacing}: objective {:.6} converged {} iters {} cost {:.8} time {:?}",
            sol.objective, sol.converged, sol.iterations,
            sol.noise.expected_cost(&CostFunction::Quadratic),
            t0.elapsed()
        );
    }
}

#[test]
fn explore_compose_timing() {
    let spec = MechanismSpec::gaussian(1.0, 1.0).unwrap();
    let pol = DiscretizationPolicy::default();
    let pess = mechanism::mechanism_pld(&spec, &pol).unwrap();
    let t0 = Instant::now();
    let cfg = FftConfig { tail_mass_bound: 1e-10, max_cells: 1 << 24 };
    let composed = compose::fft_compose_power(&pess, 100, &cfg).unwrap();
    println!("compose k=100: {:?}, len {}", t0.elapsed(), composed.len());
    let t1 = Instant::now();
    let eps = epsilon_at_delta(&composed, 1e-5).unwrap();
    println!("eps(1e-5) = {eps:.4} in {:?}", t1.elapsed());
    // rdp
    let opt = mechanism::mechanism_pld(&spec, &pol.optimistic()).unwrap();
    let eps_rdp = compose::rdp_epsilon_at_delta(&opt, 100, &DEFAULT_RDP_ALPHAS, 1e-5).unwrap();
    println!("eps_rdp = {eps_rdp:.4}");
    // basic
    let eps1 = epsilon_at_delta(&pess, 1e-7).unwrap();
    println!("eps_basic = {:.4}", 100.0 * eps1);
    // clt from finer optimistic pld
    let fine = DiscretizationPolicy { grid_spacing: 1e-5, tail_mass_bound: 1e-10, rounding: pld::Rounding::Optimistic };
    let opt_fine = mechanism::mechanism_pld(&spec, &fine).unwrap();
    let est = clt_compose(&opt_fine, 100, eps).unwrap();
    let d_pess = hockey_stick(&composed, eps);
    let opt100 = compose::fft_compose_power(&opt, 100, &cfg).unwrap();
    let d_opt = hockey_stick(&opt100, eps);
    println!("delta at eps: opt {d_opt:.6e} clt {:.6e} pess {d_pess:.6e} inside={}",
        est.delta, d_opt <= est.delta && est.delta <= d_pess);
}
