use pairqed::analysis::{fit_dip_antidip, FitData};
use pairqed::cli::config::ExperimentConfig;
use pairqed::correlations::TauGrid;
use pairqed::instrument::{jitter_convolve, spectral_diffusion_average};
use pairqed::model::*;

fn pipeline(cfg_text: &str) -> (Vec<f64>, Vec<f64>) {
    let cfg = ExperimentConfig::parse(cfg_text).unwrap();
    let grid = TauGrid::new(cfg.grid.tau_max_ns, cfg.grid.tau_step_ns).unwrap();
    let n_sym = 2 * grid.n_positive() - 1;
    let averaged = spectral_diffusion_average(&cfg.instrument, |d1, d2| {
        let s = cfg.system.with_detuning_offsets(d1, d2);
        let tr = pairqed::correlations::g2_regression(&s, &cfg.drive, &grid)?;
        let mut v = tr.g2_raw;
        v.push(tr.intensity);
        Ok(v)
    })
    .unwrap();
    let intensity = averaged[n_sym];
    let mut g2: Vec<f64> = averaged[..n_sym].iter().map(|r| r / (intensity * intensity)).collect();
    let sigma = cfg.instrument.coincidence_sigma();
    if sigma > 0.0 {
        g2 = jitter_convolve(&g2, grid.step, sigma).unwrap();
    }
    (grid.symmetric(), g2)
}

fn main() {
    for beta in [0.55, 0.593, 0.65, 0.7, 0.8] {
        for sd in [0.05, 0.1, 0.2] {
            for gd in [0.0, 0.05] {
                let text = format!(
                    "[system]\ngamma1_ghz = 0.73\ngamma2_ghz = 0.79\nbeta1 = {beta}\nbeta2 = {beta}\ndephasing1_ghz = {gd}\ndephasing2_ghz = {gd}\n\n[drive]\nmode = cw\nomega1_ghz = 0.25\n\n[instrument]\njitter_fwhm_ns = 0.35\nsd_sigma1_ghz = {sd}\nsd_sigma2_ghz = {sd}\n\n[grid]\ntau_max_ns = 5.0\ntau_step_ns = 0.005\n"
                );
                let (tau, g2) = pipeline(&text);
                let mid = g2.len() / 2;
                let g0 = g2[mid];
                // detuned variant
                let text_det = text.replace("[drive]", "detuning2_ghz = -4.0\n\n[drive]");
                let (_, g2d) = pipeline(&text_det);
                let g0d = g2d[g2d.len() / 2];
                let split = fit_dip_antidip(
                    &FitData { x: tau.clone(), y: g2.clone(), yerr: None },
                    0.35 * std::f64::consts::SQRT_2 / (8.0 * std::f64::consts::LN_2).sqrt(),
                    0.4,
                    0.25,
                );
                match split {
                    Ok(s) => println!(
                        "beta {beta:.3} sd {sd:.2} gd {gd:.2}: g2(0) {g0:.3} det {g0d:.3} dip {:.3} adip {:.3}",
                        s.dip.params[1], s.antidip.params[2]
                    ),
                    Err(e) => println!("beta {beta:.3} sd {sd:.2} gd {gd:.2}: g2(0) {g0:.3} det {g0d:.3} fit failed: {e}"),
                }
            }
        }
    }
}
