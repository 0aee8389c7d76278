//! Tour of the closed-form model, no simulation involved.
//!
//! Prints the vacation law under both load regimes, the general-load mean
//! with its wide-separation approximation, the backup success probability,
//! and the adaptive timer rule. Run with:
//!
//! ```text
//! cargo run --example analytic_curves
//! ```

use intermit::analytics::{
    adaptive_ts, adaptive_ts_multiqueue, backup_success_prob, mean_vacation_general,
    mean_vacation_high_load, vacation_atom_high_load, vacation_cdf_high_load,
    vacation_cdf_low_load, ModelParams,
};

fn main() {
    let t_short = 10_000.0; // 10us
    let t_long = 500_000.0; // 500us

    println!("high-load vacation CDF, t_short=10us t_long=500us");
    println!("{:>8} {:>10} {:>10} {:>10}", "x_us", "M=2", "M=3", "M=5");
    for x_us in [0.0, 1.0, 2.0, 5.0, 8.0, 9.99, 10.0] {
        let row: Vec<f64> = [2, 3, 5]
            .iter()
            .map(|&m| {
                let p = ModelParams::new(m, 1, t_short, t_long, t_short).unwrap();
                vacation_cdf_high_load(x_us * 1_000.0, &p)
            })
            .collect();
        println!(
            "{:>8.2} {:>10.6} {:>10.6} {:>10.6}",
            x_us, row[0], row[1], row[2]
        );
    }

    println!("\nhigh-load mean, atom at the timer, and backup success");
    println!(
        "{:>4} {:>12} {:>10} {:>14}",
        "M", "mean_us", "atom", "backup_win"
    );
    for m in [2u32, 3, 5, 8] {
        let p = ModelParams::new(m, 1, t_short, t_long, t_short).unwrap();
        println!(
            "{m:>4} {:>12.4} {:>10.6} {:>14.6}",
            mean_vacation_high_load(&p) / 1_000.0,
            vacation_atom_high_load(&p),
            backup_success_prob(&p).unwrap()
        );
    }

    println!("\nlow-load vacation CDF, every competitor on the short timer");
    println!("{:>8} {:>10} {:>10}", "x_us", "M=3", "M=8");
    for x_us in [1.0, 3.0, 5.0, 8.0, 10.0] {
        let row: Vec<f64> = [3, 8]
            .iter()
            .map(|&m| {
                let p = ModelParams::new(m, 1, t_short, t_long, t_short).unwrap();
                vacation_cdf_low_load(x_us * 1_000.0, &p)
            })
            .collect();
        println!("{x_us:>8.2} {:>10.6} {:>10.6}", row[0], row[1]);
    }

    println!("\ngeneral-load mean vacation, M=3: exact vs t_long >> t_short approximation");
    println!(
        "{:>6} {:>12} {:>12} {:>10}",
        "p", "exact_us", "approx_us", "rel_err"
    );
    let p3 = ModelParams::new(3, 1, t_short, t_long, t_short).unwrap();
    for prob in [0.05, 0.2, 0.4, 0.6, 0.8, 0.95] {
        let gm = mean_vacation_general(&p3, prob).unwrap();
        println!(
            "{prob:>6.2} {:>12.4} {:>12.4} {:>10.6}",
            gm.exact / 1_000.0,
            gm.approx / 1_000.0,
            (gm.exact - gm.approx).abs() / gm.exact
        );
    }

    println!("\nadaptive short timer holding mean vacation at 10us, M=3");
    println!("{:>6} {:>12}", "rho", "t_short_us");
    for rho in [0.0, 0.2, 0.4, 0.6, 0.8, 0.95] {
        println!(
            "{rho:>6.2} {:>12.4}",
            adaptive_ts(3, rho, t_short) / 1_000.0
        );
    }

    println!("\nmulti-queue variant: 8 threads over 4 queues, target 15us");
    println!("{:>6} {:>12}", "rho", "t_short_us");
    for rho in [0.0, 0.2, 0.4, 0.6, 0.8, 0.95] {
        let ts = adaptive_ts_multiqueue(8, 4, rho, 15_000.0).unwrap();
        println!("{rho:>6.2} {:>12.4}", ts / 1_000.0);
    }
}
