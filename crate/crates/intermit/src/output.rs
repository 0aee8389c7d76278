//! Run-directory emission: a human summary plus machine-readable CSVs.
//!
//! Every emitted directory contains `summary.txt`, `config.txt` (re-parseable
//! so the run can be reproduced exactly), and per-queue/per-thread/series
//! CSVs. `cycles.csv` appears when the scenario set `emit_cycles`, and
//! `vacation_pdf.csv` when `vacation_bins > 0`; the latter bins vacations
//! over `[0, t_short)` with a final row for the point mass at the timer and
//! puts the two closed-form laws alongside the measured densities.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::analytics::{self, ModelParams, Regime};
use crate::metrics::{CycleRecord, SimulationReport};
use crate::sweep::SweepPoint;

pub const SUMMARY_FILE: &str = "summary.txt";
pub const CONFIG_FILE: &str = "config.txt";

/// Writes the full run directory, creating it if needed.
pub fn emit_report(report: &SimulationReport, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(SUMMARY_FILE), render_summary(report))?;
    fs::write(dir.join(CONFIG_FILE), report.config.to_string())?;
    write_queues_csv(report, &dir.join("queues.csv"))?;
    write_threads_csv(report, &dir.join("threads.csv"))?;
    write_latency_csv(report, &dir.join("latency_histogram.csv"))?;
    write_throughput_csv(report, &dir.join("throughput.csv"))?;
    write_controller_csv(report, &dir.join("controller_trace.csv"))?;
    if let Some(records) = &report.cycle_records {
        if report.config.emit_cycles {
            write_cycles_csv(records, &dir.join("cycles.csv"))?;
        }
        if report.config.vacation_bins > 0 {
            write_vacation_pdf_csv(report, records, &dir.join("vacation_pdf.csv"))?;
        }
    }
    Ok(())
}

fn fmt_dur(ns: u64) -> String {
    let v = ns as f64;
    if ns >= 1_000_000_000 {
        format!("{:.3}s", v / 1e9)
    } else if ns >= 1_000_000 {
        format!("{:.3}ms", v / 1e6)
    } else if ns >= 1_000 {
        format!("{:.3}us", v / 1e3)
    } else {
        format!("{ns}ns")
    }
}

pub fn render_summary(report: &SimulationReport) -> String {
    let cfg = &report.config;
    let t = &report.totals;
    let lat = &report.latency;
    let cyc = &report.cycles;
    let mut s = String::new();
    s.push_str(&format!(
        "scenario: {} threads, {} queues, horizon {} (warmup {})\n",
        cfg.m_threads,
        cfg.n_queues,
        fmt_dur(cfg.horizon_ns),
        fmt_dur(cfg.warmup_ns)
    ));
    s.push_str(&format!(
        "timers: short {} ({}), long {}\n",
        fmt_dur(cfg.t_short_ns),
        if cfg.adaptation {
            format!("adaptive, target {}", fmt_dur(cfg.target_vacation_ns))
        } else {
            "fixed".to_string()
        },
        fmt_dur(cfg.t_long_ns)
    ));
    s.push_str(&format!(
        "service: {} pps per queue, batch {}, capacity {}{}\n\n",
        cfg.mu_pps,
        cfg.batch_size,
        cfg.capacity,
        if cfg.always_poll {
            ", always-poll baseline"
        } else {
            ""
        }
    ));
    s.push_str(&format!(
        "packets: arrivals {}  served {}  dropped {}  backlog {}  in_service {}\n",
        t.arrivals, t.served, t.dropped, t.backlog_end, t.in_service_end
    ));
    s.push_str(&format!(
        "conservation: arrivals = served + dropped + backlog + in_service: {}\n",
        if t.conserved() { "OK" } else { "VIOLATED" }
    ));
    s.push_str(&format!("cpu awake fraction: {:.4}\n", report.cpu_proxy));
    s.push_str(&format!(
        "latency ns: mean {:.1}  p50 {}  p99 {}  p99.9 {}  max {}  (n={})\n",
        lat.mean_ns, lat.p50_ns, lat.p99_ns, lat.p999_ns, lat.max_ns, lat.count
    ));
    s.push_str(&format!(
        "cycles: {} (zero {})  mean V {:.1}ns  mean B {:.1}ns  mean N_V {:.2}  mean N_B {:.2}\n",
        cyc.count, cyc.zero_count, cyc.mean_v_ns, cyc.mean_b_ns, cyc.mean_n_v, cyc.mean_n_b
    ));
    s.push_str(&format!(
        "max vacation: {}\n\n",
        fmt_dur(report.max_vacation_ns)
    ));

    s.push_str(
        "queue  arrivals  served  drops  rho     mean_backlog  mean_wait_ns  busy_try%  max_n_v\n",
    );
    for (i, q) in report.queues.iter().enumerate() {
        s.push_str(&format!(
            "{:<5}  {:<8}  {:<6}  {:<5}  {:<6.4}  {:<12.2}  {:<12.1}  {:<9.2}  {}\n",
            i,
            q.arrivals,
            q.served,
            q.drops,
            q.rho_measured,
            q.mean_backlog,
            q.mean_wait_ns,
            100.0 * q.busy_try_fraction,
            q.max_n_v
        ));
    }
    s.push('\n');
    s.push_str("thread  wakes  drains  served  busy_try%  awake%\n");
    for (i, th) in report.threads.iter().enumerate() {
        s.push_str(&format!(
            "{:<6}  {:<5}  {:<6}  {:<6}  {:<9.2}  {:.2}\n",
            i,
            th.wakes,
            th.drains,
            th.served,
            100.0 * th.busy_try_fraction,
            100.0 * th.awake_fraction
        ));
    }
    s
}

fn write_queues_csv(report: &SimulationReport, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "queue,arrivals,served,drops,backlog_end,rho,mean_backlog,mean_wait_ns,\
         busy_try_fraction,tries,max_n_v,max_backlog,cycles,zero_cycles,\
         mean_v_ns,mean_b_ns,mean_n_v,mean_n_b"
    )?;
    for (i, q) in report.queues.iter().enumerate() {
        writeln!(
            w,
            "{i},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            q.arrivals,
            q.served,
            q.drops,
            q.backlog_end,
            q.rho_measured,
            q.mean_backlog,
            q.mean_wait_ns,
            q.busy_try_fraction,
            q.tries,
            q.max_n_v,
            q.max_backlog,
            q.cycles.count,
            q.cycles.zero_count,
            q.cycles.mean_v_ns,
            q.cycles.mean_b_ns,
            q.cycles.mean_n_v,
            q.cycles.mean_n_b
        )?;
    }
    w.flush()
}

fn write_threads_csv(report: &SimulationReport, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "thread,wakes,drains,served,busy_try_fraction,awake_fraction"
    )?;
    for (i, t) in report.threads.iter().enumerate() {
        writeln!(
            w,
            "{i},{},{},{},{},{}",
            t.wakes, t.drains, t.served, t.busy_try_fraction, t.awake_fraction
        )?;
    }
    w.flush()
}

fn write_latency_csv(report: &SimulationReport, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "lo_ns,hi_ns,count")?;
    for b in &report.latency.bins {
        writeln!(w, "{},{},{}", b.lo_ns, b.hi_ns, b.count)?;
    }
    w.flush()
}

fn write_throughput_csv(report: &SimulationReport, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "window_start_ns,offered,served")?;
    let window = report.throughput.window_ns;
    for (i, (offered, served)) in report
        .throughput
        .offered
        .iter()
        .zip(&report.throughput.served)
        .enumerate()
    {
        writeln!(w, "{},{offered},{served}", i as u64 * window)?;
    }
    w.flush()
}

fn write_controller_csv(report: &SimulationReport, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "time_ns,queue,rho_est,t_short_ns")?;
    for c in &report.controller {
        writeln!(
            w,
            "{},{},{},{}",
            c.time_ns, c.queue, c.rho_est, c.t_short_ns
        )?;
    }
    w.flush()
}

fn write_cycles_csv(records: &[CycleRecord], path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "cycle,queue,thread,v_ns,b_ns,n_v,n_b")?;
    for (i, c) in records.iter().enumerate() {
        writeln!(
            w,
            "{i},{},{},{},{},{},{}",
            c.queue, c.thread, c.v_ns, c.b_ns, c.n_v, c.n_b
        )?;
    }
    w.flush()
}

/// Vacation histogram with the two model laws for comparison. Model columns
/// hold per-ns densities from CDF differences; the final row is the point
/// mass at `t_short` (probability, not density).
fn write_vacation_pdf_csv(
    report: &SimulationReport,
    records: &[CycleRecord],
    path: &Path,
) -> io::Result<()> {
    let cfg = &report.config;
    let bins = cfg.vacation_bins as usize;
    let t_short = cfg.t_short_ns as f64;
    let width = t_short / bins as f64;
    let params = ModelParams::new(
        cfg.m_threads,
        cfg.n_queues,
        cfg.t_short_ns as f64,
        cfg.t_long_ns as f64,
        cfg.target_vacation_ns as f64,
    )
    .expect("validated config always forms model params");

    let mut count_all = vec![0u64; bins + 1];
    let mut count_filtered = vec![0u64; bins + 1];
    let mut n_filtered = 0u64;
    for c in records {
        let idx = if (c.v_ns as f64) >= t_short {
            bins
        } else {
            ((c.v_ns as f64 / width) as usize).min(bins - 1)
        };
        count_all[idx] += 1;
        if c.n_v >= 1 {
            count_filtered[idx] += 1;
            n_filtered += 1;
        }
    }

    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "bin_lo_ns,bin_hi_ns,count_all,count_filtered,density_filtered,model_high,model_low"
    )?;
    for i in 0..bins {
        let lo = i as f64 * width;
        let hi = lo + width;
        let density = if n_filtered == 0 {
            0.0
        } else {
            count_filtered[i] as f64 / (n_filtered as f64 * width)
        };
        let dh =
            (analytics::vacation_cdf(hi.min(t_short * (1.0 - 1e-12)), &params, Regime::HighLoad)
                - analytics::vacation_cdf(lo, &params, Regime::HighLoad))
                / width;
        let dl = (analytics::vacation_cdf(hi, &params, Regime::LowLoad)
            - analytics::vacation_cdf(lo, &params, Regime::LowLoad))
            / width;
        writeln!(
            w,
            "{lo},{hi},{},{},{density},{dh},{dl}",
            count_all[i], count_filtered[i]
        )?;
    }
    let atom_frac = if n_filtered == 0 {
        0.0
    } else {
        count_filtered[bins] as f64 / n_filtered as f64
    };
    let model_atom = analytics::vacation_atom_high_load(&params);
    writeln!(
        w,
        "{t_short},{t_short},{},{},{atom_frac},{model_atom},0",
        count_all[bins], count_filtered[bins]
    )?;
    w.flush()
}

/// One row per sweep point; failed points carry their error in `status`.
pub fn write_sweep_csv(points: &[SweepPoint], key: &str, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "{key},status,arrivals,served,dropped,cpu_proxy,mean_latency_ns,\
         p50_ns,p99_ns,p999_ns,mean_v_ns,mean_b_ns,rho_mean"
    )?;
    for p in points {
        match &p.outcome {
            Ok(r) => {
                let rho_mean = if r.queues.is_empty() {
                    0.0
                } else {
                    r.queues.iter().map(|q| q.rho_measured).sum::<f64>() / r.queues.len() as f64
                };
                writeln!(
                    w,
                    "{},ok,{},{},{},{},{},{},{},{},{},{},{}",
                    p.value,
                    r.totals.arrivals,
                    r.totals.served,
                    r.totals.dropped,
                    r.cpu_proxy,
                    r.latency.mean_ns,
                    r.latency.p50_ns,
                    r.latency.p99_ns,
                    r.latency.p999_ns,
                    r.cycles.mean_v_ns,
                    r.cycles.mean_b_ns,
                    rho_mean
                )?;
            }
            Err(e) => {
                let clean = e.replace(['\n', ','], ";");
                writeln!(w, "{},error: {clean},,,,,,,,,,,", p.value)?;
            }
        }
    }
    w.flush()
}
