//! CSV and plain-text output. Every number is written with 17 significant
//! digits (`{:.16e}`), which reads back bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::{DiagnosticsReport, Order};
use crate::error::{Error, Result};
use crate::grid::{FluidState, Trajectory};
use crate::harness::RefinementReport;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

pub const STATE_HEADER: &str = "k,t,i,x_center,rho,x_face,u,hat_u";

/// One row per face `i = 0..=N` and step; the cell columns of row `N` are empty.
pub fn state_csv(traj: &Trajectory, echo: &str) -> String {
    let g = &traj.grid;
    let mut out = String::from(echo);
    out.push_str(STATE_HEADER);
    out.push('\n');
    for s in &traj.states {
        let t = num(g.time(s.k));
        let hat = s.hat_velocity();
        for i in 0..=g.cells {
            let (xc, rho, h) = if i < g.cells {
                (num(g.cell_center(i)), num(s.rho[i]), num(hat[i]))
            } else {
                (String::new(), String::new(), String::new())
            };
            let _ = writeln!(out, "{},{t},{i},{xc},{rho},{},{},{h}", s.k, num(g.face(i)), num(s.u[i]));
        }
    }
    out
}

pub fn write_state_csv(traj: &Trajectory, path: &Path, echo: &str) -> Result<()> {
    write_file(path, &state_csv(traj, echo))
}

/// A time level read back from a state CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRecord {
    pub t: f64,
    pub state: FluidState,
}

/// Parses the output of [`state_csv`], skipping `#` comments.
pub fn parse_state_csv(text: &str) -> Result<Vec<StateRecord>> {
    let bad = |n: usize, msg: &str| Error::InvalidInput(format!("state csv line {}: {msg}", n + 1));
    let mut records: Vec<StateRecord> = Vec::new();
    let mut header_seen = false;
    for (n, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line != STATE_HEADER {
                return Err(bad(n, "unexpected header"));
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(bad(n, "expected 8 columns"));
        }
        let float = |s: &str| s.parse::<f64>().map_err(|_| bad(n, "bad number"));
        let k: usize = cols[0].parse().map_err(|_| bad(n, "bad step index"))?;
        let i: usize = cols[2].parse().map_err(|_| bad(n, "bad face index"))?;
        if records.last().is_none_or(|r| r.state.k != k) {
            records.push(StateRecord {
                t: float(cols[1])?,
                state: FluidState {
                    rho: Vec::new(),
                    u: Vec::new(),
                    k,
                },
            });
        }
        let rec = records.last_mut().expect("pushed above");
        if i != rec.state.u.len() {
            return Err(bad(n, "face rows out of order"));
        }
        rec.state.u.push(float(cols[6])?);
        if !cols[4].is_empty() {
            rec.state.rho.push(float(cols[4])?);
        }
    }
    Ok(records)
}

pub fn read_state_csv(path: &Path) -> Result<Vec<StateRecord>> {
    parse_state_csv(&fs::read_to_string(path).map_err(io_err(path))?)
}

fn order_cell(o: Option<&Order>) -> String {
    o.map(|o| o.to_string()).unwrap_or_default()
}

const ORDER_NAMES: [&str; 4] = ["E1", "E2", "P1", "P2"];

/// One row per level. Cauchy differences and orders sit on the coarser
/// level of each pair.
pub fn report_csv(report: &RefinementReport, echo: &str) -> String {
    let mut out = String::from(echo);
    for flag in &report.flags {
        let _ = writeln!(out, "# flag: {flag}");
    }
    if let Some(f) = &report.failure {
        let _ = writeln!(out, "# failure: {f}");
    }
    let mut header = vec![
        "level", "N", "h", "dt", "steps", "max_newton_iters", "fallback_steps", "E1", "E2", "P1", "P2",
    ]
    .into_iter()
    .map(String::from)
    .collect::<Vec<_>>();
    if let Some(first) = report.levels.first() {
        header.extend(first.diagnostics.norms.named().iter().map(|(n, _)| n.to_string()));
    }
    header.extend(
        ["energy_balance_ratio", "flux_residual", "weak_continuity_mismatch", "weak_momentum_mismatch"]
            .map(String::from),
    );
    header.extend(["min_positivity_margin", "identities_pass", "cauchy_rho_l1l1", "cauchy_u_l2l2"].map(String::from));
    for n in ORDER_NAMES {
        header.push(format!("order_{n}"));
        header.push(format!("floor_{n}"));
    }
    header.extend(["order_cauchy_rho", "order_cauchy_u"].map(String::from));
    out.push_str(&header.join(","));
    out.push('\n');

    let orders = report.rates.as_ref().map(|r| &r.orders);
    for (l, lv) in report.levels.iter().enumerate() {
        let d = &lv.diagnostics;
        let mut row = vec![
            l.to_string(),
            lv.cells.to_string(),
            num(lv.h),
            num(lv.dt),
            lv.steps.to_string(),
            lv.max_newton_iterations.to_string(),
            lv.fallback_steps.to_string(),
            num(lv.e1),
            num(lv.e2),
            num(lv.p1),
            num(lv.p2),
        ];
        row.extend(d.norms.named().iter().map(|(_, v)| num(*v)));
        row.push(num(d.energy.worst_ratio()));
        row.push(d.final_flux().map(|f| num(f.residual())).unwrap_or_default());
        row.push(d.weak_continuity.map(|w| num(w.mismatch())).unwrap_or_default());
        row.push(d.weak_momentum.map(|w| num(w.mismatch())).unwrap_or_default());
        row.push(if d.positivity.is_empty() { String::new() } else { num(d.min_positivity_margin()) });
        row.push(d.all_passed().to_string());
        row.push(report.cauchy_rho.get(l).map(|v| num(*v)).unwrap_or_default());
        row.push(report.cauchy_u.get(l).map(|v| num(*v)).unwrap_or_default());
        let pair = orders.and_then(|o| o.get(l));
        for (c, floor) in report.floors.iter().enumerate() {
            row.push(order_cell(pair.map(|p| &p[c])));
            row.push(if pair.is_some() { num(*floor) } else { String::new() });
        }
        let cauchy = report.cauchy_orders.get(l);
        row.push(order_cell(cauchy.map(|c| &c[0])));
        row.push(order_cell(cauchy.map(|c| &c[1])));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_report(report: &RefinementReport, path: &Path, echo: &str) -> Result<()> {
    write_file(path, &report_csv(report, echo))
}

/// Identity residuals against their tolerances.
pub fn diagnostics_summary(d: &DiagnosticsReport) -> String {
    let mut out = String::new();
    for c in &d.checks {
        let _ = writeln!(
            out,
            "{:<4} {:<48} {} <= {}",
            if c.passed() { "PASS" } else { "FAIL" },
            c.name,
            num(c.value),
            num(c.tolerance)
        );
    }
    if !d.positivity.is_empty() {
        let _ = writeln!(
            out,
            "INFO min margin against min rho_prev / (1 + dt max|u|): {}",
            num(d.min_positivity_margin())
        );
    }
    out
}

pub fn refinement_summary(report: &RefinementReport) -> String {
    let mut out = format!("scenario {}\n", report.scenario.name);
    for flag in &report.flags {
        let _ = writeln!(out, "flag: {flag}");
    }
    for lv in &report.levels {
        let _ = writeln!(out, "\nlevel N = {} ({} steps)", lv.cells, lv.steps);
        out.push_str(&diagnostics_summary(&lv.diagnostics));
    }
    if let Some(rates) = &report.rates {
        let _ = writeln!(out, "\nobserved orders (floor - slack):");
        for (l, row) in rates.orders.iter().enumerate() {
            let (a, b) = (report.levels[l].cells, report.levels[l + 1].cells);
            for ((name, o), floor) in ORDER_NAMES.iter().zip(row).zip(report.floors) {
                let _ = writeln!(out, "  {a}->{b} {name}: {o} (floor {})", num(floor));
            }
        }
        let _ = writeln!(out, "rho^(gamma+1) spread max/min: {}", num(rates.integrability_spread));
    }
    if let Some(f) = &report.failure {
        let _ = writeln!(out, "\nFAILURE: {f}");
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_file(path, text)
}
