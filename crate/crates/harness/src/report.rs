//! Plain `key = value` run reports.

use std::fmt::Write as _;

use dobac_core::analysis::{bound_check, run_metrics, BoundCheck, RunMetrics};
use dobac_core::{Result, RunLog, Scenario, Vector};

#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: String,
    pub mode: String,
    pub rows: usize,
    pub metrics: RunMetrics,
    pub bounds: BoundCheck,
}

fn fmt_vec(v: &Vector) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", parts.join(", "))
}

impl Report {
    pub fn build(log: &RunLog, sc: &Scenario, window: (f64, f64)) -> Result<Self> {
        Ok(Report {
            scenario: sc.name.clone(),
            mode: sc.rejection.mode.to_string(),
            rows: log.len(),
            metrics: run_metrics(log, window.0, window.1)?,
            bounds: bound_check(log, sc, window.0, window.1)?,
        })
    }

    /// All numeric entries, metrics first.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        let mut out = self.metrics.entries();
        out.extend(self.bounds.entries());
        out
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.entries().into_iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    pub fn render(&self, sc: &Scenario) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# dobac run report");
        let _ = writeln!(s, "# observer: reduced-order extended state observer, gain l = {}", sc.observer.gain);
        let _ = writeln!(
            s,
            "# initial: x = {}, x_r = {}, u_drj = {}",
            fmt_vec(&sc.initial.x),
            fmt_vec(&sc.initial.x_r),
            sc.initial.u_drj
        );
        let _ = writeln!(s, "# parameter bounds b_* are sups over the projection sets, not the trajectory");
        let _ = writeln!(s, "# eps_eta = max(sup |eta| after t_settle, b_e_dhat_dot / k_eta)");
        let _ = writeln!(s, "scenario = {}", self.scenario);
        let _ = writeln!(s, "mode = {}", self.mode);
        let _ = writeln!(s, "rows = {}", self.rows);
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v:.9e}");
        }
        let _ = writeln!(s, "bound_holds = {}", self.bounds.holds());
        s
    }
}

/// Reads the numeric `key = value` lines of a rendered report.
pub fn parse_numbers(text: &str) -> Vec<(String, f64)> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| l.split_once('='))
        .filter_map(|(k, v)| v.trim().parse::<f64>().ok().map(|v| (k.trim().to_string(), v)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_skips_comments_and_text() {
        let got = parse_numbers("# a = 1\nmode = direct\nrms_e = 2.5e-1\nrows = 3\n");
        assert_eq!(got, vec![("rms_e".to_string(), 0.25), ("rows".to_string(), 3.0)]);
    }
}
