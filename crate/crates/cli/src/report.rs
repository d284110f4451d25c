use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// `null` when the measurement itself failed.
    pub defect: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
    pub meta: Meta,
}

impl Report {
    pub fn new(seed: u64) -> Self {
        Report { checks: Vec::new(), meta: Meta { seed, version: env!("CARGO_PKG_VERSION").to_string() } }
    }

    pub fn push(&mut self, name: impl Into<String>, defect: f64, tol: f64) {
        let pass = defect.is_finite() && defect <= tol;
        self.checks.push(Check { name: name.into(), defect, tol, pass });
    }

    /// Records a failed measurement as a failing check and reports why.
    pub fn measure(&mut self, name: impl Into<String>, tol: f64, f: impl FnOnce() -> rpencil::Result<f64>) {
        let name = name.into();
        match f() {
            Ok(v) => self.push(name, v, tol),
            Err(e) => {
                eprintln!("{name}: {e}");
                self.checks.push(Check { name, defect: f64::NAN, tol, pass: false });
            }
        }
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }

    pub fn sorted_json(&mut self) -> String {
        self.checks.sort_by(|a, b| a.name.cmp(&b.name));
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_and_nan_is_null() {
        let mut r = Report::new(3);
        r.push("b", 1e-3, 1e-2);
        r.push("a", f64::NAN, 1e-2);
        let v: serde_json::Value = serde_json::from_str(&r.sorted_json()).unwrap();
        assert_eq!(v["checks"][0]["name"], "a");
        assert!(v["checks"][0]["defect"].is_null());
        assert_eq!(v["checks"][1]["pass"], true);
        assert_eq!(r.failures(), vec!["a"]);
    }
}
