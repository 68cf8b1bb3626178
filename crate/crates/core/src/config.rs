//! Flat `section.key = value` run configuration and the named data registry.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::analysis::{Coupling, ManufacturedSolution};
use crate::discretization::{Bounds, Data, ProblemConfig};
use crate::error::{Error, Result};
use crate::mesh::Rect;

/// Resolves a registry selector such as `constant:0.5` or `target_disk:0.5,0.5,0.2,1`.
pub fn data_from_selector(selector: &str) -> std::result::Result<Data, String> {
    let (name, args) = match selector.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (selector.trim(), None),
    };
    let numbers = |expected: usize| -> std::result::Result<Vec<f64>, String> {
        let a = args.ok_or_else(|| format!("`{name}` expects {expected} parameter(s)"))?;
        let v = a
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| format!("bad parameter `{s}`: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if v.len() != expected {
            return Err(format!("`{name}` expects {expected} parameter(s), got {}", v.len()));
        }
        Ok(v)
    };
    let no_args = || match args {
        Some(_) => Err(format!("`{name}` takes no parameters")),
        None => Ok(()),
    };
    match name {
        "zero" => {
            no_args()?;
            Ok(Data::zero())
        }
        "constant" => Ok(Data::constant(numbers(1)?[0])),
        "sine2d" => {
            let a = numbers(1)?[0];
            Ok(Data::function(move |_, x| a * (PI * x[0]).sin() * (PI * x[1]).sin()))
        }
        "sep_exp" => {
            no_args()?;
            Ok(Data::function(|t, x| (-t).exp() * (PI * x[0]).sin() * (PI * x[1]).sin()))
        }
        "sep_exp_source" => {
            let eps = numbers(1)?[0];
            if !(eps > 0.0) {
                return Err("`sep_exp_source` needs a positive epsilon".into());
            }
            Ok(ManufacturedSolution::allen_cahn(eps).source_data())
        }
        "target_disk" => {
            let v = numbers(4)?;
            let (cx, cy, r, value) = (v[0], v[1], v[2], v[3]);
            Ok(Data::function(move |_, x| {
                if (x[0] - cx).powi(2) + (x[1] - cy).powi(2) <= r * r {
                    value
                } else {
                    0.0
                }
            }))
        }
        _ => Err(format!(
            "unknown data function `{name}` (known: zero, constant:c, sine2d:a, sep_exp, sep_exp_source:eps, target_disk:cx,cy,r,v)"
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyName {
    Manufactured,
    Heat,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Vtk,
}

/// Typed view of a configuration file; `entries` keeps the normalized text.
#[derive(Debug, Clone)]
pub struct RunConfig {
    entries: Vec<(String, String)>,
    pub problem: ProblemConfig,
    pub y0: String,
    pub yd: String,
    pub y_omega: String,
    pub source: String,
    pub control: String,
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    pub steps: usize,
    pub coupling: Coupling,
    pub levels: usize,
    pub study: StudyName,
    pub opt_tol: f64,
    pub opt_max_iter: usize,
    pub eig_tol: f64,
    pub check_k: Option<f64>,
    pub check_h: Option<f64>,
    pub check_r: u32,
    pub check_d: u32,
    pub check_c0: f64,
    pub out_dir: PathBuf,
    pub formats: Vec<OutputFormat>,
    pub threads: usize,
}

pub const KEYS: &[&str] = &[
    "problem.epsilon",
    "problem.mu",
    "problem.gamma",
    "problem.u_a",
    "problem.u_b",
    "problem.t_final",
    "problem.y0",
    "problem.yd",
    "problem.y_omega",
    "problem.source",
    "problem.control",
    "problem.nonlinear",
    "problem.mass_lumping",
    "discretization.rect",
    "discretization.nx",
    "discretization.ny",
    "discretization.steps",
    "discretization.coupling",
    "discretization.levels",
    "solver.newton_tol",
    "solver.newton_max_iter",
    "solver.cg_tol",
    "solver.cg_max_iter",
    "solver.opt_tol",
    "solver.opt_max_iter",
    "solver.eig_tol",
    "study.kind",
    "check.k",
    "check.h",
    "check.r",
    "check.d",
    "check.c0",
    "output.dir",
    "output.formats",
    "run.threads",
];

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            entries: Vec::new(),
            problem: ProblemConfig::default(),
            y0: "zero".into(),
            yd: "zero".into(),
            y_omega: "zero".into(),
            source: "zero".into(),
            control: "zero".into(),
            rect: Rect::UNIT,
            nx: 8,
            ny: 8,
            steps: 8,
            coupling: Coupling::Quadratic,
            levels: 3,
            study: StudyName::Manufactured,
            opt_tol: 1e-8,
            opt_max_iter: 500,
            eig_tol: 1e-10,
            check_k: None,
            check_h: None,
            check_r: 1,
            check_d: 2,
            check_c0: 1.0,
            out_dir: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv, OutputFormat::Vtk],
            threads: 1,
        }
    }
}

fn parse_value<T: FromStr>(v: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("cannot parse `{v}`: {e}"))
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got `{v}`")),
    }
}

impl RunConfig {
    /// Parses `section.key = value` lines; `#` and `;` start comment lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                field: line.to_string(),
                message: "expected `section.key = value`".into(),
            })?;
            lines.push((i + 1, key.trim().to_string(), value.trim().to_string()));
        }
        Self::from_lines(lines)
    }

    fn from_lines(lines: Vec<(usize, String, String)>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (line, key, value) in lines {
            cfg.apply(&key, &value).map_err(|message| Error::Parse {
                line,
                field: key.clone(),
                message,
            })?;
            match cfg.entries.iter_mut().find(|(k, _)| *k == key) {
                Some(e) => e.1 = value,
                None => cfg.entries.push((key, value)),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies a `section.key=value` override (line 0 in errors).
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| Error::Parse {
            line: 0,
            field: assignment.to_string(),
            message: "override must look like section.key=value".into(),
        })?;
        let mut lines: Vec<(usize, String, String)> = self.entries.iter().map(|(k, v)| (0, k.clone(), v.clone())).collect();
        lines.push((0, key.trim().to_string(), value.trim().to_string()));
        *self = Self::from_lines(lines)?;
        Ok(())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    fn apply(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        match key {
            "problem.epsilon" => self.problem.epsilon = parse_value(v)?,
            "problem.mu" => self.problem.mu = parse_value(v)?,
            "problem.gamma" => self.problem.gamma = parse_value(v)?,
            "problem.u_a" => self.problem.bounds.lower = parse_value(v)?,
            "problem.u_b" => self.problem.bounds.upper = parse_value(v)?,
            "problem.t_final" => self.problem.t_final = parse_value(v)?,
            "problem.y0" => {
                self.problem.y0 = data_from_selector(v)?;
                self.y0 = v.into();
            }
            "problem.yd" => {
                self.problem.yd = data_from_selector(v)?;
                self.yd = v.into();
            }
            "problem.y_omega" => {
                self.problem.y_omega = data_from_selector(v)?;
                self.y_omega = v.into();
            }
            "problem.source" => {
                data_from_selector(v)?;
                self.source = v.into();
            }
            "problem.control" => {
                data_from_selector(v)?;
                self.control = v.into();
            }
            "problem.nonlinear" => self.problem.nonlinear = parse_bool(v)?,
            "problem.mass_lumping" => self.problem.mass_lumping = parse_bool(v)?,
            "discretization.rect" => {
                let c = v
                    .split(',')
                    .map(|s| parse_value::<f64>(s.trim()))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                if c.len() != 4 {
                    return Err("rect needs x0,y0,x1,y1".into());
                }
                self.rect = Rect::new(c[0], c[1], c[2], c[3]).map_err(|e| e.to_string())?;
            }
            "discretization.nx" => self.nx = parse_value(v)?,
            "discretization.ny" => self.ny = parse_value(v)?,
            "discretization.steps" => self.steps = parse_value(v)?,
            "discretization.coupling" => {
                self.coupling = match v {
                    "h" | "linear" => Coupling::Linear,
                    "h2" | "quadratic" => Coupling::Quadratic,
                    _ => return Err(format!("coupling must be `h` or `h2`, got `{v}`")),
                }
            }
            "discretization.levels" => self.levels = parse_value(v)?,
            "solver.newton_tol" => self.problem.newton_tol = parse_value(v)?,
            "solver.newton_max_iter" => self.problem.newton_max_iter = parse_value(v)?,
            "solver.cg_tol" => self.problem.cg_tol = parse_value(v)?,
            "solver.cg_max_iter" => self.problem.cg_max_iter = parse_value(v)?,
            "solver.opt_tol" => self.opt_tol = parse_value(v)?,
            "solver.opt_max_iter" => self.opt_max_iter = parse_value(v)?,
            "solver.eig_tol" => self.eig_tol = parse_value(v)?,
            "study.kind" => {
                self.study = match v {
                    "manufactured" => StudyName::Manufactured,
                    "heat" => StudyName::Heat,
                    "control" => StudyName::Control,
                    _ => return Err(format!("study kind must be manufactured, heat or control, got `{v}`")),
                }
            }
            "check.k" => self.check_k = Some(parse_value(v)?),
            "check.h" => self.check_h = Some(parse_value(v)?),
            "check.r" => self.check_r = parse_value(v)?,
            "check.d" => self.check_d = parse_value(v)?,
            "check.c0" => self.check_c0 = parse_value(v)?,
            "output.dir" => self.out_dir = PathBuf::from(v),
            "output.formats" => {
                self.formats = v
                    .split(',')
                    .map(|f| match f.trim() {
                        "csv" => Ok(OutputFormat::Csv),
                        "vtk" => Ok(OutputFormat::Vtk),
                        other => Err(format!("unknown output format `{other}`")),
                    })
                    .collect::<std::result::Result<_, _>>()?;
            }
            "run.threads" => self.threads = parse_value(v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        Bounds::new(self.problem.bounds.lower, self.problem.bounds.upper)?;
        self.problem.validate()?;
        if self.nx == 0 || self.ny == 0 || self.steps == 0 {
            return Err(Error::domain("nx, ny and steps must be positive"));
        }
        if self.threads == 0 {
            return Err(Error::domain("run.threads must be at least 1"));
        }
        Ok(())
    }

    pub fn source_data(&self) -> Data {
        data_from_selector(&self.source).expect("validated at parse time")
    }

    pub fn control_data(&self) -> Data {
        data_from_selector(&self.control).expect("validated at parse time")
    }

    pub fn writes(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# tracking run
problem.epsilon = 0.25
problem.mu=1e-2
problem.yd = sine2d:0.5
problem.u_a = -2
problem.u_b = 2

discretization.nx = 16
discretization.coupling = h2
output.formats = csv
";

    #[test]
    fn parses_and_round_trips() {
        let c = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.problem.epsilon, 0.25);
        assert_eq!(c.problem.bounds, Bounds { lower: -2.0, upper: 2.0 });
        assert_eq!(c.nx, 16);
        assert_eq!(c.formats, vec![OutputFormat::Csv]);
        let text = c.to_string();
        let again = RunConfig::parse(&text).unwrap();
        assert_eq!(again.to_string(), text);
        assert_eq!(again.entries(), c.entries());
        assert_eq!(text.lines().count(), 8);
    }

    #[test]
    fn errors_carry_line_and_field() {
        match RunConfig::parse("problem.mu = 0.1\nproblem.epsilon = abc\n") {
            Err(Error::Parse { line, field, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(field, "problem.epsilon");
            }
            other => panic!("{other:?}"),
        }
        match RunConfig::parse("\n\nproblem.yd = nonsense\n") {
            Err(Error::Parse { line, field, message }) => {
                assert_eq!(line, 3);
                assert_eq!(field, "problem.yd");
                assert!(message.contains("unknown data function"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(RunConfig::parse("bogus.key = 1"), Err(Error::Parse { .. })));
        assert!(matches!(RunConfig::parse("no equals sign"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(RunConfig::parse("problem.u_a = 3\nproblem.u_b = 1"), Err(Error::Domain(_))));
    }

    #[test]
    fn overrides_replace_entries() {
        let mut c = RunConfig::parse(SAMPLE).unwrap();
        c.set("problem.epsilon=0.5").unwrap();
        c.set("run.threads = 4").unwrap();
        assert_eq!(c.problem.epsilon, 0.5);
        assert_eq!(c.threads, 4);
        assert!(c.to_string().contains("problem.epsilon = 0.5\n"));
        assert!(c.set("problem.epsilon").is_err());
    }

    #[test]
    fn registry_selectors() {
        let p = [0.5, 0.5];
        let eval = |s: &str, t: f64| match data_from_selector(s).unwrap() {
            Data::Function(f) => f(t, p),
            Data::Nodal(_) => unreachable!(),
        };
        assert_eq!(eval("zero", 0.0), 0.0);
        assert_eq!(eval("constant:2.5", 0.0), 2.5);
        assert!((eval("sine2d:0.5", 0.0) - 0.5).abs() < 1e-15);
        assert!((eval("sep_exp", 1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(eval("target_disk:0.5,0.5,0.1,3", 0.0), 3.0);
        assert_eq!(eval("target_disk:0,0,0.1,3", 0.0), 0.0);
        assert!(data_from_selector("constant").is_err());
        assert!(data_from_selector("zero:1").is_err());
        assert!(data_from_selector("target_disk:1,2").is_err());
    }

    #[test]
    fn every_listed_key_is_accepted() {
        let values = [
            ("problem.epsilon", "0.5"), ("problem.mu", "0.1"), ("problem.gamma", "0"),
            ("problem.u_a", "-1"), ("problem.u_b", "1"), ("problem.t_final", "1"),
            ("problem.y0", "zero"), ("problem.yd", "zero"), ("problem.y_omega", "zero"),
            ("problem.source", "zero"), ("problem.control", "zero"), ("problem.nonlinear", "true"),
            ("problem.mass_lumping", "false"), ("discretization.rect", "0,0,1,1"),
            ("discretization.nx", "4"), ("discretization.ny", "4"), ("discretization.steps", "4"),
            ("discretization.coupling", "h"), ("discretization.levels", "3"),
            ("solver.newton_tol", "1e-10"), ("solver.newton_max_iter", "20"), ("solver.cg_tol", "1e-10"),
            ("solver.cg_max_iter", "100"), ("solver.opt_tol", "1e-8"), ("solver.opt_max_iter", "10"),
            ("solver.eig_tol", "1e-9"), ("study.kind", "heat"), ("check.k", "0.01"), ("check.h", "0.1"),
            ("check.r", "2"), ("check.d", "3"), ("check.c0", "1"), ("output.dir", "x"),
            ("output.formats", "csv,vtk"), ("run.threads", "2"),
        ];
        assert_eq!(values.len(), KEYS.len());
        let text: String = values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        let c = RunConfig::parse(&text).unwrap();
        assert_eq!(c.to_string(), text);
    }
}
