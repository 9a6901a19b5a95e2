//! Damped least-squares fitting of closed-form angle surfaces and of the
//! period cubic.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::tau_period;
use crate::sequence::AngleExpr;

pub const MAX_ITERATIONS: usize = 200;
pub const STEP_TOL: f64 = 1e-10;

/// Closed forms in one variable `x` (γ for angle surfaces).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitForm {
    /// a + b·cos(c x) + d·sin(c x)
    TrigGamma,
    /// a·e^{b x} + c·e^{d x}
    Exp2,
    /// c3 x³ + c2 x² + c1 x + c0
    Cubic,
}

impl FitForm {
    pub fn arity(self) -> usize {
        4
    }

    pub fn name(self) -> &'static str {
        match self {
            FitForm::TrigGamma => "trig_gamma",
            FitForm::Exp2 => "exp2",
            FitForm::Cubic => "cubic",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "trig_gamma" => Some(FitForm::TrigGamma),
            "exp2" => Some(FitForm::Exp2),
            "cubic" => Some(FitForm::Cubic),
            _ => None,
        }
    }

    pub fn eval(self, p: &[f64], x: f64) -> f64 {
        match self {
            FitForm::TrigGamma => p[0] + p[1] * (p[2] * x).cos() + p[3] * (p[2] * x).sin(),
            FitForm::Exp2 => p[0] * (p[1] * x).exp() + p[2] * (p[3] * x).exp(),
            FitForm::Cubic => ((p[0] * x + p[1]) * x + p[2]) * x + p[3],
        }
    }

    /// Partial derivatives with respect to each coefficient.
    pub fn gradient(self, p: &[f64], x: f64) -> [f64; 4] {
        match self {
            FitForm::TrigGamma => {
                let (s, c) = (p[2] * x).sin_cos();
                [1.0, c, x * (-p[1] * s + p[3] * c), s]
            }
            FitForm::Exp2 => {
                let (e1, e2) = ((p[1] * x).exp(), (p[3] * x).exp());
                [e1, p[0] * x * e1, e2, p[2] * x * e2]
            }
            FitForm::Cubic => [x * x * x, x * x, x, 1.0],
        }
    }

    /// The form as an expression in `gamma`.
    pub fn expr(self, p: &[f64]) -> AngleExpr {
        match self {
            FitForm::TrigGamma => AngleExpr::trig_gamma(p[0], p[1], p[2], p[3]),
            FitForm::Exp2 => AngleExpr::exp2(p[0], p[1], p[2], p[3]),
            FitForm::Cubic => AngleExpr::cubic(p[0], p[1], p[2], p[3]),
        }
    }

    /// Pick one representative among equivalent coefficient vectors.
    pub fn canonicalize(self, p: &mut [f64]) {
        match self {
            FitForm::TrigGamma if p[2] < 0.0 => {
                p[2] = -p[2];
                p[3] = -p[3];
            }
            FitForm::Exp2 if p[1] > p[3] => {
                p.swap(0, 2);
                p.swap(1, 3);
            }
            _ => {}
        }
    }

    /// Data-driven starting point.
    pub fn initial_guess(self, samples: &[(f64, f64)]) -> Vec<f64> {
        let n = samples.len().max(1) as f64;
        let mean = samples.iter().map(|s| s.1).sum::<f64>() / n;
        match self {
            FitForm::TrigGamma => {
                let mut sorted = samples.to_vec();
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                let half = match (sorted.first(), sorted.last()) {
                    (Some(f), Some(l)) => (l.1 - f.1) / 2.0,
                    _ => 0.0,
                };
                // cos(x) falls on [0, 1], so a rising series needs b < 0
                vec![mean, -half, 1.0, 0.0]
            }
            FitForm::Exp2 => {
                let sign = if mean < 0.0 { -1.0 } else { 1.0 };
                let pts: Vec<(f64, f64)> = samples
                    .iter()
                    .filter(|s| s.1.abs() > 1e-300)
                    .map(|s| (s.0, s.1.abs().ln()))
                    .collect();
                let (a, b) = linear_regression(&pts).unwrap_or((mean.abs().max(1e-3).ln(), 0.0));
                let amp = sign * a.exp() / 2.0;
                vec![amp, b - 1.0, amp, b / 10.0]
            }
            FitForm::Cubic => vec![0.0, 0.0, 0.0, mean],
        }
    }
}

fn linear_regression(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitModel {
    pub form: FitForm,
    /// Derived from the data when absent.
    pub initial_guess: Option<Vec<f64>>,
}

impl FitModel {
    pub fn new(form: FitForm) -> Self {
        Self {
            form,
            initial_guess: None,
        }
    }

    pub fn with_guess(form: FitForm, guess: Vec<f64>) -> Self {
        Self {
            form,
            initial_guess: Some(guess),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub form: FitForm,
    pub coefficients: Vec<f64>,
    pub rms_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// rms after each accepted step, starting with the initial guess.
    pub rms_history: Vec<f64>,
}

impl FitResult {
    pub fn eval(&self, x: f64) -> f64 {
        self.form.eval(&self.coefficients, x)
    }
}

fn rms(form: FitForm, p: &[f64], samples: &[(f64, f64)]) -> f64 {
    let sse: f64 = samples.iter().map(|&(x, y)| (y - form.eval(p, x)).powi(2)).sum();
    (sse / samples.len() as f64).sqrt()
}

/// Solve the 4x4 system in place by Gaussian elimination with partial pivoting.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        let p = a[piv][col].abs();
        if p.is_nan() || p <= 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Levenberg–Marquardt with Marquardt diagonal scaling.
///
/// Only steps that lower the residual are accepted. Stops when the relative
/// step falls below [`STEP_TOL`] or after [`MAX_ITERATIONS`].
pub fn fit(model: &FitModel, samples: &[(f64, f64)]) -> Result<FitResult> {
    let form = model.form;
    let k = form.arity();
    if samples.len() < k {
        return Err(Error::InsufficientData {
            needed: k,
            got: samples.len(),
        });
    }
    let mut p = match &model.initial_guess {
        Some(g) if g.len() == k => g.clone(),
        Some(g) => return Err(Error::LengthMismatch(g.len(), k)),
        None => form.initial_guess(samples),
    };
    let mut cur = rms(form, &p, samples);
    if !cur.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "initial guess {p:?} gives non-finite residual"
        )));
    }
    let mut history = vec![cur];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for &(x, y) in samples {
            let g = form.gradient(&p, x);
            let r = y - form.eval(&p, x);
            for i in 0..4 {
                jtr[i] += g[i] * r;
                for j in 0..4 {
                    jtj[i][j] += g[i] * g[j];
                }
            }
        }
        let max_diag = (0..4).map(|i| jtj[i][i]).fold(0.0, f64::max);
        if max_diag <= 0.0 || !max_diag.is_finite() {
            return Err(Error::SingularJacobian {
                iterations,
                best: p,
                rms: cur,
            });
        }
        let floor = 1e-12 * max_diag;

        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj;
            for i in 0..4 {
                a[i][i] += lambda * jtj[i][i].max(floor);
            }
            let Some(step) = solve4(a, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step).map(|(v, s)| v + s).collect();
            let norm_p = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            let norm_s = step.iter().map(|v| v * v).sum::<f64>().sqrt();
            let small = norm_s <= STEP_TOL * (norm_p + STEP_TOL);
            let next = rms(form, &trial, samples);
            if next.is_finite() && next < cur {
                p = trial;
                cur = next;
                history.push(cur);
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                converged = small;
                break;
            }
            if small {
                converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if converged {
            break;
        }
        if !accepted {
            // damping saturated without progress: at a minimum to working precision
            converged = cur.is_finite();
            break;
        }
    }
    form.canonicalize(&mut p);
    Ok(FitResult {
        form,
        coefficients: p,
        rms_residual: cur,
        iterations,
        converged,
        rms_history: history,
    })
}

/// One row of a pointwise angle table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSample {
    pub gamma: f64,
    pub tau: f64,
    pub slot: String,
    pub angle: f64,
}

/// How one gene slot is turned into a surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotSpec {
    pub slot: String,
    pub model: FitModel,
    /// Surface is `form(γ)·τ` rather than `form(γ)`.
    pub tau_scaled: bool,
    /// Branch period of the angle (values differing by it are equivalent).
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceFit {
    pub slot: String,
    pub tau_scaled: bool,
    pub fit: FitResult,
    /// The (γ, value) samples the form was fitted to.
    pub samples: Vec<(f64, f64)>,
}

impl SurfaceFit {
    pub fn expr(&self) -> AngleExpr {
        let e = self.fit.form.expr(&self.fit.coefficients);
        if self.tau_scaled {
            AngleExpr::linear_tau(e)
        } else {
            e
        }
    }
}

/// Shift each value by a multiple of `period` to minimize jumps.
pub fn unwrap(values: &mut [f64], period: f64) {
    for i in 1..values.len() {
        let d = values[i] - values[i - 1];
        values[i] -= period * (d / period).round();
    }
}

fn circular_mean(values: &[f64], period: f64) -> f64 {
    let w = std::f64::consts::TAU / period;
    let (s, c) = values
        .iter()
        .fold((0.0, 0.0), |(s, c), v| (s + (w * v).sin(), c + (w * v).cos()));
    s.atan2(c) / w
}

/// Median after mapping every value to the branch nearest the circular mean.
/// Nodes where a slot is only weakly constrained produce outliers, which a
/// mean would absorb.
fn circular_median(values: &[f64], period: f64) -> f64 {
    let m = circular_mean(values, period);
    let mut v: Vec<f64> = values
        .iter()
        .map(|x| x + period * ((m - x) / period).round())
        .collect();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

fn distinct(mut v: Vec<f64>) -> usize {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Fit one surface per slot from a pointwise table.
///
/// τ-scaled slots: each γ row is unwrapped along τ and shifted so its
/// intercept is near zero, then a slope through the origin is taken and the
/// form is fitted to slope(γ). Other slots: the circular median per γ is
/// unwrapped across γ and fitted directly.
pub fn fit_angle_surfaces(table: &[AngleSample], specs: &[SlotSpec]) -> Result<Vec<SurfaceFit>> {
    let gammas = distinct(table.iter().map(|r| r.gamma).collect());
    let taus = distinct(table.iter().map(|r| r.tau).collect());
    if gammas < 4 || taus < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: gammas.min(taus),
        });
    }
    specs.iter().map(|spec| fit_slot(table, spec)).collect()
}

fn fit_slot(table: &[AngleSample], spec: &SlotSpec) -> Result<SurfaceFit> {
    let mut rows: Vec<&AngleSample> = table.iter().filter(|r| r.slot == spec.slot).collect();
    rows.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.tau.total_cmp(&b.tau)));
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for group in rows.chunk_by(|a, b| a.gamma == b.gamma) {
        let gamma = group[0].gamma;
        let mut ys: Vec<f64> = group.iter().map(|r| r.angle).collect();
        if spec.tau_scaled {
            let ts: Vec<f64> = group.iter().map(|r| r.tau).collect();
            unwrap(&mut ys, spec.period);
            let pts: Vec<(f64, f64)> = ts.iter().copied().zip(ys.iter().copied()).collect();
            let intercept = linear_regression(&pts).map_or(ys[0], |(a, _)| a);
            let shift = spec.period * (intercept / spec.period).round();
            let (num, den) = pts
                .iter()
                .fold((0.0, 0.0), |(n, d), &(t, y)| (n + t * (y - shift), d + t * t));
            if den > 0.0 {
                samples.push((gamma, num / den));
            }
        } else {
            samples.push((gamma, circular_median(&ys, spec.period)));
        }
    }
    if !spec.tau_scaled {
        let mut ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        unwrap(&mut ys, spec.period);
        let shift = spec.period * (ys[0] / spec.period).floor();
        for (s, y) in samples.iter_mut().zip(ys) {
            s.1 = y - shift;
        }
    }
    let fit = fit(&spec.model, &samples)?;
    Ok(SurfaceFit {
        slot: spec.slot.clone(),
        tau_scaled: spec.tau_scaled,
        fit,
        samples,
    })
}

/// (γ, period in sequence τ) samples for the period cubic.
pub fn period_samples(gammas: &[f64]) -> Result<Vec<(f64, f64)>> {
    gammas.iter().map(|&g| Ok((g, tau_period(g)?))).collect()
}

pub fn read_angle_table<R: Read>(reader: R) -> Result<Vec<AngleSample>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["gamma", "tau", "slot", "angle"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::InvalidConfig(format!(
            "angle table header must be {}",
            expected.join(",")
        )));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_angle_table<W: Write>(writer: W, rows: &[AngleSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["gamma", "tau", "slot", "angle"])?;
    for r in rows {
        w.write_record([
            r.gamma.to_string(),
            r.tau.to_string(),
            r.slot.clone(),
            r.angle.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_surfaces<W: Write>(writer: W, fits: &[SurfaceFit]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["slot", "form", "c1", "c2", "c3", "c4", "rms"])?;
    for f in fits {
        let c = &f.fit.coefficients;
        let mut rec = vec![f.slot.clone(), form_label(f.fit.form, f.tau_scaled)];
        rec.extend(c.iter().map(|v| v.to_string()));
        rec.push(f.fit.rms_residual.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Form label in surface CSVs; τ-scaled surfaces carry a `*tau` suffix.
pub fn form_label(form: FitForm, tau_scaled: bool) -> String {
    if tau_scaled {
        format!("{}*tau", form.name())
    } else {
        form.name().to_owned()
    }
}

pub fn parse_form_label(s: &str) -> Option<(FitForm, bool)> {
    match s.strip_suffix("*tau") {
        Some(base) => FitForm::from_name(base).map(|f| (f, true)),
        None => FitForm::from_name(s).map(|f| (f, false)),
    }
}

/// Read a surfaces CSV back into (slot, expression) pairs.
pub fn read_surfaces<R: Read>(reader: R) -> Result<Vec<(String, AngleExpr)>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 6 {
            return Err(Error::InvalidConfig(format!("short surface row: {rec:?}")));
        }
        let (form, scaled) = parse_form_label(&rec[1])
            .ok_or_else(|| Error::InvalidConfig(format!("unknown form '{}'", &rec[1])))?;
        let coeffs = (2..6)
            .map(|i| {
                rec[i]
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad coefficient '{}'", &rec[i])))
            })
            .collect::<Result<Vec<_>>>()?;
        let e = form.expr(&coeffs);
        out.push((
            rec[0].to_owned(),
            if scaled { AngleExpr::linear_tau(e) } else { e },
        ));
    }
    Ok(out)
}
