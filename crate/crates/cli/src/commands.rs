use std::f64::consts::TAU;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use dmsim::dynamics::{
    aed, concurrence_trajectory, period_taus, preservation_trajectory, write_trajectories, AedResult, Method,
    Trajectory,
};
use dmsim::fitting::{
    fit as fit_curve, fit_angle_surfaces, form_label, parse_form_label, period_samples, read_angle_table,
    write_angle_table, write_surfaces, FitForm, FitModel, SlotSpec,
};
use dmsim::fpo::{
    optimize_pointwise, optimize_surface, profile, profile_decomposition, FidelityProfile, GAConfig,
    GenStats, Grid, Skeleton, SurfaceSlot,
};
use dmsim::model::{find_period, period_fit_eval, tau_period, PeriodPoly, TargetFamily, DEFAULT_PERIOD_TOL};
use dmsim::quantum::StateVec4;
use dmsim::sequence::{parse_sequence, write_sequence, Decomposition, Source};
use serde::Serialize;

use crate::svg;
use crate::{DynamicsArgs, FitArgs, MethodArg, Mode, OptimizeArgs, PeriodArgs, Switch, Units, ValidateArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Threshold(String),
    Unconverged(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Threshold(_) => 2,
            CliError::Unconverged(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Threshold(m) | CliError::Unconverged(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<dmsim::Error> for CliError {
    fn from(e: dmsim::Error) -> Self {
        match e {
            dmsim::Error::Io(_) => CliError::Io(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| usage(format!("grid '{s}' must look like 31x31")))?;
    let n = |v: &str| match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(usage(format!("bad grid size '{s}'"))),
    };
    Ok((n(a)?, n(b)?))
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let bad = || usage(format!("range '{s}' must look like lo:hi"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = a.trim().parse().map_err(|_| bad())?;
    let hi: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn seconds_to_tau(units: Units, seconds: f64) -> Result<f64> {
    match units.j_hz {
        Some(j) if j.is_finite() && j > 0.0 && seconds.is_finite() => Ok(TAU * j * seconds),
        Some(j) => Err(usage(format!("--j-hz must be positive, got {j}"))),
        None => Err(usage("time in seconds needs --j-hz")),
    }
}

fn build_grid(grid: &str, gamma: (f64, f64), tau: (f64, f64)) -> Result<Grid> {
    let (ng, nt) = parse_grid(grid)?;
    if gamma.0 < 0.0 {
        return Err(usage("gamma must be >= 0"));
    }
    Ok(Grid::uniform(gamma, ng, tau, nt)?)
}

/// Fail before any work if an output cannot be placed.
fn check_output(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(CliError::Io(format!(
            "output directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_profile_csv(path: &Path, p: &FidelityProfile) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["gamma", "tau", "fidelity"])?;
    for (g, t, f) in p.rows() {
        w.write_record([g.to_string(), t.to_string(), f.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn validate(a: &ValidateArgs) -> Result<()> {
    let (ng, nt) = parse_grid(&a.grid)?;
    let mut gamma = parse_range(&a.gamma_range)?;
    let mut tau = parse_range(&a.tau_range)?;
    if let Some(t) = a.t_max {
        tau = (0.0, seconds_to_tau(a.units, t)?);
    }
    if let Some(g) = a.gamma {
        if ng != 1 {
            return Err(usage("--gamma needs a single gamma column, e.g. --grid 1x31"));
        }
        gamma = (g, g);
    }
    let fixed_tau = match (a.tau, a.t) {
        (Some(t), _) => Some(t),
        (None, Some(s)) => Some(seconds_to_tau(a.units, s)?),
        _ => None,
    };
    if let Some(t) = fixed_tau {
        if nt != 1 {
            return Err(usage("--tau needs a single tau row, e.g. --grid 31x1"));
        }
        tau = (t, t);
    }
    if !(0.0..=1.0).contains(&a.clip_min) {
        return Err(usage("--clip-min must lie in [0, 1]"));
    }
    let grid = build_grid(&format!("{ng}x{nt}"), gamma, tau)?;

    let (mut csv_out, mut svg_out) = (None, None);
    for path in &a.out {
        check_output(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => csv_out = Some(path),
            Some("svg") => svg_out = Some(path),
            _ => return Err(usage(format!("cannot tell output kind of {}", path.display()))),
        }
    }

    let (label, p) = match &a.sequence {
        Some(path) => {
            let seq = parse_sequence(&read_to_string(path)?)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            (seq.name.clone(), profile(&seq, TargetFamily::DmXy, &grid))
        }
        None => {
            let d: Decomposition = a.decomp.parse().map_err(usage)?;
            if d != Decomposition::Full && gamma.1 > 1.0 {
                return Err(usage(format!(
                    "decomposition {} covers gamma in [0, 1] only",
                    a.decomp
                )));
            }
            (
                format!("decomposition {}", a.decomp),
                profile_decomposition(d, &grid),
            )
        }
    };

    if let Some(path) = csv_out {
        write_profile_csv(path, &p)?;
    }
    if let Some(path) = svg_out {
        let mut w = create(path)?;
        w.write_all(svg::heatmap(&p, a.clip_min, &label).as_bytes())?;
        w.flush()?;
    }
    println!(
        "{label}: min fidelity {:.8} at gamma={}, tau={}; mean {:.8} over {} nodes",
        p.min,
        p.argmin.0,
        p.argmin.1,
        p.mean,
        grid.len()
    );
    if p.min >= a.threshold {
        Ok(())
    } else {
        Err(CliError::Threshold(format!(
            "min fidelity {:.8} below threshold {}",
            p.min, a.threshold
        )))
    }
}

fn skeleton(name: &str) -> Result<Skeleton> {
    Skeleton::by_name(name).ok_or_else(|| usage(format!("unknown skeleton '{name}' (expected A or B)")))
}

fn read_nodes(path: &Path) -> Result<Vec<(f64, f64)>> {
    #[derive(serde::Deserialize)]
    struct Node {
        gamma: f64,
        tau: f64,
    }
    let text = read_to_string(path)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let nodes = rdr
        .deserialize::<Node>()
        .map(|r| r.map(|n| (n.gamma, n.tau)))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if nodes.is_empty() {
        return Err(usage(format!("{}: no nodes", path.display())));
    }
    if nodes
        .iter()
        .any(|&(g, t)| !(g.is_finite() && g >= 0.0 && t.is_finite()))
    {
        return Err(usage(format!(
            "{}: nodes need finite tau and gamma >= 0",
            path.display()
        )));
    }
    Ok(nodes)
}

#[derive(Serialize)]
struct NodeReport<'a> {
    gamma: f64,
    tau: f64,
    genes: &'a [f64],
    identified: &'a [bool],
    fidelity: f64,
    converged: bool,
    generations: usize,
}

#[derive(Serialize)]
struct PointwiseReport<'a> {
    schema: u32,
    skeleton: &'a str,
    slots: &'a [String],
    config: &'a GAConfig,
    min_fidelity: f64,
    nodes: Vec<NodeReport<'a>>,
}

#[derive(Serialize)]
struct SurfaceReport<'a> {
    schema: u32,
    skeleton: &'a str,
    config: &'a GAConfig,
    best_fitness: f64,
    min_fidelity: f64,
    mean_fidelity: f64,
    converged: bool,
    history: &'a [GenStats],
}

pub fn optimize(a: &OptimizeArgs) -> Result<()> {
    let skel = skeleton(&a.skeleton)?;
    let mut cfg = match &a.config {
        Some(path) => GAConfig::from_json(&read_to_string(path)?)?,
        None => GAConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.rng_seed = seed;
    }
    cfg.validate()?;
    check_output(&a.out)?;
    if let Some(r) = &a.report {
        check_output(r)?;
    }
    let grid = build_grid(&a.grid, parse_range(&a.gamma_range)?, parse_range(&a.tau_range)?)?;

    match a.mode {
        Mode::Pointwise => {
            let nodes = match &a.nodes {
                Some(path) => read_nodes(path)?,
                None => grid.nodes(),
            };
            let table = optimize_pointwise(&skel, &nodes, &cfg)?;
            write_angle_table(create(&a.out)?, &table.to_samples())?;
            if let Some(path) = &a.report {
                let nodes = table
                    .rows
                    .iter()
                    .map(|r| NodeReport {
                        gamma: r.gamma,
                        tau: r.tau,
                        genes: &r.genes,
                        identified: &r.identified,
                        fidelity: r.fidelity,
                        converged: r.converged,
                        generations: r.generations,
                    })
                    .collect();
                write_json(
                    path,
                    &PointwiseReport {
                        schema: 1,
                        skeleton: &skel.name,
                        slots: &skel.slot_names,
                        config: &cfg,
                        min_fidelity: table.min_fidelity(),
                        nodes,
                    },
                )?;
            }
            let failed = table.rows.iter().filter(|r| !r.converged).count();
            println!(
                "skeleton {}: {} nodes, min fidelity {:.8}, {} unconverged",
                skel.name,
                table.rows.len(),
                table.min_fidelity(),
                failed
            );
            if failed > 0 {
                return Err(CliError::Unconverged(format!(
                    "{failed} node(s) below target fitness {}",
                    cfg.target_fitness
                )));
            }
        }
        Mode::Surface => {
            if a.nodes.is_some() {
                return Err(usage("surface mode works on --grid, not a node list"));
            }
            let (slots, center, spread) = SurfaceSlot::defaults_for(&skel)?;
            let sol = optimize_surface(&skel, &slots, &grid, &cfg, &center, &spread)?;
            let mut w = csv::Writer::from_writer(create(&a.out)?);
            w.write_record(["slot", "form", "c1", "c2", "c3", "c4"])?;
            for ((name, slot), c) in skel.slot_names.iter().zip(&slots).zip(&sol.coefficients) {
                let mut rec = vec![name.clone(), form_label(slot.form, slot.tau_scaled)];
                rec.extend(c.iter().map(f64::to_string));
                w.write_record(&rec)?;
            }
            w.flush()?;
            if let Some(path) = &a.report {
                write_json(
                    path,
                    &SurfaceReport {
                        schema: 1,
                        skeleton: &skel.name,
                        config: &cfg,
                        best_fitness: sol.run.best_fitness,
                        min_fidelity: sol.profile.min,
                        mean_fidelity: sol.profile.mean,
                        converged: sol.run.converged,
                        history: &sol.run.history,
                    },
                )?;
            }
            println!(
                "skeleton {} surfaces: fitness {:.8}, min fidelity {:.8} after {} generations",
                skel.name,
                sol.run.best_fitness,
                sol.profile.min,
                sol.run.history.len()
            );
            if !sol.run.converged {
                return Err(CliError::Unconverged(format!(
                    "surface run stopped at fitness {:.8} below target {}",
                    sol.run.best_fitness, cfg.target_fitness
                )));
            }
        }
    }
    Ok(())
}

fn default_form(skel: &Skeleton, slot: &str) -> Option<(FitForm, bool)> {
    match (skel.name.as_str(), slot) {
        ("A", "theta1") => Some((FitForm::TrigGamma, true)),
        ("A", "theta2") => Some((FitForm::Exp2, false)),
        _ => None,
    }
}

pub fn fit(a: &FitArgs) -> Result<()> {
    let skel = skeleton(&a.skeleton)?;
    let mut overrides = Vec::new();
    for f in &a.forms {
        let (slot, label) = f
            .split_once('=')
            .ok_or_else(|| usage(format!("--form '{f}' must look like SLOT=FORM")))?;
        if !skel.slot_names.iter().any(|s| s == slot) {
            return Err(usage(format!("skeleton {} has no slot '{slot}'", skel.name)));
        }
        let form = parse_form_label(label).ok_or_else(|| usage(format!("unknown form '{label}'")))?;
        overrides.push((slot.to_owned(), form));
    }
    let specs = skel
        .slot_names
        .iter()
        .zip(&skel.symmetry.periods)
        .map(|(slot, &period)| {
            let (form, tau_scaled) = overrides
                .iter()
                .rev()
                .find(|(s, _)| s == slot)
                .map(|(_, f)| *f)
                .or_else(|| default_form(&skel, slot))
                .ok_or_else(|| {
                    usage(format!(
                        "no default form for slot '{slot}'; pass --form {slot}=..."
                    ))
                })?;
            Ok(SlotSpec {
                slot: slot.clone(),
                model: FitModel::new(form),
                tau_scaled,
                period,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    check_output(&a.out)?;
    if let Some(p) = &a.sequence_out {
        check_output(p)?;
    }
    let grid = build_grid(&a.grid, parse_range(&a.gamma_range)?, parse_range(&a.tau_range)?)?;

    let table = read_angle_table(
        File::open(&a.table).map_err(|e| CliError::Io(format!("{}: {e}", a.table.display())))?,
    )?;
    let fits = fit_angle_surfaces(&table, &specs)?;
    write_surfaces(create(&a.out)?, &fits)?;

    let exprs: Vec<_> = fits.iter().map(|f| f.expr()).collect();
    let mut seq = skel.instantiate(&exprs, "fitted");
    seq.source = Source::GaDerived;
    if let Some(path) = &a.sequence_out {
        let mut w = create(path)?;
        w.write_all(write_sequence(&seq).as_bytes())?;
        w.flush()?;
    }
    let p = profile(&seq, skel.family, &grid);
    for f in &fits {
        println!(
            "{}: {} rms {:.3e}",
            f.slot,
            form_label(f.fit.form, f.tau_scaled),
            f.fit.rms_residual
        );
    }
    println!(
        "fitted sequence: min fidelity {:.8} over {} nodes",
        p.min,
        grid.len()
    );
    if p.min >= a.threshold {
        Ok(())
    } else {
        Err(CliError::Threshold(format!(
            "min fidelity {:.8} below threshold {}",
            p.min, a.threshold
        )))
    }
}

#[derive(Serialize)]
struct AedEntry<'a> {
    gamma: f64,
    #[serde(flatten)]
    result: &'a AedResult,
}

#[derive(Serialize)]
struct AedReport<'a> {
    schema: u32,
    reference: &'static str,
    entries: Vec<AedEntry<'a>>,
}

fn gamma_file(out: &Path, prefix: &str, gamma: f64) -> PathBuf {
    out.join(format!("{prefix}_g{gamma}.csv"))
}

pub fn dynamics(a: &DynamicsArgs) -> Result<()> {
    if a.gamma.is_empty() || a.gamma.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(usage("--gamma needs finite values >= 0"));
    }
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    if a.preserve == Switch::On && a.cycles == 0 {
        return Err(usage("--cycles must be at least 1"));
    }
    let segment = match (a.segment_tau, a.segment_t) {
        (Some(t), _) => Some(t),
        (None, Some(s)) => Some(seconds_to_tau(a.units, s)?),
        _ => None,
    };
    if let Some(s) = segment {
        if !(s.is_finite() && s > 0.0) {
            return Err(usage("segment length must be > 0"));
        }
    }
    let methods: &[Method] = match a.method {
        MethodArg::Exact => &[Method::Exact],
        MethodArg::Decomposition => &[Method::Decomposition],
        MethodArg::Both => &[Method::Exact, Method::Decomposition],
    };
    fs::create_dir_all(&a.out).map_err(|e| CliError::Io(format!("{}: {e}", a.out.display())))?;

    let psi = StateVec4::singlet();
    let mut aeds = Vec::new();
    for &g in &a.gamma {
        let taus = period_taus(g, a.n)?;
        let trajectories = methods
            .iter()
            .map(|&m| concurrence_trajectory(&psi, g, &taus, m))
            .collect::<dmsim::Result<Vec<Trajectory>>>()?;
        let refs: Vec<&Trajectory> = trajectories.iter().collect();
        write_trajectories(create(&gamma_file(&a.out, "dynamics", g))?, &refs)?;
        let min_c = trajectories[0]
            .concurrences()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        print!("gamma={g}: min concurrence {min_c:.6} ({})", methods[0].name());
        if let [exact, dec] = trajectories.as_slice() {
            let r = aed(&dec.concurrences(), &exact.concurrences())?;
            print!(", AED {:.4}%", r.value_percent);
            aeds.push((g, r));
        }
        println!();

        if a.preserve == Switch::On {
            let seg = match segment {
                Some(s) => s,
                None => tau_period(g)? / 8.0,
            };
            let runs = methods
                .iter()
                .map(|&m| preservation_trajectory(&psi, g, seg, a.cycles, m))
                .collect::<dmsim::Result<Vec<Trajectory>>>()?;
            let refs: Vec<&Trajectory> = runs.iter().collect();
            write_trajectories(create(&gamma_file(&a.out, "preserve", g))?, &refs)?;
            for r in &runs {
                let worst = r
                    .points
                    .iter()
                    .step_by(2)
                    .map(|p| (p.concurrence - 1.0).abs())
                    .fold(0.0, f64::max);
                println!(
                    "gamma={g}: preservation ({}) segment tau={seg}, max |C-1| at full cycles {worst:.3e}",
                    r.method.name()
                );
            }
        }
    }
    if !aeds.is_empty() {
        let report = AedReport {
            schema: 1,
            reference: "exact",
            entries: aeds
                .iter()
                .map(|(g, r)| AedEntry { gamma: *g, result: r })
                .collect(),
        };
        write_json(&a.out.join("aed.json"), &report)?;
    }
    Ok(())
}

pub fn period(a: &PeriodArgs) -> Result<()> {
    let gammas = if a.gamma.is_empty() {
        (0..=10).map(|i| i as f64 / 10.0).collect()
    } else {
        a.gamma.clone()
    };
    if let Some(p) = &a.out {
        check_output(p)?;
    }
    let sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "gamma",
        "period",
        "tau_period",
        "published_fit",
        "relative_deviation",
    ])?;
    for &g in &gammas {
        let p = find_period(g, DEFAULT_PERIOD_TOL)?;
        let published = period_fit_eval(&PeriodPoly::PUBLISHED, g);
        let tp = tau_period(g)?;
        w.write_record([
            g.to_string(),
            p.to_string(),
            tp.to_string(),
            published.to_string(),
            ((tp - published).abs() / published).to_string(),
        ])?;
    }
    w.flush()?;
    if a.fit {
        let r = fit_curve(&FitModel::new(FitForm::Cubic), &period_samples(&gammas)?)?;
        let c = &r.coefficients;
        eprintln!(
            "cubic fit: {} g^3 + {} g^2 + {} g + {} (rms {:.3e})",
            c[0], c[1], c[2], c[3], r.rms_residual
        );
    }
    Ok(())
}
