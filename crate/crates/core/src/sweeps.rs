//! Parameter sweeps producing deterministic tables, with an optional
//! on-disk cache keyed by a content hash of the plan.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::matching::{
    build_scatterer_auto, evolve_wavepacket, inelastic_threshold, scatter_single_photon, ScattererEigensystem,
    ScattererSpec, WavepacketSpec,
};
use crate::matter::{renormalized_gap, DipoleSpec};
use crate::models::{build_full_coulomb, build_full_dipole, lowest_spectrum, Gauge, SpinBosonModel, WaveguideSpec};
use crate::polaron::{polaron_resonance, solve_polaron, PolaronKernel};
use crate::rwa_scattering::{resonance_rwa, transmission_coulomb_rwa, transmission_dipole_rwa};
use crate::{Error, Lattice, Result};

pub const TABLE_VERSION: u32 = 1;
/// Fraction of failed rows above which a sweep is aborted.
pub const ABORT_FRACTION: f64 = 0.2;
pub const CACHE_ENV: &str = "WQED_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Linspace { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Values(v) => v.clone(),
            Grid::Linspace { start, stop, points } => match points {
                0 => vec![],
                1 => vec![*start],
                n => (0..*n)
                    .map(|j| start + (stop - start) * j as f64 / (*n - 1) as f64)
                    .collect(),
            },
        }
    }

    fn validate(&self, field: &'static str) -> Result<()> {
        let v = self.values();
        if v.is_empty() {
            return Err(Error::invalid(field, "grid is empty"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(field, "grid values must be finite"));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(field, "grid must be strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Matching,
    Polaron,
    Spectrum,
    Evolve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepPlan {
    pub method: Method,
    pub gauge: Gauge,
    pub rwa: bool,
    pub g_grid: Grid,
    pub omega_grid: Option<Grid>,
    /// Emitter gap; when absent the dipole gauge uses Δ′(g) and the Coulomb
    /// gauge the bare Δ of `dipole`.
    pub delta: Option<f64>,
    pub omega_c: f64,
    pub xi: f64,
    pub region_size: usize,
    pub excitation_cutoff: usize,
    pub n_modes: usize,
    pub n_cavities: usize,
    pub photon_cutoff: usize,
    /// Dipole levels of the reference full-model build.
    pub n_levels: usize,
    pub n_eigs: usize,
    pub theta: f64,
    pub columns: Option<Vec<String>>,
    pub dipole: DipoleSpec,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            method: Method::ClosedForm,
            gauge: Gauge::Dipole,
            rwa: true,
            g_grid: Grid::Values(vec![0.1]),
            omega_grid: None,
            delta: None,
            omega_c: 1.0,
            xi: -1.0 / PI,
            region_size: 5,
            excitation_cutoff: 4,
            n_modes: 2001,
            n_cavities: 3,
            photon_cutoff: 6,
            n_levels: 8,
            n_eigs: 5,
            theta: 10.0,
            columns: None,
            dipole: DipoleSpec::default(),
        }
    }
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Matching => "matching",
            Method::Polaron => "polaron",
            Method::Spectrum => "spectrum",
            Method::Evolve => "evolve",
        }
    }
}

fn method_columns(m: Method) -> &'static [&'static str] {
    match m {
        Method::ClosedForm => &["g", "delta", "omega", "T", "R", "re_t", "im_t", "unitarity_error", "status"],
        Method::Matching => &[
            "g",
            "delta",
            "omega",
            "T",
            "R",
            "re_t",
            "im_t",
            "inelastic_T",
            "inelastic_R",
            "inelastic_proxy",
            "flux_error",
            "threshold",
            "region_size",
            "status",
        ],
        Method::Polaron => &[
            "g",
            "delta",
            "delta_r",
            "iterations",
            "residual",
            "omega_res_polaron",
            "omega_res_rwa",
            "status",
        ],
        Method::Spectrum => &["g", "level_index", "E_full", "E_trunc_dipole", "E_trunc_coulomb", "lambda_c", "status"],
        Method::Evolve => &[
            "g",
            "delta",
            "omega",
            "k_in",
            "T_packet",
            "T_matching",
            "R_packet",
            "norm_drift",
            "status",
        ],
    }
}

/// Columns that are always emitted.
const CONVERGENCE_COLUMNS: &[&str] = &["flux_error", "residual", "unitarity_error", "norm_drift", "status"];

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        self.g_grid.validate("g_grid")?;
        if self.g_grid.values().iter().any(|&g| g < 0.0) {
            return Err(Error::invalid("g_grid", "couplings must be non-negative"));
        }
        let lat = self.lattice()?;
        let needs_omega = matches!(self.method, Method::ClosedForm | Method::Matching | Method::Evolve);
        match (&self.omega_grid, needs_omega) {
            (Some(grid), true) => {
                grid.validate("omega_grid")?;
                if grid.values().iter().any(|&w| !lat.in_band(w)) {
                    return Err(Error::invalid("omega_grid", "frequencies must lie strictly inside the band"));
                }
            }
            (None, true) => return Err(Error::invalid("omega_grid", "required by this method")),
            (Some(_), false) => return Err(Error::invalid("omega_grid", "not used by this method")),
            (None, false) => {}
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return Err(Error::invalid("delta", "must be positive"));
            }
        }
        if self.method == Method::Polaron && self.gauge != Gauge::Dipole {
            return Err(Error::invalid("gauge", "the polaron method is defined in the dipole gauge"));
        }
        if self.n_modes == 0 || self.n_modes % 2 == 0 {
            return Err(Error::invalid("n_modes", "must be odd"));
        }
        if self.n_eigs == 0 {
            return Err(Error::invalid("n_eigs", "must be positive"));
        }
        if self.theta < 4.0 {
            return Err(Error::invalid("theta", "packet width must be at least 4 cavities"));
        }
        self.scatterer(0.0, 1.0).validate()?;
        self.waveguide().validate()?;
        self.dipole.validate()?;
        if let Some(cols) = &self.columns {
            let known = method_columns(self.method);
            if let Some(bad) = cols.iter().find(|c| !known.contains(&c.as_str())) {
                return Err(Error::invalid("columns", format!("`{bad}` is not produced by this method")));
            }
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.omega_c, self.xi)
    }

    fn scatterer(&self, g: f64, delta: f64) -> ScattererSpec {
        ScattererSpec {
            omega_c: self.omega_c,
            xi: self.xi,
            delta,
            g,
            gauge: self.gauge,
            rwa: self.rwa,
            region_size: self.region_size,
            excitation_cutoff: self.excitation_cutoff,
        }
    }

    fn waveguide(&self) -> WaveguideSpec {
        WaveguideSpec {
            omega_c: self.omega_c,
            xi: self.xi,
            n_cavities: self.n_cavities,
            photon_cutoff: self.photon_cutoff,
        }
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("plan serializes");
        let mut h = Sha256::new();
        h.update(env!("CARGO_PKG_VERSION").as_bytes());
        h.update(json.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn output_columns(&self) -> Vec<String> {
        let all = method_columns(self.method);
        match &self.columns {
            None => all.iter().map(|s| s.to_string()).collect(),
            Some(req) => all
                .iter()
                .filter(|c| req.iter().any(|r| r == *c) || CONVERGENCE_COLUMNS.contains(c) || **c == "g")
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn num(x: f64) -> Cell {
        if x.is_finite() {
            Cell::Num(x)
        } else if x.is_nan() {
            Cell::Text("NaN".into())
        } else if x > 0.0 {
            Cell::Text("inf".into())
        } else {
            Cell::Text("-inf".into())
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Num(x) => Some(*x),
            Cell::Text(s) => match s.as_str() {
                "NaN" => Some(f64::NAN),
                "inf" => Some(f64::INFINITY),
                "-inf" => Some(f64::NEG_INFINITY),
                _ => None,
            },
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Rows of named cells plus provenance metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub schema: String,
    pub version: u32,
    pub meta: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Set when the sweep was cancelled before every point finished.
    #[serde(default)]
    pub truncated: bool,
}

impl Table {
    pub fn new(schema: &str, columns: Vec<String>) -> Self {
        Self {
            schema: schema.into(),
            version: TABLE_VERSION,
            meta: BTreeMap::new(),
            columns,
            rows: Vec::new(),
            truncated: false,
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn values(&self, name: &str) -> Vec<f64> {
        let Some(j) = self.column(name) else { return vec![] };
        self.rows.iter().map(|r| r[j].as_f64().unwrap_or(f64::NAN)).collect()
    }

    /// `# schema=name/version key=value …`, header, then RFC 4180 rows with
    /// floats in 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# schema={}/{}", self.schema, self.version);
        for (k, v) in &self.meta {
            out.push(' ');
            out.push_str(k);
            out.push('=');
            out.push_str(&v.replace(char::is_whitespace, "_"));
        }
        out.push('\n');
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf8"));
        if self.truncated {
            out.push_str("# truncated\n");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    fn select(&mut self, keep: &[String]) {
        let idx: Vec<usize> = keep.iter().filter_map(|c| self.column(c)).collect();
        self.rows = self
            .rows
            .iter()
            .map(|r| idx.iter().map(|&j| r[j].clone()).collect())
            .collect();
        self.columns = idx.iter().map(|&j| self.columns[j].clone()).collect();
    }

    fn failures(&self) -> usize {
        let Some(j) = self.column("status") else { return 0 };
        self.rows
            .iter()
            .filter(|r| !matches!(&r[j], Cell::Text(s) if s == "ok" || s == "flat"))
            .count()
    }
}

fn status(res: &Result<()>) -> Cell {
    Cell::Text(match res {
        Ok(()) => "ok".into(),
        Err(e) => e.code().into(),
    })
}

/// Δ per coupling: fixed, Δ′(g) in the dipole gauge, or the bare Δ.
fn gaps(plan: &SweepPlan, gs: &[f64]) -> Vec<Result<f64>> {
    if let Some(d) = plan.delta {
        return gs.iter().map(|_| Ok(d)).collect();
    }
    match plan.gauge {
        Gauge::Dipole => gs
            .par_iter()
            .map(|&g| Ok(renormalized_gap(&plan.dipole, &[g], plan.omega_c)?[0].delta_prime))
            .collect(),
        Gauge::Coulomb => {
            let bare = renormalized_gap(&plan.dipole, &[0.0], plan.omega_c).map(|v| v[0].delta_prime);
            gs.iter()
                .map(|_| bare.as_ref().map(|d| *d).map_err(|e| Error::Domain(e.to_string())))
                .collect()
        }
    }
}

/// Run a plan, consulting the cache directory in `WQED_CACHE_DIR` if set.
pub fn run_sweep(plan: &SweepPlan) -> Result<Table> {
    let dir = std::env::var_os(CACHE_ENV).map(PathBuf::from);
    run_sweep_cached(plan, dir.as_deref())
}

pub fn run_sweep_cached(plan: &SweepPlan, cache_dir: Option<&Path>) -> Result<Table> {
    run_sweep_interruptible(plan, cache_dir, &AtomicBool::new(false))
}

/// As [`run_sweep_cached`], but points not yet started when `cancel` is set
/// are skipped and the table is marked truncated (and not cached).
pub fn run_sweep_interruptible(plan: &SweepPlan, cache_dir: Option<&Path>, cancel: &AtomicBool) -> Result<Table> {
    plan.validate()?;
    let path = cache_dir.map(|d| d.join(format!("{}.json", plan.content_hash())));
    if let Some(p) = &path {
        if let Ok(text) = std::fs::read_to_string(p) {
            if let Ok(t) = serde_json::from_str::<Table>(&text) {
                return Ok(t);
            }
        }
    }
    let table = compute(plan, cancel)?;
    if let (Some(p), false) = (&path, table.truncated) {
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(p, table.to_json())?;
    }
    Ok(table)
}

fn compute(plan: &SweepPlan, cancel: &AtomicBool) -> Result<Table> {
    let gs = plan.g_grid.values();
    let deltas = gaps(plan, &gs);
    let omegas = plan.omega_grid.as_ref().map(Grid::values).unwrap_or_default();
    let columns: Vec<String> = method_columns(plan.method).iter().map(|s| s.to_string()).collect();
    let mut table = Table::new(
        match plan.method {
            Method::ClosedForm => "transmission_closed_form",
            Method::Matching => "transmission_matching",
            Method::Polaron => "polaron",
            Method::Spectrum => "spectrum",
            Method::Evolve => "wavepacket",
        },
        columns,
    );
    let lat = plan.lattice()?;
    let rows: Vec<Option<Vec<Vec<Cell>>>> = gs
        .par_iter()
        .zip(deltas.par_iter())
        .map(|(&g, delta)| {
            if cancel.load(Ordering::Relaxed) {
                return None;
            }
            Some(match plan.method {
                Method::ClosedForm => closed_form_rows(plan, &lat, g, delta, &omegas),
                Method::Matching => matching_rows(plan, g, delta, &omegas),
                Method::Polaron => vec![polaron_row(plan, &lat, g, delta)],
                Method::Spectrum => spectrum_rows(plan, g),
                Method::Evolve => evolve_rows(plan, g, delta, &omegas),
            })
        })
        .collect();
    table.truncated = rows.iter().any(Option::is_none);
    table.rows = rows.into_iter().flatten().flatten().collect();
    let total = table.rows.len();
    let failed = table.failures();
    if total > 0 && failed as f64 > ABORT_FRACTION * total as f64 {
        return Err(Error::SweepAborted { failed, total });
    }
    table.meta = plan_meta(plan);
    table.select(&plan.output_columns());
    Ok(table)
}

/// Settings and defaults written into every table header.
pub fn plan_meta(plan: &SweepPlan) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        m.insert(k.to_string(), v);
    };
    put("method", plan.method.name().into());
    put("gauge", plan.gauge.to_string());
    put("rwa", plan.rwa.to_string());
    put("omega_c", plan.omega_c.to_string());
    put("xi", plan.xi.to_string());
    put("region_size", plan.region_size.to_string());
    put("excitation_cutoff", plan.excitation_cutoff.to_string());
    put("n_modes", plan.n_modes.to_string());
    put("n_cavities", plan.n_cavities.to_string());
    put("photon_cutoff", plan.photon_cutoff.to_string());
    put("n_levels", plan.n_levels.to_string());
    put("theta", plan.theta.to_string());
    put("beta", plan.dipole.beta.to_string());
    put("e_d", plan.dipole.e_d.to_string());
    put("grid_points", plan.dipole.grid_points.to_string());
    put("grid_half_width", plan.dipole.grid_half_width.to_string());
    put("delta", plan.delta.map_or("derived".into(), |d| d.to_string()));
    put("plan_hash", plan.content_hash()[..16].to_string());
    m
}

fn nan_row(n: usize, g: f64, err: &Error) -> Vec<Cell> {
    let mut row = vec![Cell::num(f64::NAN); n];
    row[0] = Cell::num(g);
    row[n - 1] = Cell::Text(err.code().into());
    row
}

fn closed_form_rows(plan: &SweepPlan, lat: &Lattice, g: f64, delta: &Result<f64>, omegas: &[f64]) -> Vec<Vec<Cell>> {
    let n = method_columns(Method::ClosedForm).len();
    let delta = match delta {
        Ok(d) => *d,
        Err(e) => return omegas.iter().map(|_| nan_row(n, g, e)).collect(),
    };
    omegas
        .iter()
        .map(|&w| {
            let p = match plan.gauge {
                Gauge::Dipole => transmission_dipole_rwa(w, delta, g, lat),
                Gauge::Coulomb => transmission_coulomb_rwa(w, delta, g, lat),
            };
            match p {
                Ok(p) => vec![
                    Cell::num(g),
                    Cell::num(delta),
                    Cell::num(w),
                    Cell::num(p.big_t),
                    Cell::num(p.big_r),
                    Cell::num(p.t.re),
                    Cell::num(p.t.im),
                    Cell::num((p.big_t + p.big_r - 1.0).abs()),
                    status(&Ok(())),
                ],
                Err(e) => nan_row(n, g, &e),
            }
        })
        .collect()
}

fn matching_rows(plan: &SweepPlan, g: f64, delta: &Result<f64>, omegas: &[f64]) -> Vec<Vec<Cell>> {
    let n = method_columns(Method::Matching).len();
    let scat = match delta {
        Ok(d) => build_scatterer_auto(&plan.scatterer(g, *d)),
        Err(e) => Err(Error::Domain(e.to_string())),
    };
    let scat = match scat {
        Ok(s) => s,
        Err(e) => return omegas.iter().map(|_| nan_row(n, g, &e)).collect(),
    };
    let threshold = inelastic_threshold(&scat).unwrap_or(f64::NAN);
    omegas
        .par_iter()
        .map(|&w| match scatter_single_photon(&scat, w) {
            Ok(r) => {
                let ok = if r.flux_error < 1e-6 {
                    Ok(())
                } else {
                    Err(Error::NoConvergence {
                        context: "flux conservation".into(),
                        iterations: 1,
                        residual: r.flux_error,
                    })
                };
                vec![
                    Cell::num(g),
                    Cell::num(scat.spec.delta),
                    Cell::num(w),
                    Cell::num(r.big_t),
                    Cell::num(r.big_r),
                    Cell::num(r.t.re),
                    Cell::num(r.t.im),
                    Cell::num(r.inelastic_transmittance),
                    Cell::num(r.inelastic_reflectance),
                    Cell::num(r.inelastic_proxy),
                    Cell::num(r.flux_error),
                    Cell::num(threshold),
                    Cell::Int(scat.spec.region_size as i64),
                    status(&ok),
                ]
            }
            Err(e) => nan_row(n, g, &e),
        })
        .collect()
}

fn polaron_row(plan: &SweepPlan, lat: &Lattice, g: f64, delta: &Result<f64>) -> Vec<Cell> {
    let n = method_columns(Method::Polaron).len();
    let run = || -> Result<Vec<Cell>> {
        let d = *delta.as_ref().map_err(|e| Error::Domain(e.to_string()))?;
        let model = SpinBosonModel::new(*lat, plan.n_modes, d, g, Gauge::Dipole)?;
        let sol = solve_polaron(&model)?;
        let res = polaron_resonance(&sol, &model, g, PolaronKernel::Resummed)?;
        let rwa = resonance_rwa(d, g, lat);
        Ok(vec![
            Cell::num(g),
            Cell::num(d),
            Cell::num(sol.delta_r),
            Cell::Int(sol.iterations as i64),
            Cell::num(sol.residual),
            Cell::num(res.omega),
            Cell::num(rwa.omega),
            Cell::Text(if res.in_band { "ok" } else { "out_of_band" }.into()),
        ])
    };
    run().unwrap_or_else(|e| nan_row(n, g, &e))
}

fn spectrum_rows(plan: &SweepPlan, g: f64) -> Vec<Vec<Cell>> {
    let n = method_columns(Method::Spectrum).len();
    let k = plan.n_eigs;
    let run = || -> Result<Vec<Vec<Cell>>> {
        let w = plan.waveguide();
        let (lambda, _) = crate::matter::lambda_for_coupling(&plan.dipole, g, plan.omega_c)?;
        let d = plan.dipole.with_lambda(lambda);
        let full = lowest_spectrum(&build_full_dipole(&w, &d, plan.n_levels)?, k)?;
        let td = lowest_spectrum(&build_full_dipole(&w, &d, 2)?, k)?;
        let tc = lowest_spectrum(&build_full_coulomb(&w, &d, 2)?, k)?;
        Ok((0..k)
            .map(|i| {
                vec![
                    Cell::num(g),
                    Cell::Int(i as i64),
                    Cell::num(full[i]),
                    Cell::num(td[i]),
                    Cell::num(tc[i]),
                    Cell::num(lambda),
                    Cell::Text("ok".into()),
                ]
            })
            .collect())
    };
    run().unwrap_or_else(|e| {
        (0..k)
            .map(|i| {
                let mut r = nan_row(n, g, &e);
                r[1] = Cell::Int(i as i64);
                r
            })
            .collect()
    })
}

fn evolve_rows(plan: &SweepPlan, g: f64, delta: &Result<f64>, omegas: &[f64]) -> Vec<Vec<Cell>> {
    let n = method_columns(Method::Evolve).len();
    let scat = match delta {
        Ok(d) => build_scatterer_auto(&plan.scatterer(g, *d)),
        Err(e) => Err(Error::Domain(e.to_string())),
    };
    let scat = match scat {
        Ok(s) => s,
        Err(e) => return omegas.iter().map(|_| nan_row(n, g, &e)).collect(),
    };
    omegas
        .iter()
        .map(|&w| {
            let run = || -> Result<Vec<Cell>> {
                let lat = scat.spec.lattice();
                let k_in = lat.wavenumber(w)?;
                let wp = WavepacketSpec {
                    k_in,
                    theta: plan.theta,
                    ..WavepacketSpec::default()
                };
                let packet = evolve_wavepacket(&scat.spec, &wp)?;
                let m = scatter_single_photon(&scat, w)?;
                let ok = if packet.norm_drift < 1e-10 {
                    Ok(())
                } else {
                    Err(Error::NoConvergence {
                        context: "norm conservation".into(),
                        iterations: packet.steps,
                        residual: packet.norm_drift,
                    })
                };
                Ok(vec![
                    Cell::num(g),
                    Cell::num(scat.spec.delta),
                    Cell::num(w),
                    Cell::num(k_in),
                    Cell::num(packet.transmission_at_k),
                    Cell::num(m.big_t),
                    Cell::num(packet.reflection_at_k),
                    Cell::num(packet.norm_drift),
                    status(&ok),
                ])
            };
            run().unwrap_or_else(|e| nan_row(n, g, &e))
        })
        .collect()
}

/// Golden-section minimization of a unimodal function on [a, b].
pub fn golden_section(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub g: f64,
    pub delta: f64,
    /// NaN when the spectrum is flat.
    pub omega_min: f64,
    pub t_min: f64,
    pub omega_res_rwa: f64,
    pub omega_res_polaron: f64,
    pub region_size: usize,
}

/// Frequency of minimal matching transmittance near the emitter gap,
/// searched on ω ≤ Δ + 0.05 by a coarse scan and golden-section refinement.
pub fn transmission_minimum(scat: &ScattererEigensystem, coarse: usize) -> Result<Option<(f64, f64)>> {
    let lat = scat.spec.lattice();
    let bw = lat.upper_edge() - lat.lower_edge();
    let lo = lat.lower_edge() + 1e-3 * bw;
    let hi = (scat.spec.delta + 0.05).min(lat.upper_edge() - 1e-3 * bw);
    let t = |w: f64| scatter_single_photon(scat, w).map(|r| r.big_t);
    let pts: Vec<f64> = (0..coarse).map(|j| lo + (hi - lo) * j as f64 / (coarse - 1) as f64).collect();
    let vals: Vec<f64> = pts.par_iter().map(|&w| t(w)).collect::<Result<_>>()?;
    let (j, &tmin) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty scan");
    if vals.iter().all(|v| (v - tmin).abs() < 1e-12) {
        return Ok(None);
    }
    let a = pts[j.saturating_sub(1)];
    let b = pts[(j + 1).min(coarse - 1)];
    golden_section(a, b, 1e-6 * bw, t).map(Some)
}

/// Transmittance minimum from matching per g, with the RWA and polaron
/// resonance lines (dipole gauge).
pub fn resonance_trace(plan: &SweepPlan) -> Result<Vec<TracePoint>> {
    let mut p = plan.clone();
    p.omega_grid = None;
    p.method = Method::Polaron;
    p.validate()?;
    let gs = plan.g_grid.values();
    let deltas = gaps(plan, &gs);
    let lat = plan.lattice()?;
    gs.par_iter()
        .zip(deltas)
        .map(|(&g, delta)| {
            let delta = delta?;
            let scat = build_scatterer_auto(&plan.scatterer(g, delta))?;
            let min = transmission_minimum(&scat, 81)?;
            let model = SpinBosonModel::new(lat, plan.n_modes, delta, g, Gauge::Dipole)?;
            let sol = solve_polaron(&model)?;
            let pol = polaron_resonance(&sol, &model, g, PolaronKernel::Resummed)?;
            Ok(TracePoint {
                g,
                delta,
                omega_min: min.map_or(f64::NAN, |m| m.0),
                t_min: min.map_or(1.0, |m| m.1),
                omega_res_rwa: resonance_rwa(delta, g, &lat).omega,
                omega_res_polaron: pol.omega,
                region_size: scat.spec.region_size,
            })
        })
        .collect()
}

pub fn trace_table(points: &[TracePoint], plan: &SweepPlan) -> Table {
    let cols = [
        "g",
        "delta",
        "omega_min",
        "T_min",
        "omega_res_rwa",
        "omega_res_polaron",
        "region_size",
        "status",
    ];
    let mut t = Table::new("resonance_trace", cols.iter().map(|s| s.to_string()).collect());
    t.meta = plan_meta(plan);
    for p in points {
        t.rows.push(vec![
            Cell::num(p.g),
            Cell::num(p.delta),
            Cell::num(p.omega_min),
            Cell::num(p.t_min),
            Cell::num(p.omega_res_rwa),
            Cell::num(p.omega_res_polaron),
            Cell::Int(p.region_size as i64),
            Cell::Text(if p.omega_min.is_nan() { "flat" } else { "ok" }.into()),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_plan() -> SweepPlan {
        SweepPlan {
            g_grid: Grid::Values(vec![0.0, 0.1]),
            omega_grid: Some(Grid::Linspace {
                start: 0.5,
                stop: 1.5,
                points: 5,
            }),
            delta: Some(1.0),
            ..SweepPlan::default()
        }
    }

    #[test]
    fn zero_coupling_is_transparent() {
        let t = run_sweep_cached(&closed_plan(), None).unwrap();
        let gcol = t.values("g");
        let tcol = t.values("T");
        for (g, tv) in gcol.iter().zip(tcol) {
            if *g == 0.0 {
                assert_eq!(tv, 1.0);
            }
        }
        assert_eq!(t.rows.len(), 10);
    }

    #[test]
    fn csv_is_deterministic() {
        let a = run_sweep_cached(&closed_plan(), None).unwrap().to_csv();
        let b = run_sweep_cached(&closed_plan(), None).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with("# schema=transmission_closed_form/1 "));
        assert_eq!(a.lines().nth(1).unwrap(), "g,delta,omega,T,R,re_t,im_t,unitarity_error,status");
    }

    #[test]
    fn cache_round_trip() {
        let dir = std::env::temp_dir().join(format!("wqed-cache-test-{}", std::process::id()));
        let plan = closed_plan();
        let first = run_sweep_cached(&plan, Some(&dir)).unwrap();
        assert!(dir.join(format!("{}.json", plan.content_hash())).exists());
        let second = run_sweep_cached(&plan, Some(&dir)).unwrap();
        assert_eq!(first.to_csv(), second.to_csv());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn cancelled_sweep_is_marked_and_not_cached() {
        let dir = std::env::temp_dir().join(format!("wqed-cancel-test-{}", std::process::id()));
        let plan = closed_plan();
        let t = run_sweep_interruptible(&plan, Some(&dir), &AtomicBool::new(true)).unwrap();
        assert!(t.truncated && t.rows.is_empty());
        assert!(t.to_csv().ends_with("# truncated\n"));
        assert!(!dir.join(format!("{}.json", plan.content_hash())).exists());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn grids_must_increase() {
        let plan = SweepPlan {
            g_grid: Grid::Values(vec![0.2, 0.1]),
            ..closed_plan()
        };
        assert!(matches!(plan.validate(), Err(Error::InvalidParameter { field: "g_grid", .. })));
    }

    #[test]
    fn column_selection_keeps_status() {
        let plan = SweepPlan {
            columns: Some(vec!["T".into()]),
            ..closed_plan()
        };
        let t = run_sweep_cached(&plan, None).unwrap();
        assert_eq!(t.columns, vec!["g", "T", "unitarity_error", "status"]);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section(0.0, 3.0, 1e-9, |x| Ok((x - 1.234).powi(2))).unwrap();
        assert!((x - 1.234).abs() < 1e-8);
        assert!(fx < 1e-15);
    }

    #[test]
    fn rwa_trace_follows_closed_form() {
        let plan = SweepPlan {
            g_grid: Grid::Values(vec![0.0, 0.1, 0.2]),
            delta: Some(1.0),
            region_size: 3,
            excitation_cutoff: 1,
            n_modes: 201,
            ..SweepPlan::default()
        };
        let pts = resonance_trace(&plan).unwrap();
        assert!(pts[0].omega_min.is_nan());
        for p in &pts[1..] {
            assert!((p.omega_min - p.omega_res_rwa).abs() < 1e-6, "{p:?}");
        }
    }
}
