use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};

use wqed::circuit::{circuit_to_model, model_to_circuit};
use wqed::matter::renormalized_gap;
use wqed::spectral::{self_energy_rwa, spectral_density_coulomb, spectral_density_dipole};
use wqed::sweeps::{plan_meta, run_sweep_interruptible, Cell, Method, SweepPlan, Table, CACHE_ENV};

use crate::config::RunConfig;
use crate::{CircuitArgs, CliError, TransmissionMethod};

static CANCEL: AtomicBool = AtomicBool::new(false);

/// The first Ctrl-C lets running points finish and writes a truncated table;
/// a second one exits immediately.
pub fn install_interrupt_handler() {
    let _ = ctrlc::set_handler(|| {
        if CANCEL.swap(true, Ordering::SeqCst) {
            std::process::exit(130);
        }
    });
}

pub struct Output {
    pub json: bool,
    pub path: Option<PathBuf>,
}

impl Output {
    pub fn write_text(&self, text: &str) -> Result<(), CliError> {
        let res = match &self.path {
            Some(p) => std::fs::write(p, text),
            None => std::io::stdout().lock().write_all(text.as_bytes()),
        };
        res.map_err(|e| CliError::Core(e.into()))
    }

    fn write_table(&self, t: &Table) -> Result<(), CliError> {
        if self.json {
            self.write_text(&(t.to_json() + "\n"))
        } else {
            self.write_text(&t.to_csv())
        }
    }
}

pub fn sweep(cfg: &RunConfig, method: Method, out: &Output) -> Result<(), CliError> {
    run_plan(&cfg.plan(method), out)
}

fn run_plan(plan: &SweepPlan, out: &Output) -> Result<(), CliError> {
    let cache = std::env::var_os(CACHE_ENV).map(PathBuf::from);
    let table = run_sweep_interruptible(plan, cache.as_deref(), &CANCEL)?;
    out.write_table(&table)?;
    if table.truncated {
        return Err(CliError::Interrupted);
    }
    Ok(())
}

pub fn spectrum(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    sweep(cfg, Method::Spectrum, out)
}

pub fn polaron(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    sweep(cfg, Method::Polaron, out)
}

pub fn transmission(cfg: &RunConfig, method: Option<TransmissionMethod>, out: &Output) -> Result<(), CliError> {
    let method = match method {
        Some(TransmissionMethod::ClosedForm) => Method::ClosedForm,
        Some(TransmissionMethod::Matching) => Method::Matching,
        Some(TransmissionMethod::Evolve) => Method::Evolve,
        None if cfg.sweep.rwa => Method::ClosedForm,
        None => Method::Matching,
    };
    sweep(cfg, method, out)
}

pub fn inelastic(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let mut plan = cfg.plan(Method::Matching);
    plan.rwa = false;
    plan.columns = Some(
        ["g", "delta", "omega", "T", "inelastic_T", "inelastic_R", "inelastic_proxy", "threshold", "region_size"]
            .map(String::from)
            .to_vec(),
    );
    run_plan(&plan, out)
}

fn table_for(cfg: &RunConfig, method: Method, schema: &str, columns: &[&str]) -> Result<(Table, SweepPlan), CliError> {
    let plan = cfg.plan(method);
    plan.validate()?;
    let mut t = Table::new(schema, columns.iter().map(|s| s.to_string()).collect());
    t.meta = plan_meta(&plan);
    t.meta.insert("method".into(), schema.into());
    Ok((t, plan))
}

pub fn gap(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (mut t, plan) = table_for(cfg, Method::Polaron, "gap", &["g", "lambda_c", "delta_prime", "iterations"])?;
    for p in renormalized_gap(&plan.dipole, &plan.g_grid.values(), plan.omega_c)? {
        t.rows.push(vec![
            Cell::num(p.g),
            Cell::num(p.lambda_c),
            Cell::num(p.delta_prime),
            Cell::Int(p.iterations as i64),
        ]);
    }
    out.write_table(&t)
}

pub fn self_energy(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (mut t, plan) = table_for(
        cfg,
        Method::ClosedForm,
        "self_energy",
        &["g", "omega", "re_sigma", "im_sigma", "half_j_dipole"],
    )?;
    let lat = plan.lattice()?;
    let omegas = plan.omega_grid.as_ref().map(|g| g.values()).unwrap_or_default();
    for g in plan.g_grid.values() {
        for &w in &omegas {
            let s = self_energy_rwa(w, g, &lat)?;
            let j = spectral_density_dipole(w, g, &lat)?;
            t.rows.push(vec![
                Cell::num(g),
                Cell::num(w),
                Cell::num(s.real_part),
                Cell::num(s.imag_part),
                Cell::num(0.5 * j),
            ]);
        }
    }
    out.write_table(&t)
}

pub fn spectral_density(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (mut t, plan) = table_for(
        cfg,
        Method::ClosedForm,
        "spectral_density",
        &["g", "omega", "J_dipole", "J_coulomb"],
    )?;
    let lat = plan.lattice()?;
    let omegas = plan.omega_grid.as_ref().map(|g| g.values()).unwrap_or_default();
    for g in plan.g_grid.values() {
        for &w in &omegas {
            t.rows.push(vec![
                Cell::num(g),
                Cell::num(w),
                Cell::num(spectral_density_dipole(w, g, &lat)?),
                Cell::num(spectral_density_coulomb(w, g, &lat)?),
            ]);
        }
    }
    out.write_table(&t)
}

pub fn circuit_map(cfg: &RunConfig, args: &CircuitArgs, out: &Output) -> Result<(), CliError> {
    let c = &cfg.circuit;
    if args.inverse {
        let (Some(omega_r), Some(xi_r), Some(g_center)) = (args.omega_r, args.xi_r, args.g_center) else {
            return Err(CliError::config(None, "--inverse needs --omega-r, --xi-r and --g-center"));
        };
        let c_r = args.c_r.unwrap_or(c.c_r);
        let d = model_to_circuit(omega_r, xi_r, g_center, c_r)?;
        let mut t = Table::new(
            "circuit_design",
            ["c_r", "l_r", "l_c", "l_sigma", "n_eff"].map(String::from).to_vec(),
        );
        t.meta.insert("omega_r".into(), omega_r.to_string());
        t.meta.insert("xi_r".into(), xi_r.to_string());
        t.meta.insert("g_center".into(), g_center.to_string());
        t.rows.push([d.c_r, d.l_r, d.l_c, d.l_sigma, d.n_eff].map(Cell::num).to_vec());
        return out.write_table(&t);
    }
    let m = circuit_to_model(c, args.n_modes)?;
    let norm = m.normalized();
    let mut t = Table::new(
        "circuit_map",
        ["k", "omega", "g", "omega_normalized", "g_normalized"].map(String::from).to_vec(),
    );
    for (key, v) in [
        ("c_r", c.c_r),
        ("l_r", c.l_r),
        ("l_c", c.l_c),
        ("c_j", c.c_j),
        ("e_j", c.e_j),
        ("phi_ext", c.phi_ext),
        ("omega_r", m.omega_r),
        ("xi_r", m.xi_r),
        ("l_sigma", m.l_sigma),
        ("flux_shift", m.flux_shift),
    ] {
        t.meta.insert(key.into(), v.to_string());
    }
    t.meta.insert("n_modes".into(), args.n_modes.to_string());
    for (a, b) in m.modes.iter().zip(&norm.modes) {
        t.rows.push([a.k, a.omega, a.g, b.omega, b.g].map(Cell::num).to_vec());
    }
    out.write_table(&t)
}
