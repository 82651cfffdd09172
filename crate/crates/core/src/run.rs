//! Executes a [`RunConfig`] and writes CSV/JSON outputs.
//!
//! Every CSV starts with one `# {json}` line holding the metadata header;
//! JSON outputs carry the same object under `"metadata"`. The header embeds
//! the full configuration, so any output can be replayed.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::{Command, RunConfig, Span};
use crate::dispersion::{
    degeneracy_wavelength_live, dgd, extract_jsa_params_with_step, group_indices, group_mean_al,
    sensitivity_table, write_dgd_map_csv, write_sensitivity_csv, DeltaConvention, PhasematchParams,
    SolverSettings, TripletDispersion,
};
use crate::entanglement::{
    density_matrix, filtered_amplitudes, separation_rows, write_rows_csv, DichroicSpec, EntanglementRow,
    FilterSpec, Filters, SweepSettings,
};
use crate::error::{BrwError, Result};
use crate::interference::{hom_scan, optimal_delay, pump_detuning_sweep, write_sweep_csv};
use crate::jsa::{build_jsa, marginals, PumpSpec};
use crate::material::Afromowitz;
use crate::solver::{find_guided_modes, ModeSearch, Polarization, SlabProfile};
use crate::stack::LayerRole;

/// Files written by one run plus the headline numbers.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub results: Value,
}

/// Output directory: explicit value, else `$BRWSIM_OUT_DIR`, else `.`.
pub fn resolve_out_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(crate::config::OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn metadata(cfg: &RunConfig, results: &Value) -> Value {
    json!({
        "artifact": "brwsim",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.name(),
        "preset": cfg.preset,
        "parameter_source": parameter_source(cfg),
        "conventions": cfg.conventions,
        "material_model": "afromowitz",
        "config": cfg,
        "results": results,
    })
}

fn parameter_source(cfg: &RunConfig) -> String {
    let builtin = crate::stack::LayerStack::preset(&cfg.preset).is_some();
    match (cfg.command.uses_stack(), builtin) {
        (true, true) => format!("built-in stack '{}'", cfg.preset),
        (true, false) => format!("stack file '{}'", cfg.preset),
        (false, true) => format!("published expansion parameters '{}'", cfg.preset),
        (false, false) => format!("parameter file '{}'", cfg.preset),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BrwError + '_ {
    move |source| BrwError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_csv(
    path: &Path,
    meta: &Value,
    body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "# {meta}").map_err(io_err(path))?;
    body(&mut buf).map_err(io_err(path))?;
    std::fs::write(path, buf).map_err(io_err(path))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

fn settings(cfg: &RunConfig) -> SolverSettings {
    SolverSettings {
        signal_polarization: cfg.conventions.polarization_assignment.0,
        ..SolverSettings::default()
    }
}

fn pump_spec(cfg: &RunConfig, p: &PhasematchParams, pump_nm: Option<f64>, fwhm: f64) -> PumpSpec {
    PumpSpec::new(pump_nm.unwrap_or(0.5 * p.lambda_d), fwhm).with_convention(cfg.conventions.pump_fwhm_mode)
}

/// Validates, computes and writes all outputs into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutput> {
    let violations = cfg.validate();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(BrwError::Invalid(list.join("; ")));
    }
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let stem = format!("{}_{}", cfg.command.name(), cfg.preset_tag());
    let csv = out_dir.join(format!("{stem}.csv"));
    let model = Afromowitz::default();
    let mut files = vec![csv.clone()];

    let results = match &cfg.command {
        Command::Modes(a) => {
            let stack = cfg.stack()?;
            let stack = if a.etched {
                stack
                    .etched()
                    .ok_or_else(|| BrwError::Invalid("etch removes the whole stack".into()))?
            } else {
                stack
            };
            let profile = SlabProfile::from_stack(&stack, &model, a.wavelength_nm)?;
            let pols = match a.polarization {
                Some(p) => vec![p],
                None => vec![Polarization::TE, Polarization::TM],
            };
            let mut rows = Vec::new();
            for pol in pols {
                for (k, m) in find_guided_modes(&profile, pol, &ModeSearch::default())?
                    .into_iter()
                    .enumerate()
                {
                    rows.push((pol, k, m));
                }
            }
            let results = json!({ "wavelength_nm": a.wavelength_nm, "mode_count": rows.len() });
            write_csv(&csv, &metadata(cfg, &results), |out| {
                writeln!(out, "polarization,order,n_eff,mode_class,central_fraction")?;
                for (pol, k, m) in &rows {
                    let class = serde_json::to_value(m.mode_class).expect("enum serializes");
                    writeln!(
                        out,
                        "{},{},{:.10},{},{:.6}",
                        pol.as_str(),
                        k,
                        m.n_eff,
                        class.as_str().unwrap_or("OTHER"),
                        m.central_fraction
                    )?;
                }
                Ok(())
            })?;
            results
        }
        Command::Dispersion(a) => {
            let stack = cfg.stack()?;
            let s = SolverSettings {
                ridge_correction: !a.slab_only,
                ..settings(cfg)
            };
            let ld = degeneracy_wavelength_live(&stack, &model, &s, None, 0.0)?;
            let td = TripletDispersion::solve(&stack, &model, &s, Some(ld))?;
            let params = extract_jsa_params_with_step(&td, stack.length_um, s.fd_step_nm)?;
            let g = group_indices(&td, params.lambda_d, s.fd_step_nm)?;
            let dgd_fs = dgd(g.signal, g.idler, stack.length_um)?;
            let results = json!({
                "lambda_d_nm": params.lambda_d,
                "group_index": g,
                "dgd_fs": dgd_fs,
                "dgd_fs_per_mm": dgd_fs * 1000.0 / stack.length_um,
                "params": params,
            });
            let meta = metadata(cfg, &results);
            write_csv(&csv, &meta, |out| {
                writeln!(out, "wave,wavelength_nm,n_eff")?;
                for (name, c) in [("signal", &td.signal), ("idler", &td.idler), ("pump", &td.pump)] {
                    for (l, n) in c.wavelengths_nm.iter().zip(&c.index) {
                        writeln!(out, "{name},{l:.4},{n:.10}")?;
                    }
                }
                Ok(())
            })?;
            // loadable as a parameter file; the extra key is ignored on load
            let pj = out_dir.join(format!("{stem}_params.json"));
            let mut v = serde_json::to_value(params).expect("params serialize");
            v["metadata"] = meta;
            write_json(&pj, &v)?;
            files.push(pj);
            results
        }
        Command::Sensitivity(a) => {
            let stack = cfg.stack()?;
            let (base, rows) = sensitivity_table(
                &stack,
                &model,
                &settings(cfg),
                a.thickness_delta,
                a.al_delta,
                DeltaConvention::Relative,
            )?;
            let results = json!({ "baseline_lambda_d_nm": base, "rows": rows });
            write_csv(&csv, &metadata(cfg, &results), |out| write_sensitivity_csv(&rows, out))?;
            results
        }
        Command::DgdMap(a) => {
            let stack = cfg.stack()?;
            let core = group_mean_al(&stack, LayerRole::Core)
                .ok_or_else(|| BrwError::Invalid("stack has no core layers".into()))?;
            let graded = group_mean_al(&stack, LayerRole::GradedDbr)
                .ok_or_else(|| BrwError::Invalid("stack has no graded_dbr layers".into()))?;
            let clamp = |c: f64, h: f64| ((c - h).max(0.0), (c + h).min(1.0));
            let map = crate::dispersion::dgd_map(
                &stack,
                &model,
                &settings(cfg),
                clamp(core, a.core_span),
                clamp(graded, a.dbr_span),
                a.grid_n,
            )?;
            let results = json!({ "al_core": map.al_core, "al_dbr": map.al_dbr, "wavelength_nm": map.wavelength_nm });
            write_csv(&csv, &metadata(cfg, &results), |out| write_dgd_map_csv(&map, out))?;
            results
        }
        Command::Jsa(a) => {
            let p = cfg.params()?;
            let pump = pump_spec(cfg, &p, a.pump_nm, a.pump_fwhm_nm);
            let j = build_jsa(&p, &pump, &a.grid.spec())?;
            let m = marginals(&j);
            let results = json!({
                "norm": j.norm,
                "boundary_mass": j.boundary_mass,
                "truncated": j.truncated(),
                "signal_band_nm": m.signal_band_nm(0.01),
                "idler_band_nm": m.idler_band_nm(0.01),
            });
            let meta = metadata(cfg, &results);
            write_csv(&csv, &meta, |out| m.write_csv(out))?;
            let hj = out_dir.join(format!("{stem}.json"));
            write_json(&hj, &json!({ "metadata": meta, "header": j.header_json() }))?;
            files.push(hj);
            if a.amplitude {
                let aj = out_dir.join(format!("{stem}_amplitude.csv"));
                write_csv(&aj, &meta, |out| j.write_csv(out))?;
                files.push(aj);
            }
            results
        }
        Command::Hom(a) => {
            let p = cfg.params()?;
            let pump = pump_spec(cfg, &p, a.pump_nm, a.pump_fwhm_nm);
            let j = build_jsa(&p, &pump, &a.grid.spec())?;
            let scan = hom_scan(&j, a.tau_min, a.tau_max, a.n_tau)?;
            let p_min = scan.probability.iter().cloned().fold(f64::INFINITY, f64::min);
            let p_max = scan.probability.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let results = json!({
                "pump_nm": pump.central_wavelength_nm,
                "tau_c_fs": scan.tau_c,
                "o_max": scan.o_max,
                "visibility": scan.visibility,
                "p_min": p_min,
                "p_max": p_max,
                "max_residual_imag": scan.max_residual_imag,
                "truncated": j.truncated(),
            });
            write_csv(&csv, &metadata(cfg, &results), |out| scan.write_csv(out))?;
            results
        }
        Command::PumpSweep(a) => {
            let p = cfg.params()?;
            let deg = pump_spec(cfg, &p, None, a.pump_fwhm_nm);
            let grid = a.grid.spec();
            let tau_c = match a.tau_c {
                Some(t) => t,
                None => optimal_delay(&build_jsa(&p, &deg, &grid)?, (-200.0, 200.0), a.tau_step)?.tau_c,
            };
            let span = a.pumps.unwrap_or(Span {
                start: deg.central_wavelength_nm - 1.0,
                stop: deg.central_wavelength_nm,
                step: 0.1,
            });
            let rows = pump_detuning_sweep(&p, &deg, &grid, &span.values(), tau_c)?;
            let results = json!({ "tau_c_fs": tau_c, "rows": rows.len() });
            write_csv(&csv, &metadata(cfg, &results), |out| write_sweep_csv(&rows, out))?;
            results
        }
        Command::Entangle(a) => {
            let p = cfg.params()?;
            let pump = pump_spec(cfg, &p, None, a.pump_fwhm_nm);
            let j = build_jsa(&p, &pump, &a.grid.spec())?;
            let st = SweepSettings {
                filter_fwhm_nm: a.filter_fwhm_nm,
                filter_convention: cfg.conventions.filter_fwhm_mode,
                orientation: a.orientation,
            };
            let rows = match &a.centers {
                Some(c) => {
                    let spec = FilterSpec {
                        center_1_nm: c[0],
                        center_2_nm: c[1],
                        fwhm_nm: a.filter_fwhm_nm,
                        fwhm_convention: st.filter_convention,
                    };
                    spec.validate(pump.central_wavelength_nm)?;
                    let dichroic = DichroicSpec {
                        cutoff_nm: p.lambda_d,
                        orientation: a.orientation,
                    };
                    let rho = density_matrix(&filtered_amplitudes(&j, &Filters::Gaussian(spec), &dichroic)?)?;
                    vec![EntanglementRow {
                        separation_nm: (c[1] - c[0]).abs(),
                        omega_separation: spec.omega_separation(),
                        alpha: rho.alpha,
                        beta: rho.beta,
                        abs_d: rho.d.norm(),
                        arg_d: rho.d.arg().abs(),
                        concurrence: rho.concurrence,
                    }]
                }
                None => separation_rows(&j, pump.central_wavelength_nm, &a.separations.values(), &st)?,
            };
            let c_min = rows.iter().map(|r| r.concurrence).fold(f64::INFINITY, f64::min);
            let results = json!({ "rows": rows.len(), "min_concurrence": c_min, "truncated": j.truncated() });
            write_csv(&csv, &metadata(cfg, &results), |out| write_rows_csv(&rows, out))?;
            results
        }
    };
    Ok(RunOutput { files, results })
}
