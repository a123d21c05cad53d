use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use zdress::circuit::{
    build_spanning_circuit, fig1_circuit, fuzzy_gate_pool, g2_pool, jacobian, random_params,
    reachability_with, Circuit, ReachConfig, SpanningOptions,
};
use zdress::fuzzy::{solve_model, ModelParams, ModelSolution, REFERENCE_N4};
use zdress::gates::{decompose, decomposition_matrix, gate_matrix, resource_count, GateKind, REFERENCE_RESOURCES};
use zdress::lie::{
    adjacent_hops, all_pair_hops, bempa_generators, bempa_sector, closure_against_target, fuzzy_pool, verify_all,
    GeneratorSet,
};
use zdress::linalg::max_abs_diff;
use zdress::sector::{count_sector, enumerate_sector, format_bits, parse_bits, SectorBasis, SectorSpec};
use zdress::varopt::{default_betas, overlap_matrix, run_vqd, run_vqe, OptimizerConfig, RunTrace};

use crate::output::{num, write_file, Sink};
use crate::{
    ClosureArgs, Command, DimArgs, EdArgs, GatesAction, JacobianArgs, ModelArgs, ReachArgs, SpanningArgs,
    SpectrumArgs, VqdArgs, VqeArgs,
};

/// Bad invocation that clap could not catch; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Runs one subcommand; `Ok(false)` means a verification failed.
pub fn run(cmd: Command, out: Option<PathBuf>) -> Result<bool> {
    match cmd {
        Command::VerifyIdentities => verify_identities(out),
        Command::Closure(a) => closure(a, out),
        Command::Dim(a) => dim(a, out),
        Command::Gates { action } => match action {
            GatesAction::Verify { samples, emit } => gates_verify(samples, emit, out),
        },
        Command::Jacobian(a) => jacobian_cmd(a, out),
        Command::Reach(a) => reach(a, out),
        Command::Ed(a) => ed(a, out),
        Command::Spectrum(a) => spectrum(a, out),
        Command::Vqe(a) => vqe(a, out),
        Command::Vqd(a) => vqd(a, out),
        Command::BuildSpanning(a) => build_spanning(a, out),
    }
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| usage(format!("expected integers, got {s:?}"))))
        .collect()
}

/// `hamming:N,K`, `fuzzy:NORB` or `bempa:MODES,BITS,TOTAL`.
pub fn parse_sector(s: &str) -> Result<SectorBasis> {
    let (kind, rest) = s.split_once(':').ok_or_else(|| usage(format!("sector {s:?} lacks a kind prefix")))?;
    let v = parse_list(rest)?;
    let basis = match (kind, v.as_slice()) {
        ("hamming", &[n, k]) => enumerate_sector(&SectorSpec::hamming(n, k))?,
        ("fuzzy", &[norb]) => enumerate_sector(&SectorSpec::fuzzy(norb))?,
        ("bempa", &[m, b, t]) => bempa_sector(m, b, t as u64)?,
        _ => return Err(usage(format!("unrecognised sector {s:?}"))),
    };
    Ok(basis)
}

/// The fuzzy sector when the input state lies in it, else the Hamming sector.
fn auto_sector(c: &Circuit) -> Result<SectorBasis> {
    let n = c.n_qubits;
    if n % 2 == 0 {
        let spec = SectorSpec::fuzzy(n / 2);
        if spec.contains(c.input_state) {
            return Ok(enumerate_sector(&spec)?);
        }
    }
    Ok(enumerate_sector(&SectorSpec::hamming(n, c.input_state.count_ones() as usize))?)
}

fn load_circuit(path: &Option<PathBuf>) -> Result<Circuit> {
    match path {
        Some(p) => Circuit::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(fig1_circuit()),
    }
}

fn circuit_and_sector(path: &Option<PathBuf>, sector: &Option<String>) -> Result<(Circuit, SectorBasis)> {
    let c = load_circuit(path)?;
    let s = match sector {
        Some(s) => parse_sector(s)?,
        None => auto_sector(&c)?,
    };
    Ok((c, s))
}

impl ModelArgs {
    fn provided(&self) -> bool {
        self.model.is_some() || self.s.is_some() || self.v0.is_some() || self.v1.is_some() || self.h.is_some()
    }

    /// Critical couplings overridden by `--model` and then by single flags.
    fn resolve(&self) -> Result<ModelParams> {
        let mut s = 1.5;
        let (mut v0, mut v1, mut h) = (4.75, 1.0, 6.32);
        if let Some(spec) = &self.model {
            if spec != "critical" {
                for kv in spec.split(',') {
                    let (k, v) = kv.split_once('=').ok_or_else(|| usage(format!("bad model entry {kv:?}")))?;
                    let v: f64 = v.trim().parse().map_err(|_| usage(format!("bad number in {kv:?}")))?;
                    match k.trim() {
                        "s" => s = v,
                        "v0" => v0 = v,
                        "v1" => v1 = v,
                        "h" => h = v,
                        other => return Err(usage(format!("unknown model key {other:?}"))),
                    }
                }
            }
        }
        s = self.s.unwrap_or(s);
        v0 = self.v0.unwrap_or(v0);
        v1 = self.v1.unwrap_or(v1);
        h = self.h.unwrap_or(h);
        if s <= 0.0 || (2.0 * s).fract() != 0.0 {
            return Err(usage(format!("s must be a positive half-integer, got {s}")));
        }
        Ok(ModelParams::new(s, v0, v1, h))
    }
}

fn model_json(p: &ModelParams) -> serde_json::Value {
    json!({"s": p.two_s as f64 / 2.0, "v0": p.v[0], "v1": p.v[1], "h": p.h})
}

fn verify_identities(out: Option<PathBuf>) -> Result<bool> {
    let mut sink = Sink::new(out, "verify-identities", json!({}), None);
    let checks = verify_all()?;
    let mut csv = String::from("name,passed,residual_terms\n");
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &checks {
        println!("{}  {:width$}", if c.passed { "PASS" } else { "FAIL" }, c.name);
        writeln!(csv, "{:?},{},{}", c.name, c.passed, c.diff.len())?;
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    println!("{passed}/{} identities hold", checks.len());
    sink.write("identities.csv", &csv)?;
    sink.finish()?;
    Ok(passed == checks.len())
}

fn closure(a: ClosureArgs, out: Option<PathBuf>) -> Result<bool> {
    let sector = parse_sector(&a.sector)?;
    let n = sector.n_qubits();
    let gens = match (&a.gens, a.pool.as_deref()) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            GeneratorSet::parse(&path.display().to_string(), &text)?
        }
        (None, Some(pool)) => {
            let g = match pool {
                "all-pair" => all_pair_hops(n),
                "adjacent" => adjacent_hops(n),
                "fuzzy" => fuzzy_pool(n / 2),
                "bempa" => {
                    let (modes, bits) = match a.sector.strip_prefix("bempa:").map(parse_list) {
                        Some(Ok(v)) => (v[0], v[1]),
                        _ => return Err(usage("the bempa pool needs a bempa:MODES,BITS,TOTAL sector")),
                    };
                    bempa_generators(modes, bits)
                }
                other => return Err(usage(format!("unknown pool {other:?}"))),
            };
            GeneratorSet::new(pool, n, g)?
        }
        (None, None) => return Err(usage("closure needs --gens or --pool")),
    };
    let flags = json!({"sector": a.sector, "gens": a.gens, "pool": a.pool, "complex": a.complex, "expect": a.expect});
    let mut sink = Sink::new(out, "closure", flags, None);
    let c = closure_against_target(&gens, &sector, a.complex)?;
    println!("{} generators on {} ({} states): {}", gens.generators.len(), a.sector, sector.dim(), c.report);
    let r = &c.report;
    sink.write(
        "closure.csv",
        &format!(
            "dimension,target,matched,converged,sweeps\n{},{},{},{},{}\n",
            r.dimension,
            r.target_dim.unwrap_or(0),
            r.matched.unwrap_or(false),
            r.converged,
            r.iterations
        ),
    )?;
    sink.finish()?;
    Ok(r.converged && a.expect.is_none_or(|e| e == r.dimension))
}

fn dim(a: DimArgs, out: Option<PathBuf>) -> Result<bool> {
    let spec = match (a.fuzzy_n, a.qubits, a.weight) {
        (Some(n), _, _) => SectorSpec::fuzzy(n),
        (None, Some(n), Some(k)) => SectorSpec::hamming(n, k),
        _ => return Err(usage("dim needs --fuzzy-n or --qubits with --weight")),
    };
    spec.validate()?;
    let flags = json!({"fuzzy_n": a.fuzzy_n, "qubits": a.qubits, "weight": a.weight, "list": a.list});
    let mut sink = Sink::new(out, "dim", flags, None);
    let count = count_sector(&spec);
    println!("{count}");
    if a.list {
        let basis = enumerate_sector(&spec)?;
        let mut csv = String::from("index,state\n");
        for (i, &s) in basis.states().iter().enumerate() {
            writeln!(csv, "{i},{}", format_bits(s, spec.n_qubits))?;
        }
        if sink.enabled() {
            sink.write("basis.csv", &csv)?;
        } else {
            print!("{csv}");
        }
    }
    sink.finish()?;
    Ok(true)
}

const DECOMPOSED: [GateKind; 6] =
    [GateKind::G2, GateKind::A2, GateKind::BempaA, GateKind::BempaB, GateKind::G4, GateKind::A4];

fn gates_verify(samples: usize, emit: Option<PathBuf>, out: Option<PathBuf>) -> Result<bool> {
    let mut sink = Sink::new(out, "gates", json!({"samples": samples, "emit": emit}), None);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut ok = true;
    let mut csv = String::from("kind,max_error,cnots,depth,reference_cnots,reference_depth\n");
    let mut emitted = String::new();
    println!("{:<8} {:>10} {:>6} {:>6} {:>10}", "kind", "max_error", "cnots", "depth", "reference");
    for kind in DECOMPOSED {
        let mut err = 0.0f64;
        for _ in 0..samples {
            let t = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            err = err.max(max_abs_diff(&decomposition_matrix(&decompose(kind, t)?), &gate_matrix(kind, t, None)?));
        }
        let d = decompose(kind, 0.3)?;
        let (cnots, depth) = resource_count(&d);
        let reference = REFERENCE_RESOURCES.iter().find(|(k, _)| *k == kind).map(|(_, r)| *r);
        let matches = reference.is_none_or(|r| r == (cnots, depth));
        let good = err < 1e-12 && matches;
        ok &= good;
        let shown = reference.map_or("-".to_string(), |(c, d)| format!("({c}, {d})"));
        println!(
            "{:<8} {:>10.2e} {:>6} {:>6} {:>10}  {}",
            kind.name(),
            err,
            cnots,
            depth,
            shown,
            if good { "PASS" } else { "FAIL" }
        );
        let (rc, rd) = reference.map_or((String::new(), String::new()), |(c, d)| (c.to_string(), d.to_string()));
        writeln!(csv, "{},{},{cnots},{depth},{rc},{rd}", kind.name(), num(err))?;
        writeln!(emitted, "# {} theta=0.3\n{}", kind.name(), d.emit())?;
    }
    if let Some(path) = &emit {
        write_file(path, &emitted)?;
        sink.record(path);
    }
    sink.write("gates.csv", &csv)?;
    sink.finish()?;
    Ok(ok)
}

fn jacobian_cmd(a: JacobianArgs, out: Option<PathBuf>) -> Result<bool> {
    let (c, sector) = circuit_and_sector(&a.circuit.circuit, &a.circuit.sector)?;
    let flags = json!({"circuit": a.circuit.circuit, "sector": a.circuit.sector, "points": a.points});
    let mut sink = Sink::new(out, "jacobian", flags, Some(a.seed));
    let w = sector.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut csv = String::from("point,rank,target,smallest_singular_value\n");
    let mut all_full = true;
    for point in 0..=a.points {
        let p = random_params(&mut rng, c.n_params);
        let r = jacobian(&c, &p, &sector)?;
        let smallest = r.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
        let label = if point == 0 { "reference".to_string() } else { format!("point {point}") };
        println!("{label}: rank {} of w-1 = {} ({} parameters)", r.rank, w - 1, c.n_params);
        writeln!(csv, "{point},{},{},{}", r.rank, w - 1, num(smallest))?;
        all_full &= r.rank == w - 1;
    }
    println!("spans the tangent space: {}", if all_full { "yes" } else { "no" });
    sink.write("jacobian.csv", &csv)?;
    sink.finish()?;
    Ok(all_full)
}

fn reach(a: ReachArgs, out: Option<PathBuf>) -> Result<bool> {
    let (mut c, sector) = circuit_and_sector(&a.circuit.circuit, &a.circuit.sector)?;
    if let Some(k) = a.truncate {
        c = c.truncated(k);
    }
    let flags = json!({"circuit": a.circuit.circuit, "sector": a.circuit.sector, "targets": a.targets,
        "restarts": a.restarts, "max_iters": a.max_iters, "truncate": a.truncate});
    let mut sink = Sink::new(out, "reach", flags, Some(a.seed));
    let cfg = ReachConfig {
        restarts: a.restarts,
        max_iters: a.max_iters,
        ..ReachConfig::default()
    };
    let r = reachability_with(&c, &sector, a.targets, a.seed, cfg)?;
    println!("reached {}/{} targets ({} parameters, tolerance {:.0e})", r.reached, r.n_targets, c.n_params, r.tol);
    if let Some(m) = r.max_reached_cost() {
        println!("max reached cost {m:.3e}");
    }
    let unreached = r.unreached();
    if !unreached.is_empty() {
        let s: Vec<String> = unreached.iter().map(|x| format!("{x:.2e}")).collect();
        println!("unreached residuals: {}", s.join(" "));
    }
    let mut csv = String::from("target,residual,reached\n");
    for (t, &res) in r.residuals.iter().enumerate() {
        writeln!(csv, "{t},{},{}", num(res), res < r.tol)?;
    }
    sink.write("reach.csv", &csv)?;
    sink.finish()?;
    Ok(true)
}

fn ed(a: EdArgs, out: Option<PathBuf>) -> Result<bool> {
    if !a.model.provided() {
        return Err(usage("ed needs model flags (--model critical, or --s/--v0/--v1/--h)"));
    }
    let p = a.model.resolve()?;
    let mut sink = Sink::new(out, "ed", json!({"model": model_json(&p), "levels": a.levels}), None);
    let sol = solve_model(&p)?;
    let n = a.levels.unwrap_or(sol.spectrum.energies.len()).min(sol.spectrum.energies.len());
    println!("sector dimension {}", sol.sector.dim());
    let mut csv = String::from("level,energy,ell,z2\n");
    for i in 0..n {
        let (ell, z2) = sol.qnums[i];
        println!("{i:>3} {:>18.10} l={ell} z2={z2:+}", sol.spectrum.energies[i]);
        writeln!(csv, "{i},{},{ell},{z2}", num(sol.spectrum.energies[i]))?;
    }
    sink.write("ed.csv", &csv)?;
    sink.finish()?;
    Ok(true)
}

fn spectrum(a: SpectrumArgs, out: Option<PathBuf>) -> Result<bool> {
    let p = a.model.resolve()?;
    let flags = json!({"model": model_json(&p), "rescale": a.rescale, "bootstrap_compare": a.bootstrap_compare});
    let mut sink = Sink::new(out, "spectrum", flags, None);
    let sol = solve_model(&p)?;
    let csv = spectrum_csv(&sol, a.rescale, a.bootstrap_compare, p.two_s)?;
    print!("{csv}");
    sink.write("spectrum.csv", &csv)?;
    sink.finish()?;
    Ok(true)
}

fn spectrum_csv(sol: &ModelSolution, rescale: bool, compare: bool, two_s: i64) -> Result<String> {
    let mut csv = String::new();
    if !rescale {
        csv.push_str("energy,ell,z2\n");
        for (e, (l, z)) in sol.spectrum.energies.iter().zip(&sol.qnums) {
            writeln!(csv, "{},{l},{z}", num(*e))?;
        }
        return Ok(csv);
    }
    if compare && two_s != 3 {
        return Err(usage("bootstrap comparison is only tabulated for s = 3/2"));
    }
    csv.push_str(if compare { "energy,dimension,ell,z2,bootstrap,deviation_pct\n" } else { "energy,dimension,ell,z2\n" });
    for (i, e) in sol.entries()?.iter().enumerate() {
        write!(csv, "{},{},{},{}", num(e.energy), num(e.dimension), e.ell, e.z2)?;
        if compare {
            match REFERENCE_N4.get(i).and_then(|r| r.bootstrap) {
                Some(b) if b != 0.0 => write!(csv, ",{},{}", num(b), num(100.0 * (e.dimension - b).abs() / b))?,
                Some(b) => write!(csv, ",{},", num(b))?,
                None => csv.push(','),
            }
        }
        csv.push('\n');
    }
    Ok(csv)
}

fn write_trace(t: &RunTrace, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    t.write_dat(&mut buf)?;
    write_file(path, &String::from_utf8(buf)?)
}

fn model_setup(circuit: &Option<PathBuf>, model: &ModelArgs) -> Result<(Circuit, ModelParams, ModelSolution)> {
    let c = load_circuit(circuit)?;
    let p = model.resolve()?;
    if c.n_qubits != p.n_qubits() {
        return Err(usage(format!("circuit has {} qubits, model needs {}", c.n_qubits, p.n_qubits())));
    }
    let sol = solve_model(&p)?;
    Ok((c, p, sol))
}

fn vqe(a: VqeArgs, out: Option<PathBuf>) -> Result<bool> {
    let (c, p, sol) = model_setup(&a.circuit, &a.model)?;
    let flags = json!({"circuit": a.circuit, "model": model_json(&p), "trace": a.trace});
    let mut sink = Sink::new(out, "vqe", flags, Some(a.seed));
    let t = run_vqe(&c, &sol.sector, &sol.hamiltonian, &OptimizerConfig::vqe(a.seed))?;
    let e0 = sol.spectrum.energies[0];
    println!("{t}");
    println!("exact {e0:.10}  |error| {:.3e}", (t.energy - e0).abs());
    if let Some(path) = &a.trace {
        write_trace(&t, path)?;
        sink.record(path);
    } else if sink.enabled() {
        let mut buf = Vec::new();
        t.write_dat(&mut buf)?;
        sink.write("vqe_trace.dat", &String::from_utf8(buf)?)?;
    }
    sink.write(
        "vqe.csv",
        &format!("energy,exact,params\n{},{},{}\n", num(t.energy), num(e0), t.params.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ")),
    )?;
    sink.finish()?;
    Ok(true)
}

fn parse_betas(groups: &[String], levels: usize) -> Result<Vec<Vec<f64>>> {
    if groups.is_empty() {
        if levels > 2 {
            return Err(usage("default penalty strengths cover two levels; pass --betas"));
        }
        return Ok(default_betas());
    }
    groups
        .iter()
        .map(|g| {
            g.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| usage(format!("bad penalty strength in {g:?}"))))
                .collect()
        })
        .collect()
}

fn vqd(a: VqdArgs, out: Option<PathBuf>) -> Result<bool> {
    let (c, p, sol) = model_setup(&a.circuit, &a.model)?;
    let betas = parse_betas(&a.betas, a.levels)?;
    let flags = json!({"circuit": a.circuit, "model": model_json(&p), "levels": a.levels, "betas": betas, "trace": a.trace});
    let mut sink = Sink::new(out, "vqd", flags, Some(a.seed));
    let traces = run_vqd(
        &c,
        &sol.sector,
        &sol.hamiltonian,
        a.levels,
        &OptimizerConfig::vqe(a.seed),
        &OptimizerConfig::vqd(a.seed),
        &betas,
    )
    .map_err(|e| match e {
        zdress::Error::Invalid(m) => usage(m),
        other => anyhow!(other),
    })?;
    let mut csv = String::from("level,energy,exact\n");
    for (k, t) in traces.iter().enumerate() {
        let exact = sol.spectrum.energies[k];
        println!("level {k}: {t}; exact {exact:.10}, |error| {:.3e}", (t.energy - exact).abs());
        writeln!(csv, "{k},{},{}", num(t.energy), num(exact))?;
        if let Some(prefix) = &a.trace {
            let path = PathBuf::from(format!("{}_{k}.dat", prefix.display()));
            write_trace(t, &path)?;
            sink.record(&path);
        } else if sink.enabled() {
            let mut buf = Vec::new();
            t.write_dat(&mut buf)?;
            sink.write(&format!("vqd_trace_{k}.dat"), &String::from_utf8(buf)?)?;
        }
    }
    let prepared: Vec<_> = traces.iter().map(|t| t.state.clone()).collect();
    let exact: Vec<_> = (0..traces.len()).map(|i| sol.eigenvector(i)).collect();
    let ov = overlap_matrix(&prepared, &exact)?;
    println!("overlap matrix |<psi_k|phi_j>|^2:");
    let mut ov_csv = String::new();
    for r in 0..ov.nrows() {
        let row: Vec<String> = (0..ov.ncols()).map(|c| format!("{:.10}", ov[(r, c)])).collect();
        println!("  {}", row.join(" "));
        let row: Vec<String> = (0..ov.ncols()).map(|c| num(ov[(r, c)])).collect();
        writeln!(ov_csv, "{}", row.join(","))?;
    }
    sink.write("vqd.csv", &csv)?;
    sink.write("overlap.csv", &ov_csv)?;
    sink.finish()?;
    Ok(true)
}

fn build_spanning(a: SpanningArgs, out: Option<PathBuf>) -> Result<bool> {
    let sector = parse_sector(&a.sector)?;
    let input = parse_bits(&a.input)?;
    let n = sector.n_qubits();
    if sector.index_of(input).is_none() {
        return Err(usage(format!("input {} is not in sector {}", a.input, a.sector)));
    }
    let pool = match a.pool.as_str() {
        "fuzzy" => fuzzy_gate_pool(n / 2),
        "all-pair" => g2_pool(n, false),
        "adjacent" => g2_pool(n, true),
        other => return Err(usage(format!("unknown pool {other:?}"))),
    };
    let flags = json!({"sector": a.sector, "input": a.input, "pool": a.pool, "write": a.write});
    let mut sink = Sink::new(out, "build-spanning", flags, Some(a.seed));
    let r = build_spanning_circuit(&sector, input, &pool, a.seed, SpanningOptions::default())?;
    println!(
        "core of {} gates reaches rank {} (w-1 = {}); {} extras; probe reached {:?}",
        r.core_len,
        r.rank,
        sector.dim() - 1,
        r.circuit.gates.len() - r.core_len,
        r.probes
    );
    let text = r.circuit.to_string();
    print!("{text}");
    if let Some(path) = &a.write {
        write_file(path, &text)?;
        sink.record(path);
    }
    sink.write("circuit.txt", &text)?;
    sink.finish()?;
    if r.rank + 1 != sector.dim() {
        bail!("construction stopped at rank {}", r.rank);
    }
    Ok(true)
}
