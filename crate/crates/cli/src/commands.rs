use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{json, Value};
use smc_core::affine::MessageLayout;
use smc_core::capacity::{region_sample, secrecy_capacity_degraded, RegionModel};
use smc_core::codec::{
    construct_practical, parse_generator, simulate, BaseCode, BcdCodebook, PracticalParams, SmcCode, UniformProfile,
};
use smc_core::exponents::{
    kernel_value, leakage_bound_terms, practical_bound, universal_quadruple, Construction, IndexSet, Kernel,
    LeakageTerms, RateSpec, SourceProfile,
};
use smc_core::oracle::{
    ensemble_bound_check, ensemble_term_count, exact_error, exact_leakage, leakage_term_count, AffineSpec,
    AssignmentSpec, EnsembleSpec, MixingSpec,
};
use smc_core::probability::{ChainSpec, Channel};
use smc_core::renyi::JointSource;

use crate::input::{parse_grid, parse_list, Inputs};
use crate::output::{write_manifest, Cell, Manifest, Table};
use crate::{BoundKind, CapacityMode, CheckMode, Cli, CliError, Command, ModelArg};

struct Outcome {
    table: Table,
    extra: Value,
    outputs: Vec<String>,
    violation: Option<String>,
}

impl Outcome {
    fn table(table: Table) -> Self {
        Self {
            table,
            extra: Value::Null,
            outputs: Vec::new(),
            violation: None,
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let inputs = Inputs::default();
    let outcome = dispatch(cli, &inputs)?;
    let table = if cli.bits {
        outcome.table.into_bits()
    } else {
        outcome.table
    };
    if let Err(e) = table.write_csv(std::io::stdout().lock()) {
        // a closed pipe downstream (`| head`) is not an error
        let closed = matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe);
        if !closed {
            return Err(CliError::Io(e.to_string()));
        }
    }
    if !cli.no_manifest {
        let path = cli
            .manifest
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.manifest.json", cli.command.name())));
        let manifest = Manifest {
            command: cli.command.name().to_string(),
            argv: std::env::args().collect(),
            seed: cli.seed,
            cap: cli.cap,
            threads: cli.threads,
            parallel: smc_core::exec::is_parallel(),
            units: if cli.bits { "bits" } else { "nats" },
            versions: json!({ "smc-core": smc_core::VERSION, "smc-cli": env!("CARGO_PKG_VERSION") }),
            inputs: inputs.recorded(),
            columns: table.header.clone(),
            rows: table.json_rows(),
            outputs: outcome.outputs,
            extra: outcome.extra,
        };
        write_manifest(&path, &manifest).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    match outcome.violation {
        Some(v) => Err(CliError::Violation(v)),
        None => Ok(()),
    }
}

fn dispatch(cli: &Cli, inputs: &Inputs) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Bound {
            chain,
            construction,
            n,
            rates,
            source,
            set,
            log_b1,
            rho_grid,
            no_overhead,
            common,
        } => {
            let chain = inputs.chain(chain)?;
            let (profile, t) = match (source, rates) {
                (Some(path), _) => {
                    let src: JointSource = inputs.load(path)?;
                    let t = src.shape().len().saturating_sub(1);
                    (SourceProfile::Exact(src), t)
                }
                (None, Some(r)) => {
                    let r: Vec<f64> = parse_list(r).map_err(CliError::Spec)?;
                    if r.len() < 2 {
                        return Err(CliError::Spec("--rates needs R_0 and at least one R_i".into()));
                    }
                    (SourceProfile::uniform_rates(*n, &r), r.len() - 1)
                }
                (None, None) => return Err(CliError::Spec("give --rates or --source".into())),
            };
            let sets = parse_sets(set.as_deref(), t)?;
            let grid = parse_grid(rho_grid).map_err(CliError::Spec)?;
            bound(
                &chain,
                *construction,
                *n,
                &profile,
                t,
                &sets,
                *log_b1,
                &grid,
                !no_overhead,
                *common,
            )
        }
        Command::Exponent {
            chain,
            rp,
            rc,
            rates,
            set,
        } => {
            let chain = inputs.chain(chain)?;
            let r: Vec<f64> = parse_list(rates).map_err(CliError::Spec)?;
            let spec = RateSpec::new(r, *rp, *rc)?;
            let sets = parse_sets(set.as_deref(), spec.t())?;
            let mut table = Table::new(["set", "E_b_nats", "E_e_nats", "E_plus_nats", "E_minus_nats"]);
            for s in sets {
                let q = universal_quadruple(*rp, *rc, &spec, &chain, s)?;
                table.push(vec![
                    s.to_string().into(),
                    q.e_b.into(),
                    q.e_e.into(),
                    q.e_plus.into(),
                    q.e_minus.into(),
                ]);
            }
            Ok(Outcome::table(table))
        }
        Command::ResolveCheck {
            mode,
            spec,
            rho,
            rho_grid,
            dry_run,
        } => {
            let ensemble = match mode {
                CheckMode::Thm1 => EnsembleSpec::Assignment(inputs.load::<AssignmentSpec>(spec)?),
                CheckMode::Thm2 => EnsembleSpec::Affine(inputs.load::<AffineSpec>(spec)?),
                CheckMode::Lem4 => EnsembleSpec::Mixing(Box::new(inputs.load_with_refs::<MixingSpec>(spec)?)),
            };
            if *dry_run {
                let mut table = Table::new(["members"]);
                table.push(vec![ensemble_term_count(&ensemble, cli.cap)?.into()]);
                return Ok(Outcome::table(table));
            }
            let grid = match (rho, rho_grid) {
                (Some(r), _) => vec![*r],
                (None, Some(g)) => parse_grid(g).map_err(CliError::Spec)?,
                (None, None) => parse_grid("0.1:1:10").expect("valid default grid"),
            };
            let fixed_code = *mode == CheckMode::Lem4;
            let mut header = vec!["rho", "lhs_d", "lhs", "rhs", "holds", "members"];
            if fixed_code {
                header.push("lhs_mi");
            }
            let mut table = Table::new(header);
            let mut failed = Vec::new();
            for &r in &grid {
                let c = ensemble_bound_check(&ensemble, r, cli.cap)?;
                if !c.holds {
                    failed.push(r);
                }
                let mut row: Vec<Cell> = vec![
                    r.into(),
                    c.lhs_d.into(),
                    c.lhs_psi.into(),
                    c.rhs.into(),
                    c.holds.into(),
                    c.members.into(),
                ];
                if fixed_code {
                    row.push(c.lhs_mi.unwrap_or(f64::NAN).into());
                }
                table.push(row);
            }
            let mut out = Outcome::table(table);
            if !failed.is_empty() {
                out.violation = Some(format!("bound violated at rho = {failed:?}"));
            }
            Ok(out)
        }
        Command::Leakage {
            code,
            source,
            set,
            dry_run,
        } => {
            let code: SmcCode = inputs.load_with_refs(code)?;
            let source = load_source(inputs, source.as_deref(), &code)?;
            let t = code.layout().t();
            let sets = parse_sets(set.as_deref(), t)?;
            if *dry_run {
                let mut table = Table::new(["terms"]);
                table.push(vec![leakage_term_count(&code, &source, cli.cap)?.into()]);
                return Ok(Outcome::table(table));
            }
            let mut table = Table::new(["set", "leakage_nats"]);
            for s in sets {
                table.push(vec![
                    s.to_string().into(),
                    exact_leakage(&code, &source, s, cli.cap)?.into(),
                ]);
            }
            Ok(Outcome::table(table))
        }
        Command::Simulate {
            code,
            source,
            trials,
            exact,
        } => {
            let code: SmcCode = inputs.load_with_refs(code)?;
            let source = load_source(inputs, source.as_deref(), &code)?;
            let r = simulate(&code, &source, *trials, cli.seed)?;
            let mut header = vec![
                "trials",
                "bob_errors",
                "eve_errors",
                "p_b",
                "p_b_lo",
                "p_b_hi",
                "p_e",
                "p_e_lo",
                "p_e_hi",
            ];
            if *exact {
                header.extend(["exact_p_b", "exact_p_e"]);
            }
            let mut row: Vec<Cell> = vec![
                r.trials.into(),
                r.bob_errors.into(),
                r.eve_errors.into(),
                r.p_b.into(),
                r.ci_b.0.into(),
                r.ci_b.1.into(),
                r.p_e.into(),
                r.ci_e.0.into(),
                r.ci_e.1.into(),
            ];
            if *exact {
                let (pb, pe) = exact_error(&code, &source, cli.cap)?;
                row.extend([pb.into(), pe.into()]);
            }
            let mut table = Table::new(header);
            table.push(row);
            Ok(Outcome::table(table))
        }
        Command::Capacity {
            channels,
            mode,
            grid,
            model,
            u_size,
            v_size,
            t,
            samples,
        } => {
            let pair: ChannelPair = inputs.load(channels)?;
            match mode {
                CapacityMode::Degraded => {
                    let c = secrecy_capacity_degraded(&pair.w_y, &pair.w_z, *grid)?;
                    let mut table = Table::new(["secrecy_capacity_nats"]);
                    table.push(vec![c.into()]);
                    Ok(Outcome::table(table))
                }
                CapacityMode::Sample => {
                    let model = match model {
                        ModelArg::BccEquivocation => RegionModel::BccEquivocation,
                        ModelArg::BccLeaked => RegionModel::BccLeaked,
                        ModelArg::Bcd => RegionModel::Bcd,
                        ModelArg::Smc => RegionModel::Smc,
                    };
                    let points = region_sample(&pair.w_y, &pair.w_z, model, *u_size, *v_size, *t, *samples, cli.seed)?;
                    Ok(Outcome::table(region_table(&points, model, *t)))
                }
            }
        }
        Command::Construct {
            chain,
            base,
            generator,
            q,
            k0,
            b1_dim,
            t,
            targets,
            eps2,
            rho_grid,
            out,
        } => {
            let chain = inputs.chain(chain)?;
            let base = match (base, generator) {
                (Some(path), _) => {
                    let spec: BaseSpec = inputs.load(path)?;
                    BaseCode::new(spec.q, spec.k0, spec.b1_dim, spec.b2_dim, spec.codebook)?
                }
                (None, Some(path)) => {
                    let text = inputs.text(path)?;
                    let gen =
                        parse_generator(&text, *q).map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))?;
                    BaseCode::from_generator(*q, &gen, *k0, *b1_dim)?
                }
                (None, None) => return Err(CliError::Spec("give --base or --generator".into())),
            };
            if *t == 0 || *t > 16 {
                return Err(CliError::Spec("--t must lie in 1..=16".into()));
            }
            let mut eps: Vec<f64> = parse_list(targets).map_err(CliError::Spec)?;
            let needed = (1usize << t) - 1;
            if eps.len() == 1 {
                eps = vec![eps[0]; needed];
            }
            let grid = parse_grid(rho_grid).map_err(CliError::Spec)?;
            let profile = UniformProfile;
            let params = PracticalParams {
                base: &base,
                chain: &chain,
                t: *t,
                targets: eps,
                eps2: *eps2,
                rho_grid: grid,
                profile: &profile,
                has_common: base.k0 > 0,
            };
            let result = construct_practical(&params, cli.seed)?;
            let mut table = Table::new(["set", "rho", "bound_nats", "target_nats", "slack_nats"]);
            for r in &result.report {
                table.push(vec![
                    r.set.to_string().into(),
                    r.rho.into(),
                    r.bound.into(),
                    r.target.into(),
                    r.slack.into(),
                ]);
            }
            let mut outcome = Outcome::table(table);
            outcome.extra = json!({ "layout": layout_json(&result.layout) });
            if let Some(path) = out {
                let text = serde_json::to_string_pretty(&result.code).map_err(|e| CliError::Io(e.to_string()))?;
                std::fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                outcome.outputs.push(path.display().to_string());
            }
            Ok(outcome)
        }
    }
}

#[derive(Deserialize)]
struct ChannelPair {
    w_y: Channel,
    w_z: Channel,
}

#[derive(Deserialize)]
struct BaseSpec {
    q: u64,
    #[serde(default)]
    k0: usize,
    #[serde(default)]
    b1_dim: usize,
    b2_dim: usize,
    codebook: BcdCodebook,
}

fn layout_json(layout: &MessageLayout) -> Value {
    serde_json::to_value(layout).unwrap_or(Value::Null)
}

fn parse_sets(text: Option<&str>, t: usize) -> Result<Vec<IndexSet>, CliError> {
    if t == 0 || t > 31 {
        return Err(CliError::Spec(format!("number of secrets {t} must lie in 1..=31")));
    }
    match text {
        None => Ok(IndexSet::nonempty_subsets(t).collect()),
        Some(s) => {
            let members: Vec<usize> = parse_list(s).map_err(CliError::Spec)?;
            let set = IndexSet::from_members(&members, t).map_err(|e| CliError::Spec(format!("--set: {e}")))?;
            if set.is_empty() {
                return Err(CliError::Spec("--set must be nonempty".into()));
            }
            Ok(vec![set])
        }
    }
}

fn load_source(inputs: &Inputs, path: Option<&Path>, code: &SmcCode) -> Result<JointSource, CliError> {
    match path {
        Some(p) => inputs.load(p),
        None => {
            let mut shape = vec![code.layout().s0_count() as usize];
            shape.extend(code.layout().message_counts().iter().map(|&c| c as usize));
            Ok(JointSource::uniform(shape)?)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn bound(
    chain: &ChainSpec,
    kind: BoundKind,
    n: usize,
    profile: &SourceProfile,
    t: usize,
    sets: &[IndexSet],
    log_b1: f64,
    grid: &[f64],
    overhead: bool,
    common: bool,
) -> Result<Outcome, CliError> {
    let mut table = match kind {
        BoundKind::Practical => Table::new([
            "set",
            "rho",
            "phi_star_nats",
            "renyi_nats",
            "exp_moment",
            "leakage_nats",
        ]),
        _ => Table::new(["set", "rho", "kernel_nats", "renyi_nats", "bound_nats"]),
    };
    let w_z = chain.p_z_given_v();
    for &set in sets {
        for &rho in grid {
            let h = profile.value(set, t, rho)?;
            let row: Vec<Cell> = match kind {
                BoundKind::Practical => {
                    let b = practical_bound(rho, &w_z, n, h, 0.0, common)?;
                    let phi_total = n as f64 * b.phi_star;
                    vec![
                        set.to_string().into(),
                        rho.into(),
                        phi_total.into(),
                        h.into(),
                        b.exp_moment.into(),
                        b.leakage.into(),
                    ]
                }
                BoundKind::First | BoundKind::Second => {
                    let (construction, k) = match kind {
                        BoundKind::First => (Construction::First, Kernel::Phi),
                        _ => (Construction::Second, Kernel::Psi),
                    };
                    let kernel = n as f64 * kernel_value(k, rho, chain)?;
                    let terms = LeakageTerms {
                        construction,
                        t,
                        log_b1,
                        kernel,
                        renyi: h,
                        rho,
                    };
                    let b = leakage_bound_terms(&terms, overhead)?;
                    vec![set.to_string().into(), rho.into(), kernel.into(), h.into(), b.into()]
                }
            };
            table.push(row);
        }
    }
    Ok(Outcome::table(table))
}

fn region_table(points: &[smc_core::capacity::RegionPoint], model: RegionModel, t: usize) -> Table {
    let mut header = vec!["r0_nats".to_string()];
    header.extend((1..=t).map(|i| format!("r{i}_nats")));
    if model == RegionModel::BccEquivocation {
        header.push("r_e_nats".into());
    }
    let floor_sets: Vec<IndexSet> = match model {
        RegionModel::BccLeaked | RegionModel::Smc => IndexSet::nonempty_subsets(t).collect(),
        _ => Vec::new(),
    };
    header.extend(floor_sets.iter().map(|s| {
        let m: Vec<String> = s.iter().map(|i| i.to_string()).collect();
        format!("floor_{}_nats", m.join("+"))
    }));
    if let Some(p) = points.first() {
        let c = &p.chain;
        header.extend((0..c.u_size()).map(|u| format!("p_u[{u}]")));
        for u in 0..c.u_size() {
            header.extend((0..c.v_size()).map(|v| format!("p_v_given_u[{u}][{v}]")));
        }
        for v in 0..c.v_size() {
            header.extend((0..c.xi().outputs()).map(|x| format!("xi[{v}][{x}]")));
        }
    }
    let mut table = Table::new(header);
    for p in points {
        let mut row: Vec<Cell> = vec![p.r0.into()];
        row.extend(p.secrets.iter().map(|&r| Cell::from(r)));
        if model == RegionModel::BccEquivocation {
            row.push(p.r_e.unwrap_or(0.0).into());
        }
        row.extend(p.floors.iter().map(|f| Cell::from(f.1)));
        row.extend(p.chain.p_u().probs().iter().map(|&x| Cell::from(x)));
        row.extend(p.chain.p_v_given_u().rows().flatten().map(|&x| Cell::from(x)));
        row.extend(p.chain.xi().rows().flatten().map(|&x| Cell::from(x)));
        table.push(row);
    }
    table
}
