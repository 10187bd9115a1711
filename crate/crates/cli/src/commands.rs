use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use relvalue::data::{
    build_dataset, generate_instances, load_dataset, save_dataset, verify_labels, DataConfig,
    GeneratorSpec,
};
use relvalue::numeric::Checkpoint;
use relvalue::oracle::{has_oracle, vstar, FeatureTag};
use relvalue::pddl::sexpr::{self, Sexpr};
use relvalue::pddl::{parse_domain, parse_instance};
use relvalue::pipeline::{self, ProbeReport};
use relvalue::policy::{evaluate_suite, CoverageTable, GnnValuer, OracleValuer, Valuer};
use relvalue::probe::{collect, evaluate, fit, ProbeConfig};
use relvalue::rng::stream_seed;
use relvalue::search::{astar_with, exact_costs, reachable_states, SearchConfig, SearchOutcome};
use relvalue::trainer::{train, vocabulary, Samples, TrainConfig};
use relvalue::{Atom, DomainDef, DomainTag, Error, GnnConfig, GnnModel, GroundTask, State};

use crate::config::{parse_aggregation, parse_range, ExperimentConfig};
use crate::run_dir::RunDir;
use crate::Command;

type Result<T> = std::result::Result<T, Error>;

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn tag(s: &str) -> Result<DomainTag> {
    s.parse().map_err(config_err)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

/// A domain file, or the built-in domain of a family tag.
fn domain_arg(s: &str) -> Result<DomainDef> {
    if Path::new(s).is_file() {
        Ok(parse_domain(&read(Path::new(s))?)?)
    } else {
        Ok(tag(s)
            .map_err(|_| config_err(format!("`{s}` is neither a file nor a domain tag")))?
            .domain())
    }
}

fn load_instance(domain: &DomainDef, path: &Path) -> Result<GroundTask> {
    let inst = parse_instance(&read(path)?, domain)?;
    Ok(relvalue::pddl::ground(domain, &inst)?)
}

/// All `*.pddl` files of a directory in name order.
fn load_dir(domain: &DomainDef, dir: &Path) -> Result<Vec<(String, GroundTask)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| config_err(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pddl"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(config_err(format!("no .pddl files in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let t = load_instance(domain, p)?;
            Ok((t.name.clone(), t))
        })
        .collect()
}

/// Parses `(p a b)` atoms, one or more per line. Atoms of predicates no
/// action changes are taken from the initial state.
fn parse_state(task: &GroundTask, text: &str) -> Result<State> {
    let wrapped = format!("({text}\n)");
    let top = sexpr::read(&wrapped).map_err(|e| config_err(format!("state file: {e:?}")))?;
    let items = top.as_list().unwrap_or(&[]);
    let d = &task.domain;
    let fluent = |p: &str| {
        d.actions.iter().any(|a| {
            a.add_effects
                .iter()
                .chain(&a.del_effects)
                .any(|e| e.predicate == p)
        })
    };
    let mut atoms: Vec<Atom> = task
        .decode(&task.initial)
        .into_iter()
        .filter(|a| !fluent(&a.predicate))
        .collect();
    for item in items {
        let Sexpr::List(parts, _) = item else {
            return Err(config_err(format!(
                "state file: expected an atom, got `{}`",
                item.as_atom().unwrap_or("")
            )));
        };
        let names: Option<Vec<String>> = parts
            .iter()
            .map(|p| p.as_atom().map(str::to_lowercase))
            .collect();
        let names = names
            .filter(|n| !n.is_empty())
            .ok_or_else(|| config_err("state file: malformed atom"))?;
        atoms.push(Atom {
            predicate: names[0].clone(),
            args: names[1..].to_vec(),
        });
    }
    Ok(task.state_from_atoms(&atoms)?)
}

fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    Ok(Checkpoint::from_bytes(&bytes)?)
}

fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, ckpt.to_bytes())?;
    Ok(())
}

pub fn run(command: Command) -> Result<bool> {
    match command {
        Command::Solve {
            domain,
            instance,
            from_state,
            max_expansions,
        } => solve(&domain, &instance, from_state.as_deref(), max_expansions),
        Command::GenInstances {
            domain,
            sizes,
            count,
            cost,
            seed,
            out,
        } => gen_instances(tag(&domain)?, &sizes, count, cost.as_deref(), seed, &out),
        Command::GenData {
            domain,
            instances,
            out,
            seed,
            walk_length,
            cap,
            verify,
        } => {
            let config = DataConfig {
                walk_length,
                cap,
                seed,
                ..DataConfig::default()
            };
            gen_data(tag(&domain)?, &instances, &out, config, verify)
        }
        Command::Train {
            domain,
            agg,
            k,
            l,
            seeds,
            train: train_path,
            val,
            out,
            epochs,
            batch_size,
            lr,
            l1,
            time_budget_secs,
            seed,
        } => {
            let aggregation = parse_aggregation(&agg).map_err(config_err)?;
            let mut tc = TrainConfig::for_aggregation(aggregation);
            tc.model = GnnConfig {
                k,
                rounds: l,
                aggregation,
                ..GnnConfig::default()
            };
            tc.epochs = epochs;
            tc.batch_size = batch_size;
            tc.lr = lr;
            tc.l1 = l1.unwrap_or(tc.l1);
            tc.time_budget = time_budget_secs.map(Duration::from_secs);
            tc.seeds = (0..seeds)
                .map(|i| stream_seed(seed, &format!("init/{i}")))
                .collect();
            tc.shuffle_seed = stream_seed(seed, "shuffle");
            train_cmd(tag(&domain)?, &tc, &train_path, &val, &out)
        }
        Command::Eval {
            ckpt,
            instances,
            oracle,
            domain,
            max_steps,
            seed,
            verbose,
        } => eval(
            ckpt.as_deref(),
            &instances,
            oracle.as_deref(),
            domain.as_deref(),
            max_steps,
            seed,
            verbose,
        ),
        Command::Probe {
            ckpt,
            domain,
            sigma,
            train,
            test,
            iterations,
            lr,
            seed,
        } => probe_cmd(
            &ckpt,
            tag(&domain)?,
            sigma,
            &train,
            &test,
            ProbeConfig {
                iterations,
                lr,
                seed,
            },
        ),
        Command::OracleCheck {
            domain,
            instance,
            exhaustive,
            limit,
        } => oracle_check(tag(&domain)?, &instance, exhaustive, limit),
        Command::Repro { config } => repro(&ExperimentConfig::load(&config)?),
    }
}

fn solve(
    domain: &str,
    instance: &Path,
    from_state: Option<&Path>,
    max_expansions: usize,
) -> Result<bool> {
    let domain = domain_arg(domain)?;
    let task = load_instance(&domain, instance)?;
    let start = match from_state {
        Some(p) => parse_state(&task, &read(p)?)?,
        None => task.initial.clone(),
    };
    let r = astar_with(&task, &start, SearchConfig { max_expansions });
    match &r.outcome {
        SearchOutcome::Solved(plan) => {
            for &a in &plan.actions {
                println!("{}", task.action_name(a));
            }
            println!("; cost = {}", plan.cost());
        }
        SearchOutcome::Unsolvable => println!("; unsolvable"),
        SearchOutcome::BudgetExhausted => {
            println!("; budget of {max_expansions} expansions exhausted")
        }
    }
    println!("; expansions = {}", r.stats.expansions);
    Ok(!matches!(r.outcome, SearchOutcome::BudgetExhausted))
}

fn gen_instances(
    tag: DomainTag,
    sizes: &str,
    count: usize,
    cost: Option<&str>,
    seed: u64,
    out: &Path,
) -> Result<bool> {
    let mut spec = GeneratorSpec::new(tag, parse_range(sizes).map_err(config_err)?, count);
    spec.cost = cost.map(parse_range).transpose().map_err(config_err)?;
    let g = generate_instances(&spec, seed)?;
    let mut dir = RunDir::create(out, "gen-instances")?;
    dir.record("domain", tag);
    dir.record("seed", seed);
    dir.record("rejected", g.rejected);
    dir.record("shortfall", g.shortfall);
    for (inst, _, c) in &g.instances {
        dir.write(format!("{}.pddl", inst.name), inst.to_string())?;
        println!("{}\t{c}", inst.name);
    }
    dir.finish()?;
    if g.shortfall > 0 {
        eprintln!(
            "only {} of {count} instances met the filters",
            g.instances.len()
        );
    }
    Ok(g.shortfall == 0)
}

fn gen_data(
    tag: DomainTag,
    instances: &Path,
    out: &Path,
    config: DataConfig,
    verify: f64,
) -> Result<bool> {
    let domain = tag.domain();
    let tasks = load_dir(&domain, instances)?;
    let (ds, skipped) = build_dataset(tag, &tasks, config);
    save_dataset(out, &ds)?;
    let mut ok = true;
    println!("samples\t{}", ds.len());
    println!("skipped\t{}", skipped.len());
    for (label, n) in ds.label_counts() {
        println!("label\t{label}\t{n}");
    }
    if !skipped.is_empty() {
        let mut log = String::new();
        for s in &skipped {
            writeln!(log, "{}\t{}\t{:?}", s.instance, s.walk, s.reason).unwrap();
        }
        fs::write(out.with_extension("skipped.tsv"), log)?;
    }
    if verify > 0.0 {
        let check = verify_labels(&domain, &ds, verify, config.seed)?;
        println!(
            "verified\t{}\tmismatches\t{}",
            check.checked,
            check.mismatches.len()
        );
        ok = check.mismatches.is_empty();
    }
    Ok(ok)
}

fn train_cmd(
    tag: DomainTag,
    tc: &TrainConfig,
    train_path: &Path,
    val_path: &Path,
    out: &Path,
) -> Result<bool> {
    let domain = tag.domain();
    let train_ds = load_dataset(train_path)?;
    let val_ds = load_dataset(val_path)?;
    for ds in [&train_ds, &val_ds] {
        if ds.domain != tag {
            return Err(config_err(format!(
                "dataset is for {}, not {tag}",
                ds.domain
            )));
        }
    }
    let trained = train(
        tc,
        &vocabulary(tag)?,
        &Samples::from_dataset(&domain, &train_ds)?,
        &Samples::from_dataset(&domain, &val_ds)?,
    )?;
    let mut ckpt = trained.checkpoint();
    ckpt.meta.push(("domain".into(), tag.to_string()));
    write_checkpoint(out, &ckpt)?;
    let report = trained.report.to_text();
    fs::write(out.with_extension("report.txt"), &report)?;
    print!("{report}");
    Ok(true)
}

fn eval(
    ckpt: Option<&Path>,
    instances: &Path,
    oracle: Option<&str>,
    domain: Option<&str>,
    max_steps: usize,
    seed: u64,
    verbose: bool,
) -> Result<bool> {
    let (family, valuer, label): (DomainTag, Box<dyn Valuer>, String) = match oracle {
        Some(o) => {
            let t = tag(o)?;
            if !has_oracle(t) {
                return Err(config_err(format!("{t} has no closed-form oracle")));
            }
            (t, Box::new(OracleValuer(t)), format!("{t}-oracle"))
        }
        None => {
            let ckpt = read_checkpoint(ckpt.expect("clap requires --ckpt without --oracle"))?;
            let recorded = ckpt.meta("domain").map(str::to_string);
            let t = match domain.map(str::to_string).or(recorded) {
                Some(d) => tag(&d)?,
                None => return Err(config_err("checkpoint records no domain; pass --domain")),
            };
            let model = GnnModel::from_checkpoint(&ckpt)?;
            (t, Box::new(GnnValuer { model, seed }), t.to_string())
        }
    };
    let tasks = load_dir(&family.domain(), instances)?;
    let table = evaluate_suite(valuer.as_ref(), &label, &tasks, max_steps)?;
    print_coverage(&table, verbose);
    Ok(true)
}

fn print_coverage(table: &CoverageTable, verbose: bool) {
    println!("{}", CoverageTable::header());
    println!("{table}");
    if verbose {
        for (name, status, steps, opt) in &table.runs {
            let opt = opt.map_or("-".to_string(), |c| c.to_string());
            println!("# {name}\t{status}\t{steps}\t{opt}");
        }
    }
}

fn feature_for(tag: DomainTag, sigma: bool) -> Result<FeatureTag> {
    let base = FeatureTag::for_domain(tag)
        .ok_or_else(|| config_err(format!("{tag} has no hand-crafted features")))?;
    if sigma {
        base.sigma()
            .ok_or_else(|| config_err(format!("{tag} has no summed feature set")))
    } else {
        Ok(base)
    }
}

fn probe_header() -> &'static str {
    "features\t#\ttrain_mean\ttest_mean\ttrain_total\ttest_total\ttrain_states\ttest_states"
}

fn probe_row(r: &ProbeReport) -> String {
    format!(
        "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}",
        r.feature,
        r.feature.len(),
        r.train.mean,
        r.test.mean,
        r.train.total,
        r.test.total,
        r.train_states,
        r.test_states
    )
}

fn probe_cmd(
    ckpt: &Path,
    tag: DomainTag,
    sigma: bool,
    train_path: &Path,
    test_path: &Path,
    config: ProbeConfig,
) -> Result<bool> {
    let feature = feature_for(tag, sigma)?;
    let model = GnnModel::from_checkpoint(&read_checkpoint(ckpt)?)?;
    let domain = tag.domain();
    let data = |p: &Path| -> Result<_> {
        let ds = load_dataset(p)?;
        let (tasks, items) = ds.grounded_samples(&domain)?;
        collect(&model, feature, &tasks, &items, config.seed)
    };
    let (train_ds, test_ds) = (data(train_path)?, data(test_path)?);
    let (fitted, train_loss) = fit(&train_ds, config)?;
    let test_loss = evaluate(&fitted, &test_ds)?;
    println!("{}", probe_header());
    println!(
        "{}",
        probe_row(&ProbeReport {
            feature,
            train: train_loss,
            test: test_loss,
            train_states: train_ds.len(),
            test_states: test_ds.len(),
        })
    );
    Ok(true)
}

fn oracle_check(tag: DomainTag, instance: &Path, exhaustive: bool, limit: usize) -> Result<bool> {
    if !has_oracle(tag) {
        return Err(config_err(format!("{tag} has no closed-form oracle")));
    }
    let task = load_instance(&tag.domain(), instance)?;
    let states = if exhaustive {
        let r = reachable_states(&task, limit);
        if r.truncated {
            return Err(config_err(format!(
                "more than {limit} reachable states; raise --limit"
            )));
        }
        r.states
    } else {
        match astar_with(&task, &task.initial, SearchConfig::default()).outcome {
            SearchOutcome::Solved(plan) => plan.states,
            _ => vec![task.initial.clone()],
        }
    };
    let costs = exact_costs(&task, &states);
    let (mut matched, mut total) = (0, 0);
    println!("state\tvstar\toptimal_cost\tmatch");
    for s in &states {
        let v = vstar(tag, &task, s)?;
        let c = costs.get(s).copied();
        let ok = v.value() == c;
        total += 1;
        matched += usize::from(ok);
        let v = v.value().map_or("undefined".to_string(), |x| x.to_string());
        let c = c.map_or("inf".to_string(), |x| x.to_string());
        println!(
            "{}\t{v}\t{c}\t{}",
            task.format_state(s),
            if ok { "yes" } else { "no" }
        );
    }
    println!("# {matched}/{total} states match");
    Ok(matched == total)
}

fn repro(c: &ExperimentConfig) -> Result<bool> {
    let mut dir = RunDir::create(&c.out, "repro")?;
    dir.record("domain", c.domain);
    dir.record("seed", c.seed);
    let mut summary = String::new();
    let mut checks: Vec<(String, bool)> = Vec::new();
    let feature = FeatureTag::for_domain(c.domain);
    let mut wrote_data = false;

    for &agg in &c.aggregations {
        let result = pipeline::run(&c.pipeline(agg))?;
        if !wrote_data {
            for (split, list) in [
                ("train", &result.instances.train),
                ("val", &result.instances.val),
                ("test", &result.instances.test),
            ] {
                for (inst, _, _) in list.iter() {
                    dir.write(
                        format!("instances/{split}/{}.pddl", inst.name),
                        inst.to_string(),
                    )?;
                }
            }
            for (name, ds) in [("train", &result.train_set), ("val", &result.val_set)] {
                let p = dir.path(format!("data/{name}.tsv"));
                fs::create_dir_all(p.parent().unwrap())?;
                save_dataset(&p, ds)?;
                dir.track(p);
            }
            wrote_data = true;
        }
        let mut ckpt = result.trained.checkpoint();
        ckpt.meta.push(("domain".into(), c.domain.to_string()));
        let ckpt_path = dir.path(format!("{agg}.ckpt"));
        write_checkpoint(&ckpt_path, &ckpt)?;
        dir.track(ckpt_path);
        dir.write(format!("{agg}.train.txt"), result.trained.report.to_text())?;

        let mut cov = format!("{}\n{}\n", CoverageTable::header(), result.coverage);
        for (name, status, steps, opt) in &result.coverage.runs {
            writeln!(
                cov,
                "# {name}\t{status}\t{steps}\t{}",
                opt.map_or("-".into(), |x| x.to_string())
            )
            .unwrap();
        }
        dir.write(format!("{agg}.coverage.txt"), cov)?;
        dir.record(&format!("{agg}.eval_seed"), result.eval_seed);

        let rate = result.coverage.optimal_rate();
        writeln!(summary, "{agg}\tcoverage\t{}", result.coverage).unwrap();
        checks.push((
            format!("{agg} optimal rate {rate:.2} >= {}", c.min_optimal_rate),
            rate >= c.min_optimal_rate,
        ));

        if let Some(f) = feature {
            let config = ProbeConfig {
                iterations: c.probe_iterations,
                seed: c.seed,
                ..ProbeConfig::default()
            };
            let mut rows = format!("{}\n", probe_header());
            for f in [Some(f), f.sigma()].into_iter().flatten() {
                let r = pipeline::probe(&result, f, c.probe_walk_length, config)?;
                writeln!(rows, "{}", probe_row(&r)).unwrap();
                writeln!(summary, "{agg}\tprobe\t{}", probe_row(&r)).unwrap();
                if f == FeatureTag::for_domain(c.domain).unwrap() {
                    checks.push((
                        format!(
                            "{agg} probe test loss {:.3} < {}",
                            r.test.mean, c.max_probe_loss
                        ),
                        r.test.mean < c.max_probe_loss,
                    ));
                }
            }
            dir.write(format!("{agg}.probe.txt"), rows)?;
        }
        writeln!(summary, "time.{agg}\t{:.1}s", result.elapsed.as_secs_f64()).unwrap();
    }
    let passed = checks.iter().all(|(_, ok)| *ok);
    for (name, ok) in &checks {
        writeln!(
            summary,
            "check\t{}\t{name}",
            if *ok { "PASS" } else { "FAIL" }
        )
        .unwrap();
    }
    print!("{summary}");
    dir.write("summary.txt", &summary)?;
    dir.record("passed", passed);
    dir.finish()?;
    Ok(passed)
}
