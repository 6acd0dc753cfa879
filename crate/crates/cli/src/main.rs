use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nmdekl::model::{
    separation_demo, soundness_check, SetModelInstance, Soundness, DEFAULT_MORPHISM_BOUND,
};
use nmdekl::mu::{
    ctl_eval, dec, enc, ltl_eval, mc_mu, mc_propmu, parse_ctl, parse_ltl, parse_mu, parse_propmu,
    KripkeStructure, LassoTrace, MuError,
};
use nmdekl::normalize::{normalize_in, Env, ReductionOutcome, DEFAULT_FUEL};
use nmdekl::parser::{parse_term, parse_theory, pretty_print, ParseError};
use nmdekl::typeck::check_theory_with;

const EXIT_TYPE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_TOTALITY: u8 = 4;
const EXIT_UNTRANSLATABLE: u8 = 5;

#[derive(Parser)]
#[command(
    name = "nmdekl",
    version,
    about = "Typechecker, normalizer and model checker for NMDEKL theories"
)]
struct Cli {
    /// Reduction fuel per normalization.
    #[arg(long, global = true, env = "NMDEKL_FUEL", default_value_t = DEFAULT_FUEL)]
    fuel: usize,
    /// Longest generator path enumerated in trajectory categories.
    #[arg(long, global = true, default_value_t = DEFAULT_MORPHISM_BOUND)]
    morphism_bound: usize,
    /// Depth of the K_inf approximation.
    #[arg(long, global = true, default_value_t = 6)]
    depth: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Report membership of one state instead of the satisfying set.
    #[arg(long, global = true)]
    state: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Machine,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Logic {
    /// LTL when --lasso is given; otherwise μ-calculus, then CTL, then
    /// Prop_μ, whichever parses first.
    Auto,
    Mu,
    Ctl,
    Ltl,
    Propmu,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    Enc,
    Dec,
}

#[derive(Subcommand)]
enum Command {
    /// Typecheck theory files.
    Check {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Print the normal form of a term.
    Normalize {
        term: String,
        /// Theory whose definitions may be unfolded.
        #[arg(long)]
        theory: Option<PathBuf>,
    },
    /// Model-check a formula against a Kripke structure file.
    Mc {
        structure: PathBuf,
        formula: String,
        #[arg(long, value_enum, default_value_t = Logic::Auto)]
        logic: Logic,
        /// Lasso file for LTL.
        #[arg(long)]
        lasso: Option<PathBuf>,
    },
    /// Translate between the μ-calculus and Prop_μ.
    Translate {
        #[arg(value_enum)]
        direction: Direction,
        formula: String,
    },
    /// Load a Set-model instance, report on it and spot-check a theory.
    SemEval {
        instance: PathBuf,
        theory: Option<PathBuf>,
        /// Lasso whose K_inf families to report, up to --depth.
        #[arg(long)]
        lasso: Option<PathBuf>,
        /// Presheaf used for --lasso.
        #[arg(long, default_value = "K_f")]
        presheaf: String,
    },
    /// Build the two separating models and report.
    SepDemo,
}

struct Failure {
    code: u8,
    message: String,
}

type Outcome = Result<u8, Failure>;

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

fn parse_failure(source: &str, e: &ParseError) -> Failure {
    fail(EXIT_PARSE, format!("{source}:{e}"))
}

fn mu_failure(e: MuError) -> Failure {
    let code = match e {
        MuError::NotTotal(_) => EXIT_TOTALITY,
        MuError::Untranslatable(_) => EXIT_UNTRANSLATABLE,
        MuError::Structure(_) | MuError::UnknownState(_) | MuError::InconsistentLasso(_) => EXIT_IO,
        _ => EXIT_TYPE,
    };
    fail(code, e.to_string())
}

fn cmd_check(cli: &Cli, paths: &[PathBuf]) -> Outcome {
    let mut worst = 0;
    for path in paths {
        let text = match read(path) {
            Ok(t) => t,
            Err(f) => {
                eprintln!("{}", f.message);
                worst = worst.max(f.code);
                continue;
            }
        };
        let theory = match parse_theory(&text) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("{}", parse_failure(&path.display().to_string(), &e).message);
                worst = worst.max(EXIT_PARSE);
                continue;
            }
        };
        let (report, _) = check_theory_with(&theory, cli.fuel);
        let lines = match cli.format {
            Format::Human => report.human_lines(),
            Format::Machine => report.machine_lines(),
        };
        for line in lines {
            match cli.format {
                Format::Human if paths.len() > 1 => println!("{}: {line}", path.display()),
                _ => println!("{line}"),
            }
        }
        if !report.all_ok() {
            worst = worst.max(EXIT_TYPE);
        }
    }
    Ok(worst)
}

fn cmd_normalize(cli: &Cli, term: &str, theory: Option<&Path>) -> Outcome {
    let env = match theory {
        Some(p) => {
            let text = read(p)?;
            let th =
                parse_theory(&text).map_err(|e| parse_failure(&p.display().to_string(), &e))?;
            check_theory_with(&th, cli.fuel).1.env
        }
        None => Env::new(),
    };
    let t = parse_term(term).map_err(|e| parse_failure("<term>", &e))?;
    match normalize_in(&env, &t, cli.fuel) {
        ReductionOutcome::Normal(n) => {
            println!("{}", pretty_print(&n));
            Ok(0)
        }
        ReductionOutcome::FuelExhausted { partial, steps } => {
            println!(
                "FUEL-EXHAUSTED after {steps} steps: {}",
                pretty_print(&partial)
            );
            Ok(EXIT_TYPE)
        }
    }
}

fn print_states(cli: &Cli, m: &KripkeStructure, states: &[String]) -> Outcome {
    match &cli.state {
        Some(s) => {
            m.index_of(s)
                .ok_or_else(|| mu_failure(MuError::UnknownState(s.clone())))?;
            println!("{}", states.contains(s));
        }
        None => println!("{}", states.join(" ")),
    }
    Ok(0)
}

fn cmd_mc(
    cli: &Cli,
    structure: &Path,
    formula: &str,
    logic: Logic,
    lasso: Option<&Path>,
) -> Outcome {
    let m = KripkeStructure::from_json(&read(structure)?).map_err(mu_failure)?;
    let try_mu = |f: &str| parse_mu(f).map(|phi| mc_mu(&m, &phi));
    let try_ctl = |f: &str| parse_ctl(f).map(|psi| ctl_eval(&m, &psi));
    let try_propmu = |f: &str| {
        parse_propmu(f).map(|p| -> Result<Vec<String>, MuError> {
            let mut out = Vec::new();
            for s in &m.states {
                if mc_propmu(&m, &p, s, None)? {
                    out.push(s.clone());
                }
            }
            out.sort();
            Ok(out)
        })
    };
    let logic = match logic {
        Logic::Auto if lasso.is_some() => Logic::Ltl,
        l => l,
    };
    let parsed = match logic {
        Logic::Mu => try_mu(formula),
        Logic::Ctl => try_ctl(formula),
        Logic::Propmu => try_propmu(formula),
        Logic::Auto => try_mu(formula)
            .or_else(|e| try_ctl(formula).or_else(|_| try_propmu(formula).map_err(|_| e))),
        Logic::Ltl => {
            let phi = parse_ltl(formula).map_err(|e| parse_failure("<formula>", &e))?;
            let path = lasso.ok_or_else(|| fail(EXIT_IO, "LTL needs --lasso FILE"))?;
            let pi = LassoTrace::from_json(&read(path)?).map_err(mu_failure)?;
            pi.validate(&m).map_err(mu_failure)?;
            println!("{}", ltl_eval(&m, &pi, &phi).map_err(mu_failure)?);
            return Ok(0);
        }
    };
    let states = parsed
        .map_err(|e| parse_failure("<formula>", &e))?
        .map_err(mu_failure)?;
    print_states(cli, &m, &states)
}

fn cmd_translate(direction: Direction, formula: &str) -> Outcome {
    match direction {
        Direction::Enc => {
            let phi = parse_mu(formula).map_err(|e| parse_failure("<formula>", &e))?;
            println!("{}", enc(&phi));
        }
        Direction::Dec => {
            let p = parse_propmu(formula).map_err(|e| parse_failure("<formula>", &e))?;
            println!("{}", dec(&p).map_err(mu_failure)?);
        }
    }
    Ok(0)
}

fn cmd_sem_eval(
    cli: &Cli,
    instance: &Path,
    theory: Option<&Path>,
    lasso: Option<&Path>,
    presheaf: &str,
) -> Outcome {
    let inst = SetModelInstance::from_json_with_bound(&read(instance)?, cli.morphism_bound)
        .map_err(|e| fail(EXIT_IO, format!("{}: {e}", instance.display())))?;
    let machine = cli.format == Format::Machine;
    let kv = |k: &str, v: String| {
        if machine {
            println!("{k}\t{v}");
        } else {
            println!("{k}: {v}");
        }
    };
    kv("objects", inst.category.objects.len().to_string());
    kv(
        "bot",
        if nmdekl::model::bot_is_false(&inst) {
            "false".into()
        } else {
            "true".into()
        },
    );
    for (name, k) in &inst.presheaves {
        let laws = k.check_functor_laws(&inst.category);
        let failed: Vec<&String> = inst
            .category
            .objects
            .iter()
            .filter(|o| k.fibre(o).is_empty())
            .collect();
        kv(
            &format!("presheaf {name} functor-laws"),
            if laws.is_ok() {
                "ok".into()
            } else {
                "violated".into()
            },
        );
        kv(
            &format!("presheaf {name} failed"),
            if failed.is_empty() {
                "none".into()
            } else {
                failed
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(" ")
            },
        );
    }
    if let Some(path) = lasso {
        let pi = LassoTrace::from_json(&read(path)?).map_err(mu_failure)?;
        let k = inst
            .presheaves
            .get(presheaf)
            .ok_or_else(|| fail(EXIT_IO, format!("no presheaf `{presheaf}`")))?;
        let profile = k
            .k_infty_profile(&inst.category, &pi, cli.depth)
            .map_err(|e| fail(EXIT_IO, e.to_string()))?;
        let shown: Vec<String> = profile.iter().map(usize::to_string).collect();
        kv("k_infty families by depth", shown.join(" "));
    }
    let Some(tp) = theory else { return Ok(0) };
    let th = parse_theory(&read(tp)?).map_err(|e| parse_failure(&tp.display().to_string(), &e))?;
    let (report, checker) = check_theory_with(&th, cli.fuel);
    if !report.all_ok() {
        for line in if machine {
            report.machine_lines()
        } else {
            report.human_lines()
        } {
            println!("{line}");
        }
        return Ok(EXIT_TYPE);
    }
    let mut code = 0;
    for (label, verdict) in soundness_check(&inst, &checker.env, &th) {
        let (tag, detail) = match verdict {
            Soundness::Sound => ("sound", String::new()),
            Soundness::Skipped(why) => ("skipped", why),
            Soundness::Unsound(why) => {
                code = EXIT_TYPE;
                ("unsound", why)
            }
        };
        match (machine, detail.is_empty()) {
            (true, true) => println!("{label}\t{tag}"),
            (true, false) => println!("{label}\t{tag}\t{detail}"),
            (false, true) => println!("{label}: {tag}"),
            (false, false) => println!("{label}: {tag} ({detail})"),
        }
    }
    Ok(code)
}

fn cmd_sep_demo(cli: &Cli) -> Outcome {
    let (_, _, r) = separation_demo().map_err(|e| fail(EXIT_TYPE, e.to_string()))?;
    match cli.format {
        Format::Human => println!("{r}"),
        Format::Machine => {
            println!(
                "underlying_equal\t{}",
                if r.underlying_equal { "yes" } else { "no" }
            );
            println!("phi_m1\t{}", r.phi_m1);
            println!("phi_m2\t{}", r.phi_m2);
            println!("agreement\t{}/{}", r.agreeing, r.sampled);
        }
    }
    Ok(if r.holds() { 0 } else { EXIT_TYPE })
}

/// Terms near the fuel limit can be deep; the recursive passes need room.
const WORKER_STACK: usize = 512 << 20;

fn main() -> ExitCode {
    let cli = Cli::parse();
    std::thread::Builder::new()
        .stack_size(WORKER_STACK)
        .spawn(move || run(&cli))
        .expect("spawn worker thread")
        .join()
        .unwrap_or(ExitCode::FAILURE)
}

fn run(cli: &Cli) -> ExitCode {
    let outcome = match &cli.command {
        Command::Check { paths } => cmd_check(cli, paths),
        Command::Normalize { term, theory } => cmd_normalize(cli, term, theory.as_deref()),
        Command::Mc {
            structure,
            formula,
            logic,
            lasso,
        } => cmd_mc(cli, structure, formula, *logic, lasso.as_deref()),
        Command::Translate { direction, formula } => cmd_translate(*direction, formula),
        Command::SemEval {
            instance,
            theory,
            lasso,
            presheaf,
        } => cmd_sem_eval(cli, instance, theory.as_deref(), lasso.as_deref(), presheaf),
        Command::SepDemo => cmd_sep_demo(cli),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("nmdekl: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
