//! `birkhoff-lab`: batch front end for the constructions and the exact evaluator.
//!
//! Every command merges `--config` JSON with flags (flags win), runs, and writes
//! a manifest into `--out`. Exit status: 0 ok, 1 failed verification or
//! construction, 2 bad usage or input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use birkhoff_lab::constructors::{
    approximate_on_disjoint, flatten_at, flatten_subsequence, realize_targets, ConstructionCertificate, Target,
};
use birkhoff_lab::evaluator::{exact_law, exact_law_with_cells};
use birkhoff_lab::manifest::{Outputs, RunManifest};
use birkhoff_lab::measures::levy_distance;
use birkhoff_lab::rational::{self, Rational};
use birkhoff_lab::sequence::{Family, NormalizingSequence};
use birkhoff_lab::tower::rokhlin_tower;
use birkhoff_lab::{DiscreteMeasure, Error, Execution, IntervalSet};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Map, Value};

const DEFAULT_HORIZON: u64 = 1 << 26;

#[derive(Parser)]
#[command(name = "birkhoff-lab", version, about = "Exact Birkhoff-sum laws on the dyadic odometer")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Normalizing sequence: sqrt or pow34.
    #[arg(long, global = true)]
    seq: Option<String>,
    /// Largest admissible time.
    #[arg(long, global = true)]
    horizon: Option<u64>,
    /// Error budget, as "p/q".
    #[arg(long, global = true)]
    eps: Option<String>,
    /// Largest time a construction may use.
    #[arg(long, global = true)]
    cap: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// JSON file with inputs; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact law of (S_n(1_B) − nμ(B))/a_n.
    Law {
        /// Set as JSON, e.g. '[["0","1/2"]]'.
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        n: Option<u64>,
        /// Include the level-set partition.
        #[arg(long)]
        cells: bool,
    },
    /// Lévy distance bracket between two laws.
    Levy {
        /// Law as JSON, e.g. '[{"value":"-1","mass":"1/2"},…]'.
        #[arg(long)]
        nu: Option<String>,
        #[arg(long)]
        eta: Option<String>,
        #[arg(long)]
        tol: Option<String>,
    },
    /// Rokhlin tower of height n with junk ≤ gamma.
    Tower {
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        gamma: Option<String>,
    },
    /// Run a construction and write a certified manifest.
    Construct {
        #[command(subcommand)]
        op: Construct,
    },
    /// Re-check every result recorded in a manifest.
    Verify { manifest: PathBuf },
}

#[derive(Subcommand)]
enum Construct {
    Approximate {
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        nu: Option<String>,
    },
    Flatten {
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        n_min: Option<u64>,
    },
    FlattenSeq {
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        steps: Option<u64>,
    },
    Targets {
        #[arg(long)]
        a0: Option<String>,
        /// JSON list of {"nu": …, "eps": "p/q"}.
        #[arg(long)]
        targets: Option<String>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Capacity { .. } | Error::Construction(_) => Failure::Failed(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

/// Config object being assembled from the file and the flags.
struct Config(Map<String, Value>);

impl Config {
    fn load(common: &Common) -> Res<Self> {
        let mut map = match &common.config {
            None => Map::new(),
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
                match serde_json::from_str(&text) {
                    Ok(Value::Object(m)) => m,
                    Ok(_) => return Err(Failure::Usage("config must be a JSON object".into())),
                    Err(e) => return Err(Failure::Usage(format!("config: {e}"))),
                }
            }
        };
        let mut set = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                map.insert(k.into(), v);
            }
        };
        set("seq", common.seq.clone().map(Value::from));
        set("horizon", common.horizon.map(Value::from));
        set("eps", common.eps.clone().map(Value::from));
        set("cap", common.cap.map(Value::from));
        map.entry("seq").or_insert_with(|| "sqrt".into());
        map.entry("horizon").or_insert_with(|| DEFAULT_HORIZON.into());
        Ok(Self(map))
    }

    fn json_flag(&mut self, key: &str, raw: &Option<String>) -> Res<()> {
        if let Some(s) = raw {
            let v = serde_json::from_str(s).map_err(|e| Failure::Usage(format!("--{key}: {e}")))?;
            self.0.insert(key.into(), v);
        }
        Ok(())
    }

    fn flag(&mut self, key: &str, v: Option<impl Into<Value>>) {
        if let Some(v) = v {
            self.0.insert(key.into(), v.into());
        }
    }

    fn get<T: DeserializeOwned>(&self, key: &str) -> Res<T> {
        let v = self
            .0
            .get(key)
            .ok_or_else(|| Failure::Usage(format!("missing input {key:?} (flag or config)")))?;
        serde_json::from_value(v.clone()).map_err(|e| Failure::Usage(format!("input {key:?}: {e}")))
    }

    fn rational(&self, key: &str) -> Res<Rational> {
        Ok(rational::parse(&self.get::<String>(key)?)?)
    }

    fn seq(&self) -> Res<NormalizingSequence> {
        let family = Family::parse(&self.get::<String>("seq")?)?;
        Ok(NormalizingSequence::new(family, self.get("horizon")?))
    }

    fn value(&self) -> Value {
        Value::Object(self.0.clone())
    }
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Res<()> {
    let io = |e: std::io::Error| Failure::Failed(format!("writing {}: {e}", path.display()));
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        path.file_name().unwrap().to_string_lossy(),
        std::process::id()
    ));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn emit(out: &Path, name: &str, manifest: &RunManifest) -> Res<PathBuf> {
    let path = out.join(name);
    write_atomic(&path, &manifest.to_json())?;
    Ok(path)
}

fn summarize(cert: &ConstructionCertificate) {
    for c in &cert.verified {
        let q: Vec<String> = c.quantities.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("  {:<18} {}  {}", c.id, if c.holds { "true " } else { "false" }, q.join(" "));
    }
}

fn construct(op: &Construct, mut cfg: Config, out: &Path) -> Res<()> {
    let (name, cert) = match op {
        Construct::Approximate { a, nu } => {
            cfg.json_flag("a", a)?;
            cfg.json_flag("nu", nu)?;
            let cap = cfg.get::<u64>("cap")?;
            let cert = approximate_on_disjoint(
                &cfg.get::<IntervalSet>("a")?,
                &cfg.get::<DiscreteMeasure>("nu")?,
                &cfg.rational("eps")?,
                &cfg.seq()?,
                cap,
            )?;
            ("approximate", cert)
        }
        Construct::Flatten { a, n_min } => {
            cfg.json_flag("a", a)?;
            cfg.flag("n_min", *n_min);
            let cert = flatten_at(
                &cfg.get::<IntervalSet>("a")?,
                &cfg.rational("eps")?,
                cfg.get("n_min")?,
                &cfg.seq()?,
            )?;
            ("flatten", cert)
        }
        Construct::FlattenSeq { a, steps } => {
            cfg.json_flag("a", a)?;
            cfg.flag("steps", *steps);
            let cert = flatten_subsequence(
                &cfg.get::<IntervalSet>("a")?,
                &cfg.rational("eps")?,
                cfg.get("steps")?,
                &cfg.seq()?,
            )?;
            ("flatten-seq", cert)
        }
        Construct::Targets { a0, targets } => {
            cfg.json_flag("a0", a0)?;
            cfg.json_flag("targets", targets)?;
            cfg.0.entry("a0").or_insert_with(|| json!([["0", "1/2"]]));
            let targets: Vec<Target> = cfg.get("targets")?;
            let cert = realize_targets(&cfg.get::<IntervalSet>("a0")?, &targets, &cfg.seq()?)?;
            ("targets", cert)
        }
    };
    println!("construct {name}: {} claims hold", cert.verified.len());
    summarize(&cert);
    let command = format!("construct {name}");
    let manifest = RunManifest::new(
        command,
        cfg.value(),
        Outputs::Certificate {
            certificate: Box::new(cert),
        },
    );
    let path = emit(out, &format!("construct-{name}.json"), &manifest)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Deserialize)]
struct TowerIn {
    n: u64,
}

fn run(cli: Cli) -> Res<()> {
    let out = cli.common.out.clone();
    if let Cmd::Verify { manifest } = &cli.cmd {
        let text = fs::read_to_string(manifest)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", manifest.display())))?;
        let m = RunManifest::from_json(&text).map_err(|e| Failure::Failed(e.to_string()))?;
        let report = m.verify();
        if report.ok() {
            println!("verified: {}", m.command);
            return Ok(());
        }
        return Err(Failure::Failed(report.failures.join("\n")));
    }
    let mut cfg = Config::load(&cli.common)?;
    match &cli.cmd {
        Cmd::Law { set, n, cells } => {
            cfg.json_flag("set", set)?;
            cfg.flag("n", *n);
            if *cells {
                cfg.flag("cells", Some(true));
            }
            let b: IntervalSet = cfg.get("set")?;
            let n: u64 = cfg.get("n")?;
            let seq = cfg.seq()?;
            let with_cells = cfg.0.get("cells").and_then(Value::as_bool).unwrap_or(false);
            let report = if with_cells {
                exact_law_with_cells(&b, n, &seq, Execution::default())?
            } else {
                exact_law(&b, n, &seq)?
            };
            let csv = report.law.cdf_csv();
            println!("law at n = {n}: {} atoms, mu(B) = {}", report.law.len(), rational::to_string(&report.mu_b));
            let manifest = RunManifest::new("law", cfg.value(), Outputs::Law { set: b, seq, report });
            emit(&out, "law.json", &manifest)?;
            write_atomic(&out.join("law_cdf.csv"), &csv)?;
        }
        Cmd::Levy { nu, eta, tol } => {
            cfg.json_flag("nu", nu)?;
            cfg.json_flag("eta", eta)?;
            cfg.flag("tol", tol.clone());
            cfg.0.entry("tol").or_insert_with(|| "1/4096".into());
            let nu: DiscreteMeasure = cfg.get("nu")?;
            let eta: DiscreteMeasure = cfg.get("eta")?;
            let tol = cfg.rational("tol")?;
            let (lo, hi) = levy_distance(&nu, &eta, &tol)?;
            println!("levy in [{}, {}]", rational::to_string(&lo), rational::to_string(&hi));
            let manifest = RunManifest::new("levy", cfg.value(), Outputs::Levy { nu, eta, tol, lo, hi });
            emit(&out, "levy.json", &manifest)?;
        }
        Cmd::Tower { n, gamma } => {
            cfg.flag("n", *n);
            cfg.flag("gamma", gamma.clone());
            let TowerIn { n } = serde_json::from_value(cfg.value()).map_err(|e| Failure::Usage(e.to_string()))?;
            let gamma = cfg.rational("gamma")?;
            let tower = rokhlin_tower(n, &gamma)?;
            println!(
                "tower height {n}: depth {}, {} columns, junk {}",
                tower.provenance.k,
                tower.provenance.q,
                rational::to_string(&tower.junk.measure())
            );
            let manifest = RunManifest::new("tower", cfg.value(), Outputs::Tower { n, gamma, tower });
            emit(&out, "tower.json", &manifest)?;
        }
        Cmd::Construct { op } => construct(op, cfg, &out)?,
        Cmd::Verify { .. } => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Failed(m)) => {
            eprintln!("failed: {m}");
            ExitCode::from(1)
        }
    }
}
