//! Experiment configuration: command-line flags and flat `key = value` files
//! share the same keys.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;

pub const COMMANDS: [&str; 12] = [
    "measure",
    "overlap",
    "qia",
    "counting",
    "equidist",
    "divisors",
    "pigeonhole",
    "counterexample",
    "bc",
    "yu",
    "uniformity",
    "baseline",
];

#[derive(Parser, Debug, Default)]
#[command(name = "shrinklab", version, about = "Exact experiments on shrinking-target sets of the circle")]
pub struct Args {
    /// One of: measure, overlap, qia, counting, equidist, divisors,
    /// pigeonhole, counterexample, bc, yu, uniformity, baseline.
    pub command: Option<String>,
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "q")]
    pub q: Option<u64>,
    #[arg(long = "Q")]
    pub big_q: Option<u64>,
    /// Comma-separated list of cut-offs.
    #[arg(long = "Qgrid")]
    pub q_grid: Option<String>,
    /// const:RAT | surd:NAME | random | set:V,… | conv:V:C
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    /// recip | pow:S | power:C:S | const:C | logt | cex0 | cex1 | table:PATH
    #[arg(long)]
    pub psi: Option<String>,
    /// residue:M | blocks
    #[arg(long)]
    pub partition: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Working precision in bits; also sets the decimal columns.
    #[arg(long)]
    pub precision: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Number of sampled α for `counting`.
    #[arg(long)]
    pub alphas: Option<u64>,
    /// Arcs `L:R,L:R,…` for `uniformity`.
    #[arg(long)]
    pub arcs: Option<String>,
    /// Largest block index for `counterexample`.
    #[arg(long)]
    pub k: Option<u32>,
    /// Write the baseline file instead of comparing against it.
    #[arg(long)]
    pub record: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub command: String,
    pub q: Option<u64>,
    pub big_q: Option<u64>,
    pub q_grid: Option<Vec<u64>>,
    pub gamma: Option<String>,
    pub psi: Option<String>,
    pub partition: Option<String>,
    pub seed: Option<u64>,
    pub precision: Option<u32>,
    pub out: Option<PathBuf>,
    pub baseline: Option<PathBuf>,
    pub threads: Option<usize>,
    pub alphas: Option<u64>,
    pub arcs: Option<String>,
    pub k: Option<u32>,
    pub record: bool,
}

fn parse_grid(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|x| x.trim().parse::<u64>().with_context(|| format!("bad Q grid entry `{x}`")))
        .collect()
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| anyhow!("bad value `{v}` for `{key}`"))
}

fn clean(v: &str) -> Option<String> {
    (!v.is_empty()).then(|| v.to_string())
}

impl ExperimentConfig {
    /// Parses a flat config file. Unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("config line {}: expected `key = value`", i + 1))?;
            c.set(k.trim(), v.trim())?;
        }
        Ok(c)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "command" => self.command = v.to_string(),
            "q" => self.q = Some(num(key, v)?),
            "Q" => self.big_q = Some(num(key, v)?),
            "Qgrid" => self.q_grid = Some(parse_grid(v)?),
            "gamma" => self.gamma = clean(v),
            "psi" => self.psi = clean(v),
            "partition" => self.partition = clean(v),
            "seed" => self.seed = Some(num(key, v)?),
            "precision" => self.precision = Some(num(key, v)?),
            "out" => self.out = Some(PathBuf::from(v)),
            "baseline" => self.baseline = Some(PathBuf::from(v)),
            "threads" => self.threads = Some(num(key, v)?),
            "alphas" => self.alphas = Some(num(key, v)?),
            "arcs" => self.arcs = clean(v),
            "k" => self.k = Some(num(key, v)?),
            "record" => self.record = num(key, v)?,
            _ => bail!("unknown config key `{key}`"),
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut lines = vec![format!("command = {}", self.command)];
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                lines.push(format!("{k} = {v}"));
            }
        };
        put("q", self.q.map(|x| x.to_string()));
        put("Q", self.big_q.map(|x| x.to_string()));
        put("Qgrid", self.q_grid.as_ref().map(|g| g.iter().map(u64::to_string).collect::<Vec<_>>().join(",")));
        put("gamma", self.gamma.clone());
        put("psi", self.psi.clone());
        put("partition", self.partition.clone());
        put("seed", self.seed.map(|x| x.to_string()));
        put("precision", self.precision.map(|x| x.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("baseline", self.baseline.as_ref().map(|p| p.display().to_string()));
        put("threads", self.threads.map(|x| x.to_string()));
        put("alphas", self.alphas.map(|x| x.to_string()));
        put("arcs", self.arcs.clone());
        put("k", self.k.map(|x| x.to_string()));
        if self.record {
            lines.push("record = true".into());
        }
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }

    /// Flags override the file.
    pub fn from_args(args: Args) -> Result<Self> {
        let mut c = match &args.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                Self::parse(&text)?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(cmd) = args.command {
            c.command = cmd;
        }
        macro_rules! over {
            ($($f:ident),*) => { $( if args.$f.is_some() { c.$f = args.$f; } )* };
        }
        over!(q, big_q, gamma, psi, partition, seed, precision, out, baseline, threads, alphas, arcs, k);
        if let Some(g) = &args.q_grid {
            c.q_grid = Some(parse_grid(g)?);
        }
        c.record |= args.record;
        if c.command.is_empty() {
            bail!("no subcommand given; expected one of {}", COMMANDS.join(", "));
        }
        if !COMMANDS.contains(&c.command.as_str()) {
            bail!("unknown subcommand `{}`; expected one of {}", c.command, COMMANDS.join(", "));
        }
        Ok(c)
    }

    /// Cut-offs from `--Qgrid`, else `--Q`.
    pub fn grid(&self) -> Result<Vec<u64>> {
        let mut g = match (&self.q_grid, self.big_q) {
            (Some(g), _) => g.clone(),
            (None, Some(q)) => vec![q],
            (None, None) => bail!("`{}` needs --Q or --Qgrid", self.command),
        };
        if g.iter().any(|&x| x == 0) {
            bail!("cut-offs must be positive");
        }
        g.sort_unstable();
        g.dedup();
        Ok(g)
    }

    pub fn need_q_max(&self) -> Result<u64> {
        self.big_q.ok_or_else(|| anyhow!("`{}` needs --Q", self.command))
    }

    pub fn seed_required(&self) -> Result<u64> {
        self.seed.ok_or_else(|| anyhow!("missing --seed: `{}` reports Monte Carlo numbers and needs an explicit seed", self.command))
    }

    /// Decimal places for the convenience columns.
    pub fn digits(&self) -> usize {
        let bits = self.precision.unwrap_or(64);
        ((bits as f64) * std::f64::consts::LOG10_2).ceil() as usize
    }
}
