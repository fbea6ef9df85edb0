//! One function per subcommand. Each returns the CSV text and whether a
//! verified bound came out false.

use anyhow::{anyhow, bail, Context, Result};
use shrinklab::arithfn::{eta_check, kac_fraction, phi_ratio_bounds, recip_divisor_ratio, sieve};
use shrinklab::baseline::{default_keys, Baseline, GoldenKey};
use shrinklab::exactsets::{build_aq, CircleIntervalSet};
use shrinklab::limsup::{bc_lower_bound, sprindzuk_experiment, uniformity_check, yu_default, OverlapMatrix};
use shrinklab::overlaps::{lemn_sweep, overlap_bound_check, qia_sweep};
use shrinklab::par::Exec;
use shrinklab::scenarios::{block_sums, make_gamma, make_psi, pigeonhole_grid, PartitionSpec, PsiSpec, TargetSeq};
use shrinklab::schmidt::{equidist_row, GammaValue};
use shrinklab::{Quad, Rational};

use crate::config::ExperimentConfig;
use crate::output::{b, dec, dec_ceil, dec_floor, quad_dec, Csv};

pub struct Outcome {
    pub csv: String,
    pub violated: bool,
    /// Summary for stderr.
    pub note: Option<String>,
    /// Set when the output was written but the run still failed.
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(csv: Csv) -> Self {
        Outcome { csv: csv.into_string(), violated: false, note: None, failure: None }
    }
}

pub fn dispatch(c: &ExperimentConfig) -> Result<Outcome> {
    match c.command.as_str() {
        "measure" => measure(c),
        "overlap" => overlap(c),
        "qia" => qia(c),
        "counting" => counting(c),
        "equidist" => equidist(c),
        "divisors" => divisors(c),
        "pigeonhole" => pigeonhole(c),
        "counterexample" => counterexample(c),
        "bc" => bc(c),
        "yu" => yu(c),
        "uniformity" => uniformity(c),
        "baseline" => baseline(c),
        other => bail!("unknown subcommand `{other}`"),
    }
}

fn psi_of(c: &ExperimentConfig, default: &str) -> Result<PsiSpec> {
    let spec = c.psi.as_deref().unwrap_or(default);
    make_psi(spec, None).with_context(|| format!("--psi {spec}"))
}

fn gamma_of(c: &ExperimentConfig) -> Result<TargetSeq> {
    let spec = c.gamma.as_deref().unwrap_or("const:0");
    if spec == "random" && c.seed.is_none() {
        bail!("missing --seed: --gamma random needs an explicit seed");
    }
    make_gamma(spec, c.seed).with_context(|| format!("--gamma {spec}"))
}

fn fixed_gamma(c: &ExperimentConfig) -> Result<GammaValue> {
    let g = gamma_of(c)?;
    let v = g.constant_value().ok_or_else(|| anyhow!("`{}` needs a fixed γ (const:RAT or surd:NAME)", c.command))?;
    Ok(GammaValue::from(v.clone()))
}

fn render_gamma(g: &Quad) -> String {
    g.to_string()
}

fn measure(c: &ExperimentConfig) -> Result<Outcome> {
    let psi = psi_of(c, "recip")?;
    let gamma = gamma_of(c)?;
    let qs: Vec<u64> = match (c.q, &c.q_grid, c.big_q) {
        (Some(q), _, _) => vec![q],
        (None, Some(g), _) => g.clone(),
        (None, None, Some(qm)) => (1..=qm).collect(),
        _ => bail!("`measure` needs --q, --Qgrid or --Q"),
    };
    let d = c.digits();
    let mut csv = Csv::new(&["q", "gamma", "radius", "measure", "measure_dec"]);
    for q in qs {
        let g = gamma.gamma(q);
        let rho = psi.set_radius(q)?;
        let set = build_aq::<Quad>(q, &g, &rho)?;
        let m = set.measure();
        csv.row(vec![q.to_string(), render_gamma(&g), rho.to_string(), m.to_string(), quad_dec(m, d)]);
    }
    Ok(Outcome::ok(csv))
}

fn overlap(c: &ExperimentConfig) -> Result<Outcome> {
    let psi = psi_of(c, "recip")?;
    let gamma = gamma_of(c)?;
    let q_max = c.need_q_max()?;
    let d = c.digits();
    let rows = Exec::default().map_range(2, q_max + 1, |q| (1..q).map(|r| overlap_bound_check(q, r, &psi, &gamma)).collect::<Vec<_>>());
    let mut csv = Csv::new(&["q", "r", "g", "meas", "meas_dec", "bound", "N", "delta_ok", "count_ok", "verdict"]);
    let mut violated = false;
    for row in rows.into_iter().flatten() {
        let s = row?;
        violated |= !s.all_ok();
        csv.row(vec![
            s.q.to_string(),
            s.r.to_string(),
            s.g.to_string(),
            s.meas.to_string(),
            quad_dec(&s.meas, d),
            s.bound_val.to_string(),
            s.n_count.to_string(),
            b(s.delta_ok),
            b(s.count_ok),
            b(s.verdict),
        ]);
    }
    Ok(Outcome { csv: csv.into_string(), violated, note: None, failure: None })
}

fn qia(c: &ExperimentConfig) -> Result<Outcome> {
    let psi = psi_of(c, "recip")?;
    let gamma = fixed_gamma(c)?;
    let grid = c.grid()?;
    let d = c.digits();
    let rows = qia_sweep(&psi, &gamma, &grid, Exec::default())?;
    let mut csv = Csv::new(&["Q", "Psi", "Psi_dec", "pairs_lo", "pairs_hi", "rho_lo", "rho_hi", "rho"]);
    for r in rows {
        csv.row(vec![
            r.q_max.to_string(),
            r.psi_sum.to_string(),
            dec(&r.psi_sum, d),
            dec_floor(&r.pair_lo, d),
            dec_ceil(&r.pair_hi, d),
            dec_floor(&r.rho_lo, d),
            dec_ceil(&r.rho_hi, d),
            dec(&r.rho_mid(), d),
        ]);
    }
    Ok(Outcome::ok(csv))
}

fn counting(c: &ExperimentConfig) -> Result<Outcome> {
    let seed = c.seed_required()?;
    let psi = psi_of(c, "pow:1/2")?;
    let grid = c.grid()?;
    let n_alpha = c.alphas.unwrap_or(50);
    let d = c.digits();
    let rows = sprindzuk_experiment(seed, n_alpha, &psi, &grid, Exec::default())?;
    let mut csv = Csv::new(&["seed", "alpha_id", "Q", "N", "Phi", "ratio"]);
    for r in rows {
        csv.row(vec![
            r.seed.to_string(),
            r.alpha_id.to_string(),
            r.q.to_string(),
            r.n.to_string(),
            dec(&r.phi_mid(), d),
            dec(&r.ratio(), d),
        ]);
    }
    Ok(Outcome::ok(csv))
}

fn equidist(c: &ExperimentConfig) -> Result<Outcome> {
    let gamma = fixed_gamma(c)?;
    let qs: Vec<u64> = match (c.q, &c.q_grid, c.big_q) {
        (Some(q), _, _) => vec![q],
        (None, Some(g), _) => g.clone(),
        (None, None, Some(qm)) => (1..=qm).collect(),
        _ => bail!("`equidist` needs --q, --Qgrid or --Q"),
    };
    let d = c.digits();
    let rows = Exec::default().map(&qs, |&q| equidist_row(q, &mut gamma.clone()));
    let mut csv = Csv::new(&["q", "sq", "phi", "discrepancy", "discrepancy_dec", "sq_ge_phi"]);
    let mut violated = false;
    for r in rows {
        let r = r?;
        violated |= r.sq < r.phi;
        csv.row(vec![
            r.q.to_string(),
            r.sq.to_string(),
            r.phi.to_string(),
            r.discrepancy.to_string(),
            dec(&r.discrepancy, d),
            b(r.sq >= r.phi),
        ]);
    }
    Ok(Outcome { csv: csv.into_string(), violated, note: None, failure: None })
}

fn divisors(c: &ExperimentConfig) -> Result<Outcome> {
    let x = c.need_q_max()?;
    let d = c.digits();
    let mut csv = Csv::new(&["statistic", "x", "value", "lo_dec", "hi_dec"]);
    let bad = Exec::default().map_range(1, x + 1, |q| !eta_check(q).2).into_iter().filter(|&v| v).count();
    let bad_s = bad.to_string();
    csv.row(vec!["eta_gt_d_count".into(), x.to_string(), bad_s.clone(), bad_s.clone(), bad_s]);
    let t = sieve(x as usize);
    let (lo, hi) = phi_ratio_bounds(&t, x as usize);
    let inv = Rational::new(1, x);
    csv.row(vec!["phi_ratio_mean".into(), x.to_string(), String::new(), dec_floor(&(lo * &inv), d), dec_ceil(&(hi * &inv), d)]);
    let r = recip_divisor_ratio(x)?;
    csv.row(vec!["recip_divisor_ratio".into(), x.to_string(), String::new(), dec_floor(&r.lo(), d), dec_ceil(&r.hi(), d)]);
    let k = kac_fraction(x)?;
    csv.row(vec!["kac_fraction".into(), x.to_string(), k.to_string(), dec_floor(&k, d), dec_ceil(&k, d)]);
    Ok(Outcome { csv: csv.into_string(), violated: bad > 0, note: None, failure: None })
}

fn pigeonhole(c: &ExperimentConfig) -> Result<Outcome> {
    let psi = psi_of(c, "recip")?;
    let part = PartitionSpec::parse(c.partition.as_deref().unwrap_or("residue:2"))?;
    let grid = c.grid()?;
    let d = c.digits();
    let t = sieve(*grid.last().unwrap() as usize);
    let rows = pigeonhole_grid(&part, &psi, &grid, &t)?;
    let mut csv = Csv::new(&["Q", "classes", "winner", "label", "winner_sum", "winner_dec", "total_dec", "share_dec", "certified", "dominates"]);
    let mut violated = false;
    for p in rows {
        let w = &p.sums[p.winner - 1];
        let share = if p.total.hi.is_zero() { Rational::zero() } else { &w.lo / &p.total.hi };
        let dom = p.winner_dominates();
        violated |= p.certified && !dom;
        csv.row(vec![
            p.q_max.to_string(),
            part.classes().to_string(),
            p.winner.to_string(),
            part.label(p.winner),
            w.exact.as_ref().map(|e| e.to_string()).unwrap_or_default(),
            dec(&((&w.lo + &w.hi) * Rational::new(1, 2)), d),
            dec(&((&p.total.lo + &p.total.hi) * Rational::new(1, 2)), d),
            dec_floor(&share, d),
            b(p.certified),
            b(dom),
        ]);
    }
    Ok(Outcome { csv: csv.into_string(), violated, note: None, failure: None })
}

fn counterexample(c: &ExperimentConfig) -> Result<Outcome> {
    let k_max = c.k.unwrap_or(4);
    if k_max > 12 {
        bail!("--k {k_max} is too large; blocks past 12 have endpoints beyond 2^8192");
    }
    let d = c.digits();
    let sums = block_sums(k_max);
    let mut csv = Csv::new(&[
        "k", "start", "end", "class", "sum_lo", "sum_hi", "enumerated", "matches", "pi0_partial", "pi0_partial_dec", "pi1_partial_hi", "pi1_partial_hi_dec",
    ]);
    let mut violated = false;
    for row in &sums.rows {
        let even = row.k % 2 == 0;
        let (lo, hi) = if even { (row.pi0.clone(), row.pi0.clone()) } else { (row.pi1_lo.clone(), row.pi1_hi.clone()) };
        let matches = row.enumerated.as_ref().map(|e| *e == lo && *e == hi);
        violated |= matches == Some(false);
        let p0 = sums.pi0_partial(row.k);
        let (_, p1) = sums.pi1_partial(row.k);
        csv.row(vec![
            row.k.to_string(),
            row.start.to_string(),
            row.end.to_string(),
            if even { "pi0" } else { "pi1" }.into(),
            lo.to_string(),
            hi.to_string(),
            row.enumerated.as_ref().map(|e| e.to_string()).unwrap_or_default(),
            matches.map(b).unwrap_or_default(),
            p0.to_string(),
            dec(&p0, d),
            p1.to_string(),
            dec_ceil(&p1, d),
        ]);
    }
    Ok(Outcome { csv: csv.into_string(), violated, note: None, failure: None })
}

fn bc(c: &ExperimentConfig) -> Result<Outcome> {
    let psi = psi_of(c, "recip")?;
    let gamma = gamma_of(c)?;
    let grid = c.grid()?;
    let d = c.digits();
    let q_max = *grid.last().unwrap();
    let m = OverlapMatrix::from_targets(q_max, &grid, &psi, &gamma, Exec::default())?;
    let mut csv = Csv::new(&["Q", "measure_sum", "pair_sum", "ratio", "ratio_dec"]);
    let mut violated = false;
    for &q in &grid {
        let ratio = bc_lower_bound(&m, q)?;
        violated |= ratio > Quad::from(Rational::one());
        let pairs = m.pair_sum(q).unwrap();
        csv.row(vec![q.to_string(), m.measure_sum(q).to_string(), pairs.to_string(), ratio.to_string(), quad_dec(&ratio, d)]);
    }
    Ok(Outcome { csv: csv.into_string(), violated, note: None, failure: None })
}

fn yu(c: &ExperimentConfig) -> Result<Outcome> {
    let psi = psi_of(c, "recip")?;
    let q_max = c.need_q_max()?;
    let d = c.digits();
    let y = yu_default(q_max, &psi)?;
    let mut csv = Csv::new(&["ell", "count", "min_q", "max_q", "sigma", "sigma_dec"]);
    for (l, qs) in &y.classes {
        let s = &y.sigma[l];
        csv.row(vec![
            l.to_string(),
            qs.len().to_string(),
            qs.iter().min().unwrap().to_string(),
            qs.iter().max().unwrap().to_string(),
            s.to_string(),
            dec(s, d),
        ]);
    }
    Ok(Outcome::ok(csv))
}

fn parse_arcs(s: &str) -> Result<CircleIntervalSet> {
    let arcs = s
        .split(',')
        .map(|a| {
            let (l, r) = a.split_once(':').ok_or_else(|| anyhow!("arc `{a}` is not L:R"))?;
            let l: Rational = l.trim().parse().map_err(|_| anyhow!("bad arc end `{l}`"))?;
            let r: Rational = r.trim().parse().map_err(|_| anyhow!("bad arc end `{r}`"))?;
            Ok((l, r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CircleIntervalSet::normalize(&arcs)?)
}

fn uniformity(c: &ExperimentConfig) -> Result<Outcome> {
    let psi = psi_of(c, "recip")?;
    let gamma = gamma_of(c)?;
    let u = parse_arcs(c.arcs.as_deref().unwrap_or("3/10:2/5"))?;
    let q_hi = c.need_q_max()?;
    let q_lo = c.q.unwrap_or(1);
    let d = c.digits();
    let rep = uniformity_check(&u, &psi, &gamma, q_lo, q_hi, Exec::default())?;
    let half = Quad::from(Rational::new(1, 2));
    let mut csv = Csv::new(&["q", "ratio", "ratio_dec", "ok"]);
    for (i, r) in rep.ratios.iter().enumerate() {
        csv.row(vec![(q_lo + i as u64).to_string(), r.to_string(), quad_dec(r, d), b(*r >= half)]);
    }
    let q0 = rep.q0.map(|q| q.to_string()).unwrap_or_else(|| "none".into());
    let note = format!("q0 = {q0}; min ratio {} at q = {}", quad_dec(&rep.min_ratio, 6), rep.min_at);
    Ok(Outcome { csv: csv.into_string(), violated: false, note: Some(note), failure: None })
}

/// Fresh value for a golden key.
pub fn golden_value(key: &GoldenKey) -> Result<Rational> {
    match key {
        GoldenKey::QiaRho { gamma, q_max } => {
            let g = make_gamma(gamma, None)?;
            let v = g.constant_value().ok_or_else(|| anyhow!("golden γ `{gamma}` is not fixed"))?;
            let rows = qia_sweep(&PsiSpec::recip(), &GammaValue::from(v.clone()), &[*q_max], Exec::default())?;
            Ok(rows[0].rho_hi.clone())
        }
        GoldenKey::LemnMax { gamma, delta, q_max } => {
            let g = make_gamma(gamma, None)?;
            let v = g.constant_value().ok_or_else(|| anyhow!("golden γ `{gamma}` is not fixed"))?;
            let reps = lemn_sweep(*q_max, delta, &GammaValue::from(v.clone()), Exec::default())?;
            Ok(reps.into_iter().map(|r| r.max_ratio).max().unwrap_or_default())
        }
    }
}

/// Values for many keys, sharing one QIA sweep per `γ`.
fn golden_values(keys: &[GoldenKey]) -> Result<Vec<Rational>> {
    let mut out: Vec<Option<Rational>> = vec![None; keys.len()];
    let mut by_gamma: Vec<(String, Vec<(usize, u64)>)> = Vec::new();
    for (i, k) in keys.iter().enumerate() {
        if let GoldenKey::QiaRho { gamma, q_max } = k {
            match by_gamma.iter_mut().find(|(g, _)| g == gamma) {
                Some((_, v)) => v.push((i, *q_max)),
                None => by_gamma.push((gamma.clone(), vec![(i, *q_max)])),
            }
        }
    }
    for (gamma, idx) in by_gamma {
        let g = make_gamma(&gamma, None)?;
        let v = g.constant_value().ok_or_else(|| anyhow!("golden γ `{gamma}` is not fixed"))?;
        let mut grid: Vec<u64> = idx.iter().map(|x| x.1).collect();
        grid.sort_unstable();
        grid.dedup();
        let rows = qia_sweep(&PsiSpec::recip(), &GammaValue::from(v.clone()), &grid, Exec::default())?;
        for (i, q) in idx {
            out[i] = Some(rows.iter().find(|r| r.q_max == q).unwrap().rho_hi.clone());
        }
    }
    for (i, k) in keys.iter().enumerate() {
        if out[i].is_none() {
            out[i] = Some(golden_value(k)?);
        }
    }
    Ok(out.into_iter().map(Option::unwrap).collect())
}

fn baseline(c: &ExperimentConfig) -> Result<Outcome> {
    let path = c.baseline.as_ref().ok_or_else(|| anyhow!("`baseline` needs --baseline PATH"))?;
    let existing = match std::fs::read_to_string(path) {
        Ok(t) => Some(Baseline::parse(&t)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
    };
    let keys: Vec<GoldenKey> = match &existing {
        Some(b) if !b.entries.is_empty() => b.entries.iter().map(|(k, _)| GoldenKey::parse(k)).collect::<shrinklab::Result<_>>()?,
        _ => default_keys(),
    };
    let d = c.digits().max(12);
    let values = golden_values(&keys)?;
    if c.record {
        let mut b = existing.unwrap_or_default();
        let mut csv = Csv::new(&["key", "value"]);
        for (k, v) in keys.iter().zip(&values) {
            // Round up so the file never understates a recorded bound.
            let up: Rational = dec_ceil(v, d).parse()?;
            b.set(&k.render(), up);
            csv.row(vec![k.render(), dec_ceil(v, d)]);
        }
        std::fs::write(path, b.render(d)).with_context(|| format!("writing {}", path.display()))?;
        return Ok(Outcome::ok(csv));
    }
    let base = existing.ok_or_else(|| anyhow!("baseline file {} does not exist; run with --record first", path.display()))?;
    let mut csv = Csv::new(&["key", "golden", "current", "limit", "ok"]);
    let mut failed = Vec::new();
    for (k, v) in keys.iter().zip(&values) {
        let key = k.render();
        let g = base.get(&key).unwrap();
        let ok = base.admits(&key, v).unwrap();
        if !ok {
            failed.push(key.clone());
        }
        csv.row(vec![key, dec(g, d), dec_ceil(v, d), dec(&(g * &base.tolerance), d), b(ok)]);
    }
    let mut out = Outcome::ok(csv);
    if !failed.is_empty() {
        out.failure = Some(format!("baseline regression in {}", failed.join(", ")));
    }
    Ok(out)
}
