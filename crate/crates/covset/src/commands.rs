//! One function per command. Each returns a [`Report`] whose `theory`
//! block holds predictor output and whose `empirical` block holds
//! simulation output.

use serde_json::{json, Map, Value};

use covset_core::coversim::{
    self, default_scales, DimEstimate, DimReport, HitReport, ProjectionCounter, ShapeFamily,
    SimWindow,
};
use covset_core::exec::ReplicaExecutor;
use covset_core::geometry::SnowflakeExponents;
use covset_core::percolation::{self, PercParams};
use covset_core::predictor::{
    self, RotatedLower, SeriesCheckConfig, TorusUpper, CONDITION_C_KMAX,
};
use covset_core::radii::{self, ConditionC, RadiusKind, RadiusSequence};
use covset_core::stats;
use covset_core::targets::{TargetKind, TargetSet};

use crate::config::{Caps, Command, ExperimentConfig, ShapeSpec};
use crate::error::CliError;
use crate::report::{CapsEcho, Report, ReplicaRow, ScaleRow, Summary};

pub fn run<X: ReplicaExecutor>(
    cfg: &ExperimentConfig,
    caps: &Caps,
    exec: &X,
) -> Result<Report, CliError> {
    cfg.validate()?;
    let theory = theory(cfg)?;
    let mut out = Output::default();
    match cfg.command {
        Command::Predict => {}
        Command::CoverDim => cover_dim(cfg, caps, exec, &mut out)?,
        Command::Hit => hit(cfg, caps, exec, &mut out)?,
        Command::IntersectDim => intersect_dim(cfg, caps, exec, &mut out)?,
        Command::BadCase => bad_case(cfg, caps, exec, &mut out)?,
        Command::Rotate => rotate(cfg, caps, exec, &mut out)?,
        Command::Percolate => percolate(cfg, caps, exec, &mut out)?,
    }
    Ok(Report {
        summary: Summary {
            command: cfg.command.name(),
            seed: cfg.seed,
            config: cfg.clone(),
            caps: CapsEcho::from(caps),
            theory,
            empirical: Value::Object(out.empirical),
        },
        scales: out.scales,
        replicas: out.replicas,
    })
}

#[derive(Default)]
struct Output {
    empirical: Map<String, Value>,
    scales: Vec<ScaleRow>,
    replicas: Vec<ReplicaRow>,
}

impl Output {
    fn put(&mut self, key: &str, v: Value) {
        self.empirical.insert(key.to_string(), v);
    }
}

fn core(context: &'static str) -> impl FnOnce(covset_core::Error) -> CliError {
    move |e| CliError::field(context, e)
}

fn condition_c_label(c: &ConditionC) -> &'static str {
    match c {
        ConditionC::Holds { .. } => "holds",
        ConditionC::Fails => "fails",
        ConditionC::Inconclusive => "inconclusive",
    }
}

fn seq_json(seq: &RadiusSequence, t: f64) -> Result<Value, CliError> {
    let raw = seq.limsup_exponent().map_err(core("seq"))?;
    let capped = radii::alpha_of(seq, t).map_err(core("seq"))?;
    let cc = radii::condition_c_check(seq, t, CONDITION_C_KMAX).map_err(core("seq"))?;
    Ok(json!({
        "alpha_uncapped": raw.value,
        "alpha": capped.value,
        "alpha_truncated": capped.truncated,
        "condition_c": condition_c_label(&cc.verdict),
        "condition_c_kmax": CONDITION_C_KMAX,
    }))
}

fn verdict_json(v: &predictor::RegimeVerdict, b: &predictor::IntersectBounds) -> Value {
    json!({
        "regime": v.regime.label(),
        "t": v.t,
        "alpha": v.alpha,
        "dim_h": v.dim_h,
        "dim_p": v.dim_p,
        "threshold": v.threshold(),
        "intersection_lower": b.lower,
        "intersection_upper": b.upper,
        "bounds_applicable": b.applicable,
        "bounds_reason": b.reason,
    })
}

fn ball_verdict(
    seq: &RadiusSequence,
    d: usize,
    target: &TargetSet,
) -> Result<(predictor::RegimeVerdict, predictor::IntersectBounds), CliError> {
    let t = d as f64;
    let alpha = radii::alpha_of(seq, t).map_err(core("seq"))?.value;
    let cc = radii::condition_c_check(seq, t, CONDITION_C_KMAX).map_err(core("seq"))?;
    let (dh, dp) = target.dims();
    let holds = matches!(cc.verdict, ConditionC::Holds { .. });
    let v = predictor::classify_hitting(t, alpha, dh, dp, holds).map_err(core("target"))?;
    let b = predictor::intersect_bounds(t, alpha, dh, dp).map_err(core("target"))?;
    Ok((v, b))
}

fn snowflake_json(
    h: &SnowflakeExponents,
    seq: &RadiusSequence,
    target: &TargetSet,
) -> Result<Value, CliError> {
    let prof = predictor::snowflake_profile(h, seq).map_err(core("shape.h"))?;
    let (dh, dp) = target.dims_snowflake(h).map_err(core("target"))?;
    let v = prof.classify(dh, dp).map_err(core("target"))?;
    let b = prof.bounds(dh, dp).map_err(core("target"))?;
    let mut out = verdict_json(&v, &b);
    out["alpha_truncated"] = json!(prof.alpha_truncated);
    out["condition_c"] = json!(prof.condition_c);
    Ok(out)
}

fn rect_json(
    h: &SnowflakeExponents,
    seq: &RadiusSequence,
    d: usize,
    target: &TargetSet,
) -> Result<Value, CliError> {
    let s0 = predictor::s0_rect(h, seq).map_err(core("seq"))?;
    let (dh, dp) = target.dims();
    let upper = match predictor::torus_upper(s0, d, dp) {
        TorusUpper::EmptyAs => json!({"verdict": "EmptyAS"}),
        TorusUpper::UpperBound(u) => json!({"verdict": "UpperBound", "value": u}),
    };
    // Rotations leave the singular values alone, so s0R = s0.
    let lower = match predictor::rotated_lower(s0, d, dh) {
        RotatedLower::LowerBound(l) => json!({"verdict": "LowerBound", "value": l}),
        RotatedLower::HypothesisFails(why) => json!({"verdict": "HypothesisFails", "reason": why}),
    };
    let series = if matches!(seq.kind(), RadiusKind::PowerLaw { .. }) {
        json!(predictor::s0_series_crosscheck(h, seq, &SeriesCheckConfig::default())
            .map_err(core("seq"))?)
    } else {
        Value::Null
    };
    Ok(json!({
        "h": h.values(),
        "s0": s0,
        "s0_display": predictor::fmt_num(s0),
        "s0_series": series,
        "torus_upper": upper,
        "rotated_lower": lower,
        "snowflake": snowflake_json(h, seq, target)?,
    }))
}

/// Predictor output for the config; shared by every command.
pub fn theory(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let seq = cfg.sequence()?;
    let target = cfg.target_set()?;
    let (dh, dp) = target.dims();
    let mut out = json!({
        "d": cfg.d,
        "seq": seq_json(&seq, cfg.d as f64)?,
        "target": {"dim_h": dh, "dim_p": dp},
    });
    match cfg.exponents()? {
        None => {
            let (v, b) = ball_verdict(&seq, cfg.d, &target)?;
            out["ball"] = verdict_json(&v, &b);
            let iso = SnowflakeExponents::isotropic(cfg.d);
            out["ball"]["s0"] = json!(predictor::s0_rect(&iso, &seq).map_err(core("seq"))?);
        }
        Some(h) => out["rect"] = rect_json(&h, &seq, cfg.d, &target)?,
    }
    if cfg.command == Command::Percolate {
        let p = PercParams::new(cfg.d, cfg.percolation.s, cfg.percolation.survival_depth)
            .map_err(core("percolation"))?;
        let q = percolation::extinction_prob_oracle(p.p, p.arity() as u32);
        out["percolation"] = json!({
            "p": p.p,
            "s": p.s,
            "arity": p.arity(),
            "extinction": q,
            "survival": 1.0 - q,
            "intersection_dim": (dh - p.s).max(0.0),
            "avoids": dh < p.s,
        });
    }
    Ok(out)
}

fn dim_json(r: &DimReport, jmin: u32, jmax: u32) -> Value {
    let slopes: Vec<Value> = r
        .per_replica
        .iter()
        .map(|e| e.as_ref().map_or(Value::Null, |e| json!(e.slope)))
        .collect();
    json!({
        "replicas": r.replicas,
        "nonempty": r.nonempty,
        "median_slope": r.median,
        "q1": r.q1,
        "q3": r.q3,
        "jmin": jmin,
        "jmax": jmax,
        "slopes": slopes,
    })
}

fn hit_json(r: &HitReport) -> Value {
    json!({
        "replicas": r.replicas,
        "hits": r.hits,
        "nonempty_proxies": r.nonempty_proxies,
        "frequency": r.frequency,
        "ci95": [r.ci.0, r.ci.1],
    })
}

fn push_dims(out: &mut Output, r: &DimReport) {
    for (i, e) in r.per_replica.iter().enumerate() {
        push_scales(out, i as u64, e.as_ref());
        if out.replicas.len() <= i {
            out.replicas.push(ReplicaRow::new(i as u64));
        }
        out.replicas[i].slope = e.as_ref().map(|e| e.slope);
    }
}

fn push_scales(out: &mut Output, replica: u64, e: Option<&DimEstimate>) {
    if let Some(e) = e {
        out.scales.extend(e.counts.iter().map(|&(j, count)| ScaleRow { replica, j, count }));
    }
}

fn push_hits(out: &mut Output, r: &HitReport) {
    out.replicas = r
        .per_replica
        .iter()
        .map(|h| ReplicaRow {
            cells: Some(h.proxy_cells),
            hit: Some(h.hit),
            ..ReplicaRow::new(h.replica)
        })
        .collect();
}

fn cover_dim<X: ReplicaExecutor>(
    cfg: &ExperimentConfig,
    caps: &Caps,
    exec: &X,
    out: &mut Output,
) -> Result<(), CliError> {
    let w = cfg.sim_window(caps)?;
    let (jmin, jmax) = default_scales(w.depth);
    let r = coversim::cover_dim(&w, cfg.replicas, cfg.seed, exec).map_err(core("window"))?;
    if r.nonempty == 0 {
        return Err(CliError::field("window", covset_core::Error::EmptySet));
    }
    out.put("cover_dim", dim_json(&r, jmin, jmax));
    push_dims(out, &r);
    Ok(())
}

fn hit<X: ReplicaExecutor>(
    cfg: &ExperimentConfig,
    caps: &Caps,
    exec: &X,
    out: &mut Output,
) -> Result<(), CliError> {
    let w = cfg.sim_window(caps)?;
    let r = coversim::hitting_frequency(&w, &cfg.target_set()?, cfg.replicas, cfg.seed, exec)
        .map_err(core("target"))?;
    out.put("hit", hit_json(&r));
    push_hits(out, &r);
    Ok(())
}

fn intersect_dim<X: ReplicaExecutor>(
    cfg: &ExperimentConfig,
    caps: &Caps,
    exec: &X,
    out: &mut Output,
) -> Result<(), CliError> {
    let w = cfg.sim_window(caps)?;
    let (jmin, jmax) = default_scales(w.depth);
    let r = coversim::intersection_dim(&w, &cfg.target_set()?, cfg.replicas, cfg.seed, exec)
        .map_err(core("target"))?;
    out.put("intersection_dim", dim_json(&r, jmin, jmax));
    push_dims(out, &r);
    Ok(())
}

/// Height `b` of a line `{y = b}` in the plane.
fn line_height(cfg: &ExperimentConfig, target: &TargetSet) -> Result<f64, CliError> {
    match target.kind() {
        TargetKind::AffineSlice { d: 2, fixed } if fixed.len() == 1 && fixed[0].0 == 1 => {
            Ok(fixed[0].1)
        }
        _ => Err(CliError::config(
            "target",
            format!(
                "bad-case needs d = 2 and a line with only axis 1 fixed, got d = {}",
                cfg.d
            ),
        )),
    }
}

fn rect_exponents(cfg: &ExperimentConfig, command: &str) -> Result<SnowflakeExponents, CliError> {
    match (&cfg.shape, cfg.exponents()?) {
        (ShapeSpec::AxisRect { .. } | ShapeSpec::RotatedRect { .. }, Some(h)) => Ok(h),
        _ => Err(CliError::config("shape", format!("{command} needs a rectangle family"))),
    }
}

fn bad_case<X: ReplicaExecutor>(
    cfg: &ExperimentConfig,
    caps: &Caps,
    exec: &X,
    out: &mut Output,
) -> Result<(), CliError> {
    let target = cfg.target_set()?;
    let b = line_height(cfg, &target)?;
    let h = rect_exponents(cfg, "bad-case")?;
    let seq = cfg.sequence()?;

    let p = cfg.projection;
    let counter = ProjectionCounter::new(&h, &seq, p.n_max, p.min_generation)
        .map_err(core("projection"))?;
    let counts = exec.map(p.replicas, |i| {
        coversim::projection_hit_count(&counter, b, &coversim::replica_stream(cfg.seed, i))
    });
    let mut all = stats::CompensatedSum::new();
    let mut tail = stats::CompensatedSum::new();
    for c in &counts {
        all.add(c.all as f64);
        tail.add(c.tail as f64);
    }
    let n = p.replicas.max(1) as f64;
    let (exp_all, exp_tail) = counter.expected();
    out.put(
        "projection",
        json!({
            "replicas": p.replicas,
            "b": b,
            "mean_count": all.value() / n,
            "mean_tail_count": tail.value() / n,
            "partial_sum": exp_all,
            "partial_sum_tail": exp_tail,
        }),
    );

    let w = cfg
        .sim_window(caps)?
        .with_family(ShapeFamily::AxisRect(h))
        .map_err(core("shape"))?;
    let r = coversim::hitting_frequency(&w, &target, cfg.replicas, cfg.seed, exec)
        .map_err(core("target"))?;
    out.put("aligned_hit", hit_json(&r));
    push_hits(out, &r);
    Ok(())
}

fn rotate<X: ReplicaExecutor>(
    cfg: &ExperimentConfig,
    caps: &Caps,
    exec: &X,
    out: &mut Output,
) -> Result<(), CliError> {
    let h = rect_exponents(cfg, "rotate")?;
    let target = cfg.target_set()?;
    let base = cfg.sim_window(caps)?;
    let run = |w: SimWindow| {
        coversim::hitting_frequency(&w, &target, cfg.replicas, cfg.seed, exec).map_err(core("target"))
    };
    let aligned = run(base.with_family(ShapeFamily::AxisRect(h.clone())).map_err(core("shape"))?)?;
    let rotated = run(base.with_family(ShapeFamily::RotatedRect(h)).map_err(core("shape"))?)?;
    out.put("aligned_hit", hit_json(&aligned));
    out.put("rotated_hit", hit_json(&rotated));
    out.put("difference", json!(rotated.frequency - aligned.frequency));
    out.replicas = aligned
        .per_replica
        .iter()
        .zip(&rotated.per_replica)
        .map(|(a, r)| ReplicaRow {
            cells: Some(a.proxy_cells),
            hit: Some(a.hit),
            rotated_cells: Some(r.proxy_cells),
            rotated_hit: Some(r.hit),
            ..ReplicaRow::new(a.replica)
        })
        .collect();
    Ok(())
}

fn percolate<X: ReplicaExecutor>(
    cfg: &ExperimentConfig,
    caps: &Caps,
    exec: &X,
    out: &mut Output,
) -> Result<(), CliError> {
    let spec = cfg.percolation;
    let deep =
        PercParams::new(cfg.d, spec.s, spec.survival_depth).map_err(core("percolation"))?;
    let alive = exec.map(cfg.replicas, |i| {
        percolation::survives(&deep, spec.survival_depth, &coversim::replica_stream(cfg.seed, i))
    });
    let survived = alive.iter().filter(|a| **a).count() as u64;
    let freq = survived as f64 / cfg.replicas as f64;
    let q = percolation::extinction_prob_oracle(deep.p, deep.arity() as u32);
    let sigma = ((1.0 - q) * q / cfg.replicas as f64).sqrt();
    out.put(
        "survival",
        json!({
            "replicas": cfg.replicas,
            "depth": spec.survival_depth,
            "survived": survived,
            "frequency": freq,
            "ci95": stats::wilson_interval(survived, cfg.replicas, coversim::WILSON_Z95),
            "sigma": sigma,
            "z": if sigma > 0.0 { (freq - (1.0 - q)) / sigma } else { 0.0 },
        }),
    );

    let params = PercParams::new(cfg.d, spec.s, spec.depth).map_err(core("percolation"))?;
    let e = cfg
        .target_set()?
        .rasterize(spec.depth, caps.grid_cap_bits)
        .map_err(core("percolation.depth"))?;
    let r = percolation::perc_intersect_dim(&params, &e, cfg.replicas, cfg.seed, exec)
        .map_err(core("percolation"))?;
    let (jmin, jmax) = default_scales(spec.depth);
    out.put(
        "intersection",
        json!({
            "depth": spec.depth,
            "hits": r.hits,
            "frequency": r.frequency,
            "ci95": [r.ci.0, r.ci.1],
            "dims": dim_json(&r.dims, jmin, jmax),
        }),
    );
    push_dims(out, &r.dims);
    for (row, a) in out.replicas.iter_mut().zip(&alive) {
        row.survived = Some(*a);
    }
    Ok(())
}
