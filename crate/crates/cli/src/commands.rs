use kerrfocus::capacity::{sweep, SweepConfig};
use kerrfocus::ct_oracle::{compare_detail, oracle_receive};
use kerrfocus::dt_model::{fmt_float, simulate, ModelOptions, Normalization, SymbolBlock};
use kerrfocus::focusing::{
    build_constellation, default_phases, difference_set, ring_powers, select_rings, FrequencySet, RingConstellation,
    RingIndexSet, RingStrategy,
};
use kerrfocus::User;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{parse_user, FocusingSection, InputKind, Resolved};
use crate::error::CliError;
use crate::output::Outputs;

const USERS: [User; 2] = [User::One, User::Two];

/// Ring sets of both users and the filter banks they induce.
struct Design {
    sets: [RingIndexSet; 2],
    filters: [FrequencySet; 2],
}

fn design(r: &Resolved, f: &FocusingSection) -> Result<Design, CliError> {
    let mut sets = Vec::with_capacity(2);
    for user in USERS {
        let set = select_rings(f.power(user), r.coeffs.focusing_coupling(user), &f.strategy(user), user)
            .map_err(|e| CliError::Config(format!("[focusing] user{user}: {e}")))?;
        sets.push(set);
    }
    let [s1, s2]: [RingIndexSet; 2] = sets.try_into().expect("two users");
    let filters = [difference_set(&s2), difference_set(&s1)];
    Ok(Design {
        sets: [s1, s2],
        filters,
    })
}

fn constellation(r: &Resolved, f: &FocusingSection, set: &RingIndexSet) -> Result<RingConstellation, CliError> {
    let user = set.owner();
    let q = f
        .phases(user)
        .unwrap_or_else(|| default_phases(f.power(user), r.coeffs.noise));
    Ok(build_constellation(set, r.coeffs.focusing_coupling(user), q)?)
}

/// Input streams are seeded apart from the receiver-noise streams.
fn input_rng(seed: u64, user: User) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1a7e_0f00_d5e7);
    rng.set_stream(user.index() as u64);
    rng
}

fn draw_focused(c: &RingConstellation, n: usize, user: User, seed: u64) -> SymbolBlock {
    let mut rng = input_rng(seed, user);
    let pts = c.points();
    SymbolBlock::new((0..n).map(|_| pts[rng.random_range(0..pts.len())]).collect(), user)
}

fn draw_gaussian(power: f64, n: usize, user: User, seed: u64) -> SymbolBlock {
    let mut rng = input_rng(seed, user);
    let s = (power / 2.0).sqrt();
    let symbols = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * s
        })
        .collect();
    SymbolBlock::new(symbols, user)
}

fn fmt_set(v: impl IntoIterator<Item = impl ToString>) -> String {
    let items: Vec<String> = v.into_iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

pub fn rings(r: &Resolved) -> Result<Outputs, CliError> {
    let f = r.focusing()?;
    let d = design(r, f)?;
    let mut out = Outputs::default();
    out.csv("rings.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["user", "ring_index", "power", "amplitude"])?;
        for set in &d.sets {
            let h = r.coeffs.focusing_coupling(set.owner());
            let powers = ring_powers(set, h).expect("coupling checked during selection");
            for (n, p) in set.indices().iter().zip(powers) {
                w.write_record([
                    set.owner().to_string(),
                    n.to_string(),
                    fmt_float(p),
                    fmt_float(p.sqrt()),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    out.csv("filters.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["receiver", "f"])?;
        for (user, fs) in USERS.iter().zip(&d.filters) {
            for f in fs.as_slice() {
                w.write_record([user.to_string(), f.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    for (i, set) in d.sets.iter().enumerate() {
        let user = set.owner();
        let h = r.coeffs.focusing_coupling(user);
        println!(
            "user {user}: N = {} mean power {} (budget {}); receiver {user} filters F = {}",
            fmt_set(set.indices()),
            fmt_float(set.mean_power(h)),
            fmt_float(f.power(user)),
            fmt_set(d.filters[i].as_slice()),
        );
    }
    Ok(out)
}

pub fn simulate_cmd(r: &Resolved) -> Result<Outputs, CliError> {
    let f = r.focusing()?;
    let s = r.simulate()?;
    if s.block_length == 0 {
        return Err(CliError::Config("[simulate] block_length must be positive".into()));
    }
    let d = design(r, f)?;
    let x1 = draw_focused(&constellation(r, f, &d.sets[0])?, s.block_length, User::One, r.seed);
    let x2 = draw_focused(&constellation(r, f, &d.sets[1])?, s.block_length, User::Two, r.seed);
    let (y1, y2) = simulate(
        &x1,
        &x2,
        &d.filters[0],
        &d.filters[1],
        &r.coeffs,
        &r.opts,
        s.noise,
        r.seed,
    )?;
    let mut out = Outputs::default();
    out.csv("rx1.csv", |buf| y1.write_csv(buf))?;
    out.csv("rx2.csv", |buf| y2.write_csv(buf))?;
    if s.write_inputs {
        out.csv("tx.csv", |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["user", "j", "re", "im"])?;
            for x in [&x1, &x2] {
                for (j, v) in x.symbols().iter().enumerate() {
                    w.write_record([x.user().to_string(), j.to_string(), fmt_float(v.re), fmt_float(v.im)])?;
                }
            }
            w.flush()?;
            Ok(())
        })?;
    }
    println!(
        "simulated {} symbols per user, noise {}, variant {}, normalization {}",
        s.block_length,
        if s.noise { "on" } else { "off" },
        r.opts.variant.as_str(),
        r.opts.normalization.as_str()
    );
    Ok(out)
}

/// On a threshold miss the outputs are returned alongside the error so the
/// per-key errors can still be inspected.
pub fn validate(r: &Resolved) -> Result<(Outputs, Option<CliError>), CliError> {
    let v = r.validate()?;
    let m = r.coeffs.memory;
    if v.block_length < m + 2 {
        return Err(CliError::Config(format!(
            "[validate] block_length {} is below M + 2 = {}",
            v.block_length,
            m + 2
        )));
    }
    if v.threshold.is_nan() || v.threshold <= 0.0 {
        return Err(CliError::Config("[validate] threshold must be positive".into()));
    }
    let n = v.block_length;
    let (x1, x2, f1, f2) = match v.inputs {
        InputKind::Zero => {
            let fw = FrequencySet::contiguous(2);
            (
                SymbolBlock::zeros(n, User::One),
                SymbolBlock::zeros(n, User::Two),
                fw.clone(),
                fw,
            )
        }
        kind => {
            let f = r.focusing()?;
            let d = design(r, f)?;
            let (x1, x2) = if kind == InputKind::Focused {
                (
                    draw_focused(&constellation(r, f, &d.sets[0])?, n, User::One, r.seed),
                    draw_focused(&constellation(r, f, &d.sets[1])?, n, User::Two, r.seed),
                )
            } else {
                (
                    draw_gaussian(f.p1, n, User::One, r.seed),
                    draw_gaussian(f.p2, n, User::Two, r.seed),
                )
            };
            let [f1, f2] = d.filters;
            (x1, x2, f1, f2)
        }
    };
    // the oracle produces physical-scale outputs
    let opts = ModelOptions {
        normalization: Normalization::Physical,
        ..r.opts
    };
    let (m1, m2) = simulate(&x1, &x2, &f1, &f2, &r.coeffs, &opts, false, 0)?;
    let (o1, o2) = oracle_receive(&x1, &x2, &r.coeffs, &f1, &f2, opts.variant, r.os)?;
    let e1 = compare_detail(&o1, &m1, &x1, r.coeffs.es)?;
    let e2 = compare_detail(&o2, &m2, &x2, r.coeffs.es)?;
    let worst = |e: &[(usize, i64, f64)]| e.iter().fold(0.0f64, |a, &(_, _, x)| a.max(x));
    let (w1, w2) = (worst(&e1), worst(&e2));
    let max = w1.max(w2);
    if !max.is_finite() {
        return Err(CliError::Numerical(format!("non-finite oracle error at OS = {}", r.os)));
    }
    let mut out = Outputs::default();
    out.csv("validate.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["receiver", "j", "f", "rel_error"])?;
        for (user, errs) in [(User::One, &e1), (User::Two, &e2)] {
            for &(j, f, e) in errs.iter() {
                w.write_record([user.to_string(), j.to_string(), f.to_string(), fmt_float(e)])?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    println!(
        "max_rel_error={} receiver1={} receiver2={} threshold={} os={} variant={}",
        fmt_float(max),
        fmt_float(w1),
        fmt_float(w2),
        fmt_float(v.threshold),
        r.os,
        opts.variant.as_str()
    );
    let miss = (max > v.threshold).then(|| {
        CliError::Threshold(format!(
            "max relative error {max:e} exceeds threshold {:e}",
            v.threshold
        ))
    });
    Ok((out, miss))
}

pub fn sweep_cmd(r: &Resolved) -> Result<Outputs, CliError> {
    let s = r.sweep()?;
    let mode = s.mode()?;
    if s.users.is_empty() {
        return Err(CliError::Config("[sweep] users must not be empty".into()));
    }
    let users = s.users.iter().map(|&k| parse_user(k)).collect::<Result<Vec<_>, _>>()?;
    let mut out = Outputs::default();
    for user in users {
        let strategy = r
            .file
            .focusing
            .as_ref()
            .map(|f| f.strategy(user))
            .unwrap_or(RingStrategy::Quadratic { c: 1 });
        let series: &[bool] = if s.amplitude_only { &[false, true] } else { &[false] };
        for &amplitude_only in series {
            let cfg = SweepConfig {
                mode: mode.clone(),
                user,
                strategy: strategy.clone(),
                phases: s.phases,
                amplitude_only,
                samples: s.samples,
                seed: r.seed,
            };
            let res = sweep(&cfg, &r.coeffs)?;
            let name = if amplitude_only { "amplitude_only" } else { "focusing" };
            out.csv(&format!("sweep_user{user}_{name}.csv"), |buf| res.write_csv(buf))?;
            println!(
                "user {user} {name}: slope {} 95% CI [{}, {}] over the top {} of {} points",
                fmt_float(res.fit.slope),
                fmt_float(res.fit.ci_low),
                fmt_float(res.fit.ci_high),
                res.fit.points,
                res.rows.len()
            );
        }
    }
    Ok(out)
}
