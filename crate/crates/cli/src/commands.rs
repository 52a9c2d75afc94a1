use std::io::Write;
use std::path::Path;

use gapcount_core::acceptance;
use gapcount_core::counting::{
    asymptotic_table, bs_matrix, counting_bs, counting_direct, edge_ladder, ladder_scale, TableOptions,
};
use gapcount_core::floquet::{
    band_structure, check_edge_regularity, find_gaps, BandStructure, Gap, GapEdge, GapKind, RegularityOptions, Verdict,
};
use gapcount_core::gamma::{edge_integral, gamma_coefficient, weak_edge_membership, EdgeIntegralReport, GammaOptions};
use gapcount_core::graph::{assemble_truncated, build_graph, sample_potential, AngularProfile, GraphSpecDocument, PeriodicGraph};
use gapcount_core::pdo::{
    commutator_singular_values, cwikel_ratio, default_grid, dp_vs_formula, LatticeSymbol, TorusFunction,
};
use gapcount_core::weak_lp::{dp_window, membership_verdicts, weak_products, weak_quasinorm, Trend, WeightedSequence};
use gapcount_core::{Error, Sign};
use serde_json::json;

use crate::output::{describe, emit, real, reals, Format, Table};
use crate::{
    AsymptoticsArgs, BandsArgs, CountArgs, EdgeArg, EdgeConditionsArgs, Failure, GammaArgs, GapsArgs, OutArgs, PdoArgs,
    RegularityArgs, VerifyArgs, WeaklpArgs,
};

type Outcome = Result<(), Failure>;

fn load_graph(path: &Path) -> Result<PeriodicGraph, Failure> {
    let spec = GraphSpecDocument::load(path)?;
    build_graph(&spec).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(out: &OutArgs, table: &Table) -> Outcome {
    write_text(out.out.as_deref(), &table.render(out.format), &out.out)
}

fn write_text(path: Option<&Path>, text: &str, name: &Option<std::path::PathBuf>) -> Outcome {
    emit(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", describe(name))))
}

fn edge(arg: EdgeArg) -> GapEdge {
    match arg {
        EdgeArg::Left => GapEdge::Left,
        EdgeArg::Right => GapEdge::Right,
    }
}

fn edge_name(e: GapEdge) -> &'static str {
    match e {
        GapEdge::Left => "left",
        GapEdge::Right => "right",
    }
}

fn select_gap(bs: &BandStructure, index: usize) -> Result<Gap, Failure> {
    let gaps = find_gaps(bs);
    gaps.get(index).copied().ok_or_else(|| {
        Failure::Usage(format!("gap index {index} out of range; this graph has gaps 0..{}", gaps.len() - 1))
    })
}

fn finite_edge(gap: &Gap, e: GapEdge, index: usize) -> Outcome {
    if e.value(gap).is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("gap {index} has no {} edge", edge_name(e))))
    }
}

fn one_based(b: Option<usize>) -> String {
    b.map_or_else(String::new, |b| (b + 1).to_string())
}

pub fn bands(a: BandsArgs) -> Outcome {
    let g = load_graph(&a.graph.graph)?;
    let bs = band_structure(&g, a.grid)?;
    let d = g.dim();
    let header = (1..=d).map(|i| format!("k_{i}")).chain((1..=bs.bands).map(|s| format!("E_{s}")));
    let mut table = Table::new(header);
    for l in 0..bs.grid.len() {
        let mut row = reals(&bs.grid.point(l));
        row.extend(reals(bs.energies_at(l)));
        table.push(row);
    }
    write(&a.out, &table)
}

pub fn gaps(a: GapsArgs) -> Outcome {
    let g = load_graph(&a.graph.graph)?;
    let bs = band_structure(&g, a.grid)?;
    let mut table = Table::new(["index", "kind", "lower", "upper", "band_below", "band_above"]);
    for (i, gap) in find_gaps(&bs).iter().enumerate() {
        let kind = match gap.kind {
            GapKind::LeftSemiInfinite => "left-semi-infinite",
            GapKind::Interior => "interior",
            GapKind::RightSemiInfinite => "right-semi-infinite",
        };
        table.push(vec![
            i.to_string(),
            kind.to_string(),
            real(gap.lower),
            real(gap.upper),
            one_based(gap.band_below),
            one_based(gap.band_above),
        ]);
    }
    write(&a.out, &table)
}

pub fn regularity(a: RegularityArgs) -> Outcome {
    let g = load_graph(&a.graph.graph)?;
    let bs = band_structure(&g, a.grid)?;
    let gap = select_gap(&bs, a.gap)?;
    let e = edge(a.edge);
    finite_edge(&gap, e, a.gap)?;
    let opts = RegularityOptions {
        coarse_grid: a.grid,
        ..RegularityOptions::default()
    };
    let r = check_edge_regularity(&g, &gap, e, &opts)?;
    let verdict = match r.verdict {
        Verdict::Regular => "regular",
        Verdict::NonRegular => "non-regular",
        Verdict::Inconclusive => "inconclusive",
    };
    let hessians: Vec<Vec<Vec<f64>>> = r
        .hessians
        .iter()
        .map(|h| (0..h.nrows()).map(|i| h.row(i).iter().copied().collect()).collect())
        .collect();
    let report = json!({
        "gap": a.gap,
        "edge": edge_name(e),
        "edge_value": r.edge_value,
        "band": r.band + 1,
        "verdict": verdict,
        "extremizers": r.extremizers,
        "hessians": hessians,
        "note": r.note,
    });
    let mut text = serde_json::to_string_pretty(&report).expect("report is serializable");
    text.push('\n');
    write_text(a.out.as_deref(), &text, &a.out)
}

pub fn gamma(a: GammaArgs) -> Outcome {
    let g = load_graph(&a.graph.graph)?;
    let profile = AngularProfile::parse(&a.theta)?;
    let sign: Sign = a.sign.into();
    let opts = GammaOptions {
        base_grid: a.grid,
        edge_kappa_at_p1: a.kappa,
        ..GammaOptions::default()
    };
    let r = gamma_coefficient(&g, a.lambda, a.p, sign, &profile, &opts)?;
    let value = r.value.unwrap_or(f64::NAN);
    if r.value.is_none() {
        if let Some(rep) = &r.edge_report {
            eprintln!(
                "edge evaluation declined: integrability ladder at exponent {} is {:?}",
                rep.kappa, rep.verdict
            );
        }
    }
    match &a.out.out {
        None if a.out.format == Format::Csv => {
            println!("{value}");
            Ok(())
        }
        _ => {
            let mut table = Table::new(["lambda", "p", "sign", "gamma", "torus_sum", "sphere", "grid"]);
            table.push(vec![
                real(a.lambda),
                real(a.p),
                sign.as_char().to_string(),
                real(value),
                real(r.torus_sum()),
                real(r.sphere_integral),
                r.grids.last().copied().unwrap_or(0).to_string(),
            ]);
            write(&a.out, &table)
        }
    }
}

fn ladder_rows(table: &mut Table, check: &str, exponent: f64, r: &EdgeIntegralReport) {
    for (i, (&m, &total)) in r.ladder.iter().zip(&r.totals).enumerate() {
        let growth = if i == 0 { String::new() } else { real(r.growth_exponents[i - 1]) };
        table.push(vec![
            check.to_string(),
            real(exponent),
            m.to_string(),
            real(total),
            growth,
            format!("{:?}", r.verdict).to_lowercase(),
        ]);
    }
}

pub fn edge_conditions(a: EdgeConditionsArgs) -> Outcome {
    let g = load_graph(&a.graph.graph)?;
    let bs = band_structure(&g, 64)?;
    let gap = select_gap(&bs, a.gap)?;
    let e = edge(a.edge);
    finite_edge(&gap, e, a.gap)?;
    let kappa = a.kappa.unwrap_or_else(|| GammaOptions::default().edge_kappa(a.p));
    let integrability = edge_integral(&g, &gap, e, kappa, &a.ladder)?;
    let weak = weak_edge_membership(&g, &gap, e, a.p, &a.weak_ladder)?;
    let mut table = Table::new(["check", "exponent", "grid", "total", "growth_exponent", "verdict"]);
    ladder_rows(&mut table, "integrable", kappa, &integrability);
    ladder_rows(&mut table, "weak", a.p, &weak);
    write(&a.out, &table)
}

pub fn count(a: CountArgs) -> Outcome {
    let g = load_graph(&a.graph.graph)?;
    let profile = AngularProfile::parse(&a.potential.theta)?;
    let mut sign: Sign = a.potential.sign.into();
    let lambdas = match (a.gap, a.edge, a.lambda) {
        (Some(index), Some(edge_arg), _) => {
            let bs = band_structure(&g, 64)?;
            let gap = select_gap(&bs, index)?;
            let e = edge(edge_arg);
            finite_edge(&gap, e, index)?;
            let edge_sign = match e {
                GapEdge::Left => Sign::Plus,
                GapEdge::Right => Sign::Minus,
            };
            if edge_sign != sign {
                return Err(Failure::Usage(format!(
                    "the {} edge is approached with sign {}",
                    edge_name(e),
                    edge_sign.as_char()
                )));
            }
            sign = edge_sign;
            let scale = ladder_scale(&gap, (bs.global_min(), bs.global_max()));
            edge_ladder(&gap, e, scale, a.steps)
        }
        (None, _, Some(l)) => vec![l],
        _ => return Err(Failure::Usage("give --lambda, or --gap with --edge".into())),
    };
    let h = assemble_truncated(&g, a.radius);
    let v = sample_potential(&g, &profile, a.potential.p, a.radius)?;
    let mut table = Table::new(["lambda", "tau", "L", "N_bs", "N_direct", "gamma", "ratio", "flags"]);
    for &lambda in &lambdas {
        let gamma = gamma_coefficient(&g, lambda, a.potential.p, sign, &profile, &GammaOptions::default())?
            .value
            .unwrap_or(f64::NAN);
        let x = bs_matrix(&h, &v, lambda)?;
        for &tau in &a.tau {
            let bs = counting_bs(&x, tau, sign)?;
            let direct = counting_direct(&h, &v, lambda, tau, sign)?;
            table.push(vec![
                real(lambda),
                real(tau),
                a.radius.to_string(),
                bs.value.to_string(),
                direct.to_string(),
                real(gamma),
                real(bs.value as f64 / (tau.powf(a.potential.p) * gamma)),
                if bs.boundary { "boundary".into() } else { String::new() },
            ]);
        }
    }
    write(&a.out, &table)
}

pub fn asymptotics(a: AsymptoticsArgs) -> Outcome {
    let g = load_graph(&a.graph.graph)?;
    let profile = AngularProfile::parse(&a.potential.theta)?;
    let opts = TableOptions {
        support_constant: a.support_constant,
        ..TableOptions::default()
    };
    let t = asymptotic_table(&g, &profile, a.potential.p, a.lambda, a.potential.sign.into(), &a.tau, &a.radii, &opts)?;
    let mut table = Table::new(["lambda", "tau", "L", "N_bs", "N_direct", "gamma", "ratio", "flags"]);
    for r in &t.rows {
        table.push(vec![
            real(r.lambda),
            real(r.tau),
            r.radius.to_string(),
            r.n_bs.to_string(),
            r.n_direct.to_string(),
            real(r.gamma),
            real(r.ratio),
            r.flags(),
        ]);
    }
    write(&a.out, &table)
}

fn product_table(s: &WeightedSequence, p: f64, names: [&str; 3]) -> Table {
    let mut table = Table::new(names);
    for (i, (&x, &y)) in s.values().iter().zip(&weak_products(s, p)).enumerate() {
        table.push(vec![(i + 1).to_string(), real(x), real(y)]);
    }
    table
}

pub fn pdo(a: PdoArgs) -> Outcome {
    if a.radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Usage("box radii must be increasing".into()));
    }
    let f = TorusFunction::parse(&a.f, a.dim)?;
    let v = AngularProfile::parse(&a.theta)?;
    let grid = |radius: usize| a.grid.unwrap_or_else(|| default_grid(radius));
    let last = *a.radii.last().expect("clap requires at least one radius");
    let s_names = ["m", "s_m", "m^{1/p}s_m"];

    if a.commutator {
        let w = LatticeSymbol::homogeneous(a.dim, &v, a.p, last)?;
        let s = commutator_singular_values(&f, &w)?;
        return write(&a.out, &product_table(&s, a.p, s_names));
    }
    if let Some(q) = a.cwikel_q {
        let mut table = Table::new(["L", "M", "ratio"]);
        for &radius in &a.radii {
            let w = LatticeSymbol::homogeneous(a.dim, &v, a.p, radius)?;
            let ratio = cwikel_ratio(&f, &w, a.p, q, grid(radius))?;
            table.push(vec![radius.to_string(), grid(radius).to_string(), real(ratio)]);
        }
        return write(&a.out, &table);
    }

    let g = TorusFunction::parse(&a.g, a.dim)?;
    let mut summary = Table::new(["L", "M", "dp_sup", "dp_inf", "formula"]);
    let mut last_report = None;
    for &radius in &a.radii {
        let r = dp_vs_formula(&f, &v, &g, a.p, a.dim, radius, grid(radius), a.window)?;
        let (sup, inf) = r.dp_empirical.map_or((f64::NAN, f64::NAN), |d| (d.sup_est, d.inf_est));
        summary.push(vec![
            radius.to_string(),
            grid(radius).to_string(),
            real(sup),
            real(inf),
            real(r.formula_value.unwrap_or(f64::NAN)),
        ]);
        last_report = Some(r);
    }
    let report = last_report.expect("at least one radius");
    let mut rows = Table::new(s_names);
    for (m, s, ms) in report.rows(a.p) {
        rows.push(vec![m.to_string(), real(s), real(ms)]);
    }
    write(&a.out, &rows)?;
    // With both tables headed for stdout the summary moves to stderr.
    if a.summary.is_none() && a.out.out.is_none() {
        eprint!("{}", summary.render(a.out.format));
        Ok(())
    } else {
        write_text(a.summary.as_deref(), &summary.render(a.out.format), &a.summary)
    }
}

/// Reads nonnegative reals separated by whitespace or commas.
fn read_sequence(path: &Path) -> Result<Vec<f64>, Error> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: origin.clone(),
        source,
    })?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        let separator = |c: char| c.is_whitespace() || c == ',';
        let mut rest = body;
        while let Some(start) = rest.find(|c: char| !separator(c)) {
            let tail = &rest[start..];
            let len = tail.find(separator).unwrap_or(tail.len());
            let field = &tail[..len];
            let column = body.len() - tail.len() + 1;
            let fail = |message: String| Error::Parse {
                path: origin.clone(),
                line: lineno + 1,
                column,
                message,
            };
            let x: f64 = field.parse().map_err(|_| fail(format!("`{field}` is not a number")))?;
            if !(x >= 0.0 && x.is_finite()) {
                return Err(fail(format!("{x} is not a finite nonnegative value")));
            }
            values.push(x);
            rest = &tail[len..];
        }
    }
    Ok(values)
}

pub fn weaklp(a: WeaklpArgs) -> Outcome {
    let seq = WeightedSequence::new(read_sequence(&a.input)?)?;
    let trend = |t: Trend| if t == Trend::Yes { "yes" } else { "no" };
    let mut summary = json!({
        "n": seq.len(),
        "p": a.p,
        "quasinorm": weak_quasinorm(&seq, a.p),
    });
    if seq.len() >= 64 {
        let v = membership_verdicts(&seq, a.p)?;
        summary["weak"] = json!(trend(v.weak));
        summary["small_o"] = json!(trend(v.small_o));
        summary["quasinorm_half"] = json!(v.quasinorm_half);
    }
    if let Some(w) = a.window {
        let d = dp_window(&seq, a.p, w)?;
        summary["dp_window"] = json!({
            "window": [d.window.0, d.window.1],
            "sup": d.sup_est,
            "inf": d.inf_est,
            "samples": d.samples,
        });
    }
    if let Some(path) = &a.out {
        let table = product_table(&seq, a.p, ["m", "a_m", "m^{1/p}a_m"]);
        write_text(Some(path), &table.to_csv(), &a.out)?;
    }
    let mut text = serde_json::to_string_pretty(&summary).expect("summary is serializable");
    text.push('\n');
    write_text(None, &text, &None)
}

pub fn verify(a: VerifyArgs) -> Outcome {
    let checks = acceptance::all();
    if let Some(bad) = a.only.iter().find(|&&i| i == 0 || i > checks.len()) {
        return Err(Failure::Usage(format!("no check numbered {bad}; checks are 1..={}", checks.len())));
    }
    let mut passed = 0;
    let mut run = 0;
    for (i, check) in checks.iter().enumerate() {
        if !a.only.is_empty() && !a.only.contains(&(i + 1)) {
            continue;
        }
        let outcome = check();
        println!("{outcome}");
        let _ = std::io::stdout().flush();
        run += 1;
        passed += usize::from(outcome.passed);
    }
    println!("{passed}/{run} checks passed");
    if passed == run {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}
