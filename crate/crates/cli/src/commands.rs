use std::path::Path;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use weyl_core::bounds;
use weyl_core::curves::{self, Aggregate, Curve, CurveFamily, SamplingMode, SupOptions};
use weyl_core::large_values::{self, ScanParams, Window};
use weyl_core::mean_value;
use weyl_core::phase::{parse_coordinate, ratio_to_unit_f64, small_ratio, IntPolynomial, PhasePoint, RationalPoint};
use weyl_core::weyl::{self, CompletionMethod};

use crate::args::*;
use crate::output::{emit, write_csv, CliError, CliResult, Run};

pub fn run(cli: &Cli) -> CliResult<()> {
    let timed = !cli.no_wall_time;
    let out = cli.out.as_deref();
    let csv = cli.csv.as_deref();
    match &cli.command {
        Command::Tables(a) => tables(a, out, csv, timed),
        Command::Sum(a) => sum(a, out, timed),
        Command::Wsum(a) => wsum(a, out, csv, timed),
        Command::MvtCount(a) => mvt_count(a, out, timed),
        Command::MvtMc(a) => mvt_mc(a, out, timed),
        Command::Scan(a) => scan(a, out, csv, timed),
        Command::CurveSup(a) => curve_sup(a, out, csv, timed),
        Command::Exponent(a) => exponent(a, out, csv, timed),
        Command::Badset(a) => badset(a, out, csv, timed),
    }
}

fn omega(a: &OmegaArgs) -> CliResult<IntPolynomial> {
    match (&a.omega, a.monomial) {
        (Some(s), None) => Ok(s.parse()?),
        (None, Some(k)) => Ok(IntPolynomial::monomial(k)?),
        _ => Err(CliError::Usage(
            "give ω with --omega c0,c1,...,ck or --monomial k".into(),
        )),
    }
}

fn coordinate(flag: &str, s: &str) -> CliResult<BigRational> {
    parse_coordinate(s).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn point(x: &BigRational, y: &BigRational) -> PhasePoint {
    PhasePoint {
        x: ratio_to_unit_f64(x),
        y: ratio_to_unit_f64(y),
    }
}

fn parse_k_range(s: &str) -> CliResult<std::ops::RangeInclusive<u64>> {
    let bad = || CliError::Usage(format!("--k expects a..b or a single degree, got {s:?}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (s, s),
    };
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

fn tables(a: &TablesArgs, out: Option<&Path>, csv: Option<&Path>, timed: bool) -> CliResult<()> {
    let run = Run::new("tables", a, None, timed);
    let rho = coordinate("rho", &a.rho)?;
    let rows = bounds::tables(parse_k_range(&a.k)?, &rho)?;
    let rendered = bounds::render_csv(&rows);
    if let Some(p) = csv {
        std::fs::write(p, &rendered)?;
    }
    let text = match a.format {
        TableFormat::Csv => rendered,
        TableFormat::Markdown => bounds::render_markdown(&rows),
        TableFormat::Json => run.envelope(&rows)?,
    };
    emit(out, &text)
}

#[derive(Serialize)]
struct SumResult {
    x: f64,
    y: f64,
    #[serde(rename = "N")]
    n: u64,
    method: SumMethod,
    re: f64,
    im: f64,
    abs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    partial_max: Option<f64>,
}

fn sum(a: &SumArgs, out: Option<&Path>, timed: bool) -> CliResult<()> {
    let run = Run::new("sum", a, None, timed);
    let w = omega(&a.omega)?;
    let (x, y) = (coordinate("x", &a.x)?, coordinate("y", &a.y)?);
    let p = point(&x, &y);
    let value = match a.method {
        SumMethod::Recurrence => weyl::weyl_sum(&w, p, a.n)?,
        SumMethod::Reference => weyl::weyl_sum_reference(&w, p, a.n)?,
        SumMethod::Exact => {
            let (Some(rx), Some(ry)) = (small_ratio(&x), small_ratio(&y)) else {
                return Err(CliError::Usage(
                    "--method exact needs coordinates with denominators below 2^62".into(),
                ));
            };
            weyl::weyl_sum_exact(&w, RationalPoint::new(rx, ry)?, a.n)?
        }
    };
    let partial_max = if a.partial_max {
        Some(weyl::partial_max(&w, p, a.n)?)
    } else {
        None
    };
    let result = SumResult {
        x: p.x,
        y: p.y,
        n: a.n,
        method: a.method,
        re: value.re,
        im: value.im,
        abs: value.abs(),
        partial_max,
    };
    emit(out, &run.envelope(&result)?)
}

#[derive(Serialize)]
struct WsumResult {
    x: f64,
    y: f64,
    #[serde(rename = "N")]
    n: u64,
    method: WMethod,
    #[serde(rename = "W")]
    w: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    spectrum: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct BatchInput {
    x: String,
    y: String,
    #[serde(rename = "N")]
    n: u64,
}

fn wsum(a: &WsumArgs, out: Option<&Path>, csv: Option<&Path>, timed: bool) -> CliResult<()> {
    let run = Run::new("wsum", a, None, timed);
    let w = omega(&a.omega)?;
    if let Some(path) = &a.batch {
        let mut reader = csv::Reader::from_path(path)?;
        let mut inputs = Vec::new();
        for (i, row) in reader.deserialize::<BatchInput>().enumerate() {
            let row = row?;
            let x = coordinate("batch x", &row.x).map_err(|e| CliError::Usage(format!("row {}: {e}", i + 1)))?;
            let y = coordinate("batch y", &row.y).map_err(|e| CliError::Usage(format!("row {}: {e}", i + 1)))?;
            inputs.push((point(&x, &y), row.n));
        }
        let rows = weyl::evaluate_batch(&w, &inputs)?;
        if let Some(p) = csv {
            write_csv(p, &rows)?;
        }
        return emit(out, &run.envelope(&rows)?);
    }
    let (Some(xs), Some(ys), Some(n)) = (&a.x, &a.y, a.n) else {
        return Err(CliError::Usage("wsum needs --x, --y and --N, or --batch".into()));
    };
    let p = point(&coordinate("x", xs)?, &coordinate("y", ys)?);
    let method = match a.method {
        WMethod::Fft => CompletionMethod::Fft,
        WMethod::Direct => CompletionMethod::Direct,
    };
    let r = weyl::completion_sum(&w, p, n, method, a.spectrum)?;
    let result = WsumResult {
        x: p.x,
        y: p.y,
        n,
        method: a.method,
        w: r.value,
        spectrum: r.inner_spectrum,
    };
    if let Some(path) = csv {
        let row = CsvW {
            x: result.x,
            y: result.y,
            n: result.n,
            w: result.w,
        };
        write_csv(path, [row])?;
    }
    emit(out, &run.envelope(&result)?)
}

#[derive(Serialize)]
struct CsvW {
    x: f64,
    y: f64,
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "W")]
    w: f64,
}

fn mvt_count(a: &MvtCountArgs, out: Option<&Path>, timed: bool) -> CliResult<()> {
    let run = Run::new("mvt-count", a, None, timed);
    let w = omega(&a.omega)?;
    let r = match a.route {
        CountRoute::Multiset => mean_value::count_solutions(&w, a.s, a.n, a.budget)?,
        CountRoute::Join => mean_value::count_solutions_by_join(&w, a.s, a.n, a.budget)?,
    };
    emit(out, &run.envelope(&r)?)
}

fn mvt_mc(a: &MvtMcArgs, out: Option<&Path>, timed: bool) -> CliResult<()> {
    let run = Run::new("mvt-mc", a, Some(a.seed), timed);
    let w = omega(&a.omega)?;
    let r = match a.target {
        MomentTarget::S => mean_value::mc_moment_s(&w, a.s, a.n, a.samples, a.seed)?,
        MomentTarget::W => mean_value::mc_moment_w(&w, a.s, a.n, a.samples, a.seed)?,
    };
    emit(out, &run.envelope(&r)?)
}

fn parse_floats<const K: usize>(flag: &str, s: &str) -> CliResult<[f64; K]> {
    let bad = || CliError::Usage(format!("--{flag} expects {K} comma-separated numbers, got {s:?}"));
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    v.try_into().map_err(|_| bad())
}

fn scan(a: &ScanArgs, out: Option<&Path>, csv: Option<&Path>, timed: bool) -> CliResult<()> {
    let run = Run::new("scan", a, None, timed);
    let w = match (a.omega.omega.is_some() || a.omega.monomial.is_some(), a.k) {
        (true, _) => omega(&a.omega)?,
        (false, Some(k)) => IntPolynomial::monomial(k)?,
        (false, None) => return Err(CliError::Usage("scan needs --k, --omega or --monomial".into())),
    };
    if let Some(k) = a.k {
        if k != w.degree() {
            return Err(CliError::Usage(format!("--k {k} disagrees with deg ω = {}", w.degree())));
        }
    }
    let spec = large_values::grid_spec(a.n, a.alpha, a.eps, w.degree())?;
    let window = match &a.window {
        Some(s) => {
            let [x0, x1, y0, y1] = parse_floats::<4>("window", s)?;
            Window::from_coords(&spec, x0, x1, y0, y1)?
        }
        None => Window::full(&spec),
    };
    let mut params = ScanParams::for_degree(w.degree())?;
    params.budget = a.budget;
    if let Some(s) = a.s {
        params.s = s;
    }
    if let Some(t) = a.t {
        params.t = t;
    }
    let r = large_values::scan(&w, &spec, window, &params)?;
    if let Some(p) = csv {
        write_csv(p, &r.flagged)?;
    }
    emit(out, &run.envelope(&r)?)
}

fn read_points(path: &Path) -> CliResult<Vec<PhasePoint>> {
    #[derive(Deserialize)]
    struct Row {
        x: f64,
        y: f64,
    }
    let mut reader = csv::Reader::from_path(path)?;
    let mut pts = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row?;
        pts.push(PhasePoint::new(row.x, row.y)?);
    }
    Ok(pts)
}

#[derive(Serialize)]
struct CurveSupResult<'a> {
    curve: &'a Curve,
    #[serde(rename = "N")]
    n: u64,
    certified: bool,
    #[serde(flatten)]
    sup: &'a curves::CurveSupremum,
}

#[derive(Serialize)]
struct CurveSupRow {
    #[serde(rename = "N")]
    n: u64,
    sup_s: f64,
    sup_w: Option<f64>,
    argmax_x: f64,
    argmax_y: f64,
    samples_used: u64,
}

fn curve_sup(a: &CurveSupArgs, out: Option<&Path>, csv: Option<&Path>, timed: bool) -> CliResult<()> {
    let run = Run::new("curve-sup", a, None, timed);
    let w = omega(&a.omega)?;
    let curve = match a.curve {
        CurveKind::Line => Curve::line(a.tau, a.c)?,
        CurveKind::Circle => {
            let [z1, z2] = parse_floats::<2>("center", &a.center)?;
            Curve::circle(PhasePoint::new(z1, z2)?, a.r)?
        }
        CurveKind::Parametric => {
            let Some(p) = &a.points else {
                return Err(CliError::Usage("--curve parametric needs --points FILE".into()));
            };
            Curve::parametric(read_points(p)?, a.rho, a.holder_const)?
        }
    };
    let mode = match a.mode {
        Mode::Empirical => SamplingMode::Empirical,
        Mode::Rigorous => SamplingMode::Rigorous,
    };
    let opts = SupOptions {
        mode,
        samples: a.samples,
        with_w: a.with_w,
        alpha: a.alpha,
        eps: a.eps,
        budget: a.budget,
    };
    let sup = curves::sup_along(&w, &curve, a.n, &opts)?;
    if let Some(p) = csv {
        write_csv(
            p,
            [CurveSupRow {
                n: a.n,
                sup_s: sup.sup_s,
                sup_w: sup.sup_w,
                argmax_x: sup.argmax.x,
                argmax_y: sup.argmax.y,
                samples_used: sup.samples_used,
            }],
        )?;
    }
    let result = CurveSupResult {
        curve: &curve,
        n: a.n,
        certified: mode == SamplingMode::Rigorous,
        sup: &sup,
    };
    emit(out, &run.envelope(&result)?)
}

fn family(a: &FamilyArgs) -> CurveFamily {
    match a.family {
        FamilyKind::Lines => CurveFamily::Lines { tau: a.tau },
        FamilyKind::Projection => CurveFamily::Projection,
        FamilyKind::Circles => CurveFamily::Circles { r: a.r },
        FamilyKind::Point => CurveFamily::Point,
    }
}

#[derive(Serialize)]
struct ExponentRow {
    #[serde(rename = "N")]
    n: u64,
    mean_sup: f64,
    median_sup: f64,
    std: f64,
}

fn exponent(a: &ExponentArgs, out: Option<&Path>, csv: Option<&Path>, timed: bool) -> CliResult<()> {
    let run = Run::new("exponent", a, Some(a.seed), timed);
    let w = omega(&a.omega)?;
    let ns: Vec<u64> = a
        .ns
        .split(',')
        .map(|t| t.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--Ns expects comma-separated integers, got {:?}", a.ns)))?;
    let aggregate = match a.aggregate {
        AggregateKind::Mean => Aggregate::Mean,
        AggregateKind::Median => Aggregate::Median,
    };
    let r = curves::exponent_along(&w, family(&a.family), &ns, a.trials, a.seed, a.samples, aggregate)?;
    if let Some(p) = csv {
        write_csv(
            p,
            r.per_n.iter().map(|s| ExponentRow {
                n: s.n,
                mean_sup: s.mean_sup,
                median_sup: s.median_sup,
                std: s.std,
            }),
        )?;
    }
    emit(out, &run.envelope(&r)?)
}

#[derive(Serialize)]
struct BadsetRow {
    #[serde(rename = "N")]
    n: u64,
    alpha: f64,
    trials: u64,
    exceed_fraction: f64,
    theory_exponent: Option<f64>,
}

fn badset(a: &BadsetArgs, out: Option<&Path>, csv: Option<&Path>, timed: bool) -> CliResult<()> {
    let run = Run::new("badset", a, Some(a.seed), timed);
    let w = omega(&a.omega)?;
    let r = curves::bad_set_experiment(&w, family(&a.family), a.n, a.alpha, a.trials, a.seed, a.samples)?;
    if let Some(p) = csv {
        write_csv(
            p,
            [BadsetRow {
                n: r.n,
                alpha: r.alpha,
                trials: r.trials,
                exceed_fraction: r.exceed_fraction,
                theory_exponent: r.theory_exponent,
            }],
        )?;
    }
    emit(out, &run.envelope(&r)?)
}
