use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use treebolic::cantor::{
    bilipschitz_report, boundary_functor, ratio_within, round_trip_bounded, round_trip_exact, BoundaryMap,
};
use treebolic::criteria::{decide_embedding_existence, CommonBase, Verdict};
use treebolic::heights::LogHeight;
use treebolic::tree::{c1_embedding, c2_rough_isometry, coarse_surjectivity, distortion_report, TreeMap};
use treebolic::treebolic::{coarse_heightify_t, extend_to_t, horocyclic_extension, qi_certificate, BaseRay};

use crate::{check_budget, emit, to_json, CliResult, Failure, Params, Tuple};

const MAX_DEPTH: usize = 12;
const MAX_T_DEPTH: usize = 6;
const MAX_SAMPLES: usize = 100_000;

#[derive(Args)]
pub struct BuildArgs {
    #[command(flatten)]
    tuple: Tuple,
    /// Source truncation depth of the tree map.
    #[arg(long, default_value_t = 10)]
    depth: usize,
    /// Length of boundary words.
    #[arg(long, default_value_t = 6)]
    word_len: usize,
    /// Source depth used for the treebolic certificate.
    #[arg(long, default_value_t = 4)]
    t_depth: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Directory for the map serializations and the report.
    #[arg(short = 'o', long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct BoundaryArgs {
    /// P Q P' Q' of the construction to use; omit with --map.
    #[arg(num_args = 4, value_names = ["P", "Q", "P'", "Q'"], required_unless_present = "map")]
    values: Vec<String>,
    /// Saved tree map to read instead of building one.
    #[arg(long, conflicts_with = "values")]
    map: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    depth: usize,
    /// Length of source words.
    #[arg(long, default_value_t = 6)]
    len: usize,
    /// Length of image words; defaults to the stable length.
    #[arg(long)]
    dst_len: Option<usize>,
    /// Print the word map table instead of the JSON summary.
    #[arg(long)]
    table: bool,
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
pub struct CheckArgs {
    #[command(flatten)]
    tuple: Tuple,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
}

struct Construction {
    verdict: Verdict,
    certificate: Option<CommonBase>,
    /// `(a, b)` block exponents of the C1 construction
    exponents: Option<(u64, u64)>,
    map: TreeMap,
}

fn construct(t: &Params, depth: usize) -> CliResult<Construction> {
    check_budget("depth", depth, MAX_DEPTH)?;
    let d = decide_embedding_existence(t.p, &t.q, t.p_prime, &t.q_prime)?;
    match d.verdict {
        Verdict::EmbeddableC2 => Ok(Construction {
            verdict: d.verdict,
            certificate: d.certificate,
            exponents: None,
            map: c2_rough_isometry(t.p, &t.q, t.p_prime, &t.q_prime, depth)?,
        }),
        Verdict::EmbeddableC1 => {
            let e = c1_embedding(t.p, &t.q, t.p_prime, &t.q_prime, depth)?;
            Ok(Construction { verdict: d.verdict, certificate: None, exponents: Some((e.a, e.b)), map: e.map })
        }
        Verdict::NotEmbeddable => Err(Failure::BadInput("no embedding exists for this tuple (NotEmbeddable)".into())),
        Verdict::Undecided => {
            Err(Failure::Undecided(format!("undecided at {} bits of precision", d.ratio.precision_bits)))
        }
    }
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct BoundarySummary {
    src_len: usize,
    dst_len: usize,
    stable_len: usize,
    margin_ok: bool,
    bilipschitz: treebolic::cantor::BilipschitzReport,
    round_trip_exact: bool,
}

fn summarize(b: &BoundaryMap) -> CliResult<BoundarySummary> {
    Ok(BoundarySummary {
        src_len: b.map.src_len,
        dst_len: b.map.dst_len,
        stable_len: b.stable_len,
        margin_ok: b.margin_ok,
        bilipschitz: bilipschitz_report(&b.map),
        round_trip_exact: round_trip_exact(&b.map)?,
    })
}

#[derive(Serialize)]
struct ExtensionSummary {
    kappa: LogHeight,
    measured: LogHeight,
    stated_bound: LogHeight,
    bound: LogHeight,
    swapped_halves: bool,
    heightified: treebolic::treebolic::TMapReport,
}

fn certify(
    t: &Params,
    depth: usize,
    samples: usize,
    seed: u64,
) -> CliResult<(ExtensionSummary, treebolic::treebolic::QiCertificate)> {
    check_budget("treebolic depth", depth, MAX_T_DEPTH)?;
    check_budget("samples", samples, MAX_SAMPLES)?;
    let c = construct(t, depth)?;
    let ext = extend_to_t(&c.map)?;
    let ray = BaseRay::standard();
    let g = coarse_heightify_t(&ext.map, &ray, &ray)?;
    let cert = qi_certificate(&horocyclic_extension(&g, &ray, &ray), samples, seed);
    let summary = ExtensionSummary {
        kappa: ext.kappa,
        measured: ext.measured,
        stated_bound: ext.stated_bound,
        bound: ext.bound,
        swapped_halves: g.swapped_halves,
        heightified: g.report,
    };
    Ok((summary, cert))
}

pub fn build_verify(a: &BuildArgs) -> CliResult<()> {
    let t = a.tuple.params()?;
    if a.word_len > a.depth {
        return Err(Failure::BadInput(format!("word length {} exceeds depth {}", a.word_len, a.depth)));
    }
    let c = construct(&t, a.depth)?;
    let rep = distortion_report(&c.map);
    let surj = coarse_surjectivity(&c.map);
    let boundary = boundary_functor(&c.map, a.word_len, None)?;
    let bsum = summarize(&boundary)?;
    let rt = round_trip_bounded(&c.map, a.word_len)?;
    let (ext, cert) = certify(&t, a.t_depth, a.samples, a.seed)?;

    let lambda_ok = bsum
        .bilipschitz
        .lambda_upper
        .as_ref()
        .is_none_or(|l| ratio_within(l, &[(3, &rep.height_deviation), (1, &rep.additive_constant)]));
    let checks = vec![
        Check { name: "boundary_margin", passed: boundary.margin_ok, detail: format!("stable length {}", boundary.stable_len) },
        Check { name: "round_trip_exact", passed: bsum.round_trip_exact, detail: "boundary of the tree functor".into() },
        Check {
            name: "round_trip_bounded",
            passed: rt.violations == 0,
            detail: format!("{} of {} vertices over the bound", rt.violations, rt.vertices),
        },
        Check { name: "bilipschitz_bound", passed: lambda_ok, detail: "lambda_upper <= e^(3B+A)".into() },
        Check {
            name: "extension_bound",
            passed: ext.measured <= ext.bound,
            detail: format!("{} <= {}", ext.measured, ext.bound),
        },
        Check {
            name: "treebolic_certificate",
            passed: cert.passed(),
            detail: format!("{} violations in {} pairs", cert.witnesses.len(), cert.pairs_checked),
        },
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    let report = serde_json::json!({
        "p": t.p,
        "q": treebolic::seq::fmt_rational(&t.q),
        "p_prime": t.p_prime,
        "q_prime": treebolic::seq::fmt_rational(&t.q_prime),
        "verdict": c.verdict,
        "certificate": c.certificate,
        "exponents": c.exponents,
        "depth": a.depth,
        "seed": a.seed,
        "distortion": rep,
        "coarse_surjectivity": surj,
        "boundary": bsum,
        "round_trip": rt,
        "extension": ext,
        "treebolic_certificate": cert,
        "checks": checks,
        "passed": failed.is_empty(),
    });
    let json = to_json(&report);
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir)?;
        emit(Some(&dir.join("tree_map.txt")), &c.map.to_text())?;
        emit(Some(&dir.join("word_map.txt")), &boundary.map.to_text())?;
        emit(Some(&dir.join("report.json")), &json)?;
    }
    emit(None, &json)?;
    if !failed.is_empty() {
        return Err(Failure::Violation(format!("failed checks: {}", failed.join(", "))));
    }
    Ok(())
}

pub fn boundary(a: &BoundaryArgs) -> CliResult<()> {
    let map = match &a.map {
        Some(path) => TreeMap::from_text(&fs::read_to_string(path)?)?,
        None => construct(&crate::parse_tuple(&a.values)?, a.depth)?.map,
    };
    let b = boundary_functor(&map, a.len, a.dst_len)?;
    let text = if a.table { b.map.to_text() } else { to_json(&summarize(&b)?) };
    emit(a.output.as_ref(), &text)
}

pub fn treebolic_check(a: &CheckArgs) -> CliResult<()> {
    let t = a.tuple.params()?;
    let (ext, cert) = certify(&t, a.depth, a.samples, a.seed)?;
    let ok = cert.passed() && ext.measured <= ext.bound;
    emit(a.output.as_ref(), &to_json(&serde_json::json!({ "extension": ext, "certificate": cert })))?;
    if !ok {
        return Err(Failure::Violation("treebolic certificate failed".into()));
    }
    Ok(())
}
