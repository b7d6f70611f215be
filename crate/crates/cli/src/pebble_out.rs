use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use treebolic::pebble::{pebble_sequence, PebbleParams, PebbleTrace};
use treebolic::seq::{parse_branching_seq, parse_rational_seq};

use crate::{check_budget, emit, to_json, CliResult, Failure, Format};

const MAX_EVENTS: usize = 1_000_000;

#[derive(Args)]
pub struct PebbleArgs {
    /// Source branching sequence, `prefix;period` or a single value.
    #[arg(short = 'p')]
    p: String,
    /// Source edge bases.
    #[arg(short = 'q')]
    q: String,
    /// Target branching sequence.
    #[arg(short = 'P')]
    p_prime: String,
    /// Target edge bases.
    #[arg(short = 'Q')]
    q_prime: String,
    /// Number of events N; rows n = 0..N are written.
    #[arg(short = 'n', default_value_t = 1000)]
    events: usize,
    /// Starting pebble count.
    #[arg(long, default_value_t = 1)]
    initial: u64,
    /// Also write each height exactly as a product of powers.
    #[arg(long)]
    exact: bool,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct Row {
    n: usize,
    tag: &'static str,
    blue_index: Option<u64>,
    red_index: Option<u64>,
    height_float: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    height_exact: Option<String>,
    #[serde(rename = "X_n")]
    x: String,
}

fn rows(trace: &PebbleTrace, exact: bool) -> Vec<Row> {
    trace
        .values
        .iter()
        .enumerate()
        .map(|(n, x)| {
            let ev = &trace.events.events()[n];
            Row {
                n,
                tag: ev.tag.as_str(),
                blue_index: ev.blue_index,
                red_index: ev.red_index,
                height_float: trace.events.height_f64(n) + 0.0,
                height_exact: exact.then(|| trace.events.height_power_string(n)),
                x: x.to_string(),
            }
        })
        .collect()
}

fn opt(x: Option<u64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn run(a: &PebbleArgs) -> CliResult<()> {
    check_budget("events", a.events, MAX_EVENTS)?;
    if a.initial == 0 {
        return Err(Failure::BadInput("initial must be >= 1".into()));
    }
    let params = PebbleParams::new(
        parse_branching_seq(&a.p)?,
        parse_rational_seq(&a.q)?,
        parse_branching_seq(&a.p_prime)?,
        parse_rational_seq(&a.q_prime)?,
    )?
    .with_initial(a.initial.into())?;
    let trace = pebble_sequence(&params, a.events)?;
    let rows = rows(&trace, a.exact);
    let text = match a.format {
        Format::Csv => {
            let mut s = String::from("n,tag,blue_index,red_index,height_float,X_n");
            if a.exact {
                s.push_str(",height_exact");
            }
            s.push('\n');
            for r in &rows {
                write!(s, "{},{},{},{},{:.12},{}", r.n, r.tag, opt(r.blue_index), opt(r.red_index), r.height_float, r.x)
                    .unwrap();
                if let Some(h) = &r.height_exact {
                    write!(s, ",{h}").unwrap();
                }
                s.push('\n');
            }
            s
        }
        Format::Json => to_json(&serde_json::json!({
            "p": a.p,
            "q": a.q,
            "p_prime": a.p_prime,
            "q_prime": a.q_prime,
            "initial": a.initial,
            "events": a.events,
            "max": trace.max().to_string(),
            "rows": rows,
        })),
    };
    emit(a.output.as_ref(), &text)
}
