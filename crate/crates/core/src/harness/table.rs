use super::EvalReport;
use crate::error::{Error, Result};

/// Policies by routes, mean reward per time step to four decimals.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub routes: Vec<String>,
    pub policies: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn to_text(&self) -> String {
        let cell = |v: &Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        let first = self
            .policies
            .iter()
            .map(|p| p.len())
            .chain(std::iter::once("policy".len()))
            .max()
            .unwrap_or(6);
        let widths: Vec<usize> = self
            .routes
            .iter()
            .enumerate()
            .map(|(j, r)| {
                self.cells
                    .iter()
                    .map(|row| cell(&row[j]).len())
                    .chain(std::iter::once(r.len()))
                    .max()
                    .unwrap()
            })
            .collect();
        let mut out = format!("{:<first$}", "policy");
        for (r, w) in self.routes.iter().zip(&widths) {
            out += &format!("  {r:>w$}");
        }
        out.push('\n');
        for (p, row) in self.policies.iter().zip(&self.cells) {
            out += &format!("{p:<first$}");
            for (v, w) in row.iter().zip(&widths) {
                out += &format!("  {:>w$}", cell(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["policy".to_string()];
        header.extend(self.routes.iter().cloned());
        w.write_record(&header)?;
        for (p, row) in self.policies.iter().zip(&self.cells) {
            let mut rec = vec![p.clone()];
            rec.extend(row.iter().map(|v| v.map(|x| format!("{x:.4}")).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::format("table", e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Groups reports into a policy x route table. Rows and columns keep the
/// order of first appearance; routes are labeled `world/route`.
pub fn emit_table(reports: &[EvalReport]) -> Result<Table> {
    if reports.is_empty() {
        return Err(Error::invalid("no reports to tabulate"));
    }
    let mut routes: Vec<String> = Vec::new();
    let mut policies: Vec<String> = Vec::new();
    for r in reports {
        let label = format!("{}/{}", r.world, r.route);
        if !routes.contains(&label) {
            routes.push(label);
        }
        if !policies.contains(&r.policy) {
            policies.push(r.policy.clone());
        }
    }
    let mut cells = vec![vec![None; routes.len()]; policies.len()];
    for r in reports {
        let label = format!("{}/{}", r.world, r.route);
        let i = policies.iter().position(|p| *p == r.policy).unwrap();
        let j = routes.iter().position(|x| *x == label).unwrap();
        cells[i][j] = Some(r.mean_reward);
    }
    Ok(Table {
        routes,
        policies,
        cells,
    })
}

/// Reads a table written by [`Table::to_csv`].
pub fn parse_table_csv(text: &str) -> Result<Table> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let routes: Vec<String> = rdr.headers()?.iter().skip(1).map(String::from).collect();
    let mut policies = Vec::new();
    let mut cells = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        policies.push(rec.get(0).unwrap_or_default().to_string());
        let row = rec
            .iter()
            .skip(1)
            .map(|v| {
                if v.is_empty() {
                    Ok(None)
                } else {
                    v.parse::<f64>()
                        .map(Some)
                        .map_err(|e| Error::format("table", e.to_string()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        cells.push(row);
    }
    Ok(Table {
        routes,
        policies,
        cells,
    })
}
