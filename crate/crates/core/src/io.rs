//! CSV and gnuplot writers. Values are printed with 17 significant digits,
//! `.` as decimal separator and LF line endings, so 64-bit values round
//! trip exactly.

use std::io::{self, Write};

use crate::analysis::{ConvergenceReport, ErrorRecord};
use crate::discretization::BlockTridiagonalSystem;
use crate::mesh::ShishkinMesh;
use crate::scalar::Scalar;
use crate::solver::DiscreteSolution;

/// Formats a value with 17 significant digits.
pub fn fmt_value<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}

fn fmt_opt<T: Scalar>(v: Option<T>) -> String {
    v.map(fmt_value).unwrap_or_default()
}

/// `j,x_j,spacing_left`; the spacing at `j = 0` is written as 0.
pub fn write_mesh_csv<T: Scalar, W: Write>(w: &mut W, mesh: &ShishkinMesh<T>) -> io::Result<()> {
    writeln!(w, "j,x_j,spacing_left")?;
    for (j, &x) in mesh.points.iter().enumerate() {
        let h = if j == 0 { T::zero() } else { mesh.spacing(j) };
        writeln!(w, "{j},{},{}", fmt_value(x), fmt_value(h))?;
    }
    Ok(())
}

/// `j,x,U_1,...,U_n`.
pub fn write_solution_csv<T: Scalar, W: Write>(
    w: &mut W,
    sol: &DiscreteSolution<T>,
) -> io::Result<()> {
    let n = sol.values.components();
    let cols: Vec<String> = (1..=n).map(|i| format!("U_{i}")).collect();
    writeln!(w, "j,x,{}", cols.join(","))?;
    for (j, (&x, row)) in sol.mesh.points.iter().zip(sol.values.rows()).enumerate() {
        let vals: Vec<String> = row.iter().map(|&v| fmt_value(v)).collect();
        writeln!(w, "{j},{},{}", fmt_value(x), vals.join(","))?;
    }
    Ok(())
}

/// `eps_id,N,error,order,effective_order,bound_constant`; undefined orders
/// are empty fields.
pub fn write_series_csv<T: Scalar, W: Write>(
    w: &mut W,
    report: &ConvergenceReport<T>,
) -> io::Result<()> {
    writeln!(w, "eps_id,N,error,order,effective_order,bound_constant")?;
    for s in &report.series {
        for r in &s.records {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                s.eps_id,
                r.n_intervals,
                fmt_value(r.error),
                fmt_opt(r.order),
                fmt_opt(r.effective_order),
                fmt_value(r.bound_constant)
            )?;
        }
    }
    Ok(())
}

/// `N,uniform_error,uniform_order`.
pub fn write_uniform_csv<T: Scalar, W: Write>(
    w: &mut W,
    report: &ConvergenceReport<T>,
) -> io::Result<()> {
    writeln!(w, "N,uniform_error,uniform_order")?;
    for r in &report.uniform {
        writeln!(
            w,
            "{},{},{}",
            r.n_intervals,
            fmt_value(r.error),
            fmt_opt(r.order)
        )?;
    }
    Ok(())
}

fn gnuplot_block<T: Scalar, W: Write>(w: &mut W, records: &[ErrorRecord<T>]) -> io::Result<()> {
    for r in records {
        let o = |v: Option<T>| v.map(fmt_value).unwrap_or_else(|| "NaN".into());
        writeln!(
            w,
            "{:>6} {} {} {} {}",
            r.n_intervals,
            fmt_value(r.error),
            o(r.order),
            o(r.effective_order),
            fmt_value(r.bound_constant)
        )?;
    }
    Ok(())
}

/// Whitespace table, one gnuplot `index` block per epsilon vector and a
/// final block for the uniform series.
pub fn write_gnuplot<T: Scalar, W: Write>(
    w: &mut W,
    report: &ConvergenceReport<T>,
) -> io::Result<()> {
    writeln!(w, "# problem {} mode {}", report.problem, report.mode)?;
    writeln!(w, "# columns: N error order effective_order bound_constant")?;
    for s in &report.series {
        let eps: Vec<String> = s
            .epsilon
            .iter()
            .map(|e| format!("{:e}", e.as_f64()))
            .collect();
        writeln!(w, "# eps_id {} eps ({})", s.eps_id, eps.join(","))?;
        gnuplot_block(w, &s.records)?;
        writeln!(w)?;
        writeln!(w)?;
    }
    writeln!(w, "# uniform")?;
    gnuplot_block(w, &report.uniform)
}

/// Every block entry as `j,block,row,col,value`, plus `rhs` rows with
/// `col` empty.
pub fn write_system_csv<T: Scalar, W: Write>(
    w: &mut W,
    sys: &BlockTridiagonalSystem<T>,
) -> io::Result<()> {
    writeln!(w, "j,block,row,col,value")?;
    for r in 0..sys.interior_rows() {
        let j = r + 1;
        for (name, blk) in [
            ("sub", &sys.sub[r]),
            ("diag", &sys.diag[r]),
            ("sup", &sys.sup[r]),
        ] {
            for i in 0..sys.n {
                for k in 0..sys.n {
                    writeln!(
                        w,
                        "{j},{name},{},{},{}",
                        i + 1,
                        k + 1,
                        fmt_value(blk[(i, k)])
                    )?;
                }
            }
        }
        for (i, &v) in sys.rhs[r].iter().enumerate() {
            writeln!(w, "{j},rhs,{},,{}", i + 1, fmt_value(v))?;
        }
    }
    Ok(())
}
