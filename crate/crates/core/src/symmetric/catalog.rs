//! The one-end almost homogeneous classification as data.
//!
//! Table rows (mixed type, bundles over flag manifolds) and the compactified
//! Morimoto-Nagano spaces are stored with their literal labels. Dimensions
//! that depend on the series index `n` are kept as linear formulas so that the
//! consistency checks can be evaluated for several `n`.

use std::fmt;
use std::io::Write;

use crate::error::Result;

pub const CATALOG_SCHEMA: &str = "malab-catalog/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CatalogFamily {
    Type1,
    MorimotoNagano,
    MixedType,
}

impl fmt::Display for CatalogFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CatalogFamily::Type1 => "Type1",
            CatalogFamily::MorimotoNagano => "MorimotoNagano",
            CatalogFamily::MixedType => "MixedType",
        })
    }
}

/// `per_n * n + constant`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Linear {
    pub per_n: i64,
    pub constant: i64,
}

impl Linear {
    pub const fn fixed(c: i64) -> Self {
        Linear { per_n: 0, constant: c }
    }

    pub const fn of_n(per_n: i64, constant: i64) -> Self {
        Linear { per_n, constant }
    }

    pub fn eval(&self, n: i64) -> i64 {
        self.per_n * n + self.constant
    }
}

impl fmt::Display for Linear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.per_n, self.constant) {
            (0, c) => write!(f, "{c}"),
            (a, 0) => write!(f, "{}n", coeff(a)),
            (a, c) if c > 0 => write!(f, "{}n+{c}", coeff(a)),
            (a, c) => write!(f, "{}n{c}", coeff(a)),
        }
    }
}

fn coeff(a: i64) -> String {
    if a == 1 {
        String::new()
    } else {
        a.to_string()
    }
}

/// Compact complex manifold appearing as a fibre or as a compactification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    Projective(Linear),
    Quadric(Linear),
    ProjectiveSquared(Linear),
    /// Grassmannian of `k`-planes in `C^m`.
    Grassmannian {
        k: i64,
        m: Linear,
    },
    CayleyPlane,
}

impl Space {
    /// Complex dimension as a function of the series index.
    pub fn complex_dim(&self, n: i64) -> i64 {
        match self {
            Space::Projective(s) | Space::Quadric(s) => s.eval(n),
            Space::ProjectiveSquared(s) => 2 * s.eval(n),
            Space::Grassmannian { k, m } => k * (m.eval(n) - k),
            Space::CayleyPlane => 16,
        }
    }

    pub fn is_quadric(&self) -> bool {
        matches!(self, Space::Quadric(_))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Space::Projective(_) => "projective",
            Space::Quadric(_) => "quadric",
            Space::ProjectiveSquared(_) => "projective-squared",
            Space::Grassmannian { .. } => "grassmannian",
            Space::CayleyPlane => "cayley-plane",
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Projective(s) => write!(f, "CP^{s}"),
            Space::Quadric(s) => write!(f, "Q^{s}"),
            Space::ProjectiveSquared(s) => write!(f, "CP^{s} x CP^{s}"),
            Space::Grassmannian { k, m } => write!(f, "Gr_{{{k},{m}}}(C)"),
            Space::CayleyPlane => f.write_str("EIII = E_6/SO_2.Spin_10"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub family: CatalogFamily,
    /// Row label (`I_1`, ..., `V_2`) or item letter (`a`, ..., `e`).
    pub source_row: &'static str,
    /// Flag manifold `G/G_Q` for bundle rows, the CROSS `G/K` for compactifications.
    pub base: &'static str,
    pub fiber: Space,
    /// `rho(G_Q)` for bundle rows; the invariance group as printed for compactifications.
    pub rho_image: &'static str,
    /// Complex dimension `s` of the fibre as listed.
    pub fiber_dim: Linear,
    /// Real dimension of the CROSS whose tangent bundle is compactified.
    pub cross_real_dim: Option<Linear>,
    pub note: Option<&'static str>,
}

impl CatalogEntry {
    /// Listed `s` agrees with the dimension of the listed fibre for `n` in `ns`.
    pub fn fiber_dim_consistent(&self, ns: &[i64]) -> bool {
        ns.iter().all(|&n| self.fiber.complex_dim(n) == self.fiber_dim.eval(n))
    }
}

fn mixed(row: &'static str, base: &'static str, fiber: Space, rho: &'static str, s: i64) -> CatalogEntry {
    CatalogEntry {
        family: CatalogFamily::MixedType,
        source_row: row,
        base,
        fiber,
        rho_image: rho,
        fiber_dim: Linear::fixed(s),
        cross_real_dim: None,
        note: None,
    }
}

fn compactification(
    item: &'static str,
    cross: &'static str,
    space: Space,
    group: &'static str,
    cross_dim: Linear,
    note: Option<&'static str>,
) -> CatalogEntry {
    let fiber_dim = match space {
        Space::Projective(s) | Space::Quadric(s) => s,
        Space::ProjectiveSquared(s) => Linear::of_n(2 * s.per_n, 2 * s.constant),
        Space::Grassmannian { k, m } => Linear::of_n(k * m.per_n, k * (m.constant - k)),
        Space::CayleyPlane => Linear::fixed(16),
    };
    CatalogEntry {
        family: CatalogFamily::MorimotoNagano,
        source_row: item,
        base: cross,
        fiber: space,
        rho_image: group,
        fiber_dim,
        cross_real_dim: Some(cross_dim),
        note,
    }
}

/// The eight bundle rows followed by the five compactified Morimoto-Nagano spaces.
pub fn catalog() -> Vec<CatalogEntry> {
    const GR2: &str = "SU_n/S(U_2 x U_{n-2})";
    const GR2_PAIR: &str = "(SU_p/S(U_2 x U_{p-2})) x (SU_q/S(U_2 x U_{q-2})), p+q > 4";
    const GR4: &str = "SU_n/S(U_4 x U_{n-4}), n > 4";
    const SO10: &str = "SO_10/SO_2 x SO_8";
    const E6: &str = "E_6/SO_2 x Spin_10";
    let n = Linear::of_n(1, 0);
    vec![
        mixed("I_1", GR2, Space::Projective(Linear::fixed(2)), "SO_3", 2),
        mixed("I_2", GR2, Space::Quadric(Linear::fixed(2)), "SO_3", 2),
        mixed("II", GR2_PAIR, Space::Projective(Linear::fixed(3)), "SO_4/Z_2", 3),
        mixed("III", GR4, Space::Projective(Linear::fixed(5)), "SO_6/Z_2", 5),
        mixed("IV_1", SO10, Space::Projective(Linear::fixed(7)), "SO_8/Z_2", 7),
        mixed("IV_2", SO10, Space::Quadric(Linear::fixed(7)), "SO_8", 7),
        mixed("V_1", E6, Space::Projective(Linear::fixed(9)), "SO_10/Z_2", 9),
        mixed("V_2", E6, Space::Quadric(Linear::fixed(9)), "SO_10", 9),
        compactification("a", "RP^n", Space::Projective(n), "SO_n", n, Some("suspected typo: SO_{n+1} acts on T RP^n")),
        compactification("b", "S^n", Space::Quadric(n), "SO_n", n, Some("suspected typo: SO_{n+1} acts on T S^n")),
        compactification(
            "c",
            "CP^n",
            Space::ProjectiveSquared(n),
            "SO_n",
            Linear::of_n(2, 0),
            Some("suspected typo: SU_{n+1} acts on T CP^n"),
        ),
        compactification(
            "d",
            "HP^n",
            Space::Grassmannian { k: 2, m: Linear::of_n(2, 0) },
            "Sp_n",
            Linear::of_n(4, 0),
            Some("suspected typo: dim_C Gr_{2,2n} = 4n-4 but dim_R HP^n = 4n; Gr_{2,2n+2} with Sp_{n+1} matches"),
        ),
        compactification("e", "OP^2", Space::CayleyPlane, "F_4", Linear::fixed(16), None),
    ]
}

/// A derived consistency statement over the catalog.
#[derive(Clone, Debug)]
pub struct CrossCheck {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

const SERIES_INDICES: [i64; 4] = [2, 3, 4, 5];

pub fn catalog_cross_checks(entries: &[CatalogEntry]) -> Vec<CrossCheck> {
    let mut checks = Vec::new();
    let count = |fam| entries.iter().filter(|e| e.family == fam).count();
    let rows = count(CatalogFamily::MixedType);
    let items = count(CatalogFamily::MorimotoNagano);
    checks.push(CrossCheck {
        name: "entry_counts".into(),
        holds: rows == 8 && items == 5,
        detail: format!("mixed={rows} mn={items}"),
    });

    let bad_dims: Vec<&str> =
        entries.iter().filter(|e| !e.fiber_dim_consistent(&SERIES_INDICES)).map(|e| e.source_row).collect();
    checks.push(CrossCheck {
        name: "fiber_dim_matches_fiber".into(),
        holds: bad_dims.is_empty(),
        detail: format!("inconsistent=[{}]", bad_dims.join(",")),
    });

    let mut s_values: Vec<i64> =
        entries.iter().filter(|e| e.family == CatalogFamily::MixedType).map(|e| e.fiber_dim.eval(0)).collect();
    s_values.sort_unstable();
    s_values.dedup();
    checks.push(CrossCheck {
        name: "mixed_fiber_dims".into(),
        holds: s_values == [2, 3, 5, 7, 9],
        detail: format!("s={s_values:?}"),
    });

    let no_quadric = rows_without_quadric_counterpart(entries);
    checks.push(CrossCheck {
        name: "no_quadric_counterpart".into(),
        holds: no_quadric == ["II", "III"],
        detail: format!("rows=[{}]", no_quadric.join(",")),
    });

    // Tangent bundle of a real m-manifold is a complex m-manifold, so a
    // compactification must have complex dimension dim_R of the CROSS.
    for e in entries.iter().filter(|e| e.family == CatalogFamily::MorimotoNagano) {
        let cross = e.cross_real_dim.expect("compactification carries CROSS dimension");
        let holds = SERIES_INDICES.iter().all(|&n| e.fiber_dim.eval(n) == cross.eval(n));
        checks.push(CrossCheck {
            name: format!("compactification_dim_{}", e.source_row),
            holds,
            detail: format!("dim_C {} = {}, dim_R {} = {}", e.fiber, e.fiber_dim, e.base, cross),
        });
    }
    checks
}

/// Mixed-type rows with a projective fibre and no quadric-fibre row over the same base.
pub fn rows_without_quadric_counterpart(entries: &[CatalogEntry]) -> Vec<&'static str> {
    let mixed: Vec<&CatalogEntry> = entries.iter().filter(|e| e.family == CatalogFamily::MixedType).collect();
    mixed
        .iter()
        .filter(|e| !e.fiber.is_quadric())
        .filter(|e| !mixed.iter().any(|o| o.base == e.base && o.fiber.is_quadric()))
        .map(|e| e.source_row)
        .collect()
}

/// Tab-separated export: a schema line, a header, one record per entry.
pub fn export_catalog<W: Write>(entries: &[CatalogEntry], out: &mut W) -> Result<()> {
    writeln!(out, "# schema = {CATALOG_SCHEMA}")?;
    writeln!(out, "family\tsource_row\tbase\tfiber\tfiber_kind\tfiber_dim\trho_image\tcross_real_dim\tnote")?;
    for e in entries {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            e.family,
            e.source_row,
            e.base,
            e.fiber,
            e.fiber.kind(),
            e.fiber_dim,
            e.rho_image,
            e.cross_real_dim.map(|d| d.to_string()).unwrap_or_else(|| "-".into()),
            e.note.unwrap_or("-"),
        )?;
    }
    Ok(())
}
