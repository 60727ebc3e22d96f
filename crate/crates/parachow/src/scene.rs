//! Scene files: a JSON description of a ring, optional blow-up, bundles in
//! several presentations, and nilpotent operators. All rationals are strings
//! (`"p/q"` or `"p"`); classes are dense per-degree coefficient arrays
//! aligned with the ring's bases; cell maps key on comma-joined indices.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::blowup::{blowup_surface, BlowupRing};
use crate::class::GradedClass;
use crate::error::{Error, Result};
use crate::formulas::JumpData;
use crate::linalg::QMatrix;
use crate::parabolic::{
    require_bundle_rank, ComponentTable, FiltrationData, SplitBundle, SplitPiece, SubsetMask,
};
use crate::rational::{parse_rational, Q};
use crate::ring::{BasisRef, RingPresentation};
use crate::window::{checked_cell_count, cube, BoxIter};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    format_version: u32,
    ring: RingStanza,
    #[serde(default)]
    blowup: Option<BlowupStanza>,
    #[serde(default)]
    bundles: BTreeMap<String, BundleStanza>,
    #[serde(default)]
    operators: BTreeMap<String, Vec<Vec<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RingStanza {
    ProjectiveSpace {
        dim: usize,
        #[serde(default)]
        divisors: Option<Vec<Vec<String>>>,
        #[serde(default)]
        name: Option<String>,
    },
    Surface {
        intersections: Vec<Vec<String>>,
        #[serde(default)]
        name: Option<String>,
    },
    Explicit {
        bases: Vec<Vec<String>>,
        #[serde(default)]
        products: Vec<ProductEntry>,
        divisors: Vec<Vec<String>>,
        #[serde(default)]
        point: Option<Vec<String>>,
        #[serde(default)]
        skip_validation: bool,
        #[serde(default)]
        name: Option<String>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductEntry {
    a: [usize; 2],
    b: [usize; 2],
    value: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlowupStanza {
    /// One center per entry: the 1-based designated divisors through it.
    centers: Vec<Vec<usize>>,
}

type ClassJson = Vec<Vec<String>>;

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum BundleStanza {
    Split {
        pieces: Vec<PieceStanza>,
        #[serde(default)]
        n: Option<i64>,
    },
    Table {
        n: i64,
        cells: BTreeMap<String, ClassJson>,
    },
    Filtration {
        n: i64,
        #[serde(rename = "chE")]
        ch_e: ClassJson,
        quotients: BTreeMap<String, BTreeMap<String, ClassJson>>,
        #[serde(default)]
        gradeds: Option<BTreeMap<String, BTreeMap<String, ClassJson>>>,
        #[serde(rename = "chH", default)]
        ch_h: Option<ClassJson>,
    },
    Jumps {
        breakpoints: Vec<Vec<String>>,
        cells: BTreeMap<String, ClassJson>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceStanza {
    rank: u32,
    twists: Vec<String>,
}

/// A bundle as loaded from a scene, in whichever presentation it was given.
#[derive(Debug, Clone)]
pub enum Bundle {
    Split { bundle: SplitBundle, n: i64 },
    Table(ComponentTable),
    Filtration {
        data: FiltrationData,
        ch_h: Option<GradedClass>,
    },
    Jumps(JumpData),
}

impl Bundle {
    pub fn kind(&self) -> &'static str {
        match self {
            Bundle::Split { .. } => "split",
            Bundle::Table(_) => "table",
            Bundle::Filtration { .. } => "filtration",
            Bundle::Jumps(_) => "jumps",
        }
    }
}

#[derive(Debug)]
pub struct Scene {
    pub base_ring: Arc<RingPresentation>,
    pub blowup: Option<BlowupRing>,
    pub bundles: BTreeMap<String, Bundle>,
    pub operators: BTreeMap<String, QMatrix>,
}

fn parse_q_vec(v: &[String]) -> Result<Vec<Q>> {
    v.iter().map(|s| parse_rational(s)).collect()
}

fn parse_class(ring: &Arc<RingPresentation>, json: &ClassJson) -> Result<GradedClass> {
    let coeffs = json
        .iter()
        .map(|row| parse_q_vec(row))
        .collect::<Result<Vec<_>>>()?;
    GradedClass::from_coeffs(ring, coeffs)
}

fn index_key(idx: &[i64]) -> String {
    idx.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Subset keys are comma-joined 1-based divisor indices in increasing order.
fn parse_subset_key(key: &str, m: usize) -> Result<SubsetMask> {
    let mut mask: SubsetMask = 0;
    let mut last = 0usize;
    for part in key.split(',') {
        let i: usize = part
            .trim()
            .parse()
            .map_err(|_| Error::validation(format!("bad subset key `{key}`")))?;
        if i < 1 || i > m {
            return Err(Error::validation(format!(
                "subset key `{key}` names divisor {i}, out of 1..={m}"
            )));
        }
        if i <= last {
            return Err(Error::validation(format!(
                "subset key `{key}` must strictly increase"
            )));
        }
        last = i;
        mask |= 1 << (i - 1);
    }
    if mask == 0 {
        return Err(Error::validation("empty subset key"));
    }
    Ok(mask)
}

fn build_ring(stanza: &RingStanza) -> Result<Arc<RingPresentation>> {
    match stanza {
        RingStanza::ProjectiveSpace { dim, divisors, name } => {
            let mut ring = RingPresentation::projective_space(*dim)?;
            if let Some(dv) = divisors {
                let parsed = dv
                    .iter()
                    .map(|v| parse_q_vec(v))
                    .collect::<Result<Vec<_>>>()?;
                ring = ring.with_divisors(parsed)?;
            }
            if let Some(n) = name {
                ring = ring.with_name(n.clone());
            }
            Ok(ring)
        }
        RingStanza::Surface { intersections, name } => {
            let parsed = intersections
                .iter()
                .map(|v| parse_q_vec(v))
                .collect::<Result<Vec<_>>>()?;
            let mut ring = RingPresentation::surface(&parsed)?;
            if let Some(n) = name {
                ring = ring.with_name(n.clone());
            }
            Ok(ring)
        }
        RingStanza::Explicit {
            bases,
            products,
            divisors,
            point,
            skip_validation,
            name,
        } => {
            let prods = products
                .iter()
                .map(|e| {
                    Ok((
                        (e.a[0], e.a[1]) as BasisRef,
                        (e.b[0], e.b[1]) as BasisRef,
                        parse_q_vec(&e.value)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let divs = divisors
                .iter()
                .map(|v| parse_q_vec(v))
                .collect::<Result<Vec<_>>>()?;
            let pt = point.as_ref().map(|v| parse_q_vec(v)).transpose()?;
            let ring = RingPresentation::explicit(
                name.clone().unwrap_or_else(|| "explicit".to_string()),
                bases.clone(),
                prods,
                divs,
                pt,
                !skip_validation,
            )?;
            Ok(ring)
        }
    }
}

fn build_bundle(
    ring: &Arc<RingPresentation>,
    base_ring: &Arc<RingPresentation>,
    stanza: &BundleStanza,
) -> Result<Bundle> {
    let m = ring.divisor_count();
    match stanza {
        BundleStanza::Split { pieces, n } => {
            let parsed = pieces
                .iter()
                .map(|p| {
                    Ok(SplitPiece {
                        rank: p.rank,
                        twists: parse_q_vec(&p.twists)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let bundle = SplitBundle::new(parsed)?;
            for p in &bundle.pieces {
                if p.twists.len() != m {
                    return Err(Error::validation(format!(
                        "split piece has {} twists but the ring designates {m} divisors",
                        p.twists.len()
                    )));
                }
            }
            let lcm = bundle.denominator()?;
            let n = n.unwrap_or(lcm);
            if n < 1 || n % lcm != 0 {
                return Err(Error::validation(format!(
                    "declared denominator {n} is not a multiple of the twist denominator {lcm}"
                )));
            }
            checked_cell_count(n, m)?;
            Ok(Bundle::Split { bundle, n })
        }
        BundleStanza::Table { n, cells } => {
            let count = checked_cell_count(*n, m)?;
            if cells.len() != count {
                return Err(Error::validation(format!(
                    "table needs {count} cells, got {}",
                    cells.len()
                )));
            }
            let mut dense = Vec::with_capacity(count);
            for idx in cube(*n, m) {
                let key = index_key(&idx);
                let json = cells.get(&key).ok_or_else(|| {
                    Error::validation(format!("table missing cell `{key}`"))
                })?;
                dense.push(parse_class(ring, json)?);
            }
            if let Some(first) = dense.first() {
                require_bundle_rank(first, "table cell")?;
            }
            Ok(Bundle::Table(ComponentTable::new(ring, *n, dense)?))
        }
        BundleStanza::Filtration {
            n,
            ch_e,
            quotients,
            gradeds,
            ch_h,
        } => {
            let ch_e = parse_class(ring, ch_e)?;
            require_bundle_rank(&ch_e, "chE")?;
            let parse_payload =
                |payload: &BTreeMap<String, BTreeMap<String, ClassJson>>,
                 lo: i64|
                 -> Result<BTreeMap<SubsetMask, Vec<GradedClass>>> {
                    let mut out = BTreeMap::new();
                    for (skey, levels) in payload {
                        let mask = parse_subset_key(skey, m)?;
                        let size = mask.count_ones() as usize;
                        let count = (*n as u128).pow(size as u32) as usize;
                        if levels.len() != count {
                            return Err(Error::validation(format!(
                                "subset `{skey}` needs {count} level entries, got {}",
                                levels.len()
                            )));
                        }
                        let mut dense = Vec::with_capacity(count);
                        for idx in BoxIter::new(vec![lo; size], vec![lo + n; size]) {
                            let key = index_key(&idx);
                            let json = levels.get(&key).ok_or_else(|| {
                                Error::validation(format!(
                                    "subset `{skey}` missing level `{key}`"
                                ))
                            })?;
                            dense.push(parse_class(ring, json)?);
                        }
                        out.insert(mask, dense);
                    }
                    Ok(out)
                };
            let quotients = parse_payload(quotients, -n)?;
            let gradeds = gradeds
                .as_ref()
                .map(|g| parse_payload(g, 1 - n))
                .transpose()?;
            let data = FiltrationData::new(ring, *n, ch_e, quotients, gradeds)?;
            let ch_h = ch_h
                .as_ref()
                .map(|c| parse_class(base_ring, c))
                .transpose()?;
            Ok(Bundle::Filtration { data, ch_h })
        }
        BundleStanza::Jumps { breakpoints, cells } => {
            if breakpoints.len() != m {
                return Err(Error::validation(format!(
                    "jumps need one breakpoint list per divisor ({m})"
                )));
            }
            let bps = breakpoints
                .iter()
                .map(|v| parse_q_vec(v))
                .collect::<Result<Vec<_>>>()?;
            let sizes: Vec<i64> = bps.iter().map(|b| b.len() as i64).collect();
            let count: usize = sizes.iter().map(|&s| s as usize).product();
            if cells.len() != count {
                return Err(Error::validation(format!(
                    "jump data needs {count} cells, got {}",
                    cells.len()
                )));
            }
            let mut dense = Vec::with_capacity(count);
            for idx in BoxIter::new(vec![0; m], sizes.clone()) {
                let key = index_key(&idx);
                let json = cells.get(&key).ok_or_else(|| {
                    Error::validation(format!("jumps missing cell `{key}`"))
                })?;
                dense.push(parse_class(ring, json)?);
            }
            if let Some(first) = dense.first() {
                require_bundle_rank(first, "jump cell")?;
            }
            Ok(Bundle::Jumps(JumpData::new(ring, bps, dense)?))
        }
    }
}

impl Scene {
    pub fn from_json_str(text: &str) -> Result<Scene> {
        let file: SceneFile = serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("scene: {e}")))?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::validation(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                file.format_version
            )));
        }
        let base_ring = build_ring(&file.ring)?;
        let blowup = file
            .blowup
            .as_ref()
            .map(|b| {
                let centers = b
                    .centers
                    .iter()
                    .map(|set| {
                        set.iter()
                            .map(|&i| {
                                if i < 1 {
                                    Err(Error::validation(
                                        "centers use 1-based divisor indices",
                                    ))
                                } else {
                                    Ok(i - 1)
                                }
                            })
                            .collect::<Result<Vec<usize>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                blowup_surface(&base_ring, &centers)
            })
            .transpose()?;
        let ring = blowup
            .as_ref()
            .map(|b| b.upstairs().clone())
            .unwrap_or_else(|| base_ring.clone());
        let mut bundles = BTreeMap::new();
        for (name, stanza) in &file.bundles {
            let b = build_bundle(&ring, &base_ring, stanza)
                .map_err(|e| prefix_error(e, &format!("bundle `{name}`")))?;
            bundles.insert(name.clone(), b);
        }
        let mut operators = BTreeMap::new();
        for (name, rows) in &file.operators {
            let parsed = rows
                .iter()
                .map(|r| parse_q_vec(r))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| prefix_error(e, &format!("operator `{name}`")))?;
            let mat = QMatrix::from_rows(parsed).ok_or_else(|| {
                Error::validation(format!("operator `{name}` must be rectangular"))
            })?;
            if mat.rows() != mat.cols() || mat.rows() == 0 {
                return Err(Error::validation(format!(
                    "operator `{name}` must be square and nonempty"
                )));
            }
            operators.insert(name.clone(), mat);
        }
        Ok(Scene {
            base_ring,
            blowup,
            bundles,
            operators,
        })
    }

    pub fn load(path: &Path) -> Result<Scene> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::parse(format!("cannot read {}: {e}", path.display())))?;
        Scene::from_json_str(&text)
    }

    /// The ring bundle payloads live on (the blow-up's, when present).
    pub fn effective_ring(&self) -> &Arc<RingPresentation> {
        self.blowup
            .as_ref()
            .map(|b| b.upstairs())
            .unwrap_or(&self.base_ring)
    }

    pub fn bundle(&self, name: &str) -> Result<&Bundle> {
        self.bundles
            .get(name)
            .ok_or_else(|| Error::not_found(format!("bundle `{name}`")))
    }

    pub fn operator(&self, name: &str) -> Result<&QMatrix> {
        self.operators
            .get(name)
            .ok_or_else(|| Error::not_found(format!("operator `{name}`")))
    }

    pub fn summary(&self) -> String {
        let ring = self.effective_ring();
        let mut s = format!(
            "ring {} (dim {}, {} divisors)",
            ring.name(),
            ring.dim(),
            ring.divisor_count()
        );
        if let Some(b) = &self.blowup {
            s.push_str(&format!(
                ", blow-up of {} at {} centers",
                b.base().name(),
                b.center_count()
            ));
        }
        s.push_str(&format!(
            "; {} bundles, {} operators",
            self.bundles.len(),
            self.operators.len()
        ));
        s
    }
}

fn prefix_error(e: Error, what: &str) -> Error {
    match e {
        Error::Parse(m) => Error::Parse(format!("{what}: {m}")),
        Error::Validation(m) => Error::Validation(format!("{what}: {m}")),
        Error::NotFound(m) => Error::NotFound(format!("{what}: {m}")),
        Error::Precondition(m) => Error::Precondition(format!("{what}: {m}")),
    }
}
