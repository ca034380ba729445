//! Document parsing and canonical serialization. Complex numbers are
//! two-element [re, im] arrays of IEEE-754 doubles; matrices are row-major
//! nested arrays in UTF-8 JSON. Canonical serialization sorts map keys and
//! category objects lexicographically, so fixtures re-serialize
//! byte-identically.

use crate::cat::{CatObject, CStarCategoryPresentation, StarOp};
use crate::greenjulg::{groupoid::Arrow, EquivariantBundle, FiniteGroupoid};
use crate::hereditary::{HereditaryKind, HereditaryStructure};
use crate::hilbert::{Generator, HilbertModule, ModuleElement, ModuleOperator};
use crate::numerics::{ComplexMatrix, TolerancePolicy};
use num_complex::Complex64;
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DocError {
    #[error("schema error at {path}: {what}")]
    Schema { path: String, what: String },
    #[error("invariant `{name}` violated: {what}")]
    Invariant { name: String, what: String },
    #[error("io error reading `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("document is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn schema(path: &str, what: impl Into<String>) -> DocError {
    DocError::Schema { path: path.to_string(), what: what.into() }
}

fn invariant(name: &str, what: impl std::fmt::Display) -> DocError {
    DocError::Invariant { name: name.to_string(), what: what.to_string() }
}

/// Cursor over a JSON value carrying its path for error messages.
#[derive(Clone, Copy)]
struct Cur<'a> {
    v: &'a Value,
    path: &'a str,
}

impl<'a> Cur<'a> {
    fn field(&self, name: &str, buf: &'a mut String) -> Result<Cur<'a>, DocError> {
        *buf = format!("{}.{}", self.path, name);
        match self.v.get(name) {
            Some(v) => Ok(Cur { v, path: buf.as_str() }),
            None => Err(schema(buf, "missing field")),
        }
    }

    fn opt(&self, name: &str) -> Option<&'a Value> {
        self.v.get(name)
    }

    fn array(&self) -> Result<&'a Vec<Value>, DocError> {
        self.v.as_array().ok_or_else(|| schema(self.path, "expected an array"))
    }

    fn object(&self) -> Result<&'a Map<String, Value>, DocError> {
        self.v.as_object().ok_or_else(|| schema(self.path, "expected an object"))
    }

    fn string(&self) -> Result<&'a str, DocError> {
        self.v.as_str().ok_or_else(|| schema(self.path, "expected a string"))
    }

    fn uint(&self) -> Result<u64, DocError> {
        self.v.as_u64().ok_or_else(|| schema(self.path, "expected a nonnegative integer"))
    }

    fn real(&self) -> Result<f64, DocError> {
        self.v.as_f64().ok_or_else(|| schema(self.path, "expected a number"))
    }

    fn boolean(&self) -> Result<bool, DocError> {
        self.v.as_bool().ok_or_else(|| schema(self.path, "expected a boolean"))
    }
}

fn parse_complex(v: &Value, path: &str) -> Result<Complex64, DocError> {
    let arr = v
        .as_array()
        .ok_or_else(|| schema(path, "expected [re, im]"))?;
    if arr.len() != 2 {
        return Err(schema(path, "complex numbers are two-element arrays"));
    }
    let re = arr[0].as_f64().ok_or_else(|| schema(path, "re must be a number"))?;
    let im = arr[1].as_f64().ok_or_else(|| schema(path, "im must be a number"))?;
    if !re.is_finite() || !im.is_finite() {
        return Err(schema(path, "entries must be finite"));
    }
    Ok(Complex64::new(re, im))
}

fn parse_matrix(v: &Value, path: &str) -> Result<ComplexMatrix, DocError> {
    let rows = v.as_array().ok_or_else(|| schema(path, "expected a matrix"))?;
    let mut data: Vec<Vec<Complex64>> = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| schema(&format!("{path}[{i}]"), "expected a row"))?;
        let mut out = Vec::with_capacity(row.len());
        for (j, z) in row.iter().enumerate() {
            out.push(parse_complex(z, &format!("{path}[{i}][{j}]"))?);
        }
        data.push(out);
    }
    if let Some(w) = data.first().map(|r| r.len()) {
        if data.iter().any(|r| r.len() != w) {
            return Err(schema(path, "ragged matrix rows"));
        }
    }
    Ok(ComplexMatrix::from_rows(&data))
}

fn complex_value(z: &Complex64) -> Value {
    json!([z.re, z.im])
}

fn matrix_value(m: &ComplexMatrix) -> Value {
    let rows: Vec<Value> = (0..m.rows())
        .map(|i| Value::Array((0..m.cols()).map(|j| complex_value(&m[(i, j)])).collect()))
        .collect();
    Value::Array(rows)
}

/// Resolver for string references inside documents: relative paths are
/// looked up against a base directory.
#[derive(Debug, Clone, Default)]
pub struct DocContext {
    pub dir: Option<PathBuf>,
}

impl DocContext {
    pub fn rooted(dir: impl AsRef<Path>) -> Self {
        DocContext { dir: Some(dir.as_ref().to_path_buf()) }
    }

    fn load(&self, reference: &str, path: &str) -> Result<Value, DocError> {
        let p = match &self.dir {
            Some(d) => d.join(reference),
            None => PathBuf::from(reference),
        };
        let bytes = std::fs::read(&p).map_err(|source| DocError::Io {
            path: p.display().to_string(),
            source,
        })?;
        serde_json::from_slice(&bytes).map_err(|e| schema(path, format!("in `{reference}`: {e}")))
    }

    fn deref<'a>(&self, v: &'a Value, path: &str) -> Result<Value, DocError> {
        match v {
            Value::String(s) => self.load(s, path),
            other => Ok(other.clone()),
        }
    }
}

/// Parse a category document into a presentation (adjoint involution).
pub fn parse_category(
    v: &Value,
    ctx: &DocContext,
    tol: &TolerancePolicy,
) -> Result<Arc<CStarCategoryPresentation>, DocError> {
    let v = ctx.deref(v, "$")?;
    let root = Cur { v: &v, path: "$" };
    let mut buf = String::new();
    let objs_cur = root.field("objects", &mut buf)?;
    let mut objects = Vec::new();
    for (i, o) in objs_cur.array()?.iter().enumerate() {
        let path = format!("$.objects[{i}]");
        let cur = Cur { v: o, path: &path };
        let mut b1 = String::new();
        let mut b2 = String::new();
        let name = cur.field("name", &mut b1)?.string()?.to_string();
        let dim = cur.field("dim", &mut b2)?.uint()? as usize;
        if dim == 0 {
            return Err(schema(&format!("{path}.dim"), "dim must be positive"));
        }
        objects.push(CatObject { name, dim });
    }
    let index = |name: &str, path: &str| -> Result<usize, DocError> {
        objects
            .iter()
            .position(|o| o.name == name)
            .ok_or_else(|| schema(path, format!("unknown object `{name}`")))
    };
    let mut buf2 = String::new();
    let homs_cur = root.field("homs", &mut buf2)?;
    let mut homs = BTreeMap::new();
    for (key, mats) in homs_cur.object()? {
        let path = format!("$.homs[\"{key}\"]");
        let (src, dst) = key
            .split_once("->")
            .ok_or_else(|| schema(&path, "keys look like \"X->Y\""))?;
        let x = index(src.trim(), &path)?;
        let y = index(dst.trim(), &path)?;
        let arr = mats
            .as_array()
            .ok_or_else(|| schema(&path, "expected a list of matrices"))?;
        let mut basis = Vec::with_capacity(arr.len());
        for (k, m) in arr.iter().enumerate() {
            basis.push(parse_matrix(m, &format!("{path}[{k}]"))?);
        }
        homs.insert((x, y), basis);
    }
    let mut buf3 = String::new();
    let unital = root.field("unital", &mut buf3)?.boolean()?;
    CStarCategoryPresentation::new(objects, homs, unital, StarOp::Adjoint, tol)
        .map(|c| c.into_shared())
        .map_err(|e| invariant("category", e))
}

/// Canonical category document: objects sorted lexicographically by name.
pub fn category_value(cat: &CStarCategoryPresentation) -> Value {
    let mut order: Vec<usize> = (0..cat.objects().len()).collect();
    order.sort_by(|&a, &b| cat.objects()[a].name.cmp(&cat.objects()[b].name));
    let objects: Vec<Value> = order
        .iter()
        .map(|&i| json!({"dim": cat.objects()[i].dim, "name": cat.objects()[i].name}))
        .collect();
    let mut homs = Map::new();
    for (x, y) in cat.hom_pairs() {
        let key = format!("{}->{}", cat.objects()[x].name, cat.objects()[y].name);
        let mats: Vec<Value> = cat.hom_basis(x, y).iter().map(matrix_value).collect();
        homs.insert(key, Value::Array(mats));
    }
    json!({"homs": Value::Object(homs), "objects": objects, "unital": cat.is_unital()})
}

/// Parse a module document: base (inline or ref), generators, block gram.
pub fn parse_module(
    v: &Value,
    ctx: &DocContext,
    tol: &TolerancePolicy,
) -> Result<Arc<HilbertModule>, DocError> {
    let v = ctx.deref(v, "$")?;
    let root = Cur { v: &v, path: "$" };
    let mut b0 = String::new();
    let base = parse_category(root.field("base", &mut b0)?.v, ctx, tol)?;
    let mut b1 = String::new();
    let gens_cur = root.field("generators", &mut b1)?;
    let mut generators = Vec::new();
    for (i, g) in gens_cur.array()?.iter().enumerate() {
        let path = format!("$.generators[{i}]");
        let cur = Cur { v: g, path: &path };
        let mut f1 = String::new();
        let mut f2 = String::new();
        let label = cur.field("label", &mut f1)?.string()?.to_string();
        let source_name = cur.field("source", &mut f2)?.string()?;
        let source = base
            .object_index(source_name)
            .map_err(|_| schema(&format!("{path}.source"), format!("unknown object `{source_name}`")))?;
        generators.push(Generator { label, source });
    }
    let mut b2 = String::new();
    let gram_cur = root.field("gram", &mut b2)?;
    let rows = gram_cur.array()?;
    let n = generators.len();
    if rows.len() != n {
        return Err(schema("$.gram", format!("expected {n} block rows")));
    }
    let mut blocks: Vec<Vec<ComplexMatrix>> = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        let path = format!("$.gram[{i}]");
        let row = row.as_array().ok_or_else(|| schema(&path, "expected a block row"))?;
        if row.len() != n {
            return Err(schema(&path, format!("expected {n} blocks")));
        }
        let mut out = Vec::with_capacity(n);
        for (j, m) in row.iter().enumerate() {
            out.push(parse_matrix(m, &format!("{path}[{j}]"))?);
        }
        blocks.push(out);
    }
    HilbertModule::build(base, generators, &blocks, tol).map_err(|e| invariant("module", e))
}

pub fn module_value(m: &HilbertModule) -> Value {
    let base = category_value(m.base());
    let generators: Vec<Value> = m
        .generators()
        .iter()
        .map(|g| json!({"label": g.label, "source": m.base().objects()[g.source].name}))
        .collect();
    let n = m.generators().len();
    let gram: Vec<Value> = (0..n)
        .map(|i| {
            Value::Array(
                (0..n)
                    .map(|j| {
                        let di = m.base().dim(m.generators()[i].source);
                        let dj = m.base().dim(m.generators()[j].source);
                        matrix_value(&m.gram().block(m.offsets()[i], m.offsets()[j], di, dj))
                    })
                    .collect(),
            )
        })
        .collect();
    json!({"base": base, "generators": generators, "gram": gram})
}

/// Parse an operator document against explicit domain/codomain modules.
pub fn parse_operator(
    v: &Value,
    ctx: &DocContext,
    tol: &TolerancePolicy,
) -> Result<ModuleOperator, DocError> {
    let v = ctx.deref(v, "$")?;
    let root = Cur { v: &v, path: "$" };
    let mut b0 = String::new();
    let domain = parse_module(root.field("domain", &mut b0)?.v, ctx, tol)?;
    let mut b1 = String::new();
    let codomain = parse_module(root.field("codomain", &mut b1)?.v, ctx, tol)?;
    let mut b2 = String::new();
    let images_cur = root.field("images", &mut b2)?;
    let mut images: Vec<ModuleElement> = Vec::new();
    for (i, e) in images_cur.array()?.iter().enumerate() {
        let path = format!("$.images[{i}]");
        let cur = Cur { v: e, path: &path };
        let mut f1 = String::new();
        let object_name = cur.field("object", &mut f1)?.string()?;
        let object = codomain
            .base()
            .object_index(object_name)
            .map_err(|_| schema(&format!("{path}.object"), format!("unknown object `{object_name}`")))?;
        let mut f2 = String::new();
        let coeff_cur = cur.field("coefficients", &mut f2)?;
        let mut coeffs = Vec::new();
        for (j, m) in coeff_cur.array()?.iter().enumerate() {
            coeffs.push(parse_matrix(m, &format!("{path}.coefficients[{j}]"))?);
        }
        images.push(
            codomain
                .element(object, coeffs)
                .map_err(|e| invariant("operator.image", e))?,
        );
    }
    crate::hilbert::make_operator(&domain, &codomain, &images, tol)
        .map_err(|e| invariant("operator", e))
}

pub fn operator_value(op: &ModuleOperator) -> Value {
    let images: Vec<Value> = (0..op.domain().generators().len())
        .map(|i| {
            let g = &op.domain().generators()[i];
            let img = op
                .apply(&op.domain().generator_element(i))
                .expect("generator image");
            let coeffs: Vec<Value> = img.coeffs.iter().map(matrix_value).collect();
            json!({
                "coefficients": coeffs,
                "object": op.domain().base().objects()[g.source].name,
            })
        })
        .collect();
    json!({
        "codomain": module_value(op.codomain()),
        "domain": module_value(op.domain()),
        "images": images,
    })
}

/// Parse a hereditary-structure document.
pub fn parse_hereditary(
    v: &Value,
    ctx: &DocContext,
    tol: &TolerancePolicy,
) -> Result<HereditaryStructure, DocError> {
    let v = ctx.deref(v, "$")?;
    let root = Cur { v: &v, path: "$" };
    let mut b0 = String::new();
    let kind = match root.field("kind", &mut b0)?.string()? {
        "cone" => HereditaryKind::Cone,
        "left_ideal" => HereditaryKind::LeftIdeal,
        "right_ideal" => HereditaryKind::RightIdeal,
        "hereditary_subalgebra" => HereditaryKind::Subalgebra,
        "hereditary_subcategory" => HereditaryKind::Subcategory,
        other => return Err(schema("$.kind", format!("unknown kind `{other}`"))),
    };
    let mut b1 = String::new();
    let ambient = parse_category(root.field("ambient", &mut b1)?.v, ctx, tol)?;
    let mut b2 = String::new();
    let projs_cur = root.field("projections", &mut b2)?;
    let mut projections: Vec<ComplexMatrix> = (0..ambient.objects().len())
        .map(|x| ComplexMatrix::zeros(ambient.dim(x), ambient.dim(x)))
        .collect();
    for (name, m) in projs_cur.object()? {
        let path = format!("$.projections[\"{name}\"]");
        let x = ambient
            .object_index(name)
            .map_err(|_| schema(&path, format!("unknown object `{name}`")))?;
        projections[x] = parse_matrix(m, &path)?;
    }
    HereditaryStructure::new(kind, ambient, projections, tol)
        .map_err(|e| invariant("hereditary", e))
}

pub fn hereditary_value(h: &HereditaryStructure) -> Value {
    let mut projections = Map::new();
    for (x, p) in h.projections.iter().enumerate() {
        if p.fro_norm() > 0.0 {
            projections.insert(h.ambient.objects()[x].name.clone(), matrix_value(p));
        }
    }
    json!({
        "ambient": category_value(&h.ambient),
        "kind": h.kind.as_str(),
        "projections": Value::Object(projections),
    })
}

/// Parse a groupoid document; identities are derived from the composition
/// table and checked.
pub fn parse_groupoid(v: &Value, ctx: &DocContext) -> Result<FiniteGroupoid, DocError> {
    let v = ctx.deref(v, "$")?;
    let root = Cur { v: &v, path: "$" };
    let mut b0 = String::new();
    let objects: Vec<String> = root
        .field("objects", &mut b0)?
        .array()?
        .iter()
        .enumerate()
        .map(|(i, o)| {
            o.as_str()
                .map(|s| s.to_string())
                .ok_or_else(|| schema(&format!("$.objects[{i}]"), "expected a string"))
        })
        .collect::<Result<_, _>>()?;
    let obj_index = |name: &str, path: &str| -> Result<usize, DocError> {
        objects
            .iter()
            .position(|o| o == name)
            .ok_or_else(|| schema(path, format!("unknown object `{name}`")))
    };
    let mut b1 = String::new();
    let arrows_cur = root.field("arrows", &mut b1)?;
    let mut arrows = Vec::new();
    for (i, a) in arrows_cur.array()?.iter().enumerate() {
        let path = format!("$.arrows[{i}]");
        let cur = Cur { v: a, path: &path };
        let mut f1 = String::new();
        let mut f2 = String::new();
        let mut f3 = String::new();
        let id = cur.field("id", &mut f1)?.string()?.to_string();
        let src = obj_index(cur.field("src", &mut f2)?.string()?, &format!("{path}.src"))?;
        let dst = obj_index(cur.field("dst", &mut f3)?.string()?, &format!("{path}.dst"))?;
        arrows.push(Arrow { id, src, dst });
    }
    let arr_index = |name: &str, path: &str| -> Result<usize, DocError> {
        arrows
            .iter()
            .position(|a| a.id == name)
            .ok_or_else(|| schema(path, format!("unknown arrow `{name}`")))
    };
    let n = arrows.len();
    let mut compose = vec![vec![None; n]; n];
    let mut b2 = String::new();
    for (key, val) in root.field("compose", &mut b2)?.object()? {
        let path = format!("$.compose[\"{key}\"]");
        let (g, h) = key
            .split_once('\u{2218}')
            .ok_or_else(|| schema(&path, "keys look like \"g\u{2218}h\""))?;
        let gi = arr_index(g.trim(), &path)?;
        let hi = arr_index(h.trim(), &path)?;
        let ki = arr_index(
            val.as_str().ok_or_else(|| schema(&path, "expected an arrow id"))?,
            &path,
        )?;
        compose[gi][hi] = Some(ki);
    }
    let mut inverse = vec![usize::MAX; n];
    let mut b3 = String::new();
    for (key, val) in root.field("inverse", &mut b3)?.object()? {
        let path = format!("$.inverse[\"{key}\"]");
        let gi = arr_index(key, &path)?;
        inverse[gi] = arr_index(
            val.as_str().ok_or_else(|| schema(&path, "expected an arrow id"))?,
            &path,
        )?;
    }
    if inverse.iter().any(|&i| i == usize::MAX) {
        return Err(schema("$.inverse", "every arrow needs an inverse"));
    }
    // Derive identities: e with src = dst = x acting neutrally.
    let mut identity = Vec::with_capacity(objects.len());
    for x in 0..objects.len() {
        let found = (0..n).find(|&e| {
            arrows[e].src == x
                && arrows[e].dst == x
                && (0..n).all(|g| {
                    (arrows[g].src != x || compose[g][e] == Some(g))
                        && (arrows[g].dst != x || compose[e][g] == Some(g))
                })
        });
        match found {
            Some(e) => identity.push(e),
            None => {
                return Err(invariant(
                    "groupoid",
                    format!("object `{}` has no identity arrow", objects[x]),
                ))
            }
        }
    }
    let g = FiniteGroupoid { objects, arrows, compose, identity, inverse };
    g.validate().map_err(|e| invariant("groupoid", e))?;
    Ok(g)
}

pub fn groupoid_value(g: &FiniteGroupoid) -> Value {
    let arrows: Vec<Value> = g
        .arrows
        .iter()
        .map(|a| json!({"dst": g.objects[a.dst], "id": a.id, "src": g.objects[a.src]}))
        .collect();
    let mut compose = Map::new();
    for (gi, row) in g.compose.iter().enumerate() {
        for (hi, k) in row.iter().enumerate() {
            if let Some(k) = k {
                compose.insert(
                    format!("{}\u{2218}{}", g.arrows[gi].id, g.arrows[hi].id),
                    Value::String(g.arrows[*k].id.clone()),
                );
            }
        }
    }
    let mut inverse = Map::new();
    for (gi, &inv) in g.inverse.iter().enumerate() {
        inverse.insert(g.arrows[gi].id.clone(), Value::String(g.arrows[inv].id.clone()));
    }
    json!({
        "arrows": arrows,
        "compose": Value::Object(compose),
        "inverse": Value::Object(inverse),
        "objects": g.objects,
    })
}

/// Parse a bundle document against its groupoid.
pub fn parse_bundle(
    v: &Value,
    ctx: &DocContext,
    tol: &TolerancePolicy,
) -> Result<(FiniteGroupoid, EquivariantBundle), DocError> {
    let v = ctx.deref(v, "$")?;
    let root = Cur { v: &v, path: "$" };
    let mut b0 = String::new();
    let groupoid = parse_groupoid(root.field("groupoid", &mut b0)?.v, ctx)?;
    let mut b1 = String::new();
    let fibers_cur = root.field("fibers", &mut b1)?;
    let mut fibers = vec![0usize; groupoid.objects.len()];
    for (name, dim) in fibers_cur.object()? {
        let path = format!("$.fibers[\"{name}\"]");
        let x = groupoid
            .objects
            .iter()
            .position(|o| o == name)
            .ok_or_else(|| schema(&path, format!("unknown object `{name}`")))?;
        fibers[x] = dim.as_u64().ok_or_else(|| schema(&path, "expected a dimension"))? as usize;
    }
    let mut b2 = String::new();
    let action_cur = root.field("action", &mut b2)?;
    let mut action: Vec<Option<ComplexMatrix>> = vec![None; groupoid.n_arrows()];
    for (id, m) in action_cur.object()? {
        let path = format!("$.action[\"{id}\"]");
        let g = groupoid
            .arrows
            .iter()
            .position(|a| &a.id == id)
            .ok_or_else(|| schema(&path, format!("unknown arrow `{id}`")))?;
        action[g] = Some(parse_matrix(m, &path)?);
    }
    let action: Vec<ComplexMatrix> = action
        .into_iter()
        .enumerate()
        .map(|(g, m)| {
            m.ok_or_else(|| {
                schema(
                    &format!("$.action[\"{}\"]", groupoid.arrows[g].id),
                    "missing action matrix",
                )
            })
        })
        .collect::<Result<_, _>>()?;
    let bundle = EquivariantBundle { fibers, action };
    bundle
        .validate(&groupoid, tol)
        .map_err(|e| invariant("bundle", e))?;
    Ok((groupoid, bundle))
}

pub fn bundle_value(g: &FiniteGroupoid, b: &EquivariantBundle) -> Value {
    let mut fibers = Map::new();
    for (x, &d) in b.fibers.iter().enumerate() {
        fibers.insert(g.objects[x].clone(), json!(d));
    }
    let mut action = Map::new();
    for (gi, m) in b.action.iter().enumerate() {
        action.insert(g.arrows[gi].id.clone(), matrix_value(m));
    }
    json!({
        "action": Value::Object(action),
        "fibers": Value::Object(fibers),
        "groupoid": groupoid_value(g),
    })
}

/// Canonical pretty serialization with a trailing newline; keys are emitted
/// in sorted order because every map above is built sorted.
pub fn to_canonical_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_round_trip_is_byte_identical() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("B", 1), ("A", 2)]);
        let v = category_value(&cat);
        let s1 = to_canonical_string(&v);
        let parsed = parse_category(&v, &DocContext::default(), &tol).unwrap();
        let s2 = to_canonical_string(&category_value(&parsed));
        assert_eq!(s1, s2);
    }

    #[test]
    fn missing_gram_reports_path() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 1)]);
        let v = json!({
            "base": category_value(&cat),
            "generators": [{"label": "x", "source": "A"}],
        });
        let err = parse_module(&v, &DocContext::default(), &tol).unwrap_err();
        match err {
            DocError::Schema { path, .. } => assert_eq!(path, "$.gram"),
            other => panic!("wrong error {other}"),
        }
    }

    #[test]
    fn non_psd_gram_is_an_invariant_violation() {
        let tol = TolerancePolicy::default();
        let cat = CStarCategoryPresentation::full_matrix(&[("A", 1)]);
        let v = json!({
            "base": category_value(&cat),
            "generators": [{"label": "x", "source": "A"}],
            "gram": [[ [[[-0.5, 0.0]]] ]],
        });
        let err = parse_module(&v, &DocContext::default(), &tol).unwrap_err();
        assert!(matches!(err, DocError::Invariant { .. }), "{err}");
    }

    #[test]
    fn groupoid_round_trip() {
        let tol = TolerancePolicy::default();
        let g = FiniteGroupoid::cyclic(3);
        let v = groupoid_value(&g);
        let parsed = parse_groupoid(&v, &DocContext::default()).unwrap();
        parsed.validate().unwrap();
        assert_eq!(to_canonical_string(&groupoid_value(&parsed)), to_canonical_string(&v));
        let b = EquivariantBundle::representable(&g, 0).unwrap();
        let bv = bundle_value(&g, &b);
        let (g2, b2) = parse_bundle(&bv, &DocContext::default(), &tol).unwrap();
        assert_eq!(g2.n_arrows(), 3);
        assert_eq!(b2.fibers, b.fibers);
    }

    #[test]
    fn module_and_operator_round_trip() {
        let tol = TolerancePolicy::default();
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let base = CStarCategoryPresentation::full_matrix(&[("A", 2)]).into_shared();
        let m = HilbertModule::random(base.clone(), &[0, 0], 3, &mut rng, &tol).unwrap();
        let v = module_value(&m);
        let s1 = to_canonical_string(&v);
        let parsed = parse_module(&v, &DocContext::default(), &tol).unwrap();
        assert_eq!(s1, to_canonical_string(&module_value(&parsed)));

        let id = crate::hilbert::operator::identity(&m, &tol).unwrap();
        let ov = operator_value(&id);
        let op = parse_operator(&ov, &DocContext::default(), &tol).unwrap();
        assert!((op.norm() - 1.0).abs() < 1e-9);
    }
}
