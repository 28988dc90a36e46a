//! Named models for the command line: an algebroid, optional Lagrangian and
//! Hamiltonian systems and an optional marching scheme.
//!
//! Recognised names: `standard:<n>`, `so3`, `wave`, `harmonic`, and the
//! file-backed `lie:`, `poisson:`, `sigma:`, `atiyah:`, `euler-poincare:`.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::ad::D1;
use crate::algebroid::{ClosureStructure, D1VecFn, LieAlgebroid, StructureTensor};
use crate::error::{check_len, Error, Result};
use crate::grid::Evolution;
use crate::hamiltonian::HamiltonianSystem;
use crate::lagrangian::LagrangianSystem;
use crate::legendre::{induced_hamiltonian, LegendreMap};
use crate::models::{self, Bivector};
use crate::poly::Polynomial;

#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub parameters: Value,
    pub algebroid: LieAlgebroid,
    pub lagrangian: Option<LagrangianSystem>,
    pub hamiltonian: Option<HamiltonianSystem>,
    pub evolution: Option<Evolution>,
}

impl Model {
    fn bare(name: &str, parameters: Value, alg: LieAlgebroid) -> Self {
        let k = 1;
        Model {
            name: name.to_string(),
            parameters,
            lagrangian: Some(models::free_lagrangian(&alg, k)),
            hamiltonian: Some(models::free_hamiltonian(&alg, k)),
            algebroid: alg,
            evolution: None,
        }
    }

    fn from_lagrangian(
        name: &str,
        parameters: Value,
        l: LagrangianSystem,
        evolution: Option<Evolution>,
    ) -> Self {
        Model {
            name: name.to_string(),
            parameters,
            algebroid: l.algebroid().clone(),
            hamiltonian: Some(induced_hamiltonian(&LegendreMap::new(l.clone()))),
            lagrangian: Some(l),
            evolution,
        }
    }

    pub fn require_lagrangian(&self) -> Result<&LagrangianSystem> {
        self.lagrangian
            .as_ref()
            .ok_or_else(|| Error::Invalid(format!("model {} has no Lagrangian", self.name)))
    }

    pub fn require_hamiltonian(&self) -> Result<&HamiltonianSystem> {
        self.hamiltonian
            .as_ref()
            .ok_or_else(|| Error::Invalid(format!("model {} has no Hamiltonian", self.name)))
    }
}

/// An algebroid chart in JSON.
#[derive(Clone, Debug, Deserialize)]
pub struct AlgebroidDescriptor {
    pub base_dim: usize,
    pub rank: usize,
    pub anchor: AnchorSpec,
    /// `structure[γ][α][β] = C^γ_{αβ}`.
    pub structure: Vec<Vec<Vec<Polynomial>>>,
    #[serde(default)]
    pub chart_label: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum AnchorSpec {
    /// `"builtin:identity"` or `"builtin:zero"`.
    Builtin(String),
    /// `anchor[i][α] = ρ^i_α`.
    Table(Vec<Vec<Polynomial>>),
}

fn flatten_structure(m: usize, s: &[Vec<Vec<Polynomial>>]) -> Result<Vec<Polynomial>> {
    check_len("structure functions", m, s.len())?;
    let mut out = Vec::with_capacity(m * m * m);
    for plane in s {
        check_len("structure functions", m, plane.len())?;
        for row in plane {
            check_len("structure functions", m, row.len())?;
            out.extend(row.iter().cloned());
        }
    }
    Ok(out)
}

fn check_arity(n: usize, polys: &[Polynomial]) -> Result<()> {
    match polys.iter().map(Polynomial::arity).max() {
        Some(a) if a > n => Err(Error::Invalid(format!(
            "descriptor uses variable {a} on a {n}-dimensional base"
        ))),
        _ => Ok(()),
    }
}

impl AlgebroidDescriptor {
    pub fn build(&self) -> Result<LieAlgebroid> {
        let (n, m) = (self.base_dim, self.rank);
        if m == 0 {
            return Err(Error::Invalid("rank must be positive".into()));
        }
        let anchor: Vec<Polynomial> = match &self.anchor {
            AnchorSpec::Builtin(s) if s == "builtin:zero" => vec![Polynomial::zero(); n * m],
            AnchorSpec::Builtin(s) if s == "builtin:identity" => {
                if n != m {
                    return Err(Error::Invalid(
                        "identity anchor needs rank = base_dim".into(),
                    ));
                }
                (0..n * m)
                    .map(|i| Polynomial::constant(if i / m == i % m { 1.0 } else { 0.0 }))
                    .collect()
            }
            AnchorSpec::Builtin(s) => return Err(Error::Invalid(format!("unknown anchor {s}"))),
            AnchorSpec::Table(rows) => {
                check_len("anchor rows", n, rows.len())?;
                for r in rows {
                    check_len("anchor columns", m, r.len())?;
                }
                rows.iter().flatten().cloned().collect()
            }
        };
        let structure = flatten_structure(m, &self.structure)?;
        check_arity(n, &anchor)?;
        check_arity(n, &structure)?;
        let eval = |polys: Vec<Polynomial>| -> Arc<D1VecFn> {
            Arc::new(move |q: &[D1]| polys.iter().map(|p| p.eval(q)).collect())
        };
        let alg = LieAlgebroid::new(ClosureStructure {
            base_dim: n,
            rank: m,
            anchor: eval(anchor),
            structure: eval(structure),
        });
        Ok(match &self.chart_label {
            Some(l) => alg.with_label(l.clone()),
            None => alg,
        })
    }
}

#[derive(Deserialize)]
struct SigmaDescriptor {
    bivector: Bivector,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GroupSpec {
    Named(String),
    Table(Vec<Vec<Vec<f64>>>),
}

impl GroupSpec {
    fn tensor(&self) -> Result<StructureTensor> {
        match self {
            GroupSpec::Named(s) if s == "so3" => Ok(StructureTensor::levi_civita()),
            GroupSpec::Named(s) => Err(Error::Invalid(format!("unknown group {s}"))),
            GroupSpec::Table(t) => {
                let m = t.len();
                let mut c = StructureTensor::zeros(m);
                for (g, plane) in t.iter().enumerate() {
                    check_len("structure constants", m, plane.len())?;
                    for (a, row) in plane.iter().enumerate() {
                        check_len("structure constants", m, row.len())?;
                        for (b, &v) in row.iter().enumerate() {
                            c.set(g, a, b, v);
                        }
                    }
                }
                Ok(c)
            }
        }
    }
}

#[derive(Deserialize)]
struct AtiyahDescriptor {
    base_dim: usize,
    group: GroupSpec,
    /// `connection[a][i] = A^a_i`.
    connection: Vec<Vec<Polynomial>>,
}

#[derive(Deserialize)]
struct EulerPoincareDescriptor {
    structure: GroupSpec,
    inertia: Vec<Vec<f64>>,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    signs: Option<Vec<f64>>,
}

fn read_json(path: &str) -> Result<Value> {
    let text = std::fs::read_to_string(Path::new(path))?;
    Ok(serde_json::from_str(&text)?)
}

fn parse<T: for<'de> Deserialize<'de>>(v: &Value) -> Result<T> {
    Ok(serde_json::from_value(v.clone())?)
}

fn matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    for r in rows {
        check_len("matrix row", n, r.len())?;
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Resolves a model name. File-backed models read their JSON descriptor.
pub fn load_model(spec: &str) -> Result<Model> {
    let (kind, arg) = match spec.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (spec, None),
    };
    let need_arg = || arg.ok_or_else(|| Error::Invalid(format!("model {kind} needs an argument")));
    match kind {
        "standard" => {
            let n: usize = need_arg()?
                .parse()
                .map_err(|_| Error::Invalid(format!("bad dimension in {spec}")))?;
            if n == 0 {
                return Err(Error::Invalid("standard algebroid needs n >= 1".into()));
            }
            Ok(Model::bare(
                spec,
                json!({ "n": n }),
                models::standard_algebroid(n),
            ))
        }
        "so3" => Ok(Model::bare(spec, json!({}), models::so3())),
        "wave" => Ok(Model::from_lagrangian(
            spec,
            json!({}),
            models::wave_lagrangian(),
            Some(Evolution::Wave),
        )),
        "harmonic" => Ok(Model::from_lagrangian(
            spec,
            json!({}),
            models::harmonic_map_lagrangian(),
            Some(Evolution::HarmonicMap),
        )),
        "lie" => {
            let v = read_json(need_arg()?)?;
            let alg = parse::<AlgebroidDescriptor>(&v)?.build()?;
            Ok(Model::bare(spec, v, alg))
        }
        "poisson" => {
            let v = read_json(need_arg()?)?;
            let sd: SigmaDescriptor = parse(&v)?;
            Ok(Model::bare(
                spec,
                v,
                models::poisson_cotangent_unchecked(sd.bivector)?,
            ))
        }
        "sigma" => {
            let v = read_json(need_arg()?)?;
            let sd: SigmaDescriptor = parse(&v)?;
            let evolution = sd.bivector.is_constant().then(|| Evolution::Sigma {
                lambda: sd.bivector.eval_matrix(&vec![0.0; sd.bivector.dim()]),
            });
            let l = models::poisson_sigma_lagrangian(sd.bivector)?;
            Ok(Model {
                name: spec.to_string(),
                parameters: v,
                algebroid: l.algebroid().clone(),
                lagrangian: Some(l),
                hamiltonian: None,
                evolution,
            })
        }
        "atiyah" => {
            let v = read_json(need_arg()?)?;
            let d: AtiyahDescriptor = parse(&v)?;
            let group = d.group.tensor()?;
            check_len("connection rows", group.rank, d.connection.len())?;
            for row in &d.connection {
                check_len("connection columns", d.base_dim, row.len())?;
            }
            let conn = d.connection.into_iter().flatten().collect();
            let alg = models::atiyah_trivial(d.base_dim, group, conn)?;
            Ok(Model::bare(spec, v, alg))
        }
        "euler-poincare" => {
            let v = read_json(need_arg()?)?;
            let d: EulerPoincareDescriptor = parse(&v)?;
            let group = d.structure.tensor()?;
            let inertia = matrix(&d.inertia)?;
            let signs = match (d.signs, d.k) {
                (Some(s), Some(k)) if s.len() != k => {
                    return Err(Error::Invalid("signs must have k entries".into()))
                }
                (Some(s), _) => s,
                (None, k) => vec![1.0; k.unwrap_or(1)],
            };
            let evolution = (signs.len() == 2).then(|| Evolution::EulerPoincare {
                algebra: group.clone(),
                inertia: inertia.clone(),
                signs: [signs[0], signs[1]],
            });
            let l = models::euler_poincare_signed(group, inertia, &signs)?;
            Ok(Model::from_lagrangian(spec, v, l, evolution))
        }
        _ => Err(Error::Invalid(format!("unknown model {spec}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names_resolve() {
        for name in ["standard:2", "so3", "wave", "harmonic"] {
            let m = load_model(name).unwrap();
            assert_eq!(m.name, name);
            assert!(m.lagrangian.is_some());
        }
        assert!(load_model("standard:0").is_err());
        assert!(load_model("nope").is_err());
    }

    #[test]
    fn descriptor_builds_so3() {
        let v = json!({
            "base_dim": 0,
            "rank": 3,
            "anchor": "builtin:zero",
            "structure": [
                [[0, 0, 0], [0, 0, 1], [0, -1, 0]],
                [[0, 0, -1], [0, 0, 0], [1, 0, 0]],
                [[0, 1, 0], [-1, 0, 0], [0, 0, 0]]
            ]
        });
        let alg = parse::<AlgebroidDescriptor>(&v).unwrap().build().unwrap();
        assert_eq!(alg.structure_at(&[]), StructureTensor::levi_civita());
    }

    #[test]
    fn polynomial_anchor_descriptor() {
        let v = json!({
            "base_dim": 2,
            "rank": 1,
            "anchor": [[[{"coeff": 2.0, "powers": [0, 1]}]], [1.0]],
            "structure": [[[0]]]
        });
        let alg = parse::<AlgebroidDescriptor>(&v).unwrap().build().unwrap();
        let rho = alg.anchor_at(&[0.5, 3.0]);
        assert_eq!((rho[(0, 0)], rho[(1, 0)]), (6.0, 1.0));
    }
}
