//! Self-describing binary container for fitted models and training
//! checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   8 bytes  b"RBMC0001"
//! len     u32      byte length of the JSON header
//! header  JSON     {"kind", "variant", "meta": {...},
//!                   "arrays": [{"name", "dtype", "len"}, ...]}
//! arrays  raw      each array's elements in declared order, packed LE
//! ```
//!
//! Supported dtypes are `f64`, `u64`, and `u32`. Floating-point payloads are
//! written bit-exactly, so a load/save cycle reproduces the file byte for
//! byte and a reloaded model scores identically.
//!
//! Item-item models (EASE, RP3beta, SLIM) score through the user's train
//! row, which is not part of the payload; reattach the train matrix when
//! loading them.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::mf::{MfParams, MfTrainerState};
use super::neumf::{AdamState, AdamTensor, NeuMfParams, NeuMfTrainerState};
use super::{
    DenseItemItemModel, FactorModel, MfModel, MostPopModel, NeuMfModel, PureSvdModel,
    SparseItemItemModel, TrainedModel,
};
use crate::data::SparseInteractionMatrix;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"RBMC0001";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    kind: String,
    variant: String,
    meta: serde_json::Value,
    arrays: Vec<ArrayInfo>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArrayInfo {
    name: String,
    dtype: String,
    len: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum ArrayData {
    F64(Vec<f64>),
    U64(Vec<u64>),
    U32(Vec<u32>),
}

#[derive(Debug, Clone)]
struct Container {
    kind: String,
    variant: String,
    meta: serde_json::Value,
    arrays: BTreeMap<String, ArrayData>,
    order: Vec<String>,
}

impl Container {
    fn new(kind: &str, variant: &str, meta: serde_json::Value) -> Self {
        Container {
            kind: kind.into(),
            variant: variant.into(),
            meta,
            arrays: BTreeMap::new(),
            order: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, data: ArrayData) {
        self.order.push(name.to_string());
        self.arrays.insert(name.to_string(), data);
    }

    fn f64s(&self, name: &str) -> Result<Vec<f64>> {
        match self.arrays.get(name) {
            Some(ArrayData::F64(v)) => Ok(v.clone()),
            _ => Err(Error::Container(format!("missing f64 array {name:?}"))),
        }
    }

    fn u64s(&self, name: &str) -> Result<Vec<u64>> {
        match self.arrays.get(name) {
            Some(ArrayData::U64(v)) => Ok(v.clone()),
            _ => Err(Error::Container(format!("missing u64 array {name:?}"))),
        }
    }

    fn u32s(&self, name: &str) -> Result<Vec<u32>> {
        match self.arrays.get(name) {
            Some(ArrayData::U32(v)) => Ok(v.clone()),
            _ => Err(Error::Container(format!("missing u32 array {name:?}"))),
        }
    }

    fn meta_field<T: serde::de::DeserializeOwned>(&self, field: &str) -> Result<T> {
        let value = self
            .meta
            .get(field)
            .ok_or_else(|| Error::Container(format!("missing meta field {field:?}")))?;
        serde_json::from_value(value.clone())
            .map_err(|e| Error::Container(format!("bad meta field {field:?}: {e}")))
    }

    fn write(&self, path: &Path) -> Result<()> {
        let display = path.display().to_string();
        let file = File::create(path).map_err(|e| Error::io(display.clone(), e))?;
        let mut w = BufWriter::new(file);
        let io_err = |e: std::io::Error| Error::io(display.clone(), e);
        let header = Header {
            kind: self.kind.clone(),
            variant: self.variant.clone(),
            meta: self.meta.clone(),
            arrays: self
                .order
                .iter()
                .map(|name| {
                    let (dtype, len) = match &self.arrays[name] {
                        ArrayData::F64(v) => ("f64", v.len()),
                        ArrayData::U64(v) => ("u64", v.len()),
                        ArrayData::U32(v) => ("u32", v.len()),
                    };
                    ArrayInfo {
                        name: name.clone(),
                        dtype: dtype.into(),
                        len,
                    }
                })
                .collect(),
        };
        let header_bytes =
            serde_json::to_vec(&header).map_err(|e| Error::Container(e.to_string()))?;
        w.write_all(MAGIC).map_err(io_err)?;
        w.write_all(&(header_bytes.len() as u32).to_le_bytes())
            .map_err(io_err)?;
        w.write_all(&header_bytes).map_err(io_err)?;
        for name in &self.order {
            match &self.arrays[name] {
                ArrayData::F64(v) => {
                    for x in v {
                        w.write_all(&x.to_le_bytes()).map_err(io_err)?;
                    }
                }
                ArrayData::U64(v) => {
                    for x in v {
                        w.write_all(&x.to_le_bytes()).map_err(io_err)?;
                    }
                }
                ArrayData::U32(v) => {
                    for x in v {
                        w.write_all(&x.to_le_bytes()).map_err(io_err)?;
                    }
                }
            }
        }
        w.flush().map_err(io_err)
    }

    fn read(path: &Path) -> Result<Container> {
        let display = path.display().to_string();
        let file = File::open(path).map_err(|e| Error::io(display.clone(), e))?;
        let mut r = BufReader::new(file);
        let io_err = |e: std::io::Error| Error::io(display.clone(), e);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io_err)?;
        if &magic != MAGIC {
            return Err(Error::Container(format!(
                "{display}: bad magic, not a model container"
            )));
        }
        let mut len_bytes = [0u8; 4];
        r.read_exact(&mut len_bytes).map_err(io_err)?;
        let mut header_bytes = vec![0u8; u32::from_le_bytes(len_bytes) as usize];
        r.read_exact(&mut header_bytes).map_err(io_err)?;
        let header: Header = serde_json::from_slice(&header_bytes)
            .map_err(|e| Error::Container(format!("{display}: bad header: {e}")))?;
        let mut container = Container::new(&header.kind, &header.variant, header.meta.clone());
        for info in &header.arrays {
            let data = match info.dtype.as_str() {
                "f64" => {
                    let mut buf = vec![0u8; info.len * 8];
                    r.read_exact(&mut buf).map_err(io_err)?;
                    ArrayData::F64(
                        buf.chunks_exact(8)
                            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                            .collect(),
                    )
                }
                "u64" => {
                    let mut buf = vec![0u8; info.len * 8];
                    r.read_exact(&mut buf).map_err(io_err)?;
                    ArrayData::U64(
                        buf.chunks_exact(8)
                            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                            .collect(),
                    )
                }
                "u32" => {
                    let mut buf = vec![0u8; info.len * 4];
                    r.read_exact(&mut buf).map_err(io_err)?;
                    ArrayData::U32(
                        buf.chunks_exact(4)
                            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                            .collect(),
                    )
                }
                other => {
                    return Err(Error::Container(format!(
                        "{display}: unknown dtype {other:?}"
                    )))
                }
            };
            container.push(&info.name, data);
        }
        Ok(container)
    }
}

/// Writes a fitted model to `path`.
pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    model_container(model)?.write(path.as_ref())
}

/// Reads a model container. Item-item models need the train matrix they
/// were fitted on to score; pass it here to reattach.
pub fn load_model(
    path: impl AsRef<Path>,
    train: Option<Arc<SparseInteractionMatrix>>,
) -> Result<TrainedModel> {
    let c = Container::read(path.as_ref())?;
    if c.kind != "model" {
        return Err(Error::Container(format!(
            "expected a model container, found kind {:?}",
            c.kind
        )));
    }
    let need_train = || {
        train.clone().ok_or_else(|| {
            Error::Container(format!(
                "variant {:?} scores through user histories; a train matrix is required",
                c.variant
            ))
        })
    };
    match c.variant.as_str() {
        "mostpop" => Ok(TrainedModel::MostPop(MostPopModel {
            counts: c.f64s("counts")?,
            num_users: c.meta_field("num_users")?,
        })),
        "ease" => Ok(TrainedModel::Ease(DenseItemItemModel {
            weights: c.f64s("weights")?,
            num_items: c.meta_field("num_items")?,
            train: need_train()?,
            l2: c.meta_field("l2")?,
        })),
        "rp3beta" | "slim" => {
            let model = SparseItemItemModel {
                col_offsets: c.u64s("col_offsets")?.iter().map(|&x| x as usize).collect(),
                sources: c.u32s("sources")?,
                weights: c.f64s("weights")?,
                num_items: c.meta_field("num_items")?,
                train: need_train()?,
                nonnegative: c.meta_field("nonnegative")?,
                unconverged_columns: c.u32s("unconverged_columns")?,
            };
            if c.variant == "slim" {
                Ok(TrainedModel::Slim(model))
            } else {
                Ok(TrainedModel::Rp3Beta(model))
            }
        }
        "puresvd" => Ok(TrainedModel::PureSvd(PureSvdModel {
            user_reps: c.f64s("user_reps")?,
            item_factors: c.f64s("item_factors")?,
            singular_values: c.f64s("singular_values")?,
            factors: c.meta_field("factors")?,
            num_users: c.meta_field("num_users")?,
            num_items: c.meta_field("num_items")?,
            rank_truncated: c.meta_field("rank_truncated")?,
        })),
        "ials" => Ok(TrainedModel::Ials(FactorModel {
            user_factors: c.f64s("user_factors")?,
            item_factors: c.f64s("item_factors")?,
            factors: c.meta_field("factors")?,
            num_users: c.meta_field("num_users")?,
            num_items: c.meta_field("num_items")?,
            objective_trace: c.f64s("objective_trace")?,
        })),
        "mf" => Ok(TrainedModel::Mf(MfModel {
            params: mf_params_from(&c, "")?,
            config: c.meta_field("config")?,
            trace: c.meta_field("trace")?,
        })),
        "neumf" => Ok(TrainedModel::NeuMf(NeuMfModel {
            params: neumf_params_from(&c, "")?,
            config: c.meta_field("config")?,
            trace: c.meta_field("trace")?,
        })),
        other => Err(Error::Container(format!("unknown variant {other:?}"))),
    }
}

fn model_container(model: &TrainedModel) -> Result<Container> {
    let mut c;
    match model {
        TrainedModel::MostPop(m) => {
            c = Container::new(
                "model",
                "mostpop",
                serde_json::json!({"num_users": m.num_users}),
            );
            c.push("counts", ArrayData::F64(m.counts.clone()));
        }
        TrainedModel::Ease(m) => {
            c = Container::new(
                "model",
                "ease",
                serde_json::json!({"num_items": m.num_items, "l2": m.l2}),
            );
            c.push("weights", ArrayData::F64(m.weights.clone()));
        }
        TrainedModel::Rp3Beta(m) | TrainedModel::Slim(m) => {
            let variant = model.variant();
            c = Container::new(
                "model",
                variant,
                serde_json::json!({"num_items": m.num_items, "nonnegative": m.nonnegative}),
            );
            c.push(
                "col_offsets",
                ArrayData::U64(m.col_offsets.iter().map(|&x| x as u64).collect()),
            );
            c.push("sources", ArrayData::U32(m.sources.clone()));
            c.push("weights", ArrayData::F64(m.weights.clone()));
            c.push(
                "unconverged_columns",
                ArrayData::U32(m.unconverged_columns.clone()),
            );
        }
        TrainedModel::PureSvd(m) => {
            c = Container::new(
                "model",
                "puresvd",
                serde_json::json!({
                    "factors": m.factors,
                    "num_users": m.num_users,
                    "num_items": m.num_items,
                    "rank_truncated": m.rank_truncated,
                }),
            );
            c.push("user_reps", ArrayData::F64(m.user_reps.clone()));
            c.push("item_factors", ArrayData::F64(m.item_factors.clone()));
            c.push("singular_values", ArrayData::F64(m.singular_values.clone()));
        }
        TrainedModel::Ials(m) => {
            c = Container::new(
                "model",
                "ials",
                serde_json::json!({
                    "factors": m.factors,
                    "num_users": m.num_users,
                    "num_items": m.num_items,
                }),
            );
            c.push("user_factors", ArrayData::F64(m.user_factors.clone()));
            c.push("item_factors", ArrayData::F64(m.item_factors.clone()));
            c.push("objective_trace", ArrayData::F64(m.objective_trace.clone()));
        }
        TrainedModel::Mf(m) => {
            c = Container::new(
                "model",
                "mf",
                serde_json::json!({
                    "config": m.config,
                    "trace": m.trace,
                    "dim": m.params.dim(),
                    "num_users": m.params.num_users(),
                    "num_items": m.params.num_items(),
                }),
            );
            push_mf_params(&mut c, "", &m.params);
        }
        TrainedModel::NeuMf(m) => {
            c = Container::new(
                "model",
                "neumf",
                serde_json::json!({
                    "config": m.config,
                    "trace": m.trace,
                    "factors": m.params.factors(),
                    "num_users": m.params.num_users(),
                    "num_items": m.params.num_items(),
                }),
            );
            push_neumf_params(&mut c, "", &m.params);
        }
    }
    Ok(c)
}

fn push_mf_params(c: &mut Container, prefix: &str, params: &MfParams) {
    c.push(
        &format!("{prefix}user_emb"),
        ArrayData::F64(params.user_emb.clone()),
    );
    c.push(
        &format!("{prefix}item_emb"),
        ArrayData::F64(params.item_emb.clone()),
    );
    c.push(
        &format!("{prefix}user_bias"),
        ArrayData::F64(params.user_bias.clone()),
    );
    c.push(
        &format!("{prefix}item_bias"),
        ArrayData::F64(params.item_bias.clone()),
    );
    c.push(
        &format!("{prefix}global_bias"),
        ArrayData::F64(vec![params.global_bias]),
    );
}

fn mf_params_from(c: &Container, prefix: &str) -> Result<MfParams> {
    let dim: usize = c.meta_field("dim")?;
    let num_users: usize = c.meta_field("num_users")?;
    let num_items: usize = c.meta_field("num_items")?;
    let mut params = MfParams::zeros(num_users, num_items, dim);
    params.user_emb = c.f64s(&format!("{prefix}user_emb"))?;
    params.item_emb = c.f64s(&format!("{prefix}item_emb"))?;
    params.user_bias = c.f64s(&format!("{prefix}user_bias"))?;
    params.item_bias = c.f64s(&format!("{prefix}item_bias"))?;
    params.global_bias = c.f64s(&format!("{prefix}global_bias"))?[0];
    if params.user_emb.len() != num_users * dim || params.item_emb.len() != num_items * dim {
        return Err(Error::Container("mf array shapes disagree with meta".into()));
    }
    Ok(params)
}

fn push_neumf_params(c: &mut Container, prefix: &str, params: &NeuMfParams) {
    for (name, data) in [
        ("gmf_user", &params.gmf_user),
        ("gmf_item", &params.gmf_item),
        ("mlp_user", &params.mlp_user),
        ("mlp_item", &params.mlp_item),
        ("w1", &params.w1),
        ("b1", &params.b1),
        ("w2", &params.w2),
        ("b2", &params.b2),
        ("output", &params.output),
    ] {
        c.push(&format!("{prefix}{name}"), ArrayData::F64(data.clone()));
    }
}

fn neumf_params_from(c: &Container, prefix: &str) -> Result<NeuMfParams> {
    let factors: usize = c.meta_field("factors")?;
    let num_users: usize = c.meta_field("num_users")?;
    let num_items: usize = c.meta_field("num_items")?;
    let mut params = NeuMfParams::zeros(num_users, num_items, factors);
    params.gmf_user = c.f64s(&format!("{prefix}gmf_user"))?;
    params.gmf_item = c.f64s(&format!("{prefix}gmf_item"))?;
    params.mlp_user = c.f64s(&format!("{prefix}mlp_user"))?;
    params.mlp_item = c.f64s(&format!("{prefix}mlp_item"))?;
    params.w1 = c.f64s(&format!("{prefix}w1"))?;
    params.b1 = c.f64s(&format!("{prefix}b1"))?;
    params.w2 = c.f64s(&format!("{prefix}w2"))?;
    params.b2 = c.f64s(&format!("{prefix}b2"))?;
    params.output = c.f64s(&format!("{prefix}output"))?;
    if params.gmf_user.len() != num_users * factors
        || params.output.len() != 2 * factors
    {
        return Err(Error::Container(
            "neumf array shapes disagree with meta".into(),
        ));
    }
    Ok(params)
}

/// Writes an MF training checkpoint.
pub fn save_mf_checkpoint(state: &MfTrainerState, path: impl AsRef<Path>) -> Result<()> {
    let mut c = Container::new(
        "checkpoint",
        "mf",
        serde_json::json!({
            "config": state.config,
            "trace": state.trace,
            "next_epoch": state.next_epoch,
            "dim": state.current.dim(),
            "num_users": state.current.num_users(),
            "num_items": state.current.num_items(),
        }),
    );
    push_mf_params(&mut c, "current.", &state.current);
    push_mf_params(&mut c, "best.", &state.best);
    c.write(path.as_ref())
}

/// Reads an MF training checkpoint.
pub fn load_mf_checkpoint(path: impl AsRef<Path>) -> Result<MfTrainerState> {
    let c = Container::read(path.as_ref())?;
    if c.kind != "checkpoint" || c.variant != "mf" {
        return Err(Error::Container(format!(
            "expected an mf checkpoint, found {}/{}",
            c.kind, c.variant
        )));
    }
    let current = mf_params_from(&c, "current.")?;
    let best = mf_params_from(&c, "best.")?;
    Ok(MfTrainerState {
        current,
        best,
        trace: c.meta_field("trace")?,
        config: c.meta_field("config")?,
        next_epoch: c.meta_field("next_epoch")?,
    })
}

/// Writes a NeuMF training checkpoint including the optimizer moments.
pub fn save_neumf_checkpoint(state: &NeuMfTrainerState, path: impl AsRef<Path>) -> Result<()> {
    let mut c = Container::new(
        "checkpoint",
        "neumf",
        serde_json::json!({
            "config": state.config,
            "trace": state.trace,
            "next_epoch": state.next_epoch,
            "factors": state.current.factors(),
            "num_users": state.current.num_users(),
            "num_items": state.current.num_items(),
            "adam_step": state.adam.step,
        }),
    );
    push_neumf_params(&mut c, "current.", &state.current);
    push_neumf_params(&mut c, "best.", &state.best);
    for (name, tensor) in adam_tensors(&state.adam) {
        c.push(&format!("adam.m.{name}"), ArrayData::F64(tensor.m.clone()));
        c.push(&format!("adam.v.{name}"), ArrayData::F64(tensor.v.clone()));
    }
    c.write(path.as_ref())
}

/// Reads a NeuMF training checkpoint.
pub fn load_neumf_checkpoint(path: impl AsRef<Path>) -> Result<NeuMfTrainerState> {
    let c = Container::read(path.as_ref())?;
    if c.kind != "checkpoint" || c.variant != "neumf" {
        return Err(Error::Container(format!(
            "expected a neumf checkpoint, found {}/{}",
            c.kind, c.variant
        )));
    }
    let current = neumf_params_from(&c, "current.")?;
    let best = neumf_params_from(&c, "best.")?;
    let mut adam = AdamState {
        gmf_user: AdamTensor::default(),
        gmf_item: AdamTensor::default(),
        mlp_user: AdamTensor::default(),
        mlp_item: AdamTensor::default(),
        w1: AdamTensor::default(),
        b1: AdamTensor::default(),
        w2: AdamTensor::default(),
        b2: AdamTensor::default(),
        output: AdamTensor::default(),
        step: c.meta_field("adam_step")?,
    };
    for (name, tensor) in adam_tensors_mut(&mut adam) {
        tensor.m = c.f64s(&format!("adam.m.{name}"))?;
        tensor.v = c.f64s(&format!("adam.v.{name}"))?;
    }
    Ok(NeuMfTrainerState {
        current,
        best,
        adam,
        trace: c.meta_field("trace")?,
        config: c.meta_field("config")?,
        next_epoch: c.meta_field("next_epoch")?,
    })
}

fn adam_tensors(adam: &AdamState) -> Vec<(&'static str, &AdamTensor)> {
    vec![
        ("gmf_user", &adam.gmf_user),
        ("gmf_item", &adam.gmf_item),
        ("mlp_user", &adam.mlp_user),
        ("mlp_item", &adam.mlp_item),
        ("w1", &adam.w1),
        ("b1", &adam.b1),
        ("w2", &adam.w2),
        ("b2", &adam.b2),
        ("output", &adam.output),
    ]
}

fn adam_tensors_mut(adam: &mut AdamState) -> Vec<(&'static str, &mut AdamTensor)> {
    vec![
        ("gmf_user", &mut adam.gmf_user),
        ("gmf_item", &mut adam.gmf_item),
        ("mlp_user", &mut adam.mlp_user),
        ("mlp_item", &mut adam.mlp_item),
        ("w1", &mut adam.w1),
        ("b1", &mut adam.b1),
        ("w2", &mut adam.w2),
        ("b2", &mut adam.b2),
        ("output", &mut adam.output),
    ]
}
