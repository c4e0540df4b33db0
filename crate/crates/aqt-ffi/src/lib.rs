//! C ABI over the reconstruction library.
//!
//! Conventions: every function returns an [`AqtStatus`]; results come back
//! through out-pointers. Objects are opaque handles created and destroyed
//! by the matching `*_new`/`*_free` pairs; passing a handle to a free
//! function ends its lifetime. On any non-OK status the thread-local error
//! message is readable via [`aqt_last_error`].

use aqt_core::error::AqtError;
use aqt_core::fidelity;
use aqt_core::model::{
    load_checkpoint, save_checkpoint, train, TrainError, TrainOptions, TransformerConfig,
    TransformerModel,
};
use aqt_core::povm::{self, OutcomeDataset, PovmFrame};
use aqt_core::reconstruct::{
    linear_inversion, mle_reconstruct, off_corner_fraction, physical_fit_from_model,
    reconstruct_from_model, DensityMatrix, MleOptions,
};
use aqt_core::states::ProductOperatorEnsemble;
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

/// Status codes shared by every binding; aligned with the CLI exit codes
/// (2 validation, 3 capacity, 4 numeric) plus binding-specific values.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AqtStatus {
    Ok = 0,
    /// Invalid arguments, shapes, domains or file contents.
    Validation = 2,
    /// A size cap would be exceeded.
    Capacity = 3,
    /// A numeric routine failed.
    Numeric = 4,
    /// File input/output failed.
    Io = 5,
    /// A required pointer was null.
    NullPointer = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &AqtError) -> AqtStatus {
    match err {
        AqtError::Capacity(_) => AqtStatus::Capacity,
        AqtError::Numeric(_) => AqtStatus::Numeric,
        AqtError::Io(_) => AqtStatus::Io,
        _ => AqtStatus::Validation,
    }
}

fn fail(err: AqtError) -> AqtStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Copies the last error message (UTF-8, NUL-terminated, truncated to fit)
/// into `buf` and returns the full message length in bytes.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be null (then only the
/// length is returned).
#[no_mangle]
pub unsafe extern "C" fn aqt_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

macro_rules! check_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            set_error(concat!("null pointer: ", stringify!($p)));
            return AqtStatus::NullPointer;
        })+
    };
}

/// Runs `f`, converting panics and errors into statuses.
fn guarded(f: impl FnOnce() -> Result<AqtStatus, AqtError>) -> AqtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(e)) => fail(e),
        Err(_) => {
            set_error("internal panic");
            AqtStatus::Numeric
        }
    }
}

unsafe fn path_from(ptr: *const c_char) -> Result<PathBuf, AqtError> {
    let s = CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| AqtError::Validation("path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn outcome_from(symbols: *const u8, len: usize) -> Vec<u8> {
    std::slice::from_raw_parts(symbols, len).to_vec()
}

/// Opaque target state (GHZ or faulty-qubit mixture).
pub struct AqtState(ProductOperatorEnsemble);
/// Opaque single-qubit POVM frame.
pub struct AqtFrame(PovmFrame);
/// Opaque collection of measurement outcomes.
pub struct AqtDataset(OutcomeDataset);
/// Opaque autoregressive model.
pub struct AqtModel(TransformerModel);
/// Opaque dense density matrix.
pub struct AqtDensityMatrix(DensityMatrix);

macro_rules! free_fn {
    ($name:ident, $ty:ty) => {
        /// Releases the handle; null is ignored.
        ///
        /// # Safety
        /// `h` must be a live handle from this library or null.
        #[no_mangle]
        pub unsafe extern "C" fn $name(h: *mut $ty) {
            if !h.is_null() {
                drop(Box::from_raw(h));
            }
        }
    };
}

free_fn!(aqt_state_free, AqtState);
free_fn!(aqt_frame_free, AqtFrame);
free_fn!(aqt_dataset_free, AqtDataset);
free_fn!(aqt_model_free, AqtModel);
free_fn!(aqt_dm_free, AqtDensityMatrix);

/// Creates the n-qubit GHZ state.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aqt_state_ghz(n_qubits: usize, out: *mut *mut AqtState) -> AqtStatus {
    check_null!(out);
    guarded(|| {
        let state = aqt_core::states::ghz(n_qubits)?;
        *out = Box::into_raw(Box::new(AqtState(state)));
        Ok(AqtStatus::Ok)
    })
}

/// Creates the 3-qubit faulty-qubit mixture with error rate `p`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aqt_state_faulty(p: f64, out: *mut *mut AqtState) -> AqtStatus {
    check_null!(out);
    guarded(|| {
        let state = aqt_core::states::faulty_qubit_state(p)?;
        *out = Box::into_raw(Box::new(AqtState(state)));
        Ok(AqtStatus::Ok)
    })
}

/// Creates the Pauli-4 POVM frame.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aqt_frame_pauli4(out: *mut *mut AqtFrame) -> AqtStatus {
    check_null!(out);
    guarded(|| {
        *out = Box::into_raw(Box::new(AqtFrame(povm::pauli4_frame())));
        Ok(AqtStatus::Ok)
    })
}

/// Exact outcome probability of a full measurement string.
///
/// # Safety
/// All pointers must be valid; `symbols` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn aqt_outcome_prob(
    state: *const AqtState,
    frame: *const AqtFrame,
    symbols: *const u8,
    len: usize,
    out: *mut f64,
) -> AqtStatus {
    check_null!(state, frame, symbols, out);
    guarded(|| {
        let a = outcome_from(symbols, len);
        *out = povm::outcome_prob(&(*state).0, &(*frame).0, &a)?;
        Ok(AqtStatus::Ok)
    })
}

/// Draws `n_samples` i.i.d. outcomes from the state's exact distribution.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_sample(
    state: *const AqtState,
    frame: *const AqtFrame,
    n_samples: usize,
    seed: u64,
    out: *mut *mut AqtDataset,
) -> AqtStatus {
    check_null!(state, frame, out);
    guarded(|| {
        let data = povm::sample(&(*state).0, &(*frame).0, n_samples, seed)?;
        *out = Box::into_raw(Box::new(AqtDataset(data)));
        Ok(AqtStatus::Ok)
    })
}

/// Reads a dataset file in the aqt-dataset v1 format.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_dataset_load(
    path: *const c_char,
    out: *mut *mut AqtDataset,
) -> AqtStatus {
    check_null!(path, out);
    guarded(|| {
        let data = OutcomeDataset::load(&path_from(path)?)?;
        *out = Box::into_raw(Box::new(AqtDataset(data)));
        Ok(AqtStatus::Ok)
    })
}

/// Writes the dataset in the aqt-dataset v1 format.
///
/// # Safety
/// `dataset` must be live; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn aqt_dataset_save(
    dataset: *const AqtDataset,
    path: *const c_char,
) -> AqtStatus {
    check_null!(dataset, path);
    guarded(|| {
        (*dataset).0.save(&path_from(path)?)?;
        Ok(AqtStatus::Ok)
    })
}

/// Number of outcome strings.
///
/// # Safety
/// `dataset` must be live.
#[no_mangle]
pub unsafe extern "C" fn aqt_dataset_len(dataset: *const AqtDataset) -> usize {
    if dataset.is_null() {
        return 0;
    }
    (*dataset).0.len()
}

/// Qubits per outcome string.
///
/// # Safety
/// `dataset` must be live.
#[no_mangle]
pub unsafe extern "C" fn aqt_dataset_n_qubits(dataset: *const AqtDataset) -> usize {
    if dataset.is_null() {
        return 0;
    }
    (*dataset).0.n_qubits
}

/// Copies outcome `index` (symbols 0..=3, one byte per qubit) into `buf`.
///
/// # Safety
/// `buf` must hold at least `aqt_dataset_n_qubits` bytes.
#[no_mangle]
pub unsafe extern "C" fn aqt_dataset_outcome(
    dataset: *const AqtDataset,
    index: usize,
    buf: *mut u8,
) -> AqtStatus {
    check_null!(dataset, buf);
    guarded(|| {
        let data = &(*dataset).0;
        let a = data
            .outcomes
            .get(index)
            .ok_or_else(|| AqtError::Validation(format!("outcome index {index} out of range")))?;
        std::ptr::copy_nonoverlapping(a.as_ptr(), buf, a.len());
        Ok(AqtStatus::Ok)
    })
}

/// Training settings; mirror of the library defaults via
/// [`aqt_train_options_default`].
#[repr(C)]
#[derive(Clone, Copy)]
pub struct AqtTrainOptions {
    pub learning_rate: f64,
    pub batch_size: u64,
    pub epochs: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// 0 = keep dataset order, 1 = shuffle every epoch.
    pub shuffle: u8,
    pub heldout_fraction: f64,
    pub patience: u64,
    pub lr_decay: f64,
}

impl AqtTrainOptions {
    fn to_options(self) -> TrainOptions {
        TrainOptions {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size as usize,
            epochs: self.epochs as usize,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            seed: self.seed,
            shuffle: self.shuffle != 0,
            heldout_fraction: self.heldout_fraction,
            patience: self.patience as usize,
            lr_decay: self.lr_decay,
        }
    }
}

/// Fills `out` with the default training options.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aqt_train_options_default(out: *mut AqtTrainOptions) -> AqtStatus {
    check_null!(out);
    let d = TrainOptions::default();
    *out = AqtTrainOptions {
        learning_rate: d.learning_rate,
        batch_size: d.batch_size as u64,
        epochs: d.epochs as u64,
        beta1: d.beta1,
        beta2: d.beta2,
        epsilon: d.epsilon,
        seed: d.seed,
        shuffle: d.shuffle as u8,
        heldout_fraction: d.heldout_fraction,
        patience: d.patience as u64,
        lr_decay: d.lr_decay,
    };
    AqtStatus::Ok
}

/// Initializes a fresh desk-scale model (2 layers, 64-dim embedding).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aqt_model_init_desk(
    n_qubits: usize,
    seed: u64,
    out: *mut *mut AqtModel,
) -> AqtStatus {
    check_null!(out);
    guarded(|| {
        let model = TransformerModel::init(TransformerConfig::desk(n_qubits, seed))?;
        *out = Box::into_raw(Box::new(AqtModel(model)));
        Ok(AqtStatus::Ok)
    })
}

/// Trains a copy of `model` on `dataset`; returns the trained model.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_train(
    model: *const AqtModel,
    dataset: *const AqtDataset,
    options: *const AqtTrainOptions,
    out: *mut *mut AqtModel,
) -> AqtStatus {
    check_null!(model, dataset, options, out);
    guarded(|| {
        let opts = (*options).to_options();
        match train((*model).0.clone(), &(*dataset).0, &opts) {
            Ok(output) => {
                *out = Box::into_raw(Box::new(AqtModel(output.model)));
                Ok(AqtStatus::Ok)
            }
            Err(e) => match *e {
                TrainError::Invalid(err) => Err(err),
                TrainError::Numeric { message, .. } => Err(AqtError::Numeric(message)),
            },
        }
    })
}

/// Loads a checkpoint file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_model_load(
    path: *const c_char,
    out: *mut *mut AqtModel,
) -> AqtStatus {
    check_null!(path, out);
    guarded(|| {
        let (model, _) = load_checkpoint(&path_from(path)?)?;
        *out = Box::into_raw(Box::new(AqtModel(model)));
        Ok(AqtStatus::Ok)
    })
}

/// Saves a checkpoint file.
///
/// # Safety
/// `model` must be live; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn aqt_model_save(
    model: *const AqtModel,
    path: *const c_char,
) -> AqtStatus {
    check_null!(model, path);
    guarded(|| {
        save_checkpoint(&(*model).0, None, &path_from(path)?)?;
        Ok(AqtStatus::Ok)
    })
}

/// Sequence length (qubit count) of the model.
///
/// # Safety
/// `model` must be live.
#[no_mangle]
pub unsafe extern "C" fn aqt_model_n_qubits(model: *const AqtModel) -> usize {
    if model.is_null() {
        return 0;
    }
    (*model).0.n_qubits()
}

/// Exact `ln p(a)` of a full outcome string under the model.
///
/// # Safety
/// All pointers must be valid; `symbols` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn aqt_model_log_prob(
    model: *const AqtModel,
    symbols: *const u8,
    len: usize,
    out: *mut f64,
) -> AqtStatus {
    check_null!(model, symbols, out);
    guarded(|| {
        let a = outcome_from(symbols, len);
        *out = (*model).0.log_prob(&a)?;
        Ok(AqtStatus::Ok)
    })
}

/// Ancestral sampling from the model.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_model_sample(
    model: *const AqtModel,
    n_samples: usize,
    seed: u64,
    out: *mut *mut AqtDataset,
) -> AqtStatus {
    check_null!(model, out);
    guarded(|| {
        let data = (*model).0.sample(n_samples, seed)?;
        *out = Box::into_raw(Box::new(AqtDataset(data)));
        Ok(AqtStatus::Ok)
    })
}

/// Monte Carlo classical fidelity between the state's exact distribution
/// and the model, drawing `n_samples` from the model.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_classical_fidelity_sampled(
    state: *const AqtState,
    frame: *const AqtFrame,
    model: *const AqtModel,
    n_samples: usize,
    seed: u64,
    out_value: *mut f64,
    out_std_error: *mut f64,
) -> AqtStatus {
    check_null!(state, frame, model, out_value, out_std_error);
    guarded(|| {
        let kernel = povm::ProbKernel::new(&(*state).0, &(*frame).0);
        let est = fidelity::classical_fidelity_sampled(
            |a| kernel.prob(a),
            &(*model).0,
            n_samples,
            seed,
        )?;
        *out_value = est.value;
        *out_std_error = est.std_error;
        Ok(AqtStatus::Ok)
    })
}

/// Exact classical fidelity between the state's distribution and the model
/// (4^n enumeration, capped at 8 qubits).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_classical_fidelity_exact(
    state: *const AqtState,
    frame: *const AqtFrame,
    model: *const AqtModel,
    out_value: *mut f64,
) -> AqtStatus {
    check_null!(state, frame, model, out_value);
    guarded(|| {
        let kernel = povm::ProbKernel::new(&(*state).0, &(*frame).0);
        let model = &(*model).0;
        let est = fidelity::classical_fidelity_exact(
            |a| kernel.prob(a),
            |a| model.prob(a),
            model.n_qubits(),
        )?;
        *out_value = est.value;
        Ok(AqtStatus::Ok)
    })
}

/// Raw (possibly indefinite) frame inversion of the model's distribution.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_reconstruct_from_model(
    model: *const AqtModel,
    frame: *const AqtFrame,
    out: *mut *mut AqtDensityMatrix,
) -> AqtStatus {
    check_null!(model, frame, out);
    guarded(|| {
        let dm = reconstruct_from_model(&(*model).0, &(*frame).0)?;
        *out = Box::into_raw(Box::new(AqtDensityMatrix(dm)));
        Ok(AqtStatus::Ok)
    })
}

/// Physical (PSD by construction) maximum-likelihood fit of the model's
/// distribution.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_physical_fit_from_model(
    model: *const AqtModel,
    frame: *const AqtFrame,
    max_iters: usize,
    tol: f64,
    out: *mut *mut AqtDensityMatrix,
) -> AqtStatus {
    check_null!(model, frame, out);
    guarded(|| {
        let fit = physical_fit_from_model(
            &(*model).0,
            &(*frame).0,
            &MleOptions {
                max_iters,
                tol,
                initial: None,
            },
        )?;
        *out = Box::into_raw(Box::new(AqtDensityMatrix(fit.rho)));
        Ok(AqtStatus::Ok)
    })
}

/// Raw frame inversion of the dataset's empirical frequencies.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_linear_inversion(
    dataset: *const AqtDataset,
    frame: *const AqtFrame,
    out: *mut *mut AqtDensityMatrix,
) -> AqtStatus {
    check_null!(dataset, frame, out);
    guarded(|| {
        let dm = linear_inversion(&(*dataset).0, &(*frame).0)?;
        *out = Box::into_raw(Box::new(AqtDensityMatrix(dm)));
        Ok(AqtStatus::Ok)
    })
}

/// Iterative maximum-likelihood reconstruction from a dataset.
/// `out_converged` receives 1 when the log-likelihood gain dropped below
/// `tol` before `max_iters`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_mle_reconstruct(
    dataset: *const AqtDataset,
    frame: *const AqtFrame,
    max_iters: usize,
    tol: f64,
    out: *mut *mut AqtDensityMatrix,
    out_converged: *mut u8,
) -> AqtStatus {
    check_null!(dataset, frame, out, out_converged);
    guarded(|| {
        let result = mle_reconstruct(
            &(*dataset).0,
            &(*frame).0,
            &MleOptions {
                max_iters,
                tol,
                initial: None,
            },
        )?;
        *out_converged = result.converged as u8;
        *out = Box::into_raw(Box::new(AqtDensityMatrix(result.rho)));
        Ok(AqtStatus::Ok)
    })
}

/// Eigenvalue-clipping PSD projection; `out_distance` receives the
/// Frobenius norm of the change.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_project_to_psd(
    dm: *const AqtDensityMatrix,
    out: *mut *mut AqtDensityMatrix,
    out_distance: *mut f64,
) -> AqtStatus {
    check_null!(dm, out, out_distance);
    guarded(|| {
        let (projected, distance) = fidelity::project_to_psd(&(*dm).0.matrix)?;
        *out_distance = distance;
        *out = Box::into_raw(Box::new(AqtDensityMatrix(projected)));
        Ok(AqtStatus::Ok)
    })
}

/// Quantum (Uhlmann) fidelity between two PSD density matrices.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_quantum_fidelity(
    rho0: *const AqtDensityMatrix,
    rho1: *const AqtDensityMatrix,
    out: *mut f64,
) -> AqtStatus {
    check_null!(rho0, rho1, out);
    guarded(|| {
        *out = fidelity::quantum_fidelity(&(*rho0).0, &(*rho1).0)?;
        Ok(AqtStatus::Ok)
    })
}

/// Builds the dense density matrix of a target state (capped at 12 qubits).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_state_density_matrix(
    state: *const AqtState,
    out: *mut *mut AqtDensityMatrix,
) -> AqtStatus {
    check_null!(state, out);
    guarded(|| {
        let ensemble = &(*state).0;
        let dm = DensityMatrix::new(ensemble.n_qubits(), ensemble.to_dense()?, true)?;
        *out = Box::into_raw(Box::new(AqtDensityMatrix(dm)));
        Ok(AqtStatus::Ok)
    })
}

/// Qubit count of the density matrix.
///
/// # Safety
/// `dm` must be live.
#[no_mangle]
pub unsafe extern "C" fn aqt_dm_n_qubits(dm: *const AqtDensityMatrix) -> usize {
    if dm.is_null() {
        return 0;
    }
    (*dm).0.n_qubits
}

/// 1 when the matrix is PSD-safe (projected or PSD by construction).
///
/// # Safety
/// `dm` must be live.
#[no_mangle]
pub unsafe extern "C" fn aqt_dm_is_projected(dm: *const AqtDensityMatrix) -> u8 {
    if dm.is_null() {
        return 0;
    }
    (*dm).0.projected as u8
}

/// Reads one matrix entry.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_dm_get(
    dm: *const AqtDensityMatrix,
    row: usize,
    col: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> AqtStatus {
    check_null!(dm, out_re, out_im);
    guarded(|| {
        let m = &(*dm).0;
        let dim = m.dim();
        if row >= dim || col >= dim {
            return Err(AqtError::Validation(format!(
                "index ({row},{col}) out of range for dim {dim}"
            )));
        }
        let z = m.matrix[(row, col)];
        *out_re = z.re;
        *out_im = z.im;
        Ok(AqtStatus::Ok)
    })
}

/// Fraction of absolute mass outside the four GHZ corner elements.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_dm_off_corner_fraction(
    dm: *const AqtDensityMatrix,
    out: *mut f64,
) -> AqtStatus {
    check_null!(dm, out);
    guarded(|| {
        *out = off_corner_fraction(&(*dm).0);
        Ok(AqtStatus::Ok)
    })
}

/// Writes the aqt-dm v1 export format.
///
/// # Safety
/// `dm` must be live; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn aqt_dm_save(
    dm: *const AqtDensityMatrix,
    path: *const c_char,
) -> AqtStatus {
    check_null!(dm, path);
    guarded(|| {
        aqt_core::reconstruct::save_density_matrix(&(*dm).0, &path_from(path)?)?;
        Ok(AqtStatus::Ok)
    })
}

/// Reads the aqt-dm v1 export format.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn aqt_dm_load(
    path: *const c_char,
    out: *mut *mut AqtDensityMatrix,
) -> AqtStatus {
    check_null!(path, out);
    guarded(|| {
        let dm = aqt_core::reconstruct::load_density_matrix(&path_from(path)?)?;
        *out = Box::into_raw(Box::new(AqtDensityMatrix(dm)));
        Ok(AqtStatus::Ok)
    })
}
